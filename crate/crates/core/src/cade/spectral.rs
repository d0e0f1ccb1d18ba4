//! Real FFT plans for cyclic convolution.

use std::fmt;
use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

pub(crate) type C64 = Complex<f64>;

#[derive(Clone)]
pub(crate) struct Spectral {
    len: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("len", &self.len).finish()
    }
}

impl Spectral {
    /// Plans transforms of the smallest power of two at least `min_len`.
    pub(crate) fn new(min_len: usize) -> Self {
        let len = min_len.max(2).next_power_of_two();
        let mut planner = RealFftPlanner::<f64>::new();
        Self {
            len,
            r2c: planner.plan_fft_forward(len),
            c2r: planner.plan_fft_inverse(len),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    /// Forward transform of `data`, zero-padded to the plan length.
    pub(crate) fn forward(&self, data: &[f64]) -> Vec<C64> {
        assert!(data.len() <= self.len);
        let mut input = vec![0.0; self.len];
        input[..data.len()].copy_from_slice(data);
        let mut out = self.r2c.make_output_vec();
        self.r2c
            .process(&mut input, &mut out)
            .expect("buffer sizes match the plan");
        out
    }

    /// Normalized inverse transform. The spectrum is consumed as scratch.
    pub(crate) fn inverse(&self, spectrum: &mut [C64]) -> Vec<f64> {
        let last = spectrum.len() - 1;
        spectrum[0].im = 0.0;
        spectrum[last].im = 0.0;
        let mut out = vec![0.0; self.len];
        self.c2r
            .process(spectrum, &mut out)
            .expect("buffer sizes match the plan");
        let s = 1.0 / self.len as f64;
        out.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `Σ_n a[n] b[n]` for real sequences given by their spectra.
    pub(crate) fn inner(&self, a: &[C64], b: &[C64]) -> f64 {
        let last = a.len() - 1;
        let mut acc = a[0].re * b[0].re + a[last].re * b[last].re;
        for k in 1..last {
            acc += 2.0 * (a[k] * b[k].conj()).re;
        }
        acc / self.len as f64
    }
}
