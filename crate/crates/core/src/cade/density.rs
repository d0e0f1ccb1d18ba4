//! Quantized LLR densities.

use serde::{Deserialize, Serialize};

use crate::channels::{CorrelationModel, TransmissionChannel};
use crate::decoder::LLR_MAX;
use crate::error::{Error, Result};

/// Discretization of the LLR axis and of the check-node magnitude axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    /// LLR bin width.
    pub delta: f64,
    /// Largest finite LLR magnitude; the outermost bins absorb everything beyond.
    pub llr_max: f64,
    /// Number of log-spaced points on the check-node magnitude axis
    /// `y = -ln tanh(|m|/2)`.
    pub gamma_points: usize,
}

impl Default for Quantizer {
    fn default() -> Self {
        Self {
            delta: 0.01,
            llr_max: LLR_MAX,
            gamma_points: 4096,
        }
    }
}

impl Quantizer {
    /// Number of positive finite bins `N`; the grid has `2N + 1` bins.
    pub fn half_bins(&self) -> usize {
        (self.llr_max / self.delta).round() as usize
    }

    pub fn bins(&self) -> usize {
        2 * self.half_bins() + 1
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.delta > 0.0
            && self.llr_max > self.delta
            && self.gamma_points >= 2
            && self.delta.is_finite()
            && self.llr_max.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("bad quantizer {self:?}")))
        }
    }
}

/// Probability (or signed) measure on the LLR grid plus atoms at `±∞`.
///
/// Bin `i` holds LLR `(i - N)·δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDensity {
    pub finite: Vec<f64>,
    pub pos_inf: f64,
    pub neg_inf: f64,
    delta: f64,
}

/// Densities conditioned on the bit value, indexed by `x`.
pub type DensityPair = [QuantizedDensity; 2];

impl QuantizedDensity {
    pub fn zeros(q: &Quantizer) -> Self {
        Self {
            finite: vec![0.0; q.bins()],
            pos_inf: 0.0,
            neg_inf: 0.0,
            delta: q.delta,
        }
    }

    /// Assembles a density from raw parts; `finite` must have odd length.
    pub fn from_parts(finite: Vec<f64>, pos_inf: f64, neg_inf: f64, delta: f64) -> Self {
        assert!(finite.len() % 2 == 1, "grid must be symmetric about 0");
        Self {
            finite,
            pos_inf,
            neg_inf,
            delta,
        }
    }

    pub fn point(q: &Quantizer, llr: f64) -> Self {
        let mut d = Self::zeros(q);
        d.add_atom(llr, 1.0);
        d
    }

    pub fn from_atoms(q: &Quantizer, atoms: &[(f64, f64)]) -> Self {
        let mut d = Self::zeros(q);
        for &(llr, mass) in atoms {
            d.add_atom(llr, mass);
        }
        d
    }

    pub fn half_bins(&self) -> usize {
        self.finite.len() / 2
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn llr(&self, bin: usize) -> f64 {
        (bin as f64 - self.half_bins() as f64) * self.delta
    }

    /// Adds `mass` at `llr`, snapping to the nearest bin; finite values past
    /// the grid go to the outermost bins, infinite values to the atoms.
    pub fn add_atom(&mut self, llr: f64, mass: f64) {
        if llr == f64::INFINITY {
            self.pos_inf += mass;
        } else if llr == f64::NEG_INFINITY {
            self.neg_inf += mass;
        } else {
            let n = self.half_bins() as i64;
            let j = ((llr / self.delta).round() as i64).clamp(-n, n);
            self.finite[(j + n) as usize] += mass;
        }
    }

    pub fn total(&self) -> f64 {
        self.finite.iter().sum::<f64>() + self.pos_inf + self.neg_inf
    }

    pub fn min_mass(&self) -> f64 {
        self.finite
            .iter()
            .copied()
            .chain([self.pos_inf, self.neg_inf])
            .fold(f64::INFINITY, f64::min)
    }

    /// Zeroes negative masses and rescales to unit total.
    pub fn clamp_normalize(&mut self) {
        for v in self.finite.iter_mut().chain([&mut self.pos_inf, &mut self.neg_inf]) {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let t = self.total();
        if t > 0.0 {
            let s = 1.0 / t;
            self.finite.iter_mut().for_each(|v| *v *= s);
            self.pos_inf *= s;
            self.neg_inf *= s;
        }
    }

    /// Mass on the wrong side of zero for bit `x`, ties counted half.
    pub fn error_mass(&self, x: u8) -> f64 {
        let n = self.half_bins();
        let neg: f64 = self.finite[..n].iter().sum::<f64>() + self.neg_inf;
        let pos: f64 = self.finite[n + 1..].iter().sum::<f64>() + self.pos_inf;
        let half_zero = 0.5 * self.finite[n];
        if x == 0 {
            neg + half_zero
        } else {
            pos + half_zero
        }
    }

    /// Total-variation distance `½ Σ |a - b|`.
    pub fn tv_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.finite.len(), other.finite.len());
        0.5 * (self
            .finite
            .iter()
            .zip(&other.finite)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            + (self.pos_inf - other.pos_inf).abs()
            + (self.neg_inf - other.neg_inf).abs())
    }

    /// Mirror image about LLR 0.
    pub fn reflected(&self) -> Self {
        let mut finite = self.finite.clone();
        finite.reverse();
        Self {
            finite,
            pos_inf: self.neg_inf,
            neg_inf: self.pos_inf,
            delta: self.delta,
        }
    }

    /// `self += w · other`.
    pub fn add_scaled(&mut self, other: &Self, w: f64) {
        assert_eq!(self.finite.len(), other.finite.len());
        for (a, b) in self.finite.iter_mut().zip(&other.finite) {
            *a += w * b;
        }
        self.pos_inf += w * other.pos_inf;
        self.neg_inf += w * other.neg_inf;
    }

    /// Mean of the finite part, ignoring the infinite atoms.
    pub fn finite_mean(&self) -> f64 {
        let t: f64 = self.finite.iter().sum();
        if t == 0.0 {
            return 0.0;
        }
        self.finite
            .iter()
            .enumerate()
            .map(|(i, &p)| p * self.llr(i))
            .sum::<f64>()
            / t
    }
}

/// LLR of a source node observing `y`, with the prior; `±∞` when one
/// hypothesis is impossible, `None` when both are.
pub fn exact_source_llr(model: &CorrelationModel, y: usize) -> Option<f64> {
    exact_log_ratio(model.joint(0, y), model.joint(1, y))
}

pub fn exact_parity_llr(ch: &TransmissionChannel, zhat: u8) -> Option<f64> {
    exact_log_ratio(ch.transition(zhat, 0), ch.transition(zhat, 1))
}

fn exact_log_ratio(p0: f64, p1: f64) -> Option<f64> {
    match (p0 > 0.0, p1 > 0.0) {
        (true, true) => Some(p0.ln() - p1.ln()),
        (true, false) => Some(f64::INFINITY),
        (false, true) => Some(f64::NEG_INFINITY),
        (false, false) => None,
    }
}

/// Initial message densities `(P_s(x), P_p(x))` of the two variable classes.
///
/// `P_s(x)` is the law of the source-node LLR (prior included) when
/// `Y ~ P(·|x)`; `P_p(x)` is the law of the parity-node LLR when the channel
/// input is `x`.
pub fn initial_densities(
    model: &CorrelationModel,
    ch: &TransmissionChannel,
    q: &Quantizer,
) -> (DensityPair, DensityPair) {
    let source = [0u8, 1].map(|x| {
        let mut d = QuantizedDensity::zeros(q);
        for (y, &p) in model.cond_row(x).iter().enumerate() {
            if p > 0.0 {
                if let Some(l) = exact_source_llr(model, y) {
                    d.add_atom(l, p);
                }
            }
        }
        d.clamp_normalize();
        d
    });
    let parity = [0u8, 1].map(|x| {
        let mut d = QuantizedDensity::zeros(q);
        for zhat in [0u8, 1] {
            let p = ch.transition(zhat, x);
            if p > 0.0 {
                if let Some(l) = exact_parity_llr(ch, zhat) {
                    d.add_atom(l, p);
                }
            }
        }
        d.clamp_normalize();
        d
    });
    (source, parity)
}
