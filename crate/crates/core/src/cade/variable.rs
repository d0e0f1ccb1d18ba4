//! Variable-node update: `P(x) = P⁰(x) ⊗ Σ_d w_d Q(x)^{⊗(d-1)}`.
//!
//! Convolutions run on the full support in a cyclic layout (index 0 is
//! LLR 0) so nothing wraps; results beyond the grid are folded into the
//! outermost bins. Infinite atoms are carried as scalars: a sum is `+∞` when
//! some term is `+∞` and none is `-∞`, and a sum holding both is put at 0.

use super::density::{DensityPair, QuantizedDensity};
use super::spectral::{Spectral, C64};
use crate::ensemble::DegreePolynomial;

/// A density in transform form.
#[derive(Debug, Clone)]
pub(crate) struct Ext {
    pub(crate) fin: Vec<C64>,
    /// Finite mass.
    pub(crate) f: f64,
    /// Mass at `+∞` and `-∞`.
    pub(crate) a: f64,
    pub(crate) b: f64,
}

/// Scalar bookkeeping of the `n`-fold sum of a density with finite mass `f`
/// and infinite atoms `a`, `b`: returns (finite part without conflicts,
/// `+∞`, `-∞`, conflict mass).
fn fold_scalars(f: f64, a: f64, b: f64, n: i32) -> (f64, f64, f64, f64) {
    let t = f + a + b;
    let fa = (f + a).powi(n);
    let fb = (f + b).powi(n);
    let ff = f.powi(n);
    (ff, fa - ff, fb - ff, t.powi(n) - fa - fb + ff)
}

/// FFT workspace sized for sums of up to `max_terms` densities.
#[derive(Debug, Clone)]
pub struct VariableKernel {
    n: usize,
    spectral: Spectral,
    neg_window: Vec<C64>,
}

impl VariableKernel {
    /// `half_bins` is `N` of the LLR grid; `max_terms` bounds how many
    /// densities are summed (initial density plus check messages).
    pub fn new(half_bins: usize, max_terms: usize) -> Self {
        let spectral = Spectral::new(2 * half_bins * max_terms.max(1) + 1);
        let len = spectral.len();
        let mut w = vec![0.0; len];
        w[0] = 0.5;
        for v in &mut w[len / 2 + 1..] {
            *v = 1.0;
        }
        let neg_window = spectral.forward(&w);
        Self {
            n: half_bins,
            spectral,
            neg_window,
        }
    }

    pub(crate) fn to_ext(&self, d: &QuantizedDensity) -> Ext {
        let len = self.spectral.len();
        let n = self.n;
        let mut cyc = vec![0.0; len];
        for (i, &p) in d.finite.iter().enumerate() {
            let t = (i + len - n) % len;
            cyc[t] += p;
        }
        Ext {
            fin: self.spectral.forward(&cyc),
            f: d.finite.iter().sum(),
            a: d.pos_inf,
            b: d.neg_inf,
        }
    }

    /// `Σ_p weights[j][p] · Q^{⊗p}` for each weight vector `j`.
    pub(crate) fn mixtures(&self, q: &Ext, weights: &[Vec<f64>]) -> Vec<Ext> {
        let max_p = weights.iter().map(Vec::len).max().unwrap_or(0);
        let mut out: Vec<Ext> = weights
            .iter()
            .map(|w| {
                let (mut f, mut a, mut b, mut c) = (0.0, 0.0, 0.0, 0.0);
                for (p, &wp) in w.iter().enumerate() {
                    let (sf, sa, sb, sc) = fold_scalars(q.f, q.a, q.b, p as i32);
                    f += wp * (sf + sc);
                    a += wp * sa;
                    b += wp * sb;
                    c += wp * sc;
                }
                Ext {
                    // Conflict mass sits at LLR 0, a constant in the transform.
                    fin: vec![C64::new(c, 0.0); q.fin.len()],
                    f,
                    a,
                    b,
                }
            })
            .collect();
        let mut pows = vec![C64::new(0.0, 0.0); max_p];
        for (k, &z) in q.fin.iter().enumerate() {
            let mut pow = C64::new(1.0, 0.0);
            for p in pows.iter_mut() {
                *p = pow;
                pow *= z;
            }
            for (e, w) in out.iter_mut().zip(weights) {
                let acc: C64 = w.iter().zip(&pows).map(|(&wp, &p)| p * wp).sum();
                e.fin[k] += acc;
            }
        }
        out
    }

    /// Law of the sum of independent draws from `x` and `y`.
    pub(crate) fn combine(x: &Ext, y: &Ext) -> Ext {
        let tx = x.f + x.a + x.b;
        let ty = y.f + y.a + y.b;
        let ff = x.f * y.f;
        let a = (x.f + x.a) * (y.f + y.a) - ff;
        let b = (x.f + x.b) * (y.f + y.b) - ff;
        let c = tx * ty - ff - a - b;
        Ext {
            fin: x
                .fin
                .iter()
                .zip(&y.fin)
                .map(|(p, q)| p * q + c)
                .collect(),
            f: ff + c,
            a,
            b,
        }
    }

    /// Back to the LLR grid, folding overflow into the outermost bins.
    pub(crate) fn to_density(&self, e: &Ext, delta: f64) -> QuantizedDensity {
        let mut spec = e.fin.clone();
        let cyc = self.spectral.inverse(&mut spec);
        let len = cyc.len();
        let n = self.n as i64;
        let mut finite = vec![0.0; 2 * self.n + 1];
        for (t, &v) in cyc.iter().enumerate() {
            let s = if t <= len / 2 { t as i64 } else { t as i64 - len as i64 };
            finite[(s.clamp(-n, n) + n) as usize] += v;
        }
        let mut d = QuantizedDensity::from_parts(finite, e.a, e.b, delta);
        d.clamp_normalize();
        d
    }

    /// Wrong-sign mass for bit `x`, ties counted half.
    pub(crate) fn error_mass(&self, e: &Ext, x: u8) -> f64 {
        let neg_half = self.spectral.inner(&e.fin, &self.neg_window);
        let total = e.f + e.a + e.b;
        let p = if x == 0 { neg_half + e.b } else { e.f - neg_half + e.a };
        (p / total).clamp(0.0, 1.0)
    }
}

/// Edge-perspective mixture weights of `lambda`, indexed by the number of
/// incoming check messages `d - 1`.
pub(crate) fn message_weights(lambda: &DegreePolynomial) -> Vec<f64> {
    let total = lambda.total();
    let mut w = vec![0.0; lambda.max_degree() as usize];
    for (d, c) in lambda.iter() {
        w[d as usize - 1] += c / total;
    }
    w
}

/// Node-perspective weights indexed by the node degree `d`.
pub(crate) fn node_weights(lambda: &DegreePolynomial) -> Vec<f64> {
    let mut w = vec![0.0; lambda.max_degree() as usize + 1];
    for (d, frac) in lambda.node_fractions() {
        w[d as usize] += frac;
    }
    w
}

/// One variable-node update for both bit values.
pub fn variable_update(
    initial: &DensityPair,
    q: &DensityPair,
    lambda: &DegreePolynomial,
) -> DensityPair {
    let n = initial[0].half_bins();
    let kernel = VariableKernel::new(n, lambda.max_degree() as usize);
    let w = vec![message_weights(lambda)];
    [0usize, 1].map(|x| {
        let qe = kernel.to_ext(&q[x]);
        let mix = kernel.mixtures(&qe, &w).remove(0);
        let p0 = kernel.to_ext(&initial[x]);
        kernel.to_density(&VariableKernel::combine(&p0, &mix), initial[x].delta())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cade::Quantizer;
    use approx::assert_abs_diff_eq;

    fn q() -> Quantizer {
        Quantizer {
            delta: 0.5,
            llr_max: 10.0,
            gamma_points: 4096,
        }
    }

    #[test]
    fn zero_message_is_identity() {
        let q = q();
        let p0 = QuantizedDensity::from_atoms(&q, &[(1.0, 0.7), (-2.0, 0.3)]);
        let z = QuantizedDensity::point(&q, 0.0);
        let lam = DegreePolynomial::from_pairs([(3, 0.4), (5, 0.6)]).unwrap();
        let out = variable_update(&[p0.clone(), p0.clone()], &[z.clone(), z], &lam);
        assert!(out[0].tv_distance(&p0) < 1e-12);
    }

    #[test]
    fn three_fold_sum_matches_enumeration() {
        // Degree 4: P0 ⊗ Q ⊗ Q ⊗ Q with two-point densities, 16 outcomes.
        let q = q();
        let p0 = QuantizedDensity::from_atoms(&q, &[(0.5, 0.6), (-1.0, 0.4)]);
        let m = QuantizedDensity::from_atoms(&q, &[(2.0, 0.8), (-1.5, 0.2)]);
        let lam = DegreePolynomial::from_pairs([(4, 1.0)]).unwrap();
        let out = variable_update(&[p0.clone(), p0.clone()], &[m.clone(), m.clone()], &lam);
        let mut expect = QuantizedDensity::zeros(&q);
        for &(l0, w0) in &[(0.5, 0.6), (-1.0, 0.4)] {
            for bits in 0..8u32 {
                let mut l = l0;
                let mut w = w0;
                for t in 0..3 {
                    let (lv, wv) = if bits >> t & 1 == 0 { (2.0, 0.8) } else { (-1.5, 0.2) };
                    l += lv;
                    w *= wv;
                }
                expect.add_atom(l, w);
            }
        }
        assert!(out[0].tv_distance(&expect) < 1e-12);
    }

    #[test]
    fn overflow_folds_to_edges_and_infinities_propagate() {
        let q = q();
        let p0 = QuantizedDensity::from_atoms(&q, &[(8.0, 0.5), (f64::NEG_INFINITY, 0.5)]);
        let m = QuantizedDensity::from_atoms(&q, &[(6.0, 0.5), (f64::INFINITY, 0.5)]);
        let lam = DegreePolynomial::from_pairs([(2, 1.0)]).unwrap();
        let out = variable_update(&[p0.clone(), p0], &[m.clone(), m], &lam);
        let d = &out[0];
        // 8+6 overflows to +10; 8+∞ = +∞; -∞+6 = -∞; -∞+∞ conflicts to 0.
        assert_abs_diff_eq!(d.finite[d.finite.len() - 1], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(d.pos_inf, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(d.neg_inf, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(d.finite[d.half_bins()], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn spectral_error_mass_matches_direct() {
        let q = q();
        let kernel = VariableKernel::new(q.half_bins(), 3);
        let d = QuantizedDensity::from_atoms(
            &q,
            &[(-3.0, 0.1), (0.0, 0.2), (2.5, 0.5), (f64::NEG_INFINITY, 0.05), (f64::INFINITY, 0.15)],
        );
        let e = kernel.to_ext(&d);
        assert_abs_diff_eq!(kernel.error_mass(&e, 0), d.error_mass(0), epsilon = 1e-12);
        assert_abs_diff_eq!(kernel.error_mass(&e, 1), d.error_mass(1), epsilon = 1e-12);
    }
}
