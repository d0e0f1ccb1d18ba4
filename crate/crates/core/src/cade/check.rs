//! Check-node update with codeword averaging.
//!
//! Messages are mapped to `(sign, y)` with `y = -ln tanh(|m|/2)`, where the
//! check rule becomes a sign product and a sum in `y`. A (signed) measure on
//! `y` is split into `G = plus + minus` and `H = plus - minus`; then the
//! `n`-fold combination is `G^{*n}` and `H^{*n}`, and the plus and minus parts
//! are recovered as their half sum and half difference. LLR 0 acts as an
//! erasure: any erased input erases the output.
//!
//! The `y` axis is log-spaced so large and small magnitudes are resolved
//! alike. Two measures on it are combined pairwise: `y_a + y_b` for grid
//! points `k ≥ l` lands at `k + shift(k - l)`. Infinite LLRs sit at `y = 0`
//! and LLR 0 at `y = ∞`, both as exact atoms.

use super::density::{DensityPair, QuantizedDensity, Quantizer};
use crate::ensemble::DegreePolynomial;
use crate::error::{Error, Result};

/// Negative output mass tolerated before a check update is rejected.
const NEGATIVE_MASS_TOLERANCE: f64 = 1e-8;

/// `y = -ln tanh(x/2)`, its own inverse on `(0, ∞)`.
pub fn gamma_magnitude(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    let e = (-x).exp();
    e.ln_1p() - (-e).ln_1p()
}

/// Correspondence between LLR magnitudes and a log-spaced `y` grid.
///
/// Grid point `k` is `y_min·r^k`; `y_min` is the `y` of the largest finite
/// LLR and the last point is the `y` of `δ/2`, beyond which a magnitude
/// rounds to LLR 0.
#[derive(Debug, Clone)]
pub struct GammaGrid {
    n: usize,
    points: usize,
    k_of_j: Vec<usize>,
    j_of_k: Vec<usize>,
    /// `shift[d]`: index offset of `y_k + y_{k-d}` above `k`; zero past the
    /// end of the table.
    shift: Vec<usize>,
    /// Maximal runs `(d_first, d_last, shift)` of equal shift for `d ≥ 1`.
    runs: Vec<(usize, usize, usize)>,
}

impl GammaGrid {
    pub fn new(q: &Quantizer) -> Self {
        let n = q.half_bins();
        let points = q.gamma_points;
        let y_min = gamma_magnitude(n as f64 * q.delta);
        let y_max = gamma_magnitude(q.delta / 2.0);
        let log_r = (y_max / y_min).ln() / (points - 1) as f64;
        let index = |y: f64| ((y / y_min).ln() / log_r).round().clamp(0.0, (points - 1) as f64) as usize;
        let mut k_of_j = vec![usize::MAX; n + 1];
        for (j, k) in k_of_j.iter_mut().enumerate().skip(1) {
            *k = index(gamma_magnitude(j as f64 * q.delta));
        }
        let j_of_k = (0..points)
            .map(|k| {
                let y = y_min * (k as f64 * log_r).exp();
                ((gamma_magnitude(y) / q.delta).round() as usize).min(n)
            })
            .collect();
        let mut shift = Vec::new();
        loop {
            let d = shift.len() as f64;
            let s = ((-d * log_r).exp().ln_1p() / log_r).round() as usize;
            if s == 0 {
                break;
            }
            shift.push(s);
        }
        let mut runs: Vec<(usize, usize, usize)> = Vec::new();
        for (d, &s) in shift.iter().enumerate().skip(1) {
            match runs.last_mut() {
                Some(run) if run.2 == s => run.1 = d,
                _ => runs.push((d, d, s)),
            }
        }
        Self {
            n,
            points,
            k_of_j,
            j_of_k,
            shift,
            runs,
        }
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Grid index of LLR magnitude bin `j ≥ 1`.
    pub fn index_of_bin(&self, j: usize) -> usize {
        self.k_of_j[j]
    }

    /// LLR magnitude bin of grid index `k`.
    pub fn bin_of_index(&self, k: usize) -> usize {
        self.j_of_k[k]
    }

    /// Index of `y_a + y_b`, or `None` past the last point.
    pub fn sum_index(&self, a: usize, b: usize) -> Option<usize> {
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        let k = hi + self.shift.get(hi - lo).copied().unwrap_or(0);
        (k < self.points).then_some(k)
    }
}

/// Parity bookkeeping of a check node. `p_zero` is the probability that the
/// bit on a uniformly chosen edge is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckNodeContext {
    p_zero: f64,
}

impl CheckNodeContext {
    pub fn new(p_zero: f64) -> Result<Self> {
        if !(p_zero > 0.0 && p_zero < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "edge bit probability p(0) = {p_zero} must lie strictly inside (0, 1)"
            )));
        }
        Ok(Self { p_zero })
    }

    /// `p(0) = α_s p_s(0) + α_p p_p(0)`.
    pub fn from_classes(alpha_s: f64, p_s_zero: f64, p_p_zero: f64) -> Result<Self> {
        Self::new(alpha_s * p_s_zero + (1.0 - alpha_s) * p_p_zero)
    }

    pub fn p_zero(&self) -> f64 {
        self.p_zero
    }

    /// Probability that the other `i - 1` bits of a degree-`i` check sum to
    /// `x`: `N(x, i) = ½ + (-1)^x ½ (p(0) - p(1))^{i-1}`.
    pub fn normalizer(&self, x: u8, i: u32) -> f64 {
        let bias = (2.0 * self.p_zero - 1.0).powi(i as i32 - 1);
        if x == 0 {
            0.5 + 0.5 * bias
        } else {
            0.5 - 0.5 * bias
        }
    }
}

/// `⟨P⟩ = Σ_c α_c [p_c(0) P_c(0) + p_c(1) P_c(1)]` and the signed
/// `⟨P⟩₋ = Σ_c α_c [p_c(0) P_c(0) - p_c(1) P_c(1)]`.
pub fn check_inputs(
    ps: &DensityPair,
    pp: &DensityPair,
    alpha_s: f64,
    p_s_zero: f64,
    p_p_zero: f64,
) -> (QuantizedDensity, QuantizedDensity) {
    let alpha_p = 1.0 - alpha_s;
    let mut avg = ps[0].clone();
    avg.add_scaled(&ps[0], -1.0);
    let mut signed = avg.clone();
    for (pair, alpha, p0) in [(ps, alpha_s, p_s_zero), (pp, alpha_p, p_p_zero)] {
        avg.add_scaled(&pair[0], alpha * p0);
        avg.add_scaled(&pair[1], alpha * (1.0 - p0));
        signed.add_scaled(&pair[0], alpha * p0);
        signed.add_scaled(&pair[1], -alpha * (1.0 - p0));
    }
    (avg, signed)
}

/// A signed measure on `y`: an atom at `y = 0` (infinite LLR), the grid,
/// and an atom at `y = ∞` (LLR 0).
#[derive(Debug, Clone)]
struct GammaMeasure {
    zero: f64,
    grid: Vec<f64>,
    erased: f64,
}

impl GammaMeasure {
    fn total(&self) -> f64 {
        self.zero + self.grid.iter().sum::<f64>() + self.erased
    }

    fn add_scaled(&mut self, other: &Self, w: f64) {
        self.zero += w * other.zero;
        self.erased += w * other.erased;
        for (a, b) in self.grid.iter_mut().zip(&other.grid) {
            *a += w * b;
        }
    }
}

/// Check-node update on a log-spaced `y` grid.
#[derive(Debug, Clone)]
pub struct CheckKernel {
    grid: GammaGrid,
    delta: f64,
}

impl CheckKernel {
    pub fn new(q: &Quantizer) -> Self {
        Self {
            grid: GammaGrid::new(q),
            delta: q.delta,
        }
    }

    pub fn grid(&self) -> &GammaGrid {
        &self.grid
    }

    /// `G` and `H` parts of a (signed) LLR density.
    fn gamma_form(&self, d: &QuantizedDensity) -> [GammaMeasure; 2] {
        let n = self.grid.n;
        let len = self.grid.points;
        let (mut plus, mut minus) = (vec![0.0; len], vec![0.0; len]);
        for j in 1..=n {
            let k = self.grid.k_of_j[j];
            plus[k] += d.finite[n + j];
            minus[k] += d.finite[n - j];
        }
        let g = GammaMeasure {
            zero: d.pos_inf + d.neg_inf,
            grid: plus.iter().zip(&minus).map(|(a, b)| a + b).collect(),
            erased: d.finite[n],
        };
        let h = GammaMeasure {
            zero: d.pos_inf - d.neg_inf,
            grid: plus.iter().zip(&minus).map(|(a, b)| a - b).collect(),
            erased: 0.0,
        };
        [g, h]
    }

    /// Law of `y_a + y_b`.
    fn combine(&self, a: &GammaMeasure, b: &GammaMeasure) -> GammaMeasure {
        let m = self.grid.points;
        let (ga, gb) = (&a.grid, &b.grid);
        let mut out = vec![0.0; m + 1];
        for k in 0..m {
            out[k] = a.zero * gb[k] + b.zero * ga[k];
        }
        // Prefix sums: pa[i] = Σ_{j<i} ga[j].
        let prefix = |g: &[f64]| {
            let mut p = Vec::with_capacity(m + 1);
            let mut acc = 0.0;
            p.push(0.0);
            for v in g {
                acc += v;
                p.push(acc);
            }
            p
        };
        let (pa, pb) = (prefix(ga), prefix(gb));
        // Everything at or past index m overflows into `out[m]`.
        let s0 = self.grid.shift[0];
        for k in 0..m {
            out[(k + s0).min(m)] += ga[k] * gb[k];
        }
        // Pairs (k, k - d) with d in a run of equal shift s land at k + s;
        // those past the grid collect in out[m].
        for &(d1, d2, s) in &self.grid.runs {
            let pair = |k: usize, lo: usize| {
                let hi = k - d1 + 1;
                ga[k] * (pb[hi] - pb[lo]) + gb[k] * (pa[hi] - pa[lo])
            };
            let fit = m.saturating_sub(s);
            let near_end = d2.min(m);
            let mut spill = 0.0;
            for k in d1..near_end {
                let w = pair(k, 0);
                if k < fit {
                    out[k + s] += w;
                } else {
                    spill += w;
                }
            }
            let start = d2.max(d1).min(m);
            let split = fit.max(start);
            if start < split {
                let len = split - start;
                let (h0, l0) = (start - d1 + 1, start - d2);
                let dst = &mut out[start + s..start + s + len];
                let terms = ga[start..split]
                    .iter()
                    .zip(&gb[start..split])
                    .zip(pb[h0..h0 + len].iter().zip(&pb[l0..l0 + len]))
                    .zip(pa[h0..h0 + len].iter().zip(&pa[l0..l0 + len]));
                for (o, (((a, b), (bh, bl)), (ah, al))) in dst.iter_mut().zip(terms) {
                    *o += a * (bh - bl) + b * (ah - al);
                }
            }
            for k in split..m {
                spill += pair(k, k - d2);
            }
            out[m] += spill;
        }
        // Pairs further apart keep the larger y.
        let far = self.grid.shift.len();
        for k in far..m {
            let hi = k - far + 1;
            out[k] += ga[k] * pb[hi] + gb[k] * pa[hi];
        }
        let overflow = out.pop().unwrap_or(0.0);
        let (ta, tb) = (a.total(), b.total());
        GammaMeasure {
            zero: a.zero * b.zero,
            grid: out,
            erased: a.erased * tb + b.erased * ta - a.erased * b.erased + overflow,
        }
    }

    /// Check-node output densities `Q(0), Q(1)` from `⟨P⟩` and `⟨P⟩₋`.
    pub fn update(
        &self,
        avg: &QuantizedDensity,
        signed: &QuantizedDensity,
        ctx: &CheckNodeContext,
        rho: &DegreePolynomial,
    ) -> Result<DensityPair> {
        if rho.min_degree() < 2 {
            return Err(Error::InvalidParameter("check degrees must be at least 2".into()));
        }
        let rho = rho.normalized();
        let max_n = rho.max_degree() as usize - 1;
        // coeff[x][n] = ρ_{n+1} / (2 N(x, n+1)).
        let mut coeff = [vec![0.0; max_n + 1], vec![0.0; max_n + 1]];
        for (i, r) in rho.iter() {
            for x in [0u8, 1] {
                let norm = ctx.normalizer(x, i);
                if norm < 1e-300 {
                    return Err(Error::InvalidParameter(format!(
                        "bit value {x} is impossible on degree-{i} checks"
                    )));
                }
                coeff[x as usize][i as usize - 1] = r / (2.0 * norm);
            }
        }

        let [ga, ha] = self.gamma_form(avg);
        let [gb, hb] = self.gamma_form(signed);
        let empty = GammaMeasure {
            zero: 0.0,
            grid: vec![0.0; self.grid.points],
            erased: 0.0,
        };
        // sums[x] = [G part, H part].
        let mut sums = [[empty.clone(), empty.clone()], [empty.clone(), empty]];
        for (part, base) in [(0, &ga), (1, &ha), (0, &gb), (1, &hb)].iter().enumerate() {
            let (component, base) = *base;
            let signed_part = part >= 2;
            let mut power = base.clone();
            for n in 1..=max_n {
                if n > 1 {
                    power = self.combine(&power, base);
                }
                for (x, sum) in sums.iter_mut().enumerate() {
                    let mut c = coeff[x][n];
                    if signed_part && x == 1 {
                        c = -c;
                    }
                    if c != 0.0 {
                        sum[component].add_scaled(&power, c);
                    }
                }
            }
        }

        let n_grid = self.grid.n;
        let mut out = Vec::with_capacity(2);
        for [g, h] in &sums {
            let pinf = 0.5 * (g.zero + h.zero);
            let minf = 0.5 * (g.zero - h.zero);
            let mut most_negative = g.erased.min(pinf).min(minf);
            let mut finite = vec![0.0; 2 * n_grid + 1];
            for k in 0..self.grid.points {
                let plus = 0.5 * (g.grid[k] + h.grid[k]);
                let minus = 0.5 * (g.grid[k] - h.grid[k]);
                most_negative = most_negative.min(plus).min(minus);
                let j = self.grid.j_of_k[k];
                finite[n_grid + j] += plus;
                finite[n_grid - j] += minus;
            }
            finite[n_grid] += g.erased;
            if most_negative < -NEGATIVE_MASS_TOLERANCE {
                return Err(Error::Quantization {
                    mass: most_negative,
                });
            }
            let mut d = QuantizedDensity::from_parts(finite, pinf, minf, self.delta);
            d.clamp_normalize();
            out.push(d);
        }
        let q1 = out.pop().expect("two outputs");
        let q0 = out.pop().expect("two outputs");
        Ok([q0, q1])
    }
}

/// One check-node update with a freshly built grid.
pub fn check_update(
    avg: &QuantizedDensity,
    signed: &QuantizedDensity,
    ctx: &CheckNodeContext,
    rho: &DegreePolynomial,
    q: &Quantizer,
) -> Result<DensityPair> {
    CheckKernel::new(q).update(avg, signed, ctx, rho)
}
