//! Correlation and transmission channel models.
//!
//! The decoder sees the source block through two parallel channels: the
//! virtual correlation channel `P(Y|X)` that produces the side information,
//! and the physical binary-input transmission channel that carries the parity
//! bits. This module holds both models, their information measures, and the
//! rate limits derived from them.
//!
//! All entropies are in bits, with `0 log 0 = 0`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

const ROW_SUM_TOL: f64 = 1e-12;
const CAPACITY_TOL: f64 = 1e-9;

/// `-p log2 p` with the usual convention at zero.
fn neg_plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// Binary entropy function in bits.
pub fn h2(p: f64) -> f64 {
    neg_plogp(p) + neg_plogp(1.0 - p)
}

/// Entropy of a finite distribution in bits.
pub fn entropy(dist: &[f64]) -> f64 {
    dist.iter().copied().map(neg_plogp).sum()
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "{name} = {p} is not a probability"
        )));
    }
    Ok(())
}

/// Joint law of a binary source `X` and its side information `Y`.
///
/// `Y` takes values in a finite alphabet indexed `0..side_alphabet_size()`.
/// Row `x` of the conditional table is `P(Y = · | X = x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationModel {
    p_source_zero: f64,
    cond_table: [Vec<f64>; 2],
}

impl CorrelationModel {
    pub fn new(p_source_zero: f64, row_zero: Vec<f64>, row_one: Vec<f64>) -> Result<Self> {
        check_probability("p_s(0)", p_source_zero)?;
        if row_zero.is_empty() || row_zero.len() != row_one.len() {
            return Err(Error::InvalidParameter(format!(
                "conditional table rows must be non-empty and equally long ({} vs {})",
                row_zero.len(),
                row_one.len()
            )));
        }
        for (x, row) in [&row_zero, &row_one].into_iter().enumerate() {
            for &p in row {
                check_probability(&format!("P(y|x={x})"), p)?;
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidParameter(format!(
                    "row x={x} of the conditional table sums to {sum}"
                )));
            }
        }
        Ok(Self {
            p_source_zero,
            cond_table: [row_zero, row_one],
        })
    }

    /// Binary side information with `P(Y=1|X=0) = eps01` and `P(Y=0|X=1) = eps10`.
    pub fn binary(p_source_zero: f64, eps01: f64, eps10: f64) -> Result<Self> {
        check_probability("eps01", eps01)?;
        check_probability("eps10", eps10)?;
        Self::new(
            p_source_zero,
            vec![1.0 - eps01, eps01],
            vec![eps10, 1.0 - eps10],
        )
    }

    pub fn p_source_zero(&self) -> f64 {
        self.p_source_zero
    }

    /// Prior `P(X = x)`.
    pub fn prior(&self, x: u8) -> f64 {
        if x == 0 {
            self.p_source_zero
        } else {
            1.0 - self.p_source_zero
        }
    }

    pub fn side_alphabet_size(&self) -> usize {
        self.cond_table[0].len()
    }

    /// `P(Y = y | X = x)`.
    pub fn cond(&self, y: usize, x: u8) -> f64 {
        self.cond_table[x as usize][y]
    }

    pub fn cond_row(&self, x: u8) -> &[f64] {
        &self.cond_table[x as usize]
    }

    /// `P_XY(x, y)`.
    pub fn joint(&self, x: u8, y: usize) -> f64 {
        self.prior(x) * self.cond(y, x)
    }

    /// Marginal law of `Y`.
    pub fn side_marginal(&self) -> Vec<f64> {
        (0..self.side_alphabet_size())
            .map(|y| self.joint(0, y) + self.joint(1, y))
            .collect()
    }

    /// `(eps01, eps10)` when the side information is binary.
    pub fn binary_params(&self) -> Option<(f64, f64)> {
        (self.side_alphabet_size() == 2).then(|| (self.cond(1, 0), self.cond(0, 1)))
    }

    /// `H(X)` in bits.
    pub fn source_entropy(&self) -> f64 {
        h2(self.p_source_zero)
    }

    /// `H(X|Y)` in bits, by enumeration of the joint pmf.
    pub fn conditional_entropy(&self) -> f64 {
        let py = self.side_marginal();
        let mut h = 0.0;
        for (y, &p_y) in py.iter().enumerate() {
            if p_y <= 0.0 {
                continue;
            }
            for x in 0..2u8 {
                let pxy = self.joint(x, y);
                if pxy > 0.0 {
                    h -= pxy * (pxy / p_y).log2();
                }
            }
        }
        h.max(0.0)
    }

    /// `I(X;Y)` in bits.
    pub fn mutual_information(&self) -> f64 {
        (self.source_entropy() - self.conditional_entropy()).max(0.0)
    }
}

/// Convenience wrapper matching the operation name used in the docs.
pub fn conditional_entropy(model: &CorrelationModel) -> f64 {
    model.conditional_entropy()
}

/// Binary asymmetric channel for the parity bits.
///
/// `eps01z = P(Ẑ=1 | Z=0)` and `eps10z = P(Ẑ=0 | Z=1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionChannel {
    pub eps01z: f64,
    pub eps10z: f64,
}

impl TransmissionChannel {
    pub fn new(eps01z: f64, eps10z: f64) -> Result<Self> {
        check_probability("eps01z", eps01z)?;
        check_probability("eps10z", eps10z)?;
        Ok(Self { eps01z, eps10z })
    }

    pub fn bsc(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    pub fn noiseless() -> Self {
        Self {
            eps01z: 0.0,
            eps10z: 0.0,
        }
    }

    /// `P(Ẑ = zhat | Z = z)`.
    pub fn transition(&self, zhat: u8, z: u8) -> f64 {
        match (z, zhat) {
            (0, 0) => 1.0 - self.eps01z,
            (0, _) => self.eps01z,
            (_, 0) => self.eps10z,
            _ => 1.0 - self.eps10z,
        }
    }

    /// `I(Z;Ẑ)` for input law `P(Z=0) = q`.
    pub fn mutual_information(&self, q: f64) -> f64 {
        let p_out_one = q * self.eps01z + (1.0 - q) * (1.0 - self.eps10z);
        let mi = h2(p_out_one) - q * h2(self.eps01z) - (1.0 - q) * h2(self.eps10z);
        mi.max(0.0)
    }
}

/// Capacity of a binary-input channel by golden-section search over the
/// input prior. The objective is concave in `q`, so the search converges
/// to the global maximum.
pub fn capacity_basc(ch: &TransmissionChannel) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = ch.mutual_information(c);
    let mut fd = ch.mutual_information(d);
    while hi - lo > CAPACITY_TOL * 1e-2 {
        if fc < fd {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = ch.mutual_information(d);
        } else {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = ch.mutual_information(c);
        }
    }
    let q = 0.5 * (lo + hi);
    // Endpoints are included since the optimum can sit on the boundary of
    // degenerate channels.
    [ch.mutual_information(q), ch.mutual_information(0.0), ch.mutual_information(1.0), fc, fd]
        .into_iter()
        .fold(0.0, f64::max)
}

/// `I(Z;Ẑ)` for the uniform input prior.
pub fn uniform_input_mi(ch: &TransmissionChannel) -> f64 {
    ch.mutual_information(0.5)
}

/// Information measures and rate limits for one operating point.
///
/// `r_th = H(X|Y) / C_tr` is the smallest achievable parity rate `m/k`;
/// `r_symm` replaces the capacity by the uniform-input mutual information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateLimits {
    pub h_x: f64,
    pub h_x_given_y: f64,
    pub i_xy: f64,
    pub c_tr: f64,
    pub i_uniform: f64,
    pub r_th: f64,
    pub r_symm: f64,
}

fn rate_ratio(num: f64, den: f64) -> f64 {
    if num <= 0.0 {
        0.0
    } else if den <= 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

pub fn rate_limits(model: &CorrelationModel, ch: &TransmissionChannel) -> RateLimits {
    let h_x = model.source_entropy();
    let h_x_given_y = model.conditional_entropy();
    let c_tr = capacity_basc(ch);
    let i_uniform = uniform_input_mi(ch).min(c_tr);
    RateLimits {
        h_x,
        h_x_given_y,
        i_xy: h_x - h_x_given_y,
        c_tr,
        i_uniform,
        r_th: rate_ratio(h_x_given_y, c_tr),
        r_symm: rate_ratio(h_x_given_y, i_uniform),
    }
}

/// Draws `k` i.i.d. pairs `(X, Y)` from the joint law.
pub fn sample_source_and_side(
    model: &CorrelationModel,
    k: usize,
    rng_seed: u64,
) -> (Vec<u8>, Vec<u32>) {
    let mut rng = rng_from_seed(rng_seed);
    let mut xs = Vec::with_capacity(k);
    let mut ys = Vec::with_capacity(k);
    let last = model.side_alphabet_size() - 1;
    for _ in 0..k {
        let x = u8::from(rng.gen::<f64>() >= model.p_source_zero);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut y = last;
        for (idx, &p) in model.cond_row(x).iter().enumerate() {
            acc += p;
            if u < acc {
                y = idx;
                break;
            }
        }
        // Skip zero-probability trailing symbols reached through rounding.
        while model.cond(y, x) == 0.0 && y > 0 {
            y -= 1;
        }
        xs.push(x);
        ys.push(y as u32);
    }
    (xs, ys)
}

/// Passes parity bits through the transmission channel.
pub fn transmit(ch: &TransmissionChannel, z: &[u8], rng_seed: u64) -> Vec<u8> {
    let mut rng = rng_from_seed(rng_seed);
    z.iter()
        .map(|&bit| {
            let flip = if bit == 0 { ch.eps01z } else { ch.eps10z };
            let u: f64 = rng.gen();
            if u < flip {
                bit ^ 1
            } else {
                bit
            }
        })
        .collect()
}
