//! Threshold search by bisection over a channel or correlation parameter.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::evolve::{evolve, CadeConfig};
use crate::channels::{rate_limits, CorrelationModel, TransmissionChannel};
use crate::ensemble::EnsembleSpec;
use crate::error::{Error, Result};

/// A one-parameter family of (correlation, channel) settings.
pub trait Family: Sync {
    fn at(&self, theta: f64) -> Result<(CorrelationModel, TransmissionChannel)>;
}

impl<F> Family for F
where
    F: Fn(f64) -> Result<(CorrelationModel, TransmissionChannel)> + Sync,
{
    fn at(&self, theta: f64) -> Result<(CorrelationModel, TransmissionChannel)> {
        self(theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    /// Most degraded parameter value found to converge.
    pub theta: f64,
    /// `R_c - R_Th(θ*)`.
    pub gap_bits: f64,
    pub r_th: f64,
    pub r_symm: f64,
    pub rate: f64,
    /// Iterations the converging run at `θ*` needed.
    pub iterations: usize,
    pub evaluations: usize,
}

/// Bisects between a converging end `good` and a failing end `bad` until
/// they are within `resolution`.
pub fn threshold_search(
    spec: &EnsembleSpec,
    family: &dyn Family,
    good: f64,
    bad: f64,
    p_p_zero: f64,
    config: &CadeConfig,
    resolution: f64,
) -> Result<ThresholdResult> {
    let run = |theta: f64| -> Result<(bool, usize)> {
        let (model, ch) = family.at(theta)?;
        let r = evolve(spec, &model, &ch, p_p_zero, config)?;
        Ok((r.converged, r.iterations))
    };
    let (good_ok, mut good_iters) = run(good)?;
    let (bad_ok, _) = run(bad)?;
    if !good_ok || bad_ok {
        return Err(Error::NotBracketed {
            good_converged: good_ok,
            bad_converged: bad_ok,
        });
    }
    let (mut good, mut bad) = (good, bad);
    let mut evaluations = 2;
    while (bad - good).abs() > resolution {
        let mid = 0.5 * (good + bad);
        let (ok, iters) = run(mid)?;
        evaluations += 1;
        if ok {
            good = mid;
            good_iters = iters;
        } else {
            bad = mid;
        }
    }
    let (model, ch) = family.at(good)?;
    let limits = rate_limits(&model, &ch);
    let rate = spec.design_rate()?;
    Ok(ThresholdResult {
        theta: good,
        gap_bits: rate - limits.r_th,
        r_th: limits.r_th,
        r_symm: limits.r_symm,
        rate,
        iterations: good_iters,
        evaluations,
    })
}

/// Finds `θ` in `[lo, hi]` where `R_Th(θ) = rate - gap`, assuming `R_Th` is
/// monotone there. Returns `None` when the target is outside the range.
pub fn theta_at_gap(family: &dyn Family, rate: f64, gap: f64, lo: f64, hi: f64) -> Result<Option<f64>> {
    let excess = |t: f64| -> Result<f64> {
        let (m, c) = family.at(t)?;
        Ok(rate_limits(&m, &c).r_th - (rate - gap))
    };
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (excess(a)?, excess(b)?);
    if fa.signum() == fb.signum() {
        return Ok(None);
    }
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        if excess(mid)?.signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(Some(0.5 * (a + b)))
}

/// One row of a threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub sweep_param: f64,
    pub theta_star: f64,
    pub r_th: f64,
    pub r_symm: f64,
    pub gap_bits: f64,
    pub iterations: usize,
}

impl ThresholdRow {
    pub fn new(sweep_param: f64, r: &ThresholdResult) -> Self {
        Self {
            sweep_param,
            theta_star: r.theta,
            r_th: r.r_th,
            r_symm: r.r_symm,
            gap_bits: r.gap_bits,
            iterations: r.iterations,
        }
    }
}

pub fn write_threshold_csv(path: &Path, rows: &[ThresholdRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(["sweep_param", "theta_star", "r_th", "r_symm", "gap_bits", "iterations"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_threshold_csv(path: &Path) -> Result<Vec<ThresholdRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
