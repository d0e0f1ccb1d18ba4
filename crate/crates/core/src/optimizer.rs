//! Differential-evolution search over degree-distribution coefficients.
//!
//! A candidate is a vector of raw nonnegative weights, one per allowed
//! source degree and one per allowed parity degree (or one per degree of
//! the union when the split is collapsed). Projection turns it into an
//! ensemble meeting the rate and edge-balance constraints exactly; fitness
//! is the negated threshold gap `-(R_c - R_Th(θ*))` from CADE.

use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cade::{evolve, theta_at_gap, threshold_search, CadeConfig, Family};
use crate::channels::{CorrelationModel, TransmissionChannel};
use crate::ensemble::{DegreePolynomial, EnsembleSpec, ValidationMode};
use crate::error::{Error, Result};
use crate::rng::{derive_seed_path, rng_from_seed};

/// Channel pair a code is designed for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub p_source_zero: f64,
    pub eps01: f64,
    pub eps10: f64,
    pub eps01z: f64,
    pub eps10z: f64,
    #[serde(default = "half")]
    pub p_p_zero: f64,
}

fn half() -> f64 {
    0.5
}

impl DesignPoint {
    pub fn model(&self) -> Result<CorrelationModel> {
        CorrelationModel::binary(self.p_source_zero, self.eps01, self.eps10)
    }

    pub fn channel(&self) -> Result<TransmissionChannel> {
        TransmissionChannel::new(self.eps01z, self.eps10z)
    }

    /// The same point with `axis` set to `theta`.
    pub fn with(&self, axis: Axis, theta: f64) -> Self {
        let mut p = *self;
        match axis {
            Axis::Eps01 => p.eps01 = theta,
            Axis::Eps10 => p.eps10 = theta,
            Axis::Eps01z => p.eps01z = theta,
            Axis::Eps10z => p.eps10z = theta,
        }
        p
    }

    /// Searchable range of `axis`: from nearly noiseless up to just short of
    /// the value at which the output carries no information about the input
    /// (`ε01 + ε10 = 1`, resp. `ε01z + ε10z = 1`). Noise grows monotonically
    /// over it.
    pub fn axis_range(&self, axis: Axis) -> (f64, f64) {
        let partner = match axis {
            Axis::Eps01 => self.eps10,
            Axis::Eps10 => self.eps01,
            Axis::Eps01z => self.eps10z,
            Axis::Eps10z => self.eps01z,
        };
        (1e-4, 1.0 - partner - 1e-4)
    }

    /// One-parameter family along `axis`.
    pub fn family(self, axis: Axis) -> impl Family {
        move |theta: f64| -> Result<(CorrelationModel, TransmissionChannel)> {
            let p = self.with(axis, theta);
            Ok((p.model()?, p.channel()?))
        }
    }
}

/// Parameter swept or bisected; larger values are noisier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Eps01,
    Eps10,
    Eps01z,
    Eps10z,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Eps01 => "eps01",
            Axis::Eps10 => "eps10",
            Axis::Eps01z => "eps01z",
            Axis::Eps10z => "eps10z",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eps01" => Ok(Axis::Eps01),
            "eps10" => Ok(Axis::Eps10),
            "eps01z" => Ok(Axis::Eps01z),
            "eps10z" => Ok(Axis::Eps10z),
            _ => Err(Error::InvalidParameter(format!("unknown axis {s:?}"))),
        }
    }
}

/// Threshold search along one axis, bracketed through the rate limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSettings {
    pub axis: Axis,
    /// Range of the axis that may be searched.
    pub range: (f64, f64),
    /// The converging end sits where `R_c - R_Th` equals this gap.
    pub bracket_gap: f64,
    pub resolution: f64,
}

impl Default for ThresholdSettings {
    fn default() -> Self {
        Self {
            axis: Axis::Eps10,
            range: (1e-4, 0.5),
            bracket_gap: 0.3,
            resolution: 1e-4,
        }
    }
}

/// Bracket `(good, bad)` for a code of rate `rate` around `point`: the good
/// end at gap `bracket_gap` (or the clean end of the range), the bad end
/// where the gap closes (or the noisy end of the range).
pub fn rate_bracket(point: &DesignPoint, rate: f64, settings: &ThresholdSettings) -> Result<(f64, f64)> {
    let fam = point.family(settings.axis);
    let (lo, hi) = settings.range;
    let good = theta_at_gap(&fam, rate, settings.bracket_gap, lo, hi)?.unwrap_or(lo);
    let bad = theta_at_gap(&fam, rate, 0.0, lo, hi)?.unwrap_or(hi);
    Ok((good, bad))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessMode {
    /// Negated gap at the bisected threshold.
    Threshold,
    /// One CADE run at the design point: `1 - iterations/max_iters` when it
    /// converges, minus the final error probability otherwise.
    Surrogate,
}

/// A degree-distribution design task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignProblem {
    pub source_degrees: Vec<u32>,
    pub parity_degrees: Vec<u32>,
    /// Two consecutive integers.
    pub check_degrees: [u32; 2],
    pub target_rate: f64,
    pub design_point: DesignPoint,
    #[serde(default)]
    pub threshold: ThresholdSettings,
    /// Force `λs ∝ λp` over the union of the degree sets.
    #[serde(default)]
    pub collapse_split: bool,
    #[serde(default = "default_max_degree")]
    pub max_degree: u32,
}

fn default_max_degree() -> u32 {
    50
}

impl DesignProblem {
    /// The task `C1` was designed for.
    pub fn c1() -> Self {
        Self {
            source_degrees: vec![3, 5],
            parity_degrees: vec![2, 20],
            check_degrees: [10, 11],
            target_rate: 0.8,
            design_point: DesignPoint {
                p_source_zero: 0.1,
                eps01: 0.2,
                eps10: 0.4,
                eps01z: 0.2,
                eps10z: 0.01,
                p_p_zero: 0.5,
            },
            threshold: ThresholdSettings::default(),
            collapse_split: false,
            max_degree: 20,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let p: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.source_degrees.is_empty() || self.parity_degrees.is_empty() {
            return bad("degree sets must be non-empty".into());
        }
        let all = self.source_degrees.iter().chain(&self.parity_degrees);
        if all.clone().any(|&d| d == 0 || d > self.max_degree) {
            return bad(format!("variable degrees must lie in 1..={}", self.max_degree));
        }
        if self.check_degrees[1] != self.check_degrees[0] + 1 || self.check_degrees[0] < 2 {
            return bad("check degrees must be two consecutive integers ≥ 2".into());
        }
        if !(self.target_rate > 0.0 && self.target_rate.is_finite()) {
            return bad(format!("target rate {}", self.target_rate));
        }
        Ok(())
    }

    fn collapsed_degrees(&self) -> Vec<u32> {
        let mut d: Vec<u32> = self.source_degrees.iter().chain(&self.parity_degrees).copied().collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// Length of the raw coefficient vector.
    pub fn dimension(&self) -> usize {
        if self.collapse_split {
            self.collapsed_degrees().len()
        } else {
            self.source_degrees.len() + self.parity_degrees.len()
        }
    }

    /// Raw coefficients reproducing `spec`'s shapes, when its degrees fit.
    pub fn encode(&self, spec: &EnsembleSpec) -> Vec<f64> {
        if self.collapse_split {
            let merged = spec.lambda_s.plus(&spec.lambda_p);
            self.collapsed_degrees().iter().map(|&d| merged.coeff(d)).collect()
        } else {
            self.source_degrees
                .iter()
                .map(|&d| spec.lambda_s.coeff(d))
                .chain(self.parity_degrees.iter().map(|&d| spec.lambda_p.coeff(d)))
                .collect()
        }
    }
}

/// `Σ w_i / d_i` of a normalized shape.
fn node_sum(degrees: &[u32], shape: &[f64]) -> f64 {
    degrees.iter().zip(shape).map(|(&d, &w)| w / d as f64).sum()
}

fn normalize(raw: &[f64]) -> Option<Vec<f64>> {
    let v: Vec<f64> = raw.iter().map(|x| x.abs()).collect();
    let total: f64 = v.iter().sum();
    (total > 0.0 && total.is_finite()).then(|| v.iter().map(|x| x / total).collect())
}

/// Moves `shape` toward the point mass on the lowest or highest degree until
/// its node sum equals `target`.
fn steer(degrees: &[u32], shape: &[f64], target: f64) -> Option<Vec<f64>> {
    let current = node_sum(degrees, shape);
    let (lo_i, hi_i) = {
        let mut idx: Vec<usize> = (0..degrees.len()).collect();
        idx.sort_by_key(|&i| degrees[i]);
        (idx[0], idx[idx.len() - 1])
    };
    let end = if target > current { lo_i } else { hi_i };
    let end_sum = 1.0 / degrees[end] as f64;
    if (end_sum - current).abs() < 1e-15 {
        return ((target - current).abs() < 1e-12).then(|| shape.to_vec());
    }
    let t = (target - current) / (end_sum - current);
    if !(0.0..=1.0).contains(&t) {
        return None;
    }
    let mut out: Vec<f64> = shape.iter().map(|w| (1.0 - t) * w).collect();
    out[end] += t;
    Some(out)
}

fn polynomial(degrees: &[u32], shape: &[f64], scale: f64) -> Result<DegreePolynomial> {
    DegreePolynomial::from_pairs(
        degrees
            .iter()
            .zip(shape)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&d, &w)| (d, w * scale)),
    )
}

/// Maps raw coefficients to an ensemble with `R_c = target_rate` and equal
/// parity-node and check-node counts.
pub fn project_to_feasible(raw: &[f64], problem: &DesignProblem) -> Result<EnsembleSpec> {
    problem.check()?;
    if raw.len() != problem.dimension() {
        return Err(Error::LengthMismatch {
            expected: problem.dimension(),
            got: raw.len(),
        });
    }
    let infeasible = || Error::Infeasible("no nonnegative solution for these degree sets".into());
    let r = problem.target_rate;
    let [c, c1] = problem.check_degrees;
    let (rho_lo, rho_hi) = (1.0 / c1 as f64, 1.0 / c as f64);
    // Check-node sum for mixing weight w on degree c.
    let rho_of = |t: f64| (t - rho_lo) / (rho_hi - rho_lo);

    let (s_deg, s_shape, p_deg, p_shape, alpha_s);
    if problem.collapse_split {
        let degrees = problem.collapsed_degrees();
        let mut shape = normalize(raw).ok_or_else(infeasible)?;
        // Equal shapes: α_p = R α_s and the parity node sum is α_p·A.
        let a_s = 1.0 / (1.0 + r);
        let a_p = r * a_s;
        let mut t = a_p * node_sum(&degrees, &shape);
        if !(rho_lo..=rho_hi).contains(&t) {
            t = t.clamp(rho_lo, rho_hi);
            shape = steer(&degrees, &shape, t / a_p).ok_or_else(infeasible)?;
        }
        s_deg = degrees.clone();
        p_deg = degrees;
        s_shape = shape.clone();
        p_shape = shape;
        alpha_s = a_s;
    } else {
        let ns = problem.source_degrees.len();
        let ss = normalize(&raw[..ns]).ok_or_else(infeasible)?;
        let mut ps = normalize(&raw[ns..]).ok_or_else(infeasible)?;
        let a_sum_s = node_sum(&problem.source_degrees, &ss);
        // α_p A_p = R α_s A_s with α_s + α_p = 1.
        let parity_nodes = |a_p: f64| r * a_sum_s * a_p / (a_p + r * a_sum_s);
        let mut a_sum_p = node_sum(&problem.parity_degrees, &ps);
        let t = parity_nodes(a_sum_p);
        if !(rho_lo..=rho_hi).contains(&t) {
            let t = t.clamp(rho_lo, rho_hi);
            if r * a_sum_s <= t {
                return Err(infeasible());
            }
            let target = t * r * a_sum_s / (r * a_sum_s - t);
            ps = steer(&problem.parity_degrees, &ps, target).ok_or_else(infeasible)?;
            a_sum_p = node_sum(&problem.parity_degrees, &ps);
        }
        alpha_s = a_sum_p / (a_sum_p + r * a_sum_s);
        s_deg = problem.source_degrees.clone();
        p_deg = problem.parity_degrees.clone();
        s_shape = ss;
        p_shape = ps;
    }
    let alpha_p = 1.0 - alpha_s;
    let t = alpha_p * node_sum(&p_deg, &p_shape);
    let w = rho_of(t).clamp(0.0, 1.0);
    let rho = DegreePolynomial::from_pairs(
        [(c, w), (c1, 1.0 - w)].into_iter().filter(|&(_, v)| v > 0.0),
    )?;
    let spec = EnsembleSpec::new(
        polynomial(&s_deg, &s_shape, alpha_s)?,
        polynomial(&p_deg, &p_shape, alpha_p)?,
        rho,
    )
    .with_rate(r);
    let violations = spec.validate(ValidationMode::Strict);
    if violations.is_empty() {
        Ok(spec)
    } else {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        Err(Error::Infeasible(list.join("; ")))
    }
}

/// Negated threshold gap of `spec` at the problem's design point, or `-1 -
/// gap at the bracket's good end` when even that end fails.
pub fn threshold_fitness(spec: &EnsembleSpec, problem: &DesignProblem, config: &CadeConfig) -> Result<f64> {
    let point = problem.design_point;
    let settings = problem.threshold;
    let rate = spec.design_rate()?;
    let (good, bad) = rate_bracket(&point, rate, &settings)?;
    let fam = point.family(settings.axis);
    match threshold_search(spec, &fam, good, bad, point.p_p_zero, config, settings.resolution) {
        Ok(r) => Ok(-r.gap_bits),
        Err(Error::NotBracketed {
            good_converged: false,
            ..
        }) => Ok(-1.0 - settings.bracket_gap),
        Err(Error::NotBracketed { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// The cheap fitness of [`FitnessMode::Surrogate`].
pub fn surrogate_fitness(spec: &EnsembleSpec, problem: &DesignProblem, config: &CadeConfig) -> Result<f64> {
    let p = problem.design_point;
    let r = evolve(spec, &p.model()?, &p.channel()?, p.p_p_zero, config)?;
    Ok(if r.converged {
        1.0 - r.iterations as f64 / config.max_iters.max(1) as f64
    } else {
        -r.final_error()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeParams {
    pub population: usize,
    pub f: f64,
    pub cr: f64,
    pub generations: usize,
    pub seed: u64,
    /// Generations scored with the surrogate before switching to thresholds.
    #[serde(default)]
    pub surrogate_generations: usize,
}

impl Default for DeParams {
    fn default() -> Self {
        Self {
            population: 40,
            f: 0.5,
            cr: 0.9,
            generations: 50,
            seed: 1,
            surrogate_generations: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub coefficients: Vec<f64>,
    pub spec: EnsembleSpec,
    pub fitness: f64,
}

/// One row of the fitness history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub mode: FitnessMode,
    pub evaluations: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub best: Candidate,
    pub history: Vec<GenerationRecord>,
}

/// Scores a projected spec; larger is better.
pub trait Fitness: Sync {
    fn score(&self, spec: &EnsembleSpec, mode: FitnessMode) -> Result<f64>;
}

/// CADE-based fitness at the problem's design point.
pub struct CadeFitness<'a> {
    pub problem: &'a DesignProblem,
    pub config: CadeConfig,
}

impl Fitness for CadeFitness<'_> {
    fn score(&self, spec: &EnsembleSpec, mode: FitnessMode) -> Result<f64> {
        match mode {
            FitnessMode::Threshold => threshold_fitness(spec, self.problem, &self.config),
            FitnessMode::Surrogate => surrogate_fitness(spec, self.problem, &self.config),
        }
    }
}

fn evaluate(
    raw: Vec<f64>,
    problem: &DesignProblem,
    fitness: &dyn Fitness,
    mode: FitnessMode,
) -> Result<Option<Candidate>> {
    let spec = match project_to_feasible(&raw, problem) {
        Ok(s) => s,
        Err(Error::Infeasible(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let fitness = fitness.score(&spec, mode)?;
    // Store the projected shape so offspring start from feasible points.
    let coefficients = problem.encode(&spec);
    Ok(Some(Candidate {
        coefficients,
        spec,
        fitness,
    }))
}

/// DE/rand/1/bin. `initial` seeds the first members of the population; the
/// rest are drawn uniformly from `[0, 1)^dim`.
pub fn optimize_with(
    problem: &DesignProblem,
    params: &DeParams,
    fitness: &dyn Fitness,
    initial: &[Vec<f64>],
) -> Result<OptimizeResult> {
    problem.check()?;
    let np = params.population;
    if np < 4 {
        return Err(Error::InvalidParameter("population must be at least 4".into()));
    }
    let dim = problem.dimension();
    let mode_at = |g: usize| {
        if g < params.surrogate_generations {
            FitnessMode::Surrogate
        } else {
            FitnessMode::Threshold
        }
    };

    // Initial population; infeasible draws are redrawn from a derived stream.
    let draw = |i: usize| -> Result<Candidate> {
        let mut rng = rng_from_seed(derive_seed_path(params.seed, &[0, i as u64]));
        let mut raw = initial.get(i).cloned();
        for _ in 0..1000 {
            let v = raw.take().unwrap_or_else(|| (0..dim).map(|_| rng.gen::<f64>()).collect());
            if let Some(c) = evaluate(v, problem, fitness, mode_at(0))? {
                return Ok(c);
            }
        }
        Err(Error::Infeasible("no feasible starting point found".into()))
    };
    let mut pop: Vec<Candidate> = (0..np).into_par_iter().map(draw).collect::<Result<_>>()?;
    let mut evaluations = np;
    let mut history = Vec::with_capacity(params.generations + 1);
    let record = |g: usize, pop: &[Candidate], evaluations: usize| GenerationRecord {
        generation: g,
        mode: mode_at(g),
        evaluations,
        best_fitness: pop.iter().map(|c| c.fitness).fold(f64::NEG_INFINITY, f64::max),
        mean_fitness: pop.iter().map(|c| c.fitness).sum::<f64>() / pop.len() as f64,
    };
    history.push(record(0, &pop, evaluations));

    for g in 1..=params.generations {
        let mode = mode_at(g);
        if mode != mode_at(g - 1) {
            // Fitness scales differ; rescore before comparing.
            pop = pop
                .into_par_iter()
                .map(|c| -> Result<Candidate> {
                    let fitness = fitness.score(&c.spec, mode)?;
                    Ok(Candidate { fitness, ..c })
                })
                .collect::<Result<_>>()?;
            evaluations += np;
        }
        let trials: Vec<Option<Candidate>> = (0..np)
            .into_par_iter()
            .map(|i| -> Result<Option<Candidate>> {
                let mut rng = rng_from_seed(derive_seed_path(params.seed, &[g as u64, i as u64]));
                let mut pick = || loop {
                    let j = rng.gen_range(0..np);
                    if j != i {
                        break j;
                    }
                };
                let r1 = pick();
                let (r2, r3) = loop {
                    let (a, b) = (pick(), pick());
                    if a != r1 && b != r1 && a != b {
                        break (a, b);
                    }
                };
                let j_rand = rng.gen_range(0..dim);
                let (x1, x2, x3) = (&pop[r1].coefficients, &pop[r2].coefficients, &pop[r3].coefficients);
                let target = &pop[i].coefficients;
                let trial: Vec<f64> = (0..dim)
                    .map(|j| {
                        if j == j_rand || rng.gen::<f64>() < params.cr {
                            (x1[j] + params.f * (x2[j] - x3[j])).abs()
                        } else {
                            target[j]
                        }
                    })
                    .collect();
                evaluate(trial, problem, fitness, mode)
            })
            .collect::<Result<_>>()?;
        for (slot, trial) in pop.iter_mut().zip(trials) {
            evaluations += 1;
            if let Some(t) = trial {
                if t.fitness >= slot.fitness {
                    *slot = t;
                }
            }
        }
        history.push(record(g, &pop, evaluations));
    }
    let best = pop
        .into_iter()
        .reduce(|a, b| if b.fitness > a.fitness { b } else { a })
        .expect("non-empty population");
    Ok(OptimizeResult { best, history })
}

/// DE with CADE fitness.
pub fn optimize(problem: &DesignProblem, params: &DeParams, config: &CadeConfig) -> Result<OptimizeResult> {
    let fitness = CadeFitness {
        problem,
        config: *config,
    };
    optimize_with(problem, params, &fitness, &[])
}

pub fn write_history_csv(path: &Path, history: &[GenerationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in history {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
