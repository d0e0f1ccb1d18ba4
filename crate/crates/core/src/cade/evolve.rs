//! The density-evolution loop.

use serde::{Deserialize, Serialize};

use super::check::{check_inputs, CheckKernel, CheckNodeContext};
use super::density::{initial_densities, DensityPair, QuantizedDensity, Quantizer};
use super::variable::{message_weights, node_weights, Ext, VariableKernel};
use crate::channels::{CorrelationModel, TransmissionChannel};
use crate::ensemble::{DegreePolynomial, EnsembleSpec, ValidationMode};
use crate::error::{Error, Result};

/// Stopping rules and discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CadeConfig {
    pub quantizer: Quantizer,
    pub max_iters: usize,
    /// Converged once the error probability drops below this.
    pub target_pe: f64,
    /// Declared stuck when the error probability changed by less than
    /// `stall_tolerance` (relative) over `stall_window` iterations.
    pub stall_window: usize,
    pub stall_tolerance: f64,
}

impl Default for CadeConfig {
    fn default() -> Self {
        Self {
            quantizer: Quantizer::default(),
            max_iters: 2000,
            target_pe: 1e-8,
            stall_window: 10,
            stall_tolerance: 1e-8,
        }
    }
}

/// Densities after `iteration` rounds.
#[derive(Debug, Clone)]
pub struct CadeState {
    pub ps_pair: DensityPair,
    pub pp_pair: DensityPair,
    pub q_pair: DensityPair,
    pub iteration: usize,
    /// Codeword-averaged bit error probability over all variable nodes.
    pub error_prob: f64,
    /// Error probability of source and parity nodes separately.
    pub class_error: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveResult {
    pub converged: bool,
    pub iterations: usize,
    /// Error probability after each iteration, starting with iteration 0.
    pub error_trace: Vec<f64>,
}

impl EvolveResult {
    pub fn final_error(&self) -> f64 {
        self.error_trace.last().copied().unwrap_or(1.0)
    }
}

struct Class {
    msg_weights: Vec<f64>,
    node_weights: Vec<f64>,
    initial: [Ext; 2],
    p_zero: f64,
}

/// Codeword-averaged density evolution of one ensemble at one channel pair.
pub struct Cade {
    config: CadeConfig,
    rho: DegreePolynomial,
    alpha_s: f64,
    rate: f64,
    ctx: CheckNodeContext,
    var: VariableKernel,
    check: CheckKernel,
    classes: [Class; 2],
    state: CadeState,
    trace: Vec<f64>,
}

impl Cade {
    pub fn new(
        spec: &EnsembleSpec,
        model: &CorrelationModel,
        ch: &TransmissionChannel,
        p_p_zero: f64,
        config: CadeConfig,
    ) -> Result<Self> {
        config.quantizer.validate()?;
        let violations = spec.validate(ValidationMode::Published);
        if !violations.is_empty() {
            let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(Error::Infeasible(list.join("; ")));
        }
        if !(0.0..=1.0).contains(&p_p_zero) {
            return Err(Error::InvalidParameter(format!("p_p(0) = {p_p_zero}")));
        }
        let q = config.quantizer;
        let alpha_s = spec.alpha_s() / (spec.alpha_s() + spec.alpha_p());
        let p_s_zero = model.p_source_zero();
        let ctx = CheckNodeContext::from_classes(alpha_s, p_s_zero, p_p_zero)?;
        let rate = spec.design_rate()?;
        let max_var = spec.max_variable_degree() as usize;
        let var = VariableKernel::new(q.half_bins(), max_var + 1);
        let check = CheckKernel::new(&q);

        let (ps, pp) = initial_densities(model, ch, &q);
        let class = |lambda: &DegreePolynomial, init: &DensityPair, p_zero: f64| Class {
            msg_weights: message_weights(lambda),
            node_weights: node_weights(lambda),
            initial: [var.to_ext(&init[0]), var.to_ext(&init[1])],
            p_zero,
        };
        let classes = [
            class(&spec.lambda_s, &ps, p_s_zero),
            class(&spec.lambda_p, &pp, p_p_zero),
        ];
        let zero = QuantizedDensity::point(&q, 0.0);
        let class_error = [
            p_s_zero * ps[0].error_mass(0) + (1.0 - p_s_zero) * ps[1].error_mass(1),
            p_p_zero * pp[0].error_mass(0) + (1.0 - p_p_zero) * pp[1].error_mass(1),
        ];
        let error_prob = (class_error[0] + rate * class_error[1]) / (1.0 + rate);
        Ok(Self {
            config,
            rho: spec.rho.clone(),
            alpha_s,
            rate,
            ctx,
            var,
            check,
            classes,
            state: CadeState {
                ps_pair: ps,
                pp_pair: pp,
                q_pair: [zero.clone(), zero],
                iteration: 0,
                error_prob,
                class_error,
            },
            trace: vec![error_prob],
        })
    }

    pub fn state(&self) -> &CadeState {
        &self.state
    }

    pub fn check_context(&self) -> &CheckNodeContext {
        &self.ctx
    }

    pub fn error_trace(&self) -> &[f64] {
        &self.trace
    }

    /// One check update followed by one variable update.
    pub fn step(&mut self) -> Result<f64> {
        let st = &self.state;
        let s = &self.classes[0];
        let p = &self.classes[1];
        let (avg, signed) = check_inputs(&st.ps_pair, &st.pp_pair, self.alpha_s, s.p_zero, p.p_zero);
        let q_pair = self.check.update(&avg, &signed, &self.ctx, &self.rho)?;

        let weights = [
            s.msg_weights.clone(),
            s.node_weights.clone(),
            p.msg_weights.clone(),
            p.node_weights.clone(),
        ];
        let delta = self.config.quantizer.delta;
        let mut out: [Vec<QuantizedDensity>; 2] = [Vec::new(), Vec::new()];
        let mut wrong = [[0.0; 2]; 2];
        for x in 0..2 {
            let qe = self.var.to_ext(&q_pair[x]);
            let mix = self.var.mixtures(&qe, &weights);
            for (c, class) in self.classes.iter().enumerate() {
                let msg = VariableKernel::combine(&class.initial[x], &mix[2 * c]);
                out[c].push(self.var.to_density(&msg, delta));
                let post = VariableKernel::combine(&class.initial[x], &mix[2 * c + 1]);
                wrong[c][x] = self.var.error_mass(&post, x as u8);
            }
        }
        let class_error = [0, 1].map(|c| {
            let p0 = self.classes[c].p_zero;
            p0 * wrong[c][0] + (1.0 - p0) * wrong[c][1]
        });
        let error_prob = (class_error[0] + self.rate * class_error[1]) / (1.0 + self.rate);
        let [ps, pp] = out;
        let to_pair = |v: Vec<QuantizedDensity>| -> DensityPair {
            let [a, b]: [QuantizedDensity; 2] = v.try_into().expect("two bit values");
            [a, b]
        };
        self.state = CadeState {
            ps_pair: to_pair(ps),
            pp_pair: to_pair(pp),
            q_pair,
            iteration: self.state.iteration + 1,
            error_prob,
            class_error,
        };
        self.trace.push(error_prob);
        Ok(error_prob)
    }

    fn stalled(&self) -> bool {
        let w = self.config.stall_window;
        let t = &self.trace;
        if w == 0 || t.len() <= w {
            return false;
        }
        let now = t[t.len() - 1];
        let then = t[t.len() - 1 - w];
        (now - then).abs() <= self.config.stall_tolerance * then.abs().max(f64::MIN_POSITIVE)
    }

    /// Iterates until convergence, a stall, or the iteration cap.
    pub fn run(&mut self) -> Result<EvolveResult> {
        let target = self.config.target_pe;
        while self.state.error_prob >= target
            && self.state.iteration < self.config.max_iters
            && !self.stalled()
        {
            self.step()?;
        }
        Ok(EvolveResult {
            converged: self.state.error_prob < target,
            iterations: self.state.iteration,
            error_trace: self.trace.clone(),
        })
    }
}

/// Runs density evolution from the channel densities.
pub fn evolve(
    spec: &EnsembleSpec,
    model: &CorrelationModel,
    ch: &TransmissionChannel,
    p_p_zero: f64,
    config: &CadeConfig,
) -> Result<EvolveResult> {
    Cade::new(spec, model, ch, p_p_zero, *config)?.run()
}
