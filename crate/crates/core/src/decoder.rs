//! Sum-product decoding over the two parallel virtual channels.
//!
//! Source nodes observe the side information through the correlation channel
//! (and carry the source prior); parity nodes observe the transmission channel
//! output. LLRs are natural-log ratios, positive favoring bit 0.

use crate::channels::{CorrelationModel, TransmissionChannel};
use crate::error::{Error, Result};
use crate::graph::TannerGraph;

/// Magnitude cap on every LLR and message.
pub const LLR_MAX: f64 = 30.0;

/// Observations available to the decoder.
#[derive(Debug, Clone, Copy)]
pub struct DecoderInput<'a> {
    pub side_info: &'a [u32],
    pub received_parity: &'a [u8],
    pub model: &'a CorrelationModel,
    pub channel: &'a TransmissionChannel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub x_hat: Vec<u8>,
    pub iterations_used: usize,
    /// True when the hard decisions on all `k + m` bits satisfy every check.
    pub converged: bool,
    /// Final posterior LLRs of the source bits.
    pub posterior_llrs: Vec<f64>,
}

fn log_ratio(p0: f64, p1: f64) -> f64 {
    match (p0 > 0.0, p1 > 0.0) {
        (true, true) => (p0.ln() - p1.ln()).clamp(-LLR_MAX, LLR_MAX),
        (true, false) => LLR_MAX,
        (false, true) => -LLR_MAX,
        (false, false) => f64::NAN,
    }
}

/// LLR of a source node that observed side symbol `y`, prior included.
pub fn source_llr(model: &CorrelationModel, y: usize) -> f64 {
    log_ratio(model.joint(0, y), model.joint(1, y))
}

/// LLR of a parity node that received `zhat`.
pub fn parity_llr(channel: &TransmissionChannel, zhat: u8) -> f64 {
    log_ratio(channel.transition(zhat, 0), channel.transition(zhat, 1))
}

/// Initial LLRs of all `k + m` variable nodes, source nodes first.
pub fn initial_llrs(input: &DecoderInput<'_>) -> Result<Vec<f64>> {
    let alphabet = input.model.side_alphabet_size();
    let table: Vec<f64> = (0..alphabet).map(|y| source_llr(input.model, y)).collect();
    let parity = [parity_llr(input.channel, 0), parity_llr(input.channel, 1)];
    let mut out = Vec::with_capacity(input.side_info.len() + input.received_parity.len());
    for (i, &y) in input.side_info.iter().enumerate() {
        let y = y as usize;
        if y >= alphabet {
            return Err(Error::InvalidParameter(format!(
                "side symbol {y} at position {i} outside alphabet of size {alphabet}"
            )));
        }
        if table[y].is_nan() {
            return Err(Error::ZeroProbabilityObservation { position: i });
        }
        out.push(table[y]);
    }
    let k = out.len();
    for (j, &z) in input.received_parity.iter().enumerate() {
        let l = parity[usize::from(z & 1)];
        if l.is_nan() {
            return Err(Error::ZeroProbabilityObservation { position: k + j });
        }
        out.push(l);
    }
    Ok(out)
}

/// Edge layout of a graph prepared for repeated decoding.
#[derive(Debug, Clone)]
pub struct BpDecoder {
    k: usize,
    m: usize,
    check_ptr: Vec<usize>,
    edge_var: Vec<u32>,
    var_ptr: Vec<usize>,
    var_edges: Vec<u32>,
    early_stop: bool,
}

impl BpDecoder {
    pub fn new(g: &TannerGraph) -> Self {
        let mut check_ptr = Vec::with_capacity(g.m() + 1);
        let mut edge_var = Vec::with_capacity(g.num_edges());
        check_ptr.push(0);
        for vars in g.checks() {
            edge_var.extend_from_slice(vars);
            check_ptr.push(edge_var.len());
        }
        let n = g.n();
        let mut var_ptr = vec![0usize; n + 1];
        for &v in &edge_var {
            var_ptr[v as usize + 1] += 1;
        }
        for i in 0..n {
            var_ptr[i + 1] += var_ptr[i];
        }
        let mut fill = var_ptr.clone();
        let mut var_edges = vec![0u32; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v as usize]] = e as u32;
            fill[v as usize] += 1;
        }
        Self {
            k: g.k(),
            m: g.m(),
            check_ptr,
            edge_var,
            var_ptr,
            var_edges,
            early_stop: true,
        }
    }

    /// Always runs `max_iters` iterations instead of stopping once the hard
    /// decisions satisfy every check.
    pub fn without_early_stop(mut self) -> Self {
        self.early_stop = false;
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    fn syndrome_ok(&self, hard: &[u8]) -> bool {
        self.check_ptr.windows(2).all(|w| {
            self.edge_var[w[0]..w[1]]
                .iter()
                .fold(0u8, |a, &v| a ^ hard[v as usize])
                == 0
        })
    }

    /// Flooding sum-product from initial LLRs of all `k + m` variables.
    pub fn decode_llrs(&self, llr: &[f64], max_iters: usize) -> Result<DecodeResult> {
        let n = self.k + self.m;
        if llr.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: llr.len(),
            });
        }
        if max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        let e_total = self.edge_var.len();
        let mut v2c: Vec<f64> = self.edge_var.iter().map(|&v| llr[v as usize]).collect();
        let mut c2v = vec![0.0f64; e_total];
        let mut tanhs = Vec::new();
        let mut posterior: Vec<f64> = llr.to_vec();
        let mut hard: Vec<u8> = posterior.iter().map(|&l| u8::from(l < 0.0)).collect();

        let mut iterations = 0;
        let mut converged = self.syndrome_ok(&hard);
        while !(converged && self.early_stop) && iterations < max_iters {
            iterations += 1;
            for w in self.check_ptr.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                tanhs.clear();
                // tanh(m/2) = 1 - 2/(e^m + 1).
                tanhs.extend(v2c[lo..hi].iter().map(|&m| 1.0 - 2.0 / (m.exp() + 1.0)));
                // Suffix products in c2v, then a forward sweep with the prefix.
                let mut acc = 1.0;
                for i in (0..hi - lo).rev() {
                    c2v[lo + i] = acc;
                    acc *= tanhs[i];
                }
                let mut prefix = 1.0;
                for i in 0..hi - lo {
                    let p = prefix * c2v[lo + i];
                    // 2 atanh(p) = ln((1 + p)/(1 - p)).
                    c2v[lo + i] = ((1.0 + p) / (1.0 - p)).ln().clamp(-LLR_MAX, LLR_MAX);
                    prefix *= tanhs[i];
                }
            }
            for v in 0..n {
                let edges = &self.var_edges[self.var_ptr[v]..self.var_ptr[v + 1]];
                let total = llr[v] + edges.iter().map(|&e| c2v[e as usize]).sum::<f64>();
                for &e in edges {
                    v2c[e as usize] = (total - c2v[e as usize]).clamp(-LLR_MAX, LLR_MAX);
                }
                posterior[v] = total;
                hard[v] = u8::from(total < 0.0);
            }
            converged = self.syndrome_ok(&hard);
        }
        Ok(DecodeResult {
            x_hat: hard[..self.k].to_vec(),
            iterations_used: iterations,
            converged,
            posterior_llrs: posterior[..self.k]
                .iter()
                .map(|l| l.clamp(-LLR_MAX, LLR_MAX))
                .collect(),
        })
    }

    pub fn decode(&self, input: &DecoderInput<'_>, max_iters: usize) -> Result<DecodeResult> {
        check_lengths(self.k, self.m, input)?;
        self.decode_llrs(&initial_llrs(input)?, max_iters)
    }
}

fn check_lengths(k: usize, m: usize, input: &DecoderInput<'_>) -> Result<()> {
    if input.side_info.len() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            got: input.side_info.len(),
        });
    }
    if input.received_parity.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            got: input.received_parity.len(),
        });
    }
    Ok(())
}

/// One-shot decode. For many blocks on one graph, build a [`BpDecoder`] once.
pub fn decode(g: &TannerGraph, input: &DecoderInput<'_>, max_iters: usize) -> Result<DecodeResult> {
    BpDecoder::new(g).decode(input, max_iters)
}

/// Fraction of differing positions.
pub fn ber(x_true: &[u8], x_hat: &[u8]) -> Result<f64> {
    Ok(bit_errors(x_true, x_hat)? as f64 / x_true.len().max(1) as f64)
}

/// Number of differing positions.
pub fn bit_errors(x_true: &[u8], x_hat: &[u8]) -> Result<usize> {
    if x_true.len() != x_hat.len() {
        return Err(Error::LengthMismatch {
            expected: x_true.len(),
            got: x_hat.len(),
        });
    }
    Ok(x_true.iter().zip(x_hat).filter(|(a, b)| a != b).count())
}
