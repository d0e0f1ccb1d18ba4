//! Codeword-averaged density evolution for the split ensemble.
//!
//! With a nonuniform source or an asymmetric channel the all-zero codeword
//! cannot stand in for every codeword, so each message density is tracked
//! conditionally on the bit value of its variable node, `P(·|x=0)` and
//! `P(·|x=1)`, and the check update averages over the parity of the other
//! bits on the check.

mod check;
mod density;
mod evolve;
mod spectral;
mod threshold;
mod variable;

pub use check::{check_inputs, check_update, gamma_magnitude, CheckKernel, CheckNodeContext, GammaGrid};
pub use density::{
    exact_parity_llr, exact_source_llr, initial_densities, DensityPair, QuantizedDensity, Quantizer,
};
pub use evolve::{evolve, Cade, CadeConfig, CadeState, EvolveResult};
pub use threshold::{
    read_threshold_csv, theta_at_gap, threshold_search, write_threshold_csv, Family, ThresholdResult,
    ThresholdRow,
};
pub use variable::{variable_update, VariableKernel};
