//! LDPC codes for distributed joint source-channel coding with side
//! information at the decoder.
//!
//! The source block `x` of length `k` is encoded by a systematic LDPC code
//! whose Tanner graph splits variable nodes into a source class and a parity
//! class with separate edge-degree distributions. Only the `m` parity bits are
//! sent over the physical channel; the decoder sees the source bits through
//! the virtual correlation channel `P(y|x)`.

pub mod cade;
pub mod channels;
pub mod decoder;
pub mod encoder;
pub mod ensemble;
pub mod error;
pub mod gf2;
pub mod graph;
pub mod harness;
pub mod optimizer;
pub mod rng;

pub use error::{Error, Result};
