//! Decision-oriented quantization.
//!
//! Quantizers here map a system parameter (channel gains, a MIMO channel
//! matrix) directly to one of finitely many decisions, and are designed to
//! maximize the expected downstream utility of that decision rather than
//! to reconstruct the parameter.
//!
//! - [`model`]: utility functions, decisions, parameter sampling
//! - [`quantizer`]: quantizer representations, exhaustive labeling, scalar thresholds
//! - [`algopt`]: alternating design and the k-means baseline
//! - [`learn`]: feedforward classifier for the model-free setting
//! - [`evalx`]: expected utility, oracles, relative loss, compression

pub mod algopt;
pub mod error;
pub mod evalx;
pub mod exec;
pub mod learn;
pub mod linalg;
pub mod model;
pub mod quantizer;

pub use error::{DoqError, Result};
pub use model::{Decision, DecisionSet, Param, SampleSet, UtilityModel};
pub use quantizer::DecisionalQuantizer;
