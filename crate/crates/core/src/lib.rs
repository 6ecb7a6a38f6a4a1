//! Age-distortion analysis of quantized, variable-length coded status updates.
//!
//! A scalar source is quantized, each cell gets a codeword length, and one
//! bit takes one unit of channel time. The crate computes the resulting age
//! of information under zero-wait and threshold sampling, designs codes that
//! minimize it, and checks the analysis against a discrete-event simulation.
//!
//! The pieces, in pipeline order: [`source`], [`quantizer`], [`coder`],
//! [`sampler`], [`sim`], and [`experiments`] for sweeps and output. [`cli`]
//! backs the `age-distortion` binary.

pub mod cli;
pub mod coder;
pub mod error;
pub mod experiments;
pub mod quadrature;
pub mod quantizer;
pub mod sampler;
pub mod search;
pub mod sim;
pub mod source;

pub use error::{Error, Result};
