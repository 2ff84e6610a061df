//! Design-based bootstrap-t inference for finite-population totals.
//!
//! The crate covers Poisson, simple random (SRS) and probability-proportional-to-size
//! with-replacement (PPS) sampling, plus two-stage designs that use Poisson or PPS
//! for clusters and SRS within clusters. For each design it provides the sample
//! draw, the design-unbiased point and variance estimators, a bootstrap that
//! rebuilds a pseudo-population from a multinomial and resamples it under the same
//! design, and the second-order Edgeworth expansions of the studentized statistic.
//!
//! Everything here is `no_std` + `alloc` and deterministic given an [`RngContract`].
//! IO, parallel Monte Carlo and the CLI live in the companion `svyboot` crate.

#![no_std]
// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod accum;
pub mod bootstrap;
pub mod designs;
pub mod edgeworth;
mod error;
pub mod estimators;
mod math;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod twostage;

pub use error::{Error, Result};
pub use model::{
    validate_design, ConfidenceInterval, DesignKind, DesignSpec, DrawnSample, FinitePopulation, IntervalMethod,
};
pub use rng::{derive_substream, RngContract, StreamRng};
