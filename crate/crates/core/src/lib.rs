//! Multi-domain Monte Carlo: adaptive sampling over basins of attraction
//! crossed with density levels, with per-basin mass and expectation
//! estimates.

pub mod continuous;
pub mod dag;
pub mod data_io;
pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod json;
pub mod oracle;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use estimation::{DomainEstimate, DomainRepresentation, DrAccumulator, Payload};
pub use rng::{chain_rng, ChainRng};
pub use sampler::{MdSampler, SamplerConfig, StateSpaceModel, Variant};
