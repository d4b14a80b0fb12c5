//! Quantum time of arrival in a uniform gravitational field.

pub mod classical;
pub mod distribution;
pub mod error;
pub mod expectation;
pub mod numerics;
pub mod params;
pub mod semiclassical;
pub mod spectral;
pub mod states;
pub mod toa_kernel;
pub mod warning;

pub use error::{QtoaError, Result};
pub use params::PhysicalParams;
pub use warning::Warning;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
