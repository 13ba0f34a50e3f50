//! Height-ordered enumeration of the S-integral points of `SL2`, exact p-adic
//! Haar volumes, calibrated archimedean volumes and the counting and
//! discrepancy experiments built on them.

pub mod arith;
pub mod enumeration;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod geometry;
pub mod heights;
pub mod padic_volume;
pub mod report;
pub mod sampling;
pub mod selftest;

pub use arith::{ModMatrix, RationalMatrix, RationalScalar, Valuation};
pub use enumeration::{ShellCache, ShellQuery, ShellResult};
pub use error::{Error, Result};
pub use experiments::{ApproximationParams, DiscrepancyRecord, Regime, SchmidtResult};
pub use fit::{fit_exponent, PowerLawFit};
pub use geometry::{BallVolumeTable, HaarCalibration, IwasawaBox, MetricChoice, RealPoint, RegionE};
pub use heights::{PlaceSet, RealizableHeight};
pub use padic_volume::{CongruenceCondition, SphereVolumeTable};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
