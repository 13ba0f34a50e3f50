//! Counting and discrepancy experiments, with the exponents they are compared
//! against.

mod discrepancy;
mod schmidt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MetricChoice;
use crate::heights::PlaceSet;

pub use discrepancy::{
    almost_sure_trajectory, discrepancy, envelope, is_admissible, mean_square_discrepancy,
    mean_square_profile, uniform_discrepancy_sweep, uniform_error_exponent, uniform_error_scale,
    DiscrepancyRecord, DiscrepancySetup, MeanSquareRow, Regime, SweepOptions, SweepRecord,
};
pub use schmidt::{
    count_nt, schmidt_experiment, schmidt_rows, volume_sum_vt, SchmidtExperiment, SchmidtResult,
    SchmidtRow,
};

/// Exact growth exponent of `v_S(h)` for `SL2`.
pub const DEFAULT_A_EXPONENT: f64 = 2.0;
pub const DEFAULT_ETA: f64 = 0.1;

/// `b_0 = 2 a kappa / d`.
pub fn predicted_b0(a: f64, kappa: f64, d: u32) -> Result<f64> {
    if !(a > 0.0 && kappa >= 0.0 && d > 0) {
        return Err(Error::Domain(format!("b0 needs a > 0, kappa >= 0, d > 0; got a={a} kappa={kappa} d={d}")));
    }
    Ok(2.0 * a * kappa / d as f64)
}

/// `theta_0(b) = 1/2 + (1/2 - kappa) a / (a - b d)` for `0 < b < b_0`.
pub fn predicted_theta0(a: f64, kappa: f64, d: u32, b: f64) -> Result<f64> {
    let b0 = predicted_b0(a, kappa, d)?;
    if !(b > 0.0) {
        return Err(Error::Domain(format!("scale b = {b} must be positive")));
    }
    if b >= b0 {
        return Err(Error::Domain(format!("scale b = {b} violates b < b0 = {b0}")));
    }
    Ok(0.5 + (0.5 - kappa) * a / (a - b * d as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximationParams {
    pub b: f64,
    pub t: u64,
    pub metric: MetricChoice,
    pub a_exponent: f64,
    pub kappa: f64,
    pub d: u32,
}

impl ApproximationParams {
    pub fn new(b: f64, t: u64, metric: MetricChoice, s: &PlaceSet) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::Config(format!("b = {b} must be positive")));
        }
        if t < 1 {
            return Err(Error::Config("T must be at least 1".into()));
        }
        Ok(Self {
            b,
            t,
            metric,
            a_exponent: DEFAULT_A_EXPONENT,
            kappa: s.spectral_kappa(),
            d: s.dim_d(),
        })
    }

    pub fn b0(&self) -> f64 {
        2.0 * self.a_exponent * self.kappa / self.d as f64
    }

    /// False means the run is outside the proven range and is labelled so.
    pub fn in_proven_range(&self) -> bool {
        self.b < self.b0()
    }

    pub fn theta0(&self) -> Option<f64> {
        predicted_theta0(self.a_exponent, self.kappa, self.d, self.b).ok()
    }

    /// Approximation radius `h^{-b}`.
    pub fn radius(&self, h: u64) -> f64 {
        (h as f64).powf(-self.b)
    }
}
