//! Empirical comparison of the two metrics on nearby pairs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metric::{distance, distance_flagged, MetricChoice};
use super::region::RegionE;
use crate::error::{Error, Result};
use crate::sampling::{domain, stream};

/// Proposals per pair before giving up on the rejection sampler.
const MAX_PROPOSALS: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub n_pairs: usize,
    /// Pairs where the logarithm was unsafe and Frobenius was used instead.
    pub flagged: usize,
    /// Extremes of `log_invariant / frobenius`.
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl MetricComparison {
    /// Smallest `C` with every ratio in `[1/C, C]`.
    pub fn constant(&self) -> f64 {
        self.max_ratio.max(1.0 / self.min_ratio)
    }
}

/// Pairs `(x, y)` Haar-uniform in `{||x||_F, ||y||_F <= norm_radius,
/// ||x - y||_F <= max_distance}`.
pub fn compare_metrics(norm_radius: f64, max_distance: f64, n_pairs: usize, seed: u64) -> Result<MetricComparison> {
    let window = RegionE::norm_ball(norm_radius)?;
    let xbox = window
        .iwasawa_box()?
        .ok_or_else(|| Error::Domain(format!("norm ball of radius {norm_radius} is empty")))?;
    let pairs = (0..n_pairs)
        .into_par_iter()
        .map(|i| -> Result<(f64, bool)> {
            let mut rng = stream(seed, domain::METRIC_PAIRS, i as u64);
            let x = (0..MAX_PROPOSALS)
                .map(|_| xbox.sample(&mut rng).point())
                .find(|g| window.contains(g))
                .ok_or_else(|| Error::Domain("rejection sampler found no base point".into()))?;
            let ball = RegionE::metric_ball(x, max_distance, MetricChoice::Frobenius)?;
            let ybox = ball.iwasawa_box()?.ok_or_else(|| Error::Domain("empty pair ball".into()))?;
            let y = (0..MAX_PROPOSALS)
                .map(|_| ybox.sample(&mut rng).point())
                .find(|g| ball.contains(g) && window.contains(g) && *g != x)
                .ok_or_else(|| Error::Domain("rejection sampler found no partner point".into()))?;
            let (l, flagged) = distance_flagged(&x, &y, MetricChoice::LogInvariant);
            Ok((l / distance(&x, &y, MetricChoice::Frobenius), flagged))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricComparison {
        n_pairs,
        flagged: pairs.iter().filter(|p| p.1).count(),
        min_ratio: pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        max_ratio: pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_tighten_near_the_identity() {
        let near = compare_metrics(1.5, 0.05, 500, 1).unwrap();
        let far = compare_metrics(3.0, 0.5, 500, 1).unwrap();
        assert_eq!(near.flagged, 0);
        assert!(near.constant() < far.constant());
        // sup of the ratio over ||x||_F <= R is the top singular value, about
        // R when R is large
        assert!(far.constant() < 3.2);
        assert_eq!(near, compare_metrics(1.5, 0.05, 500, 1).unwrap());
    }
}
