//! Bounded regions `E` of `SL2(R)`, their right translates `E x`, Monte Carlo
//! volumes, the overlap count `N(E)` and the inner/outer thickenings.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::haar::{
    integral_points_in_norm_ball, norm_ball_volume, norm_ball_y_range, HaarCalibration,
    IwasawaBox,
};
use super::metric::{distance, MetricChoice};
use super::point::{frobenius, mat_mul, Mat2, RealPoint};
use crate::error::{Error, Result};
use crate::sampling::{domain, run_blocks, Moments, VolumeEstimate};

pub type Interval = (f64, f64);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionKind {
    /// `{g : distance(g, center) <= radius}`.
    MetricBall {
        center: RealPoint,
        radius: f64,
        metric: MetricChoice,
    },
    /// `{g : |g_ij - center_ij| <= half_widths_ij}`.
    FrobeniusBox { center: RealPoint, half_widths: Mat2 },
    /// `{g : ||g||_F <= radius}`.
    NormBall { radius: f64 },
}

/// A bounded region of `SL2(R)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionE {
    pub kind: RegionKind,
}

fn positive_radius(radius: f64) -> Result<()> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius must be positive and finite, got {radius}")))
    }
}

impl RegionE {
    pub fn metric_ball(center: RealPoint, radius: f64, metric: MetricChoice) -> Result<Self> {
        positive_radius(radius)?;
        Ok(Self {
            kind: RegionKind::MetricBall {
                center,
                radius,
                metric,
            },
        })
    }

    /// Ball around the identity.
    pub fn ball_at_identity(radius: f64, metric: MetricChoice) -> Result<Self> {
        Self::metric_ball(RealPoint::identity(), radius, metric)
    }

    /// A zero half-width gives a measure-zero slab.
    pub fn frobenius_box(center: RealPoint, half_widths: Mat2) -> Result<Self> {
        if half_widths.iter().flatten().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Domain(format!("invalid half-widths {half_widths:?}")));
        }
        Ok(Self {
            kind: RegionKind::FrobeniusBox {
                center,
                half_widths,
            },
        })
    }

    pub fn norm_ball(radius: f64) -> Result<Self> {
        positive_radius(radius)?;
        Ok(Self {
            kind: RegionKind::NormBall { radius },
        })
    }

    pub fn contains(&self, g: &RealPoint) -> bool {
        match &self.kind {
            RegionKind::MetricBall {
                center,
                radius,
                metric,
            } => distance(g, center, *metric) <= *radius,
            RegionKind::FrobeniusBox {
                center,
                half_widths,
            } => {
                let (g, c) = (g.entries(), center.entries());
                (0..2).all(|i| (0..2).all(|j| (g[i][j] - c[i][j]).abs() <= half_widths[i][j]))
            }
            RegionKind::NormBall { radius } => g.frobenius_norm() <= *radius,
        }
    }

    /// Membership in the right translate `E x`, i.e. `g x^-1 in E`.
    pub fn contains_translated(&self, g: &RealPoint, x: Option<&RealPoint>) -> bool {
        match x {
            None => self.contains(g),
            Some(x) => self.contains(&g.mul(&x.inverse())),
        }
    }

    /// A Frobenius ball `(center, radius)` containing the region.
    pub fn circumscribing_ball(&self) -> (Mat2, f64) {
        match &self.kind {
            RegionKind::MetricBall {
                center,
                radius,
                metric: MetricChoice::Frobenius,
            } => (*center.entries(), *radius),
            // g = exp(Y) c with ||Y|| <= r, so ||g - c|| <= (e^r - 1) ||c||_op
            RegionKind::MetricBall {
                center,
                radius,
                metric: MetricChoice::LogInvariant,
            } => (*center.entries(), radius.exp_m1() * center.operator_norm()),
            RegionKind::FrobeniusBox {
                center,
                half_widths,
            } => (*center.entries(), frobenius(half_widths)),
            RegionKind::NormBall { radius } => ([[0.0; 2]; 2], *radius),
        }
    }

    /// Upper bound for `||g||_F` over the region.
    pub fn norm_bound(&self) -> f64 {
        match &self.kind {
            RegionKind::NormBall { radius } => *radius,
            _ => {
                let (c, r) = self.circumscribing_ball();
                frobenius(&c) + r
            }
        }
    }

    /// Entry-wise bounding intervals of `E x`.
    pub fn entry_intervals(&self, x: Option<&RealPoint>) -> [[Interval; 2]; 2] {
        let (c, r) = self.circumscribing_ball();
        let base: [[Interval; 2]; 2] = match &self.kind {
            RegionKind::FrobeniusBox {
                center,
                half_widths,
            } => {
                let c = center.entries();
                std::array::from_fn(|i| {
                    std::array::from_fn(|j| (c[i][j] - half_widths[i][j], c[i][j] + half_widths[i][j]))
                })
            }
            _ => std::array::from_fn(|i| std::array::from_fn(|j| (c[i][j] - r, c[i][j] + r))),
        };
        let Some(x) = x else {
            return base;
        };
        let xm = x.entries();
        let moved_center = mat_mul(&c, xm);
        let moved_radius = r * x.operator_norm();
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let (lo0, hi0) = scale_interval(base[i][0], xm[0][j]);
                let (lo1, hi1) = scale_interval(base[i][1], xm[1][j]);
                let lo = (lo0 + lo1).max(moved_center[i][j] - moved_radius);
                let hi = (hi0 + hi1).min(moved_center[i][j] + moved_radius);
                (lo, hi)
            })
        })
    }

    /// An Iwasawa box containing the region; `None` if the region is empty.
    pub fn iwasawa_box(&self) -> Result<Option<IwasawaBox>> {
        let iv = self.entry_intervals(None);
        let (ci, di) = (iv[1][0], iv[1][1]);
        let corners = [(ci.0, di.0), (ci.0, di.1), (ci.1, di.0), (ci.1, di.1)];
        let max_sq = corners.iter().map(|(c, d)| c * c + d * d).fold(0.0, f64::max);
        let min_sq = dist_sq_to_zero(ci) + dist_sq_to_zero(di);
        if max_sq <= 0.0 {
            return Ok(None);
        }
        let mut y = (1.0 / max_sq, if min_sq > 0.0 { 1.0 / min_sq } else { f64::INFINITY });
        let theta = if min_sq > 0.0 {
            let (cm, dm) = ((ci.0 + ci.1) / 2.0, (di.0 + di.1) / 2.0);
            let mid = cm.atan2(dm);
            let offsets = corners.map(|(c, d)| wrap_angle(c.atan2(d) - mid));
            let lo = offsets.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = offsets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (mid + lo, mid + hi)
        } else {
            (0.0, TAU)
        };
        // x = (ac + bd) y
        let num = add_interval(
            mul_interval(iv[0][0], iv[1][0]),
            mul_interval(iv[0][1], iv[1][1]),
        );
        let mut x = if y.1.is_finite() {
            mul_interval(num, y)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        let n = self.norm_bound();
        let Some((ny0, ny1)) = norm_ball_y_range(n) else {
            return Ok(None);
        };
        let xw = (n.powi(4) / 4.0 - 1.0).max(0.0).sqrt();
        y = (y.0.max(ny0), y.1.min(ny1));
        x = (x.0.max(-xw), x.1.min(xw));
        if y.0 > y.1 || x.0 > x.1 {
            return Ok(None);
        }
        let theta = if theta.1 - theta.0 >= TAU {
            (0.0, TAU)
        } else {
            theta
        };
        IwasawaBox::new(x, y, theta).map(Some).map_err(|e| {
            Error::UnsupportedRegion(format!("cannot bound region in Iwasawa coordinates: {e}"))
        })
    }

    /// Calibrated Haar volume by Monte Carlo.
    pub fn volume(&self, cal: &HaarCalibration, samples: u64, seed: u64) -> Result<VolumeEstimate> {
        if let RegionKind::NormBall { radius } = self.kind {
            return norm_ball_volume(radius, cal, samples, seed);
        }
        let Some(bx) = self.iwasawa_box()? else {
            return Ok(VolumeEstimate::exact(0.0));
        };
        if samples == 0 {
            return Err(Error::Domain("need at least one sample".into()));
        }
        let m = run_blocks(samples, seed, domain::REGION_VOLUME, |rng, len| {
            let mut m = Moments::default();
            for _ in 0..len {
                let g = bx.sample(rng).point();
                m.push(if self.contains(&g) { 1.0 } else { 0.0 });
            }
            m
        })
        .into_iter()
        .fold(Moments::default(), Moments::merge);
        Ok(VolumeEstimate::from_moments(&m, cal.kappa * bx.mass()))
    }

    /// Haar-uniform points of the region by rejection from its Iwasawa box.
    pub fn sample_points(&self, proposals: u64, seed: u64) -> Result<Vec<RealPoint>> {
        let Some(bx) = self.iwasawa_box()? else {
            return Ok(Vec::new());
        };
        Ok(run_blocks(proposals, seed, domain::OVERLAP, |rng, len| {
            (0..len)
                .map(|_| bx.sample(rng).point())
                .filter(|g| self.contains(g))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect())
    }

    /// Stable text used for cache keys and manifests.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(self).expect("region serializes")
    }
}

fn dist_sq_to_zero((lo, hi): Interval) -> f64 {
    if lo > 0.0 {
        lo * lo
    } else if hi < 0.0 {
        hi * hi
    } else {
        0.0
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > TAU / 2.0 {
        w - TAU
    } else {
        w
    }
}

fn scale_interval((lo, hi): Interval, s: f64) -> Interval {
    if s >= 0.0 {
        (lo * s, hi * s)
    } else {
        (hi * s, lo * s)
    }
}

fn add_interval(a: Interval, b: Interval) -> Interval {
    (a.0 + b.0, a.1 + b.1)
}

fn mul_interval(a: Interval, b: Interval) -> Interval {
    let p = [a.0 * b.0, a.0 * b.1, a.1 * b.0, a.1 * b.1];
    (
        p.iter().cloned().fold(f64::INFINITY, f64::min),
        p.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    )
}

/// `(E_eps^-, E_eps^+)`: shrink and grow a ball by `eps`.
pub fn region_inner_outer(e: &RegionE, eps: f64) -> Result<(RegionE, RegionE)> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let degenerate = |radius: f64| {
        Error::Domain(format!(
            "degenerate inner region: eps = {eps} >= radius = {radius}"
        ))
    };
    match &e.kind {
        RegionKind::MetricBall {
            center,
            radius,
            metric,
        } => {
            if eps >= *radius {
                return Err(degenerate(*radius));
            }
            Ok((
                RegionE::metric_ball(*center, radius - eps, *metric)?,
                RegionE::metric_ball(*center, radius + eps, *metric)?,
            ))
        }
        RegionKind::NormBall { radius } => {
            if eps >= *radius {
                return Err(degenerate(*radius));
            }
            Ok((RegionE::norm_ball(radius - eps)?, RegionE::norm_ball(radius + eps)?))
        }
        RegionKind::FrobeniusBox { .. } => Err(Error::UnsupportedRegion(
            "inner/outer thickenings are defined for balls only".into(),
        )),
    }
}

/// Options for [`n_of_e`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapOptions {
    pub proposals: u64,
    pub seed: u64,
    /// Minimum Monte Carlo hits for an overlap to count as positive-measure.
    pub hit_threshold: u64,
}

impl Default for OverlapOptions {
    fn default() -> Self {
        Self {
            proposals: 1 << 16,
            seed: 0x0e,
            hit_threshold: 10,
        }
    }
}

/// `N(E) = |{gamma in SL2(Z) : m(E ∩ gamma E) > 0}|`.
///
/// `gamma = g h^-1` for `g, h in E`, so `||gamma||_F <= sup_E ||g||_F^2`.
pub fn n_of_e(e: &RegionE, opts: &OverlapOptions) -> Result<u64> {
    let points = e.sample_points(opts.proposals, opts.seed)?;
    if points.is_empty() {
        return Ok(0);
    }
    let bound = e.norm_bound().powi(2);
    let candidates = integral_points_in_norm_ball(bound * (1.0 + 1e-12))?;
    let count = candidates
        .par_iter()
        .filter(|m| {
            let gamma_inv = RealPoint::project([[m[1][1] as f64, -m[0][1] as f64], [-m[1][0] as f64, m[0][0] as f64]]);
            let hits = points
                .iter()
                .filter(|g| e.contains(&gamma_inv.mul(g)))
                .take(opts.hit_threshold as usize)
                .count() as u64;
            hits >= opts.hit_threshold
        })
        .count();
    Ok(count as u64)
}
