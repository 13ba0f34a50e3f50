//! Haar measure on `SL2(R)` in Iwasawa coordinates and its covolume-one
//! calibration against `SL2(Z)`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::point::{Iwasawa, RealPoint};
use crate::error::{Error, Result};
use crate::sampling::{domain, run_blocks, Moments, VolumeEstimate};

/// A product box in Iwasawa coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IwasawaBox {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub theta: (f64, f64),
}

impl IwasawaBox {
    pub fn new(x: (f64, f64), y: (f64, f64), theta: (f64, f64)) -> Result<Self> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !(ok(x) && ok(y) && ok(theta) && y.0 > 0.0) {
            return Err(Error::Domain(format!(
                "invalid Iwasawa box x={x:?} y={y:?} theta={theta:?}"
            )));
        }
        Ok(Self { x, y, theta })
    }

    /// Uncalibrated mass `int dx dy/y^2 dtheta/2pi`.
    pub fn mass(&self) -> f64 {
        (self.x.1 - self.x.0) * (1.0 / self.y.0 - 1.0 / self.y.1) * (self.theta.1 - self.theta.0) / TAU
    }

    pub fn is_empty(&self) -> bool {
        self.mass() <= 0.0
    }

    /// A Haar-distributed sample: `x`, `theta` uniform, `y` with density
    /// proportional to `1/y^2`.
    pub fn sample(&self, rng: &mut impl Rng) -> Iwasawa {
        let u: f64 = rng.random();
        let inv = 1.0 / self.y.0 - u * (1.0 / self.y.0 - 1.0 / self.y.1);
        Iwasawa {
            x: lerp(self.x, rng.random()),
            y: 1.0 / inv,
            theta: lerp(self.theta, rng.random()),
        }
    }

    pub fn contains(&self, w: &Iwasawa) -> bool {
        let inside = |(lo, hi): (f64, f64), v: f64| lo <= v && v <= hi;
        inside(self.x, w.x) && inside(self.y, w.y) && {
            // theta is periodic; test the representative nearest the window
            let shifted = self.theta.0 + (w.theta - self.theta.0).rem_euclid(TAU);
            inside(self.theta, shifted)
        }
    }
}

fn lerp((lo, hi): (f64, f64), u: f64) -> f64 {
    lo + u * (hi - lo)
}

/// `m_inf = kappa * (dx dy / y^2 dtheta / 2pi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarCalibration {
    pub kappa: f64,
    pub cross_check: Option<CrossCheck>,
}

/// Integer-point count against Monte Carlo volume of `{||g||_F <= R}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub radius: f64,
    pub lattice_count: u64,
    pub volume: VolumeEstimate,
    pub ratio: f64,
    pub seed: u64,
}

/// Area of the modular fundamental domain under `dx dy / y^2`, from
/// `int_{-1/2}^{1/2} dx / sqrt(1 - x^2)` by composite Simpson.
pub fn modular_domain_area() -> f64 {
    let n = 2000;
    let f = |x: f64| 1.0 / (1.0 - x * x).sqrt();
    let (a, b) = (-0.5, 0.5);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `SL2(Z)` contains `-I`, which fixes every point of the upper half plane,
/// so a fundamental domain is the modular domain times half of `SO(2)`.
pub const KAPPA_FIBRE_MASS: f64 = 0.5;

/// `kappa = 1 / (area * fibre mass) = 6 / pi`.
pub fn analytic_kappa() -> f64 {
    1.0 / (modular_domain_area() * KAPPA_FIBRE_MASS)
}

impl HaarCalibration {
    pub fn analytic() -> Self {
        Self {
            kappa: analytic_kappa(),
            cross_check: None,
        }
    }

    pub fn with_kappa(kappa: f64) -> Self {
        Self {
            kappa,
            cross_check: None,
        }
    }
}

impl Default for HaarCalibration {
    fn default() -> Self {
        Self::analytic()
    }
}

/// Options for [`calibrate_haar`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub radius: f64,
    pub samples: u64,
    pub seed: u64,
    /// Accepted band for count / volume.
    pub tolerance: (f64, f64),
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            radius: 50.0,
            samples: 1 << 20,
            seed: 0x5eed,
            tolerance: (0.85, 1.15),
        }
    }
}

pub fn calibrate_haar(opts: &CalibrationOptions) -> Result<HaarCalibration> {
    let mut cal = HaarCalibration::analytic();
    let check = covolume_cross_check(&cal, opts.radius, opts.samples, opts.seed)?;
    let (lo, hi) = opts.tolerance;
    if !(lo..=hi).contains(&check.ratio) {
        return Err(Error::CalibrationFailed {
            ratio: check.ratio,
            lo,
            hi,
        });
    }
    cal.cross_check = Some(check);
    Ok(cal)
}

pub fn covolume_cross_check(
    cal: &HaarCalibration,
    radius: f64,
    samples: u64,
    seed: u64,
) -> Result<CrossCheck> {
    let lattice_count = integral_points_in_norm_ball(radius)?.len() as u64;
    let volume = norm_ball_volume(radius, cal, samples, seed)?;
    Ok(CrossCheck {
        radius,
        lattice_count,
        volume,
        ratio: lattice_count as f64 / volume.value,
        seed,
    })
}

/// All of `SL2(Z)` with `||g||_F <= radius`, lexicographic in `(a, b, c, d)`.
pub fn integral_points_in_norm_ball(radius: f64) -> Result<Vec<[[i64; 2]; 2]>> {
    if !(radius.is_finite() && radius >= 0.0) || radius > 1e4 {
        return Err(Error::Range(format!("norm-ball radius {radius} out of range")));
    }
    let r2 = (radius * radius).floor() as i64;
    let rb = radius.floor() as i64;
    let mut out = Vec::new();
    for a in -rb..=rb {
        for b in -rb..=rb {
            if a * a + b * b > r2 {
                continue;
            }
            for c in -rb..=rb {
                let s = a * a + b * b + c * c;
                if s > r2 {
                    continue;
                }
                if a != 0 {
                    let num = 1 + b * c;
                    if num % a == 0 {
                        let d = num / a;
                        if s + d * d <= r2 {
                            out.push([[a, b], [c, d]]);
                        }
                    }
                } else if b * c == -1 {
                    let dm = ((r2 - s) as f64).sqrt().floor() as i64;
                    for d in -dm..=dm {
                        if s + d * d <= r2 {
                            out.push([[a, b], [c, d]]);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `y`-range of `{||g||_F <= n}`: roots of `y^2 - n^2 y + 1 = 0`.
pub(crate) fn norm_ball_y_range(n: f64) -> Option<(f64, f64)> {
    let n2 = n * n;
    let disc = n2 * n2 - 4.0;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    // the small root in the cancellation-free form
    Some((2.0 / (n2 + s), (n2 + s) / 2.0))
}

/// Half-width in `x` of `{||g||_F <= n}` at height `y`, from
/// `||g||_F^2 = y + (x^2 + 1) / y`.
pub(crate) fn norm_ball_x_halfwidth(n: f64, y: f64) -> f64 {
    (n * n * y - y * y - 1.0).max(0.0).sqrt()
}

/// Calibrated Haar volume of `{||g||_F <= radius}`.
///
/// The Frobenius norm does not depend on `theta`, so the `x` integral is done
/// exactly and `y` is importance-sampled from `dy / y^2`.
pub fn norm_ball_volume(
    radius: f64,
    cal: &HaarCalibration,
    samples: u64,
    seed: u64,
) -> Result<VolumeEstimate> {
    let Some((y0, y1)) = norm_ball_y_range(radius) else {
        return Ok(VolumeEstimate::exact(0.0));
    };
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let y_mass = 1.0 / y0 - 1.0 / y1;
    let m = run_blocks(samples, seed, domain::NORM_BALL, |rng, len| {
        let mut m = Moments::default();
        for _ in 0..len {
            let u: f64 = rng.random();
            let y = 1.0 / (1.0 / y0 - u * y_mass);
            m.push(2.0 * norm_ball_x_halfwidth(radius, y));
        }
        m
    })
    .into_iter()
    .fold(Moments::default(), Moments::merge);
    Ok(VolumeEstimate::from_moments(&m, cal.kappa * y_mass))
}

/// Draws `n` Haar-uniform points of the box.
pub fn haar_points(q: &IwasawaBox, n: usize, seed: u64) -> Vec<RealPoint> {
    (0..n)
        .map(|i| {
            let mut rng = crate::sampling::stream(seed, domain::HAAR_POINTS, i as u64);
            q.sample(&mut rng).point()
        })
        .collect()
}

/// The default window for "almost every x" experiments.
pub fn default_window() -> IwasawaBox {
    IwasawaBox {
        x: (-0.5, 0.5),
        y: (0.5, 2.0),
        theta: (0.0, TAU),
    }
}

/// Hyperbolic area `2 pi (cosh r - 1)` of the disc `{||g||_F <= R}` with
/// `R^2 = 2 cosh r`, i.e. `pi (R^2 - 2)`.
pub fn norm_ball_area_closed_form(radius: f64) -> f64 {
    (PI * (radius * radius - 2.0)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_is_six_over_pi() {
        assert!((modular_domain_area() - PI / 3.0).abs() < 1e-9);
        assert!((analytic_kappa() - 6.0 / PI).abs() < 1e-6);
    }

    #[test]
    fn fibre_mass_is_one() {
        let b = IwasawaBox::new((0.0, 1.0), (1.0, f64::MAX), (0.0, TAU)).unwrap();
        assert!((b.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norm_ball_volume_matches_hyperbolic_area() {
        let cal = HaarCalibration::analytic();
        for r in [3.0, 10.0, 25.0] {
            let v = norm_ball_volume(r, &cal, 1 << 18, 3).unwrap();
            let exact = cal.kappa * norm_ball_area_closed_form(r);
            assert!((v.value - exact).abs() < 5.0 * v.stderr + 1e-9, "R={r}: {} vs {exact}", v.value);
        }
        assert_eq!(norm_ball_volume(1.0, &cal, 10, 0).unwrap().value, 0.0);
    }

    #[test]
    fn small_lattice_counts() {
        // ||g||^2 <= 2 only for g = +-I and the two rotations by pi/2
        let pts = integral_points_in_norm_ball(2f64.sqrt() + 1e-9).unwrap();
        assert_eq!(pts.len(), 4);
        for p in integral_points_in_norm_ball(6.0).unwrap() {
            assert_eq!(p[0][0] * p[1][1] - p[0][1] * p[1][0], 1);
        }
    }

    #[test]
    fn calibration_ratio_trends_to_one() {
        let cal = HaarCalibration::analytic();
        let ratios: Vec<f64> = [10.0, 25.0, 50.0]
            .iter()
            .map(|&r| covolume_cross_check(&cal, r, 1 << 16, 1).unwrap().ratio)
            .collect();
        let gaps: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
        assert!(gaps[2] < 0.05, "{ratios:?}");
        assert!(gaps[2] <= gaps[0] + 0.01, "{ratios:?}");
    }

    #[test]
    fn box_sampling_is_inside() {
        let b = default_window();
        let mut rng = crate::sampling::stream(1, 1, 1);
        for _ in 0..100 {
            let w = b.sample(&mut rng);
            assert!(b.contains(&w));
            assert!(b.contains(&w.point().iwasawa()));
        }
    }
}
