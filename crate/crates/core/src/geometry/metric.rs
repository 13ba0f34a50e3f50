use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::point::{frobenius, mat_mul, mat_sub, Mat2, RealPoint};
use crate::error::{Error, Result};

/// Which distance on `SL2(R)` an experiment uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricChoice {
    /// Entry-wise Euclidean norm of `x - y`.
    #[default]
    Frobenius,
    /// Frobenius norm of the principal logarithm of `x y^-1`; right-invariant.
    #[serde(alias = "log")]
    LogInvariant,
}

impl MetricChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricChoice::Frobenius => "frobenius",
            MetricChoice::LogInvariant => "log",
        }
    }
}

impl fmt::Display for MetricChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frobenius" => Ok(MetricChoice::Frobenius),
            "log" | "log_invariant" => Ok(MetricChoice::LogInvariant),
            other => Err(Error::Config(format!(
                "unknown metric {other:?}; expected frobenius or log"
            ))),
        }
    }
}

/// Traces at or below `-2 + LOG_TRACE_MARGIN` have no safe real logarithm.
pub const LOG_TRACE_MARGIN: f64 = 1e-9;

/// Principal logarithm of a determinant-one matrix, `None` outside the safe
/// neighborhood.
///
/// With `s = tr(A)/2`, `log A = f(s) (A - s I)` where `f = mu / sinh mu` for
/// `s = cosh mu > 1` and `f = phi / sin phi` for `s = cos phi < 1`.
pub fn log_sl2(a: &Mat2) -> Option<Mat2> {
    let t = a[0][0] + a[1][1];
    if t <= -2.0 + LOG_TRACE_MARGIN {
        return None;
    }
    let s = t / 2.0;
    let u = s - 1.0;
    let coef = if u.abs() < 1e-6 {
        1.0 - u / 3.0
    } else if s > 1.0 {
        let mu = s.acosh();
        mu / mu.sinh()
    } else {
        let phi = s.acos();
        phi / phi.sin()
    };
    Some([
        [coef * (a[0][0] - s), coef * a[0][1]],
        [coef * a[1][0], coef * (a[1][1] - s)],
    ])
}

/// Distance and whether the log metric fell back to Frobenius.
pub fn distance_flagged(x: &RealPoint, y: &RealPoint, m: MetricChoice) -> (f64, bool) {
    let frob = || frobenius(&mat_sub(x.entries(), y.entries()));
    match m {
        MetricChoice::Frobenius => (frob(), false),
        MetricChoice::LogInvariant => {
            let a = mat_mul(x.entries(), y.inverse().entries());
            match log_sl2(&a) {
                Some(l) => (frobenius(&l), false),
                None => (frob(), true),
            }
        }
    }
}

pub fn distance(x: &RealPoint, y: &RealPoint, m: MetricChoice) -> f64 {
    distance_flagged(x, y, m).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point::Iwasawa;
    use crate::sampling::stream;
    use rand::Rng;

    #[test]
    fn examples() {
        let e = RealPoint::identity();
        assert_eq!(distance(&e, &e, MetricChoice::Frobenius), 0.0);
        assert!(distance(&e, &e, MetricChoice::LogInvariant).abs() < 1e-15);
        let d = distance(&RealPoint::diag(2.0), &e, MetricChoice::Frobenius);
        assert!((d - 1.25f64.sqrt()).abs() < 1e-12);
        let t = 0.1f64;
        let d = distance(&RealPoint::diag(t.exp()), &e, MetricChoice::LogInvariant);
        assert!((d - t * 2f64.sqrt()).abs() < 1e-12, "{d}");
    }

    #[test]
    fn log_of_rotation_and_shear() {
        let phi = 0.7f64;
        let r = Iwasawa { x: 0.0, y: 1.0, theta: phi }.point();
        let l = log_sl2(r.entries()).unwrap();
        assert!((l[1][0] - phi).abs() < 1e-12 && (l[0][1] + phi).abs() < 1e-12);
        let l = log_sl2(&[[1.0, 0.3], [0.0, 1.0]]).unwrap();
        assert!((l[0][1] - 0.3).abs() < 1e-12 && l[0][0].abs() < 1e-12);
        assert!(log_sl2(&[[-1.0, 0.0], [0.0, -1.0]]).is_none());
    }

    #[test]
    fn fallback_is_flagged() {
        let minus = RealPoint::new([[-1.0, 0.0], [0.0, -1.0]]).unwrap();
        let (d, flagged) = distance_flagged(&minus, &RealPoint::identity(), MetricChoice::LogInvariant);
        assert!(flagged);
        assert!((d - 8f64.sqrt()).abs() < 1e-12);
    }

    fn random_point(rng: &mut impl Rng, spread: f64) -> RealPoint {
        Iwasawa {
            x: rng.random_range(-spread..spread),
            y: rng.random_range(0.5..2.0),
            theta: rng.random_range(0.0..std::f64::consts::TAU),
        }
        .point()
    }

    #[test]
    fn log_metric_is_right_invariant() {
        let mut rng = stream(11, 99, 0);
        for _ in 0..2000 {
            let x = random_point(&mut rng, 1.0);
            let y = random_point(&mut rng, 1.0);
            let g = random_point(&mut rng, 1.0);
            let (d0, f0) = distance_flagged(&x, &y, MetricChoice::LogInvariant);
            let (d1, f1) = distance_flagged(&x.mul(&g), &y.mul(&g), MetricChoice::LogInvariant);
            if !f0 && !f1 {
                assert!((d0 - d1).abs() < 1e-9 * (1.0 + d0), "{d0} vs {d1}");
            }
        }
    }

    #[test]
    fn parse_metric() {
        assert_eq!("log".parse::<MetricChoice>().unwrap(), MetricChoice::LogInvariant);
        assert_eq!("frobenius".parse::<MetricChoice>().unwrap(), MetricChoice::Frobenius);
        assert!("l2".parse::<MetricChoice>().is_err());
    }
}
