use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arith::RationalMatrix;
use crate::error::{Error, Result};

pub type Mat2 = [[f64; 2]; 2];

pub(crate) fn mat_mul(x: &Mat2, y: &Mat2) -> Mat2 {
    [
        [
            x[0][0] * y[0][0] + x[0][1] * y[1][0],
            x[0][0] * y[0][1] + x[0][1] * y[1][1],
        ],
        [
            x[1][0] * y[0][0] + x[1][1] * y[1][0],
            x[1][0] * y[0][1] + x[1][1] * y[1][1],
        ],
    ]
}

pub(crate) fn mat_sub(x: &Mat2, y: &Mat2) -> Mat2 {
    [
        [x[0][0] - y[0][0], x[0][1] - y[0][1]],
        [x[1][0] - y[1][0], x[1][1] - y[1][1]],
    ]
}

pub(crate) fn frobenius(x: &Mat2) -> f64 {
    x.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest singular value.
pub(crate) fn operator_norm(x: &Mat2) -> f64 {
    let f2 = x.iter().flatten().map(|v| v * v).sum::<f64>();
    let det = x[0][0] * x[1][1] - x[0][1] * x[1][0];
    let disc = (f2 * f2 - 4.0 * det * det).max(0.0).sqrt();
    ((f2 + disc) / 2.0).sqrt()
}

fn det(x: &Mat2) -> f64 {
    x[0][0] * x[1][1] - x[0][1] * x[1][0]
}

/// A point of `SL2(R)`.
///
/// Arithmetic re-projects onto `det = 1` by dividing by `sqrt(det)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealPoint(Mat2);

/// Inputs further than this from `det = 1` are rejected rather than projected.
pub const INPUT_DET_TOLERANCE: f64 = 1e-6;
/// Drift tolerated after projection.
pub const DET_TOLERANCE: f64 = 1e-9;

impl RealPoint {
    pub fn new(m: Mat2) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite matrix entry in {m:?}")));
        }
        let d = det(&m);
        if (d - 1.0).abs() > INPUT_DET_TOLERANCE * (1.0 + frobenius(&m).powi(2)) {
            return Err(Error::Domain(format!("determinant {d} is not 1")));
        }
        Ok(Self::project(m))
    }

    /// Rescales a matrix of positive determinant onto `SL2(R)`.
    pub(crate) fn project(m: Mat2) -> Self {
        let d = det(&m);
        if (d - 1.0).abs() <= DET_TOLERANCE {
            return Self(m);
        }
        let s = d.sqrt().recip();
        Self(m.map(|r| r.map(|v| v * s)))
    }

    pub fn identity() -> Self {
        Self([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn diag(t: f64) -> Self {
        Self([[t, 0.0], [0.0, 1.0 / t]])
    }

    pub fn from_rational(m: &RationalMatrix) -> Result<Self> {
        Self::new(m.to_f64())
    }

    pub fn entries(&self) -> &Mat2 {
        &self.0
    }

    pub fn det(&self) -> f64 {
        det(&self.0)
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Self::project(mat_mul(&self.0, &rhs.0))
    }

    /// Exact adjugate inverse.
    pub fn inverse(&self) -> Self {
        let [[a, b], [c, d]] = self.0;
        Self([[d, -b], [-c, a]])
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.0)
    }

    pub fn operator_norm(&self) -> f64 {
        operator_norm(&self.0)
    }

    pub fn iwasawa(&self) -> Iwasawa {
        Iwasawa::of(self)
    }
}

impl Default for RealPoint {
    fn default() -> Self {
        Self::identity()
    }
}

impl fmt::Display for RealPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [[a, b], [c, d]] = self.0;
        write!(f, "{a},{b};{c},{d}")
    }
}

impl FromStr for RealPoint {
    type Err = Error;

    /// `a,b;c,d` with decimal or `n/d` entries.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| -> Result<f64> {
            let t = t.trim();
            match t.split_once('/') {
                Some((n, d)) => {
                    let n: f64 = n.trim().parse().map_err(|_| Error::Parse(format!("bad entry {t:?}")))?;
                    let d: f64 = d.trim().parse().map_err(|_| Error::Parse(format!("bad entry {t:?}")))?;
                    Ok(n / d)
                }
                None => t.parse().map_err(|_| Error::Parse(format!("bad entry {t:?}"))),
            }
        };
        let rows: Vec<&str> = s.split(';').collect();
        if rows.len() != 2 {
            return Err(Error::Parse(format!("expected 'a,b;c,d', got {s:?}")));
        }
        let mut m = [[0.0; 2]; 2];
        for (i, row) in rows.iter().enumerate() {
            let cells: Vec<&str> = row.split(',').collect();
            if cells.len() != 2 {
                return Err(Error::Parse(format!("expected 'a,b;c,d', got {s:?}")));
            }
            for (j, cell) in cells.iter().enumerate() {
                m[i][j] = parse(cell)?;
            }
        }
        Self::new(m)
    }
}

/// Iwasawa coordinates `g = n(x) a(y) k(theta)` with
/// `n(x) = [[1, x], [0, 1]]`, `a(y) = diag(sqrt y, 1/sqrt y)` and
/// `k(theta)` the rotation by `theta`.
///
/// Haar measure in these coordinates is `dx dy / y^2 dtheta / 2pi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Iwasawa {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Iwasawa {
    pub fn of(g: &RealPoint) -> Self {
        let [[a, b], [c, d]] = g.0;
        let n2 = c * c + d * d;
        Self {
            x: (a * c + b * d) / n2,
            y: 1.0 / n2,
            theta: c.atan2(d).rem_euclid(TAU),
        }
    }

    pub fn point(&self) -> RealPoint {
        let sy = self.y.sqrt();
        let (s, c) = self.theta.sin_cos();
        RealPoint([
            [sy * c + self.x * s / sy, -sy * s + self.x * c / sy],
            [s / sy, c / sy],
        ])
    }
}
