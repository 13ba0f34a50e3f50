//! Calibrated Haar volumes of metric balls `B(e, r)` and a cached table of
//! them on a log-spaced radius grid.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::haar::HaarCalibration;
use super::metric::MetricChoice;
use super::region::RegionE;
use crate::error::{Error, Result};
use crate::sampling::VolumeEstimate;

/// Largest radius served by default.
pub const DEFAULT_R_MAX: f64 = 1.0;
pub const DEFAULT_R_MIN: f64 = 0.005;

/// Monte Carlo estimate of `m_inf(B(e, r))`.
pub fn ball_volume_arch(
    r: f64,
    metric: MetricChoice,
    cal: &HaarCalibration,
    samples: u64,
    seed: u64,
) -> Result<VolumeEstimate> {
    if r == 0.0 {
        return Ok(VolumeEstimate::exact(0.0));
    }
    if !(r > 0.0 && r <= DEFAULT_R_MAX) {
        return Err(Error::Range(format!(
            "ball radius {r} outside (0, {DEFAULT_R_MAX}]"
        )));
    }
    RegionE::ball_at_identity(r, metric)?.volume(cal, samples, seed)
}

/// One grid point of a [`BallVolumeTable`]; also the CSV row layout.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallVolumeRow {
    pub r: f64,
    pub volume: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

/// Ball volumes on a log-spaced grid, interpolated linearly in log-log.
#[derive(Clone, Debug, PartialEq)]
pub struct BallVolumeTable {
    pub metric: MetricChoice,
    rows: Vec<BallVolumeRow>,
}

/// Grid layout and sampling budget for [`BallVolumeTable::build`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
    pub samples_per_point: u64,
    pub seed: u64,
}

impl Default for BallGrid {
    fn default() -> Self {
        Self {
            r_min: DEFAULT_R_MIN,
            r_max: DEFAULT_R_MAX,
            points: 25,
            samples_per_point: 1 << 19,
            seed: 0xba11,
        }
    }
}

impl BallVolumeTable {
    pub fn build(metric: MetricChoice, cal: &HaarCalibration, grid: &BallGrid) -> Result<Self> {
        if !(grid.r_min > 0.0 && grid.r_min < grid.r_max && grid.r_max <= DEFAULT_R_MAX) || grid.points < 2 {
            return Err(Error::Config(format!("invalid ball-volume grid {grid:?}")));
        }
        let step = (grid.r_max / grid.r_min).ln() / (grid.points - 1) as f64;
        let rows = (0..grid.points)
            .map(|i| {
                let r = if i + 1 == grid.points {
                    grid.r_max
                } else {
                    grid.r_min * (step * i as f64).exp()
                };
                let seed = grid.seed.wrapping_add(i as u64);
                let v = ball_volume_arch(r, metric, cal, grid.samples_per_point, seed)?;
                Ok(BallVolumeRow {
                    r,
                    volume: v.value,
                    stderr: v.stderr,
                    n_samples: v.n_samples,
                    seed,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(metric, rows)
    }

    pub fn from_rows(metric: MetricChoice, rows: Vec<BallVolumeRow>) -> Result<Self> {
        if rows.len() < 2 || rows.windows(2).any(|w| w[0].r >= w[1].r) {
            return Err(Error::Config("ball-volume table needs >= 2 increasing radii".into()));
        }
        if rows.iter().any(|r| !(r.volume > 0.0)) {
            return Err(Error::Config("ball-volume table has a non-positive volume".into()));
        }
        Ok(Self { metric, rows })
    }

    pub fn rows(&self) -> &[BallVolumeRow] {
        &self.rows
    }

    pub fn range(&self) -> (f64, f64) {
        (self.rows[0].r, self.rows[self.rows.len() - 1].r)
    }

    /// Interpolated `m_inf(B(e, r))`; refuses to extrapolate.
    pub fn volume(&self, r: f64) -> Result<f64> {
        if r == 0.0 {
            return Ok(0.0);
        }
        let (lo, hi) = self.range();
        let tol = 1e-12 * hi;
        if !(r >= lo - tol && r <= hi + tol) {
            return Err(Error::Range(format!(
                "radius {r} outside the cached ball-volume table [{lo}, {hi}]"
            )));
        }
        let r = r.clamp(lo, hi);
        let k = self.rows.partition_point(|row| row.r < r).clamp(1, self.rows.len() - 1);
        let (a, b) = (&self.rows[k - 1], &self.rows[k]);
        let t = (r.ln() - a.r.ln()) / (b.r.ln() - a.r.ln());
        Ok((a.volume.ln() + t * (b.volume.ln() - a.volume.ln())).exp())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for row in &self.rows {
            wtr.serialize(row)?;
        }
        wtr.flush().map_err(|e| Error::io("ball-volume table", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(metric: MetricChoice, r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<BallVolumeRow>, _>>()?;
        Self::from_rows(metric, rows)
    }
}
