use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ApproximationParams;
use crate::enumeration::{enumerate_shell, ShellQuery};
use crate::error::{Error, Result};
use crate::fit::{fit_exponent, PowerLawFit};
use crate::geometry::{haar_points, BallVolumeTable, IwasawaBox, RealPoint, RegionE};
use crate::heights::{realizable_heights, PlaceSet};
use crate::padic_volume::{big_to_f64, sphere_volume_product};

/// `(T, N_T(x))` for every realizable `T <= params.t`.
pub fn count_nt(x: &RealPoint, params: &ApproximationParams, s: &PlaceSet) -> Result<Vec<(u64, u64)>> {
    let mut acc = 0;
    realizable_heights(s, params.t)
        .into_iter()
        .map(|h| {
            let region = RegionE::metric_ball(*x, params.radius(h.value()), params.metric)?;
            let q = ShellQuery::new(s.clone(), h.clone(), region, None, None)?;
            acc += enumerate_shell(&q)?.len() as u64;
            Ok((h.value(), acc))
        })
        .collect()
}

/// `(T, V_T)` for every realizable `T <= params.t`; independent of `x`.
pub fn volume_sum_vt(params: &ApproximationParams, s: &PlaceSet, table: &BallVolumeTable) -> Result<Vec<(u64, f64)>> {
    if table.metric != params.metric {
        return Err(Error::Config(format!(
            "ball-volume table is for the {} metric, run uses {}",
            table.metric.as_str(),
            params.metric.as_str()
        )));
    }
    let mut acc = 0.0;
    realizable_heights(s, params.t)
        .into_iter()
        .map(|h| {
            acc += table.volume(params.radius(h.value()))? * big_to_f64(&sphere_volume_product(&h));
            Ok((h.value(), acc))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchmidtRow {
    pub t: u64,
    pub n_t: u64,
    pub v_t: f64,
    pub diff: f64,
    /// Slope of `log|N_T - V_T|` against `log V_T` over the rows so far.
    pub theta_fit_so_far: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchmidtResult {
    pub x: RealPoint,
    pub rows: Vec<SchmidtRow>,
    pub fitted_theta: Option<f64>,
    pub predicted_theta0: Option<f64>,
}

fn theta_fit(rows: &[SchmidtRow]) -> Option<PowerLawFit> {
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.v_t > 0.0 && r.diff != 0.0)
        .map(|r| (r.v_t, r.diff.abs()))
        .collect();
    fit_exponent(&pairs).ok()
}

/// Both sides of the counting comparison at one `x`.
pub fn schmidt_rows(
    x: &RealPoint,
    params: &ApproximationParams,
    s: &PlaceSet,
    table: &BallVolumeTable,
) -> Result<SchmidtResult> {
    let vt = volume_sum_vt(params, s, table)?;
    let nt = count_nt(x, params, s)?;
    let mut rows: Vec<SchmidtRow> = Vec::with_capacity(vt.len());
    for (&(t, n_t), &(_, v_t)) in nt.iter().zip(&vt) {
        let mut row = SchmidtRow {
            t,
            n_t,
            v_t,
            diff: n_t as f64 - v_t,
            theta_fit_so_far: None,
        };
        rows.push(row);
        row.theta_fit_so_far = theta_fit(&rows).map(|f| f.slope);
        *rows.last_mut().expect("just pushed") = row;
    }
    Ok(SchmidtResult {
        x: *x,
        fitted_theta: rows.last().and_then(|r| r.theta_fit_so_far),
        rows,
        predicted_theta0: params.theta0(),
    })
}

/// The counting comparison over Haar-random `x` in a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchmidtExperiment {
    pub params: ApproximationParams,
    pub seed: u64,
    pub samples: Vec<SchmidtResult>,
}

impl SchmidtExperiment {
    /// `N_T / V_T` at the largest `T`, per sample.
    pub fn final_ratios(&self) -> Vec<f64> {
        self.samples
            .iter()
            .filter_map(|s| s.rows.last())
            .map(|r| r.n_t as f64 / r.v_t)
            .collect()
    }

    /// `(T, V_T, median over samples of |N_T - V_T|)`.
    pub fn median_abs_diff(&self) -> Vec<(u64, f64, f64)> {
        let Some(first) = self.samples.first() else {
            return Vec::new();
        };
        (0..first.rows.len())
            .map(|i| {
                let mut d: Vec<f64> = self.samples.iter().map(|s| s.rows[i].diff.abs()).collect();
                (first.rows[i].t, first.rows[i].v_t, median(&mut d))
            })
            .collect()
    }

    /// Slope of the median `|N_T - V_T|` against `V_T`, the empirical theta.
    pub fn median_theta_fit(&self) -> Result<PowerLawFit> {
        let pairs: Vec<(f64, f64)> = self
            .median_abs_diff()
            .into_iter()
            .filter(|&(_, v, m)| v > 0.0 && m > 0.0)
            .map(|(_, v, m)| (v, m))
            .collect();
        fit_exponent(&pairs)
    }
}

pub(crate) fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

pub fn schmidt_experiment(
    s: &PlaceSet,
    params: &ApproximationParams,
    window: &IwasawaBox,
    n_samples: usize,
    seed: u64,
    table: &BallVolumeTable,
) -> Result<SchmidtExperiment> {
    let samples = haar_points(window, n_samples, seed)
        .par_iter()
        .map(|x| schmidt_rows(x, params, s, table))
        .collect::<Result<Vec<_>>>()?;
    Ok(SchmidtExperiment {
        params: params.clone(),
        seed,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::brute_force_recount;
    use crate::geometry::{BallGrid, HaarCalibration, MetricChoice};
    use crate::heights::RealizableHeight;

    fn s2() -> PlaceSet {
        PlaceSet::with_primes([2]).unwrap()
    }

    fn small_table(metric: MetricChoice) -> BallVolumeTable {
        let grid = BallGrid {
            r_min: 0.05,
            r_max: 1.0,
            points: 10,
            samples_per_point: 1 << 16,
            seed: 3,
        };
        BallVolumeTable::build(metric, &HaarCalibration::analytic(), &grid).unwrap()
    }

    #[test]
    fn nt_sees_x_itself() {
        let x: RealPoint = "1/2,0;0,2".parse().unwrap();
        let p = ApproximationParams::new(0.4, 16, MetricChoice::LogInvariant, &s2()).unwrap();
        let nt = count_nt(&x, &p, &s2()).unwrap();
        assert!(nt.iter().filter(|(t, _)| *t >= 2).all(|&(_, n)| n >= 1));
        assert!(nt.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn nt_matches_brute_force() {
        let x = RealPoint::identity();
        let p = ApproximationParams::new(0.5, 4, MetricChoice::Frobenius, &s2()).unwrap();
        let nt = count_nt(&x, &p, &s2()).unwrap();
        let mut acc = 0;
        for (t, n) in nt {
            let h = RealizableHeight::from_value(t, &s2()).unwrap();
            let region = RegionE::metric_ball(x, p.radius(t), p.metric).unwrap();
            acc += brute_force_recount(&ShellQuery::new(s2(), h, region, None, None).unwrap()).unwrap();
            assert_eq!(n, acc);
        }
    }

    #[test]
    fn vt_is_composed_from_components() {
        let table = small_table(MetricChoice::Frobenius);
        let p = ApproximationParams::new(0.5, 2, MetricChoice::Frobenius, &s2()).unwrap();
        let vt = volume_sum_vt(&p, &s2(), &table).unwrap();
        let want = table.volume(1.0).unwrap() + table.volume(0.5f64.sqrt()).unwrap() * 6.0;
        assert_eq!(vt.len(), 2);
        assert!((vt[1].1 - want).abs() < 1e-12 * want);

        let log = ApproximationParams::new(0.5, 2, MetricChoice::LogInvariant, &s2()).unwrap();
        assert!(matches!(volume_sum_vt(&log, &s2(), &table), Err(Error::Config(_))));
        let far = ApproximationParams::new(0.5, 1 << 12, MetricChoice::Frobenius, &s2()).unwrap();
        assert!(matches!(volume_sum_vt(&far, &s2(), &table), Err(Error::Range(_))));
    }

    #[test]
    fn vt_grows_at_least_like_the_lower_bound() {
        let table = small_table(MetricChoice::Frobenius);
        let p = ApproximationParams::new(0.4, 256, MetricChoice::Frobenius, &s2()).unwrap();
        let vt = volume_sum_vt(&p, &s2(), &table).unwrap();
        let pairs: Vec<(f64, f64)> = vt.iter().skip(2).map(|&(t, v)| (t as f64, v)).collect();
        let fit = fit_exponent(&pairs).unwrap();
        // a - b d = 0.8
        assert!((fit.slope - 0.8).abs() < 0.15, "slope {}", fit.slope);
        assert!(vt.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn experiment_is_deterministic() {
        let table = small_table(MetricChoice::LogInvariant);
        let p = ApproximationParams::new(0.4, 8, MetricChoice::LogInvariant, &s2()).unwrap();
        let w = crate::geometry::default_window();
        let a = schmidt_experiment(&s2(), &p, &w, 3, 9, &table).unwrap();
        let b = schmidt_experiment(&s2(), &p, &w, 3, 9, &table).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.final_ratios().len(), 3);
        assert_eq!(a.median_abs_diff().len(), 4);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&mut []).is_nan());
    }
}
