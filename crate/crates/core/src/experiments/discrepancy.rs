use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumeration::{cumulative_counts, enumerate_up_to};
use crate::error::{Error, Result};
use crate::geometry::{
    haar_points, BallVolumeTable, HaarCalibration, IwasawaBox, RealPoint, RegionE,
};
use crate::heights::{realizable_heights, PlaceSet};
use crate::padic_volume::{ball_volume_padic, big_to_f64, congruence_measure, CongruenceCondition};
use crate::sampling::VolumeEstimate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    MeanSquare,
    AlmostSure,
    Uniform,
    SmallBall,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::MeanSquare => "mean_square",
            Regime::AlmostSure => "almost_sure",
            Regime::Uniform => "uniform",
            Regime::SmallBall => "small_ball",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `D = |count / v_S(h) - m_inf(E) m^S(W)|` with everything needed to redo
/// the arithmetic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyRecord {
    pub h: u64,
    pub count: u64,
    pub v_s: f64,
    pub main_term: f64,
    pub d: f64,
    pub envelope: Option<f64>,
    pub regime: Regime,
    pub seed: u64,
    /// Index of the Haar sample `x` the record belongs to, if any.
    pub sample: Option<usize>,
}

impl DiscrepancyRecord {
    pub fn new(h: u64, count: u64, v_s: f64, main_term: f64, regime: Regime, seed: u64) -> Self {
        Self {
            h,
            count,
            v_s,
            main_term,
            d: (count as f64 / v_s - main_term).abs(),
            envelope: None,
            regime,
            seed,
            sample: None,
        }
    }

    pub fn normalized_count(&self) -> f64 {
        self.count as f64 / self.v_s
    }
}

/// `(log v)^{3/2 + eta} v^{-kappa}`.
pub fn envelope(v: f64, kappa: f64, eta: f64) -> f64 {
    v.ln().max(0.0).powf(1.5 + eta) * v.powf(-kappa)
}

/// `1 - 2 kappa / (d + 2)`.
pub fn uniform_error_exponent(kappa: f64, d: u32) -> f64 {
    1.0 - 2.0 * kappa / (d as f64 + 2.0)
}

/// `m(B)^{d/(d+2)} m(W)^{(d+1)/(d+2)} v^{1 - 2 kappa/(d+2)}`.
pub fn uniform_error_scale(m_ball: f64, m_w: f64, v: f64, kappa: f64, d: u32) -> f64 {
    let d = d as f64;
    m_ball.powf(d / (d + 2.0)) * m_w.powf((d + 1.0) / (d + 2.0)) * v.powf(1.0 - 2.0 * kappa / (d + 2.0))
}

/// `m(B)^2 m(W) >= v^{-2 kappa}`.
pub fn is_admissible(m_ball: f64, m_w: f64, v: f64, kappa: f64) -> bool {
    m_ball * m_ball * m_w >= v.powf(-2.0 * kappa)
}

/// A region and congruence class with their measures precomputed.
#[derive(Clone, Debug)]
pub struct DiscrepancySetup {
    pub place_set: PlaceSet,
    pub region: RegionE,
    pub congruence: Option<CongruenceCondition>,
    pub m_inf: VolumeEstimate,
    pub m_w: f64,
    pub seed: u64,
}

impl DiscrepancySetup {
    pub fn new(
        s: &PlaceSet,
        region: RegionE,
        congruence: Option<CongruenceCondition>,
        cal: &HaarCalibration,
        volume_samples: u64,
        seed: u64,
    ) -> Result<Self> {
        let m_w = match &congruence {
            Some(w) => congruence_measure(w, s)?.to_f64(),
            None => 1.0,
        };
        let m_inf = region.volume(cal, volume_samples, seed)?;
        Ok(Self {
            place_set: s.clone(),
            region,
            congruence,
            m_inf,
            m_w,
            seed,
        })
    }

    pub fn main_term(&self) -> f64 {
        self.m_inf.value * self.m_w
    }

    /// Cumulative `|R_S(h) ∩ E x ∩ W|` at every realizable `h <= max_h`.
    pub fn counts(&self, x: Option<&RealPoint>, max_h: u64) -> Result<Vec<(u64, u64)>> {
        let shells = enumerate_up_to(&self.place_set, max_h, &self.region, x, self.congruence.as_ref())?;
        Ok(cumulative_counts(&shells))
    }

    fn records(&self, x: Option<&RealPoint>, heights: &[u64], regime: Regime) -> Result<Vec<DiscrepancyRecord>> {
        let max_h = heights.iter().copied().max().unwrap_or(0);
        let counts = self.counts(x, max_h)?;
        heights
            .iter()
            .map(|&h| {
                if h < 1 {
                    return Err(Error::Domain("height must be at least 1".into()));
                }
                let count = counts.iter().take_while(|(k, _)| *k <= h).last().map_or(0, |c| c.1);
                let v = big_to_f64(&ball_volume_padic(&self.place_set, h));
                Ok(DiscrepancyRecord::new(h, count, v, self.main_term(), regime, self.seed))
            })
            .collect()
    }
}

/// Discrepancy of `R_S(h)` in `E x × W` for one `x` (`None` is the identity).
pub fn discrepancy(
    setup: &DiscrepancySetup,
    h: u64,
    x: Option<&RealPoint>,
    regime: Regime,
) -> Result<DiscrepancyRecord> {
    Ok(setup.records(x, &[h], regime)?.remove(0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSquareRow {
    pub h: u64,
    pub v_s: f64,
    /// Root of the sample mean of `D^2`.
    pub rms: f64,
    pub n_samples: usize,
}

/// Root-mean-square discrepancy over Haar-random `x` in `window` at each
/// height, together with the per-sample records.
pub fn mean_square_profile(
    setup: &DiscrepancySetup,
    heights: &[u64],
    window: &IwasawaBox,
    n_samples: usize,
    seed: u64,
) -> Result<(Vec<MeanSquareRow>, Vec<DiscrepancyRecord>)> {
    if n_samples == 0 {
        return Err(Error::Domain("need at least one x sample".into()));
    }
    let per_x = haar_points(window, n_samples, seed)
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut recs = setup.records(Some(x), heights, Regime::MeanSquare)?;
            for r in &mut recs {
                r.seed = seed;
                r.sample = Some(i);
            }
            Ok(recs)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = heights
        .iter()
        .enumerate()
        .map(|(j, &h)| {
            let sq: f64 = per_x.iter().map(|recs| recs[j].d * recs[j].d).sum();
            MeanSquareRow {
                h,
                v_s: per_x[0][j].v_s,
                rms: (sq / n_samples as f64).sqrt(),
                n_samples,
            }
        })
        .collect();
    Ok((rows, per_x.into_iter().flatten().collect()))
}

pub fn mean_square_discrepancy(
    setup: &DiscrepancySetup,
    h: u64,
    window: &IwasawaBox,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    Ok(mean_square_profile(setup, &[h], window, n_samples, seed)?.0[0].rms)
}

/// `D` at every realizable `h <= max_h` for one fixed `x`, with the envelope.
pub fn almost_sure_trajectory(
    setup: &DiscrepancySetup,
    x: &RealPoint,
    max_h: u64,
    eta: f64,
) -> Result<Vec<DiscrepancyRecord>> {
    let heights: Vec<u64> = realizable_heights(&setup.place_set, max_h)
        .iter()
        .map(|h| h.value())
        .collect();
    let kappa = setup.place_set.spectral_kappa();
    let mut recs = setup.records(Some(x), &heights, Regime::AlmostSure)?;
    for r in &mut recs {
        r.envelope = Some(envelope(r.v_s, kappa, eta));
    }
    Ok(recs)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Radii at or above this are reported as out of regime.
    pub ell0: f64,
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { ell0: 0.5, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub x_index: usize,
    pub ell: f64,
    pub record: DiscrepancyRecord,
    /// `m(B(e, ell)) m^S(W) v_S(h)`.
    pub predicted_count: f64,
    pub error_scale: f64,
    pub admissible: bool,
    pub in_regime: bool,
}

/// Counts in `B(x, ell) × W` at height `h` for every `(x, ell)`.
pub fn uniform_discrepancy_sweep(
    s: &PlaceSet,
    xs: &[RealPoint],
    ells: &[f64],
    congruence: Option<&CongruenceCondition>,
    h: u64,
    table: &BallVolumeTable,
    opts: &SweepOptions,
) -> Result<Vec<SweepRecord>> {
    let m_w = match congruence {
        Some(w) => congruence_measure(w, s)?.to_f64(),
        None => 1.0,
    };
    let v = big_to_f64(&ball_volume_padic(s, h));
    let kappa = s.spectral_kappa();
    let d = s.dim_d();
    let jobs: Vec<(usize, f64)> = ells
        .iter()
        .flat_map(|&ell| (0..xs.len()).map(move |i| (i, ell)))
        .collect();
    jobs.par_iter()
        .map(|&(i, ell)| {
            let m_ball = table.volume(ell)?;
            let region = RegionE::metric_ball(xs[i], ell, table.metric)?;
            let shells = enumerate_up_to(s, h, &region, None, congruence)?;
            let count = cumulative_counts(&shells).last().map_or(0, |c| c.1);
            let admissible = is_admissible(m_ball, m_w, v, kappa);
            let regime = if admissible { Regime::Uniform } else { Regime::SmallBall };
            let mut record = DiscrepancyRecord::new(h, count, v, m_ball * m_w, regime, opts.seed);
            record.sample = Some(i);
            Ok(SweepRecord {
                x_index: i,
                ell,
                record,
                predicted_count: m_ball * m_w * v,
                error_scale: uniform_error_scale(m_ball, m_w, v, kappa, d),
                admissible,
                in_regime: ell < opts.ell0,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{default_window, region_inner_outer, MetricChoice};

    fn s2() -> PlaceSet {
        PlaceSet::with_primes([2]).unwrap()
    }

    fn setup(radius: f64, w: Option<CongruenceCondition>) -> DiscrepancySetup {
        let e = RegionE::ball_at_identity(radius, MetricChoice::Frobenius).unwrap();
        DiscrepancySetup::new(&s2(), e, w, &HaarCalibration::analytic(), 1 << 17, 1).unwrap()
    }

    #[test]
    fn record_is_reconstructible() {
        let r = DiscrepancyRecord::new(4, 10, 31.0, 0.2, Regime::MeanSquare, 0);
        assert_eq!(r.d, (10.0 / 31.0 - 0.2f64).abs());
        assert_eq!(r.regime.to_string(), "mean_square");
    }

    #[test]
    fn empty_region_gives_main_term() {
        let far = RegionE::metric_ball("8,0;0,1/8".parse().unwrap(), 0.05, MetricChoice::Frobenius).unwrap();
        let st = DiscrepancySetup::new(&s2(), far, None, &HaarCalibration::analytic(), 1 << 16, 2).unwrap();
        let r = discrepancy(&st, 4, None, Regime::MeanSquare).unwrap();
        assert_eq!(r.count, 0);
        assert_eq!(r.d, r.main_term);
        assert_eq!(st.m_w, 1.0);
    }

    #[test]
    fn discrepancy_shrinks_with_height() {
        let st = setup(0.5, None);
        let lo = discrepancy(&st, 8, None, Regime::MeanSquare).unwrap();
        let hi = discrepancy(&st, 128, None, Regime::MeanSquare).unwrap();
        assert!(hi.d < lo.d, "D(2^7) = {} vs D(2^3) = {}", hi.d, lo.d);
    }

    #[test]
    fn congruence_subset_counts_less() {
        let full = setup(1.0, None);
        let w = setup(1.0, Some(CongruenceCondition::identity(3).unwrap()));
        let a = discrepancy(&full, 16, None, Regime::MeanSquare).unwrap();
        let b = discrepancy(&w, 16, None, Regime::MeanSquare).unwrap();
        assert!(b.count <= a.count);
        assert!(w.m_w <= full.m_w);
        assert!((w.m_w - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn inner_outer_bracket_the_count() {
        let e = RegionE::ball_at_identity(0.5, MetricChoice::LogInvariant).unwrap();
        let (inner, outer) = region_inner_outer(&e, 0.05).unwrap();
        let x: RealPoint = "1,1/3;0,1".parse().unwrap();
        let count = |r: &RegionE| {
            let shells = enumerate_up_to(&s2(), 32, r, Some(&x), None).unwrap();
            cumulative_counts(&shells).last().unwrap().1
        };
        let (a, b, c) = (count(&inner), count(&e), count(&outer));
        assert!(a <= b && b <= c, "{a} {b} {c}");
    }

    #[test]
    fn mean_square_single_sample_is_single_discrepancy() {
        let st = setup(0.5, None);
        let w = default_window();
        let rms = mean_square_discrepancy(&st, 8, &w, 1, 5).unwrap();
        let x = haar_points(&w, 1, 5)[0];
        let d = discrepancy(&st, 8, Some(&x), Regime::MeanSquare).unwrap().d;
        assert!((rms - d).abs() < 1e-15);
        assert_eq!(rms, mean_square_discrepancy(&st, 8, &w, 1, 5).unwrap());
    }

    #[test]
    fn trajectory_has_no_gaps() {
        let st = setup(0.5, None);
        let x: RealPoint = "1/2,0;0,2".parse().unwrap();
        let recs = almost_sure_trajectory(&st, &x, 64, 0.1).unwrap();
        assert_eq!(recs.iter().map(|r| r.h).collect::<Vec<_>>(), vec![1, 2, 4, 8, 16, 32, 64]);
        for r in &recs {
            assert_eq!(r.envelope, Some(r.v_s.ln().powf(1.6) * r.v_s.powf(-0.5)));
        }
    }

    #[test]
    fn admissibility_and_error_exponent() {
        let st = setup(0.5, None);
        assert!(is_admissible(st.m_inf.value, 1.0, 31.0, 0.5));
        assert!(!is_admissible(1e-3, 1.0, 31.0, 0.5));
        assert!((uniform_error_exponent(0.5, 3) - 0.8).abs() < 1e-15);
        let e1 = uniform_error_scale(0.2, 1.0, 100.0, 0.5, 3);
        let e2 = uniform_error_scale(0.2, 1.0, 200.0, 0.5, 3);
        assert!(((e2 / e1).ln() / 2f64.ln() - 0.8).abs() < 1e-12);
    }
}
