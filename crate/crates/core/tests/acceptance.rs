//! End-to-end acceptance checks. Runs as a plain binary so that every check
//! prints its own PASS/FAIL line; exits nonzero if any check fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use heightlab_core::enumeration::{brute_force_recount, cumulative_counts, enumerate_shell, enumerate_up_to};
use heightlab_core::experiments::{mean_square_profile, schmidt_experiment, DiscrepancySetup, SchmidtExperiment};
use heightlab_core::geometry::{
    ball_volume_arch, calibrate_haar, compare_metrics, covolume_cross_check, default_window, BallGrid,
    CalibrationOptions,
};
use heightlab_core::padic_volume::{sphere_volume, sphere_volume_oracle};
use heightlab_core::report::write_schmidt_csv;
use heightlab_core::{
    fit_exponent, ApproximationParams, BallVolumeTable, CongruenceCondition, Error, HaarCalibration, MetricChoice,
    PlaceSet, RealizableHeight, RegionE, Result, ShellQuery,
};

const SEED: u64 = 20240917;

struct Outcome {
    passed: bool,
    detail: String,
}

fn within(start: Instant, budget: Duration) -> bool {
    start.elapsed() < budget
}

fn sphere_oracle() -> Result<Outcome> {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    for p in [2u64, 3, 5, 7] {
        for k in 1..=3 {
            if sphere_volume(p, k) != sphere_volume_oracle(p, k)?.into() {
                mismatches.push(format!("p={p} k={k}"));
            }
        }
    }
    let passed = mismatches.is_empty() && within(start, Duration::from_secs(10));
    Ok(Outcome {
        passed,
        detail: format!("12 cases, mismatches {mismatches:?}, {:.2?}", start.elapsed()),
    })
}

fn enumeration_completeness() -> Result<Outcome> {
    let start = Instant::now();
    let s = PlaceSet::with_primes([2])?;
    let region = RegionE::norm_ball(3.0)?;
    let mut cells = Vec::new();
    let mut passed = true;
    for h in [1u64, 2, 4] {
        for w in [None, Some(CongruenceCondition::identity(3)?)] {
            let q = ShellQuery::new(s.clone(), RealizableHeight::from_value(h, &s)?, region.clone(), None, w)?;
            let fast = enumerate_shell(&q)?.len() as u64;
            let slow = brute_force_recount(&q)?;
            passed &= fast == slow;
            cells.push(format!("{fast}/{slow}"));
        }
    }
    passed &= within(start, Duration::from_secs(60));
    Ok(Outcome {
        passed,
        detail: format!("solver/oracle {}, {:.2?}", cells.join(" "), start.elapsed()),
    })
}

fn haar_calibration() -> Result<Outcome> {
    let start = Instant::now();
    let opts = CalibrationOptions {
        seed: SEED,
        ..Default::default()
    };
    let cal = calibrate_haar(&opts)?;
    let check = cal.cross_check.clone().expect("calibration records its check");
    let literal = covolume_cross_check(&HaarCalibration::with_kappa(3.0 / PI), 50.0, opts.samples, SEED)?;
    let passed = (0.9..=1.1).contains(&check.ratio) && within(start, Duration::from_secs(300));
    Ok(Outcome {
        passed,
        detail: format!(
            "R=50: {} points, ratio {:.4} with kappa={:.6} (ratio {:.4} with kappa=3/pi), {:.2?}",
            check.lattice_count,
            check.ratio,
            cal.kappa,
            literal.ratio,
            start.elapsed()
        ),
    })
}

fn ball_volume_scaling() -> Result<Outcome> {
    let start = Instant::now();
    let cal = HaarCalibration::analytic();
    let per_point = 1u64 << 20;
    let radii: Vec<f64> = (0..10).map(|i| 0.01 * 10f64.powf(i as f64 / 9.0)).collect();
    let pairs = radii
        .iter()
        .enumerate()
        .map(|(i, &r)| Ok((r, ball_volume_arch(r, MetricChoice::Frobenius, &cal, per_point, SEED + i as u64)?.value)))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_exponent(&pairs)?;
    let total = per_point * radii.len() as u64;
    Ok(Outcome {
        passed: (fit.slope - 3.0).abs() <= 0.1 && total >= 10_000_000,
        detail: format!("slope {:.4} (r2 {:.5}) over r in [0.01, 0.1], {total} samples, {:.2?}", fit.slope, fit.r_squared, start.elapsed()),
    })
}

fn metric_equivalence() -> Result<Outcome> {
    let start = Instant::now();
    let cmp = compare_metrics(3.0, 0.5, 10_000, SEED)?;
    Ok(Outcome {
        passed: cmp.constant() <= 2.0 && cmp.flagged == 0,
        detail: format!(
            "C = {:.4} (ratios in [{:.4}, {:.4}]), flagged {}, {} pairs, {:.2?}",
            cmp.constant(),
            cmp.min_ratio,
            cmp.max_ratio,
            cmp.flagged,
            cmp.n_pairs,
            start.elapsed()
        ),
    })
}

fn sphere_growth() -> Result<Outcome> {
    let pairs: Vec<(f64, f64)> = (1..=10)
        .map(|k| ((1u64 << k) as f64, sphere_volume(2, k).to_string().parse::<f64>().expect("integer")))
        .collect();
    let fit = fit_exponent(&pairs)?;
    Ok(Outcome {
        passed: (fit.slope - 2.0).abs() <= 0.01 && fit.r_squared > 0.999,
        detail: format!("slope {:.6}, r2 {:.6} over h = 2..2^10", fit.slope, fit.r_squared),
    })
}

fn schmidt_run(table: &BallVolumeTable, threads: usize) -> Result<(SchmidtExperiment, Vec<u8>)> {
    let s = PlaceSet::with_primes([2])?;
    let params = ApproximationParams::new(0.4, 1 << 7, MetricChoice::LogInvariant, &s)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    let exp = pool.install(|| schmidt_experiment(&s, &params, &default_window(), 20, SEED, table))?;
    let mut csv = Vec::new();
    write_schmidt_csv(&mut csv, "acceptance", &exp)?;
    Ok((exp, csv))
}

fn log_ball_table() -> Result<BallVolumeTable> {
    let grid = BallGrid {
        seed: SEED,
        ..Default::default()
    };
    BallVolumeTable::build(MetricChoice::LogInvariant, &HaarCalibration::analytic(), &grid)
}

fn schmidt(table: &BallVolumeTable) -> Result<Outcome> {
    let start = Instant::now();
    let (exp, _) = schmidt_run(table, rayon::current_num_threads())?;
    let ratios = exp.final_ratios();
    let good = ratios.iter().filter(|r| (0.7..=1.3).contains(*r)).count();
    let fit = exp.median_theta_fit()?;
    let passed = good * 5 >= ratios.len() * 4 && fit.slope <= 0.9 && within(start, Duration::from_secs(1800));
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(Outcome {
        passed,
        detail: format!(
            "{good}/{} ratios N_T/V_T in [0.7, 1.3] (range {lo:.3}..{hi:.3}), median |N_T - V_T| slope {:.3} vs V_T, predicted theta0 {:?}, {:.2?}",
            ratios.len(),
            fit.slope,
            exp.params.theta0(),
            start.elapsed()
        ),
    })
}

fn mean_square_decay() -> Result<Outcome> {
    let start = Instant::now();
    let s = PlaceSet::with_primes([2])?;
    let e = RegionE::ball_at_identity(0.5, MetricChoice::Frobenius)?;
    let setup = DiscrepancySetup::new(&s, e, None, &HaarCalibration::analytic(), 1 << 22, SEED)?;
    let heights: Vec<u64> = (1..=7).map(|k| 1u64 << k).collect();
    let (rows, _) = mean_square_profile(&setup, &heights, &default_window(), 10, SEED)?;
    let fit = fit_exponent(&rows.iter().map(|r| (r.v_s, r.rms)).collect::<Vec<_>>())?;
    Ok(Outcome {
        passed: fit.slope <= -0.1 && within(start, Duration::from_secs(1800)),
        detail: format!(
            "slope {:.3} of rms D vs v_S(h) (r2 {:.3}), rms D at 2^7 = {:.2e}, {:.2?}",
            fit.slope,
            fit.r_squared,
            rows.last().map_or(f64::NAN, |r| r.rms),
            start.elapsed()
        ),
    })
}

fn congruence_equidistribution() -> Result<Outcome> {
    let start = Instant::now();
    let s = PlaceSet::with_primes([2])?;
    let e = RegionE::ball_at_identity(1.0, MetricChoice::Frobenius)?;
    let w = CongruenceCondition::identity(3)?;
    let count = |w: Option<&CongruenceCondition>| -> Result<u64> {
        let shells = enumerate_up_to(&s, 1 << 7, &e, None, w)?;
        Ok(cumulative_counts(&shells).last().map_or(0, |c| c.1))
    };
    let full = count(None)?;
    let sub = count(Some(&w))?;
    let scaled = sub as f64 / full as f64 * 24.0;
    Ok(Outcome {
        passed: (0.75..=1.25).contains(&scaled) && within(start, Duration::from_secs(900)),
        detail: format!("{sub}/{full} points in W, ratio x 24 = {scaled:.4}, {:.2?}", start.elapsed()),
    })
}

fn determinism(table: &BallVolumeTable) -> Result<Outcome> {
    let start = Instant::now();
    let (_, one) = schmidt_run(table, 1)?;
    let (_, many) = schmidt_run(table, 4)?;
    Ok(Outcome {
        passed: one == many && !one.is_empty(),
        detail: format!("1 vs 4 threads, {} CSV bytes, identical = {}, {:.2?}", one.len(), one == many, start.elapsed()),
    })
}

fn main() -> ExitCode {
    let table = log_ball_table().map_err(|e| e.to_string());
    let checks: Vec<(&str, Box<dyn Fn() -> Result<Outcome>>)> = vec![
        ("sphere-volume oracle equivalence", Box::new(sphere_oracle)),
        ("enumeration completeness", Box::new(enumeration_completeness)),
        ("Haar calibration", Box::new(haar_calibration)),
        ("ball-volume scaling", Box::new(ball_volume_scaling)),
        ("metric equivalence", Box::new(metric_equivalence)),
        ("height-sphere growth", Box::new(sphere_growth)),
        ("Schmidt counting", Box::new(|| schmidt(table.as_ref().map_err(|e| Error::Config(e.clone()))?))),
        ("mean-square discrepancy decay", Box::new(mean_square_decay)),
        ("congruence equidistribution", Box::new(congruence_equidistribution)),
        ("determinism across thread counts", Box::new(|| determinism(table.as_ref().map_err(|e| Error::Config(e.clone()))?))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in checks.iter().enumerate() {
        let (passed, detail) = match run() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failed += 1;
        }
        println!("criterion {:>2} {}: {name}: {detail}", i + 1, if passed { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of {} passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
