use anyhow::{bail, Context};
use heightlab_core::enumeration::ShellCache;
use heightlab_core::experiments::{
    almost_sure_trajectory, count_nt, mean_square_profile, schmidt_experiment, uniform_discrepancy_sweep,
    DiscrepancySetup, SweepOptions,
};
use heightlab_core::fit_exponent;
use heightlab_core::geometry::{calibrate_haar, default_window, haar_points, BallGrid, CalibrationOptions};
use heightlab_core::padic_volume::growth_exponent_a;
use heightlab_core::report;
use heightlab_core::selftest::{run_selftest, SelftestOptions};
use heightlab_core::{
    ApproximationParams, BallVolumeTable, HaarCalibration, MetricChoice, RealizableHeight, RegionE, ShellQuery,
    SphereVolumeTable,
};
use serde_json::{json, Value};

use crate::manifest::{sha256_hex, Run};

/// Outcome of a verb: a JSON summary and whether every oracle agreed.
pub struct Outcome {
    pub summary: Value,
    pub ok: bool,
}

impl From<Value> for Outcome {
    fn from(summary: Value) -> Self {
        Self { summary, ok: true }
    }
}

fn ball_table(run: &mut Run, metric: MetricChoice) -> anyhow::Result<BallVolumeTable> {
    let grid = BallGrid {
        seed: run.cfg.seed,
        ..Default::default()
    };
    let table = BallVolumeTable::build(metric, &HaarCalibration::analytic(), &grid)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    run.record_cache(format!("ball_volumes_{}", metric.as_str()), sha256_hex(&buf));
    Ok(table)
}

pub fn calibrate(run: &mut Run) -> anyhow::Result<Outcome> {
    let opts = CalibrationOptions {
        radius: run.cfg.first_radius()?,
        samples: run.cfg.samples,
        seed: run.cfg.seed,
        ..Default::default()
    };
    let cal = calibrate_haar(&opts)?;
    let id = run.run_id.clone();
    let record = json!({ "manifest": id, "calibration": cal });
    run.write("calibration.json", |buf, _| {
        serde_json::to_writer_pretty(&mut *buf, &record)?;
        buf.push(b'\n');
        Ok(())
    })?;
    let metric = run.cfg.metric;
    let table = ball_table(run, metric)?;
    run.write(&format!("ball_volumes_{}.csv", metric.as_str()), |buf, id| {
        report::write_ball_table_csv(buf, id, &table)
    })?;
    Ok(json!({ "calibration": cal }).into())
}

pub fn volumes(run: &mut Run) -> anyhow::Result<Outcome> {
    let s = run.cfg.place_set()?;
    let table = SphereVolumeTable::build(&s, run.cfg.max_height);
    run.write("volumes.csv", |buf, id| report::write_volumes_csv(buf, id, &table))?;
    let a = growth_exponent_a(&s, run.cfg.max_height).ok();
    Ok(json!({ "rows": table.rows().count(), "fitted_a": a, "exact_a": 2.0 }).into())
}

pub fn enumerate(run: &mut Run) -> anyhow::Result<Outcome> {
    let s = run.cfg.place_set()?;
    let Some(h) = run.cfg.height else {
        bail!("height: required for enumerate");
    };
    let height = RealizableHeight::from_value(h, &s).context("height")?;
    let query = ShellQuery::new(s, height, run.cfg.ball()?, None, run.cfg.congruence()?)?;
    let cache = ShellCache::new(run.path("shells"), 1000)?;
    let shell = cache.get_or_enumerate(&query)?;
    shell.verify()?;
    run.record_cache(format!("shell_h{h}"), ShellCache::fingerprint(&query));
    run.write(&format!("shell_h{h}.csv"), |buf, id| report::write_shell_csv(buf, id, &shell))?;
    Ok(json!({
        "height": h,
        "points": shell.len(),
        "candidates_scanned": shell.stats.candidates_scanned,
    })
    .into())
}

fn params(run: &Run) -> anyhow::Result<ApproximationParams> {
    let mut p = ApproximationParams::new(run.cfg.b, run.cfg.t, run.cfg.metric, &run.cfg.place_set()?)?;
    p.kappa = run.cfg.kappa;
    Ok(p)
}

fn range_note(p: &ApproximationParams) -> Value {
    json!({
        "b0": p.b0(),
        "in_proven_range": p.in_proven_range(),
        "label": if p.in_proven_range() { "" } else { "out of proven range" },
        "predicted_theta0": p.theta0(),
    })
}

pub fn count(run: &mut Run) -> anyhow::Result<Outcome> {
    let p = params(run)?;
    let x = run.cfg.center_point()?.unwrap_or_default();
    let counts = count_nt(&x, &p, &run.cfg.place_set()?)?;
    run.write("count.csv", |buf, id| report::write_count_csv(buf, id, &counts))?;
    Ok(json!({ "N_T": counts.last().map(|c| c.1), "range": range_note(&p) }).into())
}

pub fn schmidt(run: &mut Run) -> anyhow::Result<Outcome> {
    let p = params(run)?;
    let s = run.cfg.place_set()?;
    let table = ball_table(run, p.metric)?;
    let exp = schmidt_experiment(&s, &p, &default_window(), run.cfg.samples as usize, run.cfg.seed, &table)?;
    run.write("schmidt.csv", |buf, id| report::write_schmidt_csv(buf, id, &exp))?;
    let ratios = exp.final_ratios();
    let within = ratios.iter().filter(|r| (0.7..=1.3).contains(*r)).count();
    Ok(json!({
        "final_ratios": ratios,
        "ratios_within_30pct": within,
        "median_theta_fit": exp.median_theta_fit().ok(),
        "range": range_note(&p),
    })
    .into())
}

pub fn discrepancy(run: &mut Run) -> anyhow::Result<Outcome> {
    let s = run.cfg.place_set()?;
    let e = RegionE::ball_at_identity(run.cfg.first_radius()?, run.cfg.metric)?;
    let setup = DiscrepancySetup::new(&s, e, run.cfg.congruence()?, &HaarCalibration::analytic(), 1 << 21, run.cfg.seed)?;
    let base = json!({ "m_inf": setup.m_inf, "m_w": setup.m_w });
    if let Some(x) = run.cfg.center_point()? {
        let recs = almost_sure_trajectory(&setup, &x, run.cfg.max_height, run.cfg.eta)?;
        run.write("discrepancy.csv", |buf, id| report::write_discrepancy_csv(buf, id, &recs))?;
        return Ok(json!({ "regime": "almost_sure", "measures": base, "rows": recs.len() }).into());
    }
    let heights: Vec<u64> = heightlab_core::heights::realizable_heights(&s, run.cfg.max_height)
        .iter()
        .map(|h| h.value())
        .filter(|&h| h > 1)
        .collect();
    let (rows, recs) = mean_square_profile(&setup, &heights, &default_window(), run.cfg.samples as usize, run.cfg.seed)?;
    run.write("discrepancy.csv", |buf, id| report::write_discrepancy_csv(buf, id, &recs))?;
    let slope = fit_exponent(&rows.iter().map(|r| (r.v_s, r.rms)).collect::<Vec<_>>())
        .ok()
        .map(|f| f.slope);
    Ok(json!({
        "regime": "mean_square",
        "measures": base,
        "rms": rows,
        "slope_vs_v": slope,
        "predicted_slope": -run.cfg.kappa,
    })
    .into())
}

pub fn sweep(run: &mut Run) -> anyhow::Result<Outcome> {
    let s = run.cfg.place_set()?;
    let table = ball_table(run, run.cfg.metric)?;
    let xs = haar_points(&default_window(), run.cfg.samples as usize, run.cfg.seed);
    let opts = SweepOptions {
        seed: run.cfg.seed,
        ..Default::default()
    };
    let w = run.cfg.congruence()?;
    let recs = uniform_discrepancy_sweep(&s, &xs, &run.cfg.radius, w.as_ref(), run.cfg.max_height, &table, &opts)?;
    run.write("sweep.csv", |buf, id| report::write_sweep_csv(buf, id, &recs))?;
    Ok(json!({
        "records": recs.len(),
        "admissible": recs.iter().filter(|r| r.admissible).count(),
        "error_exponent": heightlab_core::experiments::uniform_error_exponent(run.cfg.kappa, s.dim_d()),
    })
    .into())
}

pub fn selftest(run: &mut Run) -> anyhow::Result<Outcome> {
    let opts = SelftestOptions {
        seed: run.cfg.seed,
        ..Default::default()
    };
    let report = run_selftest(&HaarCalibration::analytic(), &opts)?;
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    let id = run.run_id.clone();
    let record = json!({ "manifest": id, "report": report });
    run.write("selftest.json", |buf, _| {
        serde_json::to_writer_pretty(&mut *buf, &record)?;
        buf.push(b'\n');
        Ok(())
    })?;
    Ok(Outcome {
        ok: report.all_passed(),
        summary: json!({ "checks": report.checks.len(), "all_passed": report.all_passed() }),
    })
}
