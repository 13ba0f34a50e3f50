//! CSV artifacts. Every file starts with a `# manifest: <ref>` line so it can
//! be traced back to the run that produced it.

use std::io::Write;

use crate::enumeration::ShellResult;
use crate::error::{Error, Result};
use crate::experiments::{DiscrepancyRecord, SchmidtExperiment, SweepRecord};
use crate::geometry::BallVolumeTable;
use crate::padic_volume::SphereVolumeTable;

pub const MANIFEST_PREFIX: &str = "# manifest: ";

fn begin<W: Write>(mut w: W, manifest_ref: &str) -> Result<csv::Writer<W>> {
    writeln!(w, "{MANIFEST_PREFIX}{manifest_ref}").map_err(|e| Error::io("<csv>", e))?;
    Ok(csv::Writer::from_writer(w))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Columns `h,sphere_volume,v_S`.
pub fn write_volumes_csv<W: Write>(w: W, manifest_ref: &str, table: &SphereVolumeTable) -> Result<()> {
    let mut out = begin(w, manifest_ref)?;
    out.write_record(["h", "sphere_volume", "v_S"])?;
    for (h, sphere, ball) in table.rows() {
        out.write_record([h.to_string(), sphere.to_string(), ball.to_string()])?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

/// Columns `h,a,b,c,d`, one enumerated point per row with exact entries.
pub fn write_shell_csv<W: Write>(w: W, manifest_ref: &str, shell: &ShellResult) -> Result<()> {
    let mut out = begin(w, manifest_ref)?;
    out.write_record(["h", "a", "b", "c", "d"])?;
    let h = shell.query.height.value().to_string();
    for p in shell.points() {
        let e = p.entries();
        out.write_record([
            h.clone(),
            e[0][0].to_string(),
            e[0][1].to_string(),
            e[1][0].to_string(),
            e[1][1].to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

/// Columns `T,N_T`.
pub fn write_count_csv<W: Write>(w: W, manifest_ref: &str, counts: &[(u64, u64)]) -> Result<()> {
    let mut out = begin(w, manifest_ref)?;
    out.write_record(["T", "N_T"])?;
    for (t, n) in counts {
        out.write_record([t.to_string(), n.to_string()])?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

/// The ball-volume table layout preceded by the manifest line.
pub fn write_ball_table_csv<W: Write>(mut w: W, manifest_ref: &str, table: &BallVolumeTable) -> Result<()> {
    writeln!(w, "{MANIFEST_PREFIX}{manifest_ref}").map_err(|e| Error::io("<csv>", e))?;
    table.write_csv(w)
}

/// Columns `T,N_T,V_T,diff,theta_fit_so_far,sample`.
pub fn write_schmidt_csv<W: Write>(w: W, manifest_ref: &str, exp: &SchmidtExperiment) -> Result<()> {
    let mut out = begin(w, manifest_ref)?;
    out.write_record(["T", "N_T", "V_T", "diff", "theta_fit_so_far", "sample"])?;
    for (i, s) in exp.samples.iter().enumerate() {
        for r in &s.rows {
            out.write_record([
                r.t.to_string(),
                r.n_t.to_string(),
                r.v_t.to_string(),
                r.diff.to_string(),
                opt(r.theta_fit_so_far),
                i.to_string(),
            ])?;
        }
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

const DISCREPANCY_HEADER: [&str; 9] = ["h", "count", "v_S", "main_term", "D", "envelope", "regime", "seed", "sample"];

fn discrepancy_fields(r: &DiscrepancyRecord) -> Vec<String> {
    vec![
        r.h.to_string(),
        r.count.to_string(),
        r.v_s.to_string(),
        r.main_term.to_string(),
        r.d.to_string(),
        opt(r.envelope),
        r.regime.to_string(),
        r.seed.to_string(),
        r.sample.map(|s| s.to_string()).unwrap_or_default(),
    ]
}

/// Columns `h,count,v_S,main_term,D,envelope,regime,seed,sample`.
pub fn write_discrepancy_csv<W: Write>(w: W, manifest_ref: &str, records: &[DiscrepancyRecord]) -> Result<()> {
    let mut out = begin(w, manifest_ref)?;
    out.write_record(DISCREPANCY_HEADER)?;
    for r in records {
        out.write_record(discrepancy_fields(r))?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

/// The discrepancy columns followed by `ell,predicted_count,error_scale,admissible,in_regime`.
pub fn write_sweep_csv<W: Write>(w: W, manifest_ref: &str, records: &[SweepRecord]) -> Result<()> {
    let mut out = begin(w, manifest_ref)?;
    let mut header: Vec<&str> = DISCREPANCY_HEADER.to_vec();
    header.extend(["ell", "predicted_count", "error_scale", "admissible", "in_regime"]);
    out.write_record(&header)?;
    for r in records {
        let mut f = discrepancy_fields(&r.record);
        f.extend([
            r.ell.to_string(),
            r.predicted_count.to_string(),
            r.error_scale.to_string(),
            r.admissible.to_string(),
            r.in_regime.to_string(),
        ]);
        out.write_record(&f)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

/// Reads back any artifact written here, skipping the manifest line.
pub fn read_artifact<R: std::io::Read>(r: R) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let header = rd.headers()?.iter().map(str::to_string).collect();
    let rows = rd
        .records()
        .map(|rec| Ok(rec?.iter().map(str::to_string).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}
