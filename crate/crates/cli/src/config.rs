//! Run configuration: an optional TOML file overlaid by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use heightlab_core::{CongruenceCondition, MetricChoice, PlaceSet, RealPoint, RegionE};
use serde::{Deserialize, Serialize};

/// Flags shared by every verb. Any flag overrides the same key in `--config`.
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// TOML file with default values for the flags below
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Primes of S, comma separated
    #[arg(long, value_delimiter = ',')]
    pub primes: Option<Vec<u64>>,
    /// Approximation scale
    #[arg(long)]
    pub b: Option<f64>,
    /// Largest height T for counting runs
    #[arg(long = "T")]
    pub t: Option<u64>,
    #[arg(long)]
    pub max_height: Option<u64>,
    /// Single shell height for `enumerate`
    #[arg(long)]
    pub height: Option<u64>,
    /// frobenius or log
    #[arg(long)]
    pub metric: Option<MetricChoice>,
    /// Congruence modulus q
    #[arg(long = "mod")]
    pub modulus: Option<u64>,
    /// full, identity, upper_triangular, or residues like "1,0;0,1 2,0;0,2"
    #[arg(long)]
    pub residues: Option<String>,
    /// Ball center or base point, e.g. "1,0;0,1"
    #[arg(long)]
    pub center: Option<String>,
    /// Radius, or comma separated radii for `sweep`
    #[arg(long, value_delimiter = ',')]
    pub radius: Option<Vec<f64>>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Worker threads; defaults to all cores
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(untagged)]
enum Radii {
    #[default]
    None,
    One(f64),
    Many(Vec<f64>),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    primes: Option<Vec<u64>>,
    b: Option<f64>,
    #[serde(rename = "T")]
    t: Option<u64>,
    max_height: Option<u64>,
    height: Option<u64>,
    metric: Option<MetricChoice>,
    #[serde(rename = "mod")]
    modulus: Option<u64>,
    residues: Option<String>,
    center: Option<String>,
    #[serde(default)]
    radius: Radii,
    samples: Option<u64>,
    seed: Option<u64>,
    eta: Option<f64>,
    kappa: Option<f64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verb {
    Calibrate,
    Volumes,
    Enumerate,
    Count,
    Schmidt,
    Discrepancy,
    Sweep,
    Selftest,
}

impl Verb {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verb::Calibrate => "calibrate",
            Verb::Volumes => "volumes",
            Verb::Enumerate => "enumerate",
            Verb::Count => "count",
            Verb::Schmidt => "schmidt",
            Verb::Discrepancy => "discrepancy",
            Verb::Sweep => "sweep",
            Verb::Selftest => "selftest",
        }
    }
}

/// Fully resolved parameters; this is what the manifest echoes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub verb: &'static str,
    pub primes: Vec<u64>,
    pub b: f64,
    #[serde(rename = "T")]
    pub t: u64,
    pub max_height: u64,
    pub height: Option<u64>,
    pub metric: MetricChoice,
    #[serde(rename = "mod")]
    pub modulus: Option<u64>,
    pub residues: Option<String>,
    pub center: Option<String>,
    pub radius: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    pub eta: f64,
    pub kappa: f64,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub out: PathBuf,
}

fn read_file(path: &Path) -> anyhow::Result<FileConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("config {}", path.display()))
}

impl RunConfig {
    pub fn resolve(verb: Verb, flags: &Flags) -> anyhow::Result<Self> {
        let file = match &flags.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let file_radius = match file.radius {
            Radii::None => None,
            Radii::One(r) => Some(vec![r]),
            Radii::Many(v) => Some(v),
        };
        let default_metric = match verb {
            Verb::Count | Verb::Schmidt => MetricChoice::LogInvariant,
            _ => MetricChoice::Frobenius,
        };
        let default_radius = match verb {
            Verb::Calibrate => vec![50.0],
            Verb::Enumerate => vec![2.0],
            Verb::Discrepancy => vec![0.5],
            Verb::Sweep => vec![0.1, 0.2, 0.4],
            _ => Vec::new(),
        };
        let default_samples = match verb {
            Verb::Calibrate => 1 << 20,
            Verb::Schmidt => 20,
            Verb::Discrepancy => 10,
            Verb::Sweep => 4,
            _ => 0,
        };
        let cfg = Self {
            verb: verb.as_str(),
            primes: flags.primes.clone().or(file.primes).unwrap_or_else(|| vec![2]),
            b: flags.b.or(file.b).unwrap_or(0.4),
            t: flags.t.or(file.t).unwrap_or(128),
            max_height: flags.max_height.or(file.max_height).unwrap_or(128),
            height: flags.height.or(file.height),
            metric: flags.metric.or(file.metric).unwrap_or(default_metric),
            modulus: flags.modulus.or(file.modulus),
            residues: flags.residues.clone().or(file.residues),
            center: flags.center.clone().or(file.center),
            radius: flags.radius.clone().or(file_radius).unwrap_or(default_radius),
            samples: flags.samples.or(file.samples).unwrap_or(default_samples),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            eta: flags.eta.or(file.eta).unwrap_or(0.1),
            kappa: flags.kappa.or(file.kappa).unwrap_or(PlaceSet::DEFAULT_KAPPA),
            threads: flags.threads.or(file.threads),
            out: flags.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("heightlab-out")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> anyhow::Result<()> {
        self.place_set()?;
        self.congruence()?;
        self.center_point()?;
        if !(self.b.is_finite() && self.b > 0.0) {
            bail!("b: must be positive, got {}", self.b);
        }
        if self.t < 1 {
            bail!("T: must be at least 1");
        }
        if self.max_height < 1 {
            bail!("max_height: must be at least 1");
        }
        if let Some(r) = self.radius.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            bail!("radius: must be positive, got {r}");
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            bail!("eta: must be positive, got {}", self.eta);
        }
        if self.threads == Some(0) {
            bail!("threads: must be at least 1");
        }
        if self.residues.is_some() && self.modulus.is_none() {
            bail!("residues: given without mod");
        }
        Ok(())
    }

    pub fn place_set(&self) -> anyhow::Result<PlaceSet> {
        PlaceSet::new(self.primes.iter().copied(), self.kappa).context("primes/kappa")
    }

    pub fn congruence(&self) -> anyhow::Result<Option<CongruenceCondition>> {
        let Some(q) = self.modulus else {
            return Ok(None);
        };
        let set = self.residues.as_deref().unwrap_or("full").trim();
        let w = match set {
            "full" | "identity" | "upper_triangular" => CongruenceCondition::named(set, q),
            list => {
                let residues = list
                    .split_whitespace()
                    .map(|m| parse_residue(m, q))
                    .collect::<anyhow::Result<Vec<_>>>()?;
                CongruenceCondition::new(q, residues)
            }
        }
        .context("mod/residues")?;
        w.check_coprime(&self.place_set()?).context("mod")?;
        Ok(Some(w))
    }

    pub fn center_point(&self) -> anyhow::Result<Option<RealPoint>> {
        self.center
            .as_deref()
            .map(|c| c.parse::<RealPoint>().context("center"))
            .transpose()
    }

    pub fn first_radius(&self) -> anyhow::Result<f64> {
        match self.radius.as_slice() {
            [r] => Ok(*r),
            [] => bail!("radius: required for {}", self.verb),
            _ => bail!("radius: {} takes a single radius", self.verb),
        }
    }

    /// Ball of the first radius around `--center` (identity by default).
    pub fn ball(&self) -> anyhow::Result<RegionE> {
        let center = self.center_point()?.unwrap_or_default();
        Ok(RegionE::metric_ball(center, self.first_radius()?, self.metric)?)
    }
}

fn parse_residue(text: &str, q: u64) -> anyhow::Result<heightlab_core::ModMatrix> {
    let rows: Vec<&str> = text.split(';').collect();
    let mut e = [[0u64; 2]; 2];
    if rows.len() != 2 {
        bail!("residues: {text:?} is not of the form a,b;c,d");
    }
    for (i, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != 2 {
            bail!("residues: {text:?} is not of the form a,b;c,d");
        }
        for (j, c) in cols.iter().enumerate() {
            let v: i64 = c.trim().parse().with_context(|| format!("residues: bad entry {c:?}"))?;
            e[i][j] = v.rem_euclid(q as i64) as u64;
        }
    }
    Ok(heightlab_core::ModMatrix::new(q, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "primes = [3]\nb = 0.3\nT = 27\nradius = 0.25\nmetric = \"log\"\n").unwrap();
        let flags = Flags {
            config: Some(path),
            b: Some(0.2),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(Verb::Discrepancy, &flags).unwrap();
        assert_eq!(cfg.primes, vec![3]);
        assert_eq!(cfg.b, 0.2);
        assert_eq!(cfg.t, 27);
        assert_eq!(cfg.radius, vec![0.25]);
        assert_eq!(cfg.metric, MetricChoice::LogInvariant);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        fs::write(&path, "primez = [2]\n").unwrap();
        let err = RunConfig::resolve(Verb::Volumes, &Flags { config: Some(path), ..Default::default() }).unwrap_err();
        assert!(format!("{err:#}").contains("primez"));

        let err = RunConfig::resolve(
            Verb::Enumerate,
            &Flags { modulus: Some(2), ..Default::default() },
        )
        .unwrap_err();
        assert!(format!("{err:#}").starts_with("mod"));

        let err = RunConfig::resolve(Verb::Count, &Flags { b: Some(-1.0), ..Default::default() }).unwrap_err();
        assert!(err.to_string().starts_with("b:"));
    }

    #[test]
    fn explicit_residues() {
        let flags = Flags {
            modulus: Some(3),
            residues: Some("1,0;0,1 -1,0;0,-1".into()),
            ..Default::default()
        };
        let w = RunConfig::resolve(Verb::Enumerate, &flags).unwrap().congruence().unwrap().unwrap();
        assert_eq!(w.len(), 2);
        let bad = Flags {
            modulus: Some(3),
            residues: Some("1,1;1,1".into()),
            ..Default::default()
        };
        assert!(RunConfig::resolve(Verb::Enumerate, &bad).is_err());
    }
}
