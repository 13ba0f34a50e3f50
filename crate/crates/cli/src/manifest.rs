//! Run manifests, appended one JSON line per run to `manifests.jsonl`.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const MANIFEST_LOG: &str = "manifests.jsonl";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub versions: BTreeMap<&'static str, &'static str>,
    pub config: RunConfig,
    pub threads: usize,
    pub artifacts: Vec<Artifact>,
    pub cache_fingerprints: BTreeMap<String, String>,
    pub wall_time_secs: f64,
    pub summary: serde_json::Value,
}

/// Collects artifacts while a verb runs, then emits the manifest once.
pub struct Run {
    pub cfg: RunConfig,
    pub run_id: String,
    started: Instant,
    artifacts: Vec<Artifact>,
    caches: BTreeMap<String, String>,
}

impl Run {
    pub fn start(cfg: RunConfig) -> anyhow::Result<Self> {
        fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
        let echo = serde_json::to_vec(&cfg)?;
        let run_id = format!("{}-{}", cfg.verb, &sha256_hex(&echo)[..12]);
        Ok(Self {
            cfg,
            run_id,
            started: Instant::now(),
            artifacts: Vec::new(),
            caches: BTreeMap::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    /// Writes an artifact produced by `fill` and records its hash.
    pub fn write(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>, &str) -> heightlab_core::Result<()>) -> anyhow::Result<PathBuf> {
        let mut buf = Vec::new();
        fill(&mut buf, &self.run_id)?;
        let path = self.path(name);
        fs::write(&path, &buf).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: sha256_hex(&buf),
        });
        Ok(path)
    }

    pub fn record_cache(&mut self, name: impl Into<String>, fingerprint: impl Into<String>) {
        self.caches.insert(name.into(), fingerprint.into());
    }

    pub fn finish(self, summary: serde_json::Value) -> anyhow::Result<()> {
        let manifest = RunManifest {
            run_id: self.run_id,
            versions: BTreeMap::from([
                ("heightlab-cli", env!("CARGO_PKG_VERSION")),
                ("heightlab-core", heightlab_core::VERSION),
            ]),
            threads: rayon::current_num_threads(),
            config: self.cfg,
            artifacts: self.artifacts,
            cache_fingerprints: self.caches,
            wall_time_secs: self.started.elapsed().as_secs_f64(),
            summary,
        };
        append_line(&manifest.config.out.join(MANIFEST_LOG), &serde_json::to_string(&manifest)?)
    }
}

fn append_line(path: &Path, line: &str) -> anyhow::Result<()> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    writeln!(f, "{line}").with_context(|| format!("appending to {}", path.display()))
}
