//! On-disk store of untranslated shells.
//!
//! Translated queries always re-enumerate: the cost model is that a cached
//! shell is only reusable for the exact region it was computed on.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{enumerate_shell, ShellQuery, ShellResult, ShellStats};
use crate::error::{Error, Result};

pub const CACHE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    fingerprint: String,
    version: u32,
    height: u64,
    points: usize,
}

#[derive(Clone, Debug)]
pub struct ShellCache {
    dir: PathBuf,
    /// Shells with fewer points than this are not written.
    min_points: usize,
}

impl ShellCache {
    pub fn new(dir: impl Into<PathBuf>, min_points: usize) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir, min_points })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Content hash of everything that determines the shell.
    pub fn fingerprint(query: &ShellQuery) -> String {
        let key = serde_json::json!({
            "primes": query.place_set.primes(),
            "height": query.height.value(),
            "region": query.region.fingerprint(),
            "congruence": query.congruence,
        });
        let digest = Sha256::digest(key.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path_for(&self, fingerprint: &str) -> PathBuf {
        self.dir.join(format!("shell-{}.txt", &fingerprint[..32]))
    }

    fn cacheable(query: &ShellQuery) -> bool {
        query
            .translate
            .is_none_or(|x| *x.entries() == [[1.0, 0.0], [0.0, 1.0]])
    }

    /// Returns the cached shell when present, otherwise enumerates and stores
    /// it if large enough.
    pub fn get_or_enumerate(&self, query: &ShellQuery) -> Result<ShellResult> {
        if !Self::cacheable(query) {
            return enumerate_shell(query);
        }
        let fp = Self::fingerprint(query);
        let path = self.path_for(&fp);
        if path.exists() {
            if let Some(hit) = self.load(&path, &fp, query)? {
                return Ok(hit);
            }
        }
        let result = enumerate_shell(query)?;
        if result.len() >= self.min_points {
            self.store(&path, &fp, &result)?;
        }
        Ok(result)
    }

    fn store(&self, path: &Path, fp: &str, result: &ShellResult) -> Result<()> {
        let tmp = path.with_extension("tmp");
        let mut w = BufWriter::new(File::create(&tmp).map_err(|e| Error::io(&tmp, e))?);
        let header = Header {
            fingerprint: fp.to_string(),
            version: CACHE_FORMAT_VERSION,
            height: result.query.height.value(),
            points: result.len(),
        };
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "{}", serde_json::to_string(&header).expect("header serializes"))?;
            for [[a, b], [c, d]] in &result.scaled {
                writeln!(w, "{a},{b};{c},{d}")?;
            }
            w.flush()
        };
        write().map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    /// `None` on a stale or mismatched file, which is then overwritten.
    fn load(&self, path: &Path, fp: &str, query: &ShellQuery) -> Result<Option<ShellResult>> {
        let start = Instant::now();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header: Header = match lines.next() {
            Some(line) => serde_json::from_str(&line.map_err(|e| Error::io(path, e))?)?,
            None => return Ok(None),
        };
        if header.fingerprint != fp || header.version != CACHE_FORMAT_VERSION {
            return Ok(None);
        }
        let mut scaled = Vec::with_capacity(header.points);
        for line in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            scaled.push(parse_scaled(&line)?);
        }
        if scaled.len() != header.points {
            return Ok(None);
        }
        Ok(Some(ShellResult {
            query: query.clone(),
            scaled,
            stats: ShellStats {
                candidates_scanned: 0,
                wall_time: start.elapsed(),
            },
        }))
    }
}

fn parse_scaled(line: &str) -> Result<[[i64; 2]; 2]> {
    let bad = || Error::Parse(format!("bad cached matrix {line:?}"));
    let mut out = [[0i64; 2]; 2];
    let rows: Vec<&str> = line.split(';').collect();
    if rows.len() != 2 {
        return Err(bad());
    }
    for (i, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != 2 {
            return Err(bad());
        }
        for (j, c) in cols.iter().enumerate() {
            out[i][j] = c.trim().parse().map_err(|_| bad())?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RegionE;
    use crate::heights::{PlaceSet, RealizableHeight};

    #[test]
    fn round_trip_and_fingerprint() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ShellCache::new(dir.path(), 1).unwrap();
        let ps = PlaceSet::with_primes([2]).unwrap();
        let q = ShellQuery::new(
            ps.clone(),
            RealizableHeight::from_value(4, &ps).unwrap(),
            RegionE::norm_ball(3.0).unwrap(),
            None,
            None,
        )
        .unwrap();
        let first = cache.get_or_enumerate(&q).unwrap();
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        let second = cache.get_or_enumerate(&q).unwrap();
        assert_eq!(first.scaled, second.scaled);
        assert_eq!(second.stats.candidates_scanned, 0);

        let other = q.at_height(RealizableHeight::from_value(8, &ps).unwrap());
        assert_ne!(ShellCache::fingerprint(&q), ShellCache::fingerprint(&other));
        assert!(parse_scaled("1,2;3").is_err());
    }
}
