//! Exhaustive, duplicate-free enumeration of `SL2(Z_S)` points of one height
//! inside a bounded region and congruence class.
//!
//! A point of height exactly `h = prod p^{k_p}` is `M / h` with `M` an integer
//! matrix of determinant `h^2` such that, for every `p` with `k_p >= 1`, some
//! entry of `M` is prime to `p`. The search fixes `(a, b, c)` in the region's
//! entry box and solves `d = (h^2 + bc) / a`; the stratum `a = 0` factors
//! `bc = -h^2` over divisors instead.

mod cache;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{mod_inverse, reduce_mod, ModMatrix, RationalMatrix};
use crate::error::{Error, Result};
use crate::geometry::{RealPoint, RegionE};
use crate::heights::{height, realizable_heights, PlaceSet, RealizableHeight};
use crate::padic_volume::CongruenceCondition;

pub use cache::{ShellCache, CACHE_FORMAT_VERSION};

/// Integer entries are kept below this bound so that `bc + h^2` fits in `i128`
/// with room to spare and loop ranges stay addressable.
pub const ENTRY_GUARD: i64 = 1 << 40;
/// Largest four-entry loop the brute-force oracle will run.
pub const ORACLE_MAX_ITERATIONS: u128 = 1_000_000_000;

/// Points of `SL2(Z_S)` of height `height` in `region * translate` satisfying
/// `congruence`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellQuery {
    pub place_set: PlaceSet,
    pub height: RealizableHeight,
    pub region: RegionE,
    /// Right translation `x` of the region; `None` means the identity.
    pub translate: Option<RealPoint>,
    pub congruence: Option<CongruenceCondition>,
}

impl ShellQuery {
    pub fn new(
        place_set: PlaceSet,
        height: RealizableHeight,
        region: RegionE,
        translate: Option<RealPoint>,
        congruence: Option<CongruenceCondition>,
    ) -> Result<Self> {
        if let Some(w) = &congruence {
            w.check_coprime(&place_set)?;
        }
        for &p in height.exponents().keys() {
            if !place_set.contains(p) {
                return Err(Error::Config(format!("height {height} uses prime {p} outside {place_set}")));
            }
        }
        Ok(Self {
            place_set,
            height,
            region,
            translate,
            congruence,
        })
    }

    /// Same query at another height.
    pub fn at_height(&self, height: RealizableHeight) -> Self {
        Self {
            height,
            ..self.clone()
        }
    }

    /// Inclusive integer ranges for the entries of `M = h gamma`.
    pub fn entry_ranges(&self) -> Result<[[(i64, i64); 2]; 2]> {
        let h = self.height.value() as f64;
        let iv = self.region.entry_intervals(self.translate.as_ref());
        let mut out = [[(0i64, 0i64); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let (lo, hi) = iv[i][j];
                let slack = 1e-9 * (1.0 + h * lo.abs().max(hi.abs()));
                let lo = (h * lo - slack).ceil();
                let hi = (h * hi + slack).floor();
                if !(lo.abs() < ENTRY_GUARD as f64 && hi.abs() < ENTRY_GUARD as f64) {
                    return Err(Error::Range(format!(
                        "entry bound {:.3e} exceeds the 2^40 guard; use a smaller region, a lower height or the shell cache",
                        lo.abs().max(hi.abs())
                    )));
                }
                out[i][j] = (lo as i64, hi as i64);
            }
        }
        Ok(out)
    }

    fn active_primes(&self) -> Vec<i64> {
        self.height
            .exponents()
            .iter()
            .filter(|(_, &k)| k > 0)
            .map(|(&p, _)| p as i64)
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShellStats {
    pub candidates_scanned: u64,
    pub wall_time: Duration,
}

/// The enumerated points of one shell in canonical order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellResult {
    pub query: ShellQuery,
    /// `M = h gamma` for each point, sorted lexicographically.
    pub scaled: Vec<[[i64; 2]; 2]>,
    pub stats: ShellStats,
}

impl ShellResult {
    pub fn len(&self) -> usize {
        self.scaled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled.is_empty()
    }

    pub fn points(&self) -> Vec<RationalMatrix> {
        let h = self.query.height.value();
        self.scaled
            .iter()
            .map(|m| RationalMatrix::from_scaled_integers(*m, h))
            .collect()
    }

    /// Re-checks every point with the exact height function, region and
    /// congruence tests.
    pub fn verify(&self) -> Result<()> {
        let q = &self.query;
        for (idx, p) in self.points().iter().enumerate() {
            if !p.is_group_element() {
                return Err(Error::Domain(format!("point {p} has determinant != 1")));
            }
            if height(p, &q.place_set)? != q.height.value() {
                return Err(Error::Domain(format!("point {p} has the wrong height")));
            }
            if !q.region.contains_translated(&RealPoint::from_rational(p)?, q.translate.as_ref()) {
                return Err(Error::Domain(format!("point {p} lies outside the region")));
            }
            if let Some(w) = &q.congruence {
                if !w.contains(p)? {
                    return Err(Error::Domain(format!("point {p} fails {w}")));
                }
            }
            if idx > 0 && self.scaled[idx - 1] >= self.scaled[idx] {
                return Err(Error::Domain("points are not strictly increasing".into()));
            }
        }
        Ok(())
    }
}

/// Filters applied to every candidate `M` with `det M = h^2`.
struct Acceptor<'a> {
    query: &'a ShellQuery,
    h: i64,
    primes: Vec<i64>,
    congruence: Option<(&'a CongruenceCondition, u64)>,
}

impl<'a> Acceptor<'a> {
    fn new(query: &'a ShellQuery) -> Result<Self> {
        let h = query.height.value() as i64;
        let congruence = match &query.congruence {
            Some(w) if !w.is_full() => {
                let inv = mod_inverse(&h.into(), w.modulus()).ok_or_else(|| {
                    Error::Config(format!("height {h} not invertible mod {}", w.modulus()))
                })?;
                Some((w, inv))
            }
            _ => None,
        };
        Ok(Self {
            query,
            h,
            primes: query.active_primes(),
            congruence,
        })
    }

    fn accepts(&self, m: [[i64; 2]; 2]) -> bool {
        let [[a, b], [c, d]] = m;
        if self
            .primes
            .iter()
            .any(|&p| a % p == 0 && b % p == 0 && c % p == 0 && d % p == 0)
        {
            return false;
        }
        if let Some((w, inv)) = self.congruence {
            let q = w.modulus() as i128;
            let red = |x: i64| ((x as i128).rem_euclid(q) * inv as i128 % q) as u64;
            let r = ModMatrix::new(w.modulus(), [[red(a), red(b)], [red(c), red(d)]]);
            if !w.contains_residue(&r) {
                return false;
            }
        }
        let hf = self.h as f64;
        let g = RealPoint::project([[a as f64 / hf, b as f64 / hf], [c as f64 / hf, d as f64 / hf]]);
        self.query
            .region
            .contains_translated(&g, self.query.translate.as_ref())
    }
}

/// Enumerates one height shell.
pub fn enumerate_shell(query: &ShellQuery) -> Result<ShellResult> {
    let start = Instant::now();
    let [[ra, rb], [rc, rd]] = query.entry_ranges()?;
    let acceptor = Acceptor::new(query)?;
    let h = acceptor.h as i128;
    let h2 = h * h;
    let in_d = |d: i128| d >= rd.0 as i128 && d <= rd.1 as i128;

    let per_a: Vec<(Vec<[[i64; 2]; 2]>, u64)> = (ra.0..=ra.1)
        .into_par_iter()
        .map(|a| {
            let mut found = Vec::new();
            let mut scanned = 0u64;
            if a != 0 {
                let a128 = a as i128;
                for b in rb.0..=rb.1 {
                    for c in rc.0..=rc.1 {
                        scanned += 1;
                        let num = h2 + b as i128 * c as i128;
                        if num % a128 != 0 {
                            continue;
                        }
                        let d = num / a128;
                        if in_d(d) {
                            let m = [[a, b], [c, d as i64]];
                            if acceptor.accepts(m) {
                                found.push(m);
                            }
                        }
                    }
                }
            } else {
                // bc = -h^2: b runs over the divisors of h^2 in range
                for b in rb.0..=rb.1 {
                    scanned += 1;
                    if b == 0 || h2 % b as i128 != 0 {
                        continue;
                    }
                    let c = -h2 / b as i128;
                    if c < rc.0 as i128 || c > rc.1 as i128 {
                        continue;
                    }
                    for d in rd.0..=rd.1 {
                        scanned += 1;
                        let m = [[0, b], [c as i64, d]];
                        if acceptor.accepts(m) {
                            found.push(m);
                        }
                    }
                }
            }
            (found, scanned)
        })
        .collect();

    let mut scaled = Vec::new();
    let mut candidates_scanned = 0;
    for (found, scanned) in per_a {
        scaled.extend(found);
        candidates_scanned += scanned;
    }
    Ok(ShellResult {
        query: query.clone(),
        scaled,
        stats: ShellStats {
            candidates_scanned,
            wall_time: start.elapsed(),
        },
    })
}

/// One shell per realizable `h <= t`; their union is `R_S(t)` in the region.
pub fn enumerate_up_to(
    place_set: &PlaceSet,
    t: u64,
    region: &RegionE,
    translate: Option<&RealPoint>,
    congruence: Option<&CongruenceCondition>,
) -> Result<BTreeMap<u64, ShellResult>> {
    let mut out = BTreeMap::new();
    for h in realizable_heights(place_set, t) {
        let q = ShellQuery::new(
            place_set.clone(),
            h.clone(),
            region.clone(),
            translate.copied(),
            congruence.cloned(),
        )?;
        out.insert(h.value(), enumerate_shell(&q)?);
    }
    Ok(out)
}

/// Cumulative counts `|R_S(h) ∩ (E x × W)|` for every realizable `h <= t`.
pub fn cumulative_counts(shells: &BTreeMap<u64, ShellResult>) -> Vec<(u64, u64)> {
    let mut acc = 0u64;
    shells
        .iter()
        .map(|(&h, s)| {
            acc += s.len() as u64;
            (h, acc)
        })
        .collect()
}

/// Independent recount by a plain four-entry loop over `|M_ij| <= h N`, where
/// `N` bounds `||gamma||_F` on the translated region, with membership decided
/// by the exact height function and exact reduction mod `q`.
pub fn brute_force_recount(query: &ShellQuery) -> Result<u64> {
    let h = query.height.value() as i64;
    let norm = query.region.norm_bound()
        * query.translate.as_ref().map_or(1.0, RealPoint::operator_norm);
    let bound = (h as f64 * norm).floor() as i64;
    let width = (2 * bound + 1) as u128;
    if width.pow(4) > ORACLE_MAX_ITERATIONS {
        return Err(Error::OracleUnavailable(format!(
            "four-entry loop of {} iterations exceeds {ORACLE_MAX_ITERATIONS}",
            width.pow(4)
        )));
    }
    let h2 = h * h;
    let count = (-bound..=bound)
        .into_par_iter()
        .map(|a| -> Result<u64> {
            let mut n = 0;
            for b in -bound..=bound {
                for c in -bound..=bound {
                    for d in -bound..=bound {
                        if a * d - b * c != h2 {
                            continue;
                        }
                        let r = RationalMatrix::from_scaled_integers([[a, b], [c, d]], h as u64);
                        if height(&r, &query.place_set)? != h as u64 {
                            continue;
                        }
                        if let Some(w) = &query.congruence {
                            if !w.contains_residue(&reduce_mod(&r, w.modulus())?) {
                                continue;
                            }
                        }
                        let g = RealPoint::from_rational(&r)?;
                        if query.region.contains_translated(&g, query.translate.as_ref()) {
                            n += 1;
                        }
                    }
                }
            }
            Ok(n)
        })
        .collect::<Result<Vec<u64>>>()?;
    Ok(count.into_iter().sum())
}
