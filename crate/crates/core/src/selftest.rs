//! Oracle suite: each check recomputes a quantity by an independent route.

use serde::{Deserialize, Serialize};

use crate::enumeration::{brute_force_recount, enumerate_shell, ShellQuery};
use crate::error::Result;
use crate::geometry::{covolume_cross_check, HaarCalibration, RegionE};
use crate::heights::{PlaceSet, RealizableHeight};
use crate::padic_volume::{sphere_volume, sphere_volume_oracle, CongruenceCondition};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub checks: Vec<CheckOutcome>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestOptions {
    pub calibration_radius: f64,
    pub calibration_samples: u64,
    pub seed: u64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            calibration_radius: 30.0,
            calibration_samples: 1 << 19,
            seed: 0,
        }
    }
}

pub fn run_selftest(cal: &HaarCalibration, opts: &SelftestOptions) -> Result<SelftestReport> {
    let mut checks = Vec::new();

    for p in [2u64, 3, 5, 7] {
        for k in 1..=3 {
            let formula = sphere_volume(p, k);
            let oracle = sphere_volume_oracle(p, k)?;
            checks.push(CheckOutcome {
                name: format!("sphere p={p} k={k}"),
                passed: formula == oracle.into(),
                detail: format!("formula {formula}, sublattice count {oracle}"),
            });
        }
    }

    let s = PlaceSet::with_primes([2])?;
    let region = RegionE::norm_ball(3.0)?;
    for h in [1u64, 2, 4] {
        for w in [None, Some(CongruenceCondition::identity(3)?)] {
            let tag = if w.is_some() { "I mod 3" } else { "full" };
            let q = ShellQuery::new(s.clone(), RealizableHeight::from_value(h, &s)?, region.clone(), None, w)?;
            let shell = enumerate_shell(&q)?;
            let recount = brute_force_recount(&q)?;
            let sound = shell.verify();
            checks.push(CheckOutcome {
                name: format!("recount h={h} {tag}"),
                passed: shell.len() as u64 == recount && sound.is_ok(),
                detail: match sound {
                    Ok(()) => format!("solver {}, brute force {recount}", shell.len()),
                    Err(e) => e.to_string(),
                },
            });
        }
    }

    let cc = covolume_cross_check(cal, opts.calibration_radius, opts.calibration_samples, opts.seed)?;
    checks.push(CheckOutcome {
        name: format!("covolume R={}", opts.calibration_radius),
        passed: (0.9..=1.1).contains(&cc.ratio),
        detail: format!("{} points, volume {:.3}, ratio {:.4}", cc.lattice_count, cc.volume.value, cc.ratio),
    });

    Ok(SelftestReport { checks })
}
