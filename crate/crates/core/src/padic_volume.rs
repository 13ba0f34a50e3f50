//! Exact Haar volumes of height spheres and balls in `prod_{p in S} SL2(Q_p)`,
//! normalized so that `SL2(Z_p)` has volume one at every place, together with
//! congruence conditions away from `S`.
//!
//! With that normalization every volume here is a count of left
//! `SL2(Z_p)`-cosets, so all values are exact integers or rationals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{mod_inverse, require_prime, ModMatrix, RationalMatrix, RationalScalar};
use crate::error::{Error, Result};
use crate::fit::fit_exponent;
use crate::heights::{realizable_heights, PlaceSet, RealizableHeight};

/// Number of left `SL2(Z_p)`-cosets in the sphere of height `p^k`:
/// `1` for `k = 0`, `(p + 1) p^{2k - 1}` otherwise.
pub fn sphere_volume(p: u64, k: u32) -> BigUint {
    if k == 0 {
        return BigUint::one();
    }
    BigUint::from(p + 1) * BigUint::from(p).pow(2 * k - 1)
}

/// Largest `p^{2k}` the oracle accepts.
pub const ORACLE_MAX_INDEX: u64 = 100_000_000;

/// Counts Hermite-normal-form sublattices `[[d1, b], [0, d2]]` of `Z^2` with
/// `d1 d2 = p^{2k}`, `0 <= b < d1` and `gcd(d1, d2, b) = 1`.
///
/// These are the index-`p^{2k}` sublattices with cyclic quotient, i.e. the
/// vertices at distance `2k` from the base vertex of the Bruhat-Tits tree,
/// which biject with the cosets counted by [`sphere_volume`].
pub fn sphere_volume_oracle(p: u64, k: u32) -> Result<u64> {
    require_prime(p)?;
    let index = p
        .checked_pow(2 * k)
        .filter(|&n| n <= ORACLE_MAX_INDEX)
        .ok_or_else(|| {
            Error::Range(format!(
                "oracle loop p^(2k) = {p}^{} exceeds {ORACLE_MAX_INDEX}",
                2 * k
            ))
        })?;
    let mut count = 0u64;
    let mut d1 = 1u64;
    while d1 <= index {
        if index % d1 == 0 {
            let d2 = index / d1;
            let g = d1.gcd(&d2);
            count += (0..d1).filter(|b| g.gcd(b) == 1).count() as u64;
        }
        d1 += 1;
    }
    Ok(count)
}

/// `m_S(Sigma_S(h)) = prod_p sphere_volume(p, k_p)`.
pub fn sphere_volume_product(h: &RealizableHeight) -> BigUint {
    h.exponents()
        .iter()
        .map(|(&p, &k)| sphere_volume(p, k))
        .product()
}

/// `v_S(h)`: total volume of all spheres of realizable height `<= h`.
///
/// Non-realizable `h` rounds down to the largest realizable height below it.
pub fn ball_volume_padic(s: &PlaceSet, h: u64) -> BigUint {
    realizable_heights(s, h)
        .iter()
        .map(sphere_volume_product)
        .sum()
}

/// Sphere and ball volumes for every realizable height up to a bound.
#[derive(Clone, Debug)]
pub struct SphereVolumeTable {
    place_set: PlaceSet,
    spheres: BTreeMap<u64, BigUint>,
    balls: BTreeMap<u64, BigUint>,
}

impl SphereVolumeTable {
    pub fn build(s: &PlaceSet, max_height: u64) -> Self {
        let mut spheres = BTreeMap::new();
        let mut balls = BTreeMap::new();
        let mut acc = BigUint::zero();
        for h in realizable_heights(s, max_height) {
            let vol = sphere_volume_product(&h);
            acc += &vol;
            spheres.insert(h.value(), vol);
            balls.insert(h.value(), acc.clone());
        }
        Self {
            place_set: s.clone(),
            spheres,
            balls,
        }
    }

    pub fn place_set(&self) -> &PlaceSet {
        &self.place_set
    }

    pub fn sphere(&self, h: u64) -> Option<&BigUint> {
        self.spheres.get(&h)
    }

    /// `v_S(h)`, rounding down to realizable heights. `None` past the table.
    pub fn ball(&self, h: u64) -> Option<&BigUint> {
        if h > *self.spheres.keys().next_back()? {
            return None;
        }
        self.balls.range(..=h).next_back().map(|(_, v)| v)
    }

    /// `(h, sphere volume, ball volume)` in increasing `h`.
    pub fn rows(&self) -> impl Iterator<Item = (u64, &BigUint, &BigUint)> {
        self.spheres
            .iter()
            .zip(self.balls.values())
            .map(|((&h, s), b)| (h, s, b))
    }
}

pub(crate) fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// Least-squares growth exponent of `log m_S(Sigma_S(h))` against `log h`
/// over realizable `1 < h <= cutoff`.
///
/// The height-one sphere is excluded: it is the compact group itself and
/// does not follow the `(p+1) p^{2k-1}` law.
pub fn growth_exponent_a(s: &PlaceSet, cutoff: u64) -> Result<f64> {
    let pairs: Vec<(f64, f64)> = realizable_heights(s, cutoff)
        .iter()
        .filter(|h| h.value() > 1)
        .map(|h| (h.value() as f64, big_to_f64(&sphere_volume_product(h))))
        .collect();
    if pairs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} realizable heights in (1, {cutoff}] for {s}",
            pairs.len()
        )));
    }
    Ok(fit_exponent(&pairs)?.slope)
}

/// Moduli up to this size have `|SL2(Z/q)|` counted by enumeration.
pub const SL2_ENUMERATION_LIMIT: u64 = 50;

/// `|SL2(Z/q)|` by direct enumeration of quadruples.
pub fn sl2_mod_order_enumerated(q: u64) -> u64 {
    sl2_mod_elements(q).len() as u64
}

/// `q^3 prod_{l | q} (1 - l^{-2})`.
pub fn sl2_mod_order_formula(q: u64) -> u128 {
    let mut n = q as u128 * q as u128 * q as u128;
    let mut rest = q;
    let mut l = 2;
    while rest > 1 {
        if rest.is_multiple_of(l) {
            while rest.is_multiple_of(l) {
                rest /= l;
            }
            let l2 = l as u128 * l as u128;
            n = n / l2 * (l2 - 1);
        }
        l += 1;
    }
    n
}

pub fn sl2_mod_order(q: u64) -> u128 {
    if q <= SL2_ENUMERATION_LIMIT {
        sl2_mod_order_enumerated(q) as u128
    } else {
        sl2_mod_order_formula(q)
    }
}

/// All of `SL2(Z/q)` in lexicographic order.
pub fn sl2_mod_elements(q: u64) -> Vec<ModMatrix> {
    let mut out = Vec::new();
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                for d in 0..q {
                    let m = ModMatrix::new(q, [[a, b], [c, d]]);
                    if m.is_special() {
                        out.push(m);
                    }
                }
            }
        }
    }
    out
}

/// Which residues mod `q` are allowed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidueSet {
    /// All of `SL2(Z/q)`.
    Full,
    Explicit(BTreeSet<ModMatrix>),
}

/// A compact open `W` of the integral points away from `S`: the full
/// preimage of a subset of `SL2(Z/q)`.
///
/// Full preimages are bi-invariant under the principal congruence subgroup
/// of level `q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CongruenceCondition {
    modulus: u64,
    residues: ResidueSet,
    name: String,
}

impl CongruenceCondition {
    pub fn new(modulus: u64, residues: impl IntoIterator<Item = ModMatrix>) -> Result<Self> {
        if modulus < 2 {
            return Err(Error::Config(format!("congruence modulus must be >= 2, got {modulus}")));
        }
        let set: BTreeSet<ModMatrix> = residues.into_iter().collect();
        if set.is_empty() {
            return Err(Error::Config("congruence residue set is empty".into()));
        }
        for m in &set {
            if m.modulus != modulus {
                return Err(Error::Config(format!("residue {m} has the wrong modulus")));
            }
            if !m.is_special() {
                return Err(Error::Config(format!("residue {m} does not have determinant 1")));
            }
        }
        Ok(Self {
            modulus,
            residues: ResidueSet::Explicit(set),
            name: "explicit".into(),
        })
    }

    pub fn full(modulus: u64) -> Result<Self> {
        if modulus < 1 {
            return Err(Error::Config("congruence modulus must be positive".into()));
        }
        Ok(Self {
            modulus,
            residues: ResidueSet::Full,
            name: "full".into(),
        })
    }

    pub fn identity(modulus: u64) -> Result<Self> {
        let mut w = Self::new(modulus, [ModMatrix::identity(modulus)])?;
        w.name = "identity".into();
        Ok(w)
    }

    /// The upper-triangular (Borel) subgroup mod `q`.
    pub fn upper_triangular(modulus: u64) -> Result<Self> {
        let mut set = Vec::new();
        for a in 0..modulus {
            if let Some(d) = mod_inverse(&a.into(), modulus) {
                for b in 0..modulus {
                    set.push(ModMatrix::new(modulus, [[a, b], [0, d]]));
                }
            }
        }
        let mut w = Self::new(modulus, set)?;
        w.name = "upper_triangular".into();
        Ok(w)
    }

    /// `full`, `identity` or `upper_triangular`.
    pub fn named(name: &str, modulus: u64) -> Result<Self> {
        match name {
            "full" => Self::full(modulus),
            "identity" => Self::identity(modulus),
            "upper_triangular" => Self::upper_triangular(modulus),
            other => Err(Error::Config(format!(
                "unknown residue set {other:?}; expected full, identity or upper_triangular"
            ))),
        }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn residues(&self) -> &ResidueSet {
        &self.residues
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_full(&self) -> bool {
        matches!(self.residues, ResidueSet::Full)
    }

    pub fn len(&self) -> u128 {
        match &self.residues {
            ResidueSet::Full => sl2_mod_order(self.modulus),
            ResidueSet::Explicit(set) => set.len() as u128,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check_coprime(&self, s: &PlaceSet) -> Result<()> {
        if s.is_coprime_to(self.modulus) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "congruence modulus {} shares a prime with S = {s}",
                self.modulus
            )))
        }
    }

    pub fn contains_residue(&self, m: &ModMatrix) -> bool {
        match &self.residues {
            ResidueSet::Full => true,
            ResidueSet::Explicit(set) => set.contains(m),
        }
    }

    /// Membership of a point of `SL2(Z_S)` via its reduction mod `q`.
    pub fn contains(&self, r: &RationalMatrix) -> Result<bool> {
        if self.is_full() {
            return Ok(true);
        }
        Ok(self.contains_residue(&crate::arith::reduce_mod(r, self.modulus)?))
    }

    /// Whether every residue of `self` is also a residue of `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        if self.modulus != other.modulus {
            return false;
        }
        match (&self.residues, &other.residues) {
            (_, ResidueSet::Full) => true,
            (ResidueSet::Full, ResidueSet::Explicit(set)) => set.len() as u128 == sl2_mod_order(self.modulus),
            (ResidueSet::Explicit(a), ResidueSet::Explicit(b)) => a.is_subset(b),
        }
    }
}

impl fmt::Display for CongruenceCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.name, self.modulus)
    }
}

/// `m^S(W) = |residues| / |SL2(Z/q)|`.
pub fn congruence_measure(w: &CongruenceCondition, s: &PlaceSet) -> Result<RationalScalar> {
    w.check_coprime(s)?;
    if w.is_full() {
        return Ok(RationalScalar::one());
    }
    RationalScalar::new(w.len(), sl2_mod_order(w.modulus()))
}
