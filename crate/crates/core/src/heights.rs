//! The finite-adelic height over a place set and the realizable heights.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{matrix_valuation, require_prime, RationalMatrix, Valuation};
use crate::error::{Error, Result};

/// Real dimension of `SL2(R)`.
pub const SL2_REAL_DIM: u32 = 3;

/// The finite set `S` of primes plus the spectral exponent used by every
/// error-term prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaceSet {
    primes: Vec<u64>,
    spectral_kappa: f64,
    dim_d: u32,
}

impl PlaceSet {
    /// Tempered default for the spectral exponent.
    pub const DEFAULT_KAPPA: f64 = 0.5;

    pub fn new(primes: impl IntoIterator<Item = u64>, spectral_kappa: f64) -> Result<Self> {
        let mut primes: Vec<u64> = primes.into_iter().collect();
        if primes.is_empty() {
            return Err(Error::Config("place set must contain at least one prime".into()));
        }
        for &p in &primes {
            require_prime(p)?;
        }
        primes.sort_unstable();
        if primes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate prime in {primes:?}")));
        }
        if !(spectral_kappa > 0.0 && spectral_kappa <= 0.5) {
            return Err(Error::Config(format!(
                "spectral kappa {spectral_kappa} outside (0, 1/2]"
            )));
        }
        Ok(Self {
            primes,
            spectral_kappa,
            dim_d: SL2_REAL_DIM,
        })
    }

    /// Place set with the tempered spectral exponent.
    pub fn with_primes(primes: impl IntoIterator<Item = u64>) -> Result<Self> {
        Self::new(primes, Self::DEFAULT_KAPPA)
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn spectral_kappa(&self) -> f64 {
        self.spectral_kappa
    }

    pub fn dim_d(&self) -> u32 {
        self.dim_d
    }

    pub fn contains(&self, p: u64) -> bool {
        self.primes.binary_search(&p).is_ok()
    }

    /// Whether `q` shares no prime factor with `S`.
    pub fn is_coprime_to(&self, q: u64) -> bool {
        self.primes.iter().all(|&p| !q.is_multiple_of(p))
    }
}

impl fmt::Display for PlaceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self.primes.iter().map(u64::to_string).collect();
        write!(f, "{{{}}}", ps.join(","))
    }
}

/// A height `h = prod p^{k_p}` over the primes of `S`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RealizableHeight {
    value: u64,
    exponents: BTreeMap<u64, u32>,
}

impl RealizableHeight {
    /// Factor `value` over `S`; fails when another prime divides it.
    pub fn from_value(value: u64, s: &PlaceSet) -> Result<Self> {
        if value == 0 {
            return Err(Error::Domain("height must be positive".into()));
        }
        let mut rest = value;
        let mut exponents = BTreeMap::new();
        for &p in s.primes() {
            let mut k = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                k += 1;
            }
            exponents.insert(p, k);
        }
        if rest != 1 {
            return Err(Error::Domain(format!(
                "{value} is not a product of primes in {s}"
            )));
        }
        Ok(Self { value, exponents })
    }

    pub fn one(s: &PlaceSet) -> Self {
        Self::from_value(1, s).expect("1 is always realizable")
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    /// `k_p`; zero for primes outside the place set.
    pub fn exponent(&self, p: u64) -> u32 {
        self.exponents.get(&p).copied().unwrap_or(0)
    }

    pub fn exponents(&self) -> &BTreeMap<u64, u32> {
        &self.exponents
    }

    /// The diagonal witness `diag(h, 1/h)`, whose height is exactly `h`.
    pub fn witness(&self) -> RationalMatrix {
        use crate::arith::RationalScalar;
        RationalMatrix::diag(
            RationalScalar::from_integer(self.value),
            RationalScalar::new(1, self.value).expect("positive"),
        )
    }
}

impl fmt::Display for RealizableHeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Rejects entries whose denominators involve primes outside `S`.
pub(crate) fn check_s_integral(r: &RationalMatrix, s: &PlaceSet) -> Result<()> {
    for (idx, x) in r.iter().enumerate() {
        let mut den: BigInt = x.denom().clone();
        for &p in s.primes() {
            let pb = BigInt::from(p);
            while (&den % &pb).is_zero() {
                den = den.div_floor(&pb);
            }
        }
        if !den.is_one() {
            return Err(Error::Domain(format!(
                "entry ({},{}) = {x} has a denominator prime outside {s}; point not in SL2(Z_S)",
                idx / 2,
                idx % 2
            )));
        }
    }
    Ok(())
}

/// `H_f(r) = prod_{p in S} max(1, ||r||_p)`.
pub fn height(r: &RationalMatrix, s: &PlaceSet) -> Result<u64> {
    check_s_integral(r, s)?;
    let mut h: u64 = 1;
    for &p in s.primes() {
        if let Valuation::Finite(v) = matrix_valuation(r, p)? {
            if v < 0 {
                let factor = u32::try_from(-v)
                    .ok()
                    .and_then(|e| p.checked_pow(e))
                    .ok_or_else(|| Error::Range(format!("height of {r} overflows u64")))?;
                h = h
                    .checked_mul(factor)
                    .ok_or_else(|| Error::Range(format!("height of {r} overflows u64")))?;
            }
        }
    }
    Ok(h)
}

/// Every `prod p^{k_p} <= t`, increasing.
///
/// For `SL2` every such value is realized by `diag(h, 1/h)`.
pub fn realizable_heights(s: &PlaceSet, t: u64) -> Vec<RealizableHeight> {
    if t < 1 {
        return Vec::new();
    }
    let mut values = vec![1u64];
    for &p in s.primes() {
        let mut next = Vec::new();
        for &v in &values {
            let mut x = v;
            loop {
                next.push(x);
                match x.checked_mul(p) {
                    Some(y) if y <= t => x = y,
                    _ => break,
                }
            }
        }
        values = next;
    }
    values.sort_unstable();
    values
        .into_iter()
        .map(|v| RealizableHeight::from_value(v, s).expect("generated from S"))
        .collect()
}

/// Whether `r` lies in the height sphere of `h`.
pub fn height_shell_test(r: &RationalMatrix, h: &RealizableHeight, s: &PlaceSet) -> Result<bool> {
    Ok(height(r, s)? == h.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(ps: &[u64]) -> PlaceSet {
        PlaceSet::with_primes(ps.iter().copied()).unwrap()
    }

    fn m(text: &str) -> RationalMatrix {
        text.parse().unwrap()
    }

    #[test]
    fn place_set_validation() {
        assert!(PlaceSet::with_primes([]).is_err());
        assert!(PlaceSet::with_primes([4]).is_err());
        assert!(PlaceSet::with_primes([3, 3]).is_err());
        assert!(PlaceSet::new([2], 0.0).is_err());
        assert!(PlaceSet::new([2], 0.6).is_err());
        let ps = PlaceSet::new([5, 2], 0.25).unwrap();
        assert_eq!(ps.primes(), &[2, 5]);
        assert_eq!(ps.dim_d(), 3);
    }

    #[test]
    fn height_examples() {
        assert_eq!(height(&RationalMatrix::identity(), &s(&[2])).unwrap(), 1);
        assert_eq!(height(&m("1/2,0;0,2"), &s(&[2])).unwrap(), 2);
        assert_eq!(height(&m("1/6,0;0,6"), &s(&[2, 3])).unwrap(), 6);
        let err = height(&m("1/3,0;0,3"), &s(&[2])).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn realizable_examples() {
        let vals = |ps: &[u64], t| -> Vec<u64> {
            realizable_heights(&s(ps), t).iter().map(|h| h.value()).collect()
        };
        assert_eq!(vals(&[2], 8), vec![1, 2, 4, 8]);
        assert_eq!(vals(&[2, 3], 6), vec![1, 2, 3, 4, 6]);
        assert_eq!(vals(&[5], 4), vec![1]);
        assert!(vals(&[2], 0).is_empty());
        // each member is realized by its diagonal witness
        for h in realizable_heights(&s(&[2, 3, 5]), 500) {
            assert_eq!(height(&h.witness(), &s(&[2, 3, 5])).unwrap(), h.value());
        }
    }

    #[test]
    fn realizable_is_exactly_the_semigroup() {
        let ps = s(&[2, 3]);
        let got: Vec<u64> = realizable_heights(&ps, 1000).iter().map(|h| h.value()).collect();
        let want: Vec<u64> = (1..=1000)
            .filter(|&n| RealizableHeight::from_value(n, &ps).is_ok())
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn shell_test_examples() {
        let two = RealizableHeight::from_value(2, &s(&[2])).unwrap();
        let one = RealizableHeight::one(&s(&[2]));
        assert!(height_shell_test(&m("1/2,0;0,2"), &two, &s(&[2])).unwrap());
        assert!(!height_shell_test(&RationalMatrix::identity(), &two, &s(&[2])).unwrap());
        assert!(height_shell_test(&m("1,1;0,1"), &one, &s(&[2])).unwrap());
    }

    fn sl2z() -> impl Strategy<Value = RationalMatrix> {
        proptest::collection::vec((0u8..2, -4i64..5), 0..6).prop_map(|steps| {
            let mut g = RationalMatrix::identity();
            for (kind, n) in steps {
                let e = if kind == 0 {
                    RationalMatrix::from_integers([[1, n], [0, 1]])
                } else {
                    RationalMatrix::from_integers([[1, 0], [n, 1]])
                };
                g = g.mul(&e);
            }
            g
        })
    }

    fn gamma_s() -> impl Strategy<Value = RationalMatrix> {
        (sl2z(), 0u32..4, 0u32..3, sl2z()).prop_map(|(a, i, j, b)| {
            let h = 2i64.pow(i) * 3i64.pow(j);
            let d = RationalMatrix::from_scaled_integers([[h * h, 0], [0, 1]], h as u64);
            a.mul(&d).mul(&b)
        })
    }

    proptest! {
        #[test]
        fn bi_invariant_under_integer_points(g in sl2z(), r in gamma_s(), d in sl2z()) {
            let ps = s(&[2, 3]);
            prop_assert_eq!(height(&g.mul(&r).mul(&d), &ps).unwrap(), height(&r, &ps).unwrap());
        }

        #[test]
        fn submultiplicative(r in gamma_s(), t in gamma_s()) {
            let ps = s(&[2, 3]);
            prop_assert!(height(&r.mul(&t), &ps).unwrap() <= height(&r, &ps).unwrap() * height(&t, &ps).unwrap());
            for p in [2u64, 3] {
                let n = |x: &RationalMatrix| crate::arith::padic_norm_matrix(x, p).unwrap();
                prop_assert!(n(&r.mul(&t)) <= &n(&r) * &n(&t));
            }
        }
    }
}
