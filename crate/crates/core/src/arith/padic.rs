//! p-adic valuations and norms of rationals and rational matrices.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, Zero};

use super::{RationalMatrix, RationalScalar};
use crate::error::{Error, Result};

/// Deterministic primality by trial division; place sets are tiny.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

pub(crate) fn require_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{p} is not prime")))
    }
}

/// `v_p(x)`, with zero mapped to [`Valuation::Infinite`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
            (Valuation::Finite(_), Valuation::Infinite) => Ordering::Less,
            (Valuation::Infinite, Valuation::Finite(_)) => Ordering::Greater,
            (Valuation::Infinite, Valuation::Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => f.write_str("inf"),
        }
    }
}

/// Multiplicity of `p` in a nonzero integer.
pub(crate) fn int_valuation(n: &BigInt, p: u64) -> i64 {
    debug_assert!(!n.is_zero());
    let p = BigInt::from(p);
    let mut m = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = m.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        m = q;
        v += 1;
    }
}

pub fn padic_valuation(x: &RationalScalar, p: u64) -> Result<Valuation> {
    require_prime(p)?;
    if x.is_zero() {
        return Ok(Valuation::Infinite);
    }
    Ok(Valuation::Finite(
        int_valuation(x.numer(), p) - int_valuation(x.denom(), p),
    ))
}

/// `p^{-v}` as an exact rational.
fn power_of_p(p: u64, minus_v: i64) -> RationalScalar {
    let pp = BigInt::from(p).pow(minus_v.unsigned_abs());
    if minus_v >= 0 {
        RationalScalar::from_integer(pp)
    } else {
        RationalScalar::new(BigInt::one(), pp).expect("nonzero power")
    }
}

/// `|x|_p = p^{-v_p(x)}`, zero for `x = 0`.
pub fn padic_abs(x: &RationalScalar, p: u64) -> Result<RationalScalar> {
    Ok(match padic_valuation(x, p)? {
        Valuation::Finite(v) => power_of_p(p, -v),
        Valuation::Infinite => RationalScalar::zero(),
    })
}

/// Smallest valuation among the entries (the matrix valuation).
pub fn matrix_valuation(m: &RationalMatrix, p: u64) -> Result<Valuation> {
    require_prime(p)?;
    let mut best = Valuation::Infinite;
    for x in m.iter() {
        best = best.min(padic_valuation(x, p)?);
    }
    Ok(best)
}

/// Max-entry p-adic norm of a matrix, an exact power of `p` (zero for the zero matrix).
pub fn padic_norm_matrix(m: &RationalMatrix, p: u64) -> Result<RationalScalar> {
    Ok(match matrix_valuation(m, p)? {
        Valuation::Finite(v) => power_of_p(p, -v),
        Valuation::Infinite => RationalScalar::zero(),
    })
}
