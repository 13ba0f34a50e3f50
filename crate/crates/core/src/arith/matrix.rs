use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::RationalScalar;
use crate::error::{Error, Result};

/// Exact 2x2 rational matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalMatrix {
    entries: [[RationalScalar; 2]; 2],
}

impl RationalMatrix {
    pub fn new(entries: [[RationalScalar; 2]; 2]) -> Self {
        Self { entries }
    }

    pub fn from_integers(m: [[i64; 2]; 2]) -> Self {
        Self::new(m.map(|row| row.map(RationalScalar::from_integer)))
    }

    /// `m / scale` for an integer matrix `m`.
    pub fn from_scaled_integers(m: [[i64; 2]; 2], scale: u64) -> Self {
        let s = BigInt::from(scale);
        Self::new(m.map(|row| {
            row.map(|x| RationalScalar::new(x, s.clone()).expect("scale is nonzero"))
        }))
    }

    pub fn identity() -> Self {
        Self::from_integers([[1, 0], [0, 1]])
    }

    pub fn zero() -> Self {
        Self::from_integers([[0, 0], [0, 0]])
    }

    pub fn diag(a: RationalScalar, d: RationalScalar) -> Self {
        Self::new([[a, RationalScalar::zero()], [RationalScalar::zero(), d]])
    }

    pub fn entry(&self, i: usize, j: usize) -> &RationalScalar {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &[[RationalScalar; 2]; 2] {
        &self.entries
    }

    /// Entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = &RationalScalar> {
        self.entries.iter().flatten()
    }

    pub fn det(&self) -> RationalScalar {
        let [[a, b], [c, d]] = &self.entries;
        &(a * d) - &(b * c)
    }

    pub fn is_group_element(&self) -> bool {
        self.det() == RationalScalar::one()
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let [[a, b], [c, d]] = &self.entries;
        let [[e, f], [g, h]] = &rhs.entries;
        Self::new([
            [&(a * e) + &(b * g), &(a * f) + &(b * h)],
            [&(c * e) + &(d * g), &(c * f) + &(d * h)],
        ])
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        if det.is_zero() {
            return Err(Error::Domain(format!("singular matrix {self}")));
        }
        let inv = det.recip()?;
        let [[a, b], [c, d]] = &self.entries;
        Ok(Self::new([
            [d * &inv, &(-b) * &inv],
            [&(-c) * &inv, a * &inv],
        ]))
    }

    pub fn to_f64(&self) -> [[f64; 2]; 2] {
        self.entries.clone().map(|row| row.map(|x| x.to_f64()))
    }
}

impl fmt::Display for RationalMatrix {
    /// `a,b;c,d` with each entry in reduced form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [[a, b], [c, d]] = &self.entries;
        write!(f, "{a},{b};{c},{d}")
    }
}

impl FromStr for RationalMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rows: Vec<&str> = s.trim().split(';').collect();
        if rows.len() != 2 {
            return Err(Error::Parse(format!("expected two ';'-separated rows in {s:?}")));
        }
        let parse_row = |row: &str| -> Result<[RationalScalar; 2]> {
            let cells: Vec<&str> = row.split(',').collect();
            if cells.len() != 2 {
                return Err(Error::Parse(format!("expected two ','-separated entries in {row:?}")));
            }
            Ok([cells[0].parse()?, cells[1].parse()?])
        };
        Ok(Self::new([parse_row(rows[0])?, parse_row(rows[1])?]))
    }
}

/// A 2x2 matrix over `Z/q`, entries in `0..q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModMatrix {
    pub modulus: u64,
    pub entries: [[u64; 2]; 2],
}

impl ModMatrix {
    pub fn new(modulus: u64, entries: [[u64; 2]; 2]) -> Self {
        debug_assert!(modulus >= 1);
        Self {
            modulus,
            entries: entries.map(|row| row.map(|x| x % modulus)),
        }
    }

    pub fn identity(modulus: u64) -> Self {
        Self::new(modulus, [[1, 0], [0, 1]])
    }

    pub fn det(&self) -> u64 {
        let q = self.modulus as u128;
        let [[a, b], [c, d]] = self.entries.map(|r| r.map(|x| x as u128));
        ((a * d % q + q - b * c % q) % q) as u64
    }

    pub fn is_special(&self) -> bool {
        self.det() == 1 % self.modulus
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.modulus, rhs.modulus);
        let q = self.modulus as u128;
        let x = self.entries.map(|r| r.map(|v| v as u128));
        let y = rhs.entries.map(|r| r.map(|v| v as u128));
        let mut out = [[0u64; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = ((x[i][0] * y[0][j] + x[i][1] * y[1][j]) % q) as u64;
            }
        }
        Self::new(self.modulus, out)
    }
}

impl fmt::Display for ModMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [[a, b], [c, d]] = self.entries;
        write!(f, "{a},{b};{c},{d} mod {}", self.modulus)
    }
}

/// Inverse of `a` modulo `q`, if it exists.
pub fn mod_inverse(a: &BigInt, q: u64) -> Option<u64> {
    let qb = BigInt::from(q);
    let a = a.mod_floor(&qb);
    let e = a.extended_gcd(&qb);
    if e.gcd != BigInt::from(1) {
        return None;
    }
    e.x.mod_floor(&qb).to_u64()
}

/// Entry-wise image of `m` in `Z/q`.
pub fn reduce_mod(m: &RationalMatrix, q: u64) -> Result<ModMatrix> {
    if q == 0 {
        return Err(Error::Config("modulus must be positive".into()));
    }
    let qb = BigInt::from(q);
    let mut out = [[0u64; 2]; 2];
    for (i, row) in m.entries().iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            let inv = mod_inverse(x.denom(), q).ok_or_else(|| {
                Error::Domain(format!(
                    "entry ({i},{j}) = {x} has denominator not invertible mod {q}"
                ))
            })?;
            let n = x.numer().mod_floor(&qb).to_u64().expect("reduced below q");
            out[i][j] = ((n as u128 * inv as u128) % q as u128) as u64;
        }
    }
    Ok(ModMatrix::new(q, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn serialization_round_trip() {
        let m: RationalMatrix = "1/2, -3/4 ; 5,6/4".parse().unwrap();
        assert_eq!(m.to_string(), "1/2,-3/4;5,3/2");
        assert_eq!(m.to_string().parse::<RationalMatrix>().unwrap(), m);
        assert!("1,2;3".parse::<RationalMatrix>().is_err());
        assert!("1,2".parse::<RationalMatrix>().is_err());
    }

    #[test]
    fn det_and_inverse() {
        let m: RationalMatrix = "1/2,3;0,2".parse().unwrap();
        assert!(m.is_group_element());
        assert_eq!(m.mul(&m.inverse().unwrap()), RationalMatrix::identity());
        assert!(RationalMatrix::zero().inverse().is_err());
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(
            reduce_mod(&RationalMatrix::identity(), 3).unwrap(),
            ModMatrix::identity(3)
        );
        let m: RationalMatrix = "1/2,0;0,2".parse().unwrap();
        assert_eq!(reduce_mod(&m, 3).unwrap().entries, [[2, 0], [0, 2]]);
        let m: RationalMatrix = "1,1;0,1".parse().unwrap();
        assert_eq!(reduce_mod(&m, 2).unwrap().entries, [[1, 1], [0, 1]]);
        let m: RationalMatrix = "1,0;1/3,1".parse().unwrap();
        let err = reduce_mod(&m, 3).unwrap_err().to_string();
        assert!(err.contains("(1,0)"), "{err}");
        assert_eq!(reduce_mod(&"-1,0;0,-1".parse().unwrap(), 5).unwrap().entries, [[4, 0], [0, 4]]);
    }

    fn s_integral_sl2() -> impl Strategy<Value = RationalMatrix> {
        // Products of elementary matrices with entries in Z[1/2].
        proptest::collection::vec((0u8..2, -8i64..8, 0u32..3), 1..5).prop_map(|steps| {
            let mut m = RationalMatrix::identity();
            for (kind, n, k) in steps {
                let t = RationalScalar::new(n, 1i64 << k).unwrap();
                let e = if kind == 0 {
                    RationalMatrix::new([[RationalScalar::one(), t], [RationalScalar::zero(), RationalScalar::one()]])
                } else {
                    RationalMatrix::new([[RationalScalar::one(), RationalScalar::zero()], [t, RationalScalar::one()]])
                };
                m = m.mul(&e);
            }
            m
        })
    }

    proptest! {
        #[test]
        fn reduction_is_multiplicative(a in s_integral_sl2(), b in s_integral_sl2(), qi in 0usize..4) {
            let q = [3u64, 5, 7, 15][qi];
            let ra = reduce_mod(&a, q).unwrap();
            let rb = reduce_mod(&b, q).unwrap();
            prop_assert_eq!(reduce_mod(&a.mul(&b), q).unwrap(), ra.mul(&rb));
            prop_assert!(ra.is_special());
        }
    }
}
