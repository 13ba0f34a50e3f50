//! Exact rational scalars, 2x2 rational matrices, p-adic valuations and
//! reduction modulo `q`.

mod matrix;
mod padic;
mod scalar;

pub use matrix::{mod_inverse, reduce_mod, ModMatrix, RationalMatrix};
pub use padic::{
    is_prime, matrix_valuation, padic_abs, padic_norm_matrix, padic_valuation, Valuation,
};
pub(crate) use padic::require_prime;
pub use scalar::RationalScalar;
