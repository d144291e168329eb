//! Complex operator and superoperator algebra on finite Hilbert spaces.
//!
//! Everything downstream computes on these types: dense complex matrices
//! wrapped as [`Operator`], Hilbert–Schmidt-orthonormal [`OperatorBasis`]
//! sets, and matrix representations of superoperators acting on vectorized
//! operators. Units are ħ = 1 throughout.

mod basis;
mod composite;
mod expm;
mod operator;
mod superop;

pub use basis::OperatorBasis;
pub use composite::CompositeSpace;
pub use expm::expm;
pub use operator::{entropy, hs_inner, Operator};
pub use superop::{commutator_super, left_right_super, matrix_element, SuperOperator};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;

/// Default tolerance for structural predicates (hermiticity, unitarity, ...).
pub const TOL: f64 = 1e-10;

/// Eigenvalues below this cutoff are treated as exact zeros inside logs.
pub const EIG_CUT: f64 = 1e-14;

/// Largest entry modulus of `m`.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Largest entrywise difference |a - b|.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).norm()))
}
