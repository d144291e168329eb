//! Numerical toolkit for open-quantum-system dynamics.
//!
//! Three routes to the reduced dynamics of a small open system, built to be
//! cross-checked against each other:
//!
//! - exact reduced dynamics of system⊗environment composites by full
//!   diagonalization ([`openq`]),
//! - stochastic (random-unitary) maps driven by classical noise processes,
//!   by Monte-Carlo sample averaging or super-cumulant truncation
//!   ([`stochastic`], [`stochmap`]),
//! - weak-coupling master equations: Redfield, Davies/GKLS, and the Pauli
//!   rate equation, with thermalization diagnostics ([`master`]),
//!
//! plus quantitative tests of when an environment admits a classical
//! surrogate-field description ([`surrogate`]).
//!
//! ```
//! use openqs::linalg::Operator;
//! use openqs::openq::{exact_dynamical_map, SEModel};
//!
//! // qubit dephasing through a single environment qubit:
//! // H = (λ/2)σ_z⊗σ_z, both sides starting in |X⟩⟨X|
//! let m = SEModel::new(
//!     Operator::zeros(2),
//!     Operator::zeros(2),
//!     Operator::pauli_z().scale_re(0.5),
//!     Operator::pauli_z(),
//!     1.0,
//!     Operator::plus_projector(),
//! )?;
//! let t = 1.2;
//! let rho = exact_dynamical_map(&m, t)?.apply(&Operator::plus_projector())?;
//! // the off-diagonal rings as cos(λt)/2
//! assert!((rho.mat()[(0, 1)].re - t.cos() / 2.0).abs() < 1e-12);
//! # Ok::<(), openqs::OqsError>(())
//! ```

pub mod error;
pub mod linalg;
pub mod master;
pub mod openq;
pub mod propagators;
pub mod stochastic;
pub mod stochmap;
pub mod surrogate;

pub use error::{OqsError, Result};
pub use linalg::{CMatrix, Operator, OperatorBasis, SuperOperator};
