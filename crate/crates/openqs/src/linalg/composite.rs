use num_complex::Complex64 as C64;

use super::{CMatrix, Operator};
use crate::error::{OqsError, Result};

/// Bipartite factorization of a Hilbert space, S-factor first:
/// total index = s·dimE + e.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompositeSpace {
    pub dim_s: usize,
    pub dim_e: usize,
}

impl CompositeSpace {
    pub fn new(dim_s: usize, dim_e: usize) -> Self {
        Self { dim_s, dim_e }
    }

    pub fn dim_total(&self) -> usize {
        self.dim_s * self.dim_e
    }

    /// a ⊗ b with the S factor first.
    pub fn kron(&self, a: &Operator, b: &Operator) -> Result<Operator> {
        self.check_dims(a, b)?;
        Operator::new(a.mat().kronecker(b.mat()))
    }

    /// Lifts an S-operator: a ⊗ 1_E.
    pub fn lift_s(&self, a: &Operator) -> Result<Operator> {
        self.kron(a, &Operator::identity(self.dim_e))
    }

    /// Lifts an E-operator: 1_S ⊗ b.
    pub fn lift_e(&self, b: &Operator) -> Result<Operator> {
        self.kron(&Operator::identity(self.dim_s), b)
    }

    /// tr_E: reduces a total-space operator to the S factor.
    pub fn partial_trace_e(&self, a: &Operator) -> Result<Operator> {
        if a.dim() != self.dim_total() {
            return Err(OqsError::BadFactorization {
                total: a.dim(),
                dim_s: self.dim_s,
                dim_e: self.dim_e,
            });
        }
        let mut out = CMatrix::zeros(self.dim_s, self.dim_s);
        for n in 0..self.dim_s {
            for m in 0..self.dim_s {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..self.dim_e {
                    acc += a.mat()[(n * self.dim_e + j, m * self.dim_e + j)];
                }
                out[(n, m)] = acc;
            }
        }
        Operator::new(out)
    }

    /// tr_S: reduces a total-space operator to the E factor.
    pub fn partial_trace_s(&self, a: &Operator) -> Result<Operator> {
        if a.dim() != self.dim_total() {
            return Err(OqsError::BadFactorization {
                total: a.dim(),
                dim_s: self.dim_s,
                dim_e: self.dim_e,
            });
        }
        let mut out = CMatrix::zeros(self.dim_e, self.dim_e);
        for i in 0..self.dim_e {
            for j in 0..self.dim_e {
                let mut acc = C64::new(0.0, 0.0);
                for n in 0..self.dim_s {
                    acc += a.mat()[(n * self.dim_e + i, n * self.dim_e + j)];
                }
                out[(i, j)] = acc;
            }
        }
        Operator::new(out)
    }

    fn check_dims(&self, a: &Operator, b: &Operator) -> Result<()> {
        if a.dim() != self.dim_s {
            return Err(OqsError::DimMismatch {
                expected: self.dim_s,
                got: a.dim(),
            });
        }
        if b.dim() != self.dim_e {
            return Err(OqsError::DimMismatch {
                expected: self.dim_e,
                got: b.dim(),
            });
        }
        Ok(())
    }
}
