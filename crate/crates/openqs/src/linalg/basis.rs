use num_complex::Complex64 as C64;

use super::{hs_inner, CMatrix, Operator};
use crate::error::{OqsError, Result};

/// Ordered orthonormal basis of operator space under the Hilbert–Schmidt
/// product, tr(E_n†E_m) = δ_nm.
///
/// The default is the ket-bra basis {|n⟩⟨m|} ordered diagonal-first,
/// matching the qubit ordering {|↑⟩⟨↑|, |↓⟩⟨↓|, |↑⟩⟨↓|, |↓⟩⟨↑|}: all
/// projectors |n⟩⟨n| first, then coherences |n⟩⟨m| (n ≠ m) in row-major
/// order. In this basis, vectorization is a pure reorder of matrix entries.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorBasis {
    dim: usize,
    /// (ket, bra) index pair of each element; `None` when the basis is not
    /// of ket-bra type.
    kb: Option<Vec<(usize, usize)>>,
    /// Kets the ket-bra elements are built from (columns); identity for the
    /// computational basis.
    kets: CMatrix,
}

impl OperatorBasis {
    /// Computational ket-bra basis, diagonal-first.
    pub fn ket_bra(dim: usize) -> Self {
        Self {
            dim,
            kb: Some(Self::diag_first_pairs(dim)),
            kets: CMatrix::identity(dim, dim),
        }
    }

    /// Ket-bra basis built from the columns of a unitary `kets` matrix
    /// (e.g. Hamiltonian eigenvectors), diagonal-first.
    pub fn ket_bra_from_kets(kets: CMatrix) -> Result<Self> {
        let dim = kets.nrows();
        let u = Operator::new(kets.clone())?;
        if !u.is_unitary(1e-8) {
            return Err(OqsError::PredicateFailed {
                predicate: "is_unitary",
                defect: u.unitarity_defect(),
                tol: 1e-8,
            });
        }
        Ok(Self {
            dim,
            kb: Some(Self::diag_first_pairs(dim)),
            kets,
        })
    }

    fn diag_first_pairs(dim: usize) -> Vec<(usize, usize)> {
        let mut pairs = Vec::with_capacity(dim * dim);
        for n in 0..dim {
            pairs.push((n, n));
        }
        for n in 0..dim {
            for m in 0..dim {
                if n != m {
                    pairs.push((n, m));
                }
            }
        }
        pairs
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.dim * self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    /// (ket, bra) pair of element `k` for ket-bra bases.
    pub fn pair(&self, k: usize) -> Option<(usize, usize)> {
        self.kb.as_ref().map(|p| p[k])
    }

    /// Index of the element |n⟩⟨m| in the diagonal-first order.
    pub fn index_of_pair(&self, n: usize, m: usize) -> usize {
        if n == m {
            n
        } else {
            // off-diagonals start at dim, row-major with the diagonal skipped
            self.dim + n * (self.dim - 1) + if m < n { m } else { m - 1 }
        }
    }

    pub fn element(&self, k: usize) -> Operator {
        let (n, m) = self.kb.as_ref().expect("ket-bra basis")[k];
        let ket = self.kets.column(n);
        let bra = self.kets.column(m);
        Operator::new(CMatrix::from_fn(self.dim, self.dim, |i, j| {
            ket[i] * bra[j].conj()
        }))
        .expect("square by construction")
    }

    /// Coefficient column of `a` in this basis: `v[k] = tr(E_k† a)`.
    pub fn vectorize(&self, a: &Operator) -> Result<Vec<C64>> {
        if a.dim() != self.dim {
            return Err(OqsError::DimMismatch {
                expected: self.dim,
                got: a.dim(),
            });
        }
        let pairs = self.kb.as_ref().expect("ket-bra basis");
        let in_eigenbasis = self.kets.adjoint() * a.mat() * &self.kets;
        Ok(pairs.iter().map(|&(n, m)| in_eigenbasis[(n, m)]).collect())
    }

    /// Inverse of [`Self::vectorize`]; exact reorder for ket-bra bases.
    pub fn unvectorize(&self, v: &[C64]) -> Result<Operator> {
        if v.len() != self.len() {
            return Err(OqsError::DimMismatch {
                expected: self.len(),
                got: v.len(),
            });
        }
        let pairs = self.kb.as_ref().expect("ket-bra basis");
        let mut m_eig = CMatrix::zeros(self.dim, self.dim);
        for (k, &(n, m)) in pairs.iter().enumerate() {
            m_eig[(n, m)] = v[k];
        }
        Operator::new(&self.kets * m_eig * self.kets.adjoint())
    }

    /// Orthonormality defect max |tr(E_n†E_m) - δ_nm|.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let g = hs_inner(&self.element(a), &self.element(b)).expect("same dim");
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}
