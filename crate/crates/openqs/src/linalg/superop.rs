use num_complex::Complex64 as C64;

use super::{expm, hs_inner, CMatrix, Operator, OperatorBasis};
use crate::error::{OqsError, Result};

/// Matrix representation of a superoperator in an operator basis:
/// `S_nm = tr(E_n† S[E_m])`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOperator {
    basis: OperatorBasis,
    mat: CMatrix,
}

impl SuperOperator {
    /// Builds the matrix of the map `action` by applying it to every basis
    /// element: column m = `vec(S[E_m])`.
    pub fn from_action(
        basis: OperatorBasis,
        action: impl Fn(&Operator) -> Operator,
    ) -> Result<Self> {
        let n = basis.len();
        let mut mat = CMatrix::zeros(n, n);
        for m in 0..n {
            let col = basis.vectorize(&action(&basis.element(m)))?;
            for (i, z) in col.into_iter().enumerate() {
                mat[(i, m)] = z;
            }
        }
        Ok(Self { basis, mat })
    }

    pub fn from_matrix(basis: OperatorBasis, mat: CMatrix) -> Result<Self> {
        if mat.nrows() != basis.len() || mat.ncols() != basis.len() {
            return Err(OqsError::DimMismatch {
                expected: basis.len(),
                got: mat.nrows(),
            });
        }
        Ok(Self { basis, mat })
    }

    pub fn identity(dim: usize) -> Self {
        let basis = OperatorBasis::ket_bra(dim);
        let n = basis.len();
        Self {
            basis,
            mat: CMatrix::identity(n, n),
        }
    }

    /// Hilbert-space dimension d (the matrix is d²×d²).
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &OperatorBasis {
        &self.basis
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn mat_mut(&mut self) -> &mut CMatrix {
        &mut self.mat
    }

    /// Applies the map: vectorize, multiply, unvectorize.
    pub fn apply(&self, a: &Operator) -> Result<Operator> {
        let v = self.basis.vectorize(a)?;
        let v = nalgebra::DVector::from_vec(v);
        let w = &self.mat * v;
        self.basis.unvectorize(w.as_slice())
    }

    /// Composition (self ∘ rhs).
    pub fn compose(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.dim(), rhs.dim());
        Self {
            basis: self.basis.clone(),
            mat: &self.mat * &rhs.mat,
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self {
            basis: self.basis.clone(),
            mat: &self.mat + &rhs.mat,
        }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            basis: self.basis.clone(),
            mat: &self.mat * z,
        }
    }

    pub fn expm(&self) -> Result<Self> {
        Ok(Self {
            basis: self.basis.clone(),
            mat: expm(&self.mat)?,
        })
    }

    /// Trace-preservation defect: max over basis columns of
    /// `|tr(S[E_m]) - tr(E_m)|`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..self.basis.len() {
            let e = self.basis.element(m);
            let mapped = self.apply(&e).expect("same basis");
            worst = worst.max((mapped.trace() - e.trace()).norm());
        }
        worst
    }

    /// Choi matrix C = Σ_nm |n⟩⟨m| ⊗ S[|n⟩⟨m|]; the map is completely
    /// positive iff C is positive semidefinite.
    pub fn choi(&self) -> Result<Operator> {
        let d = self.dim();
        let mut choi = CMatrix::zeros(d * d, d * d);
        for n in 0..d {
            for m in 0..d {
                let mapped = self.apply(&Operator::ket_bra(d, n, m))?;
                for i in 0..d {
                    for j in 0..d {
                        choi[(n * d + i, m * d + j)] = mapped.mat()[(i, j)];
                    }
                }
            }
        }
        Operator::new(choi)
    }

    /// Smallest Choi eigenvalue; ≥ -tol certifies complete positivity.
    pub fn choi_min_eigenvalue(&self) -> Result<f64> {
        let choi = self.choi()?;
        let (vals, _) = choi.herm_eigen();
        Ok(vals.iter().cloned().fold(f64::INFINITY, f64::min))
    }
}

/// Matrix representation of A ↦ [h, A] = hA - Ah (without the -i).
pub fn commutator_super(h: &Operator) -> Result<SuperOperator> {
    let basis = OperatorBasis::ket_bra(h.dim());
    SuperOperator::from_action(basis, |a| &(h * a) - &(a * h))
}

/// Matrix representation of A ↦ l·A·r.
pub fn left_right_super(l: &Operator, r: &Operator) -> Result<SuperOperator> {
    if l.dim() != r.dim() {
        return Err(OqsError::DimMismatch {
            expected: l.dim(),
            got: r.dim(),
        });
    }
    let basis = OperatorBasis::ket_bra(l.dim());
    SuperOperator::from_action(basis, |a| &(l * a) * r)
}

/// Superoperator matrix element identity `tr(E_n† S[E_m])`, for tests.
pub fn matrix_element(s: &SuperOperator, n: usize, m: usize) -> C64 {
    let en = s.basis().element(n);
    let em = s.basis().element(m);
    hs_inner(&en, &s.apply(&em).expect("same dim")).expect("same dim")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    #[test]
    fn sz_commutator_is_diagonal_0_0_1_m1() {
        // matrix of [σ_z/2, •] in the diagonal-first qubit ket-bra ordering
        let s = commutator_super(&Operator::pauli_z().scale_re(0.5)).unwrap();
        let expect = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
        ]));
        assert!(max_abs_diff(s.mat(), &expect) < 1e-14);
    }

    #[test]
    fn identity_commutes_and_sigma_x_traceless() {
        let zero = commutator_super(&Operator::identity(4)).unwrap();
        assert!(super::super::max_abs(zero.mat()) < 1e-14);
        let sx = commutator_super(&Operator::pauli_x()).unwrap();
        assert!(sx.mat().trace().norm() < 1e-14);
    }

    #[test]
    fn left_right_super_cases() {
        let id = Operator::identity(2);
        let lr = left_right_super(&id, &id).unwrap();
        assert!(max_abs_diff(lr.mat(), &CMatrix::identity(4, 4)) < 1e-14);

        // projector sandwich picks out ρ_00
        let p = Operator::ket_bra(2, 0, 0);
        let sandwich = left_right_super(&p, &p).unwrap();
        let rho = Operator::from_fn(2, |i, j| C64::new((1 + i + 2 * j) as f64, 0.0));
        let out = sandwich.apply(&rho).unwrap();
        assert!((out.mat()[(0, 0)] - rho.mat()[(0, 0)]).norm() < 1e-14);
        assert!(out.mat()[(1, 1)].norm() < 1e-14);
        assert!(out.mat()[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn unitary_conjugation_preserves_hs_norm_and_density() {
        let h = Operator::from_fn(2, |i, j| C64::new((i + j) as f64, i as f64 - j as f64));
        let h = Operator::new((h.mat() + h.mat().adjoint()).scale(0.5)).unwrap();
        let u = h.expm_scaled(C64::new(0.0, -0.7)).unwrap();
        let s = left_right_super(&u, &u.dagger()).unwrap();
        let rho = Operator::diag(&[0.25, 0.75]);
        let out = s.apply(&rho).unwrap();
        assert!(out.is_density(1e-12));
        // HS-unitary matrix
        let prod = s.mat().adjoint() * s.mat();
        assert!(max_abs_diff(&prod, &CMatrix::identity(4, 4)) < 1e-12);
    }

    #[test]
    fn matrix_element_identity_holds() {
        let l = Operator::from_fn(3, |i, j| C64::new(0.3 * i as f64, 0.1 * j as f64 + 0.2));
        let r = Operator::from_fn(3, |i, j| C64::new(-0.2 * j as f64, 0.45 * i as f64));
        let s = left_right_super(&l, &r).unwrap();
        for n in 0..9 {
            for m in 0..9 {
                let direct = s.mat()[(n, m)];
                let via_trace = matrix_element(&s, n, m);
                assert!((direct - via_trace).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn apply_matches_direct_action() {
        let l = Operator::pauli_x();
        let r = Operator::pauli_y();
        let s = left_right_super(&l, &r).unwrap();
        let a = Operator::from_fn(2, |i, j| C64::new(i as f64 - 0.5, 0.3 * j as f64));
        let direct = &(&l * &a) * &r;
        let via_mat = s.apply(&a).unwrap();
        assert!(direct.max_abs_diff(&via_mat) < 1e-13);
    }
}
