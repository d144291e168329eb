use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{expm, CMatrix, EIG_CUT, TOL};
use crate::error::{OqsError, Result};

/// Dense complex square matrix on a finite Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: CMatrix,
}

impl Operator {
    /// Wraps a square matrix; rejects non-square or non-finite input.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(OqsError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(OqsError::NonFinite);
        }
        Ok(Self { mat })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim),
        }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        Self {
            mat: CMatrix::from_fn(dim, dim, f),
        }
    }

    /// Real diagonal matrix.
    pub fn diag(values: &[f64]) -> Self {
        let dim = values.len();
        Self::from_fn(dim, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// |ket⟩⟨bra| on a `dim`-dimensional space.
    pub fn ket_bra(dim: usize, ket: usize, bra: usize) -> Self {
        Self::from_fn(dim, |i, j| {
            if i == ket && j == bra {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn pauli_x() -> Self {
        Self::from_fn(2, |i, j| {
            if i != j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn pauli_y() -> Self {
        Self::from_fn(2, |i, j| match (i, j) {
            (0, 1) => C64::new(0.0, -1.0),
            (1, 0) => C64::new(0.0, 1.0),
            _ => C64::new(0.0, 0.0),
        })
    }

    pub fn pauli_z() -> Self {
        Self::diag(&[1.0, -1.0])
    }

    /// |X⟩⟨X| with |X⟩ = (|0⟩ + |1⟩)/√2.
    pub fn plus_projector() -> Self {
        Self::from_fn(2, |_, _| C64::new(0.5, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_mat(self) -> CMatrix {
        self.mat
    }

    pub fn dagger(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            mat: &self.mat * z,
        }
    }

    pub fn scale_re(&self, x: f64) -> Self {
        self.scale(C64::new(x, 0.0))
    }

    /// max |A - A†| entrywise ≤ tol.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn hermiticity_defect(&self) -> f64 {
        super::max_abs_diff(&self.mat, &self.mat.adjoint())
    }

    /// max |A†A - 1| entrywise ≤ tol.
    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        super::max_abs_diff(&(self.mat.adjoint() * &self.mat), &CMatrix::identity(d, d))
    }

    /// Hermitian, eigenvalues ≥ -tol, |tr - 1| ≤ tol.
    pub fn is_density(&self, tol: f64) -> bool {
        if !self.is_hermitian(tol) {
            return false;
        }
        if (self.trace() - C64::new(1.0, 0.0)).norm() > tol {
            return false;
        }
        let (vals, _) = self.herm_eigen();
        vals.iter().all(|&v| v >= -tol)
    }

    /// Eigendecomposition of a Hermitian operator: (real eigenvalues, unitary
    /// of eigencolumns). The input is symmetrized first so callers may pass
    /// operators that are Hermitian only up to rounding.
    pub fn herm_eigen(&self) -> (DVector<f64>, CMatrix) {
        let sym = (&self.mat + self.mat.adjoint()).scale(0.5);
        let se = sym.symmetric_eigen();
        (se.eigenvalues, se.eigenvectors)
    }

    /// Matrix exponential; see [`expm`].
    pub fn expm(&self) -> Result<Self> {
        Ok(Self {
            mat: expm(&self.mat)?,
        })
    }

    /// exp(z·A), e.g. z = -i t for a Hamiltonian.
    pub fn expm_scaled(&self, z: C64) -> Result<Self> {
        Ok(Self {
            mat: expm(&(&self.mat * z))?,
        })
    }

    pub fn max_abs(&self) -> f64 {
        super::max_abs(&self.mat)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        super::max_abs_diff(&self.mat, &other.mat)
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat * &rhs.mat,
        }
    }
}

/// Hilbert–Schmidt inner product (a|b) = tr(a†b).
pub fn hs_inner(a: &Operator, b: &Operator) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(OqsError::DimMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..a.dim() {
        for i in 0..a.dim() {
            acc += a.mat[(i, j)].conj() * b.mat[(i, j)];
        }
    }
    Ok(acc)
}

/// von Neumann entropy S(ρ) = -tr[ρ ln ρ] in nats.
///
/// Eigenvalues below [`EIG_CUT`] are treated as exact zeros (0·ln 0 = 0).
pub fn entropy(rho: &Operator) -> Result<f64> {
    if !rho.is_density(TOL) {
        return Err(OqsError::PredicateFailed {
            predicate: "is_density",
            defect: rho.hermiticity_defect().max((rho.trace() - C64::new(1.0, 0.0)).norm()),
            tol: TOL,
        });
    }
    let (vals, _) = rho.herm_eigen();
    let mut s = 0.0;
    for &v in vals.iter() {
        if v > EIG_CUT {
            s -= v * v.ln();
        }
    }
    Ok(s)
}

#[derive(Serialize, Deserialize)]
struct OperatorWire {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let re = (0..d)
            .map(|i| (0..d).map(|j| self.mat[(i, j)].re).collect())
            .collect();
        let im = (0..d)
            .map(|i| (0..d).map(|j| self.mat[(i, j)].im).collect())
            .collect();
        OperatorWire { dim: d, re, im }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = OperatorWire::deserialize(deserializer)?;
        let d = wire.dim;
        if wire.re.len() != d || wire.im.len() != d {
            return Err(D::Error::custom("re/im row count does not match dim"));
        }
        if wire.re.iter().chain(wire.im.iter()).any(|row| row.len() != d) {
            return Err(D::Error::custom("re/im column count does not match dim"));
        }
        let mat = DMatrix::from_fn(d, d, |i, j| C64::new(wire.re[i][j], wire.im[i][j]));
        Operator::new(mat).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hs_inner_pauli_orthogonality() {
        let z = Operator::pauli_z();
        let x = Operator::pauli_x();
        let y = Operator::pauli_y();
        assert!((hs_inner(&z, &z).unwrap() - C64::new(2.0, 0.0)).norm() < 1e-15);
        assert!(hs_inner(&x, &y).unwrap().norm() < 1e-15);
        let coh = Operator::ket_bra(2, 0, 1);
        assert!((hs_inner(&coh, &coh).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn hs_inner_conjugate_symmetric() {
        let a = Operator::from_fn(3, |i, j| C64::new(i as f64 - 0.3, j as f64 * 0.7));
        let b = Operator::from_fn(3, |i, j| C64::new(0.1 * (i * j) as f64, -0.2 + i as f64));
        let ab = hs_inner(&a, &b).unwrap();
        let ba = hs_inner(&b, &a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-14);
    }

    #[test]
    fn hs_inner_rejects_dim_mismatch() {
        let a = Operator::identity(2);
        let b = Operator::identity(3);
        assert!(hs_inner(&a, &b).is_err());
    }

    #[test]
    fn density_predicates() {
        let rho = Operator::plus_projector();
        assert!(rho.is_density(1e-12));
        assert!(rho.is_hermitian(0.0));
        assert!(!Operator::pauli_z().is_density(1e-12));
        // negative eigenvalue, unit trace
        let bad = Operator::diag(&[1.5, -0.5]);
        assert!(!bad.is_density(1e-12));
    }

    #[test]
    fn entropy_pure_and_mixed() {
        let pure = Operator::plus_projector();
        assert!(entropy(&pure).unwrap().abs() < 1e-12);
        let mixed = Operator::diag(&[0.5, 0.5]);
        assert!((entropy(&mixed).unwrap() - 2.0f64.ln()).abs() < 1e-12);
        assert!(entropy(&Operator::pauli_x()).is_err());
    }

    #[test]
    fn entropy_unitary_invariance() {
        let rho = Operator::diag(&[0.7, 0.2, 0.1]);
        let h = Operator::from_fn(3, |i, j| {
            C64::new((i + j) as f64 * 0.3, (i as f64 - j as f64) * 0.4)
        });
        let h = Operator::new((h.mat() + h.mat().adjoint()).scale(0.5)).unwrap();
        let u = h.expm_scaled(C64::new(0.0, -1.3)).unwrap();
        let rotated = &(&u * &rho) * &u.dagger();
        assert!((entropy(&rotated).unwrap() - entropy(&rho).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn serde_round_trip_exact() {
        let a = Operator::from_fn(3, |i, j| C64::new(0.1 * i as f64 + 0.01, -0.7 * j as f64));
        let text = serde_json::to_string(&a).unwrap();
        let back: Operator = serde_json::from_str(&text).unwrap();
        assert_eq!(a, back);
    }
}
