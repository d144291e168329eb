use num_complex::Complex64 as C64;

use crate::error::{OqsError, Result};
use crate::linalg::{CMatrix, Operator};

/// Spectral decomposition F̂ = Σ_{f∈Ω(F)} f·P̂(f) with eigenvalues grouped
/// into degenerate shells.
///
/// Floating-point spectra never repeat exactly, so eigenvalues closer than
/// a relative gap of 1e-8·(spectral range) are merged into one projector.
#[derive(Clone, Debug)]
pub struct SpectralDecompF {
    /// Distinct eigenvalues, ascending (mean of each merged cluster).
    pub eigenvalues: Vec<f64>,
    /// Projector onto each degenerate subspace, same order.
    pub projectors: Vec<Operator>,
}

impl SpectralDecompF {
    pub fn new(f: &Operator) -> Result<Self> {
        Self::with_gap_tol(f, 1e-8)
    }

    pub fn with_gap_tol(f: &Operator, rel_gap: f64) -> Result<Self> {
        if !f.is_hermitian(crate::linalg::TOL) {
            return Err(OqsError::PredicateFailed {
                predicate: "is_hermitian",
                defect: f.hermiticity_defect(),
                tol: crate::linalg::TOL,
            });
        }
        let (vals, kets) = f.herm_eigen();
        let d = f.dim();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).expect("finite"));

        let range = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let tol = if range > 0.0 { rel_gap * range } else { f64::MAX };

        let mut eigenvalues = Vec::new();
        let mut projectors = Vec::new();
        let mut cluster: Vec<usize> = Vec::new();
        let flush = |cluster: &mut Vec<usize>,
                         eigenvalues: &mut Vec<f64>,
                         projectors: &mut Vec<Operator>| {
            if cluster.is_empty() {
                return;
            }
            let mean = cluster.iter().map(|&i| vals[i]).sum::<f64>() / cluster.len() as f64;
            let mut proj = CMatrix::zeros(d, d);
            for &i in cluster.iter() {
                let col = kets.column(i);
                for r in 0..d {
                    for c in 0..d {
                        proj[(r, c)] += col[r] * col[c].conj();
                    }
                }
            }
            eigenvalues.push(mean);
            projectors.push(Operator::new(proj).expect("square"));
            cluster.clear();
        };
        for &i in &order {
            if let Some(&last) = cluster.last() {
                if (vals[i] - vals[last]).abs() > tol {
                    flush(&mut cluster, &mut eigenvalues, &mut projectors);
                }
            }
            cluster.push(i);
        }
        flush(&mut cluster, &mut eigenvalues, &mut projectors);

        let decomp = Self {
            eigenvalues,
            projectors,
        };
        decomp.check(f)?;
        Ok(decomp)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// P_I(f, s) = e^{isH} P(f) e^{-isH} for the projector at index `idx`,
    /// given the eigendecomposition (vals, kets) of H.
    pub fn projector_interaction(
        &self,
        idx: usize,
        h_vals: &nalgebra::DVector<f64>,
        h_kets: &CMatrix,
        s: f64,
    ) -> Operator {
        let d = h_kets.nrows();
        let mut phases = CMatrix::zeros(d, d);
        for i in 0..d {
            phases[(i, i)] = C64::new(0.0, h_vals[i] * s).exp();
        }
        let rot = h_kets * phases * h_kets.adjoint();
        Operator::new(&rot * self.projectors[idx].mat() * rot.adjoint()).expect("square")
    }

    fn check(&self, f: &Operator) -> Result<()> {
        let d = f.dim();
        // Σ P(f) = 1 and Σ f·P(f) = F
        let mut ident = CMatrix::zeros(d, d);
        let mut rebuilt = CMatrix::zeros(d, d);
        for (val, proj) in self.eigenvalues.iter().zip(self.projectors.iter()) {
            ident += proj.mat();
            rebuilt += proj.mat() * C64::new(*val, 0.0);
        }
        let id_defect = crate::linalg::max_abs_diff(&ident, &CMatrix::identity(d, d));
        if id_defect > 1e-10 {
            return Err(OqsError::PredicateFailed {
                predicate: "projector completeness",
                defect: id_defect,
                tol: 1e-10,
            });
        }
        // reconstruction error is bounded by the merge tolerance
        let rec_defect = crate::linalg::max_abs_diff(&rebuilt, f.mat());
        let range = self
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
            - self.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if rec_defect > (1e-7 * range).max(1e-9) {
            return Err(OqsError::PredicateFailed {
                predicate: "spectral reconstruction",
                defect: rec_defect,
                tol: (1e-7 * range).max(1e-9),
            });
        }
        Ok(())
    }
}
