use crate::error::{OqsError, Result};
use crate::linalg::{CMatrix, Operator};

/// Frequency decomposition V̂ = Σ_ω V̂_ω with V̂_ω collecting the matrix
/// elements of V̂ at Bohr frequency ω = ε_a - ε_b of Ĥ_S′:
/// V̂_ω = Σ_{(a,b): ε_a-ε_b ≈ ω} |a⟩V_ab⟨b|, and V̂_{-ω} = V̂_ω†.
#[derive(Clone, Debug)]
pub struct FrequencyDecomposition {
    /// Distinct Bohr frequencies, ascending, clustered within `gap_tol`.
    pub omegas: Vec<f64>,
    /// V̂_ω in the original (computational) basis, same order as `omegas`.
    pub v_omega: Vec<Operator>,
    /// Eigenvalues ε_a of Ĥ_S′, ascending.
    pub energies: Vec<f64>,
    /// Eigenvector columns of Ĥ_S′ matching `energies`.
    pub kets: CMatrix,
    /// V̂ in the eigenbasis.
    pub v_eigen: CMatrix,
    pub gap_tol: f64,
}

impl FrequencyDecomposition {
    /// Index of the frequency shell containing ω, if any.
    pub fn shell_of(&self, omega: f64) -> Option<usize> {
        self.omegas
            .iter()
            .position(|&w| (w - omega).abs() <= self.gap_tol)
    }

    /// Reconstruction defect ‖Σ_ω V̂_ω - V̂‖_max (exact partition of matrix
    /// elements, so machine-zero).
    pub fn reconstruction_defect(&self, v: &Operator) -> f64 {
        let d = v.dim();
        let mut acc = CMatrix::zeros(d, d);
        for vw in &self.v_omega {
            acc += vw.mat();
        }
        crate::linalg::max_abs_diff(&acc, v.mat())
    }

    /// Hermiticity pairing defect max_ω ‖V̂_{-ω} - V̂_ω†‖_max.
    pub fn conjugate_pairing_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, &w) in self.omegas.iter().enumerate() {
            if let Some(j) = self.shell_of(-w) {
                worst = worst.max(self.v_omega[j].max_abs_diff(&self.v_omega[i].dagger()));
            } else if self.v_omega[i].max_abs() > 1e-14 {
                worst = f64::INFINITY;
            }
        }
        worst
    }
}

/// Partitions V̂'s matrix elements by Bohr frequency of `hs_prime`.
///
/// Frequencies closer than `gap_tol` are merged into one shell — the
/// exact δ(ω-ω') matching, discretized for floating-point spectra.
pub fn frequency_decompose(
    hs_prime: &Operator,
    v: &Operator,
    gap_tol: f64,
) -> Result<FrequencyDecomposition> {
    if !hs_prime.is_hermitian(crate::linalg::TOL) {
        return Err(OqsError::PredicateFailed {
            predicate: "is_hermitian",
            defect: hs_prime.hermiticity_defect(),
            tol: crate::linalg::TOL,
        });
    }
    let d = hs_prime.dim();
    if v.dim() != d {
        return Err(OqsError::DimMismatch {
            expected: d,
            got: v.dim(),
        });
    }
    let (vals_raw, kets) = hs_prime.herm_eigen();
    // ascending energy order
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| vals_raw[a].partial_cmp(&vals_raw[b]).expect("finite"));
    let energies: Vec<f64> = order.iter().map(|&i| vals_raw[i]).collect();
    let mut kets_sorted = CMatrix::zeros(d, d);
    for (new, &old) in order.iter().enumerate() {
        for r in 0..d {
            kets_sorted[(r, new)] = kets[(r, old)];
        }
    }
    let v_eigen = kets_sorted.adjoint() * v.mat() * &kets_sorted;

    // collect all pair frequencies, cluster within gap_tol
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            pairs.push((energies[a] - energies[b], a, b));
        }
    }
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite"));

    let mut omegas = Vec::new();
    let mut v_omega = Vec::new();
    let mut cluster: Vec<(f64, usize, usize)> = Vec::new();
    let flush = |cluster: &mut Vec<(f64, usize, usize)>,
                     omegas: &mut Vec<f64>,
                     v_omega: &mut Vec<Operator>| {
        if cluster.is_empty() {
            return;
        }
        let mean = cluster.iter().map(|c| c.0).sum::<f64>() / cluster.len() as f64;
        let mut block = CMatrix::zeros(d, d);
        for &(_, a, b) in cluster.iter() {
            block[(a, b)] = v_eigen[(a, b)];
        }
        // back to the computational basis
        let op = &kets_sorted * block * kets_sorted.adjoint();
        omegas.push(mean);
        v_omega.push(Operator::new(op).expect("square"));
        cluster.clear();
    };
    for p in pairs {
        if let Some(&(last, _, _)) = cluster.last() {
            if (p.0 - last).abs() > gap_tol {
                flush(&mut cluster, &mut omegas, &mut v_omega);
            }
        }
        cluster.push(p);
    }
    flush(&mut cluster, &mut omegas, &mut v_omega);

    Ok(FrequencyDecomposition {
        omegas,
        v_omega,
        energies,
        kets: kets_sorted,
        v_eigen,
        gap_tol,
    })
}
