use num_complex::Complex64 as C64;

use super::{SEModel, TOTAL_DIM_CAP};
use crate::error::{OqsError, Result};
use crate::linalg::{CMatrix, Operator, OperatorBasis, SuperOperator};

/// Exact dynamical map ⟨U⟩(t,0) = tr_E(U_SE(t) •⊗ρ_E U_SE†(t)) by full
/// diagonalization of H_SE.
pub fn exact_dynamical_map(m: &SEModel, t: f64) -> Result<SuperOperator> {
    Ok(exact_map_series(m, &[t])?.pop().expect("one entry").1)
}

/// Exact map at several times, diagonalizing H_SE once.
pub fn exact_map_series(m: &SEModel, times: &[f64]) -> Result<Vec<(f64, SuperOperator)>> {
    let total = m.dim_s() * m.dim_e();
    if total > TOTAL_DIM_CAP {
        return Err(OqsError::CapExceeded {
            what: "dimS*dimE",
            got: total,
            cap: TOTAL_DIM_CAP,
        });
    }
    let h = m.total_hamiltonian()?;
    let (vals, kets) = h.herm_eigen();
    let kets_adj = kets.adjoint();
    let sp = m.space();
    let basis = OperatorBasis::ket_bra(m.dim_s());

    times
        .iter()
        .map(|&t| {
            let mut phases = CMatrix::zeros(total, total);
            for i in 0..total {
                phases[(i, i)] = C64::new(0.0, -vals[i] * t).exp();
            }
            let u = &kets * &phases * &kets_adj;
            let u_op = Operator::new(u)?;
            let map = SuperOperator::from_action(basis.clone(), |e| {
                let lifted = sp.kron(e, &m.rho_e).expect("dims fixed");
                let evolved = &(&u_op * &lifted) * &u_op.dagger();
                sp.partial_trace_e(&evolved).expect("dims fixed")
            })?;
            Ok((t, map))
        })
        .collect()
}

/// Kraus operators K_{jj'} = √ρ_j ⟨j'| e^{-itH_SE} |j⟩ built from the
/// eigenbasis {|j⟩} of ρ_E; Σ K†K = 1 and Σ K•K† equals the exact map.
#[derive(Clone, Debug)]
pub struct KrausSet {
    pub operators: Vec<Operator>,
}

impl KrausSet {
    /// ‖Σ K†K - 1‖_max.
    pub fn completeness_defect(&self) -> f64 {
        let d = self.operators[0].dim();
        let mut acc = CMatrix::zeros(d, d);
        for k in &self.operators {
            acc += k.dagger().mat() * k.mat();
        }
        crate::linalg::max_abs_diff(&acc, &CMatrix::identity(d, d))
    }

    /// Σ K ρ K†.
    pub fn apply(&self, rho: &Operator) -> Result<Operator> {
        let d = self.operators[0].dim();
        if rho.dim() != d {
            return Err(OqsError::DimMismatch {
                expected: d,
                got: rho.dim(),
            });
        }
        let mut out = CMatrix::zeros(d, d);
        for k in &self.operators {
            out += k.mat() * rho.mat() * k.dagger().mat();
        }
        Operator::new(out)
    }

    /// Superoperator matrix of Σ K • K†.
    pub fn to_superoperator(&self) -> Result<SuperOperator> {
        let d = self.operators[0].dim();
        SuperOperator::from_action(OperatorBasis::ket_bra(d), |e| {
            self.apply(e).expect("same dim")
        })
    }
}

pub fn kraus_from_model(m: &SEModel, t: f64) -> Result<KrausSet> {
    let total = m.dim_s() * m.dim_e();
    if total > TOTAL_DIM_CAP {
        return Err(OqsError::CapExceeded {
            what: "dimS*dimE",
            got: total,
            cap: TOTAL_DIM_CAP,
        });
    }
    let (rho_vals, rho_kets) = m.rho_e.herm_eigen();
    let h = m.total_hamiltonian()?;
    let u = h.expm_scaled(C64::new(0.0, -t))?;
    let (ds, de) = (m.dim_s(), m.dim_e());

    let mut operators = Vec::new();
    for j in 0..de {
        let weight = rho_vals[j];
        if weight <= crate::linalg::EIG_CUT {
            continue; // zero-probability eigenstate contributes nothing
        }
        let sqrt_w = weight.sqrt();
        let ket_j = rho_kets.column(j);
        for j_prime in 0..de {
            let bra_jp = rho_kets.column(j_prime);
            // K[n', n] = √ρ_j Σ_{e,e'} conj(jp[e']) U[(n',e'),(n,e)] j[e]
            let mut k = CMatrix::zeros(ds, ds);
            for n_prime in 0..ds {
                for n in 0..ds {
                    let mut acc = C64::new(0.0, 0.0);
                    for e_prime in 0..de {
                        for e in 0..de {
                            acc += bra_jp[e_prime].conj()
                                * u.mat()[(n_prime * de + e_prime, n * de + e)]
                                * ket_j[e];
                        }
                    }
                    k[(n_prime, n)] = acc * sqrt_w;
                }
            }
            operators.push(Operator::new(k)?);
        }
    }
    Ok(KrausSet { operators })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::entropy;
    use crate::propagators::lift_unitary;

    /// Two-qubit model H = (λ/2)σ_z⊗σ_z, ρ_SE = |X⟩⟨X|⊗|X⟩⟨X|.
    fn pair_model(lambda: f64) -> SEModel {
        SEModel::new(
            Operator::zeros(2),
            Operator::zeros(2),
            Operator::pauli_z().scale_re(0.5),
            Operator::pauli_z(),
            lambda,
            Operator::plus_projector(),
        )
        .unwrap()
    }

    #[test]
    fn uncoupled_model_reduces_to_free_unitary() {
        let m = SEModel::new(
            Operator::pauli_z().scale_re(0.7),
            Operator::diag(&[0.0, 1.0]),
            Operator::pauli_x(),
            Operator::pauli_z(),
            0.0,
            Operator::diag(&[0.5, 0.5]),
        )
        .unwrap();
        let t = 1.3;
        let map = exact_dynamical_map(&m, t).unwrap();
        let u = m.hs.expm_scaled(C64::new(0.0, -t)).unwrap();
        let expect = lift_unitary(&u).unwrap();
        assert!(crate::linalg::max_abs_diff(map.mat(), expect.mat()) < 1e-12);
    }

    #[test]
    fn open_qubit_coherence_is_cosine() {
        let lambda = 1.0;
        let m = pair_model(lambda);
        for &t in &[0.3, 1.0, 2.2] {
            let map = exact_dynamical_map(&m, t).unwrap();
            let rho = map.apply(&Operator::plus_projector()).unwrap();
            let expect = (lambda * t).cos() / 2.0;
            assert!(
                (rho.mat()[(0, 1)] - C64::new(expect, 0.0)).norm() < 1e-12,
                "t = {t}"
            );
            assert!((rho.mat()[(0, 0)].re - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn open_qubit_purity_oscillates() {
        // ρ_S at λt = π/2 is maximally mixed with entropy ln 2
        let m = pair_model(1.0);
        let t = std::f64::consts::FRAC_PI_2;
        let rho = exact_dynamical_map(&m, t)
            .unwrap()
            .apply(&Operator::plus_projector())
            .unwrap();
        assert!(rho.max_abs_diff(&Operator::diag(&[0.5, 0.5])) < 1e-12);
        assert!((entropy(&rho).unwrap() - 2.0f64.ln()).abs() < 1e-12);
        // and returns to pure at λt = π
        let rho2 = exact_dynamical_map(&m, std::f64::consts::PI)
            .unwrap()
            .apply(&Operator::plus_projector())
            .unwrap();
        assert!(entropy(&rho2).unwrap() < 1e-10);
    }

    #[test]
    fn map_is_trace_preserving_and_cp() {
        let m = SEModel::with_thermal_env(
            Operator::pauli_z().scale_re(0.8),
            Operator::diag(&[0.0, 0.7, 1.9]),
            Operator::pauli_x(),
            Operator::from_fn(3, |i, j| {
                if i == j {
                    C64::new(i as f64 - 1.0, 0.0)
                } else {
                    C64::new(0.3, 0.0)
                }
            }),
            0.6,
            1.1,
        )
        .unwrap();
        let map = exact_dynamical_map(&m, 1.4).unwrap();
        assert!(map.trace_preservation_defect() < 1e-11);
        assert!(map.choi_min_eigenvalue().unwrap() > -1e-9);
    }

    #[test]
    fn dim_cap_enforced() {
        let big = Operator::identity(9);
        let m = SEModel::new(
            big.clone(),
            big.clone(),
            big.clone(),
            big.clone(),
            0.1,
            Operator::new(big.mat().scale(1.0 / 9.0)).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            exact_dynamical_map(&m, 1.0),
            Err(OqsError::CapExceeded { .. })
        ));
    }

    #[test]
    fn kraus_at_zero_time_is_identity_map() {
        let m = pair_model(0.9);
        let kraus = kraus_from_model(&m, 0.0).unwrap();
        assert!(kraus.completeness_defect() < 1e-12);
        let rho = Operator::plus_projector();
        assert!(kraus.apply(&rho).unwrap().max_abs_diff(&rho) < 1e-12);
    }

    #[test]
    fn pure_env_gives_dim_e_operators() {
        let m = pair_model(0.9); // ρ_E = |X⟩⟨X| is pure
        let kraus = kraus_from_model(&m, 0.8).unwrap();
        assert_eq!(kraus.operators.len(), 2);
        assert!(kraus.completeness_defect() < 1e-12);
    }

    #[test]
    fn kraus_reproduces_exact_map() {
        let m = SEModel::with_thermal_env(
            Operator::pauli_z().scale_re(0.4),
            Operator::diag(&[0.0, 1.0, 1.7]),
            Operator::pauli_x(),
            Operator::diag(&[-1.0, 0.2, 1.0]),
            0.7,
            0.9,
        )
        .unwrap();
        let t = 1.1;
        let kraus = kraus_from_model(&m, t).unwrap();
        assert!(kraus.completeness_defect() < 1e-10);
        let map = exact_dynamical_map(&m, t).unwrap();
        let via_kraus = kraus.to_superoperator().unwrap();
        assert!(crate::linalg::max_abs_diff(map.mat(), via_kraus.mat()) < 1e-9);
    }

    #[test]
    fn n_qubit_bath_trends_gaussian() {
        // n environment qubits, coupling λ/√n each: off-diagonal is
        // cos^n(λt/√n) → e^{-λ²t²/2}
        let lambda = 1.0;
        let t = 0.8;
        let mut deviations = Vec::new();
        for n in [1usize, 2, 4] {
            let dim_e = 1 << n;
            // Σ_k 1^{⊗(k-1)} ⊗ σ_z ⊗ 1^{⊗(n-k)} is diagonal with entries
            // (sum of ±1 over bits)
            let diag: Vec<f64> = (0..dim_e)
                .map(|idx| {
                    (0..n)
                        .map(|b| if idx >> b & 1 == 0 { 1.0 } else { -1.0 })
                        .sum()
                })
                .collect();
            let f = Operator::diag(&diag);
            let rho_e = Operator::from_fn(dim_e, |_, _| {
                C64::new(1.0 / dim_e as f64, 0.0) // |X⟩⟨X|^{⊗n}
            });
            let m = SEModel::new(
                Operator::zeros(2),
                Operator::zeros(dim_e),
                Operator::pauli_z().scale_re(0.5),
                f,
                lambda / (n as f64).sqrt(),
                rho_e,
            )
            .unwrap();
            let rho = exact_dynamical_map(&m, t)
                .unwrap()
                .apply(&Operator::plus_projector())
                .unwrap();
            let got = rho.mat()[(0, 1)].re * 2.0;
            let exact_cos = (lambda * t / (n as f64).sqrt()).cos().powi(n as i32);
            assert!((got - exact_cos).abs() < 1e-11, "n = {n}");
            deviations.push((got - (-lambda * lambda * t * t / 2.0).exp()).abs());
        }
        assert!(
            deviations.windows(2).all(|w| w[1] < w[0]),
            "Gaussianization must be monotone: {deviations:?}"
        );
    }
}
