//! Stochastic (random-unitary) dynamical maps: exact analytic dephasing,
//! Monte-Carlo sample averages over noise trajectories, and propagators from
//! truncated super-cumulant expansions.

mod sample_avg;
mod supercum;

pub use sample_avg::{sample_average_map, sample_average_series};
pub use supercum::{supercumulant_generator, truncated_map, truncated_map_series};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{OqsError, Result};
use crate::linalg::{self, entropy, Operator, OperatorBasis, SuperOperator};
use crate::stochastic::{ProcessSpec, RtnSpec};

/// `Ĥ[F](t) = Ĥ₀ + λF(t)V̂` with a classical driving process F.
#[derive(Clone, Debug)]
pub struct StochasticHamiltonian {
    pub h0: Operator,
    pub v: Operator,
    pub lambda: f64,
    pub process: ProcessSpec,
}

impl StochasticHamiltonian {
    pub fn new(h0: Operator, v: Operator, lambda: f64, process: ProcessSpec) -> Result<Self> {
        if h0.dim() != v.dim() {
            return Err(OqsError::DimMismatch {
                expected: h0.dim(),
                got: v.dim(),
            });
        }
        if !h0.is_hermitian(linalg::TOL) {
            return Err(OqsError::BadParameter {
                name: "h0",
                reason: format!("must be Hermitian (defect {:.3e})", h0.hermiticity_defect()),
            });
        }
        if !v.is_hermitian(linalg::TOL) {
            return Err(OqsError::BadParameter {
                name: "v",
                reason: format!("must be Hermitian (defect {:.3e})", v.hermiticity_defect()),
            });
        }
        Ok(Self {
            h0,
            v,
            lambda,
            process,
        })
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }
}

/// Truncation order of the super-cumulant series and where its cumulants
/// come from.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SuperCumulantTruncation {
    /// 1, 2, or 4; order 4 only for zero-mean processes.
    pub order: usize,
    pub source: CumulantSource,
}

impl SuperCumulantTruncation {
    pub fn analytic(order: usize) -> Self {
        Self {
            order,
            source: CumulantSource::Analytic,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CumulantSource {
    /// Closed-form mean and autocorrelation of the process spec.
    Analytic,
    /// Mean and autocorrelation estimated from sampled trajectories
    /// (order ≤ 2 only).
    Empirical { n_samples: usize, seed: u64 },
}

/// Coherence function of RTN dephasing,
/// W(t) = e^{-wt}[cosh(κt) + (w + ipλ)·sinh(κt)/κ], κ = √(w² - λ²).
///
/// Continuous across λ = w (the sinh/κ branch goes through its series);
/// for λ > w, κ is imaginary and cosh/sinh turn harmonic.
pub fn coherence_rtn(spec: &RtnSpec, lambda: f64, t: f64) -> C64 {
    let kappa = C64::new(spec.w * spec.w - lambda * lambda, 0.0).sqrt();
    let x = kappa * t;
    let cosh = x.cosh();
    let sinhc = if x.norm() < 1e-4 {
        // sinh(κt)/κ = t(1 + x²/6 + x⁴/120 + ...)
        let x2 = x * x;
        C64::new(t, 0.0) * (C64::new(1.0, 0.0) + x2 / 6.0 + x2 * x2 / 120.0)
    } else {
        x.sinh() / kappa
    };
    let coefficient = C64::new(spec.w, spec.p * lambda);
    C64::new((-spec.w * t).exp(), 0.0) * (cosh + coefficient * sinhc)
}

/// Pure-dephasing map for `H[F](t) = λF(t)V̂` with V̂ = Σ v_n|n⟩⟨n| diagonal:
/// populations pass through, the (n,m) coherence is multiplied by
/// `phase_avg(g)` = average of e^{-i·g·∫F(s)ds} at gap g = λ(v_n - v_m).
pub fn dephasing_map(
    v_eigenvalues: &[f64],
    lambda: f64,
    phase_avg: impl Fn(f64) -> C64,
) -> Result<SuperOperator> {
    let d = v_eigenvalues.len();
    let basis = OperatorBasis::ket_bra(d);
    let n = basis.len();
    let mut mat = crate::linalg::CMatrix::zeros(n, n);
    for k in 0..n {
        let (row, col) = basis.pair(k).expect("ket-bra basis");
        mat[(k, k)] = if row == col {
            C64::new(1.0, 0.0)
        } else {
            phase_avg(lambda * (v_eigenvalues[row] - v_eigenvalues[col]))
        };
    }
    SuperOperator::from_matrix(basis, mat)
}

/// Checks `S(map[ρ]) ≥ S(ρ) - tol`; random-unitary maps can only mix.
pub fn entropy_monotonicity_check(map: &SuperOperator, rho: &Operator) -> Result<bool> {
    let before = entropy(rho)?;
    let after = entropy(&map.apply(rho)?)?;
    Ok(after >= before - 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherence_no_coupling_is_one() {
        let spec = RtnSpec::new(1.0, 0.4).unwrap();
        for &t in &[0.0, 0.7, 3.0] {
            let w = coherence_rtn(&spec, 0.0, t);
            assert!((w - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn coherence_resonant_limit() {
        // λ = w, p = 0: W(t) = e^{-wt}(1 + wt)
        let w = 0.9;
        let spec = RtnSpec::unbiased(w).unwrap();
        for &t in &[0.0, 0.5, 2.0, 5.0] {
            let got = coherence_rtn(&spec, w, t);
            let expect = (-w * t).exp() * (1.0 + w * t);
            assert!((got - C64::new(expect, 0.0)).norm() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn coherence_continuity_across_resonance() {
        let spec = RtnSpec::new(1.0, 0.3).unwrap();
        let t = 1.7;
        let below = coherence_rtn(&spec, 1.0 - 1e-9, t);
        let at = coherence_rtn(&spec, 1.0, t);
        let above = coherence_rtn(&spec, 1.0 + 1e-9, t);
        assert!((below - at).norm() < 1e-7);
        assert!((above - at).norm() < 1e-7);
    }

    #[test]
    fn coherence_strong_coupling_oscillates_under_envelope() {
        // λ ≫ w: |W| decays ~ e^{-wt} with oscillations (cosh → cos regime)
        let spec = RtnSpec::unbiased(0.2).unwrap();
        let lambda = 4.0;
        let mut crossed_zero = false;
        let mut prev = coherence_rtn(&spec, lambda, 0.0).re;
        for i in 1..200 {
            let t = i as f64 * 0.02;
            let w = coherence_rtn(&spec, lambda, t);
            assert!(w.norm() <= (-0.2 * t).exp() * (1.0 + 0.2 * t) + 1e-9);
            if w.re.signum() != prev.signum() {
                crossed_zero = true;
            }
            prev = w.re;
        }
        assert!(crossed_zero, "harmonic regime must oscillate");
    }

    #[test]
    fn coherence_frozen_noise() {
        // w = 0: W = cos λt + i p sin λt
        let spec = RtnSpec::new(0.0, 0.6).unwrap();
        let (lambda, t) = (1.3, 0.9);
        let got = coherence_rtn(&spec, lambda, t);
        let expect = C64::new((lambda * t).cos(), 0.6 * (lambda * t).sin());
        assert!((got - expect).norm() < 1e-12);
    }

    #[test]
    fn coherence_modulus_bounded_on_lattice() {
        for &w in &[0.1, 0.5, 1.0, 3.0] {
            for &lambda in &[0.0, 0.3, 1.0, 2.5] {
                for &p in &[-1.0, -0.4, 0.0, 0.7, 1.0] {
                    let spec = RtnSpec::new(w, p).unwrap();
                    for i in 0..40 {
                        let t = i as f64 * 0.25;
                        let m = coherence_rtn(&spec, lambda, t).norm();
                        assert!(m <= 1.0 + 1e-12, "|W|={m} at w={w} λ={lambda} p={p} t={t}");
                    }
                }
            }
        }
    }

    #[test]
    fn dephasing_map_qubit_is_diag_1_1_wstar_w() {
        // V = σ_z/2: map = diag(1, 1, W*, W) in the usual qubit ordering
        let spec = RtnSpec::new(0.8, 0.5).unwrap();
        let (lambda, t) = (1.1, 0.7);
        let w_plus = coherence_rtn(&spec, lambda, t);
        let map = dephasing_map(&[0.5, -0.5], lambda, |g| coherence_rtn(&spec, -g, t)).unwrap();
        assert!((map.mat()[(2, 2)] - w_plus.conj()).norm() < 1e-13);
        assert!((map.mat()[(3, 3)] - w_plus).norm() < 1e-13);
        assert!((map.mat()[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((map.mat()[(1, 1)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(map.trace_preservation_defect() < 1e-12);
    }

    #[test]
    fn dephasing_map_equal_eigenvalues_is_identity() {
        let spec = RtnSpec::unbiased(1.0).unwrap();
        let map = dephasing_map(&[0.7, 0.7, 0.7], 2.0, |g| coherence_rtn(&spec, -g, 1.0)).unwrap();
        let id = SuperOperator::identity(3);
        assert!(crate::linalg::max_abs_diff(map.mat(), id.mat()) < 1e-13);
    }

    #[test]
    fn dephasing_long_time_erases_coherences() {
        let spec = RtnSpec::unbiased(1.0).unwrap();
        let t = 60.0;
        let map = dephasing_map(&[0.5, -0.5], 1.4, |g| coherence_rtn(&spec, -g, t)).unwrap();
        let rho = Operator::plus_projector();
        let out = map.apply(&rho).unwrap();
        assert!(out.mat()[(0, 1)].norm() < 1e-10);
        assert!((out.mat()[(0, 0)] - C64::new(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn entropy_monotonicity_cases() {
        // unitary map: equality
        let u = Operator::pauli_z()
            .scale_re(0.5)
            .expm_scaled(C64::new(0.0, -1.2))
            .unwrap();
        let umap = crate::propagators::lift_unitary(&u).unwrap();
        let rho = Operator::diag(&[0.8, 0.2]);
        assert!(entropy_monotonicity_check(&umap, &rho).unwrap());
        let s_before = entropy(&rho).unwrap();
        let s_after = entropy(&umap.apply(&rho).unwrap()).unwrap();
        assert!((s_before - s_after).abs() < 1e-10);

        // full dephasing of |X⟩⟨X| raises entropy to ln 2
        let spec = RtnSpec::unbiased(1.0).unwrap();
        let map = dephasing_map(&[0.5, -0.5], 1.0, |g| coherence_rtn(&spec, -g, 80.0)).unwrap();
        assert!(entropy_monotonicity_check(&map, &Operator::plus_projector()).unwrap());
        let after = entropy(&map.apply(&Operator::plus_projector()).unwrap()).unwrap();
        assert!((after - 2.0f64.ln()).abs() < 1e-9);

        // completely mixed input stays at ln 2
        let mixed = Operator::diag(&[0.5, 0.5]);
        assert!(entropy_monotonicity_check(&map, &mixed).unwrap());
    }
}
