use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{frequency_decompose, gamma_analytic, rates::gamma_fdt_broadened, FrequencyDecomposition};
use crate::error::{OqsError, Result};
use crate::linalg::{CMatrix, Operator, OperatorBasis, SuperOperator};
use crate::openq::{CentralPicture, EnvCorrelation, SEModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Redfield,
    Davies,
}

/// A weak-coupling master-equation generator: Hamiltonian part (including
/// the λ²-order Lamb-type shift for Davies), the dissipator with λ²
/// absorbed, and the γ_ω rates it was assembled from.
#[derive(Clone, Debug)]
pub struct GeneratorBundle {
    pub kind: GeneratorKind,
    /// Ĥ_S′ = Ĥ_S + λ⟨F⟩V̂, the operator the Gibbs fixed point refers to.
    pub hs_prime: Operator,
    /// Full Hamiltonian part of the generator (Lamb-type shift included).
    pub hamiltonian: Operator,
    /// Dissipative part as a superoperator matrix, λ² included.
    pub dissipator: SuperOperator,
    /// (ω, γ_ω) per frequency shell.
    pub rates: Vec<(f64, C64)>,
    pub freq: FrequencyDecomposition,
    pub lambda: f64,
    pub beta: Option<f64>,
}

impl GeneratorBundle {
    /// Total generator -i[H, •] + D as a superoperator matrix in the
    /// computational ket-bra basis.
    pub fn generator(&self) -> Result<SuperOperator> {
        let comm = crate::linalg::commutator_super(&self.hamiltonian)?;
        SuperOperator::from_matrix(
            comm.basis().clone(),
            comm.mat() * C64::new(0.0, -1.0) + self.dissipator.mat(),
        )
    }

    /// Generator matrix in the eigenbasis of Ĥ_S′ (diagonal-first ket-bra
    /// ordering); block-diagonal between populations and coherences for
    /// non-degenerate spectra under the secular approximation.
    pub fn generator_in_eigenbasis(&self) -> Result<SuperOperator> {
        let basis = OperatorBasis::ket_bra_from_kets(self.freq.kets.clone())?;
        let full = self.generator()?;
        SuperOperator::from_action(basis, |a| full.apply(a).expect("same dim"))
    }

    /// Gibbs state e^{-βĤ_S′}/Z, the thermalization target.
    pub fn gibbs(&self) -> Result<Operator> {
        let beta = self.beta.ok_or_else(|| {
            OqsError::NotThermal("bundle carries no inverse temperature".into())
        })?;
        crate::openq::thermal_state(&self.hs_prime, beta)
    }
}

/// Davies/GKLS generator of the model in the central picture:
///
///   dρ/dt = -i[Ĥ_S′ - λ²Σ_ω Im{γ_ω}V̂_ω†V̂_ω, ρ]
///           + λ²Σ_ω 2Re{γ_ω}(V̂_ω ρ V̂_ω† - ½{V̂_ω†V̂_ω, ρ}),
///
/// with rates from the environment's spectral comb. Thermal environments
/// get the matched-broadening FDT-form rates (default width
/// η = 0.05·max|ν_m|); a non-thermal stationary ρ_E falls back to the
/// exact-match comb rates, and the FDT-based guarantees are then void.
pub fn davies_generator(m: &SEModel, gap_tol: f64) -> Result<GeneratorBundle> {
    let corr = crate::openq::EnvCorrelation::from_model(m)?;
    let eta = 0.05
        * corr
            .components
            .iter()
            .map(|&(nu, _)| nu.abs())
            .fold(0.0f64, f64::max)
            .max(1e-6);
    davies_generator_broadened(m, gap_tol, eta)
}

/// [`davies_generator`] with an explicit broadening width η for the
/// spectral density; η is ignored for non-thermal environments.
pub fn davies_generator_broadened(
    m: &SEModel,
    gap_tol: f64,
    eta: f64,
) -> Result<GeneratorBundle> {
    let (corr, freq) = correlation_and_shells(m, gap_tol)?;
    let rates: Vec<(f64, C64)> = freq
        .omegas
        .iter()
        .map(|&w| {
            let gamma = match m.beta {
                Some(beta) => gamma_fdt_broadened(&corr, beta, w, eta, gap_tol),
                None => gamma_analytic(&corr, w, gap_tol),
            };
            (w, gamma)
        })
        .collect();

    let d = m.dim_s();
    let lam_sq = m.lambda * m.lambda;

    // Lamb-type shift +λ²Σ Im{γ_ω}V_ω†V_ω; the sign follows from the
    // secular collapse of the rotated Redfield terms (and matches the
    // second-order perturbation-theory level shifts)
    let mut shift = CMatrix::zeros(d, d);
    for ((_, gamma), vw) in rates.iter().zip(freq.v_omega.iter()) {
        shift += (vw.dagger().mat() * vw.mat()) * C64::new(gamma.im, 0.0);
    }
    let hs_prime = CentralPicture::new(m.clone()).hs_prime_static()?;
    let hamiltonian = Operator::new(hs_prime.mat() + shift * C64::new(lam_sq, 0.0))?;

    let basis = OperatorBasis::ket_bra(d);
    let dissipator = SuperOperator::from_action(basis, |a| {
        let mut acc = Operator::zeros(d);
        for ((_, gamma), vw) in rates.iter().zip(freq.v_omega.iter()) {
            let rate = 2.0 * gamma.re * lam_sq;
            if rate == 0.0 {
                continue;
            }
            let vw_dag = vw.dagger();
            let jump = &(vw * a) * &vw_dag;
            let vdv = &vw_dag * vw;
            let anti = &(&vdv * a) + &(a * &vdv);
            acc = &acc + &(&jump - &anti.scale_re(0.5)).scale_re(rate);
        }
        acc
    })?;

    Ok(GeneratorBundle {
        kind: GeneratorKind::Davies,
        hs_prime,
        hamiltonian,
        dissipator,
        rates,
        freq,
        lambda: m.lambda,
        beta: m.beta,
    })
}

/// Redfield generator -i[Ĥ_S′, •] - λ²[V̂, Λ̂• - •Λ̂†] with
/// Λ̂ = Σ_ω γ_ω V̂_ω: trace-preserving, positivity not guaranteed. Uses the
/// same rate convention as [`davies_generator`].
pub fn redfield_generator(m: &SEModel, gap_tol: f64) -> Result<GeneratorBundle> {
    let corr = crate::openq::EnvCorrelation::from_model(m)?;
    let eta = 0.05
        * corr
            .components
            .iter()
            .map(|&(nu, _)| nu.abs())
            .fold(0.0f64, f64::max)
            .max(1e-6);
    redfield_generator_broadened(m, gap_tol, eta)
}

/// [`redfield_generator`] with an explicit broadening width η.
pub fn redfield_generator_broadened(
    m: &SEModel,
    gap_tol: f64,
    eta: f64,
) -> Result<GeneratorBundle> {
    let (corr, freq) = correlation_and_shells(m, gap_tol)?;
    let rates: Vec<(f64, C64)> = freq
        .omegas
        .iter()
        .map(|&w| {
            let gamma = match m.beta {
                Some(beta) => gamma_fdt_broadened(&corr, beta, w, eta, gap_tol),
                None => gamma_analytic(&corr, w, gap_tol),
            };
            (w, gamma)
        })
        .collect();

    let d = m.dim_s();
    let mut lambda_op = CMatrix::zeros(d, d);
    for ((_, gamma), vw) in rates.iter().zip(freq.v_omega.iter()) {
        lambda_op += vw.mat() * *gamma;
    }
    let lam = Operator::new(lambda_op)?;
    let lam_dag = lam.dagger();
    let v = m.v.clone();
    let lam_sq = m.lambda * m.lambda;

    let basis = OperatorBasis::ket_bra(d);
    let dissipator = SuperOperator::from_action(basis, |a| {
        let inner = &(&lam * a) - &(a * &lam_dag);
        let comm = &(&v * &inner) - &(&inner * &v);
        comm.scale_re(-lam_sq)
    })?;

    let hs_prime = CentralPicture::new(m.clone()).hs_prime_static()?;
    Ok(GeneratorBundle {
        kind: GeneratorKind::Redfield,
        hs_prime: hs_prime.clone(),
        hamiltonian: hs_prime,
        dissipator,
        rates,
        freq,
        lambda: m.lambda,
        beta: m.beta,
    })
}

fn correlation_and_shells(
    m: &SEModel,
    gap_tol: f64,
) -> Result<(EnvCorrelation, FrequencyDecomposition)> {
    let corr = EnvCorrelation::from_model(m)?;
    let central = CentralPicture::new(m.clone());
    let hs_prime = central.hs_prime_static()?;
    let freq = frequency_decompose(&hs_prime, &m.v, gap_tol)?;
    Ok((corr, freq))
}

/// Pauli rate system extracted from a Davies bundle: γ_{a,b} = |V_ab|²·2Re{γ_{ω_ab}}
/// and M_{a,b} = γ_{a,b} - δ_{a,b}Σ_c γ_{c,a} (λ² factored out).
#[derive(Clone, Debug)]
pub struct PauliSystem {
    /// Eigenvalues ε_a of Ĥ_S′ (ascending).
    pub energies: Vec<f64>,
    /// Transition rates γ_{a,b} (b → a).
    pub gamma: DMatrix<f64>,
    /// Rate matrix M: dp/dt = λ²·M p.
    pub m: DMatrix<f64>,
    /// Gibbs distribution over the ε_a at the bundle's β.
    pub p_gibbs: Vec<f64>,
}

impl PauliSystem {
    /// ‖M p_gibbs‖_max: the Gibbs vector is stationary.
    pub fn gibbs_residual(&self) -> f64 {
        let d = self.energies.len();
        let mut worst = 0.0f64;
        for a in 0..d {
            let mut acc = 0.0;
            for b in 0..d {
                acc += self.m[(a, b)] * self.p_gibbs[b];
            }
            worst = worst.max(acc.abs());
        }
        worst
    }

    /// max_{a≠b} |γ_{b,a} - e^{βω_{ab}}γ_{a,b}| relative to the rate scale.
    pub fn detailed_balance_defect(&self, beta: f64) -> f64 {
        let d = self.energies.len();
        let scale = self
            .gamma
            .iter()
            .cloned()
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                if a == b {
                    continue;
                }
                let omega_ab = self.energies[a] - self.energies[b];
                let defect = self.gamma[(b, a)] - (beta * omega_ab).exp() * self.gamma[(a, b)];
                worst = worst.max(defect.abs() / scale);
            }
        }
        worst
    }

    /// Populations at time t: p(t) = e^{λ²tM} p0.
    pub fn evolve(&self, p0: &[f64], lambda: f64, t: f64) -> Result<Vec<f64>> {
        let d = self.energies.len();
        if p0.len() != d {
            return Err(OqsError::DimMismatch {
                expected: d,
                got: p0.len(),
            });
        }
        let scaled = CMatrix::from_fn(d, d, |i, j| {
            C64::new(self.m[(i, j)] * lambda * lambda * t, 0.0)
        });
        let e = crate::linalg::expm(&scaled)?;
        Ok((0..d)
            .map(|a| (0..d).map(|b| (e[(a, b)] * p0[b]).re).sum())
            .collect())
    }
}

/// Requires non-degenerate Ĥ_S′ within the decomposition's gap tolerance.
pub fn pauli_system(bundle: &GeneratorBundle) -> Result<PauliSystem> {
    let freq = &bundle.freq;
    let d = freq.energies.len();
    for w in freq.energies.windows(2) {
        if (w[1] - w[0]).abs() <= freq.gap_tol {
            return Err(OqsError::DegenerateSpectrum(freq.gap_tol));
        }
    }
    let beta = bundle
        .beta
        .ok_or_else(|| OqsError::NotThermal("Pauli rates need a thermal bundle".into()))?;

    // re-evaluate 2Re{γ} at each Bohr frequency through the stored shells
    let rate_at = |omega: f64| -> f64 {
        bundle
            .freq
            .shell_of(omega)
            .map(|idx| 2.0 * bundle.rates[idx].1.re)
            .unwrap_or(0.0)
    };
    let mut gamma = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            if a == b {
                continue;
            }
            let omega_ab = freq.energies[a] - freq.energies[b];
            gamma[(a, b)] = freq.v_eigen[(a, b)].norm_sqr() * rate_at(omega_ab);
        }
    }
    let mut m = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            m[(a, b)] = gamma[(a, b)];
        }
        let drain: f64 = (0..d).map(|c| gamma[(c, a)]).sum();
        m[(a, a)] -= drain;
    }
    let weights: Vec<f64> = freq
        .energies
        .iter()
        .map(|&e| (-beta * (e - freq.energies[0])).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let p_gibbs = weights.into_iter().map(|w| w / z).collect();

    Ok(PauliSystem {
        energies: freq.energies.clone(),
        gamma,
        m,
        p_gibbs,
    })
}
