use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{pauli_system, GeneratorBundle};
use crate::error::{OqsError, Result};
use crate::linalg::CMatrix;
use crate::openq::{EnvCorrelation, SEModel};

/// Relative entropy H = Σ_a p_a ln(p_a/q_a) ≥ 0, zero iff p = q.
pub fn h_functional(p_t: &[f64], p_gibbs: &[f64]) -> Result<f64> {
    if p_t.len() != p_gibbs.len() {
        return Err(OqsError::DimMismatch {
            expected: p_gibbs.len(),
            got: p_t.len(),
        });
    }
    let mut h = 0.0;
    for (&p, &q) in p_t.iter().zip(p_gibbs.iter()) {
        if p < -1e-12 || q <= 0.0 {
            return Err(OqsError::BadParameter {
                name: "p_t/p_gibbs",
                reason: format!("probabilities must be positive, got p={p}, q={q}"),
            });
        }
        if p > 1e-300 {
            h += p * (p / q).ln();
        }
    }
    Ok(h.max(0.0))
}

/// Findings of the eigensystem analysis of a Davies generator: population
/// block M and coherence block iJ+G, checked against the thermalization
/// conditions (non-degenerate Ĥ_S′, all V_ab ≠ 0).
#[derive(Clone, Debug, serde::Serialize)]
pub struct ThermalizationReport {
    /// ε_a spectrum non-degenerate within gap_tol.
    pub non_degenerate: bool,
    /// Off-diagonal V elements (a, b) with |V_ab| below tolerance: each one
    /// is a possible pocket of non-decaying coherence.
    pub zero_coupling_elements: Vec<(usize, usize)>,
    pub ergodic: bool,
    /// Real eigenvalues of the population rate matrix M, descending.
    pub population_eigenvalues: Vec<f64>,
    /// Number of (numerically) zero population eigenvalues; 1 for ergodic
    /// models.
    pub population_zero_count: usize,
    /// |μ₁|: smallest nonzero decay rate of the population block.
    pub spectral_gap: f64,
    /// ‖M p_gibbs‖_max.
    pub gibbs_residual: f64,
    /// Eigenvalues of the coherence block iJ+G.
    pub coherence_eigenvalues: Vec<(f64, f64)>,
    /// max Re μ over the coherence block (< 0 means total dephasing).
    pub max_re_coherence: f64,
    /// Eigenvalues whose geometric multiplicity is below the algebraic one
    /// (value, algebraic, geometric). The matrix exponential still decays as
    /// polynomial·e^{Re μ t}; no Jordan chains are computed.
    pub defective_eigenvalues: Vec<((f64, f64), usize, usize)>,
    /// Leakage between the population and coherence blocks (zero under the
    /// secular approximation with non-degenerate spectra).
    pub block_offdiagonal_defect: f64,
    /// Self-adjointness defect of M under the weighted product
    /// ⟨⟨A|B⟩⟩ = Σ e^{βε_a}A*_a B_a.
    pub weighted_selfadjoint_defect: f64,
}

/// Eigensystem analysis of the Davies generator in the Ĥ_S′ eigenbasis.
pub fn thermalization_analysis(bundle: &GeneratorBundle) -> Result<ThermalizationReport> {
    let freq = &bundle.freq;
    let d = freq.energies.len();
    let beta = bundle
        .beta
        .ok_or_else(|| OqsError::NotThermal("analysis needs a thermal bundle".into()))?;

    let non_degenerate = freq
        .energies
        .windows(2)
        .all(|w| (w[1] - w[0]).abs() > freq.gap_tol);

    let v_scale = (0..d)
        .flat_map(|a| (0..d).map(move |b| (a, b)))
        .filter(|&(a, b)| a != b)
        .map(|(a, b)| freq.v_eigen[(a, b)].norm())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let mut zero_coupling_elements = Vec::new();
    for a in 0..d {
        for b in 0..d {
            if a != b && freq.v_eigen[(a, b)].norm() < 1e-12 * v_scale {
                zero_coupling_elements.push((a, b));
            }
        }
    }
    let ergodic = non_degenerate && zero_coupling_elements.is_empty();

    // blocks of the generator in the eigenbasis (diagonal-first ordering)
    let gen_eig = bundle.generator_in_eigenbasis()?;
    let n = d * d;
    let mut block_offdiagonal_defect = 0.0f64;
    for row in 0..n {
        for col in 0..n {
            if (row < d) != (col < d) {
                block_offdiagonal_defect =
                    block_offdiagonal_defect.max(gen_eig.mat()[(row, col)].norm());
            }
        }
    }

    // population block: real rate matrix M (λ² divided out)
    let lam_sq = (bundle.lambda * bundle.lambda).max(1e-300);
    let mut m_block = DMatrix::<f64>::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            m_block[(a, b)] = gen_eig.mat()[(a, b)].re / lam_sq;
        }
    }
    // symmetrize under the weighted product: K = D^{1/2} M D^{-1/2} with
    // D = diag(e^{βε_a}) is real symmetric for detailed-balance rates
    let weights: Vec<f64> = freq
        .energies
        .iter()
        .map(|&e| (beta * (e - freq.energies[0]) / 2.0).exp())
        .collect();
    let mut k_mat = DMatrix::<f64>::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            k_mat[(a, b)] = weights[a] * m_block[(a, b)] / weights[b];
        }
    }
    let weighted_selfadjoint_defect = {
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                worst = worst.max((k_mat[(a, b)] - k_mat[(b, a)]).abs());
            }
        }
        worst
    };
    let sym = (k_mat.clone() + k_mat.transpose()) * 0.5;
    let mut population_eigenvalues: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().cloned().collect();
    population_eigenvalues.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let rate_scale = population_eigenvalues
        .iter()
        .map(|x| x.abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let population_zero_count = population_eigenvalues
        .iter()
        .filter(|&&mu| mu.abs() < 1e-9 * rate_scale)
        .count();
    let spectral_gap = population_eigenvalues
        .iter()
        .filter(|&&mu| mu.abs() >= 1e-9 * rate_scale)
        .map(|mu| mu.abs())
        .fold(f64::INFINITY, f64::min);

    let pauli = pauli_system(bundle);
    let gibbs_residual = match &pauli {
        Ok(p) => p.gibbs_residual(),
        Err(_) => f64::NAN,
    };

    // coherence block: complex non-normal; eigenvalues via Schur
    let nc = n - d;
    let mut c_block = CMatrix::zeros(nc, nc);
    for row in 0..nc {
        for col in 0..nc {
            c_block[(row, col)] = gen_eig.mat()[(d + row, d + col)] / C64::new(lam_sq, 0.0);
        }
    }
    let coherence_eigs = complex_eigenvalues(&c_block)?;
    let max_re_coherence = coherence_eigs
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);

    // flag defective eigenvalues: geometric < algebraic multiplicity
    let mut defective_eigenvalues = Vec::new();
    let eig_scale = coherence_eigs
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let mut visited = vec![false; coherence_eigs.len()];
    for i in 0..coherence_eigs.len() {
        if visited[i] {
            continue;
        }
        let mu = coherence_eigs[i];
        let mut algebraic = 0;
        for (j, &other) in coherence_eigs.iter().enumerate() {
            if (other - mu).norm() < 1e-7 * eig_scale {
                visited[j] = true;
                algebraic += 1;
            }
        }
        if algebraic > 1 {
            let shifted = &c_block - CMatrix::identity(nc, nc) * mu;
            let svd = shifted.svd(false, false);
            let s_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
            let rank = svd
                .singular_values
                .iter()
                .filter(|&&s| s > 1e-10 * s_max.max(1e-300))
                .count();
            let geometric = nc - rank;
            if geometric < algebraic {
                defective_eigenvalues.push(((mu.re, mu.im), algebraic, geometric));
            }
        }
    }

    Ok(ThermalizationReport {
        non_degenerate,
        zero_coupling_elements,
        ergodic,
        population_eigenvalues,
        population_zero_count,
        spectral_gap,
        gibbs_residual,
        coherence_eigenvalues: coherence_eigs.iter().map(|z| (z.re, z.im)).collect(),
        max_re_coherence,
        defective_eigenvalues,
        block_offdiagonal_defect,
        weighted_selfadjoint_defect,
    })
}

fn complex_eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let schur = m
        .clone()
        .try_schur(1e-12, 100_000)
        .ok_or(OqsError::EigenFailure)?;
    let t = schur.unpack().1;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Fluctuation–dissipation check for a thermal bath: at every comb frequency
/// |ω| ≥ `omega_min` compares S(ω)(1-e^{-βω}) with i(1+e^{-βω})κ(ω), where
/// S and κ are the matched-broadening (comb-weight) transforms of C_F and
/// K_F. Returns the maximum relative deviation.
pub fn fdt_check(m: &SEModel, omega_min: f64) -> Result<f64> {
    let beta = m
        .beta
        .ok_or_else(|| OqsError::NotThermal("FDT needs a thermal ρ_E".into()))?;
    let corr = EnvCorrelation::from_model(m)?;
    // cluster comb frequencies
    let mut nus: Vec<f64> = corr.components.iter().map(|&(nu, _)| nu).collect();
    nus.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    nus.dedup_by(|a, b| (*a - *b).abs() < 1e-10);

    let weight_at = |omega: f64| -> f64 {
        corr.components
            .iter()
            .filter(|&&(nu, _)| (nu - omega).abs() < 1e-9)
            .map(|&(_, c)| c)
            .sum()
    };

    let mut worst: f64 = 0.0;
    for &omega in &nus {
        if omega.abs() < omega_min {
            continue;
        }
        // matched broadening: δ(ν∓ω) → comb weight at ±ω
        let s_w = std::f64::consts::PI * (weight_at(omega) + weight_at(-omega));
        let kappa_w = std::f64::consts::PI * (weight_at(-omega) - weight_at(omega));
        // κ(ω) = -i·kappa_w, so i(1+e^{-βω})κ(ω) = (1+e^{-βω})·kappa_w
        let lhs = s_w * (1.0 - (-beta * omega).exp());
        let rhs = (1.0 + (-beta * omega).exp()) * kappa_w;
        let scale = s_w.abs().max(1e-300);
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    Ok(worst)
}
