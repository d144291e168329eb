//! Surrogate-field representation tests: when do the joint
//! quasi-probabilities of an environment coupling reduce to ordinary joint
//! probabilities (Q^(k) = δ_{f,f̄}P^(k)), making the environment replaceable
//! by a classical stochastic process? Includes the GKLS-environment
//! quasi-probability formula and the sequential projective-measurement
//! sampler whose statistics realize the diagonal part.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{OqsError, Result};
use crate::linalg::{CMatrix, Operator, OperatorBasis, SuperOperator};
use crate::openq::{quasi_probability_capped, QuasiProbTensor, SEModel, SpectralDecompF};

/// Diagonal split Q^(k) = δ_{f,f̄}P^(k) + Φ^(k).
///
/// Returns (P as a real nf^k tensor, Φ as the full tensor with zeroed
/// diagonal). P is non-negative and normalized up to numerical dust
/// regardless of surrogate validity.
pub fn split_diagonal(q: &QuasiProbTensor) -> (Vec<f64>, Vec<C64>) {
    let diag = q.diagonal();
    let p = diag.iter().map(|z| z.re).collect();
    (p, q.interference())
}

#[derive(Clone, Debug, Serialize)]
pub struct KFindings {
    pub k: usize,
    pub times: Vec<f64>,
    /// max |Φ^(k)| over the tensor.
    pub interference_norm: f64,
    /// max defect of Σ_{f_i} P^(k) = P^(k-1) over interior slots.
    pub p_consistency_defect: f64,
    /// max |Im P| and most negative Re P (diagnostics; ~0 always).
    pub diagonal_imag: f64,
    pub diagonal_min: f64,
    pub normalization_defect: f64,
}

/// Verdict of the surrogate-field test over a set of time grids.
#[derive(Clone, Debug, Serialize)]
pub struct SurrogateReport {
    pub k_max: usize,
    pub eps: f64,
    pub findings: Vec<KFindings>,
    /// true iff every interference norm and consistency defect is ≤ eps.
    pub valid: bool,
}

/// Evaluates Q^(k) for every grid (descending times, length ≤ k_max), splits
/// off the interference part, and checks consistency of the diagonal family.
pub fn surrogate_verdict(
    m: &SEModel,
    grids: &[Vec<f64>],
    k_max: usize,
    eps: f64,
) -> Result<SurrogateReport> {
    let compute = |times: &[f64]| quasi_probability_capped(m, times, k_max);
    verdict_impl(grids, k_max, eps, compute)
}

/// Same verdict machinery for a GKLS environment.
pub fn surrogate_verdict_gkls(
    env: &GklsEnv,
    grids: &[Vec<f64>],
    k_max: usize,
    eps: f64,
) -> Result<SurrogateReport> {
    let compute = |times: &[f64]| gkls_env_quasiprob(env, times);
    verdict_impl(grids, k_max, eps, compute)
}

fn verdict_impl(
    grids: &[Vec<f64>],
    k_max: usize,
    eps: f64,
    compute: impl Fn(&[f64]) -> Result<QuasiProbTensor>,
) -> Result<SurrogateReport> {
    let mut findings = Vec::new();
    for grid in grids {
        let k = grid.len();
        if k == 0 || k > k_max {
            return Err(OqsError::CapExceeded {
                what: "grid length",
                got: k,
                cap: k_max,
            });
        }
        let q = compute(grid)?;
        let (p, phi) = split_diagonal(&q);
        let diag = q.diagonal();
        let nf = q.nf();

        // P-consistency: contract each interior slot of P against the
        // diagonal of the order-(k-1) tensor
        let mut consistency = 0.0f64;
        for slot in 0..k {
            if k == 1 {
                break;
            }
            let mut reduced_times = grid.clone();
            reduced_times.remove(slot);
            let q_reduced = compute(&reduced_times)?;
            let p_reduced: Vec<f64> = q_reduced.diagonal().iter().map(|z| z.re).collect();
            // sum P over the f_slot digit
            let inner: usize = nf.pow((k - 1 - slot) as u32);
            let outer: usize = nf.pow(slot as u32);
            for o in 0..outer {
                for i in 0..inner {
                    let mut acc = 0.0;
                    for c in 0..nf {
                        acc += p[(o * nf + c) * inner + i];
                    }
                    consistency = consistency.max((acc - p_reduced[o * inner + i]).abs());
                }
            }
        }

        findings.push(KFindings {
            k,
            times: grid.clone(),
            interference_norm: phi.iter().fold(0.0f64, |a, z| a.max(z.norm())),
            p_consistency_defect: consistency,
            diagonal_imag: diag.iter().fold(0.0f64, |a, z| a.max(z.im.abs())),
            diagonal_min: p.iter().cloned().fold(f64::INFINITY, f64::min),
            normalization_defect: (p.iter().sum::<f64>() - 1.0).abs(),
        });
    }
    let valid = findings
        .iter()
        .all(|f| f.interference_norm <= eps && f.p_consistency_defect <= eps);
    Ok(SurrogateReport {
        k_max,
        eps,
        findings,
        valid,
    })
}

/// Two-level-or-larger environment A whose own dynamics is an open GKLS
/// semigroup: ρ_A(t) = e^{tL}ρ_A, probed through the observable F̂.
#[derive(Clone, Debug)]
pub struct GklsEnv {
    pub f: Operator,
    pub generator: SuperOperator,
    pub rho: Operator,
}

impl GklsEnv {
    /// Validates trace preservation and conditional complete positivity of
    /// the semigroup (Choi of e^{hL} at small h).
    pub fn new(f: Operator, generator: SuperOperator, rho: Operator) -> Result<Self> {
        if f.dim() != generator.dim() || rho.dim() != f.dim() {
            return Err(OqsError::DimMismatch {
                expected: f.dim(),
                got: generator.dim().max(rho.dim()),
            });
        }
        if !rho.is_density(1e-8) {
            return Err(OqsError::PredicateFailed {
                predicate: "is_density",
                defect: rho.hermiticity_defect(),
                tol: 1e-8,
            });
        }
        let tp = {
            let mut worst = 0.0f64;
            for idx in 0..generator.basis().len() {
                let e = generator.basis().element(idx);
                worst = worst.max(generator.apply(&e)?.trace().norm());
            }
            worst
        };
        if tp > 1e-10 {
            return Err(OqsError::PredicateFailed {
                predicate: "trace-preserving generator",
                defect: tp,
                tol: 1e-10,
            });
        }
        let small = SuperOperator::from_matrix(
            generator.basis().clone(),
            crate::linalg::expm(&(generator.mat() * C64::new(1e-3, 0.0)))?,
        )?;
        let min_eig = small.choi_min_eigenvalue()?;
        if min_eig < -1e-9 {
            return Err(OqsError::PredicateFailed {
                predicate: "completely positive semigroup",
                defect: -min_eig,
                tol: 1e-9,
            });
        }
        Ok(Self { f, generator, rho })
    }

    /// The dephasing-type generator -(w/2)[σ_x, [σ_x, •]] on a qubit.
    pub fn rtn_qubit(w: f64, rho: Operator) -> Result<Self> {
        let sx = Operator::pauli_x();
        let gen = SuperOperator::from_action(OperatorBasis::ket_bra(2), |a| {
            let inner = &(&sx * a) - &(a * &sx);
            let outer = &(&sx * &inner) - &(&inner * &sx);
            outer.scale_re(-w / 2.0)
        })?;
        Self::new(Operator::pauli_z().scale_re(0.5), gen, rho)
    }

    /// Block-diagonality of L with respect to projector/coherence sandwiches:
    /// max ‖P(f,f)·L·P(f′,f̄′)‖ over f̄′ ≠ f′. Zero means the interference
    /// terms of Q^(k) vanish identically.
    pub fn block_diagonal_defect(&self) -> Result<f64> {
        let decomp = SpectralDecompF::new(&self.f)?;
        let nf = decomp.len();
        let mut worst = 0.0f64;
        for f in 0..nf {
            let left = crate::linalg::left_right_super(
                &decomp.projectors[f],
                &decomp.projectors[f],
            )?;
            for fp in 0..nf {
                for fbp in 0..nf {
                    if fp == fbp {
                        continue;
                    }
                    let right = crate::linalg::left_right_super(
                        &decomp.projectors[fp],
                        &decomp.projectors[fbp],
                    )?;
                    let prod = left.mat() * self.generator.mat() * right.mat();
                    worst = worst.max(crate::linalg::max_abs(&prod));
                }
            }
        }
        Ok(worst)
    }
}

/// Joint quasi-probability of a GKLS environment,
/// Q^(k) = tr_A[P(f₁,f̄₁) e^{(s₁-s₂)L} ⋯ P(f_k,f̄_k) e^{s_k L} ρ_A],
/// with P(f,f̄) = P̂(f)•P̂(f̄).
pub fn gkls_env_quasiprob(env: &GklsEnv, times: &[f64]) -> Result<QuasiProbTensor> {
    let k = times.len();
    if k == 0 {
        return Err(OqsError::BadParameter {
            name: "times",
            reason: "need at least one time".into(),
        });
    }
    for (i, w) in times.windows(2).enumerate() {
        if w[1] >= w[0] {
            return Err(OqsError::UnorderedTimes {
                index: i + 1,
                value: w[1],
            });
        }
    }
    if times[k - 1] < 0.0 {
        return Err(OqsError::UnorderedTimes {
            index: k - 1,
            value: times[k - 1],
        });
    }
    let decomp = SpectralDecompF::new(&env.f)?;
    let nf = decomp.len();
    let entries = (nf * nf).pow(k as u32);
    if entries > (1 << 24) {
        return Err(OqsError::CapExceeded {
            what: "tensor entries",
            got: entries,
            cap: 1 << 24,
        });
    }

    // e^{ΔL} per inter-measurement gap (innermost gap is s_k - 0)
    let mut props: Vec<SuperOperator> = Vec::with_capacity(k);
    for i in 0..k {
        let gap = if i + 1 < k {
            times[i] - times[i + 1]
        } else {
            times[i]
        };
        props.push(SuperOperator::from_matrix(
            env.generator.basis().clone(),
            crate::linalg::expm(&(env.generator.mat() * C64::new(gap, 0.0)))?,
        )?);
    }

    let mut values = vec![C64::new(0.0, 0.0); entries];
    // depth-first from the earliest slot: X carries the propagated and
    // sandwiched state
    fn recurse(
        slot: isize,
        x: &Operator,
        idx: usize,
        props: &[SuperOperator],
        projectors: &[Operator],
        nf: usize,
        values: &mut [C64],
    ) {
        let k = props.len();
        if slot < 0 {
            values[idx] = x.trace();
            return;
        }
        let s = slot as usize;
        let propagated = props[s].apply(x).expect("same dim");
        let stride = (nf * nf).pow((k - 1 - s) as u32);
        for f in 0..nf {
            for fb in 0..nf {
                let sandwiched = &(&projectors[f] * &propagated) * &projectors[fb];
                recurse(
                    slot - 1,
                    &sandwiched,
                    idx + (f * nf + fb) * stride,
                    props,
                    projectors,
                    nf,
                    values,
                );
            }
        }
    }
    recurse(
        k as isize - 1,
        &env.rho,
        0,
        &props,
        &decomp.projectors,
        nf,
        &mut values,
    );

    Ok(QuasiProbTensor::from_parts(
        times.to_vec(),
        decomp.eigenvalues,
        values,
    ))
}

/// One run of sequential projective measurements of F̂ at ascending `times`:
/// Born-rule draw, collapse, free evolution in between. Returns the measured
/// eigenvalues and the exact probability of the sequence (chain of Bayes
/// factors). Over many seeds the empirical sequence distribution converges
/// to the diagonal part P^(k).
pub fn sequential_measurement_sample(
    m: &SEModel,
    times: &[f64],
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    let (vals, kets) = m.he.herm_eigen();
    let kets_adj = kets.adjoint();
    let d = m.dim_e();
    let evolve = move |rho: &Operator, dt: f64| -> Operator {
        let mut phases = CMatrix::zeros(d, d);
        for i in 0..d {
            phases[(i, i)] = C64::new(0.0, -vals[i] * dt).exp();
        }
        let u = &kets * &phases * &kets_adj;
        Operator::new(&u * rho.mat() * u.adjoint()).expect("square")
    };
    measure_chain(&m.f, &m.rho_e, evolve, times, seed)
}

/// Sequential measurements on a GKLS environment (semigroup evolution
/// between collapses).
pub fn sequential_measurement_sample_gkls(
    env: &GklsEnv,
    times: &[f64],
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    let gen = env.generator.clone();
    let evolve = move |rho: &Operator, dt: f64| -> Operator {
        let prop = crate::linalg::expm(&(gen.mat() * C64::new(dt, 0.0))).expect("finite");
        let sup = SuperOperator::from_matrix(gen.basis().clone(), prop).expect("square");
        sup.apply(rho).expect("same dim")
    };
    measure_chain(&env.f, &env.rho, evolve, times, seed)
}

fn measure_chain(
    f: &Operator,
    rho0: &Operator,
    evolve: impl Fn(&Operator, f64) -> Operator,
    times: &[f64],
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    for (i, w) in times.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(OqsError::UnorderedTimes {
                index: i + 1,
                value: w[1],
            });
        }
    }
    if times.first().copied().unwrap_or(0.0) < 0.0 {
        return Err(OqsError::UnorderedTimes {
            index: 0,
            value: times[0],
        });
    }
    let decomp = SpectralDecompF::new(f)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rho = rho0.clone();
    let mut t_prev = 0.0;
    let mut outcomes = Vec::with_capacity(times.len());
    let mut chain_prob = 1.0;
    for (step, &t) in times.iter().enumerate() {
        rho = evolve(&rho, t - t_prev);
        t_prev = t;
        // Born probabilities, pruning branches below 1e-14
        let probs: Vec<f64> = decomp
            .projectors
            .iter()
            .map(|p| (p * &rho).trace().re.max(0.0))
            .map(|p| if p < 1e-14 { 0.0 } else { p })
            .collect();
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(OqsError::ZeroProbabilityBranch(step));
        }
        let mut draw = rng.gen::<f64>() * total;
        let mut chosen = probs.len() - 1;
        for (i, &p) in probs.iter().enumerate() {
            if draw < p {
                chosen = i;
                break;
            }
            draw -= p;
        }
        if probs[chosen] == 0.0 {
            return Err(OqsError::ZeroProbabilityBranch(step));
        }
        let p_cond = probs[chosen] / total;
        chain_prob *= p_cond;
        outcomes.push(decomp.eigenvalues[chosen]);
        let proj = &decomp.projectors[chosen];
        rho = Operator::new((proj * &(&rho * proj)).mat() / C64::new(probs[chosen], 0.0))?;
    }
    Ok((outcomes, chain_prob))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{rtn_joint, RtnSpec};

    fn static_coupling_model() -> SEModel {
        SEModel::new(
            Operator::pauli_z().scale_re(0.5),
            Operator::diag(&[0.3, 0.3, -0.9]),
            Operator::pauli_x(),
            Operator::diag(&[1.0, 1.0, -1.0]),
            0.4,
            Operator::diag(&[0.5, 0.25, 0.25]),
        )
        .unwrap()
    }

    fn generic_model() -> SEModel {
        SEModel::with_thermal_env(
            Operator::pauli_z().scale_re(0.5),
            Operator::diag(&[0.0, 0.9]),
            Operator::pauli_x(),
            Operator::pauli_x(), // does not commute with H_E
            0.6,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn static_coupling_passes_verdict() {
        let m = static_coupling_model();
        let grids = vec![vec![1.5], vec![2.0, 0.7], vec![2.5, 1.4, 0.3]];
        let report = surrogate_verdict(&m, &grids, 3, 1e-8).unwrap();
        assert!(report.valid, "{report:?}");
        for f in &report.findings {
            assert!(f.interference_norm < 1e-13);
            assert!(f.diagonal_min > -1e-12);
            assert!(f.normalization_defect < 1e-12);
        }
    }

    #[test]
    fn generic_model_fails_verdict_with_reported_norm() {
        let m = generic_model();
        let grids = vec![vec![1.7, 1.1, 0.4]];
        let report = surrogate_verdict(&m, &grids, 3, 1e-6).unwrap();
        assert!(!report.valid);
        assert!(report.findings[0].interference_norm > 1e-3);
        // diagonal part is a proper distribution regardless
        assert!(report.findings[0].diagonal_min > -1e-12);
        assert!(report.findings[0].normalization_defect < 1e-12);
        assert!(report.findings[0].p_consistency_defect > 1e-6);
    }

    #[test]
    fn p_consistency_defect_equals_contracted_interference() {
        // Σ_{f_i}P^(k) - P^(k-1) = -Σ_{f_i,f̄_i}Φ^(k), the remaining slots
        // held on the diagonal; the right side is contracted from the
        // interference tensor directly
        let m = generic_model();
        let times = [1.7, 1.1, 0.4];
        let k = times.len();
        let q3 = crate::openq::quasi_probability(&m, &times).unwrap();
        let (p3, phi) = split_diagonal(&q3);
        let nf = q3.nf();
        let pair_count = nf * nf;
        for slot in 0..k {
            let mut reduced = times.to_vec();
            reduced.remove(slot);
            let q2 = crate::openq::quasi_probability(&m, &reduced).unwrap();
            let (p2, _) = split_diagonal(&q2);
            let inner_p: usize = nf.pow((k - 1 - slot) as u32);
            for (idx, &p2v) in p2.iter().enumerate() {
                // digits of the remaining slots (slot-major)
                let mut digits = vec![0usize; k - 1];
                let mut rem = idx;
                for d in (0..k - 1).rev() {
                    digits[d] = rem % nf;
                    rem /= nf;
                }
                // marginal of P over the removed slot's digit
                let o = idx / inner_p;
                let i = idx % inner_p;
                let mut p_marg = 0.0;
                for c in 0..nf {
                    p_marg += p3[(o * nf + c) * inner_p + i];
                }
                // contract Φ over (f_slot, f̄_slot) with other slots diagonal
                let mut phi_sum = C64::new(0.0, 0.0);
                for f in 0..nf {
                    for fb in 0..nf {
                        let mut full_idx = 0usize;
                        let mut d_iter = digits.iter();
                        for s in 0..k {
                            let pair = if s == slot {
                                f * nf + fb
                            } else {
                                let &d = d_iter.next().expect("digit");
                                d * nf + d
                            };
                            full_idx = full_idx * pair_count + pair;
                        }
                        phi_sum += phi[full_idx];
                    }
                }
                assert!(phi_sum.im.abs() < 1e-11);
                assert!(
                    ((p_marg - p2v) + phi_sum.re).abs() < 1e-10,
                    "slot {slot} idx {idx}: defect {} vs -Φ {}",
                    p_marg - p2v,
                    phi_sum.re
                );
            }
        }
    }

    #[test]
    fn consistency_of_full_q_always_holds() {
        // even when the surrogate is invalid, Q^(k) itself stays consistent
        let m = generic_model();
        let q =
            crate::openq::quasi_probability(&m, &[1.8, 0.9, 0.2]).unwrap();
        for slot in 0..3 {
            let contracted = q.sum_over_slot(slot);
            let mut times = vec![1.8, 0.9, 0.2];
            times.remove(slot);
            let direct = crate::openq::quasi_probability(&m, &times).unwrap();
            let worst = contracted
                .values()
                .iter()
                .zip(direct.values().iter())
                .fold(0.0f64, |a, (x, y)| a.max((x - y).norm()));
            assert!(worst < 1e-11);
        }
    }

    #[test]
    fn gkls_rtn_model_reproduces_telegraph_joints() {
        let w = 0.7;
        let rho = Operator::diag(&[0.5, 0.5]);
        let env = GklsEnv::rtn_qubit(w, rho).unwrap();
        assert!(env.block_diagonal_defect().unwrap() < 1e-13);

        let times = [2.1, 1.2, 0.4];
        let q = gkls_env_quasiprob(&env, &times).unwrap();
        // interference eliminated by block-diagonal L
        assert!(q.max_interference() < 1e-12);

        // diagonal equals the RTN joint distribution with rate w and p = 0
        let spec = RtnSpec::unbiased(w).unwrap();
        let (p, _) = split_diagonal(&q);
        let nf = q.nf();
        let k = times.len();
        for idx in 0..p.len() {
            // slot-major digits: digit i belongs to time s_{i+1}
            let mut digits = vec![0usize; k];
            let mut rem = idx;
            for i in (0..k).rev() {
                digits[i] = rem % nf;
                rem /= nf;
            }
            // digit 0 ↔ eigenvalue -1/2 ↔ r = -1
            let pts: Vec<(f64, f64)> = digits
                .iter()
                .zip(times.iter())
                .map(|(&d, &t)| (if d == 1 { 1.0 } else { -1.0 }, t))
                .collect();
            let expect = rtn_joint(&spec, &pts).unwrap();
            assert!(
                (p[idx] - expect).abs() < 1e-9,
                "idx {idx}: {} vs {expect}",
                p[idx]
            );
        }
    }

    #[test]
    fn gkls_zero_generator_is_static_coupling() {
        let rho = Operator::diag(&[0.7, 0.3]);
        let zero = SuperOperator::from_matrix(
            OperatorBasis::ket_bra(2),
            CMatrix::zeros(4, 4),
        )
        .unwrap();
        let env = GklsEnv::new(Operator::pauli_z().scale_re(0.5), zero, rho).unwrap();
        let q = gkls_env_quasiprob(&env, &[1.4, 0.5]).unwrap();
        assert!(q.max_interference() < 1e-14);
        let (p, _) = split_diagonal(&q);
        // δ-chain: only equal-outcome sequences survive
        assert!((p[0] - 0.3).abs() < 1e-12); // (-,-) ↔ state |1⟩
        assert!(p[1].abs() < 1e-14);
        assert!(p[2].abs() < 1e-14);
        assert!((p[3] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn gkls_env_rejects_non_cp_generator() {
        // transpose-like generator is trace-preserving but not CP as a
        // semigroup... simplest violation: L[ρ] = σ_x ρ σ_x - ρ scaled by a
        // NEGATIVE rate makes e^{hL} non-CP
        let sx = Operator::pauli_x();
        let bad = SuperOperator::from_action(OperatorBasis::ket_bra(2), |a| {
            let jump = &(&sx * a) * &sx;
            (&jump - a).scale_re(-0.5)
        })
        .unwrap();
        assert!(GklsEnv::new(
            Operator::pauli_z().scale_re(0.5),
            bad,
            Operator::diag(&[0.5, 0.5])
        )
        .is_err());
    }

    #[test]
    fn measurement_chain_static_coupling_freezes() {
        let m = static_coupling_model();
        for seed in 0..30 {
            let (outcomes, prob) =
                sequential_measurement_sample(&m, &[0.4, 1.0, 2.0, 3.5], seed).unwrap();
            assert!(outcomes.windows(2).all(|w| w[0] == w[1]), "{outcomes:?}");
            assert!(prob > 0.0);
        }
    }

    #[test]
    fn measurement_histogram_matches_first_distribution() {
        let m = generic_model();
        let t1 = 0.9;
        let q1 = crate::openq::quasi_probability(&m, &[t1]).unwrap();
        let (p1, _) = split_diagonal(&q1);
        let n = 40_000;
        let mut counts = vec![0usize; p1.len()];
        for seed in 0..n {
            let (outcomes, _) = sequential_measurement_sample(&m, &[t1], seed as u64).unwrap();
            let idx = q1
                .eigenvalues
                .iter()
                .position(|&e| (e - outcomes[0]).abs() < 1e-12)
                .unwrap();
            counts[idx] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / n as f64;
            assert!(
                (freq - p1[i]).abs() < 4.0 / (n as f64).sqrt() + 1e-3,
                "outcome {i}: {freq} vs {}",
                p1[i]
            );
        }
    }

    #[test]
    fn measurement_histogram_chi_square_at_k2() {
        // joint outcome counts over (f₁, f₂) against N·P^(2): χ² stays near
        // its dof at the 1/√N rate
        let m = generic_model();
        let times_asc = [0.6, 1.4];
        let q2 = crate::openq::quasi_probability(&m, &[1.4, 0.6]).unwrap();
        let (p2, _) = split_diagonal(&q2);
        let nf = q2.nf();
        let n = 100_000usize;
        let mut counts = vec![0usize; nf * nf];
        for seed in 0..n {
            let (outcomes, _) =
                sequential_measurement_sample(&m, &times_asc, seed as u64).unwrap();
            let idx_of = |val: f64| {
                q2.eigenvalues
                    .iter()
                    .position(|&e| (e - val).abs() < 1e-12)
                    .unwrap()
            };
            // outcome order (t=0.6, t=1.4) maps to slots (s1=1.4, s2=0.6)
            counts[idx_of(outcomes[1]) * nf + idx_of(outcomes[0])] += 1;
        }
        let mut chi_sq = 0.0;
        for (idx, &c) in counts.iter().enumerate() {
            let expect = n as f64 * p2[idx];
            if expect > 1.0 {
                chi_sq += (c as f64 - expect).powi(2) / expect;
            }
        }
        // dof = nf² - 1 = 3; anything below ~20 is a sane draw
        assert!(chi_sq < 20.0, "χ² = {chi_sq:.1} over {} bins", nf * nf);
    }

    #[test]
    fn measurement_chain_probability_is_diagonal_entry() {
        // the returned chain probability equals P^(k) of the outcome sequence
        let m = generic_model();
        let times_asc = [0.5, 1.3];
        let (outcomes, prob) = sequential_measurement_sample(&m, &times_asc, 7).unwrap();
        let q2 = crate::openq::quasi_probability(&m, &[1.3, 0.5]).unwrap();
        // outcome order (t=0.5, t=1.3) maps to slots (s1=1.3, s2=0.5)
        let idx_of = |val: f64| {
            q2.eigenvalues
                .iter()
                .position(|&e| (e - val).abs() < 1e-12)
                .unwrap()
        };
        let entry = q2.get(&[
            (idx_of(outcomes[1]), idx_of(outcomes[1])),
            (idx_of(outcomes[0]), idx_of(outcomes[0])),
        ]);
        assert!((prob - entry.re).abs() < 1e-11, "{prob} vs {entry}");
    }

    #[test]
    fn gkls_measurement_switch_statistics_match_rtn() {
        let w = 0.9;
        let dt = 0.6;
        let env = GklsEnv::rtn_qubit(w, Operator::diag(&[0.5, 0.5])).unwrap();
        let times: Vec<f64> = (1..=4).map(|i| i as f64 * dt).collect();
        let n = 30_000;
        let (mut same, mut total) = (0usize, 0usize);
        for seed in 0..n {
            let (outcomes, _) =
                sequential_measurement_sample_gkls(&env, &times, seed as u64).unwrap();
            for pair in outcomes.windows(2) {
                total += 1;
                if (pair[0] - pair[1]).abs() < 1e-12 {
                    same += 1;
                }
            }
        }
        let stay = same as f64 / total as f64;
        let expect = (1.0 + (-2.0 * w * dt).exp()) / 2.0;
        assert!(
            (stay - expect).abs() < 4.0 / (total as f64).sqrt(),
            "stay probability {stay} vs {expect}"
        );
    }
}
