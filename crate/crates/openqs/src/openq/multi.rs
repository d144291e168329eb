//! Multi-operator couplings λ Σ_α V̂_α ⊗ F̂_α: marginal joint
//! quasi-probabilities and the order-2 super-qumulant generator with cross
//! kernels ⟨F_α(s)F_β(u)⟩.

use num_complex::Complex64 as C64;

use super::{SpectralDecompF, TOTAL_DIM_CAP};
use crate::error::{OqsError, Result};
use crate::linalg::{self, CMatrix, Operator, OperatorBasis, SuperOperator};
use crate::propagators::Generator;

/// Ĥ_SE = Ĥ_S⊗1 + 1⊗Ĥ_E + λ Σ_α V̂_α⊗F̂_α.
#[derive(Clone, Debug)]
pub struct MultiCoupling {
    pub hs: Operator,
    pub he: Operator,
    /// (V_α, F_α) pairs, all Hermitian.
    pub couplings: Vec<(Operator, Operator)>,
    pub lambda: f64,
    pub rho_e: Operator,
}

impl MultiCoupling {
    pub fn new(
        hs: Operator,
        he: Operator,
        couplings: Vec<(Operator, Operator)>,
        lambda: f64,
        rho_e: Operator,
    ) -> Result<Self> {
        if couplings.is_empty() {
            return Err(OqsError::BadParameter {
                name: "couplings",
                reason: "need at least one (V, F) pair".into(),
            });
        }
        for (v, f) in &couplings {
            if v.dim() != hs.dim() {
                return Err(OqsError::DimMismatch {
                    expected: hs.dim(),
                    got: v.dim(),
                });
            }
            if f.dim() != he.dim() {
                return Err(OqsError::DimMismatch {
                    expected: he.dim(),
                    got: f.dim(),
                });
            }
            if !v.is_hermitian(linalg::TOL) || !f.is_hermitian(linalg::TOL) {
                return Err(OqsError::BadParameter {
                    name: "couplings",
                    reason: "V_α and F_α must be Hermitian".into(),
                });
            }
        }
        if !rho_e.is_density(1e-8) {
            return Err(OqsError::PredicateFailed {
                predicate: "is_density",
                defect: rho_e.hermiticity_defect(),
                tol: 1e-8,
            });
        }
        Ok(Self {
            hs,
            he,
            couplings,
            lambda,
            rho_e,
        })
    }

    fn f_interaction(&self, alpha: usize, t: f64) -> Operator {
        let (vals, kets) = self.he.herm_eigen();
        let d = self.he.dim();
        let mut phases = CMatrix::zeros(d, d);
        for i in 0..d {
            phases[(i, i)] = C64::new(0.0, vals[i] * t).exp();
        }
        let rot = &kets * phases * kets.adjoint();
        Operator::new(&rot * self.couplings[alpha].1.mat() * rot.adjoint()).expect("square")
    }

    /// ⟨F_α(t)⟩.
    pub fn mean_f(&self, alpha: usize, t: f64) -> f64 {
        (&self.f_interaction(alpha, t) * &self.rho_e).trace().re
    }

    /// Cross quasi-moment ⟨F_α(t)F_β(s)⟩ = tr(F_α,I(t)F_β,I(s)ρ_E), t > s.
    pub fn cross_moment(&self, alpha: usize, beta: usize, t: f64, s: f64) -> C64 {
        (&(&self.f_interaction(alpha, t) * &self.f_interaction(beta, s)) * &self.rho_e).trace()
    }
}

/// Marginal joint quasi-probability over per-slot eigenvalue pairs of the
/// couplings chosen in `slots` = [(α_1, s_1), …, (α_k, s_k)], s_1 > … > s_k.
#[derive(Clone, Debug)]
pub struct MultiQuasiProbTensor {
    pub slots: Vec<(usize, f64)>,
    /// Eigenvalue list of the coupling used in each slot.
    pub eigenvalues: Vec<Vec<f64>>,
    values: Vec<C64>,
}

impl MultiQuasiProbTensor {
    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn get(&self, pairs: &[(usize, usize)]) -> C64 {
        let mut idx = 0usize;
        for (slot, &(f, fb)) in pairs.iter().enumerate() {
            let nf = self.eigenvalues[slot].len();
            idx = idx * nf * nf + f * nf + fb;
        }
        self.values[idx]
    }

    pub fn total(&self) -> C64 {
        self.values.iter().sum()
    }

    /// Sums the (f_i, f̄_i) pair of `slot`, reducing the order by one.
    pub fn sum_over_slot(&self, slot: usize) -> MultiQuasiProbTensor {
        let k = self.slots.len();
        let pair_counts: Vec<usize> = self.eigenvalues.iter().map(|e| e.len() * e.len()).collect();
        let outer: usize = pair_counts[..slot].iter().product();
        let mid = pair_counts[slot];
        let inner: usize = pair_counts[slot + 1..].iter().product();
        let mut values = vec![C64::new(0.0, 0.0); outer * inner];
        for o in 0..outer {
            for c in 0..mid {
                for i in 0..inner {
                    values[o * inner + i] += self.values[(o * mid + c) * inner + i];
                }
            }
        }
        let mut slots = self.slots.clone();
        slots.remove(slot);
        let mut eigenvalues = self.eigenvalues.clone();
        eigenvalues.remove(slot);
        let _ = k;
        MultiQuasiProbTensor {
            slots,
            eigenvalues,
            values,
        }
    }
}

/// Marginal Q^(k) for the coupling sequence `slots` (times descending).
pub fn quasi_probability_multi(
    m: &MultiCoupling,
    slots: &[(usize, f64)],
) -> Result<MultiQuasiProbTensor> {
    if slots.is_empty() {
        return Err(OqsError::BadParameter {
            name: "slots",
            reason: "need at least one (coupling, time) slot".into(),
        });
    }
    for (i, w) in slots.windows(2).enumerate() {
        if w[1].1 >= w[0].1 {
            return Err(OqsError::UnorderedTimes {
                index: i + 1,
                value: w[1].1,
            });
        }
    }
    if m.hs.dim() * m.he.dim() > TOTAL_DIM_CAP {
        return Err(OqsError::CapExceeded {
            what: "dimS*dimE",
            got: m.hs.dim() * m.he.dim(),
            cap: TOTAL_DIM_CAP,
        });
    }
    let decomps: Vec<SpectralDecompF> = m
        .couplings
        .iter()
        .map(|(_, f)| SpectralDecompF::new(f))
        .collect::<Result<_>>()?;
    for &(alpha, _) in slots {
        if alpha >= m.couplings.len() {
            return Err(OqsError::BadParameter {
                name: "slots",
                reason: format!("coupling index {alpha} out of range"),
            });
        }
    }

    let (h_vals, h_kets) = m.he.herm_eigen();
    let slot_projectors: Vec<Vec<CMatrix>> = slots
        .iter()
        .map(|&(alpha, s)| {
            (0..decomps[alpha].len())
                .map(|idx| {
                    decomps[alpha]
                        .projector_interaction(idx, &h_vals, &h_kets, s)
                        .into_mat()
                })
                .collect()
        })
        .collect();
    let eigenvalues: Vec<Vec<f64>> = slots
        .iter()
        .map(|&(alpha, _)| decomps[alpha].eigenvalues.clone())
        .collect();

    let pair_counts: Vec<usize> = eigenvalues.iter().map(|e| e.len() * e.len()).collect();
    let entries: usize = pair_counts.iter().product();
    if entries > (1 << 24) {
        return Err(OqsError::CapExceeded {
            what: "tensor entries",
            got: entries,
            cap: 1 << 24,
        });
    }

    let mut values = vec![C64::new(0.0, 0.0); entries];
    let strides: Vec<usize> = (0..slots.len())
        .map(|i| pair_counts[i + 1..].iter().product())
        .collect();
    fn recurse(
        slot: isize,
        x: &CMatrix,
        idx: usize,
        projectors: &[Vec<CMatrix>],
        strides: &[usize],
        values: &mut [C64],
    ) {
        if slot < 0 {
            values[idx] = x.trace();
            return;
        }
        let s = slot as usize;
        let nf = projectors[s].len();
        for f in 0..nf {
            for fb in 0..nf {
                let sandwiched = &projectors[s][f] * x * &projectors[s][fb];
                recurse(
                    slot - 1,
                    &sandwiched,
                    idx + (f * nf + fb) * strides[s],
                    projectors,
                    strides,
                    values,
                );
            }
        }
    }
    recurse(
        slots.len() as isize - 1,
        m.rho_e.mat(),
        0,
        &slot_projectors,
        &strides,
        &mut values,
    );

    Ok(MultiQuasiProbTensor {
        slots: slots.to_vec(),
        eigenvalues,
        values,
    })
}

/// Order-2 central super-qumulant generator for the multi-coupling model:
/// L_c^(2)(s) = Σ_{α,β} ∫₀ˢ du [⟨⟨F_α(s)F_β(u)⟩⟩(V_α,c(s)V_β,c(u)• - V_β,c(u)•V_α,c(s)) + h.c.-dual].
///
/// Requires a stationary environment; the couplings are rotated through the
/// constant Ĥ_S′ = Ĥ_S + λΣ_α⟨F_α⟩V̂_α.
pub fn superqumulant_generator_multi(
    m: &MultiCoupling,
    order: usize,
    t_max: f64,
    cfg: &crate::propagators::IntegratorCfg,
) -> Result<Generator> {
    if !matches!(order, 1 | 2) {
        return Err(OqsError::UnsupportedOrder(order));
    }
    let comm = &(&m.rho_e * &m.he) - &(&m.he * &m.rho_e);
    if comm.max_abs() > 1e-10 {
        return Err(OqsError::NotThermal(
            "multi-coupling super-qumulants need a stationary ρ_E".into(),
        ));
    }
    let d = m.hs.dim();
    let n2 = d * d;
    if order == 1 {
        return Ok(Generator::new(n2, move |_| CMatrix::zeros(n2, n2)));
    }
    let n_alpha = m.couplings.len();
    let means: Vec<f64> = (0..n_alpha).map(|a| m.mean_f(a, 0.0)).collect();
    let mut hs_prime = m.hs.clone();
    for (a, (v, _)) in m.couplings.iter().enumerate() {
        hs_prime = &hs_prime + &v.scale_re(m.lambda * means[a]);
    }
    let (vals, kets) = hs_prime.herm_eigen();
    let kets_adj = kets.adjoint();

    let delta = cfg.step / 2.0;
    let n_nodes = (t_max / delta).ceil() as usize + 2;
    let times: Vec<f64> = (0..n_nodes).map(|i| i as f64 * delta).collect();

    // V_α,c(s) nodes
    let v_nodes: Vec<Vec<Operator>> = (0..n_alpha)
        .map(|a| {
            times
                .iter()
                .map(|&s| {
                    let mut phases = CMatrix::zeros(d, d);
                    for i in 0..d {
                        phases[(i, i)] = C64::new(0.0, vals[i] * s).exp();
                    }
                    let rot = &kets * &phases * &kets_adj;
                    Operator::new(&rot * m.couplings[a].0.mat() * rot.adjoint()).expect("square")
                })
                .collect()
        })
        .collect();

    // centered cross kernels κ_{αβ}(τ) from the spectral form
    let (he_vals, he_kets) = m.he.herm_eigen();
    let de = m.he.dim();
    let rho_eig = he_kets.adjoint() * m.rho_e.mat() * &he_kets;
    let f_eig: Vec<CMatrix> = m
        .couplings
        .iter()
        .map(|(_, f)| he_kets.adjoint() * f.mat() * &he_kets)
        .collect();
    let kappa = |a: usize, b: usize, tau: f64| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..de {
            let p = rho_eig[(i, i)].re;
            if p <= 0.0 {
                continue;
            }
            for j in 0..de {
                let phase = C64::new(0.0, (he_vals[i] - he_vals[j]) * tau).exp();
                acc += phase * f_eig[a][(i, j)] * f_eig[b][(j, i)] * p;
            }
        }
        acc - C64::new(means[a] * means[b], 0.0)
    };

    let basis = OperatorBasis::ket_bra(d);
    let minus_lambda_sq = C64::new(-m.lambda * m.lambda, 0.0);
    let mut nodes: Vec<CMatrix> = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let mut node = CMatrix::zeros(n2, n2);
        for a in 0..n_alpha {
            // Λ_α(s_i) = Σ_β ∫ κ_{αβ}(s_i-u) V_β,c(u) du
            let mut lam = CMatrix::zeros(d, d);
            if i > 0 {
                for j in 0..=i {
                    let weight = if j == 0 || j == i { delta / 2.0 } else { delta };
                    for b in 0..n_alpha {
                        lam += v_nodes[b][j].mat()
                            * (kappa(a, b, times[i] - times[j]) * weight);
                    }
                }
            }
            let lam = Operator::new(lam).expect("square");
            let lam_dag = lam.dagger();
            let v_c = v_nodes[a][i].clone();
            let l2 = SuperOperator::from_action(basis.clone(), |x| {
                let inner = &(&lam * x) - &(x * &lam_dag);
                &(&v_c * &inner) - &(&inner * &v_c)
            })
            .expect("fixed dims");
            node += l2.mat() * minus_lambda_sq;
        }
        nodes.push(node);
    }

    let nodes = std::sync::Arc::new(nodes);
    Ok(Generator::new(n2, move |s| {
        let idx = ((s / delta).round() as usize).min(nodes.len() - 1);
        nodes[idx].clone()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::openq::{quasi_probability, superqumulant_generator, SEModel};
    use crate::propagators::{IntegratorCfg, Method};

    fn single_as_multi() -> (SEModel, MultiCoupling) {
        let se = SEModel::with_thermal_env(
            Operator::pauli_z().scale_re(0.5),
            Operator::diag(&[0.0, 1.0, 2.2]),
            Operator::pauli_x(),
            Operator::from_fn(3, |i, j| {
                if i == j {
                    C64::new(1.0 - i as f64, 0.0)
                } else {
                    C64::new(0.3, 0.0)
                }
            }),
            0.6,
            0.9,
        )
        .unwrap();
        let multi = MultiCoupling::new(
            se.hs.clone(),
            se.he.clone(),
            vec![(se.v.clone(), se.f.clone())],
            se.lambda,
            se.rho_e.clone(),
        )
        .unwrap();
        (se, multi)
    }

    #[test]
    fn single_coupling_reduces_to_base_api() {
        let (se, multi) = single_as_multi();
        let times = [1.4, 0.5];
        let q_single = quasi_probability(&se, &times).unwrap();
        let q_multi = quasi_probability_multi(&multi, &[(0, 1.4), (0, 0.5)]).unwrap();
        let worst = q_single
            .values()
            .iter()
            .zip(q_multi.values().iter())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).norm()));
        assert!(worst < 1e-12);

        let cfg = IntegratorCfg::new(Method::Rk4, 0.02).unwrap();
        let g_single = superqumulant_generator(&se, 2, 1.0, &cfg).unwrap();
        let g_multi = superqumulant_generator_multi(&multi, 2, 1.0, &cfg).unwrap();
        for &s in &[0.1, 0.5, 0.9] {
            assert!(
                crate::linalg::max_abs_diff(&g_single.eval(s), &g_multi.eval(s)) < 1e-10,
                "s = {s}"
            );
        }
    }

    #[test]
    fn independent_subspace_couplings_factorize() {
        // E = E1⊗E2, F_1 = f⊗1, F_2 = 1⊗g, ρ = ρ1⊗ρ2: marginals factor
        let sp = crate::linalg::CompositeSpace::new(2, 2);
        let f1 = sp.kron(&Operator::pauli_z(), &Operator::identity(2)).unwrap();
        let f2 = sp.kron(&Operator::identity(2), &Operator::pauli_z()).unwrap();
        let h1 = Operator::diag(&[0.0, 0.8]);
        let h2 = Operator::diag(&[0.0, 1.7]);
        let he = &sp.kron(&h1, &Operator::identity(2)).unwrap()
            + &sp.kron(&Operator::identity(2), &h2).unwrap();
        let rho1 = Operator::diag(&[0.7, 0.3]);
        let rho2 = Operator::diag(&[0.4, 0.6]);
        let rho_e = sp.kron(&rho1, &rho2).unwrap();
        let m = MultiCoupling::new(
            Operator::pauli_z(),
            he,
            vec![
                (Operator::pauli_x(), f1),
                (Operator::pauli_z(), f2),
            ],
            0.5,
            rho_e,
        )
        .unwrap();
        let (t1, t2) = (1.3, 0.4);
        let q12 = quasi_probability_multi(&m, &[(0, t1), (1, t2)]).unwrap();
        let q1 = quasi_probability_multi(&m, &[(0, t1)]).unwrap();
        let q2 = quasi_probability_multi(&m, &[(1, t2)]).unwrap();
        for f in 0..2 {
            for fb in 0..2 {
                for g in 0..2 {
                    for gb in 0..2 {
                        let joint = q12.get(&[(f, fb), (g, gb)]);
                        let product = q1.get(&[(f, fb)]) * q2.get(&[(g, gb)]);
                        assert!((joint - product).norm() < 1e-12);
                    }
                }
            }
        }
        // cross-correlator of independent baths = product of means
        let cross = m.cross_moment(0, 1, t1, t2);
        let product = m.mean_f(0, t1) * m.mean_f(1, t2);
        assert!((cross - C64::new(product, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn marginal_consistency_per_slot() {
        let (_, multi) = single_as_multi();
        let q = quasi_probability_multi(&multi, &[(0, 2.0), (0, 1.2), (0, 0.3)]).unwrap();
        for slot in 0..3 {
            let reduced = q.sum_over_slot(slot);
            let mut expect_slots = vec![(0usize, 2.0), (0, 1.2), (0, 0.3)];
            expect_slots.remove(slot);
            let direct = quasi_probability_multi(&multi, &expect_slots).unwrap();
            let worst = reduced
                .values()
                .iter()
                .zip(direct.values().iter())
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).norm()));
            assert!(worst < 1e-11, "slot {slot}: {worst}");
        }
        assert!((q.total() - C64::new(1.0, 0.0)).norm() < 1e-11);
    }

    #[test]
    fn mismatched_index_rejected() {
        let (_, multi) = single_as_multi();
        assert!(quasi_probability_multi(&multi, &[(3, 1.0)]).is_err());
    }
}
