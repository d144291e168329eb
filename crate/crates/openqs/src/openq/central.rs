//! Central picture and the super-qumulant generator.
//!
//! Shifting the coupling to X̂(t) = F̂ - ⟨F(t)⟩1 and absorbing λ⟨F(t)⟩V̂ into
//! Ĥ_S′ kills the first super-qumulant; the second becomes
//!
//!   L_c^(2)(s) = [V_c(s), Λ(s)• - •Λ(s)†],  Λ(s) = ∫₀ˢ ⟨⟨F(s)F(u)⟩⟩ V_c(u) du,
//!
//! with V_c(s) the coupling in the frame of Ĥ_S′ and ⟨⟨F F⟩⟩ the centered
//! second quasi-moment. The order-2 map follows by propagating
//! d⟨U⟩^(2)/dt = -λ²L_c^(2)(t)⟨U⟩^(2).

use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::{EnvCorrelation, SEModel};
use crate::error::{OqsError, Result};
use crate::linalg::{CMatrix, Operator, OperatorBasis, SuperOperator};
use crate::propagators::{lift_unitary, propagate_observed, Generator, IntegratorCfg, Method};

/// Central-picture split of an SE model: Ĥ_S′(t) = Ĥ_S + λ⟨F(t)⟩V̂ and
/// X̂(t) = F̂ - ⟨F(t)⟩1.
#[derive(Clone, Debug)]
pub struct CentralPicture {
    pub model: SEModel,
    stationary: bool,
    mean0: f64,
}

impl CentralPicture {
    pub fn new(model: SEModel) -> Self {
        let stationary = model.is_stationary();
        let mean0 = model.mean_f(0.0);
        Self {
            model,
            stationary,
            mean0,
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    pub fn mean_f(&self, t: f64) -> f64 {
        if self.stationary {
            self.mean0
        } else {
            self.model.mean_f(t)
        }
    }

    /// Ĥ_S′(t) = Ĥ_S + λ⟨F(t)⟩V̂.
    pub fn hs_prime(&self, t: f64) -> Operator {
        &self.model.hs + &self.model.v.scale_re(self.model.lambda * self.mean_f(t))
    }

    /// Constant Ĥ_S′ for stationary environments.
    pub fn hs_prime_static(&self) -> Result<Operator> {
        if !self.stationary {
            return Err(OqsError::NotThermal(
                "H_S' is time-dependent for non-stationary ρ_E".into(),
            ));
        }
        Ok(self.hs_prime(0.0))
    }

    /// X̂(t) = F̂ - ⟨F(t)⟩1; ⟨X(t)⟩ = 0 by construction.
    pub fn x_op(&self, t: f64) -> Operator {
        let d = self.model.dim_e();
        Operator::new(
            self.model.f.mat() - CMatrix::identity(d, d) * C64::new(self.mean_f(t), 0.0),
        )
        .expect("square")
    }

    /// ⟨X(t)⟩ evaluated directly; vanishes within tolerance for all t.
    pub fn mean_x(&self, t: f64) -> f64 {
        let x = self.x_op(t);
        let (vals, kets) = self.model.he.herm_eigen();
        let d = self.model.dim_e();
        let mut phases = CMatrix::zeros(d, d);
        for i in 0..d {
            phases[(i, i)] = C64::new(0.0, vals[i] * t).exp();
        }
        let rot = &kets * phases * kets.adjoint();
        let x_i = &rot * x.mat() * rot.adjoint();
        (x_i * self.model.rho_e.mat()).trace().re
    }

    /// V̂_c(s) = Û_S′†(s) V̂ Û_S′(s) on precomputed grid nodes.
    fn coupling_nodes(&self, times: &[f64], cfg: &IntegratorCfg) -> Result<Vec<Operator>> {
        if self.stationary {
            let hsp = self.hs_prime(0.0);
            let (vals, kets) = hsp.herm_eigen();
            let kets_adj = kets.adjoint();
            let d = self.model.dim_s();
            Ok(times
                .iter()
                .map(|&s| {
                    let mut phases = CMatrix::zeros(d, d);
                    for i in 0..d {
                        phases[(i, i)] = C64::new(0.0, vals[i] * s).exp();
                    }
                    let rot = &kets * &phases * &kets_adj;
                    Operator::new(&rot * self.model.v.mat() * rot.adjoint()).expect("square")
                })
                .collect())
        } else {
            // propagate U_S'(s) along the node grid and rotate V through it
            let d = self.model.dim_s();
            let this = self.clone();
            let gen = Generator::new(d, move |t| {
                this.hs_prime(t).into_mat() * C64::new(0.0, -1.0)
            });
            let node_cfg = IntegratorCfg::new(Method::Rk4, cfg.step / 2.0)?;
            let t_max = *times.last().expect("non-empty");
            let mut nodes = Vec::with_capacity(times.len());
            let mut next = 0usize;
            propagate_observed(&gen, 0.0, t_max.max(1e-300), &node_cfg, |t, u| {
                while next < times.len() && times[next] <= t + 1e-12 {
                    let v_c = u.adjoint() * self.model.v.mat() * u;
                    nodes.push(Operator::new(v_c).expect("square"));
                    next += 1;
                }
            })?;
            while nodes.len() < times.len() {
                let last = nodes.last().expect("at least t=0").clone();
                nodes.push(last);
            }
            Ok(nodes)
        }
    }
}

/// Super-qumulant generator Σ_{k≤order} (-iλ)^k L_c^(k)(s) in the central
/// picture, tabulated on half-step nodes covering [0, t_max].
///
/// L_c^(1) = 0 identically; orders beyond 2 are not available (the L^(3)
/// nested-average term is excluded).
pub fn superqumulant_generator(
    m: &SEModel,
    order: usize,
    t_max: f64,
    cfg: &IntegratorCfg,
) -> Result<Generator> {
    if !matches!(order, 1 | 2) {
        return Err(OqsError::UnsupportedOrder(order));
    }
    let central = CentralPicture::new(m.clone());
    let delta = cfg.step / 2.0;
    let n_nodes = (t_max / delta).ceil() as usize + 2;
    let times: Vec<f64> = (0..n_nodes).map(|i| i as f64 * delta).collect();
    let d = m.dim_s();
    let n2 = d * d;

    if order == 1 {
        // L_c^(1) = 0 by construction of the central picture
        return Ok(Generator::new(n2, move |_| CMatrix::zeros(n2, n2)));
    }

    let v_nodes = central.coupling_nodes(&times, cfg)?;
    let kappa = centered_kernel(&central, &times)?;

    // Λ(s_i) = Σ_{j≤i} w_j κ(s_i, u_j) V_c(u_j), cumulative trapezoid
    let basis = OperatorBasis::ket_bra(d);
    let mut nodes: Vec<CMatrix> = Vec::with_capacity(n_nodes);
    let minus_lambda_sq = C64::new(-m.lambda * m.lambda, 0.0);
    for i in 0..n_nodes {
        let mut lambda_op = CMatrix::zeros(d, d);
        if i > 0 {
            for j in 0..=i {
                let weight = if j == 0 || j == i {
                    delta / 2.0
                } else {
                    delta
                };
                lambda_op += v_nodes[j].mat() * (kappa(i, j) * weight);
            }
        }
        let lam = Operator::new(lambda_op).expect("square");
        let lam_dag = lam.dagger();
        let v_c = v_nodes[i].clone();
        let l2 = SuperOperator::from_action(basis.clone(), |a| {
            let inner = &(&lam * a) - &(a * &lam_dag);
            &(&v_c * &inner) - &(&inner * &v_c)
        })?;
        nodes.push(l2.mat() * minus_lambda_sq);
    }

    let nodes = Arc::new(nodes);
    Ok(Generator::new(n2, move |s| {
        let idx = ((s / delta).round() as usize).min(nodes.len() - 1);
        nodes[idx].clone()
    }))
}

/// Centered kernel ⟨⟨F(s_i)F(s_j)⟩⟩ as a closure over node indices.
fn centered_kernel<'a>(
    central: &'a CentralPicture,
    times: &'a [f64],
) -> Result<Box<dyn Fn(usize, usize) -> C64 + 'a>> {
    let m = &central.model;
    if central.is_stationary() {
        let corr = EnvCorrelation::from_model(m)?;
        let times = times.to_vec();
        Ok(Box::new(move |i, j| corr.kappa(times[i] - times[j])))
    } else {
        // tabulate F_I at the nodes once; κ(s,u) = tr(F_I(s)F_I(u)ρ) - ⟨F⟩⟨F⟩
        let f_nodes: Vec<Operator> = times.iter().map(|&s| m.f_interaction(s)).collect();
        let means: Vec<f64> = f_nodes
            .iter()
            .map(|f| (f * &m.rho_e).trace().re)
            .collect();
        let rho = m.rho_e.clone();
        Ok(Box::new(move |i, j| {
            let prod = (&(&f_nodes[i] * &f_nodes[j]) * &rho).trace();
            prod - C64::new(means[i] * means[j], 0.0)
        }))
    }
}

/// Order-2 super-qumulant map ⟨U⟩(t) ≈ U_S′(t) ∘ T-exp(-λ²∫L_c^(2)) at every
/// integrator step, in the lab frame.
pub fn qumulant_map_series(
    m: &SEModel,
    order: usize,
    t_max: f64,
    cfg: &IntegratorCfg,
) -> Result<Vec<(f64, SuperOperator)>> {
    let central = CentralPicture::new(m.clone());
    let generator = superqumulant_generator(m, order, t_max, cfg)?;
    let d = m.dim_s();
    let basis = OperatorBasis::ket_bra(d);
    let mut raw: Vec<(f64, CMatrix)> = Vec::new();
    propagate_observed(&generator, 0.0, t_max, cfg, |t, u| {
        raw.push((t, u.clone()));
    })?;
    raw.into_iter()
        .map(|(t, u_c)| {
            let u_sp = if central.is_stationary() {
                central.hs_prime_static()?.expm_scaled(C64::new(0.0, -t))?
            } else {
                // U_S'(t) by direct propagation
                let this = central.clone();
                let gen = Generator::new(d, move |s| {
                    this.hs_prime(s).into_mat() * C64::new(0.0, -1.0)
                });
                Operator::new(crate::propagators::propagate(&gen, 0.0, t, cfg)?)?
            };
            let free = lift_unitary(&u_sp)?;
            Ok((
                t,
                free.compose(&SuperOperator::from_matrix(basis.clone(), u_c)?),
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::openq::exact_dynamical_map;

    fn thermal_model(lambda: f64) -> SEModel {
        SEModel::with_thermal_env(
            Operator::pauli_z().scale_re(0.6),
            Operator::diag(&[0.0, 1.1, 1.9, 3.2]),
            Operator::pauli_x(),
            Operator::from_fn(4, |i, j| {
                if i == j {
                    C64::new(1.5 - i as f64, 0.0)
                } else {
                    C64::new(0.45, 0.2 * (i as f64 - j as f64))
                }
            }),
            lambda,
            0.8,
        )
        .unwrap()
    }

    #[test]
    fn central_mean_vanishes_everywhere() {
        let central = CentralPicture::new(thermal_model(0.5));
        for i in 0..20 {
            let t = 0.17 * i as f64;
            assert!(central.mean_x(t).abs() < 1e-11, "⟨X({t})⟩ ≠ 0");
        }
    }

    #[test]
    fn traceless_f_uniform_env_keeps_hs() {
        let m = SEModel::new(
            Operator::pauli_z(),
            Operator::diag(&[0.0, 1.0]),
            Operator::pauli_x(),
            Operator::pauli_z(),
            0.7,
            Operator::diag(&[0.5, 0.5]),
        )
        .unwrap();
        let central = CentralPicture::new(m.clone());
        assert!(central.hs_prime(0.9).max_abs_diff(&m.hs) < 1e-13);
    }

    #[test]
    fn thermal_shift_is_tanh_like() {
        // F = σ_z environment at inverse temperature β with gap ε:
        // ⟨F⟩ = tanh(-βε/2)-type constant; H_S' = H_S + λ⟨F⟩V
        let (beta, eps) = (1.2, 0.9);
        let m = SEModel::with_thermal_env(
            Operator::pauli_z(),
            Operator::diag(&[0.0, eps]),
            Operator::pauli_x(),
            Operator::pauli_z(),
            0.5,
            beta,
        )
        .unwrap();
        let central = CentralPicture::new(m);
        let mean = (1.0 - (-beta * eps).exp()) / (1.0 + (-beta * eps).exp());
        let expect = &Operator::pauli_z() + &Operator::pauli_x().scale_re(0.5 * mean);
        assert!(central.hs_prime_static().unwrap().max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn order_one_map_is_free_rotation() {
        let m = thermal_model(0.4);
        let cfg = IntegratorCfg::new(Method::Rk4, 0.02).unwrap();
        let series = qumulant_map_series(&m, 1, 1.0, &cfg).unwrap();
        let central = CentralPicture::new(m);
        for (t, map) in series.iter().step_by(10) {
            let u = central
                .hs_prime_static()
                .unwrap()
                .expm_scaled(C64::new(0.0, -t))
                .unwrap();
            let expect = lift_unitary(&u).unwrap();
            assert!(crate::linalg::max_abs_diff(map.mat(), expect.mat()) < 1e-10);
        }
    }

    #[test]
    fn weak_coupling_stays_near_identity() {
        let m = thermal_model(1e-3);
        let cfg = IntegratorCfg::new(Method::Rk4, 0.02).unwrap();
        let t = 1.0;
        let map = qumulant_map_series(&m, 2, t, &cfg)
            .unwrap()
            .pop()
            .unwrap()
            .1;
        // in the central frame the deviation from free evolution is O(λ²t)
        let central = CentralPicture::new(thermal_model(1e-3));
        let u = central
            .hs_prime_static()
            .unwrap()
            .expm_scaled(C64::new(0.0, -t))
            .unwrap();
        let free = lift_unitary(&u).unwrap();
        let diff = crate::linalg::max_abs_diff(map.mat(), free.mat());
        assert!(diff < 1e-5, "residual {diff} not O(λ²)");
    }

    #[test]
    fn pure_dephasing_order_two_matches_kernel_integral() {
        // [V, H_S] = 0, H_S = 0: coherence = exp(-λ²∬⟨⟨FF⟩⟩) on the
        // (gap ±1) slots; oracle by direct double quadrature of the kernel
        let lambda = 0.3;
        let m = SEModel::with_thermal_env(
            Operator::zeros(2),
            Operator::diag(&[0.0, 0.9, 2.0]),
            Operator::pauli_z().scale_re(0.5),
            Operator::from_fn(3, |i, j| {
                if i == j {
                    C64::new(1.0 - i as f64, 0.0)
                } else {
                    C64::new(0.35, 0.15 * (i as f64 - j as f64))
                }
            }),
            lambda,
            1.0,
        )
        .unwrap();
        let cfg = IntegratorCfg::new(Method::Rk4, 0.005).unwrap();
        let t = 1.5;
        let map = qumulant_map_series(&m, 2, t, &cfg).unwrap().pop().unwrap().1;
        // ordered double integral of the centered kernel, midpoint rule;
        // with V = σ_z/2 the ±½ gaps cancel the antisymmetric (K_F) part,
        // so only Re ∬κ dephases, and H_S' = λ⟨F⟩V adds the phase e^{-iλ⟨F⟩t}
        let corr = EnvCorrelation::from_model(&m).unwrap();
        let n = 3000;
        let dt = t / n as f64;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            let s = (i as f64 + 0.5) * dt;
            for j in 0..i {
                let u = (j as f64 + 0.5) * dt;
                acc += corr.kappa(s - u) * (dt * dt);
            }
        }
        let magnitude = (-lambda * lambda * acc.re).exp();
        let phase = C64::new(0.0, -lambda * corr.mean * t).exp();
        let expect = phase * magnitude;
        let got = map.mat()[(2, 2)];
        assert!(
            (got - expect).norm() < 2e-4,
            "got {got}, expect {expect}"
        );
    }

    /// Bath with a parity symmetry Π = diag(1,1,-1,-1), ΠFΠ = -F: all odd
    /// environment correlators vanish, so the first correction beyond the
    /// order-2 map is the theoretical λ⁴ term.
    pub(crate) fn parity_bath_model(lambda: f64) -> SEModel {
        SEModel::with_thermal_env(
            Operator::pauli_z().scale_re(0.6),
            Operator::diag(&[0.0, 1.1, 1.9, 3.2]),
            Operator::pauli_x(),
            Operator::from_fn(4, |i, j| {
                // block off-diagonal between {0,1} and {2,3}
                let cross = (i < 2) != (j < 2);
                if cross {
                    C64::new(0.5 + 0.2 * (i + j) as f64, 0.15 * (i as f64 - j as f64))
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
            lambda,
            0.8,
        )
        .unwrap()
    }

    #[test]
    fn order_two_error_scales_as_lambda_fourth_vs_exact() {
        let cfg = IntegratorCfg::new(Method::Rk4, 0.005).unwrap();
        let t = 1.0;
        let err = |lambda: f64| -> f64 {
            let m = parity_bath_model(lambda);
            let approx = qumulant_map_series(&m, 2, t, &cfg).unwrap().pop().unwrap().1;
            let exact = exact_dynamical_map(&m, t).unwrap();
            crate::linalg::max_abs_diff(approx.mat(), exact.mat())
        };
        let (e1, e2) = (err(0.2), err(0.1));
        let slope = (e1 / e2).log2();
        assert!(
            slope > 3.5 && slope < 4.6,
            "λ-halving slope {slope} (errors {e1:.3e}, {e2:.3e})"
        );
    }

    #[test]
    fn unsupported_orders_rejected() {
        let m = thermal_model(0.3);
        let cfg = IntegratorCfg::new(Method::Rk4, 0.02).unwrap();
        assert!(matches!(
            superqumulant_generator(&m, 3, 1.0, &cfg),
            Err(OqsError::UnsupportedOrder(3))
        ));
    }
}
