//! Fixed-step propagators for dX/dt = G(t)X with X(t0) = 1.
//!
//! The same stepping works for evolution operators (G = -iH(t)) and for
//! superoperator-valued generators (G = Σ_k (-iλ)^k C^(k)(t)); both are just
//! square complex matrices here.

use num_complex::Complex64 as C64;

use crate::error::{OqsError, Result};
use crate::linalg::{self, CMatrix, Operator, SuperOperator};

/// Time-dependent generator: t ↦ square matrix of fixed dimension, units of
/// inverse time.
pub struct Generator {
    dim: usize,
    eval: Box<dyn Fn(f64) -> CMatrix + Send + Sync>,
}

impl Generator {
    pub fn new(dim: usize, eval: impl Fn(f64) -> CMatrix + Send + Sync + 'static) -> Self {
        Self {
            dim,
            eval: Box::new(eval),
        }
    }

    pub fn constant(m: CMatrix) -> Self {
        let dim = m.nrows();
        Self::new(dim, move |_| m.clone())
    }

    /// -iH(t) from an operator-valued Hamiltonian function.
    pub fn from_hamiltonian(
        dim: usize,
        h: impl Fn(f64) -> Operator + Send + Sync + 'static,
    ) -> Self {
        Self::new(dim, move |t| h(t).into_mat() * C64::new(0.0, -1.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: f64) -> CMatrix {
        (self.eval)(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Euler,
    Rk4,
    CrankNicolson,
}

impl std::str::FromStr for Method {
    type Err = OqsError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Method::Euler),
            "rk4" => Ok(Method::Rk4),
            "crank-nicolson" | "cn" | "crank_nicolson" => Ok(Method::CrankNicolson),
            other => Err(OqsError::BadParameter {
                name: "method",
                reason: format!("unknown integrator `{other}`"),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IntegratorCfg {
    pub method: Method,
    pub step: f64,
}

impl IntegratorCfg {
    pub fn new(method: Method, step: f64) -> Result<Self> {
        if step <= 0.0 || !step.is_finite() {
            return Err(OqsError::BadParameter {
                name: "step",
                reason: format!("step must be positive and finite, got {step}"),
            });
        }
        Ok(Self { method, step })
    }

    /// Grid spacing the driving trajectory must be sampled on: RK4 evaluates
    /// the generator at midpoints jh + h/2, so it needs half steps.
    pub fn sample_spacing(&self) -> f64 {
        match self.method {
            Method::Rk4 => self.step / 2.0,
            _ => self.step,
        }
    }
}

/// Approximates the time-ordered exponential T-exp(∫_{t0}^{t1} G(u)du).
///
/// Fixed step; the final partial step is shortened to hit t1 exactly.
pub fn propagate(g: &Generator, t0: f64, t1: f64, cfg: &IntegratorCfg) -> Result<CMatrix> {
    let mut u = CMatrix::identity(g.dim(), g.dim());
    propagate_into(g, t0, t1, cfg, &mut u, |_, _| {})?;
    Ok(u)
}

/// Same as [`propagate`] but reports the state after every accepted step via
/// `observe(t, U)`, including the initial condition at t0.
pub fn propagate_observed(
    g: &Generator,
    t0: f64,
    t1: f64,
    cfg: &IntegratorCfg,
    mut observe: impl FnMut(f64, &CMatrix),
) -> Result<CMatrix> {
    let mut u = CMatrix::identity(g.dim(), g.dim());
    observe(t0, &u);
    propagate_into(g, t0, t1, cfg, &mut u, |t, m| observe(t, m))?;
    Ok(u)
}

fn propagate_into(
    g: &Generator,
    t0: f64,
    t1: f64,
    cfg: &IntegratorCfg,
    u: &mut CMatrix,
    mut observe: impl FnMut(f64, &CMatrix),
) -> Result<()> {
    if t1 < t0 {
        return Err(OqsError::BadParameter {
            name: "t1",
            reason: format!("t1 = {t1} < t0 = {t0}"),
        });
    }
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(());
    }
    let h = cfg.step;
    let n_full = (span / h).floor() as usize;
    let remainder = span - n_full as f64 * h;
    let mut t = t0;
    for _ in 0..n_full {
        step(g, t, h, cfg.method, u)?;
        t += h;
        observe(t, u);
    }
    if remainder > span * 1e-12 {
        step(g, t, remainder, cfg.method, u)?;
        observe(t1, u);
    }
    Ok(())
}

fn step(g: &Generator, t: f64, h: f64, method: Method, u: &mut CMatrix) -> Result<()> {
    match method {
        Method::Euler => {
            let du = g.eval(t) * &*u;
            *u += du * C64::new(h, 0.0);
        }
        Method::Rk4 => {
            let half = C64::new(h / 2.0, 0.0);
            let k1 = g.eval(t) * &*u;
            let k2 = g.eval(t + h / 2.0) * (&*u + &k1 * half);
            let k3 = g.eval(t + h / 2.0) * (&*u + &k2 * half);
            let k4 = g.eval(t + h) * (&*u + &k3 * C64::new(h, 0.0));
            *u += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
                * C64::new(h / 6.0, 0.0);
        }
        Method::CrankNicolson => {
            // (1 - (h/2)G(t+h)) U' = (1 + (h/2)G(t)) U
            let d = g.dim();
            let id = CMatrix::identity(d, d);
            let lhs = &id - g.eval(t + h) * C64::new(h / 2.0, 0.0);
            let rhs = (&id + g.eval(t) * C64::new(h / 2.0, 0.0)) * &*u;
            *u = lhs
                .lu()
                .solve(&rhs)
                .ok_or(OqsError::SingularSolve("Crank-Nicolson step"))?;
        }
    }
    Ok(())
}

/// Composition-rule defect ‖U(t0,t1) - U(tm,t1)U(t0,tm)‖_max.
pub fn compose_check(
    g: &Generator,
    t0: f64,
    tm: f64,
    t1: f64,
    cfg: &IntegratorCfg,
) -> Result<f64> {
    let whole = propagate(g, t0, t1, cfg)?;
    let first = propagate(g, t0, tm, cfg)?;
    let second = propagate(g, tm, t1, cfg)?;
    Ok(linalg::max_abs_diff(&whole, &(second * first)))
}

/// Lifts a unitary to the conjugation superoperator U • U†.
pub fn lift_unitary(u: &Operator) -> Result<SuperOperator> {
    if !u.is_unitary(linalg::TOL) {
        return Err(OqsError::PredicateFailed {
            predicate: "is_unitary",
            defect: u.unitarity_defect(),
            tol: linalg::TOL,
        });
    }
    linalg::left_right_super(u, &u.dagger())
}

/// Interaction picture of an operator-valued drive with respect to a constant
/// h0: t ↦ e^{it·h0} v(t) e^{-it·h0}.
pub fn interaction_picture(
    v: impl Fn(f64) -> Operator + Send + Sync + 'static,
    h0: &Operator,
) -> impl Fn(f64) -> Operator + Send + Sync + 'static {
    let (vals, kets) = h0.herm_eigen();
    let kets_adj = kets.adjoint();
    move |t: f64| {
        let d = vals.len();
        let mut phases = CMatrix::zeros(d, d);
        for i in 0..d {
            phases[(i, i)] = C64::new(0.0, vals[i] * t).exp();
        }
        let rot = &kets * &phases * &kets_adj;
        Operator::new(&rot * v(t).mat() * rot.adjoint()).expect("square")
    }
}
