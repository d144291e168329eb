//! Exact reduced dynamics of system⊗environment composites, joint
//! quasi-probability distributions of the environment coupling, and the
//! super-qumulant machinery built on them.

mod central;
mod corr;
mod exact;
mod multi;
mod quasiprob;
mod spectral;

pub use central::{qumulant_map_series, superqumulant_generator, CentralPicture};
pub use corr::EnvCorrelation;
pub use exact::{exact_dynamical_map, exact_map_series, kraus_from_model, KrausSet};
pub use multi::{quasi_probability_multi, superqumulant_generator_multi, MultiCoupling, MultiQuasiProbTensor};
pub use quasiprob::{
    correlation_and_susceptibility, quasi_moments_second, quasi_probability,
    quasi_probability_capped, QuasiProbTensor, DEFAULT_ORDER_CAP,
};
pub use spectral::SpectralDecompF;

use num_complex::Complex64 as C64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{OqsError, Result};
use crate::linalg::{self, CompositeSpace, Operator};

/// Largest total dimension dimS·dimE the exact-diagonalization routines
/// accept.
pub const TOTAL_DIM_CAP: usize = 64;

/// Composite model Ĥ_SE = Ĥ_S⊗1 + 1⊗Ĥ_E + λV̂⊗F̂ with uncorrelated initial
/// environment state ρ_E.
#[derive(Clone, Debug)]
pub struct SEModel {
    pub hs: Operator,
    pub he: Operator,
    pub v: Operator,
    pub f: Operator,
    pub lambda: f64,
    pub rho_e: Operator,
    /// Inverse temperature when ρ_E was constructed as e^{-βH_E}/Z.
    pub beta: Option<f64>,
}

impl SEModel {
    pub fn new(
        hs: Operator,
        he: Operator,
        v: Operator,
        f: Operator,
        lambda: f64,
        rho_e: Operator,
    ) -> Result<Self> {
        let model = Self {
            hs,
            he,
            v,
            f,
            lambda,
            rho_e,
            beta: None,
        };
        model.validate()?;
        Ok(model)
    }

    /// Same model with ρ_E = e^{-βH_E}/tr(e^{-βH_E}).
    pub fn with_thermal_env(
        hs: Operator,
        he: Operator,
        v: Operator,
        f: Operator,
        lambda: f64,
        beta: f64,
    ) -> Result<Self> {
        let rho_e = thermal_state(&he, beta)?;
        let mut model = Self::new(hs, he, v, f, lambda, rho_e)?;
        model.beta = Some(beta);
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        if self.v.dim() != self.hs.dim() {
            return Err(OqsError::DimMismatch {
                expected: self.hs.dim(),
                got: self.v.dim(),
            });
        }
        if self.f.dim() != self.he.dim() {
            return Err(OqsError::DimMismatch {
                expected: self.he.dim(),
                got: self.f.dim(),
            });
        }
        for (name, op) in [
            ("hs", &self.hs),
            ("he", &self.he),
            ("v", &self.v),
            ("f", &self.f),
        ] {
            if !op.is_hermitian(linalg::TOL) {
                return Err(OqsError::BadParameter {
                    name: "hs/he/v/f",
                    reason: format!("{name} must be Hermitian"),
                });
            }
        }
        if self.rho_e.dim() != self.he.dim() {
            return Err(OqsError::DimMismatch {
                expected: self.he.dim(),
                got: self.rho_e.dim(),
            });
        }
        if !self.rho_e.is_density(1e-8) {
            return Err(OqsError::PredicateFailed {
                predicate: "is_density",
                defect: self.rho_e.hermiticity_defect(),
                tol: 1e-8,
            });
        }
        Ok(())
    }

    pub fn dim_s(&self) -> usize {
        self.hs.dim()
    }

    pub fn dim_e(&self) -> usize {
        self.he.dim()
    }

    pub fn space(&self) -> CompositeSpace {
        CompositeSpace::new(self.dim_s(), self.dim_e())
    }

    /// Ĥ_S⊗1 + 1⊗Ĥ_E + λ V̂⊗F̂.
    pub fn total_hamiltonian(&self) -> Result<Operator> {
        let sp = self.space();
        let free = &sp.lift_s(&self.hs)? + &sp.lift_e(&self.he)?;
        Ok(&free + &sp.kron(&self.v, &self.f)?.scale_re(self.lambda))
    }

    /// [ρ_E, H_E] ≈ 0: the environment statistics are time-translation
    /// invariant.
    pub fn is_stationary(&self) -> bool {
        let comm = &(&self.rho_e * &self.he) - &(&self.he * &self.rho_e);
        comm.max_abs() < 1e-10
    }

    /// F̂ in the interaction picture, F_I(t) = e^{itH_E} F e^{-itH_E}.
    pub fn f_interaction(&self, t: f64) -> Operator {
        let (vals, kets) = self.he.herm_eigen();
        let d = self.dim_e();
        let mut phases = crate::linalg::CMatrix::zeros(d, d);
        for i in 0..d {
            phases[(i, i)] = C64::new(0.0, vals[i] * t).exp();
        }
        let rot = &kets * phases * kets.adjoint();
        Operator::new(&rot * self.f.mat() * rot.adjoint()).expect("square")
    }

    /// ⟨F(t)⟩ = tr(F_I(t) ρ_E); time-independent for stationary ρ_E.
    pub fn mean_f(&self, t: f64) -> f64 {
        (&self.f_interaction(t) * &self.rho_e).trace().re
    }
}

/// e^{-βH}/tr(e^{-βH}).
pub fn thermal_state(h: &Operator, beta: f64) -> Result<Operator> {
    if !beta.is_finite() {
        return Err(OqsError::BadParameter {
            name: "beta",
            reason: format!("inverse temperature must be finite, got {beta}"),
        });
    }
    let (vals, kets) = h.herm_eigen();
    // shift by the ground state energy before exponentiating
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = vals.iter().map(|&e| (-beta * (e - min)).exp()).collect();
    let z: f64 = weights.iter().sum();
    let d = h.dim();
    let mut diag = crate::linalg::CMatrix::zeros(d, d);
    for i in 0..d {
        diag[(i, i)] = C64::new(weights[i] / z, 0.0);
    }
    Operator::new(&kets * diag * kets.adjoint())
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EnvStateWire {
    Thermal { thermal: f64 },
    Explicit(Operator),
}

#[derive(Serialize, Deserialize)]
struct SEModelWire {
    hs: Operator,
    he: Operator,
    v: Operator,
    f: Operator,
    lambda: f64,
    #[serde(rename = "rhoE")]
    rho_e: EnvStateWire,
}

impl Serialize for SEModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rho_e = match self.beta {
            Some(beta) => EnvStateWire::Thermal { thermal: beta },
            None => EnvStateWire::Explicit(self.rho_e.clone()),
        };
        SEModelWire {
            hs: self.hs.clone(),
            he: self.he.clone(),
            v: self.v.clone(),
            f: self.f.clone(),
            lambda: self.lambda,
            rho_e,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SEModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = SEModelWire::deserialize(deserializer)?;
        let model = match wire.rho_e {
            EnvStateWire::Thermal { thermal } => {
                SEModel::with_thermal_env(wire.hs, wire.he, wire.v, wire.f, wire.lambda, thermal)
            }
            EnvStateWire::Explicit(rho_e) => {
                SEModel::new(wire.hs, wire.he, wire.v, wire.f, wire.lambda, rho_e)
            }
        };
        model.map_err(D::Error::custom)
    }
}
