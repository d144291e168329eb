use num_complex::Complex64 as C64;

use super::SEModel;
use crate::error::{OqsError, Result};

/// Spectral representation of the second qumulant of a stationary
/// environment:
///
///   ⟨⟨F(τ)F⟩⟩ = Σ_m c_m e^{iν_m τ},  c_m = p_a|X_ab|² ≥ 0, ν_m = ε_a - ε_b,
///
/// with X = F - ⟨F⟩. Everything downstream of the weak-coupling machinery
/// (γ_ω rates, FDT checks, qumulant kernels) reads off this form.
#[derive(Clone, Debug)]
pub struct EnvCorrelation {
    pub mean: f64,
    /// (Bohr frequency ν = ε_a - ε_b, weight p_a|X_ab|²), one entry per
    /// ordered level pair with nonzero weight.
    pub components: Vec<(f64, f64)>,
    /// Inverse temperature when the model's ρ_E was thermal.
    pub beta: Option<f64>,
}

impl EnvCorrelation {
    /// Requires a stationary environment ([ρ_E, H_E] = 0).
    pub fn from_model(m: &SEModel) -> Result<Self> {
        if !m.is_stationary() {
            return Err(OqsError::NotThermal(
                "environment state does not commute with H_E".into(),
            ));
        }
        let (vals, kets) = m.he.herm_eigen();
        let d = m.dim_e();
        let f_eig = kets.adjoint() * m.f.mat() * &kets;
        let rho_eig = kets.adjoint() * m.rho_e.mat() * &kets;
        let populations: Vec<f64> = (0..d).map(|a| rho_eig[(a, a)].re).collect();
        let mean: f64 = (0..d).map(|a| populations[a] * f_eig[(a, a)].re).sum();

        let mut components = Vec::new();
        for a in 0..d {
            if populations[a] <= 0.0 {
                continue;
            }
            for b in 0..d {
                let x_ab = if a == b {
                    f_eig[(a, a)] - C64::new(mean, 0.0)
                } else {
                    f_eig[(a, b)]
                };
                let weight = populations[a] * x_ab.norm_sqr();
                if weight > 1e-16 {
                    components.push((vals[a] - vals[b], weight));
                }
            }
        }
        Ok(Self {
            mean,
            components,
            beta: m.beta,
        })
    }

    /// ⟨⟨F(τ)F⟩⟩ = C_F(τ) - iK_F(τ).
    pub fn kappa(&self, tau: f64) -> C64 {
        self.components
            .iter()
            .map(|&(nu, c)| C64::new(0.0, nu * tau).exp() * c)
            .sum()
    }

    /// Symmetric correlation function C_F(τ) = Re ⟨⟨F(τ)F⟩⟩.
    pub fn correlation(&self, tau: f64) -> f64 {
        self.kappa(tau).re
    }

    /// Susceptibility K_F(τ) = -Im ⟨⟨F(τ)F⟩⟩.
    pub fn susceptibility(&self, tau: f64) -> f64 {
        -self.kappa(tau).im
    }
}
