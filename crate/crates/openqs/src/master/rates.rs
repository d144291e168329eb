use num_complex::Complex64 as C64;

use crate::error::{OqsError, Result};
use crate::openq::EnvCorrelation;

/// Half-line Fourier transforms γ_ω = ∫₀^∞ ⟨⟨F(τ)F⟩⟩ e^{-iωτ} dτ by
/// trapezoid on [0, horizon] with step `h`.
///
/// Requires the correlation to have decayed at the horizon,
/// |C(T)| < 1e-8·|C(0)|; returns the rates and an exponential-tail error
/// bound estimated from the decay between T/2 and T.
pub fn gamma_rates(
    corr: &dyn Fn(f64) -> C64,
    omegas: &[f64],
    horizon: f64,
    h: f64,
) -> Result<(Vec<C64>, f64)> {
    if horizon <= 0.0 || h <= 0.0 || h >= horizon || !horizon.is_finite() {
        return Err(OqsError::BadParameter {
            name: "horizon/h",
            reason: "need 0 < h < horizon".into(),
        });
    }
    let c0 = corr(0.0).norm();
    let tail = corr(horizon).norm();
    let cutoff = 1e-8 * c0;
    if tail > cutoff {
        return Err(OqsError::HorizonTooShort {
            horizon,
            tail,
            cutoff,
        });
    }
    // decay rate from the last half of the window; bound ∫_T^∞ |C| ≤ |C(T)|/decay
    let mid = corr(horizon / 2.0).norm();
    let decay = if mid > 0.0 && tail > 0.0 && mid > tail {
        (mid / tail).ln() / (horizon / 2.0)
    } else {
        1.0 / horizon
    };
    let tail_bound = tail / decay.max(1e-300);

    let n = (horizon / h).ceil() as usize;
    let step = horizon / n as f64;
    let samples: Vec<C64> = (0..=n).map(|i| corr(i as f64 * step)).collect();
    let rates = omegas
        .iter()
        .map(|&w| {
            let mut acc = C64::new(0.0, 0.0);
            for (i, &c) in samples.iter().enumerate() {
                let tau = i as f64 * step;
                let weight = if i == 0 || i == n { 0.5 } else { 1.0 };
                acc += c * C64::new(0.0, -w * tau).exp() * (weight * step);
            }
            acc
        })
        .collect();
    Ok((rates, tail_bound))
}

/// Exact half-line transform of the spectral comb ⟨⟨F(τ)F⟩⟩ = Σ c_m e^{iν_mτ}:
///
///   γ_ω = π Σ_{|ν_m-ω|≤tol} c_m + i Σ_{|ν_m-ω|>tol} c_m/(ν_m - ω),
///
/// the δ + principal-value split of ∫₀^∞ e^{i(ν-ω)τ}dτ. This is the rate a
/// finite, exactly-diagonalizable environment actually has; quadrature over
/// its never-decaying correlation function would not converge.
pub fn gamma_analytic(corr: &EnvCorrelation, omega: f64, gap_tol: f64) -> C64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for &(nu, c) in &corr.components {
        if (nu - omega).abs() <= gap_tol {
            re += std::f64::consts::PI * c;
        } else {
            im += c / (nu - omega);
        }
    }
    C64::new(re, im)
}

/// Davies rate at frequency ω for a thermal environment, from the
/// matched-broadening even spectral density:
///
///   S_η(ω) = π Σ_m c_m [g_η(ν_m-ω) + g_η(ν_m+ω)],  Re γ_ω = S_η(ω)/(e^{βω}+1),
///
/// with a normalized Gaussian kernel g_η. The comb of a finite bath only
/// hits exact Bohr matches; broadening the δ's keeps every structural
/// property intact for any η: S_η is even by construction, so the detailed
/// balance γ(-ω) = e^{βω}γ(ω) is exact, Re γ_ω ≥ 0, and the Gibbs state
/// stays the fixed point. The imaginary (Lamb-shift) part is the comb's
/// principal-value sum.
pub fn gamma_fdt_broadened(
    corr: &EnvCorrelation,
    beta: f64,
    omega: f64,
    eta: f64,
    gap_tol: f64,
) -> C64 {
    let g = |x: f64| (-x * x / (2.0 * eta * eta)).exp() / (eta * (2.0 * std::f64::consts::PI).sqrt());
    let s_eta: f64 = corr
        .components
        .iter()
        .map(|&(nu, c)| std::f64::consts::PI * c * (g(nu - omega) + g(nu + omega)))
        .sum();
    let re = s_eta / ((beta * omega).exp() + 1.0);
    let mut im = 0.0;
    for &(nu, c) in &corr.components {
        if (nu - omega).abs() > gap_tol {
            im += c / (nu - omega);
        }
    }
    C64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_kernel_at_zero_frequency() {
        // ⟨⟨F(τ)F⟩⟩ = e^{-2wτ}: γ_0 = 1/(2w)
        let w = 0.8;
        let corr = move |tau: f64| C64::new((-2.0 * w * tau).exp(), 0.0);
        let (rates, tail) = gamma_rates(&corr, &[0.0], 15.0, 1e-3).unwrap();
        assert!((rates[0] - C64::new(1.0 / (2.0 * w), 0.0)).norm() < 1e-6);
        assert!(tail < 1e-8);
    }

    #[test]
    fn exponential_kernel_general_frequency() {
        // γ_ω = 1/(2w + iω)
        let w = 0.6;
        let corr = move |tau: f64| C64::new((-2.0 * w * tau).exp(), 0.0);
        for &omega in &[0.5, -1.3, 2.0] {
            let (rates, _) = gamma_rates(&corr, &[omega], 20.0, 5e-4).unwrap();
            let expect = C64::new(1.0, 0.0) / C64::new(2.0 * w, omega);
            assert!(
                (rates[0] - expect).norm() < 1e-6,
                "ω={omega}: {} vs {expect}",
                rates[0]
            );
        }
    }

    #[test]
    fn horizon_too_short_rejected() {
        let corr = |tau: f64| C64::new((-0.1 * tau).exp(), 0.0);
        assert!(matches!(
            gamma_rates(&corr, &[0.0], 5.0, 1e-3),
            Err(OqsError::HorizonTooShort { .. })
        ));
    }

    #[test]
    fn analytic_rate_positivity_for_thermal_comb() {
        use crate::linalg::Operator;
        use crate::openq::SEModel;
        let m = SEModel::with_thermal_env(
            Operator::pauli_z(),
            Operator::diag(&[0.0, 0.9, 2.1, 2.8]),
            Operator::pauli_x(),
            Operator::from_fn(4, |i, j| {
                if i == j {
                    C64::new(1.5 - i as f64, 0.0)
                } else {
                    C64::new(0.4, 0.1 * (i as f64 - j as f64))
                }
            }),
            0.5,
            1.1,
        )
        .unwrap();
        let corr = EnvCorrelation::from_model(&m).unwrap();
        for &omega in &[-2.0, -0.9, 0.0, 0.9, 2.0] {
            let g = gamma_analytic(&corr, omega, 1e-8);
            assert!(g.re >= -1e-14, "Re γ_ω must be ≥ 0, got {}", g.re);
        }
    }

    #[test]
    fn broadened_rate_matches_comb_weight_on_comb() {
        // at an exact Bohr match the FDT-form broadened rate tends to the
        // half-line comb weight π·Σ c_m as η → 0 (the matched component
        // dominates; S(ω)/(e^{βω}+1) folds the e^{βω}-weighted mirror in)
        use crate::linalg::Operator;
        use crate::openq::SEModel;
        let beta = 0.9;
        let m = SEModel::with_thermal_env(
            Operator::pauli_z(),
            Operator::diag(&[0.0, 1.3]),
            Operator::pauli_x(),
            Operator::pauli_x(),
            0.5,
            beta,
        )
        .unwrap();
        let corr = EnvCorrelation::from_model(&m).unwrap();
        let omega = 1.3; // on-comb
        let exact = gamma_analytic(&corr, omega, 1e-8);
        for eta in [0.05, 0.02, 0.01] {
            let broadened = gamma_fdt_broadened(&corr, beta, omega, eta, 1e-8);
            // normalize by the Gaussian peak g(0) = 1/(η√(2π)): the rate per
            // matched broadening equals the comb weight up to far-tail terms
            let peak = 1.0 / (eta * (2.0 * std::f64::consts::PI).sqrt());
            let got = broadened.re / peak;
            assert!(
                (got - exact.re).abs() < 1e-3,
                "η = {eta}: {got} vs {}",
                exact.re
            );
            // Lamb parts agree exactly (same principal-value sum)
            assert!((broadened.im - exact.im).abs() < 1e-14);
        }
    }

    #[test]
    fn analytic_comb_principal_value_by_hand() {
        // γ_ω = Σ πδ-weights + iΣ c/(ν-ω); off-comb ω gets only the PV part
        let corr_comb = EnvCorrelation {
            mean: 0.0,
            components: vec![(1.3, 0.7), (-0.4, 0.2)],
            beta: None,
        };
        let got = gamma_analytic(&corr_comb, 0.5, 1e-8);
        let expect_im = 0.7 / (1.3 - 0.5) + 0.2 / (-0.4 - 0.5);
        assert!(got.re.abs() < 1e-15);
        assert!((got.im - expect_im).abs() < 1e-14);
        // on-comb ω picks up the π weight of the matching component only
        let on = gamma_analytic(&corr_comb, 1.3, 1e-8);
        assert!((on.re - std::f64::consts::PI * 0.7).abs() < 1e-14);
        assert!((on.im - 0.2 / (-0.4 - 1.3)).abs() < 1e-14);
    }
}
