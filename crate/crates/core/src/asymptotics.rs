//! Closed-form low-temperature and conformal predictions for the critical
//! regime, plus the free-fermion free energy at Δ = 0. These are independent
//! of the NLIE machinery and serve as cross-checks for it.
//!
//! `j_coupling` has the same meaning as everywhere else in the crate: the
//! Hamiltonian is H_IRF + J Σᶻ.

use crate::error::{IronfaceError, Result};
use crate::nlie::ground_energy_density;
use crate::weights::Regime;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Conformal data of the critical chain at anisotropy γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalData {
    pub central_charge: f64,
    /// Sound velocity 2π sin γ / γ.
    pub velocity: f64,
    pub h_plus: f64,
    pub h_minus: f64,
}

impl ConformalData {
    /// Data for the operator with quantum numbers (M, E) and twist φ.
    pub fn new(m: i64, e: i64, phi: f64, gamma: f64) -> Result<Self> {
        let (h_plus, h_minus) = exponent_h(m, e, phi, gamma)?;
        Ok(Self { central_charge: 1.0, velocity: sound_velocity(gamma)?, h_plus, h_minus })
    }

    /// Scaling dimension h₊ + h₋.
    pub fn dimension(&self) -> f64 {
        self.h_plus + self.h_minus
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < PI {
        Ok(())
    } else {
        Err(IronfaceError::InvalidParameter(format!("gamma must lie in (0, pi), got {gamma}")))
    }
}

/// γ / sin γ with its limit 1 at γ → 0.
fn gamma_over_sin(gamma: f64) -> f64 {
    if gamma.abs() < 1e-8 {
        1.0
    } else {
        gamma / gamma.sin()
    }
}

pub fn sound_velocity(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(2.0 * PI / gamma_over_sin(gamma))
}

/// Low-temperature expansion of ln Λ(x) including the universal O(1/β) term:
/// −βe₀(x) + iφ + (2 cosh(πx/γ)/β)(γ/sin γ)[1/24 + ((−βJ − iφ)/π)²/(4(1−γ/π))].
pub fn low_t_ln_lambda(x: f64, beta: f64, j_coupling: f64, phi: f64, gamma: f64) -> Result<Complex64> {
    check_gamma(gamma)?;
    if !(beta > 0.0) {
        return Err(IronfaceError::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let e0 = ground_energy_density(x, &Regime::critical(gamma)?)?;
    let q = Complex64::new(-beta * j_coupling, -phi) / PI;
    let bracket = Complex64::new(1.0 / 24.0, 0.0) + q * q / (4.0 * (1.0 - gamma / PI));
    let prefactor = 2.0 * (PI * x / gamma).cosh() / beta * gamma_over_sin(gamma);
    Ok(Complex64::new(-beta * e0, phi) + bracket * prefactor)
}

/// T → 0 limit of β/ξ at J = 0: (γ/sin γ) / (8(1 − γ/π)).
pub fn xi_inverse_limit(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(gamma_over_sin(gamma) / (8.0 * (1.0 - gamma / PI)))
}

/// Low-temperature oscillation wave vector π/2 + J(γ/sin γ)/(2(π − γ)).
pub fn kappa_low_t(gamma: f64, j_coupling: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(PI / 2.0 + j_coupling * gamma_over_sin(gamma) / (2.0 * (PI - gamma)))
}

/// Conformal weights h± = [M(1−γ/π) ± (E + φ/π)]² / (4(1−γ/π)).
///
/// Only even M occurs for even system sizes; odd M is rejected with
/// [`IronfaceError::OddMagneticSector`] (use [`exponent_h_any`] to evaluate it
/// anyway).
pub fn exponent_h(m: i64, e: i64, phi: f64, gamma: f64) -> Result<(f64, f64)> {
    if m % 2 != 0 {
        return Err(IronfaceError::OddMagneticSector(m));
    }
    exponent_h_any(m, e, phi, gamma)
}

/// [`exponent_h`] without the parity check on M.
pub fn exponent_h_any(m: i64, e: i64, phi: f64, gamma: f64) -> Result<(f64, f64)> {
    check_gamma(gamma)?;
    let r = 1.0 - gamma / PI;
    let a = m as f64 * r;
    let b = e as f64 + phi / PI;
    Ok(((a + b).powi(2) / (4.0 * r), (a - b).powi(2) / (4.0 * r)))
}

/// Comparison values for the periodic XXZ chain: κ = π and
/// β/ξ = (γ/sin γ)/(2(1 − γ/π)).
pub fn xxz_reference(gamma: f64) -> Result<(f64, f64)> {
    check_gamma(gamma)?;
    Ok((PI, gamma_over_sin(gamma) / (2.0 * (1.0 - gamma / PI))))
}

/// Free energy per site of the XX chain (Δ = 0, J = 0) from its free-fermion
/// solution: f = −(T/2π) ∫ ln(1 + e^{−4cos(k)/T}) dk over one Brillouin zone.
pub fn xx_free_energy(temperature: f64) -> Result<f64> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(IronfaceError::InvalidParameter(format!("temperature must be positive, got {temperature}")));
    }
    let beta = 1.0 / temperature;
    let softplus = |y: f64| if y > 0.0 { y + (-y).exp().ln_1p() } else { y.exp().ln_1p() };
    let f = |k: f64| softplus(-4.0 * beta * k.cos());
    // the integrand is even; split at the Fermi point where it bends sharply
    let mut total = 0.0;
    for (a, b) in [(0.0, PI / 2.0), (PI / 2.0, PI)] {
        let out = quadrature::double_exponential::integrate(f, a, b, 1e-14);
        if !out.integral.is_finite() {
            return Err(IronfaceError::QuadratureFailure("free-fermion integral".into()));
        }
        total += out.integral;
    }
    Ok(-temperature * total / PI)
}
