//! Analytic eigenvalues of the quantum transfer matrix in terms of Bethe
//! roots, the Bethe equations, and a small Newton solver for the roots.
//!
//! Conventions match [`crate::operators::build_qtm`]: `beta` is the lattice
//! inverse temperature, λ = −β/N, and `j_coupling` is the coefficient of the
//! seam, which realizes +J Σᶻ in the chain. With 𝔟(z) = s(z)/s(z+γ),
//!
//! λ₁(x) = e^{βJ+2iφ} 𝔟(λ−ix)^{N/2} ∏ⱼ 1/𝔟(i(xⱼ−x)),
//! λ₂(x) = e^{−βJ}    𝔟(λ+ix)^{N/2} ∏ⱼ 1/𝔟(i(x−xⱼ)).
//!
//! The face quantum transfer matrix only contains sectors whose root count n
//! has the parity of N/2; twist φ = 0 and φ = π/2 together exhaust it.

use crate::error::{IronfaceError, Result};
use crate::weights::{Regime, RegimeKind};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A set of Bethe roots with the data needed to evaluate Λ(x).
#[derive(Debug, Clone, PartialEq)]
pub struct BetheState {
    pub roots: Vec<Complex64>,
    pub trotter: usize,
    pub beta: f64,
    pub j_coupling: f64,
    pub phi: f64,
}

impl BetheState {
    pub fn new(roots: Vec<Complex64>, trotter: usize, beta: f64, j_coupling: f64, phi: f64) -> Result<Self> {
        if trotter < 2 || trotter % 2 != 0 {
            return Err(IronfaceError::InvalidParameter(format!("Trotter number must be even, got {trotter}")));
        }
        Ok(Self { roots, trotter, beta, j_coupling, phi })
    }

    pub fn n(&self) -> usize {
        self.roots.len()
    }

    fn lam(&self) -> f64 {
        -self.beta / self.trotter as f64
    }
}

/// The two terms of Λ(x) = λ₁(x) + λ₂(x) at a point away from the roots.
pub fn lambda_parts(x: Complex64, state: &BetheState, regime: &Regime) -> Result<(Complex64, Complex64)> {
    let lam = Complex64::new(state.lam(), 0.0);
    let half = (state.trotter / 2) as i32;
    let bj = state.beta * state.j_coupling;
    let mut l1 = Complex64::from_polar((bj).exp(), 2.0 * state.phi) * regime.b_fn(lam - I * x)?.powi(half);
    let mut l2 = Complex64::new((-bj).exp(), 0.0) * regime.b_fn(lam + I * x)?.powi(half);
    for r in &state.roots {
        l1 /= regime.b_fn(I * (r - x))?;
        l2 /= regime.b_fn(I * (x - r))?;
    }
    Ok((l1, l2))
}

/// Λ(x). Where x sits on a root the two terms have cancelling poles; the
/// value there is obtained from symmetric averages with one Richardson step.
pub fn eigenvalue(x: Complex64, state: &BetheState, regime: &Regime) -> Result<Complex64> {
    let near_root = state.roots.iter().any(|r| (r - x).norm() < 1e-7);
    let plain = |z: Complex64| lambda_parts(z, state, regime).map(|(a, b)| a + b);
    if !near_root {
        return plain(x);
    }
    let avg = |h: f64| -> Result<Complex64> { Ok(0.5 * (plain(x + h)? + plain(x - h)?)) };
    let h = 1e-3;
    Ok((4.0 * avg(h / 2.0)? - avg(h)?) / 3.0)
}

/// Pⱼ = λ₁/λ₂ evaluated at the root xⱼ, with the self-factor taken as its
/// limit −1. The Bethe equations read Pⱼ = −1.
pub fn bethe_ratio(state: &BetheState, regime: &Regime, j: usize) -> Result<Complex64> {
    let lam = Complex64::new(state.lam(), 0.0);
    let xj = state.roots[j];
    let half = (state.trotter / 2) as i32;
    let bj = state.beta * state.j_coupling;
    let mut p = -Complex64::from_polar((2.0 * bj).exp(), 2.0 * state.phi);
    let den = regime.b_fn(lam + I * xj)?;
    if den.norm() < 1e-300 {
        return Err(IronfaceError::DivisionByZeroAtRoot(j));
    }
    p *= (regime.b_fn(lam - I * xj)? / den).powi(half);
    for (k, xk) in state.roots.iter().enumerate() {
        if k != j {
            let d = regime.b_fn(I * (xk - xj))?;
            if d.norm() < 1e-300 {
                return Err(IronfaceError::DivisionByZeroAtRoot(j));
            }
            p *= regime.b_fn(I * (xj - xk))? / d;
        }
    }
    Ok(p)
}

/// max_j |λ₁(xⱼ)/λ₂(xⱼ) + 1|; zero for an empty root set.
pub fn bethe_residual(state: &BetheState, regime: &Regime) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for j in 0..state.n() {
        worst = worst.max((bethe_ratio(state, regime, j)? + 1.0).norm());
    }
    Ok(worst)
}

fn log_equations(state: &BetheState, regime: &Regime) -> Result<DVector<Complex64>> {
    let mut g = DVector::<Complex64>::zeros(state.n());
    for j in 0..state.n() {
        // ln(−Pⱼ) vanishes on a solution; near it the principal branch is safe.
        g[j] = (-bethe_ratio(state, regime, j)?).ln();
    }
    Ok(g)
}

/// Damped Newton iteration on ln(−Pⱼ) = 0 with a finite-difference Jacobian
/// (the equations are holomorphic in the roots).
pub fn solve_bethe_newton(
    trotter: usize,
    beta: f64,
    j_coupling: f64,
    phi: f64,
    regime: &Regime,
    seed: &[Complex64],
    max_iter: usize,
) -> Result<BetheState> {
    let mut state = BetheState::new(seed.to_vec(), trotter, beta, j_coupling, phi)?;
    let n = state.n();
    if n == 0 {
        return Ok(state);
    }
    let mut g = log_equations(&state, regime)?;
    for it in 0..max_iter {
        let norm = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if norm < 1e-13 && bethe_residual(&state, regime)? < 1e-12 {
            return Ok(state);
        }
        let h = 1e-7;
        let mut jac = DMatrix::<Complex64>::zeros(n, n);
        for k in 0..n {
            let mut shifted = state.clone();
            shifted.roots[k] += h;
            let gk = log_equations(&shifted, regime)?;
            let mut back = state.clone();
            back.roots[k] -= h;
            let gb = log_equations(&back, regime)?;
            for j in 0..n {
                jac[(j, k)] = (gk[j] - gb[j]) / (2.0 * h);
            }
        }
        let step = jac
            .lu()
            .solve(&(-&g))
            .ok_or(IronfaceError::ConvergenceFailure { iterations: it, residual: norm })?;
        let mut t = 1.0;
        loop {
            let mut trial = state.clone();
            for k in 0..n {
                trial.roots[k] += step[k] * t;
            }
            if let Ok(gt) = log_equations(&trial, regime) {
                let nt = gt.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if nt.is_finite() && (nt < norm || t < 1e-3) {
                    state = trial;
                    g = gt;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-4 {
                return Err(IronfaceError::ConvergenceFailure { iterations: it, residual: norm });
            }
        }
    }
    let residual = bethe_residual(&state, regime)?;
    if residual < 1e-12 {
        Ok(state)
    } else {
        Err(IronfaceError::ConvergenceFailure { iterations: max_iter, residual })
    }
}

/// Candidate roots at the free-fermion point γ = π/2, where the equations
/// decouple: each root solves w^{N/2} = (−1)^{n−1} e^{−2iφ − 2βJ} with
/// w = tan(λ−ix)/tan(λ+ix), i.e. sinh 2x = i sin 2λ (w−1)/(w+1). Both roots
/// of sinh in the strip are returned, 2·(N/2) = N candidates.
pub fn free_fermion_candidates(trotter: usize, n: usize, beta: f64, j_coupling: f64, phi: f64) -> Vec<Complex64> {
    let lam = -beta / trotter as f64;
    let half = trotter / 2;
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    let rhs = Complex64::from_polar(sign * (-2.0 * beta * j_coupling).exp(), -2.0 * phi);
    let mut out = Vec::with_capacity(trotter);
    for m in 0..half {
        let w = rhs.powf(1.0 / half as f64) * Complex64::from_polar(1.0, 2.0 * PI * m as f64 / half as f64);
        let y = I * (2.0 * lam).sin() * (w - 1.0) / (w + 1.0);
        let x = 0.5 * y.asinh();
        out.push(x);
        out.push(I * PI / 2.0 - x);
    }
    out
}

/// Free-fermion seeds for n roots: the first `n` candidates chosen by index.
pub fn free_fermion_seed(trotter: usize, pick: &[usize], beta: f64, j_coupling: f64, phi: f64) -> Vec<Complex64> {
    let c = free_fermion_candidates(trotter, pick.len(), beta, j_coupling, phi);
    pick.iter().map(|&k| c[k]).collect()
}

/// Homotopy continuation in Δ starting from a converged state at `regime_from`.
/// Steps are taken in Δ with the previous roots as seeds; every intermediate
/// state is returned.
pub fn continue_in_delta(state: &BetheState, deltas: &[f64]) -> Result<Vec<(f64, BetheState)>> {
    let mut out = Vec::with_capacity(deltas.len());
    let mut current = state.clone();
    for &d in deltas {
        let regime = Regime::from_delta(d)?;
        if regime.kind != RegimeKind::Critical {
            return Err(IronfaceError::InvalidParameter("continuation stays in the critical regime".into()));
        }
        current = solve_bethe_newton(
            current.trotter,
            current.beta,
            current.j_coupling,
            current.phi,
            &regime,
            &current.roots,
            200,
        )?;
        out.push((d, current.clone()));
    }
    Ok(out)
}

/// One comparison between a Bethe eigenvalue and the dense spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct BetheCheckPoint {
    pub trotter: usize,
    pub roots: usize,
    pub delta: f64,
    pub eigenvalue: Complex64,
    /// Distance to the nearest eigenvalue of the dense quantum transfer matrix.
    pub distance: f64,
}

/// Seeds (Trotter number, candidate indices) used by [`bethe_cross_check`]:
/// the leading state at N = 2 and the n = 0 and leading n = 2 states at N = 4.
pub const CROSS_CHECK_STATES: [(usize, &[usize]); 3] = [(2, &[0]), (4, &[]), (4, &[0, 2])];

/// Solves the Bethe equations from free-fermion seeds (J = 0, φ = 0), follows
/// each state in Δ from 0 to `target_delta` in `steps` steps, and compares
/// Λ(0) with the dense quantum transfer matrix at every step.
pub fn bethe_cross_check(beta: f64, target_delta: f64, steps: usize) -> Result<Vec<BetheCheckPoint>> {
    let steps = steps.max(1);
    let deltas: Vec<f64> = (0..=steps).map(|k| target_delta * k as f64 / steps as f64).collect();
    let mut out = Vec::new();
    for (trotter, pick) in CROSS_CHECK_STATES {
        let seed = free_fermion_seed(trotter, pick, beta, 0.0, 0.0);
        let free = Regime::from_delta(0.0)?;
        let start = solve_bethe_newton(trotter, beta, 0.0, 0.0, &free, &seed, 200)?;
        let path = std::iter::once((0.0, start.clone())).chain(continue_in_delta(&start, &deltas[1..])?);
        for (d, state) in path {
            let regime = Regime::from_delta(d)?;
            let lam = eigenvalue(Complex64::new(0.0, 0.0), &state, &regime)?;
            let q = crate::operators::build_qtm(0.0, trotter, beta, &regime, 0.0)?;
            let spectrum = crate::spectra::general_eigenvalues(&q.matrix)?;
            let distance = spectrum.iter().map(|e| (e - lam).norm()).fold(f64::INFINITY, f64::min);
            out.push(BetheCheckPoint { trotter, roots: pick.len(), delta: d, eigenvalue: lam, distance });
        }
    }
    Ok(out)
}
