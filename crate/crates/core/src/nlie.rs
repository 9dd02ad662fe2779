//! Non-linear integral equations for the auxiliary functions b, b̄ of the
//! quantum transfer matrix, and the thermodynamic and correlation quantities
//! derived from them.
//!
//! Convolutions follow (f ∗ g)(x) = (1/2π)∫ f(x−y) g(y) dy over the line
//! (critical regime) or over the period [−π/2, π/2) (massive regime). In
//! Fourier space every kernel becomes a multiplier, so convolutions are
//! evaluated with FFTs; on the line the data are zero padded and the constant
//! tail value is handled analytically.
//!
//! `beta` here is the physical inverse temperature of the chain
//! H_IRF + J Σᶻ. The Ising coupling enters the driving terms through
//! d±(∞) = ±c (−βJ − iφ), c = π/(π−γ) (critical) or 1 (massive).

use crate::error::{IronfaceError, Result};
use crate::weights::{Regime, RegimeKind};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Solver and discretization settings.
#[derive(Debug, Clone, PartialEq)]
pub struct NlieConfig {
    /// Distance of the shifted-kernel contour from the pole line. Zero uses the
    /// boundary value, which is exact in Fourier space.
    pub epsilon: f64,
    /// Convergence threshold on the relative max-norm residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial under-relaxation factor (halved automatically on divergence).
    pub mixing: f64,
    /// Grid points on the truncated line (critical regime).
    pub points: usize,
    pub x_max: f64,
    /// Grid points on the circle (massive regime).
    pub circle_points: usize,
    /// Fourier truncation of the massive series; 0 picks it from e^{−γk} < 1e−17.
    pub k_max: usize,
    /// History length of Anderson acceleration; 0 disables it.
    pub anderson_depth: usize,
}

impl Default for NlieConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            tol: 1e-11,
            max_iter: 20_000,
            mixing: 0.5,
            points: 4096,
            x_max: 20.0,
            circle_points: 1024,
            k_max: 0,
            anderson_depth: 10,
        }
    }
}

impl NlieConfig {
    fn validate(&self, regime: &Regime) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon < regime.gamma) {
            return Err(IronfaceError::InvalidParameter(format!("epsilon must lie in [0, gamma), got {}", self.epsilon)));
        }
        if !(self.tol >= 1e-14) {
            return Err(IronfaceError::InvalidParameter(format!("tol must be >= 1e-14, got {}", self.tol)));
        }
        if !(self.mixing > 0.0 && self.mixing <= 1.0) {
            return Err(IronfaceError::InvalidParameter(format!("mixing must lie in (0, 1], got {}", self.mixing)));
        }
        let pts = match regime.kind {
            RegimeKind::Critical => self.points,
            RegimeKind::Massive => self.circle_points,
        };
        if pts < 16 || !pts.is_power_of_two() {
            return Err(IronfaceError::InvalidParameter(format!("grid points must be a power of two >= 16, got {pts}")));
        }
        if regime.kind == RegimeKind::Critical && !(self.x_max > 0.0) {
            return Err(IronfaceError::InvalidParameter("x_max must be positive".into()));
        }
        Ok(())
    }

    fn series_cutoff(&self, gamma: f64) -> usize {
        if self.k_max > 0 {
            self.k_max
        } else {
            (39.2 / gamma).ceil() as usize + 1
        }
    }
}

/// Domain of the auxiliary functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridDomain {
    TruncatedLine { x_max: f64 },
    /// [−π/2, π/2) with periodic identification.
    Circle,
}

/// Uniform sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub domain: GridDomain,
    pub points: usize,
    pub spacing: f64,
    pub nodes: Vec<f64>,
}

impl Grid {
    pub fn new(regime: &Regime, config: &NlieConfig) -> Self {
        match regime.kind {
            RegimeKind::Critical => {
                let n = config.points;
                let dx = 2.0 * config.x_max / n as f64;
                let nodes = (0..n).map(|j| -config.x_max + j as f64 * dx).collect();
                Self { domain: GridDomain::TruncatedLine { x_max: config.x_max }, points: n, spacing: dx, nodes }
            }
            RegimeKind::Massive => {
                let n = config.circle_points;
                let dx = PI / n as f64;
                let nodes = (0..n).map(|j| -PI / 2.0 + j as f64 * dx).collect();
                Self { domain: GridDomain::Circle, points: n, spacing: dx, nodes }
            }
        }
    }

    /// Index of x = 0.
    pub fn center(&self) -> usize {
        self.points / 2
    }
}

fn fftfreq(m: usize) -> Vec<f64> {
    (0..m).map(|j| if j < m.div_ceil(2) { j as f64 } else { j as f64 - m as f64 }).collect()
}

/// Fourier multiplier of F on the real line:
/// F̂(k) = sinh((π−2γ)k/2) / (2 sinh((π−γ)k/2) cosh(γk/2)), written with
/// decaying exponentials only. `shift` multiplies by e^{−k·shift}, i.e. moves
/// the argument to x + i·shift.
fn critical_f_multiplier(k: f64, gamma: f64, shift: f64) -> f64 {
    let a = k.abs();
    let q = PI - 2.0 * gamma;
    if a < 1e-12 {
        return q / (2.0 * (PI - gamma));
    }
    let core = q.signum() * (-(-a * q.abs()).exp_m1()) / ((-(-a * (PI - gamma)).exp_m1()) * (1.0 + (-a * gamma).exp()));
    if core == 0.0 {
        return 0.0;
    }
    core * ((q.abs() - PI) * a / 2.0 - k * shift).exp()
}

fn sech_ratio(k: f64, gamma: f64) -> f64 {
    // 1/cosh(γk) without overflow
    let a = (gamma * k).abs();
    2.0 * (-a).exp() / (1.0 + (-2.0 * a).exp())
}

/// Precomputed multipliers and FFT plans for one regime and grid.
struct Kernels {
    regime: Regime,
    n: usize,
    m: usize,
    f: Vec<f64>,
    f_plus: Vec<f64>,
    f_minus: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Kernels {
    fn new(regime: &Regime, grid: &Grid, epsilon: f64) -> Self {
        let n = grid.points;
        let g = regime.gamma;
        let gs = g - epsilon;
        let (m, f, f_plus, f_minus): (usize, Vec<f64>, Vec<f64>, Vec<f64>) = match regime.kind {
            RegimeKind::Critical => {
                let m = 2 * n;
                let freqs: Vec<f64> = fftfreq(m).into_iter().map(|j| 2.0 * PI * j / (m as f64 * grid.spacing)).collect();
                (
                    m,
                    freqs.iter().map(|&k| critical_f_multiplier(k, g, 0.0)).collect(),
                    freqs.iter().map(|&k| critical_f_multiplier(k, g, gs)).collect(),
                    freqs.iter().map(|&k| critical_f_multiplier(k, g, -gs)).collect(),
                )
            }
            RegimeKind::Massive => {
                let modes = fftfreq(n);
                // ½ e^{−γ|k| − 2ks}/cosh γk as one exponential, which stays
                // finite at high modes
                let mult = |k: f64, s: f64| (-2.0 * g * k.abs() - 2.0 * k * s).exp() / (1.0 + (-2.0 * g * k.abs()).exp());
                (
                    n,
                    modes.iter().map(|&k| mult(k, 0.0)).collect(),
                    modes.iter().map(|&k| mult(k, gs)).collect(),
                    modes.iter().map(|&k| mult(k, -gs)).collect(),
                )
            }
        };
        let mut planner = FftPlanner::new();
        Self {
            regime: *regime,
            n,
            m,
            f,
            f_plus,
            f_minus,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    fn padded(&self) -> bool {
        self.regime.kind == RegimeKind::Critical
    }

    /// Transform of a grid function. On the line the mean of the two end values
    /// is removed first and returned separately.
    fn transform(&self, f: &[Complex64]) -> (Vec<Complex64>, Complex64) {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m];
        let c = if self.padded() { 0.5 * (f[0] + f[self.n - 1]) } else { Complex64::new(0.0, 0.0) };
        for (dst, src) in buf.iter_mut().zip(f) {
            *dst = src - c;
        }
        self.forward.process(&mut buf);
        (buf, c)
    }

    /// Σ mᵢ ∗ fᵢ for transformed inputs.
    fn combine(&self, terms: &[(&[f64], &(Vec<Complex64>, Complex64), f64)]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m];
        let mut constant = Complex64::new(0.0, 0.0);
        for (mult, (hat, c), sign) in terms {
            for ((dst, h), w) in buf.iter_mut().zip(hat.iter()).zip(mult.iter()) {
                *dst += h * (w * sign);
            }
            constant += c * (mult[0] * sign);
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.m as f64;
        buf.truncate(self.n);
        for z in buf.iter_mut() {
            *z = *z * scale + constant;
        }
        buf
    }
}

/// ln(1 + e^y) for complex y, accurate when |e^y| is tiny or huge. The branch
/// is fixed later by [`unwrap_from_center`].
pub fn log1p_exp(y: Complex64) -> Complex64 {
    fn ln1p(z: Complex64) -> Complex64 {
        let re = 0.5 * (2.0 * z.re + z.norm_sqr()).ln_1p();
        Complex64::new(re, z.im.atan2(1.0 + z.re))
    }
    if y.re > 0.0 {
        return y + log1p_exp(-y);
    }
    // reduce to (−π, π]
    let b = PI - (PI - y.im).rem_euclid(2.0 * PI);
    if b.abs() > PI / 2.0 {
        // e^y is close to the negative real axis: 1 + e^y = −expm1(y − iπ)
        let w = b - PI * b.signum();
        let em = y.re.exp_m1();
        let v = Complex64::new(2.0 * (w / 2.0).sin().powi(2) - em * w.cos(), (em + 1.0) * b.sin());
        Complex64::new(v.norm().ln(), v.im.atan2(v.re))
    } else {
        ln1p(Complex64::from_polar(y.re.exp(), b))
    }
}

/// Removes 2πi jumps in the imaginary part, walking outwards from the middle
/// sample so that the value at x = 0 keeps its principal branch.
pub fn unwrap_from_center(v: &mut [Complex64]) {
    let n = v.len();
    let c = n / 2;
    let tau = 2.0 * PI;
    for i in c + 1..n {
        let d = v[i].im - v[i - 1].im;
        v[i].im -= tau * (d / tau).round();
    }
    for i in (0..c).rev() {
        let d = v[i].im - v[i + 1].im;
        v[i].im -= tau * (d / tau).round();
    }
}

/// ln B and ln B̄ with continuous imaginary parts.
fn big_logs(lb: &[Complex64]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = lb.iter().map(|&y| log1p_exp(y)).collect();
    unwrap_from_center(&mut out);
    out
}

/// Converged auxiliary functions.
#[derive(Debug, Clone)]
pub struct NlieSolution {
    pub grid: Grid,
    pub ln_b: Vec<Complex64>,
    pub ln_bbar: Vec<Complex64>,
    pub beta: f64,
    pub j_coupling: f64,
    pub phi: f64,
    pub regime: Regime,
    pub iterations: usize,
    pub residual: f64,
    /// Set when the solution was obtained by interpolation in βJ between
    /// solutions at nonzero coupling (see [`solve`]); holds (βJ, solution).
    pub anchors: Vec<(f64, NlieSolution)>,
}

/// The constant multiplying (−βJ − iφ) in the driving terms.
fn asymptotic_factor(regime: &Regime) -> f64 {
    match regime.kind {
        RegimeKind::Critical => PI / (PI - regime.gamma),
        RegimeKind::Massive => 1.0,
    }
}

/// The phase c·φ carried by the driving terms. When it is an odd multiple of
/// π (γ = π/2 with φ = π/2) the values 1 + b lie on the branch cut of the
/// logarithm; the phase is then moved by a relative 1e−12 so that the cut is
/// approached from φ < π/2, which is the side continuous in γ.
fn cut_safe_phase(phi: f64, regime: &Regime) -> f64 {
    let t = asymptotic_factor(regime) * phi;
    let r = (t / PI).round();
    if r as i64 % 2 != 0 && (t / PI - r).abs() < 1e-9 {
        r * PI * (1.0 - 1e-12)
    } else {
        t
    }
}

/// Driving terms (d₊, d₋) at a point.
pub fn driving(x: f64, beta: f64, j_coupling: f64, phi: f64, regime: &Regime) -> (Complex64, Complex64) {
    let base = -2.0 * beta * regime.trig(Complex64::new(regime.gamma, 0.0)).re * kernel_k_real(x, regime, 0);
    let shift = Complex64::new(-beta * j_coupling * asymptotic_factor(regime), -cut_safe_phase(phi, regime));
    (Complex64::new(base, 0.0) + shift, Complex64::new(base, 0.0) - shift)
}

fn kernel_k_real(x: f64, regime: &Regime, k_max: usize) -> f64 {
    let g = regime.gamma;
    match regime.kind {
        RegimeKind::Critical => (PI / g) * sech(PI * x / g),
        RegimeKind::Massive => {
            let kk = if k_max > 0 { k_max } else { (39.2 / g).ceil() as usize + 1 };
            1.0 + 2.0 * (1..=kk).map(|k| (2.0 * k as f64 * x).cos() * sech_ratio(k as f64, g)).sum::<f64>()
        }
    }
}

fn sech(x: f64) -> f64 {
    let a = x.abs();
    2.0 * (-a).exp() / (1.0 + (-2.0 * a).exp())
}

/// Which kernel to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    K,
    F,
}

/// Kernel functions in the (1/2π) convolution convention.
///
/// Critical: K(x) = (π/γ)/cosh(πx/γ) and F(x) = ∫ e^{ikx} F̂(k) dk by
/// quadrature. Massive: K(x) = Σ e^{2ikx}/cosh γk and
/// F(x) = Σ e^{−γ|k|} e^{2ikx}/cosh γk. F is analytic for |Im x| < γ.
pub fn kernel(kind: KernelKind, x: Complex64, regime: &Regime, epsilon: f64) -> Result<Complex64> {
    let g = regime.gamma;
    match (kind, regime.kind) {
        (KernelKind::K, RegimeKind::Critical) => {
            let z = PI * x / g;
            Ok((PI / g) / z.cosh())
        }
        (KernelKind::K, RegimeKind::Massive) => Ok(massive_series(x, g, |k| sech_ratio(k, g))),
        (KernelKind::F, _) => {
            if x.im.abs() >= g - epsilon {
                return Err(IronfaceError::OutOfStrip(format!("{x}")));
            }
            match regime.kind {
                RegimeKind::Massive => Ok(massive_series(x, g, |k| (-g * k.abs()).exp() * sech_ratio(k, g))),
                RegimeKind::Critical => critical_f_value(x, g),
            }
        }
    }
}

fn massive_series(x: Complex64, g: f64, coef: impl Fn(f64) -> f64) -> Complex64 {
    let kk = ((39.2 + 2.0 * x.im.abs() * 20.0) / g).ceil() as i64 + 1;
    (-kk..=kk)
        .map(|k| (Complex64::new(0.0, 2.0 * k as f64) * x).exp() * coef(k as f64))
        .sum()
}

fn critical_f_value(x: Complex64, g: f64) -> Result<Complex64> {
    if (PI - 2.0 * g).abs() < 1e-15 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    // F(z) = 2∫₀^∞ cos(kz) F̂(k) dk with z = x + iy; cos(kz)e^{−|F̂ decay|}
    // is assembled from decaying exponentials.
    let y = x.im;
    let decay = (PI - (PI - 2.0 * g).abs()) / 2.0;
    if y.abs() >= decay {
        return Err(IronfaceError::OutOfStrip(format!("{x}")));
    }
    let k_end = 40.0 / (decay - y.abs());
    let re = integrate_segments(|k| 2.0 * (k * x.re).cos() * (k * y).cosh() * critical_f_multiplier(k, g, 0.0), k_end, x.re)?;
    let im = integrate_segments(|k| -2.0 * (k * x.re).sin() * (k * y).sinh() * critical_f_multiplier(k, g, 0.0), k_end, x.re)?;
    Ok(Complex64::new(re, im))
}

/// ∫₀^{end} f, split into pieces no longer than one oscillation period of
/// cos(kx).
fn integrate_segments(f: impl Fn(f64) -> f64, end: f64, x: f64) -> Result<f64> {
    let width = if x.abs() > 1e-12 { (2.0 * PI / x.abs()).min(end) } else { end };
    let pieces = ((end / width).ceil() as usize).clamp(1, 20_000);
    let h = end / pieces as f64;
    let mut total = 0.0;
    for p in 0..pieces {
        let out = quadrature::double_exponential::integrate(&f, p as f64 * h, (p + 1) as f64 * h, 1e-14);
        if !out.integral.is_finite() {
            return Err(IronfaceError::QuadratureFailure(format!("non-finite value on piece {p}")));
        }
        total += out.integral;
    }
    Ok(total)
}

/// Ground-state energy function e₀(x); e₀(0) is the energy per site of the
/// chain at zero temperature.
pub fn ground_energy_density(x: f64, regime: &Regime) -> Result<f64> {
    let g = regime.gamma;
    match regime.kind {
        RegimeKind::Critical => {
            let integrand = |k: f64| {
                if k < 1e-12 {
                    return (2.0 * (k * x).cos()) * (PI - g) / (2.0 * PI);
                }
                2.0 * (k * x).cos() * (-k * g).exp() * (-(-k * (PI - g)).exp_m1()) / ((-(-k * PI).exp_m1()) * (1.0 + (-k * g).exp()))
            };
            let end = 40.0 / g.min(PI - g).max(1e-3);
            Ok(-2.0 * g.sin() * integrate_segments(integrand, end, x)?)
        }
        RegimeKind::Massive => {
            let kk = (39.2 / g).ceil() as i64 + 1;
            let s: f64 = (-kk..=kk)
                .map(|k| (2.0 * k as f64 * x).cos() * (-g * (k as f64).abs()).exp() * sech_ratio(k as f64, g))
                .sum();
            Ok(-2.0 * g.sinh() * s)
        }
    }
}

/// Complete discretized problem at fixed parameters.
struct Problem {
    kernels: Kernels,
    d_plus: Vec<Complex64>,
    d_minus: Vec<Complex64>,
}

impl Problem {
    fn new(beta: f64, j: f64, phi: f64, regime: &Regime, grid: &Grid, config: &NlieConfig) -> Result<Self> {
        let kernels = Kernels::new(regime, grid, config.epsilon);
        let k_max = config.series_cutoff(regime.gamma);
        let shift = Complex64::new(-beta * j * asymptotic_factor(regime), -cut_safe_phase(phi, regime));
        let s_gamma = regime.trig(Complex64::new(regime.gamma, 0.0)).re;
        let base: Vec<f64> = grid.nodes.iter().map(|&x| -2.0 * beta * s_gamma * kernel_k_real(x, regime, k_max)).collect();
        if regime.kind == RegimeKind::Critical {
            let edge = base[0].abs().max(base[grid.points - 1].abs());
            if edge > 1e-14 * base[grid.center()].abs().max(1.0) {
                return Err(IronfaceError::GridTooCoarse(edge));
            }
        }
        Ok(Self {
            kernels,
            d_plus: base.iter().map(|&b| Complex64::new(b, 0.0) + shift).collect(),
            d_minus: base.iter().map(|&b| Complex64::new(b, 0.0) - shift).collect(),
        })
    }

    /// One application of the integral operator.
    fn map(&self, lb: &[Complex64], lbb: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let big = self.kernels.transform(&big_logs(lb));
        let big_bar = self.kernels.transform(&big_logs(lbb));
        let k = &self.kernels;
        let mut nb = k.combine(&[(&k.f, &big, 1.0), (&k.f_plus, &big_bar, -1.0)]);
        let mut nbb = k.combine(&[(&k.f_minus, &big, -1.0), (&k.f, &big_bar, 1.0)]);
        for (v, d) in nb.iter_mut().zip(&self.d_plus) {
            *v += d;
        }
        for (v, d) in nbb.iter_mut().zip(&self.d_minus) {
            *v += d;
        }
        (nb, nbb)
    }

    fn pack(lb: &[Complex64], lbb: &[Complex64]) -> DVector<f64> {
        let n = lb.len();
        let mut v = DVector::<f64>::zeros(4 * n);
        for i in 0..n {
            v[i] = lb[i].re;
            v[n + i] = lb[i].im;
            v[2 * n + i] = lbb[i].re;
            v[3 * n + i] = lbb[i].im;
        }
        v
    }

    fn unpack(v: &DVector<f64>) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = v.len() / 4;
        let lb = (0..n).map(|i| Complex64::new(v[i], v[n + i])).collect();
        let lbb = (0..n).map(|i| Complex64::new(v[2 * n + i], v[3 * n + i])).collect();
        (lb, lbb)
    }

    fn residual_of(&self, v: &DVector<f64>) -> (DVector<f64>, f64) {
        let (lb, lbb) = Self::unpack(v);
        let (nb, nbb) = self.map(&lb, &lbb);
        let g = Self::pack(&nb, &nbb);
        let r = &g - v;
        let scale = v.amax().max(1.0);
        let res = r.amax() / scale;
        (r, res)
    }
}

struct IterOutcome {
    v: DVector<f64>,
    iterations: usize,
    residual: f64,
    converged: bool,
}

/// Anderson-accelerated fixed-point iteration with restarts. With depth 0
/// it reduces to damped Picard iteration.
fn anderson(problem: &Problem, v0: DVector<f64>, config: &NlieConfig, depth: usize) -> IterOutcome {
    let mut v = v0;
    let mut mix = config.mixing;
    let (mut r, mut res) = problem.residual_of(&v);
    let mut best = (v.clone(), res);
    let mut dv: Vec<DVector<f64>> = Vec::new();
    let mut dr: Vec<DVector<f64>> = Vec::new();
    let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut stalls = 0usize;
    for it in 0..config.max_iter {
        if !res.is_finite() {
            return IterOutcome { v: best.0, iterations: it, residual: best.1, converged: false };
        }
        if res < config.tol {
            return IterOutcome { v, iterations: it + 1, residual: res, converged: true };
        }
        if let Some((pv, pr)) = prev.take() {
            dv.push(&v - pv);
            dr.push(&r - pr);
            if dv.len() > depth {
                dv.remove(0);
                dr.remove(0);
            }
        }
        let mut step = &r * mix;
        if depth > 0 && !dr.is_empty() {
            let m = dr.len();
            let mut gram = DMatrix::<f64>::zeros(m, m);
            let mut rhs = DVector::<f64>::zeros(m);
            for a in 0..m {
                rhs[a] = dr[a].dot(&r);
                for b in a..m {
                    let x = dr[a].dot(&dr[b]);
                    gram[(a, b)] = x;
                    gram[(b, a)] = x;
                }
            }
            let reg = 1e-12 * gram.trace().max(1e-300);
            for a in 0..m {
                gram[(a, a)] += reg;
            }
            if let Some(coef) = gram.cholesky().map(|c| c.solve(&rhs)) {
                for a in 0..m {
                    step -= (&dv[a] + &dr[a] * mix) * coef[a];
                }
            }
        }
        prev = Some((v.clone(), r.clone()));
        v += step;
        let (nr, nres) = problem.residual_of(&v);
        if !nres.is_finite() || nres > 10.0 * best.1.max(res) {
            // diverging: restart from the best iterate with a smaller step
            v = best.0.clone();
            let (rr, rs) = problem.residual_of(&v);
            r = rr;
            res = rs;
            mix = (mix * 0.5).max(1e-3);
            dv.clear();
            dr.clear();
            prev = None;
            continue;
        }
        if nres < best.1 {
            best = (v.clone(), nres);
            stalls = 0;
        } else {
            stalls += 1;
            if stalls > 50 {
                dv.clear();
                dr.clear();
                prev = None;
                mix = (mix * 0.5).max(1e-3);
                stalls = 0;
            }
        }
        r = nr;
        res = nres;
    }
    let converged = best.1 < config.tol;
    IterOutcome { v: best.0, iterations: config.max_iter, residual: best.1, converged }
}

/// Whether the requested point needs the βJ interpolation (see [`solve`]).
fn needs_regularization(beta: f64, j: f64, phi: f64, regime: &Regime) -> bool {
    regime.kind == RegimeKind::Critical
        && (regime.gamma - PI / 2.0).abs() > 1e-12
        && phi.sin().abs() > 1e-12
        && (beta * j).abs() < 0.5
}

/// Nodes (in βJ) used when the twisted equations at small coupling are
/// reached by interpolation.
pub const REGULARIZATION_NODES: [f64; 4] = [1.0, 0.5, -0.5, -1.0];

fn lagrange_weights(nodes: &[f64], t: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            (0..nodes.len())
                .filter(|&j| j != i)
                .map(|j| (t - nodes[j]) / (nodes[i] - nodes[j]))
                .product()
        })
        .collect()
}

/// Solves the NLIE at inverse temperature `beta`, coupling `j_coupling` and
/// twist `phi` (0 for the leading state, π/2 for the subleading pair).
///
/// In the critical regime away from γ = π/2 the twisted equations lose their
/// solution as βJ → 0 (B vanishes in the tails), so for |βJ| < 1/2 and φ ≠ 0 the
/// solution is interpolated (cubic Lagrange in βJ) from solves at
/// βJ ∈ {±1/2, ±1}. ln Λ depends smoothly on βJ, so the interpolation error is
/// far below the discretization error.
pub fn solve(beta: f64, j_coupling: f64, phi: f64, regime: &Regime, config: &NlieConfig) -> Result<NlieSolution> {
    solve_with_guess(beta, j_coupling, phi, regime, config, None)
}

/// As [`solve`], starting from a previous solution on the same grid.
pub fn solve_with_guess(
    beta: f64,
    j_coupling: f64,
    phi: f64,
    regime: &Regime,
    config: &NlieConfig,
    guess: Option<&NlieSolution>,
) -> Result<NlieSolution> {
    config.validate(regime)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(IronfaceError::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    if regime.kind == RegimeKind::Critical && regime.gamma > PI / 2.0 + 1e-12 {
        return Err(IronfaceError::InvalidParameter(format!(
            "the critical NLIE needs gamma <= pi/2 (delta >= 0); gamma = {} puts the shifted kernels outside their strip",
            regime.gamma
        )));
    }
    if needs_regularization(beta, j_coupling, phi, regime) {
        let mut anchors = Vec::with_capacity(REGULARIZATION_NODES.len());
        let mut warm: Option<NlieSolution> = guess.filter(|g| g.anchors.is_empty()).cloned();
        for &bj in &REGULARIZATION_NODES {
            let s = solve_direct(beta, bj / beta, phi, regime, config, warm.as_ref())?;
            warm = Some(s.clone());
            anchors.push((bj, s));
        }
        let nodes: Vec<f64> = anchors.iter().map(|a| a.0).collect();
        let w = lagrange_weights(&nodes, beta * j_coupling);
        let n = anchors[0].1.grid.points;
        let mut ln_b = vec![Complex64::new(0.0, 0.0); n];
        let mut ln_bbar = vec![Complex64::new(0.0, 0.0); n];
        for ((_, s), wi) in anchors.iter().zip(&w) {
            for i in 0..n {
                ln_b[i] += s.ln_b[i] * wi;
                ln_bbar[i] += s.ln_bbar[i] * wi;
            }
        }
        let iterations = anchors.iter().map(|a| a.1.iterations).sum();
        let residual = anchors.iter().map(|a| a.1.residual).fold(0.0, f64::max);
        return Ok(NlieSolution {
            grid: anchors[0].1.grid.clone(),
            ln_b,
            ln_bbar,
            beta,
            j_coupling,
            phi,
            regime: *regime,
            iterations,
            residual,
            anchors,
        });
    }
    solve_direct(beta, j_coupling, phi, regime, config, guess)
}

fn solve_direct(
    beta: f64,
    j: f64,
    phi: f64,
    regime: &Regime,
    config: &NlieConfig,
    guess: Option<&NlieSolution>,
) -> Result<NlieSolution> {
    let grid = Grid::new(regime, config);
    let problem = Problem::new(beta, j, phi, regime, &grid, config)?;
    let start = match guess {
        Some(g) if g.grid == grid && g.anchors.is_empty() => Problem::pack(&g.ln_b, &g.ln_bbar),
        _ => Problem::pack(&problem.d_plus, &problem.d_minus),
    };
    let mut out = anderson(&problem, start.clone(), config, config.anderson_depth);
    let mut iterations = out.iterations;
    if !out.converged && config.anderson_depth > 0 {
        // fall back to plain damped iteration from the driving terms
        let plain = anderson(&problem, Problem::pack(&problem.d_plus, &problem.d_minus), config, 0);
        iterations += plain.iterations;
        if plain.residual < out.residual {
            out = plain;
        }
    }
    if !out.converged {
        return Err(IronfaceError::ConvergenceFailure { iterations, residual: out.residual });
    }
    let (ln_b, ln_bbar) = Problem::unpack(&out.v);
    Ok(NlieSolution {
        grid,
        ln_b,
        ln_bbar,
        beta,
        j_coupling: j,
        phi,
        regime: *regime,
        iterations,
        residual: out.residual,
        anchors: Vec::new(),
    })
}

/// ln Λ(x) = −β e₀(x) + iφ + (K ∗ ln BB̄)(x).
pub fn ln_eigenvalue(x: f64, sol: &NlieSolution) -> Result<Complex64> {
    if !sol.anchors.is_empty() {
        let nodes: Vec<f64> = sol.anchors.iter().map(|a| a.0).collect();
        let w = lagrange_weights(&nodes, sol.beta * sol.j_coupling);
        let mut total = Complex64::new(0.0, 0.0);
        for ((_, s), wi) in sol.anchors.iter().zip(&w) {
            total += ln_eigenvalue(x, s)? * wi;
        }
        return Ok(total);
    }
    let regime = &sol.regime;
    let mut f: Vec<Complex64> = big_logs(&sol.ln_b);
    for (a, b) in f.iter_mut().zip(big_logs(&sol.ln_bbar)) {
        *a += b;
    }
    let conv = match regime.kind {
        RegimeKind::Critical => {
            // trapezoid on the grid plus the constant tail, with the kernel
            // (1/2γ) sech(π(x−y)/γ) whose integral is 1/2
            let g = regime.gamma;
            let c = 0.5 * (f[0] + f[f.len() - 1]);
            let dx = sol.grid.spacing;
            let mut acc = Complex64::new(0.0, 0.0);
            for (y, v) in sol.grid.nodes.iter().zip(&f) {
                acc += (v - c) * (sech(PI * (x - y) / g) / (2.0 * g));
            }
            acc * dx + c * 0.5
        }
        RegimeKind::Massive => {
            let n = f.len();
            let mut planner = FftPlanner::new();
            let mut buf = f.clone();
            planner.plan_fft_forward(n).process(&mut buf);
            let x0 = sol.grid.nodes[0];
            let modes = fftfreq(n);
            let g = regime.gamma;
            let mut acc = Complex64::new(0.0, 0.0);
            for (coef, &k) in buf.iter().zip(&modes) {
                let mult = 0.5 * sech_ratio(k, g);
                acc += coef * mult * Complex64::from_polar(1.0, 2.0 * k * (x - x0));
            }
            acc / n as f64
        }
    };
    let e0 = ground_energy_density(x, regime)?;
    Ok(Complex64::new(-sol.beta * e0, sol.phi) + conv)
}

/// Thermodynamic record at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoPoint {
    pub temperature: f64,
    pub beta: f64,
    pub delta: f64,
    pub gamma: f64,
    pub j_coupling: f64,
    /// Free energy per site.
    pub f: f64,
    /// Internal energy per site.
    pub e: f64,
    /// Entropy per site.
    pub s: f64,
    /// Specific heat per site.
    pub c: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Correlation record at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationPoint {
    pub temperature: f64,
    pub beta: f64,
    pub delta: f64,
    pub j_coupling: f64,
    pub xi_inv: f64,
    pub beta_over_xi: f64,
    /// Oscillation wave vector folded into [0, π].
    pub kappa: f64,
    pub kappa_over_pi: f64,
    pub iterations: usize,
}

/// Free energy per site −ln Λ(0)/β at φ = 0.
pub fn free_energy_value(beta: f64, j_coupling: f64, regime: &Regime, config: &NlieConfig, guess: Option<&NlieSolution>) -> Result<(f64, NlieSolution)> {
    let sol = solve_with_guess(beta, j_coupling, 0.0, regime, config, guess)?;
    let ln = ln_eigenvalue(0.0, &sol)?;
    Ok((-ln.re / beta, sol))
}

/// f, e, s and c at one temperature; derivatives by central differences in T
/// with relative step 1e−3.
pub fn free_energy(beta: f64, j_coupling: f64, delta: f64, config: &NlieConfig) -> Result<ThermoPoint> {
    free_energy_with_guess(beta, j_coupling, delta, config, None).map(|(p, _)| p)
}

/// As [`free_energy`], warm-started; returns the central solution for reuse.
pub fn free_energy_with_guess(
    beta: f64,
    j_coupling: f64,
    delta: f64,
    config: &NlieConfig,
    guess: Option<&NlieSolution>,
) -> Result<(ThermoPoint, NlieSolution)> {
    let regime = Regime::from_delta(delta)?;
    let t = 1.0 / beta;
    let h = 1e-3 * t;
    let (f0, sol) = free_energy_value(beta, j_coupling, &regime, config, guess)?;
    let (fp, sp) = free_energy_value(1.0 / (t + h), j_coupling, &regime, config, Some(&sol))?;
    let (fm, sm) = free_energy_value(1.0 / (t - h), j_coupling, &regime, config, Some(&sol))?;
    let s = -(fp - fm) / (2.0 * h);
    let c = -t * (fp - 2.0 * f0 + fm) / (h * h);
    let point = ThermoPoint {
        temperature: t,
        beta,
        delta,
        gamma: regime.gamma,
        j_coupling,
        f: f0,
        e: f0 + t * s,
        s,
        c,
        iterations: sol.iterations + sp.iterations + sm.iterations,
        residual: sol.residual.max(sp.residual).max(sm.residual),
    };
    Ok((point, sol))
}

/// Folds an angle into [0, π].
pub fn fold_angle(a: f64) -> f64 {
    let t = a.rem_euclid(2.0 * PI);
    if t > PI {
        2.0 * PI - t
    } else {
        t
    }
}

/// ξ⁻¹ and κ from ln(Λ₁(0)/Λ_max(0)) = −ξ⁻¹ + iκ, with Λ₁ the φ = π/2 state.
pub fn correlation(beta: f64, j_coupling: f64, delta: f64, config: &NlieConfig) -> Result<CorrelationPoint> {
    correlation_with_guess(beta, j_coupling, delta, config, None).map(|(p, _)| p)
}

/// As [`correlation`], warm-started from a pair of previous solutions
/// (φ = 0, φ = π/2); returns the new pair.
pub fn correlation_with_guess(
    beta: f64,
    j_coupling: f64,
    delta: f64,
    config: &NlieConfig,
    guess: Option<&(NlieSolution, NlieSolution)>,
) -> Result<(CorrelationPoint, (NlieSolution, NlieSolution))> {
    let regime = Regime::from_delta(delta)?;
    let lead = solve_with_guess(beta, j_coupling, 0.0, &regime, config, guess.map(|g| &g.0))?;
    let sub = solve_with_guess(beta, j_coupling, PI / 2.0, &regime, config, guess.map(|g| &g.1))?;
    let d = ln_eigenvalue(0.0, &sub)? - ln_eigenvalue(0.0, &lead)?;
    let kappa = fold_angle(d.im);
    let point = CorrelationPoint {
        temperature: 1.0 / beta,
        beta,
        delta,
        j_coupling,
        xi_inv: -d.re,
        beta_over_xi: -d.re * beta,
        kappa,
        kappa_over_pi: kappa / PI,
        iterations: lead.iterations + sub.iterations,
    };
    Ok((point, (lead, sub)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplier_limits() {
        let g = 1.0;
        let small = critical_f_multiplier(1e-9, g, 0.0);
        assert!((small - (PI - 2.0) / (2.0 * (PI - 1.0))).abs() < 1e-8);
        assert_eq!(critical_f_multiplier(3.0, PI / 2.0, 0.0), 0.0);
    }

    #[test]
    fn log1p_exp_is_accurate() {
        let y = Complex64::new(-40.0, 0.3);
        let v = log1p_exp(y);
        assert!((v - y.exp()).norm() < 1e-30);
        let y = Complex64::new(40.0, 0.3);
        assert!((log1p_exp(y) - y).norm() < 1e-16);
    }

    #[test]
    fn fold() {
        assert!((fold_angle(3.0 * PI / 2.0) - PI / 2.0).abs() < 1e-15);
        assert!((fold_angle(-0.2) - 0.2).abs() < 1e-15);
    }
}
