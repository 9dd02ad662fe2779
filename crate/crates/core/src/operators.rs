//! Dense operators on the height (spin) chain and on the Trotter direction.
//!
//! Basis convention: a basis index `s` of an `L`-site chain stores site `i`
//! (0-based) in bit `L-1-i`, so site 0 is the most significant bit. A cleared
//! bit is height `+1` (spin up).

use crate::error::{IronfaceError, Result};
use crate::weights::{face_weight_table, FaceWeightTable, Regime};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::sync::atomic::{AtomicUsize, Ordering};

static CHAIN_LIMIT: AtomicUsize = AtomicUsize::new(14);
static TROTTER_LIMIT: AtomicUsize = AtomicUsize::new(12);

/// Largest chain length accepted by dense builders.
pub fn chain_limit() -> usize {
    CHAIN_LIMIT.load(Ordering::Relaxed)
}

/// Overrides the dense chain limit (process wide).
pub fn set_chain_limit(l: usize) {
    CHAIN_LIMIT.store(l, Ordering::Relaxed);
}

/// Largest Trotter number accepted by the dense quantum transfer matrix.
pub fn trotter_limit() -> usize {
    TROTTER_LIMIT.load(Ordering::Relaxed)
}

pub fn set_trotter_limit(n: usize) {
    TROTTER_LIMIT.store(n, Ordering::Relaxed);
}

fn check_chain(l: usize, min: usize) -> Result<()> {
    if l < min {
        return Err(IronfaceError::InvalidParameter(format!("need at least {min} sites, got {l}")));
    }
    if l > chain_limit() {
        return Err(IronfaceError::SizeTooLarge { size: l, limit: chain_limit() });
    }
    Ok(())
}

/// Height of site `i` in basis state `s`.
#[inline]
pub fn height(s: usize, i: usize, l: usize) -> i8 {
    if (s >> (l - 1 - i)) & 1 == 0 {
        1
    } else {
        -1
    }
}

#[inline]
fn site_mask(i: usize, l: usize) -> usize {
    1 << (l - 1 - i)
}

/// A dense complex matrix acting on `2^sites` states.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub sites: usize,
    pub matrix: DMatrix<Complex64>,
    pub hermitian: bool,
    pub label: String,
}

impl DenseOperator {
    /// Wraps a matrix and sets the Hermitian flag from the data.
    pub fn new(sites: usize, matrix: DMatrix<Complex64>, label: impl Into<String>) -> Self {
        let hermitian = hermitian_defect(&matrix) < 1e-12;
        Self { sites, matrix, hermitian, label: label.into() }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Matrix-market style listing: one `row col re im` line per nonzero, 1-based.
    pub fn to_matrix_market(&self) -> String {
        let mut out = String::new();
        out.push_str("%%MatrixMarket matrix coordinate complex general\n");
        out.push_str(&format!("% {}\n", self.label));
        let nnz = self.matrix.iter().filter(|z| z.norm() > 0.0).count();
        out.push_str(&format!("{} {} {}\n", self.dim(), self.dim(), nnz));
        for c in 0..self.dim() {
            for r in 0..self.dim() {
                let z = self.matrix[(r, c)];
                if z.norm() > 0.0 {
                    out.push_str(&format!("{} {} {:.17e} {:.17e}\n", r + 1, c + 1, z.re, z.im));
                }
            }
        }
        out
    }
}

/// max |M − M†|.
pub fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// max |AB − BA|.
pub fn commutator_norm(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a * b - b * a).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Couplings of the face chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub delta: f64,
    pub j_coupling: f64,
    pub gamma8v: f64,
    pub phi: f64,
}

impl ModelParams {
    pub fn new(delta: f64) -> Self {
        Self { delta, j_coupling: 0.0, gamma8v: 0.0, phi: 0.0 }
    }

    pub fn regime(&self) -> Result<Regime> {
        Regime::from_delta(self.delta)
    }
}

/// Three-spin eight-vertex chain:
/// Σᵢ (Γ+1)σˣᵢ + (Γ−1)σᶻᵢ₋₁σˣᵢσᶻᵢ₊₁ + Δ(Γ+1)(σᶻᵢ₋₁σᶻᵢ₊₁ − 1).
pub fn build_h_8v(l: usize, delta: f64, gamma8v: f64) -> Result<DenseOperator> {
    check_chain(l, 3)?;
    let dim = 1usize << l;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for s in 0..dim {
        let mut diag = 0.0;
        for i in 0..l {
            let zl = height(s, (i + l - 1) % l, l) as f64;
            let zr = height(s, (i + 1) % l, l) as f64;
            diag += delta * (gamma8v + 1.0) * (zl * zr - 1.0);
            let amp = (gamma8v + 1.0) + (gamma8v - 1.0) * zl * zr;
            if amp != 0.0 {
                m[(s ^ site_mask(i, l), s)] += Complex64::new(amp, 0.0);
            }
        }
        m[(s, s)] += Complex64::new(diag, 0.0);
    }
    Ok(DenseOperator::new(l, m, format!("H_8v L={l} delta={delta} Gamma={gamma8v}")))
}

/// The face chain Σᵢ σˣᵢ − σᶻᵢ₋₁σˣᵢσᶻᵢ₊₁ + Δ(σᶻᵢ₋₁σᶻᵢ₊₁ − 1).
pub fn build_h_irf(l: usize, delta: f64) -> Result<DenseOperator> {
    let mut op = build_h_8v(l, delta, 0.0)?;
    op.label = format!("H_IRF L={l} delta={delta}");
    Ok(op)
}

/// Twisted XXZ chain. The closing bond is conjugated by diag(e^{2iφ}, 1) on
/// the last site, so σ⁺ on that site picks up e^{−2iφ}.
pub fn build_h_xxz(l: usize, delta: f64, phi: f64) -> Result<DenseOperator> {
    check_chain(l, 2)?;
    let dim = 1usize << l;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    let raise_last = Complex64::from_polar(1.0, -2.0 * phi);
    for s in 0..dim {
        for i in 0..l {
            let j = (i + 1) % l;
            if l == 2 && i == 1 {
                // a two-site ring has a single distinct bond pair; keep both terms
            }
            let zi = height(s, i, l);
            let zj = height(s, j, l);
            m[(s, s)] += Complex64::new(delta * (f64::from(zi * zj) - 1.0), 0.0);
            if zi != zj {
                let t = s ^ site_mask(i, l) ^ site_mask(j, l);
                let mut amp = Complex64::new(2.0, 0.0);
                if j == 0 {
                    // closing bond: site i = L-1 carries the twist
                    amp *= if zi < 0 { raise_last } else { raise_last.conj() };
                }
                m[(t, s)] += amp;
            }
        }
    }
    Ok(DenseOperator::new(l, m, format!("H_XXZ L={l} delta={delta} phi={phi}")))
}

/// Symmetry charges of the face chain.
#[derive(Debug, Clone)]
pub struct Charges {
    /// Σ σᶻⱼσᶻⱼ₊₁ (periodic).
    pub sigma_z: DenseOperator,
    /// Global spin flip ∏ σˣⱼ.
    pub pi_x: DenseOperator,
    /// Flip of the even sites (2, 4, ... counting from 1).
    pub pi_x_even: DenseOperator,
    /// Flip of the odd sites (1, 3, ... counting from 1).
    pub pi_x_odd: DenseOperator,
}

fn flip_operator(l: usize, mask: usize, label: String) -> DenseOperator {
    let dim = 1usize << l;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for s in 0..dim {
        m[(s ^ mask, s)] = Complex64::new(1.0, 0.0);
    }
    DenseOperator::new(l, m, label)
}

pub fn build_charges(l: usize) -> Result<Charges> {
    check_chain(l, 2)?;
    let dim = 1usize << l;
    let mut sz = DMatrix::<Complex64>::zeros(dim, dim);
    for s in 0..dim {
        let v: i32 = (0..l).map(|i| i32::from(height(s, i, l) * height(s, (i + 1) % l, l))).sum();
        sz[(s, s)] = Complex64::new(f64::from(v), 0.0);
    }
    let all = dim - 1;
    let odd_sites: usize = (0..l).step_by(2).map(|i| site_mask(i, l)).sum();
    let even_sites = all ^ odd_sites;
    Ok(Charges {
        sigma_z: DenseOperator::new(l, sz, format!("Sigma_z L={l}")),
        pi_x: flip_operator(l, all, format!("Pi_x L={l}")),
        pi_x_even: flip_operator(l, even_sites, format!("Pi_x_even L={l}")),
        pi_x_odd: flip_operator(l, odd_sites, format!("Pi_x_odd L={l}")),
    })
}

/// U = (1/√2)[[I, P], [P, −I]] in the grading of the first site, where P flips
/// the remaining L−1 sites. It is real orthogonal and diagonalizes Πˣ.
pub fn build_u_transform(l: usize) -> Result<DenseOperator> {
    check_chain(l, 2)?;
    let dim = 1usize << l;
    let half = dim / 2;
    let p = half - 1;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for t in 0..half {
        m[(t, t)] = Complex64::new(r, 0.0);
        m[(t, half + (t ^ p))] = Complex64::new(r, 0.0);
        m[(half + t, t ^ p)] = Complex64::new(r, 0.0);
        m[(half + t, half + t)] = Complex64::new(-r, 0.0);
    }
    Ok(DenseOperator::new(l, m, format!("U L={l}")))
}

/// Row transfer matrix with elements ∏ᵢ W(aᵢ, aᵢ₊₁, bᵢ₊₁, bᵢ | λ) (periodic);
/// `conjugated` switches to the rotated weight W̄.
pub fn build_t_irf(lambda: Complex64, l: usize, regime: &Regime, conjugated: bool) -> Result<DenseOperator> {
    check_chain(l, 2)?;
    let table = face_weight_table(lambda, regime, None)?;
    let dim = 1usize << l;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for s in 0..dim {
        for t in 0..dim {
            let mut p = Complex64::new(1.0, 0.0);
            for i in 0..l {
                let j = (i + 1) % l;
                let (a, an, bn, b) = (height(s, i, l), height(s, j, l), height(t, j, l), height(t, i, l));
                p *= if conjugated { table.w_bar(a, an, bn, b) } else { table.w(a, an, bn, b) };
                if p.norm() == 0.0 {
                    break;
                }
            }
            m[(s, t)] = p;
        }
    }
    let name = if conjugated { "Tbar_IRF" } else { "T_IRF" };
    Ok(DenseOperator::new(l, m, format!("{name} L={l} lambda={lambda}")))
}

/// Scale α relating the log-derivative of the transfer matrix to the chain:
/// T′(0)T(0)⁻¹ = α H_IRF with α = 1/(2 s(γ)), s = sin or sinh.
pub fn hamiltonian_scale(regime: &Regime) -> f64 {
    1.0 / (2.0 * regime.trig(Complex64::new(regime.gamma, 0.0)).re)
}

/// Result of fitting T′(0)T(0)⁻¹ ≈ α H_IRF + c I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianFit {
    pub alpha: Complex64,
    pub shift: Complex64,
    pub residual: f64,
}

/// Finite-difference log-derivative of the transfer matrix at λ = 0, fitted to
/// the face chain.
pub fn hamiltonian_from_transfer(l: usize, delta: f64) -> Result<HamiltonianFit> {
    let regime = Regime::from_delta(delta)?;
    let h = build_h_irf(l, delta)?;
    let t = |x: f64| build_t_irf(Complex64::new(x, 0.0), l, &regime, false).map(|o| o.matrix);
    let step = 1e-3;
    let central = |hh: f64| -> Result<DMatrix<Complex64>> { Ok((t(hh)? - t(-hh)?) / Complex64::new(2.0 * hh, 0.0)) };
    // Two Richardson levels: the weights are analytic, so the error series is in h².
    let d1 = central(step)?;
    let d2 = central(step / 2.0)?;
    let d4 = central(step / 4.0)?;
    let r1 = (&d2 * Complex64::new(4.0, 0.0) - &d1) / Complex64::new(3.0, 0.0);
    let r2 = (&d4 * Complex64::new(4.0, 0.0) - &d2) / Complex64::new(3.0, 0.0);
    let deriv = (&r2 * Complex64::new(16.0, 0.0) - &r1) / Complex64::new(15.0, 0.0);
    let t0 = t(0.0)?;
    let inv = t0
        .try_inverse()
        .ok_or_else(|| IronfaceError::FitFailure("T(0) is not invertible".into()))?;
    let hn = deriv * inv;
    let fit = fit_affine(&hn, &h.matrix);
    if fit.residual > 1e-6 {
        return Err(IronfaceError::FitFailure(format!("residual {:.3e}", fit.residual)));
    }
    Ok(fit)
}

/// Least-squares fit of `target ≈ α·h + c·I`, returning the max-abs residual.
pub fn fit_affine(target: &DMatrix<Complex64>, h: &DMatrix<Complex64>) -> HamiltonianFit {
    let n = h.nrows();
    let tr_h: Complex64 = h.trace();
    let mut hh = Complex64::new(0.0, 0.0);
    let mut ht = Complex64::new(0.0, 0.0);
    for (a, b) in h.iter().zip(target.iter()) {
        hh += a.conj() * a;
        ht += a.conj() * b;
    }
    let tr_t: Complex64 = target.trace();
    let nn = Complex64::new(n as f64, 0.0);
    // Normal equations for (α, c).
    let det = hh * nn - tr_h.conj() * tr_h;
    let alpha = (ht * nn - tr_h.conj() * tr_t) / det;
    let shift = (hh * tr_t - tr_h * ht) / det;
    let mut residual: f64 = 0.0;
    for r in 0..n {
        for c in 0..n {
            let model = alpha * h[(r, c)] + if r == c { shift } else { Complex64::new(0.0, 0.0) };
            residual = residual.max((target[(r, c)] - model).norm());
        }
    }
    HamiltonianFit { alpha, shift, residual }
}

/// Quantum transfer matrix on `n` Trotter sites,
/// Q_{u,v} = e^{−βJ u₀v₀} ∏ₖ Wₖ(u_{k−1}, v_{k−1}, v_k, u_k) with W at ix+λ on odd
/// k and W̄ at −ix+λ on even k, λ = −β/n, indices periodic in k.
///
/// `beta` is the lattice inverse temperature: the product of n/2 row pairs
/// approaches exp(−β(αH_IRF + JΣᶻ)), α = [`hamiltonian_scale`]. The factor
/// e^{−βJ u₀v₀} is the horizontal seam carrying the Ising coupling.
pub fn build_qtm(x: f64, n: usize, beta: f64, regime: &Regime, j_coupling: f64) -> Result<DenseOperator> {
    if n < 2 || n % 2 != 0 {
        return Err(IronfaceError::InvalidParameter(format!("Trotter number must be even and >= 2, got {n}")));
    }
    if n > trotter_limit() {
        return Err(IronfaceError::SizeTooLarge { size: n, limit: trotter_limit() });
    }
    let lam = -beta / n as f64;
    let odd = face_weight_table(Complex64::new(lam, x), regime, None)?;
    let even = face_weight_table(Complex64::new(lam, -x), regime, None)?;
    let dim = 1usize << n;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for u in 0..dim {
        for v in 0..dim {
            let u0 = height(u, 0, n);
            let v0 = height(v, 0, n);
            let mut p = Complex64::new((-beta * j_coupling * f64::from(u0 * v0)).exp(), 0.0);
            for k in 1..=n {
                let (km, kk) = (k - 1, k % n);
                let (a, b, c, d) = (height(u, km, n), height(v, km, n), height(v, kk, n), height(u, kk, n));
                p *= if k % 2 == 1 { odd.w(a, b, c, d) } else { even.w_bar(a, b, c, d) };
                if p.norm() == 0.0 {
                    break;
                }
            }
            m[(u, v)] = p;
        }
    }
    Ok(DenseOperator::new(n, m, format!("T_QTM N={n} beta={beta} x={x} J={j_coupling}")))
}

/// tr(Mᵖ) by repeated squaring.
pub fn trace_power(m: &DMatrix<Complex64>, p: usize) -> Complex64 {
    let mut result = DMatrix::<Complex64>::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    let mut e = p;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result.trace()
}

/// The two sides of the lattice reordering identity,
/// (Tr[(T T̄)^{n/2}] on `l` sites, Tr[Q^l]) with spectral parameter −β/n.
pub fn lattice_traces(l: usize, n: usize, beta: f64, regime: &Regime) -> Result<(Complex64, Complex64)> {
    let lam = Complex64::new(-beta / n as f64, 0.0);
    let t = build_t_irf(lam, l, regime, false)?;
    let tb = build_t_irf(lam, l, regime, true)?;
    let row = trace_power(&(&t.matrix * &tb.matrix), n / 2);
    let q = build_qtm(0.0, n, beta, regime, 0.0)?;
    Ok((row, trace_power(&q.matrix, l)))
}

/// |ln Tr[Q^L] − ln Tr exp(−β α H_IRF)| at lattice inverse temperature β.
pub fn trotter_error(l: usize, n: usize, beta: f64, delta: f64) -> Result<f64> {
    let regime = Regime::from_delta(delta)?;
    let q = build_qtm(0.0, n, beta, &regime, 0.0)?;
    let lnz_qtm = trace_power(&q.matrix, l).ln().re;
    let h = build_h_irf(l, delta)?;
    let scale = beta * hamiltonian_scale(&regime);
    let evals = nalgebra::SymmetricEigen::new(h.matrix.clone()).eigenvalues;
    let lnz = log_sum_exp(evals.iter().map(|e| -scale * e));
    Ok((lnz_qtm - lnz).abs())
}

/// ln Σ exp(vᵢ) without overflow.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Real face weights of a table, for the matrix-free routines below.
pub fn real_weights(table: &FaceWeightTable) -> [f64; 16] {
    let mut w = [0.0; 16];
    for (dst, src) in w.iter_mut().zip(table.entries.iter()) {
        *dst = src.re;
    }
    w
}

#[inline]
fn widx(a: usize, b: usize, c: usize, d: usize) -> usize {
    (a << 3) | (b << 2) | (c << 1) | d
}

/// Applies the row transfer matrix to `psi` without forming it. Works with
/// 2^{L+2} intermediate amplitudes: one extra bit carries the running output
/// height and one keeps b₀ for the closing face.
pub fn apply_t_irf(psi: &[f64], l: usize, w: &[f64; 16]) -> Vec<f64> {
    assert!(l >= 2 && psi.len() == 1 << l);
    let dim = 1usize << l;
    let carry = dim;
    let b0s = dim << 1;
    let bit = |i: usize| 1usize << (l - 1 - i);
    let get = |s: usize, m: usize| usize::from(s & m != 0);
    // face 0
    let mut z = vec![0.0; dim << 2];
    for (idx, slot) in z.iter_mut().enumerate() {
        let a0 = get(idx, bit(0));
        let a1 = get(idx, carry);
        let b0 = get(idx, b0s);
        let b1 = get(idx, bit(1));
        let src = (idx & (dim - 1) & !bit(0)) | if b0 == 1 { bit(0) } else { 0 };
        *slot = w[widx(a0, a1, b1, b0)] * psi[src];
    }
    // faces 1 .. L-2
    for i in 1..l.saturating_sub(1) {
        let mut next = vec![0.0; dim << 2];
        let (mi, mn) = (bit(i), bit(i + 1));
        for (idx, slot) in next.iter_mut().enumerate() {
            let ai = get(idx, mi);
            let an = get(idx, carry);
            let bn = get(idx, mn);
            let base = idx & !mi & !carry | if ai == 1 { carry } else { 0 };
            let mut acc = 0.0;
            for bi in 0..2 {
                let wt = w[widx(ai, an, bn, bi)];
                if wt != 0.0 {
                    acc += wt * z[base | if bi == 1 { mi } else { 0 }];
                }
            }
            *slot = acc;
        }
        z = next;
    }
    // closing face (a_{L-1}, a_0, b_0, b_{L-1})
    let ml = bit(l - 1);
    let mut out = vec![0.0; dim];
    for (a, slot) in out.iter_mut().enumerate() {
        let al = get(a, ml);
        let a0 = get(a, bit(0));
        let base = (a & !ml) | if al == 1 { carry } else { 0 };
        let mut acc = 0.0;
        for b0 in 0..2 {
            for bl in 0..2 {
                let wt = w[widx(al, a0, b0, bl)];
                if wt != 0.0 {
                    acc += wt * z[base | if bl == 1 { ml } else { 0 } | if b0 == 1 { b0s } else { 0 }];
                }
            }
        }
        *slot = acc;
    }
    out
}

/// Applies H_IRF to a real vector without forming the matrix.
pub fn apply_h_irf(psi: &[f64], l: usize, delta: f64) -> Vec<f64> {
    let dim = 1usize << l;
    assert_eq!(psi.len(), dim);
    let mut out = vec![0.0; dim];
    for (s, &amp) in psi.iter().enumerate() {
        if amp == 0.0 {
            continue;
        }
        let mut diag = 0.0;
        for i in 0..l {
            let zz = f64::from(height(s, (i + l - 1) % l, l) * height(s, (i + 1) % l, l));
            diag += delta * (zz - 1.0);
            let hop = 1.0 - zz;
            if hop != 0.0 {
                out[s ^ site_mask(i, l)] += hop * amp;
            }
        }
        out[s] += diag * amp;
    }
    out
}

/// Column vector helper used in tests and by the spectra module.
pub fn to_dvector(v: &[f64]) -> DVector<Complex64> {
    DVector::from_iterator(v.len(), v.iter().map(|&x| Complex64::new(x, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn aligned_state_has_zero_energy() {
        let h = build_h_irf(4, 0.8).unwrap();
        assert!(h.matrix[(0, 0)].norm() < 1e-15);
        assert!(h.hermitian);
    }

    #[test]
    fn gamma_zero_reduces_8v() {
        let a = build_h_8v(5, 0.3, 0.0).unwrap();
        let b = build_h_irf(5, 0.3).unwrap();
        assert_eq!(a.matrix, b.matrix);
    }

    #[test]
    fn transfer_at_zero_is_shift_and_conjugate_inverts() {
        let r = Regime::critical(FRAC_PI_3).unwrap();
        let t = build_t_irf(c(0.0), 4, &r, false).unwrap();
        let tb = build_t_irf(c(0.0), 4, &r, true).unwrap();
        let prod = &t.matrix * &tb.matrix;
        let id = DMatrix::<Complex64>::identity(16, 16);
        assert!((prod - id).iter().all(|z| z.norm() < 1e-14));
        // every column holds exactly one unit entry
        for col in 0..16 {
            let nnz = t.matrix.column(col).iter().filter(|z| z.norm() > 1e-14).count();
            assert_eq!(nnz, 1);
        }
    }

    #[test]
    fn matrix_free_transfer_agrees_with_dense() {
        let r = Regime::critical(1.1).unwrap();
        for l in [2usize, 3, 5] {
            let lam = 0.37;
            let t = build_t_irf(c(lam), l, &r, false).unwrap();
            let w = real_weights(&face_weight_table(c(lam), &r, None).unwrap());
            let psi: Vec<f64> = (0..1 << l).map(|k| ((k * 7 + 3) % 11) as f64 - 5.0).collect();
            let got = apply_t_irf(&psi, l, &w);
            let want = &t.matrix * to_dvector(&psi);
            for (g, e) in got.iter().zip(want.iter()) {
                assert!((c(*g) - e).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn matrix_free_hamiltonian_agrees_with_dense() {
        let h = build_h_irf(5, -0.4).unwrap();
        let psi: Vec<f64> = (0..32).map(|k| (k as f64 * 0.37).sin()).collect();
        let got = apply_h_irf(&psi, 5, -0.4);
        let want = &h.matrix * to_dvector(&psi);
        for (g, e) in got.iter().zip(want.iter()) {
            assert!((c(*g) - e).norm() < 1e-12);
        }
    }
}
