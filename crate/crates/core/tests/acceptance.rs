//! Acceptance run: one line per criterion. Exits non-zero if a criterion fails
//! that is not in `DOCUMENTED_DEVIATIONS`.

use ironface::asymptotics::{kappa_low_t, xi_inverse_limit, xx_free_energy};
use ironface::bethe::bethe_cross_check;
use ironface::nlie::{correlation, free_energy, ground_energy_density, NlieConfig};
use ironface::operators::{build_t_irf, commutator_norm, hamiltonian_from_transfer, lattice_traces, trotter_error};
use ironface::spectra::{finite_size_scan, verify_vertex_irf_map, xxz_free_energy_ed};
use ironface::weights::{check_initial_condition, check_unitarity, check_yang_baxter};
use ironface::{Regime, Result};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;
use std::time::Instant;

/// Criteria whose stated property does not hold for this model; they are
/// still run and reported as FAIL.
///
/// 13: at Δ = 1.5 the φ = π/2 eigenvalue becomes degenerate with the leading
/// one as T → 0 (Néel order), so ξ grows like e^{gap/T} instead of saturating.
const DOCUMENTED_DEVIATIONS: [usize; 1] = [13];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn spectral_parameter(rng: &mut StdRng, regime: &Regime) -> Complex64 {
    let scale = regime.gamma.min(PI - regime.gamma);
    Complex64::new(rng.random_range(-0.45..0.45) * scale, rng.random_range(-0.5..0.5))
}

fn identities() -> Result<Outcome> {
    let mut rng = StdRng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for delta in [0.5, -0.5, 1.5] {
        let regime = Regime::from_delta(delta)?;
        for _ in 0..20 {
            let l = spectral_parameter(&mut rng, &regime);
            let m = spectral_parameter(&mut rng, &regime);
            worst = worst.max(check_yang_baxter(l, m, &regime)?);
            worst = worst.max(check_unitarity(l, &regime)?.0);
        }
        worst = worst.max(check_initial_condition(&regime)?);
    }
    outcome(worst < 1e-12, format!("max residual {worst:.2e} (Δ = 0.5, −0.5, 1.5; 20 samples each)"))
}

fn commuting() -> Result<Outcome> {
    let mut rng = StdRng::seed_from_u64(12);
    let regime = Regime::from_delta(0.5)?;
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let a = build_t_irf(spectral_parameter(&mut rng, &regime), 6, &regime, false)?;
        let b = build_t_irf(spectral_parameter(&mut rng, &regime), 6, &regime, false)?;
        worst = worst.max(commutator_norm(&a.matrix, &b.matrix));
    }
    outcome(worst < 1e-10, format!("max |[T(λ),T(μ)]| = {worst:.2e} at L = 6"))
}

fn log_derivative() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for l in [4, 5, 6] {
        for delta in [-0.3, 0.5] {
            worst = worst.max(hamiltonian_from_transfer(l, delta)?.residual);
        }
    }
    outcome(worst < 1e-6, format!("max fit residual {worst:.2e}"))
}

fn mapping() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for l in [4, 6] {
        for delta in [-0.5, 0.0, 0.5, 1.5] {
            worst = worst.max(verify_vertex_irf_map(l, delta)?.max_mismatch);
        }
    }
    outcome(worst < 1e-10, format!("max eigenvalue mismatch {worst:.2e}"))
}

fn reordering() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for (n, l) in [(2, 3), (2, 4), (4, 3), (4, 4)] {
        for delta in [0.0, 0.5] {
            let (row, qtm) = lattice_traces(l, n, 0.5, &Regime::from_delta(delta)?)?;
            worst = worst.max((row - qtm).norm() / row.norm());
        }
    }
    outcome(worst < 1e-10, format!("max relative trace difference {worst:.2e}"))
}

fn trotter() -> Result<Outcome> {
    let mut text = Vec::new();
    let mut pass = true;
    for delta in [0.0, 0.5] {
        let errs: Vec<f64> = [2, 4, 6, 8].iter().map(|&n| trotter_error(3, n, 0.5, delta)).collect::<Result<_>>()?;
        pass &= errs.windows(2).all(|w| w[1] < w[0]);
        text.push(format!("Δ={delta}: {}", errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" > ")));
    }
    outcome(pass, text.join("; "))
}

fn bethe() -> Result<Outcome> {
    let pts = bethe_cross_check(0.2, 0.3, 6)?;
    let worst = pts.iter().map(|p| p.distance).fold(0.0, f64::max);
    outcome(
        worst < 1e-8,
        format!("{} comparisons (N=2 n=1, N=4 n=0, N=4 n=2; Δ 0 → 0.3), max distance {worst:.2e}", pts.len()),
    )
}

fn free_fermion() -> Result<Outcome> {
    let cfg = NlieConfig::default();
    let mut worst: f64 = 0.0;
    for t in [0.1, 1.0, 10.0] {
        let f = free_energy(1.0 / t, 0.0, 0.0, &cfg)?.f;
        worst = worst.max((f - xx_free_energy(t)?).abs());
    }
    let e0 = (ground_energy_density(0.0, &Regime::from_delta(0.0)?)? + 4.0 / PI).abs();
    outcome(worst < 1e-6 && e0 < 1e-10, format!("max |f − f_ff| = {worst:.2e}, |e₀(0) + 4/π| = {e0:.2e}"))
}

fn high_t_ed() -> Result<Outcome> {
    let f = free_energy(0.5, 0.0, 0.5, &NlieConfig::default())?.f;
    let ed = xxz_free_energy_ed(14, 0.5, 0.5)?;
    let d = (f - ed).abs();
    outcome(d < 1e-4, format!("NLIE {f:.8}, ED(L=14) {ed:.8}, difference {d:.2e}"))
}

fn low_t_correlation() -> Result<Outcome> {
    let cfg = NlieConfig::default();
    let a = correlation(50.0, 0.0, 0.0, &cfg)?;
    let want_a = xi_inverse_limit(PI / 2.0)?;
    let b = correlation(50.0, 0.0, (PI / 3.0).cos(), &cfg)?;
    let want_b = PI / (8.0 * 3f64.sqrt());
    let ra = (a.beta_over_xi / want_a - 1.0).abs();
    let dk = (a.kappa - PI / 2.0).abs();
    let rb = (b.beta_over_xi / want_b - 1.0).abs();
    outcome(
        ra < 0.02 && dk < 1e-3 && rb < 0.02,
        format!(
            "γ=π/2: β/ξ = {:.5} vs π/8 (rel {ra:.1e}), κ − π/2 = {dk:.1e}; γ=π/3: β/ξ = {:.5} vs π/(8√3) (rel {rb:.1e})",
            a.beta_over_xi, b.beta_over_xi
        ),
    )
}

fn kappa_slope() -> Result<Outcome> {
    let cfg = NlieConfig::default();
    let h = 0.05;
    let kp = correlation(50.0, h, 0.0, &cfg)?.kappa;
    let km = correlation(50.0, -h, 0.0, &cfg)?.kappa;
    let slope = (kp - km) / (2.0 * h);
    let want = (kappa_low_t(PI / 2.0, 1.0)? - kappa_low_t(PI / 2.0, 0.0)?).abs();
    let rel = (slope / want - 1.0).abs();
    outcome(rel < 0.02, format!("dκ/dJ = {slope:.5} vs {want:.5} (rel {rel:.1e})"))
}

fn specific_heat() -> Result<Outcome> {
    let t = 0.02;
    let c = free_energy(1.0 / t, 0.0, 0.0, &NlieConfig::default())?.c;
    let rel = (c / t / (PI / 12.0) - 1.0).abs();
    outcome(rel < 0.02, format!("c/T = {:.6} vs π/12 = {:.6} (rel {rel:.1e})", c / t, PI / 12.0))
}

fn gapped() -> Result<Outcome> {
    let cfg = NlieConfig::default();
    let x50 = correlation(50.0, 0.1, 1.5, &cfg)?.xi_inv;
    let x100 = correlation(100.0, 0.1, 1.5, &cfg)?.xi_inv;
    let x10 = correlation(10.0, 0.1, 1.5, &cfg)?.xi_inv;
    let change = (x50 / x100 - 1.0).abs();
    outcome(
        change < 0.01,
        format!("ξ⁻¹ = {x10:.3e}, {x50:.3e}, {x100:.3e} at β = 10, 50, 100; ξ(100)/ξ(50) − 1 = {change:.2e}"),
    )
}

fn conformal() -> Result<Outcome> {
    let r = finite_size_scan(&[8, 10, 12, 14], 0.0)?;
    let c = r.c_estimate.unwrap_or(f64::NAN);
    let h = r.h_leading.unwrap_or(f64::NAN);
    let (rc, rh) = ((c - 1.0).abs(), (h / 0.125 - 1.0).abs());
    outcome(rc < 0.10 && rh < 0.15, format!("c = {c:.4} (rel {rc:.1e}), h = {h:.4} vs 1/8 (rel {rh:.1e})"))
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 14] = [
        ("identity suite", identities),
        ("commuting transfer matrices", commuting),
        ("log-derivative Hamiltonian", log_derivative),
        ("vertex/face spectral mapping", mapping),
        ("lattice reordering identity", reordering),
        ("Trotter convergence", trotter),
        ("Bethe ansatz vs dense QTM", bethe),
        ("free-fermion closure", free_fermion),
        ("high-T ED oracle", high_t_ed),
        ("low-T correlation values", low_t_correlation),
        ("κ(J) slope", kappa_slope),
        ("specific-heat universality", specific_heat),
        ("gapped-phase correlation length", gapped),
        ("finite-size conformal data", conformal),
    ];
    let mut unexpected = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let note = if !pass && DOCUMENTED_DEVIATIONS.contains(&id) { " [documented deviation]" } else { "" };
        println!("{:>2}. {} {name}: {detail} ({secs:.1}s){note}", id, if pass { "PASS" } else { "FAIL" });
        if !pass && note.is_empty() {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criterion/criteria failed");
        std::process::exit(1);
    }
}
