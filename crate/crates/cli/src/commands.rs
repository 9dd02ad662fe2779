use crate::args::{EdArgs, FssArgs, OperatorKind, ScanArgs, SolverArgs, SweepArgs, TemperatureArgs, VerifyArgs};
use crate::output::{emit, write_atomic, OutputError};
use ironface::asymptotics::{exponent_h, kappa_low_t, xi_inverse_limit};
use ironface::nlie::{correlation_with_guess, free_energy_with_guess, NlieConfig, NlieSolution};
use ironface::operators::{self, commutator_norm, DenseOperator};
use ironface::spectra::{eigen_decompose, finite_size_scan, verify_vertex_irf_map};
use ironface::weights::{check_initial_condition, check_unitarity, check_yang_baxter};
use ironface::{IronfaceError, Regime, RegimeKind};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] IronfaceError),
    #[error("{0}")]
    Output(#[from] OutputError),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{0} sweep point(s) did not converge")]
    PartialFailure(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(IronfaceError::ConvergenceFailure { .. }) | CliError::PartialFailure(_) => 2,
            CliError::Verification(_) => 3,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Consecutive temperatures solved in one warm-started chain. Fixed, so the
/// output does not depend on the number of workers.
const CHAIN_LEN: usize = 8;

fn nlie_config(s: &SolverArgs) -> NlieConfig {
    let mut c = NlieConfig::default();
    if let Some(v) = s.grid_points {
        c.points = v;
    }
    if let Some(v) = s.x_max {
        c.x_max = v;
    }
    if let Some(v) = s.circle_points {
        c.circle_points = v;
    }
    if let Some(v) = s.epsilon {
        c.epsilon = v;
    }
    if let Some(v) = s.tol {
        c.tol = v;
    }
    if let Some(v) = s.max_iter {
        c.max_iter = v;
    }
    if let Some(v) = s.mixing {
        c.mixing = v;
    }
    c
}

pub fn temperature_grid(t: &TemperatureArgs) -> CliResult<Vec<f64>> {
    if let Some(v) = t.t {
        if !(v > 0.0) {
            return Err(CliError::Usage(format!("--t must be positive, got {v}")));
        }
        return Ok(vec![v]);
    }
    let (lo, hi) = match (t.tmin, t.tmax) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(CliError::Usage("give --t or both --tmin and --tmax".into())),
    };
    if !(lo > 0.0) || hi < lo || t.tpoints == 0 {
        return Err(CliError::Usage("need 0 < tmin <= tmax and tpoints >= 1".into()));
    }
    let n = t.tpoints;
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|k| {
            let s = k as f64 / (n - 1) as f64;
            if t.log {
                (lo.ln() + s * (hi.ln() - lo.ln())).exp()
            } else {
                lo + s * (hi - lo)
            }
        })
        .collect())
}

/// Runs `step` over the grid in fixed-size chains, hottest first within a
/// chain so each solve starts from a nearby higher-temperature solution.
fn sweep<R: Send, G: Clone + Send>(
    temps: &[f64],
    step: impl Fn(f64, Option<&G>) -> Result<(R, G), IronfaceError> + Sync,
) -> CliResult<Vec<R>> {
    let chains: Vec<Vec<(usize, f64)>> = temps
        .iter()
        .copied()
        .enumerate()
        .collect::<Vec<_>>()
        .chunks(CHAIN_LEN)
        .map(|c| c.to_vec())
        .collect();
    let results: Vec<Result<Vec<(usize, R)>, IronfaceError>> = chains
        .into_par_iter()
        .map(|mut chain| {
            chain.sort_by(|a, b| b.1.total_cmp(&a.1));
            let mut warm: Option<G> = None;
            let mut out = Vec::with_capacity(chain.len());
            for (idx, t) in chain {
                let (row, state) = step(t, warm.as_ref())?;
                warm = Some(state);
                out.push((idx, row));
            }
            Ok(out)
        })
        .collect();
    let mut rows = Vec::with_capacity(temps.len());
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by_key(|r| r.0);
    Ok(rows.into_iter().map(|r| r.1).collect())
}

#[derive(Debug, Serialize)]
struct ThermoRow {
    #[serde(rename = "T")]
    t: f64,
    beta: f64,
    delta: f64,
    gamma: f64,
    #[serde(rename = "J")]
    j: f64,
    f: f64,
    e: f64,
    s: f64,
    c: f64,
    iterations: usize,
    residual: f64,
}

pub fn thermo(a: &SweepArgs) -> CliResult<()> {
    let delta = a.model.delta().map_err(CliError::Usage)?;
    Regime::from_delta(delta)?;
    let temps = temperature_grid(&a.temperature)?;
    let cfg = nlie_config(&a.solver);
    let j = a.model.j;
    let rows = sweep(&temps, |t, guess: Option<&NlieSolution>| {
        let (p, sol) = free_energy_with_guess(1.0 / t, j, delta, &cfg, guess)?;
        let row = ThermoRow {
            t: p.temperature,
            beta: p.beta,
            delta: p.delta,
            gamma: p.gamma,
            j: p.j_coupling,
            f: p.f,
            e: p.e,
            s: p.s,
            c: p.c,
            iterations: p.iterations,
            residual: p.residual,
        };
        Ok((row, sol))
    })?;
    emit(&rows, &a.output)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct CorrRow {
    #[serde(rename = "T")]
    t: f64,
    beta: f64,
    delta: f64,
    #[serde(rename = "J")]
    j: f64,
    xi_inv: f64,
    beta_over_xi: f64,
    kappa: f64,
    kappa_over_pi: f64,
    iterations: usize,
    xi_inv_pred: f64,
    kappa_pred: f64,
}

/// Low-temperature predictions (NaN where none exists: massive regime, or ξ
/// at J ≠ 0).
fn predictions(regime: &Regime, j: f64, t: f64) -> (f64, f64) {
    if regime.kind != RegimeKind::Critical {
        return (f64::NAN, f64::NAN);
    }
    let xi = if j == 0.0 { xi_inverse_limit(regime.gamma).map(|v| v * t).unwrap_or(f64::NAN) } else { f64::NAN };
    (xi, kappa_low_t(regime.gamma, j).unwrap_or(f64::NAN))
}

pub fn corr(a: &SweepArgs) -> CliResult<()> {
    let delta = a.model.delta().map_err(CliError::Usage)?;
    let regime = Regime::from_delta(delta)?;
    let temps = temperature_grid(&a.temperature)?;
    let cfg = nlie_config(&a.solver);
    let j = a.model.j;
    let rows = sweep(&temps, |t, guess: Option<&(NlieSolution, NlieSolution)>| {
        let (p, pair) = correlation_with_guess(1.0 / t, j, delta, &cfg, guess)?;
        let (xi_inv_pred, kappa_pred) = predictions(&regime, j, t);
        let row = CorrRow {
            t: p.temperature,
            beta: p.beta,
            delta: p.delta,
            j: p.j_coupling,
            xi_inv: p.xi_inv,
            beta_over_xi: p.beta_over_xi,
            kappa: p.kappa,
            kappa_over_pi: p.kappa_over_pi,
            iterations: p.iterations,
            xi_inv_pred,
            kappa_pred,
        };
        Ok((row, pair))
    })?;
    emit(&rows, &a.output)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ScanRow {
    delta: f64,
    gamma: f64,
    #[serde(rename = "T")]
    t: f64,
    #[serde(rename = "J")]
    j: f64,
    xi_inv: f64,
    beta_over_xi: f64,
    kappa: f64,
    kappa_over_pi: f64,
    iterations: usize,
    status: String,
}

pub fn scan(a: &ScanArgs) -> CliResult<()> {
    if !(a.t > 0.0) || a.points == 0 || a.delta_max < a.delta_min {
        return Err(CliError::Usage("need --t > 0, --points >= 1 and delta-min <= delta-max".into()));
    }
    let cfg = nlie_config(&a.solver);
    let deltas: Vec<f64> = (0..a.points)
        .map(|k| if a.points == 1 { a.delta_min } else { a.delta_min + (a.delta_max - a.delta_min) * k as f64 / (a.points - 1) as f64 })
        .collect();
    let rows: Vec<ScanRow> = deltas
        .par_iter()
        .map(|&delta| {
            let blank = |gamma: f64, status: &str| ScanRow {
                delta,
                gamma,
                t: a.t,
                j: a.j,
                xi_inv: f64::NAN,
                beta_over_xi: f64::NAN,
                kappa: f64::NAN,
                kappa_over_pi: f64::NAN,
                iterations: 0,
                status: status.to_string(),
            };
            let regime = match Regime::from_delta(delta) {
                Ok(r) => r,
                Err(_) if (delta - 1.0).abs() < 1e-9 => return blank(f64::NAN, "excluded"),
                Err(_) => return blank(f64::NAN, "invalid"),
            };
            match ironface::nlie::correlation(1.0 / a.t, a.j, delta, &cfg) {
                Ok(p) => ScanRow {
                    delta,
                    gamma: regime.gamma,
                    t: a.t,
                    j: a.j,
                    xi_inv: p.xi_inv,
                    beta_over_xi: p.beta_over_xi,
                    kappa: p.kappa,
                    kappa_over_pi: p.kappa_over_pi,
                    iterations: p.iterations,
                    status: "ok".into(),
                },
                Err(IronfaceError::ConvergenceFailure { .. }) => blank(regime.gamma, "no-convergence"),
                Err(_) => blank(regime.gamma, "unsupported"),
            }
        })
        .collect();
    emit(&rows, &a.output)?;
    let failed = rows.iter().filter(|r| r.status == "no-convergence").count();
    if failed > 0 {
        return Err(CliError::PartialFailure(failed));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct FssRow {
    #[serde(rename = "L")]
    l: usize,
    vacuum_class: bool,
    ln_lambda_row: f64,
    energy_per_site: f64,
    gap: f64,
    h_estimate: f64,
    e_inf: Option<f64>,
    c_estimate: Option<f64>,
    h_leading: Option<f64>,
    velocity: f64,
    h_pred: f64,
}

pub fn fss(a: &FssArgs) -> CliResult<()> {
    let delta = a.model.delta().map_err(CliError::Usage)?;
    let regime = Regime::from_delta(delta)?;
    let r = finite_size_scan(&a.sizes, delta)?;
    let (hp, hm) = exponent_h(0, 0, PI / 2.0, regime.gamma)?;
    let rows: Vec<FssRow> = (0..r.sizes.len())
        .map(|i| FssRow {
            l: r.sizes[i],
            vacuum_class: r.vacuum_class[i],
            ln_lambda_row: r.ln_lambda_row[i],
            energy_per_site: r.energy_per_site[i],
            gap: r.gaps[i],
            h_estimate: r.h_estimates[i],
            e_inf: r.e_inf,
            c_estimate: r.c_estimate,
            h_leading: r.h_leading,
            velocity: r.velocity,
            h_pred: hp + hm,
        })
        .collect();
    emit(&rows, &a.output)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct CheckRow {
    check: String,
    value: f64,
    threshold: f64,
    passed: bool,
}

fn random_parameter(rng: &mut StdRng, regime: &Regime) -> Complex64 {
    let scale = regime.gamma.min(PI - regime.gamma);
    Complex64::new(rng.random_range(-0.45..0.45) * scale, rng.random_range(-0.5..0.5))
}

pub fn verify(a: &VerifyArgs) -> CliResult<()> {
    let delta = a.model.delta().map_err(CliError::Usage)?;
    let regime = Regime::from_delta(delta)?;
    let mut rng = StdRng::seed_from_u64(a.seed);
    let mut rows = Vec::new();
    let mut push = |check: &str, value: f64, threshold: f64| {
        rows.push(CheckRow { check: check.into(), value, threshold, passed: value.is_finite() && value < threshold });
    };
    let (mut ybe, mut unit) = (0.0f64, 0.0f64);
    for _ in 0..a.samples.max(1) {
        let l = random_parameter(&mut rng, &regime);
        let m = random_parameter(&mut rng, &regime);
        ybe = ybe.max(check_yang_baxter(l, m, &regime)?);
        unit = unit.max(check_unitarity(l, &regime)?.0);
    }
    push("yang_baxter", ybe, 1e-12);
    push("unitarity", unit, 1e-12);
    push("initial_condition", check_initial_condition(&regime)?, 1e-12);
    let mut comm = 0.0f64;
    for _ in 0..5 {
        let l = random_parameter(&mut rng, &regime);
        let m = random_parameter(&mut rng, &regime);
        let ta = operators::build_t_irf(l, a.sites, &regime, false)?;
        let tb = operators::build_t_irf(m, a.sites, &regime, false)?;
        comm = comm.max(commutator_norm(&ta.matrix, &tb.matrix));
    }
    push("transfer_commutator", comm, 1e-10);
    push("hamiltonian_fit", operators::hamiltonian_from_transfer(a.sites, delta)?.residual, 1e-6);
    if a.sites % 2 == 0 {
        let rep = verify_vertex_irf_map(a.sites, delta)?;
        push("spectral_map", rep.max_mismatch, 1e-10);
        push("spectral_map_transfer", rep.transfer_mismatch, 1e-10);
    }
    if a.bethe_check {
        let pts = ironface::bethe::bethe_cross_check(0.2, 0.3, 6)?;
        push("bethe_vs_dense_qtm", pts.iter().map(|p| p.distance).fold(0.0, f64::max), 1e-8);
    }
    emit(&rows, &a.output)?;
    let failed: Vec<&str> = rows.iter().filter(|r| !r.passed).map(|r| r.check.as_str()).collect();
    if !failed.is_empty() {
        return Err(CliError::Verification(failed.join(", ")));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EigenRow {
    index: usize,
    re: f64,
    im: f64,
}

#[derive(Debug, Serialize)]
struct MappingRow {
    #[serde(rename = "L")]
    l: usize,
    delta: f64,
    max_mismatch: f64,
    transfer_mismatch: f64,
    irf_dim: usize,
    even_dim_phi0: usize,
    even_dim_phi_half_pi: usize,
}

fn build_operator(a: &EdArgs, delta: f64, regime: &Regime) -> CliResult<DenseOperator> {
    let lambda = Complex64::new(a.lambda, a.lambda_im);
    Ok(match a.operator {
        OperatorKind::HIrf => operators::build_h_irf(a.sites, delta)?,
        OperatorKind::H8v => operators::build_h_8v(a.sites, delta, a.gamma8v)?,
        OperatorKind::HXxz => operators::build_h_xxz(a.sites, delta, a.phi)?,
        OperatorKind::TIrf => operators::build_t_irf(lambda, a.sites, regime, false)?,
        OperatorKind::TIrfBar => operators::build_t_irf(lambda, a.sites, regime, true)?,
        OperatorKind::Qtm => operators::build_qtm(0.0, a.trotter, a.beta, regime, a.model.j)?,
    })
}

pub fn ed(a: &EdArgs) -> CliResult<()> {
    let delta = a.model.delta().map_err(CliError::Usage)?;
    let regime = Regime::from_delta(delta)?;
    if a.mapping {
        let r = verify_vertex_irf_map(a.sites, delta)?;
        let row = MappingRow {
            l: a.sites,
            delta,
            max_mismatch: r.max_mismatch,
            transfer_mismatch: r.transfer_mismatch,
            irf_dim: r.irf_dim,
            even_dim_phi0: r.even_sector_dims.0,
            even_dim_phi_half_pi: r.even_sector_dims.1,
        };
        emit(&[row], &a.output)?;
        return Ok(());
    }
    let op = build_operator(a, delta, &regime)?;
    if let Some(path) = &a.export {
        write_atomic(path, op.to_matrix_market().as_bytes())?;
    }
    let spec = eigen_decompose(&op)?;
    let rows: Vec<EigenRow> = spec.eigenvalues.iter().enumerate().map(|(index, z)| EigenRow { index, re: z.re, im: z.im }).collect();
    emit(&rows, &a.output)?;
    Ok(())
}
