use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

/// Face six-vertex model toolkit: lattice checks, exact diagonalization,
/// and finite-temperature NLIE thermodynamics and correlations.
#[derive(Debug, Parser)]
#[command(name = "ironface", version, subcommand_required = true, arg_required_else_help = true, args_override_self = true)]
pub struct Cli {
    /// Flat `key = value` file; keys are long flag names, flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for sweeps (the IRONFACE_THREADS variable caps this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weight identities, commuting transfer matrices, Hamiltonian fit and the vertex/face spectral map.
    Verify(VerifyArgs),
    /// Dense operators: spectra, the mapping report, or a matrix-market export.
    Ed(EdArgs),
    /// Free energy, energy, entropy and specific heat over a temperature grid.
    Thermo(SweepArgs),
    /// Correlation length and oscillation wave vector over a temperature grid.
    Corr(SweepArgs),
    /// Correlation data over a range of anisotropies at fixed T and J.
    Scan(ScanArgs),
    /// Finite-size scaling of the row transfer matrix (central charge, exponent).
    Fss(FssArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Anisotropy Δ.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "gamma")]
    pub delta: Option<f64>,
    /// Crossing parameter γ of the critical regime (Δ = cos γ).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Ising coupling J of the term J Σᶻ.
    #[arg(long = "j", alias = "j-coupling", default_value_t = 0.0, allow_hyphen_values = true)]
    pub j: f64,
}

impl ModelArgs {
    pub fn delta(&self) -> Result<f64, String> {
        match (self.delta, self.gamma) {
            (Some(d), None) => Ok(d),
            (None, Some(g)) if g > 0.0 && g < std::f64::consts::PI => Ok(g.cos()),
            (None, Some(g)) => Err(format!("--gamma must lie in (0, pi), got {g}")),
            (Some(_), Some(_)) => Err("--delta and --gamma are mutually exclusive".into()),
            (None, None) => Err("one of --delta or --gamma is required".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file (written atomically); standard output when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Omit the header line carrying version and timestamp.
    #[arg(long)]
    pub no_meta: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Grid points on the truncated line (power of two).
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Half-width of the truncated line.
    #[arg(long)]
    pub x_max: Option<f64>,
    /// Grid points on the circle in the massive regime (power of two).
    #[arg(long)]
    pub circle_points: Option<usize>,
    /// Offset of the shifted-kernel contour from the pole line.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Initial under-relaxation factor in (0, 1].
    #[arg(long)]
    pub mixing: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TemperatureArgs {
    /// A single temperature (instead of a grid).
    #[arg(long = "t", conflicts_with_all = ["tmin", "tmax", "tpoints"])]
    pub t: Option<f64>,
    #[arg(long)]
    pub tmin: Option<f64>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub tpoints: usize,
    /// Logarithmic spacing of the grid.
    #[arg(long)]
    pub log: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Chain length for the operator checks.
    #[arg(short = 'L', long = "sites", default_value_t = 4)]
    pub sites: usize,
    /// Random spectral parameters per identity.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also compare Bethe-ansatz eigenvalues with the dense quantum transfer matrix.
    #[arg(long, hide = true)]
    pub bethe_check: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OperatorKind {
    /// Three-spin face chain.
    HIrf,
    /// Three-spin chain with the eight-vertex perturbation.
    H8v,
    /// Twisted XXZ chain.
    HXxz,
    /// Row transfer matrix of the face model.
    TIrf,
    /// Conjugated row transfer matrix.
    TIrfBar,
    /// Quantum transfer matrix (size 2^N).
    Qtm,
}

#[derive(Debug, Clone, Args)]
pub struct EdArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(short = 'L', long = "sites", default_value_t = 4)]
    pub sites: usize,
    #[arg(long, value_enum, default_value_t = OperatorKind::HIrf)]
    pub operator: OperatorKind,
    /// Twist of the XXZ chain.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub phi: f64,
    /// Eight-vertex coupling of h-8v.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub gamma8v: f64,
    /// Spectral parameter of the transfer matrices (real part).
    #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda_im: f64,
    /// Trotter number of the quantum transfer matrix.
    #[arg(long, default_value_t = 4)]
    pub trotter: usize,
    /// Inverse temperature of the quantum transfer matrix.
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// Report the vertex/face spectral mapping instead of a spectrum.
    #[arg(long)]
    pub mapping: bool,
    /// Write the operator as a matrix-market text file.
    #[arg(long, value_name = "FILE")]
    pub export: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub temperature: TemperatureArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[arg(long = "j", default_value_t = 0.0, allow_hyphen_values = true)]
    pub j: f64,
    /// Temperature.
    #[arg(long = "t")]
    pub t: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_max: f64,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FssArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Even chain lengths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "8,10,12,14")]
    pub sizes: Vec<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}
