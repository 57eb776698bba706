//! `hermite` command line: argument parsing, configuration merging and
//! dispatch into `hermite-core`.

pub mod config;
pub mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{ConfigError, RunConfig};
use hermite_core::basis::{
    hermite_derivative_1d, hermite_eval, hermite_functions_1d, synthesize, synthesize_on_grid, HermiteExpansion,
    MultiIndex, Sign, SpatialGrid,
};
use hermite_core::gamma::{gamma_norm_hilbert, gamma_norm_mc, h_norm, rank_one, DiscreteGammaOperator, GammaSampler, TimeGrid};
use hermite_core::kernels::{heat_kernel, ShiftedOperator, SubordinationRule};
use hermite_core::semigroups::{apply_semigroup, gfunction_at, maximal_norm, riesz, SemigroupKind};
use hermite_core::spaces::{
    area_integral, bmo_norm, carleson_functional, critical_radius, h1_norm, h1_norm_sampled, random_atoms, validate_atom,
    AtomKind, BallSpec, ConeConfig, MaximalKind, SampledHeatFlow,
};
use hermite_core::verify::{self, CheckReport, KernelKind, Space};
use output::{write_reports, write_scalar, Format, Table};
use std::io::{self, Write};
use std::path::PathBuf;

const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(name = "hermite", version, about = "Hermite-operator semigroups, square functions and H1/BMO estimators")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; flags below override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Include runtimes in verification reports.
    #[arg(long, global = true)]
    pub timings: bool,
    /// Spatial dimension.
    #[arg(long = "n", global = true)]
    pub n: Option<usize>,
    /// Degree cap.
    #[arg(long = "K", id = "degree", global = true)]
    pub k: Option<usize>,
    /// Value dimension of the Banach model.
    #[arg(long = "d", global = true)]
    pub d: Option<usize>,
    /// Exponent of the ℓ^q Banach model.
    #[arg(long = "q", global = true)]
    pub q: Option<f64>,
    /// Spatial grid half-width.
    #[arg(long = "R", global = true)]
    pub grid_r: Option<f64>,
    /// Spatial grid spacing.
    #[arg(long = "h", global = true)]
    pub grid_h: Option<f64>,
    #[arg(long, global = true)]
    pub tmin: Option<f64>,
    #[arg(long, global = true)]
    pub tmax: Option<f64>,
    /// Number of time nodes.
    #[arg(long = "N", global = true)]
    pub time_n: Option<usize>,
    /// Subordination quadrature nodes.
    #[arg(long = "Q", global = true)]
    pub quad_q: Option<usize>,
    /// Monte-Carlo samples.
    #[arg(long = "M", global = true)]
    pub mc_m: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

impl GlobalArgs {
    fn overrides(&self) -> RunConfig {
        RunConfig {
            n: self.n,
            k: self.k,
            d: self.d,
            q: self.q,
            grid_r: self.grid_r,
            grid_h: self.grid_h,
            tmin: self.tmin,
            tmax: self.tmax,
            time_n: self.time_n,
            quad_q: self.quad_q,
            mc_m: self.mc_m,
            seed: self.seed,
        }
    }

    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let base = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let cfg = base.merged(&self.overrides());
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hermite functions h_k and their derivatives.
    #[command(subcommand)]
    Basis(BasisCmd),
    /// Point values of the heat, Poisson, g and ladder kernels.
    Kernel(KernelArgs),
    /// Semigroups, g-functions, maximal functions and Riesz transforms of 1-d expansions.
    #[command(subcommand)]
    Semigroup(SemigroupCmd),
    /// γ-radonifying norms in ℓ^q models.
    #[command(subcommand)]
    Gamma(GammaCmd),
    /// Critical radius, atoms and H1/BMO estimators.
    #[command(subcommand)]
    Spaces(SpacesCmd),
    /// Verification suites; exits 1 when a check fails.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Debug, Subcommand)]
pub enum BasisCmd {
    /// h_k(x) for a multi-index k.
    Eval {
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<u32>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
    },
    /// h_k(x) and h_k'(x) for k = 0..=K in one dimension.
    Table {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelChoice {
    Heat,
    Poisson,
    G,
    Ladder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Plus,
    Minus,
}

impl From<SignArg> for Sign {
    fn from(s: SignArg) -> Sign {
        match s {
            SignArg::Plus => Sign::Plus,
            SignArg::Minus => Sign::Minus,
        }
    }
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(value_enum)]
    pub kind: KernelChoice,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub x: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub y: Vec<f64>,
    #[arg(long)]
    pub t: f64,
    /// Shift of L + α.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Ladder coordinate, zero-based.
    #[arg(long, default_value_t = 0)]
    pub j: usize,
    #[arg(long, value_enum, default_value_t = SignArg::Plus)]
    pub sign: SignArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SemigroupChoice {
    Heat,
    Poisson,
}

impl From<SemigroupChoice> for SemigroupKind {
    fn from(s: SemigroupChoice) -> SemigroupKind {
        match s {
            SemigroupChoice::Heat => SemigroupKind::Heat,
            SemigroupChoice::Poisson => SemigroupKind::Poisson,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum SemigroupCmd {
    /// e^{-t(L+α)} f or e^{-t√(L+α)} f at points.
    Apply {
        #[arg(long, value_enum)]
        kind: SemigroupChoice,
        /// Hermite coefficients c_0, c_1, ...
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        coeffs: Vec<f64>,
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
    },
    /// t ↦ t∂_t e^{-t√(L+α)} f(x) over the time grid.
    Gfunction {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        coeffs: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
    },
    /// sup_t |T_t f(x)| over the time grid.
    Maximal {
        #[arg(long, value_enum)]
        kind: SemigroupChoice,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        coeffs: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
    },
    /// Coefficients of the Riesz transform (∂ ± x) L^{-1/2} f.
    Riesz {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        coeffs: Vec<f64>,
        #[arg(long, value_enum, default_value_t = SignArg::Plus)]
        sign: SignArg,
    },
}

#[derive(Debug, Subcommand)]
pub enum GammaCmd {
    /// γ-norm of t e^{-t} ⊗ b against ‖t e^{-t}‖_H ‖b‖_q.
    RankOne {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        b: Vec<f64>,
    },
    /// γ-norm of a d × N matrix given as rows separated by `;`.
    Matrix {
        #[arg(long, allow_hyphen_values = true)]
        rows: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum SpacesCmd {
    /// Critical radius ρ(x).
    Rho {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
    },
    /// Heat-maximal H1 norm of a 1-d expansion.
    H1 {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        coeffs: Vec<f64>,
    },
    /// BMO estimate of a 1-d expansion.
    Bmo {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        coeffs: Vec<f64>,
    },
    /// Random atoms with their validation status and H1 norms.
    Atoms {
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 4.0)]
        max_center: f64,
    },
    /// Area integral of the g-function over the cone at x.
    Area {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        coeffs: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
    },
    /// Carleson-box functional at x.
    Carleson {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        coeffs: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpaceArg {
    L2,
    H1,
    Bmo,
}

impl From<SpaceArg> for Space {
    fn from(s: SpaceArg) -> Space {
        match s {
            SpaceArg::L2 => Space::L2,
            SpaceArg::H1 => Space::H1,
            SpaceArg::Bmo => Space::Bmo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnvelopeArg {
    Heat,
    Poisson,
    G,
    Gh,
    Ladder,
    Gradient,
}

impl From<EnvelopeArg> for KernelKind {
    fn from(k: EnvelopeArg) -> KernelKind {
        match k {
            EnvelopeArg::Heat => KernelKind::Heat,
            EnvelopeArg::Poisson => KernelKind::Poisson,
            EnvelopeArg::G => KernelKind::G,
            EnvelopeArg::Gh => KernelKind::GH,
            EnvelopeArg::Ladder => KernelKind::Ladder,
            EnvelopeArg::Gradient => KernelKind::Gradient,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    /// Eigenrelation and ladder residuals over |k| ≤ K, |x| ≤ 6.
    EigenLadder,
    /// Poisson, g and heat kernel quadrature against spectral factors.
    KernelSpectral {
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5, 1.0, 2.0, 5.0])]
        t: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.0, 2.0])]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        kmax: usize,
    },
    /// Closed-form heat kernel against its truncated spectral sum.
    HeatSpectral {
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5, 1.0, 2.0, 5.0])]
        t: Vec<f64>,
        #[arg(long, default_value_t = 60)]
        kmax: usize,
    },
    /// Empirical kernel envelope constants and their refinement stability.
    Envelopes {
        #[arg(long, value_enum)]
        kind: Option<EnvelopeArg>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
    },
    /// Square-function pairing of h_0 with h_0 and with h_1.
    Polarization {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
        /// Truncation interval [1/N, N] of the second variant.
        #[arg(long, default_value_t = 1000.0)]
        trunc: f64,
    },
    /// ‖Gf‖/‖f‖ = 1/2 over random expansions.
    Plancherel {
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Ladder transforms against g-functions of Riesz transforms.
    Identities {
        /// Coordinate, zero-based.
        #[arg(long, default_value_t = 0)]
        j: usize,
    },
    /// Monte-Carlo γ-norms against the Hilbert and rank-one closed forms.
    Gamma,
    /// Critical-radius, BMO and H1 spot values.
    Spaces,
    /// Norm-equivalence ratios over the default families.
    Equivalence {
        #[arg(long, value_enum)]
        space: Option<SpaceArg>,
    },
    /// Uniform H1 bound over random atoms.
    Atoms {
        #[arg(long, default_value_t = 50)]
        count: usize,
    },
    /// Every suite with default settings.
    All,
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Compute(hermite_core::Error),
    Usage(String),
    Io(io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Compute(e) => write!(f, "{e}"),
            CliError::Usage(s) => write!(f, "{s}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<hermite_core::Error> for CliError {
    fn from(e: hermite_core::Error) -> Self {
        CliError::Compute(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

/// What a command produced.
pub enum Output {
    Scalar(f64),
    Table(Table),
    Reports(Vec<CheckReport>),
}

impl Output {
    fn passed(&self) -> bool {
        match self {
            Output::Reports(r) => r.iter().all(|r| r.pass),
            _ => true,
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 on success, 1 when a verification check fails, 2 on usage or
/// configuration errors.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            let passed = out.passed();
            let written = match &cli.global.out {
                Some(path) => std::fs::File::create(path)
                    .map(io::BufWriter::new)
                    .and_then(|mut f| emit(&out, &mut f, &cli.global).and_then(|_| f.flush())),
                None => emit(&out, stdout, &cli.global),
            };
            match written {
                Err(e) => {
                    let _ = writeln!(stderr, "error: {}", CliError::Io(e));
                    2
                }
                Ok(()) if passed => 0,
                Ok(()) => 1,
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn emit(out: &Output, w: &mut dyn Write, global: &GlobalArgs) -> io::Result<()> {
    match out {
        Output::Scalar(x) => write_scalar(w, *x, global.format),
        Output::Table(t) => t.write(w, global.format),
        Output::Reports(r) => write_reports(w, r, global.format, global.timings),
    }
}

pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    let cfg = cli.global.resolve()?;
    match &cli.command {
        Command::Basis(cmd) => basis(cmd, &cfg),
        Command::Kernel(args) => kernel(args, &cfg),
        Command::Semigroup(cmd) => semigroup(cmd, &cfg),
        Command::Gamma(cmd) => gamma(cmd, &cfg),
        Command::Spaces(cmd) => spaces(cmd, &cfg),
        Command::Verify(cmd) => verify_cmd(cmd, &cfg).map(Output::Reports),
    }
}

fn check_dim(cfg: &RunConfig, found: usize) -> Result<(), CliError> {
    match cfg.n {
        Some(n) if n != found => Err(CliError::Usage(format!("expected {n} coordinates (n = {n}), found {found}"))),
        _ => Ok(()),
    }
}

/// Coefficient lists describe one-dimensional scalar expansions.
fn expansion(coeffs: &[f64], cfg: &RunConfig) -> Result<HermiteExpansion, CliError> {
    check_dim(cfg, 1)?;
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(CliError::Usage("coefficients must be finite".into()));
    }
    Ok(HermiteExpansion::from_dense_1d(coeffs))
}

fn basis(cmd: &BasisCmd, cfg: &RunConfig) -> Result<Output, CliError> {
    match cmd {
        BasisCmd::Eval { k, x } => {
            if k.len() != x.len() {
                return Err(CliError::Usage(format!("k has {} components but x has {}", k.len(), x.len())));
            }
            check_dim(cfg, x.len())?;
            Ok(Output::Scalar(hermite_eval(&MultiIndex::new(k.clone()), x)))
        }
        BasisCmd::Table { x } => {
            check_dim(cfg, 1)?;
            let kmax = cfg.k_or(10);
            let h = hermite_functions_1d(kmax, *x);
            let mut t = Table::new(&["k", "x", "value", "derivative"]);
            for (k, v) in h.iter().enumerate() {
                t.push(vec![k.into(), (*x).into(), (*v).into(), hermite_derivative_1d(k, *x).into()]);
            }
            Ok(Output::Table(t))
        }
    }
}

fn kernel(args: &KernelArgs, cfg: &RunConfig) -> Result<Output, CliError> {
    if args.x.len() != args.y.len() {
        return Err(CliError::Usage(format!("x has {} coordinates but y has {}", args.x.len(), args.y.len())));
    }
    check_dim(cfg, args.x.len())?;
    let n = args.x.len();
    let rule = SubordinationRule::new(cfg.nodes_or(hermite_core::kernels::DEFAULT_NODES))?;
    let op = ShiftedOperator::new(args.alpha, n)?;
    let value = match args.kind {
        KernelChoice::Heat => (-args.alpha * args.t).exp() * heat_kernel(&args.x, &args.y, args.t)?,
        KernelChoice::Poisson => rule.poisson_kernel(&args.x, &args.y, args.t, &op)?,
        KernelChoice::G => rule.g_kernel(&args.x, &args.y, args.t, &op)?,
        KernelChoice::Ladder => rule.ladder_kernel(&args.x, &args.y, args.t, args.j, args.sign.into())?,
    };
    Ok(Output::Scalar(value))
}

fn semigroup(cmd: &SemigroupCmd, cfg: &RunConfig) -> Result<Output, CliError> {
    match cmd {
        SemigroupCmd::Apply {
            kind,
            coeffs,
            t,
            x,
            alpha,
        } => {
            let e = expansion(coeffs, cfg)?;
            let moved = apply_semigroup(&e, (*kind).into(), *t, *alpha)?;
            let mut table = Table::new(&["x", "t", "value"]);
            for &xi in x {
                table.push(vec![xi.into(), (*t).into(), synthesize(&moved, &[xi])[0].into()]);
            }
            Ok(Output::Table(table))
        }
        SemigroupCmd::Gfunction { coeffs, x, alpha } => {
            let e = expansion(coeffs, cfg)?;
            let times = cfg.times_or(TimeGrid::default())?;
            let values = gfunction_at(&e, *alpha, &[*x], &times)?;
            let mut table = Table::new(&["x", "t", "value"]);
            for (t, v) in times.nodes().iter().zip(&values) {
                table.push(vec![(*x).into(), (*t).into(), (*v).into()]);
            }
            Ok(Output::Table(table))
        }
        SemigroupCmd::Maximal {
            kind,
            coeffs,
            x,
            alpha,
        } => {
            let e = expansion(coeffs, cfg)?;
            let times = cfg.times_or(TimeGrid::default())?;
            let model = cfg.model()?;
            let mut table = Table::new(&["x", "value"]);
            for &xi in x {
                table.push(vec![xi.into(), maximal_norm(&e, &[xi], (*kind).into(), *alpha, model, &times)?.into()]);
            }
            Ok(Output::Table(table))
        }
        SemigroupCmd::Riesz { coeffs, sign } => {
            let e = expansion(coeffs, cfg)?;
            let r = riesz(&e, 0, (*sign).into())?;
            let mut table = Table::new(&["k", "coefficient"]);
            for k in 0..=r.max_degree() {
                table.push(vec![k.into(), r.coeff(&MultiIndex::scalar(k as u32)).into()]);
            }
            Ok(Output::Table(table))
        }
    }
}

fn gamma(cmd: &GammaCmd, cfg: &RunConfig) -> Result<Output, CliError> {
    let m = cfg.samples_or(verify::GAMMA_SAMPLES);
    let seed = cfg.seed_or(DEFAULT_SEED);
    match cmd {
        GammaCmd::RankOne { b } => {
            check_d(cfg, b.len())?;
            let model = hermite_core::gamma::BanachModel::new(b.len(), cfg.q.unwrap_or(2.0))?;
            let times = cfg.times_or(TimeGrid::default())?;
            let profile: Vec<f64> = times.nodes().iter().map(|t| t * (-t).exp()).collect();
            let op = rank_one(&profile, b, model, &times)?;
            let est = gamma_norm_mc(&op, m, seed)?;
            let exact = h_norm(&profile, &times) * model.norm(b);
            let mut table = Table::new(&["estimate", "std_error", "exact", "samples"]);
            table.push(vec![est.estimate.into(), est.std_error.into(), exact.into(), est.samples.into()]);
            Ok(Output::Table(table))
        }
        GammaCmd::Matrix { rows } => {
            let parsed: Result<Vec<Vec<f64>>, _> = rows
                .split(';')
                .map(|r| r.split(',').map(|v| v.trim().parse::<f64>()).collect())
                .collect();
            let parsed = parsed.map_err(|e| CliError::Usage(format!("cannot parse --rows: {e}")))?;
            let d = parsed.len();
            let cols = parsed[0].len();
            if cols == 0 || parsed.iter().any(|r| r.len() != cols) {
                return Err(CliError::Usage("--rows needs equally long, nonempty rows".into()));
            }
            check_d(cfg, d)?;
            let model = hermite_core::gamma::BanachModel::new(d, cfg.q.unwrap_or(2.0))?;
            let matrix = hermite_core::nalgebra::DMatrix::from_fn(d, cols, |i, j| parsed[i][j]);
            let op = DiscreteGammaOperator::from_matrix(model, matrix)?;
            let est = gamma_norm_mc(&op, m, seed)?;
            let mut table = Table::new(&["estimate", "std_error", "hilbert_schmidt", "samples"]);
            table.push(vec![
                est.estimate.into(),
                est.std_error.into(),
                gamma_norm_hilbert(&op).into(),
                est.samples.into(),
            ]);
            Ok(Output::Table(table))
        }
    }
}

fn check_d(cfg: &RunConfig, found: usize) -> Result<(), CliError> {
    match cfg.d {
        Some(d) if d != found => Err(CliError::Usage(format!("expected value dimension d = {d}, found {found}"))),
        _ => Ok(()),
    }
}

fn spaces(cmd: &SpacesCmd, cfg: &RunConfig) -> Result<Output, CliError> {
    match cmd {
        SpacesCmd::Rho { x } => {
            check_dim(cfg, x.len())?;
            Ok(Output::Scalar(critical_radius(x)))
        }
        SpacesCmd::H1 { coeffs } => {
            let e = expansion(coeffs, cfg)?;
            let grid = cfg.grid_or(1, SpatialGrid::default_for(1, e.max_degree()))?;
            let times = cfg.times_or(TimeGrid::default())?;
            Ok(Output::Scalar(h1_norm(&e, cfg.model()?, &grid, &times)?))
        }
        SpacesCmd::Bmo { coeffs } => {
            let e = expansion(coeffs, cfg)?;
            let grid = cfg.grid_or(1, SpatialGrid::new(8.0, 0.02, 1)?)?;
            let est = bmo_norm(&synthesize_on_grid(&e, &grid), 1, &grid, cfg.model()?, &BallSpec::default())?;
            let mut table = Table::new(&["value", "oscillation", "size", "skipped"]);
            table.push(vec![est.value.into(), est.oscillation.into(), est.size.into(), est.skipped.into()]);
            Ok(Output::Table(table))
        }
        SpacesCmd::Atoms { count, max_center } => {
            check_dim(cfg, 1)?;
            let model = cfg.model()?;
            let grid = cfg.grid_or(1, SpatialGrid::new(5.0, 0.005, 1)?)?;
            let eval = SpatialGrid::new(10.0, 0.02, 1)?;
            let times = cfg.times_or(TimeGrid::new(1e-4, 40.0, 64)?)?;
            let atoms = random_atoms(*count, cfg.seed_or(DEFAULT_SEED), &grid, model, *max_center)?;
            let mut table = Table::new(&["index", "kind", "center", "radius", "valid", "h1"]);
            for (i, a) in atoms.iter().enumerate() {
                let valid = validate_atom(a, model)?.is_valid();
                let flow = SampledHeatFlow::from_atom(a);
                let h1 = h1_norm_sampled(&flow, model, &eval, &times, MaximalKind::Heat)?;
                let kind = match a.kind() {
                    AtomKind::Cancel => "cancel",
                    AtomKind::Local => "local",
                };
                table.push(vec![i.into(), kind.into(), a.center()[0].into(), a.radius().into(), valid.into(), h1.into()]);
            }
            Ok(Output::Table(table))
        }
        SpacesCmd::Area { coeffs, x, alpha } => {
            let e = expansion(coeffs, cfg)?;
            Ok(Output::Scalar(area_integral(&e, &[*x], *alpha, &ConeConfig::default())?))
        }
        SpacesCmd::Carleson { coeffs, x, alpha } => {
            let e = expansion(coeffs, cfg)?;
            Ok(Output::Scalar(carleson_functional(
                &e,
                &[*x],
                *alpha,
                &BallSpec::default(),
                &ConeConfig::default(),
            )?))
        }
    }
}

fn verify_cmd(cmd: &VerifyCmd, cfg: &RunConfig) -> Result<Vec<CheckReport>, CliError> {
    let seed = cfg.seed_or(DEFAULT_SEED);
    let reports = match cmd {
        VerifyCmd::EigenLadder => {
            let k = cfg.k_or(20);
            match cfg.n {
                Some(n) => vec![verify::check_eigen_ladder(k, n)?],
                None => vec![verify::check_eigen_ladder(k, 1)?, verify::check_eigen_ladder(k, 2)?],
            }
        }
        VerifyCmd::KernelSpectral { t, alpha, kmax } => {
            check_dim(cfg, 1)?;
            vec![verify::check_kernel_vs_spectral(t, alpha, *kmax)?]
        }
        VerifyCmd::HeatSpectral { t, kmax } => {
            check_dim(cfg, 1)?;
            vec![verify::check_heat_vs_spectral_sum(t, *kmax)?]
        }
        VerifyCmd::Envelopes { kind, alpha } => {
            check_dim(cfg, 1)?;
            let base = verify::BoundRegion::default();
            let region = verify::BoundRegion::new(base.extent, base.spacing, cfg.times_or(base.times.clone())?, *alpha, base.c)?;
            let kinds: Vec<KernelKind> = match kind {
                Some(k) => vec![(*k).into()],
                None => KernelKind::ALL.to_vec(),
            };
            kinds
                .into_iter()
                .map(|k| verify::kernel_bound_ratio(k, &region))
                .collect::<hermite_core::Result<Vec<_>>>()?
        }
        VerifyCmd::Polarization { alpha, trunc } => {
            check_dim(cfg, 1)?;
            let grid = cfg.grid_or(1, SpatialGrid::new(10.0, 0.01, 1)?)?;
            let times = cfg.times_or(TimeGrid::default())?;
            let h0 = HermiteExpansion::from_dense_1d(&[1.0]);
            let h1 = HermiteExpansion::from_dense_1d(&[0.0, 1.0]);
            let mut same = verify::check_polarization(&h0, &h0, *alpha, *trunc, &grid, &times)?;
            let mut orth = verify::check_polarization(&h0, &h1, *alpha, *trunc, &grid, &times)?;
            same.name = format!("polarization (h0, h0) alpha={alpha}");
            orth.name = format!("polarization (h0, h1) alpha={alpha}");
            vec![same, orth]
        }
        VerifyCmd::Plancherel { count } => {
            check_dim(cfg, 1)?;
            let family = verify::random_family(*count, 1, cfg.k_or(30), seed);
            let grid = cfg.grid_or(1, SpatialGrid::new(12.0, 0.02, 1)?)?;
            vec![verify::check_plancherel(&family, 0.0, &grid, &cfg.times_or(TimeGrid::default())?)?]
        }
        VerifyCmd::Identities { j } => vec![verify::check_operator_identities(cfg.k_or(15), cfg.n_or(1), *j, seed)?],
        VerifyCmd::Gamma => {
            let m = cfg.samples_or(verify::GAMMA_SAMPLES);
            let seeds: Vec<u64> = (0..10).map(|i| seed.wrapping_add(i)).collect();
            vec![
                verify::check_gamma_hilbert(m, &seeds)?,
                verify::check_gamma_rank_one(&[1.5, 2.0, 4.0], m, seed)?,
            ]
        }
        VerifyCmd::Spaces => vec![verify::check_space_spot_values()?],
        VerifyCmd::Equivalence { space } => {
            check_dim(cfg, 1)?;
            let sampler = GammaSampler::new(hermite_core::gamma::BanachModel::scalar(), cfg.samples_or(2), seed)?;
            let spaces: Vec<Space> = match space {
                Some(s) => vec![(*s).into()],
                None => vec![Space::L2, Space::H1, Space::Bmo],
            };
            spaces
                .into_iter()
                .map(|s| {
                    verify::equivalence_suite(
                        s,
                        &verify::default_family(s, seed)?,
                        0.0,
                        &sampler,
                        &verify::EquivalenceConfig::for_space(s),
                    )
                })
                .collect::<hermite_core::Result<Vec<_>>>()?
        }
        VerifyCmd::Atoms { count } => {
            check_dim(cfg, 1)?;
            vec![verify::atom_bound_suite(*count, seed, cfg.model()?, &verify::AtomSuiteConfig::default())?]
        }
        VerifyCmd::All => verify::default_suite(seed)?,
    };
    Ok(reports)
}
