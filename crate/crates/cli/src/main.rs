mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use zeitlin_core::algebra::{eigenbasis_build, inner};
use zeitlin_core::dynamics::{
    evolve_streaming, perturbed_initial, LyapunovReport, MonitorConfig, MonitorRow, StepStats,
};
use zeitlin_core::io::{write_json, MatrixJson};
use zeitlin_core::random::unit_su;
use zeitlin_core::render::render;
use zeitlin_core::stability::{certify, CertifyOptions};
use zeitlin_core::steady::{eigen_state, newton_functional_state, rigidity_report, zonal_coeffs, zonal_state, Provenance, SteadyState};
use zeitlin_core::{AlgebraElement, CMatrix, Error, SpinBasis, Tolerances};

use config::{EvolveConfig, ExperimentConfig, RenderConfig, SteadyConfig};

#[derive(Parser)]
#[command(name = "zeitlin", version, about = "Steady states, stability certificates and isospectral integration for the su(n) Euler model")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Seed for random initial data and perturbations.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Primary tolerance: Newton residual (steady), steady-pair gate
    /// (certify, rigidity), inner solve tolerance (evolve).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the steady state described by the config.
    Steady,
    /// Stability certificate for a steady-state file.
    Certify {
        state: PathBuf,
        /// Skip the orbit Hessian.
        #[arg(long)]
        no_hessian: bool,
    },
    /// Rigidity report for a steady-state file.
    Rigidity { state: PathBuf },
    /// Integrate the configured trajectory or Lyapunov sweep.
    Evolve,
    /// Sample the field of a state or matrix file on a sphere grid.
    Render {
        input: PathBuf,
        #[arg(long)]
        n_theta: Option<usize>,
        #[arg(long)]
        n_phi: Option<usize>,
    },
    /// Dump the generators and the Laplacian spectrum.
    Basis {
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("integration aborted at step {step}: {source}")]
    Aborted { step: usize, source: Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Aborted { .. } => 3,
            CliError::Core(e) => match e {
                Error::NewtonDiverged { .. } | Error::SingularJacobian { .. } => 2,
                Error::InnerNonConvergence { .. } | Error::StepFailed { .. } => 3,
                _ => 1,
            },
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

struct Context {
    config: Option<ExperimentConfig>,
    out: PathBuf,
    seed: u64,
    tol: Option<f64>,
}

impl Context {
    fn config(&self) -> Result<&ExperimentConfig> {
        self.config
            .as_ref()
            .ok_or_else(|| CliError::Input("this command needs --config".into()))
    }

    fn tolerances(&self) -> Tolerances {
        let mut t = self.config.as_ref().map(|c| c.tolerances).unwrap_or_default();
        if let Some(tol) = self.tol {
            t.steady = tol;
        }
        t
    }

    fn output(&self, name: impl AsRef<Path>) -> PathBuf {
        self.out.join(name)
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

enum Input {
    State(SteadyState),
    Matrix(CMatrix),
}

/// A steady-state file (recognized by its `W0` key) or a bare matrix file.
fn read_input(path: &Path) -> Result<Input> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let bad = |e: serde_json::Error| CliError::Input(format!("{}: {e}", path.display()));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(bad)?;
    if value.get("W0").is_some() {
        Ok(Input::State(serde_json::from_value(value).map_err(bad)?))
    } else {
        let m: MatrixJson = serde_json::from_value(value).map_err(bad)?;
        Ok(Input::Matrix(m.to_matrix()?))
    }
}

/// Steady state from a file; a bare matrix is taken as `W0`.
fn load_state(path: &Path, tol: &Tolerances) -> Result<SteadyState> {
    match read_input(path)? {
        Input::State(s) => {
            let basis = SpinBasis::new(s.n)?;
            Ok(SteadyState::from_pair(&basis, s.w0, s.p0, s.provenance, tol)?)
        }
        Input::Matrix(w) => {
            let basis = SpinBasis::new(w.nrows())?;
            let w0 = AlgebraElement::new(w)?;
            let p0 = basis.poisson_solve(&w0)?;
            Ok(SteadyState::from_pair(&basis, w0, p0, Provenance::Loaded, tol)?)
        }
    }
}

fn load_matrix(path: &Path) -> Result<CMatrix> {
    match read_input(path)? {
        Input::State(s) => Ok(s.w0.into_matrix()),
        Input::Matrix(w) => Ok(w),
    }
}

fn build_steady(basis: &SpinBasis, cfg: &SteadyConfig, tol: &Tolerances, newton_tol: Option<f64>) -> Result<SteadyState> {
    let (state, rotate) = match cfg {
        SteadyConfig::Zonal { d, rotate } => (zonal_state(basis, d, tol)?, rotate),
        SteadyConfig::Eigenstate { l, coeffs, rotate } => {
            let c = coeffs.clone().unwrap_or_else(|| zonal_coeffs(*l));
            (eigen_state(basis, *l, &c, tol)?, rotate)
        }
        SteadyConfig::Newton { f, d_init, options, rotate } => {
            let d = d_init
                .clone()
                .unwrap_or_else(|| basis.spin_weights().iter().map(|m| 0.3 * m).collect());
            let mut opts = *options;
            if let Some(t) = newton_tol {
                opts.tol = t;
            }
            let poly = zeitlin_core::steady::Polynomial::new(f.clone());
            (newton_functional_state(basis, &poly, &d, &opts, tol)?, rotate)
        }
    };
    match rotate {
        Some(rho) => Ok(state.rotated(basis, *rho, tol)?),
        None => Ok(state),
    }
}

fn cmd_steady(ctx: &Context) -> Result<()> {
    let cfg = ctx.config()?;
    let steady = cfg
        .steady
        .as_ref()
        .ok_or_else(|| CliError::Input("config has no `steady` section".into()))?;
    let basis = SpinBasis::new(cfg.n)?;
    let state = build_steady(&basis, steady, &ctx.tolerances(), ctx.tol)?;
    let path = ctx.output(&cfg.outputs.steady);
    write_json(&path, &state)?;
    println!("wrote {} (||W0|| = {:.6e})", path.display(), state.w0.norm());
    Ok(())
}

fn cmd_certify(ctx: &Context, state: &Path, no_hessian: bool) -> Result<()> {
    let tol = ctx.tolerances();
    let s = load_state(state, &tol)?;
    let basis = SpinBasis::new(s.n)?;
    let opts = CertifyOptions {
        tolerances: tol,
        hessian: !no_hessian,
    };
    let cert = certify(&basis, &s.w0, &s.p0, &opts)?;
    let name = ctx.config.as_ref().map_or("certificate.json".into(), |c| c.outputs.certificate.clone());
    write_json(&ctx.output(name), &cert)?;
    println!("{}", cert.summary());
    Ok(())
}

fn cmd_rigidity(ctx: &Context, state: &Path) -> Result<()> {
    let tol = ctx.tolerances();
    let s = load_state(state, &tol)?;
    let basis = SpinBasis::new(s.n)?;
    let rep = rigidity_report(&basis, &s, &tol)?;
    let name = ctx.config.as_ref().map_or("rigidity.json".into(), |c| c.outputs.rigidity.clone());
    write_json(&ctx.output(name), &rep)?;
    let conclusion = serde_json::to_value(rep.conclusion).map_err(Error::from)?;
    println!(
        "conclusion={} L={} offdiag={:.3e}",
        conclusion.as_str().unwrap_or_default(),
        rep.l,
        rep.offdiag_residual
    );
    Ok(())
}

fn initial_state(ctx: &Context, basis: &SpinBasis, ev: &EvolveConfig) -> Result<(CMatrix, Option<SteadyState>)> {
    let cfg = ctx.config()?;
    let tol = ctx.tolerances();
    if let Some(path) = &ev.initial {
        let w = load_matrix(Path::new(path))?;
        if w.nrows() != cfg.n {
            return Err(CliError::Input(format!("{path}: matrix is {0}x{0}, config has n = {1}", w.nrows(), cfg.n)));
        }
        let state = if ev.epsilons.is_empty() {
            None
        } else {
            Some(load_state(Path::new(path), &tol)?)
        };
        return Ok((w, state));
    }
    if let Some(steady) = &cfg.steady {
        let s = build_steady(basis, steady, &tol, None)?;
        return Ok((s.w0.as_matrix().clone(), Some(s)));
    }
    if !ev.epsilons.is_empty() {
        return Err(CliError::Input("a Lyapunov sweep needs a steady initial state".into()));
    }
    Ok((unit_su(cfg.n, ctx.seed).into_matrix(), None))
}

struct CsvSink {
    path: PathBuf,
    file: BufWriter<File>,
}

impl CsvSink {
    fn create(path: PathBuf, casimir_max: u32) -> Result<Self> {
        let f = File::create(&path).map_err(|e| io_err(&path, e))?;
        let mut sink = Self {
            file: BufWriter::new(f),
            path,
        };
        sink.line(&MonitorRow::csv_header(casimir_max))?;
        Ok(sink)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.file, "{s}").map_err(|e| io_err(&self.path, e))
    }

    fn finish(mut self) -> Result<()> {
        self.file.flush().map_err(|e| io_err(&self.path, e))
    }
}

#[derive(Serialize, Default)]
struct IntegratorSummary {
    steps: usize,
    fixed_point_iterations: usize,
    newton_iterations: usize,
    max_residual: f64,
}

impl IntegratorSummary {
    fn add(&mut self, s: &StepStats) {
        self.steps += 1;
        self.fixed_point_iterations += s.fixed_point_iterations;
        self.newton_iterations += s.newton_iterations;
        self.max_residual = self.max_residual.max(s.residual);
    }
}

/// Streams one trajectory to `csv`; on integrator failure the partial file
/// ends with `# aborted at step k`.
#[allow(clippy::too_many_arguments)]
fn run_trajectory(
    basis: &SpinBasis,
    w_init: &CMatrix,
    ev: &EvolveConfig,
    opts: &zeitlin_core::dynamics::IsompOptions,
    w_ref: Option<&CMatrix>,
    csv: PathBuf,
    mut on_row: impl FnMut(usize, &MonitorRow, &CMatrix) -> Result<()>,
) -> Result<IntegratorSummary> {
    let mut sink = CsvSink::create(csv, ev.casimir_max)?;
    let mut summary = IntegratorSummary::default();
    let monitor = MonitorConfig {
        casimir_max: ev.casimir_max,
        snapshot_stride: ev.snapshot_stride,
    };
    let mut sink_err = None;
    let run = evolve_streaming(basis, w_init, ev.h, ev.t_final, &monitor, opts, w_ref, |k, row, w, st| {
        if let Some(s) = st {
            summary.add(s);
        }
        if let Err(e) = sink.line(&row.to_csv()).and_then(|_| on_row(k, row, w)) {
            sink_err = Some(e);
            return Err(Error::InvalidArgument("output failed".into()));
        }
        Ok(())
    });
    if let Some(e) = sink_err {
        return Err(e);
    }
    match run {
        Ok(_) => {
            sink.finish()?;
            Ok(summary)
        }
        Err(Error::StepFailed { step, source }) => {
            sink.line(&format!("# aborted at step {step}"))?;
            sink.finish()?;
            Err(CliError::Aborted { step, source: *source })
        }
        Err(e) => Err(e.into()),
    }
}

fn with_suffix(name: &str, suffix: &str) -> String {
    match name.rsplit_once('.') {
        Some((stem, ext)) => format!("{stem}{suffix}.{ext}"),
        None => format!("{name}{suffix}"),
    }
}

fn cmd_evolve(ctx: &Context) -> Result<()> {
    let cfg = ctx.config()?;
    let ev = cfg
        .evolve
        .as_ref()
        .ok_or_else(|| CliError::Input("config has no `evolve` section".into()))?;
    let basis = SpinBasis::new(cfg.n)?;
    let mut opts = ev.integrator;
    if let Some(t) = ctx.tol {
        opts.inner_tol = t;
    }
    let (w_init, state) = initial_state(ctx, &basis, ev)?;

    if ev.epsilons.is_empty() {
        let stride = ev.snapshot_stride;
        let summary = run_trajectory(&basis, &w_init, ev, &opts, None, ctx.output(&cfg.outputs.monitor), |k, _, w| {
            if stride > 0 && k % stride == 0 {
                write_json(&ctx.output(format!("snapshot_{k:06}.json")), &MatrixJson::from_matrix(w))?;
            }
            Ok(())
        })?;
        write_json(&ctx.output(&cfg.outputs.integrator), &summary)?;
        println!("{} steps, inner iterations {} + {}", summary.steps, summary.fixed_point_iterations, summary.newton_iterations);
        return Ok(());
    }

    let state = state.expect("sweeps always carry a steady state");
    let certificate = if ev.certify {
        let c = CertifyOptions {
            tolerances: ctx.tolerances(),
            hessian: true,
        };
        Some(certify(&basis, &state.w0, &state.p0, &c)?)
    } else {
        None
    };
    let mut reports = Vec::new();
    for (i, &eps) in ev.epsilons.iter().enumerate() {
        if !(eps >= 0.0) {
            return Err(CliError::Input(format!("epsilon {eps} must be >= 0")));
        }
        let w_start = perturbed_initial(state.w0.as_matrix(), eps, ev.mode, ctx.seed);
        let mut series = Vec::new();
        let csv = ctx.output(with_suffix(&cfg.outputs.monitor, &format!("_eps{i}")));
        run_trajectory(&basis, &w_start, ev, &opts, Some(state.w0.as_matrix()), csv, |_, row, _| {
            series.push((row.t, row.dist.unwrap_or(f64::NAN)));
            Ok(())
        })?;
        let max_deviation = series.iter().fold(0.0_f64, |a, &(_, d)| a.max(d));
        println!("epsilon={eps:e} max_deviation={max_deviation:.6e}");
        reports.push(LyapunovReport {
            epsilon: eps,
            mode: ev.mode,
            seed: ctx.seed,
            h: ev.h,
            t_final: ev.t_final,
            initial_deviation: series[0].1,
            max_deviation,
            deviation_series: series,
            certificate: certificate.clone(),
        });
    }
    write_json(&ctx.output(&cfg.outputs.lyapunov), &reports)?;
    Ok(())
}

fn cmd_render(ctx: &Context, input: &Path, n_theta: Option<usize>, n_phi: Option<usize>) -> Result<()> {
    let w = load_matrix(input)?;
    let basis = SpinBasis::new(w.nrows())?;
    let grid = ctx.config.as_ref().and_then(|c| c.render).unwrap_or_default();
    let grid = RenderConfig {
        n_theta: n_theta.unwrap_or(grid.n_theta),
        n_phi: n_phi.unwrap_or(grid.n_phi),
    };
    let field = render(&basis, &w, grid.n_theta, grid.n_phi)?;
    let name = ctx.config.as_ref().map_or("render.csv".into(), |c| c.outputs.render.clone());
    let path = ctx.output(name);
    fs::write(&path, field.to_csv()).map_err(|e| io_err(&path, e))?;
    println!("wrote {} ({}x{})", path.display(), grid.n_theta, grid.n_phi);
    Ok(())
}

#[derive(Serialize)]
struct LaplacianLevel {
    l: usize,
    eigenvalue: f64,
    multiplicity: usize,
    max_residual: f64,
}

#[derive(Serialize)]
struct BasisDump {
    n: usize,
    hbar: f64,
    generators: Vec<MatrixJson>,
    laplacian_spectrum: Vec<LaplacianLevel>,
}

fn cmd_basis(ctx: &Context, n: Option<usize>) -> Result<()> {
    let n = match (n, ctx.config.as_ref()) {
        (Some(n), _) => n,
        (None, Some(c)) => c.n,
        (None, None) => return Err(CliError::Input("basis needs --n or --config".into())),
    };
    let basis = SpinBasis::new(n)?;
    let mut levels: Vec<LaplacianLevel> = (1..n)
        .map(|l| LaplacianLevel {
            l,
            eigenvalue: 0.0,
            multiplicity: 0,
            max_residual: 0.0,
        })
        .collect();
    for e in eigenbasis_build(&basis, n - 1)? {
        let lt = basis.laplacian_banded(&e.t);
        let lambda = inner(&e.t, &lt)?.re / inner(&e.t, &e.t)?.re;
        let target = -((e.l * (e.l + 1)) as f64);
        let lvl = &mut levels[e.l - 1];
        lvl.eigenvalue += lambda;
        lvl.multiplicity += 1;
        let resid = lt - &e.t * zeitlin_core::C64::new(target, 0.0);
        lvl.max_residual = lvl.max_residual.max(zeitlin_core::algebra::norm(&resid));
    }
    for lvl in &mut levels {
        lvl.eigenvalue /= lvl.multiplicity.max(1) as f64;
    }
    let dump = BasisDump {
        n,
        hbar: basis.hbar(),
        generators: basis.generators().iter().map(|x| MatrixJson::from_matrix(x.as_matrix())).collect(),
        laplacian_spectrum: levels,
    };
    let name = ctx.config.as_ref().map_or("basis.json".into(), |c| c.outputs.basis.clone());
    write_json(&ctx.output(name), &dump)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref().map(load_config).transpose()?;
    let seed = cli.seed.or(config.as_ref().and_then(|c| c.seed)).unwrap_or(0);
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Input(format!("--tol {t} must be positive")));
        }
    }
    fs::create_dir_all(&cli.out).map_err(|e| io_err(&cli.out, e))?;
    let ctx = Context {
        config,
        out: cli.out,
        seed,
        tol: cli.tol,
    };
    match cli.command {
        Command::Steady => cmd_steady(&ctx),
        Command::Certify { state, no_hessian } => cmd_certify(&ctx, &state, no_hessian),
        Command::Rigidity { state } => cmd_rigidity(&ctx, &state),
        Command::Evolve => cmd_evolve(&ctx),
        Command::Render { input, n_theta, n_phi } => cmd_render(&ctx, &input, n_theta, n_phi),
        Command::Basis { n } => cmd_basis(&ctx, n),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
