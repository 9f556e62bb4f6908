use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info};

use sigmak_core::flow::{classify_orbit, integrate, Direction, IntegratorConfig};
use sigmak_core::format::{num, write_profile_csv, write_trace_csv};
use sigmak_core::geometry::{pansu_profile, reconstruct_profile, surface_of_revolution};
use sigmak_core::portrait::{self, PortraitSpec};
use sigmak_core::{selftest, Error, PhasePoint, SigmaParams};

#[derive(Parser)]
#[command(name = "sigmak", version, about = "Phase-plane tools for umbilic constant sigma_{i,n} hypersurfaces in H_n")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw a phase portrait as SVG, optionally dumping every trace to CSV.
    Portrait(PortraitArgs),
    /// Integrate one orbit and write its samples as CSV.
    Orbit(OrbitArgs),
    /// Classify the orbit through a point; prints one JSON object.
    Classify(PointArgs),
    /// Rebuild the profile curve through a point; optional OBJ surface of revolution.
    Reconstruct(ReconstructArgs),
    /// Sample the Pansu sphere profile.
    Pansu(PansuArgs),
    /// Run the randomised invariant checks.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    i: u32,
    #[arg(long, allow_hyphen_values = true)]
    c: f64,
}

impl ParamArgs {
    fn build(&self) -> Result<SigmaParams, CliError> {
        SigmaParams::new(self.n, self.i, self.c).map_err(CliError::usage)
    }
}

#[derive(Args)]
struct IntegrationArgs {
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long = "s-max")]
    s_max: Option<f64>,
}

impl IntegrationArgs {
    fn apply(&self, mut cfg: IntegratorConfig) -> Result<IntegratorConfig, CliError> {
        if let Some(v) = self.rtol {
            cfg.rel_tol = v;
        }
        if let Some(v) = self.atol {
            cfg.abs_tol = v;
        }
        if let Some(v) = self.s_max {
            cfg.s_max = v;
        }
        cfg.validate().map_err(CliError::usage)?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    integration: IntegrationArgs,
    #[arg(long, allow_hyphen_values = true)]
    alpha0: f64,
    #[arg(long, allow_hyphen_values = true)]
    k0: f64,
}

impl PointArgs {
    fn start(&self) -> Result<PhasePoint, CliError> {
        PhasePoint::new(self.alpha0, self.k0).map_err(CliError::usage)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DirArg {
    Forward,
    Backward,
}

#[derive(Args)]
struct OrbitArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long, value_enum, default_value = "forward")]
    direction: DirArg,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Profile CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    segments: usize,
}

#[derive(Args)]
struct PortraitArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    integration: IntegrationArgs,
    #[arg(long = "alpha-min", allow_hyphen_values = true, default_value_t = -3.0)]
    alpha_min: f64,
    #[arg(long = "alpha-max", allow_hyphen_values = true, default_value_t = 3.0)]
    alpha_max: f64,
    #[arg(long = "k-min", allow_hyphen_values = true, default_value_t = -3.0)]
    k_min: f64,
    #[arg(long = "k-max", allow_hyphen_values = true, default_value_t = 3.0)]
    k_max: f64,
    #[arg(long, default_value_t = 12)]
    grid: usize,
    #[arg(long, default_value_t = 800)]
    width: u32,
    #[arg(long, default_value_t = 800)]
    height: u32,
    #[arg(long = "no-nullclines")]
    no_nullclines: bool,
    #[arg(long = "no-critical-lines")]
    no_critical_lines: bool,
    #[arg(long = "no-stationary")]
    no_stationary: bool,
    /// SVG output.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct PansuArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 101)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum CliError {
    Usage(String),
    Io { path: Option<PathBuf>, source: io::Error },
    Numerical(Error),
    SelftestFailed(usize),
}

impl CliError {
    fn usage(e: Error) -> Self {
        CliError::Usage(e.to_string())
    }

    fn io(path: Option<&Path>) -> impl FnOnce(io::Error) -> CliError + '_ {
        move |source| CliError::Io { path: path.map(Path::to_path_buf), source }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numerical(e)
    }
}

/// Opens `path` for writing, or stdout.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(CliError::io(Some(p)))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<F>(path: Option<&Path>, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let mut out = sink(path)?;
    body(&mut out).and_then(|_| out.flush()).map_err(CliError::io(path))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Portrait(a) => {
            let mut spec = PortraitSpec::new(a.params.build()?);
            spec.alpha_range = (a.alpha_min, a.alpha_max);
            spec.k_range = (a.k_min, a.k_max);
            spec.grid = a.grid;
            spec.width = a.width;
            spec.height = a.height;
            spec.include_nullclines = !a.no_nullclines;
            spec.include_critical_lines = !a.no_critical_lines;
            spec.include_stationary = !a.no_stationary;
            spec.fit_draw_cfg();
            spec.draw_cfg = a.integration.apply(spec.draw_cfg)?;
            spec.classify_cfg = a.integration.apply(spec.classify_cfg)?;
            spec.validate().map_err(CliError::usage)?;
            let p = portrait::build(&spec)?;
            for ((region, class), count) in p.counts() {
                info!("{}: {count} x {class}", region.as_str());
            }
            emit(Some(&a.out), |w| w.write_all(p.to_svg().as_bytes()))?;
            if let Some(csv) = &a.csv {
                emit(Some(csv), |w| p.write_csv(w))?;
            }
        }
        Cmd::Orbit(a) => {
            let params = a.point.params.build()?;
            let cfg = a.point.integration.apply(IntegratorConfig::default())?;
            let dir = match a.direction {
                DirArg::Forward => Direction::Forward,
                DirArg::Backward => Direction::Backward,
            };
            let trace = integrate(&params, a.point.start()?, &cfg, dir)?;
            debug!("{} samples, stopped by {}", trace.samples.len(), trace.termination.as_str());
            emit(a.out.as_deref(), |w| write_trace_csv(&trace, w))?;
        }
        Cmd::Classify(a) => {
            let params = a.params.build()?;
            let cfg = a.integration.apply(IntegratorConfig::default())?;
            let class = classify_orbit(&params, a.start()?, &cfg)?;
            let json = serde_json::to_string(&class).expect("classes serialize");
            emit(None, |w| writeln!(w, "{json}"))?;
        }
        Cmd::Reconstruct(a) => {
            let params = a.point.params.build()?;
            let cfg = a.point.integration.apply(IntegratorConfig::default())?;
            if a.segments < 3 {
                return Err(CliError::Usage("--segments must be at least 3".into()));
            }
            let profile = reconstruct_profile(&params, a.point.start()?, &cfg)?;
            emit(a.out.as_deref(), |w| write_profile_csv(&profile, w))?;
            if let Some(mesh) = &a.mesh {
                let m = surface_of_revolution(&profile.with_poles(), a.segments)?;
                emit(Some(mesh), |w| m.write_obj(w))?;
            }
        }
        Cmd::Pansu(a) => {
            if !(a.lambda.is_finite() && a.lambda > 0.0) {
                return Err(CliError::Usage("--lambda must be positive".into()));
            }
            if a.samples < 2 {
                return Err(CliError::Usage("--samples must be at least 2".into()));
            }
            let zmax = 1.0 / a.lambda;
            let rows = (0..a.samples)
                .map(|j| {
                    let z = if j + 1 == a.samples { zmax } else { zmax * j as f64 / (a.samples - 1) as f64 };
                    pansu_profile(a.lambda, z).map(|f| (z, f))
                })
                .collect::<Result<Vec<_>, _>>()?;
            emit(a.out.as_deref(), |w| {
                writeln!(w, "z,f")?;
                for (z, f) in rows {
                    writeln!(w, "{},{}", num(z), num(f))?;
                }
                Ok(())
            })?;
        }
        Cmd::Selftest(a) => {
            let results = selftest::run(a.samples, a.seed);
            let failed = results.iter().filter(|r| !r.passed()).count();
            emit(None, |w| {
                for r in &results {
                    let tag = if r.passed() { "PASS" } else { "FAIL" };
                    write!(w, "{tag} {} ({}/{} failures)", r.name, r.failures, r.samples)?;
                    if let Some(e) = &r.example {
                        write!(w, " first: {e}")?;
                    }
                    writeln!(w)?;
                }
                Ok(())
            })?;
            if failed > 0 {
                return Err(CliError::SelftestFailed(failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SIGMAK_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io { path, source }) => {
            match path {
                Some(p) => eprintln!("error: {}: {source}", p.display()),
                None => eprintln!("error: {source}"),
            }
            ExitCode::from(1)
        }
        Err(CliError::Numerical(e)) => {
            let diag = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{diag}");
            ExitCode::from(3)
        }
        Err(CliError::SelftestFailed(n)) => {
            eprintln!("error: {n} self-test check(s) failed");
            ExitCode::from(4)
        }
    }
}
