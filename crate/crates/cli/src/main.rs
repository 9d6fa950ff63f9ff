//! `nlriver`: run the river-model solvers from a scenario file and write CSV.

mod repro;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use nlriver::discretize::{build_grid, Grid};
use nlriver::eigen::{q_star, q_threshold_bounds, PersistenceProblem};
use nlriver::evolve::{evolve, EvolveOptions, Scheme};
use nlriver::io::{self, fmt_e, Meta, TrajectoryLayout};
use nlriver::model::{h_extrema, validate, BoundaryRegime, Scenario};
use nlriver::scenario_file::{load_scenario, parse_scenario, RunSettings, RIVER_EXAMPLE_TOML};
use nlriver::stationary::{Start, StationaryProblem};
use nlriver::threshold::{find_threshold_two_level, stationary_sweep};

#[derive(Parser, Debug)]
#[command(name = "nlriver", version, about = "Nonlocal river-model solvers")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalArgs {
    /// Scenario TOML file; the bundled river example when omitted.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory (default: $NLRIVER_OUT, else ./out).
    #[arg(long, global = true, env = "NLRIVER_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    q: Option<f64>,
    #[arg(long = "n-cells", global = true)]
    n_cells: Option<usize>,
    #[arg(long = "t-end", global = true)]
    t_end: Option<f64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    scheme: Option<SchemeArg>,
    #[arg(long, global = true, value_enum, default_value = "wide")]
    format: FormatArg,
    /// Worker threads for sweeps and limit studies.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum SchemeArg {
    Euler,
    Imex,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Wide,
    Long,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum StationaryMethod {
    Lower,
    Upper,
    Longtime,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate in time and write the trajectory.
    Evolve {
        #[arg(long = "record-every")]
        record_every: Option<f64>,
    },
    /// Steady state by monotone iteration or long-time integration.
    Stationary {
        #[arg(long, value_enum, default_value = "upper")]
        method: StationaryMethod,
    },
    /// Persistence indicator at `--q` or at each of `--q-values`.
    Eigen {
        #[arg(long = "q-values", value_delimiter = ',')]
        q_values: Vec<f64>,
    },
    /// Bisection for the critical flow on n and 2n cells.
    Threshold {
        #[arg(long = "q-lo")]
        q_lo: Option<f64>,
        #[arg(long = "q-hi")]
        q_hi: Option<f64>,
    },
    /// Indicator and stationary sup-norm over a uniform q range.
    Sweep {
        #[arg(long = "q-min")]
        q_min: Option<f64>,
        #[arg(long = "q-max")]
        q_max: Option<f64>,
        #[arg(long = "q-steps", default_value_t = 21)]
        q_steps: usize,
    },
    /// Critical speed q* and the analytic threshold bracket.
    Qstar,
    /// Data for the eight reference figures, in a dated directory.
    ReproPaper,
}

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Solver(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Solver(m) | Failure::Io(m) => m,
        }
    }
}

pub fn solver<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Solver(e.to_string())
}

/// Everything a subcommand needs: the parsed scenario with overrides applied.
pub struct Context {
    pub scenario: Scenario,
    pub settings: RunSettings,
    pub scenario_label: String,
    pub scenario_hash: String,
    pub out: PathBuf,
    pub force: bool,
    pub layout: TrajectoryLayout,
}

impl Context {
    pub fn grid(&self) -> Result<Grid, Failure> {
        build_grid(self.scenario.domain, self.settings.n_cells).map_err(|e| Failure::Validation(e.to_string()))
    }

    pub fn meta(&self) -> Meta {
        Meta::new()
            .with("tool", format!("nlriver {}", env!("CARGO_PKG_VERSION")))
            .with("scenario_sha256", &self.scenario_hash)
            .num("q", self.scenario.q)
            .num("d", self.scenario.d)
            .with("regime", self.scenario.regime)
            .with("n_cells", self.settings.n_cells)
    }

    pub fn evolve_options(&self, t_end: f64, record_every: f64) -> EvolveOptions {
        EvolveOptions { dt: self.settings.dt, scheme: self.settings.scheme, ..EvolveOptions::until(t_end).recording(record_every) }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `content` to `dir/name`, creating `dir`; refuses to replace an
/// existing file unless `force`.
pub fn write_artifact(dir: &Path, name: &str, content: &str, force: bool) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    if path.exists() && !force {
        return Err(Failure::Io(format!("{} exists (use --force to overwrite)", path.display())));
    }
    std::fs::write(&path, content).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn context(global: &GlobalArgs) -> Result<Context, Failure> {
    let (text, mut scenario, mut settings, label) = match &global.scenario {
        Some(path) => {
            let (text, s, r) = load_scenario(path).map_err(|e| match e {
                nlriver::scenario_file::ScenarioFileError::Io { .. } => Failure::Io(e.to_string()),
                other => Failure::Validation(other.to_string()),
            })?;
            (text, s, r, path.display().to_string())
        }
        None => {
            let (s, r) = parse_scenario(RIVER_EXAMPLE_TOML).map_err(|e| Failure::Validation(e.to_string()))?;
            (RIVER_EXAMPLE_TOML.to_string(), s, r, "bundled:river_example.toml".to_string())
        }
    };
    if let Some(q) = global.q {
        scenario.q = q;
    }
    if let Some(n) = global.n_cells {
        settings.n_cells = n;
    }
    if let Some(t) = global.t_end {
        settings.t_end = t;
        settings.record_every = settings.record_every.min(t);
    }
    if let Some(dt) = global.dt {
        settings.dt = Some(dt);
    }
    if let Some(tol) = global.tol {
        settings.tol = tol;
    }
    if let Some(s) = global.scheme {
        settings.scheme = match s {
            SchemeArg::Euler => Scheme::Euler,
            SchemeArg::Imex => Scheme::Imex,
        };
    }
    let report = validate(&scenario);
    if !report.is_valid() {
        return Err(Failure::Validation(format!("scenario rejected:\n{report}")));
    }
    if settings.n_cells < 2 || !(settings.tol > 0.0) {
        return Err(Failure::Validation("n_cells must be ≥ 2 and tol > 0".into()));
    }
    Ok(Context {
        scenario,
        settings,
        scenario_label: label,
        scenario_hash: sha256_hex(text.as_bytes()),
        out: global.out.clone().unwrap_or_else(|| PathBuf::from("out")),
        force: global.force,
        layout: match global.format {
            FormatArg::Wide => TrajectoryLayout::Wide,
            FormatArg::Long => TrajectoryLayout::Long,
        },
    })
}

/// Default threshold search interval: the analytic bracket when available.
pub fn search_interval(ctx: &Context) -> (f64, f64) {
    let analytic = q_threshold_bounds(&ctx.scenario).ok();
    let lo = ctx.settings.q_lo.or(analytic.map(|b| b.0.max(1e-3))).unwrap_or(0.05);
    let hi = ctx.settings.q_hi.or(analytic.map(|b| b.1)).unwrap_or(5.0);
    (lo, hi)
}

fn run(command: &Command, ctx: &Context) -> Result<(), Failure> {
    match command {
        Command::Evolve { record_every } => {
            let grid = ctx.grid()?;
            let every = record_every.unwrap_or(ctx.settings.record_every);
            let traj = evolve(&ctx.scenario, &grid, &ctx.evolve_options(ctx.settings.t_end, every)).map_err(solver)?;
            nlriver::evolve::log_gradient_check(&ctx.scenario, &grid, &traj);
            let csv = io::trajectory_csv(&traj, &grid, &ctx.meta(), ctx.layout);
            let path = write_artifact(&ctx.out, "trajectory.csv", &csv, ctx.force)?;
            println!("{} (final sup-norm {})", path.display(), fmt_e(traj.final_sup_norm()));
        }
        Command::Stationary { method } => {
            let grid = ctx.grid()?;
            let problem = StationaryProblem::new(&ctx.scenario, &grid).map_err(solver)?;
            let result = match method {
                StationaryMethod::Lower => problem.monotone_iterate(Start::Lower),
                StationaryMethod::Upper => problem.monotone_iterate(Start::Upper),
                StationaryMethod::Longtime => {
                    problem.via_longtime(grid.sample(|x| ctx.scenario.u0_at(x)), nlriver::stationary::LONGTIME_T_MAX)
                }
            }
            .map_err(solver)?;
            let path = write_artifact(&ctx.out, "profile.csv", &io::profile_csv(&result, &grid, &ctx.meta()), ctx.force)?;
            println!("{} ({}, sup-norm {})", path.display(), result.classification.as_str(), fmt_e(result.sup_norm()));
        }
        Command::Eigen { q_values } => {
            let grid = ctx.grid()?;
            let problem = PersistenceProblem::new(&ctx.scenario, &grid).map_err(solver)?;
            let qs = if q_values.is_empty() { vec![ctx.scenario.q] } else { q_values.clone() };
            let rows = qs.iter().map(|&q| problem.indicator(q)).collect::<Result<Vec<_>, _>>().map_err(solver)?;
            let path = write_artifact(&ctx.out, "eigen.csv", &io::eigen_csv(&rows, &ctx.meta()), ctx.force)?;
            for r in &rows {
                println!("q = {}: indicator {} ({})", r.q, fmt_e(r.value), r.outlook().as_str());
            }
            println!("{}", path.display());
        }
        Command::Threshold { q_lo, q_hi } => {
            let (lo, hi) = search_interval(ctx);
            let report = find_threshold_two_level(
                &ctx.scenario,
                ctx.settings.n_cells,
                q_lo.unwrap_or(lo),
                q_hi.unwrap_or(hi),
                ctx.settings.tol,
            )
            .map_err(solver)?;
            let path = write_artifact(&ctx.out, "threshold.csv", &io::threshold_csv(&report, &ctx.meta()), ctx.force)?;
            println!("bracket [{}, {}] -> {}", fmt_e(report.bracket.0), fmt_e(report.bracket.1), path.display());
        }
        Command::Sweep { q_min, q_max, q_steps } => {
            let grid = ctx.grid()?;
            let (lo, hi) = search_interval(ctx);
            let (a, b) = (q_min.unwrap_or(lo), q_max.unwrap_or(hi));
            if *q_steps < 1 || !(b >= a) {
                return Err(Failure::Validation(format!("bad sweep range [{a}, {b}] with {q_steps} steps")));
            }
            let qs: Vec<f64> = if *q_steps == 1 {
                vec![a]
            } else {
                (0..*q_steps).map(|k| a + (b - a) * k as f64 / (*q_steps - 1) as f64).collect()
            };
            let rows = stationary_sweep(&ctx.scenario, &grid, &qs).map_err(solver)?;
            let path = write_artifact(&ctx.out, "sweep.csv", &io::sweep_csv(&rows, &ctx.meta()), ctx.force)?;
            println!("{} ({} rows)", path.display(), rows.len());
        }
        Command::Qstar => {
            let (h_bar, h_min) = h_extrema(&ctx.scenario.reaction, &ctx.scenario.domain).map_err(solver)?;
            let r = q_star(&ctx.scenario.kernel, ctx.scenario.d, h_bar).map_err(solver)?;
            let mut line = format!("q_star={} mu_star={} h_bar={} h_min={}", fmt_e(r.q_star), fmt_e(r.mu_star), fmt_e(h_bar), fmt_e(h_min));
            if ctx.scenario.regime == BoundaryRegime::DirichletNonlocal {
                match q_threshold_bounds(&ctx.scenario) {
                    Ok((lo, hi)) => line.push_str(&format!(" bounds={};{}", fmt_e(lo), fmt_e(hi))),
                    Err(e) => line.push_str(&format!(" bounds=unavailable ({e})")),
                }
            }
            println!("{line}");
            write_artifact(&ctx.out, "qstar.txt", &format!("{line}\n"), ctx.force)?;
        }
        Command::ReproPaper => repro::run(ctx)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.global.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("cannot size worker pool: {e}");
        }
    }
    let result = context(&cli.global).and_then(|ctx| {
        run(&cli.command, &ctx).inspect_err(|f| {
            if let Failure::Solver(m) = f {
                let text = format!("command: {:?}\nscenario: {}\nerror: {m}\n", cli.command, ctx.scenario_label);
                let _ = std::fs::create_dir_all(&ctx.out).and_then(|_| std::fs::write(ctx.out.join("diagnostic.txt"), text));
            }
        })
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
