use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use glrr_core::data::{self, generate_synthetic, RetrievalDataset};
use glrr_core::eval::{baseline_laplacian, run_experiment, sweep_lambda_beta};
use glrr_core::report::{atomic_write, matrix_csv, report_csv, report_json, residual_csv, sweep_csv};
use glrr_core::solver::solve;
use glrr_core::validate::run_checks;
use glrr_core::{GlrrError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "glrr", version, about = "Graph-regularized low-rank representation for AOD retrieval")]
struct Cli {
    /// TOML run configuration; omitted keys take their defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Master seed for every random stream; overrides the config file.
    #[arg(long, global = true, env = "GLRR_SEED")]
    seed: Option<u64>,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out: PathBuf,

    /// Only log errors.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic dataset CSV and its ground-truth sidecar.
    Synth,
    /// Learn the representation for one (lambda, beta) and write Z, E and residuals.
    Solve {
        #[arg(long, value_name = "CSV")]
        data: Option<PathBuf>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Run the repeated-split protocol and write the report.
    Experiment {
        #[arg(long, value_name = "CSV")]
        data: Option<PathBuf>,
    },
    /// Evaluate the (lambda, beta) lattice on one split.
    Sweep {
        #[arg(long, value_name = "CSV")]
        data: Option<PathBuf>,
    },
    /// Print the effective configuration as TOML.
    Defaults,
    /// Run the built-in invariant and oracle checks.
    Validate {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

/// Wraps every JSON artifact with what is needed to reproduce it.
#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    command: &'a str,
    data: &'a str,
    seed: u64,
    config: &'a RunConfig,
    result: T,
}

struct Context {
    config: RunConfig,
    seed: u64,
    out: PathBuf,
    quiet: bool,
}

impl Context {
    fn header(&self, command: &str, source: &str) -> Vec<String> {
        let mut lines = vec![format!("glrr {command}"), format!("seed: {}", self.seed), format!("data: {source}")];
        lines.extend(self.config.to_toml().lines().map(|l| format!("config: {l}")));
        lines
    }

    fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), GlrrError> {
        let path = self.out.join(name);
        atomic_write(&path, bytes.as_ref())?;
        if !self.quiet {
            println!("wrote {}", path.display());
        }
        Ok(())
    }

    fn json<T: Serialize>(&self, command: &str, source: &str, result: T) -> Result<String, GlrrError> {
        let artifact = Artifact {
            command,
            data: source,
            seed: self.seed,
            config: &self.config,
            result,
        };
        let mut s = serde_json::to_string_pretty(&artifact)?;
        s.push('\n');
        Ok(s)
    }

    fn dataset(&self, path: Option<&Path>) -> Result<(RetrievalDataset, String), GlrrError> {
        match path {
            Some(p) => {
                let loaded = data::load_csv(p)?;
                if loaded.dropped > 0 {
                    log::warn!("{}: dropped {} malformed rows", p.display(), loaded.dropped);
                }
                Ok((loaded.dataset, p.display().to_string()))
            }
            None => Ok((generate_synthetic(&self.config.synthetic)?.dataset, "synthetic".into())),
        }
    }
}

fn run(cli: Cli) -> Result<bool, GlrrError> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config = config.with_seed(seed);
    }
    if let Command::Solve { lambda, beta, .. } = &cli.command {
        let glrr = &mut config.experiment.glrr;
        *glrr = glrr.with_weights(lambda.unwrap_or(glrr.lambda), beta.unwrap_or(glrr.beta));
    }
    if let Command::Defaults = cli.command {
        print!("{}", config.to_toml());
        return Ok(true);
    }
    std::fs::create_dir_all(&cli.out)?;
    let ctx = Context {
        seed: config.experiment.seed,
        config,
        out: cli.out,
        quiet: cli.quiet,
    };

    match &cli.command {
        Command::Synth => {
            let synth = generate_synthetic(&ctx.config.synthetic)?;
            let mut csv = Vec::new();
            data::write_csv(&synth.dataset, &ctx.header("synth", "synthetic"), &mut csv)?;
            ctx.write("synthetic.csv", csv)?;
            ctx.write("synthetic_truth.json", ctx.json("synth", "synthetic", &synth.truth)?)?;
        }
        Command::Solve { data, .. } => {
            let (dataset, source) = ctx.dataset(data.as_deref())?;
            let lap = baseline_laplacian(&dataset, &ctx.config.experiment.graph)?;
            let sol = solve(&dataset.spectra, &lap, &ctx.config.experiment.glrr)?;
            let header = ctx.header("solve", &source);
            ctx.write("z.csv", matrix_csv(&sol.z, &header))?;
            ctx.write("e.csv", matrix_csv(&sol.e, &header))?;
            ctx.write("residuals.csv", residual_csv(&sol.residuals, &header))?;
            #[derive(Serialize)]
            struct Summary {
                iterations: usize,
                converged: bool,
                final_residuals: Option<(f64, f64)>,
            }
            let summary = Summary {
                iterations: sol.iterations,
                converged: sol.converged,
                final_residuals: sol.final_residuals(),
            };
            ctx.write("solve.json", ctx.json("solve", &source, summary)?)?;
            if !sol.converged {
                log::warn!("solver stopped at max_iter={} without meeting eps", sol.iterations);
            }
        }
        Command::Experiment { data } => {
            let (dataset, source) = ctx.dataset(data.as_deref())?;
            let report = run_experiment(&dataset, &ctx.config.experiment)?;
            let header = ctx.header("experiment", &source);
            ctx.write("report.json", report_json(&report)?)?;
            ctx.write("report.csv", report_csv(&report, &header))?;
            if report.failures() > 0 {
                log::warn!("{} method runs failed; see the error fields in report.json", report.failures());
            }
            if !ctx.quiet {
                for c in &report.cells {
                    println!(
                        "{:<18} {:>4.0}%  rmse {}",
                        c.method,
                        c.percentage * 100.0,
                        c.rmse_mean.map_or("n/a".into(), |v| format!("{v:.4}"))
                    );
                }
            }
        }
        Command::Sweep { data } => {
            let (dataset, source) = ctx.dataset(data.as_deref())?;
            let grid = sweep_lambda_beta(&dataset, &ctx.config.experiment, &ctx.config.sweep)?;
            ctx.write("sweep.csv", sweep_csv(&grid, &ctx.header("sweep", &source)))?;
            if !ctx.quiet {
                if let Some((l, b)) = grid.argmin {
                    println!("argmin lambda={l} beta={b}");
                }
            }
            ctx.write("sweep.json", ctx.json("sweep", &source, &grid)?)?;
        }
        Command::Defaults => unreachable!("handled before the output directory is created"),
        Command::Validate { trials } => {
            let checks = run_checks(ctx.seed, *trials);
            if !ctx.quiet {
                for c in &checks {
                    let verdict = if c.passed { "PASS" } else { "FAIL" };
                    println!("{verdict} {:<28} worst {:.3e} (tol {:.0e})", c.name, c.worst, c.tolerance);
                }
            }
            let all = checks.iter().all(|c| c.passed);
            ctx.write("validate.json", ctx.json("validate", "generated", &checks)?)?;
            return Ok(all);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            log::error!("{e}");
            if !log::log_enabled!(log::Level::Error) {
                eprintln!("error: {e}");
            }
            ExitCode::from(if e.is_data_error() { 2 } else { 3 })
        }
    }
}
