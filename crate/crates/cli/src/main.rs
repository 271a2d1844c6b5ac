use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qhm::algebra::{lip_report, star, sup_sum_norm, SupOptions};
use qhm::config::{OutputFormat, RunConfig};
use qhm::element::random_element;
use qhm::metric::{distance_lower_bound, localized_state, random_vector_state, SolverOptions, State};
use qhm::report::{export_csv, VerifyReport};
use qhm::representation::cstar_norm_estimate;
use qhm::suites::{run_criterion, verify, Suite};
use qhm::{Element, QhmError};
use serde_json::json;

#[derive(Parser)]
#[command(name = "qhm", version, about = "Quantum Heisenberg manifold numerics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suites; exits 1 if any property fails.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "all")]
        suite: String,
        /// Run only these acceptance criteria (repeatable).
        #[arg(long = "criterion")]
        criteria: Vec<u32>,
        /// Include wall-clock timings in the report.
        #[arg(long)]
        timings: bool,
    },
    /// Norms of an element file.
    Norm {
        #[arg(long)]
        element: PathBuf,
        #[arg(long, value_enum, default_value = "supsum")]
        kind: NormKind,
    },
    /// Deformed product of two element files.
    Star {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lower bound on the distance between two states.
    Distance {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Where to write the witness element.
        #[arg(long)]
        witness: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Random element at the configured truncation.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        decay: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// State file at the metric truncation.
    State {
        #[arg(long, value_enum)]
        kind: StateKindArg,
        #[arg(long, default_value_t = 0.5)]
        x0: f64,
        #[arg(long, default_value_t = 0.5)]
        y0: f64,
        #[arg(long, default_value_t = 0.1)]
        width: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write the default run configuration.
    InitConfig {
        #[arg(long)]
        out: PathBuf,
    },
    /// Flatten a JSON report.
    Export {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: ExportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NormKind {
    Supsum,
    Cstar,
    Lip,
}

#[derive(Clone, Copy, ValueEnum)]
enum StateKindArg {
    Trace,
    Localized,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Csv,
}

enum Failure {
    Properties,
    Error(QhmError),
}

impl From<QhmError> for Failure {
    fn from(e: QhmError) -> Self {
        Failure::Error(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Properties) => ExitCode::from(1),
        Err(Failure::Error(e)) => {
            let code = match e {
                QhmError::Numerical { .. } => 3,
                _ => 2,
            };
            let obj = json!({ "error": { "kind": e.kind(), "message": e.to_string(), "exit_code": code } });
            eprintln!("{obj}");
            ExitCode::from(code)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, QhmError> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn load_element(path: &Path) -> Result<Element, QhmError> {
    Element::load(path).map_err(|e| QhmError::Config(format!("{}: {e}", path.display())))
}

fn load_state(path: &Path) -> Result<State, QhmError> {
    State::load(path).map_err(|e| QhmError::Config(format!("{}: {e}", path.display())))
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), QhmError> {
    match path {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Verify { config, suite, criteria, timings } => {
            let cfg = load_config(config.as_deref())?;
            let suite = Suite::parse(&suite)?;
            let report = if criteria.is_empty() {
                verify(&cfg, suite)?
            } else {
                cfg.validate()?;
                let mut props = Vec::new();
                let mut times = Vec::new();
                for id in criteria {
                    let (p, t) = run_criterion(&cfg, id)?;
                    props.extend(p);
                    times.push(t);
                }
                VerifyReport::new(suite.name(), cfg.base_seed(), props, times)
            };
            let report = if timings { report } else { report.without_timings() };
            let text = match cfg.output.format {
                OutputFormat::Json => report.to_json()?,
                OutputFormat::Csv => report.to_csv(),
            };
            emit(&text, cfg.output.path.as_deref())?;
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Properties)
            }
        }
        Command::Norm { element, kind } => {
            let a = load_element(&element)?;
            let value = match kind {
                NormKind::Supsum => serde_json::to_value(sup_sum_norm(&a)),
                NormKind::Cstar => serde_json::to_value(cstar_norm_estimate(&a)?),
                NormKind::Lip => serde_json::to_value(lip_report(&a, &SupOptions::default())?),
            }
            .map_err(QhmError::from)?;
            println!("{}", serde_json::to_string_pretty(&value).map_err(QhmError::from)?);
            Ok(())
        }
        Command::Star { a, b, out } => {
            let (a, b) = (load_element(&a)?, load_element(&b)?);
            star(&a, &b)?.save(&out)?;
            Ok(())
        }
        Command::Distance { mu, nu, restarts, iterations, seed, witness, config } => {
            let cfg = load_config(config.as_deref())?;
            let (m, n) = (load_state(&mu)?, load_state(&nu)?);
            let mut opts: SolverOptions = cfg.metric.solver;
            if let Some(r) = restarts {
                opts.restarts = r;
            }
            if let Some(i) = iterations {
                opts.iterations = i;
            }
            if let Some(s) = seed {
                opts.seed = s;
            }
            let r = distance_lower_bound(&m, &n, &opts)?;
            if let Some(w) = &witness {
                r.witness.save(w)?;
            }
            let out = json!({
                "states": [mu.display().to_string(), nu.display().to_string()],
                "bound": r.bound,
                "grid_objective": r.grid_objective,
                "iterations": r.iterations,
                "stagnated": r.stagnated,
                "best_restart": r.best_restart,
                "witness_file": witness.map(|w| w.display().to_string()),
            });
            println!("{}", serde_json::to_string_pretty(&out).map_err(QhmError::from)?);
            Ok(())
        }
        Command::Gen { seed, decay, out, config } => {
            let cfg = load_config(config.as_deref())?;
            random_element(seed, cfg.trunc, cfg.params, decay)?.save(&out)?;
            Ok(())
        }
        Command::State { kind, x0, y0, width, seed, out, config } => {
            let cfg = load_config(config.as_deref())?;
            let (params, trunc) = (cfg.params, cfg.metric.trunc);
            let state = match kind {
                StateKindArg::Trace => State::trace(params, trunc),
                StateKindArg::Localized => localized_state(params, trunc, x0, y0, width)?,
                StateKindArg::Random => random_vector_state(seed, params, trunc, cfg.metric.state_spread)?,
            };
            state.save(&out)?;
            Ok(())
        }
        Command::InitConfig { out } => {
            std::fs::write(&out, RunConfig::default().to_json()?).map_err(QhmError::from)?;
            Ok(())
        }
        Command::Export { report, format: ExportFormat::Csv, out } => {
            let text = std::fs::read_to_string(&report).map_err(QhmError::from)?;
            emit(export_csv(&text)?.trim_end(), out.as_deref())?;
            Ok(())
        }
    }
}
