//! `fracmem` command-line tool: configuration files, subcommand dispatch
//! and CSV output.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use fracmem_core::continuum::{fit_rational, psi_gamma_real, psi_linear};
use fracmem_core::sweep::plot_series;
use fracmem_core::{fmt_real, psi_table, run_observed, sweep, FieldGrid, HistoryStore, SweepOptions};

pub mod config;

pub use config::{parse_config, parse_sweep, serialize_config, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {key}: {msg}", line.map_or("config".to_string(), |l| format!("config line {l}")))]
    Config {
        line: Option<usize>,
        key: String,
        msg: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Core(#[from] fracmem_core::Error),
}

impl CliError {
    /// `2` for failures during a run (a field going non-finite), `1` for
    /// anything wrong with the input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_runtime() => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(name = "fracmem", version, about = "Time-fractional diffusion with truncated memory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation and write snapshot CSVs.
    Run {
        config: PathBuf,
        /// Overrides `out_dir` from the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Compare strategies against full memory; writes bench.csv.
    Bench {
        config: PathBuf,
        /// e.g. `full;short:50,100;arithmetic:5,10;powerlaw:3`
        #[arg(long)]
        sweep: String,
        /// Comma-separated orders; defaults to the config's gamma.
        #[arg(long, value_delimiter = ',')]
        gammas: Vec<f64>,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Runs per cell; the fastest is reported.
        #[arg(long, default_value_t = 1)]
        repeat: usize,
        /// Also write plot_data.csv with (wall time, error) series.
        #[arg(long)]
        plot_data: bool,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print the weight table as CSV.
    Weights {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        n: usize,
    },
    /// Fit a rational function to the weights; prints coefficients and
    /// constraint residuals as CSV.
    PsiFit {
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 1)]
        alpha_order: usize,
        #[arg(long, default_value_t = 2)]
        beta_order: usize,
    },
    /// Tabulate a real-lag extension of the weights as CSV.
    PsiEval {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 10.0)]
        r_max: f64,
        #[arg(long, default_value_t = 0.05)]
        r_step: f64,
        #[arg(long, default_value_t = 1)]
        alpha_order: usize,
        #[arg(long, default_value_t = 2)]
        beta_order: usize,
    },
    /// Per-step retained nodes and weights of the configured strategy.
    MemoryTrace {
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Linear,
    Gamma,
    Rational,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to stderr.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match execute(cli.command, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load(path: &Path, out_dir: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut cfg = parse_config(&text)?;
    if let Some(dir) = out_dir {
        cfg.out_dir = dir;
    }
    fs::create_dir_all(&cfg.out_dir).map_err(io_err(&cfg.out_dir))?;
    Ok(cfg)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

/// Hex SHA-256 of the field's canonical byte form.
pub fn checksum(u: &FieldGrid) -> String {
    Sha256::digest(u.canonical_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn snapshot_name(step: usize) -> String {
    format!("u_k{step:06}.csv")
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<(), CliError> {
    let stdout_err = |e: io::Error| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    match cmd {
        Command::Run { config, out_dir } => {
            let cfg = load(&config, out_dir)?;
            let start = Instant::now();
            let traj = run_observed(&cfg.sim, |_| {})?;
            let wall = start.elapsed().as_secs_f64();
            let mut snapshots = traj.snapshots;
            if snapshots.last().map(|(s, _)| *s) != Some(cfg.sim.steps) {
                snapshots.push((cfg.sim.steps, traj.final_field.clone()));
            }
            for (step, field) in &snapshots {
                write_file(&cfg.out_dir.join(snapshot_name(*step)), &field.to_csv())?;
            }
            writeln!(
                out,
                "steps={} wall_time_s={wall:.6} checksum={}",
                cfg.sim.steps,
                checksum(&traj.final_field)
            )
            .map_err(stdout_err)?;
        }
        Command::Bench {
            config,
            sweep: spec,
            gammas,
            workers,
            repeat,
            plot_data,
            out_dir,
        } => {
            let strategies = parse_sweep(&spec)?;
            let cfg = load(&config, out_dir)?;
            let gammas = if gammas.is_empty() {
                vec![cfg.sim.gamma]
            } else {
                gammas
            };
            if repeat == 0 {
                return Err(CliError::Usage("--repeat must be at least 1".into()));
            }
            let records = sweep(&cfg.sim, &strategies, &gammas, &SweepOptions { workers, repeat })?;
            let path = cfg.out_dir.join("bench.csv");
            let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
            w.write_record(["strategy", "param", "gamma", "steps", "wall_time_s", "rel_error_pct", "nodes_stored"])
                .map_err(csv_err(&path))?;
            for r in &records {
                let param = r.strategy.param().map(|p| p.to_string()).unwrap_or_default();
                let (wall, err, nodes) = if r.is_ok() {
                    (format!("{:.6}", r.wall_time_s), fmt_real(r.rel_error_pct), r.nodes_stored.to_string())
                } else {
                    Default::default()
                };
                w.write_record([r.strategy.tag().to_string(), param, r.gamma.to_string(), r.steps.to_string(), wall, err, nodes])
                    .map_err(csv_err(&path))?;
            }
            w.flush().map_err(io_err(&path))?;
            let failed = records.iter().filter(|r| !r.is_ok()).count();
            if failed > 0 {
                log::warn!("{failed} sweep cell(s) failed; their rows have empty measurements");
            }
            if plot_data {
                let path = cfg.out_dir.join("plot_data.csv");
                let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
                w.write_record(["strategy", "gamma", "wall_time_s", "rel_error_pct"])
                    .map_err(csv_err(&path))?;
                for ((tag, gamma), series) in plot_series(&records) {
                    for (t, e) in series {
                        w.write_record([tag.clone(), gamma.clone(), format!("{t:.6}"), fmt_real(e)])
                            .map_err(csv_err(&path))?;
                    }
                }
                w.flush().map_err(io_err(&path))?;
            }
            writeln!(out, "wrote {} rows to {}", records.len(), cfg.out_dir.join("bench.csv").display())
                .map_err(stdout_err)?;
        }
        Command::Weights { gamma, n } => {
            let table = psi_table(gamma, n)?;
            let mut text = String::from("m,psi\n");
            for (m, v) in table.values().iter().enumerate() {
                text.push_str(&format!("{m},{}\n", fmt_real(*v)));
            }
            out.write_all(text.as_bytes()).map_err(stdout_err)?;
        }
        Command::PsiFit {
            gamma,
            alpha_order,
            beta_order,
        } => {
            let table = psi_table(gamma, alpha_order + beta_order)?;
            let fit = fit_rational(gamma, alpha_order, beta_order, &table)?;
            let mut text = String::from("kind,index,value\n");
            let rows = [
                ("p", fit.numerator.clone()),
                ("q", fit.denominator.clone()),
                ("residual", fit.residuals(&table)),
            ];
            for (kind, values) in rows {
                for (i, v) in values.iter().enumerate() {
                    text.push_str(&format!("{kind},{i},{}\n", fmt_real(*v)));
                }
            }
            out.write_all(text.as_bytes()).map_err(stdout_err)?;
        }
        Command::PsiEval {
            method,
            gamma,
            r_max,
            r_step,
            alpha_order,
            beta_order,
        } => {
            if !(r_step > 0.0 && r_max >= 0.0 && r_max.is_finite()) {
                return Err(CliError::Usage("need --r-step > 0 and a finite --r-max >= 0".into()));
            }
            let count = (r_max / r_step + 1e-9).floor() as usize;
            let grid = (0..=count).map(|i| i as f64 * r_step);
            let table = psi_table(gamma, r_max.ceil() as usize + alpha_order + beta_order)?;
            let fit = match method {
                Method::Rational => Some(fit_rational(gamma, alpha_order, beta_order, &table)?),
                _ => None,
            };
            let mut text = String::from("r,psi\n");
            for r in grid {
                let v = match method {
                    Method::Linear => psi_linear(r, &table)?,
                    Method::Gamma => psi_gamma_real(gamma, r)?,
                    Method::Rational => fit.as_ref().expect("fitted above").eval(r),
                };
                text.push_str(&format!("{},{}\n", fmt_real(r), fmt_real(v)));
            }
            out.write_all(text.as_bytes()).map_err(stdout_err)?;
        }
        Command::MemoryTrace { config, out_dir } => {
            let cfg = load(&config, out_dir)?;
            let mut store: HistoryStore<()> = HistoryStore::new(&cfg.sim.strategy, cfg.sim.dt)?;
            let path = cfg.out_dir.join("memory_trace.csv");
            let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
            w.write_record(["k", "nodes", "sum_weights", "weights_json"])
                .map_err(csv_err(&path))?;
            for k in 0..cfg.sim.steps {
                store.push(())?;
                let sum: u64 = store.terms().iter().map(|t| t.multiplier).sum();
                let hist = serde_json::to_string(&store.weight_histogram())
                    .expect("integer map serializes");
                w.write_record([k.to_string(), store.footprint().to_string(), sum.to_string(), hist])
                    .map_err(csv_err(&path))?;
            }
            w.flush().map_err(io_err(&path))?;
            writeln!(out, "wrote {}", path.display()).map_err(stdout_err)?;
        }
    }
    Ok(())
}
