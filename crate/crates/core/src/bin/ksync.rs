//! Command-line front end: `ksync <subcommand> --config run.json`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ksync::grp::write_points;
use ksync::harness::{
    emit_plot, run_disentangle, run_grp, run_simulate, run_sweep, run_theory, write_csv,
    write_sweep, ExperimentConfig, Mode,
};
use ksync::SyncError;

#[derive(Parser)]
#[command(
    name = "ksync",
    version,
    about = "Heterogeneous angular synchronization experiments"
)]
struct Cli {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (all cores when omitted).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one sampled instance with every configured solver.
    Simulate,
    /// Setup I / Setup II Monte-Carlo sweep.
    Sweep {
        /// Also draw the sweep as an SVG chart.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Sweep with several solvers side by side.
    Compare {
        /// Also draw the comparison as an SVG chart.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Iterative synchronization and graph disentangling.
    Disentangle,
    /// Two-configuration graph realization.
    Grp,
    /// Evaluate the theoretical bounds.
    Theory,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<SyncError> for Failure {
    fn from(e: SyncError) -> Self {
        match e {
            SyncError::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn load_config(cli: &Cli, default_mode: Option<Mode>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match (&cli.config, default_mode) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(mode)) => {
            ExperimentConfig::from_json(&format!(r#"{{"mode": "{}"}}"#, mode.as_str()))?
        }
        (None, None) => return Err(Failure::Config("--config is required".into())),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn validated(cfg: &ExperimentConfig) -> Result<(), Failure> {
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Simulate => {
            let cfg = load_config(cli, None)?;
            validated(&cfg)?;
            let res = run_simulate(&cfg)?;
            let json = serde_json::to_string_pretty(&res).expect("summary serializes");
            emit(cfg.output.as_deref(), &(json + "\n"))
        }
        Command::Sweep { plot } | Command::Compare { plot } => {
            let mut cfg = load_config(cli, None)?;
            if !matches!(cfg.mode, Mode::Setup1 | Mode::Setup2 | Mode::Compare) {
                return Err(Failure::Config(format!(
                    "mode {} cannot be swept",
                    cfg.mode.as_str()
                )));
            }
            if matches!(cli.command, Command::Compare { .. }) {
                if cfg.mode == Mode::Setup2 && cfg.gamma.is_none() {
                    return Err(Failure::Config("setup2 comparison needs `gamma`".into()));
                }
                cfg.mode = Mode::Compare;
            }
            validated(&cfg)?;
            let out = run_sweep(&cfg, cli.threads)?;
            match &cfg.output {
                Some(path) => write_sweep(&out, path)?,
                None => write_csv(std::io::stdout().lock(), &out.rows)?,
            }
            if let Some(svg) = plot {
                emit_plot(&out.rows, svg)?;
            }
            Ok(())
        }
        Command::Disentangle => {
            let cfg = load_config(cli, None)?;
            if cfg.mode != Mode::Disentangle {
                return Err(Failure::Config("config mode must be `disentangle`".into()));
            }
            validated(&cfg)?;
            let res = run_disentangle(&cfg)?;
            emit(cfg.output.as_deref(), &res.csv())?;
            if let Some(out) = &cfg.output {
                for l in 0..cfg.k {
                    let sub = res.last.good_subgraph(&res.graph, l);
                    sub.write_to(std::fs::File::create(with_suffix(
                        out,
                        &format!(".G{}.txt", l + 1),
                    ))?)?;
                }
                let bad = res.last.bad_subgraph(&res.graph);
                bad.write_to(std::fs::File::create(with_suffix(out, ".W.txt"))?)?;
            }
            Ok(())
        }
        Command::Grp => {
            let cfg = load_config(cli, Some(Mode::Grp))?;
            if cfg.mode != Mode::Grp {
                return Err(Failure::Config("config mode must be `grp`".into()));
            }
            validated(&cfg)?;
            let res = run_grp(&cfg)?;
            emit(cfg.output.as_deref(), &res.csv())?;
            if let Some(out) = &cfg.output {
                write_points(
                    std::fs::File::create(with_suffix(out, ".truth.X.csv"))?,
                    &res.truth.x,
                )?;
                write_points(
                    std::fs::File::create(with_suffix(out, ".truth.Y.csv"))?,
                    &res.truth.y,
                )?;
                for (sigma, rec) in &res.recoveries {
                    let tag = format!(".sigma{sigma}");
                    write_points(
                        std::fs::File::create(with_suffix(out, &format!("{tag}.X.csv")))?,
                        &rec.x_hat.points,
                    )?;
                    write_points(
                        std::fs::File::create(with_suffix(out, &format!("{tag}.Y.csv")))?,
                        &rec.y_hat.points,
                    )?;
                }
            }
            Ok(())
        }
        Command::Theory => {
            let cfg = load_config(cli, None)?;
            if cfg.mode != Mode::Theory {
                return Err(Failure::Config("config mode must be `theory`".into()));
            }
            validated(&cfg)?;
            let report = run_theory(&cfg)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            emit(cfg.output.as_deref(), &(json + "\n"))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
