//! `kirl` command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use kirl::config::{RunConfig, SplitName};
use kirl::pipeline;
use kirl::tradeoff::{plot_data, Panel, TradeoffCurve};
use kirl::{Error, ErrorKind};

#[derive(Parser)]
#[command(name = "kirl", version, about = "Closed-form kernel invariant representation learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic Gaussian dataset (CSV plus `<stem>.schema.json`).
    GenToy {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a λ sweep described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate a saved model on a dataset and print a JSON report.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
    },
    /// Write the two-column data of one plot panel.
    PlotData {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, value_enum)]
        panel: PanelArg,
        #[arg(long)]
        out: PathBuf,
        /// Split to plot; defaults to the first split present in the curve.
        #[arg(long, value_enum)]
        split: Option<SplitArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PanelArg {
    UtilityInvariance,
    DepyDeps,
    InvarianceDeps,
    RoptLambda,
}

impl From<PanelArg> for Panel {
    fn from(p: PanelArg) -> Self {
        match p {
            PanelArg::UtilityInvariance => Panel::UtilityInvariance,
            PanelArg::DepyDeps => Panel::DepyDeps,
            PanelArg::InvarianceDeps => Panel::InvarianceDeps,
            PanelArg::RoptLambda => Panel::RoptLambda,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Val,
    Test,
}

impl From<SplitArg> for SplitName {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => SplitName::Train,
            SplitArg::Val => SplitName::Val,
            SplitArg::Test => SplitName::Test,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Validation => 2,
        ErrorKind::Numerical => 3,
        ErrorKind::Io => 4,
    }
}

fn run(cli: Cli) -> kirl::Result<()> {
    match cli.command {
        Command::GenToy { n, seed, out } => {
            let schema = pipeline::gen_toy(n, seed, &out)?;
            log::info!("wrote {} and {}", out.display(), schema.display());
        }
        Command::Sweep { config } => {
            let cfg = RunConfig::load(&config)?;
            let out = pipeline::run_sweep(&cfg)?;
            log::info!(
                "wrote {} curve points to {}",
                out.curve.points.len(),
                out.output_dir.display()
            );
        }
        Command::Eval { model, data, schema } => {
            let report = pipeline::eval_model(&model, &data, &schema)?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?;
            println!("{text}");
        }
        Command::PlotData {
            curve,
            panel,
            out,
            split,
        } => {
            let c = TradeoffCurve::load(&curve)?;
            let split = match split {
                Some(s) => s.into(),
                None => c
                    .points
                    .first()
                    .map(|p| p.split)
                    .ok_or_else(|| Error::Format(format!("{}: curve has no points", curve.display())))?,
            };
            std::fs::write(&out, plot_data(&c, panel.into(), split)).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
        }
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
