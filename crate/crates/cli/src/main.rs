use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use ghz_cli::calibration::CalibrationFile;
use ghz_cli::commands::{
    cmd_analyze, cmd_reproduce_paper, cmd_route, cmd_simulate, AnalyzeOptions,
};
use ghz_cli::config::RunConfig;
use ghz_cli::CliError;
use ghz_core::protocol::Mode;
use ghz_core::topology::CouplingGraph;

#[derive(Parser)]
#[command(
    name = "ghz",
    version,
    about = "Simulate and analyse GHZ-state decoherence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Sampled,
}

#[derive(Subcommand)]
enum Command {
    /// Find the cheapest GHZ chain of N qubits on a coupling graph.
    Route {
        #[arg(short, long)]
        n: usize,
        /// Coupling-graph TOML (default: bundled ibmqx5).
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Require the chain to start at this qubit.
        #[arg(long)]
        anchor: Option<u32>,
        /// Also print the preparation circuit as OpenQASM.
        #[arg(long)]
        qasm: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run parity scans for every configured N and delay.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        /// Output directory (default: `output_dir` from the config).
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses every core.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Fit parity scans, coherence decays and scaling laws.
    Analyze {
        /// Directory with `parity_*.csv` files.
        input: PathBuf,
        /// Output directory (default: the input directory).
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Analyse datasets from different configurations together.
        #[arg(long)]
        force: bool,
        /// Render SVG plots.
        #[arg(long)]
        svg: bool,
        /// Fit a constant offset in the parity sinusoid.
        #[arg(long)]
        offset: bool,
    },
    /// Refit the published coherence times and compare the statistics.
    ReproducePaper {
        /// Calibration TOML for the per-qubit prediction.
        #[arg(long)]
        calibration: Option<PathBuf>,
        /// Also simulate each chain under the calibration and fit T2.
        #[arg(long, requires = "calibration")]
        simulate: bool,
        /// Write the full comparison as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Route {
            n,
            graph,
            anchor,
            qasm,
            json,
        } => {
            let graph = match graph {
                Some(p) => CouplingGraph::from_file(&p).map_err(CliError::from)?,
                None => CouplingGraph::ibmqx5(),
            };
            let report = cmd_route(&graph, n, anchor, qasm)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{report}");
            }
        }
        Command::Simulate {
            config,
            out,
            seed,
            workers,
            mode,
        } => {
            let mut cfg = RunConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(m) = mode {
                cfg.mode = match m {
                    ModeArg::Exact => Mode::Exact,
                    ModeArg::Sampled => Mode::Sampled,
                };
            }
            let base = config.parent().unwrap_or(Path::new("."));
            let run = cfg.resolve(base)?;
            let out_dir = out
                .or_else(|| run.output_dir.clone())
                .context("no output directory: pass --out or set output_dir")
                .map_err(|e| CliError::config("output_dir", e.to_string()))?;
            let outcome = cmd_simulate(&run, &out_dir)?;
            println!("config_hash {}", outcome.config_hash);
            println!(
                "wrote {} datasets and {}",
                outcome.files.len(),
                outcome.manifest.display()
            );
        }
        Command::Analyze {
            input,
            out,
            force,
            svg,
            offset,
        } => {
            let out_dir = out.unwrap_or_else(|| input.clone());
            let outcome = cmd_analyze(
                &input,
                &out_dir,
                AnalyzeOptions {
                    force,
                    svg,
                    sinusoid_offset: offset,
                },
            )?;
            for d in &outcome.report.decay_fits {
                println!(
                    "N = {}: T2 = {:.4} ± {:.4} us, c_init = {:.4}",
                    d.n_qubits, d.fit.t2n_us, d.fit.t2n_se_us, d.fit.c_init
                );
            }
            println!(
                "wrote {} files to {}",
                outcome.files.len(),
                out_dir.display()
            );
        }
        Command::ReproducePaper {
            calibration,
            simulate,
            json,
        } => {
            let cal = calibration
                .as_deref()
                .map(CalibrationFile::from_file)
                .transpose()?;
            let report = cmd_reproduce_paper(cal.as_ref(), simulate)?;
            print!("{report}");
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&report)?;
                std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (category, code) = match err.downcast_ref::<CliError>() {
                Some(e) => (e.category(), e.exit_code()),
                None => ("internal", 1),
            };
            eprintln!("error[{category}]: {err}");
            ExitCode::from(code)
        }
    }
}
