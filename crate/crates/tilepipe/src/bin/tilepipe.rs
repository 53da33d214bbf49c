//! Command-line front end: `tilepipe run` executes one configured
//! pipeline run, `tilepipe sweep` compares stage configurations on the
//! identical sequence. Exit codes: 0 success, 1 configuration error,
//! 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tilepipe::config::{execute_run, execute_sweep, ExecError, RunConfig};
use tilepipe::pipeline::{RunReport, StageConfig};
use tilepipe::report::{write_report, write_sweep};

#[derive(Parser)]
#[command(name = "tilepipe", version, about = "Detect/tile/track pipeline harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (sectioned key = value text).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured platform id.
    #[arg(long)]
    platform: Option<String>,
    /// Also emit SVG plots.
    #[arg(long)]
    plot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run and write its report.
    Run {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run several stage configurations on the identical sequence.
    Sweep {
        /// Comma-separated stage configs, e.g. 1-1-1,1-3-5,1-10-5.
        #[arg(long)]
        configs: String,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, ExecError> {
    let mut cfg = RunConfig::from_file(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.apply_seed(seed);
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(platform) = &common.platform {
        cfg.platform = platform.clone();
    }
    Ok(cfg)
}

fn print_report_line(stages: &str, report: &RunReport) {
    let sen = report.sen.map(|s| format!("{s:.4}")).unwrap_or_else(|| "na".into());
    println!(
        "{stages}: sen {sen}  apt {:.6} s  apc {:.3} W  stages {:?}",
        report.apt, report.apc, report.stage_histogram
    );
}

fn cmd_run(common: CommonArgs) -> Result<(), ExecError> {
    let cfg = load_config(&common)?;
    let report = execute_run(&cfg)?;
    print_report_line(&cfg.stages.to_string(), &report);
    let files = write_report(&report, &cfg.out_dir, common.plot)
        .map_err(|e| ExecError::Runtime(e.to_string()))?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn parse_sweep_configs(spec: &str) -> Result<Vec<StageConfig>, ExecError> {
    let configs: Result<Vec<StageConfig>, _> =
        spec.split(',').map(|s| s.trim().parse()).collect();
    let configs = configs.map_err(|e| ExecError::Config(format!("bad --configs: {e}")))?;
    if configs.is_empty() {
        return Err(ExecError::Config("sweep needs at least one config".into()));
    }
    Ok(configs)
}

fn cmd_sweep(configs: String, common: CommonArgs) -> Result<(), ExecError> {
    let cfg = load_config(&common)?;
    let stage_configs = parse_sweep_configs(&configs)?;
    match execute_sweep(&stage_configs, &cfg) {
        Ok(sweep) => {
            for e in &sweep.entries {
                print_report_line(&e.stages.to_string(), &e.report);
            }
            let files = write_sweep(&sweep, &cfg.out_dir, common.plot, None)
                .map_err(|e| ExecError::Runtime(e.to_string()))?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Err(err) => {
            // flag partial results, then propagate the per-run failure
            let note = err.to_string();
            eprintln!("{note}");
            let _ = write_sweep(&err.partial, &cfg.out_dir, common.plot, Some(&note));
            Err(err.source)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are success, anything else is a
            // configuration error
            if e.use_stderr() {
                let _ = e.print();
                return ExitCode::from(1);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Run { common } => cmd_run(common),
        Command::Sweep { configs, common } => cmd_sweep(configs, common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ ExecError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e @ ExecError::Runtime(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
