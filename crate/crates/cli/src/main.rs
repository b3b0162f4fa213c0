use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use imtrack::parallel::Execution;
use imtrack::replay::{read_bboxes, replay_bboxes};
use imtrack::scenario::{run_scenario, write_artifacts, ScenarioConfig, ScenarioOutput};
use imtrack::{scenarios, Error};

/// Extended object tracking with image moments.
#[derive(Debug, Parser)]
#[command(name = "imtrack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment from a config file or built-in scenario name.
    Run {
        config: String,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for track CSVs, mode probabilities and metrics.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Execute runs on the calling thread only.
        #[arg(long)]
        sequential: bool,
    },
    /// Track points drawn from a bounding-box log (`frame,cx,cy,w,h,theta`).
    Replay {
        bboxes: PathBuf,
        config: String,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
    /// Print the names of the built-in scenarios.
    ListScenarios,
}

fn load_config(spec: &str, runs: Option<usize>, seed: Option<u64>) -> Result<ScenarioConfig, Error> {
    let path = Path::new(spec);
    let mut cfg = if path.exists() {
        ScenarioConfig::from_path(path)?
    } else {
        scenarios::builtin(spec)?
    };
    if let Some(r) = runs {
        cfg.runs = r;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn finish(cfg: &ScenarioConfig, output: &ScenarioOutput, out: Option<&Path>) -> Result<(), Error> {
    if let Some(dir) = out {
        write_artifacts(dir, output)?;
    }
    let r = &output.report;
    println!("scenario        {}", cfg.name);
    println!("runs            {}", r.runs);
    println!("epochs          {}", r.times.len());
    println!("mean IoU        {:.4}", r.mean_iou);
    println!("position RMSE   {:.4}", r.mean_position_rmse);
    println!("velocity RMSE   {:.4}", r.mean_velocity_rmse);
    Ok(())
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn main_inner(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            runs,
            seed,
            out,
            sequential,
        } => {
            let cfg = load_config(&config, runs, seed)?;
            let output = run_scenario(&cfg, execution(sequential))?;
            finish(&cfg, &output, out.as_deref())
        }
        Command::Replay {
            bboxes,
            config,
            runs,
            seed,
            out,
            sequential,
        } => {
            let cfg = load_config(&config, runs, seed)?;
            let records = read_bboxes(&bboxes)?;
            let output = replay_bboxes(&records, &cfg, execution(sequential))?;
            finish(&cfg, &output, out.as_deref())
        }
        Command::ListScenarios => {
            for name in scenarios::names() {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(if e.is_config() {
                2
            } else if e.is_numerical() {
                3
            } else {
                1
            })
        }
    }
}
