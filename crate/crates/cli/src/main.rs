use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use landauer_runner::{run_scenario, CliError, Overrides, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "landauer",
    version,
    about = "Simulate open quantum systems and check Landauer-like bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario or a JSON configuration.
    Run {
        /// Built-in scenario: fig1, fig1_inset, fig2 or figS1.
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        scenario: Option<String>,
        /// Path to a JSON scenario file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (default: the config's `outputs.directory`, else `out/<name>`).
        #[arg(long, env = "LANDAUER_OUT")]
        out: Option<PathBuf>,
        /// Also write SVG plots.
        #[arg(long)]
        plots: bool,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let Command::Run {
        scenario,
        config,
        out,
        plots,
        dt,
        t_end,
        samples,
    } = cli.command;
    let mut cfg = match (scenario, config) {
        (Some(name), _) => ScenarioConfig::preset(&name)?,
        (None, Some(path)) => ScenarioConfig::from_path(&path)?,
        (None, None) => unreachable!("clap enforces one source"),
    };
    Overrides {
        dt,
        t_end,
        n_samples: samples,
        plots,
    }
    .apply(&mut cfg)?;
    let out = out
        .or_else(|| cfg.outputs.directory.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let summary = run_scenario(&cfg, &out)?;
    for job in &summary.jobs {
        for v in &job.meta.verdicts {
            println!(
                "{:<24} {:<5} worst={:.3e} at t={}  [{}]",
                format!("{}:{}", job.meta.scenario, v.name),
                if v.holds { "ok" } else { "FAIL" },
                v.worst,
                v.worst_t,
                job.dir.display()
            );
        }
    }
    Ok(summary.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
