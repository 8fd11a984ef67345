use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rotflow::pipeline::sweep::{sweep, SweepAxis};
use rotflow::pipeline::{run_stages, Command, PipelineConfig};
use rotflow::Result;

/// Build, evolve and analyze compactly supported rotating 2D Euler flows.
#[derive(Parser)]
#[command(name = "rotflow", version)]
struct Cli {
    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Pipeline config (TOML).
    #[arg(long, short)]
    config: PathBuf,

    /// Output directory; defaults to `output_dir` from the config, then `out`.
    #[arg(long, short)]
    out: Option<PathBuf>,

    /// Override a config value, e.g. `grid.resolution=512`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample the glued fields and check the static residual.
    Build(Common),
    /// Evolve the initial vorticity and compare with rigid rotation.
    Simulate(Common),
    /// Run the rigidity diagnostics.
    Analyze(Common),
    /// Run stages over the cartesian product of parameter ranges.
    Sweep {
        #[command(flatten)]
        common: Common,

        /// Swept values, e.g. `grid.resolution=128,256`.
        #[arg(long = "param", value_name = "KEY=V1,V2,...")]
        params: Vec<String>,

        /// Stages to run in each cell.
        #[arg(long, value_delimiter = ',', default_value = "build,simulate")]
        stages: Vec<String>,
    },
}

fn out_dir(common: &Common, cfg: Option<&PipelineConfig>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| Path::new("out").to_path_buf())
}

fn single(common: &Common, command: Command) -> Result<bool> {
    let cfg = PipelineConfig::load(&common.config, &common.overrides)?;
    let out = out_dir(common, Some(&cfg));
    let outcome = run_stages(&cfg, &[command], &out)?;
    println!("{}: {} ({})", command.name(), if outcome.passed { "ok" } else { "tolerance not met" }, out.display());
    Ok(outcome.passed)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Cmd::Build(c) => single(&c, Command::Build),
        Cmd::Simulate(c) => single(&c, Command::Simulate),
        Cmd::Analyze(c) => single(&c, Command::Analyze),
        Cmd::Sweep { common, params, stages } => {
            let axes = params.iter().map(|p| SweepAxis::parse(p)).collect::<Result<Vec<_>>>()?;
            let stages = stages.iter().map(|s| Command::parse(s)).collect::<Result<Vec<_>>>()?;
            let base = PipelineConfig::load(&common.config, &common.overrides)?;
            let out = out_dir(&common, Some(&base));
            let results = sweep(&common.config, &common.overrides, &axes, &stages, &out)?;
            let failed = results.iter().filter(|r| r.status != "ok").count();
            println!("sweep: {} cells, {failed} not ok ({})", results.len(), out.join("aggregate.csv").display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
