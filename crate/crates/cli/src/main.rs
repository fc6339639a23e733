use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cascade_sim::config::{Engine, RunConfig};
use cascade_sim::runner::{self, RunReport, WrittenFiles};

mod presets;

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "cascade-sim", version, about = "Single-photon absorption by a cascaded Λ emitter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON configuration file
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Absorption versus the target decay-rate ratio
    SweepRatio(Preset),
    /// Absorption versus mode overlap
    SweepEta(Preset),
    /// Jittered emission against a jitter-free baseline
    Jitter(Preset),
    /// Polarization entanglement success and fidelity
    Entangle(Preset),
    /// Weak coherent drive of a lone target
    Obe(Preset),
}

#[derive(Args)]
struct Overrides {
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    /// Master seed for the trajectory ensemble
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trajectories per ensemble
    #[arg(long)]
    n_traj: Option<usize>,
    /// Directory for relative output paths
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct Preset {
    #[command(flatten)]
    overrides: Overrides,
    /// Print the preset configuration as JSON and exit
    #[arg(long)]
    print_config: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Mcwf,
    Oracle,
    Both,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Mcwf => Engine::Mcwf,
            EngineArg::Oracle => Engine::Oracle,
            EngineArg::Both => Engine::Both,
        }
    }
}

fn apply(mut config: RunConfig, o: &Overrides) -> cascade_sim::Result<RunConfig> {
    if let Some(engine) = o.engine {
        config.engine = engine.into();
    }
    if let Some(seed) = o.seed {
        config.ensemble.master_seed = seed;
    }
    if let Some(n) = o.n_traj {
        config.ensemble.n_traj = n;
    }
    config.check()?;
    Ok(config)
}

fn report(report: &RunReport, files: &WrittenFiles) {
    let primary = runner::primary_observable(report.config.scenario);
    let param = report.config.sweep.as_ref().map(|s| s.path.as_str()).unwrap_or("-");
    println!("{} ({}), {:.1} s", report.config.scenario.name(), primary, report.wall_clock_seconds);
    println!("{:>14} {:>8} {:>14} {:>12}", param, "engine", "mean", "stderr");
    for point in &report.points {
        let x = point.sweep_value.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
        for row in point.rows.iter().filter(|r| r.observable == primary) {
            println!("{:>14} {:>8} {:>14.6} {:>12.2e}", x, row.engine, row.mean, row.stderr);
        }
        if point.horizon_warnings > 0 {
            eprintln!("warning: {} trajectories still excited at t_end (sweep value {x})", point.horizon_warnings);
        }
    }
    println!("wrote {}", files.csv.display());
    if let Some(path) = &files.timeseries {
        println!("wrote {}", path.display());
    }
    println!("wrote {}", files.json.display());
    if let Some(path) = &files.svg {
        println!("wrote {}", path.display());
    }
}

enum Outcome {
    Run(Box<RunConfig>, PathBuf),
    Printed,
}

/// Errors here are all usage errors.
fn resolve(command: Command) -> Result<Outcome, String> {
    let (base, overrides, print) = match command {
        Command::Run { config, overrides } => {
            let text =
                std::fs::read_to_string(&config).map_err(|e| format!("cannot read {}: {e}", config.display()))?;
            let parsed = RunConfig::from_json(&text).map_err(|e| format!("{}: {e}", config.display()))?;
            (parsed, overrides, false)
        }
        Command::SweepRatio(p) => (presets::sweep_ratio(), p.overrides, p.print_config),
        Command::SweepEta(p) => (presets::sweep_eta(), p.overrides, p.print_config),
        Command::Jitter(p) => (presets::jitter(), p.overrides, p.print_config),
        Command::Entangle(p) => (presets::entangle(), p.overrides, p.print_config),
        Command::Obe(p) => (presets::obe(), p.overrides, p.print_config),
    };
    let config = apply(base, &overrides).map_err(|e| e.to_string())?;
    if print {
        println!("{}", config.to_json_pretty());
        return Ok(Outcome::Printed);
    }
    Ok(Outcome::Run(Box::new(config), overrides.out_dir))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (config, out_dir) = match resolve(cli.command) {
        Ok(Outcome::Run(config, out_dir)) => (*config, out_dir),
        Ok(Outcome::Printed) => return ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match runner::run(&config, &out_dir) {
        Ok((r, files)) => {
            report(&r, &files);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { EXIT_USAGE } else { EXIT_RUNTIME })
        }
    }
}
