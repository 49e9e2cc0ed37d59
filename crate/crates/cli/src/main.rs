use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use photon_qec_cli::config::ExperimentKind;
use photon_qec_cli::{presets, CliError, CliResult, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(
    name = "photon-qec",
    version,
    about = "Loss-cancellation experiments on truncated Fock spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSV tables plus manifest.json.
    Run(Target),
    /// Check a config and print what it would run.
    Validate(Target),
    /// List built-in presets, or print one as JSON.
    Presets { name: Option<String> },
    /// Run a calibrate experiment.
    Calibrate(Target),
}

#[derive(Args)]
struct Target {
    /// Config file, or a manifest.json from an earlier run.
    config: Option<PathBuf>,
    /// Use a built-in preset instead of a file.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    experiments: Option<usize>,
}

impl Target {
    fn load(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => presets::find(name)
                .ok_or_else(|| {
                    CliError::config(format!("unknown preset {name:?}; see `photon-qec presets`"))
                })?
                .config(),
            (None, None) => return Err(CliError::config("give a config file or --preset NAME")),
        };
        cfg.apply(&Overrides {
            shots: self.shots,
            seed: self.seed,
            output: self.output.clone(),
            experiments: self.experiments,
        });
        Ok(cfg)
    }
}

fn run(cfg: &ExperimentConfig) -> CliResult<()> {
    let start = Instant::now();
    let files = photon_qec_cli::run_and_write(cfg)?;
    for f in files {
        println!("{}", f.display());
    }
    eprintln!(
        "{} finished in {:.1} s",
        cfg.name,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    photon_qec_cli::configure_threads()?;
    match cli.command {
        Command::Run(t) => run(&t.load()?),
        Command::Calibrate(t) => {
            let cfg = t.load()?;
            if cfg.experiment != ExperimentKind::Calibrate {
                return Err(CliError::config(format!(
                    "experiment: the calibrate subcommand needs \"calibrate\", got {:?}",
                    cfg.experiment.as_str()
                )));
            }
            run(&cfg)
        }
        Command::Validate(t) => {
            let cfg = t.load()?;
            let errors = cfg.validate();
            if !errors.is_empty() {
                return Err(CliError::Config(errors));
            }
            println!("ok\n{}", cfg.describe());
            Ok(())
        }
        Command::Presets { name: None } => {
            for p in presets::PRESETS {
                println!("{:<10} {:<8} {}", p.name, p.budget, p.description);
            }
            Ok(())
        }
        Command::Presets { name: Some(name) } => {
            let p = presets::find(&name)
                .ok_or_else(|| CliError::config(format!("unknown preset {name:?}")))?;
            println!(
                "{}",
                serde_json::to_string_pretty(&p.build_value()).expect("serialisable")
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
