use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use virodyn::dynamics::Tolerances;
use virodyn_cli::{exit_code, file_config, preset_config, presets, run_scenario, ConfigError, Format, RunSettings};

#[derive(Parser)]
#[command(name = "virodyn", version, about = "Equilibria, bifurcations and cycles of a tumor/virus/immune model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the built-in scenarios.
    List,
    /// Run a preset or a config file.
    Run {
        /// Preset name, e.g. fig-BiifT17.
        #[arg(required_unless_present = "config", conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Parent directory for results; each scenario gets a subdirectory.
        #[arg(long, env = "VIRO_OUT_DIR")]
        out: Option<PathBuf>,
        /// Worker threads for grid evaluations.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        tol_abs: Option<f64>,
        #[arg(long)]
        tol_rel: Option<f64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::List => {
            for p in presets::PRESETS {
                println!("{:<14} {}", p.name, p.description);
            }
            Ok(())
        }
        Command::Run {
            preset,
            config,
            out,
            jobs,
            tol_abs,
            tol_rel,
            format,
        } => {
            let (name, cfg) = match (&preset, &config) {
                (Some(name), _) => (name.clone(), preset_config(name)?),
                (None, Some(path)) => {
                    let stem = path.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
                    (stem, file_config(path)?)
                }
                (None, None) => unreachable!("clap requires one of them"),
            };
            if let Some(n) = jobs {
                if n == 0 {
                    return Err(ConfigError::new("--jobs must be at least 1").into());
                }
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
            }
            let default = Tolerances::default();
            let tol = Tolerances::new(tol_abs.unwrap_or(default.abs), tol_rel.unwrap_or(default.rel))
                .map_err(|e| ConfigError::new(e.to_string()))?;
            let parent = out
                .or_else(|| cfg.out.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out"));
            let settings = RunSettings {
                dir: parent.join(&name),
                format,
                tol,
            };
            let m = run_scenario(&name, &cfg, &settings)?;
            println!("{}: {} files in {} ({:.2} s)", name, m.files.len(), settings.dir.display(), m.wall_time_s);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
