use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info};

use submig::experiment::{self, ExperimentConfig, ForwardModel};
use submig::export;
use submig::theory;
use submig::{Error, Result, Vec2};

#[derive(Parser)]
#[command(name = "submig", version, about = "Subspace-migration imaging of small inclusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its bundle.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Re-run the config recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        #[arg(long, env = "SUBMIG_OUTPUT_DIR")]
        output_dir: PathBuf,
    },
    /// Write only the predicted maps for a config.
    Theory {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compare two heat-map CSV files and print the report as JSON.
    Compare {
        computed: PathBuf,
        predicted: PathBuf,
        /// True scatterer location `x,y`; repeatable.
        #[arg(long = "target", value_parser = parse_point, allow_hyphen_values = true)]
        targets: Vec<Vec2>,
    },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "SUBMIG_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    no_noise: bool,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Born,
    FoldyLax,
}

fn parse_point(s: &str) -> std::result::Result<Vec2, String> {
    let (x, y) = s.split_once(',').ok_or("expected `x,y`")?;
    let x = x.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = y.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok(Vec2::new(x, y))
}

fn load(path: &PathBuf, o: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = experiment::load_config(path)?;
    if let Some(seed) = o.seed {
        cfg.noise.seed = seed;
    }
    if o.no_noise {
        cfg.noise.snr_db = None;
    }
    if let Some(m) = o.model {
        cfg.model = match m {
            ModelArg::Born => ForwardModel::Born,
            ModelArg::FoldyLax => ForwardModel::FoldyLax,
        };
    }
    if let Some(dir) = &o.output_dir {
        cfg.output.directory = dir.clone();
    }
    Ok(cfg)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            let m = experiment::run_experiment(&cfg)?;
            info!("wrote {}", cfg.output.directory.display());
            if m.sweep.is_empty() {
                println!("significant counts: {:?}", m.significant_counts);
                if let Some(p) = &m.multi_peaks {
                    for pk in &p.peaks {
                        println!("peak ({:.3}, {:.3}) value {:.4}", pk.location.x, pk.location.y, pk.value);
                    }
                }
            } else {
                for e in &m.sweep {
                    println!("S = {:2}: off-target max {:?}", e.count, e.off_target_max);
                }
            }
        }
        Command::Rerun { manifest, output_dir } => {
            experiment::rerun(&manifest, &output_dir)?;
            info!("wrote {}", output_dir.display());
        }
        Command::Theory { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            for f in experiment::run_theory(&cfg)? {
                println!("{}", cfg.output.directory.join(f).display());
            }
        }
        Command::Compare {
            computed,
            predicted,
            targets,
        } => {
            let a = export::read_heatmap_csv(&computed)?;
            let b = export::read_heatmap_csv(&predicted)?;
            print_json(&theory::compare_maps(&a, &b, &targets)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
