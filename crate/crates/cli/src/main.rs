use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dynslam::eval::RunStatus;
use dynslam::experiment::{preset, preset_names, run_experiment, run_suite, ExperimentConfig, Solver};
use dynslam::formulations::Formulation;
use dynslam::sim::{generate_scene, write_measurements, SceneConfig};

#[derive(Parser)]
#[command(name = "dynslam", version, about = "Dynamic SLAM experiments on simulated scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method and write its report.
    Run(RunArgs),
    /// Run the full method matrix on one scene.
    Suite(RunArgs),
    /// Simulate a scene and write measurements and ground truth.
    Simulate {
        /// Scene file, or an experiment file with an inline scene.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the shipped presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Shipped experiment config; flags override its fields.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    formulation: Option<Formulation>,
    #[arg(long)]
    solver: Option<Solver>,
    #[arg(long)]
    relinearize_skip: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    budget_mb: Option<f64>,
}

fn load(config: &Option<PathBuf>, preset_name: &Option<String>) -> dynslam::Result<ExperimentConfig> {
    match (config, preset_name) {
        (Some(_), Some(_)) => Err(dynslam::Error::InvalidConfig("give either --config or --preset, not both".into())),
        (Some(path), None) => ExperimentConfig::from_path(path),
        (None, Some(name)) => preset(name),
        (None, None) => Err(dynslam::Error::InvalidConfig("one of --config or --preset is required".into())),
    }
}

impl RunArgs {
    fn resolve(&self) -> dynslam::Result<ExperimentConfig> {
        let mut cfg = load(&self.config, &self.preset)?;
        if let Some(f) = self.formulation {
            cfg.formulation = f;
        }
        if let Some(s) = self.solver {
            cfg.solver = s;
        }
        if let Some(k) = self.relinearize_skip {
            cfg.incremental.relinearize_skip = k;
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        if self.budget_mb.is_some() {
            cfg.budget_mb = self.budget_mb;
        }
        Ok(cfg)
    }
}

fn simulate_scene(config: &Option<PathBuf>, preset_name: &Option<String>, seed: Option<u64>, out: &PathBuf) -> dynslam::Result<()> {
    let mut scene = match (config, preset_name) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            match SceneConfig::from_toml(&text) {
                Ok(s) => s,
                Err(_) => ExperimentConfig::from_path(path)?.resolve_scene()?,
            }
        }
        _ => load(config, preset_name)?.resolve_scene()?,
    };
    if let Some(s) = seed {
        scene.rng_seed = s;
    }
    let (truth, frames) = generate_scene(&scene)?;
    std::fs::create_dir_all(out)?;
    write_measurements(&frames, std::fs::File::create(out.join("measurements.csv"))?)?;
    let json = serde_json::to_string_pretty(&truth).map_err(|e| dynslam::Error::Parse(e.to_string()))?;
    std::fs::write(out.join("ground_truth.json"), json)?;
    std::fs::write(out.join("scene.toml"), scene.to_toml()?)?;
    println!("wrote {} frames to {}", frames.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => args.resolve().and_then(|c| run_experiment(&c)),
        Command::Suite(args) => args.resolve().and_then(|c| run_suite(&c)),
        Command::Simulate { config, preset, seed, out } => {
            return match simulate_scene(config, preset, *seed, out) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            };
        }
        Command::Presets => {
            for name in preset_names() {
                println!("{name}");
            }
            return ExitCode::SUCCESS;
        }
    };
    match result {
        Ok(report) => {
            print!("{}", report.to_text());
            if report.methods.iter().any(|m| matches!(m.status, RunStatus::Failed(_))) {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
