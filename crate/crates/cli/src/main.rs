use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use aeromec::harness::{self, SweepAxis};
use aeromec::mappo::{checkpoint, Trainer, Variant};

#[derive(Parser)]
#[command(name = "aeromec", about = "UAV edge-computing simulator and trainer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunOpts {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the seed list, e.g. --seeds 1,2,3.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Override the algorithm variant (ab-mappo, b-mappo, ag-mappo, random).
    #[arg(long)]
    variant: Option<String>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of training episodes.
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one or more seeds and write run artifacts.
    Run(RunOpts),
    /// Train across a range of one environment parameter.
    Sweep {
        #[command(flatten)]
        opts: RunOpts,
        /// Swept parameter: num-mus, num-uavs, bandwidth, weight-factor,
        /// deviation, f-max-local, f-max-edge or task-bits.
        #[arg(long)]
        axis: String,
        /// Values of the swept parameter, e.g. --values 3e7,5e7,7e7.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Run a greedy evaluation episode from a saved checkpoint.
    Evaluate {
        #[command(flatten)]
        opts: RunOpts,
        /// Checkpoint written by a previous `run`.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Episode index used for the evaluation RNG streams.
        #[arg(long, default_value_t = 0)]
        episode: u64,
    },
    /// Run the built-in invariant checks.
    Validate,
}

fn resolved_from(opts: &RunOpts) -> Result<harness::Resolved> {
    let mut resolved = match &opts.config {
        Some(path) => harness::load(path)
            .with_context(|| format!("loading {}", path.display()))?,
        None => harness::resolve(Default::default())?,
    };
    if let Some(seeds) = &opts.seeds {
        if seeds.is_empty() {
            bail!("--seeds needs at least one seed");
        }
        resolved.seeds = seeds.clone();
    }
    if let Some(name) = &opts.variant {
        resolved.variant = Variant::parse(name)
            .with_context(|| format!("unknown variant \"{name}\""))?;
    }
    if let Some(out) = &opts.out {
        resolved.out_dir = out.clone();
    }
    if let Some(episodes) = opts.episodes {
        resolved.train.episodes = episodes;
    }
    Ok(resolved)
}

fn cmd_run(opts: RunOpts) -> Result<()> {
    let resolved = resolved_from(&opts)?;
    for &seed in &resolved.seeds {
        let arts = harness::run_experiment(&resolved, seed)?;
        println!(
            "{} seed {seed}: final weighted energy {:.3} ± {:.3} J, eval {:.3} J -> {}",
            resolved.variant.name(),
            arts.summary.final_weighted_energy_mean,
            arts.summary.final_weighted_energy_std,
            arts.summary.eval_weighted_energy,
            arts.dir.display()
        );
    }
    Ok(())
}

fn cmd_sweep(opts: RunOpts, axis: String, values: Vec<f64>) -> Result<()> {
    let resolved = resolved_from(&opts)?;
    let axis = SweepAxis::parse(&axis).with_context(|| format!("unknown axis \"{axis}\""))?;
    let points = harness::run_sweep(
        &resolved.env,
        resolved.train,
        resolved.variant,
        axis,
        &values,
        &resolved.seeds,
        &resolved.out_dir,
    )?;
    for p in points {
        println!(
            "{} = {} seed {}: weighted energy {:.3} J, jain {:.3}",
            axis.name(),
            p.value,
            p.seed,
            p.weighted_energy,
            p.jain_index
        );
    }
    println!("wrote {}", resolved.out_dir.join("sweep.csv").display());
    Ok(())
}

fn cmd_evaluate(opts: RunOpts, path: PathBuf, episode: u64) -> Result<()> {
    let resolved = resolved_from(&opts)?;
    let seed = resolved.seeds[0];
    let mut trainer =
        Trainer::new(resolved.env.clone(), resolved.train, resolved.variant, seed);
    checkpoint::load(&mut trainer, &path)
        .with_context(|| format!("loading {}", path.display()))?;
    let (stats, _) = trainer.evaluate_episode(episode);
    println!("{}", serde_json::to_string_pretty(&stats)?);
    Ok(())
}

fn cmd_validate() -> Result<bool> {
    let results = harness::run_validation();
    let mut all_ok = true;
    for r in &results {
        println!("{} {} ({})", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        all_ok &= r.passed;
    }
    Ok(all_ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(opts) => cmd_run(opts).map(|()| true),
        Command::Sweep { opts, axis, values } => cmd_sweep(opts, axis, values).map(|()| true),
        Command::Evaluate { opts, checkpoint, episode } => {
            cmd_evaluate(opts, checkpoint, episode).map(|()| true)
        }
        Command::Validate => cmd_validate(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
