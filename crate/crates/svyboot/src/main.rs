use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use svyboot::commands::{ci_report, format_oracle, oracle_single, oracle_two_stage, CiOptions};
use svyboot::config::{parse_z_grid, Overrides};
use svyboot::experiments::{
    coverage_rows, distribution_rows, run_expansion_check, run_reps, sampling_cdf, write_coverage_csv,
    write_distribution_csv, write_expansion_csv, DesignName, ExperimentConfig, Scenario,
};
use svyboot::io;

#[derive(Parser)]
#[command(name = "svyboot", version, about = "Design-based bootstrap-t intervals for finite-population totals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo studies on simulated populations.
    Simulate {
        #[command(subcommand)]
        study: Study,
    },
    /// Wald and bootstrap-t intervals for an observed sample.
    Ci(CiArgs),
    /// Exact design moments by enumerating every sample of a small population.
    Oracle(OracleArgs),
}

#[derive(Subcommand)]
enum Study {
    /// Coverage and mean length of 90% (or --level) intervals.
    Coverage(SimArgs),
    /// Sampling CDF of T against the bootstrap and normal CDFs on a z grid.
    Distribution(SimArgs),
    /// One sample's bootstrap CDF against its Edgeworth expansion.
    Expansion(SimArgs),
}

#[derive(Args)]
struct SimArgs {
    /// JSON file with any of the settings below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(DesignName))]
    design: Option<DesignName>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    /// Bootstrap replicates per sample.
    #[arg(long = "M")]
    replicates: Option<usize>,
    /// Outer Monte Carlo repetitions.
    #[arg(long)]
    reps: Option<usize>,
    /// Samples used for the sampling distribution of T.
    #[arg(long)]
    truth_draws: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    level: Option<f64>,
    /// Comma-separated grid, e.g. "-0.5,-0.25,-0.1,0,0.1,0.25,0.5".
    #[arg(long, allow_hyphen_values = true)]
    z_grid: Option<String>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    population_size: Option<usize>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    min_cluster_size: Option<usize>,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SimArgs {
    fn resolve(self) -> Result<(ExperimentConfig, Option<PathBuf>)> {
        let file = match &self.config {
            Some(path) => Overrides::from_json_file(path)?,
            None => Overrides::default(),
        };
        let flags = Overrides {
            design: self.design,
            n0: self.n0,
            n1: self.n1,
            n2: self.n2,
            replicates: self.replicates,
            reps: self.reps,
            truth_draws: self.truth_draws,
            seed: self.seed,
            level: self.level,
            z_grid: self.z_grid.as_deref().map(parse_z_grid).transpose().map_err(anyhow::Error::msg)?,
            workers: self.workers,
            population_size: self.population_size,
            clusters: self.clusters,
            min_cluster_size: self.min_cluster_size,
            out: self.out,
        };
        let merged = flags.over(file);
        let cfg = merged.apply(ExperimentConfig::default());
        cfg.validate()?;
        Ok((cfg, merged.out))
    }
}

#[derive(Args)]
struct CiArgs {
    /// Population CSV with column `y` and optional size column `z`.
    #[arg(long)]
    population: PathBuf,
    /// Sample CSV with column `index` (0-based population rows).
    #[arg(long)]
    sample: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(DesignName))]
    design: DesignName,
    /// Expected sample size for Poisson sampling.
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long, default_value_t = 0.90)]
    level: f64,
    #[arg(long = "M", default_value_t = 1000)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct OracleArgs {
    /// Population CSV: `y[,z]` for single-stage designs, `cluster_id,y` for two-stage.
    #[arg(long)]
    population: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(DesignName))]
    design: DesignName,
    /// Sample size (SRS, PPS) or expected sample size (Poisson).
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn simulate(study: Study) -> Result<()> {
    match study {
        Study::Coverage(args) => {
            let (cfg, out) = args.resolve()?;
            let scenario = Scenario::build(&cfg)?;
            let mc = run_reps(&cfg, &scenario)?;
            write_coverage_csv(output(out.as_ref())?, &coverage_rows(&cfg, &mc))?;
        }
        Study::Distribution(args) => {
            let (cfg, out) = args.resolve()?;
            let scenario = Scenario::build(&cfg)?;
            let p_z = sampling_cdf(&cfg, &scenario)?;
            let mc = run_reps(&cfg, &scenario)?;
            write_distribution_csv(output(out.as_ref())?, &distribution_rows(&cfg, &p_z, &mc))?;
        }
        Study::Expansion(args) => {
            let (cfg, out) = args.resolve()?;
            write_expansion_csv(output(out.as_ref())?, &run_expansion_check(&cfg)?)?;
        }
    }
    Ok(())
}

fn ci(args: CiArgs) -> Result<()> {
    let Some(kind) = args.design.single_kind() else {
        bail!("`ci` supports the single-stage designs poisson, srs and pps");
    };
    let pop = io::read_population(io::open(&args.population)?)?;
    let indices = io::read_sample_indices(io::open(&args.sample)?, pop.size())?;
    let opts = CiOptions {
        kind,
        n0: args.n0,
        level: args.level,
        replicates: args.replicates,
        seed: args.seed,
        workers: args.workers,
    };
    print!("{}", ci_report(&pop, indices, &opts)?);
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<()> {
    let (moments, truth) = match args.design.single_kind() {
        Some(kind) => {
            let pop = io::read_population(io::open(&args.population)?)?;
            let n = args.n0.context("--n0 is required")?;
            oracle_single(&pop, kind, n)?
        }
        None => {
            let cpop = io::read_clustered(io::open(&args.population)?)?;
            let (n1, n2) = (args.n1.context("--n1 is required")?, args.n2.context("--n2 is required")?);
            oracle_two_stage(&cpop, args.design == DesignName::TwoStagePps, n1, n2)?
        }
    };
    print!("{}", format_oracle(&moments, truth));
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Simulate { study } => simulate(study),
        Command::Ci(args) => ci(args),
        Command::Oracle(args) => oracle(args),
    }
}
