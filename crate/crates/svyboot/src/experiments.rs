//! Monte Carlo studies: coverage and length of Wald and bootstrap-t intervals, and
//! the sampling distribution of the studentized statistic against its bootstrap
//! estimate and the normal approximation.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use svyboot_core::bootstrap::{bootstrap_ci_sorted, ecdf_sorted, wald_ci, BootstrapPlan};
use svyboot_core::designs::draw_sample;
use svyboot_core::edgeworth::{std_normal_cdf, ExpansionInput};
use svyboot_core::estimators::{estimate, studentize, EstimateBundle};
use svyboot_core::twostage::{
    draw_two_stage, estimate_two_stage, validate_two_stage, ClusteredPopulation, TwoStagePlan, TwoStageSample,
    TwoStageSpec,
};
use svyboot_core::{
    derive_substream, validate_design, ConfidenceInterval, DesignKind, DesignSpec, DrawnSample, Error,
    FinitePopulation, RngContract, StreamRng,
};

use crate::error::{HarnessError, Result};
use crate::io::sig6;
use crate::parallel::{par_map_indexed, with_workers};
use crate::populations::{gen_population_single, gen_population_two_stage};

pub const DEFAULT_Z_GRID: [f64; 7] = [-0.5, -0.25, -0.1, 0.0, 0.1, 0.25, 0.5];

/// Stream ids for the outer Monte Carlo loops.
const REP_STREAM: u64 = 0x7265_7031;
const TRUTH_STREAM: u64 = 0x7472_7574;
const CHECK_STREAM: u64 = 0x6564_6765;

/// A design whose draws produced an empty or zero-variance sample this many times
/// in a row is treated as misconfigured.
const MAX_SAMPLE_REDRAWS: u32 = 10_000;

/// The single-stage population is regenerated until every `pi_i` stays below one
/// for expected sample sizes up to this value (capped at `N / 5`), so one
/// population serves every `n0`.
const POPULATION_N0_FLOOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignName {
    Poisson,
    Srs,
    Pps,
    TwoStagePoisson,
    TwoStagePps,
}

impl DesignName {
    pub const ALL: [DesignName; 5] =
        [DesignName::Poisson, DesignName::Srs, DesignName::Pps, DesignName::TwoStagePoisson, DesignName::TwoStagePps];

    pub fn as_str(self) -> &'static str {
        match self {
            DesignName::Poisson => "poisson",
            DesignName::Srs => "srs",
            DesignName::Pps => "pps",
            DesignName::TwoStagePoisson => "two-stage-poisson",
            DesignName::TwoStagePps => "two-stage-pps",
        }
    }

    pub fn is_two_stage(self) -> bool {
        matches!(self, DesignName::TwoStagePoisson | DesignName::TwoStagePps)
    }

    pub fn single_kind(self) -> Option<DesignKind> {
        match self {
            DesignName::Poisson => Some(DesignKind::Poisson),
            DesignName::Srs => Some(DesignKind::Srs),
            DesignName::Pps => Some(DesignKind::Pps),
            _ => None,
        }
    }
}

impl fmt::Display for DesignName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DesignName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        DesignName::ALL.into_iter().find(|d| d.as_str() == s).ok_or_else(|| {
            format!("unknown design `{s}` (expected poisson, srs, pps, two-stage-poisson or two-stage-pps)")
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub design: DesignName,
    /// `N` of the single-stage population.
    pub population_size: usize,
    /// `H` of the clustered population.
    pub clusters: usize,
    /// `c0`, the minimum cluster size.
    pub min_cluster_size: usize,
    /// Expected (Poisson) or fixed (SRS, PPS) single-stage sample size.
    pub n0: usize,
    pub n1: usize,
    pub n2: usize,
    /// Bootstrap replicates `M` per sample.
    pub replicates: usize,
    /// Outer Monte Carlo repetitions.
    pub reps: usize,
    /// Draws used for the sampling distribution `P_z`.
    pub truth_draws: usize,
    pub level: f64,
    pub seed: u64,
    pub z_grid: Vec<f64>,
    /// Worker threads; 0 lets rayon decide.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            design: DesignName::Poisson,
            population_size: 500,
            clusters: 100,
            min_cluster_size: 40,
            n0: 10,
            n1: 5,
            n2: 10,
            replicates: 1000,
            reps: 1000,
            truth_draws: 10_000,
            level: 0.90,
            seed: 2024,
            z_grid: DEFAULT_Z_GRID.to_vec(),
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Config(m.into()));
        if self.reps == 0 {
            return bad("reps must be at least 1");
        }
        if self.replicates == 0 {
            return bad("M must be at least 1");
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad("level must lie in (0, 1)");
        }
        if self.z_grid.iter().any(|z| !z.is_finite()) {
            return bad("z grid values must be finite");
        }
        Ok(())
    }
}

/// Fixed population plus the design that is drawn from it.
#[derive(Debug, Clone)]
pub enum Scenario {
    Single { pop: FinitePopulation, spec: DesignSpec },
    TwoStage { cpop: ClusteredPopulation, spec: TwoStageSpec },
}

impl Scenario {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.design.is_two_stage() {
            let cpop = gen_population_two_stage(cfg.seed, cfg.clusters, cfg.min_cluster_size)?;
            let spec = match cfg.design {
                DesignName::TwoStagePoisson => TwoStageSpec::poisson_proportional(&cpop, cfg.n1 as f64, cfg.n2),
                _ => TwoStageSpec::pps_proportional(&cpop, cfg.n1, cfg.n2),
            };
            validate_two_stage(&cpop, &spec)?;
            return Ok(Scenario::TwoStage { cpop, spec });
        }
        let max_n0 = POPULATION_N0_FLOOR.min(cfg.population_size as f64 / 5.0).max(cfg.n0 as f64);
        let (pop, _) = gen_population_single(cfg.seed, cfg.population_size, max_n0)?;
        let sizes = pop.sizes().expect("generated populations carry sizes").to_vec();
        let spec = match cfg.design {
            DesignName::Poisson => DesignSpec::poisson_proportional(&sizes, cfg.n0 as f64),
            DesignName::Srs => DesignSpec::Srs { sample_size: cfg.n0 },
            _ => DesignSpec::pps_from_sizes(&sizes, cfg.n0),
        };
        validate_design(&pop, &spec)?;
        Ok(Scenario::Single { pop, spec })
    }

    /// The population mean every interval targets.
    pub fn true_mean(&self) -> f64 {
        match self {
            Scenario::Single { pop, .. } => pop.mean(),
            Scenario::TwoStage { cpop, .. } => cpop.mean(),
        }
    }
}

/// A sample together with its point and variance estimate on the mean scale.
enum Drawn {
    Single { sample: DrawnSample, est: EstimateBundle },
    TwoStage { sample: TwoStageSample, mean: f64, var: f64 },
}

impl Drawn {
    fn mean_and_var(&self, population_size: f64) -> (f64, f64) {
        match self {
            Drawn::Single { est, .. } => (est.y_hat / population_size, est.v_hat / (population_size * population_size)),
            Drawn::TwoStage { mean, var, .. } => (*mean, *var),
        }
    }
}

/// Draw until the sample is non-empty with a positive variance estimate.
fn draw_usable(scenario: &Scenario, rng: &mut StreamRng) -> svyboot_core::Result<(Drawn, u32)> {
    for redraws in 0..MAX_SAMPLE_REDRAWS {
        let drawn = match scenario {
            Scenario::Single { pop, spec } => match draw_sample(pop, spec, rng) {
                Ok(sample) => {
                    let est = estimate(&sample, spec.kind(), pop.size())?;
                    Drawn::Single { sample, est }
                }
                Err(Error::EmptySample) => continue,
                Err(e) => return Err(e),
            },
            Scenario::TwoStage { cpop, spec } => match draw_two_stage(cpop, spec, rng) {
                Ok(sample) => {
                    let est = estimate_two_stage(&sample, cpop.population_size())?;
                    Drawn::TwoStage { sample, mean: est.y_tilde_mean, var: est.v_tilde }
                }
                Err(Error::EmptyFirstStage) => continue,
                Err(e) => return Err(e),
            },
        };
        let usable = match &drawn {
            Drawn::Single { est, .. } => est.v_hat > 0.0,
            Drawn::TwoStage { var, .. } => *var > 0.0,
        };
        if usable {
            return Ok((drawn, redraws));
        }
    }
    Err(Error::DomainError("design keeps producing empty or zero-variance samples"))
}

fn population_size(scenario: &Scenario) -> usize {
    match scenario {
        Scenario::Single { pop, .. } => pop.size(),
        Scenario::TwoStage { cpop, .. } => cpop.population_size(),
    }
}

fn bootstrap(
    scenario: &Scenario,
    drawn: &Drawn,
    replicates: usize,
    seed: RngContract,
) -> svyboot_core::Result<(Vec<f64>, u64)> {
    let set = match (scenario, drawn) {
        (Scenario::Single { pop, spec }, Drawn::Single { sample, .. }) => {
            BootstrapPlan::new(sample, spec.kind(), pop.size())?.run(replicates, seed)?
        }
        (Scenario::TwoStage { cpop, .. }, Drawn::TwoStage { sample, .. }) => {
            TwoStagePlan::new(sample, cpop.cluster_count())?.run(replicates, seed)?
        }
        _ => unreachable!("sample drawn from a different scenario"),
    };
    Ok((set.sorted(), set.discarded))
}

/// What one Monte Carlo repetition contributes to the tables.
#[derive(Debug, Clone, PartialEq)]
pub struct RepOutcome {
    pub wald: ConfidenceInterval,
    pub boot: ConfidenceInterval,
    /// Bootstrap empirical CDF of `T*` at each grid point.
    pub boot_cdf: Vec<f64>,
    /// Empty or zero-variance samples thrown away before this one.
    pub sample_redraws: u32,
    /// Degenerate bootstrap replicates that were redrawn.
    pub discarded: u64,
}

fn one_rep(cfg: &ExperimentConfig, scenario: &Scenario, rep: u64) -> svyboot_core::Result<RepOutcome> {
    let stream = derive_substream(RngContract::with_stream(cfg.seed, REP_STREAM), rep);
    let mut rng = stream.rng();
    let (drawn, sample_redraws) = draw_usable(scenario, &mut rng)?;
    let big_n = population_size(scenario) as f64;
    let (mean, var) = drawn.mean_and_var(big_n);
    let (sorted, discarded) = bootstrap(scenario, &drawn, cfg.replicates, stream.child(0))?;
    Ok(RepOutcome {
        wald: wald_ci(mean, var, cfg.level)?,
        boot: bootstrap_ci_sorted(mean, var, &sorted, cfg.level)?,
        boot_cdf: cfg.z_grid.iter().map(|&z| ecdf_sorted(&sorted, z)).collect(),
        sample_redraws,
        discarded,
    })
}

/// Every repetition of a study, in repetition order.
#[derive(Debug, Clone)]
pub struct MonteCarlo {
    pub truth: f64,
    pub outcomes: Vec<RepOutcome>,
}

impl MonteCarlo {
    pub fn sample_redraws(&self) -> u64 {
        self.outcomes.iter().map(|o| u64::from(o.sample_redraws)).sum()
    }
}

pub fn run_reps(cfg: &ExperimentConfig, scenario: &Scenario) -> Result<MonteCarlo> {
    cfg.validate()?;
    let outcomes = with_workers(cfg.workers, || {
        par_map_indexed(cfg.reps, |rep| one_rep(cfg, scenario, rep).map_err(|source| HarnessError::Rep { rep, source }))
    })??;
    let mc = MonteCarlo { truth: scenario.true_mean(), outcomes };
    let redraws = mc.sample_redraws();
    if redraws > 0 {
        log::info!("{}: {redraws} empty or zero-variance sample(s) redrawn over {} reps", cfg.design, cfg.reps);
    }
    Ok(mc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub design: DesignName,
    pub method: &'static str,
    pub n0: Option<usize>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub coverage: f64,
    pub mean_length: f64,
}

fn sizes(cfg: &ExperimentConfig) -> (Option<usize>, Option<usize>, Option<usize>) {
    if cfg.design.is_two_stage() {
        (None, Some(cfg.n1), Some(cfg.n2))
    } else {
        (Some(cfg.n0), None, None)
    }
}

/// Bootstrap row first, then Wald.
pub fn coverage_rows(cfg: &ExperimentConfig, mc: &MonteCarlo) -> Vec<CoverageRow> {
    let (n0, n1, n2) = sizes(cfg);
    let reps = mc.outcomes.len() as f64;
    let summarize = |method, pick: fn(&RepOutcome) -> &ConfidenceInterval| {
        let hits = mc.outcomes.iter().filter(|o| pick(o).contains(mc.truth)).count();
        let length: f64 = mc.outcomes.iter().map(|o| pick(o).length()).sum();
        CoverageRow { design: cfg.design, method, n0, n1, n2, coverage: hits as f64 / reps, mean_length: length / reps }
    };
    vec![summarize("bootstrap-t", |o| &o.boot), summarize("wald", |o| &o.wald)]
}

pub fn run_coverage_experiment(cfg: &ExperimentConfig) -> Result<Vec<CoverageRow>> {
    let scenario = Scenario::build(cfg)?;
    Ok(coverage_rows(cfg, &run_reps(cfg, &scenario)?))
}

/// `P(T <= z)` at each grid point, from `cfg.truth_draws` fresh samples.
pub fn sampling_cdf(cfg: &ExperimentConfig, scenario: &Scenario) -> Result<Vec<f64>> {
    let truth = scenario.true_mean();
    let big_n = population_size(scenario) as f64;
    let ts = with_workers(cfg.workers, || {
        par_map_indexed(cfg.truth_draws, |i| {
            let mut rng = derive_substream(RngContract::with_stream(cfg.seed, TRUTH_STREAM), i).rng();
            let (drawn, _) = draw_usable(scenario, &mut rng).map_err(|source| HarnessError::Rep { rep: i, source })?;
            let (mean, var) = drawn.mean_and_var(big_n);
            Ok(studentize(mean, truth, var)?)
        })
    })??;
    let mut ts = ts;
    ts.sort_unstable_by(f64::total_cmp);
    Ok(cfg.z_grid.iter().map(|&z| ecdf_sorted(&ts, z)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionRow {
    pub design: DesignName,
    pub n0: Option<usize>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub z: f64,
    pub p_z: f64,
    pub phi_z: f64,
    pub boot_z: f64,
}

/// `Boot_z` is the bootstrap CDF at `z` averaged over the repetitions of `mc`.
pub fn distribution_rows(cfg: &ExperimentConfig, p_z: &[f64], mc: &MonteCarlo) -> Vec<DistributionRow> {
    let (n0, n1, n2) = sizes(cfg);
    let reps = mc.outcomes.len() as f64;
    cfg.z_grid
        .iter()
        .enumerate()
        .map(|(k, &z)| DistributionRow {
            design: cfg.design,
            n0,
            n1,
            n2,
            z,
            p_z: p_z[k],
            phi_z: std_normal_cdf(z),
            boot_z: mc.outcomes.iter().map(|o| o.boot_cdf[k]).sum::<f64>() / reps,
        })
        .collect()
}

pub fn run_distribution_experiment(cfg: &ExperimentConfig) -> Result<Vec<DistributionRow>> {
    let scenario = Scenario::build(cfg)?;
    let p_z = sampling_cdf(cfg, &scenario)?;
    let mc = run_reps(cfg, &scenario)?;
    Ok(distribution_rows(cfg, &p_z, &mc))
}

/// Bootstrap CDF of one sample against the Edgeworth expansion built from the
/// same sample's moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionRow {
    pub design: DesignName,
    pub z: f64,
    pub boot: f64,
    pub edgeworth: f64,
    pub phi: f64,
}

/// Single-stage designs only: draw one sample, run `cfg.replicates` bootstrap
/// replicates and evaluate the expansion on the grid.
pub fn run_expansion_check(cfg: &ExperimentConfig) -> Result<Vec<ExpansionRow>> {
    let scenario = Scenario::build(cfg)?;
    let Scenario::Single { pop, spec } = &scenario else {
        return Err(HarnessError::Config("no expansion is available for two-stage designs".into()));
    };
    let stream = RngContract::with_stream(cfg.seed, CHECK_STREAM);
    let mut rng = stream.rng();
    let (drawn, _) = draw_usable(&scenario, &mut rng)?;
    let Drawn::Single { sample, est } = &drawn else { unreachable!("single-stage scenario") };
    let expansion = ExpansionInput::from_estimates(spec.kind(), est, sample.realized_n(), pop.size())?;
    let sorted = with_workers(cfg.workers, || {
        crate::parallel::run_bootstrap_parallel(sample, spec.kind(), pop.size(), cfg.replicates, stream.child(0))
    })??
    .sorted();
    Ok(cfg
        .z_grid
        .iter()
        .map(|&z| ExpansionRow {
            design: cfg.design,
            z,
            boot: ecdf_sorted(&sorted, z),
            edgeworth: expansion.eval(z),
            phi: std_normal_cdf(z),
        })
        .collect())
}

fn opt(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_coverage_csv<W: Write>(writer: W, rows: &[CoverageRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["design", "method", "n0", "n1", "n2", "coverage", "mean_length"])?;
    for r in rows {
        w.write_record([
            r.design.to_string(),
            r.method.to_string(),
            opt(r.n0),
            opt(r.n1),
            opt(r.n2),
            sig6(r.coverage),
            sig6(r.mean_length),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_distribution_csv<W: Write>(writer: W, rows: &[DistributionRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["design", "n0", "n1", "n2", "z", "P_z", "Phi_z", "Boot_z"])?;
    for r in rows {
        w.write_record([
            r.design.to_string(),
            opt(r.n0),
            opt(r.n1),
            opt(r.n2),
            sig6(r.z),
            sig6(r.p_z),
            sig6(r.phi_z),
            sig6(r.boot_z),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_expansion_csv<W: Write>(writer: W, rows: &[ExpansionRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["design", "z", "Boot_z", "Edgeworth_z", "Phi_z"])?;
    for r in rows {
        w.write_record([r.design.to_string(), sig6(r.z), sig6(r.boot), sig6(r.edgeworth), sig6(r.phi)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(design: DesignName) -> ExperimentConfig {
        ExperimentConfig { design, reps: 4, replicates: 50, truth_draws: 40, population_size: 60, ..Default::default() }
    }

    #[test]
    fn design_names_round_trip() {
        for d in DesignName::ALL {
            assert_eq!(d.as_str().parse::<DesignName>(), Ok(d));
        }
        assert!("cluster".parse::<DesignName>().is_err());
    }

    #[test]
    fn single_rep_coverage_is_zero_or_one() {
        let cfg = ExperimentConfig { reps: 1, ..small(DesignName::Srs) };
        for row in run_coverage_experiment(&cfg).unwrap() {
            assert!(row.coverage == 0.0 || row.coverage == 1.0);
            assert!(row.mean_length > 0.0);
        }
    }

    #[test]
    fn phi_column_is_exact_at_zero() {
        let rows = run_distribution_experiment(&small(DesignName::Pps)).unwrap();
        let at_zero = rows.iter().find(|r| r.z == 0.0).unwrap();
        assert_eq!(at_zero.phi_z, 0.5);
        assert_eq!(rows.len(), DEFAULT_Z_GRID.len());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        for design in [DesignName::Poisson, DesignName::TwoStagePps] {
            let cfg = small(design);
            let a = run_coverage_experiment(&ExperimentConfig { workers: 1, ..cfg.clone() }).unwrap();
            let b = run_coverage_experiment(&ExperimentConfig { workers: 3, ..cfg }).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = ExperimentConfig { reps: 0, ..Default::default() };
        assert!(matches!(run_coverage_experiment(&cfg), Err(HarnessError::Config(_))));
    }
}
