//! The `ci` and `oracle` commands, as library calls.

use std::fmt;

use svyboot_core::bootstrap::{bootstrap_ci, wald_ci};
use svyboot_core::estimators::{estimate, EstimateBundle};
use svyboot_core::oracle::{enumerate_design_moments, enumerate_two_stage_moments, DesignMoments};
use svyboot_core::twostage::{ClusteredPopulation, TwoStageSpec};
use svyboot_core::{
    validate_design, ConfidenceInterval, DesignKind, DesignSpec, DrawnSample, FinitePopulation, RngContract,
};

use crate::error::{HarnessError, Result};
use crate::parallel::{run_bootstrap_parallel, with_workers};

/// Design over `pop` implied by its size column: `pi = n0 z / sum z` (Poisson) or
/// `p = z / sum z` (PPS), equal probabilities when there is no size column.
pub fn design_for(pop: &FinitePopulation, kind: DesignKind, n: usize) -> DesignSpec {
    let uniform = vec![1.0; pop.size()];
    let sizes = pop.sizes().unwrap_or(&uniform);
    match kind {
        DesignKind::Poisson => DesignSpec::poisson_proportional(sizes, n as f64),
        DesignKind::Srs => DesignSpec::Srs { sample_size: n },
        DesignKind::Pps => DesignSpec::pps_from_sizes(sizes, n),
    }
}

fn unit_probs(spec: &DesignSpec, population_size: usize) -> Vec<f64> {
    match spec {
        DesignSpec::Poisson { inclusion_probs } => inclusion_probs.clone(),
        DesignSpec::Srs { sample_size } => vec![*sample_size as f64 / population_size as f64; population_size],
        DesignSpec::Pps { selection_probs, .. } => selection_probs.clone(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CiReport {
    pub kind: DesignKind,
    pub n: usize,
    pub population_size: usize,
    pub estimate: EstimateBundle,
    /// Intervals for the population total.
    pub wald: ConfidenceInterval,
    pub boot: ConfidenceInterval,
    pub discarded: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiOptions {
    pub kind: DesignKind,
    pub n0: Option<usize>,
    pub level: f64,
    pub replicates: usize,
    pub seed: u64,
    pub workers: usize,
}

impl CiOptions {
    pub fn new(kind: DesignKind) -> Self {
        Self { kind, n0: None, level: 0.90, replicates: 1000, seed: 0, workers: 0 }
    }
}

/// Wald and bootstrap-t intervals for one observed sample.
///
/// `n0` is the expected sample size for Poisson; SRS and PPS use the number of
/// sampled rows.
pub fn ci_report(pop: &FinitePopulation, indices: Vec<usize>, opts: &CiOptions) -> Result<CiReport> {
    let CiOptions { kind, n0, level, replicates, seed, workers } = *opts;
    let n = match kind {
        DesignKind::Poisson => n0.ok_or_else(|| HarnessError::Config("poisson needs --n0".into()))?,
        _ => indices.len(),
    };
    let spec = design_for(pop, kind, n);
    validate_design(pop, &spec)?;
    if kind == DesignKind::Srs {
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != indices.len() {
            return Err(HarnessError::Format("an SRS sample cannot repeat a unit".into()));
        }
    }
    let sample = DrawnSample::from_indices(pop, &unit_probs(&spec, pop.size()), indices);
    let est = estimate(&sample, kind, pop.size())?;
    let set = with_workers(workers, || {
        run_bootstrap_parallel(&sample, kind, pop.size(), replicates, RngContract::new(seed))
    })??;
    Ok(CiReport {
        kind,
        n: sample.realized_n(),
        population_size: pop.size(),
        estimate: est,
        wald: wald_ci(est.y_hat, est.v_hat, level)?,
        boot: bootstrap_ci(est.y_hat, est.v_hat, &set, level)?,
        discarded: set.discarded,
    })
}

impl fmt::Display for CiReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let big_n = self.population_size as f64;
        writeln!(f, "design {:?}, n = {}, N = {}", self.kind, self.n, self.population_size)?;
        writeln!(f, "estimated total {:.6}, variance estimate {:.6}", self.estimate.y_hat, self.estimate.v_hat)?;
        writeln!(f, "level {}", self.wald.level)?;
        for (name, ci) in [("wald", &self.wald), ("bootstrap-t", &self.boot)] {
            let m = ci.scaled(1.0 / big_n);
            writeln!(f, "{name:<12} total [{:.6}, {:.6}]  mean [{:.6}, {:.6}]", ci.lower, ci.upper, m.lower, m.upper)?;
        }
        if self.discarded > 0 {
            writeln!(f, "degenerate bootstrap replicates redrawn: {}", self.discarded)?;
        }
        Ok(())
    }
}

/// Exact report for a single-stage design over a small population.
pub fn oracle_single(pop: &FinitePopulation, kind: DesignKind, n: usize) -> Result<(DesignMoments, f64)> {
    let spec = design_for(pop, kind, n);
    Ok((enumerate_design_moments(pop, &spec)?, pop.total()))
}

/// Exact report for a two-stage design with size-proportional first stage.
pub fn oracle_two_stage(cpop: &ClusteredPopulation, pps: bool, n1: usize, n2: usize) -> Result<(DesignMoments, f64)> {
    let spec = if pps {
        TwoStageSpec::pps_proportional(cpop, n1, n2)
    } else {
        TwoStageSpec::poisson_proportional(cpop, n1 as f64, n2)
    };
    Ok((enumerate_two_stage_moments(cpop, &spec)?, cpop.mean()))
}

pub fn format_oracle(m: &DesignMoments, truth: f64) -> String {
    let ratio = if m.var_estimate > 0.0 { m.mean_variance_estimate / m.var_estimate } else { f64::NAN };
    format!(
        "samples enumerated      {}\n\
         total probability       {:.15}\n\
         target                  {:.10}\n\
         E[estimate]             {:.10}\n\
         Var(estimate)           {:.10}\n\
         E[variance estimate]    {:.10}\n\
         E[var est] / Var        {:.10}\n\
         P(variance estimate = 0) {:.10}\n",
        m.samples,
        m.total_probability,
        truth,
        m.mean_estimate,
        m.var_estimate,
        m.mean_variance_estimate,
        ratio,
        m.zero_variance_mass
    )
}
