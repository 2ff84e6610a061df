//! Index-ordered parallel maps. Every index owns its random substream, so the
//! assembled output does not depend on the worker count.

use rayon::prelude::*;
use svyboot_core::bootstrap::{BootstrapPlan, ReplicateSet};
use svyboot_core::twostage::{TwoStagePlan, TwoStageSample};
use svyboot_core::{DesignKind, DrawnSample, RngContract};

use crate::error::{HarnessError, Result};

/// Run `f` on a pool of `workers` threads (0 picks rayon's default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// `f(0), ..., f(count - 1)` in parallel, returned in index order.
pub fn par_map_indexed<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..count as u64).into_par_iter().map(f).collect()
}

fn assemble(results: Vec<(f64, u32)>, seed: RngContract) -> ReplicateSet {
    let discarded = results.iter().map(|r| u64::from(r.1)).sum();
    ReplicateSet { t_stars: results.into_iter().map(|r| r.0).collect(), discarded, seed }
}

/// Parallel counterpart of `svyboot_core::bootstrap::run_bootstrap`; identical output.
pub fn run_bootstrap_parallel(
    sample: &DrawnSample,
    kind: DesignKind,
    population_size: usize,
    replicates: usize,
    seed: RngContract,
) -> Result<ReplicateSet> {
    if replicates == 0 {
        return Err(svyboot_core::Error::DomainError("at least one replicate is required").into());
    }
    let plan = BootstrapPlan::new(sample, kind, population_size)?;
    let results = par_map_indexed(replicates, |i| Ok(plan.replicate(seed, i)?))?;
    Ok(assemble(results, seed))
}

/// Parallel counterpart of `svyboot_core::twostage::bootstrap_two_stage`.
pub fn run_two_stage_bootstrap_parallel(
    sample: &TwoStageSample,
    clusters: usize,
    replicates: usize,
    seed: RngContract,
) -> Result<ReplicateSet> {
    if replicates == 0 {
        return Err(svyboot_core::Error::DomainError("at least one replicate is required").into());
    }
    let plan = TwoStagePlan::new(sample, clusters)?;
    let results = par_map_indexed(replicates, |i| Ok(plan.replicate(seed, i)?))?;
    Ok(assemble(results, seed))
}
