//! The three-step bootstrap-t.
//!
//! 1. Rebuild a pseudo-population of size `N` by drawing replication counts
//!    `N_i*` for the sampled units from a multinomial whose probabilities are
//!    proportional to the inverse design probabilities.
//! 2. Resample the pseudo-population under the original design (the O(n)
//!    procedures that work on the counts directly) and studentize against the
//!    pseudo-population total `Y*`.
//! 3. Repeat `M` times; each replicate owns the substream `derive_substream(seed, r)`.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{DesignKind, DrawnSample};
use crate::rng::{derive_substream, RngContract};

mod interval;
mod poisson;
mod pps;
mod srs;

pub use interval::{bootstrap_ci, bootstrap_ci_sorted, ecdf_sorted, empirical_quantile, quantile_sorted, wald_ci};
pub use poisson::{rebuild_poisson, resample_poisson};
pub use pps::{dagger_probs, rebuild_pps, resample_pps_direct, resample_pps_fast};
pub use srs::{rebuild_srs, resample_srs_direct, resample_srs_fast, sequential_srs_counts};

/// Redraw cap for a degenerate replicate.
pub const MAX_REDRAWS: u32 = 100;

/// Default number of bootstrap replicates.
pub const DEFAULT_REPLICATES: usize = 1000;

/// Pseudo-population: `rep_counts[i]` copies of sampled unit `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BootPopulation {
    pub base_values: Vec<f64>,
    /// `pi_i` (Poisson/SRS) or `p_{a,i}` (PPS) of each sampled unit.
    pub base_probs: Vec<f64>,
    pub rep_counts: Vec<u64>,
    /// `Y* = sum N_i* y_i`.
    pub boot_total: f64,
    /// PPS only: `C_N* = sum N_i* p_{a,i}`.
    pub normalizer: Option<f64>,
}

impl BootPopulation {
    pub(crate) fn from_counts(sample: &DrawnSample, rep_counts: Vec<u64>, with_normalizer: bool) -> Self {
        let boot_total = weighted_sum(&rep_counts, &sample.values);
        let normalizer = with_normalizer.then(|| weighted_sum(&rep_counts, &sample.probs));
        Self {
            base_values: sample.values.clone(),
            base_probs: sample.probs.clone(),
            rep_counts,
            boot_total,
            normalizer,
        }
    }

    /// Size of the pseudo-population, `sum N_i*`.
    pub fn population_size(&self) -> u64 {
        self.rep_counts.iter().sum()
    }
}

pub(crate) fn weighted_sum(counts: &[u64], xs: &[f64]) -> f64 {
    crate::accum::sum(counts.iter().zip(xs).filter(|(c, _)| **c > 0).map(|(&c, &x)| c as f64 * x))
}

/// Studentized bootstrap replicates of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSet {
    /// `T*` values in replicate-index order.
    pub t_stars: Vec<f64>,
    /// Degenerate draws that were thrown away and redrawn.
    pub discarded: u64,
    pub seed: RngContract,
}

impl ReplicateSet {
    pub fn len(&self) -> usize {
        self.t_stars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_stars.is_empty()
    }

    /// Replicates in ascending order.
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.t_stars.clone();
        v.sort_unstable_by(f64::total_cmp);
        v
    }
}

/// Everything a replicate needs from the original sample, computed once.
#[derive(Debug, Clone)]
pub struct BootstrapPlan<'a> {
    sample: &'a DrawnSample,
    kind: DesignKind,
    population_size: u64,
    rho: Vec<f64>,
}

impl<'a> BootstrapPlan<'a> {
    pub fn new(sample: &'a DrawnSample, kind: DesignKind, population_size: usize) -> Result<Self> {
        let n = sample.realized_n();
        if n == 0 {
            return Err(Error::EmptySample);
        }
        if kind != DesignKind::Poisson && n < 2 {
            return Err(Error::TooFewUnits { n });
        }
        if sample.probs.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: sample.probs.len() });
        }
        crate::model::check_open_unit(&sample.probs)?;
        if kind == DesignKind::Srs && n >= population_size {
            return Err(Error::SampleTooLarge { n, population: population_size });
        }
        let rho = match kind {
            DesignKind::Srs => Vec::new(),
            DesignKind::Poisson | DesignKind::Pps => inverse_weights(&sample.probs),
        };
        Ok(Self { sample, kind, population_size: population_size as u64, rho })
    }

    pub fn kind(&self) -> DesignKind {
        self.kind
    }

    /// One attempt at a replicate; `Err(DegenerateReplicate)` asks for a redraw.
    pub fn attempt<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let n = self.sample.realized_n();
        match self.kind {
            DesignKind::Poisson => {
                let bp = poisson::rebuild_with_rho(self.sample, self.population_size, &self.rho, rng);
                resample_poisson(&bp, rng)
            }
            DesignKind::Srs => {
                let bp = rebuild_srs(self.sample, self.population_size, rng)?;
                resample_srs_fast(&bp, n, rng)
            }
            DesignKind::Pps => {
                let bp = pps::rebuild_with_rho(self.sample, self.population_size, &self.rho, rng)?;
                resample_pps_fast(&bp, n, rng)
            }
        }
    }

    /// Replicate `index` under `seed`, redrawing degenerate attempts on the same
    /// substream. Returns `T*` and the number of discarded attempts.
    pub fn replicate(&self, seed: RngContract, index: u64) -> Result<(f64, u32)> {
        with_redraws(derive_substream(seed, index), index, |rng| self.attempt(rng))
    }

    pub fn run(&self, replicates: usize, seed: RngContract) -> Result<ReplicateSet> {
        collect_replicates(replicates, seed, |i| self.replicate(seed, i))
    }
}

/// Redraw loop shared by every bootstrap flavour.
pub fn with_redraws<F>(stream: RngContract, index: u64, mut attempt: F) -> Result<(f64, u32)>
where
    F: FnMut(&mut crate::StreamRng) -> Result<f64>,
{
    let mut rng = stream.rng();
    for discarded in 0..MAX_REDRAWS {
        match attempt(&mut rng) {
            Ok(t) if t.is_finite() => return Ok((t, discarded)),
            Ok(_) | Err(Error::DegenerateReplicate) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::TooManyDegenerates { replicate: index, attempts: MAX_REDRAWS })
}

/// Assemble a [`ReplicateSet`] from per-index results, in index order.
pub fn collect_replicates<F>(replicates: usize, seed: RngContract, mut one: F) -> Result<ReplicateSet>
where
    F: FnMut(u64) -> Result<(f64, u32)>,
{
    let mut t_stars = Vec::with_capacity(replicates);
    let mut discarded = 0u64;
    for i in 0..replicates as u64 {
        let (t, d) = one(i)?;
        t_stars.push(t);
        discarded += u64::from(d);
    }
    Ok(ReplicateSet { t_stars, discarded, seed })
}

/// `M` bootstrap-t replicates for a single-stage sample.
pub fn run_bootstrap(
    sample: &DrawnSample,
    kind: DesignKind,
    population_size: usize,
    replicates: usize,
    seed: RngContract,
) -> Result<ReplicateSet> {
    if replicates == 0 {
        return Err(Error::DomainError("at least one replicate is required"));
    }
    BootstrapPlan::new(sample, kind, population_size)?.run(replicates, seed)
}

/// `w_i = 1/p_i`; passed to the multinomial as relative weights.
pub(crate) fn inverse_weights(probs: &[f64]) -> Vec<f64> {
    probs.iter().map(|p| 1.0 / p).collect()
}

/// True when every listed value with a positive count is the same.
pub(crate) fn single_support(counts: &[u64], xs: &[f64]) -> bool {
    let mut seen = None;
    for (c, x) in counts.iter().zip(xs) {
        if *c == 0 {
            continue;
        }
        match seen {
            None => seen = Some(*x),
            Some(s) if s != *x => return false,
            Some(_) => {}
        }
    }
    true
}
