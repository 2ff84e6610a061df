//! Two-stage designs: Poisson or PPS over clusters, SRS of a fixed size within
//! every selected cluster. Estimates are of the population mean.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::accum::Compensated;
use crate::bootstrap::{collect_replicates, inverse_weights, sequential_srs_counts, with_redraws, ReplicateSet};
use crate::designs::{draw_binomial, draw_srs_sample, multinomial_into, multinomial_uniform_into, CumulativeTable};
use crate::error::{Error, Result};
use crate::estimators::studentize;
use crate::model::{check_open_unit, check_sample_size, check_selection_probs, DrawnSample, FinitePopulation};
use crate::rng::{derive_substream, RngContract};

/// Population partitioned into `H` clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredPopulation {
    clusters: Vec<FinitePopulation>,
    population_size: usize,
}

impl ClusteredPopulation {
    pub fn new(clusters: Vec<FinitePopulation>) -> Result<Self> {
        if clusters.len() < 2 {
            return Err(Error::InvalidPopulation("need at least two clusters"));
        }
        let population_size = clusters.iter().map(FinitePopulation::size).sum();
        Ok(Self { clusters, population_size })
    }

    pub fn clusters(&self) -> &[FinitePopulation] {
        &self.clusters
    }

    /// `H`.
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    /// `N = sum N_i`.
    pub fn population_size(&self) -> usize {
        self.population_size
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(FinitePopulation::size).collect()
    }

    pub fn total(&self) -> f64 {
        crate::accum::sum(self.clusters.iter().flat_map(|c| c.values().iter().copied()))
    }

    pub fn mean(&self) -> f64 {
        self.total() / self.population_size as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StageOneKind {
    Poisson,
    Pps,
}

/// First-stage design over clusters.
#[derive(Debug, Clone, PartialEq)]
pub enum StageOne {
    Poisson {
        inclusion_probs: Vec<f64>,
    },
    /// `draws` i.i.d. cluster draws with replacement.
    Pps {
        draws: usize,
        selection_probs: Vec<f64>,
    },
}

impl StageOne {
    pub fn kind(&self) -> StageOneKind {
        match self {
            StageOne::Poisson { .. } => StageOneKind::Poisson,
            StageOne::Pps { .. } => StageOneKind::Pps,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageSpec {
    pub stage1: StageOne,
    /// `n2`, the SRS size inside each selected cluster.
    pub stage2_size: usize,
}

impl TwoStageSpec {
    /// `pi_i = n1 N_i / N`.
    pub fn poisson_proportional(cpop: &ClusteredPopulation, n1: f64, n2: usize) -> Self {
        let big_n = cpop.population_size() as f64;
        let inclusion_probs = cpop.clusters.iter().map(|c| n1 * c.size() as f64 / big_n).collect();
        Self { stage1: StageOne::Poisson { inclusion_probs }, stage2_size: n2 }
    }

    /// `p_i = N_i / N`.
    pub fn pps_proportional(cpop: &ClusteredPopulation, n1: usize, n2: usize) -> Self {
        let big_n = cpop.population_size() as f64;
        let selection_probs = cpop.clusters.iter().map(|c| c.size() as f64 / big_n).collect();
        Self { stage1: StageOne::Pps { draws: n1, selection_probs }, stage2_size: n2 }
    }
}

pub fn validate_two_stage(cpop: &ClusteredPopulation, spec: &TwoStageSpec) -> Result<()> {
    let h = cpop.cluster_count();
    match &spec.stage1 {
        StageOne::Poisson { inclusion_probs } => {
            if inclusion_probs.len() != h {
                return Err(Error::LengthMismatch { expected: h, found: inclusion_probs.len() });
            }
            check_open_unit(inclusion_probs)?;
        }
        StageOne::Pps { draws, selection_probs } => {
            if selection_probs.len() != h {
                return Err(Error::LengthMismatch { expected: h, found: selection_probs.len() });
            }
            check_selection_probs(selection_probs)?;
            check_sample_size(*draws, h)?;
            if *draws < 2 {
                return Err(Error::TooFewClusters { n1: *draws });
            }
        }
    }
    let n2 = spec.stage2_size;
    if n2 < 2 {
        return Err(Error::TooFewUnits { n: n2 });
    }
    let smallest = cpop.clusters.iter().map(FinitePopulation::size).min().unwrap_or(0);
    if n2 >= smallest {
        return Err(Error::SampleTooLarge { n: n2, population: smallest });
    }
    Ok(())
}

/// One two-stage sample. Entry `k` of every vector describes the `k`-th selection;
/// under PPS the same cluster may appear more than once, each time with its own
/// within-cluster sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageSample {
    pub stage1: StageOneKind,
    pub cluster_ids: Vec<usize>,
    pub cluster_sizes: Vec<u64>,
    /// `pi_i` or `p_i` of each selection.
    pub cluster_probs: Vec<f64>,
    pub within_samples: Vec<DrawnSample>,
}

impl TwoStageSample {
    pub fn selections(&self) -> usize {
        self.cluster_ids.len()
    }

    /// Common within-cluster sample size.
    pub fn stage2_size(&self) -> usize {
        self.within_samples.first().map_or(0, DrawnSample::realized_n)
    }
}

/// Stage-1 draw over clusters, then an independent SRS of `n2` within each selection.
pub fn draw_two_stage<R: Rng + ?Sized>(
    cpop: &ClusteredPopulation,
    spec: &TwoStageSpec,
    rng: &mut R,
) -> Result<TwoStageSample> {
    let (kind, ids, probs): (_, Vec<usize>, &[f64]) = match &spec.stage1 {
        StageOne::Poisson { inclusion_probs } => {
            let ids = inclusion_probs
                .iter()
                .enumerate()
                .filter_map(|(i, &p)| (rng.random::<f64>() < p).then_some(i))
                .collect();
            (StageOneKind::Poisson, ids, inclusion_probs)
        }
        StageOne::Pps { draws, selection_probs } => {
            let table = CumulativeTable::new(selection_probs);
            let ids = (0..*draws).map(|_| table.sample(rng)).collect();
            (StageOneKind::Pps, ids, selection_probs)
        }
    };
    if ids.is_empty() {
        return Err(Error::EmptyFirstStage);
    }
    let mut within_samples = Vec::with_capacity(ids.len());
    for &i in &ids {
        within_samples.push(draw_srs_sample(&cpop.clusters[i], spec.stage2_size, rng)?);
    }
    Ok(TwoStageSample {
        stage1: kind,
        cluster_sizes: ids.iter().map(|&i| cpop.clusters[i].size() as u64).collect(),
        cluster_probs: ids.iter().map(|&i| probs[i]).collect(),
        cluster_ids: ids,
        within_samples,
    })
}

/// Within-cluster SRS estimates of one cluster total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterEstimate {
    /// `Y_hat_i = N_i * mean`.
    pub y_hat: f64,
    /// `N_i (N_i - n2) s_i^2 / n2`, `s_i^2` with divisor `n2 - 1`.
    pub v_hat: f64,
}

/// Cluster estimate from the within-sample values. `n2 = N_i` (a census) is allowed.
pub fn cluster_estimate(values: &[f64], cluster_size: u64) -> Result<ClusterEstimate> {
    let n2 = values.len();
    if n2 < 2 {
        return Err(Error::TooFewUnits { n: n2 });
    }
    let nf = n2 as f64;
    let mean = crate::accum::sum(values.iter().copied()) / nf;
    let ss = crate::accum::sum(values.iter().map(|y| (y - mean) * (y - mean)));
    Ok(from_moments(mean, ss, nf, cluster_size as f64))
}

/// Same as [`cluster_estimate`] for a sample given as tallies over `values`.
fn tallied_estimate(tallies: &[u64], values: &[f64], n2: usize, cluster_size: u64) -> ClusterEstimate {
    let nf = n2 as f64;
    let mean = crate::bootstrap::weighted_sum(tallies, values) / nf;
    let mut ss = Compensated::new();
    for (&c, &y) in tallies.iter().zip(values) {
        if c > 0 {
            ss.add(c as f64 * (y - mean) * (y - mean));
        }
    }
    from_moments(mean, ss.value(), nf, cluster_size as f64)
}

fn from_moments(mean: f64, ss: f64, n2: f64, big_ni: f64) -> ClusterEstimate {
    let s2 = if n2 > 1.0 { ss / (n2 - 1.0) } else { 0.0 };
    ClusterEstimate { y_hat: big_ni * mean, v_hat: big_ni * (big_ni - n2) * s2 / n2 }
}

/// Two-stage estimate of the population mean and its variance estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStageEstimate {
    pub y_tilde_mean: f64,
    pub v_tilde: f64,
    /// The raw variance estimate was negative and has been set to zero.
    pub clamped: bool,
}

/// Combine per-selection cluster estimates with their stage-1 probabilities.
///
/// Poisson: `Y~ = N^-1 sum Y_hat_i / pi_i`,
/// `V~ = N^-2 [sum (1 - pi_i) Y_hat_i^2 / pi_i^2 + sum V_hat_i / pi_i]`.
///
/// PPS: with `Z_k = Y_hat_k / p_k` over the `n1` draws, `Y~ = N^-1 mean(Z)` and
/// `V~ = N^-2 sum (Z_k - Z_bar)^2 / (n1 (n1 - 1))`. Because each draw gets an
/// independent subsample, this one term already covers both stages.
pub fn combine_stage_one<I>(kind: StageOneKind, population_size: f64, parts: I) -> Result<TwoStageEstimate>
where
    I: IntoIterator<Item = (ClusterEstimate, f64)>,
{
    let n2inv = 1.0 / (population_size * population_size);
    let (y, v) = match kind {
        StageOneKind::Poisson => {
            let (mut y, mut v) = (Compensated::new(), Compensated::new());
            let mut any = false;
            for (c, pi) in parts {
                any = true;
                y.add(c.y_hat / pi);
                v.add((1.0 - pi) * c.y_hat * c.y_hat / (pi * pi));
                v.add(c.v_hat / pi);
            }
            if !any {
                return Err(Error::EmptyFirstStage);
            }
            (y.value() / population_size, v.value() * n2inv)
        }
        StageOneKind::Pps => {
            let z: Vec<f64> = parts.into_iter().map(|(c, p)| c.y_hat / p).collect();
            let n1 = z.len();
            if n1 < 2 {
                return Err(Error::TooFewClusters { n1 });
            }
            let nf = n1 as f64;
            let z_bar = crate::accum::sum(z.iter().copied()) / nf;
            let ss = crate::accum::sum(z.iter().map(|x| (x - z_bar) * (x - z_bar)));
            (z_bar / population_size, ss / (nf * (nf - 1.0)) * n2inv)
        }
    };
    let clamped = v < 0.0;
    Ok(TwoStageEstimate { y_tilde_mean: y, v_tilde: if clamped { 0.0 } else { v }, clamped })
}

pub fn estimate_two_stage(ts: &TwoStageSample, population_size: usize) -> Result<TwoStageEstimate> {
    let mut parts = Vec::with_capacity(ts.selections());
    for ((w, &ni), &p) in ts.within_samples.iter().zip(&ts.cluster_sizes).zip(&ts.cluster_probs) {
        parts.push((cluster_estimate(&w.values, ni)?, p));
    }
    combine_stage_one(ts.stage1, population_size as f64, parts)
}

/// One cluster of the two-stage pseudo-population: a copy of selection `source`
/// whose `N_i` elements are split over that selection's `n2` sampled values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterCopy {
    pub source: usize,
    pub counts: Vec<u64>,
}

/// Fully materialised two-stage pseudo-population (`H` cluster copies).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageBootPopulation {
    /// Copies per selection; sums to `H`.
    pub cluster_counts: Vec<u64>,
    pub copies: Vec<ClusterCopy>,
    pub boot_total: f64,
    pub population_size: u64,
}

/// Everything a two-stage replicate needs, computed once from the sample.
#[derive(Debug, Clone)]
pub struct TwoStagePlan<'a> {
    sample: &'a TwoStageSample,
    clusters: u64,
    n2: usize,
    rho: Vec<f64>,
}

impl<'a> TwoStagePlan<'a> {
    /// `clusters` is `H`, the trial count of the cluster-level rebuild.
    pub fn new(sample: &'a TwoStageSample, clusters: usize) -> Result<Self> {
        let k = sample.selections();
        if k == 0 {
            return Err(Error::EmptyFirstStage);
        }
        if sample.stage1 == StageOneKind::Pps && k < 2 {
            return Err(Error::TooFewClusters { n1: k });
        }
        if sample.cluster_probs.len() != k || sample.cluster_sizes.len() != k || sample.within_samples.len() != k {
            return Err(Error::LengthMismatch { expected: k, found: sample.cluster_probs.len() });
        }
        check_open_unit(&sample.cluster_probs)?;
        let n2 = sample.stage2_size();
        if n2 < 2 {
            return Err(Error::TooFewUnits { n: n2 });
        }
        for (w, &ni) in sample.within_samples.iter().zip(&sample.cluster_sizes) {
            if w.realized_n() != n2 {
                return Err(Error::LengthMismatch { expected: n2, found: w.realized_n() });
            }
            if n2 as u64 >= ni {
                return Err(Error::SampleTooLarge { n: n2, population: ni as usize });
            }
        }
        Ok(Self { sample, clusters: clusters as u64, n2, rho: inverse_weights(&sample.cluster_probs) })
    }

    fn cluster_counts<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        let mut counts = vec![0; self.sample.selections()];
        multinomial_into(rng, self.clusters, &self.rho, &mut counts);
        counts
    }

    fn within_counts<R: Rng + ?Sized>(&self, elements: u64, rng: &mut R) -> Vec<u64> {
        let mut counts = vec![0; self.n2];
        multinomial_uniform_into(rng, elements, &mut counts);
        counts
    }

    fn values(&self, k: usize) -> &[f64] {
        &self.sample.within_samples[k].values
    }

    /// Cluster-level rebuild with trial count `H`, then a within-cluster rebuild
    /// with trial count `N_i` for every copy.
    pub fn rebuild<R: Rng + ?Sized>(&self, rng: &mut R) -> TwoStageBootPopulation {
        let cluster_counts = self.cluster_counts(rng);
        let mut copies = Vec::with_capacity(self.clusters as usize);
        let mut total = Compensated::new();
        let mut size = 0;
        for (k, &c) in cluster_counts.iter().enumerate() {
            let ni = self.sample.cluster_sizes[k];
            for _ in 0..c {
                let counts = self.within_counts(ni, rng);
                total.add(crate::bootstrap::weighted_sum(&counts, self.values(k)));
                size += ni;
                copies.push(ClusterCopy { source: k, counts });
            }
        }
        TwoStageBootPopulation { cluster_counts, copies, boot_total: total.value(), population_size: size }
    }

    /// Reference replicate: materialise every cluster copy, then run the two-stage
    /// design over the copies.
    pub fn attempt_direct<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let bp = self.rebuild(rng);
        let probs = &self.sample.cluster_probs;
        let mut parts = Vec::new();
        match self.sample.stage1 {
            StageOneKind::Poisson => {
                for copy in &bp.copies {
                    let pi = probs[copy.source];
                    if rng.random::<f64>() < pi {
                        parts.push((self.subsample(copy.source, &copy.counts, rng), pi));
                    }
                }
            }
            StageOneKind::Pps => {
                let weights: Vec<f64> = bp.copies.iter().map(|c| probs[c.source]).collect();
                let normalizer = crate::accum::sum(weights.iter().copied());
                let table = CumulativeTable::new(&weights);
                for _ in 0..self.sample.selections() {
                    let copy = &bp.copies[table.sample(rng)];
                    parts.push((self.subsample(copy.source, &copy.counts, rng), probs[copy.source] / normalizer));
                }
            }
        }
        self.statistic(parts, bp.boot_total, bp.population_size)
    }

    /// Replicate with the same law as [`Self::attempt_direct`], without building
    /// the copies nobody samples: the within-cluster counts of all unsampled copies
    /// of one selection are drawn together as a single multinomial.
    pub fn attempt<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let cluster_counts = self.cluster_counts(rng);
        let probs = &self.sample.cluster_probs;
        let sizes = &self.sample.cluster_sizes;
        let mut total = Compensated::new();
        let mut big_n = 0u64;
        let mut parts = Vec::new();
        match self.sample.stage1 {
            StageOneKind::Poisson => {
                for (k, &c) in cluster_counts.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    big_n += c * sizes[k];
                    let picked = draw_binomial(rng, c, probs[k]);
                    for _ in 0..picked {
                        let counts = self.within_counts(sizes[k], rng);
                        total.add(crate::bootstrap::weighted_sum(&counts, self.values(k)));
                        parts.push((self.subsample(k, &counts, rng), probs[k]));
                    }
                    self.add_unsampled(k, c - picked, &mut total, rng);
                }
            }
            StageOneKind::Pps => {
                let normalizer = crate::bootstrap::weighted_sum(&cluster_counts, probs);
                if !(normalizer > 0.0) {
                    return Err(Error::DegenerateNormalizer);
                }
                let weights: Vec<f64> = cluster_counts.iter().zip(probs).map(|(&c, &p)| c as f64 * p).collect();
                let mut draws = vec![0; weights.len()];
                multinomial_into(rng, self.sample.selections() as u64, &weights, &mut draws);
                for (k, &c) in cluster_counts.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    big_n += c * sizes[k];
                    // which copies of selection k the draws land on
                    let mut hit: Vec<u64> = (0..draws[k]).map(|_| rng.random_range(0..c)).collect();
                    hit.sort_unstable();
                    let mut distinct = 0;
                    let mut i = 0;
                    while i < hit.len() {
                        let mut j = i;
                        while j < hit.len() && hit[j] == hit[i] {
                            j += 1;
                        }
                        let counts = self.within_counts(sizes[k], rng);
                        total.add(crate::bootstrap::weighted_sum(&counts, self.values(k)));
                        for _ in i..j {
                            parts.push((self.subsample(k, &counts, rng), probs[k] / normalizer));
                        }
                        distinct += 1;
                        i = j;
                    }
                    self.add_unsampled(k, c - distinct, &mut total, rng);
                }
            }
        }
        self.statistic(parts, total.value(), big_n)
    }

    fn add_unsampled<R: Rng + ?Sized>(&self, k: usize, copies: u64, total: &mut Compensated, rng: &mut R) {
        if copies > 0 {
            let counts = self.within_counts(copies * self.sample.cluster_sizes[k], rng);
            total.add(crate::bootstrap::weighted_sum(&counts, self.values(k)));
        }
    }

    fn subsample<R: Rng + ?Sized>(&self, k: usize, counts: &[u64], rng: &mut R) -> ClusterEstimate {
        let tallies = sequential_srs_counts(counts, self.n2, rng);
        tallied_estimate(&tallies, self.values(k), self.n2, self.sample.cluster_sizes[k])
    }

    fn statistic(&self, parts: Vec<(ClusterEstimate, f64)>, boot_total: f64, population_size: u64) -> Result<f64> {
        if parts.is_empty() {
            return Err(Error::DegenerateReplicate);
        }
        let big_n = population_size as f64;
        let est = combine_stage_one(self.sample.stage1, big_n, parts)?;
        if !(est.v_tilde > 0.0) {
            return Err(Error::DegenerateReplicate);
        }
        studentize(est.y_tilde_mean, boot_total / big_n, est.v_tilde)
    }

    pub fn replicate(&self, seed: RngContract, index: u64) -> Result<(f64, u32)> {
        with_redraws(derive_substream(seed, index), index, |rng| self.attempt(rng))
    }

    pub fn run(&self, replicates: usize, seed: RngContract) -> Result<ReplicateSet> {
        collect_replicates(replicates, seed, |i| self.replicate(seed, i))
    }
}

/// `M` two-stage bootstrap-t replicates; `clusters` is `H`.
pub fn bootstrap_two_stage(
    ts: &TwoStageSample,
    clusters: usize,
    replicates: usize,
    seed: RngContract,
) -> Result<ReplicateSet> {
    if replicates == 0 {
        return Err(Error::DomainError("at least one replicate is required"));
    }
    TwoStagePlan::new(ts, clusters)?.run(replicates, seed)
}
