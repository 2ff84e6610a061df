//! Sampling primitives and the three single-stage design draws.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::accum;
use crate::error::{Error, Result};
use crate::model::{DesignSpec, DrawnSample, FinitePopulation, PROB_SUM_TOL};

/// Multinomial counts over `k` categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountVector {
    pub counts: Vec<u64>,
    pub trials: u64,
}

impl CountVector {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// One Binomial(`trials`, `p`) variate; `p` is clamped to [0, 1].
pub fn draw_binomial<R: Rng + ?Sized>(rng: &mut R, trials: u64, p: f64) -> u64 {
    if trials == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return trials;
    }
    Binomial::new(trials, p).expect("p checked to be in (0, 1)").sample(rng)
}

/// Multinomial(`trials`, `probs`) by sequential conditional binomials.
pub fn draw_multinomial<R: Rng + ?Sized>(rng: &mut R, trials: u64, probs: &[f64]) -> Result<CountVector> {
    if probs.is_empty() {
        return Err(Error::InvalidProbs("no categories"));
    }
    if probs.iter().any(|p| !(p.is_finite() && *p > 0.0 && *p <= 1.0)) {
        return Err(Error::InvalidProbs("entries must lie in (0, 1]"));
    }
    let sum = accum::sum(probs.iter().copied());
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidProbs("entries must sum to 1"));
    }
    let mut counts = vec![0; probs.len()];
    multinomial_into(rng, trials, probs, &mut counts);
    let cv = CountVector { counts, trials };
    assert_eq!(cv.total(), trials, "multinomial counts must sum to the trial count");
    Ok(cv)
}

/// Unchecked multinomial draw into `out`. `probs` need only be non-negative with a
/// positive sum; they are treated as relative weights.
pub(crate) fn multinomial_into<R: Rng + ?Sized>(rng: &mut R, trials: u64, probs: &[f64], out: &mut [u64]) {
    debug_assert_eq!(probs.len(), out.len());
    let k = probs.len();
    // suffix masses so each conditional ratio is formed from exact partial sums
    let mut suffix = vec![0.0; k + 1];
    let mut acc = accum::Compensated::new();
    for i in (0..k).rev() {
        acc.add(probs[i]);
        suffix[i] = acc.value();
    }
    let mut remaining = trials;
    for i in 0..k {
        if remaining == 0 {
            out[i] = 0;
            continue;
        }
        if i == k - 1 {
            out[i] = remaining;
            remaining = 0;
            continue;
        }
        let ratio = if suffix[i] > 0.0 { (probs[i] / suffix[i]).min(1.0) } else { 0.0 };
        let c = draw_binomial(rng, remaining, ratio);
        out[i] = c;
        remaining -= c;
    }
}

/// Multinomial with `k` equally likely categories.
pub(crate) fn multinomial_uniform_into<R: Rng + ?Sized>(rng: &mut R, trials: u64, out: &mut [u64]) {
    let k = out.len();
    let mut remaining = trials;
    for (i, slot) in out.iter_mut().enumerate() {
        let left = (k - i) as f64;
        let c = if i == k - 1 { remaining } else { draw_binomial(rng, remaining, 1.0 / left) };
        *slot = c;
        remaining -= c;
    }
}

/// Categorical sampler by cumulative-sum inversion with binary search.
#[derive(Debug, Clone)]
pub struct CumulativeTable {
    cumulative: Vec<f64>,
}

impl CumulativeTable {
    /// `weights` must be non-negative with a positive sum.
    pub fn new(weights: &[f64]) -> Self {
        let mut acc = accum::Compensated::new();
        let cumulative = weights
            .iter()
            .map(|w| {
                acc.add(*w);
                acc.value()
            })
            .collect();
        Self { cumulative }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty table");
        let u = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        // u < total always, but guard against rounding at the top
        let mut idx = idx.min(self.cumulative.len() - 1);
        // skip zero-weight categories that share the boundary
        while idx > 0 && self.cumulative[idx] == self.cumulative[idx - 1] {
            idx -= 1;
        }
        idx
    }
}

/// Poisson sampling: unit `i` enters independently with probability `pi_i`.
pub fn draw_poisson_sample<R: Rng + ?Sized>(
    pop: &FinitePopulation,
    inclusion_probs: &[f64],
    rng: &mut R,
) -> Result<DrawnSample> {
    let chosen: Vec<usize> =
        inclusion_probs.iter().enumerate().filter_map(|(i, &p)| (rng.random::<f64>() < p).then_some(i)).collect();
    if chosen.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(DrawnSample::from_indices(pop, inclusion_probs, chosen))
}

/// SRS without replacement by a partial Fisher-Yates shuffle. Indices come back sorted.
pub fn draw_srs_sample<R: Rng + ?Sized>(pop: &FinitePopulation, n: usize, rng: &mut R) -> Result<DrawnSample> {
    let n_pop = pop.size();
    crate::model::check_sample_size(n, n_pop)?;
    let mut idx: Vec<usize> = (0..n_pop).collect();
    for i in 0..n {
        let j = rng.random_range(i..n_pop);
        idx.swap(i, j);
    }
    idx.truncate(n);
    idx.sort_unstable();
    let pi = n as f64 / n_pop as f64;
    let values = idx.iter().map(|&i| pop.values()[i]).collect();
    Ok(DrawnSample { unit_indices: idx, values, probs: vec![pi; n] })
}

/// PPS with replacement: `n` i.i.d. draws with `P(index = k) = p_k`.
pub fn draw_pps_sample<R: Rng + ?Sized>(
    pop: &FinitePopulation,
    selection_probs: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<DrawnSample> {
    let table = CumulativeTable::new(selection_probs);
    draw_pps_with_table(pop, selection_probs, &table, n, rng)
}

/// PPS draw reusing a prebuilt cumulative table.
pub fn draw_pps_with_table<R: Rng + ?Sized>(
    pop: &FinitePopulation,
    selection_probs: &[f64],
    table: &CumulativeTable,
    n: usize,
    rng: &mut R,
) -> Result<DrawnSample> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let idx = (0..n).map(|_| table.sample(rng)).collect();
    Ok(DrawnSample::from_indices(pop, selection_probs, idx))
}

/// Draw from whichever design `spec` names. `spec` is assumed to be validated.
pub fn draw_sample<R: Rng + ?Sized>(pop: &FinitePopulation, spec: &DesignSpec, rng: &mut R) -> Result<DrawnSample> {
    match spec {
        DesignSpec::Poisson { inclusion_probs } => draw_poisson_sample(pop, inclusion_probs, rng),
        DesignSpec::Srs { sample_size } => draw_srs_sample(pop, *sample_size, rng),
        DesignSpec::Pps { sample_size, selection_probs } => draw_pps_sample(pop, selection_probs, *sample_size, rng),
    }
}
