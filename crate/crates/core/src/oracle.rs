//! Brute-force enumeration of small sample spaces.
//!
//! These are the exact references the randomized code is tested against: design
//! moments of the estimators, and the laws of the bootstrap resampling steps.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Div, Mul};

use crate::accum::Compensated;
use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimateBundle};
use crate::math;
use crate::model::{check_selection_probs, validate_design, DesignSpec, DrawnSample, FinitePopulation};
use crate::twostage::{
    cluster_estimate, combine_stage_one, ClusterEstimate, ClusteredPopulation, StageOne, TwoStageSpec,
};

pub const POISSON_MAX_UNITS: usize = 16;
pub const SRS_MAX_SAMPLES: u128 = 20_000;
pub const PPS_MAX_SAMPLES: u128 = 100_000;
pub const TWO_STAGE_MAX_SAMPLES: u128 = 1_000_000;

/// Exact design moments of `(Y_hat, V_hat)` and the law of `T = (Y_hat - Y) / sqrt(V_hat)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMoments {
    pub mean_estimate: f64,
    pub var_estimate: f64,
    pub mean_variance_estimate: f64,
    /// Sum of the enumerated sample probabilities.
    pub total_probability: f64,
    /// Probability of samples with `V_hat = 0`, where `T` is undefined.
    pub zero_variance_mass: f64,
    /// Support points of `T` (ascending) with their probabilities.
    pub t_law: Vec<(f64, f64)>,
    pub samples: usize,
}

impl DesignMoments {
    /// `P(T <= z)` over samples with a positive variance estimate.
    pub fn t_cdf(&self, z: f64) -> f64 {
        crate::accum::sum(self.t_law.iter().take_while(|(t, _)| *t <= z).map(|(_, p)| *p))
    }
}

/// `C(n, k)` saturating at `u128::MAX`.
pub fn binomial_coefficient(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = match c.checked_mul(u128::from(n - i)) {
            Some(v) => v / u128::from(i + 1),
            None => return u128::MAX,
        };
    }
    c
}

fn check_space(size: u128, limit: u128) -> Result<()> {
    if size > limit {
        return Err(Error::SpaceTooLarge { size, limit });
    }
    Ok(())
}

/// Every `k`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // rightmost position that can still advance
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Every ordered `k`-tuple over `0..n`.
fn for_each_tuple(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0; k];
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < n {
                break;
            }
            idx[i] = 0;
        }
    }
}

/// Moments of a weighted list of `(probability, estimate, variance estimate)`.
fn summarize(outcomes: &[(f64, f64, f64)], truth: f64) -> DesignMoments {
    let total: Compensated = outcomes.iter().map(|o| o.0).collect();
    let mean: Compensated = outcomes.iter().map(|o| o.0 * o.1).collect();
    let mean = mean.value();
    let var: Compensated = outcomes.iter().map(|o| o.0 * (o.1 - mean) * (o.1 - mean)).collect();
    let mean_v: Compensated = outcomes.iter().map(|o| o.0 * o.2).collect();
    let mut zero = Compensated::new();
    let mut law: Vec<(f64, f64)> = Vec::new();
    for &(p, y, v) in outcomes {
        if v > 0.0 {
            law.push(((y - truth) / math::sqrt(v), p));
        } else {
            zero.add(p);
        }
    }
    law.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(law.len());
    for (t, p) in law {
        match merged.last_mut() {
            Some(last) if last.0 == t => last.1 += p,
            _ => merged.push((t, p)),
        }
    }
    DesignMoments {
        mean_estimate: mean,
        var_estimate: var.value(),
        mean_variance_estimate: mean_v.value(),
        total_probability: total.value(),
        zero_variance_mass: zero.value(),
        t_law: merged,
        samples: outcomes.len(),
    }
}

/// Exact moments of the single-stage estimators by weighting every possible sample.
///
/// An empty Poisson sample counts with `Y_hat = V_hat = 0`.
///
/// PPS draws are with replacement, so here the PPS sample size may reach or exceed `N`.
pub fn enumerate_design_moments(pop: &FinitePopulation, spec: &DesignSpec) -> Result<DesignMoments> {
    match spec {
        DesignSpec::Pps { sample_size, selection_probs } => {
            if selection_probs.len() != pop.size() {
                return Err(Error::LengthMismatch { expected: pop.size(), found: selection_probs.len() });
            }
            check_selection_probs(selection_probs)?;
            if *sample_size == 0 {
                return Err(Error::EmptySample);
            }
        }
        _ => {
            validate_design(pop, spec)?;
        }
    }
    let n_pop = pop.size();
    let y = pop.values();
    let mut outcomes = Vec::new();
    let bundle = |s: &DrawnSample| -> Result<EstimateBundle> { estimate(s, spec.kind(), n_pop) };
    match spec {
        DesignSpec::Poisson { inclusion_probs } => {
            if n_pop > POISSON_MAX_UNITS {
                return Err(Error::SpaceTooLarge { size: 1u128 << n_pop.min(127), limit: 1 << POISSON_MAX_UNITS });
            }
            for mask in 0u32..(1 << n_pop) {
                let idx: Vec<usize> = (0..n_pop).filter(|i| mask >> i & 1 == 1).collect();
                let p: f64 = (0..n_pop)
                    .map(|i| if mask >> i & 1 == 1 { inclusion_probs[i] } else { 1.0 - inclusion_probs[i] })
                    .product();
                if idx.is_empty() {
                    outcomes.push((p, 0.0, 0.0));
                    continue;
                }
                let b = bundle(&DrawnSample::from_indices(pop, inclusion_probs, idx))?;
                outcomes.push((p, b.y_hat, b.v_hat));
            }
        }
        DesignSpec::Srs { sample_size } => {
            let n = *sample_size;
            let count = binomial_coefficient(n_pop as u64, n as u64);
            check_space(count, SRS_MAX_SAMPLES)?;
            let probs = vec![n as f64 / n_pop as f64; n_pop];
            let p = 1.0 / count as f64;
            let mut err = None;
            for_each_subset(n_pop, n, |idx| match bundle(&DrawnSample::from_indices(pop, &probs, idx.to_vec())) {
                Ok(b) => outcomes.push((p, b.y_hat, b.v_hat)),
                Err(e) => err = Some(e),
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        DesignSpec::Pps { sample_size, selection_probs } => {
            let n = *sample_size;
            let count = (n_pop as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
            check_space(count, PPS_MAX_SAMPLES)?;
            let mut err = None;
            for_each_tuple(n_pop, n, |idx| {
                let p: f64 = idx.iter().map(|&i| selection_probs[i]).product();
                match bundle(&DrawnSample::from_indices(pop, selection_probs, idx.to_vec())) {
                    Ok(b) => outcomes.push((p, b.y_hat, b.v_hat)),
                    Err(e) => err = Some(e),
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
    }
    Ok(summarize(&outcomes, crate::accum::sum(y.iter().copied())))
}

/// Exact moments of the two-stage mean estimator `(Y~, V~)` over the product of
/// stage-1 outcomes and within-cluster subsets. An empty Poisson first stage counts
/// with `Y~ = V~ = 0`.
pub fn enumerate_two_stage_moments(cpop: &ClusteredPopulation, spec: &TwoStageSpec) -> Result<DesignMoments> {
    crate::twostage::validate_two_stage(cpop, spec)?;
    enumerate_two_stage_unchecked(cpop, spec)
}

/// Like [`enumerate_two_stage_moments`] but only requires `2 <= n2 <= N_i`, so that
/// within-cluster censuses can be checked too.
pub fn enumerate_two_stage_unchecked(cpop: &ClusteredPopulation, spec: &TwoStageSpec) -> Result<DesignMoments> {
    let n2 = spec.stage2_size;
    let big_n = cpop.population_size() as f64;
    // every within-cluster subset estimate, each with probability 1 / C(N_i, n2)
    let mut within: Vec<Vec<ClusterEstimate>> = Vec::with_capacity(cpop.cluster_count());
    for c in cpop.clusters() {
        if n2 > c.size() {
            return Err(Error::SampleTooLarge { n: n2, population: c.size() });
        }
        let mut list = Vec::new();
        let mut err = None;
        for_each_subset(c.size(), n2, |idx| {
            let vals: Vec<f64> = idx.iter().map(|&i| c.values()[i]).collect();
            match cluster_estimate(&vals, c.size() as u64) {
                Ok(e) => list.push(e),
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        within.push(list);
    }
    let kind = spec.stage1.kind();
    let mut outcomes = Vec::new();
    match &spec.stage1 {
        StageOne::Poisson { inclusion_probs } => {
            let size =
                within.iter().try_fold(1u128, |acc, w| acc.checked_mul(1 + w.len() as u128)).unwrap_or(u128::MAX);
            check_space(size, TWO_STAGE_MAX_SAMPLES)?;
            let h = cpop.cluster_count();
            for mask in 0u64..(1 << h) {
                let ids: Vec<usize> = (0..h).filter(|i| mask >> i & 1 == 1).collect();
                let p: f64 = (0..h)
                    .map(|i| if mask >> i & 1 == 1 { inclusion_probs[i] } else { 1.0 - inclusion_probs[i] })
                    .product();
                if ids.is_empty() {
                    outcomes.push((p, 0.0, 0.0));
                    continue;
                }
                let probs: Vec<f64> = ids.iter().map(|&i| inclusion_probs[i]).collect();
                product_over_subsets(&within, &ids, &probs, p, kind, big_n, &mut outcomes)?;
            }
        }
        StageOne::Pps { draws, selection_probs } => {
            let per_draw: u128 = within.iter().map(|w| w.len() as u128).sum();
            let size = per_draw.checked_pow(*draws as u32).unwrap_or(u128::MAX);
            check_space(size, TWO_STAGE_MAX_SAMPLES)?;
            let mut err = None;
            for_each_tuple(cpop.cluster_count(), *draws, |ids| {
                let p: f64 = ids.iter().map(|&i| selection_probs[i]).product();
                let probs: Vec<f64> = ids.iter().map(|&i| selection_probs[i]).collect();
                if let Err(e) = product_over_subsets(&within, ids, &probs, p, kind, big_n, &mut outcomes) {
                    err = Some(e);
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
    }
    Ok(summarize(&outcomes, cpop.mean()))
}

fn product_over_subsets(
    within: &[Vec<ClusterEstimate>],
    ids: &[usize],
    probs: &[f64],
    p_stage1: f64,
    kind: crate::twostage::StageOneKind,
    big_n: f64,
    out: &mut Vec<(f64, f64, f64)>,
) -> Result<()> {
    let radix: Vec<usize> = ids.iter().map(|&i| within[i].len()).collect();
    let p = p_stage1 / radix.iter().map(|&r| r as f64).product::<f64>();
    let mut digit = vec![0usize; ids.len()];
    loop {
        let parts = ids.iter().zip(&digit).zip(probs).map(|((&i, &d), &pi)| (within[i][d], pi));
        let est = combine_stage_one(kind, big_n, parts)?;
        out.push((p, est.y_tilde_mean, est.v_tilde));
        let mut k = ids.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            digit[k] += 1;
            if digit[k] < radix[k] {
                break;
            }
            digit[k] = 0;
        }
    }
}

/// Scalar field the resampling laws are computed in. `f64` for speed, or an exact
/// rational type supplied by the caller.
pub trait LawScalar: Clone + PartialEq + Add<Output = Self> + Mul<Output = Self> + Div<Output = Self> {
    fn zero() -> Self;
    fn from_u64(v: u64) -> Self;
    fn one() -> Self {
        Self::from_u64(1)
    }
}

impl LawScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_u64(v: u64) -> Self {
        v as f64
    }
}

/// Distribution over tally vectors `m` (draws per category).
pub type Law<T> = BTreeMap<Vec<u64>, T>;

fn add_to<T: LawScalar>(law: &mut Law<T>, key: Vec<u64>, p: T) {
    let slot = law.entry(key).or_insert_with(T::zero);
    *slot = slot.clone() + p;
}

/// Law of the tallies produced by the sequential without-replacement draw on
/// `counts`: every ordered pick sequence, weighted by the product of conditional
/// pick probabilities.
pub fn sequential_srs_law<T: LawScalar>(counts: &[u64], n: usize) -> Law<T> {
    fn go<T: LawScalar>(rem: &mut [u64], m: &mut [u64], left: usize, p: T, law: &mut Law<T>) {
        if left == 0 {
            add_to(law, m.to_vec(), p);
            return;
        }
        let total: u64 = rem.iter().sum();
        for i in 0..rem.len() {
            if rem[i] == 0 {
                continue;
            }
            let step = p.clone() * T::from_u64(rem[i]) / T::from_u64(total);
            rem[i] -= 1;
            m[i] += 1;
            go(rem, m, left - 1, step, law);
            rem[i] += 1;
            m[i] -= 1;
        }
    }
    let mut law = Law::new();
    go(&mut counts.to_vec(), &mut vec![0; counts.len()], n, T::one(), &mut law);
    law
}

/// Law of the tallies when the pseudo-population is expanded to its `sum counts`
/// elements and a plain SRS of `n` is drawn: every `n`-subset is equally likely.
pub fn direct_srs_law<T: LawScalar>(counts: &[u64], n: usize) -> Law<T> {
    let owner = expand(counts);
    let subsets = binomial_coefficient(owner.len() as u64, n as u64);
    let p = T::one() / T::from_u64(subsets as u64);
    let mut law = Law::new();
    for_each_subset(owner.len(), n, |idx| {
        let mut m = vec![0; counts.len()];
        for &e in idx {
            m[owner[e]] += 1;
        }
        add_to(&mut law, m, p.clone());
    });
    law
}

fn expand(counts: &[u64]) -> Vec<usize> {
    counts.iter().enumerate().flat_map(|(i, &c)| core::iter::repeat_n(i, c as usize)).collect()
}

fn normalizer<T: LawScalar>(counts: &[u64], probs: &[T]) -> T {
    counts.iter().zip(probs).fold(T::zero(), |acc, (&c, p)| acc + T::from_u64(c) * p.clone())
}

/// Multinomial law of `n` i.i.d. picks with `p_i† = N_i* p_i / C*`.
pub fn dagger_pps_law<T: LawScalar>(counts: &[u64], probs: &[T], n: usize) -> Law<T> {
    let c = normalizer(counts, probs);
    let dagger: Vec<T> = counts.iter().zip(probs).map(|(&k, p)| T::from_u64(k) * p.clone() / c.clone()).collect();
    let mut law = Law::new();
    let mut m = vec![0u64; counts.len()];
    fn go<T: LawScalar>(i: usize, left: u64, m: &mut [u64], dagger: &[T], n: u64, law: &mut Law<T>) {
        if i + 1 == m.len() {
            m[i] = left;
            // n! / prod m_i! * prod p_i^m_i
            let mut coef = T::one();
            let mut used = 0;
            let mut pw = T::one();
            for (j, &mj) in m.iter().enumerate() {
                for r in 1..=mj {
                    used += 1;
                    coef = coef * T::from_u64(used) / T::from_u64(r);
                    pw = pw * dagger[j].clone();
                }
            }
            debug_assert_eq!(used, n);
            if pw != T::zero() {
                add_to(law, m.to_vec(), coef * pw);
            }
            return;
        }
        for k in 0..=left {
            m[i] = k;
            go(i + 1, left - k, m, dagger, n, law);
        }
        m[i] = 0;
    }
    go(0, n as u64, &mut m, &dagger, n as u64, &mut law);
    law
}

/// Law of the tallies from `n` i.i.d. picks over the expanded pseudo-population,
/// each element of category `i` chosen with probability `p_i / C*`.
pub fn direct_pps_law<T: LawScalar>(counts: &[u64], probs: &[T], n: usize) -> Law<T> {
    let c = normalizer(counts, probs);
    let c_n = (0..n).fold(T::one(), |acc, _| acc * c.clone());
    let owner = expand(counts);
    let mut law = Law::new();
    for_each_tuple(owner.len(), n, |idx| {
        let mut m = vec![0; counts.len()];
        let mut p = T::one();
        for &e in idx {
            m[owner[e]] += 1;
            p = p * probs[owner[e]].clone();
        }
        add_to(&mut law, m, p / c_n.clone());
    });
    law
}
