use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{single_support, BootPopulation};
use crate::accum::Compensated;
use crate::designs::multinomial_uniform_into;
use crate::error::{Error, Result};
use crate::estimators::studentize;
use crate::model::DrawnSample;

/// Pseudo-population for an SRS sample: `N* ~ MN(N; 1/n, ..., 1/n)`.
pub fn rebuild_srs<R: Rng + ?Sized>(sample: &DrawnSample, population_size: u64, rng: &mut R) -> Result<BootPopulation> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut counts = vec![0; sample.realized_n()];
    multinomial_uniform_into(rng, population_size, &mut counts);
    Ok(BootPopulation::from_counts(sample, counts, false))
}

/// Fenwick tree over integer counts, for O(log n) weighted picks without replacement.
struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn new(counts: &[u64]) -> Self {
        let n = counts.len();
        let mut tree = vec![0; n + 1];
        for (i, &c) in counts.iter().enumerate() {
            tree[i + 1] += c;
            let parent = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i + 1];
            }
        }
        Self { tree }
    }

    fn decrement(&mut self, idx: usize) {
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] -= 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn find(&self, mut target: u64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = if n == 0 { 0 } else { 1usize << (usize::BITS - 1 - n.leading_zeros()) };
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

/// The sequential without-replacement draw on counts: at each of `n` steps pick
/// category `i` with probability `N_i^(k-1) / sum_j N_j^(k-1)`, then decrement it.
/// Returns the per-category tallies `m`.
pub fn sequential_srs_counts<R: Rng + ?Sized>(counts: &[u64], n: usize, rng: &mut R) -> Vec<u64> {
    let mut remaining: u64 = counts.iter().sum();
    assert!(n as u64 <= remaining, "cannot draw {n} from {remaining} units");
    let mut fw = Fenwick::new(counts);
    let mut m = vec![0; counts.len()];
    for _ in 0..n {
        let idx = fw.find(rng.random_range(0..remaining));
        m[idx] += 1;
        fw.decrement(idx);
        remaining -= 1;
    }
    m
}

/// `T*` from the tallies of an SRS bootstrap sample of size `n`.
fn srs_statistic(bp: &BootPopulation, m: &[u64], n: usize) -> Result<f64> {
    if single_support(m, &bp.base_values) {
        return Err(Error::DegenerateReplicate);
    }
    let big_n = bp.population_size() as f64;
    let nf = n as f64;
    let sum: f64 = super::weighted_sum(m, &bp.base_values);
    let mean = sum / nf;
    let mut ss = Compensated::new();
    for (&c, &y) in m.iter().zip(&bp.base_values) {
        if c > 0 {
            ss.add(c as f64 * (y - mean) * (y - mean));
        }
    }
    let s2 = ss.value() / nf;
    let v_hat = big_n * (big_n - nf) * s2 / nf;
    if !(v_hat > 0.0) {
        return Err(Error::DegenerateReplicate);
    }
    studentize(big_n * mean, bp.boot_total, v_hat)
}

/// O(n)-per-draw SRS resample of the pseudo-population (works on the counts).
pub fn resample_srs_fast<R: Rng + ?Sized>(bp: &BootPopulation, n: usize, rng: &mut R) -> Result<f64> {
    let m = sequential_srs_counts(&bp.rep_counts, n, rng);
    srs_statistic(bp, &m, n)
}

/// Reference resample: expand the pseudo-population to `N` units and draw a plain
/// SRS from it. Same law as [`resample_srs_fast`], O(N) per replicate.
pub fn resample_srs_direct<R: Rng + ?Sized>(bp: &BootPopulation, n: usize, rng: &mut R) -> Result<f64> {
    let mut expanded: Vec<usize> =
        bp.rep_counts.iter().enumerate().flat_map(|(i, &c)| core::iter::repeat_n(i, c as usize)).collect();
    let total = expanded.len();
    let mut m = vec![0; bp.rep_counts.len()];
    for k in 0..n {
        let j = rng.random_range(k..total);
        expanded.swap(k, j);
        m[expanded[k]] += 1;
    }
    srs_statistic(bp, &m, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngContract;

    fn bp(values: Vec<f64>, counts: Vec<u64>) -> BootPopulation {
        let total = values.iter().zip(&counts).map(|(y, c)| y * *c as f64).sum();
        BootPopulation {
            base_probs: vec![0.1; values.len()],
            base_values: values,
            rep_counts: counts,
            boot_total: total,
            normalizer: None,
        }
    }

    #[test]
    fn fenwick_find_matches_linear_scan() {
        let counts = [3u64, 0, 5, 1, 0, 0, 7, 2];
        let fw = Fenwick::new(&counts);
        let mut expect = Vec::new();
        for (i, &c) in counts.iter().enumerate() {
            expect.extend(core::iter::repeat_n(i, c as usize));
        }
        for (t, &e) in expect.iter().enumerate() {
            assert_eq!(fw.find(t as u64), e);
        }
    }

    #[test]
    fn single_unit_rebuild() {
        let s = DrawnSample { unit_indices: vec![0], values: vec![2.0], probs: vec![0.1] };
        let b = rebuild_srs(&s, 17, &mut RngContract::new(1).rng()).unwrap();
        assert_eq!(b.rep_counts, vec![17]);
    }

    #[test]
    fn rebuild_conserves_and_is_uniform() {
        let s = DrawnSample {
            unit_indices: vec![0, 1, 2, 3, 4],
            values: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            probs: vec![0.1; 5],
        };
        let mut rng = RngContract::new(2).rng();
        let reps = 10_000;
        let mut sums = [0.0; 5];
        for _ in 0..reps {
            let b = rebuild_srs(&s, 50, &mut rng).unwrap();
            assert_eq!(b.population_size(), 50);
            for (a, c) in sums.iter_mut().zip(&b.rep_counts) {
                *a += *c as f64;
            }
        }
        let sd = (50.0f64 * 0.2 * 0.8 / reps as f64).sqrt();
        for a in sums {
            assert!((a / reps as f64 - 10.0).abs() < 3.0 * sd);
        }
    }

    #[test]
    fn equal_values_always_degenerate() {
        let b = bp(vec![4.0, 4.0, 4.0], vec![5, 3, 2]);
        let mut rng = RngContract::new(3).rng();
        for _ in 0..50 {
            assert_eq!(resample_srs_fast(&b, 3, &mut rng), Err(Error::DegenerateReplicate));
        }
    }

    #[test]
    fn three_one_law_by_frequency() {
        // counts (3, 1), n = 2: P(m = (2, 0)) = P(m = (1, 1)) = 1/2
        let mut rng = RngContract::new(4).rng();
        let reps = 100_000;
        let both = (0..reps).filter(|_| sequential_srs_counts(&[3, 1], 2, &mut rng) == vec![1, 1]).count();
        assert!((both as f64 / reps as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn tallies_sum_to_n_and_respect_counts() {
        let mut rng = RngContract::new(5).rng();
        let counts = [4u64, 0, 2, 9, 1];
        for n in 0..=16 {
            let m = sequential_srs_counts(&counts, n, &mut rng);
            assert_eq!(m.iter().sum::<u64>(), n as u64);
            assert!(m.iter().zip(&counts).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn fast_and_direct_agree_in_mean() {
        let b = bp(vec![1.0, 2.5, 7.0, 3.0], vec![10, 6, 2, 12]);
        let mut rf = RngContract::new(6).rng();
        let mut rd = RngContract::new(7).rng();
        let reps = 40_000;
        let mean = |xs: Vec<f64>| xs.iter().sum::<f64>() / xs.len() as f64;
        let f: Vec<f64> = (0..reps).filter_map(|_| resample_srs_fast(&b, 4, &mut rf).ok()).collect();
        let d: Vec<f64> = (0..reps).filter_map(|_| resample_srs_direct(&b, 4, &mut rd).ok()).collect();
        let (fl, dl) = (f.len() as f64, d.len() as f64);
        assert!((fl - dl).abs() / (reps as f64) < 0.02);
        assert!((mean(f) - mean(d)).abs() < 0.05);
    }
}
