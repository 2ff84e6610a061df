use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{inverse_weights, BootPopulation};
use crate::accum::Compensated;
use crate::designs::{multinomial_into, CumulativeTable};
use crate::error::{Error, Result};
use crate::estimators::studentize;
use crate::model::DrawnSample;

/// Pseudo-population for a PPS sample: `N* ~ MN(N; rho)`, `rho_i ∝ 1/p_{a,i}`,
/// with normalizer `C_N* = sum N_i* p_{a,i}`.
pub fn rebuild_pps<R: Rng + ?Sized>(sample: &DrawnSample, population_size: u64, rng: &mut R) -> Result<BootPopulation> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    rebuild_with_rho(sample, population_size, &inverse_weights(&sample.probs), rng)
}

pub(super) fn rebuild_with_rho<R: Rng + ?Sized>(
    sample: &DrawnSample,
    population_size: u64,
    rho: &[f64],
    rng: &mut R,
) -> Result<BootPopulation> {
    let mut counts = vec![0; sample.realized_n()];
    multinomial_into(rng, population_size, rho, &mut counts);
    let bp = BootPopulation::from_counts(sample, counts, true);
    match bp.normalizer {
        Some(c) if c > 0.0 => Ok(bp),
        _ => Err(Error::DegenerateNormalizer),
    }
}

/// `p_i† = N_i* p_{a,i} / C_N*`, the per-draw law over the sampled units.
pub fn dagger_probs(bp: &BootPopulation) -> Vec<f64> {
    let c = bp.normalizer.expect("PPS pseudo-population carries a normalizer");
    bp.rep_counts.iter().zip(&bp.base_probs).map(|(&n, &p)| n as f64 * p / c).collect()
}

fn pps_statistic(bp: &BootPopulation, m: &[u64], n: usize) -> Result<f64> {
    let c = bp.normalizer.ok_or(Error::DegenerateNormalizer)?;
    let z: Vec<f64> = bp.base_values.iter().zip(&bp.base_probs).map(|(y, p)| c * y / p).collect();
    if super::single_support(m, &z) {
        return Err(Error::DegenerateReplicate);
    }
    let nf = n as f64;
    let y_hat = super::weighted_sum(m, &z) / nf;
    let mut ss = Compensated::new();
    for (&k, &zi) in m.iter().zip(&z) {
        if k > 0 {
            ss.add(k as f64 * (zi - y_hat) * (zi - y_hat));
        }
    }
    let v_hat = ss.value() / (nf * nf);
    if !(v_hat > 0.0) {
        return Err(Error::DegenerateReplicate);
    }
    studentize(y_hat, bp.boot_total, v_hat)
}

/// O(n) PPS resample: `n` i.i.d. picks over the sampled units with probabilities `p†`.
pub fn resample_pps_fast<R: Rng + ?Sized>(bp: &BootPopulation, n: usize, rng: &mut R) -> Result<f64> {
    let p = dagger_probs(bp);
    debug_assert!((crate::accum::sum(p.iter().copied()) - 1.0).abs() <= 1e-12);
    let mut m = vec![0; p.len()];
    multinomial_into(rng, n as u64, &p, &mut m);
    pps_statistic(bp, &m, n)
}

/// Reference resample over the expanded pseudo-population of `N` entries, each
/// chosen with probability `p_k* / C_N*`. Same law as [`resample_pps_fast`].
pub fn resample_pps_direct<R: Rng + ?Sized>(bp: &BootPopulation, n: usize, rng: &mut R) -> Result<f64> {
    let c = bp.normalizer.ok_or(Error::DegenerateNormalizer)?;
    let mut owner = Vec::new();
    let mut weights = Vec::new();
    for (i, (&k, &p)) in bp.rep_counts.iter().zip(&bp.base_probs).enumerate() {
        for _ in 0..k {
            owner.push(i);
            weights.push(p / c);
        }
    }
    let table = CumulativeTable::new(&weights);
    let mut m = vec![0; bp.rep_counts.len()];
    for _ in 0..n {
        m[owner[table.sample(rng)]] += 1;
    }
    pps_statistic(bp, &m, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngContract;

    fn sample() -> DrawnSample {
        DrawnSample {
            unit_indices: vec![1, 4, 4, 8],
            values: vec![3.0, 10.0, 10.0, 1.5],
            probs: vec![0.05, 0.2, 0.2, 0.02],
        }
    }

    #[test]
    fn single_draw_rebuild() {
        let s = DrawnSample { unit_indices: vec![2], values: vec![5.0], probs: vec![0.1] };
        let bp = rebuild_pps(&s, 30, &mut RngContract::new(1).rng()).unwrap();
        assert_eq!(bp.rep_counts, vec![30]);
        assert!((bp.normalizer.unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn equal_probs_give_constant_normalizer() {
        let s = DrawnSample { unit_indices: vec![0, 1, 2], values: vec![1.0, 2.0, 3.0], probs: vec![0.04; 3] };
        let mut rng = RngContract::new(2).rng();
        for _ in 0..100 {
            let bp = rebuild_pps(&s, 25, &mut rng).unwrap();
            assert!((bp.normalizer.unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn dagger_probs_sum_to_one() {
        let s = sample();
        let mut rng = RngContract::new(3).rng();
        for _ in 0..1000 {
            let bp = rebuild_pps(&s, 100, &mut rng).unwrap();
            let total: f64 = dagger_probs(&bp).iter().sum();
            assert!((total - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn normalizer_mean() {
        let s = sample();
        let w: Vec<f64> = s.probs.iter().map(|p| 1.0 / p).collect();
        let ws: f64 = w.iter().sum();
        let expect: f64 = 100.0 * w.iter().zip(&s.probs).map(|(wi, p)| wi / ws * p).sum::<f64>();
        let second: f64 = w.iter().zip(&s.probs).map(|(wi, p)| wi / ws * p * p).sum::<f64>();
        let var = 100.0 * (second - (expect / 100.0).powi(2));
        let mut rng = RngContract::new(4).rng();
        let reps = 10_000;
        let avg =
            (0..reps).map(|_| rebuild_pps(&s, 100, &mut rng).unwrap().normalizer.unwrap()).sum::<f64>() / reps as f64;
        assert!((avg - expect).abs() < 3.0 * (var / reps as f64).sqrt());
    }

    #[test]
    fn all_mass_on_one_category() {
        let bp = BootPopulation {
            base_values: vec![3.0, 8.0],
            base_probs: vec![0.1, 0.3],
            rep_counts: vec![20, 0],
            boot_total: 60.0,
            normalizer: Some(2.0),
        };
        assert_eq!(resample_pps_fast(&bp, 5, &mut RngContract::new(5).rng()), Err(Error::DegenerateReplicate));
    }

    #[test]
    fn conditional_unbiasedness() {
        let s = sample();
        let bp = rebuild_pps(&s, 60, &mut RngContract::new(6).rng()).unwrap();
        let c = bp.normalizer.unwrap();
        let p = dagger_probs(&bp);
        let z: Vec<f64> = bp.base_values.iter().zip(&bp.base_probs).map(|(y, q)| c * y / q).collect();
        // identity: sum p† z = Y*
        let ez: f64 = p.iter().zip(&z).map(|(a, b)| a * b).sum();
        assert!((ez - bp.boot_total).abs() < 1e-9 * bp.boot_total.abs());
        let var_z: f64 = p.iter().zip(&z).map(|(a, b)| a * (b - ez) * (b - ez)).sum();
        let n = 4;
        let mut rng = RngContract::new(7).rng();
        let reps = 20_000;
        let mut acc = 0.0;
        for _ in 0..reps {
            let mut m = vec![0; p.len()];
            multinomial_into(&mut rng, n, &p, &mut m);
            acc += m.iter().zip(&z).map(|(k, zi)| *k as f64 * zi).sum::<f64>() / n as f64;
        }
        let sd = (var_z / n as f64 / reps as f64).sqrt();
        assert!((acc / reps as f64 - bp.boot_total).abs() < 3.0 * sd);
    }
}
