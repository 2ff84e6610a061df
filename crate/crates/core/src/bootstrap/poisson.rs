use alloc::vec;

use rand::Rng;

use super::{inverse_weights, BootPopulation};
use crate::accum::Compensated;
use crate::designs::{draw_binomial, multinomial_into};
use crate::error::{Error, Result};
use crate::estimators::studentize;
use crate::model::DrawnSample;

/// Pseudo-population for a Poisson sample: `N* ~ MN(N; rho)`, `rho_i ∝ 1/pi_i`.
pub fn rebuild_poisson<R: Rng + ?Sized>(
    sample: &DrawnSample,
    population_size: u64,
    rng: &mut R,
) -> Result<BootPopulation> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(rebuild_with_rho(sample, population_size, &inverse_weights(&sample.probs), rng))
}

pub(super) fn rebuild_with_rho<R: Rng + ?Sized>(
    sample: &DrawnSample,
    population_size: u64,
    rho: &[f64],
    rng: &mut R,
) -> BootPopulation {
    let mut counts = vec![0; sample.realized_n()];
    multinomial_into(rng, population_size, rho, &mut counts);
    BootPopulation::from_counts(sample, counts, false)
}

/// Poisson-resample the pseudo-population: `m_i ~ Bin(N_i*, pi_i)`.
/// Returns `T* = (Y_hat* - Y*) / sqrt(V_hat*)`.
pub fn resample_poisson<R: Rng + ?Sized>(bp: &BootPopulation, rng: &mut R) -> Result<f64> {
    let mut y_hat = Compensated::new();
    let mut v_hat = Compensated::new();
    for ((&count, &y), &pi) in bp.rep_counts.iter().zip(&bp.base_values).zip(&bp.base_probs) {
        let m = draw_binomial(rng, count, pi);
        if m == 0 {
            continue;
        }
        let m = m as f64;
        y_hat.add(m * y / pi);
        v_hat.add(m * y * y * (1.0 - pi) / (pi * pi));
    }
    // every term is non-negative, so zero means no unit or only zero values drawn
    let v = v_hat.value();
    if v <= 0.0 {
        return Err(Error::DegenerateReplicate);
    }
    studentize(y_hat.value(), bp.boot_total, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngContract;
    use alloc::vec::Vec;

    fn sample(values: Vec<f64>, probs: Vec<f64>) -> DrawnSample {
        DrawnSample { unit_indices: (0..values.len()).collect(), values, probs }
    }

    #[test]
    fn single_unit_takes_everything() {
        let s = sample(vec![3.0], vec![0.2]);
        let bp = rebuild_poisson(&s, 40, &mut RngContract::new(1).rng()).unwrap();
        assert_eq!(bp.rep_counts, vec![40]);
        assert_eq!(bp.boot_total, 120.0);
    }

    #[test]
    fn zero_values_are_degenerate() {
        let bp = BootPopulation {
            base_values: vec![0.0, 5.0],
            base_probs: vec![0.5, 0.5],
            rep_counts: vec![10, 0],
            boot_total: 0.0,
            normalizer: None,
        };
        let mut rng = RngContract::new(2).rng();
        assert_eq!(resample_poisson(&bp, &mut rng), Err(Error::DegenerateReplicate));
    }

    #[test]
    fn equal_probs_give_uniform_counts() {
        let s = sample(vec![1.0, 2.0, 3.0, 4.0], vec![0.2; 4]);
        let mut rng = RngContract::new(3).rng();
        let reps = 10_000;
        let mut sums = [0.0; 4];
        for _ in 0..reps {
            let bp = rebuild_poisson(&s, 100, &mut rng).unwrap();
            assert_eq!(bp.population_size(), 100);
            for (a, c) in sums.iter_mut().zip(&bp.rep_counts) {
                *a += *c as f64;
            }
        }
        let sd = (100.0f64 * 0.25 * 0.75).sqrt() / (reps as f64).sqrt();
        for a in sums {
            assert!((a / reps as f64 - 25.0).abs() < 3.0 * sd);
        }
    }

    #[test]
    fn boot_total_mean_matches_rho() {
        let s = sample(vec![1.0, 5.0, 9.0], vec![0.1, 0.25, 0.5]);
        let w: Vec<f64> = s.probs.iter().map(|p| 1.0 / p).collect();
        let wsum: f64 = w.iter().sum();
        let rho: Vec<f64> = w.iter().map(|x| x / wsum).collect();
        let n_pop = 60u64;
        let mean_y: f64 = rho.iter().zip(&s.values).map(|(r, y)| r * y).sum();
        let var_total =
            n_pop as f64 * (rho.iter().zip(&s.values).map(|(r, y)| r * y * y).sum::<f64>() - mean_y * mean_y);
        let mut rng = RngContract::new(4).rng();
        let reps = 10_000;
        let avg =
            (0..reps).map(|_| rebuild_poisson(&s, n_pop, &mut rng).unwrap().boot_total).sum::<f64>() / reps as f64;
        assert!((avg - n_pop as f64 * mean_y).abs() < 3.0 * (var_total / reps as f64).sqrt());
    }

    #[test]
    fn resampled_estimate_is_conditionally_unbiased() {
        let bp = BootPopulation {
            base_values: vec![2.0, 7.0, 11.0],
            base_probs: vec![0.2, 0.35, 0.6],
            rep_counts: vec![12, 5, 3],
            boot_total: 12.0 * 2.0 + 5.0 * 7.0 + 3.0 * 11.0,
            normalizer: None,
        };
        // Var(Y_hat*) = sum N_i y_i^2 (1 - pi_i) / pi_i
        let var: f64 = bp
            .rep_counts
            .iter()
            .zip(&bp.base_values)
            .zip(&bp.base_probs)
            .map(|((&c, &y), &p)| c as f64 * y * y * (1.0 - p) / p)
            .sum();
        let mut rng = RngContract::new(5).rng();
        let reps = 20_000;
        let mut acc = 0.0;
        for _ in 0..reps {
            let y_hat: f64 = bp
                .rep_counts
                .iter()
                .zip(&bp.base_values)
                .zip(&bp.base_probs)
                .map(|((&c, &y), &p)| draw_binomial(&mut rng, c, p) as f64 * y / p)
                .sum();
            acc += y_hat;
        }
        let mean = acc / reps as f64;
        assert!((mean - bp.boot_total).abs() < 3.0 * (var / reps as f64).sqrt());
    }

    #[test]
    fn centered_on_boot_total() {
        let mut bp = BootPopulation {
            base_values: vec![2.0, 7.0],
            base_probs: vec![0.3, 0.6],
            rep_counts: vec![6, 4],
            boot_total: 40.0,
            normalizer: None,
        };
        let t1 = resample_poisson(&bp, &mut RngContract::new(6).rng()).unwrap();
        bp.boot_total = 50.0;
        let t2 = resample_poisson(&bp, &mut RngContract::new(6).rng()).unwrap();
        // same draws, centre moved by 10
        assert!(t1 > t2);
        let ratio = (t1 - t2) / 10.0;
        assert!(ratio > 0.0 && ratio.is_finite());
    }
}
