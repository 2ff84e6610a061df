use svyboot_core::bootstrap::{dagger_probs, rebuild_pps, BootPopulation};
use svyboot_core::oracle::{
    dagger_pps_law, enumerate_design_moments, enumerate_two_stage_moments, enumerate_two_stage_unchecked, Law,
};
use svyboot_core::twostage::{ClusteredPopulation, StageOne, TwoStageSpec};
use svyboot_core::{DesignSpec, DrawnSample, FinitePopulation, RngContract};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn pop(v: &[f64]) -> FinitePopulation {
    FinitePopulation::new(v.to_vec()).unwrap()
}

#[test]
fn poisson_unbiased_with_mixed_probabilities() {
    let y = [3.1, -0.4, 7.7, 2.2, 9.0, 0.5, 4.4, 6.1, 1.3, 5.5];
    let pi = [0.15, 0.9, 0.4, 0.33, 0.72, 0.05, 0.5, 0.61, 0.27, 0.8];
    let m = enumerate_design_moments(&pop(&y), &DesignSpec::Poisson { inclusion_probs: pi.to_vec() }).unwrap();
    let total: f64 = y.iter().sum();
    // closed form Var = sum y^2 (1 - pi) / pi
    let var: f64 = y.iter().zip(&pi).map(|(y, p)| y * y * (1.0 - p) / p).sum();
    assert!(rel(m.mean_estimate, total) < 1e-10);
    assert!(rel(m.var_estimate, var) < 1e-10);
    assert!(rel(m.mean_variance_estimate, m.var_estimate) < 1e-10);
    assert!((m.total_probability - 1.0).abs() < 1e-12);
    assert_eq!(m.samples, 1024);
}

#[test]
fn srs_variance_estimator_carries_the_divisor_factor() {
    let y = [2.0, 5.0, 1.0, 8.0, 3.0, 4.0];
    let m = enumerate_design_moments(&pop(&y), &DesignSpec::Srs { sample_size: 3 }).unwrap();
    assert!(rel(m.mean_estimate, 23.0) < 1e-12);
    // textbook Var(Y_hat) = N^2 (1 - n/N) S^2 / n with divisor N - 1 for S^2
    let mean = 23.0 / 6.0;
    let s2: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 5.0;
    assert!(rel(m.var_estimate, 36.0 * 0.5 * s2 / 3.0) < 1e-12);
    assert!(rel(m.mean_variance_estimate, 2.0 / 3.0 * m.var_estimate) < 1e-10);
}

#[test]
fn pps_variance_estimator_carries_the_divisor_factor() {
    let y = [1.0, 2.0, 3.0];
    let p = [0.2, 0.3, 0.5];
    let m =
        enumerate_design_moments(&pop(&y), &DesignSpec::Pps { sample_size: 2, selection_probs: p.to_vec() }).unwrap();
    let sigma2: f64 = y.iter().zip(&p).map(|(y, p)| p * (y / p - 6.0) * (y / p - 6.0)).sum();
    assert!(rel(m.mean_estimate, 6.0) < 1e-12);
    assert!(rel(m.var_estimate, sigma2 / 2.0) < 1e-12);
    assert!(rel(m.mean_variance_estimate, 0.25 * sigma2) < 1e-10);
    assert_eq!(m.samples, 9);
}

fn clusters(sets: &[&[f64]]) -> ClusteredPopulation {
    ClusteredPopulation::new(sets.iter().map(|s| pop(s)).collect()).unwrap()
}

#[test]
fn two_stage_poisson_unbiased() {
    let cpop = clusters(&[&[1.0, 4.0, 2.0], &[10.0, 7.0, 12.0], &[5.0, 6.0, 9.0]]);
    let spec = TwoStageSpec { stage1: StageOne::Poisson { inclusion_probs: vec![0.4, 0.7, 0.55] }, stage2_size: 2 };
    let m = enumerate_two_stage_moments(&cpop, &spec).unwrap();
    assert_eq!(m.samples, 64);
    assert!((m.total_probability - 1.0).abs() < 1e-12);
    assert!(rel(m.mean_estimate, cpop.mean()) < 1e-10);
    assert!(rel(m.mean_variance_estimate, m.var_estimate) < 1e-10);
}

#[test]
fn two_stage_pps_unbiased() {
    let cpop = clusters(&[&[1.0, 4.0, 2.0, 3.0], &[10.0, 7.0, 12.0], &[5.0, 6.0, 9.0, 1.0, 2.0], &[20.0, 15.0, 18.0]]);
    for draws in [2, 3] {
        let spec = TwoStageSpec::pps_proportional(&cpop, draws, 2);
        let m = enumerate_two_stage_moments(&cpop, &spec).unwrap();
        assert!((m.total_probability - 1.0).abs() < 1e-12);
        assert!(rel(m.mean_estimate, cpop.mean()) < 1e-10);
        assert!(rel(m.mean_variance_estimate, m.var_estimate) < 1e-10, "n1 = {draws}");
    }
}

#[test]
fn two_stage_full_census_is_exact() {
    let cpop = clusters(&[&[1.0, 4.0, 2.0], &[10.0, 7.0, 12.0]]);
    let spec = TwoStageSpec { stage1: StageOne::Poisson { inclusion_probs: vec![0.5, 0.5] }, stage2_size: 3 };
    let m = enumerate_two_stage_unchecked(&cpop, &spec).unwrap();
    // only the stage-1 draw is random once every cluster is fully enumerated
    assert!(rel(m.mean_estimate, cpop.mean()) < 1e-12);
    assert!(rel(m.mean_variance_estimate, m.var_estimate) < 1e-10);
}

#[test]
fn pps_bootstrap_mean_is_the_pseudo_total() {
    let sample = DrawnSample { unit_indices: vec![0, 1, 2], values: vec![1.5, -2.0, 4.0], probs: vec![0.1, 0.25, 0.4] };
    let mut rng = RngContract::new(17).rng();
    for _ in 0..20 {
        let bp: BootPopulation = rebuild_pps(&sample, 9, &mut rng).unwrap();
        let c = bp.normalizer.unwrap();
        let law: Law<f64> = dagger_pps_law(&bp.rep_counts, &bp.base_probs, 3);
        let mean: f64 = law
            .iter()
            .map(|(m, p)| {
                let z: f64 =
                    m.iter().zip(&bp.base_values).zip(&bp.base_probs).map(|((&k, y), q)| k as f64 * c * y / q).sum();
                p * z / 3.0
            })
            .sum();
        assert!((mean - bp.boot_total).abs() < 1e-10 * (1.0 + bp.boot_total.abs()));
        assert!((dagger_probs(&bp).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
