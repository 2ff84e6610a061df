use proptest::prelude::*;
use svyboot_core::bootstrap::{rebuild_poisson, rebuild_pps, rebuild_srs, BootstrapPlan};
use svyboot_core::designs::draw_multinomial;
use svyboot_core::{DesignKind, DrawnSample, Error, RngContract};

fn sample(values: Vec<f64>, probs: Vec<f64>) -> DrawnSample {
    DrawnSample { unit_indices: (0..values.len()).collect(), values, probs }
}

fn normalized(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// `T*` of one attempt, or `None` if the attempt was degenerate.
fn attempt(s: &DrawnSample, kind: DesignKind, big_n: usize, seed: u64) -> Option<f64> {
    match BootstrapPlan::new(s, kind, big_n).unwrap().attempt(&mut RngContract::new(seed).rng()) {
        Ok(t) => Some(t),
        Err(Error::DegenerateReplicate) => None,
        Err(e) => panic!("{e:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn multinomial_conserves_trials(
        w in prop::collection::vec(0.01f64..10.0, 1..30),
        trials in 0u64..100_000,
        seed in any::<u64>(),
    ) {
        let cv = draw_multinomial(&mut RngContract::new(seed).rng(), trials, &normalized(&w)).unwrap();
        prop_assert_eq!(cv.counts.len(), w.len());
        prop_assert_eq!(cv.total(), trials);
    }

    #[test]
    fn rebuilds_have_size_n_and_total_sum_of_copies(
        ys in prop::collection::vec(-20.0f64..50.0, 2..15),
        ps in prop::collection::vec(0.01f64..0.6, 15),
        extra in 1usize..300,
        seed in any::<u64>(),
    ) {
        let n = ys.len();
        let big_n = n + extra;
        let s = sample(ys.clone(), ps[..n].to_vec());
        let pps = sample(ys.clone(), normalized(&ps[..n]));
        let mut rng = RngContract::new(seed).rng();
        for bp in [
            rebuild_poisson(&s, big_n as u64, &mut rng).unwrap(),
            rebuild_srs(&s, big_n as u64, &mut rng).unwrap(),
            rebuild_pps(&pps, big_n as u64, &mut rng).unwrap(),
        ] {
            prop_assert_eq!(bp.population_size(), big_n as u64);
            let total: f64 = bp.rep_counts.iter().zip(&ys).map(|(&c, y)| c as f64 * y).sum();
            prop_assert!((bp.boot_total - total).abs() <= 1e-9 * (1.0 + total.abs()));
        }
    }

    // T* is centered on the pseudo-population total: shifting every value by a
    // constant (SRS) or by c * p_i (PPS) moves Y_hat* and Y* together and
    // leaves T* unchanged on the same random stream.
    #[test]
    fn t_star_is_centered_on_the_pseudo_total(
        ys in prop::collection::vec(0.0f64..50.0, 3..12),
        ws in prop::collection::vec(0.05f64..1.0, 12),
        c in -100.0f64..100.0,
        extra in 5usize..200,
        seed in any::<u64>(),
    ) {
        let n = ys.len();
        let big_n = n + extra;
        let srs = sample(ys.clone(), vec![n as f64 / big_n as f64; n]);
        let srs_shift = sample(ys.iter().map(|y| y + c).collect(), srs.probs.clone());
        let p = normalized(&ws[..n]);
        let pps = sample(ys.clone(), p.clone());
        let pps_shift = sample(ys.iter().zip(&p).map(|(y, p)| y + c * p).collect(), p.clone());
        for (kind, a, b) in [(DesignKind::Srs, &srs, &srs_shift), (DesignKind::Pps, &pps, &pps_shift)] {
            let (ta, tb) = (attempt(a, kind, big_n, seed), attempt(b, kind, big_n, seed));
            match (ta, tb) {
                (Some(ta), Some(tb)) => prop_assert!((ta - tb).abs() <= 1e-6 * (1.0 + ta.abs()), "{kind:?}: {ta} vs {tb}"),
                (None, None) => {}
                other => prop_assert!(false, "{kind:?}: degeneracy differs {other:?}"),
            }
        }
    }
}
