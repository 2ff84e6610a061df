//! Simulation populations for the single-stage and two-stage studies.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use svyboot_core::twostage::ClusteredPopulation;
use svyboot_core::{derive_substream, FinitePopulation, RngContract};

/// Stream ids that keep population draws apart from the Monte Carlo draws.
pub const SINGLE_POPULATION_STREAM: u64 = 0x706f_7031;
pub const CLUSTER_POPULATION_STREAM: u64 = 0x706f_7032;

/// Regeneration cap for [`gen_population_single`].
const MAX_REGENERATIONS: u64 = 1000;

/// `y ~ Exp(mean 10)`, `s | y ~ Exp(mean y)`, `z = ln(3 + s)`.
fn draw_single<R: Rng>(rng: &mut R, size: usize) -> (Vec<f64>, Vec<f64>) {
    let y_dist = Exp::new(0.1).expect("positive rate");
    let mut ys = Vec::with_capacity(size);
    let mut zs = Vec::with_capacity(size);
    for _ in 0..size {
        let y: f64 = y_dist.sample(rng);
        // the conditional mean is y itself; y = 0 has probability zero
        let s = if y > 0.0 { Exp::new(1.0 / y).expect("positive rate").sample(rng) } else { 0.0 };
        ys.push(y);
        zs.push((3.0 + s).ln());
    }
    (ys, zs)
}

/// Largest `pi_i = n0 z_i / sum z`.
pub fn max_inclusion_prob(sizes: &[f64], n0: f64) -> f64 {
    let total: f64 = sizes.iter().sum();
    sizes.iter().fold(0.0f64, |m, z| m.max(n0 * z / total))
}

/// Single-stage population of `size` units with size measures attached.
///
/// If some `pi_i = max_n0 z_i / sum z` would reach 1 the population is drawn again
/// from the next derived stream. Returns the population and the number of redraws.
pub fn gen_population_single(seed: u64, size: usize, max_n0: f64) -> svyboot_core::Result<(FinitePopulation, u64)> {
    if size < 2 {
        return Err(svyboot_core::Error::InvalidPopulation("need at least two units"));
    }
    let base = RngContract::with_stream(seed, SINGLE_POPULATION_STREAM);
    for attempt in 0..MAX_REGENERATIONS {
        let mut rng = derive_substream(base, attempt).rng();
        let (ys, zs) = draw_single(&mut rng, size);
        if max_inclusion_prob(&zs, max_n0) < 1.0 {
            if attempt > 0 {
                log::info!("population regenerated {attempt} time(s) to keep every pi below 1");
            }
            return Ok((FinitePopulation::with_sizes(ys, zs)?, attempt));
        }
    }
    Err(svyboot_core::Error::InvalidProbs("no population with all inclusion probabilities below 1"))
}

/// Clustered population: `a_i ~ N(0, variance 50)`, `N_i = Poisson((a_i - 25)^2 / 20) + c0`,
/// `y_ij = 50 + a_i + e_ij` with `e_ij ~ Exp(mean 20)`.
pub fn gen_population_two_stage(
    seed: u64,
    clusters: usize,
    min_size: usize,
) -> svyboot_core::Result<ClusteredPopulation> {
    if min_size < 2 {
        return Err(svyboot_core::Error::InvalidPopulation("clusters need at least two units"));
    }
    let mut rng = RngContract::with_stream(seed, CLUSTER_POPULATION_STREAM).rng();
    let a_dist = Normal::new(0.0, 50f64.sqrt()).expect("finite parameters");
    let e_dist = Exp::new(1.0 / 20.0).expect("positive rate");
    let mut out = Vec::with_capacity(clusters);
    for _ in 0..clusters {
        let a: f64 = a_dist.sample(&mut rng);
        let q = (a - 25.0) * (a - 25.0) / 20.0;
        let extra = if q > 0.0 { Poisson::new(q).expect("positive mean").sample(&mut rng) as usize } else { 0 };
        let values = (0..min_size + extra).map(|_| 50.0 + a + e_dist.sample(&mut rng)).collect();
        out.push(FinitePopulation::new(values)?);
    }
    ClusteredPopulation::new(out)
}
