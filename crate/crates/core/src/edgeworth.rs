//! Standard-normal utilities and the one-term Edgeworth expansions of the
//! studentized estimator under Poisson, SRS and PPS sampling.
//!
//! Expansion values are returned unclamped; at extreme `z` they can leave [0, 1].

use crate::error::{Error, Result};
use crate::estimators::EstimateBundle;
use crate::math;
use crate::model::DesignKind;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn std_normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * math::exp(-0.5 * z * z)
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * math::erfc(-z * core::f64::consts::FRAC_1_SQRT_2)
}

// Acklam's rational approximation, ~1e-9 relative; only a starting point.
fn quantile_guess(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] =
        [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    const LOW: f64 = 0.024_25;
    if p < LOW {
        let q = math::sqrt(-2.0 * math::ln(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -quantile_guess(1.0 - p)
    }
}

/// Inverse of [`std_normal_cdf`]: bracketed Newton iteration on the CDF.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DomainError("normal quantile needs p in (0, 1)"));
    }
    // work in the lower tail where the CDF carries full relative precision
    if p > 0.5 {
        return Ok(-std_normal_quantile(1.0 - p)?);
    }
    let (mut lo, mut hi) = (-40.0f64, 0.0f64);
    let mut x = quantile_guess(p).clamp(lo, hi);
    for _ in 0..100 {
        let f = std_normal_cdf(x) - p;
        if f == 0.0 {
            break;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = std_normal_pdf(x);
        let mut next = if d > 0.0 { x - f / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
            x = next;
            break;
        }
        x = next;
    }
    Ok(x)
}

/// Poisson: `Phi(z) + {mu3/(6 V^1.5) (1 - z^2) + tau3/(2 V^1.5) z^2} phi(z)`.
pub fn edgeworth_poisson(z: f64, v_hat: f64, mu3_hat: f64, tau3_hat: f64) -> f64 {
    let v15 = v_hat * math::sqrt(v_hat);
    let z2 = z * z;
    std_normal_cdf(z) + (mu3_hat / (6.0 * v15) * (1.0 - z2) + tau3_hat / (2.0 * v15) * z2) * std_normal_pdf(z)
}

/// SRS: `Phi(z) + (1-f)^0.5 mu3 / (6 n^0.5 s^3) {3 z^2 - (1-2f)/(1-f) (z^2 - 1)} phi(z)`, `f = n/N`.
pub fn edgeworth_srs(z: f64, mu3_hat: f64, s: f64, n: usize, population_size: usize) -> f64 {
    let f = n as f64 / population_size as f64;
    let z2 = z * z;
    let coef = math::sqrt(1.0 - f) * mu3_hat / (6.0 * math::sqrt(n as f64) * s * s * s);
    std_normal_cdf(z) + coef * (3.0 * z2 - (1.0 - 2.0 * f) / (1.0 - f) * (z2 - 1.0)) * std_normal_pdf(z)
}

/// PPS: `Phi(z) + mu3 / (6 n^0.5 s^3) (2 z^2 + 1) phi(z)`.
pub fn edgeworth_pps(z: f64, mu3_hat: f64, s: f64, n: usize) -> f64 {
    let coef = mu3_hat / (6.0 * math::sqrt(n as f64) * s * s * s);
    std_normal_cdf(z) + coef * (2.0 * z * z + 1.0) * std_normal_pdf(z)
}

/// Moment inputs of one expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpansionInput {
    Poisson { v_hat: f64, mu3_hat: f64, tau3_hat: f64 },
    Srs { mu3_hat: f64, s: f64, n: usize, population_size: usize },
    Pps { mu3_hat: f64, s: f64, n: usize },
}

impl ExpansionInput {
    /// Build the inputs from a sample's estimates. Fails on non-positive variance
    /// or, for SRS, `n >= N`.
    pub fn from_estimates(kind: DesignKind, est: &EstimateBundle, n: usize, population_size: usize) -> Result<Self> {
        let input = match kind {
            DesignKind::Poisson => ExpansionInput::Poisson {
                v_hat: est.v_hat,
                mu3_hat: est.mu3_hat,
                tau3_hat: est.tau3_hat.ok_or(Error::DomainError("Poisson expansion needs tau3"))?,
            },
            DesignKind::Srs => ExpansionInput::Srs {
                mu3_hat: est.mu3_hat,
                s: math::sqrt(est.s2.ok_or(Error::DomainError("SRS expansion needs s2"))?),
                n,
                population_size,
            },
            DesignKind::Pps => ExpansionInput::Pps {
                mu3_hat: est.mu3_hat,
                s: math::sqrt(est.s2.ok_or(Error::DomainError("PPS expansion needs s2"))?),
                n,
            },
        };
        input.check()?;
        Ok(input)
    }

    fn check(&self) -> Result<()> {
        let ok = match *self {
            ExpansionInput::Poisson { v_hat, .. } => v_hat > 0.0,
            ExpansionInput::Srs { s, n, population_size, .. } => s > 0.0 && n > 0 && n < population_size,
            ExpansionInput::Pps { s, n, .. } => s > 0.0 && n > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DomainError("expansion needs positive scale and 0 < n (< N for SRS)"))
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            ExpansionInput::Poisson { v_hat, mu3_hat, tau3_hat } => edgeworth_poisson(z, v_hat, mu3_hat, tau3_hat),
            ExpansionInput::Srs { mu3_hat, s, n, population_size } => edgeworth_srs(z, mu3_hat, s, n, population_size),
            ExpansionInput::Pps { mu3_hat, s, n } => edgeworth_pps(z, mu3_hat, s, n),
        }
    }
}
