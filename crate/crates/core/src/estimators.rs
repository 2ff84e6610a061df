//! Point, variance and third-moment estimators for the single-stage designs,
//! and the studentized statistic.

use crate::accum::Compensated;
use crate::error::{Error, Result};
use crate::math;
use crate::model::DrawnSample;

/// Estimates of the population total from one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateBundle {
    /// Estimated total.
    pub y_hat: f64,
    /// Variance estimate of `y_hat`.
    pub v_hat: f64,
    /// Estimated third central moment term used by the Edgeworth correction.
    pub mu3_hat: f64,
    /// Poisson only: the `tau^3` skewness term.
    pub tau3_hat: Option<f64>,
    /// SRS/PPS only: divisor-`n` sample variance (of `y` for SRS, of `Z = y/p` for PPS).
    pub s2: Option<f64>,
}

/// Clamp a variance that rounding pushed just below zero.
pub(crate) fn clamp_variance(v: f64, scale: f64) -> f64 {
    if v < 0.0 && v > -1e-12 * scale.abs().max(f64::MIN_POSITIVE) {
        0.0
    } else {
        v
    }
}

/// Horvitz-Thompson estimates under Poisson sampling.
pub fn ht_poisson(sample: &DrawnSample) -> Result<EstimateBundle> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let (mut y_hat, mut v_hat, mut mu3, mut tau3) =
        (Compensated::new(), Compensated::new(), Compensated::new(), Compensated::new());
    let mut v_scale = 0.0;
    for (&y, &pi) in sample.values.iter().zip(&sample.probs) {
        let q = 1.0 - pi;
        let y2 = y * y;
        let y3 = y2 * y;
        y_hat.add(y / pi);
        let v = y2 * q / (pi * pi);
        v_hat.add(v);
        v_scale += v.abs();
        mu3.add(y3 * q / pi * (q * q / (pi * pi) - 1.0));
        tau3.add(y3 * q * q / (pi * pi * pi));
    }
    Ok(EstimateBundle {
        y_hat: y_hat.value(),
        v_hat: clamp_variance(v_hat.value(), v_scale),
        mu3_hat: mu3.value(),
        tau3_hat: Some(tau3.value()),
        s2: None,
    })
}

/// Divisor-`n` moments of a sample: (mean, s2, mu3_hat).
///
/// `mu3_hat = mean(x^3) + 2 xbar^3 - 3 xbar mean(x^2)`.
fn raw_moments(xs: impl Iterator<Item = f64> + Clone, n: f64) -> (f64, f64, f64) {
    let mut it = xs.clone();
    if let Some(first) = it.next() {
        if it.all(|x| x == first) {
            return (first, 0.0, 0.0);
        }
    }
    let mean = xs.clone().collect::<Compensated>().value() / n;
    let s2 = xs.clone().map(|x| (x - mean) * (x - mean)).collect::<Compensated>().value() / n;
    let m2 = xs.clone().map(|x| x * x).collect::<Compensated>().value() / n;
    let m3 = xs.map(|x| x * x * x).collect::<Compensated>().value() / n;
    let mut mu3 = Compensated::new();
    mu3.add(m3);
    mu3.add(2.0 * mean * mean * mean);
    mu3.add(-3.0 * mean * m2);
    (mean, s2.max(0.0), mu3.value())
}

/// Expansion estimator and `N(N - n) s^2 / n` variance under SRS.
pub fn ht_srs(sample: &DrawnSample, population_size: usize) -> Result<EstimateBundle> {
    let n = sample.realized_n();
    if n < 2 {
        return Err(Error::TooFewUnits { n });
    }
    let big_n = population_size as f64;
    let nf = n as f64;
    let (mean, s2, mu3) = raw_moments(sample.values.iter().copied(), nf);
    Ok(EstimateBundle {
        y_hat: big_n * mean,
        v_hat: big_n * (big_n - nf) * s2 / nf,
        mu3_hat: mu3,
        tau3_hat: None,
        s2: Some(s2),
    })
}

/// Hansen-Hurwitz estimates under PPS with replacement.
pub fn hh_pps(sample: &DrawnSample) -> Result<EstimateBundle> {
    let n = sample.realized_n();
    if n < 2 {
        return Err(Error::TooFewUnits { n });
    }
    let z = sample.values.iter().zip(&sample.probs).map(|(y, p)| y / p);
    let (mean, s2, mu3) = raw_moments(z, n as f64);
    Ok(EstimateBundle { y_hat: mean, v_hat: s2 / n as f64, mu3_hat: mu3, tau3_hat: None, s2: Some(s2) })
}

/// Dispatch on design kind.
pub fn estimate(sample: &DrawnSample, kind: crate::DesignKind, population_size: usize) -> Result<EstimateBundle> {
    match kind {
        crate::DesignKind::Poisson => ht_poisson(sample),
        crate::DesignKind::Srs => ht_srs(sample, population_size),
        crate::DesignKind::Pps => hh_pps(sample),
    }
}

/// `(y_hat - y_ref) / sqrt(v_hat)`.
pub fn studentize(y_hat: f64, y_ref: f64, v_hat: f64) -> Result<f64> {
    if !(v_hat > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok((y_hat - y_ref) / math::sqrt(v_hat))
}
