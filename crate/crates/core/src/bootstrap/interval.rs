use super::ReplicateSet;
use crate::edgeworth::std_normal_quantile;
use crate::error::{Error, Result};
use crate::math;
use crate::model::{ConfidenceInterval, IntervalMethod};

/// The `ceil(q M)`-th order statistic of ascending `sorted` (left-continuous inverse ECDF).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty set");
    let m = sorted.len();
    let x = q * m as f64;
    // shave representation error so that e.g. 0.05 * 1000 picks the 50th value
    let k = math::ceil(x - x.abs() * 1e-12) as usize;
    sorted[k.clamp(1, m) - 1]
}

pub fn empirical_quantile(ts: &ReplicateSet, q: f64) -> f64 {
    quantile_sorted(&ts.sorted(), q)
}

/// Fraction of `sorted` that is `<= z`.
pub fn ecdf_sorted(sorted: &[f64], z: f64) -> f64 {
    sorted.partition_point(|&t| t <= z) as f64 / sorted.len() as f64
}

fn check_level(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::DomainError("confidence level must lie in (0, 1)"));
    }
    Ok(1.0 - level)
}

/// `(y_hat - q*_{1-a/2} sqrt(v), y_hat - q*_{a/2} sqrt(v))` from bootstrap quantiles.
pub fn bootstrap_ci_sorted(y_hat: f64, v_hat: f64, sorted: &[f64], level: f64) -> Result<ConfidenceInterval> {
    let alpha = check_level(level)?;
    if !(v_hat > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let se = math::sqrt(v_hat);
    let lo_q = quantile_sorted(sorted, alpha / 2.0);
    let hi_q = quantile_sorted(sorted, 1.0 - alpha / 2.0);
    Ok(ConfidenceInterval {
        lower: y_hat - hi_q * se,
        upper: y_hat - lo_q * se,
        level,
        method: IntervalMethod::BootstrapT,
    })
}

pub fn bootstrap_ci(y_hat: f64, v_hat: f64, ts: &ReplicateSet, level: f64) -> Result<ConfidenceInterval> {
    bootstrap_ci_sorted(y_hat, v_hat, &ts.sorted(), level)
}

/// Normal-theory interval `y_hat ∓ z_{1-a/2} sqrt(v_hat)`.
pub fn wald_ci(y_hat: f64, v_hat: f64, level: f64) -> Result<ConfidenceInterval> {
    let alpha = check_level(level)?;
    if !(v_hat >= 0.0) {
        return Err(Error::DomainError("variance must be non-negative"));
    }
    let half = std_normal_quantile(1.0 - alpha / 2.0)? * math::sqrt(v_hat);
    Ok(ConfidenceInterval { lower: y_hat - half, upper: y_hat + half, level, method: IntervalMethod::WaldType })
}
