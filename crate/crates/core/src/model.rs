//! Domain types shared by every design: populations, design specifications,
//! drawn samples and confidence intervals.

use alloc::vec::Vec;

use crate::accum;
use crate::error::{Error, Result};

/// Tolerance on `|sum(p) - 1|` for PPS selection probabilities.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// A fixed finite population `y_1..y_N`, optionally with a positive size measure per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePopulation {
    values: Vec<f64>,
    sizes: Option<Vec<f64>>,
}

impl FinitePopulation {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::build(values, None)
    }

    pub fn with_sizes(values: Vec<f64>, sizes: Vec<f64>) -> Result<Self> {
        Self::build(values, Some(sizes))
    }

    fn build(values: Vec<f64>, sizes: Option<Vec<f64>>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidPopulation("at least 2 units are required"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPopulation("values must be finite"));
        }
        if let Some(z) = &sizes {
            if z.len() != values.len() {
                return Err(Error::LengthMismatch { expected: values.len(), found: z.len() });
            }
            if z.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidPopulation("size measures must be finite and positive"));
            }
        }
        Ok(Self { values, sizes })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sizes(&self) -> Option<&[f64]> {
        self.sizes.as_deref()
    }

    /// Population size `N`.
    pub fn size(&self) -> usize {
        self.values.len()
    }

    pub fn total(&self) -> f64 {
        accum::sum(self.values.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.total() / self.size() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DesignKind {
    Poisson,
    Srs,
    Pps,
}

/// A single-stage sampling design over a population of `N` units.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignSpec {
    /// Independent Bernoulli(`pi_i`) inclusion of every unit.
    Poisson { inclusion_probs: Vec<f64> },
    /// Equal-probability sampling of `n` distinct units.
    Srs { sample_size: usize },
    /// `n` independent draws with replacement, unit `i` with probability `p_i`.
    Pps { sample_size: usize, selection_probs: Vec<f64> },
}

impl DesignSpec {
    pub fn kind(&self) -> DesignKind {
        match self {
            DesignSpec::Poisson { .. } => DesignKind::Poisson,
            DesignSpec::Srs { .. } => DesignKind::Srs,
            DesignSpec::Pps { .. } => DesignKind::Pps,
        }
    }

    /// Poisson design with `pi_i = n0 * z_i / sum(z)`, so the expected size is `n0`.
    pub fn poisson_proportional(sizes: &[f64], expected_size: f64) -> Self {
        let total = accum::sum(sizes.iter().copied());
        DesignSpec::Poisson { inclusion_probs: sizes.iter().map(|z| expected_size * z / total).collect() }
    }

    /// PPS design with `p_i = z_i / sum(z)` normalized from raw positive weights.
    pub fn pps_from_sizes(sizes: &[f64], sample_size: usize) -> Self {
        let total = accum::sum(sizes.iter().copied());
        DesignSpec::Pps { sample_size, selection_probs: sizes.iter().map(|z| z / total).collect() }
    }
}

/// Check that every entry is finite and strictly inside (0, 1).
pub fn check_open_unit(probs: &[f64]) -> Result<()> {
    match probs.iter().position(|p| !(p.is_finite() && *p > 0.0 && *p < 1.0)) {
        Some(index) => Err(Error::ProbOutOfRange { index, value: probs[index] }),
        None => Ok(()),
    }
}

/// Check a selection-probability vector: entries in (0, 1), summing to one.
pub fn check_selection_probs(probs: &[f64]) -> Result<()> {
    check_open_unit(probs)?;
    let sum = accum::sum(probs.iter().copied());
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::ProbsDontSumToOne { sum });
    }
    Ok(())
}

/// Validate a single-stage design against the population it will be drawn from.
///
/// Returns the inputs unchanged when every design invariant holds.
pub fn validate_design<'a>(
    pop: &'a FinitePopulation,
    spec: &'a DesignSpec,
) -> Result<(&'a FinitePopulation, &'a DesignSpec)> {
    let n_pop = pop.size();
    match spec {
        DesignSpec::Poisson { inclusion_probs } => {
            if inclusion_probs.len() != n_pop {
                return Err(Error::LengthMismatch { expected: n_pop, found: inclusion_probs.len() });
            }
            check_open_unit(inclusion_probs)?;
        }
        DesignSpec::Srs { sample_size } => check_sample_size(*sample_size, n_pop)?,
        DesignSpec::Pps { sample_size, selection_probs } => {
            if selection_probs.len() != n_pop {
                return Err(Error::LengthMismatch { expected: n_pop, found: selection_probs.len() });
            }
            check_selection_probs(selection_probs)?;
            check_sample_size(*sample_size, n_pop)?;
        }
    }
    Ok((pop, spec))
}

pub(crate) fn check_sample_size(n: usize, population: usize) -> Result<()> {
    if n == 0 || n >= population {
        return Err(Error::SampleTooLarge { n, population });
    }
    Ok(())
}

/// Observed sample: population indices, their values and their design probabilities
/// (`pi_i` for Poisson/SRS, per-draw `p_{a,i}` for PPS).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DrawnSample {
    pub unit_indices: Vec<usize>,
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

impl DrawnSample {
    /// Build a sample from population indices. Indices may repeat (PPS).
    pub fn from_indices(pop: &FinitePopulation, probs_by_unit: &[f64], unit_indices: Vec<usize>) -> Self {
        let values = unit_indices.iter().map(|&i| pop.values()[i]).collect();
        let probs = unit_indices.iter().map(|&i| probs_by_unit[i]).collect();
        Self { unit_indices, values, probs }
    }

    pub fn realized_n(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalMethod {
    WaldType,
    BootstrapT,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: IntervalMethod,
}

impl ConfidenceInterval {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// Rescale both limits, e.g. from a total to a mean with `factor = 1/N`.
    pub fn scaled(&self, factor: f64) -> Self {
        let (a, b) = (self.lower * factor, self.upper * factor);
        Self { lower: a.min(b), upper: a.max(b), ..*self }
    }
}
