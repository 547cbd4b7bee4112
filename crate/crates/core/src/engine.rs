//! Stepup and stepdown decisions on a p-value sample.

use crate::error::{Error, Result};
use crate::schedules::{CriticalValueSchedule, Direction};

/// Ground-truth label of a hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Truth {
    TrueNull,
    FalseNull,
}

/// `n` p-values with optional truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueSample {
    values: Vec<f64>,
    truth: Option<Vec<Truth>>,
}

impl PValueSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, &p) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("p-value {} = {p} outside [0, 1]", i + 1)));
            }
        }
        Ok(Self { values, truth: None })
    }

    pub fn with_truth(values: Vec<f64>, truth: Vec<Truth>) -> Result<Self> {
        if truth.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: values.len(),
                found: truth.len(),
            });
        }
        let mut sample = Self::new(values)?;
        sample.truth = Some(truth);
        Ok(sample)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn truth(&self) -> Option<&[Truth]> {
        self.truth.as_deref()
    }

    /// Number of true nulls, when labels are present.
    pub fn n0(&self) -> Option<usize> {
        self.truth
            .as_ref()
            .map(|t| t.iter().filter(|&&l| l == Truth::TrueNull).count())
    }

    /// Indices sorted by `(p-value, index)`.
    pub fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        // sort_by is stable, so ties keep index order
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        idx
    }
}

/// Rejections made by a procedure on one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionOutcome {
    /// Rejected indices in increasing p-value order.
    pub rejected: Vec<usize>,
    pub r: usize,
    /// False rejections; needs truth labels.
    pub v: Option<usize>,
    pub k_fdp: Option<f64>,
}

impl DecisionOutcome {
    /// Rejection flags in original index order.
    pub fn rejection_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &i in &self.rejected {
            mask[i] = true;
        }
        mask
    }
}

/// `V/R` when `V ≥ k`, otherwise 0.
pub fn k_fdp(r: usize, v: usize, k: usize) -> Result<f64> {
    if v > r {
        return Err(Error::invalid(format!("false rejections {v} exceed rejections {r}")));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    Ok(k_fdp_unchecked(r, v, k))
}

#[inline]
pub(crate) fn k_fdp_unchecked(r: usize, v: usize, k: usize) -> f64 {
    if v >= k && r > 0 {
        v as f64 / r as f64
    } else {
        0.0
    }
}

/// Largest `i` (1-based) with `P_{i:n} ≤ α_i`, or 0.
pub(crate) fn step_up_count(sorted: &[f64], alphas: &[f64]) -> usize {
    (1..=sorted.len())
        .rev()
        .find(|&i| sorted[i - 1] <= alphas[i - 1])
        .unwrap_or(0)
}

/// `j_SD − 1` where `j_SD = min{i : P_{i:n} ≥ α_i}`, or `n` if none.
pub(crate) fn step_down_count(sorted: &[f64], alphas: &[f64]) -> usize {
    (1..=sorted.len())
        .find(|&i| sorted[i - 1] >= alphas[i - 1])
        .map_or(sorted.len(), |j| j - 1)
}

/// A sample sorted once and reused against several schedules.
#[derive(Debug, Clone)]
pub struct OrderedSample<'a> {
    sample: &'a PValueSample,
    order: Vec<usize>,
    sorted: Vec<f64>,
}

impl<'a> OrderedSample<'a> {
    pub fn new(sample: &'a PValueSample) -> Self {
        let order = sample.order();
        let sorted = order.iter().map(|&i| sample.values[i]).collect();
        Self {
            sample,
            order,
            sorted,
        }
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Number of rejections when `schedule` is applied in its own direction.
    pub fn rejection_count(&self, schedule: &CriticalValueSchedule) -> Result<usize> {
        if schedule.n() != self.sorted.len() {
            return Err(Error::LengthMismatch {
                expected: self.sorted.len(),
                found: schedule.n(),
            });
        }
        Ok(match schedule.direction() {
            Direction::StepUp => step_up_count(&self.sorted, schedule.alphas()),
            Direction::StepDown => step_down_count(&self.sorted, schedule.alphas()),
        })
    }

    pub fn decide(&self, schedule: &CriticalValueSchedule) -> Result<DecisionOutcome> {
        let r = self.rejection_count(schedule)?;
        Ok(outcome_from_count(self.sample, &self.order, r, schedule.k()))
    }
}

pub(crate) fn outcome_from_count(
    sample: &PValueSample,
    order: &[usize],
    r: usize,
    k: usize,
) -> DecisionOutcome {
    let rejected = order[..r].to_vec();
    let v = sample.truth().map(|truth| {
        rejected
            .iter()
            .filter(|&&i| truth[i] == Truth::TrueNull)
            .count()
    });
    DecisionOutcome {
        k_fdp: v.map(|v| k_fdp_unchecked(r, v, k)),
        rejected,
        r,
        v,
    }
}

fn require(schedule: &CriticalValueSchedule, expected: Direction) -> Result<()> {
    if schedule.direction() != expected {
        return Err(Error::DirectionMismatch {
            expected: expected.as_str(),
            found: schedule.direction().as_str(),
        });
    }
    Ok(())
}

/// Rejects the `j_SU` smallest p-values, `j_SU = max{i : P_{i:n} ≤ α_i}`.
pub fn stepup(sample: &PValueSample, schedule: &CriticalValueSchedule) -> Result<DecisionOutcome> {
    require(schedule, Direction::StepUp)?;
    OrderedSample::new(sample).decide(schedule)
}

/// Rejects the `j_SD − 1` smallest p-values, `j_SD = min{i : P_{i:n} ≥ α_i}`;
/// everything if no such `i` exists.
pub fn stepdown(sample: &PValueSample, schedule: &CriticalValueSchedule) -> Result<DecisionOutcome> {
    require(schedule, Direction::StepDown)?;
    OrderedSample::new(sample).decide(schedule)
}

/// Applies `schedule` in whichever direction it carries.
pub fn apply(sample: &PValueSample, schedule: &CriticalValueSchedule) -> Result<DecisionOutcome> {
    OrderedSample::new(sample).decide(schedule)
}
