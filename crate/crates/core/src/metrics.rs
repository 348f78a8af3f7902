//! Evaluation metrics: trial-level false/true discovery probabilities,
//! per-index correct-identification frequency, 1-D Wasserstein-2 distance,
//! and credible-interval coverage.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleDistribution;
use crate::estimators::SparseFit;
use crate::{Error, Result};

/// One trial's selection result against the truth. The estimated support
/// and inactive sets partition `0..p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub estimated_support: Vec<usize>,
    pub estimated_inactive: Vec<usize>,
    pub true_support: Vec<usize>,
    pub coefficients: Vec<f64>,
}

fn sorted_dedup(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

impl TrialOutcome {
    pub fn new(
        estimated_support: Vec<usize>,
        estimated_inactive: Vec<usize>,
        true_support: Vec<usize>,
        coefficients: Vec<f64>,
    ) -> Result<Self> {
        let p = coefficients.len();
        let support = sorted_dedup(estimated_support);
        let inactive = sorted_dedup(estimated_inactive);
        let truth = sorted_dedup(true_support);
        if support.len() + inactive.len() != p {
            return Err(Error::InvalidData(
                "estimated support and inactive sets must partition the indices".into(),
            ));
        }
        let mut merged: Vec<usize> = support.iter().chain(inactive.iter()).copied().collect();
        merged.sort_unstable();
        if merged.iter().enumerate().any(|(i, &j)| i != j) {
            return Err(Error::InvalidData(
                "estimated support and inactive sets must partition the indices".into(),
            ));
        }
        if truth.iter().any(|&j| j >= p) {
            return Err(Error::DimensionMismatch("true support index out of range".into()));
        }
        Ok(TrialOutcome {
            estimated_support: support,
            estimated_inactive: inactive,
            true_support: truth,
            coefficients,
        })
    }

    pub fn from_sparse_fit(fit: &SparseFit, true_support: &[usize]) -> Result<Self> {
        TrialOutcome::new(
            fit.fit.support.clone(),
            fit.inactive_set.clone(),
            true_support.to_vec(),
            fit.fit.coefficients.clone(),
        )
    }

    fn truly_active(&self, j: usize) -> bool {
        self.true_support.binary_search(&j).is_ok()
    }

    /// Some true null was declared active.
    fn has_false_discovery(&self) -> bool {
        self.estimated_support.iter().any(|&j| !self.truly_active(j))
    }

    /// No true active was discarded.
    fn keeps_all_actives(&self) -> bool {
        self.estimated_inactive.iter().all(|&j| !self.truly_active(j))
    }
}

fn check_nonempty(outcomes: &[TrialOutcome]) -> Result<()> {
    if outcomes.is_empty() {
        return Err(Error::EmptySamples);
    }
    let p = outcomes[0].coefficients.len();
    if outcomes.iter().any(|o| o.coefficients.len() != p) {
        return Err(Error::DimensionMismatch("outcomes disagree on p".into()));
    }
    Ok(())
}

/// Fraction of trials in which some true null was declared active.
pub fn empirical_fdp(outcomes: &[TrialOutcome]) -> Result<f64> {
    check_nonempty(outcomes)?;
    let hits = outcomes.iter().filter(|o| o.has_false_discovery()).count();
    Ok(hits as f64 / outcomes.len() as f64)
}

/// Fraction of trials in which no true active was discarded.
pub fn empirical_tdp(outcomes: &[TrialOutcome]) -> Result<f64> {
    check_nonempty(outcomes)?;
    let hits = outcomes.iter().filter(|o| o.keeps_all_actives()).count();
    Ok(hits as f64 / outcomes.len() as f64)
}

/// Per-index relative frequency of correct identification: for a true
/// active, the fraction of trials with a nonzero coefficient; for a true
/// null, the fraction with an exact zero.
pub fn relative_frequency(outcomes: &[TrialOutcome]) -> Result<Vec<f64>> {
    check_nonempty(outcomes)?;
    let p = outcomes[0].coefficients.len();
    let s = outcomes.len() as f64;
    let mut freq = vec![0.0; p];
    for o in outcomes {
        for j in 0..p {
            let correct = if o.truly_active(j) {
                o.coefficients[j] != 0.0
            } else {
                o.coefficients[j] == 0.0
            };
            if correct {
                freq[j] += 1.0;
            }
        }
    }
    for v in &mut freq {
        *v /= s;
    }
    Ok(freq)
}

/// Linear-interpolation quantile of pre-sorted samples (the convention with
/// `h = (n-1)·q`). `q` is clamped to [0,1].
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = libm::floor(h) as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

fn sorted_copy(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("samples are finite"));
    v
}

const QUANTILE_GRID: usize = 1000;

/// Wasserstein-2 distance between two 1-D empirical distributions. Equal
/// sample counts use the exact sorted coupling; unequal counts are compared
/// through both inverse CDFs on a 1000-point midpoint quantile grid.
pub fn wasserstein2_1d(samples_a: &[f64], samples_b: &[f64]) -> Result<f64> {
    if samples_a.is_empty() || samples_b.is_empty() {
        return Err(Error::EmptySamples);
    }
    let a = sorted_copy(samples_a);
    let b = sorted_copy(samples_b);
    if a.len() == b.len() {
        let sum: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        return Ok(libm::sqrt(sum / a.len() as f64));
    }
    // Step inverse CDF evaluated at grid midpoints.
    let icdf = |s: &[f64], u: f64| {
        let idx = (libm::floor(u * s.len() as f64) as usize).min(s.len() - 1);
        s[idx]
    };
    let mut sum = 0.0;
    for g in 0..QUANTILE_GRID {
        let u = (g as f64 + 0.5) / QUANTILE_GRID as f64;
        let d = icdf(&a, u) - icdf(&b, u);
        sum += d * d;
    }
    Ok(libm::sqrt(sum / QUANTILE_GRID as f64))
}

/// Per-index frequency, over trials, of the central `level` interval of the
/// bootstrap coefficient samples containing the truth.
pub fn interval_coverage(
    samples_per_trial: &[EnsembleDistribution],
    truth: &[f64],
    level: f64,
) -> Result<Vec<f64>> {
    if samples_per_trial.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig("coverage level must lie in (0,1)".into()));
    }
    let p = truth.len();
    if samples_per_trial.iter().any(|d| d.coefficient_samples.cols() != p) {
        return Err(Error::DimensionMismatch("truth length must match sample columns".into()));
    }
    let tail = (1.0 - level) / 2.0;
    let mut covered = vec![0.0; p];
    for dist in samples_per_trial {
        let b = dist.coefficient_samples.rows();
        let mut col = vec![0.0; b];
        for j in 0..p {
            for i in 0..b {
                col[i] = dist.coefficient_samples.get(i, j);
            }
            col.sort_by(|a, b| a.partial_cmp(b).expect("samples are finite"));
            let lo = quantile(&col, tail);
            let hi = quantile(&col, 1.0 - tail);
            if lo <= truth[j] && truth[j] <= hi {
                covered[j] += 1.0;
            }
        }
    }
    let t = samples_per_trial.len() as f64;
    for v in &mut covered {
        *v /= t;
    }
    Ok(covered)
}
