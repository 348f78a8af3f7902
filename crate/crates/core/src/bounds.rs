//! Closed-form probability bounds for the bagging inclusion-probability
//! selector and the plain sequential-thresholding baseline, plus
//! finite-sample evaluation of the regularity conditions those bounds assume.
//!
//! Every bound is computed in log-space and exponentiated last, so large-`n`
//! inputs underflow gracefully instead of rounding through 0 mid-formula.
//! Values are returned as-is, even outside `[0,1]`; vacuity is flagged, never
//! silently clipped.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Bootstrap eigenvalue deflation constant used by the minimum-signal
/// condition when no replicate estimate is available.
pub const DEFAULT_R0: f64 = 0.5;

fn default_r0() -> f64 {
    DEFAULT_R0
}

fn default_multiplier() -> f64 {
    1.0
}

/// Everything the bound formulas consume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Sample size.
    pub n: usize,
    /// Number of candidate indices.
    pub p: usize,
    /// Number of truly active indices (`q <= p`).
    pub q: usize,
    /// Inclusion-probability cut, in (0,1).
    pub p_c: f64,
    /// Gap level for [`gap_bound`], in (0,0.5).
    pub eps: f64,
    /// Noise standard deviation, > 0.
    pub sigma: f64,
    /// Smallest eigenvalue of the normalized gram.
    pub rho1: f64,
    /// Largest eigenvalue of the normalized gram.
    pub rho2: f64,
    /// Smallest active-coefficient magnitude.
    pub beta_min: f64,
    /// Threshold scale parameter.
    pub gamma: f64,
    /// Bootstrap eigenvalue deflation constant, > 0.
    #[serde(default = "default_r0")]
    pub r0: f64,
    /// Scale factor applied to every threshold (1 = the plain rule).
    #[serde(default = "default_multiplier")]
    pub threshold_multiplier: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error::InvalidConfig;
        if self.q > self.p {
            return Err(InvalidConfig("q must not exceed p".into()));
        }
        if !(self.p_c > 0.0 && self.p_c < 1.0) {
            return Err(InvalidConfig("p_c must lie in (0,1)".into()));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(InvalidConfig("eps must lie in (0,0.5)".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(InvalidConfig("sigma must be positive".into()));
        }
        if self.rho1 > self.rho2 {
            return Err(InvalidConfig("rho1 must not exceed rho2".into()));
        }
        if !(self.r0 > 0.0) {
            return Err(InvalidConfig("r0 must be positive".into()));
        }
        Ok(())
    }
}

/// A probability bound together with an honesty flag: `vacuous` is set
/// whenever the formula value leaves `[0,1]` (including NaN), in which case
/// the bound says nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: f64,
    pub vacuous: bool,
}

impl Bound {
    pub fn from_value(value: f64) -> Self {
        Bound { value, vacuous: !(value >= 0.0 && value <= 1.0) }
    }
}

/// Upper bound on the probability that the ensemble selector includes any
/// null index: `(p-q)·exp(1/3 - n·p_c/3)`. Zero when there are no nulls.
pub fn bip_fdp_bound(inp: &BoundInputs) -> Bound {
    if inp.p == inp.q {
        return Bound::from_value(0.0);
    }
    let n = inp.n as f64;
    let log_v = libm::log((inp.p - inp.q) as f64) + 1.0 / 3.0 - n * inp.p_c / 3.0;
    Bound::from_value(libm::exp(log_v))
}

/// Lower bound on the probability that every active index is selected, in
/// the large-sample regime: `1 - q·exp(-n(1-2·p_c)²/6)`. One when `q = 0`.
pub fn bip_tdp_bound_large(inp: &BoundInputs) -> Bound {
    if inp.q == 0 {
        return Bound::from_value(1.0);
    }
    let n = inp.n as f64;
    let s = 1.0 - 2.0 * inp.p_c;
    let log_term = libm::log(inp.q as f64) - n * s * s / 6.0;
    Bound::from_value(-libm::expm1(log_term))
}

/// Small-sample counterpart of [`bip_tdp_bound_large`]:
/// `1 - q·exp(-n·p_c²/(3p) + 2n·p_c/3 - n·p/3)`, evaluated with the
/// dimension count as `p`. The source statement is ambiguous about whether
/// `p` here is the dimension or a tail-probability constant;
/// [`bip_tdp_bound_small_with_p`] lets callers supply the latter reading.
pub fn bip_tdp_bound_small(inp: &BoundInputs) -> Bound {
    bip_tdp_bound_small_with_p(inp, inp.p as f64)
}

/// [`bip_tdp_bound_small`] with an explicit value for the exponent's `p`.
pub fn bip_tdp_bound_small_with_p(inp: &BoundInputs, p: f64) -> Bound {
    if inp.q == 0 {
        return Bound::from_value(1.0);
    }
    let n = inp.n as f64;
    let exponent = -n * inp.p_c * inp.p_c / (3.0 * p) + 2.0 * n * inp.p_c / 3.0 - n * p / 3.0;
    let log_term = libm::log(inp.q as f64) + exponent;
    Bound::from_value(-libm::expm1(log_term))
}

/// Lower bound on the probability that the inclusion-probability gap between
/// actives and nulls exceeds `eps`:
/// `1 - p·exp(-n(1/4 - eps/2 - 1/(2n))²/2)`. One when `p = 0`.
///
/// At moderate `n` this is often vacuous (strongly negative); the flag is
/// the caller's signal that the certificate carries no information there.
pub fn gap_bound(inp: &BoundInputs) -> Bound {
    if inp.p == 0 {
        return Bound::from_value(1.0);
    }
    let n = inp.n as f64;
    let t = 0.25 - inp.eps / 2.0 - 1.0 / (2.0 * n);
    let log_term = libm::log(inp.p as f64) - n * t * t / 2.0;
    Bound::from_value(-libm::expm1(log_term))
}

/// Bounds for the single-pass sequential-thresholding baseline:
/// false-discovery probability at most `q/n`, and true-discovery probability
/// at least `1 - 2·exp(-(√n·√rho1·beta_min/sigma - √(2 ln n) - √(2 ln(p-q)))²/2)`.
/// With `p = q` the second formula has no finite value (log of zero under a
/// square root); the NaN propagates and is flagged vacuous.
pub fn stls_bounds(inp: &BoundInputs) -> (Bound, Bound) {
    let n = inp.n as f64;
    let fdp = Bound::from_value(inp.q as f64 / n);
    let inner = libm::sqrt(n) * libm::sqrt(inp.rho1) * inp.beta_min / inp.sigma
        - libm::sqrt(2.0 * libm::log(n))
        - libm::sqrt(2.0 * libm::log((inp.p - inp.q) as f64));
    let tdp = Bound::from_value(-libm::expm1(libm::log(2.0) - 0.5 * inner * inner));
    (fdp, tdp)
}

/// One evaluated regularity condition. Conditions with a finite-sample
/// inequality carry a `threshold` and a verdict; asymptotic rate conditions
/// report only the computed value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub value: f64,
    pub threshold: Option<f64>,
    pub satisfied: Option<bool>,
}

/// Evaluates every regularity condition behind the bounds at the given
/// finite-sample inputs. `beta_hat_errors` (estimation errors of a pilot
/// fit, one per active index) sharpens the minimum-signal check; absent, the
/// errors are taken as zero.
///
/// Rate conditions (everything except `min_signal_strength`) have no
/// finite-sample verdict; their computed value is reported for inspection.
pub fn check_conditions(inp: &BoundInputs, beta_hat_errors: Option<&[f64]>) -> Vec<ConditionCheck> {
    let n = inp.n as f64;
    let p = inp.p as f64;
    let q = inp.q as f64;
    let mut out = Vec::with_capacity(7);

    out.push(ConditionCheck {
        name: "sparsity_ratio",
        value: q / p,
        threshold: None,
        satisfied: None,
    });
    out.push(ConditionCheck {
        name: "dimension_vs_sample",
        value: libm::exp(libm::log(p) - n),
        threshold: None,
        satisfied: None,
    });

    let max_err = beta_hat_errors
        .map(|e| e.iter().fold(0.0f64, |acc, v| acc.max(libm::fabs(*v))))
        .unwrap_or(0.0);
    let lhs = libm::sqrt(n) * (inp.beta_min - max_err)
        / (inp.sigma * libm::sqrt(1.0 / (inp.r0 * inp.rho1)));
    let rhs = libm::sqrt(2.0 * libm::log(n));
    out.push(ConditionCheck {
        name: "min_signal_strength",
        value: lhs,
        threshold: Some(rhs),
        satisfied: Some(lhs >= rhs),
    });

    out.push(ConditionCheck {
        name: "active_fraction",
        value: q / n,
        threshold: None,
        satisfied: None,
    });

    let inner = libm::sqrt(n) * libm::sqrt(inp.rho1) * inp.beta_min / inp.sigma
        - libm::sqrt(2.0 * libm::log(n))
        - libm::sqrt(2.0 * libm::log(p - q));
    out.push(ConditionCheck {
        name: "signal_separation",
        value: inner * inner,
        threshold: None,
        satisfied: None,
    });

    let ratio = inp.rho1 / inp.rho2;
    out.push(ConditionCheck {
        name: "gamma_vs_sparsity",
        value: (ratio * inp.gamma * inp.gamma - q) / libm::sqrt(q),
        threshold: None,
        satisfied: None,
    });

    let margin = libm::sqrt(n) * libm::sqrt(inp.rho1) * inp.beta_min / inp.sigma - inp.gamma;
    out.push(ConditionCheck {
        name: "signal_vs_gamma",
        value: (ratio * margin * margin - q) / libm::sqrt(q),
        threshold: None,
        satisfied: None,
    });

    out
}

/// Estimates the eigenvalue deflation constant from replicate designs: the
/// smallest replicate-to-full ratio of minimum normalized-gram eigenvalues.
pub fn estimate_r0(replicate_rho1: &[f64], full_rho1: f64) -> crate::Result<f64> {
    if replicate_rho1.is_empty() {
        return Err(crate::Error::EmptySamples);
    }
    if !(full_rho1 > 0.0) {
        return Err(crate::Error::InvalidConfig("full-design rho1 must be positive".into()));
    }
    Ok(replicate_rho1.iter().fold(f64::INFINITY, |acc, r| acc.min(r / full_rho1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> BoundInputs {
        BoundInputs {
            n: 100,
            p: 30,
            q: 15,
            p_c: 0.45,
            eps: 0.2,
            sigma: 1.0,
            rho1: 0.5,
            rho2: 2.0,
            beta_min: 1.0,
            gamma: 15.0,
            r0: DEFAULT_R0,
            threshold_multiplier: 1.0,
        }
    }

    #[test]
    fn no_nulls_means_zero_fdp() {
        let mut inp = base();
        inp.q = inp.p;
        let b = bip_fdp_bound(&inp);
        assert_eq!(b.value, 0.0);
        assert!(!b.vacuous);
    }

    #[test]
    fn no_actives_means_certain_tdp() {
        let mut inp = base();
        inp.q = 0;
        assert_eq!(bip_tdp_bound_large(&inp).value, 1.0);
        assert_eq!(bip_tdp_bound_small(&inp).value, 1.0);
    }

    #[test]
    fn centered_cut_degenerates_large_tdp() {
        let mut inp = base();
        inp.p_c = 0.5;
        let b = bip_tdp_bound_large(&inp);
        assert!((b.value - (1.0 - inp.q as f64)).abs() < 1e-12);
        assert!(b.vacuous);
    }

    #[test]
    fn gap_bound_flags_vacuity_at_moderate_n() {
        let b = gap_bound(&base());
        // Direct (non-expm1) evaluation of the same formula.
        let t: f64 = 0.25 - 0.1 - 1.0 / 200.0;
        let direct = 1.0 - 30.0 * (-100.0 * t * t / 2.0).exp();
        assert!((b.value - direct).abs() < 1e-12);
        assert!(direct < -9.0 && direct > -10.0);
        assert!(b.vacuous);
    }

    #[test]
    fn stls_fdp_boundaries() {
        let mut inp = base();
        inp.q = 0;
        assert_eq!(stls_bounds(&inp).0.value, 0.0);
        inp.q = inp.n;
        inp.p = inp.n;
        assert_eq!(stls_bounds(&inp).0.value, 1.0);
    }

    #[test]
    fn equal_p_and_q_makes_stls_tdp_vacuous() {
        let mut inp = base();
        inp.q = inp.p;
        let (_, tdp) = stls_bounds(&inp);
        assert!(tdp.value.is_nan());
        assert!(tdp.vacuous);
    }
}
