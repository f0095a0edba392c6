//! Core model types: system and influencer parameters, jump-size
//! distributions, intensity primitives and the ergodicity checker.
//!
//! The effective popularity of an influencer decays at rate `gamma` and
//! jumps at posting events (conditional intensity `lambda0 + lambda1 x^phi`)
//! and at exogenous events (Poisson rate `mu`). A posting jump has mean
//! `epsilon + beta x^theta` and scales a unit-mean multiplier `V̂`.

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cv {cv} incompatible with family {family:?}: {reason}")]
    IncompatibleCv {
        family: JumpFamily,
        cv: f64,
        reason: String,
    },
}

/// Distribution family tags for jump multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JumpFamily {
    Lognormal,
    Exponential,
    #[serde(rename = "powerlaw")]
    PowerLaw,
    Deterministic,
}

/// A positive jump-size distribution with all mass on (0, ∞).
///
/// Constructed either unit-mean (for the multiplier `V̂`) or with an
/// arbitrary mean (for exogenous jumps `W`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum JumpDistribution {
    Lognormal { log_mean: f64, log_sd: f64 },
    Exponential { rate: f64 },
    #[serde(rename = "powerlaw")]
    Pareto { exponent: f64, cutoff: f64 },
    Deterministic { value: f64 },
}

impl JumpDistribution {
    /// Unit-mean distribution of the given family with coefficient of
    /// variation `cv`. Rejects an exponential request with `cv != 1`;
    /// use [`JumpDistribution::unit_mean_lenient`] to force it.
    ///
    /// Lognormal: `log_sd² = ln(1 + cv²)`, `log_mean = -log_sd²/2`.
    /// Pareto: exponent `a = 1 + sqrt(1 + 1/cv²)` (always finite
    /// variance), cutoff `(a-1)/a`.
    pub fn unit_mean(family: JumpFamily, cv: f64) -> Result<Self, ModelError> {
        match family {
            JumpFamily::Exponential if (cv - 1.0).abs() > 1e-12 => {
                Err(ModelError::IncompatibleCv {
                    family,
                    cv,
                    reason: "exponential has cv = 1 by construction".into(),
                })
            }
            JumpFamily::Deterministic => Ok(JumpDistribution::Deterministic { value: 1.0 }),
            _ => {
                if !(cv > 0.0) {
                    return Err(ModelError::IncompatibleCv {
                        family,
                        cv,
                        reason: "cv must be positive".into(),
                    });
                }
                Ok(Self::unit_mean_unchecked(family, cv))
            }
        }
    }

    /// Like [`JumpDistribution::unit_mean`], but an exponential request
    /// ignores `cv` (forcing it to 1). The boolean reports whether `cv`
    /// was overridden.
    pub fn unit_mean_lenient(family: JumpFamily, cv: f64) -> Result<(Self, bool), ModelError> {
        if family == JumpFamily::Exponential {
            let adjusted = (cv - 1.0).abs() > 1e-12;
            return Ok((JumpDistribution::Exponential { rate: 1.0 }, adjusted));
        }
        Self::unit_mean(family, cv).map(|d| (d, false))
    }

    fn unit_mean_unchecked(family: JumpFamily, cv: f64) -> Self {
        match family {
            JumpFamily::Lognormal => {
                let s2 = (1.0 + cv * cv).ln();
                JumpDistribution::Lognormal {
                    log_mean: -s2 / 2.0,
                    log_sd: s2.sqrt(),
                }
            }
            JumpFamily::Exponential => JumpDistribution::Exponential { rate: 1.0 },
            JumpFamily::PowerLaw => {
                // cv² = 1/(a(a-2)) for a > 2, mean = a·cutoff/(a-1) = 1.
                let a = 1.0 + (1.0 + 1.0 / (cv * cv)).sqrt();
                JumpDistribution::Pareto {
                    exponent: a,
                    cutoff: (a - 1.0) / a,
                }
            }
            JumpFamily::Deterministic => JumpDistribution::Deterministic { value: 1.0 },
        }
    }

    /// Lognormal with the given mean and coefficient of variation
    /// (used for exogenous jumps `W`).
    pub fn lognormal_with_mean(mean: f64, cv: f64) -> Result<Self, ModelError> {
        if !(mean > 0.0 && cv > 0.0) {
            return Err(ModelError::InvalidParameter(
                "lognormal mean and cv must be positive".into(),
            ));
        }
        let s2 = (1.0 + cv * cv).ln();
        Ok(JumpDistribution::Lognormal {
            log_mean: mean.ln() - s2 / 2.0,
            log_sd: s2.sqrt(),
        })
    }

    /// Analytic mean.
    pub fn mean(&self) -> f64 {
        match *self {
            JumpDistribution::Lognormal { log_mean, log_sd } => {
                (log_mean + log_sd * log_sd / 2.0).exp()
            }
            JumpDistribution::Exponential { rate } => 1.0 / rate,
            JumpDistribution::Pareto { exponent, cutoff } => {
                if exponent > 1.0 {
                    exponent * cutoff / (exponent - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            JumpDistribution::Deterministic { value } => value,
        }
    }

    /// Analytic coefficient of variation (infinite for a Pareto
    /// exponent ≤ 2).
    pub fn cv(&self) -> f64 {
        match *self {
            JumpDistribution::Lognormal { log_sd, .. } => {
                ((log_sd * log_sd).exp() - 1.0).sqrt()
            }
            JumpDistribution::Exponential { .. } => 1.0,
            JumpDistribution::Pareto { exponent, .. } => {
                if exponent > 2.0 {
                    (1.0 / (exponent * (exponent - 2.0))).sqrt()
                } else {
                    f64::INFINITY
                }
            }
            JumpDistribution::Deterministic { .. } => 0.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpDistribution::Lognormal { log_mean, log_sd } => {
                rand_distr::LogNormal::new(log_mean, log_sd)
                    .expect("valid lognormal")
                    .sample(rng)
            }
            JumpDistribution::Exponential { rate } => {
                rand_distr::Exp::new(rate).expect("valid exponential").sample(rng)
            }
            JumpDistribution::Pareto { exponent, cutoff } => {
                // Inverse transform; u in (0,1].
                let u = 1.0 - rng.gen::<f64>();
                cutoff * u.powf(-1.0 / exponent)
            }
            JumpDistribution::Deterministic { value } => value,
        }
    }

    /// Cumulative distribution function `P(X ≤ w)`.
    pub fn cdf(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        match *self {
            JumpDistribution::Lognormal { log_mean, log_sd } => {
                0.5 * erfc(-(w.ln() - log_mean) / (log_sd * std::f64::consts::SQRT_2))
            }
            JumpDistribution::Exponential { rate } => 1.0 - (-rate * w).exp(),
            JumpDistribution::Pareto { exponent, cutoff } => {
                if w < cutoff {
                    0.0
                } else {
                    1.0 - (cutoff / w).powf(exponent)
                }
            }
            JumpDistribution::Deterministic { value } => {
                if w >= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Complementary CDF `P(X > w)`; equals 1 for any `w ≤ 0`.
    pub fn ccdf(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return 1.0;
        }
        match *self {
            JumpDistribution::Lognormal { log_mean, log_sd } => {
                0.5 * erfc((w.ln() - log_mean) / (log_sd * std::f64::consts::SQRT_2))
            }
            JumpDistribution::Exponential { rate } => (-rate * w).exp(),
            JumpDistribution::Pareto { exponent, cutoff } => {
                if w < cutoff {
                    1.0
                } else {
                    (cutoff / w).powf(exponent)
                }
            }
            JumpDistribution::Deterministic { value } => {
                if w >= value {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Log-density, used by the calibration likelihoods.
    pub fn log_pdf(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match *self {
            JumpDistribution::Lognormal { log_mean, log_sd } => {
                let z = (w.ln() - log_mean) / log_sd;
                -w.ln() - log_sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * z * z
            }
            JumpDistribution::Exponential { rate } => rate.ln() - rate * w,
            JumpDistribution::Pareto { exponent, cutoff } => {
                if w < cutoff {
                    f64::NEG_INFINITY
                } else {
                    exponent.ln() + exponent * cutoff.ln() - (exponent + 1.0) * w.ln()
                }
            }
            JumpDistribution::Deterministic { .. } => f64::NEG_INFINITY,
        }
    }
}

/// System-level constants shared by all influencers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Popularity decay rate (1/days).
    pub gamma: f64,
    /// Jump-mean exponent.
    pub theta: f64,
    /// Absorption-avoidance constant.
    pub epsilon: f64,
    /// Exogenous event rate (events/day).
    pub mu: f64,
    /// Distribution of exogenous jumps `W`.
    pub w_dist: JumpDistribution,
}

impl SystemParams {
    pub fn new(gamma: f64, theta: f64, epsilon: f64, mu: f64) -> Result<Self, ModelError> {
        let sys = Self {
            gamma,
            theta,
            epsilon,
            mu,
            // Inert by default since the reference scenario sets mu = 0.
            w_dist: JumpDistribution::lognormal_with_mean(1.0, 1.0).expect("valid default"),
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.gamma > 0.0) {
            return Err(ModelError::InvalidParameter("gamma must be > 0".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(ModelError::InvalidParameter("epsilon must be > 0".into()));
        }
        if !(self.mu >= 0.0) {
            return Err(ModelError::InvalidParameter("mu must be >= 0".into()));
        }
        if !(self.theta >= 0.0) {
            return Err(ModelError::InvalidParameter("theta must be >= 0".into()));
        }
        Ok(())
    }
}

/// Per-influencer behavioural parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluencerParams {
    /// Mean jump scale (content ability).
    pub beta: f64,
    /// Constant posting rate (posts/day).
    pub lambda0: f64,
    /// State-dependent posting scale.
    pub lambda1: f64,
    /// Posting-rate exponent.
    pub phi: f64,
    /// Coefficient of variation of the unit-mean multiplier `V̂`.
    pub cv: f64,
    /// Family of `V̂`.
    pub v_family: JumpFamily,
}

impl InfluencerParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.beta > 0.0) {
            return Err(ModelError::InvalidParameter("beta must be > 0".into()));
        }
        if !(self.lambda0 >= 0.0 && self.lambda1 >= 0.0) {
            return Err(ModelError::InvalidParameter(
                "lambda0 and lambda1 must be >= 0".into(),
            ));
        }
        if !(self.lambda0 + self.lambda1 > 0.0) {
            return Err(ModelError::InvalidParameter(
                "lambda0 + lambda1 must be > 0 (some posting occurs)".into(),
            ));
        }
        if !(self.phi >= 0.0) {
            return Err(ModelError::InvalidParameter("phi must be >= 0".into()));
        }
        if self.v_family != JumpFamily::Deterministic && !(self.cv > 0.0) {
            return Err(ModelError::InvalidParameter(
                "cv must be > 0 for a non-deterministic jump family".into(),
            ));
        }
        Ok(())
    }

    /// Unit-mean multiplier distribution for this influencer
    /// (`cv` forced to 1 for the exponential family).
    pub fn v_dist(&self) -> JumpDistribution {
        JumpDistribution::unit_mean_lenient(self.v_family, self.cv)
            .expect("validated params")
            .0
    }
}

/// Outcome of the ergodicity parameter check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ErgodicityStatus {
    /// `theta + phi < 1`.
    SufficientStrict,
    /// `theta + phi = 1` and the heuristic drift constant satisfies `c/beta > 1`.
    SufficientBoundary,
    NotGuaranteed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityVerdict {
    pub status: ErgodicityStatus,
    pub theta_plus_phi: f64,
    /// `c/beta` for the boundary case, evaluated at a fixed reference
    /// point (heuristic sufficient check; see [`check_ergodicity`]).
    pub boundary_margin: Option<f64>,
}

impl ErgodicityVerdict {
    pub fn is_guaranteed(&self) -> bool {
        self.status != ErgodicityStatus::NotGuaranteed
    }
}

/// Conditional mean jump size `epsilon + beta·x^theta`.
pub fn conditional_jump_mean(x: f64, sys: &SystemParams, inf: &InfluencerParams) -> f64 {
    debug_assert!(x >= 0.0);
    sys.epsilon + inf.beta * pow_conv(x, sys.theta)
}

/// Draw a posting jump `V = (epsilon + beta·x^theta)·V̂`.
pub fn sample_jump<R: Rng + ?Sized>(
    x: f64,
    sys: &SystemParams,
    inf: &InfluencerParams,
    rng: &mut R,
) -> f64 {
    conditional_jump_mean(x, sys, inf) * inf.v_dist().sample(rng)
}

/// Posting intensity `lambda0 + lambda1·x^phi` (with `x^0 := 1` even at
/// `x = 0`).
pub fn posting_intensity(x: f64, inf: &InfluencerParams) -> f64 {
    debug_assert!(x >= 0.0);
    inf.lambda0 + inf.lambda1 * pow_conv(x, inf.phi)
}

/// `x^p` with the convention `x^0 := 1` for every `x >= 0`.
#[inline]
pub(crate) fn pow_conv(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        x.powf(p)
    }
}

/// Checks the sufficient ergodicity condition on the parameters.
///
/// Strictly sufficient iff `theta + phi < 1`. On the boundary
/// `theta + phi = 1`, a heuristic sufficient check evaluates the drift
/// constant `c = gamma/(lambda0 + lambda1 + gamma) · alpha^{-phi} ·
/// F_Z((alpha-1)·x̄ | x̄)` at `alpha = 2` and the reference state
/// `x̄ = lambda0(epsilon + beta)/gamma` (the stationary-mean estimate
/// for `theta = 0`); the verdict is boundary-sufficient iff `c/beta > 1`.
pub fn check_ergodicity(sys: &SystemParams, inf: &InfluencerParams) -> ErgodicityVerdict {
    let tp = sys.theta + inf.phi;
    if tp < 1.0 {
        return ErgodicityVerdict {
            status: ErgodicityStatus::SufficientStrict,
            theta_plus_phi: tp,
            boundary_margin: None,
        };
    }
    if tp > 1.0 {
        return ErgodicityVerdict {
            status: ErgodicityStatus::NotGuaranteed,
            theta_plus_phi: tp,
            boundary_margin: None,
        };
    }
    let alpha: f64 = 2.0;
    let x_ref = inf.lambda0 * (sys.epsilon + inf.beta) / sys.gamma;
    let c = sys.gamma / (inf.lambda0 + inf.lambda1 + sys.gamma)
        * alpha.powf(-inf.phi)
        * f_z_cdf((alpha - 1.0) * x_ref, x_ref, sys, inf);
    let margin = c / inf.beta;
    ErgodicityVerdict {
        status: if margin > 1.0 {
            ErgodicityStatus::SufficientBoundary
        } else {
            ErgodicityStatus::NotGuaranteed
        },
        theta_plus_phi: tp,
        boundary_margin: Some(margin),
    }
}

/// CDF of the combined jump `Z` at state `x`:
/// `p_I(x)·F_V(w|x) + p_E(x)·F_W(w)`.
fn f_z_cdf(w: f64, x: f64, sys: &SystemParams, inf: &InfluencerParams) -> f64 {
    let lam = posting_intensity(x, inf);
    let total = lam + sys.mu;
    if total == 0.0 {
        return 0.0;
    }
    let p_e = sys.mu / total;
    let scale = conditional_jump_mean(x, sys, inf);
    (1.0 - p_e) * inf.v_dist().cdf(w / scale) + p_e * sys.w_dist.cdf(w)
}
