//! Total-variation estimators and the dispatcher that chooses between them.
//!
//! * [`additive_tv`] and [`marginal_additive_tv`] give additive error for any pair.
//! * [`basic_relative_tv`] gives relative error for close pairs via the likelihood
//!   ratio `W = w_nu / w_mu`.
//! * [`advanced_relative_tv`] gives relative error for very close hardcore pairs in
//!   the uniqueness regime by splitting vertices into large-fugacity and
//!   small-fugacity parts and truncating the small side.
//! * [`dispatch_tv`] preprocesses a pair, evaluates the gates and runs one of them.

mod additive;
mod advanced;
mod basic;
mod dispatch;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::counter::CounterConfig;
use crate::error::{Error, Result};
use crate::sampler::SamplerConfig;

pub use additive::{additive_draws, additive_tv, marginal_additive_tv};
pub use advanced::{
    advanced_draws, advanced_relative_tv, advanced_thresholds, eta_truncation_bound, exact_f,
    exact_small_side, f_hat, partition_big_small, tilde_ratio, truncated_conditional,
    AdvancedThresholds, BigSmallPartition, RatioSummary, SmallSideQuantities, TruncatedConditional,
};
pub use basic::{basic_draws, basic_relative_tv, meta_condition_params, MetaConditionParams};
pub use dispatch::{boost_repeats_for, dispatch_tv, plan_dispatch, DispatchPlan};

/// Which estimator to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Let the dispatcher decide.
    #[default]
    Auto,
    Additive,
    BasicRelative,
    Advanced,
    MarginalAdditive,
}

impl Mode {
    /// Every mode, in declaration order.
    pub const ALL: [Mode; 5] = [
        Mode::Auto,
        Mode::Additive,
        Mode::BasicRelative,
        Mode::Advanced,
        Mode::MarginalAdditive,
    ];

    /// The kebab-case name.
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Auto => "auto",
            Mode::Additive => "additive",
            Mode::BasicRelative => "basic-relative",
            Mode::Advanced => "advanced",
            Mode::MarginalAdditive => "marginal-additive",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown mode {s:?}")))
    }
}

/// Whether a report carries additive or relative error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Additive,
    Relative,
}

/// The code path that produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// The graph has no vertices.
    Empty,
    /// Exact enumeration.
    Exact,
    /// Preprocessing found opposite infinite fields.
    PreprocessResolved,
    /// Preprocessing found a one-sided hard constraint; additive estimate at accuracy `b * eps`.
    BigGap,
    /// `d_par >= theta`; additive estimate at accuracy `C * d_par * eps`.
    AdditiveGated,
    BasicRelative,
    Advanced,
    /// Additive estimator requested explicitly.
    Additive,
    MarginalAdditive,
}

impl Branch {
    /// The kebab-case name used in reports.
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Empty => "empty",
            Branch::Exact => "exact",
            Branch::PreprocessResolved => "preprocess-resolved",
            Branch::BigGap => "big-gap",
            Branch::AdditiveGated => "additive-gated",
            Branch::BasicRelative => "basic-relative",
            Branch::Advanced => "advanced",
            Branch::Additive => "additive",
            Branch::MarginalAdditive => "marginal-additive",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Accuracy target, estimator choice and resource settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorBudget {
    /// Target error, additive or relative depending on the estimator.
    pub epsilon: f64,
    pub mode: Mode,
    /// Seed from which callers derive the random stream (echoed in records).
    pub seed: u64,
    pub sampler: SamplerConfig,
    pub counter: CounterConfig,
    /// Truncation size `t` of the advanced estimator.
    pub truncation: usize,
    /// Replaces the big/small threshold `kappa` of the advanced estimator.
    pub kappa_override: Option<f64>,
    /// Replaces the distance threshold `theta` of the advanced estimator.
    pub theta_override: Option<f64>,
    /// Use the asymptotic thresholds and sample counts verbatim and enforce every gate.
    pub paper_strict: bool,
    /// Multiplier `c_T` on the advanced estimator's sample counts.
    pub sample_multiplier: f64,
    /// Multiplier applied to every nominal draw count (ignored when `paper_strict`).
    pub sample_scale: f64,
    /// Upper limit on any single draw count (ignored when `paper_strict`).
    pub max_draws: Option<usize>,
    /// When set, pairs with at most this many vertices are answered by enumeration.
    pub exact_cap: Option<usize>,
    /// When set, the dispatcher returns the median of enough runs to fail with at most this probability.
    pub failure_probability: Option<f64>,
}

/// Default upper limit on a single draw count.
pub const DEFAULT_MAX_DRAWS: usize = 50_000;

impl Default for EstimatorBudget {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            mode: Mode::Auto,
            seed: 0,
            sampler: SamplerConfig::default(),
            counter: CounterConfig::default(),
            truncation: 4,
            kappa_override: None,
            theta_override: None,
            paper_strict: false,
            sample_multiplier: 1.0,
            sample_scale: 1.0,
            max_draws: Some(DEFAULT_MAX_DRAWS),
            exact_cap: None,
            failure_probability: None,
        }
    }
}

impl EstimatorBudget {
    /// A default budget with the given accuracy.
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    /// Checks the ranges of every field.
    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {x}"
                )))
            }
        };
        positive("sample multiplier", self.sample_multiplier)?;
        positive("sample scale", self.sample_scale)?;
        if let Some(k) = self.kappa_override {
            positive("kappa", k)?;
        }
        if let Some(t) = self.theta_override {
            positive("theta", t)?;
        }
        if self.max_draws == Some(0) {
            return Err(Error::InvalidParameter("max draws must be positive".into()));
        }
        if let Some(p) = self.failure_probability {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "failure probability must lie in (0, 1), got {p}"
                )));
            }
        }
        Ok(())
    }

    /// Turns a nominal draw count into the count actually used, noting any cap in `warnings`.
    pub fn draws(&self, nominal: f64, what: &str, warnings: &mut Vec<String>) -> usize {
        let nominal = nominal.ceil().max(1.0);
        if self.paper_strict {
            return saturating_usize(nominal);
        }
        let scaled = (nominal * self.sample_scale).ceil().max(1.0);
        match self.max_draws {
            Some(cap) if scaled > cap as f64 => {
                warnings.push(format!(
                    "{what}: nominal {nominal:.3e} draws capped at {cap}"
                ));
                cap
            }
            _ => saturating_usize(scaled),
        }
    }
}

fn saturating_usize(x: f64) -> usize {
    if x >= usize::MAX as f64 {
        usize::MAX
    } else {
        x as usize
    }
}

pub(crate) fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {eps}"
        )))
    }
}

/// The result of an estimator run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub error_kind: ErrorKind,
    pub branch: Branch,
    /// Accuracy the estimator was run at.
    pub epsilon: f64,
    pub d_par: Option<f64>,
    pub theta: Option<f64>,
    /// Marginal lower bound `b` of the pair.
    pub marginal_bound: Option<f64>,
    /// Constant `C` with `d_TV >= C * d_par`.
    pub tv_lower_bound_constant: Option<f64>,
    /// Sampler draws spent.
    pub samples: u64,
    /// Calls to the approximate counter.
    pub counter_calls: u64,
    /// Independent runs combined by the median (one when not boosted).
    pub runs: usize,
    /// Whether rapid mixing of Glauber dynamics is known for both models.
    pub mixing_guaranteed: Option<bool>,
    pub warnings: Vec<String>,
    /// Wall-clock seconds, when measured.
    pub elapsed_seconds: Option<f64>,
}

impl EstimateReport {
    /// A report with only the mandatory fields set.
    pub fn new(estimate: f64, error_kind: ErrorKind, branch: Branch, epsilon: f64) -> Self {
        Self {
            estimate,
            error_kind,
            branch,
            epsilon,
            d_par: None,
            theta: None,
            marginal_bound: None,
            tv_lower_bound_constant: None,
            samples: 0,
            counter_calls: 0,
            runs: 1,
            mixing_guaranteed: None,
            warnings: Vec::new(),
            elapsed_seconds: None,
        }
    }
}
