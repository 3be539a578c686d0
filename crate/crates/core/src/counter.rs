//! Partition-function estimation by annealing over a chain of interpolating models.
//!
//! The hardcore chain scales all fugacities by `s_0 = 0 < s_1 < ... < s_l = 1`
//! (`Z = 1` at `s = 0`) and estimates each `Z_{i-1} / Z_i` as `E_{mu_i}[w_{i-1} / w_i]`,
//! which is valid because the support only grows along the chain. The Ising chain
//! scales couplings and fields linearly from zero (`Z = 2^n`) and estimates each
//! `Z_i / Z_{i-1}` as `E_{mu_{i-1}}[w_i / w_{i-1}]`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{exact_partition, DEFAULT_EXACT_CAP};
use crate::model::{
    contract, parameter_distance, Configuration, HardcoreModel, Pinning, SpinSystem,
};
use crate::numeric::{compensated_sum, median};
use crate::rng::par_draws;
use crate::sampler::{Sampler, SamplerConfig};

/// Counter settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CounterConfig {
    /// Scales the length of the annealing chain.
    pub levels_multiplier: f64,
    /// Draws per level are `ceil(samples_per_level * levels / eps^2)`.
    pub samples_per_level: f64,
    /// Number of independent runs whose median log-estimate is returned.
    pub boost_repeats: usize,
    /// Models with at most this many vertices are counted exactly.
    pub exact_cap: usize,
    /// The constant `c_l` in the interpolation length `ceil(c_l (1 + n D))` of [`ratio_estimate`].
    pub ratio_levels_multiplier: f64,
    /// [`ratio_estimate`] uses `ceil(ratio_samples / eps^2)` draws of the product variable.
    pub ratio_samples: f64,
    /// Per-level second-moment ratios above this value are flagged.
    pub second_moment_threshold: f64,
}

impl Default for CounterConfig {
    fn default() -> Self {
        Self {
            levels_multiplier: 1.0,
            samples_per_level: 1.0,
            boost_repeats: 9,
            exact_cap: DEFAULT_EXACT_CAP,
            ratio_levels_multiplier: 4.0,
            ratio_samples: 4.0,
            second_moment_threshold: 2.0,
        }
    }
}

/// An estimate of `ln Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountEstimate {
    /// Estimated `ln Z` (`-inf` for an infeasible pinning).
    pub log_partition: f64,
    /// Number of ratios in the annealing chain (zero when exact).
    pub levels: usize,
    /// Total sampler draws spent.
    pub samples: u64,
    /// Whether the value was computed by enumeration.
    pub exact: bool,
}

impl CountEstimate {
    fn exact(log_partition: f64) -> Self {
        Self {
            log_partition,
            levels: 0,
            samples: 0,
            exact: true,
        }
    }
}

/// Direction of the ratio estimated at each level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleDirection {
    /// Level `i` estimates `Z_{i-1} / Z_i` as `E_{mu_i}[w_{i-1} / w_i]`.
    Downward,
    /// Level `i` estimates `Z_i / Z_{i-1}` as `E_{mu_{i-1}}[w_i / w_{i-1}]`.
    Upward,
}

/// An annealing chain from a trivially countable model to the target.
#[derive(Debug, Clone)]
pub struct Schedule {
    /// Models `mu_0, ..., mu_l`; `mu_l` is the target.
    pub levels: Vec<SpinSystem>,
    pub direction: ScheduleDirection,
    /// `ln Z` of `mu_0`.
    pub log_base_partition: f64,
}

impl Schedule {
    /// Builds the chain for a soft model.
    pub fn for_model(model: &SpinSystem, levels_multiplier: f64) -> Result<Self> {
        if !model.is_soft() {
            return Err(Error::MustPreprocess(
                "annealing needs finite fields".into(),
            ));
        }
        if !(levels_multiplier > 0.0 && levels_multiplier.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "levels multiplier must be positive, got {levels_multiplier}"
            )));
        }
        let n = model.vertex_count() as f64;
        match model {
            SpinSystem::Hardcore(m) => {
                let mut scales = vec![0.0];
                let largest = m.max_fugacity();
                if largest > 0.0 {
                    let ratio = 1.0 + 1.0 / (levels_multiplier * n);
                    let mut s = (1.0 / (n * largest)).min(1.0);
                    while s < 1.0 {
                        scales.push(s);
                        s *= ratio;
                    }
                    scales.push(1.0);
                }
                Ok(Self {
                    levels: scales.iter().map(|&s| m.scaled(s).into()).collect(),
                    direction: ScheduleDirection::Downward,
                    log_base_partition: 0.0,
                })
            }
            SpinSystem::Ising(m) => {
                let total: f64 = m.coupling_triples().iter().map(|t| t.2.abs()).sum::<f64>()
                    + m.fields().iter().map(|f| f.value().abs()).sum::<f64>();
                let steps = (levels_multiplier * total).ceil() as usize;
                Ok(Self {
                    levels: (0..=steps)
                        .map(|i| m.scaled(i as f64 / steps.max(1) as f64).into())
                        .collect(),
                    direction: ScheduleDirection::Upward,
                    log_base_partition: n * std::f64::consts::LN_2,
                })
            }
        }
    }

    /// Number of ratios in the chain.
    pub fn ratio_count(&self) -> usize {
        self.levels.len() - 1
    }

    /// The model sampled at level `i` (`1 <= i <= ratio_count`).
    pub fn sampling_model(&self, i: usize) -> &SpinSystem {
        match self.direction {
            ScheduleDirection::Downward => &self.levels[i],
            ScheduleDirection::Upward => &self.levels[i - 1],
        }
    }

    /// The weight ratio whose mean under [`Schedule::sampling_model`] is the level-`i` ratio.
    pub fn ratio_variable(&self, i: usize, config: &Configuration) -> f64 {
        let lo = self.levels[i - 1].log_weight_of(config.spins());
        let hi = self.levels[i].log_weight_of(config.spins());
        match self.direction {
            ScheduleDirection::Downward => (lo - hi).exp(),
            ScheduleDirection::Upward => (hi - lo).exp(),
        }
    }

    /// `ln Z` of the target given the mean of each level's ratio variable.
    pub fn log_target(&self, level_means: &[f64]) -> f64 {
        let sum: f64 = compensated_sum(level_means.iter().map(|m| m.ln()));
        match self.direction {
            ScheduleDirection::Downward => self.log_base_partition - sum,
            ScheduleDirection::Upward => self.log_base_partition + sum,
        }
    }
}

fn check_accuracy(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "accuracy must lie in (0, 1), got {eps}"
        )))
    }
}

/// Draws per level `ceil(samples_per_level * levels / eps^2)` of [`approx_count`].
pub fn level_draws(levels: usize, eps: f64, config: &CounterConfig) -> usize {
    (config.samples_per_level * levels as f64 / (eps * eps))
        .ceil()
        .max(1.0) as usize
}

/// Estimates `ln Z` of a soft model to relative accuracy `eps` on `Z`.
pub fn approx_count<R: Rng + ?Sized>(
    model: &SpinSystem,
    eps: f64,
    config: &CounterConfig,
    sampler: &SamplerConfig,
    rng: &mut R,
) -> Result<CountEstimate> {
    check_accuracy(eps)?;
    if !model.is_soft() {
        return Err(Error::MustPreprocess(
            "counting needs finite fields; use conditional_count".into(),
        ));
    }
    if model.vertex_count() <= config.exact_cap {
        return Ok(CountEstimate::exact(exact_partition(
            model,
            config.exact_cap,
        )?));
    }
    if config.boost_repeats == 0 {
        return Err(Error::InvalidParameter(
            "boost_repeats must be positive".into(),
        ));
    }
    let schedule = Schedule::for_model(model, config.levels_multiplier)?;
    let levels = schedule.ratio_count();
    if levels == 0 {
        return Ok(CountEstimate {
            log_partition: schedule.log_base_partition,
            levels: 0,
            samples: 0,
            exact: true,
        });
    }
    let draws = level_draws(levels, eps, config);
    let delta = eps / (8.0 * levels as f64);
    let samplers: Vec<Sampler> = (1..=levels)
        .map(|i| {
            Sampler::new(
                schedule.sampling_model(i),
                &Pinning::free(model.vertex_count()),
                delta,
                sampler,
            )
        })
        .collect::<Result<_>>()?;
    let mut runs = Vec::with_capacity(config.boost_repeats);
    for _ in 0..config.boost_repeats {
        let means: Vec<f64> = samplers
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let values = par_draws(rng, draws, |r, _| {
                    schedule.ratio_variable(k + 1, &s.draw(r))
                });
                compensated_sum(values) / draws as f64
            })
            .collect();
        runs.push(schedule.log_target(&means));
    }
    Ok(CountEstimate {
        log_partition: median(&runs),
        levels,
        samples: (draws * levels * config.boost_repeats) as u64,
        exact: false,
    })
}

/// Estimates `ln Z^pin` by contracting the pinning and counting the reduced model.
///
/// Also accepts Ising models with infinite fields, which are contracted the same way.
pub fn conditional_count<R: Rng + ?Sized>(
    model: &SpinSystem,
    pin: &Pinning,
    eps: f64,
    config: &CounterConfig,
    sampler: &SamplerConfig,
    rng: &mut R,
) -> Result<CountEstimate> {
    check_accuracy(eps)?;
    let Some(c) = contract(model, pin)? else {
        return Ok(CountEstimate::exact(f64::NEG_INFINITY));
    };
    let mut estimate = approx_count(&c.reduced, eps, config, sampler, rng)?;
    estimate.log_partition += c.log_offset;
    Ok(estimate)
}

/// Output of [`ratio_estimate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRun {
    /// Estimate of `Z_nu / Z_mu`.
    pub estimate: f64,
    /// Interpolation length (zero when the Ising fallback to two counts was used).
    pub levels: usize,
    /// Draws of the product variable.
    pub draws: usize,
    /// Empirical `E[W_i]` per level.
    pub level_means: Vec<f64>,
    /// Empirical `E[W_i^2]` per level.
    pub level_second_moments: Vec<f64>,
}

/// Per-level second-moment diagnostics of a [`RatioRun`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondMomentReport {
    /// `E[W_i^2] / E[W_i]^2` per level.
    pub per_level: Vec<f64>,
    /// Product over levels, the relative second moment of the product variable.
    pub product: f64,
    /// Levels whose ratio exceeds the threshold.
    pub flagged: Vec<usize>,
}

/// Estimates `Z_nu / Z_mu` for a close pair.
///
/// Hardcore: interpolates geometrically `lambda^(i) = lambda_mu * (lambda_nu / lambda_mu)^(i / l)`
/// with `l = ceil(c_l (1 + n D))` and averages products of independent per-level weight
/// ratios. Ising: falls back to two independent counts.
pub fn ratio_estimate<R: Rng + ?Sized>(
    mu: &SpinSystem,
    nu: &SpinSystem,
    eps: f64,
    config: &CounterConfig,
    sampler: &SamplerConfig,
    rng: &mut R,
) -> Result<RatioRun> {
    check_accuracy(eps)?;
    mu.ensure_comparable(nu)?;
    let (a, b) = match (mu, nu) {
        (SpinSystem::Hardcore(a), SpinSystem::Hardcore(b)) => (a, b),
        _ => {
            let lm = conditional_count(
                mu,
                &Pinning::free(mu.vertex_count()),
                eps / 3.0,
                config,
                sampler,
                rng,
            )?;
            let ln = conditional_count(
                nu,
                &Pinning::free(nu.vertex_count()),
                eps / 3.0,
                config,
                sampler,
                rng,
            )?;
            return Ok(RatioRun {
                estimate: (ln.log_partition - lm.log_partition).exp(),
                levels: 0,
                draws: 0,
                level_means: Vec::new(),
                level_second_moments: Vec::new(),
            });
        }
    };
    if let Some(v) =
        (0..a.graph().vertex_count()).find(|&v| a.fugacity(v) == 0.0 && b.fugacity(v) > 0.0)
    {
        return Err(Error::MustPreprocess(format!(
            "vertex {v} has zero fugacity under mu only"
        )));
    }
    let chain = interpolation(a, b, config.ratio_levels_multiplier)?;
    let levels = chain.len() - 1;
    let draws = (config.ratio_samples / (eps * eps)).ceil().max(1.0) as usize;
    let n = mu.vertex_count();
    let delta = eps / (8.0 * levels.max(1) as f64);
    let samplers: Vec<Sampler> = chain[..levels]
        .iter()
        .map(|m| Sampler::new(m, &Pinning::free(n), delta, sampler))
        .collect::<Result<_>>()?;
    let per_draw: Vec<Vec<f64>> = par_draws(rng, draws, |r, _| {
        samplers
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let x = s.draw(r);
                (chain[i + 1].log_weight_of(x.spins()) - chain[i].log_weight_of(x.spins())).exp()
            })
            .collect()
    });
    let products: Vec<f64> = per_draw.iter().map(|w| w.iter().product()).collect();
    let level_means = (0..levels)
        .map(|i| compensated_sum(per_draw.iter().map(|w| w[i])) / draws as f64)
        .collect();
    let level_second_moments = (0..levels)
        .map(|i| compensated_sum(per_draw.iter().map(|w| w[i] * w[i])) / draws as f64)
        .collect();
    Ok(RatioRun {
        estimate: compensated_sum(products) / draws as f64,
        levels,
        draws,
        level_means,
        level_second_moments,
    })
}

/// The geometric interpolation `mu = chain[0], ..., chain[l] = nu` used by [`ratio_estimate`].
pub fn interpolation(
    mu: &HardcoreModel,
    nu: &HardcoreModel,
    levels_multiplier: f64,
) -> Result<Vec<SpinSystem>> {
    let (smu, snu): (SpinSystem, SpinSystem) = (mu.clone().into(), nu.clone().into());
    let d = parameter_distance(&smu, &snu)?;
    let n = mu.graph().vertex_count() as f64;
    let levels = (levels_multiplier * (1.0 + n * d)).ceil().max(1.0) as usize;
    (0..=levels)
        .map(|i| {
            let t = i as f64 / levels as f64;
            let lambda = mu
                .fugacities()
                .iter()
                .zip(nu.fugacities())
                .map(|(&x, &y)| {
                    if x == 0.0 {
                        0.0
                    } else if i == levels {
                        y
                    } else {
                        x * (y / x).powf(t)
                    }
                })
                .collect();
            mu.with_fugacities(lambda).map(SpinSystem::from)
        })
        .collect()
}

/// Per-level relative second moments of a ratio run, flagging levels above `threshold`.
pub fn empirical_second_moment(run: &RatioRun, threshold: f64) -> SecondMomentReport {
    let per_level: Vec<f64> = run
        .level_means
        .iter()
        .zip(&run.level_second_moments)
        .map(|(m, s)| s / (m * m))
        .collect();
    SecondMomentReport {
        product: per_level.iter().product(),
        flagged: per_level
            .iter()
            .enumerate()
            .filter(|(_, &r)| r > threshold)
            .map(|(i, _)| i)
            .collect(),
        per_level,
    }
}
