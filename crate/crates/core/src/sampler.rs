//! Approximate sampling from (conditional) Gibbs distributions.
//!
//! Large instances use random-scan heat-bath Glauber dynamics run for
//! `ceil(c_mix * k * ln(k / delta))` steps, where `k` is the number of free vertices.
//! Instances with at most `exact_fallback_cap` free vertices are sampled exactly by
//! enumeration and inverse-CDF lookup.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{ExactDistribution, DEFAULT_EXACT_CAP};
use crate::model::{contract, logistic, Configuration, Pinning, Spin, SpinSystem};

/// Default multiplier `c_mix` in the Glauber step count.
pub const DEFAULT_MIXING_MULTIPLIER: f64 = 20.0;

/// Sampler settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplerConfig {
    /// The constant `c_mix` in the Glauber step count.
    pub mixing_multiplier: f64,
    /// Sample exactly when at most this many vertices are free (zero forces Glauber).
    pub exact_fallback_cap: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            mixing_multiplier: DEFAULT_MIXING_MULTIPLIER,
            exact_fallback_cap: DEFAULT_EXACT_CAP,
        }
    }
}

/// Which sampling method a [`Sampler`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerBackend {
    Exact,
    Glauber,
}

/// Number of Glauber steps for `free` free vertices and target distance `delta`.
pub fn glauber_steps(free: usize, delta: f64, mixing_multiplier: f64) -> usize {
    if free == 0 {
        return 0;
    }
    let k = free as f64;
    (mixing_multiplier * k * (k / delta).ln()).ceil().max(k) as usize
}

/// Heat-bath probability that `v` becomes `+1` given the other spins.
pub fn heat_bath_plus_probability(model: &SpinSystem, spins: &[Spin], v: usize) -> f64 {
    logistic(model.conditional_log_odds(v, spins))
}

/// A reusable sampler for one model and pinning.
#[derive(Debug, Clone)]
pub struct Sampler {
    model: SpinSystem,
    free: Vec<usize>,
    start: Vec<Spin>,
    steps: usize,
    table: Option<InverseCdf>,
}

#[derive(Debug, Clone)]
struct InverseCdf {
    masks: Vec<u64>,
    cumulative: Vec<f64>,
}

impl Sampler {
    /// Prepares a sampler for `model` conditioned on `pin`.
    ///
    /// Ising vertices with infinite fields and hardcore neighbours of `+1`-pinned
    /// vertices are frozen at their forced spin and never updated.
    pub fn new(
        model: &SpinSystem,
        pin: &Pinning,
        delta: f64,
        config: &SamplerConfig,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sampler accuracy must lie in (0, 1), got {delta}"
            )));
        }
        if !(config.mixing_multiplier > 0.0 && config.mixing_multiplier.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mixing multiplier must be positive, got {}",
                config.mixing_multiplier
            )));
        }
        let contraction = contract(model, pin)?.ok_or_else(|| {
            Error::InvalidPin(
                "every configuration consistent with the pinning has zero weight".into(),
            )
        })?;
        let free = contraction.kept;
        let start: Vec<Spin> = contraction
            .fixed
            .iter()
            .map(|s| s.unwrap_or(Spin::Minus))
            .collect();
        let table = if free.len() <= config.exact_fallback_cap && model.vertex_count() <= 64 {
            let dist = ExactDistribution::enumerate(model, pin, usize::MAX)?;
            let mut acc = 0.0;
            let cumulative = (0..dist.len())
                .map(|i| {
                    acc += dist.probability(i);
                    acc
                })
                .collect();
            Some(InverseCdf {
                masks: dist.masks().to_vec(),
                cumulative,
            })
        } else {
            None
        };
        Ok(Self {
            model: model.clone(),
            steps: glauber_steps(free.len(), delta, config.mixing_multiplier),
            free,
            start,
            table,
        })
    }

    /// The method used by [`Sampler::draw`].
    pub fn backend(&self) -> SamplerBackend {
        if self.table.is_some() {
            SamplerBackend::Exact
        } else {
            SamplerBackend::Glauber
        }
    }

    /// Glauber steps per draw (unused by the exact backend).
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// The free vertices.
    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    /// Draws one configuration.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        match &self.table {
            Some(t) => {
                let total = *t.cumulative.last().expect("support is non-empty");
                let u = rng.random::<f64>() * total;
                let i = t
                    .cumulative
                    .partition_point(|&c| c <= u)
                    .min(t.masks.len() - 1);
                Configuration::from_mask(self.model.vertex_count(), t.masks[i])
            }
            None => {
                let mut chain = GlauberChain::from_parts(
                    &self.model,
                    self.free.clone(),
                    self.start.clone(),
                    rng,
                );
                for _ in 0..self.steps {
                    chain.step(rng);
                }
                chain.into_configuration()
            }
        }
    }
}

/// Random-scan heat-bath Glauber dynamics on the free vertices of a model.
#[derive(Debug, Clone)]
pub struct GlauberChain<'a> {
    model: &'a SpinSystem,
    free: Vec<usize>,
    state: Vec<Spin>,
}

impl<'a> GlauberChain<'a> {
    /// Starts a chain: hardcore from all-minus, Ising from a uniform configuration on
    /// the free vertices, with pinned and forced vertices at their fixed spins.
    pub fn new<R: Rng + ?Sized>(model: &'a SpinSystem, pin: &Pinning, rng: &mut R) -> Result<Self> {
        let contraction = contract(model, pin)?.ok_or_else(|| {
            Error::InvalidPin(
                "every configuration consistent with the pinning has zero weight".into(),
            )
        })?;
        let start = contraction
            .fixed
            .iter()
            .map(|s| s.unwrap_or(Spin::Minus))
            .collect();
        Ok(Self::from_parts(model, contraction.kept, start, rng))
    }

    /// Starts the chain from an explicit state (which must have positive weight).
    pub fn from_state(model: &'a SpinSystem, pin: &Pinning, state: Configuration) -> Result<Self> {
        let contraction = contract(model, pin)?.ok_or_else(|| {
            Error::InvalidPin(
                "every configuration consistent with the pinning has zero weight".into(),
            )
        })?;
        if model.log_weight(&state)? == f64::NEG_INFINITY {
            return Err(Error::InvalidConfiguration(
                "initial state has zero weight".into(),
            ));
        }
        Ok(Self {
            model,
            free: contraction.kept,
            state: state.spins().to_vec(),
        })
    }

    fn from_parts<R: Rng + ?Sized>(
        model: &'a SpinSystem,
        free: Vec<usize>,
        mut state: Vec<Spin>,
        rng: &mut R,
    ) -> Self {
        if let SpinSystem::Ising(_) = model {
            for &v in &free {
                state[v] = if rng.random::<bool>() {
                    Spin::Plus
                } else {
                    Spin::Minus
                };
            }
        }
        Self { model, free, state }
    }

    /// One heat-bath update at a uniformly random free vertex.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if self.free.is_empty() {
            return;
        }
        let v = self.free[rng.random_range(0..self.free.len())];
        let p = heat_bath_plus_probability(self.model, &self.state, v);
        self.state[v] = if rng.random::<f64>() < p {
            Spin::Plus
        } else {
            Spin::Minus
        };
    }

    /// The current spins.
    pub fn state(&self) -> &[Spin] {
        &self.state
    }

    /// Consumes the chain, returning its state.
    pub fn into_configuration(self) -> Configuration {
        Configuration::new(self.state)
    }
}

/// Draws one approximate sample of `model` conditioned on `pin`.
pub fn sample<R: Rng + ?Sized>(
    model: &SpinSystem,
    pin: &Pinning,
    delta: f64,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<Configuration> {
    Ok(Sampler::new(model, pin, delta, config)?.draw(rng))
}

/// Draws the spins of `subset` from one approximate sample.
pub fn sample_marginal<R: Rng + ?Sized>(
    model: &SpinSystem,
    subset: &[usize],
    delta: f64,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<Vec<(usize, Spin)>> {
    crate::exact::check_subset(subset, model.vertex_count())?;
    let full = sample(
        model,
        &Pinning::free(model.vertex_count()),
        delta,
        config,
        rng,
    )?;
    Ok(subset.iter().map(|&v| (v, full.get(v))).collect())
}
