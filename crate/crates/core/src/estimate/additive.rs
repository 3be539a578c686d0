//! Additive-error estimators for the full distributions and for projections.

use std::collections::HashMap;

use rand::Rng;

use super::{check_epsilon, Branch, ErrorKind, EstimateReport, EstimatorBudget};
use crate::counter::{conditional_count, CounterConfig};
use crate::error::Result;
use crate::exact::check_subset;
use crate::model::{parameter_distance, Pinning, Spin, SpinSystem};
use crate::numeric::compensated_sum;
use crate::rng::par_draws;
use crate::sampler::Sampler;

/// `max(0, 1 - p_nu / p_mu)` from log weights and log partition functions, zero when `p_mu = 0`.
fn positive_part(log_w_mu: f64, log_w_nu: f64, log_z_mu: f64, log_z_nu: f64) -> f64 {
    if log_w_mu == f64::NEG_INFINITY {
        return 0.0;
    }
    (1.0 - (log_w_nu - log_w_mu + log_z_mu - log_z_nu).exp()).max(0.0)
}

/// Nominal draw count `64 / eps^2` of both additive estimators.
pub fn additive_draws(eps: f64) -> f64 {
    64.0 / (eps * eps)
}

/// Estimates `d_TV(mu, nu)` within additive error `eps`.
///
/// Averages `ceil(64 / eps^2)` draws of `max(0, 1 - nu(s) / mu(s))` with `s` sampled
/// from `mu` at accuracy `eps / 4`, using partition functions estimated to `eps / 4`.
/// Hard constraints are allowed on either side.
pub fn additive_tv<R: Rng + ?Sized>(
    mu: &SpinSystem,
    nu: &SpinSystem,
    eps: f64,
    budget: &EstimatorBudget,
    rng: &mut R,
) -> Result<EstimateReport> {
    check_epsilon(eps)?;
    mu.ensure_comparable(nu)?;
    let n = mu.vertex_count();
    let mut report = EstimateReport::new(0.0, ErrorKind::Additive, Branch::Additive, eps);
    report.d_par = parameter_distance(mu, nu).ok();
    if n == 0 {
        return Ok(report);
    }
    let draws = budget.draws(additive_draws(eps), "additive", &mut report.warnings);
    let free = Pinning::free(n);
    let z_mu = conditional_count(mu, &free, eps / 4.0, &budget.counter, &budget.sampler, rng)?
        .log_partition;
    let z_nu = conditional_count(nu, &free, eps / 4.0, &budget.counter, &budget.sampler, rng)?
        .log_partition;
    let sampler = Sampler::new(mu, &free, eps / 4.0, &budget.sampler)?;
    let values = par_draws(rng, draws, |r, _| {
        let s = sampler.draw(r);
        positive_part(
            mu.log_weight_of(s.spins()),
            nu.log_weight_of(s.spins()),
            z_mu,
            z_nu,
        )
    });
    report.estimate = compensated_sum(values) / draws as f64;
    report.samples = draws as u64;
    report.counter_calls = 2;
    Ok(report)
}

/// Estimates `d_TV(mu_S, nu_S)` for the projections onto `subset` within additive error `eps`.
///
/// Each draw `s ~ mu` contributes `max(0, 1 - nu_S(s_S) / mu_S(s_S))`, where both
/// marginal probabilities come from conditional counts at accuracy `eps / 8` whose
/// success probability is boosted to `1 - eps^2 / 320` by a median.
pub fn marginal_additive_tv<R: Rng + ?Sized>(
    mu: &SpinSystem,
    nu: &SpinSystem,
    subset: &[usize],
    eps: f64,
    budget: &EstimatorBudget,
    rng: &mut R,
) -> Result<EstimateReport> {
    check_epsilon(eps)?;
    mu.ensure_comparable(nu)?;
    let n = mu.vertex_count();
    check_subset(subset, n)?;
    let mut subset = subset.to_vec();
    subset.sort_unstable();
    subset.dedup();
    let mut report = EstimateReport::new(0.0, ErrorKind::Additive, Branch::MarginalAdditive, eps);
    report.d_par = parameter_distance(mu, nu).ok();
    if subset.is_empty() {
        return Ok(report);
    }
    let delta = eps * eps / 320.0;
    let boosted = (2.0 * (1.0 / delta).ln()).ceil() as usize | 1;
    let counter = CounterConfig {
        boost_repeats: budget.counter.boost_repeats.max(boosted),
        ..budget.counter
    };
    let accuracy = eps / 8.0;
    let draws = budget.draws(
        additive_draws(eps),
        "marginal additive",
        &mut report.warnings,
    );
    let free = Pinning::free(n);
    let z_mu =
        conditional_count(mu, &free, accuracy, &counter, &budget.sampler, rng)?.log_partition;
    let z_nu =
        conditional_count(nu, &free, accuracy, &counter, &budget.sampler, rng)?.log_partition;
    let sampler = Sampler::new(mu, &free, accuracy, &budget.sampler)?;
    let projections: Vec<Vec<Spin>> = par_draws(rng, draws, |r, _| {
        let s = sampler.draw(r);
        subset.iter().map(|&v| s.get(v)).collect()
    });
    let mut cache: HashMap<Vec<Spin>, (f64, f64)> = HashMap::new();
    let mut calls = 2u64;
    let mut total = Vec::with_capacity(draws);
    for key in projections {
        let (a, b) = match cache.get(&key) {
            Some(&hit) => hit,
            None => {
                let pairs: Vec<(usize, Spin)> =
                    subset.iter().copied().zip(key.iter().copied()).collect();
                let pin = Pinning::from_pairs(n, &pairs)?;
                let a = conditional_count(mu, &pin, accuracy, &counter, &budget.sampler, rng)?;
                let b = conditional_count(nu, &pin, accuracy, &counter, &budget.sampler, rng)?;
                calls += 2;
                if a.exact && b.exact {
                    cache.insert(key, (a.log_partition, b.log_partition));
                }
                (a.log_partition, b.log_partition)
            }
        };
        total.push(positive_part(a, b, z_mu, z_nu));
    }
    report.estimate = compensated_sum(total) / draws as f64;
    report.samples = draws as u64;
    report.counter_calls = calls;
    Ok(report)
}
