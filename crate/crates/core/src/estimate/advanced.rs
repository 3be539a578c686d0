//! Relative-error estimation for very close hardcore pairs in the uniqueness regime.
//!
//! Vertices whose fugacities are at least `kappa` on both sides form the big part `B`;
//! the rest form the small part `S`. Writing `x` for a configuration on `B`,
//! `d_TV = E_{x ~ mu_B}[f(x)]` with
//! `f(x) = 1/2 sum_y |(nu_B(x) / mu_B(x)) nu_S^x(y) - mu_S^x(y)|`.
//! The sum over `y` is truncated to independent sets of size at most `t` in the part
//! of `S` not blocked by occupied big vertices, and the global ratio `Z_mu / Z_nu`
//! inside `nu_B(x) / mu_B(x)` is replaced by `1 / R`, where `R` estimates `Z_nu / Z_mu`.

use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use super::{check_epsilon, Branch, ErrorKind, EstimateReport, EstimatorBudget};
use crate::error::{Error, Result};
use crate::exact::ExactDistribution;
use crate::model::{
    check_uniqueness, parameter_distance, Configuration, HardcoreModel, Pinning, SpinSystem,
};
use crate::numeric::{compensated_sum, log_sum_exp};
use crate::rng::par_draws;
use crate::sampler::Sampler;

/// The thresholds `kappa` (big/small split) and `theta` (distance gate) in effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdvancedThresholds {
    pub kappa: f64,
    pub theta: f64,
    /// `1e-9 eps^(1/4) / n^(3/2)`.
    pub strict_kappa: f64,
    /// `1e-10 eps^(1/4) / n^(5/2)`.
    pub strict_theta: f64,
    /// Whether an explicit override replaced either value.
    pub overridden: bool,
}

/// Resolves `kappa` and `theta` for `n` vertices and accuracy `eps`.
///
/// Overrides win. Otherwise the strict formulas are used under `paper_strict`, and the
/// desk-scale defaults `kappa = 1 / (20 n)`, `theta = 1 / (400 n^2)` (which satisfy
/// `kappa + theta < 1 / (10 n)` and `theta / kappa < 1 / (10 n)`) are used without it.
pub fn advanced_thresholds(n: usize, eps: f64, budget: &EstimatorBudget) -> AdvancedThresholds {
    let nf = (n.max(1)) as f64;
    let strict_kappa = 1e-9 * eps.powf(0.25) / nf.powf(1.5);
    let strict_theta = 1e-10 * eps.powf(0.25) / nf.powf(2.5);
    let (base_kappa, base_theta) = if budget.paper_strict {
        (strict_kappa, strict_theta)
    } else {
        (1.0 / (20.0 * nf), 1.0 / (400.0 * nf * nf))
    };
    AdvancedThresholds {
        kappa: budget.kappa_override.unwrap_or(base_kappa),
        theta: budget.theta_override.unwrap_or(base_theta),
        strict_kappa,
        strict_theta,
        overridden: budget.kappa_override.is_some() || budget.theta_override.is_some(),
    }
}

/// `eta(kappa, t) = 1e6 (1 + n / 10)^(t + 1) kappa^t n^(t + 2)`, the truncation error factor.
pub fn eta_truncation_bound(kappa: f64, t: usize, n: usize) -> f64 {
    let n = n as f64;
    let t = t as i32;
    1e6 * (1.0 + n / 10.0).powi(t + 1) * kappa.powi(t) * n.powi(t + 2)
}

/// Split of the vertices into big (both fugacities at least `kappa`) and small.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BigSmallPartition {
    pub big: Vec<usize>,
    pub small: Vec<usize>,
    pub kappa: f64,
    #[serde(skip)]
    is_big: Vec<bool>,
}

impl BigSmallPartition {
    /// Splits the vertices at `kappa` without any gating.
    pub fn with_kappa(mu: &HardcoreModel, nu: &HardcoreModel, kappa: f64) -> Self {
        let is_big: Vec<bool> = mu
            .fugacities()
            .iter()
            .zip(nu.fugacities())
            .map(|(a, b)| a.min(*b) >= kappa)
            .collect();
        let (big, small) = (0..is_big.len()).partition(|&v| is_big[v]);
        Self {
            big,
            small,
            kappa,
            is_big,
        }
    }

    /// Whether `v` is in the big part.
    pub fn is_big(&self, v: usize) -> bool {
        self.is_big[v]
    }

    /// The occupied big vertices of a full configuration.
    pub fn big_plus(&self, config: &Configuration) -> Vec<usize> {
        self.big
            .iter()
            .copied()
            .filter(|&v| config.get(v).is_plus())
            .collect()
    }
}

fn hardcore_pair<'a>(
    mu: &'a SpinSystem,
    nu: &'a SpinSystem,
) -> Result<(&'a HardcoreModel, &'a HardcoreModel)> {
    mu.ensure_comparable(nu)?;
    match (mu.as_hardcore(), nu.as_hardcore()) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::Domain(
            "the advanced estimator is defined for hardcore pairs only".into(),
        )),
    }
}

/// Splits the vertices of a hardcore pair after checking uniqueness and `d_par < theta`.
pub fn partition_big_small(
    mu: &SpinSystem,
    nu: &SpinSystem,
    eps: f64,
    budget: &EstimatorBudget,
) -> Result<BigSmallPartition> {
    check_epsilon(eps)?;
    let (a, b) = hardcore_pair(mu, nu)?;
    for (name, m) in [("mu", a), ("nu", b)] {
        if !check_uniqueness(m).is_some_and(|gap| gap > 0.0) {
            return Err(Error::Gate(format!(
                "{name} is not in the uniqueness regime"
            )));
        }
    }
    let th = advanced_thresholds(mu.vertex_count(), eps, budget);
    let d = parameter_distance(mu, nu)?;
    if d >= th.theta {
        return Err(Error::Gate(format!(
            "d_par = {d:.3e} is not below theta = {:.3e}",
            th.theta
        )));
    }
    Ok(BigSmallPartition::with_kappa(a, b, th.kappa))
}

/// Small-side independent sets of size at most `t` compatible with a big-side pinning,
/// with their weights under both models.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedConditional {
    /// Occupied big vertices.
    pub big_plus: Vec<usize>,
    pub truncation: usize,
    /// Small vertices with no occupied big neighbour.
    pub small_free: Vec<usize>,
    /// The enumerated independent sets (the empty set first).
    pub sets: Vec<Vec<usize>>,
    pub log_weights_mu: Vec<f64>,
    pub log_weights_nu: Vec<f64>,
    pub log_partition_mu: f64,
    pub log_partition_nu: f64,
}

impl TruncatedConditional {
    /// `ln prod_{v in x} lambda_nu(v) / lambda_mu(v)`.
    pub fn log_big_ratio(&self, mu: &HardcoreModel, nu: &HardcoreModel) -> f64 {
        compensated_sum(
            self.big_plus
                .iter()
                .map(|&v| nu.fugacity(v).ln() - mu.fugacity(v).ln()),
        )
    }

    /// The per-sample ratio `prod(lambda_nu / lambda_mu) * Z_nu(t) / Z_mu(t)` averaged by [`tilde_ratio`].
    pub fn ratio_term(&self, mu: &HardcoreModel, nu: &HardcoreModel) -> f64 {
        (self.log_big_ratio(mu, nu) + self.log_partition_nu - self.log_partition_mu).exp()
    }

    /// `1/2 sum_y |rho * w_nu(y) / ratio - w_mu(y)| / Z_mu(t)` with `rho` the big-side fugacity ratio.
    pub fn f_hat(&self, mu: &HardcoreModel, nu: &HardcoreModel, ratio: f64) -> f64 {
        let scale = self.log_big_ratio(mu, nu) - ratio.ln() - self.log_partition_mu;
        let terms = self
            .log_weights_mu
            .iter()
            .zip(&self.log_weights_nu)
            .map(|(&a, &b)| ((scale + b).exp() - (a - self.log_partition_mu).exp()).abs());
        0.5 * compensated_sum(terms)
    }
}

/// Enumerates the small side for the big-side pinning whose occupied vertices are `big_plus`.
pub fn truncated_conditional(
    mu: &HardcoreModel,
    nu: &HardcoreModel,
    part: &BigSmallPartition,
    big_plus: &[usize],
    t: usize,
) -> Result<TruncatedConditional> {
    let g = mu.graph();
    let n = g.vertex_count();
    if let Some(&v) = big_plus.iter().find(|&&v| v >= n || !part.is_big(v)) {
        return Err(Error::InvalidPin(format!("vertex {v} is not a big vertex")));
    }
    if !g.is_independent(big_plus) {
        return Err(Error::InvalidPin(
            "occupied big vertices are not independent".into(),
        ));
    }
    let mut big_plus = big_plus.to_vec();
    big_plus.sort_unstable();
    big_plus.dedup();
    let small_free: Vec<usize> = part
        .small
        .iter()
        .copied()
        .filter(|&v| {
            g.neighbors(v)
                .iter()
                .all(|u| big_plus.binary_search(u).is_err())
        })
        .filter(|&v| mu.fugacity(v) > 0.0 || nu.fugacity(v) > 0.0)
        .collect();
    let mut sets = Vec::new();
    let mut current = Vec::new();
    collect_sets(g, &small_free, 0, t, &mut current, &mut sets);
    let log_weight =
        |m: &HardcoreModel, set: &[usize]| compensated_sum(set.iter().map(|&v| m.fugacity(v).ln()));
    let log_weights_mu: Vec<f64> = sets.iter().map(|s| log_weight(mu, s)).collect();
    let log_weights_nu: Vec<f64> = sets.iter().map(|s| log_weight(nu, s)).collect();
    Ok(TruncatedConditional {
        log_partition_mu: log_sum_exp(&log_weights_mu),
        log_partition_nu: log_sum_exp(&log_weights_nu),
        big_plus,
        truncation: t,
        small_free,
        sets,
        log_weights_mu,
        log_weights_nu,
    })
}

fn collect_sets(
    g: &crate::graph::Graph,
    candidates: &[usize],
    start: usize,
    budget: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    out.push(current.clone());
    if budget == 0 {
        return;
    }
    for i in start..candidates.len() {
        let v = candidates[i];
        if current.iter().all(|&u| !g.has_edge(u, v)) {
            current.push(v);
            collect_sets(g, candidates, i + 1, budget - 1, current, out);
            current.pop();
        }
    }
}

/// `f_hat(x)` for the big-side pinning `big_plus`, given an estimate `ratio` of `Z_nu / Z_mu`.
pub fn f_hat(
    mu: &HardcoreModel,
    nu: &HardcoreModel,
    part: &BigSmallPartition,
    t: usize,
    ratio: f64,
    big_plus: &[usize],
) -> Result<f64> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ratio estimate must be positive, got {ratio}"
        )));
    }
    Ok(truncated_conditional(mu, nu, part, big_plus, t)?.f_hat(mu, nu, ratio))
}

/// Output of [`tilde_ratio`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioSummary {
    /// Estimate of `Z_nu / Z_mu`.
    pub value: f64,
    pub draws: usize,
    /// Distinct big-side configurations seen.
    pub distinct: usize,
}

/// Estimates `Z_nu / Z_mu` by averaging the big-side ratio term over `x ~ mu_B`.
///
/// Uses `ceil(c_T (n^3 + n / kappa) / eps^2)` draws from a sampler at accuracy `1 / (1000 T')`.
pub fn tilde_ratio<R: Rng + ?Sized>(
    mu: &HardcoreModel,
    nu: &HardcoreModel,
    part: &BigSmallPartition,
    t: usize,
    eps: f64,
    budget: &EstimatorBudget,
    warnings: &mut Vec<String>,
    rng: &mut R,
) -> Result<RatioSummary> {
    check_epsilon(eps)?;
    let n = mu.graph().vertex_count();
    let draws = budget.draws(
        advanced_draws(n, part.kappa, eps, budget.sample_multiplier),
        "ratio estimate",
        warnings,
    );
    let model: SpinSystem = mu.clone().into();
    let sampler = Sampler::new(
        &model,
        &Pinning::free(n),
        1.0 / (1000.0 * draws as f64),
        &budget.sampler,
    )?;
    let xs = par_draws(rng, draws, |r, _| part.big_plus(&sampler.draw(r)));
    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut terms = Vec::with_capacity(draws);
    for x in xs {
        let q = match cache.get(&x) {
            Some(&q) => q,
            None => {
                let q = truncated_conditional(mu, nu, part, &x, t)?.ratio_term(mu, nu);
                cache.insert(x, q);
                q
            }
        };
        terms.push(q);
    }
    Ok(RatioSummary {
        value: compensated_sum(terms) / draws as f64,
        draws,
        distinct: cache.len(),
    })
}

/// Nominal draw count `c_T (n^3 + n / kappa) / eps^2` of [`tilde_ratio`] and of the main average.
pub fn advanced_draws(n: usize, kappa: f64, eps: f64, sample_multiplier: f64) -> f64 {
    let n = n as f64;
    sample_multiplier * (n.powi(3) + n / kappa) / (eps * eps)
}

/// Estimates `d_TV(mu, nu)` within relative error `eps` for a very close hardcore pair.
pub fn advanced_relative_tv<R: Rng + ?Sized>(
    mu: &SpinSystem,
    nu: &SpinSystem,
    eps: f64,
    budget: &EstimatorBudget,
    rng: &mut R,
) -> Result<EstimateReport> {
    check_epsilon(eps)?;
    let (a, b) = hardcore_pair(mu, nu)?;
    let n = mu.vertex_count();
    let mut report = EstimateReport::new(0.0, ErrorKind::Relative, Branch::Advanced, eps);
    let d = parameter_distance(mu, nu)?;
    report.d_par = Some(d);
    if n == 0 {
        return Ok(report);
    }
    let th = advanced_thresholds(n, eps, budget);
    report.theta = Some(th.theta);
    let part = partition_big_small(mu, nu, eps, budget)?;
    let t = budget.truncation.min(part.small.len());
    let limit = 1.0 / (10.0 * n as f64);
    let eta = eta_truncation_bound(th.kappa, t, n);
    let mut violations = Vec::new();
    if eta > eps / 200.0 {
        violations.push(format!("eta(kappa, t) = {eta:.3e} exceeds eps / 200"));
    }
    if th.kappa + th.theta >= limit {
        violations.push(format!(
            "kappa + theta = {:.3e} is not below 1 / (10 n)",
            th.kappa + th.theta
        ));
    }
    if th.theta / th.kappa >= limit {
        violations.push(format!(
            "theta / kappa = {:.3e} is not below 1 / (10 n)",
            th.theta / th.kappa
        ));
    }
    if budget.paper_strict && !th.overridden {
        if let Some(first) = violations.into_iter().next() {
            return Err(Error::Gate(first));
        }
    } else {
        report
            .warnings
            .extend(violations.into_iter().map(|v| format!("gate relaxed: {v}")));
    }
    let ratio = tilde_ratio(a, b, &part, t, eps, budget, &mut report.warnings, rng)?;
    let draws = budget.draws(
        advanced_draws(n, th.kappa, eps, budget.sample_multiplier),
        "advanced",
        &mut report.warnings,
    );
    let sampler = Sampler::new(
        mu,
        &Pinning::free(n),
        1.0 / (100.0 * draws as f64),
        &budget.sampler,
    )?;
    let xs = par_draws(rng, draws, |r, _| part.big_plus(&sampler.draw(r)));
    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut values = Vec::with_capacity(draws);
    for x in xs {
        let f = match cache.get(&x) {
            Some(&f) => f,
            None => {
                let f = truncated_conditional(a, b, &part, &x, t)?.f_hat(a, b, ratio.value);
                cache.insert(x, f);
                f
            }
        };
        values.push(f);
    }
    report.estimate = compensated_sum(values) / draws as f64;
    report.samples = (draws + ratio.draws) as u64;
    Ok(report)
}

/// Exact small-side quantities for one big-side configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallSideQuantities {
    pub big_plus: Vec<usize>,
    /// `Z^x_{S,mu}`: total small-side weight compatible with `x`, big-side factor removed.
    pub z_mu: f64,
    pub z_nu: f64,
    /// `nu_B(x) / mu_B(x)`.
    pub marginal_ratio: f64,
    /// `d_TV(mu_S^x, nu_S^x)`.
    pub small_tv: f64,
    /// `mu_B(x)`.
    pub mu_probability: f64,
    /// Exact `f(x)`.
    pub f: f64,
}

struct Group {
    members: Vec<(u64, f64, f64)>,
}

/// Groups all independent sets by their big-side part, with both models' weights.
fn group_by_big_side(
    mu: &HardcoreModel,
    nu: &HardcoreModel,
    part: &BigSmallPartition,
    cap: usize,
) -> Result<(Vec<(u64, Group)>, f64, f64)> {
    let g = mu.graph();
    let support = ExactDistribution::of(&HardcoreModel::uniform(g.clone(), 1.0)?.into(), cap)?;
    let weight = |m: &HardcoreModel, mask: u64| -> f64 {
        (0..g.vertex_count())
            .filter(|v| mask >> v & 1 == 1)
            .map(|v| m.fugacity(v))
            .product()
    };
    let big_mask = part.big.iter().fold(0u64, |m, &v| m | 1 << v);
    let mut groups: Vec<(u64, Group)> = Vec::new();
    let mut index: HashMap<u64, usize> = HashMap::new();
    let (mut z_mu, mut z_nu) = (Vec::new(), Vec::new());
    for &mask in support.masks() {
        let (a, b) = (weight(mu, mask), weight(nu, mask));
        if a == 0.0 && b == 0.0 {
            continue;
        }
        z_mu.push(a);
        z_nu.push(b);
        let key = mask & big_mask;
        let i = *index.entry(key).or_insert_with(|| {
            groups.push((
                key,
                Group {
                    members: Vec::new(),
                },
            ));
            groups.len() - 1
        });
        groups[i].1.members.push((mask, a, b));
    }
    Ok((groups, compensated_sum(z_mu), compensated_sum(z_nu)))
}

fn mask_vertices(mask: u64) -> Vec<usize> {
    (0..64).filter(|v| mask >> v & 1 == 1).collect()
}

/// Exact `f_t(x)` by brute force over all independent sets (`truncation = None` gives `f(x)`).
///
/// `f_t(x) = 1/2 sum |nu(x, y) - mu(x, y)| / mu_B(x)` over small-side parts `y` with at most `t` occupied vertices.
pub fn exact_f(
    mu: &HardcoreModel,
    nu: &HardcoreModel,
    part: &BigSmallPartition,
    big_plus: &[usize],
    truncation: Option<usize>,
    cap: usize,
) -> Result<f64> {
    let key = big_plus.iter().fold(0u64, |m, &v| m | 1 << v);
    let (groups, z_mu, z_nu) = group_by_big_side(mu, nu, part, cap)?;
    let group = groups
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, g)| g)
        .ok_or_else(|| Error::InvalidPin("big-side configuration has zero weight".into()))?;
    let mu_b = compensated_sum(group.members.iter().map(|m| m.1 / z_mu));
    if mu_b == 0.0 {
        return Err(Error::InvalidPin(
            "big-side configuration has zero probability under mu".into(),
        ));
    }
    let limit = truncation.unwrap_or(usize::MAX);
    let terms = group
        .members
        .iter()
        .filter(|(mask, _, _)| ((mask & !key).count_ones() as usize) <= limit)
        .map(|&(_, a, b)| (b / z_nu - a / z_mu).abs());
    Ok(0.5 * compensated_sum(terms) / mu_b)
}

/// Exact small-side quantities for every big-side configuration of positive `mu`-probability.
pub fn exact_small_side(
    mu: &HardcoreModel,
    nu: &HardcoreModel,
    part: &BigSmallPartition,
    cap: usize,
) -> Result<Vec<SmallSideQuantities>> {
    let (groups, z_mu, z_nu) = group_by_big_side(mu, nu, part, cap)?;
    let mut out = Vec::with_capacity(groups.len());
    for (key, group) in groups {
        let big_plus = mask_vertices(key);
        let big_weight =
            |m: &HardcoreModel| -> f64 { big_plus.iter().map(|&v| m.fugacity(v)).product() };
        let sum_mu = compensated_sum(group.members.iter().map(|m| m.1));
        let sum_nu = compensated_sum(group.members.iter().map(|m| m.2));
        if sum_mu == 0.0 {
            continue;
        }
        let mu_b = sum_mu / z_mu;
        let nu_b = sum_nu / z_nu;
        let small_tv = 0.5
            * compensated_sum(
                group
                    .members
                    .iter()
                    .map(|&(_, a, b)| (a / sum_mu - b / sum_nu).abs()),
            );
        let f =
            0.5 * compensated_sum(
                group
                    .members
                    .iter()
                    .map(|&(_, a, b)| (b / z_nu - a / z_mu).abs()),
            ) / mu_b;
        out.push(SmallSideQuantities {
            z_mu: sum_mu / big_weight(mu),
            z_nu: sum_nu / big_weight(nu),
            marginal_ratio: nu_b / mu_b,
            small_tv,
            mu_probability: mu_b,
            f,
            big_plus,
        });
    }
    Ok(out)
}
