//! Relative-error estimation through the likelihood ratio `W = w_nu / w_mu`.
//!
//! With `s ~ mu`, `E[W] = Z_nu / Z_mu` and
//! `d_TV(mu, nu) = (Z_mu / (2 Z_nu)) * E|E[W] - W|`. When `sd(W) <= K * d_TV` and
//! `E[W] >= 1 / L`, averaging `|W_i - mean(W)|` over `O(L^2 K^2 / eps^2)` draws yields a
//! relative approximation.

use rand::Rng;
use serde::Serialize;

use super::{check_epsilon, Branch, ErrorKind, EstimateReport, EstimatorBudget};
use crate::counter::conditional_count;
use crate::error::{Error, Result};
use crate::model::{parameter_distance, ModelKind, Pinning, SpinSystem};
use crate::numeric::compensated_sum;
use crate::rng::par_draws;
use crate::sampler::Sampler;

/// Constants `K` and `L` of the variance condition, with the distance threshold that guarantees them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetaConditionParams {
    /// Bound on `sd(W) / d_TV`.
    pub k: f64,
    /// Bound on `1 / E[W]`.
    pub l: f64,
    /// Largest `d_par` for which the constants are guaranteed.
    pub theta: f64,
    pub d_par: f64,
    pub holds: bool,
    /// Why the condition is not guaranteed, if it is not.
    pub reason: Option<String>,
}

/// Computes `K`, `L` and the threshold `theta` for a soft pair with marginal bound `b`
/// and lower-bound constant `c` (`d_TV >= c * d_par`).
///
/// Hardcore: `theta = b / (2 (1 - b) n)`, `K = 4 n / (b c)`. Ising:
/// `theta = 1 / (2 (n + 3 m))`, `K = 4 (n + m) / c`. Both use `L = 2`.
pub fn meta_condition_params(
    mu: &SpinSystem,
    nu: &SpinSystem,
    b: f64,
    c: f64,
) -> Result<MetaConditionParams> {
    if !(mu.is_soft() && nu.is_soft()) {
        return Err(Error::MustPreprocess(
            "the variance condition needs a soft pair".into(),
        ));
    }
    if !(b > 0.0 && b <= 1.0 && c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < b <= 1 and c > 0, got b = {b}, c = {c}"
        )));
    }
    let d_par = parameter_distance(mu, nu)?;
    let n = mu.vertex_count() as f64;
    let m = mu.graph().edge_count() as f64;
    let (k, theta) = match mu.kind() {
        ModelKind::Hardcore => {
            let theta = if b >= 1.0 {
                f64::INFINITY
            } else {
                b / (2.0 * (1.0 - b) * n)
            };
            (4.0 * n / (b * c), theta)
        }
        ModelKind::Ising => (4.0 * (n + m) / c, 1.0 / (2.0 * (n + 3.0 * m))),
    };
    let holds = d_par <= theta;
    let reason = (!holds).then(|| format!("d_par = {d_par:.3e} exceeds theta = {theta:.3e}"));
    Ok(MetaConditionParams {
        k: k.max(1.0),
        l: 2.0,
        theta,
        d_par,
        holds,
        reason,
    })
}

/// Nominal draw count `10^4 L^2 K^2 / eps^2` of [`basic_relative_tv`].
pub fn basic_draws(params: &MetaConditionParams, eps: f64) -> f64 {
    1e4 * (params.l * params.k).powi(2) / (eps * eps)
}

/// Estimates `d_TV(mu, nu)` within relative error `eps` for a pair satisfying the variance condition.
///
/// Uses `T = ceil(10^4 L^2 K^2 / eps^2)` draws (subject to the budget's scale and cap)
/// from a sampler at accuracy `1 / (100 T)` and partition functions at accuracy `eps / 4`.
pub fn basic_relative_tv<R: Rng + ?Sized>(
    mu: &SpinSystem,
    nu: &SpinSystem,
    eps: f64,
    params: &MetaConditionParams,
    budget: &EstimatorBudget,
    rng: &mut R,
) -> Result<EstimateReport> {
    check_epsilon(eps)?;
    mu.ensure_comparable(nu)?;
    if !params.holds {
        return Err(Error::Gate(
            params
                .reason
                .clone()
                .unwrap_or_else(|| "variance condition not established".into()),
        ));
    }
    if !(mu.is_soft() && nu.is_soft()) {
        return Err(Error::MustPreprocess(
            "the basic estimator needs a soft pair".into(),
        ));
    }
    let n = mu.vertex_count();
    let mut report = EstimateReport::new(0.0, ErrorKind::Relative, Branch::BasicRelative, eps);
    report.d_par = Some(params.d_par);
    report.theta = Some(params.theta);
    if n == 0 {
        return Ok(report);
    }
    let draws = budget.draws(
        basic_draws(params, eps),
        "basic relative",
        &mut report.warnings,
    );
    let free = Pinning::free(n);
    let z_mu = conditional_count(mu, &free, eps / 4.0, &budget.counter, &budget.sampler, rng)?
        .log_partition;
    let z_nu = conditional_count(nu, &free, eps / 4.0, &budget.counter, &budget.sampler, rng)?
        .log_partition;
    let sampler = Sampler::new(mu, &free, 1.0 / (100.0 * draws as f64), &budget.sampler)?;
    let w: Vec<f64> = par_draws(rng, draws, |r, _| {
        let s = sampler.draw(r);
        let lw_mu = mu.log_weight_of(s.spins());
        if lw_mu == f64::NEG_INFINITY {
            0.0
        } else {
            (nu.log_weight_of(s.spins()) - lw_mu).exp()
        }
    });
    let mean = compensated_sum(w.iter().copied()) / draws as f64;
    let deviation = compensated_sum(w.iter().map(|x| (x - mean).abs())) / draws as f64;
    report.estimate = 0.5 * (z_mu - z_nu).exp() * deviation;
    report.samples = draws as u64;
    report.counter_calls = 2;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_tv;
    use crate::graph::Graph;
    use crate::model::{Field, HardcoreModel, IsingModel};
    use crate::rng::rng_from_seed;

    #[test]
    fn formula_values() {
        let g = Graph::path(10);
        let mu: SpinSystem = HardcoreModel::uniform(g.clone(), 1.0).unwrap().into();
        let b = 1.0 / 3.0;
        let p = meta_condition_params(&mu, &mu, b, b.powi(3)).unwrap();
        assert!((p.k - 3240.0).abs() < 1e-9);
        assert_eq!(p.l, 2.0);
        assert!(p.holds);
        let c4 = Graph::cycle(4).unwrap();
        let ising: SpinSystem = IsingModel::uniform(c4, 0.1, vec![Field::Finite(0.0); 4])
            .unwrap()
            .into();
        let p = meta_condition_params(&ising, &ising, 0.5, 0.125).unwrap();
        assert!((p.k - 256.0).abs() < 1e-9);
        assert!((p.theta - 1.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn far_pair_fails_the_gate() {
        let g = Graph::path(4);
        let mu: SpinSystem = HardcoreModel::uniform(g.clone(), 1.0).unwrap().into();
        let nu: SpinSystem = HardcoreModel::uniform(g, 1.3).unwrap().into();
        let p = meta_condition_params(&mu, &nu, 0.3, 0.027).unwrap();
        assert!(!p.holds && p.reason.is_some());
        let mut rng = rng_from_seed(0);
        let r = basic_relative_tv(&mu, &nu, 0.2, &p, &EstimatorBudget::default(), &mut rng);
        assert!(matches!(r, Err(Error::Gate(_))));
    }

    #[test]
    fn identical_pair_is_exactly_zero() {
        let m: SpinSystem = HardcoreModel::uniform(Graph::cycle(6).unwrap(), 0.8)
            .unwrap()
            .into();
        let p = meta_condition_params(&m, &m, 0.3, 0.027).unwrap();
        let mut rng = rng_from_seed(0);
        let r = basic_relative_tv(&m, &m, 0.2, &p, &EstimatorBudget::default(), &mut rng).unwrap();
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn single_vertex_closed_form() {
        let g = Graph::empty(1);
        let mu: SpinSystem = HardcoreModel::uniform(g.clone(), 1.0).unwrap().into();
        let nu: SpinSystem = HardcoreModel::uniform(g, 1.01).unwrap().into();
        let truth = 0.01 / 4.02;
        assert!((exact_tv(&mu, &nu, 20).unwrap() - truth).abs() < 1e-15);
        let p = meta_condition_params(&mu, &nu, 1.0 / 2.01, (1.0f64 / 2.01).powi(3)).unwrap();
        let mut rng = rng_from_seed(6);
        let r =
            basic_relative_tv(&mu, &nu, 0.2, &p, &EstimatorBudget::default(), &mut rng).unwrap();
        assert!((r.estimate / truth - 1.0).abs() <= 0.2, "{}", r.estimate);
    }
}
