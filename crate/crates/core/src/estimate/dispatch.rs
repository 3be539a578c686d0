//! Choosing and running an estimator for a pair.

use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use super::{
    additive_tv, advanced_relative_tv, advanced_thresholds, basic_relative_tv,
    meta_condition_params, Branch, ErrorKind, EstimateReport, EstimatorBudget, MetaConditionParams,
    Mode,
};
use crate::error::{Error, Result};
use crate::exact::exact_tv;
use crate::model::{
    parameter_distance, preprocess, regime_report, tv_lower_bound_constant, ModelKind,
    Preprocessed, SpinSystem,
};
use crate::numeric::median;

/// The dispatcher's decision for a pair, computed without sampling.
#[derive(Debug, Clone, Serialize)]
pub struct DispatchPlan {
    pub branch: Branch,
    pub error_kind: ErrorKind,
    /// Accuracy handed to the chosen estimator.
    pub accuracy: f64,
    /// Known answer for the exact, empty and resolved branches.
    pub known: Option<f64>,
    pub d_par: Option<f64>,
    pub theta: Option<f64>,
    pub marginal_bound: Option<f64>,
    pub tv_lower_bound_constant: Option<f64>,
    pub mixing_guaranteed: Option<bool>,
    pub basic_params: Option<MetaConditionParams>,
    /// The soft pair the estimator runs on (the input pair for the additive branches).
    #[serde(skip)]
    pub pair: Option<(SpinSystem, SpinSystem)>,
}

impl DispatchPlan {
    fn known(branch: Branch, value: f64, eps: f64) -> Self {
        Self {
            branch,
            error_kind: ErrorKind::Relative,
            accuracy: eps,
            known: Some(value),
            d_par: None,
            theta: None,
            marginal_bound: None,
            tv_lower_bound_constant: None,
            mixing_guaranteed: None,
            basic_params: None,
            pair: None,
        }
    }

    fn run(
        branch: Branch,
        error_kind: ErrorKind,
        accuracy: f64,
        mu: &SpinSystem,
        nu: &SpinSystem,
    ) -> Self {
        Self {
            error_kind,
            accuracy,
            known: None,
            pair: Some((mu.clone(), nu.clone())),
            ..Self::known(branch, 0.0, accuracy)
        }
    }
}

/// Number of runs whose median fails with probability at most `delta`: `ceil(18 ln(1 / delta))`, made odd.
pub fn boost_repeats_for(delta: f64) -> usize {
    ((18.0 * (1.0 / delta).ln()).ceil().max(1.0) as usize) | 1
}

/// Preprocesses the pair, evaluates the gates and picks a branch.
pub fn plan_dispatch(
    mu: &SpinSystem,
    nu: &SpinSystem,
    budget: &EstimatorBudget,
) -> Result<DispatchPlan> {
    budget.validate()?;
    mu.ensure_comparable(nu)?;
    let eps = budget.epsilon;
    let n = mu.vertex_count();
    if budget.mode == Mode::MarginalAdditive {
        return Err(Error::InvalidParameter(
            "marginal-additive mode needs a subset; call marginal_additive_tv".into(),
        ));
    }
    if n == 0 {
        return Ok(DispatchPlan::known(Branch::Empty, 0.0, eps));
    }
    if let Some(cap) = budget.exact_cap {
        if n <= cap {
            return Ok(DispatchPlan::known(
                Branch::Exact,
                exact_tv(mu, nu, cap)?,
                eps,
            ));
        }
    }
    let pair = match preprocess(mu, nu)? {
        Preprocessed::Resolved { tv, .. } => {
            return Ok(DispatchPlan::known(Branch::PreprocessResolved, tv, eps))
        }
        Preprocessed::BigGap { bound, .. } => {
            return match budget.mode {
                Mode::Additive => Ok(DispatchPlan::run(
                    Branch::Additive,
                    ErrorKind::Additive,
                    eps,
                    mu,
                    nu,
                )),
                Mode::Auto => {
                    let mut plan =
                        DispatchPlan::run(Branch::BigGap, ErrorKind::Relative, bound * eps, mu, nu);
                    plan.marginal_bound = Some(bound);
                    Ok(plan)
                }
                _ => Err(Error::Gate(
                    "the pair has a one-sided hard constraint; only additive estimators apply"
                        .into(),
                )),
            };
        }
        Preprocessed::Reduced(pair) => pair,
    };
    if budget.mode == Mode::Additive {
        return Ok(DispatchPlan::run(
            Branch::Additive,
            ErrorKind::Additive,
            eps,
            mu,
            nu,
        ));
    }
    let (rmu, rnu) = (&pair.mu, &pair.nu);
    if rmu.vertex_count() == 0 {
        return Ok(DispatchPlan::known(Branch::Exact, 0.0, eps));
    }
    let regime = regime_report(rmu)?.merge(&regime_report(rnu)?);
    let d = parameter_distance(rmu, rnu)?;
    let b = regime.marginal_bound;
    let c = tv_lower_bound_constant(rmu.kind(), &regime).ok();
    let basic_params = match (b, c) {
        (Some(b), Some(c)) => Some(meta_condition_params(rmu, rnu, b, c)?),
        _ => None,
    };
    let adv = advanced_thresholds(rmu.vertex_count(), eps, budget);
    let advanced_ok = rmu.kind() == ModelKind::Hardcore && regime.in_uniqueness() && d < adv.theta;
    let with_gates = |mut plan: DispatchPlan| {
        plan.d_par = Some(d);
        plan.marginal_bound = b;
        plan.tv_lower_bound_constant = c;
        plan.mixing_guaranteed = Some(regime.mixing_guaranteed());
        plan.theta = basic_params.as_ref().map(|p| p.theta);
        plan.basic_params = basic_params.clone();
        plan
    };
    let needs_params = || {
        basic_params.clone().ok_or_else(|| {
            Error::NoLowerBound(
                regime
                    .marginal_bound_error
                    .clone()
                    .unwrap_or_else(|| "no lower-bound constant applies to the pair".into()),
            )
        })
    };
    match budget.mode {
        Mode::Advanced => {
            let mut plan = with_gates(DispatchPlan::run(
                Branch::Advanced,
                ErrorKind::Relative,
                eps,
                rmu,
                rnu,
            ));
            plan.theta = Some(adv.theta);
            Ok(plan)
        }
        Mode::BasicRelative => {
            let params = needs_params()?;
            if !params.holds {
                return Err(Error::Gate(params.reason.unwrap_or_default()));
            }
            Ok(with_gates(DispatchPlan::run(
                Branch::BasicRelative,
                ErrorKind::Relative,
                eps,
                rmu,
                rnu,
            )))
        }
        _ => {
            if advanced_ok && rmu.vertex_count() > budget.sampler.exact_fallback_cap {
                let mut plan = with_gates(DispatchPlan::run(
                    Branch::Advanced,
                    ErrorKind::Relative,
                    eps,
                    rmu,
                    rnu,
                ));
                plan.theta = Some(adv.theta);
                return Ok(plan);
            }
            let params = needs_params()?;
            if params.holds {
                Ok(with_gates(DispatchPlan::run(
                    Branch::BasicRelative,
                    ErrorKind::Relative,
                    eps,
                    rmu,
                    rnu,
                )))
            } else {
                let c = c.expect("params exist only with a constant");
                let accuracy = (c * d).min(1.0) * eps;
                Ok(with_gates(DispatchPlan::run(
                    Branch::AdditiveGated,
                    ErrorKind::Relative,
                    accuracy,
                    rmu,
                    rnu,
                )))
            }
        }
    }
}

/// Estimates `d_TV(mu, nu)` according to the budget, boosting by a median when requested.
pub fn dispatch_tv<R: Rng + ?Sized>(
    mu: &SpinSystem,
    nu: &SpinSystem,
    budget: &EstimatorBudget,
    rng: &mut R,
) -> Result<EstimateReport> {
    let start = Instant::now();
    let plan = plan_dispatch(mu, nu, budget)?;
    let mut report = match (plan.known, &plan.pair) {
        (Some(value), _) => EstimateReport::new(value, plan.error_kind, plan.branch, plan.accuracy),
        (None, Some((a, b))) => {
            let repeats = budget.failure_probability.map_or(1, boost_repeats_for);
            let runs = (0..repeats)
                .map(|_| run_branch(&plan, a, b, budget, rng))
                .collect::<Result<Vec<_>>>()?;
            combine(runs)
        }
        (None, None) => unreachable!("plans without a known value carry a pair"),
    };
    report.branch = plan.branch;
    report.error_kind = plan.error_kind;
    report.d_par = plan.d_par.or(report.d_par);
    report.theta = plan.theta.or(report.theta);
    report.marginal_bound = plan.marginal_bound;
    report.tv_lower_bound_constant = plan.tv_lower_bound_constant;
    report.mixing_guaranteed = plan.mixing_guaranteed;
    if plan.mixing_guaranteed == Some(false) {
        report
            .warnings
            .push("rapid mixing of Glauber dynamics is not guaranteed for this pair".into());
    }
    report.elapsed_seconds = Some(start.elapsed().as_secs_f64());
    Ok(report)
}

fn run_branch<R: Rng + ?Sized>(
    plan: &DispatchPlan,
    mu: &SpinSystem,
    nu: &SpinSystem,
    budget: &EstimatorBudget,
    rng: &mut R,
) -> Result<EstimateReport> {
    match plan.branch {
        Branch::Additive | Branch::BigGap | Branch::AdditiveGated => {
            additive_tv(mu, nu, plan.accuracy, budget, rng)
        }
        Branch::BasicRelative => {
            let params = plan
                .basic_params
                .as_ref()
                .expect("basic plans carry parameters");
            basic_relative_tv(mu, nu, plan.accuracy, params, budget, rng)
        }
        Branch::Advanced => advanced_relative_tv(mu, nu, plan.accuracy, budget, rng),
        other => unreachable!("branch {other} has a known value"),
    }
}

fn combine(runs: Vec<EstimateReport>) -> EstimateReport {
    let estimates: Vec<f64> = runs.iter().map(|r| r.estimate).collect();
    let mut first = runs[0].clone();
    first.estimate = median(&estimates);
    first.samples = runs.iter().map(|r| r.samples).sum();
    first.counter_calls = runs.iter().map(|r| r.counter_calls).sum();
    first.runs = runs.len();
    first
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::model::{Field, HardcoreModel, IsingModel};
    use crate::rng::rng_from_seed;

    #[test]
    fn opposite_infinities_resolve() {
        let g = Graph::path(3);
        let mu: SpinSystem = IsingModel::uniform(
            g.clone(),
            0.2,
            vec![Field::PosInf, Field::Finite(0.0), Field::Finite(0.0)],
        )
        .unwrap()
        .into();
        let nu: SpinSystem = IsingModel::uniform(
            g,
            0.2,
            vec![Field::NegInf, Field::Finite(0.0), Field::Finite(0.0)],
        )
        .unwrap()
        .into();
        let mut rng = rng_from_seed(0);
        let r = dispatch_tv(&mu, &nu, &EstimatorBudget::default(), &mut rng).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.branch, Branch::PreprocessResolved);
    }

    #[test]
    fn far_pair_takes_the_gated_additive_branch() {
        let g = Graph::path(4);
        let mu: SpinSystem = HardcoreModel::uniform(g.clone(), 1.0).unwrap().into();
        let nu: SpinSystem = HardcoreModel::uniform(g, 1.3).unwrap().into();
        let plan = plan_dispatch(&mu, &nu, &EstimatorBudget::default()).unwrap();
        assert_eq!(plan.branch, Branch::AdditiveGated);
        let c = plan.tv_lower_bound_constant.unwrap();
        assert!((plan.accuracy - c * 0.3 * 0.1).abs() < 1e-12);
    }

    #[test]
    fn tiny_distance_on_thirty_vertices_goes_advanced() {
        let g = Graph::cycle(30).unwrap();
        let mu: SpinSystem = HardcoreModel::uniform(g.clone(), 1.0).unwrap().into();
        let nu: SpinSystem = HardcoreModel::uniform(g, 1.0 + 1e-9).unwrap().into();
        let plan = plan_dispatch(&mu, &nu, &EstimatorBudget::default()).unwrap();
        assert_eq!(plan.branch, Branch::Advanced);
    }

    #[test]
    fn close_small_pair_goes_basic() {
        let g = Graph::path(4);
        let mu: SpinSystem = HardcoreModel::uniform(g.clone(), 1.0).unwrap().into();
        let nu: SpinSystem = HardcoreModel::uniform(g, 1.001).unwrap().into();
        let plan = plan_dispatch(&mu, &nu, &EstimatorBudget::default()).unwrap();
        assert_eq!(plan.branch, Branch::BasicRelative);
    }

    #[test]
    fn exact_branch_and_empty_graph() {
        let g = Graph::path(3);
        let mu: SpinSystem = HardcoreModel::uniform(g.clone(), 1.0).unwrap().into();
        let nu: SpinSystem = HardcoreModel::uniform(g, 2.0).unwrap().into();
        let budget = EstimatorBudget {
            exact_cap: Some(20),
            ..Default::default()
        };
        let mut rng = rng_from_seed(0);
        let r = dispatch_tv(&mu, &nu, &budget, &mut rng).unwrap();
        assert_eq!(r.branch, Branch::Exact);
        assert!((r.estimate - exact_tv(&mu, &nu, 20).unwrap()).abs() < 1e-15);
        let e: SpinSystem = HardcoreModel::uniform(Graph::empty(0), 1.0).unwrap().into();
        assert_eq!(
            dispatch_tv(&e, &e, &EstimatorBudget::default(), &mut rng)
                .unwrap()
                .estimate,
            0.0
        );
    }

    #[test]
    fn boosting_uses_an_odd_number_of_runs() {
        assert_eq!(boost_repeats_for(0.5), 13);
        assert_eq!(boost_repeats_for(0.01) % 2, 1);
        let g = Graph::path(3);
        let mu: SpinSystem = HardcoreModel::uniform(g.clone(), 1.0).unwrap().into();
        let nu: SpinSystem = HardcoreModel::uniform(g, 1.001).unwrap().into();
        let budget = EstimatorBudget {
            failure_probability: Some(0.5),
            max_draws: Some(1000),
            ..Default::default()
        };
        let mut rng = rng_from_seed(0);
        let r = dispatch_tv(&mu, &nu, &budget, &mut rng).unwrap();
        assert_eq!(r.runs, 13);
    }
}
