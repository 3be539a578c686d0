//! Repeated-trial coverage checks of the randomized estimators against exact values.

use gibbs_tv::counter::Schedule;
use gibbs_tv::estimate::{
    additive_tv, advanced_relative_tv, basic_relative_tv, marginal_additive_tv,
    meta_condition_params,
};
use gibbs_tv::exact::{exact_marginal_tv, exact_partition, exact_tv, ExactDistribution};
use gibbs_tv::generators::{perturb_ising, random_graph, random_hardcore, random_ising};
use gibbs_tv::model::{
    regime_report, tv_lower_bound_constant, Field, HardcoreModel, IsingModel, ModelKind, SpinSystem,
};
use gibbs_tv::numeric::compensated_sum;
use gibbs_tv::{approx_count, rng_from_seed, CounterConfig, EstimatorBudget, Graph, SamplerConfig};
use rand::seq::index::sample;
use rand::Rng;

use super::{random_soft_pair, split_hardcore_pair, tally, CaseRow, Context, Findings};

const CAP: usize = 20;
const RUNS: usize = 100;

/// Tallies `RUNS` runs per pair, requiring at least `needed` successes on every pair.
struct Coverage {
    needed: usize,
    rows: Vec<CaseRow>,
    failures: Vec<String>,
    worst: usize,
    pairs: usize,
}

impl Coverage {
    fn new(needed: usize) -> Self {
        Self {
            needed,
            rows: Vec::new(),
            failures: Vec::new(),
            worst: RUNS,
            pairs: 0,
        }
    }

    fn record(&mut self, label: &str, seed: u64, rows: Vec<CaseRow>) {
        let hits = rows.iter().filter(|r| r.pass).count();
        self.pairs += 1;
        self.worst = self.worst.min(hits);
        if hits < self.needed {
            self.failures.push(format!(
                "{label} (seed {seed}): {} runs within tolerance",
                tally(hits, rows.len())
            ));
        }
        self.rows.extend(rows);
    }

    fn finish(self, what: &str) -> Findings {
        Findings {
            passed: self.failures.is_empty(),
            summary: format!(
                "{what}: worst pair {} runs within tolerance over {} pairs (need {})",
                tally(self.worst, RUNS),
                self.pairs,
                self.needed
            ),
            failures: self.failures,
            rows: self.rows,
        }
    }
}

/// Ising pair with a hard constraint: vertex 0 is pinned `+` in `mu`, and also in `nu` if `both`.
fn hard_ising_pair(
    n: usize,
    both: bool,
    rng: &mut gibbs_tv::SimRng,
) -> anyhow::Result<(SpinSystem, SpinSystem)> {
    let g = random_graph(n, 0.5, 4, rng);
    let mu = random_ising(g, 1.0, 1.0, rng)?;
    let nu = perturb_ising(&mu, 0.5, rng)?;
    let pin = |m: &IsingModel, field: Field| -> anyhow::Result<SpinSystem> {
        let mut fields = m.fields().to_vec();
        fields[0] = field;
        Ok(IsingModel::new(m.graph().clone(), &m.coupling_triples(), fields)?.into())
    };
    let nu_field = if both { Field::PosInf } else { nu.field(0) };
    Ok((pin(&mu, Field::PosInf)?, pin(&nu, nu_field)?))
}

/// Additive estimators with the exact-fallback sampler at `eps = 0.05`: at least 85 of 100
/// runs within `0.05` on each of 20 pairs with `n <= 10`, for the full and the marginal estimator.
pub(super) fn additive_coverage(ctx: &Context) -> anyhow::Result<Findings> {
    const PAIRS: usize = 20;
    let eps = 0.05;
    let budget = EstimatorBudget::with_epsilon(eps);
    let mut full = Coverage::new(85);
    let mut marginal = Coverage::new(85);
    for i in 0..PAIRS {
        let (seed, mut rng) = ctx.case_rng(i);
        let n = rng.random_range(3..=10);
        let (mu, nu) = match i {
            18 => hard_ising_pair(n, true, &mut rng)?,
            19 => hard_ising_pair(n, false, &mut rng)?,
            _ => {
                let kind = if i % 2 == 0 {
                    ModelKind::Hardcore
                } else {
                    ModelKind::Ising
                };
                random_soft_pair(kind, n, rng.random_range(0.05..1.0), &mut rng)?
            }
        };
        let truth = exact_tv(&mu, &nu, CAP)?;
        let rows = (0..RUNS)
            .map(|r| {
                let report = additive_tv(&mu, &nu, eps, &budget, &mut rng)?;
                let ok = (report.estimate - truth).abs() <= eps;
                Ok(ctx.row(
                    format!("additive-{i}-run-{r}"),
                    seed,
                    report.samples,
                    report.estimate,
                    truth,
                    ok,
                ))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        full.record(&format!("additive pair {i}"), seed, rows);

        let (seed, mut rng) = ctx.case_rng(PAIRS + i);
        let n = rng.random_range(3..=10);
        let kind = if i % 2 == 0 {
            ModelKind::Ising
        } else {
            ModelKind::Hardcore
        };
        let (mu, nu) = random_soft_pair(kind, n, rng.random_range(0.05..1.0), &mut rng)?;
        let size = rng.random_range(1..=n.min(4));
        let mut subset = sample(&mut rng, n, size).into_vec();
        subset.sort_unstable();
        let truth = exact_marginal_tv(&mu, &nu, &subset, CAP)?;
        let rows = (0..RUNS)
            .map(|r| {
                let report = marginal_additive_tv(&mu, &nu, &subset, eps, &budget, &mut rng)?;
                let ok = (report.estimate - truth).abs() <= eps;
                Ok(ctx.row(
                    format!("marginal-{i}-run-{r}"),
                    seed,
                    report.samples,
                    report.estimate,
                    truth,
                    ok,
                ))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        marginal.record(&format!("marginal pair {i} subset {subset:?}"), seed, rows);
    }
    let full = full.finish("full");
    let marginal = marginal.finish("marginal");
    Ok(Findings {
        passed: full.passed && marginal.passed,
        summary: format!("{}; {}", full.summary, marginal.summary),
        failures: full.failures.into_iter().chain(marginal.failures).collect(),
        rows: full.rows.into_iter().chain(marginal.rows).collect(),
    })
}

/// Relative error of an estimate against a positive exact value.
fn relative_error(estimate: f64, truth: f64) -> f64 {
    (estimate - truth).abs() / truth
}

/// A pair whose distance is `fraction` of the variance threshold `theta` of `mu`.
fn close_pair(
    i: usize,
    fraction: f64,
    rng: &mut gibbs_tv::SimRng,
) -> anyhow::Result<(SpinSystem, SpinSystem)> {
    let n = rng.random_range(3..=8);
    let mu: SpinSystem = if i % 2 == 0 {
        random_hardcore(random_graph(n, 0.5, 3, rng), 0.3, 2.0, rng)?.into()
    } else {
        random_ising(random_graph(n, 0.5, 3, rng), 0.5, 0.5, rng)?.into()
    };
    let regime = regime_report(&mu)?;
    let b = regime.marginal_bound.expect("soft models have a bound");
    let theta =
        meta_condition_params(&mu, &mu, b, tv_lower_bound_constant(mu.kind(), &regime)?)?.theta;
    let target = fraction * theta;
    let nu: SpinSystem = match &mu {
        SpinSystem::Hardcore(m) => {
            let lambda = m
                .fugacities()
                .iter()
                .map(|&l| l + rng.random_range(-target..=target))
                .collect();
            m.with_fugacities(lambda)?.into()
        }
        SpinSystem::Ising(m) => perturb_ising(m, target, rng)?.into(),
    };
    Ok((mu, nu))
}

/// Basic relative estimator at `eps = 0.25` on 10 close pairs with `n <= 8`: at least 85 of
/// 100 runs within relative error `0.25` on each pair.
pub(super) fn basic_coverage(ctx: &Context) -> anyhow::Result<Findings> {
    const PAIRS: usize = 10;
    let eps = 0.25;
    let budget = EstimatorBudget::with_epsilon(eps);
    let mut coverage = Coverage::new(85);
    for i in 0..PAIRS {
        let (seed, mut rng) = ctx.case_rng(i);
        let (mu, nu) = close_pair(i, 0.3, &mut rng)?;
        let regime = regime_report(&mu)?.merge(&regime_report(&nu)?);
        let b = regime.marginal_bound.expect("soft pair");
        let params =
            meta_condition_params(&mu, &nu, b, tv_lower_bound_constant(mu.kind(), &regime)?)?;
        anyhow::ensure!(
            params.holds,
            "pair {i} misses the variance condition: {:?}",
            params.reason
        );
        let truth = exact_tv(&mu, &nu, CAP)?;
        let rows = (0..RUNS)
            .map(|r| {
                let report = basic_relative_tv(&mu, &nu, eps, &params, &budget, &mut rng)?;
                let ok = relative_error(report.estimate, truth) <= eps;
                Ok(ctx.row(
                    format!("basic-{i}-run-{r}"),
                    seed,
                    report.samples,
                    report.estimate,
                    truth,
                    ok,
                ))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        coverage.record(&format!("basic pair {i}"), seed, rows);
    }
    Ok(coverage.finish("basic"))
}

/// Advanced estimator at `eps = 0.25`, `t = 4`, with `kappa = 1 / (20 n)` and
/// `theta = 1 / (400 n^2)` set explicitly, on 10 hardcore pairs with `n <= 10`; the
/// first two differ only on vertices with fugacities below `kappa`.
pub(super) fn advanced_coverage(ctx: &Context) -> anyhow::Result<Findings> {
    const PAIRS: usize = 10;
    let eps = 0.25;
    let mut coverage = Coverage::new(85);
    for i in 0..PAIRS {
        let (seed, mut rng) = ctx.case_rng(i);
        let n = rng.random_range(6..=10);
        let nf = n as f64;
        let (kappa, theta) = (1.0 / (20.0 * nf), 1.0 / (400.0 * nf * nf));
        let g = random_graph(n, 0.4, 3, &mut rng);
        let distance = theta * rng.random_range(0.3..0.9);
        let (mu, nu) = split_hardcore_pair(g, kappa, distance, 0.5, i < 2, &mut rng)?;
        let budget = EstimatorBudget {
            epsilon: eps,
            kappa_override: Some(kappa),
            theta_override: Some(theta),
            truncation: 4,
            ..EstimatorBudget::default()
        };
        let truth = exact_tv(&mu, &nu, CAP)?;
        let rows = (0..RUNS)
            .map(|r| {
                let report = advanced_relative_tv(&mu, &nu, eps, &budget, &mut rng)?;
                let ok = relative_error(report.estimate, truth) <= eps;
                Ok(ctx.row(
                    format!("advanced-{i}-run-{r}"),
                    seed,
                    report.samples,
                    report.estimate,
                    truth,
                    ok,
                ))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        let label = if i < 2 {
            format!("advanced pair {i} (small-side change)")
        } else {
            format!("advanced pair {i}")
        };
        coverage.record(&label, seed, rows);
    }
    Ok(coverage.finish("advanced"))
}

/// Instances with `n <= 10` for the counting checks.
fn counting_instances() -> anyhow::Result<Vec<(&'static str, SpinSystem)>> {
    let mut rng = rng_from_seed(8);
    let hardcore_random = random_hardcore(random_graph(8, 0.5, 3, &mut rng), 0.2, 2.0, &mut rng)?;
    let ising_random = random_ising(random_graph(7, 0.6, 4, &mut rng), 0.5, 0.5, &mut rng)?;
    Ok(vec![
        (
            "hardcore-cycle-10",
            HardcoreModel::uniform(Graph::cycle(10)?, 1.0)?.into(),
        ),
        ("hardcore-random-8", hardcore_random.into()),
        (
            "ising-grid-3x3",
            IsingModel::uniform(Graph::grid(3, 3), 0.25, vec![Field::Finite(0.1); 9])?.into(),
        ),
        ("ising-random-7", ising_random.into()),
    ])
}

/// `approx_count` at `eps = 0.05` lands in `(1 +- 0.05) Z` in at least 97 of 100 runs per
/// instance, and the annealing schedule telescopes to `ln Z` within `1e-10` when every
/// level mean is computed exactly.
pub(super) fn counting_contract(ctx: &Context) -> anyhow::Result<Findings> {
    let eps = 0.05;
    let config = CounterConfig {
        exact_cap: 0,
        ..CounterConfig::default()
    };
    let sampler = SamplerConfig::default();
    let mut coverage = Coverage::new(97);
    let mut telescoping_failures = Vec::new();
    let mut telescoping_rows = Vec::new();
    for (i, (name, model)) in counting_instances()?.into_iter().enumerate() {
        let (seed, mut rng) = ctx.case_rng(i);
        let truth = exact_partition(&model, CAP)?;
        let rows = (0..RUNS)
            .map(|r| {
                let estimate = approx_count(&model, eps, &config, &sampler, &mut rng)?;
                let ratio = (estimate.log_partition - truth).exp();
                Ok(ctx.row(
                    format!("count-{name}-run-{r}"),
                    seed,
                    estimate.samples,
                    ratio,
                    1.0,
                    (ratio - 1.0).abs() <= eps,
                ))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        coverage.record(&format!("count {name}"), seed, rows);

        let schedule = Schedule::for_model(&model, config.levels_multiplier)?;
        let means = (1..=schedule.ratio_count())
            .map(|k| {
                let d = ExactDistribution::of(schedule.sampling_model(k), CAP)?;
                Ok(compensated_sum((0..d.len()).map(|j| {
                    d.probability(j) * schedule.ratio_variable(k, &d.configuration(j))
                })))
            })
            .collect::<gibbs_tv::Result<Vec<f64>>>()?;
        let telescoped = schedule.log_target(&means);
        let ok = (telescoped - truth).abs() <= 1e-10;
        if !ok {
            telescoping_failures.push(format!(
                "telescoping {name}: {telescoped} vs ln Z = {truth}"
            ));
        }
        telescoping_rows.push(ctx.row(format!("telescoping-{name}"), 0, 0, telescoped, truth, ok));
    }
    let mut findings = coverage.finish("annealing");
    findings.summary.push_str(&format!(
        "; telescoping exact on {}",
        tally(
            telescoping_rows.len() - telescoping_failures.len(),
            telescoping_rows.len()
        )
    ));
    findings.passed &= telescoping_failures.is_empty();
    findings.failures.extend(telescoping_failures);
    findings.rows.extend(telescoping_rows);
    Ok(findings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gibbs_tv::model::parameter_distance;

    #[test]
    fn close_pairs_meet_the_variance_condition() {
        let mut rng = rng_from_seed(1);
        for i in 0..6 {
            let (mu, nu) = close_pair(i, 0.3, &mut rng).unwrap();
            let regime = regime_report(&mu)
                .unwrap()
                .merge(&regime_report(&nu).unwrap());
            let c = tv_lower_bound_constant(mu.kind(), &regime).unwrap();
            let params =
                meta_condition_params(&mu, &nu, regime.marginal_bound.unwrap(), c).unwrap();
            assert!(params.holds, "{:?}", params.reason);
            assert!(parameter_distance(&mu, &nu).unwrap() > 0.0);
        }
    }
}
