//! Checks on the spread of the product estimators and on how configured budgets scale.

use gibbs_tv::counter::{empirical_second_moment, ratio_estimate};
use gibbs_tv::estimate::{additive_tv, advanced_relative_tv};
use gibbs_tv::exact::exact_partition;
use gibbs_tv::generators::{random_graph, random_hardcore};
use gibbs_tv::model::{HardcoreModel, Pinning, SpinSystem};
use gibbs_tv::{approx_count, CounterConfig, EstimatorBudget, Graph, Sampler, SamplerConfig};
use rand::Rng;

use super::{split_hardcore_pair, CaseRow, Context, Findings};

const CAP: usize = 20;

/// Ratio estimates for 10 close hardcore pairs at `eps = 0.1`: no interpolation level has
/// an empirical relative second moment above 2, and every estimate is within `eps`.
pub(super) fn second_moments(ctx: &Context) -> anyhow::Result<Findings> {
    const PAIRS: usize = 10;
    let eps = 0.1;
    let config = CounterConfig::default();
    let mut rows = Vec::with_capacity(PAIRS);
    let mut failures = Vec::new();
    for i in 0..PAIRS {
        let (seed, mut rng) = ctx.case_rng(i);
        let n = rng.random_range(4..=10);
        let mu = random_hardcore(random_graph(n, 0.5, 3, &mut rng), 0.2, 2.0, &mut rng)?;
        let spread = rng.random_range(0.01..0.3);
        let lambda = mu
            .fugacities()
            .iter()
            .map(|&l| l * (1.0 + rng.random_range(-spread..=spread)))
            .collect();
        let nu = mu.with_fugacities(lambda)?;
        let (mu, nu): (SpinSystem, SpinSystem) = (mu.into(), nu.into());
        let run = ratio_estimate(&mu, &nu, eps, &config, &SamplerConfig::default(), &mut rng)?;
        let moments = empirical_second_moment(&run, config.second_moment_threshold);
        let truth = (exact_partition(&nu, CAP)? - exact_partition(&mu, CAP)?).exp();
        let accurate = (run.estimate / truth - 1.0).abs() <= eps;
        if !moments.flagged.is_empty() || !accurate {
            failures.push(format!(
                "pair {i} (seed {seed}): flagged levels {:?}, estimate {:e} vs {truth:e}",
                moments.flagged, run.estimate
            ));
        }
        let pass = moments.flagged.is_empty() && accurate;
        rows.push(ctx.row(
            format!("second-moment-{i}"),
            seed,
            (run.draws * run.levels) as u64,
            run.estimate,
            truth,
            pass,
        ));
    }
    Ok(Findings {
        passed: failures.is_empty(),
        summary: format!("{} of {PAIRS} pairs flagged or inaccurate", failures.len()),
        failures,
        rows,
    })
}

/// Ratio of two observed budgets against the ratio the formula predicts.
fn shape_row(
    ctx: &Context,
    name: &str,
    observed: (f64, f64),
    predicted: f64,
    tolerance: f64,
) -> CaseRow {
    let ratio = observed.1 / observed.0;
    let pass = (ratio / predicted - 1.0).abs() <= tolerance;
    ctx.row(
        format!("shape-{name}"),
        0,
        observed.1 as u64,
        ratio,
        predicted,
        pass,
    )
}

/// The draw counts the estimators actually use scale as their formulas prescribe:
/// `1 / eps^2` for the additive and advanced estimators, `levels^2 / eps^2` for the
/// counter, and `k ln(k / delta)` Glauber steps for `k` free vertices.
pub(super) fn budget_shapes(ctx: &Context) -> anyhow::Result<Findings> {
    let mut rng = gibbs_tv::rng_from_seed(ctx.case_seed(0));
    let uncapped = EstimatorBudget {
        max_draws: None,
        ..EstimatorBudget::default()
    };
    let mut rows = Vec::new();

    let g = Graph::path(5);
    let mu: SpinSystem = HardcoreModel::uniform(g.clone(), 1.0)?.into();
    let nu: SpinSystem = HardcoreModel::uniform(g, 1.2)?.into();
    let additive = |eps: f64, rng: &mut gibbs_tv::SimRng| -> anyhow::Result<f64> {
        Ok(additive_tv(&mu, &nu, eps, &uncapped, rng)?.samples as f64)
    };
    let observed = (additive(0.2, &mut rng)?, additive(0.1, &mut rng)?);
    rows.push(shape_row(ctx, "additive-eps", observed, 4.0, 1e-3));

    let n = 8;
    let (kappa, theta) = (1.0 / (20.0 * n as f64), 1.0 / (400.0 * (n * n) as f64));
    let (a, b) = split_hardcore_pair(Graph::cycle(n)?, kappa, theta / 2.0, 0.5, false, &mut rng)?;
    let advanced_budget = EstimatorBudget {
        kappa_override: Some(kappa),
        theta_override: Some(theta),
        sample_scale: 0.1,
        ..uncapped.clone()
    };
    let advanced = |eps: f64, rng: &mut gibbs_tv::SimRng| -> anyhow::Result<f64> {
        Ok(advanced_relative_tv(&a, &b, eps, &advanced_budget, rng)?.samples as f64)
    };
    let observed = (advanced(0.4, &mut rng)?, advanced(0.2, &mut rng)?);
    rows.push(shape_row(ctx, "advanced-eps", observed, 4.0, 1e-2));

    let config = CounterConfig {
        exact_cap: 0,
        boost_repeats: 1,
        ..CounterConfig::default()
    };
    let model: SpinSystem = HardcoreModel::uniform(Graph::cycle(6)?, 1.0)?.into();
    let count = |eps: f64, rng: &mut gibbs_tv::SimRng| -> anyhow::Result<f64> {
        Ok(approx_count(&model, eps, &config, &SamplerConfig::default(), rng)?.samples as f64)
    };
    let observed = (count(0.4, &mut rng)?, count(0.2, &mut rng)?);
    rows.push(shape_row(ctx, "counter-eps", observed, 4.0, 1e-2));
    let doubled = CounterConfig {
        levels_multiplier: 2.0,
        ..config
    };
    let levels = |c: &CounterConfig, rng: &mut gibbs_tv::SimRng| -> anyhow::Result<(f64, f64)> {
        let e = approx_count(&model, 0.3, c, &SamplerConfig::default(), rng)?;
        Ok((e.levels as f64, e.samples as f64))
    };
    let (l1, s1) = levels(&config, &mut rng)?;
    let (l2, s2) = levels(&doubled, &mut rng)?;
    rows.push(shape_row(
        ctx,
        "counter-levels",
        (s1, s2),
        (l2 / l1).powi(2),
        1e-2,
    ));

    let glauber = SamplerConfig {
        exact_fallback_cap: 0,
        ..SamplerConfig::default()
    };
    let steps = |k: usize| -> anyhow::Result<f64> {
        let m: SpinSystem = HardcoreModel::uniform(Graph::path(k), 1.0)?.into();
        Ok(Sampler::new(&m, &Pinning::free(k), 0.01, &glauber)?.steps() as f64)
    };
    let (k1, k2) = (16.0f64, 64.0f64);
    let predicted = k2 * (k2 / 0.01f64).ln() / (k1 * (k1 / 0.01f64).ln());
    rows.push(shape_row(
        ctx,
        "glauber-steps",
        (steps(16)?, steps(64)?),
        predicted,
        1e-3,
    ));

    let failures: Vec<String> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| {
            format!(
                "{}: observed ratio {} vs predicted {}",
                r.case_id, r.estimate, r.truth
            )
        })
        .collect();
    Ok(Findings {
        passed: failures.is_empty(),
        summary: format!(
            "{} of {} budget ratios match their formulas",
            rows.len() - failures.len(),
            rows.len()
        ),
        failures,
        rows,
    })
}
