//! Checks that compare closed forms and bounds against exact enumeration.

use gibbs_tv::estimate::{exact_small_side, truncated_conditional, BigSmallPartition};
use gibbs_tv::exact::{
    brute_force_marginal_bound, count_via_tv_queries, exact_conditional_partition, exact_partition,
    exact_tv, exact_w_statistics, ReductionOptions,
};
use gibbs_tv::generators::{connected_graphs, random_graph};
use gibbs_tv::model::{
    marginal_lower_bound, parameter_distance, regime_report, tv_lower_bound_constant, Field,
    HardcoreModel, IsingModel, ModelKind, Pinning, Spin, SpinSystem,
};
use gibbs_tv::Graph;
use rand::Rng;

use super::{random_soft_pair, split_hardcore_pair, tally, Context, Findings};

const CAP: usize = 20;

fn kind_of(i: usize) -> ModelKind {
    if i % 2 == 0 {
        ModelKind::Hardcore
    } else {
        ModelKind::Ising
    }
}

/// 200 random soft pairs with `n <= 8`: the deviation form of the distance and the mean
/// of the likelihood ratio agree with enumeration to `1e-10`.
pub(super) fn likelihood_ratio_identity(ctx: &Context) -> anyhow::Result<Findings> {
    const CASES: usize = 200;
    let mut rows = Vec::with_capacity(CASES);
    let mut failures = Vec::new();
    for i in 0..CASES {
        let (seed, mut rng) = ctx.case_rng(i);
        let n = rng.random_range(1..=8);
        let spread = rng.random_range(0.01..1.0);
        let (mu, nu) = random_soft_pair(kind_of(i), n, spread, &mut rng)?;
        let w = exact_w_statistics(&mu, &nu, CAP)?;
        let tv = exact_tv(&mu, &nu, CAP)?;
        let identity = w.tv_from_deviation();
        let mean_ok = (w.mean / w.partition_ratio - 1.0).abs() <= 1e-10;
        let pass = (identity - tv).abs() <= 1e-10 && mean_ok;
        if !pass {
            failures.push(format!(
                "case {i} (seed {seed}): deviation form {identity:e}, exact {tv:e}, E[W] {:e}, ratio {:e}",
                w.mean, w.partition_ratio
            ));
        }
        rows.push(ctx.row(format!("identity-{i}"), seed, 0, identity, tv, pass));
    }
    Ok(Findings {
        passed: failures.is_empty(),
        summary: format!(
            "{} pairs satisfy both identities to 1e-10",
            tally(CASES - failures.len(), CASES)
        ),
        failures,
        rows,
    })
}

/// 500 random pairs with `n <= 8` for which a lower-bound constant applies: exact distance
/// is at least `C d_par`.
pub(super) fn distance_lower_bound(ctx: &Context) -> anyhow::Result<Findings> {
    const CASES: usize = 500;
    let mut rows = Vec::with_capacity(CASES);
    let mut failures = Vec::new();
    let mut skipped = 0;
    let mut i = 0;
    while rows.len() < CASES {
        let (seed, mut rng) = ctx.case_rng(i);
        i += 1;
        let n = rng.random_range(1..=8);
        let spread = 10f64.powf(rng.random_range(-3.0..0.0));
        let (mu, nu) = random_soft_pair(kind_of(i), n, spread, &mut rng)?;
        let regime = regime_report(&mu)?.merge(&regime_report(&nu)?);
        let Ok(c) = tv_lower_bound_constant(mu.kind(), &regime) else {
            skipped += 1;
            continue;
        };
        let bound = c * parameter_distance(&mu, &nu)?;
        let tv = exact_tv(&mu, &nu, CAP)?;
        let pass = tv >= bound;
        if !pass {
            failures.push(format!(
                "case {} (seed {seed}): distance {tv:e} below bound {bound:e}",
                i - 1
            ));
        }
        rows.push(ctx.row(format!("lower-bound-{}", i - 1), seed, 0, tv, bound, pass));
    }
    Ok(Findings {
        passed: failures.is_empty(),
        summary: format!(
            "{} violations over {CASES} pairs ({skipped} without a constant skipped)",
            failures.len()
        ),
        failures,
        rows,
    })
}

/// Hardcore pair on `n` vertices at the desk thresholds `kappa = 1 / (20 n)`, `theta = 1 / (400 n^2)`.
fn desk_pair(
    n: usize,
    rng: &mut gibbs_tv::SimRng,
) -> anyhow::Result<(SpinSystem, SpinSystem, f64, f64)> {
    let nf = n as f64;
    let (kappa, theta) = (1.0 / (20.0 * nf), 1.0 / (400.0 * nf * nf));
    let g = random_graph(n, 0.4, 3, rng);
    let distance = theta * rng.random_range(0.1..0.99);
    let (mu, nu) = split_hardcore_pair(g, kappa, distance, 0.5, false, rng)?;
    Ok((mu, nu, kappa, theta))
}

/// 100 hardcore pairs with `n <= 10` at thresholds with `kappa + theta < 1 / (10 n)` and
/// `theta / kappa < 1 / (10 n)`: every big-side configuration satisfies the four small-side bounds.
pub(super) fn small_side_bounds(ctx: &Context) -> anyhow::Result<Findings> {
    const CASES: usize = 100;
    let mut rows = Vec::with_capacity(CASES);
    let mut failures = Vec::new();
    let mut configurations = 0;
    for i in 0..CASES {
        let (seed, mut rng) = ctx.case_rng(i);
        let n = rng.random_range(2..=10);
        let (mu, nu, kappa, theta) = desk_pair(n, &mut rng)?;
        let nf = n as f64;
        debug_assert!(kappa + theta < 1.0 / (10.0 * nf) && theta / kappa < 1.0 / (10.0 * nf));
        let (a, b) = (
            mu.as_hardcore().expect("hardcore"),
            nu.as_hardcore().expect("hardcore"),
        );
        let d = parameter_distance(&mu, &nu)?;
        let part = BigSmallPartition::with_kappa(a, b, kappa);
        let mut worst_tv: f64 = 0.0;
        let mut case_failures = Vec::new();
        for q in exact_small_side(a, b, &part, CAP)? {
            configurations += 1;
            worst_tv = worst_tv.max(q.small_tv);
            let checks = [
                (
                    "1 <= Z^x < 2",
                    [q.z_mu, q.z_nu]
                        .iter()
                        .all(|&z| z >= 1.0 - 1e-12 && z < 2.0),
                ),
                (
                    "|Z^x_mu - Z^x_nu| <= 2 n D",
                    (q.z_mu - q.z_nu).abs() <= 2.0 * nf * d * (1.0 + 1e-9),
                ),
                (
                    "|nu_B / mu_B - 1| <= 10 n D / kappa",
                    (q.marginal_ratio - 1.0).abs() <= 10.0 * nf * d / kappa * (1.0 + 1e-9),
                ),
                (
                    "small-side distance <= 4 n D",
                    q.small_tv <= 4.0 * nf * d * (1.0 + 1e-9),
                ),
            ];
            for (name, ok) in checks {
                if !ok {
                    case_failures.push(format!(
                        "case {i} (seed {seed}): x = {:?} violates {name}",
                        q.big_plus
                    ));
                }
            }
        }
        rows.push(ctx.row(
            format!("small-side-{i}"),
            seed,
            0,
            worst_tv,
            4.0 * nf * d,
            case_failures.is_empty(),
        ));
        failures.extend(case_failures);
    }
    Ok(Findings {
        passed: failures.is_empty(),
        summary: format!(
            "{} violations over {configurations} big-side configurations of {CASES} pairs",
            failures.len()
        ),
        failures,
        rows,
    })
}

/// 100 hardcore pairs with `n <= 10`: at full truncation the truncated partition function
/// equals the exact conditional one, and `f_hat` with the exact ratio equals `f`, to `1e-10`.
pub(super) fn truncation_exactness(ctx: &Context) -> anyhow::Result<Findings> {
    const CASES: usize = 100;
    let mut rows = Vec::with_capacity(CASES);
    let mut failures = Vec::new();
    for i in 0..CASES {
        let (seed, mut rng) = ctx.case_rng(i);
        let n = rng.random_range(1..=10);
        let kappa = rng.random_range(0.05..1.0);
        let distance = rng.random_range(0.001..0.02);
        let g = random_graph(n, 0.4, 3, &mut rng);
        let (mu, nu) = split_hardcore_pair(g, kappa, distance, 0.5, false, &mut rng)?;
        let (a, b) = (
            mu.as_hardcore().expect("hardcore"),
            nu.as_hardcore().expect("hardcore"),
        );
        let part = BigSmallPartition::with_kappa(a, b, kappa);
        let t = part.small.len();
        let ratio = (exact_partition(&nu, CAP)? - exact_partition(&mu, CAP)?).exp();
        let mut worst: f64 = 0.0;
        for q in exact_small_side(a, b, &part, CAP)? {
            let tc = truncated_conditional(a, b, &part, &q.big_plus, t)?;
            let mut pin = Pinning::free(n);
            for &v in &part.big {
                pin.set(
                    v,
                    if q.big_plus.contains(&v) {
                        Spin::Plus
                    } else {
                        Spin::Minus
                    },
                );
            }
            let big_weight: f64 = q.big_plus.iter().map(|&v| a.fugacity(v).ln()).sum();
            let exact_z = (exact_conditional_partition(&mu, &pin, CAP)? - big_weight).exp();
            let z_err = (tc.log_partition_mu.exp() / exact_z - 1.0).abs();
            let f_err = (tc.f_hat(a, b, ratio) - q.f).abs();
            worst = worst.max(z_err).max(f_err);
            if z_err > 1e-10 || f_err > 1e-10 {
                failures.push(format!(
                    "case {i} (seed {seed}): x = {:?} has partition error {z_err:e}, f error {f_err:e}",
                    q.big_plus
                ));
            }
        }
        rows.push(ctx.row(
            format!("truncation-{i}"),
            seed,
            0,
            worst,
            0.0,
            worst <= 1e-10,
        ));
    }
    Ok(Findings {
        passed: failures.is_empty(),
        summary: format!(
            "{} big-side configurations off by more than 1e-10 over {CASES} pairs",
            failures.len()
        ),
        failures,
        rows,
    })
}

/// Independent sets of `graph` by direct enumeration of vertex subsets.
fn independent_set_count(graph: &Graph) -> u64 {
    let n = graph.vertex_count();
    let neighbours: Vec<u64> = (0..n)
        .map(|v| graph.neighbors(v).iter().fold(0u64, |m, &u| m | 1 << u))
        .collect();
    (0u64..1 << n)
        .filter(|&s| (0..n).all(|v| s >> v & 1 == 0 || s & neighbours[v] == 0))
        .count() as u64
}

/// The reduction from counting to distance queries reproduces the number of independent
/// sets of every connected graph with `n <= 7` and maximum degree at most 3.
pub(super) fn reduction_demo(ctx: &Context) -> anyhow::Result<Findings> {
    let graphs = connected_graphs(7, 3);
    let mut rows = Vec::with_capacity(graphs.len());
    let mut failures = Vec::new();
    let mut queries = 0;
    for (i, g) in graphs.iter().enumerate() {
        let truth = independent_set_count(g);
        let report = count_via_tv_queries(g, &ReductionOptions::default())?;
        let z = exact_partition(&HardcoreModel::uniform(g.clone(), 1.0)?.into(), CAP)?
            .exp()
            .round() as u64;
        queries += report.total_queries;
        let pass = report.count == truth && z == truth;
        if !pass {
            failures.push(format!(
                "graph {i} ({} vertices, {} edges): reduction {} vs {truth}",
                g.vertex_count(),
                g.edge_count(),
                report.count
            ));
        }
        rows.push(ctx.row(
            format!("graph-{i}-n{}-m{}", g.vertex_count(), g.edge_count()),
            0,
            report.total_queries as u64,
            report.count as f64,
            truth as f64,
            pass,
        ));
    }
    Ok(Findings {
        passed: failures.is_empty(),
        summary: format!(
            "{} graphs counted exactly with {queries} distance queries",
            tally(graphs.len() - failures.len(), graphs.len())
        ),
        failures,
        rows,
    })
}

/// A random model on `n` vertices with some hard constraints: zero fugacities, or infinite fields.
fn random_model(i: usize, n: usize, rng: &mut gibbs_tv::SimRng) -> anyhow::Result<SpinSystem> {
    Ok(match kind_of(i) {
        ModelKind::Hardcore => {
            let g = random_graph(n, 0.5, 4, rng);
            let lambda = (0..n)
                .map(|_| {
                    if rng.random_bool(0.1) {
                        0.0
                    } else {
                        rng.random_range(0.05..3.0)
                    }
                })
                .collect();
            HardcoreModel::new(g, lambda)?.into()
        }
        ModelKind::Ising => {
            let g = random_graph(n, 0.5, 4, rng);
            let couplings: Vec<_> = g
                .edges()
                .map(|(u, v)| (u, v, rng.random_range(-1.0..1.0)))
                .collect();
            let fields = (0..n)
                .map(|_| match rng.random_range(0..10) {
                    0 => Field::PosInf,
                    1 => Field::NegInf,
                    _ => Field::Finite(rng.random_range(-1.0..1.0)),
                })
                .collect();
            IsingModel::new(g, &couplings, fields)?.into()
        }
    })
}

/// 100 random models with `n <= 8`: the closed-form marginal lower bound equals the
/// minimum positive conditional marginal over all pinnings.
pub(super) fn marginal_bound_oracle(ctx: &Context) -> anyhow::Result<Findings> {
    const CASES: usize = 100;
    let mut rows = Vec::with_capacity(CASES);
    let mut failures = Vec::new();
    for i in 0..CASES {
        let (seed, mut rng) = ctx.case_rng(i);
        let n = rng.random_range(1..=8);
        let model = random_model(i, n, &mut rng)?;
        let closed = marginal_lower_bound(&model)?.bound;
        let brute = brute_force_marginal_bound(&model)?;
        let pass = (closed - brute).abs() <= 1e-9 * brute;
        if !pass {
            failures.push(format!(
                "case {i} (seed {seed}): closed form {closed:e}, brute force {brute:e}"
            ));
        }
        rows.push(ctx.row(format!("marginal-bound-{i}"), seed, 0, closed, brute, pass));
    }
    Ok(Findings {
        passed: failures.is_empty(),
        summary: format!("{} violations over {CASES} models", failures.len()),
        failures,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_sets_of_small_graphs() {
        assert_eq!(independent_set_count(&Graph::path(3)), 5);
        assert_eq!(independent_set_count(&Graph::cycle(5).unwrap()), 11);
        assert_eq!(independent_set_count(&Graph::complete(4)), 5);
    }
}
