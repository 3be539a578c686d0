//! Counting independent sets of a graph of maximum degree three from marginal
//! total-variation queries.
//!
//! For vertex `i` let `G_i` be the subgraph induced by `{i, i+1, ...}` and `q_i` the
//! probability that `i` is occupied under the uniform distribution on independent
//! sets of `G_i`. The number of independent sets is `prod 1 / (1 - q_i)`. Each `q_i`
//! is recovered by a fixed-point iteration on `alpha`, comparing the marginal at `i`
//! with a model that occupies `i` with probability exactly `alpha`.
//!
//! The iteration only moves `alpha` downwards and relies on `alpha >= q_i` holding
//! throughout, so it is carried out in exact rational arithmetic.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::{ExactDistribution, DEFAULT_EXACT_CAP};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::HardcoreModel;

/// Options for [`count_via_tv_queries`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionOptions {
    /// Relative accuracy `epsilon` of the oracle (zero for an exact oracle).
    pub oracle_error: f64,
    /// Compute `q_i` directly when `G_i` has maximum degree at most two.
    pub use_path_shortcut: bool,
    /// Cap passed to the exact oracle.
    pub exact_cap: usize,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self {
            oracle_error: 0.0,
            use_path_shortcut: true,
            exact_cap: DEFAULT_EXACT_CAP,
        }
    }
}

/// How `q_i` was obtained for one vertex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexQuery {
    pub vertex: usize,
    /// Estimated occupation probability of the vertex in `G_i`.
    pub occupation: f64,
    /// Oracle calls spent on this vertex.
    pub queries: usize,
    /// Whether the path/cycle shortcut was used.
    pub shortcut: bool,
}

/// Result of the reduction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    /// `prod 1 / (1 - q_i)` as a float.
    pub estimate: f64,
    /// The exact product rounded to the nearest integer.
    pub count: u64,
    pub vertices: Vec<VertexQuery>,
    pub total_queries: usize,
}

/// Runs the reduction with the exact marginal total-variation oracle.
pub fn count_via_tv_queries(graph: &Graph, options: &ReductionOptions) -> Result<ReductionReport> {
    let cap = options.exact_cap;
    count_via_tv_oracle(graph, options, |sub, alpha| {
        let n = sub.vertex_count();
        let uniform = vec![BigRational::one(); n];
        let mut probe = vec![BigRational::zero(); n];
        probe[0] = alpha / (BigRational::one() - alpha);
        exact_marginal_tv_rational(sub, &uniform, &probe, &[0], cap)
    })
}

/// Runs the reduction with a caller-supplied oracle.
///
/// The oracle receives `(G_i, alpha)`, where vertex `0` of `G_i` is the vertex being
/// processed, and must estimate the distance between the occupation marginal of that
/// vertex under the uniform distribution on independent sets of `G_i` and a Bernoulli
/// of mean `alpha`, within relative error `options.oracle_error`.
pub fn count_via_tv_oracle<F>(
    graph: &Graph,
    options: &ReductionOptions,
    mut oracle: F,
) -> Result<ReductionReport>
where
    F: FnMut(&Graph, &BigRational) -> Result<BigRational>,
{
    if graph.max_degree() > 3 {
        return Err(Error::Domain(format!(
            "maximum degree {} exceeds 3",
            graph.max_degree()
        )));
    }
    let eps = options.oracle_error;
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "oracle error must lie in [0, 1), got {eps}"
        )));
    }
    let one_plus_eps = BigRational::one() + BigRational::from_float(eps).expect("finite");
    let n = graph.vertex_count();
    let iterations = (50.0 * n as f64 * (1.0 + eps).powi(2)).ceil() as usize;
    let bits = 100 * n as u32;
    let mut vertices = Vec::with_capacity(n);
    let mut product = BigRational::one();
    for i in 0..n {
        let keep: Vec<bool> = (0..n).map(|j| j >= i).collect();
        let sub = graph.induced(&keep).graph;
        let (occupation, queries, shortcut) = if options.use_path_shortcut && sub.max_degree() <= 2
        {
            (path_cycle_marginal(&sub, 0), 0, true)
        } else {
            let mut alpha = BigRational::new(BigInt::one(), BigInt::from(2));
            for _ in 0..iterations {
                let d = oracle(&sub, &alpha)?;
                alpha = round_up_dyadic(&(alpha - d / &one_plus_eps), bits);
            }
            (alpha, iterations, false)
        };
        product /= BigRational::one() - &occupation;
        vertices.push(VertexQuery {
            vertex: i,
            occupation: to_f64(&occupation),
            queries,
            shortcut,
        });
    }
    Ok(ReductionReport {
        estimate: to_f64(&product),
        count: product.round().to_integer().to_u64().unwrap_or(u64::MAX),
        total_queries: vertices.iter().map(|v| v.queries).sum(),
        vertices,
    })
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact distance between the projections onto `subset` of two hardcore models on
/// `graph` with rational fugacities.
pub fn exact_marginal_tv_rational(
    graph: &Graph,
    mu: &[BigRational],
    nu: &[BigRational],
    subset: &[usize],
    cap: usize,
) -> Result<BigRational> {
    let n = graph.vertex_count();
    for (what, lambda) in [("mu fugacities", mu), ("nu fugacities", nu)] {
        if lambda.len() != n {
            return Err(Error::DimensionMismatch {
                what,
                got: lambda.len(),
                expected: n,
            });
        }
        if lambda.iter().any(Signed::is_negative) {
            return Err(Error::InvalidParameter(format!(
                "{what} must be non-negative"
            )));
        }
    }
    super::check_subset(subset, n)?;
    let support = ExactDistribution::of(&HardcoreModel::uniform(graph.clone(), 1.0)?.into(), cap)?;
    let key_mask = subset.iter().fold(0u64, |m, &v| m | 1 << v);
    let weight = |lambda: &[BigRational], mask: u64| -> BigRational {
        (0..n)
            .filter(|v| mask >> v & 1 == 1)
            .map(|v| lambda[v].clone())
            .product()
    };
    let mut table: BTreeMap<u64, (BigRational, BigRational)> = BTreeMap::new();
    let (mut z_mu, mut z_nu) = (BigRational::zero(), BigRational::zero());
    for &mask in support.masks() {
        let (a, b) = (weight(mu, mask), weight(nu, mask));
        z_mu += &a;
        z_nu += &b;
        let entry = table
            .entry(mask & key_mask)
            .or_insert_with(|| (BigRational::zero(), BigRational::zero()));
        entry.0 += a;
        entry.1 += b;
    }
    let total: BigRational = table
        .values()
        .map(|(a, b)| (a / &z_mu - b / &z_nu).abs())
        .sum();
    Ok(total / BigInt::from(2))
}

/// Exact occupation probability of `root` under the uniform distribution on
/// independent sets of a graph of maximum degree two, via the path and cycle recurrences.
pub fn path_cycle_marginal(graph: &Graph, root: usize) -> BigRational {
    debug_assert!(graph.max_degree() <= 2);
    // `count(k)` = number of independent sets of a path on k vertices, with count(-1) = 1.
    let count = |k: isize| -> BigInt {
        let (mut a, mut b) = (BigInt::one(), BigInt::one());
        for _ in -1..k {
            let next = &a + &b;
            a = std::mem::replace(&mut b, next);
        }
        a
    };
    let component = graph
        .components()
        .into_iter()
        .find(|c| c.contains(&root))
        .expect("root is a vertex");
    let len = component.len() as isize;
    let edges: usize = component.iter().map(|&v| graph.degree(v)).sum::<usize>() / 2;
    if len >= 3 && edges == component.len() {
        let with_root = count(len - 3);
        let total = count(len - 1) + &with_root;
        return BigRational::new(with_root, total);
    }
    let start = component
        .iter()
        .copied()
        .find(|&v| graph.degree(v) <= 1)
        .expect("a path has an endpoint");
    let (mut prev, mut cur, mut pos) = (usize::MAX, start, 0isize);
    while cur != root {
        let next = graph
            .neighbors(cur)
            .iter()
            .copied()
            .find(|&u| u != prev)
            .expect("root lies on the path");
        (prev, cur, pos) = (cur, next, pos + 1);
    }
    BigRational::new(count(pos - 1) * count(len - pos - 2), count(len))
}

/// Rounds `x` up to the nearest multiple of `2^-bits`, leaving it unchanged when it
/// already has at most `bits` binary fractional digits.
pub fn round_up_dyadic(x: &BigRational, bits: u32) -> BigRational {
    let den = x.denom();
    let twos = den.trailing_zeros().unwrap_or(0);
    let is_short_dyadic = twos <= bits as u64 && (den >> twos as usize).is_one();
    if is_short_dyadic {
        return x.clone();
    }
    let scale = BigRational::from_integer(BigInt::one() << bits as usize);
    (x * &scale).ceil() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SpinSystem;

    fn ratio(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn path_of_three_counts_five() {
        let r = count_via_tv_queries(&Graph::path(3), &ReductionOptions::default()).unwrap();
        assert_eq!(r.count, 5);
        let opts = ReductionOptions {
            use_path_shortcut: false,
            ..Default::default()
        };
        let r = count_via_tv_queries(&Graph::path(3), &opts).unwrap();
        assert_eq!(r.count, 5);
        assert!((r.estimate - 5.0).abs() < 1e-12);
        assert_eq!(r.total_queries, 3 * 150);
    }

    #[test]
    fn path_cycle_marginal_frozen_values() {
        assert_eq!(path_cycle_marginal(&Graph::path(3), 1), ratio(1, 5));
        assert_eq!(path_cycle_marginal(&Graph::path(3), 0), ratio(2, 5));
        assert_eq!(path_cycle_marginal(&Graph::empty(1), 0), ratio(1, 2));
        assert_eq!(
            path_cycle_marginal(&Graph::cycle(3).unwrap(), 2),
            ratio(1, 4)
        );
        // C5 has 11 independent sets, 3 of which contain a given vertex.
        assert_eq!(
            path_cycle_marginal(&Graph::cycle(5).unwrap(), 0),
            ratio(3, 11)
        );
    }

    #[test]
    fn rejects_degree_four() {
        let star = Graph::new(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert!(matches!(
            count_via_tv_queries(&star, &ReductionOptions::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn dyadic_rounding() {
        assert_eq!(round_up_dyadic(&ratio(3, 10), 2), ratio(1, 2));
        assert_eq!(round_up_dyadic(&ratio(1, 4), 2), ratio(1, 4));
        assert_eq!(round_up_dyadic(&ratio(1, 3), 3), ratio(3, 8));
        assert_eq!(round_up_dyadic(&ratio(-1, 3), 3), ratio(-1, 4));
    }

    #[test]
    fn rational_marginal_matches_float_oracle() {
        let g = Graph::cycle(4).unwrap();
        let mu = vec![ratio(1, 1); 4];
        let nu = vec![ratio(1, 2), ratio(2, 1), ratio(1, 1), ratio(3, 2)];
        let exact = exact_marginal_tv_rational(&g, &mu, &nu, &[0, 2], 20).unwrap();
        let fm: SpinSystem = HardcoreModel::uniform(g.clone(), 1.0).unwrap().into();
        let fn_: SpinSystem = HardcoreModel::new(g, vec![0.5, 2.0, 1.0, 1.5])
            .unwrap()
            .into();
        let float = super::super::exact_marginal_tv(&fm, &fn_, &[0, 2], 20).unwrap();
        assert!((to_f64(&exact) - float).abs() < 1e-14);
    }
}
