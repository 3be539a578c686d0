//! Lower bound on conditional marginals over all feasible pinnings.

use serde::Serialize;

use super::{contract, logistic, Pinning, SpinSystem};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Largest neighbourhood (among vertices with positive fugacity) enumerated by the hardcore bound.
pub const MAX_FREE_DEGREE: usize = 24;

/// Worst-case conditional marginals of one vertex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexBound {
    /// Vertex label in the original model.
    pub vertex: usize,
    /// Smallest feasible conditional probability of `-1`.
    pub minus: f64,
    /// Smallest feasible conditional probability of `+1`.
    pub plus: f64,
}

/// The marginal lower bound `b` and its per-vertex witnesses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalBound {
    /// `b = min` over vertices and spins of the worst feasible conditional marginal.
    pub bound: f64,
    /// One entry per vertex that can take both spins.
    pub vertices: Vec<VertexBound>,
}

/// Computes the marginal lower bound of a model.
///
/// Hardcore: vertices of zero fugacity are removed first; the worst `-1` marginal is
/// `1 / (1 + lambda_v)` and the worst `+1` marginal is attained when every vertex
/// outside the closed neighbourhood of `v` is pinned to `-1`. Ising: vertices with
/// infinite fields are contracted and the worst marginal at `v` has neighbours
/// aligned against the spin.
pub fn marginal_lower_bound(model: &SpinSystem) -> Result<MarginalBound> {
    let contraction = contract(model, &Pinning::free(model.vertex_count()))?
        .expect("an empty pinning is always feasible");
    let vertices = match &contraction.reduced {
        SpinSystem::Hardcore(m) => {
            let keep: Vec<bool> = m.fugacities().iter().map(|&l| l > 0.0).collect();
            let sub = m.graph().induced(&keep);
            let lambda: Vec<f64> = sub.original.iter().map(|&v| m.fugacity(v)).collect();
            let mut out = Vec::with_capacity(lambda.len());
            for v in 0..sub.graph.vertex_count() {
                let blocked = neighbourhood_partition_function(&sub.graph, &lambda, v)?;
                out.push(VertexBound {
                    vertex: contraction.kept[sub.original[v]],
                    minus: 1.0 / (1.0 + lambda[v]),
                    plus: lambda[v] / (lambda[v] + blocked),
                });
            }
            out
        }
        SpinSystem::Ising(m) => (0..m.graph().vertex_count())
            .map(|v| {
                let h = m.field(v).value();
                let pull = m.absolute_coupling_sum(v);
                VertexBound {
                    vertex: contraction.kept[v],
                    minus: logistic(2.0 * (-h - pull)),
                    plus: logistic(2.0 * (h - pull)),
                }
            })
            .collect(),
    };
    let bound = vertices
        .iter()
        .map(|w| w.minus.min(w.plus))
        .fold(1.0, f64::min);
    Ok(MarginalBound { bound, vertices })
}

/// Weighted count of independent sets inside the neighbourhood of `v`.
fn neighbourhood_partition_function(g: &Graph, lambda: &[f64], v: usize) -> Result<f64> {
    let nbrs = g.neighbors(v);
    if nbrs.len() > MAX_FREE_DEGREE {
        return Err(Error::TooLarge {
            what: "free neighbourhood in marginal bound",
            size: nbrs.len(),
            cap: MAX_FREE_DEGREE,
        });
    }
    let adjacency: Vec<u32> = nbrs
        .iter()
        .map(|&a| {
            nbrs.iter()
                .enumerate()
                .filter(|(_, &b)| g.has_edge(a, b))
                .fold(0u32, |m, (k, _)| m | 1 << k)
        })
        .collect();
    let weights: Vec<f64> = nbrs.iter().map(|&a| lambda[a]).collect();
    let all = if nbrs.is_empty() {
        0
    } else {
        u32::MAX >> (32 - nbrs.len())
    };
    Ok(independent_set_sum(all, &adjacency, &weights))
}

/// Sum over independent subsets of `set` of the product of weights.
fn independent_set_sum(set: u32, adjacency: &[u32], weights: &[f64]) -> f64 {
    if set == 0 {
        return 1.0;
    }
    let k = set.trailing_zeros() as usize;
    let rest = set & !(1 << k);
    independent_set_sum(rest, adjacency, weights)
        + weights[k] * independent_set_sum(rest & !adjacency[k], adjacency, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Field, HardcoreModel, IsingModel};

    #[test]
    fn isolated_ising_vertex_is_one_half() {
        let m: SpinSystem = IsingModel::uniform(Graph::empty(1), 0.0, vec![Field::Finite(0.0)])
            .unwrap()
            .into();
        assert!((marginal_lower_bound(&m).unwrap().bound - 0.5).abs() < 1e-15);
    }

    #[test]
    fn all_zero_fugacities_give_one() {
        let m: SpinSystem = HardcoreModel::uniform(Graph::path(3), 0.0).unwrap().into();
        let b = marginal_lower_bound(&m).unwrap();
        assert_eq!(b.bound, 1.0);
        assert!(b.vertices.is_empty());
    }

    #[test]
    fn star_centre_bound() {
        // Centre of a star with three leaves at fugacity 1: 1 / (1 + 2^3).
        let g = Graph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let m: SpinSystem = HardcoreModel::uniform(g, 1.0).unwrap().into();
        let b = marginal_lower_bound(&m).unwrap();
        assert!((b.vertices[0].plus - 1.0 / 9.0).abs() < 1e-15);
        assert!((b.bound - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn independent_set_sum_of_triangle() {
        let adjacency = [0b110, 0b101, 0b011];
        assert_eq!(
            independent_set_sum(0b111, &adjacency, &[1.0, 2.0, 3.0]),
            7.0
        );
    }
}
