//! Random instances and exhaustive graph families for tests, suites and benchmarks.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::graph::Graph;
use crate::model::{Field, HardcoreModel, IsingModel};

/// A random graph: each pair is considered once in random order and joined with
/// probability `edge_probability` if both endpoints have degree below `max_degree`.
pub fn random_graph<R: Rng + ?Sized>(
    n: usize,
    edge_probability: f64,
    max_degree: usize,
    rng: &mut R,
) -> Graph {
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    pairs.shuffle(rng);
    let mut degree = vec![0usize; n];
    let mut edges = Vec::new();
    for (u, v) in pairs {
        if degree[u] < max_degree
            && degree[v] < max_degree
            && rng.random::<f64>() < edge_probability
        {
            degree[u] += 1;
            degree[v] += 1;
            edges.push((u, v));
        }
    }
    Graph::new(n, &edges).expect("generated edges are valid")
}

/// Hardcore model with fugacities drawn uniformly from `[low, high)`.
pub fn random_hardcore<R: Rng + ?Sized>(
    graph: Graph,
    low: f64,
    high: f64,
    rng: &mut R,
) -> Result<HardcoreModel> {
    let lambda = (0..graph.vertex_count())
        .map(|_| rng.random_range(low..high))
        .collect();
    HardcoreModel::new(graph, lambda)
}

/// Adds an independent uniform shift in `[-spread, spread]` to every fugacity, clamped at zero.
pub fn perturb_hardcore<R: Rng + ?Sized>(
    model: &HardcoreModel,
    spread: f64,
    rng: &mut R,
) -> Result<HardcoreModel> {
    let lambda = model
        .fugacities()
        .iter()
        .map(|&l| (l + rng.random_range(-spread..=spread)).max(0.0))
        .collect();
    model.with_fugacities(lambda)
}

/// Ising model with couplings uniform in `[-coupling, coupling]` and finite fields uniform in `[-field, field]`.
pub fn random_ising<R: Rng + ?Sized>(
    graph: Graph,
    coupling: f64,
    field: f64,
    rng: &mut R,
) -> Result<IsingModel> {
    let couplings: Vec<(usize, usize, f64)> = graph
        .edges()
        .map(|(u, v)| (u, v, rng.random_range(-coupling..=coupling)))
        .collect();
    let fields = (0..graph.vertex_count())
        .map(|_| Field::Finite(rng.random_range(-field..=field)))
        .collect();
    IsingModel::new(graph, &couplings, fields)
}

/// Adds independent uniform shifts in `[-spread, spread]` to every coupling and finite field.
pub fn perturb_ising<R: Rng + ?Sized>(
    model: &IsingModel,
    spread: f64,
    rng: &mut R,
) -> Result<IsingModel> {
    let couplings: Vec<(usize, usize, f64)> = model
        .coupling_triples()
        .into_iter()
        .map(|(u, v, j)| (u, v, j + rng.random_range(-spread..=spread)))
        .collect();
    let fields = model
        .fields()
        .iter()
        .map(|&h| match h {
            Field::Finite(x) => Field::Finite(x + rng.random_range(-spread..=spread)),
            other => other,
        })
        .collect();
    IsingModel::new(model.graph().clone(), &couplings, fields)
}

/// Every connected graph with between one and `max_vertices` vertices and maximum
/// degree at most `max_degree`, one representative per isomorphism class.
///
/// Each connected graph on `k + 1` vertices arises from a connected graph on `k`
/// vertices by adding a vertex (remove a leaf of a spanning tree), so classes are grown
/// one vertex at a time and deduplicated by a canonical adjacency code. Intended for
/// `max_vertices <= 8`.
pub fn connected_graphs(max_vertices: usize, max_degree: usize) -> Vec<Graph> {
    let mut all = Vec::new();
    if max_vertices == 0 {
        return all;
    }
    let mut layer: Vec<Graph> = vec![Graph::empty(1)];
    for k in 1..=max_vertices {
        all.extend(layer.iter().cloned());
        if k == max_vertices {
            break;
        }
        let mut seen = BTreeSet::new();
        let mut next = Vec::new();
        for g in &layer {
            let open: Vec<usize> = (0..k).filter(|&v| g.degree(v) < max_degree).collect();
            for subset in nonempty_subsets(&open, max_degree) {
                let mut edges: Vec<(usize, usize)> = g.edges().collect();
                edges.extend(subset.iter().map(|&u| (u, k)));
                let h = Graph::new(k + 1, &edges).expect("valid extension");
                if seen.insert(canonical_code(&h)) {
                    next.push(h);
                }
            }
        }
        layer = next;
    }
    all
}

fn nonempty_subsets(items: &[usize], max_size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn walk(
        items: &[usize],
        start: usize,
        max: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if !current.is_empty() {
            out.push(current.clone());
        }
        if current.len() == max {
            return;
        }
        for i in start..items.len() {
            current.push(items[i]);
            walk(items, i + 1, max, current, out);
            current.pop();
        }
    }
    walk(items, 0, max_size, &mut current, &mut out);
    out
}

/// The lexicographically smallest upper-triangle adjacency code over all vertex orders
/// that list vertices by non-increasing degree.
pub fn canonical_code(graph: &Graph) -> Vec<bool> {
    let n = graph.vertex_count();
    let mut best: Option<Vec<bool>> = None;
    let mut order = Vec::with_capacity(n);
    let mut used = vec![false; n];
    permute(graph, &mut order, &mut used, &mut best);
    best.unwrap_or_default()
}

fn permute(graph: &Graph, order: &mut Vec<usize>, used: &mut [bool], best: &mut Option<Vec<bool>>) {
    let n = graph.vertex_count();
    if order.len() == n {
        let code: Vec<bool> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| graph.has_edge(order[i], order[j]))
            .collect();
        if best.as_ref().map_or(true, |b| code < *b) {
            *best = Some(code);
        }
        return;
    }
    let bound = order.last().map_or(usize::MAX, |&u| graph.degree(u));
    for v in 0..n {
        if !used[v] && graph.degree(v) <= bound {
            used[v] = true;
            order.push(v);
            permute(graph, order, used, best);
            order.pop();
            used[v] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn connected_cubic_bounded_class_counts() {
        let graphs = connected_graphs(7, 3);
        let count = |k: usize| graphs.iter().filter(|g| g.vertex_count() == k).count();
        assert_eq!(
            (1..=7).map(count).collect::<Vec<_>>(),
            vec![1, 1, 2, 6, 10, 29, 64]
        );
        assert!(graphs
            .iter()
            .all(|g| g.is_connected() && g.max_degree() <= 3));
    }

    #[test]
    fn canonical_code_is_isomorphism_invariant() {
        let a = Graph::new(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let b = Graph::new(4, &[(2, 0), (0, 3), (3, 1)]).unwrap();
        let star = Graph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(canonical_code(&a), canonical_code(&b));
        assert_ne!(canonical_code(&a), canonical_code(&star));
    }

    #[test]
    fn random_graph_respects_the_degree_cap() {
        let mut rng = rng_from_seed(1);
        for _ in 0..50 {
            let g = random_graph(9, 0.6, 3, &mut rng);
            assert!(g.max_degree() <= 3);
        }
    }
}
