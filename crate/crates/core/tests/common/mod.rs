//! Proptest strategies shared by the integration tests.

#![allow(dead_code)]

use gibbs_tv::model::{Field, HardcoreModel, IsingModel, SpinSystem};
use gibbs_tv::Graph;
use proptest::prelude::*;

/// A graph on `1..=max_n` vertices with maximum degree at most `max_degree`.
pub fn graph(max_n: usize, max_degree: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n)
        .prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(any::<bool>(), n * (n - 1) / 2),
            )
        })
        .prop_map(move |(n, bits)| {
            let mut degree = vec![0; n];
            let mut edges = Vec::new();
            let pairs = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
            for ((u, v), on) in pairs.zip(bits) {
                if on && degree[u] < max_degree && degree[v] < max_degree {
                    degree[u] += 1;
                    degree[v] += 1;
                    edges.push((u, v));
                }
            }
            Graph::new(n, &edges).unwrap()
        })
}

/// A hardcore pair with fugacities in `[0.05, 3)` and shifts of at most `spread`.
pub fn hardcore_pair(max_n: usize, spread: f64) -> impl Strategy<Value = (SpinSystem, SpinSystem)> {
    graph(max_n, 3).prop_flat_map(move |g| {
        let n = g.vertex_count();
        (
            Just(g),
            proptest::collection::vec(0.05f64..3.0, n),
            proptest::collection::vec(-spread..=spread, n),
        )
            .prop_map(|(g, lambda, shift)| {
                let other = lambda
                    .iter()
                    .zip(&shift)
                    .map(|(l, s)| (l + s).max(0.01))
                    .collect();
                let mu = HardcoreModel::new(g.clone(), lambda).unwrap();
                let nu = HardcoreModel::new(g, other).unwrap();
                (mu.into(), nu.into())
            })
    })
}

/// A soft Ising pair with couplings and fields in `[-1, 1]` and shifts of at most `spread`.
pub fn ising_pair(max_n: usize, spread: f64) -> impl Strategy<Value = (SpinSystem, SpinSystem)> {
    graph(max_n, 4).prop_flat_map(move |g| {
        let (n, m) = (g.vertex_count(), g.edge_count());
        (
            Just(g),
            proptest::collection::vec(-1.0f64..1.0, m),
            proptest::collection::vec(-1.0f64..1.0, n),
            proptest::collection::vec(-spread..=spread, m + n),
        )
            .prop_map(|(g, j, h, shift)| {
                let edges: Vec<(usize, usize)> = g.edges().collect();
                let build = |delta: &[f64]| {
                    let couplings: Vec<_> = edges
                        .iter()
                        .zip(&j)
                        .zip(delta)
                        .map(|((&(u, v), &x), d)| (u, v, x + d))
                        .collect();
                    let fields = h
                        .iter()
                        .zip(&delta[edges.len()..])
                        .map(|(x, d)| Field::Finite(x + d))
                        .collect();
                    SpinSystem::from(IsingModel::new(g.clone(), &couplings, fields).unwrap())
                };
                (build(&vec![0.0; shift.len()]), build(&shift))
            })
    })
}

/// Either kind of soft pair.
pub fn soft_pair(max_n: usize, spread: f64) -> impl Strategy<Value = (SpinSystem, SpinSystem)> {
    prop_oneof![hardcore_pair(max_n, spread), ising_pair(max_n, spread)]
}

/// An Ising model whose fields may be infinite.
pub fn hard_ising(max_n: usize) -> impl Strategy<Value = SpinSystem> {
    graph(max_n, 4).prop_flat_map(|g| {
        let (n, m) = (g.vertex_count(), g.edge_count());
        let field = prop_oneof![
            6 => (-1.0f64..1.0).prop_map(Field::Finite),
            1 => Just(Field::PosInf),
            1 => Just(Field::NegInf),
        ];
        (
            Just(g),
            proptest::collection::vec(-1.0f64..1.0, m),
            proptest::collection::vec(field, n),
        )
            .prop_map(|(g, j, h)| {
                let couplings: Vec<_> = g.edges().zip(j).map(|((u, v), x)| (u, v, x)).collect();
                SpinSystem::from(IsingModel::new(g, &couplings, h).unwrap())
            })
    })
}
