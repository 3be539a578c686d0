//! Simple undirected graphs with sorted adjacency lists.

use crate::error::{Error, Result};

/// A simple undirected graph on vertices `0..n`.
///
/// Adjacency lists are sorted, so two graphs built from the same edge set in any
/// order compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicate edges and out-of-range endpoints.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::VertexOutOfRange { u, v, n });
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateEdge(u.min(w[0]), u.max(w[0])));
            }
        }
        Ok(Self {
            adjacency,
            edge_count: edges.len(),
        })
    }

    /// The graph on `n` vertices with no edges.
    pub fn empty(n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    /// A path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::new(n, &edges).expect("path edges are valid")
    }

    /// A cycle on `n >= 3` vertices.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!(
                "a cycle needs at least 3 vertices, got {n}"
            )));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::new(n, &edges)
    }

    /// A `rows x cols` grid with vertex `r * cols + c` at row `r`, column `c`.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Self::new(rows * cols, &edges).expect("grid edges are valid")
    }

    /// The complete graph on `n` vertices.
    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        Self::new(n, &edges).expect("complete graph edges are valid")
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Number of edges.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sorted neighbours of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Degree of `v`.
    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Maximum degree, zero for the empty graph.
    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Whether `{u, v}` is an edge.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.adjacency.len() && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Position of `v` inside the adjacency list of `u`, if adjacent.
    pub fn neighbor_index(&self, u: usize, v: usize) -> Option<usize> {
        self.adjacency.get(u)?.binary_search(&v).ok()
    }

    /// Iterates over edges `(u, v)` with `u < v`, ordered by `u` then `v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// Whether the given vertex set contains no edge.
    pub fn is_independent(&self, set: &[usize]) -> bool {
        let mut member = vec![false; self.vertex_count()];
        for &v in set {
            member[v] = true;
        }
        set.iter()
            .all(|&v| self.adjacency[v].iter().all(|&u| !member[u]))
    }

    /// The subgraph induced by the vertices with `keep[v] == true`.
    pub fn induced(&self, keep: &[bool]) -> InducedSubgraph {
        let mut new_index = vec![None; self.vertex_count()];
        let mut original = Vec::new();
        for (v, &k) in keep.iter().enumerate() {
            if k {
                new_index[v] = Some(original.len());
                original.push(v);
            }
        }
        let mut adjacency = Vec::with_capacity(original.len());
        let mut edge_count = 0;
        for &v in &original {
            let list: Vec<usize> = self.adjacency[v]
                .iter()
                .filter_map(|&u| new_index[u])
                .collect();
            edge_count += list.len();
            adjacency.push(list);
        }
        InducedSubgraph {
            graph: Graph {
                adjacency,
                edge_count: edge_count / 2,
            },
            original,
            new_index,
        }
    }

    /// Vertex sets of the connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &u in &self.adjacency[v] {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Whether the graph is connected (the empty graph on zero vertices counts as connected).
    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }
}

/// An induced subgraph together with the index maps back to its parent.
#[derive(Debug, Clone)]
pub struct InducedSubgraph {
    /// The induced graph, with vertices relabelled `0..k`.
    pub graph: Graph,
    /// `original[i]` is the parent vertex of new vertex `i`.
    pub original: Vec<usize>,
    /// `new_index[v]` is the new label of parent vertex `v`, if kept.
    pub new_index: Vec<Option<usize>>,
}
