//! Two-spin systems: the hardcore model and the Ising model with extended-real fields.
//!
//! Weights are always handled in log space. A configuration of zero weight has log
//! weight `f64::NEG_INFINITY`.

mod contract;
mod marginal;
mod preprocess;
mod regime;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

pub use contract::{contract, Contraction};
pub use marginal::{marginal_lower_bound, MarginalBound, VertexBound, MAX_FREE_DEGREE};
pub use preprocess::{preprocess, PreprocessKind, Preprocessed, ReducedPair};
pub use regime::{
    check_ising_condition, check_uniqueness, critical_fugacity, parameter_distance, regime_report,
    tv_lower_bound_constant, IsingCondition, RegimeReport, UNIQUENESS_CONSTANT,
};

/// A single spin value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spin {
    /// The `-1` spin (vertex outside the independent set for the hardcore model).
    Minus,
    /// The `+1` spin (vertex inside the independent set for the hardcore model).
    Plus,
}

impl Spin {
    /// `+1.0` or `-1.0`.
    pub fn sign(self) -> f64 {
        match self {
            Spin::Plus => 1.0,
            Spin::Minus => -1.0,
        }
    }

    /// Whether this is the `+1` spin.
    pub fn is_plus(self) -> bool {
        self == Spin::Plus
    }

    /// The opposite spin.
    pub fn flipped(self) -> Spin {
        match self {
            Spin::Plus => Spin::Minus,
            Spin::Minus => Spin::Plus,
        }
    }

    /// Both spins, minus first.
    pub const BOTH: [Spin; 2] = [Spin::Minus, Spin::Plus];
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_plus() { "+" } else { "-" })
    }
}

/// A full assignment of spins to the vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    spins: Vec<Spin>,
}

impl Configuration {
    /// Wraps a spin vector.
    pub fn new(spins: Vec<Spin>) -> Self {
        Self { spins }
    }

    /// The configuration with every vertex at `-1`.
    pub fn all_minus(n: usize) -> Self {
        Self {
            spins: vec![Spin::Minus; n],
        }
    }

    /// Decodes a bit mask where bit `v` set means vertex `v` is `+1`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self {
            spins: (0..n)
                .map(|v| {
                    if mask >> v & 1 == 1 {
                        Spin::Plus
                    } else {
                        Spin::Minus
                    }
                })
                .collect(),
        }
    }

    /// Encodes as a bit mask; requires at most 64 vertices.
    pub fn to_mask(&self) -> u64 {
        debug_assert!(self.spins.len() <= 64);
        self.spins
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_plus())
            .fold(0, |m, (v, _)| m | 1 << v)
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.spins.len()
    }

    /// Whether there are no vertices.
    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    /// The spins as a slice.
    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    /// Spin of vertex `v`.
    pub fn get(&self, v: usize) -> Spin {
        self.spins[v]
    }

    /// Sets the spin of vertex `v`.
    pub fn set(&mut self, v: usize, spin: Spin) {
        self.spins[v] = spin;
    }

    /// Vertices carrying `+1`, in increasing order.
    pub fn plus_vertices(&self) -> Vec<usize> {
        self.spins
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_plus())
            .map(|(v, _)| v)
            .collect()
    }
}

/// A partial assignment: `Some(spin)` for pinned vertices, `None` for free ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pinning {
    values: Vec<Option<Spin>>,
}

impl Pinning {
    /// The empty pinning on `n` vertices.
    pub fn free(n: usize) -> Self {
        Self {
            values: vec![None; n],
        }
    }

    /// Builds a pinning from `(vertex, spin)` pairs; repeated vertices must agree.
    pub fn from_pairs(n: usize, pairs: &[(usize, Spin)]) -> Result<Self> {
        let mut pin = Self::free(n);
        for &(v, s) in pairs {
            if v >= n {
                return Err(Error::InvalidPin(format!("vertex {v} outside 0..{n}")));
            }
            match pin.values[v] {
                Some(prev) if prev != s => {
                    return Err(Error::InvalidPin(format!(
                        "vertex {v} pinned to both {prev} and {s}"
                    )))
                }
                _ => pin.values[v] = Some(s),
            }
        }
        Ok(pin)
    }

    /// Number of vertices the pinning is defined over.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Whether the pinning is defined over zero vertices.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The pinned spin of `v`, if any.
    pub fn get(&self, v: usize) -> Option<Spin> {
        self.values[v]
    }

    /// Pins `v` to `spin`.
    pub fn set(&mut self, v: usize, spin: Spin) {
        self.values[v] = Some(spin);
    }

    /// Removes the pin on `v`.
    pub fn clear(&mut self, v: usize) {
        self.values[v] = None;
    }

    /// Number of pinned vertices.
    pub fn pinned_count(&self) -> usize {
        self.values.iter().filter(|p| p.is_some()).count()
    }

    /// Iterates over `(vertex, spin)` for pinned vertices.
    pub fn pinned(&self) -> impl Iterator<Item = (usize, Spin)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|s| (v, s)))
    }

    /// Iterates over the free vertices.
    pub fn free_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_none())
            .map(|(v, _)| v)
    }

    /// Whether `config` agrees with every pinned vertex.
    pub fn agrees_with(&self, config: &Configuration) -> bool {
        self.pinned().all(|(v, s)| config.get(v) == s)
    }
}

/// An external field value: a real number or one of the two infinities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Field {
    /// A finite field.
    Finite(f64),
    /// `+infinity`, forcing the spin to `+1`.
    PosInf,
    /// `-infinity`, forcing the spin to `-1`.
    NegInf,
}

impl Field {
    /// Converts an `f64`, mapping the infinities to the dedicated variants.
    pub fn from_f64(x: f64) -> Result<Self> {
        if x.is_nan() {
            Err(Error::InvalidParameter("field is NaN".into()))
        } else if x == f64::INFINITY {
            Ok(Field::PosInf)
        } else if x == f64::NEG_INFINITY {
            Ok(Field::NegInf)
        } else {
            Ok(Field::Finite(x))
        }
    }

    /// The field as an `f64`, with infinities represented as such.
    pub fn value(self) -> f64 {
        match self {
            Field::Finite(x) => x,
            Field::PosInf => f64::INFINITY,
            Field::NegInf => f64::NEG_INFINITY,
        }
    }

    /// Whether the field is finite.
    pub fn is_finite(self) -> bool {
        matches!(self, Field::Finite(_))
    }

    /// The spin forced by an infinite field.
    pub fn forced_spin(self) -> Option<Spin> {
        match self {
            Field::Finite(_) => None,
            Field::PosInf => Some(Spin::Plus),
            Field::NegInf => Some(Spin::Minus),
        }
    }
}

/// Which family a model belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Hardcore,
    Ising,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Hardcore => "hardcore",
            ModelKind::Ising => "ising",
        })
    }
}

/// The hardcore model with per-vertex fugacities.
#[derive(Debug, Clone, PartialEq)]
pub struct HardcoreModel {
    graph: Graph,
    fugacity: Vec<f64>,
}

impl HardcoreModel {
    /// Validates that fugacities are finite, non-negative and one per vertex.
    pub fn new(graph: Graph, fugacity: Vec<f64>) -> Result<Self> {
        if fugacity.len() != graph.vertex_count() {
            return Err(Error::DimensionMismatch {
                what: "fugacity vector",
                got: fugacity.len(),
                expected: graph.vertex_count(),
            });
        }
        if let Some((v, l)) = fugacity
            .iter()
            .enumerate()
            .find(|(_, l)| !(l.is_finite() && **l >= 0.0))
        {
            return Err(Error::InvalidParameter(format!(
                "fugacity of vertex {v} is {l}, expected finite and >= 0"
            )));
        }
        Ok(Self { graph, fugacity })
    }

    /// Every vertex gets fugacity `lambda`.
    pub fn uniform(graph: Graph, lambda: f64) -> Result<Self> {
        let n = graph.vertex_count();
        Self::new(graph, vec![lambda; n])
    }

    /// The underlying graph.
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Fugacity of vertex `v`.
    pub fn fugacity(&self, v: usize) -> f64 {
        self.fugacity[v]
    }

    /// All fugacities.
    pub fn fugacities(&self) -> &[f64] {
        &self.fugacity
    }

    /// Largest fugacity, zero on the empty graph.
    pub fn max_fugacity(&self) -> f64 {
        self.fugacity.iter().copied().fold(0.0, f64::max)
    }

    /// The same graph with every fugacity multiplied by `s >= 0`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            graph: self.graph.clone(),
            fugacity: self.fugacity.iter().map(|l| l * s).collect(),
        }
    }

    /// The same graph with new fugacities (validated).
    pub fn with_fugacities(&self, fugacity: Vec<f64>) -> Result<Self> {
        Self::new(self.graph.clone(), fugacity)
    }
}

/// The Ising model with couplings on edges and extended-real external fields.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    graph: Graph,
    /// `couplings[v][k]` is the coupling on the edge to `graph.neighbors(v)[k]`.
    couplings: Vec<Vec<f64>>,
    fields: Vec<Field>,
}

impl IsingModel {
    /// Builds a model from `(u, v, J)` triples; edges without a triple get coupling zero.
    ///
    /// Triples on non-edges, non-finite couplings and conflicting repeats are rejected.
    pub fn new(
        graph: Graph,
        couplings: &[(usize, usize, f64)],
        fields: Vec<Field>,
    ) -> Result<Self> {
        let n = graph.vertex_count();
        if fields.len() != n {
            return Err(Error::DimensionMismatch {
                what: "field vector",
                got: fields.len(),
                expected: n,
            });
        }
        if let Some(v) = fields
            .iter()
            .position(|f| matches!(f, Field::Finite(x) if !x.is_finite()))
        {
            return Err(Error::InvalidParameter(format!(
                "field of vertex {v} is not a valid extended real"
            )));
        }
        let mut aligned: Vec<Vec<Option<f64>>> =
            (0..n).map(|v| vec![None; graph.degree(v)]).collect();
        for &(u, v, j) in couplings {
            if !j.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "coupling on ({u}, {v}) is {j}, expected finite"
                )));
            }
            let (Some(ku), Some(kv)) = (graph.neighbor_index(u, v), graph.neighbor_index(v, u))
            else {
                return Err(Error::InvalidParameter(format!(
                    "coupling given on non-edge ({u}, {v})"
                )));
            };
            if let Some(prev) = aligned[u][ku] {
                if prev != j {
                    return Err(Error::InvalidParameter(format!(
                        "asymmetric or conflicting coupling on ({u}, {v}): {prev} vs {j}"
                    )));
                }
            }
            aligned[u][ku] = Some(j);
            aligned[v][kv] = Some(j);
        }
        let couplings = aligned
            .into_iter()
            .map(|row| row.into_iter().map(|j| j.unwrap_or(0.0)).collect())
            .collect();
        Ok(Self {
            graph,
            couplings,
            fields,
        })
    }

    /// Every edge gets coupling `beta`.
    pub fn uniform(graph: Graph, beta: f64, fields: Vec<Field>) -> Result<Self> {
        let triples: Vec<_> = graph.edges().map(|(u, v)| (u, v, beta)).collect();
        Self::new(graph, &triples, fields)
    }

    /// The underlying graph.
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Coupling on `{u, v}`, zero if not an edge.
    pub fn coupling(&self, u: usize, v: usize) -> f64 {
        self.graph
            .neighbor_index(u, v)
            .map_or(0.0, |k| self.couplings[u][k])
    }

    /// Couplings of `v`, aligned with `graph().neighbors(v)`.
    pub fn couplings_of(&self, v: usize) -> &[f64] {
        &self.couplings[v]
    }

    /// Edge couplings as `(u, v, J)` with `u < v`.
    pub fn coupling_triples(&self) -> Vec<(usize, usize, f64)> {
        self.graph
            .edges()
            .map(|(u, v)| (u, v, self.coupling(u, v)))
            .collect()
    }

    /// Field of vertex `v`.
    pub fn field(&self, v: usize) -> Field {
        self.fields[v]
    }

    /// All fields.
    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    /// Whether every field is finite.
    pub fn is_soft(&self) -> bool {
        self.fields.iter().all(|f| f.is_finite())
    }

    /// Multiplies every coupling and finite field by `s`; infinite fields are kept.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            graph: self.graph.clone(),
            couplings: self
                .couplings
                .iter()
                .map(|row| row.iter().map(|j| j * s).collect())
                .collect(),
            fields: self
                .fields
                .iter()
                .map(|f| match *f {
                    Field::Finite(x) => Field::Finite(x * s),
                    other => other,
                })
                .collect(),
        }
    }

    /// Sum of `|J|` over the edges at `v`.
    pub fn absolute_coupling_sum(&self, v: usize) -> f64 {
        self.couplings[v].iter().map(|j| j.abs()).sum()
    }
}

/// Either supported model.
#[derive(Debug, Clone, PartialEq)]
pub enum SpinSystem {
    Hardcore(HardcoreModel),
    Ising(IsingModel),
}

impl From<HardcoreModel> for SpinSystem {
    fn from(m: HardcoreModel) -> Self {
        SpinSystem::Hardcore(m)
    }
}

impl From<IsingModel> for SpinSystem {
    fn from(m: IsingModel) -> Self {
        SpinSystem::Ising(m)
    }
}

impl SpinSystem {
    /// The model family.
    pub fn kind(&self) -> ModelKind {
        match self {
            SpinSystem::Hardcore(_) => ModelKind::Hardcore,
            SpinSystem::Ising(_) => ModelKind::Ising,
        }
    }

    /// The underlying graph.
    pub fn graph(&self) -> &Graph {
        match self {
            SpinSystem::Hardcore(m) => m.graph(),
            SpinSystem::Ising(m) => m.graph(),
        }
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.graph().vertex_count()
    }

    /// Hardcore models are always soft in the sense used here (zero fugacities are
    /// handled directly); Ising models are soft when all fields are finite.
    pub fn is_soft(&self) -> bool {
        match self {
            SpinSystem::Hardcore(_) => true,
            SpinSystem::Ising(m) => m.is_soft(),
        }
    }

    /// The hardcore model, if this is one.
    pub fn as_hardcore(&self) -> Option<&HardcoreModel> {
        match self {
            SpinSystem::Hardcore(m) => Some(m),
            SpinSystem::Ising(_) => None,
        }
    }

    /// The Ising model, if this is one.
    pub fn as_ising(&self) -> Option<&IsingModel> {
        match self {
            SpinSystem::Ising(m) => Some(m),
            SpinSystem::Hardcore(_) => None,
        }
    }

    /// Log of the unnormalised weight, `-inf` for zero weight.
    ///
    /// For the Ising model an infinite field contributes nothing when the spin agrees
    /// with it and makes the weight zero otherwise.
    pub fn log_weight(&self, config: &Configuration) -> Result<f64> {
        if config.len() != self.vertex_count() {
            return Err(Error::InvalidConfiguration(format!(
                "configuration has {} spins, model has {} vertices",
                config.len(),
                self.vertex_count()
            )));
        }
        Ok(self.log_weight_of(config.spins()))
    }

    /// [`SpinSystem::log_weight`] without the length check.
    pub fn log_weight_of(&self, spins: &[Spin]) -> f64 {
        match self {
            SpinSystem::Hardcore(m) => {
                let mut total = 0.0;
                for (v, s) in spins.iter().enumerate() {
                    if s.is_plus() {
                        if m.graph
                            .neighbors(v)
                            .iter()
                            .any(|&u| u < v && spins[u].is_plus())
                        {
                            return f64::NEG_INFINITY;
                        }
                        total += m.fugacity[v].ln();
                    }
                }
                total
            }
            SpinSystem::Ising(m) => {
                let mut total = 0.0;
                for (v, s) in spins.iter().enumerate() {
                    match m.fields[v] {
                        Field::Finite(h) => total += h * s.sign(),
                        inf => {
                            if inf.forced_spin() != Some(*s) {
                                return f64::NEG_INFINITY;
                            }
                        }
                    }
                    for (k, &u) in m.graph.neighbors(v).iter().enumerate() {
                        if u < v {
                            total += m.couplings[v][k] * s.sign() * spins[u].sign();
                        }
                    }
                }
                total
            }
        }
    }

    /// Log-odds of `+1` against `-1` at `v` given the spins of all other vertices.
    ///
    /// The heat-bath probability of `+1` is `1 / (1 + exp(-odds))`; the result may be
    /// `-inf` (the `+1` spin is impossible) or `+inf`.
    pub fn conditional_log_odds(&self, v: usize, spins: &[Spin]) -> f64 {
        match self {
            SpinSystem::Hardcore(m) => {
                if m.graph.neighbors(v).iter().any(|&u| spins[u].is_plus()) {
                    f64::NEG_INFINITY
                } else {
                    m.fugacity[v].ln()
                }
            }
            SpinSystem::Ising(m) => match m.fields[v] {
                Field::Finite(h) => {
                    let local: f64 = m
                        .graph
                        .neighbors(v)
                        .iter()
                        .zip(&m.couplings[v])
                        .map(|(&u, &j)| j * spins[u].sign())
                        .sum();
                    2.0 * (h + local)
                }
                Field::PosInf => f64::INFINITY,
                Field::NegInf => f64::NEG_INFINITY,
            },
        }
    }

    /// Checks that `other` is a model of the same kind on the same graph.
    pub fn ensure_comparable(&self, other: &SpinSystem) -> Result<()> {
        if self.kind() != other.kind() {
            return Err(Error::InvalidPair(format!(
                "model kinds differ: {} vs {}",
                self.kind(),
                other.kind()
            )));
        }
        if self.graph() != other.graph() {
            return Err(Error::InvalidPair(
                "models are defined on different graphs".into(),
            ));
        }
        Ok(())
    }
}

/// `1 / (1 + exp(-x))`, exact at the infinities.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hc(n_edges: &[(usize, usize)], n: usize, lambda: &[f64]) -> SpinSystem {
        HardcoreModel::new(Graph::new(n, n_edges).unwrap(), lambda.to_vec())
            .unwrap()
            .into()
    }

    #[test]
    fn hardcore_weights() {
        let m = hc(&[(0, 1)], 2, &[2.0, 3.0]);
        let w = |mask| {
            m.log_weight(&Configuration::from_mask(2, mask))
                .unwrap()
                .exp()
        };
        assert_eq!(w(0b00), 1.0);
        assert!((w(0b01) - 2.0).abs() < 1e-15);
        assert!((w(0b10) - 3.0).abs() < 1e-15);
        assert_eq!(w(0b11), 0.0);
    }

    #[test]
    fn zero_fugacity_plus_has_zero_weight() {
        let m = hc(&[], 1, &[0.0]);
        assert_eq!(
            m.log_weight(&Configuration::from_mask(1, 1)).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(m.log_weight(&Configuration::from_mask(1, 0)).unwrap(), 0.0);
    }

    #[test]
    fn ising_weights_with_infinite_field() {
        let g = Graph::path(2);
        let m: SpinSystem =
            IsingModel::new(g, &[(0, 1, 0.25)], vec![Field::PosInf, Field::Finite(0.5)])
                .unwrap()
                .into();
        let lw = |mask| m.log_weight(&Configuration::from_mask(2, mask)).unwrap();
        assert_eq!(lw(0b00), f64::NEG_INFINITY);
        assert!((lw(0b01) - (-0.25 - 0.5)).abs() < 1e-15);
        assert!((lw(0b11) - (0.25 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn ising_rejects_bad_couplings() {
        let g = Graph::path(3);
        let f = vec![Field::Finite(0.0); 3];
        assert!(IsingModel::new(g.clone(), &[(0, 2, 1.0)], f.clone()).is_err());
        assert!(IsingModel::new(g.clone(), &[(0, 1, 1.0), (1, 0, 2.0)], f.clone()).is_err());
        assert!(IsingModel::new(g.clone(), &[(0, 1, f64::NAN)], f.clone()).is_err());
        let ok = IsingModel::new(g, &[(1, 0, 0.5)], f).unwrap();
        assert_eq!(ok.coupling(0, 1), 0.5);
        assert_eq!(ok.coupling(1, 2), 0.0);
    }

    #[test]
    fn log_weight_rejects_wrong_length() {
        let m = hc(&[], 2, &[1.0, 1.0]);
        assert!(matches!(
            m.log_weight(&Configuration::all_minus(3)),
            Err(Error::InvalidConfiguration(_))
        ));
    }

    #[test]
    fn conditional_odds_match_weight_ratio() {
        let g = Graph::cycle(4).unwrap();
        let m: SpinSystem = IsingModel::new(
            g,
            &[(0, 1, 0.3), (1, 2, -0.2), (2, 3, 0.1), (0, 3, 0.7)],
            vec![
                Field::Finite(0.1),
                Field::Finite(-0.4),
                Field::Finite(0.0),
                Field::Finite(0.2),
            ],
        )
        .unwrap()
        .into();
        for mask in 0..16u64 {
            let c = Configuration::from_mask(4, mask);
            for v in 0..4 {
                let mut plus = c.clone();
                plus.set(v, Spin::Plus);
                let mut minus = c.clone();
                minus.set(v, Spin::Minus);
                let ratio = m.log_weight(&plus).unwrap() - m.log_weight(&minus).unwrap();
                assert!((ratio - m.conditional_log_odds(v, c.spins())).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn logistic_limits() {
        assert_eq!(logistic(f64::INFINITY), 1.0);
        assert_eq!(logistic(f64::NEG_INFINITY), 0.0);
        assert!((logistic(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn pinning_rejects_conflicts() {
        assert!(Pinning::from_pairs(2, &[(0, Spin::Plus), (0, Spin::Minus)]).is_err());
        assert!(Pinning::from_pairs(2, &[(2, Spin::Plus)]).is_err());
        let p = Pinning::from_pairs(3, &[(1, Spin::Plus)]).unwrap();
        assert_eq!(p.free_vertices().collect::<Vec<_>>(), vec![0, 2]);
    }
}
