//! Reduction of a pair of models to a soft pair, or early resolution of the distance.

use serde::Serialize;

use super::{contract, marginal_lower_bound, Configuration, Pinning, Spin, SpinSystem};
use crate::error::Result;

/// A soft pair on the vertices that survived preprocessing.
#[derive(Debug, Clone)]
pub struct ReducedPair {
    pub mu: SpinSystem,
    pub nu: SpinSystem,
    /// `kept[i]` is the original vertex behind reduced vertex `i`.
    pub kept: Vec<usize>,
    /// Spin fixed on each removed original vertex.
    pub fixed: Vec<Option<Spin>>,
}

impl ReducedPair {
    /// Extends a reduced configuration by the fixed spins.
    pub fn lift(&self, reduced: &Configuration) -> Configuration {
        let mut spins: Vec<Spin> = self
            .fixed
            .iter()
            .map(|s| s.unwrap_or(Spin::Minus))
            .collect();
        for (i, &v) in self.kept.iter().enumerate() {
            spins[v] = reduced.get(i);
        }
        Configuration::new(spins)
    }
}

/// Outcome of preprocessing a pair.
#[derive(Debug, Clone)]
pub enum Preprocessed {
    /// The distance is known exactly (opposite infinite fields at `vertex`).
    Resolved { tv: f64, vertex: usize },
    /// One side forbids a spin the other allows at `vertex`; the distance is at least `bound`.
    BigGap { bound: f64, vertex: usize },
    /// Both models reduced to soft models on a common induced subgraph.
    Reduced(ReducedPair),
}

/// Summary of a preprocessing outcome for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreprocessKind {
    Resolved,
    BigGap,
    Reduced,
}

impl Preprocessed {
    /// The outcome variant without its payload.
    pub fn kind(&self) -> PreprocessKind {
        match self {
            Preprocessed::Resolved { .. } => PreprocessKind::Resolved,
            Preprocessed::BigGap { .. } => PreprocessKind::BigGap,
            Preprocessed::Reduced(_) => PreprocessKind::Reduced,
        }
    }
}

/// Preprocesses a comparable pair.
///
/// Ising: opposite infinite fields at a vertex resolve the distance to one; an
/// infinite field on one side only signals a big gap; equal infinite fields are
/// contracted into the neighbours' fields. Hardcore: a zero fugacity on one side
/// only signals a big gap; zero on both sides removes the vertex.
pub fn preprocess(mu: &SpinSystem, nu: &SpinSystem) -> Result<Preprocessed> {
    mu.ensure_comparable(nu)?;
    let n = mu.vertex_count();
    let big_gap = |vertex| -> Result<Preprocessed> {
        let bound = marginal_lower_bound(mu)?
            .bound
            .min(marginal_lower_bound(nu)?.bound);
        Ok(Preprocessed::BigGap { bound, vertex })
    };
    let pin = match (mu, nu) {
        (SpinSystem::Ising(a), SpinSystem::Ising(b)) => {
            let forced: Vec<_> = (0..n)
                .map(|v| (a.field(v).forced_spin(), b.field(v).forced_spin()))
                .collect();
            if let Some(v) = forced
                .iter()
                .position(|&(x, y)| matches!((x, y), (Some(p), Some(q)) if p != q))
            {
                return Ok(Preprocessed::Resolved { tv: 1.0, vertex: v });
            }
            if let Some(v) = forced.iter().position(|(x, y)| x.is_some() != y.is_some()) {
                return big_gap(v);
            }
            Pinning::free(n)
        }
        (SpinSystem::Hardcore(a), SpinSystem::Hardcore(b)) => {
            let zero: Vec<_> = (0..n)
                .map(|v| (a.fugacity(v) == 0.0, b.fugacity(v) == 0.0))
                .collect();
            if let Some(v) = zero.iter().position(|(x, y)| x != y) {
                return big_gap(v);
            }
            let mut pin = Pinning::free(n);
            for (v, _) in zero.iter().enumerate().filter(|(_, z)| z.0) {
                pin.set(v, Spin::Minus);
            }
            pin
        }
        _ => unreachable!("kinds checked above"),
    };
    let cm = contract(mu, &pin)?.expect("pinning zero-fugacity vertices to -1 is feasible");
    let cn = contract(nu, &pin)?.expect("pinning zero-fugacity vertices to -1 is feasible");
    debug_assert_eq!(cm.kept, cn.kept);
    Ok(Preprocessed::Reduced(ReducedPair {
        mu: cm.reduced,
        nu: cn.reduced,
        kept: cm.kept,
        fixed: cm.fixed,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::model::{Field, HardcoreModel, IsingModel};

    fn ising(fields: Vec<Field>) -> SpinSystem {
        IsingModel::uniform(Graph::path(fields.len()), 0.2, fields)
            .unwrap()
            .into()
    }

    #[test]
    fn opposite_infinities_resolve_to_one() {
        let mu = ising(vec![Field::PosInf, Field::Finite(0.0)]);
        let nu = ising(vec![Field::NegInf, Field::Finite(0.0)]);
        assert!(
            matches!(preprocess(&mu, &nu).unwrap(), Preprocessed::Resolved { tv, vertex: 0 } if tv == 1.0)
        );
    }

    #[test]
    fn one_sided_infinity_is_a_big_gap() {
        let mu = ising(vec![Field::PosInf, Field::Finite(0.0)]);
        let nu = ising(vec![Field::Finite(0.0), Field::Finite(0.0)]);
        let Preprocessed::BigGap { bound, vertex } = preprocess(&mu, &nu).unwrap() else {
            panic!()
        };
        assert_eq!(vertex, 0);
        assert!(bound > 0.0 && bound <= 0.5);
    }

    #[test]
    fn equal_infinities_are_contracted() {
        let mu = ising(vec![Field::PosInf, Field::Finite(0.1), Field::Finite(0.0)]);
        let nu = ising(vec![Field::PosInf, Field::Finite(0.3), Field::Finite(0.0)]);
        let Preprocessed::Reduced(r) = preprocess(&mu, &nu).unwrap() else {
            panic!()
        };
        assert_eq!(r.kept, vec![1, 2]);
        assert!(r.mu.is_soft() && r.nu.is_soft());
        let h = |m: &SpinSystem| m.as_ising().unwrap().field(0).value();
        assert!((h(&r.mu) - 0.3).abs() < 1e-15);
        assert!((h(&r.nu) - 0.5).abs() < 1e-15);
        assert_eq!(r.lift(&Configuration::all_minus(2)).get(0), Spin::Plus);
    }

    #[test]
    fn hardcore_zero_fugacities() {
        let g = Graph::path(3);
        let mu: SpinSystem = HardcoreModel::new(g.clone(), vec![0.0, 1.0, 1.0])
            .unwrap()
            .into();
        let nu: SpinSystem = HardcoreModel::new(g.clone(), vec![0.0, 1.0, 2.0])
            .unwrap()
            .into();
        let Preprocessed::Reduced(r) = preprocess(&mu, &nu).unwrap() else {
            panic!()
        };
        assert_eq!(r.kept, vec![1, 2]);
        let nu2: SpinSystem = HardcoreModel::new(g, vec![0.5, 1.0, 2.0]).unwrap().into();
        assert!(matches!(
            preprocess(&mu, &nu2).unwrap(),
            Preprocessed::BigGap { vertex: 0, .. }
        ));
    }
}
