//! Contraction of a pinning into a smaller model on the free vertices.

use super::{Configuration, Field, HardcoreModel, IsingModel, Pinning, Spin, SpinSystem};
use crate::error::{Error, Result};

/// A model restricted to the vertices left free by a pinning.
///
/// For every configuration `sigma` that agrees with the fixed spins,
/// `log w(sigma) = log_offset + log w_reduced(restrict(sigma))`.
#[derive(Debug, Clone)]
pub struct Contraction {
    /// The model on the remaining free vertices.
    pub reduced: SpinSystem,
    /// `kept[i]` is the original vertex behind reduced vertex `i`.
    pub kept: Vec<usize>,
    /// Spin fixed at each original vertex (by the pinning, an infinite field or hardcore exclusion).
    pub fixed: Vec<Option<Spin>>,
    /// Log weight contributed by the fixed part.
    pub log_offset: f64,
}

impl Contraction {
    /// Extends a configuration of the reduced model by the fixed spins.
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

    /// Restricts a configuration of the original model to the free vertices.
    pub fn restrict(&self, config: &Configuration) -> Configuration {
        Configuration::new(self.kept.iter().map(|&v| config.get(v)).collect())
    }
}

/// Contracts `pin` into `model`.
///
/// Ising vertices with infinite fields are treated as pinned to their forced spin, so
/// the reduced model is always soft. Returns `Ok(None)` when every configuration
/// consistent with the pinning has zero weight.
pub fn contract(model: &SpinSystem, pin: &Pinning) -> Result<Option<Contraction>> {
    let n = model.vertex_count();
    if pin.len() != n {
        return Err(Error::InvalidPin(format!(
            "pinning covers {} vertices, model has {n}",
            pin.len()
        )));
    }
    match model {
        SpinSystem::Hardcore(m) => Ok(contract_hardcore(m, pin)),
        SpinSystem::Ising(m) => Ok(contract_ising(m, pin)),
    }
}

fn contract_hardcore(m: &HardcoreModel, pin: &Pinning) -> Option<Contraction> {
    let g = m.graph();
    let mut fixed: Vec<Option<Spin>> = (0..g.vertex_count()).map(|v| pin.get(v)).collect();
    let mut log_offset = 0.0;
    for (v, s) in pin.pinned() {
        if !s.is_plus() {
            continue;
        }
        if m.fugacity(v) == 0.0
            || g.neighbors(v)
                .iter()
                .any(|&u| pin.get(u) == Some(Spin::Plus))
        {
            return None;
        }
        log_offset += m.fugacity(v).ln();
        for &u in g.neighbors(v) {
            fixed[u] = Some(Spin::Minus);
        }
    }
    let keep: Vec<bool> = fixed.iter().map(Option::is_none).collect();
    let sub = g.induced(&keep);
    let fugacity = sub.original.iter().map(|&v| m.fugacity(v)).collect();
    let reduced = HardcoreModel::new(sub.graph, fugacity).expect("restriction of a valid model");
    Some(Contraction {
        reduced: reduced.into(),
        kept: sub.original,
        fixed,
        log_offset,
    })
}

fn contract_ising(m: &IsingModel, pin: &Pinning) -> Option<Contraction> {
    let g = m.graph();
    let n = g.vertex_count();
    let mut fixed: Vec<Option<Spin>> = Vec::with_capacity(n);
    for v in 0..n {
        let forced = m.field(v).forced_spin();
        match (pin.get(v), forced) {
            (Some(p), Some(f)) if p != f => return None,
            (Some(p), _) => fixed.push(Some(p)),
            (None, f) => fixed.push(f),
        }
    }
    let mut log_offset = 0.0;
    for v in 0..n {
        let Some(s) = fixed[v] else { continue };
        if let Field::Finite(h) = m.field(v) {
            log_offset += h * s.sign();
        }
        for (&u, &j) in g.neighbors(v).iter().zip(m.couplings_of(v)) {
            if u < v {
                if let Some(t) = fixed[u] {
                    log_offset += j * s.sign() * t.sign();
                }
            }
        }
    }
    let keep: Vec<bool> = fixed.iter().map(Option::is_none).collect();
    let sub = g.induced(&keep);
    let fields = sub
        .original
        .iter()
        .map(|&v| {
            let Field::Finite(h) = m.field(v) else {
                unreachable!("free vertices have finite fields")
            };
            let shift: f64 = g
                .neighbors(v)
                .iter()
                .zip(m.couplings_of(v))
                .filter_map(|(&u, &j)| fixed[u].map(|s| j * s.sign()))
                .sum();
            Field::Finite(h + shift)
        })
        .collect();
    let triples: Vec<_> = sub
        .graph
        .edges()
        .map(|(a, b)| (a, b, m.coupling(sub.original[a], sub.original[b])))
        .collect();
    let reduced =
        IsingModel::new(sub.graph, &triples, fields).expect("restriction of a valid model");
    Some(Contraction {
        reduced: reduced.into(),
        kept: sub.original,
        fixed,
        log_offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn check_identity(model: &SpinSystem, pin: &Pinning) {
        let n = model.vertex_count();
        let c = contract(model, pin).unwrap();
        for mask in 0..1u64 << n {
            let cfg = Configuration::from_mask(n, mask);
            if !pin.agrees_with(&cfg) {
                continue;
            }
            let full = model.log_weight(&cfg).unwrap();
            match &c {
                None => assert_eq!(full, f64::NEG_INFINITY),
                Some(c) => {
                    let consistent = c
                        .fixed
                        .iter()
                        .enumerate()
                        .all(|(v, s)| s.is_none_or(|s| cfg.get(v) == s));
                    if !consistent {
                        assert_eq!(full, f64::NEG_INFINITY, "mask {mask:b}");
                        continue;
                    }
                    let red = c.log_offset + c.reduced.log_weight(&c.restrict(&cfg)).unwrap();
                    if full == f64::NEG_INFINITY {
                        assert_eq!(red, f64::NEG_INFINITY);
                    } else {
                        assert!((full - red).abs() < 1e-12, "mask {mask:b}: {full} vs {red}");
                    }
                    assert_eq!(c.lift(&c.restrict(&cfg)), cfg);
                }
            }
        }
    }

    #[test]
    fn hardcore_contraction_preserves_weights() {
        let m: SpinSystem =
            HardcoreModel::new(Graph::cycle(5).unwrap(), vec![0.5, 1.0, 2.0, 0.0, 3.0])
                .unwrap()
                .into();
        check_identity(&m, &Pinning::from_pairs(5, &[(1, Spin::Plus)]).unwrap());
        check_identity(
            &m,
            &Pinning::from_pairs(5, &[(0, Spin::Minus), (2, Spin::Plus)]).unwrap(),
        );
        check_identity(&m, &Pinning::from_pairs(5, &[(3, Spin::Plus)]).unwrap());
        check_identity(
            &m,
            &Pinning::from_pairs(5, &[(1, Spin::Plus), (2, Spin::Plus)]).unwrap(),
        );
    }

    #[test]
    fn ising_contraction_preserves_weights() {
        let g = Graph::new(4, &[(0, 1), (1, 2), (2, 3), (0, 2)]).unwrap();
        let m: SpinSystem = IsingModel::new(
            g,
            &[(0, 1, 0.3), (1, 2, -0.6), (2, 3, 0.2), (0, 2, 0.1)],
            vec![
                Field::Finite(0.2),
                Field::NegInf,
                Field::Finite(-0.1),
                Field::Finite(0.4),
            ],
        )
        .unwrap()
        .into();
        check_identity(&m, &Pinning::free(4));
        check_identity(&m, &Pinning::from_pairs(4, &[(3, Spin::Plus)]).unwrap());
        check_identity(&m, &Pinning::from_pairs(4, &[(1, Spin::Plus)]).unwrap());
        let c = contract(&m, &Pinning::free(4)).unwrap().unwrap();
        assert!(c.reduced.is_soft());
        assert_eq!(c.kept, vec![0, 2, 3]);
    }
}
