//! Parameter distance, regime checks and the total-variation lower-bound constant.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{
    contract, marginal_lower_bound, HardcoreModel, IsingModel, ModelKind, Pinning, SpinSystem,
};
use crate::error::{Error, Result};

/// Lower-bound constant for hardcore pairs in the uniqueness regime.
pub const UNIQUENESS_CONSTANT: f64 = 1.0 / 5000.0;

/// Slack used when comparing the eigenvalue spread with one.
const SPECTRAL_TOLERANCE: f64 = 1e-9;

/// Relative slack for boundary comparisons that should accept equality.
const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Distance between the parameters of two comparable soft models.
///
/// Hardcore: the largest fugacity difference. Ising: the larger of the largest
/// coupling difference and the largest field difference divided by `deg + 1`.
pub fn parameter_distance(mu: &SpinSystem, nu: &SpinSystem) -> Result<f64> {
    mu.ensure_comparable(nu)?;
    match (mu, nu) {
        (SpinSystem::Hardcore(a), SpinSystem::Hardcore(b)) => Ok(a
            .fugacities()
            .iter()
            .zip(b.fugacities())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)),
        (SpinSystem::Ising(a), SpinSystem::Ising(b)) => {
            if !a.is_soft() || !b.is_soft() {
                return Err(Error::MustPreprocess(
                    "parameter distance needs finite fields".into(),
                ));
            }
            let g = a.graph();
            let coupling = g
                .edges()
                .map(|(u, v)| (a.coupling(u, v) - b.coupling(u, v)).abs())
                .fold(0.0, f64::max);
            let field = (0..g.vertex_count())
                .map(|v| {
                    (a.field(v).value() - b.field(v).value()).abs() / (g.degree(v) as f64 + 1.0)
                })
                .fold(0.0, f64::max);
            Ok(coupling.max(field))
        }
        _ => unreachable!("kinds checked above"),
    }
}

/// The uniqueness threshold `(D-1)^(D-1) / (D-2)^D`, infinite for `D <= 2`.
pub fn critical_fugacity(max_degree: usize) -> f64 {
    if max_degree <= 2 {
        return f64::INFINITY;
    }
    let d = max_degree as f64;
    ((d - 1.0) * (d - 1.0).ln() - d * (d - 2.0).ln()).exp()
}

/// The largest gap `eta` with every fugacity at most `(1 - eta)` times the critical value.
///
/// Returns `Some(1.0)` when the maximum degree is at most two and `None` when some
/// fugacity exceeds the critical value.
pub fn check_uniqueness(model: &HardcoreModel) -> Option<f64> {
    let critical = critical_fugacity(model.graph().max_degree());
    if critical.is_infinite() {
        return Some(1.0);
    }
    let largest = model.max_fugacity();
    (largest <= critical * (1.0 + BOUNDARY_TOLERANCE)).then(|| (1.0 - largest / critical).max(0.0))
}

/// Which sufficient condition for rapid mixing of an Ising model holds, with its witness.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "condition", rename_all = "kebab-case")]
pub enum IsingCondition {
    /// The eigenvalue spread of the coupling matrix is at most `1 - gap`.
    Spectral { spread: f64, gap: f64 },
    /// All couplings and fields are non-negative.
    Ferromagnetic { min_coupling: f64, min_field: f64 },
    /// Uniform non-positive coupling `beta` with `exp(2 beta) >= (D - 2) / D`.
    Antiferromagnetic {
        beta: f64,
        max_degree: usize,
        threshold: f64,
    },
}

/// Checks the spectral, ferromagnetic and antiferromagnetic conditions in that order.
pub fn check_ising_condition(model: &IsingModel) -> Result<Option<IsingCondition>> {
    if !model.is_soft() {
        return Err(Error::MustPreprocess(
            "Ising conditions are checked on soft models".into(),
        ));
    }
    let g = model.graph();
    let n = g.vertex_count();
    let spread = if n == 0 {
        0.0
    } else {
        let mut j = DMatrix::<f64>::zeros(n, n);
        for (u, v, c) in model.coupling_triples() {
            j[(u, v)] = c;
            j[(v, u)] = c;
        }
        let eig = j.symmetric_eigenvalues();
        eig.max() - eig.min()
    };
    if spread <= 1.0 - SPECTRAL_TOLERANCE {
        return Ok(Some(IsingCondition::Spectral {
            spread,
            gap: 1.0 - spread,
        }));
    }
    let triples = model.coupling_triples();
    let min_coupling = triples.iter().map(|t| t.2).fold(f64::INFINITY, f64::min);
    let min_field = model
        .fields()
        .iter()
        .map(|f| f.value())
        .fold(f64::INFINITY, f64::min);
    if min_coupling >= 0.0 && min_field >= 0.0 {
        return Ok(Some(IsingCondition::Ferromagnetic {
            min_coupling,
            min_field,
        }));
    }
    if let Some(&(_, _, beta)) = triples.first() {
        let uniform = triples
            .iter()
            .all(|t| (t.2 - beta).abs() <= BOUNDARY_TOLERANCE * beta.abs().max(1.0));
        let max_degree = g.max_degree();
        let threshold = (max_degree as f64 - 2.0) / max_degree as f64;
        if uniform && beta <= 0.0 && (2.0 * beta).exp() >= threshold - BOUNDARY_TOLERANCE {
            return Ok(Some(IsingCondition::Antiferromagnetic {
                beta,
                max_degree,
                threshold,
            }));
        }
    }
    Ok(None)
}

/// Summary of the regime checks for one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub kind: ModelKind,
    pub vertex_count: usize,
    pub edge_count: usize,
    pub max_degree: usize,
    pub soft: bool,
    /// Hardcore only: the uniqueness gap, absent outside uniqueness.
    pub uniqueness_gap: Option<f64>,
    /// Ising only: the first rapid-mixing condition that holds (checked on the soft part).
    pub ising_condition: Option<IsingCondition>,
    /// Lower bound on every feasible conditional marginal, absent if it could not be computed.
    pub marginal_bound: Option<f64>,
    /// Why the marginal bound is absent.
    pub marginal_bound_error: Option<String>,
}

impl RegimeReport {
    /// Whether the hardcore uniqueness condition holds with a strictly positive gap.
    pub fn in_uniqueness(&self) -> bool {
        self.uniqueness_gap.is_some_and(|g| g > 0.0)
    }

    /// Whether the model is in a regime where Glauber dynamics is known to mix rapidly.
    pub fn mixing_guaranteed(&self) -> bool {
        match self.kind {
            ModelKind::Hardcore => self.in_uniqueness(),
            ModelKind::Ising => self.ising_condition.is_some(),
        }
    }

    /// The report describing a pair: conditions must hold on both sides, bounds take the minimum.
    pub fn merge(&self, other: &RegimeReport) -> RegimeReport {
        let both = |a: Option<f64>, b: Option<f64>| a.zip(b).map(|(x, y)| x.min(y));
        RegimeReport {
            kind: self.kind,
            vertex_count: self.vertex_count,
            edge_count: self.edge_count,
            max_degree: self.max_degree,
            soft: self.soft && other.soft,
            uniqueness_gap: both(self.uniqueness_gap, other.uniqueness_gap),
            ising_condition: other
                .ising_condition
                .as_ref()
                .and(self.ising_condition.clone()),
            marginal_bound: both(self.marginal_bound, other.marginal_bound),
            marginal_bound_error: self
                .marginal_bound_error
                .clone()
                .or_else(|| other.marginal_bound_error.clone()),
        }
    }
}

/// Runs every regime check on one model.
pub fn regime_report(model: &SpinSystem) -> Result<RegimeReport> {
    let g = model.graph();
    let (uniqueness_gap, ising_condition) = match model {
        SpinSystem::Hardcore(m) => (check_uniqueness(m), None),
        SpinSystem::Ising(_) => {
            let soft_part = contract(model, &Pinning::free(g.vertex_count()))?
                .expect("an empty pinning is always feasible for the Ising model");
            let reduced = soft_part
                .reduced
                .as_ising()
                .expect("contraction keeps the kind");
            (None, check_ising_condition(reduced)?)
        }
    };
    let (marginal_bound, marginal_bound_error) = match marginal_lower_bound(model) {
        Ok(b) => (Some(b.bound), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(RegimeReport {
        kind: model.kind(),
        vertex_count: g.vertex_count(),
        edge_count: g.edge_count(),
        max_degree: g.max_degree(),
        soft: model.is_soft(),
        uniqueness_gap,
        ising_condition,
        marginal_bound,
        marginal_bound_error,
    })
}

/// The constant `C` with `d_TV >= C * d_par`, taking the largest case that applies.
///
/// Hardcore: `1/5000` in uniqueness and `b^3` when `b`-marginally bounded.
/// Ising: `b^2 / 2` for soft `b`-marginally bounded models.
pub fn tv_lower_bound_constant(kind: ModelKind, regime: &RegimeReport) -> Result<f64> {
    let candidates: Vec<f64> = match kind {
        ModelKind::Hardcore => {
            let unique = regime.in_uniqueness().then_some(UNIQUENESS_CONSTANT);
            let bounded = regime.marginal_bound.map(|b| b.powi(3));
            unique.into_iter().chain(bounded).collect()
        }
        ModelKind::Ising => {
            if regime.soft {
                regime
                    .marginal_bound
                    .map(|b| b * b / 2.0)
                    .into_iter()
                    .collect()
            } else {
                Vec::new()
            }
        }
    };
    candidates.into_iter().reduce(f64::max).ok_or_else(|| {
        Error::NoLowerBound(format!(
            "{kind} pair is neither in uniqueness nor marginally bounded"
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::model::Field;

    fn soft(n: usize, h: f64) -> Vec<Field> {
        vec![Field::Finite(h); n]
    }

    #[test]
    fn critical_fugacity_values() {
        assert_eq!(critical_fugacity(2), f64::INFINITY);
        assert!((critical_fugacity(3) - 4.0).abs() < 1e-12);
        assert!((critical_fugacity(4) - 27.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn uniqueness_gap() {
        let g = Graph::complete(4);
        let m = HardcoreModel::uniform(g.clone(), 2.0).unwrap();
        assert!((check_uniqueness(&m).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(
            check_uniqueness(&HardcoreModel::uniform(g.clone(), 4.0).unwrap()),
            Some(0.0)
        );
        assert_eq!(
            check_uniqueness(&HardcoreModel::uniform(g, 4.5).unwrap()),
            None
        );
        assert_eq!(
            check_uniqueness(&HardcoreModel::uniform(Graph::cycle(6).unwrap(), 100.0).unwrap()),
            Some(1.0)
        );
    }

    #[test]
    fn hardcore_distance_is_sup_norm() {
        let g = Graph::path(2);
        let a: SpinSystem = HardcoreModel::new(g.clone(), vec![1.0, 1.0])
            .unwrap()
            .into();
        let b: SpinSystem = HardcoreModel::new(g, vec![1.0, 1.5]).unwrap().into();
        assert_eq!(parameter_distance(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn ising_distance_scales_fields_by_degree() {
        let g = Graph::path(2);
        let a: SpinSystem = IsingModel::new(g.clone(), &[(0, 1, 0.0)], soft(2, 0.0))
            .unwrap()
            .into();
        let b: SpinSystem = IsingModel::new(
            g,
            &[(0, 1, 0.0)],
            vec![Field::Finite(0.3), Field::Finite(0.0)],
        )
        .unwrap()
        .into();
        assert!((parameter_distance(&a, &b).unwrap() - 0.15).abs() < 1e-15);
    }

    #[test]
    fn distance_rejects_mismatched_pairs() {
        let a: SpinSystem = HardcoreModel::uniform(Graph::path(3), 1.0).unwrap().into();
        let b: SpinSystem = HardcoreModel::uniform(Graph::cycle(3).unwrap(), 1.0)
            .unwrap()
            .into();
        let c: SpinSystem = IsingModel::uniform(Graph::path(3), 0.0, soft(3, 0.0))
            .unwrap()
            .into();
        assert!(matches!(
            parameter_distance(&a, &b),
            Err(Error::InvalidPair(_))
        ));
        assert!(matches!(
            parameter_distance(&a, &c),
            Err(Error::InvalidPair(_))
        ));
    }

    #[test]
    fn zero_coupling_is_spectral_with_full_gap() {
        let m = IsingModel::uniform(Graph::cycle(5).unwrap(), 0.0, soft(5, 0.3)).unwrap();
        assert_eq!(
            check_ising_condition(&m).unwrap(),
            Some(IsingCondition::Spectral {
                spread: 0.0,
                gap: 1.0
            })
        );
    }

    #[test]
    fn ferromagnetic_condition() {
        let m = IsingModel::uniform(Graph::complete(5), 1.0, soft(5, 0.5)).unwrap();
        assert!(matches!(
            check_ising_condition(&m).unwrap(),
            Some(IsingCondition::Ferromagnetic { .. })
        ));
    }

    #[test]
    fn antiferromagnetic_boundary_is_accepted() {
        let g = Graph::complete(5);
        let beta = 0.5f64.ln() / 2.0;
        let m = IsingModel::uniform(g.clone(), beta, soft(5, -0.2)).unwrap();
        assert!(matches!(
            check_ising_condition(&m).unwrap(),
            Some(IsingCondition::Antiferromagnetic { .. })
        ));
        let beyond = IsingModel::uniform(g, beta - 0.01, soft(5, -0.2)).unwrap();
        assert_eq!(check_ising_condition(&beyond).unwrap(), None);
    }

    #[test]
    fn lower_bound_constant_takes_largest_case() {
        let m: SpinSystem = HardcoreModel::uniform(Graph::complete(4), 1.0)
            .unwrap()
            .into();
        let r = regime_report(&m).unwrap();
        let b = r.marginal_bound.unwrap();
        let c = tv_lower_bound_constant(ModelKind::Hardcore, &r).unwrap();
        assert_eq!(c, UNIQUENESS_CONSTANT.max(b.powi(3)));
        let lonely: SpinSystem = IsingModel::uniform(Graph::empty(1), 0.0, soft(1, 0.0))
            .unwrap()
            .into();
        let r = regime_report(&lonely).unwrap();
        assert!((tv_lower_bound_constant(ModelKind::Ising, &r).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn no_lower_bound_without_regime() {
        let r = RegimeReport {
            kind: ModelKind::Hardcore,
            vertex_count: 1,
            edge_count: 0,
            max_degree: 0,
            soft: true,
            uniqueness_gap: None,
            ising_condition: None,
            marginal_bound: None,
            marginal_bound_error: None,
        };
        assert!(matches!(
            tv_lower_bound_constant(ModelKind::Hardcore, &r),
            Err(Error::NoLowerBound(_))
        ));
    }
}
