//! Exact computations by enumeration, used as ground truth for small instances.
//!
//! Configurations are encoded as `u64` masks (bit `v` set means vertex `v` is `+1`),
//! so enumeration requires at most 64 vertices and at most `cap` free vertices.

mod reduction;

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Configuration, Field, Pinning, Spin, SpinSystem};
use crate::numeric::{compensated_sum, log_sum_exp, CompensatedSum};

pub use reduction::{
    count_via_tv_oracle, count_via_tv_queries, exact_marginal_tv_rational, path_cycle_marginal,
    round_up_dyadic, ReductionOptions, ReductionReport, VertexQuery,
};

/// Default cap on the number of free vertices for exact enumeration.
pub const DEFAULT_EXACT_CAP: usize = 20;

/// The support of a (conditional) Gibbs distribution with log weights.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    vertex_count: usize,
    masks: Vec<u64>,
    log_weights: Vec<f64>,
    log_partition: f64,
}

impl ExactDistribution {
    /// Enumerates every configuration consistent with `pin` that has positive weight.
    pub fn enumerate(model: &SpinSystem, pin: &Pinning, cap: usize) -> Result<Self> {
        let n = model.vertex_count();
        if pin.len() != n {
            return Err(Error::InvalidPin(format!(
                "pinning covers {} vertices, model has {n}",
                pin.len()
            )));
        }
        let free = n - pin.pinned_count();
        if free > cap {
            return Err(Error::TooLarge {
                what: "exact enumeration",
                size: free,
                cap,
            });
        }
        if n > 64 {
            return Err(Error::TooLarge {
                what: "exact enumeration (vertex count)",
                size: n,
                cap: 64,
            });
        }
        let mut e = Enumerator {
            model,
            pin,
            masks: Vec::new(),
            log_weights: Vec::new(),
        };
        e.visit(0, 0, 0.0);
        let Enumerator {
            masks, log_weights, ..
        } = e;
        let log_partition = log_sum_exp(&log_weights);
        Ok(Self {
            vertex_count: n,
            masks,
            log_weights,
            log_partition,
        })
    }

    /// Enumerates the unconditioned distribution.
    pub fn of(model: &SpinSystem, cap: usize) -> Result<Self> {
        Self::enumerate(model, &Pinning::free(model.vertex_count()), cap)
    }

    /// Number of vertices of the model.
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Size of the support.
    pub fn len(&self) -> usize {
        self.masks.len()
    }

    /// Whether the support is empty (the pinning is infeasible).
    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Log of the (conditional) partition function, `-inf` for an empty support.
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    /// Support masks in enumeration order.
    pub fn masks(&self) -> &[u64] {
        &self.masks
    }

    /// Log weights aligned with [`ExactDistribution::masks`].
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Probability of the `i`-th support element.
    pub fn probability(&self, i: usize) -> f64 {
        (self.log_weights[i] - self.log_partition).exp()
    }

    /// Iterates over `(mask, probability)`.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.masks
            .iter()
            .zip(&self.log_weights)
            .map(move |(&m, &lw)| (m, (lw - self.log_partition).exp()))
    }

    /// The `i`-th support element as a configuration.
    pub fn configuration(&self, i: usize) -> Configuration {
        Configuration::from_mask(self.vertex_count, self.masks[i])
    }

    /// Probability that vertex `v` is `+1`.
    pub fn marginal_plus(&self, v: usize) -> f64 {
        compensated_sum(self.iter().filter(|(m, _)| m >> v & 1 == 1).map(|(_, p)| p))
    }

    /// Distribution of the spins on `subset`, as `(mask restricted to subset, probability)` sorted by mask.
    pub fn project(&self, subset: &[usize]) -> Vec<(u64, f64)> {
        let key_mask = subset.iter().fold(0u64, |m, &v| m | 1 << v);
        let mut acc: HashMap<u64, CompensatedSum> = HashMap::new();
        for (m, p) in self.iter() {
            acc.entry(m & key_mask).or_default().add(p);
        }
        let mut out: Vec<(u64, f64)> = acc.into_iter().map(|(k, s)| (k, s.total())).collect();
        out.sort_unstable_by_key(|e| e.0);
        out
    }

    /// `(mask, probability)` pairs sorted by mask.
    fn sorted(&self) -> Vec<(u64, f64)> {
        let mut v: Vec<(u64, f64)> = self.iter().collect();
        v.sort_unstable_by_key(|e| e.0);
        v
    }
}

struct Enumerator<'a> {
    model: &'a SpinSystem,
    pin: &'a Pinning,
    masks: Vec<u64>,
    log_weights: Vec<f64>,
}

impl Enumerator<'_> {
    fn visit(&mut self, v: usize, mask: u64, log_weight: f64) {
        if v == self.model.vertex_count() {
            self.masks.push(mask);
            self.log_weights.push(log_weight);
            return;
        }
        for spin in Spin::BOTH {
            if self.pin.get(v).is_some_and(|p| p != spin) {
                continue;
            }
            let delta = self.increment(v, mask, spin);
            if delta == f64::NEG_INFINITY {
                continue;
            }
            let next = if spin.is_plus() { mask | 1 << v } else { mask };
            self.visit(v + 1, next, log_weight + delta);
        }
    }

    /// Change in log weight from assigning `spin` to `v` given the spins of `0..v`.
    fn increment(&self, v: usize, mask: u64, spin: Spin) -> f64 {
        match self.model {
            SpinSystem::Hardcore(m) => {
                if !spin.is_plus() {
                    0.0
                } else if m.fugacity(v) == 0.0
                    || m.graph()
                        .neighbors(v)
                        .iter()
                        .any(|&u| u < v && mask >> u & 1 == 1)
                {
                    f64::NEG_INFINITY
                } else {
                    m.fugacity(v).ln()
                }
            }
            SpinSystem::Ising(m) => {
                let s = spin.sign();
                let own = match m.field(v) {
                    Field::Finite(h) => h * s,
                    f if f.forced_spin() == Some(spin) => 0.0,
                    _ => return f64::NEG_INFINITY,
                };
                let pair: f64 = m
                    .graph()
                    .neighbors(v)
                    .iter()
                    .zip(m.couplings_of(v))
                    .take_while(|(&u, _)| u < v)
                    .map(|(&u, &j)| j * s * if mask >> u & 1 == 1 { 1.0 } else { -1.0 })
                    .sum();
                own + pair
            }
        }
    }
}

/// `ln Z` by enumeration.
pub fn exact_partition(model: &SpinSystem, cap: usize) -> Result<f64> {
    Ok(ExactDistribution::of(model, cap)?.log_partition())
}

/// `ln Z^pin` by enumeration, `-inf` when the pinning is infeasible.
pub fn exact_conditional_partition(model: &SpinSystem, pin: &Pinning, cap: usize) -> Result<f64> {
    Ok(ExactDistribution::enumerate(model, pin, cap)?.log_partition())
}

/// Total variation distance between two distributions over the same vertex set.
pub fn distribution_tv(mu: &ExactDistribution, nu: &ExactDistribution) -> f64 {
    half_l1(&mu.sorted(), &nu.sorted())
}

fn half_l1(a: &[(u64, f64)], b: &[(u64, f64)]) -> f64 {
    let mut sum = CompensatedSum::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x.0 == y.0 => {
                sum.add((x.1 - y.1).abs());
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x.0 < y.0 => {
                sum.add(x.1);
                i += 1;
            }
            (Some(_), Some(y)) => {
                sum.add(y.1);
                j += 1;
            }
            (Some(x), None) => {
                sum.add(x.1);
                i += 1;
            }
            (None, Some(y)) => {
                sum.add(y.1);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    0.5 * sum.total()
}

/// Exact total variation distance between two comparable models.
pub fn exact_tv(mu: &SpinSystem, nu: &SpinSystem, cap: usize) -> Result<f64> {
    mu.ensure_comparable(nu)?;
    Ok(distribution_tv(
        &ExactDistribution::of(mu, cap)?,
        &ExactDistribution::of(nu, cap)?,
    ))
}

/// Exact total variation distance between the projections of two models onto `subset`.
pub fn exact_marginal_tv(
    mu: &SpinSystem,
    nu: &SpinSystem,
    subset: &[usize],
    cap: usize,
) -> Result<f64> {
    mu.ensure_comparable(nu)?;
    check_subset(subset, mu.vertex_count())?;
    if subset.is_empty() {
        return Ok(0.0);
    }
    let a = ExactDistribution::of(mu, cap)?.project(subset);
    let b = ExactDistribution::of(nu, cap)?.project(subset);
    Ok(half_l1(&a, &b))
}

pub(crate) fn check_subset(subset: &[usize], n: usize) -> Result<()> {
    match subset.iter().find(|&&v| v >= n) {
        Some(v) => Err(Error::InvalidParameter(format!(
            "subset vertex {v} outside 0..{n}"
        ))),
        None => Ok(()),
    }
}

/// Exact statistics of the likelihood ratio `W = w_nu / w_mu` under `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WStatistics {
    pub log_partition_mu: f64,
    pub log_partition_nu: f64,
    /// `Z_nu / Z_mu`.
    pub partition_ratio: f64,
    /// `E_mu[W]`, computed by summation (equals the partition ratio up to rounding).
    pub mean: f64,
    /// `Var_mu(W)`.
    pub variance: f64,
    /// `E_mu |W - Z_nu / Z_mu|`.
    pub mean_absolute_deviation: f64,
}

impl WStatistics {
    /// `(Z_mu / (2 Z_nu)) * E_mu |E[W] - W|`, which equals the total variation distance.
    pub fn tv_from_deviation(&self) -> f64 {
        0.5 * self.mean_absolute_deviation / self.partition_ratio
    }
}

/// Computes [`WStatistics`]; requires `nu` to be absolutely continuous with respect to `mu`.
pub fn exact_w_statistics(mu: &SpinSystem, nu: &SpinSystem, cap: usize) -> Result<WStatistics> {
    mu.ensure_comparable(nu)?;
    let dm = ExactDistribution::of(mu, cap)?;
    let dn = ExactDistribution::of(nu, cap)?;
    let nu_weights: HashMap<u64, f64> = dn
        .masks
        .iter()
        .copied()
        .zip(dn.log_weights.iter().copied())
        .collect();
    let mu_support: std::collections::HashSet<u64> = dm.masks.iter().copied().collect();
    if dn.masks.iter().any(|m| !mu_support.contains(m)) {
        return Err(Error::InvalidPair(
            "nu is not absolutely continuous with respect to mu".into(),
        ));
    }
    let ratio = (dn.log_partition - dm.log_partition).exp();
    let w: Vec<(f64, f64)> = dm
        .masks
        .iter()
        .zip(&dm.log_weights)
        .map(|(m, lw)| {
            let p = (lw - dm.log_partition).exp();
            let wn = nu_weights.get(m).map_or(0.0, |lwn| (lwn - lw).exp());
            (p, wn)
        })
        .collect();
    let mean = compensated_sum(w.iter().map(|(p, x)| p * x));
    let variance = compensated_sum(w.iter().map(|(p, x)| p * (x - mean) * (x - mean)));
    let mad = compensated_sum(w.iter().map(|(p, x)| p * (x - ratio).abs()));
    Ok(WStatistics {
        log_partition_mu: dm.log_partition,
        log_partition_nu: dn.log_partition,
        partition_ratio: ratio,
        mean,
        variance,
        mean_absolute_deviation: mad,
    })
}

/// Largest vertex count accepted by [`brute_force_marginal_bound`].
pub const BRUTE_FORCE_BOUND_CAP: usize = 14;

/// The smallest positive conditional marginal `P(sigma_v = c | sigma_L)` over every
/// vertex `v`, spin `c` and partial pinning `L` of the other vertices with positive
/// weight, computed from the full list of configuration weights.
pub fn brute_force_marginal_bound(model: &SpinSystem) -> Result<f64> {
    let n = model.vertex_count();
    if n > BRUTE_FORCE_BOUND_CAP {
        return Err(Error::TooLarge {
            what: "brute-force marginal bound",
            size: n,
            cap: BRUTE_FORCE_BOUND_CAP,
        });
    }
    let log_weights: Vec<f64> = (0..1u64 << n)
        .map(|mask| model.log_weight_of(Configuration::from_mask(n, mask).spins()))
        .collect();
    let top = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_weights.iter().map(|&l| (l - top).exp()).collect();
    let full = (1u64 << n) - 1;
    let mut best: f64 = 1.0;
    for v in 0..n {
        let others = full & !(1 << v);
        for pinned in submasks(others) {
            let free = full & !pinned;
            for values in submasks(pinned) {
                let (mut plus, mut minus) = (CompensatedSum::new(), CompensatedSum::new());
                for rest in submasks(free) {
                    let w = weights[(values | rest) as usize];
                    if rest >> v & 1 == 1 {
                        plus.add(w);
                    } else {
                        minus.add(w);
                    }
                }
                let (plus, minus) = (plus.total(), minus.total());
                let total = plus + minus;
                if total > 0.0 {
                    for p in [plus / total, minus / total] {
                        if p > 0.0 {
                            best = best.min(p);
                        }
                    }
                }
            }
        }
    }
    Ok(best)
}

/// Every submask of `mask`, including zero and `mask` itself.
fn submasks(mask: u64) -> impl Iterator<Item = u64> {
    let mut next = Some(mask);
    std::iter::from_fn(move || {
        let current = next?;
        next = if current == 0 {
            None
        } else {
            Some((current - 1) & mask)
        };
        Some(current)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::model::{HardcoreModel, IsingModel};

    #[test]
    fn path_of_three_has_five_independent_sets() {
        let m: SpinSystem = HardcoreModel::uniform(Graph::path(3), 1.0).unwrap().into();
        assert!((exact_partition(&m, 20).unwrap() - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_vertex_tv() {
        let g = Graph::empty(1);
        let a: SpinSystem = HardcoreModel::uniform(g.clone(), 1.0).unwrap().into();
        let b: SpinSystem = HardcoreModel::uniform(g, 2.0).unwrap().into();
        assert!((exact_tv(&a, &b, 20).unwrap() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn identical_models_have_zero_distance() {
        let m: SpinSystem =
            IsingModel::uniform(Graph::cycle(5).unwrap(), 0.3, vec![Field::Finite(0.1); 5])
                .unwrap()
                .into();
        assert_eq!(exact_tv(&m, &m, 20).unwrap(), 0.0);
    }

    #[test]
    fn opposite_infinite_fields_give_distance_one() {
        let g = Graph::path(2);
        let a: SpinSystem =
            IsingModel::uniform(g.clone(), 0.1, vec![Field::PosInf, Field::Finite(0.0)])
                .unwrap()
                .into();
        let b: SpinSystem = IsingModel::uniform(g, 0.1, vec![Field::NegInf, Field::Finite(0.0)])
            .unwrap()
            .into();
        assert!((exact_tv(&a, &b, 20).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_subset_marginal_is_zero() {
        let g = Graph::path(3);
        let a: SpinSystem = HardcoreModel::uniform(g.clone(), 1.0).unwrap().into();
        let b: SpinSystem = HardcoreModel::uniform(g, 3.0).unwrap().into();
        assert_eq!(exact_marginal_tv(&a, &b, &[], 20).unwrap(), 0.0);
        let full = exact_marginal_tv(&a, &b, &[0, 1, 2], 20).unwrap();
        assert!((full - exact_tv(&a, &b, 20).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn infeasible_pin_gives_empty_support() {
        let m: SpinSystem = HardcoreModel::uniform(Graph::path(2), 1.0).unwrap().into();
        let pin = Pinning::from_pairs(2, &[(0, Spin::Plus), (1, Spin::Plus)]).unwrap();
        assert_eq!(
            exact_conditional_partition(&m, &pin, 20).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn cap_is_enforced() {
        let m: SpinSystem = HardcoreModel::uniform(Graph::path(5), 1.0).unwrap().into();
        assert!(matches!(
            exact_partition(&m, 4),
            Err(Error::TooLarge { .. })
        ));
        let pin = Pinning::from_pairs(5, &[(0, Spin::Minus)]).unwrap();
        assert!(exact_conditional_partition(&m, &pin, 4).is_ok());
    }

    #[test]
    fn brute_force_bound_of_a_star() {
        let g = Graph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let m: SpinSystem = HardcoreModel::uniform(g, 1.0).unwrap().into();
        assert!((brute_force_marginal_bound(&m).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(
            submasks(0b101).collect::<Vec<_>>(),
            vec![0b101, 0b100, 0b001, 0]
        );
    }

    #[test]
    fn deviation_identity_on_small_pair() {
        let g = Graph::cycle(4).unwrap();
        let a: SpinSystem = HardcoreModel::new(g.clone(), vec![1.0, 0.5, 2.0, 1.5])
            .unwrap()
            .into();
        let b: SpinSystem = HardcoreModel::new(g, vec![1.2, 0.5, 1.0, 1.5])
            .unwrap()
            .into();
        let s = exact_w_statistics(&a, &b, 20).unwrap();
        assert!((s.tv_from_deviation() - exact_tv(&a, &b, 20).unwrap()).abs() < 1e-12);
        assert!((s.mean - s.partition_ratio).abs() < 1e-12);
    }
}
