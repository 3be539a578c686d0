//! Property tests of the exact identities and invariants, checked against brute force.

mod common;

use common::{hard_ising, hardcore_pair, soft_pair};
use gibbs_tv::counter::Schedule;
use gibbs_tv::estimate::{exact_f, truncated_conditional, BigSmallPartition};
use gibbs_tv::exact::{
    brute_force_marginal_bound, exact_conditional_partition, exact_marginal_tv, exact_partition,
    exact_tv, exact_w_statistics, ExactDistribution,
};
use gibbs_tv::model::{
    contract, marginal_lower_bound, parameter_distance, preprocess, regime_report,
    tv_lower_bound_constant, Configuration, Pinning, Preprocessed, Spin, SpinSystem,
};
use gibbs_tv::numeric::compensated_sum;
use gibbs_tv::sampler::heat_bath_plus_probability;
use proptest::prelude::*;

const CAP: usize = 20;

fn pin_from(bits: &[u8], n: usize) -> Pinning {
    let mut pin = Pinning::free(n);
    for (v, b) in bits.iter().take(n).enumerate() {
        match b % 3 {
            1 => pin.set(v, Spin::Minus),
            2 => pin.set(v, Spin::Plus),
            _ => {}
        }
    }
    pin
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tv_is_a_bounded_symmetric_distance((mu, nu) in soft_pair(7, 0.5)) {
        let d = exact_tv(&mu, &nu, CAP).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - exact_tv(&nu, &mu, CAP).unwrap()).abs() < 1e-12);
        prop_assert_eq!(exact_tv(&mu, &mu, CAP).unwrap(), 0.0);
        prop_assert_eq!(parameter_distance(&mu, &nu).unwrap(), parameter_distance(&nu, &mu).unwrap());
    }

    #[test]
    fn marginal_tv_grows_with_the_subset((mu, nu) in soft_pair(7, 0.5), bits in proptest::collection::vec(0u8..4, 7)) {
        let n = mu.vertex_count();
        let outer: Vec<usize> = (0..n).filter(|&v| bits[v] > 0).collect();
        let inner: Vec<usize> = (0..n).filter(|&v| bits[v] > 1).collect();
        let all: Vec<usize> = (0..n).collect();
        let a = exact_marginal_tv(&mu, &nu, &inner, CAP).unwrap();
        let b = exact_marginal_tv(&mu, &nu, &outer, CAP).unwrap();
        let full = exact_marginal_tv(&mu, &nu, &all, CAP).unwrap();
        prop_assert!(a <= b + 1e-12);
        prop_assert!((full - exact_tv(&mu, &nu, CAP).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn likelihood_ratio_identity((mu, nu) in soft_pair(8, 0.5)) {
        let w = exact_w_statistics(&mu, &nu, CAP).unwrap();
        prop_assert!((w.mean - w.partition_ratio).abs() <= 1e-10 * w.partition_ratio.max(1.0));
        prop_assert!((w.tv_from_deviation() - exact_tv(&mu, &nu, CAP).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn distance_lower_bound_holds((mu, nu) in soft_pair(7, 0.6)) {
        let regime = regime_report(&mu).unwrap().merge(&regime_report(&nu).unwrap());
        let c = tv_lower_bound_constant(mu.kind(), &regime).unwrap();
        let d = parameter_distance(&mu, &nu).unwrap();
        prop_assert!(exact_tv(&mu, &nu, CAP).unwrap() >= c * d - 1e-12);
    }

    #[test]
    fn conditioning_by_contraction(model in prop_oneof![hardcore_pair(7, 0.0).prop_map(|p| p.0), hard_ising(7)],
                                   bits in proptest::collection::vec(0u8..3, 7)) {
        let n = model.vertex_count();
        let pin = pin_from(&bits, n);
        let direct = exact_conditional_partition(&model, &pin, CAP).unwrap();
        match contract(&model, &pin).unwrap() {
            None => prop_assert_eq!(direct, f64::NEG_INFINITY),
            Some(c) => {
                let reduced = exact_partition(&c.reduced, CAP).unwrap() + c.log_offset;
                prop_assert!((direct - reduced).abs() < 1e-10);
                let d = ExactDistribution::of(&c.reduced, CAP).unwrap();
                for i in 0..d.len() {
                    let full = c.lift(&d.configuration(i));
                    prop_assert!(pin.agrees_with(&full));
                    let lifted = model.log_weight(&full).unwrap();
                    prop_assert!((lifted - (d.log_weights()[i] + c.log_offset)).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn preprocessing_preserves_distance(mu in hard_ising(6), shift in proptest::collection::vec(-0.3f64..0.3, 6)) {
        let ising = mu.as_ising().unwrap();
        let fields = ising.fields().iter().zip(&shift).map(|(&h, s)| match h {
            gibbs_tv::Field::Finite(x) => gibbs_tv::Field::Finite(x + s),
            other => other,
        }).collect();
        let nu: SpinSystem = gibbs_tv::IsingModel::new(ising.graph().clone(), &ising.coupling_triples(), fields).unwrap().into();
        if let Preprocessed::Reduced(r) = preprocess(&mu, &nu).unwrap() {
            let reduced = exact_tv(&r.mu, &r.nu, CAP).unwrap();
            prop_assert!((reduced - exact_tv(&mu, &nu, CAP).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn heat_bath_is_reversible((mu, _) in soft_pair(5, 0.0)) {
        let d = ExactDistribution::of(&mu, CAP).unwrap();
        let n = mu.vertex_count();
        for (mask, p_sigma) in d.iter() {
            let sigma = Configuration::from_mask(n, mask);
            for v in 0..n {
                let mut tau = sigma.clone();
                tau.set(v, sigma.get(v).flipped());
                let lt = mu.log_weight(&tau).unwrap();
                if lt == f64::NEG_INFINITY {
                    continue;
                }
                let p_plus = heat_bath_plus_probability(&mu, sigma.spins(), v);
                let forward = if tau.get(v).is_plus() { p_plus } else { 1.0 - p_plus };
                let backward = if sigma.get(v).is_plus() { p_plus } else { 1.0 - p_plus };
                let lhs = p_sigma * forward;
                let rhs = (lt - d.log_partition()).exp() * backward;
                prop_assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn telescoping_schedule_recovers_the_partition_function((mu, _) in soft_pair(6, 0.0), c in 0.3f64..2.0) {
        let schedule = Schedule::for_model(&mu, c).unwrap();
        let means: Vec<f64> = (1..=schedule.ratio_count()).map(|i| {
            let d = ExactDistribution::of(schedule.sampling_model(i), CAP).unwrap();
            compensated_sum((0..d.len()).map(|k| d.probability(k) * schedule.ratio_variable(i, &d.configuration(k))))
        }).collect();
        prop_assert!((schedule.log_target(&means) - exact_partition(&mu, CAP).unwrap()).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn marginal_bound_matches_brute_force(model in prop_oneof![hardcore_pair(6, 0.0).prop_map(|p| p.0), hard_ising(6)]) {
        let b = marginal_lower_bound(&model).unwrap().bound;
        let brute = brute_force_marginal_bound(&model).unwrap();
        prop_assert!((b - brute).abs() <= 1e-12 * brute.max(1e-300), "{} vs {}", b, brute);
    }

    #[test]
    fn truncation_is_monotone_and_exact_at_full_size((mu, nu) in hardcore_pair(8, 0.2), kappa in 0.0f64..2.0) {
        let (a, b) = (mu.as_hardcore().unwrap(), nu.as_hardcore().unwrap());
        let part = BigSmallPartition::with_kappa(a, b, kappa);
        let d = ExactDistribution::of(&mu, CAP).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..d.len() {
            let x = part.big_plus(&d.configuration(i));
            if !seen.insert(x.clone()) {
                continue;
            }
            let mut previous = f64::NEG_INFINITY;
            for t in 0..=part.small.len() {
                let tc = truncated_conditional(a, b, &part, &x, t).unwrap();
                if t == 0 {
                    prop_assert_eq!(tc.log_partition_mu, 0.0);
                }
                prop_assert!(tc.log_partition_mu >= previous);
                previous = tc.log_partition_mu;
                let f_t = exact_f(a, b, &part, &x, Some(t), CAP).unwrap();
                let f = exact_f(a, b, &part, &x, None, CAP).unwrap();
                prop_assert!(f - f_t >= -1e-12);
            }
            let mut pin = Pinning::free(mu.vertex_count());
            for &v in &part.big {
                pin.set(v, if x.contains(&v) { Spin::Plus } else { Spin::Minus });
            }
            let big_log_weight: f64 = x.iter().map(|&v| a.fugacity(v).ln()).sum();
            let exact = exact_conditional_partition(&mu, &pin, CAP).unwrap() - big_log_weight;
            prop_assert!((previous - exact).abs() < 1e-10);
        }
    }
}
