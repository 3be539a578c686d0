//! Reproducible verification suites.
//!
//! Every suite is a list of numbered checks. Each check draws its cases from seeds
//! derived from the suite seed, compares estimators or closed forms against exact
//! enumeration, and reports one CSV row per case with the columns
//! `suite, case_id, seed, budget, estimate, truth, abs_err, rel_err, pass`.
//! A failing case is listed with its seed so it can be replayed.

mod estimators;
mod exact;
mod variance;

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::{Duration, Instant};

use gibbs_tv::generators::{perturb_ising, random_graph, random_hardcore, random_ising};
use gibbs_tv::model::{HardcoreModel, ModelKind, SpinSystem};
use gibbs_tv::rng::derive_seed;
use gibbs_tv::{Graph, SimRng};
use rand::Rng;

/// One case of a check.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseRow {
    pub suite: &'static str,
    pub case_id: String,
    pub seed: u64,
    /// Sampler draws spent on the case (zero for exact checks).
    pub budget: u64,
    pub estimate: f64,
    pub truth: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub pass: bool,
}

impl CaseRow {
    fn new(
        suite: &'static str,
        case_id: String,
        seed: u64,
        budget: u64,
        estimate: f64,
        truth: f64,
        pass: bool,
    ) -> Self {
        let abs_err = (estimate - truth).abs();
        let rel_err = if abs_err == 0.0 {
            0.0
        } else {
            abs_err / truth.abs()
        };
        Self {
            suite,
            case_id,
            seed,
            budget,
            estimate,
            truth,
            abs_err,
            rel_err,
            pass,
        }
    }
}

/// The result of one check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub summary: String,
    /// Failing cases with their seeds.
    pub failures: Vec<String>,
    pub elapsed: Duration,
    pub time_limit: Duration,
    pub rows: Vec<CaseRow>,
}

impl CheckOutcome {
    /// A one-line verdict.
    pub fn line(&self) -> String {
        format!(
            "[{}] {} {}: {} ({:.1}s, limit {}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.summary,
            self.elapsed.as_secs_f64(),
            self.time_limit.as_secs()
        )
    }
}

/// What a check body returns before timing is applied.
struct Findings {
    passed: bool,
    summary: String,
    failures: Vec<String>,
    rows: Vec<CaseRow>,
}

/// A numbered check.
#[derive(Debug, Clone, Copy)]
pub struct Check {
    pub id: &'static str,
    pub title: &'static str,
    pub suite: Suite,
    pub time_limit_secs: u64,
    run: fn(&Context) -> anyhow::Result<Findings>,
}

/// The ten acceptance criteria followed by the two variance-guard checks.
pub const CHECKS: [Check; 12] = [
    Check {
        id: "1",
        title: "likelihood-ratio identity",
        suite: Suite::OracleEquivalence,
        time_limit_secs: 60,
        run: exact::likelihood_ratio_identity,
    },
    Check {
        id: "2",
        title: "distance lower bound",
        suite: Suite::LemmaBounds,
        time_limit_secs: 120,
        run: exact::distance_lower_bound,
    },
    Check {
        id: "3",
        title: "small-side bounds",
        suite: Suite::LemmaBounds,
        time_limit_secs: 300,
        run: exact::small_side_bounds,
    },
    Check {
        id: "4",
        title: "truncation exactness",
        suite: Suite::OracleEquivalence,
        time_limit_secs: 120,
        run: exact::truncation_exactness,
    },
    Check {
        id: "5",
        title: "additive estimator coverage",
        suite: Suite::EstimatorAccuracy,
        time_limit_secs: 600,
        run: estimators::additive_coverage,
    },
    Check {
        id: "6",
        title: "basic relative estimator coverage",
        suite: Suite::EstimatorAccuracy,
        time_limit_secs: 600,
        run: estimators::basic_coverage,
    },
    Check {
        id: "7",
        title: "advanced estimator at desk scale",
        suite: Suite::EstimatorAccuracy,
        time_limit_secs: 900,
        run: estimators::advanced_coverage,
    },
    Check {
        id: "8",
        title: "counting oracle contract",
        suite: Suite::EstimatorAccuracy,
        time_limit_secs: 300,
        run: estimators::counting_contract,
    },
    Check {
        id: "9",
        title: "reduction demo",
        suite: Suite::ReductionDemo,
        time_limit_secs: 300,
        run: exact::reduction_demo,
    },
    Check {
        id: "10",
        title: "marginal-bound oracle",
        suite: Suite::OracleEquivalence,
        time_limit_secs: 300,
        run: exact::marginal_bound_oracle,
    },
    Check {
        id: "V1",
        title: "per-level second moments",
        suite: Suite::VarianceGuard,
        time_limit_secs: 300,
        run: variance::second_moments,
    },
    Check {
        id: "V2",
        title: "budget shapes",
        suite: Suite::VarianceGuard,
        time_limit_secs: 120,
        run: variance::budget_shapes,
    },
];

/// Named groups of checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    OracleEquivalence,
    LemmaBounds,
    EstimatorAccuracy,
    ReductionDemo,
    VarianceGuard,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::OracleEquivalence,
        Suite::LemmaBounds,
        Suite::EstimatorAccuracy,
        Suite::ReductionDemo,
        Suite::VarianceGuard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::OracleEquivalence => "oracle-equivalence",
            Suite::LemmaBounds => "lemma-bounds",
            Suite::EstimatorAccuracy => "estimator-accuracy",
            Suite::ReductionDemo => "reduction-demo",
            Suite::VarianceGuard => "variance-guard",
        }
    }

    /// The checks belonging to this suite.
    pub fn checks(self) -> impl Iterator<Item = &'static Check> {
        CHECKS.iter().filter(move |c| c.suite == self)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
                format!("unknown suite {s:?}; expected one of {}", names.join(", "))
            })
    }
}

/// Settings shared by all checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteOptions {
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { seed: 2024 }
    }
}

/// Per-check state handed to the check bodies.
struct Context {
    suite: &'static str,
    check_seed: u64,
}

impl Context {
    /// Seed of case `index`.
    fn case_seed(&self, index: usize) -> u64 {
        derive_seed(self.check_seed, index as u64)
    }

    fn case_rng(&self, index: usize) -> (u64, SimRng) {
        let seed = self.case_seed(index);
        (seed, gibbs_tv::rng_from_seed(seed))
    }

    fn row(
        &self,
        case_id: String,
        seed: u64,
        budget: u64,
        estimate: f64,
        truth: f64,
        pass: bool,
    ) -> CaseRow {
        CaseRow::new(self.suite, case_id, seed, budget, estimate, truth, pass)
    }
}

/// Looks up a check by id (`"1"` to `"10"`, `"V1"`, `"V2"`).
pub fn check(id: &str) -> Option<&'static Check> {
    CHECKS.iter().find(|c| c.id.eq_ignore_ascii_case(id))
}

/// Runs one check.
pub fn run_check(check: &Check, options: &SuiteOptions) -> anyhow::Result<CheckOutcome> {
    let index = CHECKS
        .iter()
        .position(|c| c.id == check.id)
        .expect("registered check") as u64;
    let context = Context {
        suite: check.suite.name(),
        check_seed: derive_seed(options.seed, index),
    };
    let start = Instant::now();
    let findings = (check.run)(&context)?;
    let elapsed = start.elapsed();
    let time_limit = Duration::from_secs(check.time_limit_secs);
    let mut summary = findings.summary;
    if elapsed > time_limit {
        summary.push_str("; over the time limit");
    }
    Ok(CheckOutcome {
        id: check.id,
        title: check.title,
        passed: findings.passed && elapsed <= time_limit,
        summary,
        failures: findings.failures,
        elapsed,
        time_limit,
        rows: findings.rows,
    })
}

/// Runs every check of a suite in order.
pub fn run_suite(suite: Suite, options: &SuiteOptions) -> anyhow::Result<Vec<CheckOutcome>> {
    suite.checks().map(|c| run_check(c, options)).collect()
}

/// Writes the rows of `outcomes` as CSV with a header line.
pub fn write_csv<W: Write>(outcomes: &[CheckOutcome], mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "suite,case_id,seed,budget,estimate,truth,abs_err,rel_err,pass"
    )?;
    for r in outcomes.iter().flat_map(|o| &o.rows) {
        writeln!(
            out,
            "{},{},{},{},{:e},{:e},{:e},{:e},{}",
            r.suite, r.case_id, r.seed, r.budget, r.estimate, r.truth, r.abs_err, r.rel_err, r.pass
        )?;
    }
    Ok(())
}

/// A soft pair of the given kind on a random graph with `n` vertices.
///
/// Hardcore fugacities lie in `[0.05, 2.5)` and are multiplied by `exp(U(-spread, spread))`;
/// Ising couplings and fields lie in `[-1, 1]` and are shifted by `U(-spread, spread)`.
fn random_soft_pair(
    kind: ModelKind,
    n: usize,
    spread: f64,
    rng: &mut SimRng,
) -> anyhow::Result<(SpinSystem, SpinSystem)> {
    Ok(match kind {
        ModelKind::Hardcore => {
            let g = random_graph(n, 0.5, 3, rng);
            let mu = random_hardcore(g, 0.05, 2.5, rng)?;
            let lambda = mu
                .fugacities()
                .iter()
                .map(|&l| l * rng.random_range(-spread..=spread).exp())
                .collect();
            let nu = mu.with_fugacities(lambda)?;
            (mu.into(), nu.into())
        }
        ModelKind::Ising => {
            let g = random_graph(n, 0.5, 4, rng);
            let mu = random_ising(g, 1.0, 1.0, rng)?;
            let nu = perturb_ising(&mu, spread, rng)?;
            (mu.into(), nu.into())
        }
    })
}

/// A close hardcore pair split at `kappa`.
///
/// Each vertex is small with probability `small_probability` (at least one is small):
/// small fugacities lie in `[2 distance, 0.9 kappa)` and big ones in `[2 kappa, 2 kappa + 1)`.
/// Fugacities of small vertices, and of big ones unless `small_only`, move by `U(-distance, distance)`.
fn split_hardcore_pair(
    graph: Graph,
    kappa: f64,
    distance: f64,
    small_probability: f64,
    small_only: bool,
    rng: &mut SimRng,
) -> anyhow::Result<(SpinSystem, SpinSystem)> {
    let n = graph.vertex_count();
    let mut small: Vec<bool> = (0..n).map(|_| rng.random_bool(small_probability)).collect();
    if !small.iter().any(|&s| s) {
        small[0] = true;
    }
    let mut mu = Vec::with_capacity(n);
    let mut nu = Vec::with_capacity(n);
    for &is_small in &small {
        let l = if is_small {
            rng.random_range(2.0 * distance..0.9 * kappa)
        } else {
            rng.random_range(2.0 * kappa..2.0 * kappa + 1.0)
        };
        let shift = if is_small || !small_only {
            rng.random_range(-distance..=distance)
        } else {
            0.0
        };
        mu.push(l);
        nu.push(l + shift);
    }
    Ok((
        HardcoreModel::new(graph.clone(), mu)?.into(),
        HardcoreModel::new(graph, nu)?.into(),
    ))
}

/// `k` out of `total`.
fn tally(k: usize, total: usize) -> String {
    format!("{k}/{total}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
            assert!(s.checks().count() > 0);
        }
        assert!("nope".parse::<Suite>().is_err());
        assert_eq!(check("v2").unwrap().id, "V2");
    }

    #[test]
    fn relative_error_handles_zero_truth() {
        let r = CaseRow::new("s", "c".into(), 0, 0, 0.0, 0.0, true);
        assert_eq!(r.rel_err, 0.0);
        let r = CaseRow::new("s", "c".into(), 0, 0, 0.5, 0.0, false);
        assert!(r.rel_err.is_infinite());
    }
}
