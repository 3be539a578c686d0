//! The `gibbs-tv` command-line tool.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context as _, Result};
use clap::{Args, Parser, Subcommand};
use gibbs_tv::estimate::{
    marginal_additive_tv, plan_dispatch, Branch, ErrorKind, EstimateReport, Mode,
};
use gibbs_tv::exact::{
    count_via_tv_queries, exact_conditional_partition, exact_marginal_tv, exact_tv,
    ReductionOptions, DEFAULT_EXACT_CAP,
};
use gibbs_tv::generators::connected_graphs;
use gibbs_tv::model::{
    parameter_distance, preprocess, regime_report, Pinning, PreprocessKind, RegimeReport,
};
use gibbs_tv::sampler::SamplerBackend;
use gibbs_tv::{conditional_count, dispatch_tv, rng_from_seed, EstimatorBudget, Sampler};
use gibbs_tv_cli::suite::{self, Suite, SuiteOptions};
use gibbs_tv_cli::{exit_code, read_instance, InputDigest, Instance, RunRecord, EXIT_CHECK_FAILED};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "gibbs-tv",
    version,
    about = "Total variation distance between hardcore and Ising models"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Seed of the random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "GIBBS_TV_THREADS")]
    threads: Option<usize>,
    /// Target accuracy.
    #[arg(long, global = true, default_value_t = 0.1)]
    eps: f64,
    /// Estimator: auto, additive, basic-relative or advanced.
    #[arg(long, global = true, default_value = "auto", value_parser = parse_mode)]
    mode: Mode,
    /// Use the literal thresholds and sample counts and enforce every gate.
    #[arg(long, global = true)]
    paper_strict: bool,
    /// Multiplier of the Glauber step count.
    #[arg(long = "c-mix", global = true)]
    c_mix: Option<f64>,
    /// Multiplier of the annealing schedule length.
    #[arg(long = "c-levels", global = true)]
    c_levels: Option<f64>,
    /// Truncation size of the advanced estimator.
    #[arg(long = "t", global = true)]
    truncation: Option<usize>,
    /// Big/small threshold of the advanced estimator.
    #[arg(long, global = true)]
    kappa: Option<f64>,
    /// Distance gate of the advanced estimator.
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Cap on any single draw count (0 removes the cap).
    #[arg(long, global = true)]
    max_draws: Option<usize>,
    /// Factor applied to nominal draw counts.
    #[arg(long, global = true)]
    sample_scale: Option<f64>,
    /// Boost by a median so the estimate fails with at most this probability.
    #[arg(long, global = true)]
    failure_probability: Option<f64>,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Include wall-clock time in the record.
    #[arg(long, global = true)]
    timing: bool,
    /// Write the record to a file instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse::<Mode>().map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate d_TV(mu, nu).
    Tv {
        mu: PathBuf,
        nu: PathBuf,
        /// Compute the distance by enumeration.
        #[arg(long)]
        exact: bool,
    },
    /// Estimate the distance between the projections onto a subset of vertices.
    MarginalTv {
        mu: PathBuf,
        nu: PathBuf,
        /// Comma-separated vertex labels.
        #[arg(long)]
        subset: String,
        #[arg(long)]
        exact: bool,
    },
    /// Estimate ln Z, optionally conditioned on a pinning.
    Count {
        model: PathBuf,
        /// Pinning such as `a=+,b=-`.
        #[arg(long)]
        pin: Option<String>,
        #[arg(long)]
        exact: bool,
    },
    /// Draw configurations.
    Sample {
        model: PathBuf,
        #[arg(long, default_value_t = 1)]
        num: usize,
        #[arg(long)]
        pin: Option<String>,
    },
    /// Report regime, marginal bound and, for a pair, distance and dispatch plan.
    Check { model: PathBuf, nu: Option<PathBuf> },
    /// Count independent sets through distance queries.
    ReduceDemo {
        /// Hardcore instance whose graph is used; without it every connected graph is run.
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        max_vertices: usize,
        /// Query the oracle on paths and cycles too.
        #[arg(long)]
        no_shortcut: bool,
    },
    /// Run a verification suite (or `all`).
    Suite {
        name: String,
        /// Run a single check by id instead.
        #[arg(long)]
        check: Option<String>,
        /// Write per-case rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

impl GlobalArgs {
    fn budget(&self) -> EstimatorBudget {
        let mut b = EstimatorBudget::with_epsilon(self.eps);
        b.mode = self.mode;
        b.seed = self.seed;
        b.paper_strict = self.paper_strict;
        if let Some(c) = self.c_mix {
            b.sampler.mixing_multiplier = c;
        }
        if let Some(c) = self.c_levels {
            b.counter.levels_multiplier = c;
        }
        if let Some(t) = self.truncation {
            b.truncation = t;
        }
        b.kappa_override = self.kappa;
        b.theta_override = self.theta;
        if let Some(cap) = self.max_draws {
            b.max_draws = (cap > 0).then_some(cap);
        }
        if let Some(s) = self.sample_scale {
            b.sample_scale = s;
        }
        b.failure_probability = self.failure_probability;
        b
    }

    fn emit<T: Serialize>(&self, mut record: RunRecord<T>, start: Instant) -> Result<()> {
        if self.timing {
            record.elapsed_seconds = Some(start.elapsed().as_secs_f64());
        }
        let text = if self.json {
            record.to_json()
        } else {
            record.to_text()
        };
        write_out(self.output.as_deref(), &text)
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout()
            .write_all(text.as_bytes())
            .context("writing to standard output"),
    }
}

fn load(path: &Path) -> Result<(Instance, InputDigest)> {
    let (instance, bytes) = read_instance(path)?;
    Ok((
        instance,
        InputDigest::of(&path.display().to_string(), &bytes),
    ))
}

fn load_pair(mu: &Path, nu: &Path) -> Result<(Instance, Instance, Vec<InputDigest>)> {
    let (a, da) = load(mu)?;
    let (b, db) = load(nu)?;
    a.ensure_pair(&b)?;
    Ok((a, b, vec![da, db]))
}

#[derive(Debug, Serialize)]
struct CountReport {
    log_partition: f64,
    levels: usize,
    samples: u64,
    exact: bool,
}

#[derive(Debug, Serialize)]
struct SampleReport {
    backend: SamplerBackend,
    steps: usize,
    /// One string per draw, `+` or `-` per vertex in label order.
    configurations: Vec<String>,
}

#[derive(Debug, Serialize)]
struct PairCheck {
    d_par: f64,
    preprocess: PreprocessKind,
    plan: Option<gibbs_tv::estimate::DispatchPlan>,
    plan_error: Option<String>,
}

#[derive(Debug, Serialize)]
struct CheckReport {
    mu: RegimeReport,
    nu: Option<RegimeReport>,
    pair: Option<PairCheck>,
}

#[derive(Debug, Serialize)]
struct ReductionRow {
    vertices: usize,
    edges: usize,
    count: u64,
    enumerated: u64,
    queries: usize,
}

#[derive(Debug, Serialize)]
struct SuiteLine {
    id: &'static str,
    title: &'static str,
    passed: bool,
    summary: String,
    failures: Vec<String>,
}

fn run(cli: Cli) -> Result<u8> {
    let start = Instant::now();
    let g = &cli.global;
    if let Some(threads) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let budget = g.budget();
    budget.validate()?;
    let mut rng = rng_from_seed(g.seed);
    match &cli.command {
        Command::Tv { mu, nu, exact } => {
            let (a, b, inputs) = load_pair(mu, nu)?;
            let mut report = if *exact {
                let value = exact_tv(&a.model, &b.model, DEFAULT_EXACT_CAP)?;
                let mut r =
                    EstimateReport::new(value, ErrorKind::Relative, Branch::Exact, budget.epsilon);
                r.d_par = parameter_distance(&a.model, &b.model).ok();
                r
            } else {
                let plan =
                    plan_dispatch(&a.model, &b.model, &budget).context("planning the estimate")?;
                dispatch_tv(&a.model, &b.model, &budget, &mut rng)
                    .with_context(|| format!("running the {} branch", plan.branch))?
            };
            if !g.timing {
                report.elapsed_seconds = None;
            }
            g.emit(RunRecord::new("tv", g.seed, inputs, &budget, report), start)
        }
        Command::MarginalTv {
            mu,
            nu,
            subset,
            exact,
        } => {
            let (a, b, inputs) = load_pair(mu, nu)?;
            let subset = a.subset(subset)?;
            let report = if *exact {
                let value = exact_marginal_tv(&a.model, &b.model, &subset, DEFAULT_EXACT_CAP)?;
                EstimateReport::new(value, ErrorKind::Additive, Branch::Exact, budget.epsilon)
            } else {
                marginal_additive_tv(
                    &a.model,
                    &b.model,
                    &subset,
                    budget.epsilon,
                    &budget,
                    &mut rng,
                )
                .context("running the marginal-additive branch")?
            };
            g.emit(
                RunRecord::new("marginal-tv", g.seed, inputs, &budget, report),
                start,
            )
        }
        Command::Count { model, pin, exact } => {
            let (inst, digest) = load(model)?;
            let n = inst.model.vertex_count();
            let pin = match pin {
                Some(p) => inst.pinning(p)?,
                None => Pinning::free(n),
            };
            let report = if *exact {
                let lz = exact_conditional_partition(&inst.model, &pin, DEFAULT_EXACT_CAP)?;
                CountReport {
                    log_partition: lz,
                    levels: 0,
                    samples: 0,
                    exact: true,
                }
            } else {
                let c = conditional_count(
                    &inst.model,
                    &pin,
                    budget.epsilon,
                    &budget.counter,
                    &budget.sampler,
                    &mut rng,
                )?;
                CountReport {
                    log_partition: c.log_partition,
                    levels: c.levels,
                    samples: c.samples,
                    exact: c.exact,
                }
            };
            g.emit(
                RunRecord::new("count", g.seed, vec![digest], &budget, report),
                start,
            )
        }
        Command::Sample { model, num, pin } => {
            let (inst, digest) = load(model)?;
            let pin = match pin {
                Some(p) => inst.pinning(p)?,
                None => Pinning::free(inst.model.vertex_count()),
            };
            let sampler = Sampler::new(&inst.model, &pin, budget.epsilon, &budget.sampler)?;
            let configurations = (0..*num)
                .map(|_| {
                    sampler
                        .draw(&mut rng)
                        .spins()
                        .iter()
                        .map(|s| if s.is_plus() { '+' } else { '-' })
                        .collect()
                })
                .collect();
            let report = SampleReport {
                backend: sampler.backend(),
                steps: sampler.steps(),
                configurations,
            };
            g.emit(
                RunRecord::new("sample", g.seed, vec![digest], &budget, report),
                start,
            )
        }
        Command::Check { model, nu } => {
            let (a, da) = load(model)?;
            let mut inputs = vec![da];
            let mut report = CheckReport {
                mu: regime_report(&a.model)?,
                nu: None,
                pair: None,
            };
            if let Some(path) = nu {
                let (b, db) = load(path)?;
                a.ensure_pair(&b)?;
                inputs.push(db);
                report.nu = Some(regime_report(&b.model)?);
                let (plan, plan_error) = match plan_dispatch(&a.model, &b.model, &budget) {
                    Ok(p) => (Some(p), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                report.pair = Some(PairCheck {
                    d_par: parameter_distance(&a.model, &b.model)?,
                    preprocess: preprocess(&a.model, &b.model)?.kind(),
                    plan,
                    plan_error,
                });
            }
            g.emit(
                RunRecord::new("check", g.seed, inputs, &budget, report),
                start,
            )
        }
        Command::ReduceDemo {
            graph,
            max_vertices,
            no_shortcut,
        } => {
            let options = ReductionOptions {
                use_path_shortcut: !no_shortcut,
                ..ReductionOptions::default()
            };
            match graph {
                Some(path) => {
                    let (inst, digest) = load(path)?;
                    let report = count_via_tv_queries(inst.model.graph(), &options)?;
                    g.emit(
                        RunRecord::new("reduce-demo", g.seed, vec![digest], &options, report),
                        start,
                    )
                }
                None => {
                    let rows = connected_graphs(*max_vertices, 3)
                        .iter()
                        .map(|graph| {
                            let r = count_via_tv_queries(graph, &options)?;
                            let model =
                                gibbs_tv::HardcoreModel::uniform(graph.clone(), 1.0)?.into();
                            let z = gibbs_tv::exact::exact_partition(&model, DEFAULT_EXACT_CAP)?;
                            Ok(ReductionRow {
                                vertices: graph.vertex_count(),
                                edges: graph.edge_count(),
                                count: r.count,
                                enumerated: z.exp().round() as u64,
                                queries: r.total_queries,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let mismatches = rows.iter().filter(|r| r.count != r.enumerated).count();
                    g.emit(
                        RunRecord::new("reduce-demo", g.seed, Vec::new(), &options, rows),
                        start,
                    )?;
                    return Ok(if mismatches == 0 {
                        0
                    } else {
                        EXIT_CHECK_FAILED as u8
                    });
                }
            }
        }
        Command::Suite { name, check, csv } => {
            let options = SuiteOptions { seed: g.seed };
            let checks: Vec<&suite::Check> = match check {
                Some(id) => vec![suite::check(id)
                    .with_context(|| format!("unknown check {id:?}"))
                    .map_err(|e| gibbs_tv::Error::InvalidParameter(e.to_string()))?],
                None if name == "all" => suite::CHECKS.iter().collect(),
                None => {
                    let s: Suite = name.parse().map_err(gibbs_tv::Error::InvalidParameter)?;
                    s.checks().collect()
                }
            };
            let mut outcomes = Vec::with_capacity(checks.len());
            for c in checks {
                let outcome = suite::run_check(c, &options)?;
                if !g.json {
                    println!("{}", outcome.line());
                    for f in &outcome.failures {
                        println!("    {f}");
                    }
                }
                outcomes.push(outcome);
            }
            if g.json {
                let lines: Vec<SuiteLine> = outcomes
                    .iter()
                    .map(|o| SuiteLine {
                        id: o.id,
                        title: o.title,
                        passed: o.passed,
                        summary: o.summary.clone(),
                        failures: o.failures.clone(),
                    })
                    .collect();
                println!("{}", serde_json::to_string_pretty(&lines)?);
            }
            if let Some(path) = csv {
                let file = fs::File::create(path)
                    .with_context(|| format!("creating {}", path.display()))?;
                suite::write_csv(&outcomes, io::BufWriter::new(file))?;
            }
            return Ok(if outcomes.iter().all(|o| o.passed) {
                0
            } else {
                EXIT_CHECK_FAILED as u8
            });
        }
    }
    .map(|()| 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
