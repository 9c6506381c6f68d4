//! The `run`, `verify` and `select-test` subcommands.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use sgoal::run::{Algorithm, RunOutcome, StopCondition};
use sgoal::selection::{exact_probs, select_one, Rate, SelectionScheme};
use sgoal::stats::{chi_square_gof, ChiSquare};
use sgoal::verify::{check_bound, extract_chain, BoundOptions, BoundReport, ChainSource};
use sgoal::Relation;

use crate::config::{parse_pairs, split_pair, Built, ExperimentConfig};
use crate::CliError;

/// Environment variable capping the number of replicate worker threads.
pub const THREADS_ENV: &str = "SGOAL_THREADS";

/// Reads the config file (if any), then applies `--set` overrides and the
/// dedicated flags, in that order.
pub fn load_config(
    path: Option<&Path>,
    sets: &[String],
    seed: Option<u64>,
    replicates: Option<usize>,
    out: Option<&Path>,
) -> Result<ExperimentConfig, CliError> {
    let text = match path {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| CliError::Usage(format!("reading {}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut pairs = parse_pairs(&text)?;
    for s in sets {
        let (k, v) = split_pair(s)?;
        pairs.insert(k, v);
    }
    if let Some(s) = seed {
        pairs.insert("seed".into(), s.to_string());
    }
    if let Some(r) = replicates {
        pairs.insert("replicates".into(), r.to_string());
    }
    if let Some(o) = out {
        pairs.insert("output".into(), o.display().to_string());
    }
    Ok(ExperimentConfig::from_pairs(pairs)?)
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Runtime(format!("starting worker threads: {e}")))
}

fn prepare_output(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(contents.as_bytes()))
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn stop_condition(config: &ExperimentConfig) -> StopCondition {
    let stop = StopCondition::MaxIterations(config.max_iters);
    match config.max_evals {
        Some(e) => stop.or(StopCondition::MaxEvaluations(e)),
        None => stop,
    }
}

fn run_one(built: &Built, stop: &StopCondition, seed: u64) -> sgoal::Result<RunOutcome> {
    match built {
        Built::Sa(a) => a.run(stop, seed),
        Built::Es(a) => a.run(stop, seed),
    }
}

fn trace_csv(outcome: &RunOutcome) -> String {
    let mut s = String::from("t,D,f_best,evals,T_or_sigma\n");
    for r in &outcome.trace.rows {
        let d = r.d.map(|d| d.to_string()).unwrap_or_default();
        writeln!(
            s,
            "{},{},{},{},{}",
            r.t, d, r.f_best, r.evaluations, r.parameter
        )
        .expect("string write");
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub t: u64,
    pub mean_d: f64,
    pub median_d: f64,
    /// `Pr{D_t > eps}` for each configured eps, in order.
    pub p_exceed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub problem: String,
    pub dim: usize,
    pub seeds: Vec<u64>,
    pub eps: Vec<f64>,
    pub best_fitness: Vec<f64>,
    pub per_t: Vec<SummaryRow>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Per-`t` statistics across replicates. Replicates that stopped early hold
/// their final value.
pub fn summarize(closeness: &[Vec<f64>], eps: &[f64]) -> Vec<SummaryRow> {
    let len = closeness.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|t| {
            let mut d: Vec<f64> = closeness
                .iter()
                .filter_map(|c| c.get(t).or(c.last()).copied())
                .collect();
            let n = d.len() as f64;
            let mean_d = d.iter().sum::<f64>() / n;
            let p_exceed = eps
                .iter()
                .map(|e| d.iter().filter(|v| *v > e).count() as f64 / n)
                .collect();
            d.sort_by(f64::total_cmp);
            SummaryRow {
                t: t as u64,
                mean_d,
                median_d: median(&d),
                p_exceed,
            }
        })
        .collect()
}

/// Runs every replicate, writing `trace_<seed>.csv` per replicate and `summary.json`.
pub fn cmd_run(config: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let built = config.build()?;
    let stop = stop_condition(config);
    let dir = config.output.clone();
    prepare_output(&dir)?;
    let seeds: Vec<u64> = (0..config.replicates as u64)
        .map(|i| config.seed.wrapping_add(i))
        .collect();
    let outcomes = thread_pool()?.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let outcome = run_one(&built, &stop, seed)
                    .map_err(|e| CliError::Runtime(format!("replicate with seed {seed}: {e}")))?;
                write_file(&dir.join(format!("trace_{seed}.csv")), &trace_csv(&outcome))?;
                Ok(outcome)
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    let closeness: Vec<Vec<f64>> = outcomes
        .iter()
        .map(|o| o.trace.closeness().unwrap_or_default())
        .collect();
    let summary = RunSummary {
        problem: config.problem.clone(),
        dim: config.dim,
        seeds,
        eps: config.eps.clone(),
        best_fitness: outcomes.iter().map(|o| o.best.fitness).collect(),
        per_t: summarize(&closeness, &config.eps),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&dir.join("summary.json"), &json)?;
    Ok(summary)
}

/// Extracts the exact chain for the configured algorithm and checks the bound
/// against the first configured eps. Writes `bound.json` and `bound.csv`.
///
/// ES step sizes are frozen (`tau = 0`) because only then is the population of
/// points a finite Markov chain.
pub fn cmd_verify(config: &ExperimentConfig) -> Result<BoundReport, CliError> {
    let mut config = config.clone();
    config.es.tau = Some(0.0);
    let built = config.build()?;
    let source = match &built {
        Built::Sa(a) => ChainSource::Sa(a),
        Built::Es(a) => ChainSource::Es(a),
    };
    let chain = extract_chain(source, config.eps[0], config.verify_t_max)?;
    let report = check_bound(&chain, config.verify_t_max, BoundOptions::default())?;
    prepare_output(&config.output)?;
    write_file(&config.output.join("bound.json"), &report.to_json())?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv).expect("in-memory write");
    write_file(
        &config.output.join("bound.csv"),
        &String::from_utf8(csv).expect("ascii csv"),
    )?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct SelectTestArgs {
    pub scheme: String,
    pub fitness: Vec<f64>,
    pub maximize: bool,
    pub size: usize,
    pub rate: String,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SelectReport {
    pub exact: Vec<f64>,
    pub empirical: Vec<f64>,
    pub chi_square: ChiSquare,
}

impl SelectReport {
    pub fn render(&self, fitness: &[f64], alpha: f64) -> String {
        let mut s = String::from("index fitness exact empirical\n");
        for (i, f) in fitness.iter().enumerate() {
            writeln!(s, "{i} {f} {:.6} {:.6}", self.exact[i], self.empirical[i])
                .expect("string write");
        }
        let c = &self.chi_square;
        let verdict = if c.passes(alpha) { "PASS" } else { "FAIL" };
        writeln!(
            s,
            "chi-square statistic={:.4} dof={} p={:.4} alpha={alpha} verdict={verdict}",
            c.statistic, c.dof, c.p_value
        )
        .expect("string write");
        s
    }
}

pub fn parse_scheme(name: &str, size: usize, rate: &str) -> Result<SelectionScheme, CliError> {
    let rate = match rate {
        "ranking" => Rate::Ranking,
        "fitness" => Rate::Fitness,
        other => {
            return Err(CliError::Usage(format!(
                "rate must be ranking or fitness, got '{other}'"
            )))
        }
    };
    Ok(match name {
        "uniform" => SelectionScheme::Uniform,
        "proportional" => SelectionScheme::Proportional(rate),
        "roulette" => SelectionScheme::Roulette(rate),
        "ranking" => SelectionScheme::Ranking,
        "tournament" => SelectionScheme::Tournament { size, inner: rate },
        other => {
            return Err(CliError::Usage(format!(
            "scheme must be uniform, proportional, roulette, ranking or tournament, got '{other}'"
        )))
        }
    })
}

/// Compares exact selection probabilities with the frequencies of the randomized procedure.
pub fn cmd_select_test(args: &SelectTestArgs) -> Result<SelectReport, CliError> {
    if args.fitness.is_empty() || args.samples == 0 {
        return Err(CliError::Usage(
            "need a fitness vector and at least one sample".into(),
        ));
    }
    let scheme = parse_scheme(&args.scheme, args.size, &args.rate)?;
    let relation = if args.maximize {
        Relation::Maximize
    } else {
        Relation::Minimize
    };
    let exact = exact_probs(&scheme, &args.fitness, relation)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut counts = vec![0u64; args.fitness.len()];
    for _ in 0..args.samples {
        counts[select_one(&scheme, &args.fitness, relation, &mut rng)?] += 1;
    }
    let empirical = counts
        .iter()
        .map(|c| *c as f64 / args.samples as f64)
        .collect();
    Ok(SelectReport {
        chi_square: chi_square_gof(&counts, &exact),
        exact,
        empirical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_carries_short_runs_forward() {
        let rows = summarize(&[vec![3.0, 2.0, 1.0], vec![4.0]], &[1.5, 3.5]);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].mean_d, 3.5);
        assert_eq!(rows[2].mean_d, 2.5);
        assert_eq!(rows[2].median_d, 2.5);
        assert_eq!(rows[2].p_exceed, vec![0.5, 0.5]);
        assert_eq!(rows[0].p_exceed, vec![1.0, 0.5]);
    }

    #[test]
    fn select_test_examples() {
        let base = SelectTestArgs {
            scheme: "uniform".into(),
            fitness: vec![1.0, 2.0, 3.0, 4.0],
            maximize: false,
            size: 2,
            rate: "ranking".into(),
            samples: 20_000,
            seed: 1,
        };
        let r = cmd_select_test(&base).unwrap();
        assert_eq!(r.exact, vec![0.25; 4]);
        assert!(r.chi_square.passes(0.001));

        let r = cmd_select_test(&SelectTestArgs {
            scheme: "ranking".into(),
            fitness: vec![1.0, 2.0, 3.0],
            ..base.clone()
        })
        .unwrap();
        assert!((r.exact[0] - 0.5).abs() < 1e-15 && (r.exact[2] - 1.0 / 6.0).abs() < 1e-15);

        let r = cmd_select_test(&SelectTestArgs {
            scheme: "tournament".into(),
            fitness: vec![1.0, 2.0],
            ..base.clone()
        })
        .unwrap();
        assert!((r.exact[0] - 7.0 / 12.0).abs() < 1e-15);
        assert!(r.render(&[1.0, 2.0], 0.001).contains("verdict=PASS"));

        assert!(cmd_select_test(&SelectTestArgs {
            scheme: "lottery".into(),
            ..base
        })
        .is_err());
    }
}
