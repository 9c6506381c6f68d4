//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use sgoal::bench::{make_benchmark, BenchmarkProblem};
use sgoal::es::{EsConfig, EsMode, EvolutionStrategy, Recombination};
use sgoal::sa::{Cooling, CoolingSchedule, SaConfig, SimulatedAnnealing};
use sgoal::{Result, SgoalError};

pub const KEYS: [&str; 28] = [
    "algorithm",
    "problem",
    "dim",
    "replicates",
    "seed",
    "max_iters",
    "max_evals",
    "eps",
    "output",
    "verify.t_max",
    "sa.T0",
    "sa.cooling",
    "sa.gamma",
    "sa.step",
    "sa.floor",
    "sa.c",
    "sa.sigma",
    "sa.elitist",
    "es.mu",
    "es.rho",
    "es.lambda",
    "es.mode",
    "es.tau",
    "es.sigma0",
    "es.sigma_min",
    "es.sigma_max",
    "es.recomb_y",
    "es.recomb_s",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmKind {
    Sa,
    Es,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: AlgorithmKind,
    pub problem: String,
    pub dim: usize,
    pub replicates: usize,
    pub seed: u64,
    pub max_iters: u64,
    pub max_evals: Option<u64>,
    pub eps: Vec<f64>,
    pub output: PathBuf,
    pub verify_t_max: usize,
    pub sa: SaConfig,
    pub es: EsConfig,
}

/// Parses the text of a config file into raw key/value pairs.
///
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) =
            split_pair(line).map_err(|e| SgoalError::config(format!("line {}: {e}", n + 1)))?;
        out.insert(k, v);
    }
    Ok(out)
}

/// Splits `key=value`, trimming both sides.
pub fn split_pair(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| SgoalError::config(format!("expected key=value, got '{s}'")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(SgoalError::config(format!("empty key in '{s}'")));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

struct Pairs(BTreeMap<String, String>);

impl Pairs {
    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| SgoalError::config(format!("{key} = '{v}': {e}"))),
        }
    }

    fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.0
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| SgoalError::config(format!("{key} = '{v}': {e}")))
            })
            .transpose()
    }

    fn str(&self, key: &str, default: &str) -> String {
        self.0
            .get(key)
            .cloned()
            .unwrap_or_else(|| default.to_string())
    }
}

fn recombination(key: &str, v: &str) -> Result<Recombination> {
    match v {
        "discrete" => Ok(Recombination::Discrete),
        "intermediate" => Ok(Recombination::Intermediate),
        _ => Err(SgoalError::config(format!(
            "{key} must be discrete or intermediate, got '{v}'"
        ))),
    }
}

impl ExperimentConfig {
    pub fn from_pairs(raw: BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = raw.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(SgoalError::config(format!("unknown key '{k}'")));
        }
        let p = Pairs(raw);

        let algorithm = match p.str("algorithm", "sa").as_str() {
            "sa" => AlgorithmKind::Sa,
            "es" => AlgorithmKind::Es,
            other => {
                return Err(SgoalError::config(format!(
                    "algorithm must be sa or es, got '{other}'"
                )))
            }
        };
        let eps = p
            .str("eps", "0.5")
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| SgoalError::config(format!("eps entry '{s}': {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if eps.iter().any(|e| e.is_nan() || *e <= 0.0) {
            return Err(SgoalError::config("every eps must be positive"));
        }
        let replicates: usize = p.get("replicates", 10)?;
        if replicates == 0 {
            return Err(SgoalError::config("replicates must be at least 1"));
        }

        let t0: f64 = p.get("sa.T0", 1.0)?;
        let cooling = match p.str("sa.cooling", "geometric").as_str() {
            "constant" => Cooling::Constant,
            "geometric" => Cooling::Geometric {
                gamma: p.get("sa.gamma", 0.95)?,
            },
            "linear" => Cooling::Linear {
                step: p.get("sa.step", 0.01)?,
                floor: p.get("sa.floor", 0.0)?,
            },
            "log" => Cooling::Logarithmic {
                c: p.get("sa.c", 1.0)?,
            },
            other => {
                return Err(SgoalError::config(format!(
                    "sa.cooling must be constant, geometric, linear or log, got '{other}'"
                )))
            }
        };
        let sa = SaConfig {
            sigma: p.get("sa.sigma", 0.5)?,
            elitist: p.get("sa.elitist", true)?,
            schedule: CoolingSchedule::new(cooling, t0)?,
        };

        let mode = match p.str("es.mode", "plus").as_str() {
            "plus" => EsMode::Plus,
            "comma" => EsMode::Comma,
            other => {
                return Err(SgoalError::config(format!(
                    "es.mode must be plus or comma, got '{other}'"
                )))
            }
        };
        let defaults = EsConfig::new(1, 1, 1, mode);
        let es = EsConfig {
            mu: p.get("es.mu", 1)?,
            rho: p.get("es.rho", 1)?,
            lambda: p.get("es.lambda", 1)?,
            mode,
            tau: p.opt("es.tau")?,
            sigma0: p.get("es.sigma0", defaults.sigma0)?,
            sigma_min: p.get("es.sigma_min", defaults.sigma_min)?,
            sigma_max: p.get("es.sigma_max", defaults.sigma_max)?,
            recomb_y: recombination("es.recomb_y", &p.str("es.recomb_y", "discrete"))?,
            recomb_s: recombination("es.recomb_s", &p.str("es.recomb_s", "intermediate"))?,
        };

        let config = Self {
            algorithm,
            problem: p.str("problem", "onemax"),
            dim: p.get("dim", 8)?,
            replicates,
            seed: p.get("seed", 0)?,
            max_iters: p.get("max_iters", 200)?,
            max_evals: p.opt("max_evals")?,
            eps,
            output: PathBuf::from(p.str("output", "out")),
            verify_t_max: p.get("verify.t_max", 50)?,
            sa,
            es,
        };
        // Build once so every problem and algorithm parameter is checked up front.
        config.benchmark()?;
        config.build()?;
        Ok(config)
    }

    pub fn benchmark(&self) -> Result<BenchmarkProblem> {
        make_benchmark(&self.problem, self.dim).map_err(|e| match e {
            SgoalError::Usage(m) | SgoalError::Config(m) => SgoalError::Config(m),
        })
    }

    pub fn build(&self) -> Result<Built> {
        let problem = self.benchmark()?.problem;
        Ok(match self.algorithm {
            AlgorithmKind::Sa => Built::Sa(SimulatedAnnealing::new(problem, self.sa)?),
            AlgorithmKind::Es => Built::Es(EvolutionStrategy::new(problem, self.es.clone())?),
        })
    }
}

#[derive(Debug, Clone)]
pub enum Built {
    Sa(SimulatedAnnealing),
    Es(EvolutionStrategy),
}
