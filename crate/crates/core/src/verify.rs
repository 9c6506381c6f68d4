//! Exact checks of the absorption bound `K^(t)(x, Ω_ε) ≥ 1 - (1 - δ)^t` on
//! finite chains, and Monte Carlo estimates of complete convergence.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgoalError};
use crate::es::EvolutionStrategy;
use crate::kernel::{
    check_row_stochastic, masses_into, ProductOrder, TupleCodec, ROW_TOLERANCE, STATE_CAP,
};
use crate::problem::{classify_eps, EpsClass, Individual, Population, Problem};
use crate::run::{Algorithm, ConvergenceTrace};
use crate::sa::SimulatedAnnealing;

/// Minimum number of traces for [`estimate_convergence`].
pub const MIN_TRACES: usize = 30;

/// Default threshold on the last-quarter increase of the partial sums.
pub const DEFAULT_PLATEAU_THRESHOLD: f64 = 0.01;

/// A finite, possibly non-stationary chain with a marked target set.
///
/// `matrices[t - 1]` is the kernel applied at step `t`; past the end of the
/// sequence the last matrix keeps applying.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteChain {
    eps_set: Vec<bool>,
    matrices: Vec<DMatrix<f64>>,
}

impl FiniteChain {
    pub fn new(eps_set: Vec<bool>, matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = eps_set.len();
        if matrices.is_empty() {
            return Err(SgoalError::usage("a chain needs at least one matrix"));
        }
        if !eps_set.iter().any(|b| *b) || eps_set.iter().all(|b| *b) {
            return Err(SgoalError::usage("the eps-set must be nonempty and proper"));
        }
        for (t, m) in matrices.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(SgoalError::usage(format!(
                    "matrix {} is {}x{}, expected {n}x{n}",
                    t + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
            check_row_stochastic(m)
                .map_err(|e| SgoalError::usage(format!("matrix {}: {e}", t + 1)))?;
        }
        Ok(Self { eps_set, matrices })
    }

    /// Convenience constructor from a list of target state indices.
    pub fn with_targets(n: usize, targets: &[usize], matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        let mut eps_set = vec![false; n];
        for &a in targets {
            *eps_set.get_mut(a).ok_or_else(|| {
                SgoalError::usage(format!("target state {a} outside {n} states"))
            })? = true;
        }
        Self::new(eps_set, matrices)
    }

    pub fn n_states(&self) -> usize {
        self.eps_set.len()
    }

    pub fn eps_set(&self) -> &[bool] {
        &self.eps_set
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    /// Kernel applied at step `t` (1-based).
    pub fn matrix_at(&self, t: usize) -> &DMatrix<f64> {
        &self.matrices[(t.max(1) - 1).min(self.matrices.len() - 1)]
    }

    fn mass_into_eps(&self, m: &DMatrix<f64>, x: usize) -> f64 {
        m.row(x)
            .iter()
            .zip(&self.eps_set)
            .filter(|(_, e)| **e)
            .map(|(v, _)| v)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Premises {
    /// `min_t min_{x ∉ Ω_ε} K_t(x, Ω_ε)`.
    pub delta: f64,
    /// Every kernel keeps `Ω_ε` with probability one.
    pub absorbing: bool,
}

impl Premises {
    pub fn reach(&self) -> bool {
        self.delta > 0.0
    }

    pub fn hold(&self) -> bool {
        self.absorbing && self.reach()
    }
}

pub fn check_premises(chain: &FiniteChain) -> Premises {
    let mut delta = f64::INFINITY;
    let mut absorbing = true;
    for m in &chain.matrices {
        for x in 0..chain.n_states() {
            let mass = chain.mass_into_eps(m, x);
            if chain.eps_set[x] {
                absorbing &= mass >= 1.0 - ROW_TOLERANCE;
            } else {
                delta = delta.min(mass);
            }
        }
    }
    Premises { delta, absorbing }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub t: usize,
    /// `min_x K^(t)(x, Ω_ε)`.
    pub min_mass: f64,
    /// `1 - (1 - δ)^t`.
    pub bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub delta: f64,
    pub premise_absorbing: bool,
    pub premise_reach: bool,
    pub per_t: Vec<BoundRow>,
}

impl BoundReport {
    /// Both premises hold and no margin falls below `-1e-12`.
    pub fn holds(&self) -> bool {
        self.premise_absorbing
            && self.premise_reach
            && self.per_t.iter().all(|r| r.margin >= -ROW_TOLERANCE)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,min_mass,bound,margin")?;
        for r in &self.per_t {
            writeln!(out, "{},{:?},{:?},{:?}", r.t, r.min_mass, r.bound, r.margin)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoundOptions {
    /// Use this δ instead of the extracted one. It must not exceed the extracted value.
    pub delta: Option<f64>,
    pub order: ProductOrder,
}

/// Computes `K^(t)(x, Ω_ε)` for `t = 1..=t_max` by exact ordered products and
/// compares the minimum over starts with `1 - (1 - δ)^t`.
pub fn check_bound(
    chain: &FiniteChain,
    t_max: usize,
    options: BoundOptions,
) -> Result<BoundReport> {
    let premises = check_premises(chain);
    let delta = match options.delta {
        None => premises.delta,
        Some(d) => {
            if !(d > 0.0 && d <= premises.delta + ROW_TOLERANCE) {
                return Err(SgoalError::usage(format!(
                    "delta override {d} must lie in (0, {}]",
                    premises.delta
                )));
            }
            d
        }
    };
    let masses = masses_into(|t| chain.matrix_at(t), t_max, &chain.eps_set, options.order)?;
    let per_t = masses
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let t = i + 1;
            let min_mass = v.min();
            let bound = 1.0 - (1.0 - delta).powi(t as i32);
            BoundRow {
                t,
                min_mass,
                bound,
                margin: min_mass - bound,
            }
        })
        .collect();
    Ok(BoundReport {
        delta,
        premise_absorbing: premises.absorbing,
        premise_reach: premises.reach(),
        per_t,
    })
}

/// Algorithms whose generation kernel can be enumerated on a finite space.
#[derive(Debug, Clone, Copy)]
pub enum ChainSource<'a> {
    Sa(&'a SimulatedAnnealing),
    Es(&'a EvolutionStrategy),
}

/// Builds the exact chain of an algorithm on a finite problem.
///
/// - Elitist SA: the best-so-far chain over `Ω`.
/// - Non-elitist SA: the Metropolis chain over `Ω`, one matrix per step up
///   to `steps` while the temperature keeps changing.
/// - ES (needs `τ = 0`): the population chain over `Ω^μ`.
///
/// `Ω_ε` holds the states whose closeness is below `eps`.
pub fn extract_chain(source: ChainSource<'_>, eps: f64, steps: usize) -> Result<FiniteChain> {
    let (problem, arity) = match source {
        ChainSource::Sa(sa) => (sa.problem(), 1),
        ChainSource::Es(es) => (es.problem(), es.config().mu),
    };
    let set = problem
        .space()
        .as_finite()
        .ok_or_else(|| SgoalError::usage("chain extraction needs a finite search space"))?;
    let m = set.len();
    let n = TupleCodec::new(m).count(arity)?;
    if n > STATE_CAP {
        return Err(SgoalError::usage(format!(
            "{n} population states exceed the cap of {STATE_CAP}; use a smaller space or population"
        )));
    }
    let domain: Vec<usize> = (0..m).collect();
    let eps_set = eps_states(problem, arity, eps)?;
    let matrices = match source {
        ChainSource::Sa(sa) => {
            let kernel = sa.exact_step_kernel()?;
            let mut schedule = sa.schedule();
            let mut matrices: Vec<DMatrix<f64>> = vec![kernel.matrix(&domain, &schedule)?];
            if !sa.config().elitist {
                for _ in 1..steps {
                    schedule.advance();
                    let next = kernel.matrix(&domain, &schedule)?;
                    if matrices.last() == Some(&next) {
                        break;
                    }
                    matrices.push(next);
                }
            }
            matrices
        }
        ChainSource::Es(es) => vec![es
            .exact_population_kernel()?
            .matrix(&domain, &es.schedule())?],
    };
    FiniteChain::new(eps_set, matrices)
}

/// Marks the population tuples (encoded in base `|Ω|`) whose closeness is below `eps`.
pub fn eps_states(problem: &Problem, arity: usize, eps: f64) -> Result<Vec<bool>> {
    let set = problem
        .space()
        .as_finite()
        .ok_or_else(|| SgoalError::usage("eps-states need a finite search space"))?;
    let codec = TupleCodec::new(set.len());
    (0..codec.count(arity)?)
        .map(|code| {
            let members = codec
                .decode(code, arity)
                .into_iter()
                .map(|i| {
                    let point = set.point(i);
                    let f = problem.objective(&point);
                    Individual::new(point, f)
                })
                .collect();
            Ok(classify_eps(&Population::new(members), problem, eps)? == EpsClass::Inside)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEstimate {
    /// Fraction of runs with `D_t > eps`, for `t = 0, 1, …`.
    pub p_t: Vec<f64>,
    /// Binomial standard error of each `p_t`.
    pub standard_errors: Vec<f64>,
    /// `Σ_{i ≤ t} p_i`.
    pub partial_sums: Vec<f64>,
    /// The partial sums rose by less than the threshold over the last quarter.
    pub plateaued: bool,
}

/// Estimates `Pr{D_t > eps}` from closeness sequences of common length.
pub fn estimate_convergence(
    traces: &[Vec<f64>],
    eps: f64,
    plateau_threshold: f64,
) -> Result<ConvergenceEstimate> {
    if traces.len() < MIN_TRACES {
        return Err(SgoalError::usage(format!(
            "need at least {MIN_TRACES} traces, got {}",
            traces.len()
        )));
    }
    if !(eps >= 0.0) {
        return Err(SgoalError::usage(format!(
            "eps must be non-negative, got {eps}"
        )));
    }
    let len = traces[0].len();
    if len == 0 || traces.iter().any(|t| t.len() != len) {
        return Err(SgoalError::usage(
            "traces must be nonempty and share one length",
        ));
    }
    let runs = traces.len();
    let p_t: Vec<f64> = (0..len)
        .map(|t| traces.iter().filter(|tr| tr[t] > eps).count() as f64 / runs as f64)
        .collect();
    let standard_errors = p_t
        .iter()
        .map(|p| crate::stats::binomial_standard_error(*p, runs))
        .collect();
    let partial_sums: Vec<f64> = p_t
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let quarter_start = len - (len / 4).max(1);
    let before = if quarter_start == 0 {
        0.0
    } else {
        partial_sums[quarter_start - 1]
    };
    let plateaued = partial_sums[len - 1] - before < plateau_threshold;
    Ok(ConvergenceEstimate {
        p_t,
        standard_errors,
        partial_sums,
        plateaued,
    })
}

/// [`estimate_convergence`] on run traces; every trace must carry closeness values.
pub fn estimate_from_traces(
    traces: &[ConvergenceTrace],
    eps: f64,
    plateau_threshold: f64,
) -> Result<ConvergenceEstimate> {
    let d = traces
        .iter()
        .map(|t| {
            t.closeness()
                .ok_or_else(|| SgoalError::usage("traces need a known optimum"))
        })
        .collect::<Result<Vec<_>>>()?;
    estimate_convergence(&d, eps, plateau_threshold)
}
