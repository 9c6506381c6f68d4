//! The generic loop: `P_0 = InitPop`, then `P_{t+1} = NextPop(P_t)` until `End(P_t, t)`.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgoalError};
use crate::kernel::{Ctx, Kernel, ScheduleState};
use crate::problem::{best, closeness, Individual, Population, Problem};

pub type EndPredicate = Arc<dyn Fn(&Population, u64) -> bool + Send + Sync>;

/// Stopping predicates; [`StopCondition::Any`] combines them by OR.
#[derive(Clone)]
pub enum StopCondition {
    MaxIterations(u64),
    MaxEvaluations(u64),
    /// Stop once `d(P_t) < eps`. Needs a known optimum.
    TargetCloseness(f64),
    Predicate(EndPredicate),
    Any(Vec<StopCondition>),
}

impl fmt::Debug for StopCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopCondition::MaxIterations(n) => write!(f, "MaxIterations({n})"),
            StopCondition::MaxEvaluations(n) => write!(f, "MaxEvaluations({n})"),
            StopCondition::TargetCloseness(e) => write!(f, "TargetCloseness({e})"),
            StopCondition::Predicate(_) => write!(f, "Predicate(..)"),
            StopCondition::Any(v) => f.debug_tuple("Any").field(v).finish(),
        }
    }
}

impl StopCondition {
    pub fn or(self, other: StopCondition) -> StopCondition {
        match self {
            StopCondition::Any(mut v) => {
                v.push(other);
                StopCondition::Any(v)
            }
            s => StopCondition::Any(vec![s, other]),
        }
    }

    fn needs_optimum(&self) -> bool {
        match self {
            StopCondition::TargetCloseness(_) => true,
            StopCondition::Any(v) => v.iter().any(StopCondition::needs_optimum),
            _ => false,
        }
    }

    fn reached(&self, pop: &Population, t: u64, evaluations: u64, d: Option<f64>) -> bool {
        match self {
            StopCondition::MaxIterations(n) => t >= *n,
            StopCondition::MaxEvaluations(n) => evaluations >= *n,
            StopCondition::TargetCloseness(eps) => d.is_some_and(|d| d < *eps),
            StopCondition::Predicate(p) => p(pop, t),
            StopCondition::Any(v) => v.iter().any(|c| c.reached(pop, t, evaluations, d)),
        }
    }
}

/// One observation of the run at generation `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: u64,
    /// `D_t = d(P_t)`, when the optimum is known.
    pub d: Option<f64>,
    pub f_best: f64,
    pub evaluations: u64,
    /// The active non-stationary parameter: temperature `T` when the schedule
    /// carries one, otherwise the mean step size of the population.
    pub parameter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
    /// Best member of any population observed during the run.
    pub best_ever: Individual,
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// The `D_t` sequence, if the optimum was known.
    pub fn closeness(&self) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.d).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// `Best(P_final)`.
    pub best: Individual,
    pub trace: ConvergenceTrace,
    pub final_population: Population,
}

fn active_parameter(pop: &Population, schedule: &ScheduleState) -> f64 {
    schedule
        .param("T")
        .or_else(|| pop.mean_strategy())
        .unwrap_or(f64::NAN)
}

/// Runs the loop with an RNG stream seeded from `seed`.
pub fn run_sgoal(
    problem: &Problem,
    init: &dyn Fn(&mut Ctx<'_>) -> Result<Population>,
    next_pop: &Kernel<Individual>,
    mut schedule: ScheduleState,
    end: &StopCondition,
    seed: u64,
) -> Result<RunOutcome> {
    if end.needs_optimum() && problem.f_star().is_none() {
        return Err(SgoalError::config(
            "target-closeness stop needs a known optimum",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evaluations = 0u64;
    let mut pop = {
        let mut ctx = Ctx::new(&schedule, &mut rng);
        let pop = init(&mut ctx)?;
        evaluations += ctx.evaluations();
        pop
    };
    if pop.len() != next_pop.arity_in() || next_pop.arity_in() != next_pop.arity_out() {
        return Err(SgoalError::config(format!(
            "population of {} does not match next-population kernel {} -> {}",
            pop.len(),
            next_pop.arity_in(),
            next_pop.arity_out()
        )));
    }
    let relation = problem.relation();
    let known_optimum = problem.f_star().is_some();
    let mut rows = Vec::new();
    let mut best_ever = pop.members()[best(&pop, relation)?].clone();
    loop {
        let t = schedule.t();
        let b = &pop.members()[best(&pop, relation)?];
        if relation.better(b.fitness, best_ever.fitness) {
            best_ever = b.clone();
        }
        let d = if known_optimum {
            Some(closeness(&pop, problem)?)
        } else {
            None
        };
        rows.push(TraceRow {
            t,
            d,
            f_best: b.fitness,
            evaluations,
            parameter: active_parameter(&pop, &schedule),
        });
        if end.reached(&pop, t, evaluations, d) {
            break;
        }
        let mut ctx = Ctx::new(&schedule, &mut rng);
        let next = next_pop.sample(pop.members(), &mut ctx)?;
        evaluations += ctx.evaluations();
        pop = Population::new(next);
        schedule.advance();
    }
    let best = pop.best(relation)?.clone();
    Ok(RunOutcome {
        best,
        trace: ConvergenceTrace { rows, best_ever },
        final_population: pop,
    })
}

/// An algorithm packaged as initial population, next-population kernel and schedule.
pub trait Algorithm {
    fn problem(&self) -> &Problem;
    fn initial_population(&self, ctx: &mut Ctx<'_>) -> Result<Population>;
    fn next_pop_kernel(&self) -> Kernel<Individual>;
    fn schedule(&self) -> ScheduleState;

    fn run(&self, end: &StopCondition, seed: u64) -> Result<RunOutcome> {
        run_sgoal(
            self.problem(),
            &|ctx: &mut Ctx<'_>| self.initial_population(ctx),
            &self.next_pop_kernel(),
            self.schedule(),
            end,
            seed,
        )
    }
}
