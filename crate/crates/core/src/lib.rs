//! Stochastic global optimization algorithms expressed as compositions of
//! (possibly non-stationary) Markov kernels.
//!
//! - [`problem`]: problems, populations, `best`, closeness and eps-states.
//! - [`run`]: the generic iterate-a-population loop and convergence traces.
//! - [`kernel`]: kernel algebra (composition, join, projection, sorting) with
//!   exact transition rows on finite domains.
//! - [`selection`]: uniform, proportional, tournament, roulette and ranking selection.
//! - [`sa`]: simulated annealing as variation followed by Metropolis replacement.
//! - [`es`]: self-adaptive `(μ/ρ +, λ)` evolution strategies.
//! - [`verify`]: exact checks of the absorption bound `1 - (1 - δ)^t` and Monte
//!   Carlo estimates of complete convergence.
//! - [`bench`]: test problems with known optima.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod es;
pub mod kernel;
pub mod problem;
pub mod run;
pub mod sa;
pub mod selection;
pub mod stats;
pub mod verify;

pub use error::{Result, SgoalError};
pub use kernel::{compose, join, Ctx, Dist, Kernel, ProductOrder, ScheduleState};
pub use problem::{
    best, classify_eps, closeness, BoxSpace, EpsClass, FiniteSet, Individual, Population, Problem,
    Relation, Space,
};

pub use run::{run_sgoal, Algorithm, ConvergenceTrace, RunOutcome, StopCondition, TraceRow};
