//! Simulated annealing as a variation/replacement method with a
//! non-stationary temperature.
//!
//! One generation is `x' = Variate(x)`, `x = Replace_T(x', x)`, `T = α(T)`.
//! With `elitist = true` the population is the pair `(current, best so far)`,
//! so `d(P_t)` reports the best point ever sampled while the Metropolis chain
//! on `current` is left untouched.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Result, SgoalError};
use crate::kernel::{compose, join, Ctx, Dist, Kernel, ScheduleState, UpdateRule};
use crate::problem::{Individual, Population, Problem, Relation, Space};
use crate::run::Algorithm;

/// Schedule parameter holding the temperature.
pub const TEMPERATURE: &str = "T";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cooling {
    /// `T_t = T_0`.
    Constant,
    /// `T_t = T_0 γ^t`, `γ ∈ (0, 1)`.
    Geometric { gamma: f64 },
    /// `T_t = max(T_0 - step·t, floor)`.
    Linear { step: f64, floor: f64 },
    /// `T_t = T_0 / (1 + c ln(1 + t))`.
    Logarithmic { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingSchedule {
    cooling: Cooling,
    t0: f64,
}

impl CoolingSchedule {
    pub fn new(cooling: Cooling, t0: f64) -> Result<Self> {
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(SgoalError::config(format!(
                "initial temperature must be positive, got {t0}"
            )));
        }
        match cooling {
            Cooling::Constant => {}
            Cooling::Geometric { gamma } => {
                if !(gamma > 0.0 && gamma < 1.0) {
                    return Err(SgoalError::config(format!(
                        "geometric gamma must lie in (0, 1), got {gamma}"
                    )));
                }
            }
            Cooling::Linear { step, floor } => {
                if !(step > 0.0) {
                    return Err(SgoalError::config(format!(
                        "linear cooling step must be positive, got {step}"
                    )));
                }
                if !(floor >= 0.0 && floor <= t0) {
                    return Err(SgoalError::config(format!(
                        "linear cooling floor must lie in [0, T0], got {floor}"
                    )));
                }
            }
            Cooling::Logarithmic { c } => {
                if !(c > 0.0) {
                    return Err(SgoalError::config(format!(
                        "logarithmic rate must be positive, got {c}"
                    )));
                }
            }
        }
        Ok(Self { cooling, t0 })
    }

    pub fn cooling(&self) -> Cooling {
        self.cooling
    }

    pub fn initial(&self) -> f64 {
        self.t0
    }

    /// Temperature in effect after `t` updates.
    pub fn temperature_at(&self, t: u64) -> f64 {
        match self.cooling {
            Cooling::Constant => self.t0,
            Cooling::Geometric { gamma } => self.t0 * gamma.powi(t.min(i32::MAX as u64) as i32),
            Cooling::Linear { step, floor } => (self.t0 - step * t as f64).max(floor),
            Cooling::Logarithmic { c } => self.t0 / (1.0 + c * (t as f64).ln_1p()),
        }
    }
}

impl UpdateRule for CoolingSchedule {
    fn apply(&self, t: u64, params: &mut BTreeMap<String, f64>) {
        params.insert(TEMPERATURE.to_string(), self.temperature_at(t));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaConfig {
    /// Standard deviation of the isotropic Gaussian neighborhood on boxes.
    /// Finite spaces always mutate uniformly over every state.
    pub sigma: f64,
    pub elitist: bool,
    pub schedule: CoolingSchedule,
}

/// Probability that `Replace_T` keeps the candidate.
///
/// Strict improvements are always kept. Otherwise the candidate is kept with
/// probability `exp(-gap / T)`, where `gap ≥ 0` is how much worse it is under
/// either relation. At `T = 0` only strict improvements are kept.
pub fn acceptance_probability(
    candidate: f64,
    incumbent: f64,
    temperature: f64,
    relation: Relation,
) -> f64 {
    if relation.better(candidate, incumbent) {
        return 1.0;
    }
    if !(temperature > 0.0) {
        return 0.0;
    }
    (-relation.gap(candidate, incumbent) / temperature).exp()
}

/// Metropolis replacement between a candidate and the incumbent.
pub fn replace_sa<R: RngCore + ?Sized>(
    candidate: Individual,
    incumbent: Individual,
    temperature: f64,
    relation: Relation,
    rng: &mut R,
) -> Individual {
    if relation.better(candidate.fitness, incumbent.fitness) {
        return candidate;
    }
    let p = acceptance_probability(candidate.fitness, incumbent.fitness, temperature, relation);
    if rng.random::<f64>() < p {
        candidate
    } else {
        incumbent
    }
}

/// `π_1 ∘ s_2` on `(candidate, best)`: the candidate wins unless `best` is strictly better.
pub fn elitist_replace(candidate: Individual, best: Individual, relation: Relation) -> Individual {
    if relation.better(best.fitness, candidate.fitness) {
        best
    } else {
        candidate
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedAnnealing {
    problem: Problem,
    config: SaConfig,
}

impl SimulatedAnnealing {
    pub fn new(problem: Problem, config: SaConfig) -> Result<Self> {
        if problem.space().as_box().is_some() && !(config.sigma > 0.0 && config.sigma.is_finite()) {
            return Err(SgoalError::config(format!(
                "neighborhood sigma must be positive, got {}",
                config.sigma
            )));
        }
        Ok(Self { problem, config })
    }

    pub fn config(&self) -> &SaConfig {
        &self.config
    }

    /// Population size: 2 when elitist (current, best so far), else 1.
    pub fn population_size(&self) -> usize {
        if self.config.elitist {
            2
        } else {
            1
        }
    }

    pub fn variate<R: RngCore + ?Sized>(&self, x: &[f64], rng: &mut R) -> Vec<f64> {
        match self.problem.space() {
            Space::ContinuousBox(b) => {
                let mut y: Vec<f64> = x
                    .iter()
                    .map(|v| v + self.config.sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                b.reflect(&mut y);
                y
            }
            Space::FiniteSet(s) => s.point(s.sample_index(rng)),
        }
    }

    /// Variation then replacement on a population of [`Self::population_size`].
    pub fn step(&self, input: &[Individual], ctx: &mut Ctx<'_>) -> Result<Vec<Individual>> {
        let relation = self.problem.relation();
        let temperature = ctx
            .schedule()
            .param(TEMPERATURE)
            .unwrap_or(self.config.schedule.initial());
        let current = input[0].clone();
        let point = self.variate(&current.point, ctx.rng());
        let candidate = ctx.evaluate(&self.problem, point);
        let best = self
            .config
            .elitist
            .then(|| elitist_replace(candidate.clone(), input[1].clone(), relation));
        let next = replace_sa(candidate, current, temperature, relation, ctx.rng());
        Ok(std::iter::once(next).chain(best).collect())
    }

    /// One full generation: step, then `T = α(T)` and `t = t + 1`.
    pub fn next_pop(
        &self,
        pop: &Population,
        schedule: &mut ScheduleState,
        rng: &mut dyn RngCore,
    ) -> Result<(Population, u64)> {
        let kernel = self.next_pop_kernel();
        let (next, evals) = {
            let mut ctx = Ctx::new(schedule, rng);
            let next = kernel.sample(pop.members(), &mut ctx)?;
            (next, ctx.evaluations())
        };
        schedule.advance();
        Ok((Population::new(next), evals))
    }

    fn finite_fitness(&self) -> Result<Arc<Vec<f64>>> {
        self.problem
            .finite_fitness()
            .map(Arc::new)
            .ok_or_else(|| SgoalError::config("exact kernels need a finite search space"))
    }

    /// Uniform variation `Ω → Ω` over state indices.
    pub fn variate_kernel(&self) -> Result<Kernel<usize>> {
        let m = self.finite_fitness()?.len();
        Ok(Kernel::new("variate_sa", 1, 1, move |_: &[usize], ctx| {
            Ok(vec![ctx.rng().random_range(0..m)])
        })
        .with_exact(|domain: &[usize], _, _| {
            let p = 1.0 / domain.len() as f64;
            Ok(Dist::from_pairs((0..domain.len()).map(|j| (j, p))))
        }))
    }

    /// Metropolis replacement `Ω^2 → Ω` on `(candidate, incumbent)` at the schedule's temperature.
    pub fn metropolis_kernel(&self) -> Result<Kernel<usize>> {
        let fit = self.finite_fitness()?;
        let relation = self.problem.relation();
        let t0 = self.config.schedule.initial();
        let fit_row = Arc::clone(&fit);
        Ok(Kernel::new("replace_sa", 2, 1, move |x: &[usize], ctx| {
            let temperature = ctx.schedule().param(TEMPERATURE).unwrap_or(t0);
            let p = acceptance_probability(fit[x[0]], fit[x[1]], temperature, relation);
            let keep = relation.better(fit[x[0]], fit[x[1]]) || ctx.rng().random::<f64>() < p;
            Ok(vec![if keep { x[0] } else { x[1] }])
        })
        .with_exact(move |_: &[usize], x, schedule| {
            let temperature = schedule.param(TEMPERATURE).unwrap_or(t0);
            let p = acceptance_probability(fit_row[x[0]], fit_row[x[1]], temperature, relation);
            Ok(Dist::from_pairs([(x[0], p), (x[1], 1.0 - p)]))
        }))
    }

    /// `π_1 ∘ s_2` over state indices.
    pub fn elitist_replace_kernel(&self) -> Result<Kernel<usize>> {
        let fit = self.finite_fitness()?;
        let sort = Kernel::sort(
            2,
            Arc::new(move |i: &usize| fit[*i]),
            self.problem.relation(),
        );
        compose(&Kernel::projection(2, &[0])?, &sort)
    }

    /// The one-generation kernel `Ω → Ω` over state indices.
    ///
    /// Non-elitist: `Replace_T ∘ (Variate ⊛ id)` on the current point.
    /// Elitist: `(π_1 ∘ s_2) ∘ (Variate ⊛ id)` on the best-so-far point. Since
    /// the uniform variation ignores the current point, the best-so-far
    /// coordinate of the pair `(current, best)` is itself a Markov chain with
    /// this kernel, whatever the temperature does.
    pub fn exact_step_kernel(&self) -> Result<Kernel<usize>> {
        let propose = join(&[self.variate_kernel()?, Kernel::identity(1)])?;
        let replace = if self.config.elitist {
            self.elitist_replace_kernel()?
        } else {
            self.metropolis_kernel()?
        };
        compose(&replace, &propose)
    }
}

impl Algorithm for SimulatedAnnealing {
    fn problem(&self) -> &Problem {
        &self.problem
    }

    fn initial_population(&self, ctx: &mut Ctx<'_>) -> Result<Population> {
        let point = self.problem.space().sample_uniform(ctx.rng());
        let x = ctx.evaluate(&self.problem, point);
        let members = if self.config.elitist {
            vec![x.clone(), x]
        } else {
            vec![x]
        };
        Ok(Population::new(members))
    }

    fn next_pop_kernel(&self) -> Kernel<Individual> {
        let sa = self.clone();
        let n = self.population_size();
        Kernel::new("next_pop_sa", n, n, move |x: &[Individual], ctx| {
            sa.step(x, ctx)
        })
    }

    fn schedule(&self) -> ScheduleState {
        ScheduleState::new()
            .with_param(TEMPERATURE, self.config.schedule.initial())
            .with_rule(Arc::new(self.config.schedule))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::check_row_stochastic;
    use crate::problem::{closeness, BoxSpace, FiniteSet};
    use crate::run::StopCondition;
    use crate::stats::{binomial_standard_error, chi_square_gof};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn five_points(relation: Relation) -> Problem {
        let pts = (0..5).map(|i| vec![i as f64]).collect();
        let space = Space::FiniteSet(FiniteSet::from_points(pts).unwrap());
        // 0 is optimal when minimizing, 4 when maximizing
        let f_star = if relation == Relation::Minimize {
            0.0
        } else {
            4.0
        };
        Problem::new(space, |x: &[f64]| x[0], relation, Some(f_star)).unwrap()
    }

    fn sphere_box() -> Problem {
        let space = Space::ContinuousBox(BoxSpace::cube(2, -1.0, 1.0).unwrap());
        Problem::new(
            space,
            |x: &[f64]| x.iter().map(|v| v * v).sum(),
            Relation::Minimize,
            Some(0.0),
        )
        .unwrap()
    }

    fn config(cooling: Cooling, t0: f64, elitist: bool) -> SaConfig {
        SaConfig {
            sigma: 0.5,
            elitist,
            schedule: CoolingSchedule::new(cooling, t0).unwrap(),
        }
    }

    #[test]
    fn cooling_validation() {
        assert!(CoolingSchedule::new(Cooling::Constant, 0.0).is_err());
        assert!(CoolingSchedule::new(Cooling::Geometric { gamma: 1.0 }, 1.0).is_err());
        assert!(CoolingSchedule::new(Cooling::Geometric { gamma: 0.0 }, 1.0).is_err());
        assert!(CoolingSchedule::new(
            Cooling::Linear {
                step: 0.0,
                floor: 0.0
            },
            1.0
        )
        .is_err());
        assert!(CoolingSchedule::new(
            Cooling::Linear {
                step: 0.1,
                floor: 2.0
            },
            1.0
        )
        .is_err());
        assert!(CoolingSchedule::new(Cooling::Logarithmic { c: -1.0 }, 1.0).is_err());
    }

    #[test]
    fn geometric_closed_form_through_schedule_state() {
        let sched = CoolingSchedule::new(Cooling::Geometric { gamma: 0.9 }, 5.0).unwrap();
        let sa = SimulatedAnnealing::new(
            sphere_box(),
            SaConfig {
                sigma: 0.1,
                elitist: false,
                schedule: sched,
            },
        )
        .unwrap();
        let mut state = sa.schedule();
        for k in 1..=20u64 {
            state.advance();
            assert_eq!(
                state.param(TEMPERATURE).unwrap(),
                5.0 * 0.9f64.powi(k as i32)
            );
            assert_eq!(state.t(), k);
        }
    }

    #[test]
    fn cooling_is_non_increasing_and_within_alpha_bounds() {
        let schedules = [
            CoolingSchedule::new(Cooling::Constant, 3.0).unwrap(),
            CoolingSchedule::new(Cooling::Geometric { gamma: 0.5 }, 3.0).unwrap(),
            CoolingSchedule::new(
                Cooling::Linear {
                    step: 0.7,
                    floor: 0.0,
                },
                3.0,
            )
            .unwrap(),
            CoolingSchedule::new(
                Cooling::Linear {
                    step: 0.7,
                    floor: 1.0,
                },
                3.0,
            )
            .unwrap(),
            CoolingSchedule::new(Cooling::Logarithmic { c: 2.0 }, 3.0).unwrap(),
        ];
        for s in schedules {
            let mut prev = s.temperature_at(0);
            assert_eq!(prev, 3.0);
            for t in 1..200 {
                let cur = s.temperature_at(t);
                assert!(cur >= 0.0 && cur <= prev, "{s:?} at {t}");
                prev = cur;
            }
        }
        let lin = CoolingSchedule::new(
            Cooling::Linear {
                step: 1.0,
                floor: 0.0,
            },
            2.5,
        )
        .unwrap();
        assert_eq!(lin.temperature_at(10), 0.0);
    }

    #[test]
    fn non_positive_sigma_rejected_on_boxes() {
        let mut c = config(Cooling::Constant, 1.0, false);
        c.sigma = 0.0;
        assert!(matches!(
            SimulatedAnnealing::new(sphere_box(), c),
            Err(SgoalError::Config(_))
        ));
        // finite spaces do not use sigma
        assert!(SimulatedAnnealing::new(five_points(Relation::Minimize), c).is_ok());
    }

    #[test]
    fn variation_stays_inside_box() {
        let mut c = config(Cooling::Constant, 1.0, false);
        c.sigma = 25.0;
        let sa = SimulatedAnnealing::new(sphere_box(), c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let y = sa.variate(&[1.0, 1.0], &mut rng);
            assert!(y.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn finite_uniform_variation_matrix() {
        let sa = SimulatedAnnealing::new(
            five_points(Relation::Minimize),
            config(Cooling::Constant, 1.0, false),
        )
        .unwrap();
        let domain: Vec<usize> = (0..5).collect();
        let m = sa
            .variate_kernel()
            .unwrap()
            .matrix(&domain, &sa.schedule())
            .unwrap();
        assert!(m.iter().all(|v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn improving_candidates_always_accepted() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for rel in [Relation::Minimize, Relation::Maximize] {
            let (good, bad) = if rel == Relation::Minimize {
                (0.0, 1.0)
            } else {
                (1.0, 0.0)
            };
            for t in [0.0, 1e-9, 1.0, 1e9] {
                for _ in 0..1000 {
                    let out = replace_sa(
                        Individual::new(vec![], good),
                        Individual::new(vec![], bad),
                        t,
                        rel,
                        &mut rng,
                    );
                    assert_eq!(out.fitness, good);
                }
            }
        }
    }

    #[test]
    fn greedy_mode_never_accepts_worse() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10_000 {
            let out = replace_sa(
                Individual::new(vec![], 1.0),
                Individual::new(vec![], 0.0),
                0.0,
                Relation::Minimize,
                &mut rng,
            );
            assert_eq!(out.fitness, 0.0);
        }
        assert_eq!(
            acceptance_probability(1.0, 1.0, 0.0, Relation::Minimize),
            0.0
        );
        assert_eq!(
            acceptance_probability(1.0, 1.0, 0.5, Relation::Minimize),
            1.0
        );
    }

    #[test]
    fn metropolis_frequency_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let trials = 100_000;
        for rel in [Relation::Minimize, Relation::Maximize] {
            let (inc, cand) = if rel == Relation::Minimize {
                (0.0, 1.0)
            } else {
                (1.0, 0.0)
            };
            let accepted = (0..trials)
                .filter(|_| {
                    replace_sa(
                        Individual::new(vec![], cand),
                        Individual::new(vec![], inc),
                        1.0,
                        rel,
                        &mut rng,
                    )
                    .fitness
                        == cand
                })
                .count();
            let freq = accepted as f64 / trials as f64;
            let p = (-1.0f64).exp();
            assert!((freq - 0.3679).abs() < 0.01);
            assert!((freq - p).abs() < 3.0 * binomial_standard_error(p, trials));
        }
    }

    fn run_closeness(sa: &SimulatedAnnealing, iters: u64, seed: u64) -> Vec<f64> {
        sa.run(&StopCondition::MaxIterations(iters), seed)
            .unwrap()
            .trace
            .closeness()
            .unwrap()
    }

    #[test]
    fn elitist_traces_never_increase() {
        for rel in [Relation::Minimize, Relation::Maximize] {
            let sa =
                SimulatedAnnealing::new(five_points(rel), config(Cooling::Constant, 10.0, true))
                    .unwrap();
            for seed in 0..100 {
                let d = run_closeness(&sa, 100, seed);
                assert_eq!(d.len(), 101);
                assert!(d.windows(2).all(|w| w[1] <= w[0]), "seed {seed}: {d:?}");
            }
        }
        let sa = SimulatedAnnealing::new(
            sphere_box(),
            config(Cooling::Geometric { gamma: 0.99 }, 1.0, true),
        )
        .unwrap();
        for seed in 0..20 {
            let d = run_closeness(&sa, 200, seed);
            assert!(d.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn non_elitist_trace_increases_somewhere() {
        let two = Space::FiniteSet(FiniteSet::from_points(vec![vec![0.0], vec![1.0]]).unwrap());
        let p = Problem::new(two, |x: &[f64]| x[0], Relation::Minimize, Some(0.0)).unwrap();
        let sa = SimulatedAnnealing::new(p, config(Cooling::Constant, 100.0, false)).unwrap();
        let increases: usize = (0..100)
            .map(|seed| {
                run_closeness(&sa, 50, seed)
                    .windows(2)
                    .filter(|w| w[1] > w[0])
                    .count()
            })
            .sum();
        assert!(increases > 0);
    }

    #[test]
    fn next_pop_advances_schedule_and_counts_one_evaluation() {
        let sa = SimulatedAnnealing::new(
            sphere_box(),
            config(Cooling::Geometric { gamma: 0.5 }, 4.0, true),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut state = sa.schedule();
        let pop = {
            let mut ctx = Ctx::new(&state, &mut rng);
            sa.initial_population(&mut ctx).unwrap()
        };
        let (next, evals) = sa.next_pop(&pop, &mut state, &mut rng).unwrap();
        assert_eq!(evals, 1);
        assert_eq!(next.len(), 2);
        assert_eq!(state.t(), 1);
        assert_eq!(state.param(TEMPERATURE), Some(2.0));
        assert!(closeness(&next, sa.problem()).unwrap() <= closeness(&pop, sa.problem()).unwrap());
    }

    #[test]
    fn exact_step_kernels_are_row_stochastic_and_match_sampling() {
        let problem = five_points(Relation::Maximize);
        let domain: Vec<usize> = (0..5).collect();
        for elitist in [true, false] {
            let sa =
                SimulatedAnnealing::new(problem.clone(), config(Cooling::Constant, 1.5, elitist))
                    .unwrap();
            let k = sa.exact_step_kernel().unwrap();
            let schedule = sa.schedule();
            let m = k.matrix(&domain, &schedule).unwrap();
            check_row_stochastic(&m).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            for x in 0..5 {
                let mut counts = vec![0u64; 5];
                let mut ctx = Ctx::new(&schedule, &mut rng);
                for _ in 0..50_000 {
                    counts[k.sample(&[x], &mut ctx).unwrap()[0]] += 1;
                }
                let probs: Vec<f64> = m.row(x).iter().copied().collect();
                assert!(chi_square_gof(&counts, &probs).passes(0.001));
            }
        }
    }

    #[test]
    fn elitist_exact_kernel_is_absorbing_on_optimum() {
        let sa = SimulatedAnnealing::new(
            five_points(Relation::Minimize),
            config(Cooling::Constant, 1.0, true),
        )
        .unwrap();
        let domain: Vec<usize> = (0..5).collect();
        let m = sa
            .exact_step_kernel()
            .unwrap()
            .matrix(&domain, &sa.schedule())
            .unwrap();
        assert_eq!(m[(0, 0)], 1.0);
        for x in 1..5 {
            assert!((m[(x, 0)] - 0.2).abs() < 1e-15);
        }
    }
}
