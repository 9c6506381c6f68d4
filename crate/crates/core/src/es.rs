//! Self-adaptive `(μ/ρ +, λ)` evolution strategies.
//!
//! Each individual carries a point `y`, a per-coordinate step-size vector `s`
//! and its fitness. One generation builds `λ` children by picking `ρ` parents
//! uniformly with replacement, recombining `y` and `s`, updating `s`
//! log-normally and mutating `y` with the new step sizes, then keeps `μ`
//! survivors from `P ∪ Q` (plus) or from `Q` alone (comma).
//!
//! On finite spaces, `y` recombination picks one whole parent and mutation
//! jumps to a uniformly drawn state with probability `1 - exp(-mean(s'))`.

use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Result, SgoalError};
use crate::kernel::{compose, join, stable_order, Ctx, Dist, Kernel, ScheduleState, SortKey};
use crate::problem::{Individual, Population, Problem, Relation, Space};
use crate::run::Algorithm;
use crate::selection::{selection_kernel, SelectionScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsMode {
    Plus,
    Comma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recombination {
    /// Each coordinate copied from a uniformly chosen parent.
    Discrete,
    /// Coordinate-wise mean of the parents.
    Intermediate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsConfig {
    pub mu: usize,
    pub rho: usize,
    pub lambda: usize,
    pub mode: EsMode,
    /// Learning rate; `None` means `1 / sqrt(2 d)`.
    pub tau: Option<f64>,
    pub sigma0: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub recomb_y: Recombination,
    pub recomb_s: Recombination,
}

impl EsConfig {
    pub fn new(mu: usize, rho: usize, lambda: usize, mode: EsMode) -> Self {
        Self {
            mu,
            rho,
            lambda,
            mode,
            tau: None,
            sigma0: 1.0,
            sigma_min: 1e-3,
            sigma_max: 10.0,
            recomb_y: Recombination::Discrete,
            recomb_s: Recombination::Intermediate,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }
}

/// Picks `rho` parents uniformly with replacement.
pub fn pick_parents<R: RngCore + ?Sized>(
    pop: &[Individual],
    rho: usize,
    rng: &mut R,
) -> Result<Vec<Individual>> {
    if pop.is_empty() || rho == 0 || rho > pop.len() {
        return Err(SgoalError::config(format!(
            "cannot pick {rho} parents from a population of {}",
            pop.len()
        )));
    }
    Ok((0..rho)
        .map(|_| pop[rng.random_range(0..pop.len())].clone())
        .collect())
}

fn recombine_vectors<R: RngCore + ?Sized>(
    vectors: &[&[f64]],
    kind: Recombination,
    rng: &mut R,
) -> Vec<f64> {
    let d = vectors[0].len();
    match kind {
        Recombination::Discrete => (0..d)
            .map(|j| vectors[rng.random_range(0..vectors.len())][j])
            .collect(),
        Recombination::Intermediate => (0..d)
            .map(|j| vectors.iter().map(|v| v[j]).sum::<f64>() / vectors.len() as f64)
            .collect(),
    }
}

/// Recombines object variables. On finite spaces only whole-parent choice is allowed.
pub fn recombine_y<R: RngCore + ?Sized>(
    parents: &[Individual],
    kind: Recombination,
    space: &Space,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if parents.is_empty() {
        return Err(SgoalError::usage("recombination needs at least one parent"));
    }
    match space {
        Space::ContinuousBox(_) => {
            let vs: Vec<&[f64]> = parents.iter().map(|p| p.point.as_slice()).collect();
            Ok(recombine_vectors(&vs, kind, rng))
        }
        Space::FiniteSet(_) => match kind {
            Recombination::Discrete => {
                Ok(parents[rng.random_range(0..parents.len())].point.clone())
            }
            Recombination::Intermediate => Err(SgoalError::config(
                "intermediate recombination of points is undefined on a finite space",
            )),
        },
    }
}

/// Recombines strategy vectors.
pub fn recombine_s<R: RngCore + ?Sized>(
    parents: &[Individual],
    kind: Recombination,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if parents.is_empty() {
        return Err(SgoalError::usage("recombination needs at least one parent"));
    }
    let vs: Vec<&[f64]> = parents.iter().map(|p| p.strategy.as_slice()).collect();
    Ok(recombine_vectors(&vs, kind, rng))
}

/// `s'_j = clamp(s_j exp(τ N_g + τ N_j))` with one shared `N_g` per call.
pub fn update_strategies<R: RngCore + ?Sized>(
    s: &[f64],
    tau: f64,
    sigma_min: f64,
    sigma_max: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if let Some(bad) = s.iter().find(|v| !(**v > 0.0)) {
        return Err(SgoalError::usage(format!(
            "step sizes must be positive, got {bad}"
        )));
    }
    let global: f64 = rng.sample(StandardNormal);
    Ok(s.iter()
        .map(|v| {
            let local: f64 = rng.sample(StandardNormal);
            (v * (tau * global + tau * local).exp()).clamp(sigma_min, sigma_max)
        })
        .collect())
}

/// Probability that finite-space mutation jumps, given the updated step sizes.
pub fn finite_jump_probability(s: &[f64]) -> f64 {
    let mean = s.iter().sum::<f64>() / s.len().max(1) as f64;
    1.0 - (-mean).exp()
}

/// Mutates `y` with step sizes `s`: Gaussian plus reflection on boxes,
/// a uniform jump with probability `1 - exp(-mean(s))` on finite spaces.
pub fn mutate_y<R: RngCore + ?Sized>(y: &[f64], s: &[f64], space: &Space, rng: &mut R) -> Vec<f64> {
    match space {
        Space::ContinuousBox(b) => {
            let mut out: Vec<f64> = y
                .iter()
                .zip(s)
                .map(|(v, sj)| v + sj * rng.sample::<f64, _>(StandardNormal))
                .collect();
            b.reflect(&mut out);
            out
        }
        Space::FiniteSet(set) => {
            if rng.random::<f64>() < finite_jump_probability(s) {
                set.point(set.sample_index(rng))
            } else {
                y.to_vec()
            }
        }
    }
}

/// Survivor selection. Plus keeps the best `μ` of `parents ∪ children`
/// (parents first on ties); comma keeps the best `μ` children.
pub fn replace_es(
    parents: &[Individual],
    children: &[Individual],
    mode: EsMode,
    mu: usize,
    relation: Relation,
) -> Result<Vec<Individual>> {
    let pool: Vec<&Individual> = match mode {
        EsMode::Plus => parents.iter().chain(children).collect(),
        EsMode::Comma => children.iter().collect(),
    };
    if mu == 0 || pool.len() < mu {
        return Err(SgoalError::config(format!(
            "cannot keep {mu} survivors from a pool of {}",
            pool.len()
        )));
    }
    let order = stable_order(pool.len(), |i| pool[i].fitness, relation);
    Ok(order[..mu].iter().map(|&i| pool[i].clone()).collect())
}

#[derive(Debug, Clone)]
pub struct EvolutionStrategy {
    problem: Problem,
    config: EsConfig,
    tau: f64,
}

impl EvolutionStrategy {
    pub fn new(problem: Problem, config: EsConfig) -> Result<Self> {
        let c = &config;
        if c.mu == 0 || c.lambda == 0 {
            return Err(SgoalError::config("mu and lambda must be at least 1"));
        }
        if c.rho == 0 || c.rho > c.mu {
            return Err(SgoalError::config(format!(
                "rho must lie in 1..=mu, got {}",
                c.rho
            )));
        }
        if c.mode == EsMode::Comma && c.lambda < c.mu {
            return Err(SgoalError::config(format!(
                "comma selection needs lambda >= mu, got {} < {}",
                c.lambda, c.mu
            )));
        }
        if !(c.sigma_min > 0.0
            && c.sigma_min <= c.sigma0
            && c.sigma0 <= c.sigma_max
            && c.sigma_max.is_finite())
        {
            return Err(SgoalError::config(
                "step sizes need 0 < sigma_min <= sigma0 <= sigma_max < inf",
            ));
        }
        if problem.space().as_finite().is_some() && c.recomb_y == Recombination::Intermediate {
            return Err(SgoalError::config(
                "intermediate recombination of points is undefined on a finite space",
            ));
        }
        let d = problem.space().dim().max(1);
        let tau = c.tau.unwrap_or(1.0 / (2.0 * d as f64).sqrt());
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(SgoalError::config(format!(
                "tau must be non-negative, got {tau}"
            )));
        }
        Ok(Self {
            problem,
            config,
            tau,
        })
    }

    pub fn config(&self) -> &EsConfig {
        &self.config
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn strategy_len(&self) -> usize {
        self.problem.space().dim().max(1)
    }

    /// One child: pick parents, recombine, update strategies, mutate, evaluate.
    pub fn make_child(&self, parents: &[Individual], ctx: &mut Ctx<'_>) -> Result<Individual> {
        let c = &self.config;
        let space = self.problem.space();
        let chosen = pick_parents(parents, c.rho, ctx.rng())?;
        let y = recombine_y(&chosen, c.recomb_y, space, ctx.rng())?;
        let s = recombine_s(&chosen, c.recomb_s, ctx.rng())?;
        let s = update_strategies(&s, self.tau, c.sigma_min, c.sigma_max, ctx.rng())?;
        let y = mutate_y(&y, &s, space, ctx.rng());
        Ok(ctx.evaluate(&self.problem, y).with_strategy(s))
    }

    pub fn step(&self, parents: &[Individual], ctx: &mut Ctx<'_>) -> Result<Vec<Individual>> {
        let children = (0..self.config.lambda)
            .map(|_| self.make_child(parents, ctx))
            .collect::<Result<Vec<_>>>()?;
        replace_es(
            parents,
            &children,
            self.config.mode,
            self.config.mu,
            self.problem.relation(),
        )
    }

    /// The one-generation kernel `Ω^μ → Ω^μ` over state indices of a finite
    /// space. Step sizes must stay fixed (`τ = 0`), so the population of
    /// points alone is a Markov chain.
    pub fn exact_population_kernel(&self) -> Result<Kernel<usize>> {
        let fit = Arc::new(
            self.problem
                .finite_fitness()
                .ok_or_else(|| SgoalError::config("exact kernels need a finite search space"))?,
        );
        if self.tau != 0.0 {
            return Err(SgoalError::config("exact population chains need tau = 0"));
        }
        let c = &self.config;
        let m = fit.len();
        let relation = self.problem.relation();
        let key: SortKey<usize> = {
            let fit = Arc::clone(&fit);
            Arc::new(move |i: &usize| fit[*i])
        };
        let uniform =
            |n: usize| selection_kernel(SelectionScheme::Uniform, n, Arc::clone(&key), relation);

        let pick = compose(
            &Kernel::projection(c.mu, &(0..c.rho).collect::<Vec<_>>())?,
            &join(&vec![uniform(c.mu); c.mu])?,
        )?;
        let xover = uniform(c.rho);
        let s = vec![c.sigma0.clamp(c.sigma_min, c.sigma_max); self.strategy_len()];
        let r = finite_jump_probability(&s);
        let mutation = Kernel::new("mutation_es", 1, 1, move |x: &[usize], ctx| {
            Ok(vec![if ctx.rng().random::<f64>() < r {
                ctx.rng().random_range(0..m)
            } else {
                x[0]
            }])
        })
        .with_exact(move |domain: &[usize], x, _| {
            let n = domain.len();
            Ok(Dist::from_pairs(
                (0..n).map(|j| (j, r / n as f64)).chain([(x[0], 1.0 - r)]),
            ))
        });
        let child = compose(&mutation, &compose(&xover, &pick)?)?;
        let variate = join(&vec![child; c.lambda])?;

        match c.mode {
            EsMode::Plus => {
                let n = c.mu + c.lambda;
                let pool = join(&[Kernel::identity(c.mu), variate])?;
                let keep = compose(
                    &Kernel::projection(n, &(0..c.mu).collect::<Vec<_>>())?,
                    &Kernel::sort(n, key, relation),
                )?;
                compose(&keep, &pool)
            }
            EsMode::Comma => {
                let keep = compose(
                    &Kernel::projection(c.lambda, &(0..c.mu).collect::<Vec<_>>())?,
                    &Kernel::sort(c.lambda, key, relation),
                )?;
                compose(&keep, &variate)
            }
        }
    }
}

impl Algorithm for EvolutionStrategy {
    fn problem(&self) -> &Problem {
        &self.problem
    }

    fn initial_population(&self, ctx: &mut Ctx<'_>) -> Result<Population> {
        let s = vec![self.config.sigma0; self.strategy_len()];
        let members = (0..self.config.mu)
            .map(|_| {
                let point = self.problem.space().sample_uniform(ctx.rng());
                ctx.evaluate(&self.problem, point).with_strategy(s.clone())
            })
            .collect();
        Ok(Population::new(members))
    }

    fn next_pop_kernel(&self) -> Kernel<Individual> {
        let es = self.clone();
        let mu = self.config.mu;
        Kernel::new("next_pop_es", mu, mu, move |x: &[Individual], ctx| {
            es.step(x, ctx)
        })
    }

    fn schedule(&self) -> ScheduleState {
        ScheduleState::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{check_row_stochastic, TupleCodec};
    use crate::problem::{BoxSpace, FiniteSet};
    use crate::run::StopCondition;
    use crate::stats::chi_square_gof;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ind(f: f64) -> Individual {
        Individual::new(vec![f], f)
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn sphere(dim: usize, half: f64) -> Problem {
        let space = Space::ContinuousBox(BoxSpace::cube(dim, -half, half).unwrap());
        Problem::new(
            space,
            |x: &[f64]| x.iter().map(|v| v * v).sum(),
            Relation::Minimize,
            Some(0.0),
        )
        .unwrap()
    }

    fn line(n: usize) -> Problem {
        let pts = (0..n).map(|i| vec![i as f64]).collect();
        let space = Space::FiniteSet(FiniteSet::from_points(pts).unwrap());
        Problem::new(
            space,
            |x: &[f64]| x[0],
            Relation::Maximize,
            Some(n as f64 - 1.0),
        )
        .unwrap()
    }

    #[test]
    fn replace_plus_and_comma_examples() {
        let parents = [ind(5.0), ind(1.0)];
        let children = [ind(3.0), ind(0.0), ind(4.0)];
        let f = |v: Vec<Individual>| v.iter().map(|i| i.fitness).collect::<Vec<_>>();
        let plus = replace_es(&parents, &children, EsMode::Plus, 2, Relation::Minimize).unwrap();
        assert_eq!(f(plus), vec![0.0, 1.0]);
        let comma = replace_es(&parents, &children, EsMode::Comma, 2, Relation::Minimize).unwrap();
        assert_eq!(f(comma), vec![0.0, 3.0]);
        assert!(replace_es(
            &parents,
            &children[..1],
            EsMode::Comma,
            2,
            Relation::Minimize
        )
        .is_err());
    }

    #[test]
    fn plus_prefers_parents_on_ties() {
        let parent = Individual::new(vec![0.0], 1.0);
        let child = Individual::new(vec![9.0], 1.0);
        let out = replace_es(
            std::slice::from_ref(&parent),
            &[child],
            EsMode::Plus,
            1,
            Relation::Minimize,
        )
        .unwrap();
        assert_eq!(out[0], parent);
    }

    #[test]
    fn config_validation() {
        let p = sphere(2, 1.0);
        let bad = [
            EsConfig::new(2, 3, 4, EsMode::Plus),
            EsConfig::new(3, 1, 2, EsMode::Comma),
            EsConfig::new(0, 1, 2, EsMode::Plus),
            EsConfig::new(1, 1, 1, EsMode::Plus).with_tau(-1.0),
            EsConfig {
                sigma_min: 2.0,
                ..EsConfig::new(1, 1, 1, EsMode::Plus)
            },
        ];
        for c in bad {
            assert!(matches!(
                EvolutionStrategy::new(p.clone(), c),
                Err(SgoalError::Config(_))
            ));
        }
        let c = EsConfig {
            recomb_y: Recombination::Intermediate,
            ..EsConfig::new(1, 1, 1, EsMode::Plus)
        };
        assert!(EvolutionStrategy::new(line(3), c.clone()).is_err());
        assert!(EvolutionStrategy::new(p, c).is_ok());
    }

    #[test]
    fn default_tau() {
        let es =
            EvolutionStrategy::new(sphere(8, 1.0), EsConfig::new(1, 1, 1, EsMode::Plus)).unwrap();
        assert!((es.tau() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn pick_parents_uniform_with_replacement() {
        let pop: Vec<Individual> = (0..4).map(|i| ind(i as f64)).collect();
        assert!(pick_parents(&pop, 5, &mut rng(0)).is_err());
        let mut counts = vec![0u64; 4];
        let mut r = rng(1);
        for _ in 0..20_000 {
            for p in pick_parents(&pop, 3, &mut r).unwrap() {
                counts[p.fitness as usize] += 1;
            }
        }
        assert!(chi_square_gof(&counts, &[0.25; 4]).passes(0.001));
    }

    #[test]
    fn recombination_rules() {
        let a = Individual::new(vec![0.0, 0.0, 0.0], 0.0).with_strategy(vec![1.0, 2.0, 3.0]);
        let b = Individual::new(vec![1.0, 1.0, 1.0], 0.0).with_strategy(vec![3.0, 4.0, 5.0]);
        let space = sphere(3, 2.0).space().clone();
        let mut r = rng(2);
        let mid = recombine_y(
            &[a.clone(), b.clone()],
            Recombination::Intermediate,
            &space,
            &mut r,
        )
        .unwrap();
        assert_eq!(mid, vec![0.5, 0.5, 0.5]);
        assert_eq!(
            recombine_s(&[a.clone(), b.clone()], Recombination::Intermediate, &mut r).unwrap(),
            vec![2.0, 3.0, 4.0]
        );
        let mut mixed = false;
        for _ in 0..200 {
            let y = recombine_y(
                &[a.clone(), b.clone()],
                Recombination::Discrete,
                &space,
                &mut r,
            )
            .unwrap();
            assert!(y.iter().all(|v| *v == 0.0 || *v == 1.0));
            mixed |= y.contains(&0.0) && y.contains(&1.0);
        }
        assert!(mixed);
        assert!(recombine_y(&[], Recombination::Discrete, &space, &mut r).is_err());
    }

    #[test]
    fn strategy_update_is_log_normal_around_parent() {
        let mut r = rng(3);
        assert_eq!(
            update_strategies(&[0.7, 0.2], 0.0, 1e-3, 10.0, &mut r).unwrap(),
            vec![0.7, 0.2]
        );
        assert!(matches!(
            update_strategies(&[1.0, 0.0], 0.1, 1e-3, 10.0, &mut r),
            Err(SgoalError::Usage(_))
        ));
        let mut v: Vec<f64> = (0..20_001)
            .map(|_| update_strategies(&[1.0], 0.5, 1e-9, 1e9, &mut r).unwrap()[0])
            .collect();
        v.sort_by(f64::total_cmp);
        assert!((v[10_000] - 1.0).abs() < 0.03);
        for _ in 0..1000 {
            let s = update_strategies(&[1.0, 1.0], 5.0, 0.5, 2.0, &mut r).unwrap();
            assert!(s.iter().all(|v| (0.5..=2.0).contains(v)));
        }
    }

    #[test]
    fn gaussian_mutation_moments() {
        let space = sphere(1, 1e6).space().clone();
        let mut r = rng(4);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| mutate_y(&[3.0], &[2.0], &space, &mut r)[0])
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 3.0).abs() < 0.03);
        assert!((var.sqrt() - 2.0).abs() < 0.03);
    }

    #[test]
    fn finite_mutation_jump_rate() {
        let space = line(4).space().clone();
        let mut r = rng(5);
        let n = 100_000;
        let stay = (0..n)
            .filter(|_| mutate_y(&[2.0], &[1.0], &space, &mut r)[0] == 2.0)
            .count();
        let jump = 1.0 - (-1.0f64).exp();
        let expected = 1.0 - jump + jump / 4.0;
        assert!((stay as f64 / n as f64 - expected).abs() < 0.01);
    }

    #[test]
    fn plus_traces_never_increase() {
        let es =
            EvolutionStrategy::new(sphere(2, 5.0), EsConfig::new(3, 2, 6, EsMode::Plus)).unwrap();
        for seed in 0..20 {
            let d = es
                .run(&StopCondition::MaxIterations(60), seed)
                .unwrap()
                .trace
                .closeness()
                .unwrap();
            assert!(d.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn trace_parameter_is_mean_step_size() {
        let es =
            EvolutionStrategy::new(sphere(2, 5.0), EsConfig::new(2, 1, 4, EsMode::Comma)).unwrap();
        let out = es.run(&StopCondition::MaxIterations(3), 1).unwrap();
        assert_eq!(out.trace.rows[0].parameter, 1.0);
        assert_eq!(
            out.trace.rows[3].parameter,
            out.final_population.mean_strategy().unwrap()
        );
    }

    #[test]
    fn exact_kernel_requires_fixed_steps_and_finite_space() {
        let c = EsConfig::new(1, 1, 1, EsMode::Plus);
        assert!(EvolutionStrategy::new(line(3), c.clone())
            .unwrap()
            .exact_population_kernel()
            .is_err());
        let c = c.with_tau(0.0);
        assert!(EvolutionStrategy::new(sphere(1, 1.0), c.clone())
            .unwrap()
            .exact_population_kernel()
            .is_err());
        assert!(EvolutionStrategy::new(line(3), c)
            .unwrap()
            .exact_population_kernel()
            .is_ok());
    }

    /// Samples the real algorithm step from every population state and
    /// compares it with the exact kernel row.
    fn conformance(config: EsConfig) {
        let problem = line(3);
        let set = problem.space().as_finite().unwrap().clone();
        let es = EvolutionStrategy::new(problem.clone(), config.clone()).unwrap();
        let kernel = es.exact_population_kernel().unwrap();
        let domain: Vec<usize> = (0..set.len()).collect();
        let schedule = es.schedule();
        let m = kernel.matrix(&domain, &schedule).unwrap();
        check_row_stochastic(&m).unwrap();
        let codec = TupleCodec::new(set.len());
        let mut r = rng(6);
        let s = vec![config.sigma0; 1];
        for state in 0..m.nrows() {
            let tuple = codec.decode(state, config.mu);
            let parents: Vec<Individual> = tuple
                .iter()
                .map(|&i| {
                    Individual::new(set.point(i), problem.objective(&set.point(i)))
                        .with_strategy(s.clone())
                })
                .collect();
            let mut counts = vec![0u64; m.ncols()];
            let mut ctx = Ctx::new(&schedule, &mut r);
            for _ in 0..20_000 {
                let next = es.step(&parents, &mut ctx).unwrap();
                let idx: Vec<usize> = next
                    .iter()
                    .map(|i| set.index_of(&i.point).unwrap())
                    .collect();
                counts[codec.encode(&idx)] += 1;
            }
            let probs: Vec<f64> = m.row(state).iter().copied().collect();
            let chi = chi_square_gof(&counts, &probs);
            assert!(chi.passes(0.001), "state {tuple:?}: {chi:?}");
        }
    }

    #[test]
    fn exact_kernel_matches_algorithm_plus() {
        conformance(EsConfig {
            sigma0: 0.5,
            ..EsConfig::new(2, 2, 2, EsMode::Plus).with_tau(0.0)
        });
    }

    #[test]
    fn exact_kernel_matches_algorithm_comma() {
        conformance(EsConfig::new(2, 1, 3, EsMode::Comma).with_tau(0.0));
    }
}
