//! Problems, populations and the quantities the convergence theory is phrased in:
//! the `best` operator, the closeness `d(x)` and the eps-state classification.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgoalError};

/// Largest bit-string length a hypercube space may enumerate.
pub const MAX_HYPERCUBE_BITS: usize = 32;

/// The optimization relation: `<` when minimizing, `>` when maximizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Minimize,
    Maximize,
}

impl Relation {
    /// Strict relation: `a` is better than `b`.
    #[inline]
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Relation::Minimize => a < b,
            Relation::Maximize => a > b,
        }
    }

    /// Non-strict relation: `a` is at least as good as `b`.
    #[inline]
    pub fn better_or_equal(self, a: f64, b: f64) -> bool {
        a == b || self.better(a, b)
    }

    /// Amount by which `value` falls short of `reference`, oriented so that
    /// it is non-negative whenever `reference` is at least as good.
    #[inline]
    pub fn gap(self, value: f64, reference: f64) -> f64 {
        match self {
            Relation::Minimize => value - reference,
            Relation::Maximize => reference - value,
        }
    }
}

/// An axis-aligned box `[lower, upper]` in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(SgoalError::config("box dimension must be positive"));
        }
        if lower.len() != upper.len() {
            return Err(SgoalError::config(format!(
                "box bounds have different lengths ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l < u) || !l.is_finite() || !u.is_finite() {
                return Err(SgoalError::config(format!(
                    "box bound {i}: lower {l} must be finite and strictly below upper {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn cube(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// Folds every coordinate back into the box by mirror reflection at the bounds.
    pub fn reflect(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = reflect_into(*v, *l, *u);
        }
    }

    pub fn sample_uniform<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| l + (u - l) * rng.random::<f64>())
            .collect()
    }
}

/// Mirror-reflects `x` into `[lower, upper]`.
///
/// The real line is folded with period `2 (upper - lower)`, so any finite
/// perturbation lands inside the interval.
pub fn reflect_into(x: f64, lower: f64, upper: f64) -> f64 {
    if (lower..=upper).contains(&x) {
        return x;
    }
    let width = upper - lower;
    let period = 2.0 * width;
    let mut y = (x - lower).rem_euclid(period);
    if y > width {
        y = period - y;
    }
    (lower + y).clamp(lower, upper)
}

#[derive(Clone)]
enum FiniteRepr {
    Points {
        points: Vec<Vec<f64>>,
        index: HashMap<Vec<u64>, usize>,
    },
    /// `{0,1}^len`, state `i` is the big-endian bit pattern of `i`.
    Hypercube { len: usize },
}

/// An enumerated finite search space.
#[derive(Clone)]
pub struct FiniteSet {
    repr: FiniteRepr,
}

fn point_key(x: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 are the same state
    x.iter()
        .map(|v| if *v == 0.0 { 0 } else { v.to_bits() })
        .collect()
}

impl FiniteSet {
    /// Explicit list of distinct points, all of the same dimension.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(SgoalError::config("finite set needs at least one point"));
        }
        let dim = points[0].len();
        let mut index = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(SgoalError::config(format!(
                    "finite point {i} has dimension {} (expected {dim})",
                    p.len()
                )));
            }
            if index.insert(point_key(p), i).is_some() {
                return Err(SgoalError::config(format!(
                    "finite point {i} is a duplicate"
                )));
            }
        }
        Ok(Self {
            repr: FiniteRepr::Points { points, index },
        })
    }

    /// All bit strings of length `len`.
    pub fn hypercube(len: usize) -> Result<Self> {
        if len == 0 || len > MAX_HYPERCUBE_BITS {
            return Err(SgoalError::config(format!(
                "bit-string length must be in 1..={MAX_HYPERCUBE_BITS}, got {len}"
            )));
        }
        Ok(Self {
            repr: FiniteRepr::Hypercube { len },
        })
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            FiniteRepr::Points { points, .. } => points.len(),
            FiniteRepr::Hypercube { len } => 1usize << len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            FiniteRepr::Points { points, .. } => points[0].len(),
            FiniteRepr::Hypercube { len } => *len,
        }
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        match &self.repr {
            FiniteRepr::Points { points, .. } => points[i].clone(),
            FiniteRepr::Hypercube { len } => (0..*len)
                .map(|b| ((i >> (len - 1 - b)) & 1) as f64)
                .collect(),
        }
    }

    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        match &self.repr {
            FiniteRepr::Points { index, .. } => index.get(&point_key(x)).copied(),
            FiniteRepr::Hypercube { len } => {
                if x.len() != *len {
                    return None;
                }
                let mut i = 0usize;
                for v in x {
                    i <<= 1;
                    if *v == 1.0 {
                        i |= 1;
                    } else if *v != 0.0 {
                        return None;
                    }
                }
                Some(i)
            }
        }
    }

    pub fn sample_index<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.len())
    }
}

impl fmt::Debug for FiniteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            FiniteRepr::Points { points, .. } => f
                .debug_struct("FiniteSet")
                .field("points", &points.len())
                .finish(),
            FiniteRepr::Hypercube { len } => f
                .debug_struct("FiniteSet")
                .field("hypercube_bits", len)
                .finish(),
        }
    }
}

/// The feasible region.
#[derive(Debug, Clone)]
pub enum Space {
    ContinuousBox(BoxSpace),
    FiniteSet(FiniteSet),
}

impl Space {
    pub fn dim(&self) -> usize {
        match self {
            Space::ContinuousBox(b) => b.dim(),
            Space::FiniteSet(s) => s.dim(),
        }
    }

    pub fn as_finite(&self) -> Option<&FiniteSet> {
        match self {
            Space::FiniteSet(s) => Some(s),
            Space::ContinuousBox(_) => None,
        }
    }

    pub fn as_box(&self) -> Option<&BoxSpace> {
        match self {
            Space::ContinuousBox(b) => Some(b),
            Space::FiniteSet(_) => None,
        }
    }

    pub fn sample_uniform<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Space::ContinuousBox(b) => b.sample_uniform(rng),
            Space::FiniteSet(s) => s.point(s.sample_index(rng)),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Space::ContinuousBox(b) => b.contains(x),
            Space::FiniteSet(s) => s.index_of(x).is_some(),
        }
    }
}

pub type Objective = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `optimize f` over a space under a relation, with an optional known optimum value.
#[derive(Clone)]
pub struct Problem {
    space: Arc<Space>,
    objective: Objective,
    relation: Relation,
    f_star: Option<f64>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("space", &self.space)
            .field("relation", &self.relation)
            .field("f_star", &self.f_star)
            .finish()
    }
}

impl Problem {
    pub fn new<F>(
        space: Space,
        objective: F,
        relation: Relation,
        f_star: Option<f64>,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if let Some(v) = f_star {
            if !v.is_finite() {
                return Err(SgoalError::config("known optimum must be finite"));
            }
        }
        Ok(Self {
            space: Arc::new(space),
            objective: Arc::new(objective),
            relation,
            f_star,
        })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn relation(&self) -> Relation {
        self.relation
    }

    pub fn f_star(&self) -> Option<f64> {
        self.f_star
    }

    /// Raw objective call. Prefer [`crate::kernel::Ctx::evaluate`], which counts evaluations.
    pub fn objective(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }

    /// Objective values of every state of a finite space, in enumeration order.
    pub fn finite_fitness(&self) -> Option<Vec<f64>> {
        let set = self.space.as_finite()?;
        Some(
            (0..set.len())
                .map(|i| self.objective(&set.point(i)))
                .collect(),
        )
    }

    /// Closeness of a single fitness value to the known optimum.
    pub fn gap_to_optimum(&self, fitness: f64) -> Result<f64> {
        let f_star = self
            .f_star
            .ok_or_else(|| SgoalError::usage("closeness needs a known optimum (f_star)"))?;
        let d = self.relation.gap(fitness, f_star);
        if d < 0.0 {
            return Err(SgoalError::config(format!(
                "fitness {fitness} is better than the declared optimum {f_star}"
            )));
        }
        Ok(d)
    }
}

/// A candidate solution with its cached objective value.
///
/// `strategy` holds endogenous step sizes for evolution strategies and is
/// empty for algorithms without self-adaptation.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub point: Vec<f64>,
    pub fitness: f64,
    pub strategy: Vec<f64>,
}

impl Individual {
    pub fn new(point: Vec<f64>, fitness: f64) -> Self {
        Self {
            point,
            fitness,
            strategy: Vec::new(),
        }
    }

    pub fn with_strategy(mut self, strategy: Vec<f64>) -> Self {
        self.strategy = strategy;
        self
    }
}

/// An ordered tuple of individuals; its size is fixed for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    members: Vec<Individual>,
}

impl Population {
    pub fn new(members: Vec<Individual>) -> Self {
        Self { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn into_members(self) -> Vec<Individual> {
        self.members
    }

    pub fn fitness(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.fitness).collect()
    }

    pub fn best(&self, relation: Relation) -> Result<&Individual> {
        let i = best(self, relation)?;
        Ok(&self.members[i])
    }

    /// Mean step size over every strategy coordinate, if any member carries one.
    pub fn mean_strategy(&self) -> Option<f64> {
        let (sum, n) = self
            .members
            .iter()
            .flat_map(|m| m.strategy.iter())
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

/// Index of the fittest value; ties go to the first occurrence.
pub fn best_index(fitness: &[f64], relation: Relation) -> Result<usize> {
    if fitness.is_empty() {
        return Err(SgoalError::usage("best of an empty population"));
    }
    let mut idx = 0;
    for (i, f) in fitness.iter().enumerate().skip(1) {
        if relation.better(*f, fitness[idx]) {
            idx = i;
        }
    }
    Ok(idx)
}

/// Smallest index `i` with `f(x_i)` at least as good as every member and
/// strictly better than every earlier one.
pub fn best(pop: &Population, relation: Relation) -> Result<usize> {
    if pop.is_empty() {
        return Err(SgoalError::usage("best of an empty population"));
    }
    let mut idx = 0;
    for (i, m) in pop.members.iter().enumerate().skip(1) {
        if relation.better(m.fitness, pop.members[idx].fitness) {
            idx = i;
        }
    }
    Ok(idx)
}

/// `d(x)`: gap between the best member and the known optimum, oriented by the relation.
pub fn closeness(pop: &Population, problem: &Problem) -> Result<f64> {
    if problem.f_star().is_none() {
        return Err(SgoalError::usage(
            "closeness needs a known optimum (f_star)",
        ));
    }
    let b = pop.best(problem.relation())?;
    problem.gap_to_optimum(b.fitness)
}

/// Where a population sits relative to the eps-level set of closeness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EpsClass {
    /// `d(x) < eps`: an eps-state.
    Inside,
    /// `d(x) == eps` exactly (the adherent set). Floating-point runs will
    /// essentially never land here.
    Boundary,
    Outside,
}

impl EpsClass {
    pub fn of(d: f64, eps: f64) -> Self {
        if d < eps {
            EpsClass::Inside
        } else if d == eps {
            EpsClass::Boundary
        } else {
            EpsClass::Outside
        }
    }

    /// Member of the closed set `d(x) <= eps`.
    pub fn is_closed(self) -> bool {
        matches!(self, EpsClass::Inside | EpsClass::Boundary)
    }
}

pub fn classify_eps(pop: &Population, problem: &Problem, eps: f64) -> Result<EpsClass> {
    if !(eps > 0.0) {
        return Err(SgoalError::usage(format!(
            "eps must be positive, got {eps}"
        )));
    }
    Ok(EpsClass::of(closeness(pop, problem)?, eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pop(f: &[f64]) -> Population {
        Population::new(f.iter().map(|v| Individual::new(vec![*v], *v)).collect())
    }

    fn identity_problem(relation: Relation, f_star: Option<f64>) -> Problem {
        let space = Space::ContinuousBox(BoxSpace::cube(1, -100.0, 100.0).unwrap());
        Problem::new(space, |x: &[f64]| x[0], relation, f_star).unwrap()
    }

    #[test]
    fn best_examples() {
        assert_eq!(best(&pop(&[3.0, 1.0, 2.0]), Relation::Minimize).unwrap(), 1);
        assert_eq!(best(&pop(&[2.0, 1.0, 1.0]), Relation::Minimize).unwrap(), 1);
        assert_eq!(best(&pop(&[5.0]), Relation::Maximize).unwrap(), 0);
        assert_eq!(best(&pop(&[1.0, 4.0, 4.0]), Relation::Maximize).unwrap(), 1);
    }

    #[test]
    fn best_of_empty_is_usage_error() {
        let err = best(&Population::new(vec![]), Relation::Minimize).unwrap_err();
        assert!(matches!(err, SgoalError::Usage(_)));
    }

    #[test]
    fn closeness_examples() {
        let p = identity_problem(Relation::Minimize, Some(0.0));
        assert_eq!(closeness(&pop(&[0.5, 0.7]), &p).unwrap(), 0.5);
        assert_eq!(closeness(&pop(&[0.0]), &p).unwrap(), 0.0);
        let q = identity_problem(Relation::Maximize, Some(10.0));
        assert_eq!(closeness(&pop(&[7.0, 2.0]), &q).unwrap(), 3.0);
    }

    #[test]
    fn closeness_without_optimum_fails() {
        let p = identity_problem(Relation::Minimize, None);
        assert!(matches!(
            closeness(&pop(&[1.0]), &p),
            Err(SgoalError::Usage(_))
        ));
    }

    #[test]
    fn closeness_rejects_points_beyond_declared_optimum() {
        let p = identity_problem(Relation::Minimize, Some(0.0));
        assert!(closeness(&pop(&[-1.0]), &p).is_err());
    }

    #[test]
    fn classify_examples() {
        let p = identity_problem(Relation::Minimize, Some(0.0));
        assert_eq!(
            classify_eps(&pop(&[0.1]), &p, 0.5).unwrap(),
            EpsClass::Inside
        );
        assert_eq!(
            classify_eps(&pop(&[0.5]), &p, 0.5).unwrap(),
            EpsClass::Boundary
        );
        assert_eq!(
            classify_eps(&pop(&[0.9]), &p, 0.5).unwrap(),
            EpsClass::Outside
        );
        assert!(matches!(
            classify_eps(&pop(&[0.9]), &p, 0.0),
            Err(SgoalError::Usage(_))
        ));
        assert!(matches!(
            classify_eps(&pop(&[0.9]), &p, -1.0),
            Err(SgoalError::Usage(_))
        ));
    }

    #[test]
    fn box_validation() {
        assert!(BoxSpace::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoxSpace::new(vec![1.0], vec![0.0]).is_err());
        assert!(BoxSpace::new(vec![], vec![]).is_err());
        assert!(BoxSpace::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn finite_set_validation_and_lookup() {
        assert!(FiniteSet::from_points(vec![]).is_err());
        assert!(FiniteSet::from_points(vec![vec![1.0], vec![1.0]]).is_err());
        let s = FiniteSet::from_points(vec![vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!(s.index_of(&[2.0, 3.0]), Some(1));
        assert_eq!(s.index_of(&[2.0, 4.0]), None);
        let h = FiniteSet::hypercube(4).unwrap();
        assert_eq!(h.len(), 16);
        assert_eq!(h.point(5), vec![0.0, 1.0, 0.0, 1.0]);
        for i in 0..16 {
            assert_eq!(h.index_of(&h.point(i)), Some(i));
        }
        assert_eq!(h.index_of(&[0.0, 0.5, 0.0, 0.0]), None);
    }

    /// Oracle: reflect one bound at a time until the value lands inside.
    fn reflect_by_iteration(mut x: f64, l: f64, u: f64) -> f64 {
        while x < l || x > u {
            if x > u {
                x = 2.0 * u - x;
            } else {
                x = 2.0 * l - x;
            }
        }
        x
    }

    #[test]
    fn reflection_at_upper_bound_with_large_step() {
        let y = reflect_into(1.0 + 7.3, -1.0, 1.0);
        assert!((-1.0..=1.0).contains(&y));
        assert!((y - reflect_by_iteration(8.3, -1.0, 1.0)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn reflection_matches_folding_oracle(x in -50.0f64..50.0, l in -5.0f64..0.0, w in 0.1f64..5.0) {
            let u = l + w;
            let got = reflect_into(x, l, u);
            prop_assert!(got >= l && got <= u);
            prop_assert!((got - reflect_by_iteration(x, l, u)).abs() < 1e-9);
        }

        #[test]
        fn best_invariant_under_increasing_transform(f in prop::collection::vec(-10.0f64..10.0, 1..12)) {
            let g: Vec<f64> = f.iter().map(|v| v.exp() * 3.0 + 1.0).collect();
            prop_assert_eq!(best(&pop(&f), Relation::Minimize).unwrap(), best(&pop(&g), Relation::Minimize).unwrap());
            prop_assert_eq!(best_index(&f, Relation::Maximize).unwrap(), best(&pop(&f), Relation::Maximize).unwrap());
        }

        #[test]
        fn classification_partitions(d in 0.0f64..2.0, eps in 0.01f64..2.0) {
            let c = EpsClass::of(d, eps);
            let count = [d < eps, d == eps, d > eps].iter().filter(|b| **b).count();
            prop_assert_eq!(count, 1);
            prop_assert_eq!(c == EpsClass::Inside, d < eps);
            prop_assert_eq!(c == EpsClass::Boundary, d == eps);
        }

        #[test]
        fn closeness_nonnegative_for_true_optimum(f in prop::collection::vec(0.0f64..10.0, 1..8)) {
            let p = identity_problem(Relation::Minimize, Some(0.0));
            prop_assert!(closeness(&pop(&f), &p).unwrap() >= 0.0);
        }
    }
}
