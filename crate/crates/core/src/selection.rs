//! Selection schemes as single-individual kernels `Ω^λ → Ω`, plus μ-fold
//! group selection as the join of μ independent copies.
//!
//! Each scheme has two routes: [`exact_probs`] computes the selection
//! distribution in closed form (tournaments by enumerating multisets of
//! contestants), and [`select_one`] runs the randomized procedure itself.

use std::fmt;
use std::sync::Arc;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, RngCore};

use crate::error::{Result, SgoalError};
use crate::kernel::{join, Dist, Kernel, SortKey};
use crate::problem::Relation;

/// Upper bound on the number of contestant multisets an exact tournament
/// computation will enumerate.
pub const MAX_TOURNAMENT_MULTISETS: usize = 1_000_000;

pub type RateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// How a proportional scheme turns fitness into non-negative rates.
#[derive(Clone)]
pub enum Rate {
    /// `1 + #{strictly worse individuals}`.
    Ranking,
    /// The fitness itself. Requires maximization and non-negative fitness.
    Fitness,
    /// Any map that is strictly increasing in quality and non-negative.
    Custom(RateFn),
}

impl fmt::Debug for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Ranking => write!(f, "Ranking"),
            Rate::Fitness => write!(f, "Fitness"),
            Rate::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum SelectionScheme {
    Uniform,
    /// Generic fitness-proportional selection; ranking rates by default.
    Proportional(Rate),
    /// `size` contestants drawn uniformly with replacement, then one of them
    /// chosen proportionally to `inner` rates computed among the contestants.
    Tournament {
        size: usize,
        inner: Rate,
    },
    Roulette(Rate),
    Ranking,
}

impl SelectionScheme {
    pub fn proportional() -> Self {
        SelectionScheme::Proportional(Rate::Ranking)
    }

    pub fn tournament(size: usize) -> Self {
        SelectionScheme::Tournament {
            size,
            inner: Rate::Ranking,
        }
    }

    fn validate(&self) -> Result<()> {
        if let SelectionScheme::Tournament { size, .. } = self {
            if *size < 1 {
                return Err(SgoalError::usage("tournament size must be at least 1"));
            }
        }
        Ok(())
    }
}

/// Ranking rates: `1 + |{k : f_i ◁ f_k}|`.
pub fn ranking_rates(fitness: &[f64], relation: Relation) -> Vec<f64> {
    fitness
        .iter()
        .map(|fi| {
            1.0 + fitness
                .iter()
                .filter(|fk| relation.better(*fi, **fk))
                .count() as f64
        })
        .collect()
}

/// Rates for every individual, validated against the ordering constraints.
pub fn rates(rate: &Rate, fitness: &[f64], relation: Relation) -> Result<Vec<f64>> {
    let r = match rate {
        Rate::Ranking => return Ok(ranking_rates(fitness, relation)),
        Rate::Fitness => {
            if relation != Relation::Maximize {
                return Err(SgoalError::usage(
                    "fitness-valued rates require maximization",
                ));
            }
            fitness.to_vec()
        }
        Rate::Custom(f) => fitness.iter().map(|v| f(*v)).collect(),
    };
    if let Some(v) = r.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(SgoalError::usage(format!(
            "selection rate {v} is negative or not finite"
        )));
    }
    for i in 0..fitness.len() {
        for j in 0..fitness.len() {
            let ordered = !relation.better(fitness[j], fitness[i]) || r[i] < r[j];
            let tied = fitness[i] != fitness[j] || r[i] == r[j];
            if !(ordered && tied) {
                return Err(SgoalError::usage(format!(
                    "rate function violates the fitness ordering at fitness {} vs {}",
                    fitness[i], fitness[j]
                )));
            }
        }
    }
    Ok(r)
}

fn normalize(r: Vec<f64>) -> Result<Vec<f64>> {
    let total: f64 = r.iter().sum();
    if !(total > 0.0) {
        return Err(SgoalError::usage("selection rates sum to zero"));
    }
    Ok(r.into_iter().map(|v| v / total).collect())
}

/// Exact selection probability of every individual.
pub fn exact_probs(
    scheme: &SelectionScheme,
    fitness: &[f64],
    relation: Relation,
) -> Result<Vec<f64>> {
    scheme.validate()?;
    let lambda = fitness.len();
    if lambda == 0 {
        return Err(SgoalError::usage("selection from an empty population"));
    }
    match scheme {
        SelectionScheme::Uniform => Ok(vec![1.0 / lambda as f64; lambda]),
        SelectionScheme::Proportional(rate) | SelectionScheme::Roulette(rate) => {
            normalize(rates(rate, fitness, relation)?)
        }
        SelectionScheme::Ranking => normalize(ranking_rates(fitness, relation)),
        SelectionScheme::Tournament { size, inner } => {
            tournament_probs(*size, inner, fitness, relation)
        }
    }
}

/// Enumerates contestant multisets `c` (counts per individual summing to
/// `size`), each with multinomial probability `size! / Π c_i! / λ^size`.
fn tournament_probs(
    size: usize,
    inner: &Rate,
    fitness: &[f64],
    relation: Relation,
) -> Result<Vec<f64>> {
    let lambda = fitness.len();
    // validates the custom rate function once over the whole population
    let base_rates = match inner {
        Rate::Ranking => None,
        other => Some(rates(other, fitness, relation)?),
    };
    let multisets = binomial(lambda + size - 1, size);
    if multisets.is_none_or(|c| c > MAX_TOURNAMENT_MULTISETS) {
        return Err(SgoalError::usage(format!(
            "tournament of size {size} over {lambda} individuals is too large to enumerate"
        )));
    }
    let log_fact: Vec<f64> = (0..=size)
        .scan(0.0, |acc, k| {
            if k > 0 {
                *acc += (k as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    let log_norm = log_fact[size] - size as f64 * (lambda as f64).ln();

    let mut probs = vec![0.0; lambda];
    let mut counts = vec![0usize; lambda];
    let mut error = None;
    enumerate_counts(&mut counts, 0, size, &mut |c: &[usize]| {
        if error.is_some() {
            return;
        }
        let log_w = log_norm - c.iter().map(|k| log_fact[*k]).sum::<f64>();
        let weight = log_w.exp();
        let r: Vec<f64> = (0..lambda)
            .map(|i| {
                if c[i] == 0 {
                    return 0.0;
                }
                match &base_rates {
                    None => {
                        1.0 + (0..lambda)
                            .filter(|k| relation.better(fitness[i], fitness[*k]))
                            .map(|k| c[k] as f64)
                            .sum::<f64>()
                    }
                    Some(base) => base[i],
                }
            })
            .collect();
        let total: f64 = (0..lambda).map(|i| c[i] as f64 * r[i]).sum();
        if !(total > 0.0) {
            error = Some(SgoalError::usage(
                "tournament contestants have zero total rate",
            ));
            return;
        }
        for i in 0..lambda {
            probs[i] += weight * c[i] as f64 * r[i] / total;
        }
    });
    match error {
        Some(e) => Err(e),
        None => Ok(probs),
    }
}

fn enumerate_counts(
    counts: &mut [usize],
    pos: usize,
    remaining: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if pos + 1 == counts.len() {
        counts[pos] = remaining;
        visit(counts);
        counts[pos] = 0;
        return;
    }
    for k in 0..=remaining {
        counts[pos] = k;
        enumerate_counts(counts, pos + 1, remaining - k, visit);
    }
    counts[pos] = 0;
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Draws one index by running the scheme's randomized procedure.
pub fn select_one<R: RngCore + ?Sized>(
    scheme: &SelectionScheme,
    fitness: &[f64],
    relation: Relation,
    rng: &mut R,
) -> Result<usize> {
    scheme.validate()?;
    let lambda = fitness.len();
    if lambda == 0 {
        return Err(SgoalError::usage("selection from an empty population"));
    }
    match scheme {
        SelectionScheme::Uniform => Ok(rng.random_range(0..lambda)),
        SelectionScheme::Proportional(rate) | SelectionScheme::Roulette(rate) => {
            weighted_pick(&rates(rate, fitness, relation)?, rng)
        }
        SelectionScheme::Ranking => weighted_pick(&ranking_rates(fitness, relation), rng),
        SelectionScheme::Tournament { size, inner } => {
            let contestants: Vec<usize> = (0..*size).map(|_| rng.random_range(0..lambda)).collect();
            let f: Vec<f64> = contestants.iter().map(|i| fitness[*i]).collect();
            let r = match inner {
                Rate::Ranking => ranking_rates(&f, relation),
                other => rates(other, &f, relation)?,
            };
            Ok(contestants[weighted_pick(&r, rng)?])
        }
    }
}

fn weighted_pick<R: RngCore + ?Sized>(rates: &[f64], rng: &mut R) -> Result<usize> {
    let dist = WeightedIndex::new(rates.iter().copied())
        .map_err(|e| SgoalError::usage(format!("invalid selection rates: {e}")))?;
    Ok(dist.sample(rng))
}

/// `mu` independent draws with replacement.
pub fn select_group<R: RngCore + ?Sized>(
    scheme: &SelectionScheme,
    fitness: &[f64],
    relation: Relation,
    mu: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if mu < 1 {
        return Err(SgoalError::usage("group selection needs mu >= 1"));
    }
    (0..mu)
        .map(|_| select_one(scheme, fitness, relation, rng))
        .collect()
}

/// The selection kernel `Ω^λ → Ω`.
pub fn selection_kernel<T: Clone + Send + Sync + 'static>(
    scheme: SelectionScheme,
    lambda: usize,
    key: SortKey<T>,
    relation: Relation,
) -> Kernel<T> {
    let (s_scheme, s_key) = (scheme.clone(), Arc::clone(&key));
    Kernel::new(format!("select{lambda}"), lambda, 1, move |x: &[T], ctx| {
        let f: Vec<f64> = x.iter().map(|v| s_key(v)).collect();
        let i = select_one(&s_scheme, &f, relation, ctx.rng())?;
        Ok(vec![x[i].clone()])
    })
    .with_exact(move |domain: &[T], x, _| {
        let f: Vec<f64> = x.iter().map(|i| key(&domain[*i])).collect();
        let p = exact_probs(&scheme, &f, relation)?;
        Ok(Dist::from_pairs(x.iter().copied().zip(p)))
    })
}

/// `⊛_{i=1}^{μ} K_s1`: group selection `Ω^λ → Ω^μ`.
pub fn group_selection_kernel<T: Clone + Send + Sync + 'static>(
    scheme: SelectionScheme,
    lambda: usize,
    mu: usize,
    key: SortKey<T>,
    relation: Relation,
) -> Result<Kernel<T>> {
    if mu < 1 {
        return Err(SgoalError::usage("group selection needs mu >= 1"));
    }
    let one = selection_kernel(scheme, lambda, key, relation);
    join(&vec![one; mu])
}
