//! Stochastic operators as Markov kernels.
//!
//! A [`Kernel`] maps an input tuple of `arity_in` elements to an output tuple
//! of `arity_out` elements. Every kernel can be *sampled*; kernels built from
//! finite building blocks can also report their *exact* transition rows over
//! an enumerated domain `Ω`, where a tuple `(i_1, ..., i_a)` of domain indices
//! is encoded in mixed radix `|Ω|` with the first coordinate most significant.
//!
//! Matrices use the row-vector convention: `M[x][y] = K(x, {y})`, so running
//! `k1` and then `k2` has matrix `M1 · M2`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::RngCore;

use crate::error::{Result, SgoalError};
use crate::problem::{Individual, Problem, Relation};

/// Largest number of tuple states a dense exact matrix may span (per side).
pub const STATE_CAP: usize = 4096;

/// Tolerance for row sums of exact matrices.
pub const ROW_TOLERANCE: f64 = 1e-12;

/// Scalar key used to order values in sorting and selection kernels.
pub type SortKey<T> = Arc<dyn Fn(&T) -> f64 + Send + Sync>;

/// A registered rule that rewrites schedule parameters when the generation
/// counter advances to `t`.
pub trait UpdateRule: Send + Sync {
    fn apply(&self, t: u64, params: &mut BTreeMap<String, f64>);
}

/// Non-stationary parameters threaded through kernel application.
#[derive(Clone, Default)]
pub struct ScheduleState {
    t: u64,
    params: BTreeMap<String, f64>,
    rules: Vec<Arc<dyn UpdateRule>>,
}

impl fmt::Debug for ScheduleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScheduleState")
            .field("t", &self.t)
            .field("params", &self.params)
            .field("rules", &self.rules.len())
            .finish()
    }
}

impl ScheduleState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_rule(mut self, rule: Arc<dyn UpdateRule>) -> Self {
        self.rules.push(rule);
        self
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    /// One generation has elapsed: `t += 1`, then every rule runs in registration order.
    pub fn advance(&mut self) {
        self.t += 1;
        for rule in &self.rules {
            rule.apply(self.t, &mut self.params);
        }
    }
}

/// Everything a sampler may touch: the schedule (read-only), an RNG stream,
/// and the evaluation counter.
pub struct Ctx<'a> {
    schedule: &'a ScheduleState,
    rng: &'a mut dyn RngCore,
    evaluations: u64,
}

impl<'a> Ctx<'a> {
    pub fn new(schedule: &'a ScheduleState, rng: &'a mut dyn RngCore) -> Self {
        Self {
            schedule,
            rng,
            evaluations: 0,
        }
    }

    pub fn schedule(&self) -> &ScheduleState {
        self.schedule
    }

    pub fn rng(&mut self) -> &mut dyn RngCore {
        &mut *self.rng
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Evaluates `point` once and caches the result in the returned individual.
    pub fn evaluate(&mut self, problem: &Problem, point: Vec<f64>) -> Individual {
        self.evaluations += 1;
        let fitness = problem.objective(&point);
        Individual::new(point, fitness)
    }
}

/// A sparse probability row: sorted `(state code, mass)` pairs with positive mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist {
    entries: Vec<(usize, f64)>,
}

impl Dist {
    pub fn point(state: usize) -> Self {
        Self {
            entries: vec![(state, 1.0)],
        }
    }

    /// Merges duplicate states and drops zero masses.
    pub fn from_pairs<I: IntoIterator<Item = (usize, f64)>>(pairs: I) -> Self {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (s, p) in pairs {
            *acc.entry(s).or_insert(0.0) += p;
        }
        Self {
            entries: acc.into_iter().filter(|(_, p)| *p > 0.0).collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn mass(&self, state: usize) -> f64 {
        self.entries
            .binary_search_by_key(&state, |(s, _)| *s)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }
}

/// Mixed-radix codec for tuples over a domain of size `base`.
#[derive(Debug, Clone, Copy)]
pub struct TupleCodec {
    base: usize,
}

impl TupleCodec {
    pub fn new(base: usize) -> Self {
        Self { base }
    }

    /// `base^arity`, or an error when it does not fit in `usize`.
    pub fn count(&self, arity: usize) -> Result<usize> {
        u32::try_from(arity)
            .ok()
            .and_then(|a| self.base.checked_pow(a))
            .ok_or_else(|| {
                SgoalError::config(format!(
                    "tuple space {}^{} is too large to enumerate",
                    self.base, arity
                ))
            })
    }

    pub fn encode(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, i| acc * self.base + i)
    }

    pub fn decode(&self, mut code: usize, arity: usize) -> Vec<usize> {
        let mut out = vec![0; arity];
        for slot in out.iter_mut().rev() {
            *slot = code % self.base;
            code /= self.base;
        }
        out
    }
}

type Sampler<T> = dyn Fn(&[T], &mut Ctx<'_>) -> Result<Vec<T>> + Send + Sync;
type RowFn<T> = dyn Fn(&[T], &[usize], &ScheduleState) -> Result<Dist> + Send + Sync;

/// A (possibly time-indexed) stochastic operation `Ω^a → Ω^b`.
pub struct Kernel<T> {
    name: String,
    arity_in: usize,
    arity_out: usize,
    sampler: Arc<Sampler<T>>,
    row: Option<Arc<RowFn<T>>>,
}

impl<T> Clone for Kernel<T> {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            arity_in: self.arity_in,
            arity_out: self.arity_out,
            sampler: Arc::clone(&self.sampler),
            row: self.row.clone(),
        }
    }
}

impl<T> fmt::Debug for Kernel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name)
            .field("arity_in", &self.arity_in)
            .field("arity_out", &self.arity_out)
            .field("exact", &self.row.is_some())
            .finish()
    }
}

impl<T: Clone + Send + Sync + 'static> Kernel<T> {
    pub fn new<S>(name: impl Into<String>, arity_in: usize, arity_out: usize, sampler: S) -> Self
    where
        S: Fn(&[T], &mut Ctx<'_>) -> Result<Vec<T>> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            arity_in,
            arity_out,
            sampler: Arc::new(sampler),
            row: None,
        }
    }

    /// Attaches an exact row function. It receives the domain, the decoded
    /// input tuple (domain indices) and the schedule, and returns the output
    /// distribution over encoded output tuples.
    pub fn with_exact<F>(mut self, row: F) -> Self
    where
        F: Fn(&[T], &[usize], &ScheduleState) -> Result<Dist> + Send + Sync + 'static,
    {
        self.row = Some(Arc::new(row));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity_in(&self) -> usize {
        self.arity_in
    }

    pub fn arity_out(&self) -> usize {
        self.arity_out
    }

    pub fn has_exact(&self) -> bool {
        self.row.is_some()
    }

    pub fn sample(&self, input: &[T], ctx: &mut Ctx<'_>) -> Result<Vec<T>> {
        if input.len() != self.arity_in {
            return Err(SgoalError::config(format!(
                "kernel '{}' expects {} inputs, got {}",
                self.name,
                self.arity_in,
                input.len()
            )));
        }
        let out = (self.sampler)(input, ctx)?;
        if out.len() != self.arity_out {
            return Err(SgoalError::config(format!(
                "kernel '{}' produced {} outputs, declared {}",
                self.name,
                out.len(),
                self.arity_out
            )));
        }
        Ok(out)
    }

    pub fn exact_row(&self, domain: &[T], input: &[usize], state: &ScheduleState) -> Result<Dist> {
        let row = self.row.as_ref().ok_or_else(|| {
            SgoalError::config(format!("kernel '{}' has no exact realization", self.name))
        })?;
        if input.len() != self.arity_in {
            return Err(SgoalError::config(format!(
                "kernel '{}' expects {} inputs, got {}",
                self.name,
                self.arity_in,
                input.len()
            )));
        }
        if let Some(bad) = input.iter().find(|i| **i >= domain.len()) {
            return Err(SgoalError::usage(format!(
                "state index {bad} outside a domain of {} elements",
                domain.len()
            )));
        }
        row(domain, input, state)
    }

    /// Dense row-stochastic matrix over `Ω^a × Ω^b`.
    pub fn matrix(&self, domain: &[T], state: &ScheduleState) -> Result<DMatrix<f64>> {
        let codec = TupleCodec::new(domain.len());
        let rows = codec.count(self.arity_in)?;
        let cols = codec.count(self.arity_out)?;
        if rows > STATE_CAP || cols > STATE_CAP {
            return Err(SgoalError::usage(format!(
                "kernel '{}' spans {rows}x{cols} states; the dense cap is {STATE_CAP}",
                self.name
            )));
        }
        let mut m = DMatrix::zeros(rows, cols);
        for x in 0..rows {
            let dist = self.exact_row(domain, &codec.decode(x, self.arity_in), state)?;
            for (y, p) in dist.entries() {
                m[(x, *y)] = *p;
            }
        }
        Ok(m)
    }

    /// `K(x, ·) = δ_x` on `n`-tuples.
    pub fn identity(n: usize) -> Self {
        Kernel::new(format!("id{n}"), n, n, |x: &[T], _| Ok(x.to_vec())).with_exact(
            |domain: &[T], x, _| Ok(Dist::point(TupleCodec::new(domain.len()).encode(x))),
        )
    }

    /// Deterministic kernel emitting the coordinates `indices` (0-based) in order.
    pub fn projection(arity_in: usize, indices: &[usize]) -> Result<Self> {
        if let Some(bad) = indices.iter().find(|i| **i >= arity_in) {
            return Err(SgoalError::config(format!(
                "projection index {bad} out of range for arity {arity_in}"
            )));
        }
        let idx: Arc<[usize]> = indices.into();
        let idx_row = Arc::clone(&idx);
        Ok(Kernel::new(
            format!("pi{indices:?}"),
            arity_in,
            indices.len(),
            move |x: &[T], _| Ok(idx.iter().map(|i| x[*i].clone()).collect()),
        )
        .with_exact(move |domain: &[T], x, _| {
            let picked: Vec<usize> = idx_row.iter().map(|i| x[*i]).collect();
            Ok(Dist::point(TupleCodec::new(domain.len()).encode(&picked)))
        }))
    }

    /// Deterministic kernel that stably sorts an `n`-tuple best-first by `key`.
    pub fn sort(n: usize, key: SortKey<T>, relation: Relation) -> Self {
        let key_row = Arc::clone(&key);
        Kernel::new(format!("s{n}"), n, n, move |x: &[T], _| {
            let order = stable_order(x.len(), |i| key(&x[i]), relation);
            Ok(order.into_iter().map(|i| x[i].clone()).collect())
        })
        .with_exact(move |domain: &[T], x, _| {
            let order = stable_order(x.len(), |i| key_row(&domain[x[i]]), relation);
            let sorted: Vec<usize> = order.into_iter().map(|i| x[i]).collect();
            Ok(Dist::point(TupleCodec::new(domain.len()).encode(&sorted)))
        })
    }
}

impl Kernel<usize> {
    /// Stationary kernel given by a square row-stochastic matrix over a
    /// domain whose elements are the indices `0..rows`.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        check_row_stochastic(&matrix)?;
        if matrix.nrows() != matrix.ncols() {
            return Err(SgoalError::config("transition matrix must be square"));
        }
        let m = Arc::new(matrix);
        let weights: Arc<Vec<Option<WeightedIndex<f64>>>> = Arc::new(
            (0..m.nrows())
                .map(|i| WeightedIndex::new(m.row(i).iter().copied()).ok())
                .collect(),
        );
        let m_row = Arc::clone(&m);
        Ok(Kernel::new("matrix", 1, 1, move |x: &[usize], ctx| {
            let w = weights
                .get(x[0])
                .and_then(|w| w.as_ref())
                .ok_or_else(|| SgoalError::usage(format!("state {} outside matrix", x[0])))?;
            Ok(vec![w.sample(ctx.rng())])
        })
        .with_exact(move |domain: &[usize], x, _| {
            if domain.len() != m_row.nrows() {
                return Err(SgoalError::config(format!(
                    "matrix kernel over {} states applied to a domain of {}",
                    m_row.nrows(),
                    domain.len()
                )));
            }
            Ok(Dist::from_pairs(
                m_row.row(x[0]).iter().enumerate().map(|(j, p)| (j, *p)),
            ))
        }))
    }
}

/// Stable best-first ordering of `0..n` under `relation`.
pub(crate) fn stable_order(n: usize, key: impl Fn(usize) -> f64, relation: Relation) -> Vec<usize> {
    let keys: Vec<f64> = (0..n).map(key).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| {
        let (ka, kb) = (keys[*a], keys[*b]);
        if relation.better(ka, kb) {
            std::cmp::Ordering::Less
        } else if relation.better(kb, ka) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    order
}

/// `k2 ∘ k1`: run `k1`, feed its output to `k2` under the same schedule.
pub fn compose<T: Clone + Send + Sync + 'static>(
    k2: &Kernel<T>,
    k1: &Kernel<T>,
) -> Result<Kernel<T>> {
    if k1.arity_out != k2.arity_in {
        return Err(SgoalError::config(format!(
            "cannot compose '{}' ({} outputs) into '{}' ({} inputs)",
            k1.name, k1.arity_out, k2.name, k2.arity_in
        )));
    }
    let (a, b) = (k1.clone(), k2.clone());
    let mut kernel = Kernel::new(
        format!("{}∘{}", k2.name, k1.name),
        k1.arity_in,
        k2.arity_out,
        move |x: &[T], ctx| {
            let y = a.sample(x, ctx)?;
            b.sample(&y, ctx)
        },
    );
    if k1.has_exact() && k2.has_exact() {
        let (a, b) = (k1.clone(), k2.clone());
        kernel = kernel.with_exact(move |domain: &[T], x, state| {
            let codec = TupleCodec::new(domain.len());
            let first = a.exact_row(domain, x, state)?;
            let mut acc: Vec<(usize, f64)> = Vec::new();
            for (y, p) in first.entries() {
                let second = b.exact_row(domain, &codec.decode(*y, a.arity_out), state)?;
                acc.extend(second.entries().iter().map(|(z, q)| (*z, p * q)));
            }
            Ok(Dist::from_pairs(acc))
        });
    }
    Ok(kernel)
}

/// `⊛ kernels`: apply every kernel independently to the same input and
/// concatenate the outputs.
pub fn join<T: Clone + Send + Sync + 'static>(kernels: &[Kernel<T>]) -> Result<Kernel<T>> {
    let first = kernels
        .first()
        .ok_or_else(|| SgoalError::config("join of an empty kernel list"))?;
    if let Some(k) = kernels.iter().find(|k| k.arity_in != first.arity_in) {
        return Err(SgoalError::config(format!(
            "join members disagree on input arity ('{}' has {}, '{}' has {})",
            first.name, first.arity_in, k.name, k.arity_in
        )));
    }
    let parts: Arc<[Kernel<T>]> = kernels.into();
    let arity_out = kernels.iter().map(|k| k.arity_out).sum();
    let name = format!(
        "⊛[{}]",
        kernels
            .iter()
            .map(|k| k.name.as_str())
            .collect::<Vec<_>>()
            .join(",")
    );
    let sampled = Arc::clone(&parts);
    let mut kernel = Kernel::new(name, first.arity_in, arity_out, move |x: &[T], ctx| {
        let mut out = Vec::new();
        for k in sampled.iter() {
            out.extend(k.sample(x, ctx)?);
        }
        Ok(out)
    });
    if kernels.iter().all(|k| k.has_exact()) {
        kernel = kernel.with_exact(move |domain: &[T], x, state| {
            let codec = TupleCodec::new(domain.len());
            let mut joint = vec![(0usize, 1.0f64)];
            for k in parts.iter() {
                let shift = codec.count(k.arity_out)?;
                let row = k.exact_row(domain, x, state)?;
                let mut next = Vec::with_capacity(joint.len() * row.entries().len());
                for (code, p) in &joint {
                    let base = code.checked_mul(shift).ok_or_else(|| {
                        SgoalError::config("joined tuple space is too large to enumerate")
                    })?;
                    next.extend(row.entries().iter().map(|(c, q)| (base + c, p * q)));
                }
                joint = next;
            }
            Ok(Dist::from_pairs(joint))
        });
    }
    Ok(kernel)
}

/// Verifies every row sums to one within [`ROW_TOLERANCE`] and every entry is a probability.
pub fn check_row_stochastic(m: &DMatrix<f64>) -> Result<()> {
    for i in 0..m.nrows() {
        let row = m.row(i);
        if let Some(v) = row
            .iter()
            .find(|v| !(**v >= 0.0 && **v <= 1.0 + ROW_TOLERANCE))
        {
            return Err(SgoalError::usage(format!(
                "row {i} has entry {v} outside [0, 1]"
            )));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_TOLERANCE {
            return Err(SgoalError::usage(format!("row {i} sums to {s}, not 1")));
        }
    }
    Ok(())
}

/// Which way the ordered product of a kernel sequence is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProductOrder {
    /// `K^(t)(x, A) = Σ_y K_t(x, y) K^(t-1)(y, A)`: the newest kernel acts first
    /// at the outer step, i.e. `M_t · M_(t-1) · … · M_1`.
    #[default]
    Recursion,
    /// Time order `M_1 · M_2 · … · M_t`: state at step `t` from a start at step 0.
    Chronological,
}

/// `K^(t)(·, A)` for `t = 1..=t_max`, as one vector per `t`.
///
/// `kernel_at(t)` returns the matrix applied at step `t` (1-based).
pub fn masses_into<'m>(
    kernel_at: impl Fn(usize) -> &'m DMatrix<f64>,
    t_max: usize,
    target: &[bool],
    order: ProductOrder,
) -> Result<Vec<DVector<f64>>> {
    let n = target.len();
    let indicator = DVector::from_iterator(n, target.iter().map(|b| if *b { 1.0 } else { 0.0 }));
    let mut out = Vec::with_capacity(t_max);
    let check = |m: &DMatrix<f64>| -> Result<()> {
        if m.nrows() != n || m.ncols() != n {
            return Err(SgoalError::config(format!(
                "matrix is {}x{} but the target set spans {n} states",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(())
    };
    match order {
        ProductOrder::Recursion => {
            let mut v = indicator;
            for t in 1..=t_max {
                let m = kernel_at(t);
                check(m)?;
                v = m * v;
                out.push(v.clone());
            }
        }
        ProductOrder::Chronological => {
            let mut prod = DMatrix::<f64>::identity(n, n);
            for t in 1..=t_max {
                let m = kernel_at(t);
                check(m)?;
                prod *= m;
                out.push(&prod * &indicator);
            }
        }
    }
    Ok(out)
}

/// `K^(t)(x, A)` for the ordered product of `matrices` (`t = matrices.len()`).
pub fn iterate_nonstationary(
    matrices: &[DMatrix<f64>],
    start: usize,
    target: &[usize],
    order: ProductOrder,
) -> Result<f64> {
    let first = matrices
        .first()
        .ok_or_else(|| SgoalError::usage("empty kernel sequence"))?;
    let n = first.nrows();
    if start >= n {
        return Err(SgoalError::usage(format!(
            "start state {start} outside {n} states"
        )));
    }
    let mut indicator = vec![false; n];
    for a in target {
        *indicator
            .get_mut(*a)
            .ok_or_else(|| SgoalError::usage(format!("target state {a} outside {n} states")))? =
            true;
    }
    let masses = masses_into(|t| &matrices[t - 1], matrices.len(), &indicator, order)?;
    Ok(masses.last().map(|v| v[start]).unwrap_or(0.0))
}

/// Writes `rows cols` then one whitespace-separated row per line.
pub fn write_matrix<W: Write>(m: &DMatrix<f64>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_matrix<R: BufRead>(input: R) -> Result<DMatrix<f64>> {
    let mut tokens = Vec::new();
    for line in input.lines() {
        let line = line.map_err(|e| SgoalError::usage(format!("reading matrix: {e}")))?;
        tokens.extend(line.split_whitespace().map(str::to_string));
    }
    let mut it = tokens.into_iter();
    let mut dim = |what: &str| -> Result<usize> {
        it.next()
            .ok_or_else(|| SgoalError::usage(format!("matrix header is missing {what}")))?
            .parse::<usize>()
            .map_err(|e| SgoalError::usage(format!("matrix {what}: {e}")))
    };
    let rows = dim("rows")?;
    let cols = dim("cols")?;
    let values: Vec<f64> = it
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| SgoalError::usage(format!("matrix entry '{t}': {e}")))
        })
        .collect::<Result<_>>()?;
    if values.len() != rows * cols {
        return Err(SgoalError::usage(format!(
            "matrix header says {rows}x{cols} but {} entries follow",
            values.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}
