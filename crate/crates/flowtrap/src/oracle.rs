//! Function oracles with metadata and query accounting.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::Point;

/// A deterministic smooth function of d variables.
///
/// Implementations must be pure and safe to call from several threads.
pub trait Objective: Send + Sync {
    /// f(x).
    fn value(&self, x: &[f64]) -> f64;

    /// Analytic gradient, when the objective provides one.
    fn gradient(&self, _x: &[f64]) -> Option<Point> {
        None
    }

    /// Whether [`Objective::gradient`] returns `Some`.
    fn has_gradient(&self) -> bool {
        false
    }

    /// Evaluates f at `out.len()` points stored row-major in `xs` (each row has `d` entries).
    /// Counts as one logical query per point.
    fn values_into(&self, d: usize, xs: &[f64], out: &mut [f64]) {
        for (row, o) in xs.chunks_exact(d).zip(out.iter_mut()) {
            *o = self.value(row);
        }
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Point + Send + Sync;

/// Objective assembled from closures.
pub struct FnObjective {
    value: Box<ValueFn>,
    gradient: Option<Box<GradFn>>,
}

impl FnObjective {
    /// Value-only objective.
    pub fn new(value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { value: Box::new(value), gradient: None }
    }

    /// Objective with an analytic gradient.
    pub fn with_gradient(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Point + Send + Sync + 'static,
    ) -> Self {
        Self { value: Box::new(value), gradient: Some(Box::new(gradient)) }
    }
}

impl Objective for FnObjective {
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Point> {
        self.gradient.as_ref().map(|g| g(x))
    }
    fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }
}

/// Where the oracle is defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    /// All of R^d.
    Unconstrained,
    /// The cube [0,1]^d.
    UnitCube,
}

/// A queryable function together with its dimension, smoothness constant L and optional bound B.
#[derive(Clone)]
pub struct OracleSpec {
    pub dim: usize,
    pub smoothness: f64,
    pub bound: Option<f64>,
    pub domain: DomainKind,
    objective: Arc<dyn Objective>,
}

impl fmt::Debug for OracleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OracleSpec")
            .field("dim", &self.dim)
            .field("smoothness", &self.smoothness)
            .field("bound", &self.bound)
            .field("domain", &self.domain)
            .field("has_gradient", &self.has_gradient())
            .finish()
    }
}

impl OracleSpec {
    /// Unconstrained oracle of dimension `dim` with smoothness constant `smoothness`.
    pub fn new(dim: usize, smoothness: f64, objective: Arc<dyn Objective>) -> Self {
        Self { dim, smoothness, bound: None, domain: DomainKind::Unconstrained, objective }
    }

    /// Value-only oracle built from a closure.
    pub fn from_fn(
        dim: usize,
        smoothness: f64,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(dim, smoothness, Arc::new(FnObjective::new(value)))
    }

    /// Oracle with analytic gradient built from closures.
    pub fn from_fns(
        dim: usize,
        smoothness: f64,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Point + Send + Sync + 'static,
    ) -> Self {
        Self::new(dim, smoothness, Arc::new(FnObjective::with_gradient(value, gradient)))
    }

    /// Sets the boundedness constant B.
    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    /// Sets the domain kind.
    pub fn with_domain(mut self, domain: DomainKind) -> Self {
        self.domain = domain;
        self
    }

    /// Replaces the smoothness constant.
    pub fn with_smoothness(mut self, smoothness: f64) -> Self {
        self.smoothness = smoothness;
        self
    }

    /// f(x).
    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    /// Batched evaluation, see [`Objective::values_into`].
    #[inline]
    pub fn values_into(&self, xs: &[f64], out: &mut [f64]) {
        self.objective.values_into(self.dim, xs, out)
    }

    /// Analytic gradient, if present.
    pub fn gradient(&self, x: &[f64]) -> Option<Point> {
        self.objective.gradient(x)
    }

    /// Whether an analytic gradient is available.
    pub fn has_gradient(&self) -> bool {
        self.objective.has_gradient()
    }

    /// The underlying objective.
    pub fn objective(&self) -> &Arc<dyn Objective> {
        &self.objective
    }
}

/// Atomic query counters.
#[derive(Debug, Default)]
pub struct QueryStats {
    value_queries: AtomicU64,
    gradient_queries: AtomicU64,
}

/// Plain snapshot of [`QueryStats`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounts {
    pub value_queries: u64,
    pub gradient_queries: u64,
}

impl QueryStats {
    /// Current counter values.
    pub fn snapshot(&self) -> QueryCounts {
        QueryCounts {
            value_queries: self.value_queries.load(Ordering::Relaxed),
            gradient_queries: self.gradient_queries.load(Ordering::Relaxed),
        }
    }

    /// Number of value queries so far.
    pub fn value_queries(&self) -> u64 {
        self.value_queries.load(Ordering::Relaxed)
    }

    /// Number of gradient queries so far.
    pub fn gradient_queries(&self) -> u64 {
        self.gradient_queries.load(Ordering::Relaxed)
    }
}

struct Counting {
    base: Arc<dyn Objective>,
    stats: Arc<QueryStats>,
}

impl Objective for Counting {
    fn value(&self, x: &[f64]) -> f64 {
        self.stats.value_queries.fetch_add(1, Ordering::Relaxed);
        self.base.value(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Point> {
        self.stats.gradient_queries.fetch_add(1, Ordering::Relaxed);
        self.base.gradient(x)
    }
    fn has_gradient(&self) -> bool {
        self.base.has_gradient()
    }
    fn values_into(&self, d: usize, xs: &[f64], out: &mut [f64]) {
        self.stats.value_queries.fetch_add(out.len() as u64, Ordering::Relaxed);
        self.base.values_into(d, xs, out)
    }
}

/// Wraps `base` so that every value and gradient call is counted.
pub fn counting_oracle(base: &OracleSpec) -> (OracleSpec, Arc<QueryStats>) {
    let stats = Arc::new(QueryStats::default());
    let wrapped = Counting { base: base.objective.clone(), stats: stats.clone() };
    let spec = OracleSpec { objective: Arc::new(wrapped), ..base.clone() };
    (spec, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> OracleSpec {
        OracleSpec::from_fns(2, 1.0, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]), |x| x.to_vec())
    }

    #[test]
    fn counts_values() {
        let (o, s) = counting_oracle(&quad());
        for _ in 0..3 {
            o.value(&[1.0, 2.0]);
        }
        assert_eq!(s.snapshot(), QueryCounts { value_queries: 3, gradient_queries: 0 });
    }

    #[test]
    fn fresh_counter_is_zero() {
        let (_o, s) = counting_oracle(&quad());
        assert_eq!(s.snapshot(), QueryCounts::default());
    }

    #[test]
    fn counts_mixed_calls() {
        let (o, s) = counting_oracle(&quad());
        o.gradient(&[0.0, 0.0]);
        o.gradient(&[1.0, 0.0]);
        o.value(&[0.0, 1.0]);
        assert_eq!(s.snapshot(), QueryCounts { value_queries: 1, gradient_queries: 2 });
    }

    #[test]
    fn batched_calls_count_each_point() {
        let (o, s) = counting_oracle(&quad());
        let xs = [0.0, 0.0, 1.0, 0.0, 0.0, 2.0];
        let mut out = [0.0; 3];
        o.values_into(&xs, &mut out);
        assert_eq!(out, [0.0, 0.5, 2.0]);
        assert_eq!(s.value_queries(), 3);
    }

    #[test]
    fn counting_preserves_values() {
        let base = quad();
        let (o, _s) = counting_oracle(&base);
        assert_eq!(o.value(&[0.3, -0.7]), base.value(&[0.3, -0.7]));
        assert_eq!(o.gradient(&[0.3, -0.7]), base.gradient(&[0.3, -0.7]));
    }
}
