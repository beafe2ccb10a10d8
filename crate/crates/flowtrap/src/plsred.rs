//! Reduction from finding an approximate stationary point to LocalOpt on the grid
//! `G = {gamma a : a in [-m, m]^d}`, a local-search solver for it, and the map back to
//! a stationary point or to a checkable violation of the oracle's promises.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm2, Point};
use crate::oracle::{counting_oracle, OracleSpec, QueryCounts, QueryStats};

/// Integer grid coordinates.
pub type GridIndex = Vec<i64>;

/// Lazily evaluated LocalOpt instance. Potentials and neighbors are computed on demand;
/// oracle values are memoized per grid index.
pub struct LocalOptInstance {
    oracle: OracleSpec,
    stats: Arc<QueryStats>,
    eps: f64,
    bound: f64,
    d: usize,
    gamma: f64,
    m: i64,
    f_origin: f64,
    cache: RefCell<HashMap<GridIndex, f64>>,
}

impl std::fmt::Debug for LocalOptInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LocalOptInstance")
            .field("d", &self.d)
            .field("eps", &self.eps)
            .field("gamma", &self.gamma)
            .field("m", &self.m)
            .field("f_origin", &self.f_origin)
            .finish()
    }
}

/// Builds the instance: `gamma = eps / (sqrt(d) L)`, `m = ceil(8 sqrt(d) B / (eps gamma))`.
pub fn build_localopt(oracle: &OracleSpec, eps: f64) -> Result<LocalOptInstance> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition(format!("eps must be positive, got {eps}")));
    }
    let bound = oracle
        .bound
        .ok_or_else(|| Error::Precondition("the reduction needs a bound B on |f|".into()))?;
    if !(bound > 0.0 && oracle.smoothness > 0.0) {
        return Err(Error::Precondition("B and L must be positive".into()));
    }
    let d = oracle.dim;
    let sd = (d as f64).sqrt();
    let gamma = eps / (sd * oracle.smoothness);
    let m_real = (8.0 * sd * bound / (eps * gamma)).ceil();
    if m_real > (i64::MAX / 4) as f64 {
        return Err(Error::Precondition(format!("grid radius {m_real} does not fit in 64-bit indices")));
    }
    let (counted, stats) = counting_oracle(oracle);
    let f_origin = counted.value(&vec![0.0; d]);
    let inst = LocalOptInstance {
        oracle: counted,
        stats,
        eps,
        bound,
        d,
        gamma,
        m: m_real as i64,
        f_origin,
        cache: RefCell::new(HashMap::new()),
    };
    inst.cache.borrow_mut().insert(vec![0; d], f_origin);
    Ok(inst)
}

impl LocalOptInstance {
    /// Grid step.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Grid radius in steps.
    pub fn m(&self) -> i64 {
        self.m
    }

    /// Real radius `m gamma`.
    pub fn radius(&self) -> f64 {
        self.m as f64 * self.gamma
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Target accuracy.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Bound B.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Oracle calls so far.
    pub fn queries(&self) -> QueryCounts {
        self.stats.snapshot()
    }

    /// Minimum potential drop per step promised for in-contract oracles, `eps gamma / (2 sqrt d)`.
    pub fn min_drop(&self) -> f64 {
        self.eps * self.gamma / (2.0 * (self.d as f64).sqrt())
    }

    /// Whether the analytic gradient at `gamma v` has norm above `eps`. False when the
    /// oracle has no analytic gradient.
    pub fn is_steep(&self, v: &[i64]) -> bool {
        self.oracle.gradient(&self.point(v)).is_some_and(|g| norm2(&g) > self.eps)
    }

    /// The origin index.
    pub fn origin(&self) -> GridIndex {
        vec![0; self.d]
    }

    /// Real point `gamma v`.
    pub fn point(&self, v: &[i64]) -> Point {
        v.iter().map(|&a| a as f64 * self.gamma).collect()
    }

    /// Whether `v` lies in `[-m, m]^d`.
    pub fn in_grid(&self, v: &[i64]) -> bool {
        v.len() == self.d && v.iter().all(|a| a.abs() <= self.m)
    }

    fn value(&self, v: &[i64]) -> f64 {
        if let Some(&f) = self.cache.borrow().get(v) {
            return f;
        }
        let f = self.oracle.value(&self.point(v));
        self.cache.borrow_mut().insert(v.to_vec(), f);
        f
    }

    /// Validity: inside the grid and `f(gamma v) <= f(0) - eps / (2 sqrt d) ||gamma v||`.
    pub fn is_valid(&self, v: &[i64]) -> bool {
        if !self.in_grid(v) {
            return false;
        }
        let dist = norm2(&self.point(v));
        self.value(v) <= self.f_origin - self.eps / (2.0 * (self.d as f64).sqrt()) * dist
    }

    /// Potential: `f(gamma v)` for valid points, `B + 1` otherwise.
    pub fn potential(&self, v: &[i64]) -> f64 {
        if self.is_valid(v) {
            self.value(v)
        } else {
            self.bound + 1.0
        }
    }

    /// Neighbor: the grid neighbor with the smallest potential (ties by axis, then `+`
    /// before `-`); invalid points map to the origin.
    pub fn neighbor(&self, v: &[i64]) -> GridIndex {
        if !self.is_valid(v) {
            return self.origin();
        }
        let mut best: Option<(f64, GridIndex)> = None;
        let mut w = v.to_vec();
        for axis in 0..self.d {
            for step in [1, -1] {
                w[axis] = v[axis] + step;
                if self.in_grid(&w) {
                    let p = self.potential(&w);
                    if best.as_ref().map_or(true, |(bp, _)| p < *bp) {
                        best = Some((p, w.clone()));
                    }
                }
                w[axis] = v[axis];
            }
        }
        best.map(|(_, w)| w).unwrap_or_else(|| v.to_vec())
    }
}

/// A finished local search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalOptRun {
    /// The LocalOpt solution reached.
    pub solution: GridIndex,
    /// Steps taken.
    pub steps: u64,
    /// Smallest potential drop observed along the path (infinite when no step was taken).
    pub min_drop: f64,
    /// Smallest drop over steps taken from points with `||grad f|| > eps`, where the
    /// per-step guarantee applies. Infinite when no such step was taken or the oracle has
    /// no analytic gradient.
    pub min_steep_drop: f64,
    /// Steps taken from points with `||grad f|| > eps`.
    pub steep_steps: u64,
    /// Whether every visited point was valid.
    pub all_valid: bool,
}

/// Follows `N` from `start` until `P(N(v)) >= P(v)`.
pub fn solve_localopt(inst: &LocalOptInstance, start: &[i64], max_steps: u64) -> Result<LocalOptRun> {
    let (run, finished) = walk(inst, start, max_steps);
    if finished {
        Ok(run)
    } else {
        Err(Error::BudgetExceeded(format!(
            "local search did not terminate within {max_steps} steps (last potential {})",
            inst.potential(&run.solution)
        )))
    }
}

/// Walks at most `max_steps` steps; the flag reports whether a LocalOpt solution was reached.
fn walk(inst: &LocalOptInstance, start: &[i64], max_steps: u64) -> (LocalOptRun, bool) {
    let mut v = start.to_vec();
    let mut steps = 0;
    let mut min_drop = f64::INFINITY;
    let mut min_steep_drop = f64::INFINITY;
    let mut steep_steps = 0;
    let mut all_valid = inst.is_valid(&v);
    loop {
        let pv = inst.potential(&v);
        let w = inst.neighbor(&v);
        let pw = inst.potential(&w);
        let finished = pw >= pv;
        if finished || steps == max_steps {
            let run = LocalOptRun { solution: v, steps, min_drop, min_steep_drop, steep_steps, all_valid };
            return (run, finished);
        }
        min_drop = min_drop.min(pv - pw);
        if inst.is_steep(&v) {
            min_steep_drop = min_steep_drop.min(pv - pw);
            steep_steps += 1;
        }
        all_valid &= inst.is_valid(&w);
        v = w;
        steps += 1;
    }
}

/// Runs the local search from the origin and maps its solution back. A search that exceeds
/// `max_steps` while standing on a point with `|f| > B` yields that boundedness witness;
/// otherwise exhausting the budget is an error.
pub fn reduce(inst: &LocalOptInstance, max_steps: u64) -> Result<(LocalOptRun, ReductionOutcome)> {
    let (run, finished) = walk(inst, &inst.origin(), max_steps);
    if finished {
        let outcome = map_solution(inst, &run.solution);
        return Ok((run, outcome));
    }
    let value = inst.value(&run.solution);
    if value.abs() > inst.bound {
        let point = inst.point(&run.solution);
        return Ok((run, ReductionOutcome::ViolationBoundedness { point, value }));
    }
    Err(Error::BudgetExceeded(format!("local search did not terminate within {max_steps} steps (last value {value})")))
}

/// Upper bound on the steps of an in-contract descent: the potential starts at `f(0) <= B`,
/// stays above `-B` and drops by at least `eps gamma / (2 sqrt d)` per step.
pub fn step_bound(inst: &LocalOptInstance) -> u64 {
    (2.0 * inst.bound() / inst.min_drop()).ceil() as u64 + 1
}

/// What a LocalOpt solution certifies about the original problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReductionOutcome {
    /// `gamma v`, an approximate stationary point.
    StationaryPoint { point: Point },
    /// A probed point with `|f| > B`.
    ViolationBoundedness { point: Point, value: f64 },
    /// Two points breaking `|f(y) - f(x) - <grad f(x), y - x>| <= L/2 ||y - x||^2`.
    ViolationTaylor { x: Point, y: Point, gap: f64, allowed: f64 },
}

impl ReductionOutcome {
    /// Re-checks a violation witness against the oracle (always true for stationary points).
    pub fn recheck(&self, oracle: &OracleSpec) -> bool {
        match self {
            ReductionOutcome::StationaryPoint { .. } => true,
            ReductionOutcome::ViolationBoundedness { point, .. } => {
                oracle.bound.is_some_and(|b| oracle.value(point).abs() > b)
            }
            ReductionOutcome::ViolationTaylor { x, y, .. } => match oracle.gradient(x) {
                Some(g) => taylor_gap(oracle, x, y, &g).0 > taylor_gap(oracle, x, y, &g).1,
                None => false,
            },
        }
    }
}

fn taylor_gap(oracle: &OracleSpec, x: &[f64], y: &[f64], g: &[f64]) -> (f64, f64) {
    let diff: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let lin: f64 = g.iter().zip(&diff).map(|(a, b)| a * b).sum();
    let gap = (oracle.value(y) - oracle.value(x) - lin).abs();
    let r = norm2(&diff);
    (gap, oracle.smoothness / 2.0 * r * r)
}

/// Maps a LocalOpt solution back: checks `|f| <= B` at `v` and its neighbors and the Taylor
/// inequality between `v` and each neighbor (when gradients are available); returns the
/// first violation found, otherwise the stationary point `gamma v`.
pub fn map_solution(inst: &LocalOptInstance, v: &[i64]) -> ReductionOutcome {
    let x = inst.point(v);
    let oracle = &inst.oracle;
    let fx = inst.value(v);
    if fx.abs() > inst.bound {
        return ReductionOutcome::ViolationBoundedness { point: x, value: fx };
    }
    let grad = oracle.gradient(&x);
    let mut w = v.to_vec();
    for axis in 0..inst.d {
        for step in [1, -1] {
            w[axis] = v[axis] + step;
            if inst.in_grid(&w) {
                let y = inst.point(&w);
                let fy = inst.value(&w);
                if fy.abs() > inst.bound {
                    return ReductionOutcome::ViolationBoundedness { point: y, value: fy };
                }
                if let Some(g) = &grad {
                    let (gap, allowed) = taylor_gap(oracle, &x, &y, g);
                    if gap > allowed {
                        return ReductionOutcome::ViolationTaylor { x: x.clone(), y, gap, allowed };
                    }
                }
            }
            w[axis] = v[axis];
        }
    }
    ReductionOutcome::StationaryPoint { point: x }
}
