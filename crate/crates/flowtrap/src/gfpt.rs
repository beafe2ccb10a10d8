//! The parallel-trap solver for approximate stationary points (unconstrained) and
//! approximate KKT points on the unit cube, plus the gradient-descent baseline.
//!
//! The solver keeps a hyperrectangle `R_t` and a pivot `x_t` such that every boundary point
//! of `R_t` is `eps_t`-unreachable from `x_t`. Each step queries nice nets on the two
//! hyperplanes cutting the longest side into thirds and discards one third, keeping the
//! invariant. Once the rectangle is small enough the pivot (or a corner, in the constrained
//! case) is an `eps`-stationary point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist2, lex_cmp, norm2, rect_split_planes, DeltaNet, HyperRect, Point};
use crate::oracle::{counting_oracle, DomainKind, OracleSpec, QueryCounts};

/// Multiplicative decay used by both the tolerance schedule and the net spacing.
pub const SCHEDULE_BASE: f64 = 0.75;

/// Nets larger than this are evaluated in parallel chunks.
const PARALLEL_THRESHOLD: u64 = 1 << 15;

/// Points handed to the oracle per batched call.
const CHUNK: u64 = 4096;

/// Net constant `C1 = 75 sqrt(d)`.
pub fn c1(d: usize) -> f64 {
    75.0 * (d as f64).sqrt()
}

/// Schedule constant `C2 = 16 d`.
pub fn c2(d: usize) -> f64 {
    16.0 * d as f64
}

/// Solver parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target accuracy.
    pub eps: f64,
    /// Smoothness constant L used for the schedule.
    pub smoothness: f64,
    /// Keep a snapshot of every iteration.
    pub record_trace: bool,
    /// Evaluate large nets with rayon.
    pub parallel: bool,
}

impl SolverConfig {
    /// Configuration with tracing off and parallel net evaluation on.
    pub fn new(eps: f64, smoothness: f64) -> Self {
        Self { eps, smoothness, record_trace: false, parallel: true }
    }

    /// Turns per-iteration snapshots on or off.
    pub fn with_trace(mut self, on: bool) -> Self {
        self.record_trace = on;
        self
    }

    /// Turns parallel net evaluation on or off.
    pub fn with_parallel(mut self, on: bool) -> Self {
        self.parallel = on;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Precondition(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.smoothness > 0.0 && self.smoothness.is_finite()) {
            return Err(Error::Precondition(format!("L must be positive, got {}", self.smoothness)));
        }
        Ok(())
    }

    /// Side length below which the loop stops: `eps / (2 sqrt(d) L)`.
    pub fn stop_side(&self, d: usize) -> f64 {
        self.eps / (2.0 * (d as f64).sqrt() * self.smoothness)
    }

    /// Net spacing `delta_t = sqrt(eps / (C1 C2 L) * r_t * (3/4)^floor(t/d))`.
    pub fn delta(&self, d: usize, r_t: f64, t: usize) -> f64 {
        let decay = SCHEDULE_BASE.powi((t / d) as i32);
        (self.eps / (c1(d) * c2(d) * self.smoothness) * r_t * decay).sqrt()
    }

    /// Tolerance increment applied after iteration t: `eps (3/4)^floor(t/d) / C2`.
    pub fn eps_increment(&self, d: usize, t: usize) -> f64 {
        self.eps * SCHEDULE_BASE.powi((t / d) as i32) / c2(d)
    }
}

/// Solver state at the start of iteration `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapState {
    /// Current rectangle `R_t`.
    pub rect: HyperRect,
    /// Current pivot `x_t`.
    pub pivot: Point,
    /// `f(x_t)`.
    pub pivot_value: f64,
    /// Current tolerance `eps_t`.
    pub eps_t: f64,
    /// Iteration counter.
    pub t: usize,
    /// Longest side of `R_t`.
    pub r_t: f64,
    /// Net spacing used by iteration t.
    pub delta_t: f64,
}

/// What a single trap step did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepReport {
    /// Axis that was cut.
    pub axis: usize,
    /// Net points queried on the two planes.
    pub net_points: u64,
    /// Whether the pivot moved to a better net point.
    pub moved: bool,
}

/// Output of a solver run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    /// Returned point.
    pub point: Point,
    /// Oracle calls made by the run.
    pub stats: QueryCounts,
    /// Number of executed iterations (trap steps or descent steps).
    pub iterations: usize,
    /// Final tolerance `eps_T` (the target eps for the baseline).
    pub eps_final: f64,
    /// Per-iteration snapshots, when requested.
    pub trace: Option<Vec<TrapState>>,
    /// Per-iteration step reports (always recorded for trap runs).
    pub steps: Vec<StepReport>,
    /// Final rectangle of a trap run.
    pub final_rect: Option<HyperRect>,
    /// Set by the baseline when it ran out of iterations.
    pub budget_exhausted: bool,
}

#[derive(Clone)]
struct Best {
    value: f64,
    point: Point,
}

fn better(a: Option<Best>, b: Option<Best>) -> Option<Best> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            let pick_b = b.value < a.value
                || (b.value == a.value && lex_cmp(&b.point, &a.point) == std::cmp::Ordering::Less);
            Some(if pick_b { b } else { a })
        }
    }
}

struct ChunkOutcome {
    best: Option<Best>,
    error: Option<(u64, Error)>,
}

fn merge(a: ChunkOutcome, b: ChunkOutcome) -> ChunkOutcome {
    let error = match (a.error, b.error) {
        (None, e) | (e, None) => e,
        (Some(x), Some(y)) => Some(if x.0 <= y.0 { x } else { y }),
    };
    ChunkOutcome { best: better(a.best, b.best), error }
}

/// Evaluates one net chunk `[start, end)` and returns the best member of S* found there.
fn scan_chunk(
    oracle: &OracleSpec,
    net: &DeltaNet,
    start: u64,
    end: u64,
    pivot: &[f64],
    threshold: f64,
    eps_t: f64,
    nonnegative: bool,
) -> ChunkOutcome {
    let d = pivot.len();
    let n = (end - start) as usize;
    let mut xs = vec![0.0; n * d];
    for (i, row) in xs.chunks_exact_mut(d).enumerate() {
        net.point_into(start + i as u64, row);
    }
    let mut vals = vec![0.0; n];
    oracle.values_into(&xs, &mut vals);
    let mut best: Option<Best> = None;
    for (i, (row, &v)) in xs.chunks_exact(d).zip(&vals).enumerate() {
        if !v.is_finite() {
            let e = Error::NonFinite { point: row.to_vec(), value: v };
            return ChunkOutcome { best, error: Some((start + i as u64, e)) };
        }
        if nonnegative && v < 0.0 {
            let e = Error::NegativeValue { point: row.to_vec(), value: v };
            return ChunkOutcome { best, error: Some((start + i as u64, e)) };
        }
        if v <= threshold - eps_t * dist2(pivot, row) {
            let replace = match &best {
                None => true,
                Some(b) => {
                    v < b.value || (v == b.value && lex_cmp(row, &b.point) == std::cmp::Ordering::Less)
                }
            };
            if replace {
                best = Some(Best { value: v, point: row.to_vec() });
            }
        }
    }
    ChunkOutcome { best, error: None }
}

fn scan_net(
    oracle: &OracleSpec,
    net: &DeltaNet,
    state: &TrapState,
    nonnegative: bool,
    parallel: bool,
) -> Result<Option<Best>> {
    let len = net.len();
    let chunks = len.div_ceil(CHUNK);
    let run = |c: u64| {
        let start = c * CHUNK;
        let end = (start + CHUNK).min(len);
        scan_chunk(oracle, net, start, end, &state.pivot, state.pivot_value, state.eps_t, nonnegative)
    };
    let empty = || ChunkOutcome { best: None, error: None };
    let outcome = if parallel && len > PARALLEL_THRESHOLD {
        (0..chunks).into_par_iter().map(run).reduce(empty, merge)
    } else {
        (0..chunks).map(run).fold(empty(), merge)
    };
    match outcome.error {
        Some((_, e)) => Err(e),
        None => Ok(outcome.best),
    }
}

/// One parallel-trap iteration. Returns the next state and a report of the step.
pub fn trap_step(
    state: &TrapState,
    oracle: &OracleSpec,
    cfg: &SolverConfig,
) -> Result<(TrapState, StepReport)> {
    trap_step_impl(state, oracle, cfg, oracle.domain == DomainKind::Unconstrained)
}

fn trap_step_impl(
    state: &TrapState,
    oracle: &OracleSpec,
    cfg: &SolverConfig,
    nonnegative: bool,
) -> Result<(TrapState, StepReport)> {
    let d = state.rect.ambient_dim();
    let j = state.rect.longest_axis();
    let r = state.rect.max_side();
    let (e1, e2) = rect_split_planes(&state.rect, j)?;
    let delta = cfg.delta(d, r, state.t);
    let n1 = DeltaNet::new(&e1, delta)?;
    let n2 = DeltaNet::new(&e2, delta)?;
    let best1 = scan_net(oracle, &n1, state, nonnegative, cfg.parallel)?;
    let best2 = scan_net(oracle, &n2, state, nonnegative, cfg.parallel)?;
    let best = better(best1, best2);

    let mut next = state.clone();
    let moved = best.is_some();
    if let Some(b) = best {
        next.pivot = b.point;
        next.pivot_value = b.value;
    }
    let lo = state.rect.lo[j];
    if next.pivot[j] >= lo + r / 2.0 {
        next.rect.lo[j] = lo + r / 3.0;
    } else {
        next.rect.hi[j] = state.rect.hi[j] - r / 3.0;
    }
    next.eps_t = state.eps_t + cfg.eps_increment(d, state.t);
    next.t = state.t + 1;
    next.r_t = next.rect.max_side();
    next.delta_t = cfg.delta(d, next.r_t, next.t);
    let report = StepReport { axis: j, net_points: n1.len() + n2.len(), moved };
    Ok((next, report))
}

fn check_value(x: &[f64], v: f64, nonnegative: bool) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite { point: x.to_vec(), value: v });
    }
    if nonnegative && v < 0.0 {
        return Err(Error::NegativeValue { point: x.to_vec(), value: v });
    }
    Ok(())
}

struct LoopOutput {
    state: TrapState,
    trace: Option<Vec<TrapState>>,
    steps: Vec<StepReport>,
}

fn run_loop(
    init: TrapState,
    oracle: &OracleSpec,
    cfg: &SolverConfig,
    nonnegative: bool,
) -> Result<LoopOutput> {
    let d = init.rect.ambient_dim();
    let stop = cfg.stop_side(d);
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut steps = Vec::new();
    let mut state = init;
    while state.r_t > stop {
        if let Some(tr) = trace.as_mut() {
            tr.push(state.clone());
        }
        let (next, report) = trap_step_impl(&state, oracle, cfg, nonnegative)?;
        steps.push(report);
        state = next;
    }
    if let Some(tr) = trace.as_mut() {
        tr.push(state.clone());
    }
    Ok(LoopOutput { state, trace, steps })
}

fn initial_state(rect: HyperRect, pivot: Point, pivot_value: f64, cfg: &SolverConfig) -> TrapState {
    let d = rect.ambient_dim();
    let r_t = rect.max_side();
    TrapState { rect, pivot, pivot_value, eps_t: cfg.eps / 4.0, t: 0, r_t, delta_t: cfg.delta(d, r_t, 0) }
}

/// Finds an `eps`-stationary point of a nonnegative L-smooth function starting from `x0`.
pub fn gfpt_unconstrained(oracle: &OracleSpec, x0: &[f64], cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let d = oracle.dim;
    if d < 2 || x0.len() != d {
        return Err(Error::Precondition(format!(
            "need d >= 2 and a start point of length d (d = {d}, len = {})",
            x0.len()
        )));
    }
    let (counted, stats) = counting_oracle(oracle);
    let f0 = counted.value(x0);
    check_value(x0, f0, true)?;
    let eps0 = cfg.eps / 4.0;
    let rect = HyperRect::cube_around(x0, 2.0 * f0 / eps0);
    let init = initial_state(rect, x0.to_vec(), f0, cfg);
    if f0 == 0.0 {
        return Ok(SolveResult {
            point: x0.to_vec(),
            stats: stats.snapshot(),
            iterations: 0,
            eps_final: init.eps_t,
            trace: cfg.record_trace.then(|| vec![init.clone()]),
            steps: Vec::new(),
            final_rect: Some(init.rect),
            budget_exhausted: false,
        });
    }
    let out = run_loop(init, &counted, cfg, true)?;
    Ok(SolveResult {
        point: out.state.pivot.clone(),
        stats: stats.snapshot(),
        iterations: out.state.t,
        eps_final: out.state.eps_t,
        trace: out.trace,
        steps: out.steps,
        final_rect: Some(out.state.rect),
        budget_exhausted: false,
    })
}

/// Finds an `eps`-KKT point of an L-smooth function on `[0,1]^d`.
pub fn gfpt_constrained(oracle: &OracleSpec, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let d = oracle.dim;
    if d < 2 {
        return Err(Error::Precondition(format!("need d >= 2, got {d}")));
    }
    if oracle.domain != DomainKind::UnitCube {
        return Err(Error::Precondition("constrained solver needs a unit-cube oracle".into()));
    }
    let (counted, stats) = counting_oracle(oracle);
    let x0 = vec![0.5; d];
    let f0 = counted.value(&x0);
    check_value(&x0, f0, false)?;
    let init = initial_state(HyperRect::unit_cube(d), x0, f0, cfg);
    let out = run_loop(init, &counted, cfg, false)?;
    for corner in out.state.rect.corners() {
        let grad = estimate_gradient(&counted, &corner, cfg)?;
        let g = projected_gradient(&grad, &corner)?;
        if norm2(&g) <= cfg.eps {
            return Ok(SolveResult {
                point: corner,
                stats: stats.snapshot(),
                iterations: out.state.t,
                eps_final: out.state.eps_t,
                trace: out.trace,
                steps: out.steps,
                final_rect: Some(out.state.rect),
                budget_exhausted: false,
            });
        }
    }
    let mut trace = out.trace.unwrap_or_default();
    if trace.last() != Some(&out.state) {
        trace.push(out.state.clone());
    }
    Err(Error::InvariantViolation {
        message: format!("no corner of the final rectangle {:?} has projected gradient norm <= {}", out.state.rect, cfg.eps),
        trace,
    })
}

/// Projected gradient on `[0,1]^d`: components pointing out of an active face are zeroed.
pub fn projected_gradient(grad: &[f64], x: &[f64]) -> Result<Point> {
    if grad.len() != x.len() {
        return Err(Error::Precondition("gradient and point lengths differ".into()));
    }
    x.iter()
        .zip(grad)
        .map(|(&xi, &gi)| {
            if !(0.0..=1.0).contains(&xi) {
                Err(Error::Domain(format!("coordinate {xi} outside [0,1]")))
            } else if xi == 0.0 {
                Ok(gi.min(0.0))
            } else if xi == 1.0 {
                Ok(gi.max(0.0))
            } else {
                Ok(gi)
            }
        })
        .collect()
}

/// Finite-difference step `eps / (8 L sqrt(d))` used by [`estimate_gradient`].
pub fn difference_step(d: usize, cfg: &SolverConfig) -> f64 {
    cfg.eps / (8.0 * cfg.smoothness * (d as f64).sqrt())
}

/// Analytic gradient when available, otherwise per-axis differences (central in the
/// interior, one-sided at unit-cube faces) with error at most `eps / 16` for L-smooth f.
pub fn estimate_gradient(oracle: &OracleSpec, x: &[f64], cfg: &SolverConfig) -> Result<Point> {
    if let Some(g) = oracle.gradient(x) {
        return Ok(g);
    }
    let d = x.len();
    let h = difference_step(d, cfg);
    let cube = oracle.domain == DomainKind::UnitCube;
    let mut fx: Option<f64> = None;
    let mut grad = vec![0.0; d];
    let mut probe = x.to_vec();
    for i in 0..d {
        let back_ok = !cube || x[i] - h >= 0.0;
        let fwd_ok = !cube || x[i] + h <= 1.0;
        grad[i] = if back_ok && fwd_ok {
            probe[i] = x[i] + h;
            let fp = oracle.value(&probe);
            probe[i] = x[i] - h;
            let fm = oracle.value(&probe);
            (fp - fm) / (2.0 * h)
        } else {
            let f_here = *fx.get_or_insert_with(|| oracle.value(x));
            if fwd_ok {
                probe[i] = x[i] + h;
                (oracle.value(&probe) - f_here) / h
            } else {
                probe[i] = x[i] - h;
                (f_here - oracle.value(&probe)) / h
            }
        };
        probe[i] = x[i];
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite { point: x.to_vec(), value: f64::NAN });
    }
    Ok(grad)
}

/// Plain gradient descent with step `1/L`, stopping once `||grad|| <= eps`.
pub fn gradient_descent_baseline(
    oracle: &OracleSpec,
    x0: &[f64],
    eps: f64,
    smoothness: f64,
    max_iter: usize,
) -> Result<SolveResult> {
    if !oracle.has_gradient() {
        return Err(Error::Precondition("gradient descent needs an analytic gradient".into()));
    }
    if !(eps > 0.0) || !(smoothness > 0.0) {
        return Err(Error::Precondition("eps and L must be positive".into()));
    }
    let (counted, stats) = counting_oracle(oracle);
    let mut x = x0.to_vec();
    let mut iterations = 0;
    loop {
        let g = counted.gradient(&x).expect("gradient presence checked above");
        if g.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { point: x, value: f64::NAN });
        }
        let done = norm2(&g) <= eps;
        if done || iterations == max_iter {
            return Ok(SolveResult {
                point: x,
                stats: stats.snapshot(),
                iterations,
                eps_final: eps,
                trace: None,
                steps: Vec::new(),
                final_rect: None,
                budget_exhausted: !done,
            });
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= gi / smoothness;
        }
        iterations += 1;
    }
}

/// Net-size and iteration prediction for a trap run, computed from the geometry alone.
///
/// Side lengths and net sizes do not depend on the function values, only on `f(x0)`
/// (through `R_0`), so the exact value-query count of a run can be computed up front.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunPrediction {
    /// Iterations the loop will execute.
    pub iterations: usize,
    /// Value queries including the initial evaluation (constrained runs exclude the corner check).
    pub value_queries: f64,
    /// Upper bound `1 + 2 sum_t (sqrt(d) r_t / (2 delta_t))^(d-1)`.
    pub budget_bound: f64,
}

/// Predicts the query count of a run whose initial rectangle has the given side lengths.
pub fn predict_run(sides: &[f64], cfg: &SolverConfig) -> RunPrediction {
    let d = sides.len();
    let stop = cfg.stop_side(d);
    let mut sides = sides.to_vec();
    let mut t = 0usize;
    let mut queries = 1.0;
    let mut bound = 1.0;
    loop {
        let r = sides.iter().cloned().fold(0.0, f64::max);
        if !(r > stop) {
            break;
        }
        let j = sides.iter().position(|&s| s == r).unwrap_or(0);
        let delta = cfg.delta(d, r, t);
        let k = sides.iter().enumerate().filter(|&(i, &s)| i != j && s > 0.0).count() as f64;
        let per_plane: f64 = sides
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, &s)| (k.sqrt() * s / (2.0 * delta)).ceil() + 1.0)
            .product();
        queries += 2.0 * per_plane;
        bound += 2.0 * ((d as f64).sqrt() * r / (2.0 * delta)).powi(d as i32 - 1);
        sides[j] = r - r / 3.0;
        t += 1;
    }
    RunPrediction { iterations: t, value_queries: queries, budget_bound: bound }
}

/// Predicts an unconstrained run from `f(x0)`.
pub fn predict_unconstrained(d: usize, f0: f64, cfg: &SolverConfig) -> RunPrediction {
    if f0 == 0.0 {
        return RunPrediction { iterations: 0, value_queries: 1.0, budget_bound: 1.0 };
    }
    let side = 2.0 * (2.0 * f0 / (cfg.eps / 4.0));
    predict_run(&vec![side; d], cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(d: usize) -> OracleSpec {
        OracleSpec::from_fns(d, 1.0, |x| 0.5 * x.iter().map(|c| c * c).sum::<f64>(), |x| x.to_vec())
    }

    #[test]
    fn constants_follow_dimension() {
        assert_eq!(c1(4), 150.0);
        assert_eq!(c2(3), 48.0);
    }

    #[test]
    fn zero_function_returns_start() {
        let o = OracleSpec::from_fn(2, 1.0, |_| 0.0);
        let r = gfpt_unconstrained(&o, &[3.0, -1.0], &SolverConfig::new(0.1, 1.0)).unwrap();
        assert_eq!(r.point, vec![3.0, -1.0]);
        assert_eq!(r.stats.value_queries, 1);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn quadratic_reaches_stationarity() {
        let o = quadratic(2);
        let r = gfpt_unconstrained(&o, &[1.0, 1.0], &SolverConfig::new(1e-2, 1.0)).unwrap();
        assert!(norm2(&r.point) <= 1e-2, "{:?}", r.point);
    }

    #[test]
    fn negative_value_is_reported_with_point() {
        let o = OracleSpec::from_fn(2, 1.0, |x| x[0]);
        let err = gfpt_unconstrained(&o, &[1.0, 0.0], &SolverConfig::new(0.1, 1.0)).unwrap_err();
        match err {
            Error::NegativeValue { point, value } => {
                assert!(value < 0.0);
                assert_eq!(point.len(), 2);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn non_finite_value_is_an_error() {
        let o = OracleSpec::from_fn(2, 1.0, |x| if x[0] < 0.5 { f64::NAN } else { 1.0 });
        let err = gfpt_unconstrained(&o, &[1.0, 0.0], &SolverConfig::new(0.1, 1.0)).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    fn state(rect: HyperRect, pivot: Point, pivot_value: f64, cfg: &SolverConfig) -> TrapState {
        initial_state(rect, pivot, pivot_value, cfg)
    }

    #[test]
    fn centered_pivot_with_empty_sstar_removes_left_third() {
        let cfg = SolverConfig::new(0.1, 1.0);
        let o = OracleSpec::from_fn(2, 1.0, |_| 5.0);
        let s = state(HyperRect::new(vec![0.0, 0.0], vec![6.0, 6.0]).unwrap(), vec![3.0, 3.0], 1.0, &cfg);
        let (next, rep) = trap_step(&s, &o, &cfg).unwrap();
        assert!(!rep.moved);
        assert_eq!(rep.axis, 0);
        assert_eq!(next.rect.lo, vec![2.0, 0.0]);
        assert_eq!(next.rect.hi, vec![6.0, 6.0]);
        assert_eq!(next.pivot, vec![3.0, 3.0]);
    }

    #[test]
    fn improvement_on_first_plane_removes_right_third() {
        let cfg = SolverConfig::new(0.1, 1.0);
        // f(p) = p_0 + 1, pivot at the right edge.
        let o = OracleSpec::from_fn(2, 1.0, |x| x[0] + 1.0);
        let s = state(HyperRect::new(vec![0.0, 0.0], vec![6.0, 6.0]).unwrap(), vec![6.0, 3.0], 7.0, &cfg);
        let (next, rep) = trap_step(&s, &o, &cfg).unwrap();
        assert!(rep.moved);
        // Every point of E1 has value 3; the lexicographically smallest is (2, 0).
        assert_eq!(next.pivot, vec![2.0, 0.0]);
        assert_eq!(next.pivot_value, 3.0);
        assert_eq!(next.rect.hi, vec![4.0, 6.0]);
        assert_eq!(next.rect.lo, vec![0.0, 0.0]);
    }

    #[test]
    fn projected_gradient_cases() {
        assert_eq!(projected_gradient(&[1.0, 3.0], &[0.0, 0.5]).unwrap(), vec![0.0, 3.0]);
        assert_eq!(projected_gradient(&[-1.0, 3.0], &[0.0, 0.5]).unwrap(), vec![-1.0, 3.0]);
        assert_eq!(projected_gradient(&[-2.0, 2.0], &[1.0, 1.0]).unwrap(), vec![0.0, 2.0]);
        assert!(projected_gradient(&[0.0], &[1.5]).is_err());
    }

    #[test]
    fn gradient_estimates() {
        let cfg = SolverConfig::new(0.01, 1.0);
        let q = OracleSpec::from_fn(2, 1.0, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]))
            .with_domain(DomainKind::UnitCube);
        let g = estimate_gradient(&q, &[0.3, 0.4], &cfg).unwrap();
        assert!(dist2(&g, &[0.3, 0.4]) <= cfg.eps / 16.0);
        let g = estimate_gradient(&q, &[0.0, 0.0], &cfg).unwrap();
        assert!(norm2(&g) <= cfg.eps / 16.0);
        let c = OracleSpec::from_fn(2, 1.0, |_| 2.5);
        assert_eq!(estimate_gradient(&c, &[0.2, 0.2], &cfg).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn gd_examples() {
        let o = quadratic(2);
        let r = gradient_descent_baseline(&o, &[1.0, 0.0], 0.1, 1.0, 100).unwrap();
        assert_eq!(r.point, vec![0.0, 0.0]);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.stats.gradient_queries, 2);
        let r = gradient_descent_baseline(&o, &[0.0, 0.0], 0.1, 1.0, 100).unwrap();
        assert_eq!(r.stats.gradient_queries, 1);
        let slow = OracleSpec::from_fns(2, 1.0, |x| x[0], |_| vec![1.0, 0.0]);
        let r = gradient_descent_baseline(&slow, &[0.0, 0.0], 0.1, 1.0, 5).unwrap();
        assert!(r.budget_exhausted);
        assert_eq!(r.iterations, 5);
    }

    #[test]
    fn constrained_linear_function() {
        let o = OracleSpec::from_fns(2, 1.0, |x| x[0], |_| vec![1.0, 0.0]).with_domain(DomainKind::UnitCube);
        let r = gfpt_constrained(&o, &SolverConfig::new(0.1, 1.0)).unwrap();
        assert_eq!(r.point[0], 0.0);
        let g = projected_gradient(&o.gradient(&r.point).unwrap(), &r.point).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn constrained_constant_returns_first_corner() {
        let o = OracleSpec::from_fns(2, 1.0, |_| 1.0, |_| vec![0.0, 0.0]).with_domain(DomainKind::UnitCube);
        let r = gfpt_constrained(&o, &SolverConfig::new(0.1, 1.0)).unwrap();
        let rect = r.final_rect.unwrap();
        assert_eq!(r.point, rect.corners()[0]);
    }

    #[test]
    fn prediction_matches_measured_queries() {
        let o = quadratic(2);
        let cfg = SolverConfig::new(1e-2, 1.0);
        let r = gfpt_unconstrained(&o, &[1.0, 1.0], &cfg).unwrap();
        let p = predict_unconstrained(2, 1.0, &cfg);
        assert_eq!(p.iterations, r.iterations);
        assert_eq!(p.value_queries as u64, r.stats.value_queries);
        assert!(r.stats.value_queries as f64 <= p.budget_bound);
    }
}
