//! Trace invariants of the trap solver on random smooth objectives.

use flowtrap::geometry::{dist2, norm2, HyperRect};
use flowtrap::gfpt::{gfpt_constrained, gfpt_unconstrained, predict_unconstrained, projected_gradient, SolveResult, SolverConfig, TrapState};
use flowtrap::{DomainKind, OracleSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `f(x) = sum_i a_i (1 - cos(b_i x_i + c_i))`, nonnegative with smoothness `max a_i b_i^2`.
#[derive(Debug, Clone)]
struct Cosines {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl Cosines {
    fn smoothness(&self) -> f64 {
        self.a.iter().zip(&self.b).map(|(a, b)| a * b * b).fold(0.0, f64::max)
    }

    fn oracle(&self) -> OracleSpec {
        let (a, b, c) = (self.a.clone(), self.b.clone(), self.c.clone());
        let (ga, gb, gc) = (a.clone(), b.clone(), c.clone());
        OracleSpec::from_fns(
            a.len(),
            self.smoothness(),
            move |x| (0..x.len()).map(|i| a[i] * (1.0 - (b[i] * x[i] + c[i]).cos())).sum(),
            move |x| (0..x.len()).map(|i| ga[i] * gb[i] * (gb[i] * x[i] + gc[i]).sin()).collect(),
        )
    }
}

fn cosines(d: usize) -> impl Strategy<Value = Cosines> {
    (
        proptest::collection::vec(0.2..1.0f64, d),
        proptest::collection::vec(0.5..1.5f64, d),
        proptest::collection::vec(-1.0..1.0f64, d),
    )
        .prop_map(|(a, b, c)| Cosines { a, b, c })
}

/// State after iteration `t` (the next snapshot, or the final pivot and rectangle).
fn after(res: &SolveResult, trace: &[TrapState], t: usize) -> (Vec<f64>, HyperRect) {
    match trace.get(t + 1) {
        Some(s) => (s.pivot.clone(), s.rect.clone()),
        None => (res.point.clone(), res.final_rect.clone().unwrap()),
    }
}

/// A uniform point on a random facet of `rect`, skipping facets that lie on the unit cube's
/// boundary when `skip_cube_facets` is set. `None` when every facet is skipped.
fn boundary_point(rng: &mut ChaCha8Rng, rect: &HyperRect, skip_cube_facets: bool) -> Option<Vec<f64>> {
    let d = rect.lo.len();
    let facets: Vec<(usize, f64)> = (0..d)
        .flat_map(|i| [(i, rect.lo[i]), (i, rect.hi[i])])
        .filter(|&(_, c)| !(skip_cube_facets && (c == 0.0 || c == 1.0)))
        .collect();
    if facets.is_empty() {
        return None;
    }
    let (axis, c) = facets[rng.random_range(0..facets.len())];
    Some(
        (0..d)
            .map(|i| if i == axis { c } else { rect.lo[i] + rng.random::<f64>() * (rect.hi[i] - rect.lo[i]) })
            .collect(),
    )
}

fn check_trace(oracle: &OracleSpec, res: &SolveResult, cfg: &SolverConfig, constrained: bool) -> Result<(), TestCaseError> {
    let trace = res.trace.as_ref().expect("trace recorded");
    let d = oracle.dim;
    let sd = (d as f64).sqrt();
    let eps = cfg.eps;
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    prop_assert_eq!(trace[0].eps_t, eps / 4.0);
    prop_assert!(res.eps_final <= eps / 2.0, "eps_T = {}", res.eps_final);
    let r0 = trace[0].r_t;
    for (t, s) in trace.iter().enumerate().take(res.iterations) {
        if t > 0 {
            prop_assert!(s.eps_t > trace[t - 1].eps_t, "eps_t not increasing at {}", t);
        }
        let expected_r = r0 * (2.0f64 / 3.0).powi((t / d) as i32);
        prop_assert!((s.r_t - expected_r).abs() <= 1e-12 * r0, "r_{} = {} != {}", t, s.r_t, expected_r);
        prop_assert!(s.rect.contains(&s.pivot), "pivot left R_{}", t);
        prop_assert!(s.r_t >= 8.0 * sd * s.delta_t, "net not admissible at {}: r = {}, delta = {}", t, s.r_t, s.delta_t);

        let step = res.steps[t];
        let (pivot_next, rect_next) = after(res, trace, t);
        let j = step.axis;
        let plane = if rect_next.lo[j] != s.rect.lo[j] { rect_next.lo[j] } else { rect_next.hi[j] };
        let gap = (pivot_next[j] - plane).abs();
        if step.moved {
            prop_assert!((gap - s.r_t / 3.0).abs() <= 1e-9 * s.r_t, "moved pivot at distance {} != r/3", gap);
        } else {
            prop_assert!(gap >= s.r_t / 6.0 - 1e-9 * s.r_t, "kept pivot at distance {} < r/6", gap);
        }

        for _ in 0..200 {
            let Some(y) = boundary_point(&mut rng, &s.rect, constrained) else { break };
            let fy = oracle.value(&y);
            prop_assert!(
                fy > s.pivot_value - s.eps_t * dist2(&s.pivot, &y),
                "boundary point {:?} reachable at iteration {}",
                y,
                t
            );
        }
    }

    let net_total: u64 = res.steps.iter().map(|s| s.net_points).sum();
    if constrained {
        prop_assert!(res.stats.value_queries >= 1 + net_total);
    } else {
        prop_assert_eq!(res.stats.value_queries, 1 + net_total);
    }
    let budget: f64 = 1.0
        + 2.0
            * trace
                .iter()
                .take(res.iterations)
                .map(|s| (sd * s.r_t / (2.0 * s.delta_t)).powi(d as i32 - 1))
                .sum::<f64>();
    prop_assert!((net_total + 1) as f64 <= budget, "{} queries over budget {}", net_total + 1, budget);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn unconstrained_trace_invariants(f in cosines(2), x0 in proptest::collection::vec(-2.0..2.0f64, 2), eps in 0.05..0.3f64) {
        let oracle = f.oracle();
        let cfg = SolverConfig::new(eps, f.smoothness()).with_trace(true);
        let res = gfpt_unconstrained(&oracle, &x0, &cfg).unwrap();
        check_trace(&oracle, &res, &cfg, false)?;
        prop_assert!(norm2(&oracle.gradient(&res.point).unwrap()) <= eps);
        let f0 = oracle.value(&x0);
        prop_assert_eq!(predict_unconstrained(2, f0, &cfg).value_queries, res.stats.value_queries as f64);
    }

    #[test]
    fn unconstrained_trace_invariants_3d(f in cosines(3), x0 in proptest::collection::vec(-1.0..1.0f64, 3)) {
        let oracle = f.oracle();
        let cfg = SolverConfig::new(0.5, f.smoothness()).with_trace(true);
        let res = gfpt_unconstrained(&oracle, &x0, &cfg).unwrap();
        check_trace(&oracle, &res, &cfg, false)?;
        prop_assert!(norm2(&oracle.gradient(&res.point).unwrap()) <= 0.5);
    }

    #[test]
    fn constrained_trace_invariants(f in cosines(2), eps in 0.01..0.2f64) {
        let oracle = f.oracle().with_domain(DomainKind::UnitCube);
        let cfg = SolverConfig::new(eps, f.smoothness()).with_trace(true);
        let res = gfpt_constrained(&oracle, &cfg).unwrap();
        check_trace(&oracle, &res, &cfg, true)?;
        let x = &res.point;
        let g = oracle.gradient(x).unwrap();
        let projected = projected_gradient(&g, x).unwrap();
        prop_assert!(norm2(&projected) <= eps, "projected gradient {:?} at {:?}", projected, x);
    }

    #[test]
    fn runs_are_reproducible(f in cosines(2), x0 in proptest::collection::vec(-2.0..2.0f64, 2)) {
        let oracle = f.oracle();
        let serial = SolverConfig::new(0.1, f.smoothness()).with_parallel(false);
        let parallel = SolverConfig::new(0.1, f.smoothness()).with_parallel(true);
        let a = gfpt_unconstrained(&oracle, &x0, &serial).unwrap();
        let b = gfpt_unconstrained(&oracle, &x0, &parallel).unwrap();
        prop_assert_eq!(a.point, b.point);
        prop_assert_eq!(a.stats, b.stats);
        prop_assert_eq!(a.steps, b.steps);
    }
}
