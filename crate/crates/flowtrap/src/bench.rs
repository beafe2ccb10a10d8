//! Accuracy sweeps: run a solver on a family for a list of tolerances, record query
//! counts and fit the log-log slope of queries against `1/eps`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{build_family, FamilyId};
use crate::geometry::{norm2, Point};
use crate::gfpt::{
    estimate_gradient, gfpt_constrained, gfpt_unconstrained, gradient_descent_baseline, projected_gradient,
    SolveResult, SolverConfig,
};
use crate::oracle::{DomainKind, OracleSpec};

/// Solver selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverId {
    GfptUnconstrained,
    GfptConstrained,
    GradientDescent,
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverId::GfptUnconstrained => "gfpt-unconstrained",
            SolverId::GfptConstrained => "gfpt-constrained",
            SolverId::GradientDescent => "gd",
        })
    }
}

impl FromStr for SolverId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gfpt-unconstrained" | "unconstrained" => Ok(SolverId::GfptUnconstrained),
            "gfpt-constrained" | "constrained" => Ok(SolverId::GfptConstrained),
            "gd" | "gradient-descent" => Ok(SolverId::GradientDescent),
            _ => Err(Error::Precondition(format!(
                "unknown solver '{s}' (expected gfpt-unconstrained, gfpt-constrained or gd)"
            ))),
        }
    }
}

/// Iteration cap for the gradient-descent baseline.
pub const GD_MAX_ITER: usize = 200_000_000;

/// One solver run and its verified output.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: SolveResult,
    /// Gradient norm at the output (projected on the unit cube for constrained runs).
    pub grad_norm: f64,
    pub wall_ms: f64,
}

/// Gradient norm used to check a solver's output: analytic when available, otherwise
/// a finite-difference estimate; projected on the unit cube for constrained oracles.
pub fn output_grad_norm(oracle: &OracleSpec, x: &[f64], eps: f64) -> Result<f64> {
    let g = match oracle.gradient(x) {
        Some(g) => g,
        None => estimate_gradient(oracle, x, &SolverConfig::new(eps, oracle.smoothness))?,
    };
    if oracle.domain == DomainKind::UnitCube {
        Ok(norm2(&projected_gradient(&g, x)?))
    } else {
        Ok(norm2(&g))
    }
}

/// Runs `solver` on `oracle` from `x0` (ignored by the constrained solver).
pub fn run_solver(solver: SolverId, oracle: &OracleSpec, x0: &[f64], eps: f64) -> Result<RunOutcome> {
    let start = Instant::now();
    let cfg = SolverConfig::new(eps, oracle.smoothness);
    let result = match solver {
        SolverId::GfptUnconstrained => gfpt_unconstrained(oracle, x0, &cfg)?,
        SolverId::GfptConstrained => gfpt_constrained(oracle, &cfg)?,
        SolverId::GradientDescent => {
            let r = gradient_descent_baseline(oracle, x0, eps, oracle.smoothness, GD_MAX_ITER)?;
            if r.budget_exhausted {
                return Err(Error::BudgetExceeded(format!("gradient descent hit {GD_MAX_ITER} iterations at eps = {eps}")));
            }
            r
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let grad_norm = output_grad_norm(oracle, &result.point, eps)?;
    Ok(RunOutcome { result, grad_norm, wall_ms })
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub value_queries: u64,
    pub gradient_queries: u64,
    pub grad_norm: f64,
    pub wall_ms: f64,
    pub point: Point,
}

impl SweepRow {
    /// Oracle calls of both kinds.
    pub fn total_queries(&self) -> u64 {
        self.value_queries + self.gradient_queries
    }
}

/// Rows sorted by decreasing eps and the fitted exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub solver: SolverId,
    pub family: String,
    pub slope: f64,
    pub slope_ci: f64,
    pub rows: Vec<SweepRow>,
}

/// Ordinary least squares of `ys` on `xs`: returns the slope and its standard error.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::Precondition("slope fit needs at least two paired points".into()));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition("slope fit needs distinct abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let se = if n > 2 {
        let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, se))
}

/// Checks the sweep precondition: at least four tolerances spanning two decades.
pub fn check_eps_list(eps_list: &[f64]) -> Result<()> {
    if eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::Precondition("every eps must be positive and finite".into()));
    }
    let lo = eps_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eps_list.iter().cloned().fold(0.0, f64::max);
    if eps_list.len() < 4 || hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "a sweep needs >= 4 eps values spanning >= 2 decades (got {} values, ratio {:.3})",
            eps_list.len(),
            hi / lo
        )));
    }
    Ok(())
}

/// Runs `solver` on family `family` (dimension `d`) for every eps, in parallel, and fits
/// `log Q` against `log(1/eps)`. A row whose output gradient norm exceeds its eps aborts
/// the sweep.
pub fn sweep(solver: SolverId, family: FamilyId, d: usize, eps_list: &[f64]) -> Result<SweepResult> {
    check_eps_list(eps_list)?;
    let mut rows = eps_list
        .par_iter()
        .map(|&eps| {
            let fam = build_family(family, d, eps)?;
            let out = run_solver(solver, &fam.oracle, &fam.x0, eps)?;
            if !(out.grad_norm <= eps) {
                return Err(Error::SweepRow { eps, grad_norm: out.grad_norm });
            }
            Ok(SweepRow {
                eps,
                value_queries: out.result.stats.value_queries,
                gradient_queries: out.result.stats.gradient_queries,
                grad_norm: out.grad_norm,
                wall_ms: out.wall_ms,
                point: out.result.point,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let xs: Vec<f64> = rows.iter().map(|r| (1.0 / r.eps).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| (r.total_queries() as f64).ln()).collect();
    let (slope, slope_ci) = fit_slope(&xs, &ys)?;
    Ok(SweepResult { solver, family: family.to_string(), slope, slope_ci, rows })
}

impl SweepResult {
    /// CSV with header `eps,value_queries,gradient_queries,grad_norm,wall_ms`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eps", "value_queries", "gradient_queries", "grad_norm", "wall_ms"])?;
        for r in &self.rows {
            w.write_record(&[
                r.eps.to_string(),
                r.value_queries.to_string(),
                r.gradient_queries.to_string(),
                r.grad_norm.to_string(),
                format!("{:.3}", r.wall_ms),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON summary `{solver, family, slope, slope_ci, rows}`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
