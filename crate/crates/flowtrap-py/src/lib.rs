//! Python bindings: solvers on built-in families or Python callables, ITER instances, the
//! hard function, the adversary and the LocalOpt reduction.
//!
//! Structured results are returned as plain Python dicts built from the crate's serde
//! representations.

use std::sync::{Arc, Mutex};

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::Serialize;

use flowtrap::bench::{run_solver, sweep as run_sweep, SolverId};
use flowtrap::families::{build_family, FamilyId};
use flowtrap::gfpt::{gfpt_constrained, gfpt_unconstrained, SolverConfig};
use flowtrap::hardfn::{
    follow_path, iter_solutions_bruteforce, verify_no_spurious, AdversarialIter, HardFunction as CoreHard,
    IterInstance as CoreIter,
};
use flowtrap::oracle::{DomainKind, OracleSpec};
use flowtrap::plsred::{build_localopt, reduce as run_reduce, step_bound};
use flowtrap::Error;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Precondition(_) | Error::Parse { .. } | Error::InvalidIter(_) | Error::Domain(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Converts a serializable value to Python objects through the `json` module.
fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_family(name: &str) -> PyResult<FamilyId> {
    name.parse().map_err(to_py_err)
}

#[derive(Serialize)]
struct SolveSummary {
    point: Vec<f64>,
    grad_norm: f64,
    value_queries: u64,
    gradient_queries: u64,
    iterations: usize,
    eps_final: f64,
}

/// Runs one solver on a built-in family. `mode` is `unconstrained`, `constrained` or `gd`.
#[pyfunction]
#[pyo3(signature = (family, eps, d = 2, mode = "unconstrained", smoothness = None, x0 = None))]
fn solve<'py>(
    py: Python<'py>,
    family: &str,
    eps: f64,
    d: usize,
    mode: &str,
    smoothness: Option<f64>,
    x0: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let family = parse_family(family)?;
    let solver: SolverId = mode.parse().map_err(to_py_err)?;
    let out = py
        .detach(|| {
            let mut fam = build_family(family, d, eps)?;
            if let Some(l) = smoothness {
                fam.oracle = fam.oracle.with_smoothness(l);
            }
            run_solver(solver, &fam.oracle, x0.as_deref().unwrap_or(&fam.x0), eps)
        })
        .map_err(to_py_err)?;
    let r = out.result;
    let summary = SolveSummary {
        point: r.point,
        grad_norm: out.grad_norm,
        value_queries: r.stats.value_queries,
        gradient_queries: r.stats.gradient_queries,
        iterations: r.iterations,
        eps_final: r.eps_final,
    };
    to_py(py, &summary)
}

/// Runs the trap solver on a Python callable `f(list[float]) -> float`.
///
/// Unconstrained runs start at `x0` and need `f >= 0`; constrained runs search `[0,1]^dim`.
/// An exception raised by `f` aborts the run and is re-raised.
#[pyfunction]
#[pyo3(signature = (f, eps, smoothness, x0 = None, dim = None, constrained = false))]
fn minimize<'py>(
    py: Python<'py>,
    f: Py<PyAny>,
    eps: f64,
    smoothness: f64,
    x0: Option<Vec<f64>>,
    dim: Option<usize>,
    constrained: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let d = match (&x0, dim) {
        (Some(x), Some(k)) if x.len() != k => {
            return Err(PyValueError::new_err(format!("x0 has {} entries but dim = {k}", x.len())))
        }
        (Some(x), _) => x.len(),
        (None, Some(k)) => k,
        (None, None) => return Err(PyValueError::new_err("pass x0 or dim")),
    };
    if !constrained && x0.is_none() {
        return Err(PyValueError::new_err("unconstrained runs need x0"));
    }
    let failure: Arc<Mutex<Option<PyErr>>> = Arc::default();
    let sink = failure.clone();
    let oracle = OracleSpec::from_fn(d, smoothness, move |x| {
        Python::attach(|py| match f.call1(py, (x.to_vec(),)).and_then(|v| v.extract::<f64>(py)) {
            Ok(v) => v,
            Err(e) => {
                sink.lock().unwrap().get_or_insert(e);
                f64::NAN
            }
        })
    });
    let cfg = SolverConfig::new(eps, smoothness).with_parallel(false);
    let result = py.detach(|| {
        if constrained {
            gfpt_constrained(&oracle.with_domain(DomainKind::UnitCube), &cfg)
        } else {
            gfpt_unconstrained(&oracle, x0.as_deref().unwrap_or_default(), &cfg)
        }
    });
    if let Some(e) = failure.lock().unwrap().take() {
        return Err(e);
    }
    let r = result.map_err(to_py_err)?;
    #[derive(Serialize)]
    struct Summary {
        point: Vec<f64>,
        value_queries: u64,
        iterations: usize,
        eps_final: f64,
    }
    to_py(py, &Summary { point: r.point, value_queries: r.stats.value_queries, iterations: r.iterations, eps_final: r.eps_final })
}

/// Sweeps `eps` on a family and fits the log-log slope of total queries against `1/eps`.
#[pyfunction]
#[pyo3(signature = (solver, family, eps, d = 2))]
fn sweep<'py>(py: Python<'py>, solver: &str, family: &str, eps: Vec<f64>, d: usize) -> PyResult<Bound<'py, PyAny>> {
    let solver: SolverId = solver.parse().map_err(to_py_err)?;
    let family = parse_family(family)?;
    let res = py.detach(|| run_sweep(solver, family, d, &eps)).map_err(to_py_err)?;
    to_py(py, &res)
}

/// Runs the LocalOpt reduction from the origin and maps its solution back.
#[pyfunction]
#[pyo3(signature = (family, eps, d = 2, smoothness = None, bound = None))]
fn reduce<'py>(
    py: Python<'py>,
    family: &str,
    eps: f64,
    d: usize,
    smoothness: Option<f64>,
    bound: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let family = parse_family(family)?;
    let (steps, outcome) = py
        .detach(|| {
            let mut fam = build_family(family, d, eps)?;
            if let Some(l) = smoothness {
                fam.oracle = fam.oracle.with_smoothness(l);
            }
            if let Some(b) = bound {
                fam.oracle = fam.oracle.with_bound(b);
            }
            let inst = build_localopt(&fam.oracle, eps)?;
            run_reduce(&inst, step_bound(&inst)).map(|(run, outcome)| (run.steps, outcome))
        })
        .map_err(to_py_err)?;
    to_py(py, &serde_json::json!({ "steps": steps, "outcome": outcome }))
}

/// Plays the path-following solver against the adaptive adversary on `2^n` nodes.
#[pyfunction]
fn adversary_demo<'py>(py: Python<'py>, n: u32) -> PyResult<Bound<'py, PyAny>> {
    let mut adv = AdversarialIter::new(n).map_err(to_py_err)?;
    let (solution, queries) = py.detach(|| follow_path(&mut adv));
    let inst = adv.extend_to_instance().map_err(to_py_err)?;
    let consistent = adv.transcript().iter().all(|&(v, c)| inst.succ(v) == c);
    to_py(py, &serde_json::json!({ "n": n, "queries": queries, "solution": solution, "consistent_extension": consistent }))
}

/// A successor table on `[1..2^n]` with `C(1) > 1`.
#[pyclass(name = "IterInstance", frozen)]
struct PyIter {
    inner: CoreIter,
}

#[pymethods]
impl PyIter {
    /// Builds an instance from `succ`, where `succ[v - 1] = C(v)`.
    #[new]
    fn new(n: u32, succ: Vec<u32>) -> PyResult<Self> {
        Ok(Self { inner: CoreIter::new(n, succ).map_err(to_py_err)? })
    }

    /// Parses the text format: `n` on the first line, then `v C(v)` per line.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self { inner: CoreIter::parse(text).map_err(to_py_err)? })
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.n()
    }

    /// `C(v)`.
    fn succ(&self, v: u32) -> PyResult<u32> {
        if v < 1 || v > self.inner.size() {
            return Err(PyValueError::new_err(format!("node {v} outside [1, {}]", self.inner.size())));
        }
        Ok(self.inner.succ(v))
    }

    /// All solutions found by exhaustive search.
    fn solutions<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &iter_solutions_bruteforce(&self.inner))
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!("IterInstance(n={})", self.inner.n())
    }
}

/// The periodic bicubic hard function of an ITER instance.
#[pyclass(name = "HardFunction", frozen)]
struct PyHard {
    inner: Arc<CoreHard>,
}

#[pymethods]
impl PyHard {
    /// `normalize` divides values by the period `M`.
    #[new]
    #[pyo3(signature = (instance, normalize = true))]
    fn new(instance: &PyIter, normalize: bool) -> Self {
        Self { inner: Arc::new(CoreHard::new(instance.inner.clone(), normalize)) }
    }

    /// Period `M` of the function.
    #[getter]
    fn period(&self) -> i64 {
        self.inner.params().m
    }

    /// Value at `(x, y)`.
    fn value(&self, x: f64, y: f64) -> f64 {
        self.inner.value(x, y)
    }

    /// `(value, (df/dx, df/dy))` at `(x, y)`.
    fn value_grad(&self, x: f64, y: f64) -> (f64, (f64, f64)) {
        let (v, g) = self.inner.eval(x, y);
        (v, (g[0], g[1]))
    }

    /// The ITER solution encoded by the solution box containing `(x, y)`, if any.
    fn decode<'py>(&self, py: Python<'py>, x: f64, y: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.decode_point(x, y))
    }

    /// Certified value range, Hessian bound and largest coefficient (unnormalized).
    fn certify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let hf = self.inner.clone();
        let bounds = py.detach(move || hf.certify());
        to_py(py, &bounds)
    }

    /// Searches for near-stationary points outside the solution boxes.
    #[pyo3(signature = (step = 0.05))]
    fn verify<'py>(&self, py: Python<'py>, step: f64) -> PyResult<Bound<'py, PyAny>> {
        let hf = self.inner.clone();
        let report = py.detach(move || verify_no_spurious(&hf, step)).map_err(to_py_err)?;
        to_py(py, &report)
    }
}

#[pymodule]
fn flowtrap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(adversary_demo, m)?)?;
    m.add_class::<PyIter>()?;
    m.add_class::<PyHard>()?;
    Ok(())
}
