//! The periodic hard function: lazily memoized bicubic cells tiled with period M.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use super::bicubic::{bicubic_coeffs, hessian_norm_bound, CellCoeffs};
use super::iter::{IterInstance, IterSolution};
use super::layout::{GridCorner, Layout, MediumBox};
use super::params::HardParams;
use crate::error::{Error, Result};
use crate::oracle::{Objective, OracleSpec};

/// Largest number of cells stored in the dense table; bigger tiles use a sharded map.
const DENSE_LIMIT: i64 = 1 << 18;
const SHARDS: usize = 64;

enum Memo {
    Dense(Vec<OnceLock<CellCoeffs>>),
    Sharded(Vec<RwLock<HashMap<(i64, i64), CellCoeffs>>>),
}

/// A hard instance: geometry, ITER table and the memoized cell coefficients.
pub struct HardFunction {
    params: HardParams,
    inst: IterInstance,
    omit_connector: Option<u32>,
    memo: Memo,
}

impl std::fmt::Debug for HardFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HardFunction")
            .field("params", &self.params)
            .field("omit_connector", &self.omit_connector)
            .finish()
    }
}

/// Certified ranges over the whole tile, in unnormalized units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardBounds {
    pub value_min: f64,
    pub value_max: f64,
    /// Bound on the spectral norm of the Hessian, a valid smoothness constant.
    pub hessian: f64,
    /// Largest `|a_ij|` over all cells.
    pub max_coeff: f64,
}

impl HardFunction {
    /// Hard function for `inst`; `normalize` divides values and gradients by M.
    pub fn new(inst: IterInstance, normalize: bool) -> Self {
        let params = HardParams::for_width(inst.n(), normalize);
        Self::with_params(params, inst)
    }

    /// Hard function with explicit geometry (the width must match the instance).
    pub fn with_params(params: HardParams, inst: IterInstance) -> Self {
        let cells = params.m * params.m;
        let memo = if cells <= DENSE_LIMIT {
            Memo::Dense((0..cells).map(|_| OnceLock::new()).collect())
        } else {
            Memo::Sharded((0..SHARDS).map(|_| RwLock::new(HashMap::new())).collect())
        };
        Self { params, inst, omit_connector: None, memo }
    }

    /// Same function with the connector of node `u` removed (negative control).
    pub fn omitting_connector(mut self, u: u32) -> Self {
        self.omit_connector = Some(u);
        let cells = self.params.m * self.params.m;
        if let Memo::Dense(_) = self.memo {
            self.memo = Memo::Dense((0..cells).map(|_| OnceLock::new()).collect());
        } else {
            self.memo = Memo::Sharded((0..SHARDS).map(|_| RwLock::new(HashMap::new())).collect());
        }
        self
    }

    /// Geometry.
    pub fn params(&self) -> &HardParams {
        &self.params
    }

    /// The encoded instance.
    pub fn instance(&self) -> &IterInstance {
        &self.inst
    }

    /// The lattice layout.
    pub fn layout(&self) -> Layout<'_> {
        let l = Layout::new(self.params, &self.inst);
        match self.omit_connector {
            Some(u) => l.omitting_connector(u),
            None => l,
        }
    }

    /// Unnormalized corner data at lattice point `(a, b)` of the tile.
    pub fn corner(&self, a: i64, b: i64) -> GridCorner {
        self.layout().corner(a, b)
    }

    fn compute_cell(&self, i: i64, j: i64) -> CellCoeffs {
        let l = self.layout();
        bicubic_coeffs(&[[l.corner(i, j), l.corner(i, j + 1)], [l.corner(i + 1, j), l.corner(i + 1, j + 1)]])
    }

    /// Unnormalized coefficients of cell `(i, j)`, `0 <= i, j < M`.
    pub fn cell(&self, i: i64, j: i64) -> CellCoeffs {
        let m = self.params.m;
        debug_assert!((0..m).contains(&i) && (0..m).contains(&j));
        match &self.memo {
            Memo::Dense(v) => *v[(i * m + j) as usize].get_or_init(|| self.compute_cell(i, j)),
            Memo::Sharded(shards) => {
                let shard = &shards[((i * 31 + j) as usize) % SHARDS];
                if let Some(c) = shard.read().expect("memo lock poisoned").get(&(i, j)) {
                    return *c;
                }
                let c = self.compute_cell(i, j);
                // Concurrent writers compute identical coefficients, so either insert wins.
                shard.write().expect("memo lock poisoned").insert((i, j), c);
                c
            }
        }
    }

    fn reduce(&self, x: f64, y: f64) -> (i64, i64, f64, f64) {
        let m = self.params.m;
        let mf = m as f64;
        let (xr, yr) = (wrap(x, mf), wrap(y, mf));
        // Truncation equals floor here because both coordinates are nonnegative.
        let i = (xr as i64).clamp(0, m - 1);
        let j = (yr as i64).clamp(0, m - 1);
        (i, j, xr - i as f64, yr - j as f64)
    }

    /// Unnormalized value and gradient at `(x, y)`.
    pub fn eval_raw(&self, x: f64, y: f64) -> (f64, [f64; 2]) {
        let (i, j, u, v) = self.reduce(x, y);
        self.cell(i, j).value_grad(u, v)
    }

    /// Value and gradient at `(x, y)`, divided by M when the instance is normalized.
    pub fn eval(&self, x: f64, y: f64) -> (f64, [f64; 2]) {
        let (v, g) = self.eval_raw(x, y);
        if self.params.normalize {
            let m = self.params.m as f64;
            (v / m, [g[0] / m, g[1] / m])
        } else {
            (v, g)
        }
    }

    /// Value only (normalized when requested).
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let (i, j, u, v) = self.reduce(x, y);
        let val = self.cell(i, j).value(u, v);
        if self.params.normalize {
            val / self.params.m as f64
        } else {
            val
        }
    }

    /// Certified value range and Hessian bound over the tile (unnormalized). Cells sharing
    /// the same coefficients up to the constant term share the Hessian certificate.
    pub fn certify(&self) -> HardBounds {
        let m = self.params.m;
        let mut seen: HashMap<[u64; 15], f64> = HashMap::new();
        let mut out = HardBounds {
            value_min: f64::INFINITY,
            value_max: f64::NEG_INFINITY,
            hessian: 0.0,
            max_coeff: 0.0,
        };
        for i in 0..m {
            for j in 0..m {
                let c = self.cell(i, j);
                let (lo, hi) = c.poly().range();
                out.value_min = out.value_min.min(lo);
                out.value_max = out.value_max.max(hi);
                out.max_coeff = out.max_coeff.max(c.max_abs());
                let mut key = [0u64; 15];
                for (k, v) in c.a.iter().flatten().skip(1).enumerate() {
                    key[k] = v.to_bits();
                }
                let h = *seen.entry(key).or_insert_with(|| hessian_norm_bound(&c, 8));
                out.hessian = out.hessian.max(h);
            }
        }
        let slack = 1e-9 * out.value_min.abs().max(out.value_max.abs()).max(1.0);
        out.value_min -= slack;
        out.value_max += slack;
        out
    }

    /// Medium box holding `(x, y)` after reduction mod M.
    pub fn medium_box(&self, x: f64, y: f64) -> Option<MediumBox> {
        let mf = self.params.m as f64;
        self.layout().medium_box(wrap(x, mf), wrap(y, mf))
    }

    /// ITER solution revealed by a near-stationary point: the point must sit in a diagonal
    /// medium box `Q(u, u)` of either PLS box whose line ends there.
    pub fn decode_point(&self, x: f64, y: f64) -> Option<IterSolution> {
        let mb = self.medium_box(x, y)?;
        if mb.i != mb.j {
            return None;
        }
        let v = self.layout().decode_dead_end(mb.i as u32)?;
        self.inst.solution_kind(v).map(|kind| IterSolution { v, kind })
    }

    /// Writes `x,y,value,gx,gy` rows over `[0, M]^2` at spacing `step`.
    pub fn export_csv<W: Write>(&self, out: W, step: f64) -> Result<u64> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Precondition(format!("export step must be positive, got {step}")));
        }
        let mf = self.params.m as f64;
        let count = (mf / step).floor() as u64 + 1;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "value", "gx", "gy"])?;
        let mut rows = 0;
        for ix in 0..count {
            for iy in 0..count {
                let (x, y) = (ix as f64 * step, iy as f64 * step);
                let (v, g) = self.eval(x, y);
                w.write_record(&[x.to_string(), y.to_string(), v.to_string(), g[0].to_string(), g[1].to_string()])?;
                rows += 1;
            }
        }
        w.flush()?;
        Ok(rows)
    }
}

/// Floor through integer truncation, avoiding a libm call on targets without a
/// rounding instruction. Valid for `|x| < 2^62`.
#[inline]
fn fast_floor(x: f64) -> f64 {
    let t = x as i64 as f64;
    if t > x {
        t - 1.0
    } else {
        t
    }
}

/// Reduces `x` into `[0, period)`; a floor-based variant of `rem_euclid`, which is
/// noticeably slower on the evaluation hot path.
#[inline]
fn wrap(x: f64, period: f64) -> f64 {
    if x >= 0.0 && x < period {
        return x;
    }
    let r = x - fast_floor(x / period) * period;
    if r >= period {
        r - period
    } else if r < 0.0 {
        r + period
    } else {
        r
    }
}

/// Value and gradient of the hard function at a two-dimensional point.
pub fn eval_hard(hf: &HardFunction, p: &[f64]) -> Result<(f64, [f64; 2])> {
    if p.len() != 2 {
        return Err(Error::Domain(format!("hard function is two-dimensional, got a point of dimension {}", p.len())));
    }
    Ok(hf.eval(p[0], p[1]))
}

/// The normalized hard function shifted by a certified lower bound so that it is
/// nonnegative, exposed as a query oracle.
struct ShiftedHard {
    hf: Arc<HardFunction>,
    shift: f64,
}

impl Objective for ShiftedHard {
    fn value(&self, x: &[f64]) -> f64 {
        self.hf.value(x[0], x[1]) - self.shift
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let (_, g) = self.hf.eval(x[0], x[1]);
        Some(g.to_vec())
    }

    fn has_gradient(&self) -> bool {
        true
    }
}

/// Oracle for the hard function (in its own units) shifted to be nonnegative, with the
/// certified Hessian bound as smoothness constant and the value spread as bound B.
pub fn hard_oracle(hf: Arc<HardFunction>) -> (OracleSpec, HardBounds) {
    let bounds = hf.certify();
    let scale = if hf.params().normalize { hf.params().m as f64 } else { 1.0 };
    let shift = bounds.value_min / scale;
    let lip = bounds.hessian / scale;
    let spread = (bounds.value_max - bounds.value_min) / scale;
    let obj = ShiftedHard { hf, shift };
    (OracleSpec::new(2, lip, Arc::new(obj)).with_bound(spread), bounds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst() -> IterInstance {
        IterInstance::new(2, vec![2, 3, 3, 4]).unwrap()
    }

    #[test]
    fn lattice_points_reproduce_corner_data() {
        let hf = HardFunction::new(inst(), false);
        let m = hf.params().m;
        for a in (0..m).step_by(3) {
            for b in (0..m).step_by(5) {
                let c = hf.corner(a, b);
                let (v, g) = hf.eval(a as f64, b as f64);
                assert_eq!(v, c.value, "({a},{b})");
                assert_eq!(g, c.grad, "({a},{b})");
            }
        }
    }

    #[test]
    fn periodic_and_normalized() {
        let raw = HardFunction::new(inst(), false);
        let nrm = HardFunction::new(inst(), true);
        let m = raw.params().m as f64;
        for k in 0..200 {
            let (x, y) = (k as f64 * 0.731 + 0.1, k as f64 * 1.313 + 0.05);
            let (v, g) = raw.eval(x, y);
            let (v2, g2) = raw.eval(x + m, y - 2.0 * m);
            assert!((v - v2).abs() < 1e-9 * m && (g[0] - g2[0]).abs() < 1e-9 && (g[1] - g2[1]).abs() < 1e-9);
            let (vn, gn) = nrm.eval(x, y);
            assert!((vn - v / m).abs() < 1e-12 && (gn[0] - g[0] / m).abs() < 1e-12);
        }
    }

    #[test]
    fn certified_bounds_are_sane() {
        let hf = HardFunction::new(inst(), false);
        let b = hf.certify();
        let m = hf.params().m as f64;
        assert!(b.value_min >= -(1 << 14) as f64 * m && b.value_max <= (1 << 14) as f64 * m);
        assert!(b.max_coeff <= 1024.0 * m);
        assert!(b.hessian > 0.0 && b.hessian <= (1 << 18) as f64 * m);
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let hf = HardFunction::new(IterInstance::new(1, vec![2, 2]).unwrap(), true);
        let mut buf = Vec::new();
        let rows = hf.export_csv(&mut buf, 5.0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,y,value,gx,gy\n"));
        assert_eq!(text.lines().count() as u64, rows + 1);
        assert!(eval_hard(&hf, &[1.0]).is_err());
    }
}
