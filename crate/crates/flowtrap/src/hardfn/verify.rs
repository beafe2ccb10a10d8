//! Numerical self-verification of the hard function: no near-stationary point away from
//! the diagonal medium boxes that encode ITER solutions.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bicubic::{bicubic_coeffs, certify_gradient_floor, minimize_grad_norm, CellCoeffs};
use super::function::HardFunction;
use super::iter::iter_solutions_bruteforce;
use super::layout::{GridCorner, MediumBox};
use crate::error::{Error, Result};

/// Gradient norm below which a point counts as near-stationary (unnormalized units).
pub const STATIONARY_THRESHOLD: f64 = 0.01;

/// Depth of the per-cell branch and bound.
const CERT_DEPTH: u32 = 8;

/// Largest width accepted by [`verify_no_spurious`].
pub const MAX_VERIFY_WIDTH: u32 = 4;

/// A point with small gradient and where it sits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowPoint {
    pub x: f64,
    pub y: f64,
    pub grad_norm: f64,
    pub medium_box: Option<MediumBox>,
    /// ITER solution decoded from the medium box, when it is an allowed location.
    pub decoded: Option<u32>,
}

/// Result of [`verify_no_spurious`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpuriousReport {
    pub n: u32,
    pub m: i64,
    pub grid_step: f64,
    pub samples: u64,
    pub cells: u64,
    /// Cells proven free of gradients below the threshold.
    pub certified_cells: u64,
    /// Cells where the proof did not close (they hold the allowed stationary regions).
    pub uncertified_cells: u64,
    /// Smallest gradient norm observed outside allowed boxes (samples and local searches).
    pub min_grad_outside: f64,
    /// Number of grid samples below the threshold.
    pub low_sample_count: u64,
    /// Grid samples below the threshold (at most a few thousand are kept).
    pub low_samples: Vec<LowPoint>,
    /// Local minima of the gradient norm below the threshold found by Newton refinement.
    pub refined: Vec<LowPoint>,
    /// Near-stationary points outside every allowed box.
    pub offenders: Vec<LowPoint>,
    /// Uncertified regions outside allowed boxes where no small gradient was found.
    pub unresolved: Vec<(f64, f64, f64)>,
    /// ITER solutions decoded from near-stationary points, ascending.
    pub decoded_solutions: Vec<u32>,
    /// Brute-force solutions of the instance, ascending.
    pub expected_solutions: Vec<u32>,
    /// Diagonal indices u with near-stationary points in box A.
    pub hits_box_a: Vec<i64>,
    /// Diagonal indices u with near-stationary points in box B.
    pub hits_box_b: Vec<i64>,
}

impl SpuriousReport {
    /// No offenders and every decoded node is a true solution.
    pub fn passed(&self) -> bool {
        self.offenders.is_empty() && self.decoded_solutions.iter().all(|v| self.expected_solutions.contains(v))
    }
}

const KEEP_LOW: usize = 4096;

fn classify(hf: &HardFunction, x: f64, y: f64, grad_norm: f64) -> LowPoint {
    LowPoint { x, y, grad_norm, medium_box: hf.medium_box(x, y), decoded: hf.decode_point(x, y).map(|s| s.v) }
}

fn coeff_key(c: &CellCoeffs) -> [u64; 15] {
    let mut key = [0u64; 15];
    for (k, v) in c.a.iter().flatten().skip(1).enumerate() {
        key[k] = v.to_bits();
    }
    key
}

struct GroupResult {
    uncertified: Vec<(f64, f64, f64)>,
    /// Best local minimum `(u, v, norm)` per uncertified leaf.
    minima: Vec<(f64, f64, f64)>,
}

fn analyse_pattern(c: &CellCoeffs) -> GroupResult {
    let cert = certify_gradient_floor(c, STATIONARY_THRESHOLD, CERT_DEPTH);
    let minima = cert
        .uncertified
        .iter()
        .map(|&(x0, y0, h)| {
            let mut best = ([x0, y0], f64::INFINITY);
            for s in [[0.5, 0.5], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
                let (p, nrm) = minimize_grad_norm(c, [x0 + s[0] * h, y0 + s[1] * h], 60);
                if nrm < best.1 {
                    best = (p, nrm);
                }
            }
            (best.0[0], best.0[1], best.1)
        })
        .collect();
    GroupResult { uncertified: cert.uncertified, minima }
}

/// Certifies every cell of the tile by branch and bound, refines the uncertified parts with
/// Newton's method, and samples `||grad||` on a grid of spacing `grid_step` over `[0, M]^2`.
/// Every point with gradient norm below 0.01 must lie in a diagonal medium box whose
/// decoded node is an ITER solution; violations are listed as offenders.
pub fn verify_no_spurious(hf: &HardFunction, grid_step: f64) -> Result<SpuriousReport> {
    let p = *hf.params();
    if p.n > MAX_VERIFY_WIDTH {
        return Err(Error::Precondition(format!("verification supports n <= {MAX_VERIFY_WIDTH}, got {}", p.n)));
    }
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::Precondition(format!("grid step must be positive, got {grid_step}")));
    }
    let m = p.m;
    let mf = m as f64;

    // Cell certification, shared among cells whose gradients coincide.
    let mut groups: HashMap<[u64; 15], (CellCoeffs, Vec<(i64, i64)>)> = HashMap::new();
    for i in 0..m {
        for j in 0..m {
            let c = hf.cell(i, j);
            groups.entry(coeff_key(&c)).or_insert_with(|| (c, Vec::new())).1.push((i, j));
        }
    }
    let groups: Vec<_> = groups.into_values().collect();
    let results: Vec<GroupResult> = groups.par_iter().map(|(c, _)| analyse_pattern(c)).collect();

    let mut certified_cells = 0u64;
    let mut uncertified_cells = 0u64;
    let mut refined = Vec::new();
    let mut offenders = Vec::new();
    let mut unresolved = Vec::new();
    let mut min_outside = f64::INFINITY;
    for ((_, cells), res) in groups.iter().zip(&results) {
        if res.uncertified.is_empty() {
            certified_cells += cells.len() as u64;
            continue;
        }
        uncertified_cells += cells.len() as u64;
        for &(i, j) in cells {
            for (&(x0, y0, h), &(u, v, nrm)) in res.uncertified.iter().zip(&res.minima) {
                let (gx, gy) = (i as f64 + u, j as f64 + v);
                let lp = classify(hf, gx, gy, nrm);
                let leaf_allowed = hf.decode_point(i as f64 + x0 + h / 2.0, j as f64 + y0 + h / 2.0).is_some();
                if nrm < STATIONARY_THRESHOLD {
                    if lp.decoded.is_none() {
                        offenders.push(lp.clone());
                    }
                    refined.push(lp);
                } else if !leaf_allowed {
                    min_outside = min_outside.min(nrm);
                    unresolved.push((i as f64 + x0, j as f64 + y0, h));
                }
            }
        }
    }

    // Grid sampling, one row of samples per task.
    let count = (mf / grid_step).floor() as u64 + 1;
    let rows: Vec<(u64, f64, Vec<LowPoint>)> = (0..count)
        .into_par_iter()
        .map(|ix| {
            let x = ix as f64 * grid_step;
            let mut low = 0u64;
            let mut min_out = f64::INFINITY;
            let mut pts = Vec::new();
            for iy in 0..count {
                let y = iy as f64 * grid_step;
                let (_, g) = hf.eval_raw(x, y);
                let nrm = g[0].hypot(g[1]);
                let allowed = || hf.decode_point(x, y).is_some();
                if nrm < STATIONARY_THRESHOLD {
                    low += 1;
                    pts.push(classify(hf, x, y, nrm));
                } else if nrm < min_out && !allowed() {
                    min_out = nrm;
                }
            }
            (low, min_out, pts)
        })
        .collect();
    let mut low_sample_count = 0;
    let mut low_samples = Vec::new();
    for (low, min_out, pts) in rows {
        low_sample_count += low;
        min_outside = min_outside.min(min_out);
        for lp in pts {
            if lp.decoded.is_none() {
                min_outside = min_outside.min(lp.grad_norm);
                offenders.push(lp.clone());
            }
            if low_samples.len() < KEEP_LOW {
                low_samples.push(lp);
            }
        }
    }

    let mut decoded = BTreeSet::new();
    let mut hits_a = BTreeSet::new();
    let mut hits_b = BTreeSet::new();
    for lp in refined.iter().chain(&low_samples) {
        if let (Some(v), Some(mb)) = (lp.decoded, lp.medium_box) {
            decoded.insert(v);
            if mb.in_box_b {
                hits_b.insert(mb.i);
            } else {
                hits_a.insert(mb.i);
            }
        }
    }
    offenders.sort_by(|a, b| a.grad_norm.total_cmp(&b.grad_norm));
    offenders.truncate(KEEP_LOW);

    Ok(SpuriousReport {
        n: p.n,
        m,
        grid_step,
        samples: count * count,
        cells: (m * m) as u64,
        certified_cells,
        uncertified_cells,
        min_grad_outside: min_outside,
        low_sample_count,
        low_samples,
        refined,
        offenders,
        unresolved,
        decoded_solutions: decoded.into_iter().collect(),
        expected_solutions: iter_solutions_bruteforce(hf.instance()).iter().map(|s| s.v).collect(),
        hits_box_a: hits_a.into_iter().collect(),
        hits_box_b: hits_b.into_iter().collect(),
    })
}

/// Smallest gradient norm of the interpolant of one cell configuration, found by dense
/// sampling followed by multi-start Newton refinement. `corners[ix][iy]` sits at `(ix, iy)`.
pub fn check_box_group(corners: &[[GridCorner; 2]; 2]) -> f64 {
    let c = bicubic_coeffs(corners);
    let mut best = f64::INFINITY;
    let steps = 40;
    for k in 0..=steps {
        for l in 0..=steps {
            let (_, g) = c.value_grad(k as f64 / steps as f64, l as f64 / steps as f64);
            best = best.min(g[0].hypot(g[1]));
        }
    }
    for k in 0..=4 {
        for l in 0..=4 {
            let (_, nrm) = minimize_grad_norm(&c, [k as f64 / 4.0, l as f64 / 4.0], 60);
            best = best.min(nrm);
        }
    }
    best
}

/// Mirror image of a cell configuration under `x -> 1 - x`.
pub fn reflect_x(corners: &[[GridCorner; 2]; 2]) -> [[GridCorner; 2]; 2] {
    let flip = |c: GridCorner| GridCorner { value: c.value, grad: [-c.grad[0], c.grad[1]] };
    [[flip(corners[1][0]), flip(corners[1][1])], [flip(corners[0][0]), flip(corners[0][1])]]
}

/// Mirror image of a cell configuration under `y -> 1 - y`.
pub fn reflect_y(corners: &[[GridCorner; 2]; 2]) -> [[GridCorner; 2]; 2] {
    let flip = |c: GridCorner| GridCorner { value: c.value, grad: [c.grad[0], -c.grad[1]] };
    [[flip(corners[0][1]), flip(corners[0][0])], [flip(corners[1][1]), flip(corners[1][0])]]
}

/// Distinct cell configurations of the tile up to an additive constant, with their
/// multiplicity, in first-seen order by cell index.
pub fn cell_catalogue(hf: &HardFunction) -> Vec<([[GridCorner; 2]; 2], usize)> {
    let m = hf.params().m;
    let mut index: HashMap<[i64; 7], usize> = HashMap::new();
    let mut out: Vec<([[GridCorner; 2]; 2], usize)> = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let cs = [[hf.corner(i, j), hf.corner(i, j + 1)], [hf.corner(i + 1, j), hf.corner(i + 1, j + 1)]];
            let base = cs[0][0].value;
            let key = [
                (cs[0][1].value - base) as i64,
                (cs[1][0].value - base) as i64,
                (cs[1][1].value - base) as i64,
                arrow_code(&cs[0][0]),
                arrow_code(&cs[0][1]),
                arrow_code(&cs[1][0]),
                arrow_code(&cs[1][1]),
            ];
            match index.get(&key) {
                Some(&k) => out[k].1 += 1,
                None => {
                    let mut norm = cs;
                    for c in norm.iter_mut().flatten() {
                        c.value -= base;
                    }
                    index.insert(key, out.len());
                    out.push((norm, 1));
                }
            }
        }
    }
    out
}

fn arrow_code(c: &GridCorner) -> i64 {
    if c.grad[0] != 0.0 {
        0
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corner(value: f64, gx: f64, gy: f64) -> GridCorner {
        GridCorner { value, grad: [gx, gy] }
    }

    #[test]
    fn background_group_has_no_small_gradient() {
        let cs = [[corner(0.0, -0.5, 0.0), corner(0.0, -0.5, 0.0)], [corner(-1.0, -0.5, 0.0), corner(-1.0, -0.5, 0.0)]];
        assert!(check_box_group(&cs) >= 0.01);
    }

    #[test]
    fn reflection_preserves_minimum() {
        let cs = [[corner(0.0, -0.5, 0.0), corner(-1.0, 0.0, -0.5)], [corner(-1.0, -0.5, 0.0), corner(-2.0, 0.0, -0.5)]];
        let base = check_box_group(&cs);
        assert!((check_box_group(&reflect_x(&cs)) - base).abs() < 1e-9);
        assert!((check_box_group(&reflect_y(&cs)) - base).abs() < 1e-9);
    }

    #[test]
    fn opposing_arrows_are_flagged() {
        let cs = [[corner(0.0, 0.5, 0.0), corner(0.0, 0.5, 0.0)], [corner(0.0, -0.5, 0.0), corner(0.0, -0.5, 0.0)]];
        assert!(check_box_group(&cs) < 0.01);
    }
}
