//! Axis-aligned hyperrectangles, nice delta-nets and the unreachability test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of R^d, stored as its coordinate vector.
pub type Point = Vec<f64>;

/// Euclidean norm of a vector.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Euclidean distance between two points of equal dimension.
pub fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Lexicographic comparison of two coordinate vectors (first differing coordinate decides).
pub fn lex_cmp(x: &[f64], y: &[f64]) -> std::cmp::Ordering {
    for (a, b) in x.iter().zip(y) {
        match a.partial_cmp(b) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(ord) => return ord,
        }
    }
    x.len().cmp(&y.len())
}

/// `[lo_1, hi_1] x ... x [lo_d, hi_d]`, possibly degenerate along some axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperRect {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl HyperRect {
    /// Builds a rectangle, rejecting mismatched lengths, non-finite bounds and `lo > hi`.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Precondition(format!(
                "rectangle bounds have lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !a.is_finite() || !b.is_finite() || a > b {
                return Err(Error::Precondition(format!("axis {i}: bounds [{a}, {b}] are invalid")));
            }
        }
        Ok(Self { lo, hi })
    }

    /// The cube `{x : ||x - c||_inf <= radius}`.
    pub fn cube_around(center: &[f64], radius: f64) -> Self {
        Self {
            lo: center.iter().map(|c| c - radius).collect(),
            hi: center.iter().map(|c| c + radius).collect(),
        }
    }

    /// The unit cube `[0,1]^d`.
    pub fn unit_cube(d: usize) -> Self {
        Self { lo: vec![0.0; d], hi: vec![1.0; d] }
    }

    /// Ambient dimension d.
    pub fn ambient_dim(&self) -> usize {
        self.lo.len()
    }

    /// Number of non-degenerate axes (exact comparison `lo < hi`).
    pub fn dim(&self) -> usize {
        self.lo.iter().zip(&self.hi).filter(|(a, b)| a < b).count()
    }

    /// Length of side `i`.
    pub fn side(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    /// Maximum side length r.
    pub fn max_side(&self) -> f64 {
        (0..self.ambient_dim()).map(|i| self.side(i)).fold(0.0, f64::max)
    }

    /// Lowest axis index among those of maximal side length.
    pub fn longest_axis(&self) -> usize {
        let r = self.max_side();
        (0..self.ambient_dim()).find(|&i| self.side(i) == r).unwrap_or(0)
    }

    /// Whether `x` lies in the closed rectangle.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.lo.len()
            && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(c, (a, b))| *a <= *c && *c <= *b)
    }

    /// Corners in lexicographic order (axis 0 most significant, `lo` before `hi`).
    /// Degenerate axes contribute a single value, so a rectangle of dimension k has 2^k corners.
    pub fn corners(&self) -> Vec<Point> {
        let axes: Vec<Vec<f64>> = (0..self.ambient_dim())
            .map(|i| if self.lo[i] < self.hi[i] { vec![self.lo[i], self.hi[i]] } else { vec![self.lo[i]] })
            .collect();
        cartesian(&axes)
    }
}

/// Cartesian product of per-axis value lists in lexicographic order.
fn cartesian(axes: &[Vec<f64>]) -> Vec<Point> {
    let mut out: Vec<Point> = vec![Vec::with_capacity(axes.len())];
    for values in axes {
        let mut next = Vec::with_capacity(out.len() * values.len());
        for prefix in &out {
            for v in values {
                let mut p = prefix.clone();
                p.push(*v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Returns true iff `fy > fx - eps * ||x - y||_2` (strict).
pub fn is_unreachable(fx: f64, fy: f64, x: &[f64], y: &[f64], eps: f64) -> bool {
    fy > fx - eps * dist2(x, y)
}

/// Lazily enumerated nice delta-net of a hyperrectangle.
///
/// Along axis i the net uses `ceil(sqrt(k) * (hi_i - lo_i) / (2 delta)) + 1` equally spaced
/// values including both endpoints, where k is the rectangle's dimension. Points are the
/// Cartesian product in lexicographic order of per-axis indices (axis 0 slowest).
#[derive(Debug, Clone)]
pub struct DeltaNet {
    lo: Vec<f64>,
    hi: Vec<f64>,
    intervals: Vec<u64>,
    len: u64,
}

impl DeltaNet {
    /// Builds the net description without materializing any point.
    pub fn new(rect: &HyperRect, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Precondition(format!("net spacing must be positive, got {delta}")));
        }
        let sqrt_k = (rect.dim() as f64).sqrt();
        let mut len: u64 = 1;
        let mut intervals = Vec::with_capacity(rect.ambient_dim());
        for i in 0..rect.ambient_dim() {
            let steps = (sqrt_k * rect.side(i) / (2.0 * delta)).ceil();
            if steps > 1e15 {
                return Err(Error::Precondition(format!("net along axis {i} has {steps} intervals")));
            }
            let steps = steps as u64;
            intervals.push(steps);
            len = len.checked_mul(steps + 1).ok_or_else(|| {
                Error::Precondition("net size overflows a 64-bit counter".to_string())
            })?;
        }
        Ok(Self { lo: rect.lo.clone(), hi: rect.hi.clone(), intervals, len })
    }

    /// Number of points.
    pub fn len(&self) -> u64 {
        self.len
    }

    /// Always false: a net has at least one point.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of values along axis i.
    pub fn axis_count(&self, i: usize) -> u64 {
        self.intervals[i] + 1
    }

    /// Coordinate of index `idx` along axis i; the last index maps exactly to `hi`.
    #[inline]
    pub fn coord(&self, i: usize, idx: u64) -> f64 {
        let n = self.intervals[i];
        if n == 0 || idx == 0 {
            self.lo[i]
        } else if idx == n {
            self.hi[i]
        } else {
            self.lo[i] + (self.hi[i] - self.lo[i]) * (idx as f64 / n as f64)
        }
    }

    /// Writes the point with linear index `k` (lexicographic order) into `out`.
    pub fn point_into(&self, mut k: u64, out: &mut [f64]) {
        for i in (0..self.lo.len()).rev() {
            let c = self.intervals[i] + 1;
            out[i] = self.coord(i, k % c);
            k /= c;
        }
    }

    /// Point with linear index `k`.
    pub fn point(&self, k: u64) -> Point {
        let mut p = vec![0.0; self.lo.len()];
        self.point_into(k, &mut p);
        p
    }

    /// Iterates over all points in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len).map(move |k| self.point(k))
    }
}

/// Materializes the nice delta-net of `rect` in lexicographic order.
pub fn nice_delta_net(rect: &HyperRect, delta: f64) -> Result<Vec<Point>> {
    let net = DeltaNet::new(rect, delta)?;
    Ok(net.iter().collect())
}

/// The two hyperplanes cutting `rect` at one and two thirds of axis `j`.
pub fn rect_split_planes(rect: &HyperRect, j: usize) -> Result<(HyperRect, HyperRect)> {
    if j >= rect.ambient_dim() {
        return Err(Error::Precondition(format!("axis {j} out of range")));
    }
    if !(rect.lo[j] < rect.hi[j]) {
        return Err(Error::Precondition(format!("axis {j} is degenerate")));
    }
    let r = rect.max_side();
    let mut e1 = rect.clone();
    let mut e2 = rect.clone();
    let c1 = rect.lo[j] + r / 3.0;
    let c2 = rect.hi[j] - r / 3.0;
    e1.lo[j] = c1;
    e1.hi[j] = c1;
    e2.lo[j] = c2;
    e2.hi[j] = c2;
    Ok((e1, e2))
}
