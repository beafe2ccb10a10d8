//! Bicubic Hermite patches on unit cells, Bernstein-form bounds, and a rigorous
//! branch-and-bound certificate that the gradient norm stays above a threshold.

use serde::{Deserialize, Serialize};

use super::layout::GridCorner;

/// Coefficients `a[i][j]` of `sum a_ij x^i y^j` in cell-local coordinates `x, y in [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellCoeffs {
    pub a: [[f64; 4]; 4],
}

const LEFT: [[f64; 4]; 4] = [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [-3.0, 3.0, -2.0, -1.0], [2.0, -2.0, 1.0, 1.0]];
const RIGHT: [[f64; 4]; 4] = [[1.0, 0.0, -3.0, 2.0], [0.0, 0.0, 3.0, -2.0], [0.0, 1.0, -2.0, 1.0], [0.0, 0.0, -1.0, 1.0]];

fn matmul(x: &[[f64; 4]; 4], y: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, o) in row.iter_mut().enumerate() {
            *o = (0..4).map(|k| x[i][k] * y[k][j]).sum();
        }
    }
    out
}

/// Coefficients of the patch matching values and first partials at the four corners,
/// with zero mixed partials. `corners[ix][iy]` is the corner at local `(ix, iy)`.
pub fn bicubic_coeffs(corners: &[[GridCorner; 2]; 2]) -> CellCoeffs {
    let g = |ix: usize, iy: usize| corners[ix][iy];
    let f = [
        [g(0, 0).value, g(0, 1).value, g(0, 0).grad[1], g(0, 1).grad[1]],
        [g(1, 0).value, g(1, 1).value, g(1, 0).grad[1], g(1, 1).grad[1]],
        [g(0, 0).grad[0], g(0, 1).grad[0], 0.0, 0.0],
        [g(1, 0).grad[0], g(1, 1).grad[0], 0.0, 0.0],
    ];
    CellCoeffs { a: matmul(&matmul(&LEFT, &f), &RIGHT) }
}

#[inline]
fn cubic(c: &[f64; 4], t: f64) -> f64 {
    ((c[3] * t + c[2]) * t + c[1]) * t + c[0]
}

#[inline]
fn cubic_d(c: &[f64; 4], t: f64) -> f64 {
    (3.0 * c[3] * t + 2.0 * c[2]) * t + c[1]
}

#[inline]
fn cubic_dd(c: &[f64; 4], t: f64) -> f64 {
    6.0 * c[3] * t + 2.0 * c[2]
}

impl CellCoeffs {
    /// Value at local `(x, y)`.
    #[inline]
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let col = [cubic(&self.a[0], y), cubic(&self.a[1], y), cubic(&self.a[2], y), cubic(&self.a[3], y)];
        cubic(&col, x)
    }

    /// Value and gradient at local `(x, y)`.
    #[inline]
    pub fn value_grad(&self, x: f64, y: f64) -> (f64, [f64; 2]) {
        let mut p = [0.0; 4];
        let mut py = [0.0; 4];
        for i in 0..4 {
            p[i] = cubic(&self.a[i], y);
            py[i] = cubic_d(&self.a[i], y);
        }
        (cubic(&p, x), [cubic_d(&p, x), cubic(&py, x)])
    }

    /// Hessian `[[fxx, fxy], [fxy, fyy]]` at local `(x, y)`.
    pub fn hessian(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let mut p = [0.0; 4];
        let mut py = [0.0; 4];
        let mut pyy = [0.0; 4];
        for i in 0..4 {
            p[i] = cubic(&self.a[i], y);
            py[i] = cubic_d(&self.a[i], y);
            pyy[i] = cubic_dd(&self.a[i], y);
        }
        let fxx = cubic_dd(&p, x);
        let fxy = cubic_d(&py, x);
        let fyy = cubic(&pyy, x);
        [[fxx, fxy], [fxy, fyy]]
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.a.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Coefficients of `d/dx`.
    pub fn dx(&self) -> Poly {
        let mut out = [[0.0; 4]; 4];
        for i in 1..4 {
            for j in 0..4 {
                out[i - 1][j] = i as f64 * self.a[i][j];
            }
        }
        Poly(out)
    }

    /// Coefficients of `d/dy`.
    pub fn dy(&self) -> Poly {
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 1..4 {
                out[i][j - 1] = j as f64 * self.a[i][j];
            }
        }
        Poly(out)
    }

    /// The value polynomial.
    pub fn poly(&self) -> Poly {
        Poly(self.a)
    }
}

/// A polynomial of degree at most 3 in each variable, `sum c[i][j] x^i y^j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Poly(pub [[f64; 4]; 4]);

const BINOM: [[f64; 4]; 4] = [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0], [1.0, 3.0, 3.0, 1.0]];

fn shift1(c: [f64; 4], x0: f64, h: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    let mut hk = 1.0;
    for (k, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for (i, ci) in c.iter().enumerate().skip(k) {
            s += BINOM[i][k] * ci * x0.powi((i - k) as i32);
        }
        *o = s * hk;
        hk *= h;
    }
    out
}

fn bernstein1(c: [f64; 4]) -> [f64; 4] {
    // Degree-3 Bernstein coefficients: b_k = sum_{i <= k} C(k,i) / C(3,i) c_i.
    let mut b = [0.0; 4];
    for (k, bk) in b.iter_mut().enumerate() {
        *bk = (0..=k).map(|i| BINOM[k][i] / BINOM[3][i] * c[i]).sum();
    }
    b
}

impl Poly {
    /// Derivative in x.
    pub fn dx(&self) -> Poly {
        let mut out = [[0.0; 4]; 4];
        for i in 1..4 {
            for j in 0..4 {
                out[i - 1][j] = i as f64 * self.0[i][j];
            }
        }
        Poly(out)
    }

    /// Derivative in y.
    pub fn dy(&self) -> Poly {
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 1..4 {
                out[i][j - 1] = j as f64 * self.0[i][j];
            }
        }
        Poly(out)
    }

    /// Evaluation.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let col = [cubic(&self.0[0], y), cubic(&self.0[1], y), cubic(&self.0[2], y), cubic(&self.0[3], y)];
        cubic(&col, x)
    }

    /// Reparametrization onto the square `[x0, x0 + h] x [y0, y0 + h]` mapped to `[0,1]^2`.
    pub fn restrict(&self, x0: f64, y0: f64, h: f64) -> Poly {
        let mut tmp = [[0.0; 4]; 4];
        for j in 0..4 {
            let col = shift1([self.0[0][j], self.0[1][j], self.0[2][j], self.0[3][j]], x0, h);
            for i in 0..4 {
                tmp[i][j] = col[i];
            }
        }
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            out[i] = shift1(tmp[i], y0, h);
        }
        Poly(out)
    }

    /// Tensor Bernstein coefficients on `[0,1]^2`; their hull contains the range.
    pub fn bernstein(&self) -> [[f64; 4]; 4] {
        let mut tmp = [[0.0; 4]; 4];
        for j in 0..4 {
            let col = bernstein1([self.0[0][j], self.0[1][j], self.0[2][j], self.0[3][j]]);
            for i in 0..4 {
                tmp[i][j] = col[i];
            }
        }
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            out[i] = bernstein1(tmp[i]);
        }
        out
    }

    /// Enclosure `(min, max)` of the polynomial on `[0,1]^2`.
    pub fn range(&self) -> (f64, f64) {
        let b = self.bernstein();
        b.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Relative slack added to Bernstein bounds to cover floating-point rounding.
const ROUNDING_SLACK: f64 = 1e-9;

/// Outcome of [`certify_gradient_floor`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCertificate {
    /// Certified lower bound of `||grad||` over the certified part of the cell.
    pub lower_bound: f64,
    /// Sub-squares `(x0, y0, h)` where the bound could not be established.
    pub uncertified: Vec<(f64, f64, f64)>,
}

impl GradientCertificate {
    /// Whether the whole cell is certified.
    pub fn is_complete(&self) -> bool {
        self.uncertified.is_empty()
    }
}

/// Branch and bound on the unit cell: proves `||grad|| > threshold` on every sub-square
/// where the Bernstein enclosure of some directional derivative stays above `threshold`,
/// splitting up to `max_depth` times.
pub fn certify_gradient_floor(cell: &CellCoeffs, threshold: f64, max_depth: u32) -> GradientCertificate {
    let gx = cell.dx();
    let gy = cell.dy();
    let scale = cell.max_abs().max(1.0) * ROUNDING_SLACK;
    let mut cert = GradientCertificate { lower_bound: f64::INFINITY, uncertified: Vec::new() };
    let mut stack = vec![(0.0, 0.0, 1.0, 0u32)];
    while let Some((x0, y0, h, depth)) = stack.pop() {
        let bx = gx.restrict(x0, y0, h).bernstein();
        let by = gy.restrict(x0, y0, h).bernstein();
        let (cx, cy) = (x0 + h / 2.0, y0 + h / 2.0);
        let (ux, uy) = (gx.eval(cx, cy), gy.eval(cx, cy));
        let un = (ux * ux + uy * uy).sqrt();
        let mut best = f64::NEG_INFINITY;
        for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]
            .into_iter()
            .chain((un > 0.0).then_some((ux / un, uy / un)))
        {
            let lo = bx
                .iter()
                .flatten()
                .zip(by.iter().flatten())
                .map(|(a, b)| dx * a + dy * b)
                .fold(f64::INFINITY, f64::min);
            best = best.max(lo - scale);
        }
        if best > threshold {
            cert.lower_bound = cert.lower_bound.min(best);
        } else if depth < max_depth {
            let h2 = h / 2.0;
            for (sx, sy) in [(0.0, 0.0), (h2, 0.0), (0.0, h2), (h2, h2)] {
                stack.push((x0 + sx, y0 + sy, h2, depth + 1));
            }
        } else {
            cert.uncertified.push((x0, y0, h));
        }
    }
    cert
}

/// Certified bound on the spectral norm of the Hessian over the cell, using
/// `splits x splits` sub-squares.
pub fn hessian_norm_bound(cell: &CellCoeffs, splits: usize) -> f64 {
    let p = cell.poly();
    let (fxx, fxy, fyy) = (p.dx().dx(), p.dx().dy(), p.dy().dy());
    let h = 1.0 / splits as f64;
    let mut worst: f64 = 0.0;
    for i in 0..splits {
        for j in 0..splits {
            let (x0, y0) = (i as f64 * h, j as f64 * h);
            let abs_max = |q: &Poly| {
                let (lo, hi) = q.restrict(x0, y0, h).range();
                lo.abs().max(hi.abs())
            };
            let (bxx, bxy, byy) = (abs_max(&fxx), abs_max(&fxy), abs_max(&fyy));
            let gersh = bxx.max(byy) + bxy;
            let frob = (bxx * bxx + 2.0 * bxy * bxy + byy * byy).sqrt();
            worst = worst.max(gersh.min(frob));
        }
    }
    worst * (1.0 + ROUNDING_SLACK)
}

/// Local minimization of `||grad||` over the unit cell from one start point:
/// damped Newton steps on `grad = 0`, clamped to the cell, falling back to gradient
/// steps on `||grad||^2 / 2`. Returns the best point found and its gradient norm.
pub fn minimize_grad_norm(cell: &CellCoeffs, start: [f64; 2], iterations: usize) -> ([f64; 2], f64) {
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    let norm_at = |p: [f64; 2]| {
        let (_, g) = cell.value_grad(p[0], p[1]);
        (g[0] * g[0] + g[1] * g[1]).sqrt()
    };
    let mut p = [clamp(start[0]), clamp(start[1])];
    let mut best = (p, norm_at(p));
    for _ in 0..iterations {
        let (_, g) = cell.value_grad(p[0], p[1]);
        let h = cell.hessian(p[0], p[1]);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let newton = if det.abs() > 1e-14 {
            Some([-(h[1][1] * g[0] - h[0][1] * g[1]) / det, -(-h[1][0] * g[0] + h[0][0] * g[1]) / det])
        } else {
            None
        };
        // Gradient of ||g||^2 / 2 is H g.
        let hg = [h[0][0] * g[0] + h[0][1] * g[1], h[1][0] * g[0] + h[1][1] * g[1]];
        let current = best.1;
        let mut moved = false;
        for dir in newton.into_iter().chain(std::iter::once([-hg[0], -hg[1]])) {
            let mut t = 1.0;
            for _ in 0..30 {
                let q = [clamp(p[0] + t * dir[0]), clamp(p[1] + t * dir[1])];
                let nq = norm_at(q);
                if nq < current {
                    p = q;
                    best = (q, nq);
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if moved {
                break;
            }
        }
        if !moved || best.1 < 1e-13 {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corner(value: f64, gx: f64, gy: f64) -> GridCorner {
        GridCorner { value, grad: [gx, gy] }
    }

    #[test]
    fn constant_data_gives_constant_patch() {
        let c = corner(3.5, 0.0, 0.0);
        let cc = bicubic_coeffs(&[[c, c], [c, c]]);
        assert_eq!(cc.a[0][0], 3.5);
        for (i, row) in cc.a.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if (i, j) != (0, 0) {
                    assert_eq!(*v, 0.0);
                }
            }
        }
    }

    #[test]
    fn linear_data_reproduces_plane() {
        let h = |x: f64, y: f64| corner(-x - y, -1.0, -1.0);
        let cc = bicubic_coeffs(&[[h(0.0, 0.0), h(0.0, 1.0)], [h(1.0, 0.0), h(1.0, 1.0)]]);
        for k in 0..=10 {
            for l in 0..=10 {
                let (x, y) = (k as f64 / 10.0, l as f64 / 10.0);
                assert!((cc.value(x, y) + x + y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn bernstein_encloses_samples() {
        let cs = [[corner(0.0, -0.5, 0.0), corner(-7.0, 0.0, -0.5)], [corner(3.0, 0.0, -0.5), corner(-1.0, -0.5, 0.0)]];
        let cc = bicubic_coeffs(&cs);
        let (lo, hi) = cc.poly().range();
        let sub = cc.poly().restrict(0.25, 0.5, 0.25);
        let (slo, shi) = sub.range();
        for k in 0..=20 {
            for l in 0..=20 {
                let (x, y) = (k as f64 / 20.0, l as f64 / 20.0);
                let v = cc.value(x, y);
                assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                let w = cc.value(0.25 + 0.25 * x, 0.5 + 0.25 * y);
                assert!(w >= slo - 1e-12 && w <= shi + 1e-12);
                assert!((sub.eval(x, y) - w).abs() < 1e-12);
            }
        }
        let hb = hessian_norm_bound(&cc, 4);
        for k in 0..=20 {
            for l in 0..=20 {
                let h = cc.hessian(k as f64 / 20.0, l as f64 / 20.0);
                let tr = (h[0][0] + h[1][1]) / 2.0;
                let rad = (((h[0][0] - h[1][1]) / 2.0).powi(2) + h[0][1].powi(2)).sqrt();
                assert!(tr.abs() + rad <= hb + 1e-9);
            }
        }
    }

    #[test]
    fn newton_finds_interior_critical_point() {
        // A bowl centered in the cell: values 1 at every corner, gradients pointing outward.
        let cs = [[corner(1.0, -0.5, -0.5), corner(1.0, -0.5, 0.5)], [corner(1.0, 0.5, -0.5), corner(1.0, 0.5, 0.5)]];
        let cc = bicubic_coeffs(&cs);
        let (p, n) = minimize_grad_norm(&cc, [0.2, 0.7], 50);
        assert!(n < 1e-10, "{p:?} {n}");
        assert!((p[0] - 0.5).abs() < 1e-6 && (p[1] - 0.5).abs() < 1e-6);
        assert!(!certify_gradient_floor(&cc, 0.01, 6).is_complete());
    }
}
