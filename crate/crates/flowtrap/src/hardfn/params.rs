//! Geometry of the periodic hard function.

use serde::{Deserialize, Serialize};

use super::iter::IterInstance;

/// Side of a medium box in lattice cells.
pub const MEDIUM: i64 = 8;

/// Magnitude of every lattice gradient.
pub const DELTA_ARROW: f64 = 0.5;

/// Derived lattice geometry of the construction for an ITER width n.
///
/// The tile is the lattice `[0, M]^2` with `M = 3N + 5` odd and `N = 2^(n+3)`, so
/// `K = M/2` is a half-integer and `K +- 1/2`, `K +- 3/2` are lattice columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardParams {
    /// ITER width.
    pub n: u32,
    /// Side of each PLS box in lattice cells, `2^(n+3)`.
    pub n_grid: i64,
    /// Period, odd.
    pub m: i64,
    /// Half period `M/2`.
    pub k: f64,
    /// Gradient magnitude at every lattice point, 1/2.
    pub delta_arrow: f64,
    /// Lower-left lattice corner of the box that holds the minima.
    pub box_a_origin: (i64, i64),
    /// Lower-left lattice corner of the box that holds the maxima.
    pub box_b_origin: (i64, i64),
    /// Divide values and gradients by M.
    pub normalize: bool,
}

impl HardParams {
    /// Parameters for width n.
    pub fn for_width(n: u32, normalize: bool) -> Self {
        let n_grid = 1i64 << (n + 3);
        let base = 3 * n_grid + 4;
        let m = if base % 2 == 0 { base + 1 } else { base };
        let a = 2 * n_grid + 2;
        // Box B is the image of box A under the point reflection (x, y) -> (M - x, M - y).
        let b = m - a - n_grid;
        Self {
            n,
            n_grid,
            m,
            k: m as f64 / 2.0,
            delta_arrow: DELTA_ARROW,
            box_a_origin: (a, a),
            box_b_origin: (b, b),
            normalize,
        }
    }

    /// `(M - 1) / 2`, the lattice column just left of K.
    pub fn kappa(&self) -> i64 {
        (self.m - 1) / 2
    }

    /// Number of ITER nodes `2^n`.
    pub fn nodes(&self) -> i64 {
        1i64 << self.n
    }
}

/// Parameters derived from a validated instance.
pub fn derive_params(inst: &IterInstance) -> HardParams {
    HardParams::for_width(inst.n(), false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_widths() {
        let p = HardParams::for_width(1, false);
        assert_eq!((p.n_grid, p.m, p.k), (16, 53, 26.5));
        let p = HardParams::for_width(2, false);
        assert_eq!((p.n_grid, p.m), (32, 101));
        for n in 1..12 {
            let p = HardParams::for_width(n, true);
            assert_eq!(p.m % 2, 1);
            assert_eq!(p.k - p.m as f64 / 2.0, 0.0);
            let (ax, _) = p.box_a_origin;
            let (bx, _) = p.box_b_origin;
            assert!(bx >= 2 && ax + p.n_grid <= p.m - 2);
            assert_eq!(bx + p.n_grid, p.m - ax);
        }
    }
}
