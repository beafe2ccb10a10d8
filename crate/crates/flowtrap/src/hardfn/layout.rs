//! Lattice layout of the hard function: which colored line every lattice point belongs to,
//! its prescribed value and its gradient arrow.
//!
//! The tile carries one "dark" path and its point reflection, the "light" path.
//! The dark path is a band of four columns: two blue (valley) columns followed by two red
//! (ridge) columns in its direction of travel, with blue on the left. It climbs from the
//! bottom edge at `x ~ K`, turns east below the middle row, turns north again and enters
//! box A, where it feeds the encoding of the ITER instance:
//!
//! - a red ridge along the two bottom rows of the box;
//! - for each node u with `C(u) > u`, a vertical blue/red pair in medium column u rising
//!   from just above the ridge to local row 3 of medium box `Q(u,u)`;
//! - when in addition `C(C(u)) > C(u)`, a blue connector along local rows 4 and 5 of
//!   medium row u, running east until it merges into the vertical pair of `C(u)`.
//!   Vertical pairs overwrite connectors where they cross.
//!
//! Every vertical pair that is not continued by a connector ends in a valley dead end,
//! which is the only place where the interpolated surface has a near-stationary point.
//! The light path is the image of the dark path under `(x, y) -> (M - x, M - y)` with
//! blue and red swapped, so its dead ends (in box B) are local maxima. The two rows at
//! the top of the central band continue the dark band across the periodic seam.
//!
//! Lattice gradients are always `(-1/2, 0)` ("east") or `(0, -1/2)` ("north").

use serde::{Deserialize, Serialize};

use super::iter::IterInstance;
use super::params::{HardParams, MEDIUM};

/// Value function family of a lattice point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    DarkBlue,
    DarkRed,
    LightBlue,
    LightRed,
    Background,
    TopBlue,
    TopRed,
}

/// Kind of line inside a PLS box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LineKind {
    /// The ridge along the entry edge of the box.
    HorizontalEntry,
    /// A vertical blue/red pair of some node.
    VerticalPair,
    /// A blue (box A) or red (box B) connector.
    HorizontalConnector,
    /// Plain background inside the box.
    Background,
}

/// Region of a lattice point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    DarkBlue,
    DarkRed,
    LightBlue,
    LightRed,
    Background,
    TopBlue,
    TopRed,
    BoxA { line: LineKind, color: Color },
    BoxB { line: LineKind, color: Color },
}

impl RegionLabel {
    /// Value function family of the region.
    pub fn color(&self) -> Color {
        match *self {
            RegionLabel::DarkBlue => Color::DarkBlue,
            RegionLabel::DarkRed => Color::DarkRed,
            RegionLabel::LightBlue => Color::LightBlue,
            RegionLabel::LightRed => Color::LightRed,
            RegionLabel::Background => Color::Background,
            RegionLabel::TopBlue => Color::TopBlue,
            RegionLabel::TopRed => Color::TopRed,
            RegionLabel::BoxA { color, .. } | RegionLabel::BoxB { color, .. } => color,
        }
    }
}

/// Direction of steepest descent at a lattice point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arrow {
    /// Gradient `(-delta, 0)`.
    East,
    /// Gradient `(0, -delta)`.
    North,
}

impl Arrow {
    /// Gradient vector for arrow magnitude `delta`.
    pub fn gradient(self, delta: f64) -> [f64; 2] {
        match self {
            Arrow::East => [-delta, 0.0],
            Arrow::North => [0.0, -delta],
        }
    }
}

/// Prescribed value and gradient at a lattice point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCorner {
    pub value: f64,
    pub grad: [f64; 2],
}

/// Value of color `c` at lattice point `(a, b)` for period `m` (unnormalized, exact integers).
pub fn color_value(c: Color, a: i64, b: i64, m: i64) -> i64 {
    match c {
        Color::DarkBlue => -a - b - 6 * m,
        Color::DarkRed => -a - b + 3 * m,
        Color::LightBlue => -a - b - 3 * m,
        Color::LightRed => -a - b + 6 * m,
        // a >= K is equivalent to 2a > M because M is odd.
        Color::Background => -a + if 2 * a > m { m } else { 0 } + m,
        Color::TopBlue => -a - (b - m) - 6 * m,
        Color::TopRed => -a - (b - m) + 3 * m,
    }
}

#[derive(Clone, Copy)]
enum Place {
    Global,
    Box(LineKind),
}

/// The layout of one instance. `omit_connector` removes one connector (negative control).
#[derive(Debug, Clone)]
pub struct Layout<'a> {
    p: HardParams,
    inst: &'a IterInstance,
    omit_connector: Option<u32>,
    c: [i64; 4],
    r: [i64; 4],
    ox: i64,
    oy: i64,
    x_entry: i64,
    top_entry: i64,
}

impl<'a> Layout<'a> {
    /// Layout for `inst` with geometry `p`.
    pub fn new(p: HardParams, inst: &'a IterInstance) -> Self {
        let kap = p.kappa();
        let (ox, oy) = p.box_a_origin;
        Self {
            p,
            inst,
            omit_connector: None,
            c: [kap - 1, kap, kap + 1, kap + 2],
            r: [kap - 3, kap - 2, kap - 1, kap],
            ox,
            oy,
            x_entry: ox + 2,
            top_entry: oy + 3,
        }
    }

    /// Same layout with the connector of node `u` removed.
    pub fn omitting_connector(mut self, u: u32) -> Self {
        self.omit_connector = Some(u);
        self
    }

    /// Geometry.
    pub fn params(&self) -> &HardParams {
        &self.p
    }

    /// Instance.
    pub fn instance(&self) -> &IterInstance {
        self.inst
    }

    fn has_vertical(&self, u: i64) -> bool {
        u >= 1 && u <= self.p.nodes() && self.inst.succ(u as u32) as i64 > u
    }

    fn has_connector(&self, u: i64) -> bool {
        if !self.has_vertical(u) || self.omit_connector == Some(u as u32) {
            return false;
        }
        let c = self.inst.succ(u as u32);
        self.inst.succ(c) > c
    }

    /// Dark path and box A. Returns `None` outside of them.
    fn dark(&self, a: i64, b: i64) -> Option<(Color, Arrow, Place)> {
        let [c0, c1, c2, c3] = self.c;
        let [r0, r1, r2, r3] = self.r;
        let x = self.x_entry;
        let n = self.p.n_grid;
        let in_box = a >= self.ox && a <= self.ox + n && b >= self.oy && b <= self.oy + n;
        let entry_top = if in_box { self.top_entry } else { self.oy };

        let blue = (a >= c0 && a <= c1 && b >= 0 && b <= r3)
            || ((b == r2 || b == r3) && a >= c0 && a <= x + 1)
            || ((a == x || a == x + 1) && b >= r2 && b <= entry_top);
        if blue {
            let north = (a == c1 && b <= r2) || (b == r2 && a >= c1 && a <= x + 1) || (a == x + 1 && b >= r2);
            let place = if in_box { Place::Box(LineKind::VerticalPair) } else { Place::Global };
            return Some((Color::DarkBlue, if north { Arrow::North } else { Arrow::East }, place));
        }
        let red = (a >= c2 && a <= c3 && b >= 0 && b <= r1)
            || ((b == r0 || b == r1) && a >= c2 && a <= x + 3)
            || ((a == x + 2 || a == x + 3) && b >= r0 && b <= entry_top);
        if red {
            let north = (a == c2 && b <= r1) || (b == r1 && a >= c2 && a <= x + 2) || (a == x + 2 && b >= r1);
            let place = if in_box { Place::Box(LineKind::VerticalPair) } else { Place::Global };
            return Some((Color::DarkRed, if north { Arrow::North } else { Arrow::East }, place));
        }
        if in_box {
            return Some(self.box_a(a - self.ox, b - self.oy));
        }
        None
    }

    /// Box A interior in local coordinates `0 <= p, q <= N`, excluding the entry segment.
    fn box_a(&self, p: i64, q: i64) -> (Color, Arrow, Place) {
        let col = p.div_euclid(MEDIUM);
        let lp = p.rem_euclid(MEDIUM);
        let u = col + 1;
        // Vertical pairs.
        if (2..=5).contains(&lp) && self.has_vertical(u) && q >= 2 && q <= MEDIUM * (u - 1) + 3 {
            let color = if lp <= 3 { Color::DarkBlue } else { Color::DarkRed };
            let arrow = if lp == 3 || lp == 4 { Arrow::North } else { Arrow::East };
            return (color, arrow, Place::Box(LineKind::VerticalPair));
        }
        // Connector of the node owning this medium row.
        let row = q.div_euclid(MEDIUM);
        let lq = q.rem_euclid(MEDIUM);
        let w = row + 1;
        if (lq == 4 || lq == 5) && self.has_connector(w) {
            let start = MEDIUM * (w - 1) + 2;
            let end = MEDIUM * (self.inst.succ(w as u32) as i64 - 1) + 1;
            if p >= start && p <= end {
                let north = lq == 4 && col == w - 1 && (lp == 3 || lp == 4);
                let arrow = if north { Arrow::North } else { Arrow::East };
                return (Color::DarkBlue, arrow, Place::Box(LineKind::HorizontalConnector));
            }
        }
        // Entry ridge along the bottom two rows.
        if (q == 0 || q == 1) && p >= 6 {
            let north = q == 1 && (lp == 3 || lp == 4) && u >= 2 && self.has_vertical(u);
            let arrow = if north { Arrow::North } else { Arrow::East };
            return (Color::DarkRed, arrow, Place::Box(LineKind::HorizontalEntry));
        }
        (Color::Background, Arrow::East, Place::Box(LineKind::Background))
    }

    /// Region label and arrow of lattice point `(a, b)`, `0 <= a, b <= M`.
    pub fn classify(&self, a: i64, b: i64) -> (RegionLabel, Arrow) {
        let m = self.p.m;
        if let Some((color, arrow, place)) = self.dark(a, b) {
            let label = match place {
                Place::Global => match color {
                    Color::DarkBlue => RegionLabel::DarkBlue,
                    _ => RegionLabel::DarkRed,
                },
                Place::Box(line) => RegionLabel::BoxA { line, color },
            };
            return (label, arrow);
        }
        let [c0, c1, c2, c3] = self.c;
        if b >= m - 1 && a >= c0 && a <= c3 {
            let label = if a <= c1 { RegionLabel::TopBlue } else { RegionLabel::TopRed };
            let arrow = if a == c1 || a == c2 { Arrow::North } else { Arrow::East };
            return (label, arrow);
        }
        if let Some((color, arrow, place)) = self.dark(m - a, m - b) {
            let color = match color {
                Color::DarkBlue => Color::LightRed,
                Color::DarkRed => Color::LightBlue,
                other => other,
            };
            let label = match place {
                Place::Global => match color {
                    Color::LightRed => RegionLabel::LightRed,
                    _ => RegionLabel::LightBlue,
                },
                Place::Box(line) => RegionLabel::BoxB { line, color },
            };
            return (label, arrow);
        }
        (RegionLabel::Background, Arrow::East)
    }

    /// Prescribed value and gradient (unnormalized) at lattice point `(a, b)`.
    pub fn corner(&self, a: i64, b: i64) -> GridCorner {
        let (label, arrow) = self.classify(a, b);
        GridCorner {
            value: color_value(label.color(), a, b, self.p.m) as f64,
            grad: arrow.gradient(self.p.delta_arrow),
        }
    }

    /// Medium box `(i, j)` (1-based column, row) of box A containing the real point
    /// `(x, y)` of the tile `[0, M)^2`, together with a flag telling whether the point lies
    /// in box B (decoded through the point reflection).
    pub fn medium_box(&self, x: f64, y: f64) -> Option<MediumBox> {
        let n = self.p.n_grid as f64;
        let m = self.p.m as f64;
        let locate = |x: f64, y: f64| -> Option<(i64, i64)> {
            let (px, py) = (x - self.ox as f64, y - self.oy as f64);
            if px < 0.0 || py < 0.0 || px > n || py > n {
                return None;
            }
            let nodes = self.p.nodes();
            let i = ((px / MEDIUM as f64).floor() as i64 + 1).min(nodes);
            let j = ((py / MEDIUM as f64).floor() as i64 + 1).min(nodes);
            Some((i, j))
        };
        if let Some((i, j)) = locate(x, y) {
            return Some(MediumBox { in_box_b: false, i, j });
        }
        locate(m - x, m - y).map(|(i, j)| MediumBox { in_box_b: true, i, j })
    }

    /// Nodes whose vertical pair ends in a dead end inside `Q(u, u)`.
    pub fn dead_end_nodes(&self) -> Vec<u32> {
        (1..=self.p.nodes()).filter(|&u| self.has_vertical(u) && !self.has_connector(u)).map(|u| u as u32).collect()
    }

    /// The ITER solution revealed by a dead end at `Q(u, u)`: u itself when `C(u)` is a
    /// fixpoint, otherwise `C(u)` (which then satisfies `C(C(u)) < C(u)`).
    pub fn decode_dead_end(&self, u: u32) -> Option<u32> {
        if !self.has_vertical(u as i64) || self.has_connector(u as i64) {
            return None;
        }
        let c = self.inst.succ(u);
        let cc = self.inst.succ(c);
        if cc == c {
            Some(u)
        } else if cc < c {
            Some(c)
        } else {
            None
        }
    }
}

/// Medium box coordinates of a point inside one of the PLS boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediumBox {
    pub in_box_b: bool,
    pub i: i64,
    pub j: i64,
}

/// Region label of lattice point `(a, b)`.
pub fn region_label(a: i64, b: i64, params: &HardParams, inst: &IterInstance) -> RegionLabel {
    Layout::new(*params, inst).classify(a, b).0
}

/// Prescribed value and gradient at lattice point `(a, b)` (unnormalized).
pub fn corner_data(a: i64, b: i64, params: &HardParams, inst: &IterInstance) -> GridCorner {
    Layout::new(*params, inst).corner(a, b)
}
