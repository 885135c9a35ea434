//! Rectilinear primitives on the integer nanometer grid.
//!
//! Everything here works in `i64` nanometers; squared distances and areas are
//! carried as `i128` so no product of two coordinates can overflow.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Nanometers per micrometer.
pub const NM_PER_UM: f64 = 1000.0;

/// Axis-aligned rectangle in integer nanometers, `[x_lo, y_lo, x_hi, y_hi]`.
///
/// A well-formed rectangle has `x_lo < x_hi` and `y_lo < y_hi`; the layout
/// validator rejects anything else, so the query helpers below assume it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rect {
    pub x_lo: i64,
    pub y_lo: i64,
    pub x_hi: i64,
    pub y_hi: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Separation between two rectangles as reported by [`rect_gap`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gap {
    /// Interiors intersect.
    Overlapping,
    /// Edge-to-edge or corner-to-corner distance in nm (0 when touching).
    Apart(f64),
}

impl Gap {
    pub fn distance(self) -> Option<f64> {
        match self {
            Gap::Overlapping => None,
            Gap::Apart(d) => Some(d),
        }
    }
}

impl Rect {
    pub const fn new(x_lo: i64, y_lo: i64, x_hi: i64, y_hi: i64) -> Self {
        Rect {
            x_lo,
            y_lo,
            x_hi,
            y_hi,
        }
    }

    /// Square of edge `size` with its lower-left corner at `(x, y)`.
    pub const fn square(x: i64, y: i64, size: i64) -> Self {
        Rect::new(x, y, x + size, y + size)
    }

    pub fn is_well_formed(&self) -> bool {
        self.x_lo < self.x_hi && self.y_lo < self.y_hi
    }

    pub fn width(&self) -> i64 {
        self.x_hi - self.x_lo
    }

    pub fn height(&self) -> i64 {
        self.y_hi - self.y_lo
    }

    pub fn area(&self) -> i128 {
        self.width() as i128 * self.height() as i128
    }

    pub fn span(&self, axis: Axis) -> (i64, i64) {
        match axis {
            Axis::X => (self.x_lo, self.x_hi),
            Axis::Y => (self.y_lo, self.y_hi),
        }
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.x_lo <= other.x_lo
            && self.y_lo <= other.y_lo
            && other.x_hi <= self.x_hi
            && other.y_hi <= self.y_hi
    }

    /// True when the closed rectangles share at least one point.
    pub fn touches(&self, other: &Rect) -> bool {
        self.x_lo <= other.x_hi
            && other.x_lo <= self.x_hi
            && self.y_lo <= other.y_hi
            && other.y_lo <= self.y_hi
    }

    /// True when the open interiors intersect.
    pub fn interiors_intersect(&self, other: &Rect) -> bool {
        self.x_lo < other.x_hi
            && other.x_lo < self.x_hi
            && self.y_lo < other.y_hi
            && other.y_lo < self.y_hi
    }

    /// Intersection with positive area, if any.
    pub fn clip(&self, other: &Rect) -> Option<Rect> {
        let r = Rect::new(
            self.x_lo.max(other.x_lo),
            self.y_lo.max(other.y_lo),
            self.x_hi.min(other.x_hi),
            self.y_hi.min(other.y_hi),
        );
        r.is_well_formed().then_some(r)
    }

    pub fn expand(&self, by: i64) -> Rect {
        Rect::new(
            self.x_lo - by,
            self.y_lo - by,
            self.x_hi + by,
            self.y_hi + by,
        )
    }

    /// The four boundary segments as zero-thickness rectangles
    /// (bottom, top, left, right).
    pub fn edges(&self) -> [Rect; 4] {
        [
            Rect::new(self.x_lo, self.y_lo, self.x_hi, self.y_lo),
            Rect::new(self.x_lo, self.y_hi, self.x_hi, self.y_hi),
            Rect::new(self.x_lo, self.y_lo, self.x_lo, self.y_hi),
            Rect::new(self.x_hi, self.y_lo, self.x_hi, self.y_hi),
        ]
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{},{},{},{}]",
            self.x_lo, self.y_lo, self.x_hi, self.y_hi
        )
    }
}

impl Serialize for Rect {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x_lo, self.y_lo, self.x_hi, self.y_hi].serialize(s)
    }
}

/// A coordinate as it may appear in JSON: integer nm, or a float snapped to
/// the nearest nm.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawCoord {
    Int(i64),
    Float(f64),
}

impl RawCoord {
    fn snap(self) -> Result<i64, String> {
        match self {
            RawCoord::Int(v) => Ok(v),
            RawCoord::Float(v) if v.is_finite() && v.abs() < 9.0e15 => Ok(v.round() as i64),
            RawCoord::Float(v) => Err(format!("coordinate {v} is not representable")),
        }
    }
}

impl<'de> Deserialize<'de> for Rect {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [a, b, c, e] = <[RawCoord; 4]>::deserialize(d)?;
        let snap = |v: RawCoord| v.snap().map_err(serde::de::Error::custom);
        Ok(Rect::new(snap(a)?, snap(b)?, snap(c)?, snap(e)?))
    }
}

/// Separation of two closed intervals (0 when they touch or overlap).
fn interval_gap(a: (i64, i64), b: (i64, i64)) -> i64 {
    (b.0 - a.1).max(a.0 - b.1).max(0)
}

/// Squared plan-view distance between two closed rectangles, or `None` when
/// their interiors intersect. Touching rectangles give `Some(0)`.
pub fn gap_sq(a: &Rect, b: &Rect) -> Option<i128> {
    if a.interiors_intersect(b) {
        return None;
    }
    Some(dist_sq(a, b))
}

/// Squared distance between closed rectangles (0 when they touch or overlap).
/// Works for zero-thickness rectangles such as edges.
pub fn dist_sq(a: &Rect, b: &Rect) -> i128 {
    let dx = interval_gap(a.span(Axis::X), b.span(Axis::X)) as i128;
    let dy = interval_gap(a.span(Axis::Y), b.span(Axis::Y)) as i128;
    dx * dx + dy * dy
}

/// True when the plan-view gap between `a` and `b` is at least `spacing`.
/// Overlapping rectangles never satisfy a spacing rule.
pub fn gap_at_least(a: &Rect, b: &Rect, spacing: i64) -> bool {
    match gap_sq(a, b) {
        None => false,
        Some(d2) => d2 >= spacing as i128 * spacing as i128,
    }
}

/// Minimum separation of two rectangles.
///
/// When the projections overlap on one axis this is the axis-aligned wall
/// distance; when they overlap on neither it is the Euclidean corner
/// distance.
pub fn rect_gap(a: &Rect, b: &Rect) -> Gap {
    match gap_sq(a, b) {
        None => Gap::Overlapping,
        Some(d2) => {
            let dx = interval_gap(a.span(Axis::X), b.span(Axis::X));
            let dy = interval_gap(a.span(Axis::Y), b.span(Axis::Y));
            if dx == 0 || dy == 0 {
                Gap::Apart(dx.max(dy) as f64)
            } else {
                Gap::Apart((d2 as f64).sqrt())
            }
        }
    }
}

/// Length of the intersection of the two projections on `axis`.
pub fn overlap_len(a: &Rect, b: &Rect, axis: Axis) -> i64 {
    let (a_lo, a_hi) = a.span(axis);
    let (b_lo, b_hi) = b.span(axis);
    (a_hi.min(b_hi) - a_lo.max(b_lo)).max(0)
}

/// Plan-view intersection area in nm².
pub fn overlap_area(a: &Rect, b: &Rect) -> i128 {
    overlap_len(a, b, Axis::X) as i128 * overlap_len(a, b, Axis::Y) as i128
}

/// Length of the boundary segment shared by two rectangles with disjoint
/// interiors. Corner contact yields 0.
pub fn shared_boundary(a: &Rect, b: &Rect) -> i64 {
    if a.interiors_intersect(b) {
        return 0;
    }
    if a.x_hi == b.x_lo || b.x_hi == a.x_lo {
        overlap_len(a, b, Axis::Y)
    } else if a.y_hi == b.y_lo || b.y_hi == a.y_lo {
        overlap_len(a, b, Axis::X)
    } else {
        0
    }
}

/// Area of the union of `rects`, exact in nm².
///
/// Sweep over x with a segment tree over the compressed y coordinates that
/// tracks covered length.
pub fn union_area(rects: &[Rect]) -> i128 {
    let rects: Vec<&Rect> = rects.iter().filter(|r| r.is_well_formed()).collect();
    if rects.is_empty() {
        return 0;
    }
    let mut ys: Vec<i64> = rects.iter().flat_map(|r| [r.y_lo, r.y_hi]).collect();
    ys.sort_unstable();
    ys.dedup();

    // (x, delta, y_lo index, y_hi index)
    let mut events: Vec<(i64, i32, usize, usize)> = Vec::with_capacity(rects.len() * 2);
    for r in &rects {
        let lo = ys.binary_search(&r.y_lo).unwrap();
        let hi = ys.binary_search(&r.y_hi).unwrap();
        events.push((r.x_lo, 1, lo, hi));
        events.push((r.x_hi, -1, lo, hi));
    }
    events.sort_unstable();

    let mut tree = CoverTree::new(&ys);
    let mut area = 0i128;
    let mut last_x = events[0].0;
    for (x, delta, lo, hi) in events {
        area += tree.covered() as i128 * (x - last_x) as i128;
        last_x = x;
        tree.update(1, 0, ys.len() - 1, lo, hi, delta);
    }
    area
}

struct CoverTree<'a> {
    ys: &'a [i64],
    count: Vec<i32>,
    len: Vec<i64>,
}

impl<'a> CoverTree<'a> {
    fn new(ys: &'a [i64]) -> Self {
        let n = ys.len().max(2) * 4;
        CoverTree {
            ys,
            count: vec![0; n],
            len: vec![0; n],
        }
    }

    fn covered(&self) -> i64 {
        self.len[1]
    }

    // Node covers elementary segments [lo, hi) of ys.
    fn update(&mut self, node: usize, lo: usize, hi: usize, a: usize, b: usize, delta: i32) {
        if b <= lo || hi <= a || lo >= hi {
            return;
        }
        if a <= lo && hi <= b {
            self.count[node] += delta;
        } else {
            let mid = (lo + hi) / 2;
            self.update(node * 2, lo, mid, a, b, delta);
            self.update(node * 2 + 1, mid, hi, a, b, delta);
        }
        self.len[node] = if self.count[node] > 0 {
            self.ys[hi] - self.ys[lo]
        } else if hi - lo == 1 {
            0
        } else {
            self.len[node * 2] + self.len[node * 2 + 1]
        };
    }
}
