//! Sliding-window metal density.
//!
//! Areas stay in integer nm² until a density ratio is reported.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{union_area, Rect};
use crate::index::ShapeIndex;
use crate::layout::{DesignRules, Layout};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DensityStatus {
    Low,
    Ok,
    High,
}

impl DensityStatus {
    pub fn classify(density: f64, rules: &DesignRules) -> Self {
        if density < rules.rho_min {
            DensityStatus::Low
        } else if density > rules.rho_max {
            DensityStatus::High
        } else {
            DensityStatus::Ok
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DensityStatus::Low => "Low",
            DensityStatus::Ok => "Ok",
            DensityStatus::High => "High",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityWindow {
    pub layer: usize,
    pub window: Rect,
    pub density: f64,
    pub status: DensityStatus,
}

/// Window origins along one axis: multiples of `step` from `lo`, with the
/// last window clamped so it ends exactly at `hi`.
fn positions(lo: i64, hi: i64, size: i64, step: i64) -> Vec<i64> {
    let mut out = Vec::new();
    let mut p = lo;
    while p + size <= hi {
        out.push(p);
        p += step;
    }
    let last = hi - size;
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

/// Fixed grid of density windows over a die.
#[derive(Clone, Debug)]
pub struct WindowGrid {
    pub xs: Vec<i64>,
    pub ys: Vec<i64>,
    pub size: i64,
}

impl WindowGrid {
    pub fn new(die: &Rect, rules: &DesignRules) -> Result<Self> {
        let size = rules.window_size;
        if size > die.width() || size > die.height() {
            return Err(Error::Rules(format!(
                "window_W {size} exceeds die extent {}x{}",
                die.width(),
                die.height()
            )));
        }
        if size <= 0 || rules.window_step <= 0 {
            return Err(Error::Rules("window size and step must be positive".into()));
        }
        Ok(WindowGrid {
            xs: positions(die.x_lo, die.x_hi, size, rules.window_step),
            ys: positions(die.y_lo, die.y_hi, size, rules.window_step),
            size,
        })
    }

    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Window by flat index, row-major in (y, x).
    pub fn window(&self, idx: usize) -> Rect {
        let (row, col) = (idx / self.xs.len(), idx % self.xs.len());
        Rect::square(self.xs[col], self.ys[row], self.size)
    }

    pub fn windows(&self) -> impl Iterator<Item = Rect> + '_ {
        (0..self.len()).map(|i| self.window(i))
    }

    /// Flat indices of windows whose interior intersects `rect`.
    pub fn overlapping(&self, rect: &Rect) -> impl Iterator<Item = usize> + '_ {
        let cols = axis_range(&self.xs, self.size, rect.x_lo, rect.x_hi);
        let rows = axis_range(&self.ys, self.size, rect.y_lo, rect.y_hi);
        let ncols = self.xs.len();
        rows.flat_map(move |r| cols.clone().map(move |c| r * ncols + c))
    }
}

fn axis_range(starts: &[i64], size: i64, lo: i64, hi: i64) -> std::ops::Range<usize> {
    // start < hi and start + size > lo
    let end = starts.partition_point(|&s| s < hi);
    let begin = starts.partition_point(|&s| s + size <= lo);
    begin..end.max(begin)
}

/// Density windows of edge `window_W` stepped by `window_step` from the die
/// origin, sorted by (y, x).
pub fn enumerate_windows(die: &Rect, rules: &DesignRules) -> Result<Vec<Rect>> {
    Ok(WindowGrid::new(die, rules)?.windows().collect())
}

/// Union of all metal on `layer` clipped to `window`, in nm².
pub fn window_metal_area(index: &ShapeIndex, layer: usize, window: &Rect) -> i128 {
    let clipped: Vec<Rect> = index
        .touching(layer, window)
        .filter_map(|(r, _)| r.clip(window))
        .collect();
    union_area(&clipped)
}

pub fn window_density(layout: &Layout, layer: usize, window: &Rect) -> f64 {
    let index = layout.build_index();
    window_metal_area(&index, layer, window) as f64 / window.area() as f64
}

/// Cut positions along one axis: every window edge.
fn cuts(starts: &[i64], size: i64) -> Vec<i64> {
    let mut c: Vec<i64> = starts.iter().flat_map(|&s| [s, s + size]).collect();
    c.sort_unstable();
    c.dedup();
    c
}

/// Cells `i` with `cuts[i] < hi` and `cuts[i + 1] > lo`.
fn cell_range(cuts: &[i64], lo: i64, hi: i64) -> std::ops::Range<usize> {
    let begin = cuts.partition_point(|&c| c <= lo).saturating_sub(1);
    let end = cuts.partition_point(|&c| c < hi).min(cuts.len() - 1);
    begin..end.max(begin)
}

/// Metal area of every window, indexed `[layer][window]`.
///
/// Window edges cut the die into disjoint cells, so a window's union area is
/// the sum of the union areas of the cells it covers. Each shape is clipped
/// into the few cells it touches instead of into every overlapping window.
pub fn window_areas(layout: &Layout, grid: &WindowGrid) -> Vec<Vec<i128>> {
    let cx = cuts(&grid.xs, grid.size);
    let cy = cuts(&grid.ys, grid.size);
    let (ncx, ncy) = (cx.len() - 1, cy.len() - 1);
    let shapes = layout
        .nets
        .iter()
        .flat_map(|n| n.shapes.iter().map(|s| (s.layer, s.rect)))
        .chain(layout.fills.iter().map(|f| (f.layer, f.rect)));
    let mut buckets: Vec<Vec<Vec<Rect>>> = vec![vec![Vec::new(); ncx * ncy]; layout.layers.len()];
    for (layer, rect) in shapes {
        for iy in cell_range(&cy, rect.y_lo, rect.y_hi) {
            for ix in cell_range(&cx, rect.x_lo, rect.x_hi) {
                let cell = Rect::new(cx[ix], cy[iy], cx[ix + 1], cy[iy + 1]);
                if let Some(c) = rect.clip(&cell) {
                    buckets[layer][iy * ncx + ix].push(c);
                }
            }
        }
    }
    buckets
        .into_iter()
        .map(|cells| {
            // 2-D prefix sums over cell areas.
            let mut pre = vec![0i128; (ncx + 1) * (ncy + 1)];
            for iy in 0..ncy {
                for ix in 0..ncx {
                    let a = union_area(&cells[iy * ncx + ix]);
                    pre[(iy + 1) * (ncx + 1) + ix + 1] =
                        a + pre[iy * (ncx + 1) + ix + 1] + pre[(iy + 1) * (ncx + 1) + ix]
                            - pre[iy * (ncx + 1) + ix];
                }
            }
            grid.windows()
                .map(|w| {
                    let (x0, x1) = (
                        cx.partition_point(|&c| c < w.x_lo),
                        cx.partition_point(|&c| c < w.x_hi),
                    );
                    let (y0, y1) = (
                        cy.partition_point(|&c| c < w.y_lo),
                        cy.partition_point(|&c| c < w.y_hi),
                    );
                    let at = |x: usize, y: usize| pre[y * (ncx + 1) + x];
                    at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0)
                })
                .collect()
        })
        .collect()
}

/// One entry per (layer, window), ordered by (layer, y, x).
pub fn density_report(layout: &Layout) -> Result<Vec<DensityWindow>> {
    let grid = WindowGrid::new(&layout.die, &layout.rules)?;
    let areas = window_areas(layout, &grid);
    let mut out = Vec::with_capacity(grid.len() * layout.layers.len());
    for (layer, per_window) in areas.iter().enumerate() {
        for (window, &area) in grid.windows().zip(per_window) {
            let density = area as f64 / window.area() as f64;
            out.push(DensityWindow {
                layer,
                window,
                density,
                status: DensityStatus::classify(density, &layout.rules),
            });
        }
    }
    Ok(out)
}

pub fn report_csv(report: &[DensityWindow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["layer", "window_x", "window_y", "density", "status"])
        .expect("in-memory write");
    for d in report {
        w.write_record([
            d.layer.to_string(),
            d.window.x_lo.to_string(),
            d.window.y_lo.to_string(),
            format!("{:.6}", d.density),
            d.status.as_str().to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}
