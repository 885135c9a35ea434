//! Dummy fill insertion.
//!
//! Two flows share one engine state:
//!
//! * regular fill: every low density window is topped up toward the target
//!   density with floating tiles that keep `s_def` from all metal;
//! * timing-driven fill: the same pass, but with `s_ndr` around critical-net
//!   shapes, followed by a repair pass that drops reference-connected shield
//!   tiles into the `[s_def, s_ndr)` band around critical nets for every
//!   window the first pass left below `rho_min`.
//!
//! Windows and candidate tiles are always visited in (layer, y, x) order, so
//! identical inputs give identical plans.

mod connectivity;
mod shield;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::density::{DensityStatus, WindowGrid};
use crate::error::{Error, Result};
use crate::geom::{gap_at_least, Rect};
use crate::index::{ShapeIndex, ShapeRef};
use crate::layout::{FillKind, FillShape, Layout, Net, NetClass};

pub use connectivity::check_shield_connectivity;
pub use shield::shield_fill_phase;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanMode {
    Regular,
    TimingDriven,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfeasibleWindow {
    pub layer: usize,
    pub window: Rect,
    pub density: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseEntry {
    /// `regular`, `ndr` or `shield`.
    pub phase: String,
    pub layer: usize,
    pub window: Rect,
    pub tiles_added: usize,
}

/// Per-window diagnostic that did not abort the plan (e.g. `E_NOREF`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanNote {
    pub code: String,
    pub layer: usize,
    pub window: Rect,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FillPlan {
    pub mode: PlanMode,
    pub inserted: Vec<FillShape>,
    pub infeasible_windows: Vec<InfeasibleWindow>,
    pub phase_log: Vec<PhaseEntry>,
    #[serde(default)]
    pub notes: Vec<PlanNote>,
}

impl FillPlan {
    pub fn to_json(&self) -> String {
        crate::to_canonical_json(self)
    }

    /// The input layout with this plan's tiles appended to its fills.
    pub fn apply(&self, layout: &Layout) -> Layout {
        let mut fills = layout.fills.clone();
        fills.extend(self.inserted.iter().cloned());
        layout.with_fills(fills)
    }
}

/// What a candidate tile is being spaced against.
#[derive(Clone, Copy, Debug)]
pub enum Obstacle<'a> {
    Net(&'a Net),
    Fill(&'a FillShape),
}

/// Grid anchors of candidate tiles on one layer, with the ones some
/// obstacle rules out.
struct TileGrid {
    origin: (i64, i64),
    pitch: i64,
    size: i64,
    nx: usize,
    ny: usize,
    blocked: Vec<bool>,
}

impl TileGrid {
    fn new(die: &Rect, size: i64, pitch: i64) -> Self {
        let count = |span: i64| {
            if span < size {
                0
            } else {
                ((span - size) / pitch + 1) as usize
            }
        };
        let (nx, ny) = (count(die.width()), count(die.height()));
        TileGrid {
            origin: (die.x_lo, die.y_lo),
            pitch,
            size,
            nx,
            ny,
            blocked: vec![false; nx * ny],
        }
    }

    fn tile(&self, ix: usize, iy: usize) -> Rect {
        Rect::square(
            self.origin.0 + ix as i64 * self.pitch,
            self.origin.1 + iy as i64 * self.pitch,
            self.size,
        )
    }

    /// Anchor indices along one axis whose tile lies inside `[lo, hi]`.
    fn inside(&self, lo: i64, hi: i64, origin: i64, n: usize) -> std::ops::Range<usize> {
        let first = (lo - origin + self.pitch - 1).div_euclid(self.pitch).max(0);
        let last = (hi - self.size - origin).div_euclid(self.pitch) + 1;
        let clamp = |v: i64| v.clamp(0, n as i64) as usize;
        clamp(first)..clamp(last).max(clamp(first))
    }

    /// Anchor indices along one axis whose tile could come within `spacing`
    /// of `[lo, hi]`.
    fn near(
        &self,
        lo: i64,
        hi: i64,
        spacing: i64,
        origin: i64,
        n: usize,
    ) -> std::ops::Range<usize> {
        let first = (lo - spacing - self.size - origin).div_euclid(self.pitch);
        let last = (hi + spacing - origin).div_euclid(self.pitch) + 1;
        let clamp = |v: i64| v.clamp(0, n as i64) as usize;
        clamp(first)..clamp(last).max(clamp(first))
    }

    /// Marks every tile closer than `spacing` to `obstacle`.
    fn block(&mut self, obstacle: &Rect, spacing: i64) {
        let xs = self.near(
            obstacle.x_lo,
            obstacle.x_hi,
            spacing,
            self.origin.0,
            self.nx,
        );
        let ys = self.near(
            obstacle.y_lo,
            obstacle.y_hi,
            spacing,
            self.origin.1,
            self.ny,
        );
        for iy in ys {
            for ix in xs.clone() {
                if !gap_at_least(&self.tile(ix, iy), obstacle, spacing) {
                    self.blocked[iy * self.nx + ix] = true;
                }
            }
        }
    }

    /// Open anchors fully inside `region`, in scanline order.
    fn open_in(&self, region: &Rect) -> Vec<(usize, usize)> {
        let xs = self.inside(region.x_lo, region.x_hi, self.origin.0, self.nx);
        let ys = self.inside(region.y_lo, region.y_hi, self.origin.1, self.ny);
        ys.flat_map(|iy| xs.clone().map(move |ix| (ix, iy)))
            .filter(|&(ix, iy)| !self.blocked[iy * self.nx + ix])
            .collect()
    }
}

/// Mutable fill state: the nets, every fill placed so far, an index over
/// both, and the exact metal area of every density window.
pub(crate) struct FillState<'a> {
    layout: &'a Layout,
    fills: Vec<FillShape>,
    first_new: usize,
    index: ShapeIndex,
    grid: WindowGrid,
    /// `area[layer][window]` in nm².
    area: Vec<Vec<i128>>,
    window_area: i128,
    next_id: u64,
    /// Set when fills were recorded without being indexed.
    index_stale: bool,
}

impl<'a> FillState<'a> {
    pub(crate) fn new(layout: &'a Layout) -> Result<Self> {
        let grid = WindowGrid::new(&layout.die, &layout.rules)?;
        let index = layout.build_index();
        let area = crate::density::window_areas(layout, &grid);
        let window_area = (grid.size as i128) * (grid.size as i128);
        Ok(FillState {
            layout,
            fills: layout.fills.clone(),
            first_new: layout.fills.len(),
            index,
            grid,
            area,
            window_area,
            next_id: layout.fills.iter().map(|f| f.id).max().map_or(1, |m| m + 1),
            index_stale: false,
        })
    }

    fn rules(&self) -> &crate::layout::DesignRules {
        &self.layout.rules
    }

    fn density(&self, layer: usize, window: usize) -> f64 {
        self.area[layer][window] as f64 / self.window_area as f64
    }

    fn obstacle(&self, r: ShapeRef) -> Obstacle<'_> {
        match r {
            ShapeRef::Net { net, .. } => Obstacle::Net(&self.layout.nets[net]),
            ShapeRef::Fill { fill } => Obstacle::Fill(&self.fills[fill]),
        }
    }

    /// (layer, window) pairs currently below `rho_min`, in (layer, y, x) order.
    fn low_windows(&self) -> Vec<(usize, usize)> {
        let rules = self.rules();
        (0..self.area.len())
            .flat_map(|l| (0..self.grid.len()).map(move |w| (l, w)))
            .filter(|&(l, w)| {
                DensityStatus::classify(self.density(l, w), rules) == DensityStatus::Low
            })
            .collect()
    }

    /// Grid tiles fully inside `region` that keep `spacing(S)` from every
    /// existing shape `S` on `layer`, in scanline order.
    /// `reach` bounds every value `spacing` can return.
    fn candidates(
        &self,
        layer: usize,
        region: &Rect,
        spacing: &dyn Fn(Obstacle<'_>) -> i64,
        reach: i64,
    ) -> Vec<Rect> {
        let rules = self.rules();
        let (size, pitch) = (rules.tile_size, rules.tile_pitch);
        let die = &self.layout.die;
        let first =
            |lo: i64, origin: i64| origin + (lo - origin + pitch - 1).div_euclid(pitch) * pitch;
        let mut out = Vec::new();
        let mut y = first(region.y_lo.max(die.y_lo), die.y_lo);
        while y + size <= region.y_hi.min(die.y_hi) {
            let mut x = first(region.x_lo.max(die.x_lo), die.x_lo);
            while x + size <= region.x_hi.min(die.x_hi) {
                let tile = Rect::square(x, y, size);
                let clear = self
                    .index
                    .touching(layer, &tile.expand(reach))
                    .all(|(rect, r)| gap_at_least(&tile, rect, spacing(self.obstacle(r))));
                if clear {
                    out.push(tile);
                }
                x += pitch;
            }
            y += pitch;
        }
        out
    }

    /// True when adding `tile` keeps every window it overlaps at or below
    /// `rho_max`.
    fn fits_density(&self, layer: usize, tile: &Rect) -> bool {
        let rho_max = self.rules().rho_max;
        self.grid.overlapping(tile).all(|w| {
            let win = self.grid.window(w);
            let add = tile.clip(&win).map_or(0, |c| c.area());
            (self.area[layer][w] + add) as f64 / self.window_area as f64 <= rho_max
        })
    }

    fn insert(&mut self, layer: usize, rect: Rect, kind: FillKind, shield_group: Option<u32>) {
        let pos = self.fills.len();
        self.index.insert(layer, rect, ShapeRef::Fill { fill: pos });
        self.record(layer, rect, kind, shield_group);
    }

    /// Adds a fill to the window areas and the fill list but not the index;
    /// callers rebuild the index with [`FillState::reindex`].
    fn record(&mut self, layer: usize, rect: Rect, kind: FillKind, shield_group: Option<u32>) {
        for w in self.grid.overlapping(&rect).collect::<Vec<_>>() {
            let win = self.grid.window(w);
            self.area[layer][w] += rect.clip(&win).map_or(0, |c| c.area());
        }
        self.fills.push(FillShape {
            id: self.next_id,
            layer,
            rect,
            kind,
            shield_group,
        });
        self.next_id += 1;
    }

    /// Candidate grid for `layer` against everything placed so far.
    fn tile_grid(&self, layer: usize, spacing: &dyn Fn(Obstacle<'_>) -> i64) -> TileGrid {
        let rules = self.rules();
        let mut grid = TileGrid::new(&self.layout.die, rules.tile_size, rules.tile_pitch);
        for net in &self.layout.nets {
            let s = spacing(Obstacle::Net(net));
            for shape in net.shapes.iter().filter(|sh| sh.layer == layer) {
                grid.block(&shape.rect, s);
            }
        }
        for fill in self.fills.iter().filter(|f| f.layer == layer) {
            grid.block(&fill.rect, spacing(Obstacle::Fill(fill)));
        }
        grid
    }

    /// Tops up each window in `windows` toward the target density with
    /// floating grid tiles, in the given order. Only grid tiles are placed,
    /// so legality is tracked on per-layer anchor grids rather than by
    /// querying the index for every candidate.
    fn spacing_pass(
        &mut self,
        windows: &[(usize, usize)],
        spacing: &dyn Fn(Obstacle<'_>) -> i64,
        tag: &str,
    ) -> Vec<PhaseEntry> {
        let target = self.rules().rho_target();
        let mut grids: Vec<Option<TileGrid>> =
            (0..self.layout.layers.len()).map(|_| None).collect();
        let mut log = Vec::with_capacity(windows.len());
        for &(layer, w) in windows {
            let window = self.grid.window(w);
            let mut added = 0;
            if self.density(layer, w) < target {
                if grids[layer].is_none() {
                    grids[layer] = Some(self.tile_grid(layer, spacing));
                }
                let open = grids[layer]
                    .as_ref()
                    .map_or_else(Vec::new, |g| g.open_in(&window));
                for (ix, iy) in open {
                    if self.density(layer, w) >= target {
                        break;
                    }
                    let grid = grids[layer].as_mut().expect("built above");
                    if grid.blocked[iy * grid.nx + ix] {
                        continue;
                    }
                    let tile = grid.tile(ix, iy);
                    if self.fits_density(layer, &tile) {
                        self.record(layer, tile, FillKind::Floating, None);
                        let s = spacing(Obstacle::Fill(self.fills.last().expect("just inserted")));
                        let grid = grids[layer].as_mut().expect("built above");
                        grid.blocked[iy * grid.nx + ix] = true;
                        grid.block(&tile, s);
                        added += 1;
                    }
                }
            }
            log.push(PhaseEntry {
                phase: tag.to_string(),
                layer,
                window,
                tiles_added: added,
            });
        }
        self.index_stale = true;
        log
    }

    /// Brings the index up to date after a spacing pass.
    fn reindex(&mut self) {
        if self.index_stale {
            self.index = self.layout.with_fills(self.fills.clone()).build_index();
            self.index_stale = false;
        }
    }

    fn finish(self, mode: PlanMode, phase_log: Vec<PhaseEntry>, notes: Vec<PlanNote>) -> FillPlan {
        let infeasible_windows = self
            .low_windows()
            .into_iter()
            .map(|(layer, w)| InfeasibleWindow {
                layer,
                window: self.grid.window(w),
                density: self.density(layer, w),
            })
            .collect();
        FillPlan {
            mode,
            inserted: self.fills[self.first_new..].to_vec(),
            infeasible_windows,
            phase_log,
            notes,
        }
    }
}

pub(crate) fn require_unfilled(layout: &Layout) -> Result<()> {
    if layout.fills.is_empty() {
        Ok(())
    } else {
        Err(Error::validate(
            "fill flows start from a layout without fill",
            format!("fill {}", layout.fills[0].id),
        ))
    }
}

/// Candidate tiles for `region` on `layer`: squares of `tile_size` on the
/// `tile_pitch` grid anchored at the die origin, fully inside `region`, at
/// least `spacing(S)` from every existing shape `S`. Scanline (y, x) order.
pub fn gen_candidates(
    layout: &Layout,
    layer: usize,
    region: &Rect,
    spacing: impl Fn(Obstacle<'_>) -> i64,
) -> Result<Vec<Rect>> {
    let state = FillState::new(layout)?;
    let reach = layout
        .nets
        .iter()
        .map(|n| spacing(Obstacle::Net(n)))
        .chain(layout.fills.iter().map(|f| spacing(Obstacle::Fill(f))))
        .max()
        .unwrap_or(0);
    Ok(state.candidates(layer, region, &spacing, reach))
}

/// Spacing-rule fill of every low window with `s_def` to all metal.
pub fn regular_fill(layout: &Layout) -> Result<FillPlan> {
    require_unfilled(layout)?;
    let mut state = FillState::new(layout)?;
    let s_def = layout.rules.s_def;
    let low = state.low_windows();
    let log = state.spacing_pass(&low, &|_| s_def, "regular");
    Ok(state.finish(PlanMode::Regular, log, Vec::new()))
}

fn ndr_spacing<'s>(
    layout: &'s Layout,
    critical: &'s BTreeSet<String>,
) -> impl Fn(Obstacle<'_>) -> i64 + 's {
    let (s_def, s_ndr) = (layout.rules.s_def, layout.rules.s_ndr);
    move |o| match o {
        Obstacle::Net(n) if critical.contains(&n.id) => s_ndr,
        _ => s_def,
    }
}

/// First timing-driven phase: regular fill, except floating tiles keep
/// `s_ndr` from shapes of the nets in `critical`.
pub fn ndr_fill_phase(layout: &Layout, critical: &BTreeSet<String>) -> Result<FillPlan> {
    require_unfilled(layout)?;
    let mut state = FillState::new(layout)?;
    let low = state.low_windows();
    let log = state.spacing_pass(&low, &ndr_spacing(layout, critical), "ndr");
    Ok(state.finish(PlanMode::TimingDriven, log, Vec::new()))
}

/// NDR-spaced fill everywhere, then shield repair on windows still below
/// `rho_min`, worst first.
pub fn timing_driven_fill(layout: &Layout, critical: &BTreeSet<String>) -> Result<FillPlan> {
    require_unfilled(layout)?;
    let mut state = FillState::new(layout)?;
    let low = state.low_windows();
    let mut log = state.spacing_pass(&low, &ndr_spacing(layout, critical), "ndr");
    let violating = state.low_windows();
    let (shield_log, notes) = shield::shield_pass(&mut state, violating, critical);
    log.extend(shield_log);
    Ok(state.finish(PlanMode::TimingDriven, log, notes))
}

/// Nets whose class is Reference, by position.
fn reference_mask(layout: &Layout) -> Vec<bool> {
    layout
        .nets
        .iter()
        .map(|n| n.class == NetClass::Reference)
        .collect()
}
