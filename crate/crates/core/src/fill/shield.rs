//! Shield repair: reference-connected tiles in the band around critical nets.
//!
//! Candidates sit at a distance in `[s_def, s_ndr)` from some critical shape,
//! exactly the band the NDR pass kept empty. They are inserted breadth-first
//! from reference shapes, so each new tile abuts something already tied to a
//! reference net and no shield tile is ever left floating.

use std::collections::{BTreeSet, VecDeque};

use super::{reference_mask, FillState, PhaseEntry, PlanNote};
use crate::error::{Error, Result};
use crate::geom::{dist_sq, shared_boundary, Rect};
use crate::index::{ShapeIndex, ShapeRef};
use crate::layout::{FillKind, Layout};

use super::{FillPlan, PlanMode};

struct ShieldCtx {
    is_ref: Vec<bool>,
    is_crit: Vec<bool>,
}

impl ShieldCtx {
    fn new(layout: &Layout, critical: &BTreeSet<String>) -> Self {
        ShieldCtx {
            is_ref: reference_mask(layout),
            is_crit: layout
                .nets
                .iter()
                .map(|n| critical.contains(&n.id))
                .collect(),
        }
    }
}

fn may_abut(state: &FillState<'_>, ctx: &ShieldCtx, r: ShapeRef) -> bool {
    match r {
        ShapeRef::Net { net, .. } => ctx.is_ref[net],
        ShapeRef::Fill { fill } => state.fills[fill].kind == FillKind::Shield,
    }
}

/// No overlap; `s_def` from everything except reference shapes and shield
/// tiles, which may instead be touched.
fn shield_legal(state: &FillState<'_>, ctx: &ShieldCtx, layer: usize, tile: &Rect) -> bool {
    let s_def = state.rules().s_def;
    let s2 = s_def as i128 * s_def as i128;
    state.layout.die.contains_rect(tile)
        && state
            .index
            .touching(layer, &tile.expand(s_def))
            .all(|(rect, r)| {
                if tile.interiors_intersect(rect) {
                    return false;
                }
                let d2 = dist_sq(tile, rect);
                (d2 == 0 && may_abut(state, ctx, r)) || d2 >= s2
            })
}

fn near_critical(state: &FillState<'_>, ctx: &ShieldCtx, layer: usize, tile: &Rect) -> bool {
    let s_ndr = state.rules().s_ndr;
    let s2 = s_ndr as i128 * s_ndr as i128;
    state
        .index
        .touching(layer, &tile.expand(s_ndr))
        .any(|(rect, r)| {
            matches!(r, ShapeRef::Net { net, .. } if ctx.is_crit[net]) && dist_sq(tile, rect) < s2
        })
}

/// Tile positions along all four sides of `c`. Rows run parallel to each
/// side at a distance taken from `offsets`, and are tiled edge-to-edge from
/// every grid phase in `phases` so consecutive tiles abut.
#[allow(clippy::too_many_arguments)]
fn band_tiles(
    c: &Rect,
    size: i64,
    s_def: i64,
    s_ndr: i64,
    connectors: &[Rect],
    x_phases: &BTreeSet<i64>,
    y_phases: &BTreeSet<i64>,
    out: &mut BTreeSet<(i64, i64)>,
) {
    let in_band = |d: i64| (s_def..s_ndr).contains(&d);
    let row = |lo: i64, hi: i64, phase: i64| {
        let start = lo - (lo - phase).rem_euclid(size);
        (0..)
            .map(move |k| start + k * size)
            .take_while(move |p| *p <= hi)
    };
    // Offsets that make a row flush against a connector edge, plus s_def.
    let above: BTreeSet<i64> = std::iter::once(s_def)
        .chain(
            connectors
                .iter()
                .flat_map(|r| [r.y_lo - c.y_hi - size, r.y_hi - c.y_hi]),
        )
        .filter(|&d| in_band(d))
        .collect();
    let below: BTreeSet<i64> = std::iter::once(s_def)
        .chain(
            connectors
                .iter()
                .flat_map(|r| [c.y_lo - r.y_hi - size, c.y_lo - r.y_lo]),
        )
        .filter(|&d| in_band(d))
        .collect();
    let right: BTreeSet<i64> = std::iter::once(s_def)
        .chain(
            connectors
                .iter()
                .flat_map(|r| [r.x_lo - c.x_hi - size, r.x_hi - c.x_hi]),
        )
        .filter(|&d| in_band(d))
        .collect();
    let left: BTreeSet<i64> = std::iter::once(s_def)
        .chain(
            connectors
                .iter()
                .flat_map(|r| [c.x_lo - r.x_hi - size, c.x_lo - r.x_lo]),
        )
        .filter(|&d| in_band(d))
        .collect();

    let (xa, xb) = (c.x_lo - s_ndr - size, c.x_hi + s_ndr);
    let (ya, yb) = (c.y_lo - s_ndr - size, c.y_hi + s_ndr);
    for &p in x_phases {
        for x in row(xa, xb, p) {
            for &d in &above {
                out.insert((c.y_hi + d, x));
            }
            for &d in &below {
                out.insert((c.y_lo - d - size, x));
            }
        }
    }
    for &p in y_phases {
        for y in row(ya, yb, p) {
            for &d in &right {
                out.insert((y, c.x_hi + d));
            }
            for &d in &left {
                out.insert((y, c.x_lo - d - size));
            }
        }
    }
}

/// Shield candidates inside `window`, in (y, x) order.
fn shield_candidates(
    state: &FillState<'_>,
    ctx: &ShieldCtx,
    layer: usize,
    window: &Rect,
) -> Vec<Rect> {
    let rules = state.rules();
    let size = rules.tile_size;
    let search = window.expand(rules.s_ndr + size);
    let mut crit = Vec::new();
    let mut connectors = Vec::new();
    for (rect, r) in state.index.touching(layer, &search) {
        match r {
            ShapeRef::Net { net, .. } if ctx.is_crit[net] => crit.push(*rect),
            _ if may_abut(state, ctx, r) => connectors.push(*rect),
            _ => {}
        }
    }
    crit.sort();
    connectors.sort();
    let die = &state.layout.die;
    let x_phases: BTreeSet<i64> = std::iter::once(die.x_lo)
        .chain(connectors.iter().flat_map(|r| [r.x_lo, r.x_hi]))
        .map(|v| v.rem_euclid(size))
        .collect();
    let y_phases: BTreeSet<i64> = std::iter::once(die.y_lo)
        .chain(connectors.iter().flat_map(|r| [r.y_lo, r.y_hi]))
        .map(|v| v.rem_euclid(size))
        .collect();

    let mut spots = BTreeSet::new();
    for c in &crit {
        band_tiles(
            c,
            size,
            rules.s_def,
            rules.s_ndr,
            &connectors,
            &x_phases,
            &y_phases,
            &mut spots,
        );
    }
    spots
        .into_iter()
        .map(|(y, x)| Rect::square(x, y, size))
        .filter(|t| window.contains_rect(t))
        .filter(|t| shield_legal(state, ctx, layer, t) && near_critical(state, ctx, layer, t))
        .collect()
}

/// Group of the connected shape `tile` would abut, if any. Reference shapes
/// give their net position; shield tiles pass on their own group.
fn attach_group(state: &FillState<'_>, ctx: &ShieldCtx, layer: usize, tile: &Rect) -> Option<u32> {
    state
        .index
        .touching(layer, tile)
        .filter(|(rect, _)| shared_boundary(tile, rect) > 0)
        .filter_map(|(_, r)| match r {
            ShapeRef::Net { net, .. } if ctx.is_ref[net] => Some(net as u32),
            ShapeRef::Fill { fill } if state.fills[fill].kind == FillKind::Shield => {
                state.fills[fill].shield_group
            }
            _ => None,
        })
        .min()
}

fn repair_window(state: &mut FillState<'_>, ctx: &ShieldCtx, layer: usize, w: usize) -> usize {
    let target = state.rules().rho_target();
    let window = state.grid.window(w);
    let cands = shield_candidates(state, ctx, layer, &window);
    let cand_index = ShapeIndex::bulk(
        1,
        cands
            .iter()
            .enumerate()
            .map(|(i, r)| (0, *r, ShapeRef::Fill { fill: i })),
    );
    let mut queued = vec![false; cands.len()];
    let mut queue = VecDeque::new();
    for (i, c) in cands.iter().enumerate() {
        if let Some(g) = attach_group(state, ctx, layer, c) {
            queued[i] = true;
            queue.push_back((i, g));
        }
    }

    let mut added = 0;
    while let Some((i, group)) = queue.pop_front() {
        if state.density(layer, w) >= target {
            break;
        }
        let tile = cands[i];
        if !shield_legal(state, ctx, layer, &tile) || !state.fits_density(layer, &tile) {
            continue;
        }
        state.insert(layer, tile, FillKind::Shield, Some(group));
        added += 1;
        let mut next: Vec<usize> = cand_index
            .touching(0, &tile)
            .filter_map(|(rect, r)| match r {
                ShapeRef::Fill { fill } if !queued[fill] && shared_boundary(&tile, rect) > 0 => {
                    Some(fill)
                }
                _ => None,
            })
            .collect();
        next.sort_unstable();
        for j in next {
            queued[j] = true;
            queue.push_back((j, group));
        }
    }
    added
}

/// Runs shield repair over `violating` (layer, window) pairs, worst density
/// first.
pub(crate) fn shield_pass(
    state: &mut FillState<'_>,
    mut violating: Vec<(usize, usize)>,
    critical: &BTreeSet<String>,
) -> (Vec<PhaseEntry>, Vec<PlanNote>) {
    if !violating.is_empty() {
        state.reindex();
    }
    let ctx = ShieldCtx::new(state.layout, critical);
    violating.sort_by(|a, b| {
        state
            .density(a.0, a.1)
            .total_cmp(&state.density(b.0, b.1))
            .then(a.cmp(b))
    });
    let mut log = Vec::new();
    let mut notes = Vec::new();
    for (layer, w) in violating {
        let window = state.grid.window(w);
        let has_ref = state
            .index
            .touching(layer, &window)
            .any(|(_, r)| matches!(r, ShapeRef::Net { net, .. } if ctx.is_ref[net]));
        let added = if has_ref {
            repair_window(state, &ctx, layer, w)
        } else {
            let err = Error::NoRef(format!(
                "no reference shape on layer {} reaches window {window}",
                state.layout.layers[layer].name
            ));
            notes.push(PlanNote {
                code: err.code().to_string(),
                layer,
                window,
                message: err.to_string(),
            });
            0
        };
        log.push(PhaseEntry {
            phase: "shield".to_string(),
            layer,
            window,
            tiles_added: added,
        });
    }
    (log, notes)
}

/// Shield repair on a layout that already carries the NDR-phase fill.
/// `violating_windows` must be density windows of this layout's grid.
/// Returns only the tiles this phase adds.
pub fn shield_fill_phase(
    layout: &Layout,
    violating_windows: &[(usize, Rect)],
    critical: &BTreeSet<String>,
) -> Result<FillPlan> {
    let mut state = FillState::new(layout)?;
    let mut violating = Vec::with_capacity(violating_windows.len());
    for (layer, rect) in violating_windows {
        let w = (0..state.grid.len())
            .find(|&w| state.grid.window(w) == *rect)
            .ok_or_else(|| {
                Error::Rules(format!("{rect} is not a density window of this layout"))
            })?;
        if *layer >= layout.layers.len() {
            return Err(Error::Rules(format!("layer {layer} does not exist")));
        }
        violating.push((*layer, w));
    }
    let (log, notes) = shield_pass(&mut state, violating, critical);
    Ok(state.finish(PlanMode::TimingDriven, log, notes))
}
