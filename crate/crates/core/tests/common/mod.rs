//! Independent oracles for the integration tests. Nothing here calls the
//! engine's geometry, capacitance or density code; it works from the layout
//! data and the textbook formulas directly.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use fillwright_core::{
    DesignRules, FillKind, FillShape, LayerSpec, Layout, Net, NetClass, Rect, Shape,
};

fn um(nm: i64) -> f64 {
    nm as f64 / 1000.0
}

fn axis_gap(a_lo: i64, a_hi: i64, b_lo: i64, b_hi: i64) -> i64 {
    (b_lo - a_hi).max(a_lo - b_hi).max(0)
}

fn axis_overlap(a_lo: i64, a_hi: i64, b_lo: i64, b_hi: i64) -> i64 {
    (a_hi.min(b_hi) - a_lo.max(b_lo)).max(0)
}

/// Squared distance between closed rectangles (0 if they touch or overlap).
pub fn dist2(a: &Rect, b: &Rect) -> i128 {
    let dx = axis_gap(a.x_lo, a.x_hi, b.x_lo, b.x_hi) as i128;
    let dy = axis_gap(a.y_lo, a.y_hi, b.y_lo, b.y_hi) as i128;
    dx * dx + dy * dy
}

pub fn interiors_overlap(a: &Rect, b: &Rect) -> bool {
    a.x_lo < b.x_hi && b.x_lo < a.x_hi && a.y_lo < b.y_hi && b.y_lo < a.y_hi
}

/// Positive-length shared boundary between rectangles with disjoint interiors.
pub fn abut(a: &Rect, b: &Rect) -> bool {
    if interiors_overlap(a, b) {
        return false;
    }
    let vertical =
        (a.x_hi == b.x_lo || b.x_hi == a.x_lo) && axis_overlap(a.y_lo, a.y_hi, b.y_lo, b.y_hi) > 0;
    let horizontal =
        (a.y_hi == b.y_lo || b.y_hi == a.y_lo) && axis_overlap(a.x_lo, a.x_hi, b.x_lo, b.x_hi) > 0;
    vertical || horizontal
}

// ---------------------------------------------------------------- capacitance

pub fn lateral(h: f64, eps: f64, s: f64, len: f64) -> f64 {
    h * eps / s * len
}

pub fn parallel(eps: f64, area: f64, t: f64) -> f64 {
    eps * area / t
}

pub fn fringing(eps: f64, t: f64, h: f64, len: f64) -> f64 {
    2.0 * PI * eps * len / (t / h).ln()
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleRecord {
    pub lateral: f64,
    pub parallel: f64,
    pub fringing: f64,
    pub total: f64,
}

/// (victim, aggressor label, victim layer, aggressor layer, victim shape, aggressor shape)
pub type OracleKey = (String, String, usize, usize, usize, usize);

fn pair(v: &Shape, a: &Shape, stack: &[LayerSpec], radius: i64) -> Option<OracleRecord> {
    if v.layer.abs_diff(a.layer) > 1 {
        return None;
    }
    let d2 = dist2(&v.rect, &a.rect);
    if d2 > (radius as i128).pow(2) {
        return None;
    }
    let (vr, ar) = (&v.rect, &a.rect);
    let ox = axis_overlap(vr.x_lo, vr.x_hi, ar.x_lo, ar.x_hi);
    let oy = axis_overlap(vr.y_lo, vr.y_hi, ar.y_lo, ar.y_hi);
    let rec = if v.layer == a.layer {
        if d2 == 0 {
            return None;
        }
        let spec = &stack[v.layer];
        let c = if ox > 0 {
            lateral(
                um(spec.thickness),
                spec.permittivity,
                um(axis_gap(vr.y_lo, vr.y_hi, ar.y_lo, ar.y_hi)),
                um(ox),
            )
        } else if oy > 0 {
            lateral(
                um(spec.thickness),
                spec.permittivity,
                um(axis_gap(vr.x_lo, vr.x_hi, ar.x_lo, ar.x_hi)),
                um(oy),
            )
        } else {
            0.0
        };
        OracleRecord {
            lateral: c,
            parallel: 0.0,
            fringing: 0.0,
            total: c,
        }
    } else {
        let lower = &stack[v.layer.min(a.layer)];
        let (eps, t) = (
            lower.permittivity,
            um(lower
                .dielectric_above_t
                .expect("lower layer has a dielectric")),
        );
        let p = parallel(eps, um(ox) * um(oy), t);
        let mut f = 0.0;
        for (own, other) in [(v, a), (a, v)] {
            let h = um(stack[own.layer].thickness);
            let r = own.rect;
            let horizontal = [
                Rect {
                    x_lo: r.x_lo,
                    y_lo: r.y_lo,
                    x_hi: r.x_hi,
                    y_hi: r.y_lo,
                },
                Rect {
                    x_lo: r.x_lo,
                    y_lo: r.y_hi,
                    x_hi: r.x_hi,
                    y_hi: r.y_hi,
                },
            ];
            let vertical = [
                Rect {
                    x_lo: r.x_lo,
                    y_lo: r.y_lo,
                    x_hi: r.x_lo,
                    y_hi: r.y_hi,
                },
                Rect {
                    x_lo: r.x_hi,
                    y_lo: r.y_lo,
                    x_hi: r.x_hi,
                    y_hi: r.y_hi,
                },
            ];
            let o = &other.rect;
            for e in horizontal {
                if dist2(&e, o) <= (radius as i128).pow(2) {
                    f += fringing(eps, t, h, um(axis_overlap(e.x_lo, e.x_hi, o.x_lo, o.x_hi)));
                }
            }
            for e in vertical {
                if dist2(&e, o) <= (radius as i128).pow(2) {
                    f += fringing(eps, t, h, um(axis_overlap(e.y_lo, e.y_hi, o.y_lo, o.y_hi)));
                }
            }
        }
        OracleRecord {
            lateral: 0.0,
            parallel: p,
            fringing: f,
            total: p + f,
        }
    };
    (rec.total > 0.0).then_some(rec)
}

/// Every (net shape, other shape) pair checked directly.
pub fn brute_coupling(layout: &Layout) -> BTreeMap<OracleKey, OracleRecord> {
    let radius = layout.rules.interaction_radius;
    let mut others: Vec<(String, usize, Shape, Option<usize>)> = Vec::new();
    for (ni, n) in layout.nets.iter().enumerate() {
        for (si, s) in n.shapes.iter().enumerate() {
            others.push((n.id.clone(), si, *s, Some(ni)));
        }
    }
    for f in &layout.fills {
        others.push((
            format!("fill:{}", f.id),
            0,
            Shape {
                layer: f.layer,
                rect: f.rect,
            },
            None,
        ));
    }
    let mut out = BTreeMap::new();
    for (ni, n) in layout.nets.iter().enumerate() {
        for (si, v) in n.shapes.iter().enumerate() {
            for (label, ai, a, owner) in &others {
                if *owner == Some(ni) {
                    continue;
                }
                if let Some(rec) = pair(v, a, &layout.layers, radius) {
                    out.insert(
                        (n.id.clone(), label.clone(), v.layer, a.layer, si, *ai),
                        rec,
                    );
                }
            }
        }
    }
    out
}

// -------------------------------------------------------------------- spacing

/// Required clearance between a fill tile and a net shape.
fn required(
    tile: &FillShape,
    net: &Net,
    critical: &BTreeSet<String>,
    ndr: bool,
    rules: &DesignRules,
) -> Option<i64> {
    if tile.kind == FillKind::Shield && net.class == NetClass::Reference {
        // Zero gap allowed, overlap never.
        return None;
    }
    if ndr && tile.kind == FillKind::Floating && critical.contains(&net.id) {
        Some(rules.s_ndr)
    } else {
        Some(rules.s_def)
    }
}

/// Tiles that break a spacing rule, by id. `ndr` selects the timing-driven
/// rule set. Tile–net pairs are scanned exhaustively; tile–tile pairs with a
/// sweep over x.
pub fn spacing_violations(
    layout: &Layout,
    tiles: &[FillShape],
    critical: &BTreeSet<String>,
    ndr: bool,
) -> Vec<u64> {
    let rules = &layout.rules;
    let mut bad = BTreeSet::new();
    for t in tiles {
        for n in &layout.nets {
            for s in n.shapes.iter().filter(|s| s.layer == t.layer) {
                if interiors_overlap(&t.rect, &s.rect) {
                    bad.insert(t.id);
                    continue;
                }
                if let Some(need) = required(t, n, critical, ndr, rules) {
                    if dist2(&t.rect, &s.rect) < (need as i128).pow(2) {
                        bad.insert(t.id);
                    }
                }
            }
        }
    }
    let mut order: Vec<&FillShape> = tiles.iter().collect();
    order.sort_by_key(|t| (t.layer, t.rect.x_lo));
    for (i, a) in order.iter().enumerate() {
        for b in &order[i + 1..] {
            if b.layer != a.layer || b.rect.x_lo > a.rect.x_hi + rules.s_def {
                break;
            }
            if interiors_overlap(&a.rect, &b.rect) {
                bad.insert(a.id);
                bad.insert(b.id);
                continue;
            }
            let both_shield = a.kind == FillKind::Shield && b.kind == FillKind::Shield;
            let d2 = dist2(&a.rect, &b.rect);
            if !(both_shield && d2 == 0) && d2 < (rules.s_def as i128).pow(2) {
                bad.insert(a.id);
                bad.insert(b.id);
            }
        }
    }
    bad.into_iter().collect()
}

// -------------------------------------------------------------------- density

/// Exact union area of `rects` clipped to `window` by coordinate compression.
pub fn union_area_in(rects: &[Rect], window: &Rect) -> i128 {
    let clipped: Vec<Rect> = rects
        .iter()
        .filter(|r| interiors_overlap(r, window))
        .map(|r| Rect {
            x_lo: r.x_lo.max(window.x_lo),
            y_lo: r.y_lo.max(window.y_lo),
            x_hi: r.x_hi.min(window.x_hi),
            y_hi: r.y_hi.min(window.y_hi),
        })
        .collect();
    let mut xs: Vec<i64> = clipped.iter().flat_map(|r| [r.x_lo, r.x_hi]).collect();
    let mut ys: Vec<i64> = clipped.iter().flat_map(|r| [r.y_lo, r.y_hi]).collect();
    xs.sort_unstable();
    xs.dedup();
    ys.sort_unstable();
    ys.dedup();
    let mut area = 0i128;
    for xw in xs.windows(2) {
        // Rects spanning this x strip, then merge their y intervals.
        let mut spans: Vec<(i64, i64)> = clipped
            .iter()
            .filter(|r| r.x_lo <= xw[0] && r.x_hi >= xw[1])
            .map(|r| (r.y_lo, r.y_hi))
            .collect();
        spans.sort_unstable();
        let mut covered = 0i64;
        let mut cur: Option<(i64, i64)> = None;
        for (lo, hi) in spans {
            match cur {
                Some((clo, chi)) if lo <= chi => cur = Some((clo, chi.max(hi))),
                Some((clo, chi)) => {
                    covered += chi - clo;
                    cur = Some((lo, hi));
                }
                None => cur = Some((lo, hi)),
            }
        }
        if let Some((clo, chi)) = cur {
            covered += chi - clo;
        }
        area += (xw[1] - xw[0]) as i128 * covered as i128;
    }
    area
}

pub fn layer_rects(layout: &Layout, layer: usize) -> Vec<Rect> {
    layout
        .nets
        .iter()
        .flat_map(|n| n.shapes.iter())
        .filter(|s| s.layer == layer)
        .map(|s| s.rect)
        .chain(
            layout
                .fills
                .iter()
                .filter(|f| f.layer == layer)
                .map(|f| f.rect),
        )
        .collect()
}

// --------------------------------------------------------------- connectivity

/// Shield tiles with no abutment path to a reference shape, found by
/// repeated relaxation over all pairs.
pub fn unreachable_shields(layout: &Layout) -> Vec<u64> {
    let shields: Vec<&FillShape> = layout
        .fills
        .iter()
        .filter(|f| f.kind == FillKind::Shield)
        .collect();
    let refs: Vec<&Shape> = layout
        .nets
        .iter()
        .filter(|n| n.class == NetClass::Reference)
        .flat_map(|n| &n.shapes)
        .collect();
    let mut reached: Vec<bool> = shields
        .iter()
        .map(|t| {
            refs.iter()
                .any(|r| r.layer == t.layer && abut(&r.rect, &t.rect))
        })
        .collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..shields.len() {
            if !reached[i]
                && (0..shields.len()).any(|j| {
                    reached[j]
                        && shields[j].layer == shields[i].layer
                        && abut(&shields[i].rect, &shields[j].rect)
                })
            {
                reached[i] = true;
                changed = true;
            }
        }
    }
    shields
        .iter()
        .zip(reached)
        .filter(|(_, r)| !r)
        .map(|(t, _)| t.id)
        .collect()
}

// ------------------------------------------------------------------- fixtures

fn m1() -> LayerSpec {
    LayerSpec {
        index: 0,
        name: "M1".into(),
        thickness: 140,
        dielectric_above_t: None,
        permittivity: 3.453e-17,
        sheet_res: 0.08,
        unit_area_cap: 2e-17,
    }
}

fn net(id: &str, class: NetClass, rects: &[Rect]) -> Net {
    Net {
        id: id.into(),
        class,
        driver_res: (class != NetClass::Reference).then_some(500.0),
        shapes: rects.iter().map(|&rect| Shape { layer: 0, rect }).collect(),
        endpoints: vec![],
    }
}

/// One-window layout: critical wires 100 nm wide at `pitch` running from
/// `x_start` to the right die edge, plus a VSS rail along the left edge. The
/// NDR keep-out leaves no room for floating fill, so the window can only be
/// repaired with shield tiles grown from the rail.
pub fn starved_comb(pitch: i64, x_start: i64) -> Layout {
    let mut nets: Vec<Net> = (0..)
        .map(|k| k * pitch)
        .take_while(|y| y + 100 <= 20_000)
        .enumerate()
        .map(|(k, y)| {
            net(
                &format!("c{k}"),
                NetClass::Critical,
                &[Rect {
                    x_lo: x_start,
                    y_lo: y,
                    x_hi: 20_000,
                    y_hi: y + 100,
                }],
            )
        })
        .collect();
    nets.push(net(
        "VSS",
        NetClass::Reference,
        &[Rect {
            x_lo: 0,
            y_lo: 0,
            x_hi: x_start - 200,
            y_hi: 20_000,
        }],
    ));
    Layout {
        die: Rect {
            x_lo: 0,
            y_lo: 0,
            x_hi: 20_000,
            y_hi: 20_000,
        },
        layers: vec![m1()],
        rules: DesignRules::default(),
        nets,
        fills: vec![],
    }
}
