use std::collections::BTreeSet;

use super::{FillKind, Layout, NetClass};
use crate::error::{Error, Result};
use crate::geom::{dist_sq, Rect};
use crate::index::ShapeRef;

/// Checks every layout invariant, reporting the first violation found.
///
/// Order: die, layer stack, rules, nets, fills, then geometric conflicts.
pub fn validate_layout(layout: &Layout) -> Result<()> {
    if !layout.die.is_well_formed() {
        return Err(Error::validate(
            "die must be a non-degenerate rectangle",
            "die",
        ));
    }
    check_stack(layout)?;
    check_rules(layout)?;
    check_nets(layout)?;
    check_fills(layout)?;
    check_conflicts(layout)
}

fn check_stack(layout: &Layout) -> Result<()> {
    let layers = &layout.layers;
    if layers.is_empty() {
        return Err(Error::validate("layer stack must not be empty", "layers"));
    }
    for (pos, l) in layers.iter().enumerate() {
        let who = format!("layer {}", l.name);
        if l.index != pos {
            return Err(Error::validate(
                "layer index must equal its position in the stack",
                who,
            ));
        }
        if l.thickness <= 0 {
            return Err(Error::validate("thickness_H must be > 0", who));
        }
        if !(l.permittivity.is_finite() && l.permittivity > 0.0) {
            return Err(Error::validate("permittivity_eps must be > 0", who));
        }
        if !(l.sheet_res.is_finite() && l.sheet_res >= 0.0)
            || !(l.unit_area_cap.is_finite() && l.unit_area_cap >= 0.0)
        {
            return Err(Error::validate(
                "sheet_res and unit_area_cap must be finite and non-negative",
                who,
            ));
        }
        let top = pos + 1 == layers.len();
        match (l.dielectric_above_t, top) {
            (Some(_), true) => {
                return Err(Error::validate(
                    "topmost layer must not carry dielectric_above_t",
                    who,
                ))
            }
            (None, false) => {
                return Err(Error::validate(
                    "dielectric_above_t required below the top layer",
                    who,
                ))
            }
            (Some(t), false) => {
                let upper = &layers[pos + 1];
                if t <= l.thickness || t <= upper.thickness {
                    return Err(Error::validate(
                        "dielectric_above_t must exceed thickness_H of both adjoining layers",
                        who,
                    ));
                }
            }
            (None, true) => {}
        }
    }
    Ok(())
}

fn check_rules(layout: &Layout) -> Result<()> {
    let r = &layout.rules;
    let bad = |what: &str| Err(Error::validate(what, "rules"));
    if !(0.0 < r.rho_min && r.rho_min < r.rho_max && r.rho_max <= 1.0) {
        return bad("0 < rho_min < rho_max <= 1");
    }
    if !(r.s_def > 0 && r.s_ndr >= r.s_def) {
        return bad("s_ndr >= s_def > 0");
    }
    if r.tile_size <= 0 || r.tile_pitch < r.tile_size + r.s_def {
        return bad("tile_pitch >= tile_size + s_def with tile_size > 0");
    }
    if !(0 < r.window_step && r.window_step <= r.window_size) {
        return bad("0 < window_step <= window_W");
    }
    if r.interaction_radius < 0 {
        return bad("interaction_radius >= 0");
    }
    if !(r.miller_factor.is_finite() && r.miller_factor >= 1.0) {
        return bad("miller_factor >= 1");
    }
    Ok(())
}

fn check_rect(layout: &Layout, layer: usize, rect: &Rect, who: &str) -> Result<()> {
    if layer >= layout.layers.len() {
        return Err(Error::validate("shape layer must exist in the stack", who));
    }
    if !rect.is_well_formed() {
        return Err(Error::validate(
            format!("rectangle {rect} must have x_lo < x_hi and y_lo < y_hi"),
            who,
        ));
    }
    if !layout.die.contains_rect(rect) {
        return Err(Error::validate(
            format!("rectangle {rect} must lie inside the die"),
            who,
        ));
    }
    Ok(())
}

fn check_nets(layout: &Layout) -> Result<()> {
    let mut ids = BTreeSet::new();
    for net in &layout.nets {
        let who = format!("net {}", net.id);
        if !ids.insert(net.id.as_str()) {
            return Err(Error::validate("net id must be unique", who));
        }
        for s in &net.shapes {
            check_rect(layout, s.layer, &s.rect, &who)?;
        }
        match net.class {
            NetClass::Reference => {
                if !net.endpoints.is_empty() || net.driver_res.is_some() {
                    return Err(Error::validate(
                        "reference nets carry no endpoints and no driver_res",
                        who,
                    ));
                }
            }
            NetClass::Signal | NetClass::Critical => match net.driver_res {
                Some(r) if r.is_finite() && r >= 0.0 => {}
                _ => {
                    return Err(Error::validate(
                        "signal and critical nets need a non-negative driver_res",
                        who,
                    ))
                }
            },
        }
        for ep in &net.endpoints {
            if !(ep.base_arrival.is_finite() && ep.required.is_finite()) {
                return Err(Error::validate(
                    "endpoint arrival and required times must be finite",
                    format!("endpoint {}", ep.name),
                ));
            }
        }
    }
    Ok(())
}

fn check_fills(layout: &Layout) -> Result<()> {
    let mut ids = BTreeSet::new();
    for f in &layout.fills {
        let who = format!("fill {}", f.id);
        if !ids.insert(f.id) {
            return Err(Error::validate("fill id must be unique", who));
        }
        check_rect(layout, f.layer, &f.rect, &who)?;
        match (f.kind, f.shield_group) {
            (FillKind::Shield, None) => {
                return Err(Error::validate("shield fill must name a shield_group", who))
            }
            (FillKind::Floating, Some(_)) => {
                return Err(Error::validate(
                    "floating fill must not carry a shield_group",
                    who,
                ))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Distinct nets may not touch; fill may not touch anything, except that
/// shield fill may abut shield fill and reference shapes.
fn check_conflicts(layout: &Layout) -> Result<()> {
    let index = layout.build_index();
    for (ni, net) in layout.nets.iter().enumerate() {
        for s in &net.shapes {
            for (_, other) in index.touching(s.layer, &s.rect) {
                if let ShapeRef::Net { net: oj, .. } = other {
                    if oj != ni {
                        return Err(Error::validate(
                            format!(
                                "shapes of distinct nets touch (with net {})",
                                layout.nets[oj].id
                            ),
                            format!("net {}", net.id),
                        ));
                    }
                }
            }
        }
    }
    for (fi, f) in layout.fills.iter().enumerate() {
        for (rect, other) in index.touching(f.layer, &f.rect) {
            if other == (ShapeRef::Fill { fill: fi }) {
                continue;
            }
            let who = format!("fill {}", f.id);
            if f.rect.interiors_intersect(rect) {
                return Err(Error::validate("fill overlaps other metal", who));
            }
            debug_assert_eq!(dist_sq(&f.rect, rect), 0);
            let abut_ok = f.kind == FillKind::Shield
                && match other {
                    ShapeRef::Net { net, .. } => layout.nets[net].class == NetClass::Reference,
                    ShapeRef::Fill { fill } => layout.fills[fill].kind == FillKind::Shield,
                };
            if !abut_ok {
                return Err(Error::validate(
                    "fill may only abut reference shapes or shield fill, and only when shield",
                    who,
                ));
            }
        }
    }
    Ok(())
}
