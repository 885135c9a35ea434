//! Coupling capacitance between shape pairs.
//!
//! Three closed-form terms: lateral (same-layer facing walls), parallel
//! (adjacent-layer plate overlap) and fringing (sidewall to adjacent-layer
//! surface). The lateral and parallel expressions are per unit length, so
//! they are multiplied by the coupled length; fringing is per unit edge
//! length. Geometry arrives in nm and is converted to µm here, so every
//! returned capacitance is in farads.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dist_sq, overlap_area, overlap_len, Axis, Rect, NM_PER_UM};
use crate::index::ShapeRef;
use crate::layout::{FillKind, LayerSpec, Layout, NetClass, Shape};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CapComponents {
    pub lateral: f64,
    pub parallel: f64,
    pub fringing: f64,
    pub total: f64,
}

impl CapComponents {
    pub fn new(lateral: f64, parallel: f64, fringing: f64) -> Self {
        CapComponents {
            lateral,
            parallel,
            fringing,
            total: lateral + parallel + fringing,
        }
    }
}

/// Same-layer wall-to-wall coupling: `H·ε/s` per unit length times
/// `coupled_len`. All lengths in µm.
pub fn c_lateral(h: f64, eps: f64, s: f64, coupled_len: f64) -> Result<f64> {
    if s <= 0.0 {
        return Err(Error::Geom(format!(
            "lateral spacing must be positive, got {s} µm"
        )));
    }
    Ok(h * eps / s * coupled_len)
}

/// Adjacent-layer plate coupling: `ε·A/t`, with `A` the plan overlap in µm².
pub fn c_parallel(eps: f64, overlap_area: f64, t: f64) -> f64 {
    eps * overlap_area / t
}

/// Sidewall-to-surface fringing: `2π·ε / ln(t/H)` per unit edge length.
pub fn c_fringing(eps: f64, t: f64, h: f64, edge_len: f64) -> Result<f64> {
    if !(t > h && h > 0.0) {
        return Err(Error::Stack(format!(
            "fringing needs t > H > 0, got t={t} µm, H={h} µm"
        )));
    }
    Ok(2.0 * PI * eps / (t / h).ln() * edge_len)
}

fn um(nm: i64) -> f64 {
    nm as f64 / NM_PER_UM
}

/// Coupling between two shapes.
///
/// Same layer: lateral only, across the facing walls; pairs that only see
/// each other corner-to-corner contribute nothing. Adjacent layers: plate
/// overlap plus fringing along every plan-view edge of either shape that
/// lies within `radius` nm of the other shape's footprint. Anything further
/// apart in the stack is zero.
pub fn pair_coupling(
    a: &Shape,
    b: &Shape,
    stack: &[LayerSpec],
    radius: i64,
) -> Result<CapComponents> {
    if a.layer == b.layer {
        let layer = &stack[a.layer];
        if a.rect.interiors_intersect(&b.rect) {
            return Err(Error::Geom(format!(
                "same-layer shapes {} and {} overlap",
                a.rect, b.rect
            )));
        }
        let ox = overlap_len(&a.rect, &b.rect, Axis::X);
        let oy = overlap_len(&a.rect, &b.rect, Axis::Y);
        let (s, len) = if ox > 0 {
            let gap = (b.rect.y_lo - a.rect.y_hi).max(a.rect.y_lo - b.rect.y_hi);
            (gap, ox)
        } else if oy > 0 {
            let gap = (b.rect.x_lo - a.rect.x_hi).max(a.rect.x_lo - b.rect.x_hi);
            (gap, oy)
        } else {
            return Ok(CapComponents::default());
        };
        let lateral = c_lateral(um(layer.thickness), layer.permittivity, um(s), um(len))?;
        return Ok(CapComponents::new(lateral, 0.0, 0.0));
    }
    if a.layer.abs_diff(b.layer) != 1 {
        return Ok(CapComponents::default());
    }

    let lower = &stack[a.layer.min(b.layer)];
    let eps = lower.permittivity;
    let t_nm = lower
        .dielectric_above_t
        .ok_or_else(|| Error::Stack(format!("layer {} has no dielectric above it", lower.name)))?;
    let t = um(t_nm);
    let parallel = c_parallel(eps, overlap_area(&a.rect, &b.rect) as f64 / 1e6, t);

    let r2 = radius as i128 * radius as i128;
    let mut fringing = 0.0;
    for (shape, other) in [(a, b), (b, a)] {
        let h = um(stack[shape.layer].thickness);
        for (i, edge) in shape.rect.edges().iter().enumerate() {
            if dist_sq(edge, &other.rect) > r2 {
                continue;
            }
            let axis = if i < 2 { Axis::X } else { Axis::Y };
            let len = overlap_len(edge, &other.rect, axis);
            if len > 0 {
                fringing += c_fringing(eps, t, h, um(len))?;
            }
        }
    }
    Ok(CapComponents::new(0.0, parallel, fringing))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AggressorId {
    Net(String),
    Fill(u64),
}

impl std::fmt::Display for AggressorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AggressorId::Net(id) => f.write_str(id),
            AggressorId::Fill(id) => write!(f, "fill:{id}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AggressorClass {
    Signal,
    Critical,
    Reference,
    FloatingFill,
    ShieldFill,
}

impl AggressorClass {
    fn of_net(class: NetClass) -> Self {
        match class {
            NetClass::Signal => AggressorClass::Signal,
            NetClass::Critical => AggressorClass::Critical,
            NetClass::Reference => AggressorClass::Reference,
        }
    }

    fn of_fill(kind: FillKind) -> Self {
        match kind {
            FillKind::Floating => AggressorClass::FloatingFill,
            FillKind::Shield => AggressorClass::ShieldFill,
        }
    }

    /// Reference nets and shield fill act as AC ground for the victim.
    pub fn is_grounded(self) -> bool {
        matches!(self, AggressorClass::Reference | AggressorClass::ShieldFill)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AggressorClass::Signal => "Signal",
            AggressorClass::Critical => "Critical",
            AggressorClass::Reference => "Reference",
            AggressorClass::FloatingFill => "FloatingFill",
            AggressorClass::ShieldFill => "ShieldFill",
        }
    }
}

/// Capacitance between one victim net shape and one aggressor shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingRecord {
    pub victim: String,
    pub victim_shape: usize,
    pub aggressor: AggressorId,
    /// Shape position within the aggressor net (0 for fill).
    pub aggressor_shape: usize,
    pub aggressor_class: AggressorClass,
    pub victim_layer: usize,
    pub aggressor_layer: usize,
    pub components: CapComponents,
}

type RecordKey<'a> = (&'a str, &'a AggressorId, usize, usize, usize, usize);

impl CouplingRecord {
    fn key(&self) -> RecordKey<'_> {
        (
            &self.victim,
            &self.aggressor,
            self.victim_layer,
            self.aggressor_layer,
            self.victim_shape,
            self.aggressor_shape,
        )
    }
}

/// Puts records into the canonical (victim, aggressor, layer) order.
pub fn sort_records(records: &mut [CouplingRecord]) {
    records.sort_by(|a, b| a.key().cmp(&b.key()));
}

/// Builds the record for victim net shape `(net, shape)` against `other`,
/// or `None` when the pair is out of range, electrically connected, or has
/// zero coupling.
pub(crate) fn record_for(
    layout: &Layout,
    net: usize,
    shape: usize,
    other_rect: &Rect,
    other_layer: usize,
    other: ShapeRef,
) -> Result<Option<CouplingRecord>> {
    let victim_net = &layout.nets[net];
    let victim = victim_net.shapes[shape];
    if victim.layer.abs_diff(other_layer) > 1 {
        return Ok(None);
    }
    let (aggressor, aggressor_shape, aggressor_class) = match other {
        ShapeRef::Net { net: on, shape: os } => {
            if on == net {
                return Ok(None);
            }
            let n = &layout.nets[on];
            (
                AggressorId::Net(n.id.clone()),
                os,
                AggressorClass::of_net(n.class),
            )
        }
        ShapeRef::Fill { fill } => {
            let f = &layout.fills[fill];
            (AggressorId::Fill(f.id), 0, AggressorClass::of_fill(f.kind))
        }
    };
    let radius = layout.rules.interaction_radius;
    let d2 = dist_sq(&victim.rect, other_rect);
    if d2 > radius as i128 * radius as i128 {
        return Ok(None);
    }
    // Abutting same-layer metal is connected, not coupled.
    if other_layer == victim.layer && d2 == 0 {
        return Ok(None);
    }
    let aggressor_geom = Shape {
        layer: other_layer,
        rect: *other_rect,
    };
    let components = pair_coupling(&victim, &aggressor_geom, &layout.layers, radius)?;
    if components.total <= 0.0 {
        return Ok(None);
    }
    Ok(Some(CouplingRecord {
        victim: victim_net.id.clone(),
        victim_shape: shape,
        aggressor,
        aggressor_shape,
        aggressor_class,
        victim_layer: victim.layer,
        aggressor_layer: other_layer,
        components,
    }))
}

/// All coupling records with a net shape as victim: net–net pairs (both
/// directions) and net–fill pairs within the interaction radius on the same
/// or an adjacent layer.
pub fn extract_coupling(layout: &Layout) -> Result<Vec<CouplingRecord>> {
    extract_where(layout, |_| true)
}

/// Only the net–fill records of [`extract_coupling`]: for a layout whose
/// fills were all inserted on top of the same nets, exactly the records
/// [`fill_induced`] would return.
pub fn extract_fill_coupling(layout: &Layout) -> Result<Vec<CouplingRecord>> {
    extract_where(layout, |r| matches!(r, ShapeRef::Fill { .. }))
}

fn extract_where(
    layout: &Layout,
    keep: impl Fn(ShapeRef) -> bool + Sync,
) -> Result<Vec<CouplingRecord>> {
    let index = layout.build_index();
    let radius = layout.rules.interaction_radius;
    let top = layout.layers.len() - 1;
    let victims: Vec<(usize, usize)> = layout
        .nets
        .iter()
        .enumerate()
        .flat_map(|(ni, n)| (0..n.shapes.len()).map(move |si| (ni, si)))
        .collect();
    let per_shape = victims
        .par_iter()
        .map(|&(ni, si)| {
            let s = layout.nets[ni].shapes[si];
            let reach = s.rect.expand(radius);
            let mut out = Vec::new();
            for layer in s.layer.saturating_sub(1)..=(s.layer + 1).min(top) {
                for (rect, other) in index.touching(layer, &reach).filter(|(_, r)| keep(*r)) {
                    if let Some(rec) = record_for(layout, ni, si, rect, layer, other)? {
                        out.push(rec);
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records: Vec<CouplingRecord> = per_shape.into_iter().flatten().collect();
    records.par_sort_unstable_by(|a, b| a.key().cmp(&b.key()));
    Ok(records)
}

/// Records present in `filled` but not in `base`: the coupling the fill added.
/// Both inputs come from [`extract_coupling`] on the same nets.
pub fn fill_induced(filled: &[CouplingRecord], base: &[CouplingRecord]) -> Vec<CouplingRecord> {
    let base_keys: BTreeSet<RecordKey<'_>> = base.iter().map(CouplingRecord::key).collect();
    filled
        .iter()
        .filter(|r| !base_keys.contains(&r.key()))
        .cloned()
        .collect()
}

/// Fill-induced capacitance on `net`, split into (to ground, to switching
/// or floating metal).
pub fn net_delta_caps(records: &[CouplingRecord], net: &str) -> (f64, f64) {
    records
        .iter()
        .filter(|r| r.victim == net)
        .fold((0.0, 0.0), |(g, c), r| {
            if r.aggressor_class.is_grounded() {
                (g + r.components.total, c)
            } else {
                (g, c + r.components.total)
            }
        })
}

/// [`net_delta_caps`] for every victim at once, summed in record order.
pub fn delta_caps_by_net(records: &[CouplingRecord]) -> BTreeMap<&str, (f64, f64)> {
    let mut out: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for r in records {
        let e = out.entry(r.victim.as_str()).or_default();
        if r.aggressor_class.is_grounded() {
            e.0 += r.components.total;
        } else {
            e.1 += r.components.total;
        }
    }
    out
}

pub fn records_csv(records: &[CouplingRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "victim",
        "victim_shape",
        "aggressor",
        "aggressor_shape",
        "aggressor_class",
        "victim_layer",
        "aggressor_layer",
        "lateral_f",
        "parallel_f",
        "fringing_f",
        "total_f",
    ])
    .expect("in-memory write");
    for r in records {
        let c = &r.components;
        w.write_record([
            r.victim.clone(),
            r.victim_shape.to_string(),
            r.aggressor.to_string(),
            r.aggressor_shape.to_string(),
            r.aggressor_class.as_str().to_string(),
            r.victim_layer.to_string(),
            r.aggressor_layer.to_string(),
            format!("{:e}", c.lateral),
            format!("{:e}", c.parallel),
            format!("{:e}", c.fringing),
            format!("{:e}", c.total),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}
