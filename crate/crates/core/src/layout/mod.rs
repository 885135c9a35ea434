//! In-memory layout model: layer stack, nets, design rules and fill shapes.

mod io;
mod validate;

use std::collections::BTreeSet;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};

use crate::geom::Rect;
use crate::index::{ShapeIndex, ShapeRef};

pub use io::{from_json_str, load_layout, save_layout, to_json_string};
pub use validate::validate_layout;

/// One routing layer and the dielectric above it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub index: usize,
    pub name: String,
    /// Metal thickness in nm.
    #[serde(rename = "thickness_H")]
    pub thickness: i64,
    /// Dielectric gap to the next layer up, nm. Absent on the top layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dielectric_above_t: Option<i64>,
    /// Absolute permittivity of the surrounding dielectric, F/µm.
    #[serde(rename = "permittivity_eps_f_per_um")]
    pub permittivity: f64,
    #[serde(rename = "sheet_res_ohm_sq")]
    pub sheet_res: f64,
    #[serde(rename = "unit_area_cap_f_per_um2")]
    pub unit_area_cap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NetClass {
    Signal,
    Critical,
    /// Power or ground. The only legal target for shield connections.
    Reference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub name: String,
    #[serde(rename = "base_arrival_ns")]
    pub base_arrival: f64,
    #[serde(rename = "required_ns")]
    pub required: f64,
}

impl Endpoint {
    pub fn base_slack(&self) -> f64 {
        self.required - self.base_arrival
    }
}

/// A rectangle on a routing layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Shape {
    pub layer: usize,
    pub rect: Rect,
}

impl Serialize for Shape {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&self.layer)?;
        t.serialize_element(&self.rect)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for Shape {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct ShapeVisitor;
        impl<'de> Visitor<'de> for ShapeVisitor {
            type Value = Shape;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a [layer, [x_lo, y_lo, x_hi, y_hi]] pair")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Shape, A::Error> {
                let layer = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let rect = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Ok(Shape { layer, rect })
            }
        }
        d.deserialize_tuple(2, ShapeVisitor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub id: String,
    pub class: NetClass,
    #[serde(
        rename = "driver_res_ohm",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub driver_res: Option<f64>,
    pub shapes: Vec<Shape>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub endpoints: Vec<Endpoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FillKind {
    /// Electrically unconnected dummy metal.
    Floating,
    /// Dummy metal tied to a reference net by same-layer abutment.
    Shield,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillShape {
    pub id: u64,
    pub layer: usize,
    pub rect: Rect,
    pub kind: FillKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shield_group: Option<u32>,
}

/// Spacing, tiling and density rules. Lengths in nm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignRules {
    /// Default minimum spacing between fill and anything else.
    pub s_def: i64,
    /// Non-default spacing between floating fill and critical-net shapes.
    pub s_ndr: i64,
    pub tile_size: i64,
    pub tile_pitch: i64,
    #[serde(rename = "window_W")]
    pub window_size: i64,
    pub window_step: i64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Plan-view cutoff for coupling extraction.
    pub interaction_radius: i64,
    pub miller_factor: f64,
}

impl DesignRules {
    /// Density the fill engine aims for inside a low window.
    pub fn rho_target(&self) -> f64 {
        (self.rho_min + self.rho_max) / 2.0
    }
}

impl Default for DesignRules {
    fn default() -> Self {
        DesignRules {
            s_def: 70,
            s_ndr: 210,
            tile_size: 400,
            tile_pitch: 600,
            window_size: 20_000,
            window_step: 10_000,
            rho_min: 0.25,
            rho_max: 0.75,
            interaction_radius: 2_000,
            miller_factor: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub die: Rect,
    pub layers: Vec<LayerSpec>,
    pub rules: DesignRules,
    pub nets: Vec<Net>,
    #[serde(default)]
    pub fills: Vec<FillShape>,
}

impl Layout {
    pub fn net(&self, id: &str) -> Option<&Net> {
        self.nets.iter().find(|n| n.id == id)
    }

    pub fn net_index(&self, id: &str) -> Option<usize> {
        self.nets.iter().position(|n| n.id == id)
    }

    /// Every net shape and fill shape on `layer`.
    pub fn shapes_on(&self, layer: usize) -> impl Iterator<Item = Rect> + '_ {
        self.nets
            .iter()
            .flat_map(|n| n.shapes.iter())
            .filter(move |s| s.layer == layer)
            .map(|s| s.rect)
            .chain(
                self.fills
                    .iter()
                    .filter(move |f| f.layer == layer)
                    .map(|f| f.rect),
            )
    }

    pub fn num_net_shapes(&self) -> usize {
        self.nets.iter().map(|n| n.shapes.len()).sum()
    }

    /// R-tree over net shapes and fills; fill refs index into `self.fills`.
    pub fn build_index(&self) -> ShapeIndex {
        let nets = self.nets.iter().enumerate().flat_map(|(ni, net)| {
            net.shapes
                .iter()
                .enumerate()
                .map(move |(si, s)| (s.layer, s.rect, ShapeRef::Net { net: ni, shape: si }))
        });
        let fills = self
            .fills
            .iter()
            .enumerate()
            .map(|(fi, f)| (f.layer, f.rect, ShapeRef::Fill { fill: fi }));
        ShapeIndex::bulk(self.layers.len(), nets.chain(fills))
    }

    /// Copy of the layout with `fills` replaced.
    pub fn with_fills(&self, fills: Vec<FillShape>) -> Layout {
        Layout {
            fills,
            ..self.clone()
        }
    }

    pub fn reference_nets(&self) -> BTreeSet<&str> {
        self.nets
            .iter()
            .filter(|n| n.class == NetClass::Reference)
            .map(|n| n.id.as_str())
            .collect()
    }
}
