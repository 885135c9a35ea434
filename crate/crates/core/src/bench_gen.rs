//! Seeded synthetic benchmark layouts.
//!
//! Wires sit on a 1 µm track grid, horizontal on even layers and vertical on
//! odd ones. Every layer carries full-length VSS/VDD rails at the rail pitch.
//! A fixed fraction of nets is tagged critical and given endpoint slacks
//! below the default guard band; the rest get comfortable positive slack.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Rect;
use crate::layout::{
    validate_layout, DesignRules, Endpoint, LayerSpec, Layout, Net, NetClass, Shape,
};

const TRACK_PITCH: i64 = 1_000;
const RAIL_WIDTH: i64 = 400;
/// Minimum end-to-end gap between wires sharing a track.
const END_GAP: i64 = 500;
const PLACE_ATTEMPTS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkParams {
    pub seed: u64,
    /// Die edge in nm (square die).
    pub die_edge: i64,
    pub num_layers: usize,
    pub num_nets: usize,
    pub critical_fraction: f64,
    pub reference_rail_pitch: i64,
    pub wire_len_range: (i64, i64),
    pub wire_width_range: (i64, i64),
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        BenchmarkParams {
            seed: 1,
            die_edge: 100_000,
            num_layers: 3,
            num_nets: 150,
            critical_fraction: 0.2,
            reference_rail_pitch: 10_000,
            wire_len_range: (5_000, 40_000),
            wire_width_range: (100, 200),
        }
    }
}

impl BenchmarkParams {
    fn check(&self, rules: &DesignRules) -> Result<()> {
        let bad = |m: &str| Err(Error::Params(m.to_string()));
        if self.die_edge < rules.window_size || self.die_edge % TRACK_PITCH != 0 {
            return bad("die_edge must be a multiple of 1 µm and at least one density window");
        }
        if !(1..=16).contains(&self.num_layers) {
            return bad("num_layers must be in 1..=16");
        }
        if !(0.0..=1.0).contains(&self.critical_fraction) {
            return bad("critical_fraction must be in [0, 1]");
        }
        if self.reference_rail_pitch < 2 * TRACK_PITCH
            || self.reference_rail_pitch % TRACK_PITCH != 0
        {
            return bad("reference_rail_pitch must be a multiple of 1 µm and at least 2 µm");
        }
        let (l0, l1) = self.wire_len_range;
        if !(0 < l0 && l0 <= l1) {
            return bad("wire_len_range must be positive and ordered");
        }
        let (w0, w1) = self.wire_width_range;
        if !(2 <= w0 && w0 <= w1 && w1 <= TRACK_PITCH - RAIL_WIDTH) {
            return bad("wire_width_range must be ordered, >= 2 nm and leave room beside rails");
        }
        Ok(())
    }
}

fn stack(num_layers: usize) -> Vec<LayerSpec> {
    (0..num_layers)
        .map(|index| LayerSpec {
            index,
            name: format!("M{}", index + 1),
            thickness: 140,
            dielectric_above_t: (index + 1 < num_layers).then_some(200),
            permittivity: 3.453e-17,
            sheet_res: 0.08,
            unit_area_cap: 2.0e-17,
        })
        .collect()
}

/// `v` rounded to `1 / scale`, landing on the double nearest the decimal.
fn round_to(v: f64, scale: f64) -> f64 {
    (v * scale).round() / scale
}

/// Shape on `track` of `layer` covering `[start, end)` along the preferred
/// direction, `width` wide.
fn track_rect(layer: usize, track: i64, start: i64, end: i64, width: i64) -> Rect {
    let center = track * TRACK_PITCH + TRACK_PITCH / 2;
    let (lo, hi) = (center - width / 2, center + width / 2);
    if layer.is_multiple_of(2) {
        Rect::new(start, lo, end, hi)
    } else {
        Rect::new(lo, start, hi, end)
    }
}

/// Occupied `[start, end)` spans on one track; `None` marks a rail track.
type TrackSpans = Option<Vec<(i64, i64)>>;

struct Tracks {
    /// Indexed `[layer][track]`.
    used: Vec<Vec<TrackSpans>>,
}

impl Tracks {
    fn place(&mut self, layer: usize, track: usize, start: i64, end: i64) -> bool {
        let Some(spans) = self.used[layer][track].as_mut() else {
            return false;
        };
        if spans
            .iter()
            .any(|&(s, e)| start < e + END_GAP && s < end + END_GAP)
        {
            return false;
        }
        spans.push((start, end));
        true
    }
}

/// Builds the benchmark for `params`. Identical params give identical layouts.
pub fn gen_benchmark(params: &BenchmarkParams) -> Result<Layout> {
    let rules = DesignRules::default();
    params.check(&rules)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let edge = params.die_edge;
    let num_tracks = (edge / TRACK_PITCH) as usize;
    let rail_every = (params.reference_rail_pitch / TRACK_PITCH) as usize;

    let mut vss = Vec::new();
    let mut vdd = Vec::new();
    let mut tracks = Tracks {
        used: vec![vec![Some(Vec::new()); num_tracks]; params.num_layers],
    };
    for layer in 0..params.num_layers {
        for (k, t) in (rail_every / 2..num_tracks).step_by(rail_every).enumerate() {
            tracks.used[layer][t] = None;
            let rail = Shape {
                layer,
                rect: track_rect(layer, t as i64, 0, edge, RAIL_WIDTH),
            };
            if (k + layer) % 2 == 0 {
                &mut vss
            } else {
                &mut vdd
            }
            .push(rail);
        }
    }

    let num_critical = (params.critical_fraction * params.num_nets as f64).round() as usize;
    let mut order: Vec<usize> = (0..params.num_nets).collect();
    order.shuffle(&mut rng);
    let mut is_critical = vec![false; params.num_nets];
    for &i in &order[..num_critical] {
        is_critical[i] = true;
    }

    let mut nets = Vec::with_capacity(params.num_nets + 2);
    for (i, &critical) in is_critical.iter().enumerate() {
        let id = format!("n{i}");
        let wires = if rng.gen_bool(0.6) { 1 } else { 2 };
        let first_layer = rng.gen_range(0..params.num_layers);
        let mut shapes = Vec::with_capacity(wires);
        for w in 0..wires {
            let layer = if w == 0 {
                first_layer
            } else if first_layer + 1 < params.num_layers {
                first_layer + 1
            } else {
                first_layer.saturating_sub(1)
            };
            let placed = (0..PLACE_ATTEMPTS).find_map(|_| {
                let track = rng.gen_range(0..num_tracks);
                let len = rng
                    .gen_range(params.wire_len_range.0..=params.wire_len_range.1)
                    .min(edge);
                let start = rng.gen_range(0..=edge - len);
                let width =
                    rng.gen_range(params.wire_width_range.0..=params.wire_width_range.1) / 2 * 2;
                tracks
                    .place(layer, track, start, start + len)
                    .then(|| track_rect(layer, track as i64, start, start + len, width))
            });
            match placed {
                Some(rect) => shapes.push(Shape { layer, rect }),
                None if w == 0 => {
                    return Err(Error::Params(format!(
                        "could not place net {id}: die too crowded for {} nets",
                        params.num_nets
                    )))
                }
                None => {}
            }
        }

        let endpoints = (0..rng.gen_range(1..=3))
            .map(|j| {
                let arrival = round_to(rng.gen_range(0.5..2.0), 1e4);
                let slack = if critical {
                    rng.gen_range(-0.030..0.005)
                } else {
                    rng.gen_range(0.050..0.500)
                };
                Endpoint {
                    name: format!("{id}/ep{j}"),
                    base_arrival: arrival,
                    required: round_to(arrival + slack, 1e4),
                }
            })
            .collect();
        nets.push(Net {
            id,
            class: if critical {
                NetClass::Critical
            } else {
                NetClass::Signal
            },
            driver_res: Some(rng.gen_range(200.0f64..1000.0).round()),
            shapes,
            endpoints,
        });
    }
    for (id, shapes) in [("VDD", vdd), ("VSS", vss)] {
        if !shapes.is_empty() {
            nets.push(Net {
                id: id.to_string(),
                class: NetClass::Reference,
                driver_res: None,
                shapes,
                endpoints: Vec::new(),
            });
        }
    }

    let layout = Layout {
        die: Rect::new(0, 0, edge, edge),
        layers: stack(params.num_layers),
        rules,
        nets,
        fills: Vec::new(),
    };
    validate_layout(&layout)?;
    Ok(layout)
}
