//! Timing-aware dummy metal fill.
//!
//! The crate loads a rectilinear layout, measures metal density over sliding
//! windows, inserts fill tiles (plain spacing-rule fill, or a two-phase
//! timing-driven flow that keeps critical nets at a wider spacing and then
//! repairs starved windows with reference-connected shield tiles), extracts
//! the coupling capacitance the fill adds to every net, and turns that into
//! endpoint slack changes.

pub mod bench_gen;
pub mod cap;
pub mod compare;
pub mod density;
pub mod error;
pub mod fill;
pub mod geom;
pub mod index;
pub mod layout;
pub mod svg;
pub mod timing;

pub use bench_gen::{gen_benchmark, BenchmarkParams};
pub use cap::{
    delta_caps_by_net, extract_coupling, extract_fill_coupling, fill_induced, net_delta_caps,
    pair_coupling, AggressorClass, AggressorId, CapComponents, CouplingRecord,
};
pub use compare::{run_compare, CompareResult, DensitySummary, FillMode};
pub use density::{
    density_report, enumerate_windows, window_density, DensityStatus, DensityWindow,
};
pub use error::{Error, Result};
pub use fill::{check_shield_connectivity, regular_fill, timing_driven_fill, FillPlan, PlanMode};
pub use geom::{overlap_area, overlap_len, rect_gap, Axis, Gap, Rect};
pub use layout::{
    load_layout, save_layout, validate_layout, DesignRules, Endpoint, FillKind, FillShape,
    LayerSpec, Layout, Net, NetClass, Shape,
};
pub use timing::{apply_deltas, classify_critical, delta_delay, CriticalityPolicy, TimingReport};

/// Serializes through `serde_json::Value` so object keys come out sorted,
/// which makes every emitted JSON file byte-stable.
pub fn to_canonical_json<T: serde::Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("layout types always serialize");
    let mut text = serde_json::to_string_pretty(&value).expect("values always serialize");
    text.push('\n');
    text
}
