//! Slack bookkeeping under fill-induced capacitance.
//!
//! Delay change is a lumped first-order RC term: the net's driver resistance
//! times the added ground capacitance plus the Miller-scaled coupling
//! capacitance.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cap::{delta_caps_by_net, CouplingRecord};
use crate::error::{Error, Result};
use crate::layout::{DesignRules, Layout, Net, NetClass};

const NS_PER_S: f64 = 1e9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalityPolicy {
    pub slack_threshold: f64,
    pub guard_band: f64,
}

impl Default for CriticalityPolicy {
    fn default() -> Self {
        CriticalityPolicy {
            slack_threshold: 0.0,
            guard_band: 0.010,
        }
    }
}

/// WNS / TNS / violation count over endpoint slacks, in ns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    /// `None` when there are no endpoints.
    pub wns: Option<f64>,
    pub tns: f64,
    pub num_violations: usize,
    pub per_endpoint: Vec<(String, f64)>,
}

impl TimingReport {
    pub fn from_slacks(per_endpoint: Vec<(String, f64)>) -> Self {
        let wns = per_endpoint.iter().map(|(_, s)| *s).reduce(f64::min);
        let tns = per_endpoint
            .iter()
            .map(|(_, s)| *s)
            .filter(|s| *s < 0.0)
            .sum::<f64>();
        let num_violations = per_endpoint.iter().filter(|(_, s)| *s < 0.0).count();
        TimingReport {
            wns,
            tns,
            num_violations,
            per_endpoint,
        }
    }

    pub fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["endpoint", "slack_ns"])
            .expect("in-memory write");
        for (name, slack) in &self.per_endpoint {
            w.write_record([name.clone(), format!("{slack:?}")])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

/// Added delay in ns for `net` given fill-induced ground and coupling
/// capacitance in farads.
pub fn delta_delay(
    net: &Net,
    delta_ground: f64,
    delta_coupling: f64,
    rules: &DesignRules,
) -> Result<f64> {
    if net.class == NetClass::Reference {
        return Err(Error::NoNet(format!("{} is a reference net", net.id)));
    }
    let r = net
        .driver_res
        .ok_or_else(|| Error::NoNet(format!("{} has no driver resistance", net.id)))?;
    let seconds = r * (delta_ground + rules.miller_factor * delta_coupling);
    Ok(seconds * NS_PER_S)
}

/// Per-net delay deltas from fill-induced coupling records, for every
/// non-reference net.
pub fn net_delays(
    layout: &Layout,
    fill_records: &[CouplingRecord],
) -> Result<BTreeMap<String, f64>> {
    let caps = delta_caps_by_net(fill_records);
    let mut out = BTreeMap::new();
    for net in layout
        .nets
        .iter()
        .filter(|n| n.class != NetClass::Reference)
    {
        let (g, c) = caps.get(net.id.as_str()).copied().unwrap_or_default();
        out.insert(net.id.clone(), delta_delay(net, g, c, &layout.rules)?);
    }
    Ok(out)
}

/// Endpoint slacks after adding each net's delay delta to its arrivals.
/// Nets missing from `deltas` keep their base arrival.
pub fn apply_deltas(layout: &Layout, deltas: &BTreeMap<String, f64>) -> Result<TimingReport> {
    for id in deltas.keys() {
        if layout.net(id).is_none() {
            return Err(Error::NoNet(id.clone()));
        }
    }
    let slacks = layout
        .nets
        .iter()
        .flat_map(|net| {
            let delta = deltas.get(&net.id).copied().unwrap_or(0.0);
            net.endpoints
                .iter()
                .map(move |ep| (ep.name.clone(), ep.required - (ep.base_arrival + delta)))
        })
        .collect();
    Ok(TimingReport::from_slacks(slacks))
}

/// Nets tagged Critical in the input plus every net with an endpoint whose
/// pre-fill slack is strictly below `slack_threshold + guard_band`.
pub fn classify_critical(layout: &Layout, policy: &CriticalityPolicy) -> BTreeSet<String> {
    let limit = policy.slack_threshold + policy.guard_band;
    layout
        .nets
        .iter()
        .filter(|n| n.class != NetClass::Reference)
        .filter(|n| {
            n.class == NetClass::Critical || n.endpoints.iter().any(|ep| ep.base_slack() < limit)
        })
        .map(|n| n.id.clone())
        .collect()
}
