//! Before / regular / timing-driven comparison.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cap::{delta_caps_by_net, extract_fill_coupling};
use crate::density::{density_report, DensityStatus};
use crate::error::{Error, Result};
use crate::fill::{regular_fill, require_unfilled, timing_driven_fill, FillPlan};
use crate::layout::{FillKind, Layout};
use crate::timing::{apply_deltas, classify_critical, net_delays, CriticalityPolicy, TimingReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FillMode {
    None,
    Regular,
    TimingDriven,
}

impl FillMode {
    pub const ALL: [FillMode; 3] = [FillMode::None, FillMode::Regular, FillMode::TimingDriven];

    /// Command-line spelling.
    pub fn as_str(self) -> &'static str {
        match self {
            FillMode::None => "none",
            FillMode::Regular => "regular",
            FillMode::TimingDriven => "timing-driven",
        }
    }

    /// Row label in comparison tables.
    pub fn row_label(self) -> &'static str {
        match self {
            FillMode::None => "before",
            FillMode::Regular => "regular",
            FillMode::TimingDriven => "timing-driven",
        }
    }

    fn from_row_label(s: &str) -> Option<Self> {
        FillMode::ALL.into_iter().find(|m| m.row_label() == s)
    }

    /// Runs this mode's flow. `None` for mode none.
    pub fn plan(self, layout: &Layout) -> Result<Option<FillPlan>> {
        match self {
            FillMode::None => {
                require_unfilled(layout)?;
                Ok(None)
            }
            FillMode::Regular => regular_fill(layout).map(Some),
            FillMode::TimingDriven => {
                let critical = classify_critical(layout, &CriticalityPolicy::default());
                timing_driven_fill(layout, &critical).map(Some)
            }
        }
    }
}

impl fmt::Display for FillMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FillMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FillMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown fill mode {s:?}")))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DensitySummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub low: usize,
    pub ok: usize,
    pub high: usize,
    pub infeasible: usize,
    pub floating_tiles: usize,
    pub shield_tiles: usize,
}

/// Fill-induced capacitance on one net, in farads.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NetCapDelta {
    pub ground: f64,
    pub coupling: f64,
}

impl NetCapDelta {
    /// Ground plus Miller-scaled coupling.
    pub fn effective(&self, miller: f64) -> f64 {
        self.ground + miller * self.coupling
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeOutcome {
    pub report: TimingReport,
    pub density: DensitySummary,
    /// Keyed by critical net id.
    pub net_caps: BTreeMap<String, NetCapDelta>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareResult {
    pub before: ModeOutcome,
    pub regular: ModeOutcome,
    pub timing_driven: ModeOutcome,
}

impl CompareResult {
    pub fn mode(&self, mode: FillMode) -> &ModeOutcome {
        match mode {
            FillMode::None => &self.before,
            FillMode::Regular => &self.regular,
            FillMode::TimingDriven => &self.timing_driven,
        }
    }

    fn mode_mut(&mut self, mode: FillMode) -> &mut ModeOutcome {
        match mode {
            FillMode::None => &mut self.before,
            FillMode::Regular => &mut self.regular,
            FillMode::TimingDriven => &mut self.timing_driven,
        }
    }

    /// Windows left below `rho_min` by either fill flow.
    pub fn has_infeasible(&self) -> bool {
        self.regular.density.infeasible > 0 || self.timing_driven.density.infeasible > 0
    }

    /// Aligned text table with one row per mode.
    pub fn table(&self) -> String {
        let rows: Vec<_> = FillMode::ALL
            .into_iter()
            .map(|m| (m.row_label(), &self.mode(m).report))
            .collect();
        render_table(&rows)
    }

    /// Long-format CSV (`kind,mode,key,value`) holding every field.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["kind", "mode", "key", "value"])
            .expect("in-memory write");
        let row =
            |w: &mut csv::Writer<Vec<u8>>, kind: &str, mode: FillMode, key: &str, value: String| {
                w.write_record([kind, mode.row_label(), key, &value])
                    .expect("in-memory write");
            };
        for mode in FillMode::ALL {
            let o = self.mode(mode);
            let r = &o.report;
            row(
                &mut w,
                "summary",
                mode,
                "wns",
                r.wns.map_or("n/a".into(), |v| format!("{v:?}")),
            );
            row(&mut w, "summary", mode, "tns", format!("{:?}", r.tns));
            row(
                &mut w,
                "summary",
                mode,
                "num_violations",
                r.num_violations.to_string(),
            );
            for (ep, slack) in &r.per_endpoint {
                row(&mut w, "slack", mode, ep, format!("{slack:?}"));
            }
            let d = &o.density;
            for (key, v) in [("min", d.min), ("max", d.max), ("mean", d.mean)] {
                row(&mut w, "density", mode, key, format!("{v:?}"));
            }
            for (key, v) in [
                ("low", d.low),
                ("ok", d.ok),
                ("high", d.high),
                ("infeasible", d.infeasible),
                ("floating_tiles", d.floating_tiles),
                ("shield_tiles", d.shield_tiles),
            ] {
                row(&mut w, "density", mode, key, v.to_string());
            }
            for (net, c) in &o.net_caps {
                row(&mut w, "cap_ground", mode, net, format!("{:?}", c.ground));
                row(
                    &mut w,
                    "cap_coupling",
                    mode,
                    net,
                    format!("{:?}", c.coupling),
                );
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    /// Inverse of [`CompareResult::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Parse(m);
        let empty = || ModeOutcome {
            report: TimingReport::from_slacks(Vec::new()),
            density: DensitySummary::default(),
            net_caps: BTreeMap::new(),
        };
        let mut out = CompareResult {
            before: empty(),
            regular: empty(),
            timing_driven: empty(),
        };
        let mut slacks: BTreeMap<FillMode, Vec<(String, f64)>> = BTreeMap::new();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        if reader.headers().map_err(|e| bad(e.to_string()))? != vec!["kind", "mode", "key", "value"]
        {
            return Err(bad("expected header kind,mode,key,value".into()));
        }
        for rec in reader.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let (kind, mode, key, value) = (&rec[0], &rec[1], &rec[2], &rec[3]);
            let mode = FillMode::from_row_label(mode)
                .ok_or_else(|| bad(format!("unknown mode {mode:?}")))?;
            let float = || value.parse::<f64>().map_err(|e| bad(format!("{key}: {e}")));
            let count = || {
                value
                    .parse::<usize>()
                    .map_err(|e| bad(format!("{key}: {e}")))
            };
            let o = out.mode_mut(mode);
            match (kind, key) {
                ("summary", _) => {}
                ("slack", _) => slacks
                    .entry(mode)
                    .or_default()
                    .push((key.to_string(), float()?)),
                ("density", "min") => o.density.min = float()?,
                ("density", "max") => o.density.max = float()?,
                ("density", "mean") => o.density.mean = float()?,
                ("density", "low") => o.density.low = count()?,
                ("density", "ok") => o.density.ok = count()?,
                ("density", "high") => o.density.high = count()?,
                ("density", "infeasible") => o.density.infeasible = count()?,
                ("density", "floating_tiles") => o.density.floating_tiles = count()?,
                ("density", "shield_tiles") => o.density.shield_tiles = count()?,
                ("cap_ground", net) => {
                    o.net_caps.entry(net.to_string()).or_default().ground = float()?
                }
                ("cap_coupling", net) => {
                    o.net_caps.entry(net.to_string()).or_default().coupling = float()?
                }
                _ => return Err(bad(format!("unexpected row {kind},{key}"))),
            }
        }
        for (mode, s) in slacks {
            out.mode_mut(mode).report = TimingReport::from_slacks(s);
        }
        Ok(out)
    }
}

fn fmt_ns(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// Table with columns WNS, TNS and #violation: label column left aligned,
/// numbers right aligned, two spaces between columns.
pub fn render_table(rows: &[(&str, &TimingReport)]) -> String {
    let mut cells = vec![[
        String::new(),
        "WNS".into(),
        "TNS".into(),
        "#violation".into(),
    ]];
    for (label, r) in rows {
        cells.push([
            label.to_string(),
            r.wns.map_or("n/a".into(), fmt_ns),
            fmt_ns(r.tns),
            r.num_violations.to_string(),
        ]);
    }
    let mut widths = [0usize; 4];
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    for row in &cells {
        let line = format!(
            "{:<w0$}  {:>w1$}  {:>w2$}  {:>w3$}",
            row[0],
            row[1],
            row[2],
            row[3],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2],
            w3 = widths[3]
        );
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn summarize(layout: &Layout, plan: Option<&FillPlan>) -> Result<DensitySummary> {
    let report = density_report(layout)?;
    let n = report.len().max(1) as f64;
    let count = |s| report.iter().filter(|w| w.status == s).count();
    let tiles = |k| plan.map_or(0, |p| p.inserted.iter().filter(|f| f.kind == k).count());
    Ok(DensitySummary {
        min: report
            .iter()
            .map(|w| w.density)
            .fold(f64::INFINITY, f64::min),
        max: report
            .iter()
            .map(|w| w.density)
            .fold(f64::NEG_INFINITY, f64::max),
        mean: report.iter().map(|w| w.density).sum::<f64>() / n,
        low: count(DensityStatus::Low),
        ok: count(DensityStatus::Ok),
        high: count(DensityStatus::High),
        infeasible: plan.map_or(0, |p| p.infeasible_windows.len()),
        floating_tiles: tiles(FillKind::Floating),
        shield_tiles: tiles(FillKind::Shield),
    })
}

/// Timing, density and critical-net capacitance after one fill mode.
pub fn evaluate_mode(layout: &Layout, mode: FillMode) -> Result<(ModeOutcome, Option<FillPlan>)> {
    let plan = mode.plan(layout)?;
    let filled = plan.as_ref().map(|p| p.apply(layout));
    let after = filled.as_ref().unwrap_or(layout);
    let induced = match &filled {
        Some(f) => extract_fill_coupling(f)?,
        None => Vec::new(),
    };
    let caps = delta_caps_by_net(&induced);
    let net_caps = classify_critical(layout, &CriticalityPolicy::default())
        .into_iter()
        .map(|id| {
            let (ground, coupling) = caps.get(id.as_str()).copied().unwrap_or_default();
            (id, NetCapDelta { ground, coupling })
        })
        .collect();
    let outcome = ModeOutcome {
        report: apply_deltas(layout, &net_delays(layout, &induced)?)?,
        density: summarize(after, plan.as_ref())?,
        net_caps,
    };
    Ok((outcome, plan))
}

/// Runs mode none, regular and timing-driven on copies of `layout`.
pub fn run_compare(layout: &Layout) -> Result<CompareResult> {
    require_unfilled(layout)?;
    let run = |mode| evaluate_mode(layout, mode).map(|(o, _)| o);
    Ok(CompareResult {
        before: run(FillMode::None)?,
        regular: run(FillMode::Regular)?,
        timing_driven: run(FillMode::TimingDriven)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench_gen::{gen_benchmark, BenchmarkParams};

    fn report(slacks: &[f64]) -> TimingReport {
        TimingReport::from_slacks(
            slacks
                .iter()
                .enumerate()
                .map(|(i, s)| (format!("ep{i}"), *s))
                .collect(),
        )
    }

    #[test]
    fn table_header_and_golden_row() {
        let r = report(&[
            -0.015, -0.010, -0.008, -0.007, -0.006, -0.005, -0.004, 0.2, 0.0,
        ]);
        assert_eq!(r.num_violations, 7);
        let table = render_table(&[("before", &r)]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(
            lines[0].split_whitespace().collect::<Vec<_>>(),
            ["WNS", "TNS", "#violation"]
        );
        assert_eq!(lines[1], "before  -0.015  -0.055           7");
        assert_eq!(
            lines[1].split_whitespace().collect::<Vec<_>>(),
            ["before", "-0.015", "-0.055", "7"]
        );
    }

    #[test]
    fn table_without_endpoints() {
        let t = render_table(&[("before", &report(&[]))]);
        assert_eq!(
            t.lines()
                .nth(1)
                .unwrap()
                .split_whitespace()
                .collect::<Vec<_>>(),
            ["before", "n/a", "0.000", "0"]
        );
    }

    #[test]
    fn fill_mode_spellings() {
        for m in FillMode::ALL {
            assert_eq!(m.as_str().parse::<FillMode>().unwrap(), m);
        }
        assert_eq!("blind".parse::<FillMode>().unwrap_err().code(), "E_PARSE");
    }

    #[test]
    fn compare_on_small_benchmark() {
        let p = BenchmarkParams {
            die_edge: 40_000,
            num_nets: 30,
            ..Default::default()
        };
        let layout = gen_benchmark(&p).unwrap();
        let res = run_compare(&layout).unwrap();
        assert!(res
            .before
            .net_caps
            .values()
            .all(|c| c.ground == 0.0 && c.coupling == 0.0));
        assert_eq!(res.before.density.floating_tiles, 0);
        assert!(res.regular.density.floating_tiles > 0);
        let m = layout.rules.miller_factor;
        for (net, td) in &res.timing_driven.net_caps {
            assert!(
                td.effective(m) <= res.regular.net_caps[net].effective(m),
                "{net}"
            );
        }
        assert!(res.timing_driven.report.wns >= res.regular.report.wns);
        assert!(res.timing_driven.report.tns >= res.regular.report.tns);

        let back = CompareResult::from_csv(&res.to_csv()).unwrap();
        assert_eq!(back, res);
        assert_eq!(res.table().lines().count(), 4);
    }

    #[test]
    fn refuses_filled_layout() {
        let layout = gen_benchmark(&BenchmarkParams {
            die_edge: 40_000,
            num_nets: 10,
            ..Default::default()
        })
        .unwrap();
        let filled = regular_fill(&layout).unwrap().apply(&layout);
        assert_eq!(run_compare(&filled).unwrap_err().code(), "E_VALIDATE");
    }

    #[test]
    fn csv_rejects_garbage() {
        assert_eq!(
            CompareResult::from_csv("a,b\n").unwrap_err().code(),
            "E_PARSE"
        );
        let bad = "kind,mode,key,value\nslack,after,x,1.0\n";
        assert_eq!(CompareResult::from_csv(bad).unwrap_err().code(), "E_PARSE");
    }
}
