use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fillwright_core::compare::CompareResult;
use fillwright_core::{
    load_layout, save_layout, DesignRules, LayerSpec, Layout, Net, NetClass, Rect, Shape,
};
use tempfile::TempDir;

fn fillwright(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fillwright"))
        .args(args)
        .env_remove("FILLWRIGHT_SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &TempDir, name: &str, seed: &str) -> PathBuf {
    let out = path(dir, name);
    let res = fillwright(&[
        "gen",
        "--seed",
        seed,
        "--die-um",
        "40",
        "--nets",
        "30",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    out
}

#[test]
fn gen_is_reproducible_and_env_overrides_seed() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "a.json", "42");
    let b = gen(&dir, "b.json", "42");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let c = path(&dir, "c.json");
    let res = Command::new(env!("CARGO_BIN_EXE_fillwright"))
        .args([
            "gen",
            "--seed",
            "1",
            "--die-um",
            "40",
            "--nets",
            "30",
            "--out",
            s(&c),
        ])
        .env("FILLWRIGHT_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(code(&res), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());

    let bad = Command::new(env!("CARGO_BIN_EXE_fillwright"))
        .args(["gen", "--out", s(&c)])
        .env("FILLWRIGHT_SEED", "forty-two")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("E_PARAMS"));
}

#[test]
fn gen_rejects_bad_params() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "x.json");
    let res = fillwright(&["gen", "--die-um", "5", "--out", s(&out)]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains("E_PARAMS"));
    assert!(!out.exists());
}

#[test]
fn fill_modes_write_layout_and_plan() {
    let dir = TempDir::new().unwrap();
    let bench = gen(&dir, "bench.json", "3");
    for mode in ["none", "regular", "timing-driven"] {
        let out = path(&dir, &format!("{mode}.json"));
        let plan = path(&dir, &format!("{mode}.plan.json"));
        let res = fillwright(&[
            "fill",
            "--mode",
            mode,
            "--layout",
            s(&bench),
            "--out",
            s(&out),
            "--plan",
            s(&plan),
        ]);
        assert_eq!(
            code(&res),
            0,
            "{mode}: {}",
            String::from_utf8_lossy(&res.stderr)
        );
        let filled = load_layout(&out).unwrap();
        let plan: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&plan).unwrap()).unwrap();
        let inserted = plan["inserted"].as_array().unwrap().len();
        assert_eq!(filled.fills.len(), inserted);
        assert_eq!(mode == "none", inserted == 0);
    }

    // Filling an already filled layout is an input error.
    let again = fillwright(&[
        "fill",
        "--mode",
        "regular",
        "--layout",
        s(&path(&dir, "regular.json")),
        "--out",
        s(&path(&dir, "twice.json")),
    ]);
    assert_eq!(code(&again), 1);
    assert!(String::from_utf8_lossy(&again.stderr).contains("E_VALIDATE"));
}

#[test]
fn input_errors_and_io_errors_have_distinct_codes() {
    let dir = TempDir::new().unwrap();
    let junk = path(&dir, "junk.json");
    std::fs::write(&junk, "{ not json").unwrap();
    let out = path(&dir, "o.json");
    let res = fillwright(&[
        "fill",
        "--mode",
        "regular",
        "--layout",
        s(&junk),
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains("E_PARSE"));

    let missing = fillwright(&[
        "svg",
        "--layout",
        s(&path(&dir, "nope.json")),
        "--layer",
        "0",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&missing), 2);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("E_IO"));

    let bench = gen(&dir, "bench.json", "1");
    let unwritable = fillwright(&[
        "svg",
        "--layout",
        s(&bench),
        "--layer",
        "0",
        "--out",
        "/nonexistent/dir/v.svg",
    ]);
    assert_eq!(code(&unwritable), 2);

    assert_eq!(code(&fillwright(&["fill", "--mode", "blind"])), 1);
    assert_eq!(code(&fillwright(&["--help"])), 0);
}

fn keep_out_layout() -> Layout {
    let comb = (0..40).map(|k| Net {
        id: format!("c{k}"),
        class: NetClass::Critical,
        driver_res: Some(500.0),
        shapes: vec![Shape {
            layer: 0,
            rect: Rect::new(1_000, k * 500, 20_000, k * 500 + 100),
        }],
        endpoints: vec![],
    });
    Layout {
        die: Rect::new(0, 0, 20_000, 20_000),
        layers: vec![LayerSpec {
            index: 0,
            name: "M1".into(),
            thickness: 140,
            dielectric_above_t: None,
            permittivity: 3.453e-17,
            sheet_res: 0.08,
            unit_area_cap: 2e-17,
        }],
        rules: DesignRules::default(),
        nets: comb.collect(),
        fills: vec![],
    }
}

#[test]
fn infeasible_windows_exit_three_with_outputs() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "comb.json");
    save_layout(&keep_out_layout(), &input).unwrap();
    let (out, plan) = (path(&dir, "f.json"), path(&dir, "p.json"));
    let res = fillwright(&[
        "fill",
        "--mode",
        "regular",
        "--layout",
        s(&input),
        "--out",
        s(&out),
        "--plan",
        s(&plan),
    ]);
    assert_eq!(code(&res), 3);
    assert!(out.exists());
    let plan: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&plan).unwrap()).unwrap();
    assert_eq!(plan["infeasible_windows"].as_array().unwrap().len(), 1);

    // No reference net to shield from: the note is surfaced and the window stays infeasible.
    let res = fillwright(&[
        "fill",
        "--mode",
        "timing-driven",
        "--layout",
        s(&input),
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&res), 3);
    assert!(String::from_utf8_lossy(&res.stderr).contains("E_NOREF"));
}

#[test]
fn report_writes_csvs() {
    let dir = TempDir::new().unwrap();
    let bench = gen(&dir, "bench.json", "5");
    let filled = path(&dir, "filled.json");
    assert_eq!(
        code(&fillwright(&[
            "fill",
            "--mode",
            "regular",
            "--layout",
            s(&bench),
            "--out",
            s(&filled)
        ])),
        0
    );
    let (d, c, t) = (
        path(&dir, "d.csv"),
        path(&dir, "c.csv"),
        path(&dir, "t.csv"),
    );
    let res = fillwright(&[
        "report",
        "--layout",
        s(&filled),
        "--density",
        s(&d),
        "--caps",
        s(&c),
        "--timing",
        s(&t),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let density = std::fs::read_to_string(&d).unwrap();
    assert!(density.starts_with("layer,window_x,window_y,density,status\n"));
    assert_eq!(density.lines().count(), 1 + 3 * 9);
    assert!(std::fs::read_to_string(&c)
        .unwrap()
        .lines()
        .any(|l| l.contains("fill:")));
    assert!(std::fs::read_to_string(&t)
        .unwrap()
        .starts_with("endpoint,slack_ns\n"));
    assert!(String::from_utf8_lossy(&res.stdout).contains("#violation"));
}

#[test]
fn compare_writes_table_and_round_trippable_csv() {
    let dir = TempDir::new().unwrap();
    let bench = gen(&dir, "bench.json", "9");
    let (table, csv) = (path(&dir, "table.txt"), path(&dir, "table.csv"));
    let res = fillwright(&[
        "compare",
        "--layout",
        s(&bench),
        "--out",
        s(&table),
        "--csv",
        s(&csv),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(&table).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(header, ["WNS", "TNS", "#violation"]);
    let labels: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    assert_eq!(labels, ["before", "regular", "timing-driven"]);

    let parsed = CompareResult::from_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(parsed.table(), text);
    assert_eq!(parsed.to_csv(), std::fs::read_to_string(&csv).unwrap());
}

#[test]
fn svg_has_one_rect_per_shape() {
    let dir = TempDir::new().unwrap();
    let bench = gen(&dir, "bench.json", "2");
    let layout = load_layout(&bench).unwrap();
    for layer in 0..layout.layers.len() {
        let out = path(&dir, &format!("l{layer}.svg"));
        assert_eq!(
            code(&fillwright(&[
                "svg",
                "--layout",
                s(&bench),
                "--layer",
                &layer.to_string(),
                "--out",
                s(&out)
            ])),
            0
        );
        let svg = std::fs::read_to_string(&out).unwrap();
        let shapes = layout
            .nets
            .iter()
            .flat_map(|n| &n.shapes)
            .filter(|s| s.layer == layer)
            .count();
        assert_eq!(svg.matches("<rect").count(), shapes + 1);
    }
    let res = fillwright(&[
        "svg",
        "--layout",
        s(&bench),
        "--layer",
        "7",
        "--out",
        s(&path(&dir, "x.svg")),
    ]);
    assert_eq!(code(&res), 1);
}
