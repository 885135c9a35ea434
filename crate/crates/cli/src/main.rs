use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use fillwright_core::cap::{extract_coupling, fill_induced, records_csv};
use fillwright_core::compare::FillMode;
use fillwright_core::density::report_csv;
use fillwright_core::svg::write_svg;
use fillwright_core::timing::net_delays;
use fillwright_core::{
    apply_deltas, density_report, gen_benchmark, load_layout, run_compare, save_layout,
    BenchmarkParams, DensityStatus, Layout,
};

const SEED_ENV: &str = "FILLWRIGHT_SEED";

#[derive(Parser)]
#[command(name = "fillwright", version, about = "Timing-aware dummy metal fill")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic benchmark layout.
    Gen {
        /// Overridden by FILLWRIGHT_SEED when set.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100.0)]
        die_um: f64,
        #[arg(long, default_value_t = 150)]
        nets: usize,
        #[arg(long, default_value_t = 0.2)]
        critical_frac: f64,
        #[arg(long, default_value_t = 3)]
        layers: usize,
        #[arg(long, default_value_t = 10.0)]
        rail_pitch_um: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Insert fill and write the filled layout and the fill plan.
    Fill {
        #[arg(long, value_parser = parse_mode)]
        mode: FillMode,
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Density, coupling and timing reports for a (possibly filled) layout.
    Report {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        density: Option<PathBuf>,
        #[arg(long)]
        caps: Option<PathBuf>,
        #[arg(long)]
        timing: Option<PathBuf>,
    },
    /// Before / regular / timing-driven comparison table.
    Compare {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Render one layer as SVG.
    Svg {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        layer: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_mode(s: &str) -> Result<FillMode, String> {
    s.parse().map_err(|e: fillwright_core::Error| e.to_string())
}

/// Successful runs either finish cleanly or leave low-density windows behind.
enum Outcome {
    Clean,
    Infeasible(usize),
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| fillwright_core::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn um_to_nm(um: f64, what: &str) -> Result<i64> {
    if !um.is_finite() || um <= 0.0 {
        bail!(fillwright_core::Error::Params(format!(
            "{what} must be positive"
        )));
    }
    Ok((um * 1000.0).round() as i64)
}

fn seed(flag: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| {
                fillwright_core::Error::Params(format!(
                    "{SEED_ENV}={v:?} is not an unsigned integer"
                ))
            })
            .context("reading seed"),
        Err(_) => Ok(flag),
    }
}

/// Fill-induced slacks of a layout whose fills are already in place.
fn timing_of(layout: &Layout) -> Result<fillwright_core::TimingReport> {
    let base = layout.with_fills(Vec::new());
    let induced = fill_induced(&extract_coupling(layout)?, &extract_coupling(&base)?);
    Ok(apply_deltas(&base, &net_delays(&base, &induced)?)?)
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Gen {
            seed: flag,
            die_um,
            nets,
            critical_frac,
            layers,
            rail_pitch_um,
            out,
        } => {
            let params = BenchmarkParams {
                seed: seed(flag)?,
                die_edge: um_to_nm(die_um, "--die-um")?,
                num_layers: layers,
                num_nets: nets,
                critical_fraction: critical_frac,
                reference_rail_pitch: um_to_nm(rail_pitch_um, "--rail-pitch-um")?,
                ..BenchmarkParams::default()
            };
            let layout = gen_benchmark(&params)?;
            save_layout(&layout, &out)?;
            println!(
                "wrote {} ({} nets, {} shapes, seed {})",
                out.display(),
                layout.nets.len(),
                layout.num_net_shapes(),
                params.seed
            );
            Ok(Outcome::Clean)
        }
        Command::Fill {
            mode,
            layout,
            out,
            plan,
        } => {
            let layout = load_layout(&layout)?;
            let Some(fill_plan) = mode.plan(&layout)? else {
                save_layout(&layout, &out)?;
                if let Some(p) = plan {
                    write(&p, "{\n  \"inserted\": [],\n  \"mode\": \"None\"\n}\n")?;
                }
                println!("mode none: layout copied unchanged");
                return Ok(Outcome::Clean);
            };
            save_layout(&fill_plan.apply(&layout), &out)?;
            if let Some(p) = plan {
                write(&p, &fill_plan.to_json())?;
            }
            for note in &fill_plan.notes {
                eprintln!(
                    "{}: layer {} window {}: {}",
                    note.code, note.layer, note.window, note.message
                );
            }
            println!(
                "{}: inserted {} tiles, {} infeasible windows",
                mode,
                fill_plan.inserted.len(),
                fill_plan.infeasible_windows.len()
            );
            Ok(match fill_plan.infeasible_windows.len() {
                0 => Outcome::Clean,
                n => Outcome::Infeasible(n),
            })
        }
        Command::Report {
            layout,
            density,
            caps,
            timing,
        } => {
            let layout = load_layout(&layout)?;
            let windows = density_report(&layout)?;
            let low = windows
                .iter()
                .filter(|w| w.status == DensityStatus::Low)
                .count();
            let high = windows
                .iter()
                .filter(|w| w.status == DensityStatus::High)
                .count();
            println!("{} windows: {low} low, {high} high", windows.len());
            if let Some(p) = density {
                write(&p, &report_csv(&windows))?;
            }
            if let Some(p) = caps {
                write(&p, &records_csv(&extract_coupling(&layout)?))?;
            }
            if let Some(p) = timing {
                let report = timing_of(&layout)?;
                write(&p, &report.csv())?;
                match report.wns {
                    Some(wns) => println!(
                        "WNS {wns:.3} TNS {:.3} #violation {}",
                        report.tns, report.num_violations
                    ),
                    None => println!("no endpoints"),
                }
            }
            Ok(Outcome::Clean)
        }
        Command::Compare { layout, out, csv } => {
            let layout = load_layout(&layout)?;
            let result = run_compare(&layout)?;
            let table = result.table();
            write(&out, &table)?;
            if let Some(p) = csv {
                write(&p, &result.to_csv())?;
            }
            print!("{table}");
            let infeasible =
                result.regular.density.infeasible + result.timing_driven.density.infeasible;
            Ok(if result.has_infeasible() {
                Outcome::Infeasible(infeasible)
            } else {
                Outcome::Clean
            })
        }
        Command::Svg { layout, layer, out } => {
            let layout = load_layout(&layout)?;
            write_svg(&layout, layer, &out)?;
            Ok(Outcome::Clean)
        }
    }
}

/// 1 for input problems, 2 for everything else that went wrong at run time.
fn exit_code(err: &anyhow::Error) -> u8 {
    use fillwright_core::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::Io { .. } | E::NoRef(_)) | None => 2,
        Some(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible(n)) => {
            eprintln!("warning: {n} density windows remain below rho_min");
            ExitCode::from(3)
        }
        Err(err) => {
            let code = err
                .downcast_ref::<fillwright_core::Error>()
                .map_or("E_RUNTIME", |e| e.code());
            eprintln!("error[{code}]: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
