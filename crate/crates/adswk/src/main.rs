//! Command line front end. Each subcommand drives one library area and
//! writes its tables and plots through the atomic emitters; experiments
//! additionally leave a manifest next to their data.
//!
//! Exit status: 0 on success, 1 when a computation fails or a verdict
//! comes back false, 2 when the command line or the configuration file
//! is unusable.

use anyhow::Result;
use clap::{Parser, Subcommand};
use serde_json::json;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adswk::config::{Config, ConfigError};
use adswk::emit::{self, SvgSeries};
use adswk::experiments::{self, acceptance, ExpContext, EXPERIMENTS};
use adswk_core::evolve::{run_forward, BoundaryClosure, CollarGrid, ForwardProblem};
use adswk_core::functional::{hardy_infimum, poincare_constant, WeightedGrid1D};
use adswk_core::gbbflow::{trace_gbb, IntegratorConfig, WallBehavior};
use adswk_core::geometry::{
    eval_dual_metric, indicial_roots, CotangentPoint, MetricModel, SpectralParam,
};
use adswk_core::modes::{
    bf_diagnostic, build_radial_ode, eigenmodes_truncated, frobenius_expand, integrate_radial,
    scattering_coefficient, BfClass, Branch, ModeSpec,
};

#[derive(Parser)]
#[command(name = "adswk", version, about = "numerical laboratory for waves near a conformal boundary")]
struct Cli {
    /// sectioned configuration file; built-in defaults apply when omitted
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// output directory (overrides ADSWK_OUT and [output] dir)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// worker threads for embarrassingly parallel tables
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// seed for randomized draws
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// comma separated subset of csv,json,svg
    #[arg(long, global = true, value_name = "LIST")]
    format: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Trace a broken bicharacteristic and record its boundary events
    Trace {
        /// start state as x,y...,xi,zeta... (2n numbers); default is an
        /// inward null covector at x = 1 over the spatial origin
        #[arg(long, value_name = "LIST")]
        start: Option<String>,
        /// parameter interval as s0,s1 (default 0,[integrator] t_end)
        #[arg(long, value_name = "S0,S1")]
        span: Option<String>,
        /// stop with a domain-exit event at the outer wall x = x_max
        /// instead of reflecting back into the collar
        #[arg(long)]
        exit_at_wall: bool,
    },
    /// Radial mode profiles, indicial data, and the scattering coefficient
    Modes,
    /// Evolve the forward problem on the collar grid from a centered bump
    Evolve,
    /// Sharp weighted Hardy and Poincare constants on a graded grid
    Ineq,
    /// Run a named experiment under a manifest
    Experiment {
        /// experiment id; falls back to [experiment] id
        id: Option<String>,
        /// list available experiments and exit
        #[arg(long)]
        list: bool,
    },
    /// Run the acceptance criteria and write accept.json
    Accept {
        /// comma separated criterion ids (default: all ten)
        #[arg(long, value_delimiter = ',', value_name = "IDS")]
        only: Vec<u32>,
    },
    /// Parse and validate a configuration file, then exit
    ValidateConfig,
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if matches!(cli.cmd, Cmd::ValidateConfig) {
        println!("ok: {}", cfg.label());
        return ExitCode::SUCCESS;
    }
    match dispatch(&cli, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() || e.is::<ConfigError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, ConfigError> {
    match &cli.config {
        Some(path) => Config::load(path),
        None => {
            let cfg = Config::parse("", "<defaults>")?;
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

fn dispatch(cli: &Cli, cfg: &Config) -> Result<bool> {
    let out = out_dir(cli.out.as_ref(), std::env::var("ADSWK_OUT").ok().as_deref(), cfg);
    let fmts = formats(cli, cfg)?;
    match &cli.cmd {
        Cmd::Trace { start, span, exit_at_wall } => {
            cmd_trace(cfg, &out, &fmts, start.as_deref(), span.as_deref(), *exit_at_wall)
        }
        Cmd::Modes => cmd_modes(cfg, &out, &fmts),
        Cmd::Evolve => cmd_evolve(cfg, &out, &fmts),
        Cmd::Ineq => cmd_ineq(cfg, &out, &fmts),
        Cmd::Experiment { id, list } => cmd_experiment(cli, cfg, &out, &fmts, id.as_deref(), *list),
        Cmd::Accept { only } => cmd_accept(&out, only),
        Cmd::ValidateConfig => unreachable!("handled before dispatch"),
    }
}

/// --out beats ADSWK_OUT beats [output] dir beats ./results
fn out_dir(flag: Option<&PathBuf>, env: Option<&str>, cfg: &Config) -> PathBuf {
    if let Some(dir) = flag {
        return dir.clone();
    }
    if let Some(dir) = env {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    PathBuf::from(cfg.str_or("output", "dir", "results"))
}

fn formats(cli: &Cli, cfg: &Config) -> Result<BTreeSet<String>> {
    let text = match &cli.format {
        Some(t) => t.clone(),
        None => cfg.str_or("output", "formats", "csv,json,svg"),
    };
    let mut set = BTreeSet::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if !["csv", "json", "svg"].contains(&part) {
            return Err(usage(format!("unknown format `{part}` (known: csv, json, svg)")));
        }
        set.insert(part.to_string());
    }
    if set.is_empty() {
        return Err(usage("empty format list"));
    }
    Ok(set)
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1).min(8)
}

fn model_from(cfg: &Config, n: usize) -> MetricModel {
    match cfg.str_or("model", "family", "flat").as_str() {
        "ads" => MetricModel::exact_ads_collar(n),
        _ => MetricModel::flat_slab(n),
    }
}

fn parse_floats(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|part| {
            let part = part.trim();
            part.parse::<f64>()
                .map_err(|_| usage(format!("`{part}` in {what} is not a number")))
        })
        .collect()
}

fn parse_start(text: &str, n: usize) -> Result<CotangentPoint> {
    let v = parse_floats(text, "--start")?;
    if v.len() != 2 * n {
        return Err(usage(format!(
            "--start needs 2n = {} numbers (x, y..., xi, zeta...), got {}",
            2 * n,
            v.len()
        )));
    }
    Ok(CotangentPoint { x: v[0], y: v[1..n].to_vec(), xi: v[n], zeta: v[n + 1..].to_vec() })
}

/// Inward null covector at x = 1 over the spatial origin: xi = 1 and the
/// leading zeta component sized so the dual metric vanishes on it.
fn default_start(model: &MetricModel, n: usize) -> Result<CotangentPoint> {
    let y = vec![0.0; n - 1];
    let g = eval_dual_metric(model, 1.0, &y)?;
    let mut zeta = vec![0.0; n - 1];
    zeta[0] = (-g[(0, 0)] / g[(1, 1)]).sqrt();
    Ok(CotangentPoint { x: 1.0, y, xi: 1.0, zeta })
}

fn cmd_trace(
    cfg: &Config,
    out: &Path,
    fmts: &BTreeSet<String>,
    start: Option<&str>,
    span: Option<&str>,
    exit_at_wall: bool,
) -> Result<bool> {
    let n = cfg.usize_or("model", "n", 3)?;
    let model = model_from(cfg, n);
    let start_state = match start {
        Some(text) => parse_start(text, n)?,
        None => default_start(&model, n)?,
    };
    let span = match span {
        Some(text) => {
            let v = parse_floats(text, "--span")?;
            if v.len() != 2 || v[1] <= v[0] {
                return Err(usage(format!("--span needs s0,s1 with s1 > s0, got `{text}`")));
            }
            (v[0], v[1])
        }
        None => (0.0, cfg.f64_or("integrator", "t_end", 3.0)?),
    };
    let d = IntegratorConfig::default();
    let ic = IntegratorConfig {
        rel_tol: cfg.f64_or("integrator", "rel_tol", d.rel_tol)?,
        abs_tol: cfg.f64_or("integrator", "abs_tol", d.abs_tol)?,
        max_step: cfg.f64_or("integrator", "max_step", d.max_step)?,
        sample_ds: cfg.f64_or("integrator", "sample_ds", d.sample_ds)?,
        wall: if exit_at_wall { WallBehavior::Exit } else { WallBehavior::Reflect },
        ..d
    };
    let path = trace_gbb(&model, &start_state, span, &ic)?;
    let samples = path.compressed_samples();

    if fmts.contains("csv") {
        let mut headers = vec!["s".to_string(), "x".to_string()];
        for j in 1..n {
            headers.push(format!("y{j}"));
        }
        headers.push("xib".to_string());
        for j in 1..n {
            headers.push(format!("zetab{j}"));
        }
        let hdr: Vec<&str> = headers.iter().map(String::as_str).collect();
        let rows: Vec<Vec<f64>> = samples
            .iter()
            .map(|c| {
                let mut r = vec![c.s, c.x];
                r.extend_from_slice(&c.y);
                r.push(c.xib);
                r.extend_from_slice(&c.zetab);
                r
            })
            .collect();
        emit::write_csv(&out.join("trace.csv"), &hdr, &rows)?;
        println!("wrote {}", out.join("trace.csv").display());
    }
    if fmts.contains("json") {
        let events: Vec<serde_json::Value> = path
            .events
            .iter()
            .map(|e| {
                json!({
                    "s": e.s,
                    "kind": format!("{:?}", e.kind),
                    "x": e.x,
                    "y": e.y,
                    "zeta": e.zeta,
                    "xi_in": e.xi_in,
                    "xi_out": e.xi_out,
                    "normalized_xi": e.normalized_xi,
                    "note": e.note,
                })
            })
            .collect();
        let doc = json!({
            "n": n,
            "span": [span.0, span.1],
            "boundary_events": path.boundary_event_count(),
            "wall_kinks": path.wall_kink_params(),
            "events": events,
        });
        emit::write_json(&out.join("events.json"), &doc)?;
        println!("wrote {}", out.join("events.json").display());
    }
    if fmts.contains("svg") {
        let xs: Vec<(f64, f64)> = samples.iter().map(|c| (c.s, c.x)).collect();
        let y1: Vec<(f64, f64)> = samples.iter().map(|c| (c.s, c.y[0])).collect();
        emit::write_svg_lines(
            &out.join("trace.svg"),
            "broken ray in the collar",
            "s",
            "coordinate",
            &[
                SvgSeries { label: "x".into(), points: xs },
                SvgSeries { label: "y1".into(), points: y1 },
            ],
        )?;
        println!("wrote {}", out.join("trace.svg").display());
    }
    println!(
        "trace: {} samples, {} boundary events, {} wall kinks",
        samples.len(),
        path.boundary_event_count(),
        path.wall_kink_params().len()
    );
    Ok(true)
}

fn cmd_modes(cfg: &Config, out: &Path, fmts: &BTreeSet<String>) -> Result<bool> {
    let n = cfg.dimension()?;
    let model = model_from(cfg, n);
    let lambda = cfg.f64_or("spectral", "lambda", 0.0)?;
    let sp = SpectralParam::real(n, lambda);
    let roots = indicial_roots(&sp);
    let diag = bf_diagnostic(&sp);
    let omega = cfg.f64_or("spectral", "sigma", 1.0)?;
    let k = cfg.f64_list_or("spectral", "k", &vec![0.0; n - 2])?;
    let x_bc = cfg.f64_or("spectral", "x_bc", 1.0)?;
    let spec = ModeSpec::new(omega, k.clone());
    let ode = build_radial_ode(&model, &spec, &sp)?;

    if fmts.contains("csv") {
        let mut rows: Vec<Vec<String>> = Vec::new();
        for (name, branch) in [("minus", Branch::Minus), ("plus", Branch::Plus)] {
            let series = frobenius_expand(&ode, branch, 48)?;
            let sol = integrate_radial(&ode, &series, x_bc)?;
            for (x, v) in sol.xs.iter().zip(&sol.v) {
                rows.push(vec![
                    name.to_string(),
                    emit::fmt_f64(*x),
                    emit::fmt_f64(v.re),
                    emit::fmt_f64(v.im),
                ]);
            }
        }
        emit::write_csv_records(&out.join("radial.csv"), &["branch", "x", "re", "im"], &rows)?;
        println!("wrote {}", out.join("radial.csv").display());
    }

    let class = match diag.class {
        BfClass::BelowBound => "below",
        BfClass::Borderline => "borderline",
        BfClass::AboveBound => "above",
    };
    let mut doc = json!({
        "n": n,
        "lambda": lambda,
        "omega": omega,
        "k": k,
        "x_bc": x_bc,
        "indicial": {
            "s_minus": [roots.s_minus.re, roots.s_minus.im],
            "s_plus": [roots.s_plus.re, roots.s_plus.im],
            "log_case": roots.log_case,
            "real_case": roots.real_case,
        },
        "threshold": { "class": class, "bound": diag.bound, "distance": diag.distance },
    });
    let mut dtn_text = String::from("none");
    if roots.real_case {
        let sc = scattering_coefficient(&ode, x_bc)?;
        doc["scattering"] = json!({
            "dtn": sc.dtn.map(|v| vec![v.re, v.im]),
            "resonant": sc.resonant,
        });
        dtn_text = match sc.dtn {
            Some(v) => format!("({}, {})", emit::fmt_f64(v.re), emit::fmt_f64(v.im)),
            None => "resonant".to_string(),
        };
    } else {
        doc["scattering"] = json!({
            "dtn": null,
            "resonant": false,
            "note": "complex indicial pair above the Breitenlohner-Freedman bound; \
                     no decaying branch to normalize against",
        });
    }
    if cfg.get_str("spectral", "sigma_min").is_some()
        && cfg.get_str("spectral", "sigma_max").is_some()
    {
        let lo = cfg.f64_or("spectral", "sigma_min", 0.0)?;
        let hi = cfg.f64_or("spectral", "sigma_max", 0.0)?;
        let eigs = eigenmodes_truncated(&model, &sp, &k, (lo, hi), x_bc)?;
        println!("modes: {} interior eigenfrequencies in ({lo}, {hi})", eigs.len());
        doc["eigenfrequencies"] = json!(eigs);
    }
    if fmts.contains("json") {
        emit::write_json(&out.join("scattering.json"), &doc)?;
        println!("wrote {}", out.join("scattering.json").display());
    }
    println!("modes: class {class}, dtn {dtn_text}");
    Ok(true)
}

fn cmd_evolve(cfg: &Config, out: &Path, fmts: &BTreeSet<String>) -> Result<bool> {
    let n = cfg.usize_or("model", "n", 3)?;
    let nx = cfg.usize_or("grid", "nx", 128)?;
    let ny = cfg.usize_or("grid", "ny", 1)?;
    let x_min = cfg.f64_or("grid", "x_min", 0.05)?;
    let y_width = cfg.f64_or("grid", "y_width", 1.0)?;
    let lambda = cfg.f64_or("spectral", "lambda", 0.0)?;
    let closure = match cfg.str_or("integrator", "closure", "indicial").as_str() {
        "wall" => BoundaryClosure::HomogeneousWall,
        _ => BoundaryClosure::IndicialExtrapolation {
            order: cfg.usize_or("integrator", "closure_order", 3)?,
        },
    };
    let t_end = cfg.f64_or("integrator", "t_end", 1.0)?;
    let sample_every = cfg.usize_or("integrator", "sample_every", 10)?;

    let grid = CollarGrid::new(n, x_min, nx, ny, y_width);
    let prob = ForwardProblem::new(grid, lambda, closure)?;
    let g = &prob.grid;

    // compactly supported bump in the middle of the strip
    let xc = 0.5 * (x_min + 1.0);
    let yc = 0.5 * y_width;
    let rad = 0.25 * (1.0 - x_min);
    let mut u0 = vec![0.0; g.len()];
    for i in 0..g.nx {
        for j in 0..g.ny {
            let ux = (g.x(i) - xc) / rad;
            let uy = if g.ny > 1 {
                let width = g.ny as f64 * g.dy;
                let mut dy = g.y(j) - yc;
                dy -= (dy / width).round() * width;
                dy / rad
            } else {
                0.0
            };
            let r2 = ux * ux + uy * uy;
            if r2 < 1.0 {
                u0[g.id(i, j)] = (1.0 - r2).powi(4);
            }
        }
    }
    let v0 = vec![0.0; g.len()];
    let outcome = run_forward(&prob, &u0, &v0, None, t_end, sample_every, None)?;

    if fmts.contains("csv") {
        let rows: Vec<Vec<f64>> = (0..outcome.times.len())
            .map(|i| {
                vec![outcome.times[i], outcome.h10[i], outcome.energies[i], outcome.max_abs[i]]
            })
            .collect();
        emit::write_csv(&out.join("series.csv"), &["t", "h10", "energy", "max_abs"], &rows)?;
        println!("wrote {}", out.join("series.csv").display());
    }
    if fmts.contains("json") {
        let (bin, side) =
            emit::write_snapshot(&out.join("final"), g.nx, g.ny, g.dx, g.dy, t_end, &outcome.final_u)?;
        println!("wrote {} and {}", bin.display(), side.display());
    }
    if fmts.contains("svg") {
        let h10: Vec<(f64, f64)> =
            outcome.times.iter().zip(&outcome.h10).map(|(&t, &v)| (t, v)).collect();
        let sup: Vec<(f64, f64)> =
            outcome.times.iter().zip(&outcome.max_abs).map(|(&t, &v)| (t, v)).collect();
        emit::write_svg_lines(
            &out.join("evolve.svg"),
            "forward evolution",
            "t",
            "norm",
            &[
                SvgSeries { label: "h10".into(), points: h10 },
                SvgSeries { label: "max |u|".into(), points: sup },
            ],
        )?;
        println!("wrote {}", out.join("evolve.svg").display());
    }
    println!(
        "evolve: {} steps at dt = {}, h10 growth {:.6}",
        outcome.steps,
        emit::fmt_f64(outcome.dt),
        outcome.growth()
    );
    Ok(true)
}

fn cmd_ineq(cfg: &Config, out: &Path, fmts: &BTreeSet<String>) -> Result<bool> {
    let n = cfg.dimension()?;
    let cells = cfg.usize_or("grid", "cells", 10_000)?;
    let gamma = cfg.f64_or("grid", "gamma", 3.0)?;
    let grid = WeightedGrid1D::graded(n, cells, gamma);
    let infimum = hardy_infimum(&grid);
    let sharp = ((n as f64 - 1.0) / 2.0).powi(2);
    let rel_err = (infimum - sharp).abs() / sharp;

    let k_region: Vec<bool> = grid.xs().iter().map(|&x| x <= 0.5).collect();
    let o_region = vec![true; grid.cells()];
    let poincare = poincare_constant(&grid, &k_region, &o_region);

    if fmts.contains("json") {
        let doc = json!({
            "n": n,
            "cells": cells,
            "gamma": gamma,
            "hardy": { "infimum": infimum, "sharp": sharp, "rel_err": rel_err },
            "poincare": {
                "k_region": "x <= 1/2",
                "o_region": "whole collar",
                "constant": poincare.constant,
                "min_eigenvalue": poincare.min_eigenvalue,
                "disconnected": poincare.disconnected,
            },
        });
        emit::write_json(&out.join("ineq.json"), &doc)?;
        println!("wrote {}", out.join("ineq.json").display());
    }
    println!(
        "ineq: hardy infimum {} vs sharp {} (rel err {:.2e}); poincare constant {}",
        emit::fmt_f64(infimum),
        emit::fmt_f64(sharp),
        rel_err,
        emit::fmt_f64(poincare.constant)
    );
    Ok(true)
}

fn cmd_experiment(
    cli: &Cli,
    cfg: &Config,
    out: &Path,
    fmts: &BTreeSet<String>,
    id: Option<&str>,
    list: bool,
) -> Result<bool> {
    if list {
        for id in EXPERIMENTS {
            println!("{id}");
        }
        return Ok(true);
    }
    let id = match id {
        Some(text) => text.to_string(),
        None => cfg.str_or("experiment", "id", ""),
    };
    if id.is_empty() {
        return Err(usage("no experiment named: pass an id or set [experiment] id"));
    }
    if !EXPERIMENTS.contains(&id.as_str()) {
        return Err(usage(format!(
            "unknown experiment `{id}` (available: {})",
            EXPERIMENTS.join(", ")
        )));
    }
    let threads = match cli.threads {
        Some(t) => t.max(1),
        None => match cfg.usize_or("experiment", "threads", 0)? {
            0 => default_threads(),
            t => t,
        },
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => cfg.u64_or("experiment", "seed", 0)?,
    };
    let lambdas = match cfg.get_str("experiment", "lambdas") {
        Some(_) => Some(cfg.f64_list_or("experiment", "lambdas", &[])?),
        None => None,
    };
    let ctx = ExpContext {
        out_root: out.to_path_buf(),
        config_text: cfg.raw_text().to_string(),
        seed,
        threads,
        formats: fmts.clone(),
        lambdas,
    };
    let summary = experiments::run(&ctx, &id)?;
    println!(
        "experiment {}: {} ({})",
        summary.id,
        if summary.pass { "pass" } else { "FAIL" },
        summary.dir.display()
    );
    for name in &summary.outputs {
        println!("  {name}");
    }
    Ok(summary.pass)
}

fn cmd_accept(out: &Path, only: &[u32]) -> Result<bool> {
    let ids: Vec<u32> = if only.is_empty() { (1..=10).collect() } else { only.to_vec() };
    if let Some(bad) = ids.iter().find(|id| !(1..=10).contains(*id)) {
        return Err(usage(format!("no criterion {bad} (valid: 1-10)")));
    }
    let verdicts = acceptance::run_ids(&ids)?;
    let mut all_pass = true;
    for v in &verdicts {
        let status = if v.pass { "pass" } else { "FAIL" };
        println!(
            "criterion {:02} {status}: {} ({:.2} s of {:.0} s budget)",
            v.id, v.name, v.runtime_s, v.budget_s
        );
        all_pass &= v.pass;
    }
    emit::write_json(&out.join("accept.json"), &verdicts)?;
    println!(
        "accept: {}/{} criteria pass, wrote {}",
        verdicts.iter().filter(|v| v.pass).count(),
        verdicts.len(),
        out.join("accept.json").display()
    );
    Ok(all_pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_list_needs_2n_numbers() {
        let err = parse_start("1,0,0,1,1", 3).unwrap_err();
        assert!(err.is::<UsageError>(), "wrong error class: {err}");
        assert!(format!("{err}").contains("2n = 6"), "{err}");
        let p = parse_start(" 1, 0, 0, 1, 1, 0 ", 3).unwrap();
        assert_eq!((p.x, p.xi), (1.0, 1.0));
        assert_eq!(p.y, vec![0.0, 0.0]);
        assert_eq!(p.zeta, vec![1.0, 0.0]);
    }

    #[test]
    fn out_dir_precedence() {
        let cfg = Config::parse("[output]\ndir = cfg_dir\n", "t").unwrap();
        let flag = PathBuf::from("flag");
        assert_eq!(out_dir(Some(&flag), Some("env"), &cfg), PathBuf::from("flag"));
        assert_eq!(out_dir(None, Some("env"), &cfg), PathBuf::from("env"));
        assert_eq!(out_dir(None, Some(""), &cfg), PathBuf::from("cfg_dir"));
        let empty = Config::parse("", "t").unwrap();
        assert_eq!(out_dir(None, None, &empty), PathBuf::from("results"));
    }

    #[test]
    fn format_list_is_checked() {
        let cfg = Config::parse("", "t").unwrap();
        let cli = Cli::try_parse_from(["adswk", "--format", "csv,png", "ineq"]).unwrap();
        let err = formats(&cli, &cfg).unwrap_err();
        assert!(err.is::<UsageError>(), "wrong error class: {err}");
        assert!(format!("{err}").contains("png"), "{err}");
        let cli = Cli::try_parse_from(["adswk", "--format", "svg", "ineq"]).unwrap();
        let fmts = formats(&cli, &cfg).unwrap();
        assert_eq!(fmts.len(), 1);
        assert!(fmts.contains("svg"));
    }
}
