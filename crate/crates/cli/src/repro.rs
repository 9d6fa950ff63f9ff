//! `repro-paper`: data behind the eight reference figures plus a manifest.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde_json::{json, Value};

use nlriver::discretize::{assemble, Grid};
use nlriver::evolve::{evolve, evolve_from, step_limits, EvolveOptions, Trajectory};
use nlriver::io::{self, fmt_e, Meta};
use nlriver::stationary::{Start, StationaryProblem};
use nlriver::threshold::{find_threshold_two_level, limit_study_q_to_infinity, limit_study_q_to_zero, stationary_sweep};

use crate::{search_interval, sha256_hex, solver, write_artifact, Context, Failure};

const SMALL_Q: [f64; 4] = [0.0, 0.1, 0.2, 0.3];
const LARGE_Q: [f64; 4] = [2.0, 4.0, 6.0, 8.0];
const LOCATIONS: [f64; 2] = [1.0, 4.0];

struct Writer<'a> {
    dir: &'a Path,
    force: bool,
    files: Vec<Value>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, content: String, extra: Value) -> Result<(), Failure> {
        write_artifact(self.dir, name, &content, self.force)?;
        let mut entry = json!({ "file": name, "sha256": sha256_hex(content.as_bytes()) });
        if let (Value::Object(e), Value::Object(x)) = (&mut entry, extra) {
            e.extend(x);
        }
        self.files.push(entry);
        Ok(())
    }
}

fn label(q: f64) -> String {
    format!("q={q}")
}

/// Profiles of several runs at the given times, one column per run.
fn profiles_at_times(grid: &Grid, runs: &[(f64, Trajectory)], times: &[f64], meta: &Meta) -> String {
    let mut out = String::new();
    for (k, v) in meta.entries() {
        let _ = writeln!(out, "# {k}={v}");
    }
    let header: Vec<String> = ["t".into(), "x".into()].into_iter().chain(runs.iter().map(|(q, _)| label(*q))).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for &t in times {
        let cols: Vec<(f64, &DVector<f64>)> = runs.iter().map(|(_, tr)| tr.profile_near(t)).collect();
        for (i, x) in grid.nodes().iter().enumerate() {
            let cells: Vec<String> = [fmt_e(cols[0].0), fmt_e(*x)].into_iter().chain(cols.iter().map(|(_, p)| fmt_e(p[i]))).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    out
}

/// Time series at fixed locations, columns `u(x=..;q=..)`.
fn series_at_locations(grid: &Grid, runs: &[(f64, Trajectory)], meta: &Meta) -> String {
    let mut out = String::new();
    for (k, v) in meta.entries() {
        let _ = writeln!(out, "# {k}={v}");
    }
    let nodes: Vec<usize> = LOCATIONS.iter().map(|&x| grid.nearest(x)).collect();
    let mut header = vec!["t".to_string()];
    for &x in &LOCATIONS {
        for (q, _) in runs {
            header.push(format!("x={x};{}", label(*q)));
        }
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for k in 0..runs[0].1.times.len() {
        let mut cells = vec![fmt_e(runs[0].1.times[k])];
        for &node in &nodes {
            for (_, tr) in runs {
                cells.push(fmt_e(tr.profiles[k][node]));
            }
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn family(ctx: &Context, grid: &Grid, qs: &[f64], opts: &EvolveOptions) -> Result<Vec<(f64, Trajectory)>, Failure> {
    let base = assemble(&ctx.scenario, grid).map_err(solver)?;
    let u0 = grid.sample(|x| ctx.scenario.u0_at(x));
    qs.par_iter()
        .map(|&q| evolve_from(&base.with_q(q), &ctx.scenario.reaction, grid, u0.clone(), opts).map(|t| (q, t)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(solver)
}

pub fn run(ctx: &Context) -> Result<(), Failure> {
    let date = chrono::Local::now().format("%Y-%m-%d").to_string();
    let dir = ctx.out.join(format!("repro-paper-{date}"));
    if dir.exists() && !ctx.force {
        return Err(Failure::Io(format!("{} exists (use --force to overwrite)", dir.display())));
    }
    let grid = ctx.grid()?;
    let mut w = Writer { dir: &dir, force: ctx.force, files: Vec::new() };
    let meta = ctx.meta();

    // persistence and extinction runs
    for (name, q, t_end, every) in [("fig1_persistence_q0.5.csv", 0.5, 50.0, 0.5), ("fig2_extinction_q1.csv", 1.0, 100.0, 1.0)] {
        let s = ctx.scenario.with_q(q);
        let traj = evolve(&s, &grid, &ctx.evolve_options(t_end, every)).map_err(solver)?;
        let m = meta.clone().num("q", q).num("t_end", t_end);
        let extra = json!({ "q": q, "dt": traj.dt, "scheme": traj.scheme.as_str(), "final_sup_norm": traj.final_sup_norm() });
        w.put(name, io::trajectory_csv(&traj, &grid, &m, ctx.layout), extra)?;
    }

    // threshold bracket and the stationary-norm curve around it
    let (lo, hi) = search_interval(ctx);
    let report = find_threshold_two_level(&ctx.scenario, ctx.settings.n_cells, lo, hi, ctx.settings.tol).map_err(solver)?;
    w.put(
        "fig3_threshold.csv",
        io::threshold_csv(&report, &meta),
        json!({ "bracket": [report.bracket.0, report.bracket.1], "richardson": report.richardson, "tol": report.tol }),
    )?;
    let (a, b) = ((report.bracket.0 - 0.1).max(0.0), report.bracket.1 + 0.1);
    let qs: Vec<f64> = (0..=20).map(|k| a + (b - a) * k as f64 / 20.0).collect();
    let sweep = stationary_sweep(&ctx.scenario, &grid, &qs).map_err(solver)?;
    w.put("fig3_sweep.csv", io::sweep_csv(&sweep, &meta), json!({ "q_range": [a, b], "points": qs.len() }))?;

    // small flows: shared explicit step fixed by the largest q
    let base = assemble(&ctx.scenario, &grid).map_err(solver)?;
    let u0 = grid.sample(|x| ctx.scenario.u0_at(x));
    let ceiling = u0.max().max(ctx.scenario.reaction.n_bound());
    let dt_small = step_limits(&base.with_q(0.3), &ctx.scenario.reaction, &grid, ceiling).explicit_default;
    let small_opts = EvolveOptions { stop_on_extinct: false, ..EvolveOptions::until(4.0).recording(0.05).dt(dt_small) };
    let small = family(ctx, &grid, &SMALL_Q, &small_opts)?;
    let m = meta.clone().num("dt", dt_small).with("scheme", "euler");
    let extra = json!({ "q": SMALL_Q, "dt": dt_small, "scheme": "euler" });
    w.put("fig4_small_q_profiles.csv", profiles_at_times(&grid, &small, &[1.0, 4.0], &m), extra.clone())?;
    w.put("fig5_small_q_locations.csv", series_at_locations(&grid, &small, &m), extra)?;

    let stationary: Vec<(f64, DVector<f64>)> = SMALL_Q
        .par_iter()
        .map(|&q| {
            let s = ctx.scenario.with_q(q);
            StationaryProblem::with_operator(&s, &grid, base.with_q(q))
                .and_then(|p| p.monotone_iterate(Start::Upper))
                .map(|r| (q, r.profile))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(solver)?;
    let columns: Vec<(String, &DVector<f64>)> = stationary.iter().map(|(q, p)| (label(*q), p)).collect();
    w.put("fig6_small_q_stationary.csv", io::profiles_csv(&grid, &columns, &meta.clone().with("method", "monotone_upper")), json!({ "q": SMALL_Q }))?;
    let zero = limit_study_q_to_zero(&ctx.scenario, &grid, &[0.3, 0.2, 0.1, 0.05]).map_err(solver)?;
    w.put("fig6_zero_limit.csv", io::zero_limit_csv(&zero, &meta), json!({ "dt": zero.dt }))?;

    // large flows
    let large_opts = EvolveOptions { auto_imex: true, stop_on_extinct: false, ..EvolveOptions::until(1.2).recording(0.05) };
    let large = family(ctx, &grid, &LARGE_Q, &large_opts)?;
    let dts: Vec<f64> = large.iter().map(|(_, t)| t.dt).collect();
    let schemes: Vec<&str> = large.iter().map(|(_, t)| t.scheme.as_str()).collect();
    let extra = json!({ "q": LARGE_Q, "dt": dts, "scheme": schemes });
    w.put("fig7_large_q_profiles.csv", profiles_at_times(&grid, &large, &[1.0, 1.2], &meta), extra.clone())?;
    w.put("fig8_large_q_locations.csv", series_at_locations(&grid, &large, &meta), extra)?;
    let limit = limit_study_q_to_infinity(&ctx.scenario, &grid, &LARGE_Q, 1.2).map_err(solver)?;
    w.put("fig8_large_q_limit.csv", io::infinity_limit_csv(&limit, &meta), json!({ "t_end": 1.2 }))?;

    let manifest = json!({
        "tool": "nlriver",
        "version": env!("CARGO_PKG_VERSION"),
        "date": date,
        "scenario": { "source": ctx.scenario_label, "sha256": ctx.scenario_hash },
        "grid": { "n_cells": grid.n_cells(), "h": grid.step(), "l1": grid.domain().l1, "l2": grid.domain().l2 },
        "options": {
            "tol": ctx.settings.tol,
            "dt": ctx.settings.dt,
            "scheme": ctx.settings.scheme.as_str(),
            "format": match ctx.layout { io::TrajectoryLayout::Wide => "wide", io::TrajectoryLayout::Long => "long" },
            "eigen": "shift_invert",
            "threshold_interval": [lo, hi],
        },
        "files": w.files,
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Io(e.to_string()))? + "\n";
    write_artifact(&dir, "manifest.json", &text, ctx.force)?;
    println!("{}", dir.display());
    Ok(())
}
