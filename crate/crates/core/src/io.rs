//! CSV emission. Every number is written with C-style `%.12e` formatting so
//! that reruns are byte-identical; metadata goes in leading `# key=value`
//! lines; records end in LF.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::discretize::Grid;
use crate::eigen::Indicator;
use crate::evolve::Trajectory;
use crate::stationary::StationaryResult;
use crate::threshold::{InfinityLimitRow, SweepRow, ThresholdReport, ZeroLimitTable};

/// `printf("%.12e")`: twelve mantissa digits, signed exponent of at least two digits.
pub fn fmt_e(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Ordered `# key=value` header block.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Meta(Vec<(String, String)>);

impl Meta {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.push(key, value);
        self
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    pub fn num(self, key: &str, value: f64) -> Self {
        self.with(key, fmt_e(value))
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.0
    }

    fn write_into(&self, out: &mut String) {
        for (k, v) in &self.0 {
            let _ = writeln!(out, "# {k}={v}");
        }
    }
}

fn row(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let line: Vec<String> = cells.into_iter().collect();
    out.push_str(&line.join(","));
    out.push('\n');
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryLayout {
    /// `t, x_0, …, x_n`; the first data row after the header holds the nodes.
    Wide,
    /// `t, x, u` per recorded node value.
    Long,
}

impl std::str::FromStr for TrajectoryLayout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "wide" => Ok(Self::Wide),
            "long" => Ok(Self::Long),
            other => Err(format!("unknown format '{other}' (wide|long)")),
        }
    }
}

pub fn trajectory_csv(traj: &Trajectory, grid: &Grid, meta: &Meta, layout: TrajectoryLayout) -> String {
    let mut out = String::new();
    meta.clone()
        .num("dt", traj.dt)
        .with("scheme", traj.scheme.as_str())
        .with("switched_to_imex", traj.switched_to_imex)
        .with("converged_to_steady", traj.converged_to_steady)
        .with("extinct", traj.extinct)
        .write_into(&mut out);
    match layout {
        TrajectoryLayout::Wide => {
            row(&mut out, std::iter::once("t".to_string()).chain((0..grid.len()).map(|i| format!("x_{i}"))));
            row(&mut out, std::iter::once("x".to_string()).chain(grid.nodes().iter().map(|&x| fmt_e(x))));
            for (t, p) in traj.times.iter().zip(&traj.profiles) {
                row(&mut out, std::iter::once(fmt_e(*t)).chain(p.iter().map(|&v| fmt_e(v))));
            }
        }
        TrajectoryLayout::Long => {
            out.push_str("t,x,u\n");
            for (t, p) in traj.times.iter().zip(&traj.profiles) {
                for (x, u) in grid.nodes().iter().zip(p.iter()) {
                    row(&mut out, [fmt_e(*t), fmt_e(*x), fmt_e(*u)]);
                }
            }
        }
    }
    out
}

pub fn profile_csv(result: &StationaryResult, grid: &Grid, meta: &Meta) -> String {
    let mut out = String::new();
    meta.clone()
        .with("method", result.method.as_str())
        .num("residual", result.residual)
        .num("residual_scale", result.residual_scale)
        .with("classification", result.classification.as_str())
        .with("iterations", result.iterations)
        .write_into(&mut out);
    out.push_str("x,U\n");
    for (x, u) in grid.nodes().iter().zip(result.profile.iter()) {
        row(&mut out, [fmt_e(*x), fmt_e(*u)]);
    }
    out
}

/// Several profiles on one grid, one column per label.
pub fn profiles_csv(grid: &Grid, columns: &[(String, &DVector<f64>)], meta: &Meta) -> String {
    let mut out = String::new();
    meta.write_into(&mut out);
    row(&mut out, std::iter::once("x".to_string()).chain(columns.iter().map(|(name, _)| name.clone())));
    for (i, x) in grid.nodes().iter().enumerate() {
        row(&mut out, std::iter::once(fmt_e(*x)).chain(columns.iter().map(|(_, p)| fmt_e(p[i]))));
    }
    out
}

pub fn eigen_csv(rows: &[Indicator], meta: &Meta) -> String {
    let mut out = String::new();
    meta.write_into(&mut out);
    out.push_str("q,lambda_p,indicator,residual,iterations\n");
    for ind in rows {
        row(
            &mut out,
            [fmt_e(ind.q), fmt_e(ind.eigen.lambda_p), fmt_e(ind.value), fmt_e(ind.eigen.residual), ind.eigen.iterations.to_string()],
        );
    }
    out
}

pub fn threshold_csv(report: &ThresholdReport, meta: &Meta) -> String {
    let mut out = String::new();
    let mut m = meta.clone().num("tol", report.tol).with(
        "bracket",
        format!("{};{}", fmt_e(report.bracket.0), fmt_e(report.bracket.1)),
    );
    if let Some((lo, hi)) = report.analytic_bounds {
        m.push("analytic_bounds", format!("{};{}", fmt_e(lo), fmt_e(hi)));
    }
    for level in &report.grid_levels {
        m.push(
            &format!("grid_level_{}", level.n_cells),
            format!("{};{}", fmt_e(level.bracket.0), fmt_e(level.bracket.1)),
        );
    }
    if let Some(r) = report.richardson {
        m.push("richardson", fmt_e(r));
    }
    m.write_into(&mut out);
    out.push_str("q,indicator,classification,n_cells\n");
    for p in &report.probes {
        row(&mut out, [fmt_e(p.q), fmt_e(p.indicator), p.outlook.as_str().to_string(), p.n_cells.to_string()]);
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow], meta: &Meta) -> String {
    let mut out = String::new();
    meta.write_into(&mut out);
    out.push_str("q,indicator,sup_norm,classification,residual\n");
    for r in rows {
        row(&mut out, [fmt_e(r.q), fmt_e(r.indicator), fmt_e(r.sup_norm), r.classification.as_str().into(), fmt_e(r.residual)]);
    }
    out
}

pub fn zero_limit_csv(table: &ZeroLimitTable, meta: &Meta) -> String {
    let mut out = String::new();
    meta.clone().num("dt", table.dt).write_into(&mut out);
    let header = ["q".to_string(), "stationary".to_string()]
        .into_iter()
        .chain(table.times.iter().map(|t| format!("t_{t}")))
        .chain(std::iter::once("flagged".to_string()));
    row(&mut out, header);
    for r in &table.rows {
        let cells = [fmt_e(r.q), fmt_e(r.stationary)]
            .into_iter()
            .chain(r.at_times.iter().map(|&v| fmt_e(v)))
            .chain(std::iter::once(r.flagged.to_string()));
        row(&mut out, cells);
    }
    out
}

pub fn infinity_limit_csv(rows: &[InfinityLimitRow], meta: &Meta) -> String {
    let mut out = String::new();
    meta.write_into(&mut out);
    out.push_str("q,max_sup_after_transient,sup_at_end,scheme,switched_to_imex,dt\n");
    for r in rows {
        row(
            &mut out,
            [
                fmt_e(r.q),
                fmt_e(r.max_sup_after_transient),
                fmt_e(r.sup_at_end),
                r.scheme.as_str().into(),
                r.switched_to_imex.to_string(),
                fmt_e(r.dt),
            ],
        );
    }
    out
}

/// Row-major dense matrix dump.
pub fn matrix_csv(m: &DMatrix<f64>, meta: &Meta) -> String {
    let mut out = String::new();
    meta.clone().with("rows", m.nrows()).with("cols", m.ncols()).write_into(&mut out);
    for i in 0..m.nrows() {
        row(&mut out, m.row(i).iter().map(|&v| fmt_e(v)));
    }
    out
}
