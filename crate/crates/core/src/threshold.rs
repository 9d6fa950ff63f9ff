//! Critical advection rate: bisection on the sign of the persistence
//! indicator, grid-refinement diagnostics, a stationary-norm cross-check and
//! the small/large-flow limit studies.

use log::{debug, info};
use rayon::prelude::*;

use crate::discretize::{assemble, build_grid, DiscretizeError, Grid};
use crate::eigen::{q_threshold_bounds, EigenError, Outlook, PersistenceProblem};
use crate::evolve::{evolve_from, step_limits, EvolveError, EvolveOptions, Scheme};
use crate::model::{BoundaryRegime, Scenario};
use crate::stationary::{Classification, Start, StationaryError, StationaryProblem};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ThresholdError {
    #[error("no threshold in range [{lo}, {hi}] after expansion")]
    NoThreshold { lo: f64, hi: f64 },
    #[error("invalid search interval [{lo}, {hi}] or tolerance {tol}")]
    BadInterval { lo: f64, hi: f64, tol: f64 },
    #[error("invalid q list: {0}")]
    BadList(String),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Stationary(#[from] StationaryError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub q: f64,
    pub indicator: f64,
    pub outlook: Outlook,
    pub n_cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridLevel {
    pub n_cells: usize,
    pub bracket: (f64, f64),
}

impl GridLevel {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.bracket.0 + self.bracket.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    /// `indicator(lo) < 0 <= indicator(hi)` on the finest grid.
    pub bracket: (f64, f64),
    pub probes: Vec<Probe>,
    /// `((h̲ - d)/μ*, q*)` when the Dirichlet hypotheses hold.
    pub analytic_bounds: Option<(f64, f64)>,
    pub grid_levels: Vec<GridLevel>,
    /// `2 m(2n) - m(n)` from the two finest levels' midpoints.
    pub richardson: Option<f64>,
    pub tol: f64,
}

impl ThresholdReport {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.bracket.0 + self.bracket.1)
    }

    pub fn width(&self) -> f64 {
        self.bracket.1 - self.bracket.0
    }

    /// Brackets of consecutive grid levels intersect.
    pub fn levels_overlap(&self) -> bool {
        self.grid_levels
            .windows(2)
            .all(|w| w[0].bracket.0 <= w[1].bracket.1 && w[1].bracket.0 <= w[0].bracket.1)
    }
}

const MAX_EXPANSIONS: usize = 10;

fn analytic_bounds(scenario: &Scenario) -> Option<(f64, f64)> {
    if scenario.regime != BoundaryRegime::DirichletNonlocal {
        return None;
    }
    q_threshold_bounds(scenario).ok()
}

/// Bisection on one grid. Returns the bracket and appends every probe.
fn bisect_on(
    problem: &PersistenceProblem,
    n_cells: usize,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    probes: &mut Vec<Probe>,
) -> Result<(f64, f64), ThresholdError> {
    let probe = |q: f64, probes: &mut Vec<Probe>| -> Result<f64, ThresholdError> {
        let ind = problem.indicator(q)?;
        debug!("probe n = {n_cells}, q = {q}: indicator {:e}", ind.value);
        probes.push(Probe { q, indicator: ind.value, outlook: ind.outlook(), n_cells });
        Ok(ind.value)
    };
    let (lo0, hi0) = (lo, hi);
    let mut expansions = 0;
    while probe(lo, probes)? >= 0.0 {
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(ThresholdError::NoThreshold { lo, hi: hi0 });
        }
        hi = hi.min(lo);
        lo *= 0.5;
    }
    expansions = 0;
    while probe(hi, probes)? < 0.0 {
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(ThresholdError::NoThreshold { lo: lo0, hi });
        }
        lo = lo.max(hi);
        hi *= 2.0;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if probe(mid, probes)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

fn check_interval(lo: f64, hi: f64, tol: f64) -> Result<(), ThresholdError> {
    if lo > 0.0 && hi > lo && tol > 0.0 && hi.is_finite() {
        Ok(())
    } else {
        Err(ThresholdError::BadInterval { lo, hi, tol })
    }
}

/// Bisection for the indicator's sign change on a single grid.
pub fn find_threshold(scenario: &Scenario, grid: &Grid, q_lo: f64, q_hi: f64, tol: f64) -> Result<ThresholdReport, ThresholdError> {
    check_interval(q_lo, q_hi, tol)?;
    let problem = PersistenceProblem::new(scenario, grid)?;
    let mut probes = Vec::new();
    let bracket = bisect_on(&problem, grid.n_cells(), q_lo, q_hi, tol, &mut probes)?;
    Ok(ThresholdReport {
        bracket,
        probes,
        analytic_bounds: analytic_bounds(scenario),
        grid_levels: vec![GridLevel { n_cells: grid.n_cells(), bracket }],
        richardson: None,
        tol,
    })
}

/// Bisection on `n_cells` and `2 n_cells`, reporting both brackets and the
/// Richardson midpoint. The fine level starts from the coarse bracket widened
/// by a few tolerances.
pub fn find_threshold_two_level(
    scenario: &Scenario,
    n_cells: usize,
    q_lo: f64,
    q_hi: f64,
    tol: f64,
) -> Result<ThresholdReport, ThresholdError> {
    check_interval(q_lo, q_hi, tol)?;
    let mut probes = Vec::new();
    let mut levels = Vec::new();
    let (mut lo, mut hi) = (q_lo, q_hi);
    for n in [n_cells, 2 * n_cells] {
        let grid = build_grid(scenario.domain, n)?;
        let problem = PersistenceProblem::new(scenario, &grid)?;
        let bracket = bisect_on(&problem, n, lo, hi, tol, &mut probes)?;
        info!("threshold bracket at n = {n}: [{:.6}, {:.6}]", bracket.0, bracket.1);
        levels.push(GridLevel { n_cells: n, bracket });
        lo = (bracket.0 - 4.0 * tol).max(0.5 * bracket.0);
        hi = bracket.1 + 4.0 * tol;
    }
    let richardson = Some(2.0 * levels[1].midpoint() - levels[0].midpoint());
    Ok(ThresholdReport {
        bracket: levels[1].bracket,
        probes,
        analytic_bounds: analytic_bounds(scenario),
        grid_levels: levels,
        richardson,
        tol,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub q: f64,
    pub indicator: f64,
    pub sup_norm: f64,
    pub classification: Classification,
    pub residual: f64,
}

/// Indicator and stationary sup-norm (monotone iteration from above) at each
/// `q`, in parallel.
pub fn stationary_sweep(scenario: &Scenario, grid: &Grid, qs: &[f64]) -> Result<Vec<SweepRow>, ThresholdError> {
    let base = assemble(scenario, grid)?;
    let zero_order = grid.sample(|x| scenario.reaction.h(x, 0.0));
    qs.par_iter()
        .map(|&q| {
            let problem = PersistenceProblem::from_operator(base.with_q(q), zero_order.clone());
            let indicator = problem.indicator(q)?.value;
            let s = scenario.with_q(q);
            let stat = StationaryProblem::with_operator(&s, grid, base.with_q(q))?.monotone_iterate(Start::Upper)?;
            Ok(SweepRow { q, indicator, sup_norm: stat.sup_norm(), classification: stat.classification, residual: stat.residual })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroLimitRow {
    pub q: f64,
    /// `‖U_q - U_0‖∞` between steady states.
    pub stationary: f64,
    /// `‖u_q(t) - u_0(t)‖∞` at each requested time.
    pub at_times: Vec<f64>,
    /// The stationary solve for this `q` failed; its deviation is NaN.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroLimitTable {
    pub times: Vec<f64>,
    pub dt: f64,
    pub rows: Vec<ZeroLimitRow>,
}

impl ZeroLimitTable {
    pub fn stationary_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].stationary < w[0].stationary)
    }

    pub fn time_decreasing(&self, k: usize) -> bool {
        self.rows.windows(2).all(|w| w[1].at_times[k] < w[0].at_times[k])
    }
}

pub const ZERO_LIMIT_TIMES: [f64; 2] = [1.0, 4.0];

/// Deviations of the flow-`q` problem from the `q = 0` problem (node `l1`
/// still pinned), for steady states and at fixed times. All runs share one
/// explicit step, fixed by the largest `q`.
pub fn limit_study_q_to_zero(scenario: &Scenario, grid: &Grid, q_list: &[f64]) -> Result<ZeroLimitTable, ThresholdError> {
    if q_list.is_empty() || q_list.iter().any(|&q| !(q > 0.0 && q.is_finite())) {
        return Err(ThresholdError::BadList(format!("{q_list:?}")));
    }
    if q_list.windows(2).any(|w| w[1] > w[0]) {
        return Err(ThresholdError::BadList("q list must be nonincreasing".into()));
    }
    let base = assemble(scenario, grid)?;
    let u0 = grid.sample(|x| scenario.u0_at(x));
    let ceiling = u0.max().max(scenario.reaction.n_bound());
    let q_max = q_list[0];
    let dt = step_limits(&base.with_q(q_max), &scenario.reaction, grid, ceiling).explicit_default;
    let times = ZERO_LIMIT_TIMES.to_vec();
    let t_end = times[times.len() - 1];
    let run = |q: f64| -> Result<(Option<nalgebra::DVector<f64>>, Vec<nalgebra::DVector<f64>>), ThresholdError> {
        let s = scenario.with_q(q);
        let op = base.with_q(q);
        let opts = EvolveOptions { stop_on_extinct: false, ..EvolveOptions::until(t_end).recording(1.0).dt(dt) };
        let traj = evolve_from(&op, &s.reaction, grid, u0.clone(), &opts)?;
        let at: Vec<_> = times.iter().map(|&t| traj.profile_near(t).1.clone()).collect();
        let stat = StationaryProblem::with_operator(&s, grid, op)
            .and_then(|p| p.monotone_iterate(Start::Upper))
            .map(|r| r.profile)
            .ok();
        Ok((stat, at))
    };
    let mut all: Vec<f64> = vec![0.0];
    all.extend_from_slice(q_list);
    let results = all.par_iter().map(|&q| run(q)).collect::<Result<Vec<_>, _>>()?;
    let (ref_stat, ref_at) = &results[0];
    let ref_stat = ref_stat.as_ref().ok_or(ThresholdError::BadList("q = 0 reference failed".into()))?;
    let rows = q_list
        .iter()
        .zip(&results[1..])
        .map(|(&q, (stat, at))| ZeroLimitRow {
            q,
            stationary: stat.as_ref().map_or(f64::NAN, |u| (u - ref_stat).amax()),
            at_times: at.iter().zip(ref_at).map(|(a, r)| (a - r).amax()).collect(),
            flagged: stat.is_none(),
        })
        .collect();
    Ok(ZeroLimitTable { times, dt, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfinityLimitRow {
    pub q: f64,
    /// `max_{t >= 0.5} ‖u_q(t)‖∞` over recorded times.
    pub max_sup_after_transient: f64,
    pub sup_at_end: f64,
    pub scheme: Scheme,
    pub switched_to_imex: bool,
    pub dt: f64,
}

pub const TRANSIENT_WINDOW: f64 = 0.5;

/// Sup-norms of trajectories for increasing `q` up to `t_end`.
pub fn limit_study_q_to_infinity(
    scenario: &Scenario,
    grid: &Grid,
    q_list: &[f64],
    t_end: f64,
) -> Result<Vec<InfinityLimitRow>, ThresholdError> {
    if q_list.is_empty() || q_list.iter().any(|&q| !(q > 0.0 && q.is_finite())) {
        return Err(ThresholdError::BadList(format!("{q_list:?}")));
    }
    if q_list.windows(2).any(|w| w[1] < w[0]) {
        return Err(ThresholdError::BadList("q list must be nondecreasing".into()));
    }
    let base = assemble(scenario, grid)?;
    let u0 = grid.sample(|x| scenario.u0_at(x));
    q_list
        .par_iter()
        .map(|&q| {
            let op = base.with_q(q);
            let opts = EvolveOptions {
                auto_imex: true,
                stop_on_extinct: false,
                ..EvolveOptions::until(t_end).recording(0.05_f64.min(t_end))
            };
            let traj = evolve_from(&op, &scenario.reaction, grid, u0.clone(), &opts)?;
            let late = traj
                .times
                .iter()
                .zip(&traj.sup_norms)
                .filter(|(t, _)| **t >= TRANSIENT_WINDOW - 1e-12)
                .map(|(_, s)| *s)
                .fold(0.0, f64::max);
            Ok(InfinityLimitRow {
                q,
                max_sup_after_transient: late,
                sup_at_end: traj.final_sup_norm(),
                scheme: traj.scheme,
                switched_to_imex: traj.switched_to_imex,
                dt: traj.dt,
            })
        })
        .collect()
}

pub fn sup_norms_decreasing(rows: &[InfinityLimitRow]) -> bool {
    rows.windows(2).all(|w| w[1].max_sup_after_transient < w[0].max_sup_after_transient)
}
