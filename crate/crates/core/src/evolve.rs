//! Time integration of the evolution problem, the viscous regularisation and
//! discrete comparison checks.
//!
//! Both schemes keep the update a monotone map for admissible `dt`:
//!
//! * explicit Euler, `u⁺ = u + dt (L u + f(u))`, is monotone while
//!   `dt (|q|/h + d + Lip f) <= 1`;
//! * IMEX, `(I - dt L) u⁺ = u + dt f(u)`, inverts an M-matrix and only needs
//!   `dt · Lip f <= 1`.
//!
//! Monotone updates are what make the discrete solution nonnegative, bounded by
//! `max(max u0, N)` and order preserving.

use log::debug;
use nalgebra::{DMatrix, DVector};

use crate::discretize::{assemble, DiscreteOperator, DiscretizeError, Grid};
use crate::model::{ReactionSpec, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    Imex,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::Imex => "imex",
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error("solution became non-finite after t = {last_valid_time}")]
    NonFinite { last_valid_time: f64 },
    #[error("dt = {dt} exceeds the stability bound {bound} of the {scheme} scheme")]
    StepTooLarge { dt: f64, bound: f64, scheme: &'static str },
    #[error("invalid option: {0}")]
    BadOption(String),
    #[error("regularisation needs epsilon > 0, got {0}")]
    Epsilon(f64),
    #[error("initial profile has {got} entries, grid has {expected}")]
    Length { expected: usize, got: usize },
    #[error("implicit system is singular")]
    Singular,
    #[error("trajectories are not comparable: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub t_end: f64,
    /// `None` selects the default step for the scheme.
    pub dt: Option<f64>,
    /// Recording cadence in time units; `0` records only the endpoints.
    pub record_every: f64,
    pub scheme: Scheme,
    /// Switch an explicit run to IMEX when advection would force a step more
    /// than ten times smaller than the reaction/dispersal step. The switched
    /// run uses ten times the explicit step.
    pub auto_imex: bool,
    pub stop_on_steady: bool,
    pub stop_on_extinct: bool,
    pub steady_tol: f64,
    pub steady_window: usize,
    pub extinct_tol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            dt: None,
            record_every: 0.0,
            scheme: Scheme::Euler,
            auto_imex: false,
            stop_on_steady: false,
            stop_on_extinct: true,
            steady_tol: 1e-8,
            steady_window: 100,
            extinct_tol: 1e-10,
        }
    }
}

impl EvolveOptions {
    pub fn until(t_end: f64) -> Self {
        Self { t_end, ..Self::default() }
    }

    pub fn recording(mut self, every: f64) -> Self {
        self.record_every = every;
        self
    }

    pub fn scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub profiles: Vec<DVector<f64>>,
    pub sup_norms: Vec<f64>,
    /// Relative change `‖Δu‖∞ / (dt ‖u‖∞)` stayed below the steady tolerance
    /// over the final window of steps.
    pub converged_to_steady: bool,
    /// Final sup-norm fell below the extinction tolerance.
    pub extinct: bool,
    pub dt: f64,
    pub scheme: Scheme,
    /// The run was switched from explicit Euler to IMEX automatically.
    pub switched_to_imex: bool,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_profile(&self) -> &DVector<f64> {
        self.profiles.last().expect("trajectory always holds the initial profile")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn final_sup_norm(&self) -> f64 {
        *self.sup_norms.last().unwrap()
    }

    /// Recorded profile whose time is closest to `t`.
    pub fn profile_near(&self, t: f64) -> (f64, &DVector<f64>) {
        let k = (0..self.times.len())
            .min_by(|&a, &b| (self.times[a] - t).abs().total_cmp(&(self.times[b] - t).abs()))
            .unwrap();
        (self.times[k], &self.profiles[k])
    }

    /// Smallest and largest one-sided slope over every recorded profile.
    pub fn slope_range(&self, grid: &Grid) -> (f64, f64) {
        let h = grid.step();
        self.profiles
            .iter()
            .flat_map(|p| (1..p.len()).map(move |i| (p[i] - p[i - 1]) / h))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)))
    }
}

/// Gradient constants `M1 = min(min u0, min u0')`, `M2 = max(max u0, max u0')`
/// of the a-priori slope bound, evaluated on the grid.
pub fn gradient_bounds(scenario: &Scenario, grid: &Grid) -> (f64, f64) {
    let u0: Vec<f64> = grid.nodes().iter().map(|&x| scenario.u0_at(x)).collect();
    let h = grid.step();
    let slopes = (1..u0.len()).map(|i| (u0[i] - u0[i - 1]) / h);
    let vals = u0.iter().copied().chain(slopes);
    vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Linear operator split between the explicit and implicit parts of a step.
struct Stepper<'a> {
    op: &'a DiscreteOperator,
    nodes: Vec<f64>,
    reaction: &'a ReactionSpec,
    pinned: usize,
    explicit_linear: bool,
    /// LU factors of `I - dt · (implicit part)`, pinned row set to the identity.
    implicit: Option<nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl Stepper<'_> {
    fn step(&self, u: &DVector<f64>, dt: f64) -> Result<DVector<f64>, EvolveError> {
        let mut rhs = u.clone();
        if self.explicit_linear {
            rhs.axpy(dt, &self.op.apply(u), 1.0);
        }
        for (i, r) in rhs.iter_mut().enumerate() {
            *r += dt * self.reaction.f(self.nodes[i], u[i]);
        }
        rhs[self.pinned] = 0.0;
        match &self.implicit {
            None => Ok(rhs),
            Some(lu) => {
                let mut u = lu.solve(&rhs).ok_or(EvolveError::Singular)?;
                u[self.pinned] = 0.0;
                Ok(u)
            }
        }
    }
}

fn implicit_factor(
    implicit_part: DMatrix<f64>,
    dt: f64,
    pinned: usize,
) -> Result<nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, EvolveError> {
    let n = implicit_part.nrows();
    let mut m = implicit_part * (-dt);
    for i in 0..n {
        m[(i, i)] += 1.0;
    }
    m.row_mut(pinned).fill(0.0);
    m[(pinned, pinned)] = 1.0;
    let lu = m.lu();
    if !lu.is_invertible() {
        return Err(EvolveError::Singular);
    }
    Ok(lu)
}

/// Second difference with `u(l1) = 0` (pinned row) and a reflecting ghost node
/// at `l2` (zero normal derivative).
fn viscous_matrix(n: usize, h: f64) -> DMatrix<f64> {
    let c = 1.0 / (h * h);
    let mut m = DMatrix::zeros(n, n);
    for i in 1..n - 1 {
        m[(i, i - 1)] = c;
        m[(i, i)] = -2.0 * c;
        m[(i, i + 1)] = c;
    }
    m[(n - 1, n - 2)] = 2.0 * c;
    m[(n - 1, n - 1)] = -2.0 * c;
    m
}

/// Reaction Lipschitz constant and admissible steps for a run.
#[derive(Debug, Clone, Copy)]
pub struct StepLimits {
    pub lipschitz: f64,
    /// Largest monotone explicit step, `1 / (|q|/h + d max m + Lip)`.
    pub explicit_bound: f64,
    /// Largest monotone IMEX step, `1 / Lip`.
    pub imex_bound: f64,
    /// `0.4 min(h/|q|, 1/(2d + Lip))`.
    pub explicit_default: f64,
    /// `0.4 / (2d + Lip)`.
    pub imex_default: f64,
}

pub fn step_limits(op: &DiscreteOperator, reaction: &ReactionSpec, grid: &Grid, ceiling: f64) -> StepLimits {
    let lip = reaction.lipschitz(&grid.domain(), ceiling);
    let q = op.q().abs();
    let h = grid.step();
    let mass = op.mass_term().max();
    let explicit_bound = 1.0 / (q / h + op.d() * mass + lip);
    let imex_bound = if lip > 0.0 { 1.0 / lip } else { f64::INFINITY };
    let reaction_scale = 1.0 / (2.0 * op.d() + lip).max(1e-300);
    let advective = if q > 0.0 { h / q } else { f64::INFINITY };
    StepLimits {
        lipschitz: lip,
        explicit_bound,
        imex_bound,
        explicit_default: 0.4 * advective.min(reaction_scale),
        imex_default: 0.4 * reaction_scale,
    }
}

fn ceiling_of(u0: &DVector<f64>, reaction: &ReactionSpec) -> f64 {
    let m = u0.max().max(0.0);
    if reaction.n_bound().is_finite() {
        m.max(reaction.n_bound())
    } else {
        m
    }
}

/// Integrates `scenario` from its own initial datum.
pub fn evolve(scenario: &Scenario, grid: &Grid, opts: &EvolveOptions) -> Result<Trajectory, EvolveError> {
    let op = assemble(scenario, grid)?;
    let u0 = grid.sample(|x| scenario.u0_at(x));
    evolve_from(&op, &scenario.reaction, grid, u0, opts)
}

/// Integrates from an explicit nodal profile with a pre-assembled operator.
pub fn evolve_from(
    op: &DiscreteOperator,
    reaction: &ReactionSpec,
    grid: &Grid,
    u0: DVector<f64>,
    opts: &EvolveOptions,
) -> Result<Trajectory, EvolveError> {
    run(op, reaction, grid, u0, opts, None)
}

/// Integrates the problem with an added `ε u_xx` term (implicit), `u(l1) = 0`
/// and a zero-flux condition at `l2`.
pub fn evolve_regularized(
    scenario: &Scenario,
    grid: &Grid,
    epsilon: f64,
    opts: &EvolveOptions,
) -> Result<Trajectory, EvolveError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(EvolveError::Epsilon(epsilon));
    }
    let op = assemble(scenario, grid)?;
    let u0 = grid.sample(|x| scenario.u0_at(x));
    run(&op, &scenario.reaction, grid, u0, opts, Some(epsilon))
}

fn run(
    op: &DiscreteOperator,
    reaction: &ReactionSpec,
    grid: &Grid,
    mut u: DVector<f64>,
    opts: &EvolveOptions,
    epsilon: Option<f64>,
) -> Result<Trajectory, EvolveError> {
    let n = grid.len();
    if u.len() != n {
        return Err(EvolveError::Length { expected: n, got: u.len() });
    }
    if !(opts.t_end >= 0.0 && opts.t_end.is_finite()) {
        return Err(EvolveError::BadOption(format!("t_end = {}", opts.t_end)));
    }
    if !(opts.record_every >= 0.0) {
        return Err(EvolveError::BadOption(format!("record_every = {}", opts.record_every)));
    }
    let pinned = op.pinned_node();
    u[pinned] = 0.0;

    let limits = step_limits(op, reaction, grid, ceiling_of(&u, reaction));
    let mut scheme = opts.scheme;
    let mut switched = false;
    if scheme == Scheme::Euler && opts.auto_imex && opts.dt.is_none() && limits.explicit_default * 10.0 < limits.imex_default
    {
        scheme = Scheme::Imex;
        switched = true;
    }
    let (default_dt, bound) = match scheme {
        Scheme::Euler => (limits.explicit_default, limits.explicit_bound),
        // a switched run keeps some resolution of the advective time scale
        Scheme::Imex if switched => (limits.imex_default.min(10.0 * limits.explicit_default), limits.imex_bound),
        Scheme::Imex => (limits.imex_default, limits.imex_bound),
    };
    let target = match opts.dt {
        Some(dt) if !(dt > 0.0 && dt.is_finite()) => return Err(EvolveError::BadOption(format!("dt = {dt}"))),
        Some(dt) if dt > bound => return Err(EvolveError::StepTooLarge { dt, bound, scheme: scheme.as_str() }),
        Some(dt) => dt,
        None => default_dt,
    };

    // align the step with the recording cadence and the end time
    let (dt, record_stride, n_steps) = if opts.t_end == 0.0 {
        (target, 1, 0)
    } else if opts.record_every > 0.0 {
        let stride = (opts.record_every / target).ceil().max(1.0) as usize;
        let dt = opts.record_every / stride as f64;
        let steps = (opts.t_end / dt - 1e-9).ceil().max(1.0) as usize;
        (opts.t_end / steps as f64, stride, steps)
    } else {
        let steps = (opts.t_end / target - 1e-9).ceil().max(1.0) as usize;
        (opts.t_end / steps as f64, usize::MAX, steps)
    };

    let implicit = match (scheme, epsilon) {
        (Scheme::Euler, None) => None,
        (Scheme::Euler, Some(eps)) => Some(implicit_factor(viscous_matrix(n, grid.step()) * eps, dt, pinned)?),
        (Scheme::Imex, None) => Some(implicit_factor(op.linear_part(), dt, pinned)?),
        (Scheme::Imex, Some(eps)) => {
            Some(implicit_factor(op.linear_part() + viscous_matrix(n, grid.step()) * eps, dt, pinned)?)
        }
    };
    let stepper = Stepper {
        op,
        nodes: grid.nodes().to_vec(),
        reaction,
        pinned,
        explicit_linear: scheme == Scheme::Euler,
        implicit,
    };

    let mut traj = Trajectory {
        times: vec![0.0],
        sup_norms: vec![u.amax()],
        profiles: vec![u.clone()],
        converged_to_steady: false,
        extinct: false,
        dt,
        scheme,
        switched_to_imex: switched,
        steps: 0,
    };
    let mut quiet_steps = 0usize;
    let mut last_t = 0.0;
    for k in 1..=n_steps {
        let next = stepper.step(&u, dt)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(EvolveError::NonFinite { last_valid_time: last_t });
        }
        let sup_prev = u.amax();
        let change = (&next - &u).amax() / (dt * sup_prev.max(1e-12));
        u = next;
        let t = if k == n_steps { opts.t_end } else { k as f64 * dt };
        last_t = t;
        traj.steps = k;
        quiet_steps = if change < opts.steady_tol { quiet_steps + 1 } else { 0 };
        let sup = u.amax();
        let steady = quiet_steps >= opts.steady_window;
        let extinct = sup < opts.extinct_tol;
        let stop = (steady && opts.stop_on_steady) || (extinct && opts.stop_on_extinct);
        if k % record_stride == 0 || k == n_steps || stop {
            traj.times.push(t);
            traj.sup_norms.push(sup);
            traj.profiles.push(u.clone());
        }
        if stop {
            break;
        }
    }
    traj.converged_to_steady = quiet_steps >= opts.steady_window;
    traj.extinct = traj.final_sup_norm() < opts.extinct_tol;
    debug!(
        "evolve: q = {}, scheme = {}, dt = {dt:e}, steps = {}, final sup = {:e}",
        op.q(),
        scheme.as_str(),
        traj.steps,
        traj.final_sup_norm()
    );
    Ok(traj)
}

/// Logs whether recorded slopes stay inside `[M1 - 0.1, M2 + 0.1]`. The
/// upwind scheme only approximates the continuum bound, so this never fails.
pub fn log_gradient_check(scenario: &Scenario, grid: &Grid, traj: &Trajectory) -> bool {
    let (m1, m2) = gradient_bounds(scenario, grid);
    let (lo, hi) = traj.slope_range(grid);
    let inside = lo >= m1 - 0.1 && hi <= m2 + 0.1;
    if inside {
        debug!("slopes [{lo:.4}, {hi:.4}] within [{m1:.4}, {m2:.4}]");
    } else {
        log::info!("slopes [{lo:.4}, {hi:.4}] leave the a-priori range [{m1:.4}, {m2:.4}]");
    }
    inside
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderViolation {
    pub time: f64,
    pub node: usize,
    /// How far the lower trajectory exceeds the upper one.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// Initial profiles were ordered (`Some(true)`: `a >= b`, `Some(false)`: `b >= a`).
    pub initial_order: Option<bool>,
    pub first_violation: Option<OrderViolation>,
    pub message: String,
}

impl ComparisonReport {
    pub fn holds(&self) -> bool {
        self.initial_order.is_some() && self.first_violation.is_none()
    }
}

const ORDER_TOL: f64 = 1e-12;

/// Checks that pointwise order of the initial profiles persists at every
/// recorded time.
pub fn comparison_check(a: &Trajectory, b: &Trajectory) -> Result<ComparisonReport, EvolveError> {
    if a.times.len() != b.times.len() {
        return Err(EvolveError::Mismatch(format!("{} vs {} recorded times", a.times.len(), b.times.len())));
    }
    if let Some(k) = (0..a.times.len()).find(|&k| (a.times[k] - b.times[k]).abs() > 1e-12 * a.times[k].abs().max(1.0)) {
        return Err(EvolveError::Mismatch(format!("time {k} differs: {} vs {}", a.times[k], b.times[k])));
    }
    if a.profiles[0].len() != b.profiles[0].len() {
        return Err(EvolveError::Mismatch("grids differ".into()));
    }
    let ordered = |hi: &DVector<f64>, lo: &DVector<f64>| hi.iter().zip(lo.iter()).all(|(h, l)| h + ORDER_TOL >= *l);
    let a_above = if ordered(&a.profiles[0], &b.profiles[0]) {
        true
    } else if ordered(&b.profiles[0], &a.profiles[0]) {
        false
    } else {
        return Ok(ComparisonReport {
            initial_order: None,
            first_violation: None,
            message: "not ordered at t=0".into(),
        });
    };
    let (upper, lower) = if a_above { (a, b) } else { (b, a) };
    for k in 0..a.times.len() {
        let (up, lo) = (&upper.profiles[k], &lower.profiles[k]);
        if let Some((node, excess)) = (0..up.len()).map(|i| (i, lo[i] - up[i])).find(|&(_, e)| e > ORDER_TOL) {
            return Ok(ComparisonReport {
                initial_order: Some(a_above),
                first_violation: Some(OrderViolation { time: a.times[k], node, excess }),
                message: format!("order lost at t = {} node {node}", a.times[k]),
            });
        }
    }
    Ok(ComparisonReport { initial_order: Some(a_above), first_violation: None, message: "order preserved".into() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::build_grid;
    use crate::model::{BoundaryRegime, GrowthLaw, InitialDatum, ReactionSpec};

    fn river(q: f64) -> Scenario {
        Scenario::river_example(q, BoundaryRegime::DirichletNonlocal)
    }

    #[test]
    fn zero_datum_stays_zero() {
        let mut s = river(0.5);
        s.u0 = InitialDatum::Polynomial(vec![0.0]);
        let g = build_grid(s.domain, 50).unwrap();
        let opts = EvolveOptions { stop_on_extinct: false, ..EvolveOptions::until(2.0).recording(0.5) };
        let t = evolve(&s, &g, &opts).unwrap();
        assert!(t.profiles.iter().all(|p| p.iter().all(|&v| v == 0.0)));
        assert_eq!(t.times.len(), 5);
    }

    #[test]
    fn recording_hits_requested_times() {
        let s = river(0.5);
        let g = build_grid(s.domain, 50).unwrap();
        let t = evolve(&s, &g, &EvolveOptions::until(1.2).recording(0.2)).unwrap();
        let expected = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2];
        assert_eq!(t.times.len(), expected.len());
        for (a, b) in t.times.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_unstable_explicit_step() {
        let s = river(0.5);
        let g = build_grid(s.domain, 100).unwrap();
        let err = evolve(&s, &g, &EvolveOptions::until(1.0).dt(0.5)).unwrap_err();
        match err {
            EvolveError::StepTooLarge { bound, .. } => assert!(bound < 0.5 && bound > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn boundary_stays_pinned_and_positive() {
        let s = river(0.5);
        let g = build_grid(s.domain, 100).unwrap();
        for scheme in [Scheme::Euler, Scheme::Imex] {
            let t = evolve(&s, &g, &EvolveOptions::until(3.0).recording(0.5).scheme(scheme)).unwrap();
            let ceiling = 2.5;
            for (p, sup) in t.profiles.iter().zip(&t.sup_norms) {
                assert_eq!(p[0], 0.0);
                assert!(p.iter().all(|&v| v >= -1e-12));
                assert!(*sup <= ceiling + 1e-9);
            }
        }
    }

    #[test]
    fn identical_runs_are_bitwise_equal() {
        let s = river(0.7);
        let g = build_grid(s.domain, 60).unwrap();
        let opts = EvolveOptions::until(2.0).recording(0.25);
        assert_eq!(evolve(&s, &g, &opts).unwrap(), evolve(&s, &g, &opts).unwrap());
    }

    #[test]
    fn epsilon_must_be_positive() {
        let s = river(0.5);
        let g = build_grid(s.domain, 20).unwrap();
        assert_eq!(evolve_regularized(&s, &g, 0.0, &EvolveOptions::until(1.0)).unwrap_err(), EvolveError::Epsilon(0.0));
    }

    #[test]
    fn regularized_constant_without_reaction() {
        let mut s = Scenario::river_example(0.0, BoundaryRegime::NeumannNonlocal);
        s.reaction = ReactionSpec::new(GrowthLaw::Polynomial { x_coeffs: vec![0.0], u_coeffs: vec![] }, &s.domain);
        s.u0 = InitialDatum::Polynomial(vec![0.7]);
        let g = build_grid(s.domain, 100).unwrap();
        let opts = EvolveOptions { stop_on_extinct: false, ..EvolveOptions::until(0.5) }.dt(0.01);
        let t = evolve_regularized(&s, &g, 1e-3, &opts).unwrap();
        let u = t.final_profile();
        assert_eq!(u[0], 0.0);
        // away from the pinned node the profile barely moves
        for (i, &x) in g.nodes().iter().enumerate() {
            if x >= 2.0 {
                assert!((u[i] - 0.7).abs() < 1e-3, "x = {x}: {}", u[i]);
            }
        }
    }

    #[test]
    fn comparison_guards() {
        let s = river(0.5);
        let g = build_grid(s.domain, 40).unwrap();
        let opts = EvolveOptions::until(1.0).recording(0.25);
        let a = evolve(&s, &g, &opts).unwrap();
        let same = comparison_check(&a, &a).unwrap();
        assert!(same.holds());

        let mut crossing = s.clone();
        crossing.u0 = InitialDatum::custom(|x: f64| (x * 5.0 * std::f64::consts::PI / 5.0).sin().abs() * x / 5.0);
        let b = evolve(&crossing, &g, &opts).unwrap();
        let r = comparison_check(&a, &b).unwrap();
        assert_eq!(r.initial_order, None);
        assert_eq!(r.message, "not ordered at t=0");

        let short = evolve(&s, &g, &EvolveOptions::until(1.0).recording(0.5)).unwrap();
        assert!(matches!(comparison_check(&a, &short), Err(EvolveError::Mismatch(_))));
    }

    #[test]
    fn large_flow_switches_to_imex() {
        let s = river(1000.0);
        let g = build_grid(s.domain, 100).unwrap();
        let opts = EvolveOptions { auto_imex: true, ..EvolveOptions::until(1.0) };
        let t = evolve(&s, &g, &opts).unwrap();
        assert!(t.switched_to_imex);
        assert_eq!(t.scheme, Scheme::Imex);
        assert!(t.final_sup_norm() < 1e-6);
    }
}
