//! Steady states: monotone iteration from a lower or an upper solution, and
//! classification by long-time integration.
//!
//! Each sweep solves `(K I - L) u⁽ᵐ⁾ = K u⁽ᵐ⁻¹⁾ + f(x, u⁽ᵐ⁻¹⁾)` where `L` is the
//! linear part of the discrete operator and `K` dominates the Lipschitz
//! constant of `f`. `K I - L` is an M-matrix and the right-hand side is
//! nondecreasing in `u`, so iterates started from a lower (upper) solution
//! increase (decrease) monotonically.

use log::debug;
use nalgebra::{DVector, Dyn};

use crate::discretize::{assemble, DiscreteOperator, DiscretizeError, Grid};
use crate::eigen::{principal_eigenpair_of, EigenError, EigenOptions, PersistenceProblem};
use crate::evolve::{evolve_from, EvolveError, EvolveOptions, Scheme};
use crate::model::{ReactionSpec, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    MonotoneFromLower,
    MonotoneFromUpper,
    LongTime,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::MonotoneFromLower => "monotone_lower",
            Method::MonotoneFromUpper => "monotone_upper",
            Method::LongTime => "long_time",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Nontrivial,
    Trivial,
    /// Long-time run neither settled nor died out.
    Undecided,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Nontrivial => "nontrivial",
            Classification::Trivial => "trivial",
            Classification::Undecided => "undecided",
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum StationaryError {
    #[error("iteration matrix K I - L is singular even after raising K")]
    Singular,
    #[error("iterates stopped being monotone at sweep {iteration} (excess {excess:e}); K too small")]
    NonMonotone { iteration: usize, excess: f64 },
    #[error("monotone iteration did not converge in {iterations} sweeps (last change {change:e})")]
    NotConverged { iterations: usize, change: f64 },
    #[error("reaction has no finite saturation level; an upper start is unavailable")]
    Unbounded,
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryResult {
    pub profile: DVector<f64>,
    pub method: Method,
    /// `‖L U + f(x, U)‖∞` over the unpinned nodes.
    pub residual: f64,
    /// `max(1, ‖L‖∞) · max(1, ‖U‖∞)`, the scale the residual is judged against.
    pub residual_scale: f64,
    pub classification: Classification,
    pub iterations: usize,
}

impl StationaryResult {
    pub fn sup_norm(&self) -> f64 {
        self.profile.amax()
    }
}

pub const TRIVIAL_LEVEL: f64 = 1e-6;
const STEP_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 200_000;
const DELTA_HALVINGS: usize = 60;
const ORDER_TOL: f64 = 1e-12;

/// Residual of the stationary equation at the unpinned nodes, with its scale.
pub fn stationary_residual(op: &DiscreteOperator, reaction: &ReactionSpec, grid: &Grid, u: &DVector<f64>) -> (f64, f64) {
    let lu = op.apply(u);
    let pinned = op.pinned_node();
    let r = (0..u.len())
        .filter(|&i| i != pinned)
        .map(|i| (lu[i] + reaction.f(grid.nodes()[i], u[i])).abs())
        .fold(0.0, f64::max);
    (r, op.linear_norm_inf().max(1.0) * u.amax().max(1.0))
}

fn classify(u: &DVector<f64>) -> Classification {
    if u.amax() < TRIVIAL_LEVEL {
        Classification::Trivial
    } else {
        Classification::Nontrivial
    }
}

struct Monotone<'a> {
    op: &'a DiscreteOperator,
    reaction: &'a ReactionSpec,
    nodes: &'a [f64],
    pinned: usize,
    k: f64,
    lu: nalgebra::linalg::LU<f64, Dyn, Dyn>,
}

impl<'a> Monotone<'a> {
    fn new(op: &'a DiscreteOperator, reaction: &'a ReactionSpec, grid: &'a Grid, ceiling: f64) -> Result<Self, StationaryError> {
        let lip = reaction.lipschitz(&grid.domain(), ceiling);
        let pinned = op.pinned_node();
        let linear = op.linear_part();
        let factor = |k: f64| {
            let mut m = -&linear;
            for i in 0..m.nrows() {
                m[(i, i)] += k;
            }
            m.row_mut(pinned).fill(0.0);
            m[(pinned, pinned)] = 1.0;
            m.lu()
        };
        let mut k = 1.1 * lip.max(1e-3);
        let mut lu = factor(k);
        if !lu.is_invertible() {
            k *= 2.0;
            lu = factor(k);
            if !lu.is_invertible() {
                return Err(StationaryError::Singular);
            }
        }
        Ok(Self { op, reaction, nodes: grid.nodes(), pinned, k, lu })
    }

    fn sweep(&self, u: &DVector<f64>) -> Result<DVector<f64>, StationaryError> {
        let mut rhs = DVector::from_iterator(u.len(), u.iter().enumerate().map(|(i, &v)| self.k * v + self.reaction.f(self.nodes[i], v)));
        rhs[self.pinned] = 0.0;
        let mut u = self.lu.solve(&rhs).ok_or(StationaryError::Singular)?;
        // partial pivoting can leave roundoff in the identity row
        u[self.pinned] = 0.0;
        Ok(u)
    }

    /// Largest defect of `L v + f(v) >= 0` over unpinned nodes (positive = violated).
    fn lower_defect(&self, v: &DVector<f64>) -> f64 {
        let lv = self.op.apply(v);
        (0..v.len())
            .filter(|&i| i != self.pinned)
            .map(|i| -(lv[i] + self.reaction.f(self.nodes[i], v[i])))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Stationary-problem context shared by the monotone solvers.
pub struct StationaryProblem<'a> {
    scenario: &'a Scenario,
    grid: &'a Grid,
    op: DiscreteOperator,
    ceiling: f64,
}

impl<'a> StationaryProblem<'a> {
    pub fn new(scenario: &'a Scenario, grid: &'a Grid) -> Result<Self, StationaryError> {
        let op = assemble(scenario, grid)?;
        Self::with_operator(scenario, grid, op)
    }

    /// `op` must have been assembled from `scenario` on `grid`.
    pub fn with_operator(scenario: &'a Scenario, grid: &'a Grid, op: DiscreteOperator) -> Result<Self, StationaryError> {
        let n_bound = scenario.reaction.n_bound();
        if !n_bound.is_finite() {
            return Err(StationaryError::Unbounded);
        }
        let u0_max = grid.nodes().iter().map(|&x| scenario.u0_at(x)).fold(0.0, f64::max);
        Ok(Self { scenario, grid, op, ceiling: u0_max.max(n_bound) })
    }

    pub fn operator(&self) -> &DiscreteOperator {
        &self.op
    }

    /// Constant `max(max u0, N)` with the pinned node set to zero.
    pub fn upper_start(&self) -> DVector<f64> {
        let mut u = DVector::from_element(self.grid.len(), self.ceiling);
        u[self.op.pinned_node()] = 0.0;
        u
    }

    /// `δ φ` with `φ` the principal eigenfunction, `δ` halved from
    /// `0.1 N / max φ` until it is a discrete lower solution. `None` when no
    /// admissible `δ` is found.
    pub fn lower_start(&self) -> Result<Option<DVector<f64>>, StationaryError> {
        let solver = Monotone::new(&self.op, &self.scenario.reaction, self.grid, self.ceiling)?;
        self.lower_start_with(&solver)
    }

    fn lower_start_with(&self, solver: &Monotone) -> Result<Option<DVector<f64>>, StationaryError> {
        let zero_order = self.grid.sample(|x| self.scenario.reaction.h(x, 0.0));
        let problem = PersistenceProblem::from_operator(self.op.clone(), zero_order);
        let mut lin = problem.linearization(self.op.q())?;
        if lin.boundary.is_none() {
            let p = self.op.pinned_node();
            lin.matrix.row_mut(p).fill(0.0);
            lin.matrix[(p, p)] = 1.0;
            lin.boundary = Some(p);
        }
        let eig = principal_eigenpair_of(&lin, &EigenOptions::default())?;
        if eig.lambda_p >= 0.0 {
            return Ok(None);
        }
        let phi = eig.phi;
        let mut delta = 0.1 * self.scenario.reaction.n_bound() / phi.max();
        for _ in 0..DELTA_HALVINGS {
            let v = &phi * delta;
            if solver.lower_defect(&v) <= 1e-12 {
                return Ok(Some(v));
            }
            delta *= 0.5;
        }
        Ok(None)
    }

    fn finish(&self, u: DVector<f64>, method: Method, iterations: usize) -> StationaryResult {
        let (residual, residual_scale) = stationary_residual(&self.op, &self.scenario.reaction, self.grid, &u);
        StationaryResult { classification: classify(&u), profile: u, method, residual, residual_scale, iterations }
    }

    pub fn monotone_iterate(&self, start: Start) -> Result<StationaryResult, StationaryError> {
        let solver = Monotone::new(&self.op, &self.scenario.reaction, self.grid, self.ceiling)?;
        let (mut u, sign, method) = match start {
            Start::Upper => (self.upper_start(), -1.0, Method::MonotoneFromUpper),
            Start::Lower => match self.lower_start_with(&solver)? {
                Some(v) => (v, 1.0, Method::MonotoneFromLower),
                None => return Ok(self.finish(DVector::zeros(self.grid.len()), Method::MonotoneFromLower, 0)),
            },
        };
        let mut change = f64::INFINITY;
        for m in 1..=MAX_SWEEPS {
            let next = solver.sweep(&u)?;
            // sign * (next - u) must stay nonnegative
            let excess = (&next - &u).iter().map(|d| -sign * d).fold(0.0, f64::max);
            if excess > ORDER_TOL * u.amax().max(1.0) {
                return Err(StationaryError::NonMonotone { iteration: m, excess });
            }
            change = (&next - &u).amax();
            u = next;
            if change < STEP_TOL {
                debug!("monotone {:?}: {m} sweeps, K = {}", start, solver.k);
                return Ok(self.finish(u, method, m));
            }
        }
        Err(StationaryError::NotConverged { iterations: MAX_SWEEPS, change })
    }

    /// Runs both monotone sequences in lockstep, checking
    /// `lower⁽ᵐ⁾ <= lower⁽ᵐ⁺¹⁾ <= upper⁽ᵐ⁺¹⁾ <= upper⁽ᵐ⁾` at every sweep.
    pub fn sandwich(&self) -> Result<SandwichReport, StationaryError> {
        let solver = Monotone::new(&self.op, &self.scenario.reaction, self.grid, self.ceiling)?;
        let lower_seeded = self.lower_start_with(&solver)?;
        let from_eigenfunction = lower_seeded.is_some();
        let mut lo = lower_seeded.unwrap_or_else(|| DVector::zeros(self.grid.len()));
        let mut hi = self.upper_start();
        let mut report = SandwichReport {
            lower: None,
            upper: None,
            lower_from_eigenfunction: from_eigenfunction,
            sweeps: 0,
            max_lower_decrease: 0.0,
            max_upper_increase: 0.0,
            max_crossing: (&lo - &hi).max().max(0.0),
        };
        let (mut lo_done, mut hi_done) = (None, None);
        for m in 1..=MAX_SWEEPS {
            let lo_next = if lo_done.is_none() { solver.sweep(&lo)? } else { lo.clone() };
            let hi_next = if hi_done.is_none() { solver.sweep(&hi)? } else { hi.clone() };
            report.max_lower_decrease = report.max_lower_decrease.max((&lo - &lo_next).max());
            report.max_upper_increase = report.max_upper_increase.max((&hi_next - &hi).max());
            report.max_crossing = report.max_crossing.max((&lo_next - &hi_next).max());
            let dl = (&lo_next - &lo).amax();
            let dh = (&hi_next - &hi).amax();
            lo = lo_next;
            hi = hi_next;
            report.sweeps = m;
            if lo_done.is_none() && dl < STEP_TOL {
                lo_done = Some(m);
            }
            if hi_done.is_none() && dh < STEP_TOL {
                hi_done = Some(m);
            }
            if let (Some(ml), Some(mh)) = (lo_done, hi_done) {
                report.lower = Some(self.finish(lo, Method::MonotoneFromLower, ml));
                report.upper = Some(self.finish(hi, Method::MonotoneFromUpper, mh));
                return Ok(report);
            }
        }
        Err(StationaryError::NotConverged { iterations: MAX_SWEEPS, change: (&hi - &lo).amax() })
    }

    /// Integrates (IMEX) until steady or extinct, up to `t_max`.
    pub fn via_longtime(&self, u0: DVector<f64>, t_max: f64) -> Result<StationaryResult, StationaryError> {
        let opts = EvolveOptions {
            stop_on_steady: true,
            stop_on_extinct: true,
            scheme: Scheme::Imex,
            ..EvolveOptions::until(t_max)
        };
        let traj = evolve_from(&self.op, &self.scenario.reaction, self.grid, u0, &opts)?;
        let u = traj.final_profile().clone();
        let mut result = self.finish(u, Method::LongTime, traj.steps);
        if !traj.converged_to_steady && !traj.extinct {
            result.classification = Classification::Undecided;
        } else if traj.extinct {
            result.classification = Classification::Trivial;
        }
        Ok(result)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub lower: Option<StationaryResult>,
    pub upper: Option<StationaryResult>,
    /// The lower sequence started from a scaled eigenfunction rather than zero.
    pub lower_from_eigenfunction: bool,
    pub sweeps: usize,
    /// Largest pointwise decrease seen in the lower sequence.
    pub max_lower_decrease: f64,
    /// Largest pointwise increase seen in the upper sequence.
    pub max_upper_increase: f64,
    /// Largest `lower - upper` seen at any sweep.
    pub max_crossing: f64,
}

impl SandwichReport {
    pub fn monotone_within(&self, tol: f64) -> bool {
        self.max_lower_decrease <= tol && self.max_upper_increase <= tol && self.max_crossing <= tol
    }

    pub fn gap(&self) -> f64 {
        match (&self.lower, &self.upper) {
            (Some(l), Some(u)) => (&u.profile - &l.profile).amax(),
            _ => f64::INFINITY,
        }
    }
}

pub fn monotone_iterate(scenario: &Scenario, grid: &Grid, start: Start) -> Result<StationaryResult, StationaryError> {
    StationaryProblem::new(scenario, grid)?.monotone_iterate(start)
}

pub const LONGTIME_T_MAX: f64 = 1e4;

pub fn stationary_via_longtime(scenario: &Scenario, grid: &Grid) -> Result<StationaryResult, StationaryError> {
    let problem = StationaryProblem::new(scenario, grid)?;
    let u0 = grid.sample(|x| scenario.u0_at(x));
    problem.via_longtime(u0, LONGTIME_T_MAX)
}

/// `‖u - v‖∞` between two profiles on one grid.
pub fn profile_distance(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    (u - v).amax()
}
