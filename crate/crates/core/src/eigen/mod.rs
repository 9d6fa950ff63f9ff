//! Principal eigenpairs of the discretised operator `d ∫Ω J φ - q φ' + a φ`
//! and the persistence indicator built from them.
//!
//! Eigenvalues follow the sign convention `A φ = -λp φ`: `λp` is the negative
//! of the rightmost matrix eigenvalue. For the Metzler matrices produced by
//! [`crate::discretize`] that eigenvalue is real and owns a nonnegative
//! eigenvector (Perron–Frobenius).

mod qstar;

use log::warn;
use nalgebra::{DMatrix, DVector};

pub use qstar::{q_star, q_threshold_bounds, QStarError, QStarResult};

use crate::discretize::{assemble, linearized_operator, DiscreteOperator, DiscretizeError, Grid, LinearizedOperator};
use crate::model::Scenario;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("eigen iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("rightmost eigenvalue {re} + {im}i is not real: operator is not Metzler")]
    ComplexDominant { re: f64, im: f64 },
    #[error("matrix must be square and non-empty, got {0}x{1}")]
    Shape(usize, usize),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    /// Inverse iteration on `σI - A` with `σ` kept just above the rightmost
    /// eigenvalue by Collatz–Wielandt bounds. `(σI - A)^{-1}` is entrywise
    /// positive, so every iterate stays positive.
    ShiftInvert,
    /// Power iteration on `A + sI`, `s = ‖A‖∞ + 1`.
    ShiftedPower,
    /// Full Schur decomposition followed by one inverse-iteration polish.
    Dense,
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    pub method: EigenMethod,
    pub max_iterations: usize,
    /// Successive Rayleigh quotients must agree to this (power iteration).
    pub rayleigh_tol: f64,
    /// Accept when `‖Aφ + λp φ‖∞ <= residual_tol · ‖A‖∞`.
    pub residual_tol: f64,
    /// Switch to [`EigenMethod::Dense`] when the iterative method fails.
    pub dense_fallback: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            method: EigenMethod::ShiftInvert,
            max_iterations: 100_000,
            rayleigh_tol: 1e-12,
            residual_tol: 1e-12,
            dense_fallback: true,
        }
    }
}

impl EigenOptions {
    pub fn shifted_power() -> Self {
        Self { method: EigenMethod::ShiftedPower, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    /// Principal eigenvalue, `A φ = -λp φ`.
    pub lambda_p: f64,
    /// Eigenfunction, nonnegative with `max = 1`.
    pub phi: DVector<f64>,
    pub iterations: usize,
    /// `‖A φ + λp φ‖∞`.
    pub residual: f64,
    pub method: EigenMethod,
}

fn norm_inf(a: &DMatrix<f64>) -> f64 {
    (0..a.nrows()).map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn residual(a: &DMatrix<f64>, lambda_max: f64, x: &DVector<f64>) -> f64 {
    (a * x - x * lambda_max).amax()
}

fn normalize_max(x: &mut DVector<f64>) -> bool {
    let m = x.max();
    if !(m > 0.0) || !m.is_finite() {
        return false;
    }
    *x /= m;
    true
}

fn rayleigh(a: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(a * x)) / x.dot(x)
}

/// Principal eigenpair of a (restricted) operator matrix.
pub fn principal_eigenpair(a: &DMatrix<f64>) -> Result<EigenResult, EigenError> {
    principal_eigenpair_with(a, &EigenOptions::default())
}

pub fn principal_eigenpair_with(a: &DMatrix<f64>, opts: &EigenOptions) -> Result<EigenResult, EigenError> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(EigenError::Shape(a.nrows(), a.ncols()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(EigenError::NonFinite);
    }
    let attempt = match opts.method {
        EigenMethod::ShiftInvert => shift_invert(a, opts),
        EigenMethod::ShiftedPower => shifted_power(a, opts),
        EigenMethod::Dense => return dense(a, opts),
    };
    match attempt {
        Ok(r) => Ok(r),
        Err(e @ EigenError::NotConverged { .. }) if opts.dense_fallback => {
            warn!("{e}; falling back to dense eigensolver");
            dense(a, opts)
        }
        Err(e) => Err(e),
    }
}

fn finish(a: &DMatrix<f64>, mut x: DVector<f64>, iterations: usize, method: EigenMethod) -> EigenResult {
    normalize_max(&mut x);
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    let lambda_max = rayleigh(a, &x);
    EigenResult { lambda_p: -lambda_max, residual: residual(a, lambda_max, &x), phi: x, iterations, method }
}

fn shifted_power(a: &DMatrix<f64>, opts: &EigenOptions) -> Result<EigenResult, EigenError> {
    let n = a.nrows();
    let norm = norm_inf(a);
    let shift = norm + 1.0;
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] += shift;
    }
    let accept = opts.residual_tol * norm.max(f64::MIN_POSITIVE);
    let mut x = DVector::from_element(n, 1.0);
    let mut mu_prev = f64::NAN;
    let mut res = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let mut y = &m * &x;
        if !normalize_max(&mut y) {
            break;
        }
        x = y;
        let mu = rayleigh(&m, &x);
        if (mu - mu_prev).abs() < opts.rayleigh_tol * mu.abs().max(1.0) {
            res = residual(a, mu - shift, &x);
            if res <= accept {
                return Ok(finish(a, x, it, EigenMethod::ShiftedPower));
            }
        }
        mu_prev = mu;
    }
    Err(EigenError::NotConverged { iterations: opts.max_iterations, residual: res })
}

/// Collatz–Wielandt bounds `min_i (Ax)_i/x_i <= λmax <= max_i (Ax)_i/x_i`,
/// valid for positive `x`.
fn cw_bounds(a: &DMatrix<f64>, x: &DVector<f64>) -> (f64, f64) {
    let ax = a * x;
    ax.iter().zip(x.iter()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (num, den)| {
        let r = num / den;
        (lo.min(r), hi.max(r))
    })
}

const MAX_REFACTORIZATIONS: usize = 60;

fn shift_invert(a: &DMatrix<f64>, opts: &EigenOptions) -> Result<EigenResult, EigenError> {
    let n = a.nrows();
    let norm = norm_inf(a).max(f64::MIN_POSITIVE);
    let accept = opts.residual_tol * norm;
    let mut x = DVector::from_element(n, 1.0);
    let mut iterations = 0;
    let (mut lo, mut hi) = cw_bounds(a, &x);
    let mut res = f64::INFINITY;

    for _ in 0..MAX_REFACTORIZATIONS {
        let gap = (hi - lo).max(1e-13 * norm);
        let sigma = hi + 0.5 * gap;
        let mut shifted = -a.clone();
        for i in 0..n {
            shifted[(i, i)] += sigma;
        }
        let lu = shifted.lu();
        let spread_at_factor = hi - lo;
        let mut best = f64::INFINITY;
        let mut stalled = 0;
        loop {
            if iterations >= opts.max_iterations {
                return Err(EigenError::NotConverged { iterations, residual: res });
            }
            iterations += 1;
            let Some(mut y) = lu.solve(&x) else {
                return Err(EigenError::NotConverged { iterations, residual: res });
            };
            if !normalize_max(&mut y) || y.iter().any(|&v| !(v > 0.0)) {
                // lost positivity to rounding; the iterate is no longer a valid
                // Collatz–Wielandt witness
                return Err(EigenError::NotConverged { iterations, residual: res });
            }
            x = y;
            (lo, hi) = cw_bounds(a, &x);
            res = residual(a, rayleigh(a, &x), &x);
            if res <= accept && hi - lo <= 1e-9 * norm {
                return Ok(finish(a, x, iterations, EigenMethod::ShiftInvert));
            }
            if res < 0.5 * best {
                best = res;
                stalled = 0;
            } else {
                stalled += 1;
            }
            if stalled >= 5 && res <= accept {
                return Ok(finish(a, x, iterations, EigenMethod::ShiftInvert));
            }
            // tighten the shift once the bounds have closed in noticeably
            if hi - lo < 0.05 * spread_at_factor || stalled >= 5 {
                break;
            }
        }
    }
    Err(EigenError::NotConverged { iterations, residual: res })
}

fn dense(a: &DMatrix<f64>, opts: &EigenOptions) -> Result<EigenResult, EigenError> {
    let n = a.nrows();
    let eig = a.clone().complex_eigenvalues();
    let tol = 1e-9 * norm_inf(a).max(1.0);
    let rightmost = eig.iter().copied().max_by(|l, r| l.re.total_cmp(&r.re)).unwrap();
    let best_real = eig
        .iter()
        .copied()
        .filter(|z| z.im.abs() <= tol)
        .max_by(|l, r| l.re.total_cmp(&r.re))
        .ok_or(EigenError::ComplexDominant { re: rightmost.re, im: rightmost.im })?;
    if rightmost.re > best_real.re + tol {
        return Err(EigenError::ComplexDominant { re: rightmost.re, im: rightmost.im });
    }
    let lambda_max = best_real.re;
    // inverse iteration just right of the eigenvalue recovers the Perron vector
    let sigma = lambda_max + 1e-8 * lambda_max.abs().max(1.0);
    let mut shifted = -a.clone();
    for i in 0..n {
        shifted[(i, i)] += sigma;
    }
    let lu = shifted.lu();
    let mut x = DVector::from_element(n, 1.0);
    for _ in 0..3 {
        if let Some(mut y) = lu.solve(&x) {
            if normalize_max(&mut y) {
                x = y;
            }
        }
    }
    let _ = opts;
    let mut out = finish(a, x, 0, EigenMethod::Dense);
    // keep the Schur value; the polished vector only supplies φ
    out.lambda_p = -lambda_max;
    out.residual = residual(a, lambda_max, &out.phi);
    Ok(out)
}

/// Principal eigenpair of a linearised operator: solved on the free nodes and
/// extended by `φ = 0` at the inflow node.
pub fn principal_eigenpair_of(lin: &LinearizedOperator, opts: &EigenOptions) -> Result<EigenResult, EigenError> {
    let mut r = principal_eigenpair_with(&lin.restricted(), opts)?;
    r.phi = lin.extend(&r.phi);
    Ok(r)
}

/// Sign of the persistence indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outlook {
    Persistence,
    Extinction,
}

impl Outlook {
    pub fn of(indicator: f64) -> Self {
        if indicator < 0.0 {
            Outlook::Persistence
        } else {
            Outlook::Extinction
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Outlook::Persistence => "persistence",
            Outlook::Extinction => "extinction",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Indicator {
    pub q: f64,
    /// `λp(𝔏 + h(·,0) - d m)` (Neumann) or `λp(𝔏 + h(·,0)) + d` (Dirichlet).
    pub value: f64,
    pub eigen: EigenResult,
    /// Computed at `q = 0`, where the continuum principal eigenpair may not exist.
    pub zero_flow: bool,
}

impl Indicator {
    pub fn outlook(&self) -> Outlook {
        Outlook::of(self.value)
    }
}

/// Assembled quadrature plus `h(x, 0)` samples; evaluates the persistence
/// indicator at any advection rate without reassembling.
#[derive(Debug, Clone)]
pub struct PersistenceProblem {
    op: DiscreteOperator,
    growth_at_zero: DVector<f64>,
    options: EigenOptions,
}

impl PersistenceProblem {
    pub fn new(scenario: &Scenario, grid: &Grid) -> Result<Self, EigenError> {
        let op = assemble(scenario, grid)?;
        let growth_at_zero = grid.sample(|x| scenario.reaction.h(x, 0.0));
        Ok(Self { op, growth_at_zero, options: EigenOptions::default() })
    }

    pub fn from_operator(op: DiscreteOperator, growth_at_zero: DVector<f64>) -> Self {
        Self { op, growth_at_zero, options: EigenOptions::default() }
    }

    pub fn with_options(mut self, options: EigenOptions) -> Self {
        self.options = options;
        self
    }

    pub fn operator(&self) -> &DiscreteOperator {
        &self.op
    }

    /// Zero-order coefficient whose principal eigenvalue is the indicator:
    /// `h(x,0) - d m(x)` (Neumann) or `h(x,0) - d` (Dirichlet).
    pub fn zero_order(&self) -> DVector<f64> {
        &self.growth_at_zero - self.op.mass_term() * self.op.d()
    }

    /// Linearisation of the reaction-dispersal-advection operator at `u = 0`.
    pub fn linearization(&self, q: f64) -> Result<LinearizedOperator, EigenError> {
        Ok(linearized_operator(&self.op.with_q(q), &self.zero_order())?)
    }

    pub fn indicator(&self, q: f64) -> Result<Indicator, EigenError> {
        if q == 0.0 {
            warn!("principal eigenvalue at q = 0 is the discrete Perron value only");
        }
        // λp(𝔏 + h - d) = λp(𝔏 + h) + d, so both regimes reduce to one solve
        let eigen = principal_eigenpair_of(&self.linearization(q)?, &self.options)?;
        Ok(Indicator { q, value: eigen.lambda_p, eigen, zero_flow: q == 0.0 })
    }
}

/// Persistence indicator of `scenario` at advection rate `q`.
pub fn persistence_indicator(scenario: &Scenario, q: f64, grid: &Grid) -> Result<Indicator, EigenError> {
    PersistenceProblem::new(scenario, grid)?.indicator(q)
}

/// Negative means a unique positive steady state exists (persistence).
pub fn lambda_p_of_q(scenario: &Scenario, q: f64, grid: &Grid) -> Result<f64, EigenError> {
    Ok(persistence_indicator(scenario, q, grid)?.value)
}

/// `λp(𝔏_q + a)` for an explicit zero-order term, without regime offsets.
pub fn lambda_p_with(op: &DiscreteOperator, a: &DVector<f64>, q: f64, opts: &EigenOptions) -> Result<EigenResult, EigenError> {
    principal_eigenpair_of(&linearized_operator(&op.with_q(q), a)?, opts)
}
