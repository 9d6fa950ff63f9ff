//! Problem definition: river interval, dispersal kernel, reaction, boundary
//! regime and initial density, plus well-formedness checks.

mod kernel;
mod reaction;

use std::fmt;
use std::sync::Arc;

pub use kernel::{KernelError, KernelSpec, TabulatedKernel};
pub use reaction::{GrowthLaw, ReactionSpec};

use crate::numerics::extrema;

/// River reach `(l1, l2)`; water flows from `l1` towards `l2` when `q > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainInterval {
    pub l1: f64,
    pub l2: f64,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
#[error("invalid domain ({l1}, {l2}): need finite l1 < l2")]
pub struct DomainError {
    pub l1: f64,
    pub l2: f64,
}

impl DomainInterval {
    pub fn new(l1: f64, l2: f64) -> Result<Self, DomainError> {
        let d = Self { l1, l2 };
        if d.is_valid() {
            Ok(d)
        } else {
            Err(DomainError { l1, l2 })
        }
    }

    pub fn is_valid(&self) -> bool {
        self.l1.is_finite() && self.l2.is_finite() && self.l1 < self.l2
    }

    pub fn length(&self) -> f64 {
        self.l2 - self.l1
    }
}

/// How individuals interact with the boundary of the reach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryRegime {
    /// `d ∫Ω J(x-y)[u(y) - u(x)] dy`: nobody leaves through jumps.
    NeumannNonlocal,
    /// `d [∫Ω J(x-y) u(y) dy - u(x)]`: jumps out of the reach are lethal.
    DirichletNonlocal,
}

impl fmt::Display for BoundaryRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryRegime::NeumannNonlocal => "neumann",
            BoundaryRegime::DirichletNonlocal => "dirichlet",
        })
    }
}

type ProfileFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Initial density `u0`.
#[derive(Clone)]
pub enum InitialDatum {
    /// `amplitude · sin(π (x - l1) / (l2 - l1))`.
    Sine { amplitude: f64 },
    /// Polynomial in `s = x - l1` with coefficients in increasing degree.
    Polynomial(Vec<f64>),
    /// Piecewise-linear interpolation of samples.
    Samples { xs: Vec<f64>, values: Vec<f64> },
    Custom(Arc<ProfileFn>),
}

impl fmt::Debug for InitialDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialDatum::Sine { amplitude } => f.debug_struct("Sine").field("amplitude", amplitude).finish(),
            InitialDatum::Polynomial(c) => f.debug_tuple("Polynomial").field(c).finish(),
            InitialDatum::Samples { xs, .. } => write!(f, "Samples({} points)", xs.len()),
            InitialDatum::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl InitialDatum {
    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(u0: F) -> Self {
        InitialDatum::Custom(Arc::new(u0))
    }

    pub fn eval(&self, domain: &DomainInterval, x: f64) -> f64 {
        match self {
            InitialDatum::Sine { amplitude } => {
                amplitude * (std::f64::consts::PI * (x - domain.l1) / domain.length()).sin()
            }
            InitialDatum::Polynomial(c) => {
                let s = x - domain.l1;
                c.iter().rev().fold(0.0, |acc, a| acc * s + a)
            }
            InitialDatum::Samples { xs, values } => interpolate(xs, values, x),
            InitialDatum::Custom(g) => g(x),
        }
    }
}

fn interpolate(xs: &[f64], values: &[f64], x: f64) -> f64 {
    let n = xs.len().min(values.len());
    match n {
        0 => 0.0,
        1 => values[0],
        _ => {
            if x <= xs[0] {
                return values[0];
            }
            if x >= xs[n - 1] {
                return values[n - 1];
            }
            let k = xs[..n].partition_point(|&s| s <= x).clamp(1, n - 1);
            let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
            values[k - 1] * (1.0 - t) + values[k] * t
        }
    }
}

/// A complete problem instance.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub domain: DomainInterval,
    pub kernel: KernelSpec,
    /// Dispersal rate.
    pub d: f64,
    /// Advection rate (flow speed).
    pub q: f64,
    pub reaction: ReactionSpec,
    pub regime: BoundaryRegime,
    pub u0: InitialDatum,
}

impl Scenario {
    /// Ω = (0, 5), d = 0.26, standard Gaussian kernel,
    /// f = (5/2 - x²/16 - u) u, u0 = sin(πx/5).
    pub fn river_example(q: f64, regime: BoundaryRegime) -> Self {
        let domain = DomainInterval { l1: 0.0, l2: 5.0 };
        Scenario {
            domain,
            kernel: KernelSpec::standard_gaussian(),
            d: 0.26,
            q,
            reaction: ReactionSpec::new(GrowthLaw::kpp_quadratic([2.5, 0.0, -1.0 / 16.0], 1.0), &domain),
            regime,
            u0: InitialDatum::Sine { amplitude: 1.0 },
        }
    }

    pub fn with_q(&self, q: f64) -> Self {
        Self { q, ..self.clone() }
    }

    pub fn u0_at(&self, x: f64) -> f64 {
        self.u0.eval(&self.domain, x)
    }

    /// `max(max u0, N)`, the a-priori bound on every solution.
    pub fn density_ceiling(&self, samples: usize) -> f64 {
        let max_u0 = (0..=samples)
            .map(|i| self.u0_at(self.domain.l1 + self.domain.length() * i as f64 / samples as f64))
            .fold(f64::NEG_INFINITY, f64::max);
        max_u0.max(self.reaction.n_bound())
    }
}

/// Machine-readable reasons a scenario is ill-formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationCode {
    DomainInvalid,
    KernelParameter,
    KernelNegative,
    KernelZeroAtOrigin,
    KernelMass,
    KernelAsymmetric,
    DiffusionNotPositive,
    AdvectionInvalid,
    ReactionNotMonotone,
    ReactionNotSaturating,
    InitialNonzeroAtInflow,
    InitialNegative,
    InitialIdenticallyZero,
    InitialNotFinite,
}

impl ViolationCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationCode::DomainInvalid => "domain_invalid",
            ViolationCode::KernelParameter => "kernel_parameter",
            ViolationCode::KernelNegative => "kernel_negative",
            ViolationCode::KernelZeroAtOrigin => "kernel_zero_at_origin",
            ViolationCode::KernelMass => "kernel_mass_not_one",
            ViolationCode::KernelAsymmetric => "kernel_asymmetric",
            ViolationCode::DiffusionNotPositive => "diffusion_not_positive",
            ViolationCode::AdvectionInvalid => "advection_invalid",
            ViolationCode::ReactionNotMonotone => "reaction_not_monotone",
            ViolationCode::ReactionNotSaturating => "reaction_not_saturating",
            ViolationCode::InitialNonzeroAtInflow => "u0_nonzero_at_l1",
            ViolationCode::InitialNegative => "u0_negative",
            ViolationCode::InitialIdenticallyZero => "u0_identically_zero",
            ViolationCode::InitialNotFinite => "u0_not_finite",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub code: ViolationCode,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ViolationCode, detail: impl Into<String>) {
        self.violations.push(Violation { code, detail: detail.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for v in &self.violations {
            writeln!(f, "{}: {}", v.code.as_str(), v.detail)?;
        }
        Ok(())
    }
}

const VALIDATION_SAMPLES: usize = 1000;

/// Lists every violated invariant of `scenario`; never fails.
pub fn validate(scenario: &Scenario) -> ValidationReport {
    let mut report = ValidationReport::default();
    let dom = scenario.domain;
    if !dom.is_valid() {
        report.push(ViolationCode::DomainInvalid, format!("need l1 < l2, got ({}, {})", dom.l1, dom.l2));
        return report;
    }

    validate_kernel(&scenario.kernel, &mut report);

    if !(scenario.d.is_finite() && scenario.d > 0.0) {
        report.push(ViolationCode::DiffusionNotPositive, format!("d = {}", scenario.d));
    }
    if !(scenario.q.is_finite() && scenario.q >= 0.0) {
        report.push(ViolationCode::AdvectionInvalid, format!("q = {} (flow must run from l1 to l2)", scenario.q));
    }

    let reaction = &scenario.reaction;
    if !reaction.n_bound().is_finite() {
        report.push(ViolationCode::ReactionNotSaturating, "h(x, u) stays nonnegative for arbitrarily large u");
    }
    let u_top = if reaction.n_bound().is_finite() { 2.0 * reaction.n_bound().max(1.0) } else { 10.0 };
    'mono: for i in 0..=100 {
        let x = dom.l1 + dom.length() * i as f64 / 100.0;
        let mut prev = reaction.h(x, 0.0);
        for j in 1..=200 {
            let u = u_top * j as f64 / 200.0;
            let cur = reaction.h(x, u);
            if cur > prev + 1e-12 * prev.abs().max(1.0) {
                report.push(ViolationCode::ReactionNotMonotone, format!("h({x}, ·) increases near u = {u}"));
                break 'mono;
            }
            prev = cur;
        }
    }

    let u0: Vec<f64> = (0..=VALIDATION_SAMPLES)
        .map(|i| scenario.u0_at(dom.l1 + dom.length() * i as f64 / VALIDATION_SAMPLES as f64))
        .collect();
    if u0.iter().any(|v| !v.is_finite()) {
        report.push(ViolationCode::InitialNotFinite, "u0 is not finite everywhere");
    } else {
        if u0[0].abs() > 1e-12 {
            report.push(ViolationCode::InitialNonzeroAtInflow, format!("u0(l1) = {}", u0[0]));
        }
        if let Some(min) = u0.iter().copied().reduce(f64::min).filter(|&m| m < -1e-12) {
            report.push(ViolationCode::InitialNegative, format!("min u0 = {min}"));
        }
        if u0.iter().all(|v| v.abs() <= 1e-300) {
            report.push(ViolationCode::InitialIdenticallyZero, "u0 not ≢ 0");
        }
    }
    report
}

fn validate_kernel(kernel: &KernelSpec, report: &mut ValidationReport) {
    if let Err(e) = kernel.check_parameters() {
        report.push(ViolationCode::KernelParameter, e.to_string());
        return;
    }
    if !(kernel.density(0.0) > 0.0) {
        report.push(ViolationCode::KernelZeroAtOrigin, format!("J(0) = {}", kernel.density(0.0)));
    }
    let (a, b) = kernel.effective_support();
    let reach = a.abs().max(b.abs());
    let mut negative = false;
    let mut asymmetric = false;
    for i in 0..=2000 {
        let x = reach * i as f64 / 2000.0;
        let (jp, jm) = (kernel.density(x), kernel.density(-x));
        negative |= jp < 0.0 || jm < 0.0 || !jp.is_finite() || !jm.is_finite();
        asymmetric |= (jp - jm).abs() > 1e-12;
    }
    if negative {
        report.push(ViolationCode::KernelNegative, "J takes negative or non-finite values");
    }
    if asymmetric {
        report.push(ViolationCode::KernelAsymmetric, "J(x) != J(-x)");
    }
    let mass = kernel.mass();
    if (mass - 1.0).abs() > 1e-8 {
        report.push(ViolationCode::KernelMass, format!("kernel mass ≠ 1 (∫J = {mass})"));
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// `(sup h(x,0), inf h(x,0))` over the closed domain.
pub fn h_extrema(reaction: &ReactionSpec, domain: &DomainInterval) -> Result<(f64, f64), ModelError> {
    if !domain.is_valid() {
        return Err(DomainError { l1: domain.l1, l2: domain.l2 }.into());
    }
    let ((_, sup), (_, inf)) = extrema(&|x| reaction.h(x, 0.0), domain.l1, domain.l2, 4001);
    Ok((sup, inf))
}
