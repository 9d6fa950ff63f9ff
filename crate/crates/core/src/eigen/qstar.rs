//! Critical speed `q* = inf_{μ>0} (d ∫ℝ J(z) e^{-μz} dz - d + h̄) / μ` and the
//! analytic bracket it gives for the Dirichlet threshold.

use crate::model::{h_extrema, BoundaryRegime, KernelSpec, ModelError, Scenario};
use crate::numerics::golden_min;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum QStarError {
    #[error("need h_bar > 0 and d > 0, got h_bar = {h_bar}, d = {d}")]
    BadInput { h_bar: f64, d: f64 },
    #[error("exponential moment diverges at mu = {mu} before a minimum was bracketed")]
    MomentDivergent { mu: f64 },
    #[error("no interior minimum of the speed function on (0, {cap}]")]
    NoInteriorMinimum { cap: f64 },
    #[error("threshold bounds need the Dirichlet regime")]
    WrongRegime,
    #[error("bracket needs inf h(x,0) > d, got inf h(x,0) = {h_min} <= d = {d}")]
    HypothesisViolated { h_min: f64, d: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone)]
pub struct QStarResult {
    pub q_star: f64,
    pub mu_star: f64,
    pub d: f64,
    pub h_bar: f64,
    kernel: KernelSpec,
}

impl QStarResult {
    /// `∫ℝ J(z) e^{-μz} dz`.
    pub fn moment(&self, mu: f64) -> f64 {
        self.kernel.moment(mu)
    }

    /// `d · moment(μ*) - d + h̄ - μ* q*`, zero at the minimiser.
    pub fn identity_defect(&self) -> f64 {
        self.d * self.moment(self.mu_star) - self.d + self.h_bar - self.mu_star * self.q_star
    }
}

const MU_FLOOR: f64 = 1e-4;
const MU_CAP: f64 = 10.0;
const SCAN_POINTS: usize = 2000;

pub fn q_star(kernel: &KernelSpec, d: f64, h_bar: f64) -> Result<QStarResult, QStarError> {
    if !(h_bar > 0.0 && d > 0.0 && h_bar.is_finite() && d.is_finite()) {
        return Err(QStarError::BadInput { h_bar, d });
    }
    let abscissa = kernel.moment_abscissa();
    let hi = if abscissa.is_finite() { (0.9 * abscissa).min(MU_CAP) } else { MU_CAP };
    let speed = |mu: f64| (d * kernel.moment(mu) - d + h_bar) / mu;

    let step = (hi - MU_FLOOR) / (SCAN_POINTS - 1) as f64;
    let mut best = (0usize, f64::INFINITY);
    for k in 0..SCAN_POINTS {
        let mu = MU_FLOOR + step * k as f64;
        let g = speed(mu);
        if !g.is_finite() {
            return Err(QStarError::MomentDivergent { mu });
        }
        if g < best.1 {
            best = (k, g);
        }
        // the speed function is quasi-convex: once it has risen well above the
        // best value the minimum is bracketed
        if k > best.0 + 2 && g > 2.0 * best.1 + 1.0 {
            break;
        }
    }
    if best.0 + 1 >= SCAN_POINTS {
        return Err(QStarError::NoInteriorMinimum { cap: hi });
    }
    let lo_mu = MU_FLOOR + step * best.0.saturating_sub(1) as f64;
    let hi_mu = MU_FLOOR + step * (best.0 + 1) as f64;
    let (mu_star, q_star) = golden_min(speed, lo_mu, hi_mu, 1e-10);
    Ok(QStarResult { q_star, mu_star, d, h_bar, kernel: kernel.clone() })
}

/// `((h̲ - d)/μ*, q*)`, an analytic bracket for the Dirichlet threshold `q**`.
pub fn q_threshold_bounds(scenario: &Scenario) -> Result<(f64, f64), QStarError> {
    if scenario.regime != BoundaryRegime::DirichletNonlocal {
        return Err(QStarError::WrongRegime);
    }
    let (h_bar, h_min) = h_extrema(&scenario.reaction, &scenario.domain)?;
    if h_min <= scenario.d {
        return Err(QStarError::HypothesisViolated { h_min, d: scenario.d });
    }
    let qs = q_star(&scenario.kernel, scenario.d, h_bar)?;
    Ok(((h_min - scenario.d) / qs.mu_star, qs.q_star))
}
