//! Dispersal kernels `J`.

use std::f64::consts::PI;

use statrs::function::erf::erf;

use crate::numerics::integrate_panels;

/// Linearly interpolated kernel density given by samples; zero outside the
/// sampled range.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    xs: Vec<f64>,
    values: Vec<f64>,
}

impl TabulatedKernel {
    /// Uses the samples as given, without renormalisation.
    pub fn from_samples(xs: Vec<f64>, values: Vec<f64>) -> Result<Self, KernelError> {
        if xs.len() != values.len() || xs.len() < 2 {
            return Err(KernelError::BadTable("need at least two (x, J) pairs of equal length".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(KernelError::BadTable("abscissae must be strictly increasing".into()));
        }
        if xs.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(KernelError::BadTable("non-finite sample".into()));
        }
        Ok(Self { xs, values })
    }

    /// Loads the samples and rescales them to unit trapezoidal mass.
    pub fn normalized(xs: Vec<f64>, values: Vec<f64>) -> Result<Self, KernelError> {
        let mut table = Self::from_samples(xs, values)?;
        let mass = table.mass();
        if !(mass > 0.0) {
            return Err(KernelError::BadTable("table has zero mass".into()));
        }
        table.values.iter_mut().for_each(|v| *v /= mass);
        Ok(table)
    }

    /// Exact integral of the piecewise-linear interpolant.
    pub fn mass(&self) -> f64 {
        self.xs
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
            .sum()
    }

    pub fn samples(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.values)
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return 0.0;
        }
        let k = self.xs.partition_point(|&s| s <= x).clamp(1, n - 1);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let t = (x - x0) / (x1 - x0);
        self.values[k - 1] * (1.0 - t) + self.values[k] * t
    }

    fn support(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("invalid kernel table: {0}")]
    BadTable(String),
    #[error("invalid kernel parameter: {0}")]
    BadParameter(String),
}

/// Dispersal kernel variants.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// Centred normal density with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// Normal density restricted to `|x| <= cutoff` and renormalised.
    TruncatedGaussian { sigma: f64, cutoff: f64 },
    /// `1/(2 radius)` on `[-radius, radius]`.
    UniformCompact { radius: f64 },
    Tabulated(TabulatedKernel),
}

impl KernelSpec {
    pub fn standard_gaussian() -> Self {
        KernelSpec::Gaussian { sigma: 1.0 }
    }

    pub fn check_parameters(&self) -> Result<(), KernelError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(KernelError::BadParameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            KernelSpec::Gaussian { sigma } => positive("sigma", sigma),
            KernelSpec::TruncatedGaussian { sigma, cutoff } => {
                positive("sigma", sigma)?;
                positive("cutoff", cutoff)
            }
            KernelSpec::UniformCompact { radius } => positive("radius", radius),
            KernelSpec::Tabulated(_) => Ok(()),
        }
    }

    /// Density `J(x)`.
    pub fn density(&self, x: f64) -> f64 {
        match self {
            KernelSpec::Gaussian { sigma } => gaussian(x, *sigma),
            KernelSpec::TruncatedGaussian { sigma, cutoff } => {
                if x.abs() > *cutoff {
                    0.0
                } else {
                    gaussian(x, *sigma) / erf(cutoff / (sigma * 2f64.sqrt()))
                }
            }
            KernelSpec::UniformCompact { radius } => {
                if x.abs() <= *radius {
                    0.5 / radius
                } else {
                    0.0
                }
            }
            KernelSpec::Tabulated(t) => t.eval(x),
        }
    }

    pub fn has_compact_support(&self) -> bool {
        !matches!(self, KernelSpec::Gaussian { .. })
    }

    /// Interval outside which the density is zero (or below 1e-300 for the
    /// Gaussian, whose tails are cut at 38 standard deviations).
    pub fn effective_support(&self) -> (f64, f64) {
        match self {
            KernelSpec::Gaussian { sigma } => (-38.0 * sigma, 38.0 * sigma),
            KernelSpec::TruncatedGaussian { cutoff, .. } => (-cutoff, *cutoff),
            KernelSpec::UniformCompact { radius } => (-radius, *radius),
            KernelSpec::Tabulated(t) => t.support(),
        }
    }

    /// Largest `mu` for which the exponential moment is finite (`inf` when every
    /// moment exists).
    pub fn moment_abscissa(&self) -> f64 {
        f64::INFINITY
    }

    /// Numerical `∫ℝ J`.
    pub fn mass(&self) -> f64 {
        if let KernelSpec::Tabulated(t) = self {
            return t.mass();
        }
        let (a, b) = self.effective_support();
        integrate_panels(&|x| self.density(x), a, b, 64, 1e-13)
    }

    /// Exponential moment `∫ℝ J(z) e^{-mu z} dz`. Closed form for the Gaussian,
    /// adaptive quadrature over the support otherwise.
    pub fn moment(&self, mu: f64) -> f64 {
        match self {
            KernelSpec::Gaussian { sigma } => (0.5 * mu * mu * sigma * sigma).exp(),
            _ => {
                let (a, b) = self.effective_support();
                // scale the tolerance with the largest integrand value
                let peak = self.density(0.0).max(1e-300) * (mu.abs() * a.abs().max(b.abs())).exp();
                integrate_panels(&|z| self.density(z) * (-mu * z).exp(), a, b, 64, 1e-14 * peak.max(1.0))
            }
        }
    }
}

fn gaussian(x: f64, sigma: f64) -> f64 {
    (-(x * x) / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
}
