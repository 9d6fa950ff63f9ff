//! Autonomous Fisher–KPP type reactions `f(x, u) = u h(x, u)`.

use std::fmt;
use std::sync::Arc;

use super::DomainInterval;
use crate::numerics::{bisect_root, extrema};

type GrowthFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Per-capita growth rate `h(x, u)`.
#[derive(Clone)]
pub enum GrowthLaw {
    /// `h(x, u) = Σ_i x_coeffs[i] x^i + Σ_k u_coeffs[k] u^(k+1)`.
    Polynomial { x_coeffs: Vec<f64>, u_coeffs: Vec<f64> },
    /// Arbitrary closure; derivatives fall back to central differences.
    Custom(Arc<GrowthFn>),
}

impl fmt::Debug for GrowthLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthLaw::Polynomial { x_coeffs, u_coeffs } => f
                .debug_struct("Polynomial")
                .field("x_coeffs", x_coeffs)
                .field("u_coeffs", u_coeffs)
                .finish(),
            GrowthLaw::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn horner_derivative(coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (i, c)| acc * x + i as f64 * c)
}

impl GrowthLaw {
    /// `h(x, u) = c0 + c1 x + c2 x^2 - crowding u`.
    pub fn kpp_quadratic(growth: [f64; 3], crowding: f64) -> Self {
        GrowthLaw::Polynomial { x_coeffs: growth.to_vec(), u_coeffs: vec![-crowding] }
    }

    pub fn custom<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(h: F) -> Self {
        GrowthLaw::Custom(Arc::new(h))
    }

    pub fn eval(&self, x: f64, u: f64) -> f64 {
        match self {
            GrowthLaw::Polynomial { x_coeffs, u_coeffs } => horner(x_coeffs, x) + u * horner(u_coeffs, u),
            GrowthLaw::Custom(h) => h(x, u),
        }
    }
}

/// A reaction `f = u h(x, u)` together with its saturation level `N`
/// (`f(x, u) < 0` for every `u > N`).
#[derive(Debug, Clone)]
pub struct ReactionSpec {
    law: GrowthLaw,
    n_bound: f64,
    x_scale: f64,
}

/// Upper end of the search for a saturation level.
const SATURATION_SEARCH_CAP: f64 = 1e8;

impl ReactionSpec {
    /// Builds the reaction and derives `N` as the supremum over the domain of
    /// the positive root of `h(x, ·)` (zero where `h(x, 0) <= 0`). When `h(x, ·)`
    /// never turns negative the level is `+inf` and validation flags it.
    pub fn new(law: GrowthLaw, domain: &DomainInterval) -> Self {
        let mut spec = Self { law, n_bound: f64::INFINITY, x_scale: domain.length().max(1.0) };
        spec.n_bound = spec.saturation_level(domain);
        spec
    }

    pub fn with_n_bound(mut self, n_bound: f64) -> Self {
        self.n_bound = n_bound;
        self
    }

    pub fn law(&self) -> &GrowthLaw {
        &self.law
    }

    pub fn n_bound(&self) -> f64 {
        self.n_bound
    }

    pub fn h(&self, x: f64, u: f64) -> f64 {
        self.law.eval(x, u)
    }

    pub fn f(&self, x: f64, u: f64) -> f64 {
        u * self.law.eval(x, u)
    }

    pub fn h_x(&self, x: f64, u: f64) -> f64 {
        match &self.law {
            GrowthLaw::Polynomial { x_coeffs, .. } => horner_derivative(x_coeffs, x),
            GrowthLaw::Custom(h) => central_difference(|s| h(s, u), x, 1e-6 * self.x_scale),
        }
    }

    pub fn h_u(&self, x: f64, u: f64) -> f64 {
        match &self.law {
            GrowthLaw::Polynomial { u_coeffs, .. } => {
                // d/du [u p(u)] = p(u) + u p'(u)
                horner(u_coeffs, u) + u * horner_derivative(u_coeffs, u)
            }
            GrowthLaw::Custom(h) => central_difference(|s| h(x, s), u, 1e-6 * u.abs().max(1.0)),
        }
    }

    /// `∂f/∂u = h + u h_u`.
    pub fn f_u(&self, x: f64, u: f64) -> f64 {
        self.h(x, u) + u * self.h_u(x, u)
    }

    /// Lipschitz bound of `f(x, ·)` on `[0, upper]`, sampled over the domain.
    pub fn lipschitz(&self, domain: &DomainInterval, upper: f64) -> f64 {
        let upper = if upper.is_finite() { upper.max(0.0) } else { 0.0 };
        let (nx, nu) = (201, 201);
        let mut lip: f64 = 0.0;
        for i in 0..nx {
            let x = domain.l1 + domain.length() * i as f64 / (nx - 1) as f64;
            for j in 0..nu {
                let u = upper * j as f64 / (nu - 1) as f64;
                lip = lip.max(self.f_u(x, u).abs());
            }
        }
        lip
    }

    fn saturation_level(&self, domain: &DomainInterval) -> f64 {
        let root = |x: f64| -> f64 {
            if self.h(x, 0.0) <= 0.0 {
                return 0.0;
            }
            let mut hi = 1.0;
            while self.h(x, hi) >= 0.0 {
                hi *= 2.0;
                if hi > SATURATION_SEARCH_CAP {
                    return f64::INFINITY;
                }
            }
            bisect_root(&|u| self.h(x, u), 0.0, hi, 1e-13 * hi)
        };
        let ((_, sup), _) = extrema(&root, domain.l1, domain.l2, 2001);
        sup
    }
}

fn central_difference<F: Fn(f64) -> f64>(g: F, at: f64, step: f64) -> f64 {
    (g(at + step) - g(at - step)) / (2.0 * step)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn river_reaction() -> ReactionSpec {
        let domain = DomainInterval::new(0.0, 5.0).unwrap();
        ReactionSpec::new(GrowthLaw::kpp_quadratic([2.5, 0.0, -1.0 / 16.0], 1.0), &domain)
    }

    #[test]
    fn kpp_quadratic_evaluates() {
        let r = river_reaction();
        assert!((r.h(4.0, 0.5) - (2.5 - 1.0 - 0.5)).abs() < 1e-15);
        assert_eq!(r.f(3.0, 0.0), 0.0);
        assert!((r.h_x(4.0, 0.3) + 0.5).abs() < 1e-15);
        assert!((r.h_u(1.0, 0.7) + 1.0).abs() < 1e-15);
        assert!((r.f_u(0.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn saturation_level_is_sup_of_growth() {
        let r = river_reaction();
        assert!((r.n_bound() - 2.5).abs() < 1e-9, "{}", r.n_bound());
        for i in 0..=50 {
            let x = 0.1 * i as f64;
            for j in 1..=40 {
                let u = r.n_bound() + 0.05 * j as f64;
                assert!(r.f(x, u) < 0.0);
            }
        }
    }

    #[test]
    fn custom_law_uses_finite_differences() {
        let domain = DomainInterval::new(0.0, 5.0).unwrap();
        let r = ReactionSpec::new(GrowthLaw::custom(|x: f64, u: f64| x.sin() - u * u), &domain);
        assert!((r.h_x(1.0, 0.2) - 1f64.cos()).abs() < 1e-8);
        assert!((r.h_u(1.0, 0.5) + 1.0).abs() < 1e-8);
        assert!((r.n_bound() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn non_saturating_law_has_infinite_level() {
        let domain = DomainInterval::new(0.0, 1.0).unwrap();
        let r = ReactionSpec::new(GrowthLaw::Polynomial { x_coeffs: vec![1.0], u_coeffs: vec![] }, &domain);
        assert!(r.n_bound().is_infinite());
    }

    #[test]
    fn lipschitz_of_river_reaction() {
        let r = river_reaction();
        let domain = DomainInterval::new(0.0, 5.0).unwrap();
        // |h(x,0) - 2u| is largest at x = 5, u = 2.5
        assert!((r.lipschitz(&domain, 2.5) - 4.0625).abs() < 1e-12);
    }
}
