//! Uniform grid, trapezoidal Nyström quadrature of the convolution, first-order
//! upwind advection, and the dense operators built from them.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::model::{BoundaryRegime, DomainInterval, Scenario};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DiscretizeError {
    #[error("need at least 2 cells, got {0}")]
    TooFewCells(usize),
    #[error("invalid domain ({0}, {1})")]
    Domain(f64, f64),
    #[error("kernel evaluation failed in row {row} (x = {x}): J = {value}")]
    Kernel { row: usize, x: f64, value: f64 },
    #[error("length mismatch: expected {expected} entries, got {got}")]
    Length { expected: usize, got: usize },
}

/// Uniform nodes `x_0 = l1 < … < x_n = l2` with composite trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: DomainInterval,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    step: f64,
}

pub fn build_grid(domain: DomainInterval, n_cells: usize) -> Result<Grid, DiscretizeError> {
    if n_cells < 2 {
        return Err(DiscretizeError::TooFewCells(n_cells));
    }
    if !domain.is_valid() {
        return Err(DiscretizeError::Domain(domain.l1, domain.l2));
    }
    let step = domain.length() / n_cells as f64;
    let nodes = (0..=n_cells)
        .map(|i| if i == n_cells { domain.l2 } else { domain.l1 + step * i as f64 })
        .collect();
    let mut weights = vec![step; n_cells + 1];
    weights[0] = 0.5 * step;
    weights[n_cells] = 0.5 * step;
    Ok(Grid { domain, nodes, weights, step })
}

impl Grid {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn domain(&self) -> DomainInterval {
        self.domain
    }

    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trapezoidal integral of nodal values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Index of the node closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        (((x - self.domain.l1) / self.step).round().max(0.0) as usize).min(self.n_cells())
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.nodes.iter().map(|&x| f(x)))
    }
}

/// Assembled dense action of the nonlocal dispersal and upwind advection.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    /// `conv[i][j] = w_j J(x_i - x_j)` (not yet scaled by `d`).
    conv: DMatrix<f64>,
    /// `row_mass[i] = Σ_j w_j J(x_i - x_j) ≈ ∫Ω J(x_i - y) dy`.
    row_mass: DVector<f64>,
    regime: BoundaryRegime,
    q: f64,
    d: f64,
    step: f64,
}

pub fn assemble(scenario: &Scenario, grid: &Grid) -> Result<DiscreteOperator, DiscretizeError> {
    let x = grid.nodes();
    let w = grid.weights();
    let n = x.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let value = scenario.kernel.density(x[i] - x[j]);
                    if value.is_finite() && value >= 0.0 {
                        Ok(w[j] * value)
                    } else {
                        Err(DiscretizeError::Kernel { row: i, x: x[i], value })
                    }
                })
                .collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let conv = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let row_mass = DVector::from_iterator(n, rows.iter().map(|r| r.iter().sum::<f64>()));
    Ok(DiscreteOperator { conv, row_mass, regime: scenario.regime, q: scenario.q, d: scenario.d, step: grid.step() })
}

impl DiscreteOperator {
    pub fn conv(&self) -> &DMatrix<f64> {
        &self.conv
    }

    pub fn row_mass(&self) -> &DVector<f64> {
        &self.row_mass
    }

    pub fn regime(&self) -> BoundaryRegime {
        self.regime
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.row_mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_mass.is_empty()
    }

    /// Same quadrature with a different advection rate.
    pub fn with_q(&self, q: f64) -> Self {
        Self { q, ..self.clone() }
    }

    /// The upstream end, where the density is held at zero: `l1` for `q > 0`,
    /// `l2` for `q < 0`, none without flow.
    pub fn inflow_node(&self) -> Option<usize> {
        if self.q > 0.0 {
            Some(0)
        } else if self.q < 0.0 {
            Some(self.len() - 1)
        } else {
            None
        }
    }

    /// Node held at zero during time stepping and stationary solves. Without
    /// flow the `u(l1) = 0` condition is kept so `q → 0⁺` limits compare like
    /// with like.
    pub fn pinned_node(&self) -> usize {
        self.inflow_node().unwrap_or(0)
    }

    /// Upwind first-derivative matrix; the inflow row is the identity row.
    pub fn adv_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let inv_h = 1.0 / self.step;
        let mut adv = DMatrix::zeros(n, n);
        if self.q > 0.0 {
            for i in 1..n {
                adv[(i, i)] = inv_h;
                adv[(i, i - 1)] = -inv_h;
            }
        } else if self.q < 0.0 {
            for i in 0..n - 1 {
                adv[(i, i)] = -inv_h;
                adv[(i, i + 1)] = inv_h;
            }
        }
        if let Some(b) = self.inflow_node() {
            adv[(b, b)] = 1.0;
        }
        adv
    }

    /// `adv · u` with the inflow row left as zero.
    pub fn apply_advection(&self, u: &DVector<f64>) -> DVector<f64> {
        let n = self.len();
        let inv_h = 1.0 / self.step;
        let mut out = DVector::zeros(n);
        if self.q > 0.0 {
            for i in 1..n {
                out[i] = (u[i] - u[i - 1]) * inv_h;
            }
        } else if self.q < 0.0 {
            for i in 0..n - 1 {
                out[i] = (u[i + 1] - u[i]) * inv_h;
            }
        }
        out
    }

    /// Diffusion plus advection: `d (conv u - m∘u) - q adv u` (Neumann) or
    /// `d (conv u - u) - q adv u` (Dirichlet). The inflow row is zero.
    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut out = &self.conv * u;
        match self.regime {
            BoundaryRegime::NeumannNonlocal => out -= self.row_mass.component_mul(u),
            BoundaryRegime::DirichletNonlocal => out -= u,
        }
        out *= self.d;
        out.axpy(-self.q, &self.apply_advection(u), 1.0);
        if let Some(b) = self.inflow_node() {
            out[b] = 0.0;
        }
        out
    }

    /// Per-node loss coefficient of the regime: `m_i` (Neumann) or `1` (Dirichlet).
    pub fn mass_term(&self) -> DVector<f64> {
        match self.regime {
            BoundaryRegime::NeumannNonlocal => self.row_mass.clone(),
            BoundaryRegime::DirichletNonlocal => DVector::from_element(self.len(), 1.0),
        }
    }

    /// Dense matrix of [`apply`](Self::apply).
    pub fn linear_part(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut l = &self.conv * self.d;
        let mass = self.mass_term();
        for i in 0..n {
            l[(i, i)] -= self.d * mass[i];
        }
        self.add_advection(&mut l);
        if let Some(b) = self.inflow_node() {
            l.row_mut(b).fill(0.0);
        }
        l
    }

    fn add_advection(&self, m: &mut DMatrix<f64>) {
        let n = self.len();
        let c = self.q / self.step;
        if self.q > 0.0 {
            for i in 1..n {
                m[(i, i)] -= c;
                m[(i, i - 1)] += c;
            }
        } else if self.q < 0.0 {
            for i in 0..n - 1 {
                m[(i, i)] += c;
                m[(i, i + 1)] -= c;
            }
        }
    }

    /// Largest absolute row sum of the linear part.
    pub fn linear_norm_inf(&self) -> f64 {
        let l = self.linear_part();
        (0..l.nrows()).map(|i| l.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// `d conv - q adv + diag(a)` with the inflow row replaced by the identity row.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    pub matrix: DMatrix<f64>,
    /// Inflow node whose row encodes `φ = 0`; `None` when `q = 0`.
    pub boundary: Option<usize>,
}

impl LinearizedOperator {
    /// The operator on the free nodes (boundary row and column removed).
    pub fn restricted(&self) -> DMatrix<f64> {
        match self.boundary {
            None => self.matrix.clone(),
            Some(b) => self.matrix.clone().remove_row(b).remove_column(b),
        }
    }

    /// Re-inserts a zero at the boundary node.
    pub fn extend(&self, free: &DVector<f64>) -> DVector<f64> {
        match self.boundary {
            None => free.clone(),
            Some(b) => free.clone().insert_row(b, 0.0),
        }
    }
}

pub fn linearized_operator(op: &DiscreteOperator, a: &DVector<f64>) -> Result<LinearizedOperator, DiscretizeError> {
    let n = op.len();
    if a.len() != n {
        return Err(DiscretizeError::Length { expected: n, got: a.len() });
    }
    let mut m = &op.conv * op.d;
    for i in 0..n {
        m[(i, i)] += a[i];
    }
    op.add_advection(&mut m);
    let boundary = op.inflow_node();
    if let Some(b) = boundary {
        m.row_mut(b).fill(0.0);
        m[(b, b)] = 1.0;
    }
    Ok(LinearizedOperator { matrix: m, boundary })
}
