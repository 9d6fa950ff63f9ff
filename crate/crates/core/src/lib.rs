//! Numerical solvers for a nonlocal reaction–diffusion–advection model of a
//! population living in a river reach `(l1, l2)`:
//!
//! ```text
//! u_t = d ∫Ω J(x-y)[u(y) - u(x)] dy - q u_x + u h(x, u)      (Neumann)
//! u_t = d [∫Ω J(x-y) u(y) dy - u(x)] - q u_x + u h(x, u)     (Dirichlet)
//! u(t, l1) = 0
//! ```
//!
//! The crate discretises the nonlocal operator on a uniform grid, computes
//! principal eigenvalues whose sign decides persistence against extinction,
//! locates the critical flow speed by bisection, integrates the evolution
//! problem and builds steady states by monotone iteration.

pub mod discretize;
pub mod eigen;
pub mod evolve;
pub mod io;
pub mod model;
pub mod numerics;
pub mod scenario_file;
pub mod stationary;
pub mod threshold;
