//! Principal Dirichlet eigenpair of the discrete Laplacian.

use std::f64::consts::PI;

use thiserror::Error;

use crate::grid::{Domain, Field, Grid, GridError};
use crate::linalg::{self, SolveError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("inverse iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("tolerance must be positive")]
    InvalidTolerance,
    #[error("Rayleigh quotient of the zero field is undefined")]
    ZeroField,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// `(λ₀, φ₀)` with `−Δʰφ₀ = λ₀φ₀`, `∫φ₀² = 1` and `φ₀ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub lambda0: f64,
    pub phi0: Field,
    /// `‖Δʰφ₀ + λ₀φ₀‖∞`.
    pub residual: f64,
    pub iterations: usize,
}

/// Smallest eigenvalue of `−Δʰ` by inverse power iteration from the all-ones
/// field.
///
/// Converges when the residual drops to `tol`, or when it has stalled at the
/// floating-point floor of the stencil (which exceeds `1e-10` on very fine
/// grids). The returned `residual` is the measured one either way.
pub fn principal_eigenpair(grid: &Grid, tol: f64, max_iter: usize) -> Result<Eigenpair, SpectralError> {
    if !(tol > 0.0) {
        return Err(SpectralError::InvalidTolerance);
    }
    let mut v = vec![1.0; grid.len()];
    normalize(grid, &mut v);
    let mut lap = vec![0.0; grid.len()];
    let mut residual = f64::INFINITY;
    let mut previous = f64::INFINITY;
    for it in 1..=max_iter {
        linalg::solve_shifted(grid, 0.0, 1.0, &mut v)?;
        normalize(grid, &mut v);
        let lambda = grid.dirichlet_energy_raw(&v) / mass(grid, &v);
        grid.laplacian_into(&v, &mut lap);
        residual = lap
            .iter()
            .zip(&v)
            .map(|(l, x)| (l + lambda * x).abs())
            .fold(0.0, f64::max);
        // Representing φ₀ in f64 alone leaves a residual of order
        // ε·‖Δʰ‖·‖φ₀‖∞; below that, stop once the iteration stalls.
        let floor = 8.0 * f64::EPSILON * operator_norm(grid) * v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let stalled = residual <= floor && residual >= 0.5 * previous;
        previous = residual;
        if residual <= tol || stalled {
            // The principal eigenvector has one sign; clamp round-off.
            v.iter_mut().for_each(|x| *x = x.max(0.0));
            return Ok(Eigenpair {
                lambda0: lambda,
                phi0: Field::new(*grid, v)?,
                residual,
                iterations: it,
            });
        }
    }
    Err(SpectralError::NonConvergence {
        iterations: max_iter,
        residual,
    })
}

/// `∫|∇u|² / ∫u²`.
pub fn rayleigh_quotient(grid: &Grid, u: &Field) -> Result<f64, SpectralError> {
    grid.check(u)?;
    let m = u.l2_mass();
    if m == 0.0 {
        return Err(SpectralError::ZeroField);
    }
    Ok(u.dirichlet_energy() / m)
}

/// Continuum principal eigenvalue: `Σ (π/L)²` over the axes.
pub fn analytic_lambda0(domain: &Domain) -> f64 {
    match *domain {
        Domain::Interval { length } => (PI / length).powi(2),
        Domain::Rectangle { lx, ly } => (PI / lx).powi(2) + (PI / ly).powi(2),
    }
}

/// Exact principal eigenvalue of the discrete operator on `grid`,
/// `Σ (2/h²)(1 − cos(πh/L))` over the axes, evaluated as `(4/h²)sin²(πh/2L)`
/// to avoid cancellation on fine grids.
pub fn exact_discrete_lambda0(grid: &Grid) -> f64 {
    let axis = |h: f64, l: f64| 4.0 / (h * h) * (0.5 * PI * h / l).sin().powi(2);
    match grid.domain() {
        Domain::Interval { length } => axis(grid.hx(), length),
        Domain::Rectangle { lx, ly } => axis(grid.hx(), lx) + axis(grid.hy(), ly),
    }
}

/// `‖Δʰ‖∞`.
fn operator_norm(grid: &Grid) -> f64 {
    let x = 4.0 / (grid.hx() * grid.hx());
    if grid.dimension() == 2 {
        x + 4.0 / (grid.hy() * grid.hy())
    } else {
        x
    }
}

fn mass(grid: &Grid, v: &[f64]) -> f64 {
    grid.cell_measure() * v.iter().map(|x| x * x).sum::<f64>()
}

fn normalize(grid: &Grid, v: &mut [f64]) {
    let s = v.iter().sum::<f64>().signum();
    let scale = s / mass(grid, v).sqrt();
    v.iter_mut().for_each(|x| *x *= scale);
}
