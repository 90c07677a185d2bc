//! Solvers for `(shift·I − scale·Δʰ) x = b`.
//!
//! 1D grids use the Thomas algorithm; 2D grids use conjugate gradient with a
//! diagonal (Jacobi) preconditioner.

use thiserror::Error;

use crate::grid::Grid;

/// Relative residual target for conjugate gradient.
pub const CG_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("conjugate gradient stalled after {iterations} iterations (relative residual {residual:e})")]
    CgNotConverged { iterations: usize, residual: f64 },
    #[error("singular tridiagonal system")]
    Singular,
}

/// Solves a constant-coefficient symmetric tridiagonal system with diagonal
/// `diag` and off-diagonal `off`, overwriting `rhs` with the solution.
pub fn solve_tridiagonal(diag: f64, off: f64, rhs: &mut [f64]) -> Result<(), SolveError> {
    let n = rhs.len();
    if n == 0 {
        return Ok(());
    }
    // Elimination factors c[i] = off / denom[i] and 1 / denom[i]. For
    // diagonally dominant systems they reach a floating-point fixed point
    // after a few rows; from there on the last values are reused.
    let mut c = Vec::with_capacity(n);
    let mut inv = Vec::with_capacity(n);
    let mut denom = diag;
    for i in 0..n {
        if i > 0 {
            denom = diag - off * c[i - 1];
        }
        if denom == 0.0 || !denom.is_finite() {
            return Err(SolveError::Singular);
        }
        let ci = off / denom;
        c.push(ci);
        inv.push(1.0 / denom);
        if i > 0 && ci == c[i - 1] {
            break;
        }
    }
    let fixed = c.len() - 1;
    let (c_last, inv_last) = (c[fixed], inv[fixed]);
    rhs[0] *= inv[0];
    let mut prev = rhs[0];
    for (r, &iv) in rhs[1..fixed.max(1)].iter_mut().zip(&inv[1..]) {
        prev = (*r - off * prev) * iv;
        *r = prev;
    }
    for r in rhs[fixed.max(1)..].iter_mut() {
        prev = (*r - off * prev) * inv_last;
        *r = prev;
    }
    let split = fixed.min(n - 1);
    let mut next = rhs[n - 1];
    for r in rhs[split..n - 1].iter_mut().rev() {
        next = *r - c_last * next;
        *r = next;
    }
    for (r, &ci) in rhs[..split].iter_mut().zip(&c[..split]).rev() {
        next = *r - ci * next;
        *r = next;
    }
    Ok(())
}

/// Jacobi-preconditioned conjugate gradient for an SPD operator.
///
/// `x` holds the initial guess on entry and the solution on exit. Returns
/// the number of iterations used.
pub fn pcg<A>(
    apply: A,
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<usize, SolveError>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = norm(&r) / b_norm;
    for it in 0..max_iter {
        if res <= tol {
            return Ok(it);
        }
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = norm(&r) / b_norm;
    }
    if res <= tol {
        Ok(max_iter)
    } else {
        Err(SolveError::CgNotConverged {
            iterations: max_iter,
            residual: res,
        })
    }
}

/// Solves `(shift·I − scale·Δʰ) x = rhs` on `grid`, overwriting `rhs`.
///
/// `shift ≥ 0`, `scale ≥ 0`, not both zero. In 2D the right-hand side
/// itself is the initial guess.
pub fn solve_shifted(grid: &Grid, shift: f64, scale: f64, rhs: &mut [f64]) -> Result<(), SolveError> {
    let ihx2 = 1.0 / (grid.hx() * grid.hx());
    if grid.dimension() == 1 {
        return solve_tridiagonal(shift + 2.0 * scale * ihx2, -scale * ihx2, rhs);
    }
    let ihy2 = 1.0 / (grid.hy() * grid.hy());
    let d = shift + 2.0 * scale * (ihx2 + ihy2);
    if scale == 0.0 {
        rhs.iter_mut().for_each(|v| *v /= d);
        return Ok(());
    }
    let diag = vec![d; rhs.len()];
    let b = rhs.to_vec();
    let mut x: Vec<f64> = b.iter().map(|v| v / d).collect();
    let apply = |v: &[f64], out: &mut [f64]| {
        grid.laplacian_into(v, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = shift * vi - scale * *o;
        }
    };
    pcg(apply, &diag, &b, &mut x, CG_TOLERANCE, 20 * rhs.len() + 100)?;
    rhs.copy_from_slice(&x);
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
