//! IMEX time integration of `u_t = Δu + f(u)` up to numerical blow-up.
//!
//! Each step solves `(I − dt·Δʰ) u_new = u + dt·f(u)`. The step size follows
//! `dt = safety·dt0 / (1 + f′(‖u‖∞))`, further halved whenever a
//! step-doubling error estimate exceeds the relative tolerance or the source
//! term overflows. Accepted states are the two-half-step solutions.

use thiserror::Error;

use crate::certificate::energy;
use crate::grid::{Field, Grid, GridError};
use crate::linalg::{self, SolveError};
use crate::nonlinearity::Nonlinearity;

pub use crate::trajectory::{concavity_defect, minimal_offset, Outcome, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("initial data is negative at node {index} ({value})")]
    NegativeInitialData { index: usize, value: f64 },
    #[error("state became non-finite")]
    NonFiniteState,
    #[error("need at least 3 recorded states, have {0}")]
    InsufficientRecords(usize),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dt0: f64,
    pub t_max: f64,
    /// Sup-norm that counts as blow-up.
    pub blowup_threshold: f64,
    pub dt_min: f64,
    pub safety: f64,
    /// Record monitors every this many accepted steps.
    pub record_every: usize,
    /// Relative step-doubling error that triggers a retry with half the step.
    pub error_tol: f64,
    /// Multiplies Δʰ. `0` turns every node into an independent ODE.
    pub diffusion: f64,
}

impl SolverConfig {
    pub fn new(dt0: f64, t_max: f64) -> Self {
        SolverConfig {
            dt0,
            t_max,
            blowup_threshold: 1e8,
            dt_min: 1e-14,
            safety: 0.5,
            record_every: 100,
            error_tol: 1e-4,
            diffusion: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        let bad = |m: &str| Err(EvolutionError::InvalidConfig(m.to_string()));
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !pos(self.dt0) {
            return bad("dt0 must be positive");
        }
        if !pos(self.t_max) {
            return bad("t_max must be positive");
        }
        if !pos(self.dt_min) || self.dt_min >= self.dt0 {
            return bad("dt_min must be positive and below dt0");
        }
        if !pos(self.blowup_threshold) {
            return bad("blowup_threshold must be positive");
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return bad("safety must lie in (0, 1]");
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1");
        }
        if !pos(self.error_tol) {
            return bad("error_tol must be positive");
        }
        if !(self.diffusion.is_finite() && self.diffusion >= 0.0) {
            return bad("diffusion must be non-negative");
        }
        Ok(())
    }
}

/// One IMEX step with unit diffusion.
pub fn step_imex(grid: &Grid, u: &Field, nl: &Nonlinearity, dt: f64) -> Result<Field, EvolutionError> {
    step_imex_with(grid, u, nl, dt, 1.0)
}

/// One IMEX step of `u_t = D·Δu + f(u)`.
pub fn step_imex_with(grid: &Grid, u: &Field, nl: &Nonlinearity, dt: f64, diffusion: f64) -> Result<Field, EvolutionError> {
    grid.check(u)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(EvolutionError::InvalidConfig("dt must be positive".into()));
    }
    let mut source = vec![0.0; grid.len()];
    nl.f_into(u.values(), &mut source);
    let mut out = vec![0.0; grid.len()];
    imex_into(grid, u.values(), &source, dt, diffusion, &mut out)?;
    Ok(Field::new(*grid, out)?)
}

/// `out = (I − dt·D·Δʰ)⁻¹ (u + dt·source)`.
fn imex_into(grid: &Grid, u: &[f64], source: &[f64], dt: f64, diffusion: f64, out: &mut [f64]) -> Result<(), EvolutionError> {
    for ((o, &v), &s) in out.iter_mut().zip(u).zip(source) {
        *o = v + dt * s;
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(EvolutionError::NonFiniteState);
    }
    linalg::solve_shifted(grid, 1.0, dt * diffusion, out)?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(EvolutionError::NonFiniteState);
    }
    Ok(())
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Integrates from `u0` until blow-up, `t_max`, or step underflow, recording
/// `‖u‖∞`, `∫u²`, `J(t)` (direct and accumulated), and `∫₀ᵗ∫u²`.
///
/// `gamma` enters `J`; `m` is the offset of `I(t) = ∫₀ᵗ∫u² + M`.
pub fn run_until_blowup(
    grid: &Grid,
    u0: &Field,
    nl: &Nonlinearity,
    config: &SolverConfig,
    gamma: f64,
    m: f64,
) -> Result<Trajectory, EvolutionError> {
    config.validate()?;
    grid.check(u0)?;
    if let Some((index, &value)) = u0.values().iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(EvolutionError::NegativeInitialData { index, value });
    }
    if u0.sup_norm() >= config.blowup_threshold {
        return Err(EvolutionError::InvalidConfig(
            "blowup_threshold must exceed the initial sup-norm".into(),
        ));
    }

    let cell = grid.cell_measure();
    let n = grid.len();
    let mut u = u0.values().to_vec();
    let mut full = vec![0.0; n];
    let mut half = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut source = vec![0.0; n];
    let mut half_source = vec![0.0; n];

    let mut traj = Trajectory::new(gamma, m);
    let mut t = 0.0;
    let mut mass = u0.l2_mass();
    let mut mass_integral = 0.0;
    let mut j_accumulated = energy(u0, nl, gamma);
    let mut shrink = 1.0_f64;
    let mut steps = 0usize;
    let mut min_relative = 0.0_f64;

    let record = |traj: &mut Trajectory, t: f64, u: &[f64], mass: f64, mass_integral: f64, j_acc: f64| {
        let field = Field::new(*grid, u.to_vec()).expect("accepted states are finite");
        traj.push(t, sup(u), mass, energy(&field, nl, gamma), j_acc, mass_integral);
    };
    record(&mut traj, t, &u, mass, mass_integral, j_accumulated);

    let outcome = 'outer: loop {
        let remaining = config.t_max - t;
        if remaining <= config.dt_min.max(1e-14 * config.t_max) {
            break Outcome::Survived { t_max: t };
        }
        let lipschitz = nl.derivative(sup(&u)).abs();
        let mut dt = (config.safety * config.dt0 * shrink / (1.0 + lipschitz)).min(remaining);
        nl.f_into(&u, &mut source);
        let err = loop {
            if !(dt >= config.dt_min) {
                break 'outer Outcome::StepUnderflow { t };
            }
            let attempt = imex_into(grid, &u, &source, dt, config.diffusion, &mut full)
                .and_then(|_| imex_into(grid, &u, &source, 0.5 * dt, config.diffusion, &mut half))
                .and_then(|_| {
                    nl.f_into(&half, &mut half_source);
                    imex_into(grid, &half, &half_source, 0.5 * dt, config.diffusion, &mut next)
                });
            match attempt {
                Ok(()) => {}
                Err(EvolutionError::NonFiniteState) => {
                    dt *= 0.5;
                    shrink *= 0.5;
                    traj.rejected_steps += 1;
                    continue;
                }
                Err(e) => return Err(e),
            }
            let err = full
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / sup(&next).max(f64::MIN_POSITIVE);
            if err > config.error_tol {
                dt *= 0.5;
                shrink *= 0.5;
                traj.rejected_steps += 1;
                continue;
            }
            break err;
        };

        // ∫u_t² over the step from the two half-step difference quotients.
        let half_dt = 0.5 * dt;
        j_accumulated += cell * (sq_dist(&half, &u) + sq_dist(&next, &half)) / half_dt;
        let new_mass = cell * next.iter().map(|v| v * v).sum::<f64>();
        mass_integral += 0.5 * dt * (mass + new_mass);
        mass = new_mass;
        std::mem::swap(&mut u, &mut next);
        t += dt;
        steps += 1;
        if err < 0.25 * config.error_tol {
            shrink = (shrink * 2.0).min(1.0);
        }

        let s = sup(&u);
        if s > 0.0 {
            let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
            min_relative = min_relative.min(lo / s);
        }
        if s >= config.blowup_threshold {
            break Outcome::BlewUp { t_obs: t };
        }
        if steps.is_multiple_of(config.record_every) {
            record(&mut traj, t, &u, mass, mass_integral, j_accumulated);
        }
    };

    if traj.times.last() != Some(&t) {
        record(&mut traj, t, &u, mass, mass_integral, j_accumulated);
    }
    traj.outcome = outcome;
    traj.steps = steps;
    traj.min_relative_value = min_relative;
    Ok(traj)
}
