//! Recorded monitors of a run and the concavity diagnostics built on them.

use std::io::Write;

use crate::evolution::EvolutionError;

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    /// Sup-norm crossed the threshold at `t_obs`.
    BlewUp { t_obs: f64 },
    /// Reached `t_max` without blowing up.
    Survived { t_max: f64 },
    /// Step size fell below `dt_min` at `t`; blow-up suspected.
    StepUnderflow { t: f64 },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::BlewUp { .. } => "blew_up",
            Outcome::Survived { .. } => "survived",
            Outcome::StepUnderflow { .. } => "step_underflow",
        }
    }
}

/// Time series of monitors, one entry per recorded state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub sup_norm: Vec<f64>,
    /// `∫u²`, which is `I′(t)`.
    pub l2_mass: Vec<f64>,
    /// `J(t)` evaluated from the state.
    pub j_direct: Vec<f64>,
    /// `J(0) + ∫₀ᵗ∫u_t²`.
    pub j_accumulated: Vec<f64>,
    /// `∫₀ᵗ∫u²` (trapezoid in time).
    pub mass_integral: Vec<f64>,
    /// Offset `M` in `I(t)`.
    pub offset: f64,
    pub gamma: f64,
    pub outcome: Outcome,
    pub steps: usize,
    pub rejected_steps: usize,
    /// Smallest `min(u)/‖u‖∞` over accepted states.
    pub min_relative_value: f64,
}

impl Trajectory {
    pub(crate) fn new(gamma: f64, offset: f64) -> Self {
        Trajectory {
            times: Vec::new(),
            sup_norm: Vec::new(),
            l2_mass: Vec::new(),
            j_direct: Vec::new(),
            j_accumulated: Vec::new(),
            mass_integral: Vec::new(),
            offset,
            gamma,
            outcome: Outcome::Survived { t_max: 0.0 },
            steps: 0,
            rejected_steps: 0,
            min_relative_value: 0.0,
        }
    }

    pub(crate) fn push(&mut self, t: f64, sup: f64, mass: f64, j: f64, j_acc: f64, mass_integral: f64) {
        self.times.push(t);
        self.sup_norm.push(sup);
        self.l2_mass.push(mass);
        self.j_direct.push(j);
        self.j_accumulated.push(j_acc);
        self.mass_integral.push(mass_integral);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `I(t) = ∫₀ᵗ∫u² + M`.
    pub fn i_series(&self) -> Vec<f64> {
        self.mass_integral.iter().map(|v| v + self.offset).collect()
    }

    /// Same trajectory with a different offset `M`.
    pub fn rebased(&self, offset: f64) -> Trajectory {
        Trajectory {
            offset,
            ..self.clone()
        }
    }

    /// Observed blow-up time (threshold crossing or step underflow).
    pub fn t_obs(&self) -> Option<f64> {
        match self.outcome {
            Outcome::BlewUp { t_obs } => Some(t_obs),
            Outcome::StepUnderflow { t } => Some(t),
            Outcome::Survived { .. } => None,
        }
    }

    /// CSV with columns `t, sup_norm, l2_mass, J_direct, J_accumulated, I,
    /// concavity_defect`, full precision. The defect column is empty at the
    /// end points or when `xi` is `None`.
    pub fn write_csv<W: Write>(&self, out: W, xi: Option<f64>) -> Result<(), csv::Error> {
        let defect = xi.and_then(|xi| concavity_defect(self, xi).ok());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "sup_norm", "l2_mass", "J_direct", "J_accumulated", "I", "concavity_defect"])?;
        let i_series = self.i_series();
        for k in 0..self.len() {
            let d = match &defect {
                Some(d) if k >= 1 && k + 1 < self.len() => format!("{:.16e}", d[k - 1]),
                _ => String::new(),
            };
            w.write_record([
                format!("{:.16e}", self.times[k]),
                format!("{:.16e}", self.sup_norm[k]),
                format!("{:.16e}", self.l2_mass[k]),
                format!("{:.16e}", self.j_direct[k]),
                format!("{:.16e}", self.j_accumulated[k]),
                format!("{:.16e}", i_series[k]),
                d,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Second-order derivative estimate of `y` at interior point `k` on a
/// non-uniform mesh.
pub fn centered_derivative(t: &[f64], y: &[f64], k: usize) -> f64 {
    let h1 = t[k] - t[k - 1];
    let h2 = t[k + 1] - t[k];
    -h2 / (h1 * (h1 + h2)) * y[k - 1] + (h2 - h1) / (h1 * h2) * y[k] + h1 / (h2 * (h1 + h2)) * y[k + 1]
}

/// `I″(t)I(t) − (1 + ξ)I′(t)²` at every interior record, with `I′ = ∫u²`
/// and `I″` from centered differences of `∫u²`. Entry `k` belongs to
/// record `k + 1`.
pub fn concavity_defect(traj: &Trajectory, xi: f64) -> Result<Vec<f64>, EvolutionError> {
    if traj.len() < 3 {
        return Err(EvolutionError::InsufficientRecords(traj.len()));
    }
    let i_series = traj.i_series();
    Ok((1..traj.len() - 1)
        .map(|k| {
            let second = centered_derivative(&traj.times, &traj.l2_mass, k);
            let first = traj.l2_mass[k];
            second * i_series[k] - (1.0 + xi) * first * first
        })
        .collect())
}

/// Smallest `M ≥ 0` for which the recorded concavity defect is
/// non-negative everywhere, or `None` if no offset works.
pub fn minimal_offset(traj: &Trajectory, xi: f64) -> Result<Option<f64>, EvolutionError> {
    if traj.len() < 3 {
        return Err(EvolutionError::InsufficientRecords(traj.len()));
    }
    let mut needed = 0.0_f64;
    for k in 1..traj.len() - 1 {
        let second = centered_derivative(&traj.times, &traj.l2_mass, k);
        let first = traj.l2_mass[k];
        let demand = (1.0 + xi) * first * first;
        if second > 0.0 {
            needed = needed.max(demand / second - traj.mass_integral[k]);
        } else if demand > 0.0 {
            return Ok(None);
        }
    }
    Ok(Some(needed))
}
