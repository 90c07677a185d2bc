//! Blow-up certificate: the initial energy `J(0)`, the offset `M` and the
//! blow-up time bound `T* ≤ M / (ξ ∫u₀²)`.

use std::fmt;

use thiserror::Error;

use crate::grid::{Field, Grid, GridError};
use crate::nonlinearity::{check_condition_c, ConditionError, ConditionParams, ConditionVerdict, Nonlinearity, Sampling};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertificateError {
    #[error("initial data is negative at node {index} ({value})")]
    NegativeInitialData { index: usize, value: f64 },
    #[error("condition (C) fails for alpha = {alpha}, beta = {beta}, gamma = {gamma} (witness u = {witness:?})")]
    ConditionCViolated {
        alpha: f64,
        beta: f64,
        gamma: f64,
        witness: Option<f64>,
    },
    #[error("F(u0) overflowed")]
    Overflow,
    #[error(transparent)]
    Condition(#[from] ConditionError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// `J(0) = −½∫|∇u₀|² + ∫[F(u₀) − γ]`, with `|Ω|` taken from the same
/// quadrature as the other integrals.
pub fn initial_energy_j0(grid: &Grid, u0: &Field, nl: &Nonlinearity, gamma: f64) -> Result<f64, CertificateError> {
    grid.check(u0)?;
    if let Some((index, &value)) = u0.values().iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(CertificateError::NegativeInitialData { index, value });
    }
    let j = energy(u0, nl, gamma);
    if j.is_finite() {
        Ok(j)
    } else {
        Err(CertificateError::Overflow)
    }
}

/// `J(u) = −½∫|∇u|² + ∫F(u) − γ|Ω|`; no sign check. May be non-finite.
pub(crate) fn energy(u: &Field, nl: &Nonlinearity, gamma: f64) -> f64 {
    let grid = u.grid();
    let potential: f64 = u.values().iter().map(|&v| nl.antiderivative(v)).sum::<f64>() * grid.cell_measure();
    -0.5 * u.dirichlet_energy() + potential - gamma * grid.measure()
}

/// `M = α/(α−2)·(1 + √(α/2))·(∫u₀²)² / (2α J(0))`.
pub fn remark_offset(alpha: f64, mass0: f64, j0: f64) -> f64 {
    alpha / (alpha - 2.0) * (1.0 + (alpha / 2.0).sqrt()) * mass0 * mass0 / (2.0 * alpha * j0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub j0: f64,
    pub params: ConditionParams,
    /// Eigenvalue the β-constraint was checked against.
    pub lambda0: f64,
    /// `ξ = √(α/2) − 1`; the Schwarz-step parameter δ equals ξ.
    pub xi: f64,
    /// `∫u₀²`.
    pub mass0: f64,
    /// Discrete `|Ω|`.
    pub measure: f64,
    /// Offset `M`, present only when admissible.
    pub m: Option<f64>,
    /// Upper bound on the blow-up time, present only when admissible.
    pub t_star: Option<f64>,
    pub admissible: bool,
    pub verdict: ConditionVerdict,
}

/// Validates (C) for `params` at `lambda0` and evaluates the certificate.
///
/// `J(0) ≤ 0` gives a non-admissible certificate, not an error.
pub fn blow_up_certificate(
    grid: &Grid,
    u0: &Field,
    nl: &Nonlinearity,
    params: &ConditionParams,
    lambda0: f64,
) -> Result<Certificate, CertificateError> {
    blow_up_certificate_with(grid, u0, nl, params, lambda0, &Sampling::default())
}

pub fn blow_up_certificate_with(
    grid: &Grid,
    u0: &Field,
    nl: &Nonlinearity,
    params: &ConditionParams,
    lambda0: f64,
    sampling: &Sampling,
) -> Result<Certificate, CertificateError> {
    let verdict = check_condition_c(nl, params, lambda0, sampling)?;
    if !verdict.satisfied {
        return Err(CertificateError::ConditionCViolated {
            alpha: params.alpha,
            beta: params.beta,
            gamma: params.gamma,
            witness: verdict.witness_u,
        });
    }
    let j0 = initial_energy_j0(grid, u0, nl, params.gamma)?;
    let mass0 = u0.l2_mass();
    let xi = params.xi();
    let admissible = j0 > 0.0 && mass0 > 0.0;
    let (m, t_star) = if admissible {
        let m = remark_offset(params.alpha, mass0, j0);
        (Some(m), Some(m / (xi * mass0)))
    } else {
        (None, None)
    };
    Ok(Certificate {
        j0,
        params: *params,
        lambda0,
        xi,
        mass0,
        measure: grid.measure(),
        m,
        t_star,
        admissible,
        verdict,
    })
}

impl Certificate {
    /// Flat `key = value` pairs, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.16e}"));
        vec![
            ("admissible", self.admissible.to_string()),
            ("alpha", format!("{:.16e}", self.params.alpha)),
            ("beta", format!("{:.16e}", self.params.beta)),
            ("gamma", format!("{:.16e}", self.params.gamma)),
            ("lambda0", format!("{:.16e}", self.lambda0)),
            ("xi", format!("{:.16e}", self.xi)),
            ("J0", format!("{:.16e}", self.j0)),
            ("mass0", format!("{:.16e}", self.mass0)),
            ("measure", format!("{:.16e}", self.measure)),
            ("M", opt(self.m)),
            ("T_star", opt(self.t_star)),
            ("condition_worst_margin", format!("{:.16e}", self.verdict.worst_margin)),
        ]
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
