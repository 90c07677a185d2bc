//! Structural conditions on `f` of the form
//!
//! ```text
//! α F(u) ≤ u f(u) + β u² + γ,   u > 0
//! ```
//!
//! Condition (C) binds `β ≤ (α − 2)λ₀/2`; (PP) is the case `β = γ = 0`,
//! `α = 2 + ε`; (IBB) is `β = 0`, `α = 2 + ε`, `γ = c²`.
//!
//! Each inequality is decided by dense log-spaced sampling of the margin
//! `m(u) = u f + β u² + γ − α F` on `(0, u_max]` together with a
//! closed-form comparison of the leading terms as `u → ∞`.

use thiserror::Error;

use super::{pow, Nonlinearity};

/// Search cap on `α` for `eᵘ − 1`, whose growth admits any `α`.
pub const EXP_ALPHA_CAP: f64 = 8.0;

/// Margins whose magnitude is below this fraction of the evaluated terms
/// are round-off and count as zero.
const ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditionError {
    #[error("beta = {beta} exceeds (alpha - 2) * lambda0 / 2 = {bound}")]
    BetaConstraintViolated { beta: f64, bound: f64 },
    #[error("invalid sample range: need u_max > 0, at least 100 samples and a positive decade span")]
    InvalidSampleRange,
    #[error("invalid condition parameters: {0}")]
    InvalidParams(String),
    #[error("lambda0 must be positive and finite, got {0}")]
    InvalidLambda(f64),
}

/// `(α, β, γ)` of condition (C): `α > 2`, `β > 0`, `γ > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ConditionParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self, ConditionError> {
        let p = ConditionParams { alpha, beta, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ConditionError> {
        let bad = |what: &str| Err(ConditionError::InvalidParams(what.to_string()));
        if !(self.alpha.is_finite() && self.alpha > 2.0) {
            return bad("alpha must exceed 2");
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad("beta must be positive");
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        Ok(())
    }

    /// `ξ = √(α/2) − 1`.
    pub fn xi(&self) -> f64 {
        (self.alpha / 2.0).sqrt() - 1.0
    }

    /// Upper bound on `β` for a domain with principal eigenvalue `lambda0`.
    pub fn beta_bound(alpha: f64, lambda0: f64) -> f64 {
        (alpha - 2.0) * lambda0 / 2.0
    }
}

/// Log-spaced sample points `u_max·10^(−decades) … u_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub u_max: f64,
    pub n_samples: usize,
    pub decades: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            u_max: 1e6,
            n_samples: 4096,
            decades: 12.0,
        }
    }
}

impl Sampling {
    pub fn new(u_max: f64, n_samples: usize) -> Result<Self, ConditionError> {
        let s = Sampling {
            u_max,
            n_samples,
            ..Sampling::default()
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ConditionError> {
        if self.u_max.is_finite() && self.u_max > 0.0 && self.n_samples >= 100 && self.decades > 0.0 {
            Ok(())
        } else {
            Err(ConditionError::InvalidSampleRange)
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let last = (self.n_samples - 1) as f64;
        (0..self.n_samples).map(move |k| self.u_max * 10f64.powf(self.decades * (k as f64 / last - 1.0)))
    }
}

/// `α F(u) ≤ u f(u) + β u² + γ`, with `α`, `β`, `γ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inequality {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Inequality {
    /// `m(u) = u f + β u² + γ − α F`, snapped to zero when it is round-off.
    /// `None` if the terms overflow.
    ///
    /// Power-type families are evaluated from collected monomial
    /// coefficients, so exact cancellations such as `α = p + 1` for `uᵖ`
    /// survive at large `u`; `eᵘ − 1` uses `(u − α)(eᵘ − 1) + αu`.
    pub fn margin(&self, nl: &Nonlinearity, u: f64) -> Option<f64> {
        let (m, scale) = match self.terms(nl) {
            Some(terms) => terms.iter().fold((0.0, 0.0), |(m, s), &(e, c, mag)| {
                let x = pow(u, e);
                (m + c * x, s + mag * x.abs())
            }),
            None => {
                let em1 = u.exp_m1();
                let m = (u - self.alpha) * em1 + self.alpha * u + self.beta * u * u + self.gamma;
                let scale = (u * em1).abs() + self.alpha * (em1.abs() + u.abs()) + self.beta * u * u + self.gamma;
                (m, scale)
            }
        };
        if !m.is_finite() || !scale.is_finite() {
            return None;
        }
        if m < 0.0 && -m <= ROUNDOFF * scale {
            return Some(0.0);
        }
        Some(m)
    }

    /// Margin as a sum of powers `(exponent, coefficient, magnitude)` in
    /// decreasing exponent order, where magnitude is the sum of absolute
    /// contributions before cancellation. `None` for `eᵘ − 1`.
    fn terms(&self, nl: &Nonlinearity) -> Option<Vec<(f64, f64, f64)>> {
        // m(u) = Σ c(1 − α/(e+1)) u^(e+1) + β u² + γ
        let mut raw: Vec<(f64, f64, f64)> = nl
            .monomials()?
            .iter()
            .map(|&(c, e)| {
                let k = e + 1.0;
                (k, c * (1.0 - self.alpha / k), c.abs() * (1.0 + self.alpha / k))
            })
            .collect();
        raw.push((2.0, self.beta, self.beta.abs()));
        raw.push((0.0, self.gamma, self.gamma.abs()));
        raw.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut merged: Vec<(f64, f64, f64)> = Vec::new();
        for (e, c, mag) in raw {
            match merged.last_mut() {
                Some(last) if last.0 == e => {
                    last.1 += c;
                    last.2 += mag;
                }
                _ => merged.push((e, c, mag)),
            }
        }
        Some(merged)
    }

    /// Sign of the margin as `u → ∞`, from the leading non-cancelling term.
    /// `ueᵘ` beats `αeᵘ` for any `α`, so the exponential family always passes.
    pub fn asymptotic_ok(&self, nl: &Nonlinearity) -> bool {
        let Some(terms) = self.terms(nl) else {
            return true;
        };
        for (_, c, mag) in terms {
            if c.abs() > ROUNDOFF * mag {
                return c > 0.0;
            }
        }
        true
    }
}

/// Outcome of checking an inequality over `u > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionVerdict {
    pub satisfied: bool,
    /// Smallest sampled margin.
    pub worst_margin: f64,
    /// A point where the inequality fails, when it does.
    pub witness_u: Option<f64>,
    pub asymptotic_ok: bool,
}

/// Decides `ineq` for `nl` by sampling plus the asymptotic comparison.
pub fn check_inequality(nl: &Nonlinearity, ineq: &Inequality, sampling: &Sampling) -> Result<ConditionVerdict, ConditionError> {
    sampling.validate()?;
    let mut worst = f64::INFINITY;
    let mut worst_u = None;
    for u in sampling.points() {
        // Overflowing samples lie in the range covered by the asymptotic test.
        if let Some(m) = ineq.margin(nl, u) {
            if m < worst {
                worst = m;
                worst_u = Some(u);
            }
        }
    }
    let asymptotic_ok = ineq.asymptotic_ok(nl);
    let mut witness_u = if worst < 0.0 { worst_u } else { None };
    if !asymptotic_ok && witness_u.is_none() {
        // The violation lies beyond u_max; walk outwards until it shows.
        let mut u = sampling.u_max;
        for _ in 0..1100 {
            u *= 2.0;
            match ineq.margin(nl, u) {
                Some(m) if m < 0.0 => {
                    worst = worst.min(m);
                    witness_u = Some(u);
                    break;
                }
                Some(_) => {}
                None => break,
            }
        }
    }
    Ok(ConditionVerdict {
        satisfied: worst >= 0.0 && asymptotic_ok,
        worst_margin: worst,
        witness_u,
        asymptotic_ok,
    })
}

/// Condition (C), including the hard constraint `β ≤ (α − 2)λ₀/2`.
///
/// The boundary `β = (α − 2)λ₀/2` is accepted.
pub fn check_condition_c(
    nl: &Nonlinearity,
    params: &ConditionParams,
    lambda0: f64,
    sampling: &Sampling,
) -> Result<ConditionVerdict, ConditionError> {
    params.validate()?;
    if !(lambda0.is_finite() && lambda0 > 0.0) {
        return Err(ConditionError::InvalidLambda(lambda0));
    }
    let bound = ConditionParams::beta_bound(params.alpha, lambda0);
    if params.beta > bound * (1.0 + 1e-14) {
        return Err(ConditionError::BetaConstraintViolated {
            beta: params.beta,
            bound,
        });
    }
    sampling.validate()?;
    let ineq = Inequality {
        alpha: params.alpha,
        beta: params.beta,
        gamma: params.gamma,
    };
    check_inequality(nl, &ineq, sampling)
}

/// `(2 + ε) F(u) ≤ u f(u)`.
pub fn check_condition_pp(nl: &Nonlinearity, epsilon: f64, sampling: &Sampling) -> Result<ConditionVerdict, ConditionError> {
    check_epsilon(epsilon)?;
    let ineq = Inequality {
        alpha: 2.0 + epsilon,
        beta: 0.0,
        gamma: 0.0,
    };
    check_inequality(nl, &ineq, sampling)
}

/// `(2 + ε) F(u) ≤ u f(u) + c²`.
pub fn check_condition_ibb(nl: &Nonlinearity, epsilon: f64, c: f64, sampling: &Sampling) -> Result<ConditionVerdict, ConditionError> {
    check_epsilon(epsilon)?;
    if !c.is_finite() {
        return Err(ConditionError::InvalidParams("c must be finite".into()));
    }
    let ineq = Inequality {
        alpha: 2.0 + epsilon,
        beta: 0.0,
        gamma: c * c,
    };
    check_inequality(nl, &ineq, sampling)
}

fn check_epsilon(epsilon: f64) -> Result<(), ConditionError> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(ConditionError::InvalidParams("epsilon must be positive".into()))
    }
}

/// Candidate sets for [`search_condition_params`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    /// `α` runs over `2 + (cap − 2)·j/alpha_steps`, `j = alpha_steps … 1`.
    pub alpha_steps: usize,
    /// Fractions of `(α − 2)λ₀/2`, tried largest first.
    pub beta_fractions: Vec<f64>,
    /// Tried smallest first.
    pub gammas: Vec<f64>,
}

impl Default for SearchGrid {
    fn default() -> Self {
        SearchGrid {
            alpha_steps: 40,
            beta_fractions: vec![1.0, 0.75, 0.5, 0.25, 0.1, 0.01],
            gammas: (-3..=6).map(|k| 10f64.powi(k)).collect(),
        }
    }
}

/// Finds `(α, β, γ)` satisfying (C) with the largest `α`, then the largest
/// `β`, then the smallest `γ`. `Ok(None)` when no candidate passes.
pub fn search_condition_params(
    nl: &Nonlinearity,
    lambda0: f64,
    sampling: &Sampling,
    grid: &SearchGrid,
) -> Result<Option<ConditionParams>, ConditionError> {
    if !(lambda0.is_finite() && lambda0 > 0.0) {
        return Err(ConditionError::InvalidLambda(lambda0));
    }
    sampling.validate()?;
    let cap = nl.alpha_cap().unwrap_or(EXP_ALPHA_CAP);
    if cap <= 2.0 {
        return Ok(None);
    }
    let steps = grid.alpha_steps.max(1);
    let mut fractions = grid.beta_fractions.clone();
    fractions.sort_by(|a, b| b.total_cmp(a));
    let mut gammas = grid.gammas.clone();
    gammas.sort_by(f64::total_cmp);

    for j in (1..=steps).rev() {
        let alpha = if j == steps {
            cap
        } else {
            2.0 + (cap - 2.0) * j as f64 / steps as f64
        };
        let bound = ConditionParams::beta_bound(alpha, lambda0);
        for &frac in fractions.iter().filter(|&&f| f > 0.0 && f <= 1.0) {
            let beta = bound * frac;
            for &gamma in gammas.iter().filter(|&&g| g > 0.0) {
                let params = ConditionParams { alpha, beta, gamma };
                let ineq = Inequality { alpha, beta, gamma };
                if !ineq.asymptotic_ok(nl) {
                    break;
                }
                if check_condition_c(nl, &params, lambda0, sampling)?.satisfied {
                    return Ok(Some(params));
                }
            }
        }
    }
    Ok(None)
}
