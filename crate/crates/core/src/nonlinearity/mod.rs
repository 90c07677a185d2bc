//! Source terms `f` with exact antiderivatives `F(u) = ∫₀ᵘ f(s) ds`.

mod condition;

pub use condition::{
    check_condition_c, check_condition_ibb, check_condition_pp, check_inequality, search_condition_params,
    ConditionError, ConditionParams, ConditionVerdict, Inequality, Sampling, SearchGrid, EXP_ALPHA_CAP,
};

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearityError {
    #[error("exponent must be finite and greater than 1, got {0}")]
    InvalidExponent(f64),
    #[error("linear coefficient must be finite and non-negative, got {0}")]
    InvalidLinearCoefficient(f64),
    #[error("polynomial needs finite coefficients with a positive leading term")]
    InvalidPolynomial,
    #[error("f is not positive at u = {0}")]
    NotPositive(f64),
    #[error("evaluation overflowed at u = {0}")]
    Overflow(f64),
}

/// A source term `f` from one of the closed-form families.
///
/// Use the validating constructors; the variants are public so tests can
/// build degenerate surrogates such as `Polynomial { coeffs: vec![] }`
/// (`f ≡ 0`).
#[derive(Debug, Clone, PartialEq)]
pub enum Nonlinearity {
    /// `uᵖ`
    Power { p: f64 },
    /// `uᵖ + a·u`
    PowerPlusLinear { p: f64, a: f64 },
    /// `eᵘ − 1`
    ExpMinusOne,
    /// `Σ coeffs[k]·u^(k+1)`
    Polynomial { coeffs: Vec<f64> },
}

impl Nonlinearity {
    pub fn power(p: f64) -> Result<Self, NonlinearityError> {
        Nonlinearity::Power { p }.validated()
    }

    pub fn power_plus_linear(p: f64, a: f64) -> Result<Self, NonlinearityError> {
        Nonlinearity::PowerPlusLinear { p, a }.validated()
    }

    pub fn exp_minus_one() -> Self {
        Nonlinearity::ExpMinusOne
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self, NonlinearityError> {
        Nonlinearity::Polynomial { coeffs }.validated()
    }

    fn validated(self) -> Result<Self, NonlinearityError> {
        self.validate()?;
        Ok(self)
    }

    /// Checks the family parameters and that `f > 0` on a log-spaced
    /// sample of `(0, 10⁶]`.
    pub fn validate(&self) -> Result<(), NonlinearityError> {
        match self {
            Nonlinearity::Power { p } => check_exponent(*p)?,
            Nonlinearity::PowerPlusLinear { p, a } => {
                check_exponent(*p)?;
                if !(a.is_finite() && *a >= 0.0) {
                    return Err(NonlinearityError::InvalidLinearCoefficient(*a));
                }
            }
            Nonlinearity::ExpMinusOne => {}
            Nonlinearity::Polynomial { coeffs } => {
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(NonlinearityError::InvalidPolynomial);
                }
                match coeffs.iter().rev().find(|&&c| c != 0.0) {
                    Some(&lead) if lead > 0.0 => {}
                    _ => return Err(NonlinearityError::InvalidPolynomial),
                }
            }
        }
        for k in 0..=240 {
            let u = 10f64.powf(-6.0 + k as f64 * 0.05);
            let v = self.f(u);
            if !(v > 0.0) && v.is_finite() {
                return Err(NonlinearityError::NotPositive(u));
            }
        }
        Ok(())
    }

    /// `f(u)`. May be non-finite on overflow; see [`Nonlinearity::try_f`].
    pub fn f(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Power { p } => pow(u, *p),
            Nonlinearity::PowerPlusLinear { p, a } => pow(u, *p) + a * u,
            Nonlinearity::ExpMinusOne => u.exp_m1(),
            Nonlinearity::Polynomial { coeffs } => horner(coeffs, u) * u,
        }
    }

    /// `f` applied node-wise, `out[k] = f(u[k])`.
    pub fn f_into(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Nonlinearity::Power { p } if *p == 2.0 => out.iter_mut().zip(u).for_each(|(o, &v)| *o = v * v),
            Nonlinearity::Power { p } if *p == 3.0 => out.iter_mut().zip(u).for_each(|(o, &v)| *o = v * v * v),
            Nonlinearity::PowerPlusLinear { p, a } if *p == 2.0 => {
                out.iter_mut().zip(u).for_each(|(o, &v)| *o = v * v + a * v)
            }
            _ => out.iter_mut().zip(u).for_each(|(o, &v)| *o = self.f(v)),
        }
    }

    /// `f(u)`, reporting overflow as an error instead of a non-finite value.
    pub fn try_f(&self, u: f64) -> Result<f64, NonlinearityError> {
        let v = self.f(u);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(NonlinearityError::Overflow(u))
        }
    }

    /// `F(u) = ∫₀ᵘ f(s) ds`, with `F(0) = 0`.
    pub fn antiderivative(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Power { p } => u * pow(u, *p) / (p + 1.0),
            Nonlinearity::PowerPlusLinear { p, a } => u * pow(u, *p) / (p + 1.0) + 0.5 * a * u * u,
            Nonlinearity::ExpMinusOne => exp_m1_minus_u(u),
            Nonlinearity::Polynomial { coeffs } => {
                let integrated: Vec<f64> = coeffs.iter().enumerate().map(|(k, c)| c / (k as f64 + 2.0)).collect();
                horner(&integrated, u) * u * u
            }
        }
    }

    pub fn try_antiderivative(&self, u: f64) -> Result<f64, NonlinearityError> {
        let v = self.antiderivative(u);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(NonlinearityError::Overflow(u))
        }
    }

    /// `f′(u)`, the local Lipschitz scale used by the step-size controller.
    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Power { p } => p * pow(u, p - 1.0),
            Nonlinearity::PowerPlusLinear { p, a } => p * pow(u, p - 1.0) + a,
            Nonlinearity::ExpMinusOne => u.exp(),
            Nonlinearity::Polynomial { coeffs } => {
                let d: Vec<f64> = coeffs.iter().enumerate().map(|(k, c)| c * (k as f64 + 1.0)).collect();
                horner(&d, u)
            }
        }
    }

    /// `f` as a sum of monomials `(coefficient, exponent)`, or `None` for
    /// the exponential family.
    pub fn monomials(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Nonlinearity::Power { p } => Some(vec![(1.0, *p)]),
            Nonlinearity::PowerPlusLinear { p, a } => Some(vec![(1.0, *p), (*a, 1.0)]),
            Nonlinearity::ExpMinusOne => None,
            Nonlinearity::Polynomial { coeffs } => Some(
                coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c != 0.0)
                    .map(|(k, &c)| (c, k as f64 + 1.0))
                    .collect(),
            ),
        }
    }

    /// Largest `α` for which `αF(u) ≤ u f(u)` can hold as `u → ∞`:
    /// one plus the leading exponent. Unbounded for `eᵘ − 1`.
    pub fn alpha_cap(&self) -> Option<f64> {
        self.monomials()
            .map(|m| m.iter().map(|&(_, e)| e).fold(f64::NEG_INFINITY, f64::max) + 1.0)
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::Power { p } => write!(f, "u^{p}"),
            Nonlinearity::PowerPlusLinear { p, a } if *a == 1.0 => write!(f, "u^{p} + u"),
            Nonlinearity::PowerPlusLinear { p, a } => write!(f, "u^{p} + {a}*u"),
            Nonlinearity::ExpMinusOne => write!(f, "exp(u) - 1"),
            Nonlinearity::Polynomial { coeffs } => {
                let terms: Vec<String> = coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c != 0.0)
                    .map(|(k, &c)| match (k, c == 1.0) {
                        (0, true) => "u".to_string(),
                        (0, false) => format!("{c}*u"),
                        (_, true) => format!("u^{}", k + 1),
                        (_, false) => format!("{c}*u^{}", k + 1),
                    })
                    .collect();
                if terms.is_empty() {
                    write!(f, "0")
                } else {
                    write!(f, "{}", terms.join(" + "))
                }
            }
        }
    }
}

fn check_exponent(p: f64) -> Result<(), NonlinearityError> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(NonlinearityError::InvalidExponent(p))
    }
}

/// `uᵖ`; integer powers use `powi`, fractional powers of negative states use
/// the odd extension so the solver never sees NaN.
pub(crate) fn pow(u: f64, p: f64) -> f64 {
    if p == 2.0 {
        u * u
    } else if p == 3.0 {
        u * u * u
    } else if p.fract() == 0.0 && p.abs() < i32::MAX as f64 {
        u.powi(p as i32)
    } else if u >= 0.0 {
        u.powf(p)
    } else {
        -(-u).powf(p)
    }
}

fn horner(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
}

/// `eᵘ − 1 − u` without cancellation near zero.
fn exp_m1_minus_u(u: f64) -> f64 {
    if u.abs() > 0.5 {
        return u.exp_m1() - u;
    }
    let mut term = u * u / 2.0;
    let mut sum = term;
    let mut k = 3.0;
    while term.abs() > f64::EPSILON * 1e-3 * sum.abs() {
        term *= u / k;
        sum += term;
        k += 1.0;
    }
    sum
}
