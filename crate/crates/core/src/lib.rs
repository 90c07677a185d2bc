//! Numerical laboratory for finite-time blow-up of semilinear heat equations
//!
//! ```text
//! u_t = Δu + f(u)  in Ω,   u = 0 on ∂Ω,   u(·, 0) = u₀ ≥ 0
//! ```
//!
//! on intervals and rectangles. The crate provides
//!
//! - [`grid`]: uniform Dirichlet grids, the 3/5-point Laplacian and the
//!   matching quadrature and Dirichlet energy;
//! - [`spectral`]: the principal eigenpair `(λ₀, φ₀)` of `−Δʰ`;
//! - [`nonlinearity`]: closed-form source terms and the structural
//!   conditions (C), (PP), (IBB), with a search for admissible `(α, β, γ)`;
//! - [`certificate`]: `J(0)`, the offset `M` and the blow-up time bound
//!   `T* ≤ M / (ξ ∫u₀²)`;
//! - [`evolution`]: IMEX time stepping to numerical blow-up with monitors of
//!   `∫u²`, `J(t)`, `I(t)` and the concavity defect.

pub mod certificate;
pub mod evolution;
pub mod grid;
pub mod linalg;
pub mod nonlinearity;
pub mod spectral;
pub mod trajectory;

pub use certificate::{blow_up_certificate, blow_up_certificate_with, initial_energy_j0, Certificate, CertificateError};
pub use evolution::{run_until_blowup, step_imex, step_imex_with, EvolutionError, SolverConfig};
pub use grid::{Domain, Field, Grid, GridError};
pub use nonlinearity::{ConditionParams, ConditionVerdict, Nonlinearity, NonlinearityError, Sampling};
pub use spectral::{analytic_lambda0, principal_eigenpair, rayleigh_quotient, Eigenpair, SpectralError};
pub use trajectory::{concavity_defect, minimal_offset, Outcome, Trajectory};
