//! Spatial domains, uniform Dirichlet grids and grid functions.
//!
//! A [`Field`] stores interior nodal values only; the boundary is zero by
//! construction. The Laplacian stencil, the quadrature and the Dirichlet
//! energy are paired so that summation by parts is exact:
//!
//! ```text
//! integrate(u * lap(u)) == -dirichlet_energy(u)     (up to round-off)
//! ```

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("interior point count must be at least 2 per axis, got {0}")]
    TooFewPoints(usize),
    #[error("domain side lengths must be positive and finite")]
    InvalidDomain,
    #[error("field belongs to a different grid")]
    GridMismatch,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },
}

/// The spatial region Ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval { length: f64 },
    Rectangle { lx: f64, ly: f64 },
}

impl Domain {
    pub fn interval(length: f64) -> Result<Self, GridError> {
        let d = Domain::Interval { length };
        d.validate()?;
        Ok(d)
    }

    pub fn rectangle(lx: f64, ly: f64) -> Result<Self, GridError> {
        let d = Domain::Rectangle { lx, ly };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let ok = |l: f64| l.is_finite() && l > 0.0;
        let valid = match *self {
            Domain::Interval { length } => ok(length),
            Domain::Rectangle { lx, ly } => ok(lx) && ok(ly),
        };
        if valid {
            Ok(())
        } else {
            Err(GridError::InvalidDomain)
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
        }
    }

    /// Exact Lebesgue measure of the continuum domain.
    pub fn measure(&self) -> f64 {
        match *self {
            Domain::Interval { length } => length,
            Domain::Rectangle { lx, ly } => lx * ly,
        }
    }
}

/// Uniform grid over a [`Domain`] with `nx` (and `ny`) interior nodes.
///
/// For intervals `ny == 1` and `hy` is unused (set to 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    domain: Domain,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
}

impl Grid {
    /// Builds a grid with `n` interior nodes along every axis, `h = L/(n+1)`.
    pub fn new(domain: Domain, n: usize) -> Result<Self, GridError> {
        match domain {
            Domain::Interval { .. } => Self::with_counts(domain, n, 1),
            Domain::Rectangle { .. } => Self::with_counts(domain, n, n),
        }
    }

    /// Builds a grid with independent interior counts per axis. `ny` is
    /// ignored for intervals.
    pub fn with_counts(domain: Domain, nx: usize, ny: usize) -> Result<Self, GridError> {
        domain.validate()?;
        if nx < 2 {
            return Err(GridError::TooFewPoints(nx));
        }
        match domain {
            Domain::Interval { length } => Ok(Grid {
                domain,
                nx,
                ny: 1,
                hx: length / (nx as f64 + 1.0),
                hy: 1.0,
            }),
            Domain::Rectangle { lx, ly } => {
                if ny < 2 {
                    return Err(GridError::TooFewPoints(ny));
                }
                Ok(Grid {
                    domain,
                    nx,
                    ny,
                    hx: lx / (nx as f64 + 1.0),
                    hy: ly / (ny as f64 + 1.0),
                })
            }
        }
    }

    /// One interior node at the midpoint of an interval.
    ///
    /// Bypasses the `n >= 2` rule; used for stencil checks and for the
    /// diffusion-free "ODE mode" of the time stepper.
    pub fn single_node(length: f64) -> Result<Self, GridError> {
        let domain = Domain::interval(length)?;
        Ok(Grid {
            domain,
            nx: 1,
            ny: 1,
            hx: length / 2.0,
            hy: 1.0,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    /// Number of interior nodes.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of a single node.
    pub fn cell_measure(&self) -> f64 {
        match self.domain {
            Domain::Interval { .. } => self.hx,
            Domain::Rectangle { .. } => self.hx * self.hy,
        }
    }

    /// Discrete measure of Ω, i.e. `integrate(1)`.
    pub fn measure(&self) -> f64 {
        self.cell_measure() * self.len() as f64
    }

    /// Coordinates of interior node `k` (row-major, x fastest). For
    /// intervals the second coordinate is 0.
    pub fn position(&self, k: usize) -> [f64; 2] {
        let i = k % self.nx;
        let j = k / self.nx;
        match self.domain {
            Domain::Interval { .. } => [(i + 1) as f64 * self.hx, 0.0],
            Domain::Rectangle { .. } => [(i + 1) as f64 * self.hx, (j + 1) as f64 * self.hy],
        }
    }

    pub fn zeros(&self) -> Field {
        Field {
            grid: *self,
            values: vec![0.0; self.len()],
        }
    }

    pub fn constant(&self, value: f64) -> Result<Field, GridError> {
        Field::new(*self, vec![value; self.len()])
    }

    /// Samples `g` at every interior node.
    pub fn sample<G>(&self, g: G) -> Result<Field, GridError>
    where
        G: Fn([f64; 2]) -> f64,
    {
        let values = (0..self.len()).map(|k| g(self.position(k))).collect();
        Field::new(*self, values)
    }

    /// Applies the discrete Dirichlet Laplacian to `u`.
    pub fn apply_laplacian(&self, u: &Field) -> Result<Field, GridError> {
        self.check(u)?;
        Ok(u.laplacian())
    }

    /// Composite trapezoid rule with zero boundary values.
    pub fn integrate(&self, w: &Field) -> Result<f64, GridError> {
        self.check(w)?;
        Ok(w.integral())
    }

    /// `∫|∇u|²` summed over every grid edge, including edges to the boundary.
    pub fn dirichlet_energy(&self, u: &Field) -> Result<f64, GridError> {
        self.check(u)?;
        Ok(u.dirichlet_energy())
    }

    pub fn check(&self, u: &Field) -> Result<(), GridError> {
        if u.grid != *self {
            return Err(GridError::GridMismatch);
        }
        Ok(())
    }

    /// In-place `out = lap(u)` on raw slices; `u` and `out` have `self.len()` entries.
    pub(crate) fn laplacian_into(&self, u: &[f64], out: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        let ihx2 = 1.0 / (self.hx * self.hx);
        // Differences of neighbours first: they are exact for nearby values,
        // which keeps the stencil accurate on fine grids.
        for j in 0..ny {
            let row = &u[j * nx..(j + 1) * nx];
            for i in 0..nx {
                let c = row[i];
                let left = if i > 0 { row[i - 1] } else { 0.0 };
                let right = if i + 1 < nx { row[i + 1] } else { 0.0 };
                out[j * nx + i] = ((left - c) + (right - c)) * ihx2;
            }
        }
        if self.dimension() == 2 {
            let ihy2 = 1.0 / (self.hy * self.hy);
            for j in 0..ny {
                for i in 0..nx {
                    let k = j * nx + i;
                    let c = u[k];
                    let down = if j > 0 { u[k - nx] } else { 0.0 };
                    let up = if j + 1 < ny { u[k + nx] } else { 0.0 };
                    out[k] += ((down - c) + (up - c)) * ihy2;
                }
            }
        }
    }

    pub(crate) fn dirichlet_energy_raw(&self, u: &[f64]) -> f64 {
        let (nx, ny) = (self.nx, self.ny);
        let mut sx = 0.0;
        for j in 0..ny {
            let row = &u[j * nx..(j + 1) * nx];
            let mut prev = 0.0;
            for &v in row {
                sx += (v - prev) * (v - prev);
                prev = v;
            }
            sx += prev * prev;
        }
        if self.dimension() == 1 {
            return sx / self.hx;
        }
        let mut sy = 0.0;
        for i in 0..nx {
            let mut prev = 0.0;
            for j in 0..ny {
                let v = u[j * nx + i];
                sy += (v - prev) * (v - prev);
                prev = v;
            }
            sy += prev * prev;
        }
        sx * self.hy / self.hx + sy * self.hx / self.hy
    }
}

/// A grid function: interior nodal values, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GridError::NonFinite { index, value });
        }
        Ok(Field { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Result<Field, GridError> {
        Field::new(self.grid, self.values.iter().map(|v| v * factor).collect())
    }

    /// Applies `g` nodewise.
    pub fn map<G: Fn(f64) -> f64>(&self, g: G) -> Result<Field, GridError> {
        Field::new(self.grid, self.values.iter().map(|&v| g(v)).collect())
    }

    pub fn laplacian(&self) -> Field {
        let mut out = vec![0.0; self.values.len()];
        self.grid.laplacian_into(&self.values, &mut out);
        Field {
            grid: self.grid,
            values: out,
        }
    }

    pub fn integral(&self) -> f64 {
        self.grid.cell_measure() * self.values.iter().sum::<f64>()
    }

    /// `∫ u²`.
    pub fn l2_mass(&self) -> f64 {
        self.grid.cell_measure() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    /// Quadrature inner product `∫ u v`.
    pub fn inner(&self, other: &Field) -> Result<f64, GridError> {
        self.grid.check(other)?;
        Ok(self.grid.cell_measure()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>())
    }

    pub fn dirichlet_energy(&self) -> f64 {
        self.grid.dirichlet_energy_raw(&self.values)
    }
}
