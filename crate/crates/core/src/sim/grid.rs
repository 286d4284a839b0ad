//! Uniform cell-centred radial grid in normalized minor radius.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SimError;

/// Smallest grid the finite-volume stencils are exercised on.
pub const MIN_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridParams {
    n_cells: usize,
    minor_radius_m: f64,
    major_radius_m: f64,
    b0_tesla: f64,
}

/// Cell-centred grid on `rho` in (0, 1) with spacing `1 / n_cells`.
///
/// Geometry is a circular cylinder of radius `a` bent into a torus of
/// major radius `R0`. Cell `i` spans faces `i * d_rho .. (i + 1) * d_rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridParams", into = "GridParams")]
pub struct RadialGrid {
    n_cells: usize,
    rho: Vec<f64>,
    minor_radius_m: f64,
    major_radius_m: f64,
    b0_tesla: f64,
}

impl TryFrom<GridParams> for RadialGrid {
    type Error = SimError;

    fn try_from(p: GridParams) -> Result<Self, SimError> {
        RadialGrid::new(p.n_cells, p.minor_radius_m, p.major_radius_m, p.b0_tesla)
    }
}

impl From<RadialGrid> for GridParams {
    fn from(g: RadialGrid) -> Self {
        GridParams {
            n_cells: g.n_cells,
            minor_radius_m: g.minor_radius_m,
            major_radius_m: g.major_radius_m,
            b0_tesla: g.b0_tesla,
        }
    }
}

impl RadialGrid {
    pub fn new(
        n_cells: usize,
        minor_radius_m: f64,
        major_radius_m: f64,
        b0_tesla: f64,
    ) -> Result<Self, SimError> {
        if n_cells < MIN_CELLS {
            return Err(SimError::InvalidGrid(format!(
                "n_cells must be >= {MIN_CELLS}, got {n_cells}"
            )));
        }
        for (name, v) in [
            ("minor_radius_m", minor_radius_m),
            ("major_radius_m", major_radius_m),
            ("b0_tesla", b0_tesla),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::InvalidGrid(format!("{name} must be positive, got {v}")));
            }
        }
        if minor_radius_m >= major_radius_m {
            return Err(SimError::InvalidGrid(
                "minor radius must be smaller than major radius".into(),
            ));
        }
        let d_rho = 1.0 / n_cells as f64;
        let rho = (0..n_cells).map(|i| (i as f64 + 0.5) * d_rho).collect();
        Ok(Self {
            n_cells,
            rho,
            minor_radius_m,
            major_radius_m,
            b0_tesla,
        })
    }

    /// ITER-like reference geometry on `n_cells` cells.
    pub fn iter_like(n_cells: usize) -> Result<Self, SimError> {
        Self::new(n_cells, 2.0, 6.2, 5.3)
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn minor_radius_m(&self) -> f64 {
        self.minor_radius_m
    }

    pub fn major_radius_m(&self) -> f64 {
        self.major_radius_m
    }

    pub fn b0_tesla(&self) -> f64 {
        self.b0_tesla
    }

    pub fn d_rho(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    /// Normalized radius of face `k` (`0..=n_cells`).
    pub fn face(&self, k: usize) -> f64 {
        k as f64 * self.d_rho()
    }

    /// Poloidal cross-section area of cell `i`, m².
    pub fn cell_area(&self, i: usize) -> f64 {
        let a = self.minor_radius_m;
        let (lo, hi) = (self.face(i), self.face(i + 1));
        PI * a * a * (hi * hi - lo * lo)
    }

    /// Toroidal volume of cell `i`, m³.
    pub fn cell_volume(&self, i: usize) -> f64 {
        2.0 * PI * self.major_radius_m * self.cell_area(i)
    }

    pub fn total_volume(&self) -> f64 {
        let a = self.minor_radius_m;
        2.0 * PI * self.major_radius_m * PI * a * a
    }

    /// Area integral of a cell-averaged profile.
    pub fn area_integral(&self, f: &[f64]) -> f64 {
        f.iter().enumerate().map(|(i, v)| v * self.cell_area(i)).sum()
    }

    /// Volume integral of a cell-averaged profile.
    pub fn volume_integral(&self, f: &[f64]) -> f64 {
        f.iter().enumerate().map(|(i, v)| v * self.cell_volume(i)).sum()
    }

    /// Linear interpolation of a cell-centred profile at `x`, extrapolating
    /// linearly from the two nearest centres outside `[rho_0, rho_{n-1}]`.
    pub fn interpolate(&self, f: &[f64], x: f64) -> f64 {
        let n = self.n_cells;
        let d = self.d_rho();
        let pos = (x / d - 0.5).clamp(0.0, (n - 1) as f64);
        let lo = (pos.floor() as usize).min(n - 2);
        let w = (x - self.rho[lo]) / d;
        f[lo] + w * (f[lo + 1] - f[lo])
    }
}
