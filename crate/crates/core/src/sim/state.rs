use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::grid::RadialGrid;
use super::profiles::InitialProfiles;
use super::{SimError, MU0};

/// Plasma state on the radial grid.
///
/// Units: temperatures keV, density 1e19 m⁻³, current density MA/m²,
/// poloidal flux Wb (zero on axis).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlasmaState {
    pub t: f64,
    pub t_i: Vec<f64>,
    pub t_e: Vec<f64>,
    pub n_e: Vec<f64>,
    pub j: Vec<f64>,
    pub psi: Vec<f64>,
}

impl PlasmaState {
    /// Current density in the innermost cell, the discrete stand-in for the
    /// on-axis value.
    pub fn central_current_density(&self) -> f64 {
        self.j[0]
    }

    pub fn total_current(&self, grid: &RadialGrid) -> f64 {
        grid.area_integral(&self.j)
    }

    /// `sum_i 1.5 (n_e T_e + n_i T_i) V_i` in 1e19 keV units.
    pub fn thermal_content(&self, config: &SimConfig) -> f64 {
        let dil = config.ion_dilution();
        let w: Vec<f64> = (0..self.t_e.len())
            .map(|i| 1.5 * self.n_e[i] * (self.t_e[i] + dil * self.t_i[i]))
            .collect();
        config.grid.volume_integral(&w)
    }

    pub fn particle_content(&self, grid: &RadialGrid) -> f64 {
        grid.volume_integral(&self.n_e)
    }
}

/// Actuator values applied over one control interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    /// Total plasma current, MA.
    pub i_p: f64,
    /// Neutral-beam power, MW.
    pub p_nbi: f64,
    /// Electron-cyclotron power, MW.
    pub p_ecrh: f64,
}

impl Controls {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [("i_p", self.i_p), ("p_nbi", self.p_nbi), ("p_ecrh", self.p_ecrh)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::InvalidControls(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn external_power(&self) -> f64 {
        self.p_nbi + self.p_ecrh
    }
}

/// Builds `s_0` from explicit profiles, scaling `j` to carry `i_p_ma`.
pub fn init_state(config: &SimConfig, profiles: &InitialProfiles) -> Result<PlasmaState, SimError> {
    let grid = &config.grid;
    profiles.check(grid)?;
    let shape_current = grid.area_integral(&profiles.j);
    let j: Vec<f64> = if profiles.i_p_ma == 0.0 {
        vec![0.0; grid.n_cells()]
    } else {
        if !(shape_current.is_finite() && shape_current > 0.0) {
            return Err(SimError::ZeroCurrent { rho: 1.0 });
        }
        let scale = profiles.i_p_ma / shape_current;
        profiles.j.iter().map(|v| v * scale).collect()
    };
    let psi = poloidal_flux(grid, &j);
    Ok(PlasmaState {
        t: 0.0,
        t_i: profiles.t_i.clone(),
        t_e: profiles.t_e.clone(),
        n_e: profiles.n_e.clone(),
        j,
        psi,
    })
}

/// Current enclosed by each face, MA (`n_cells + 1` entries, first is 0).
pub(crate) fn face_currents(grid: &RadialGrid, j: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(j.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for (i, v) in j.iter().enumerate() {
        acc += v * grid.cell_area(i);
        out.push(acc);
    }
    out
}

/// Current enclosed within normalized radius `x`, treating `j` as constant
/// over each cell. Exact for the piecewise-constant representation.
pub fn enclosed_current(grid: &RadialGrid, j: &[f64], x: f64) -> f64 {
    let a = grid.minor_radius_m();
    let x = x.clamp(0.0, 1.0);
    let cell = ((x / grid.d_rho()) as usize).min(grid.n_cells() - 1);
    let below: f64 = (0..cell).map(|i| j[i] * grid.cell_area(i)).sum();
    let lo = grid.face(cell);
    below + j[cell] * PI * a * a * (x * x - lo * lo)
}

/// `psi(rho) = mu0 R0 int_0^rho I_enc(r) / r dr`, integrated analytically
/// cell by cell for piecewise-constant `j`, evaluated at cell centres.
pub(crate) fn poloidal_flux(grid: &RadialGrid, j: &[f64]) -> Vec<f64> {
    let a = grid.minor_radius_m();
    let r0 = grid.major_radius_m();
    let faces = face_currents(grid, j);
    // integral of I_enc / rho over [lo, x] inside cell i
    let partial = |i: usize, x: f64| -> f64 {
        let lo = grid.face(i);
        let jc = j[i] * PI * a * a;
        if lo == 0.0 {
            jc * x * x / 2.0
        } else {
            let l = (x / lo).ln();
            faces[i] * l + jc * ((x * x - lo * lo) / 2.0 - lo * lo * l)
        }
    };
    let mut out = Vec::with_capacity(j.len());
    let mut at_face = 0.0;
    for (i, &rc) in grid.rho().iter().enumerate() {
        out.push(MU0 * r0 * 1e6 * (at_face + partial(i, rc)));
        at_face += partial(i, grid.face(i + 1));
    }
    out
}
