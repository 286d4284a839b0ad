//! Simplified 1D radial transport model of a tokamak plasma.
//!
//! State variables (ion and electron temperature, electron density, current
//! density) live on a uniform cell-centred grid in normalized radius. Each
//! substep solves the transport equations implicitly; derived performance
//! quantities are computed from the resulting state on demand.

mod config;
mod derived;
mod grid;
mod profiles;
mod state;
mod transport;
pub mod tridiag;

pub use config::{Deposition, ModeValues, Shaping, SimConfig};
pub use derived::{
    compute_derived, dt_reactivity, safety_factor_profile, tau_ipb98, DerivedQuantities, Q95_RHO,
};
pub use grid::{RadialGrid, MIN_CELLS};
pub use profiles::{InitialProfiles, ProfileSet, ProfileSpec};
pub use state::{enclosed_current, init_state, Controls, PlasmaState};
pub use transport::{advance, auto_substep_size, substep, AdvanceError, SubstepMode, SubstepStats};

/// Vacuum permeability, H/m.
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;

/// Energy density of 1e19 m⁻³ at 1 keV, MJ/m³.
pub const KEV_DENSITY_MJ: f64 = 1.602_176_634e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("profile {field} has non-positive value {value} at cell {index}")]
    NonPositiveProfile {
        field: &'static str,
        index: usize,
        value: f64,
    },
    #[error("profile {field} is not finite at cell {index}")]
    NonFinite { field: &'static str, index: usize },
    #[error("profile {field} has {found} cells, grid has {expected}")]
    GridMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("numerical blowup at t = {t} s: {reason}")]
    NumericalBlowup { t: f64, reason: String },
    #[error("no enclosed current at rho = {rho}")]
    ZeroCurrent { rho: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid controls: {0}")]
    InvalidControls(String),
    #[error("invalid step: {0}")]
    InvalidStep(String),
}
