//! Grid-independent profile descriptions used by configuration files.

use serde::{Deserialize, Serialize};

use super::grid::RadialGrid;
use super::SimError;

/// A radial profile shape, evaluated at cell centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Uniform { value: f64 },
    /// `edge + (core - edge) * (1 - rho^2)^exponent`
    Parabolic { core: f64, edge: f64, exponent: f64 },
    /// Explicit cell values; the length must match the grid.
    Values { values: Vec<f64> },
}

impl ProfileSpec {
    pub fn evaluate(&self, grid: &RadialGrid) -> Vec<f64> {
        match self {
            ProfileSpec::Uniform { value } => vec![*value; grid.n_cells()],
            ProfileSpec::Parabolic {
                core,
                edge,
                exponent,
            } => grid
                .rho()
                .iter()
                .map(|r| edge + (core - edge) * (1.0 - r * r).powf(*exponent))
                .collect(),
            ProfileSpec::Values { values } => values.clone(),
        }
    }
}

/// Initial plasma profiles plus the current the `j` shape is scaled to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSet {
    pub t_i: ProfileSpec,
    pub t_e: ProfileSpec,
    pub n_e: ProfileSpec,
    pub j_shape: ProfileSpec,
    pub i_p_ma: f64,
}

impl ProfileSet {
    /// Low-current, cold start of the ITER hybrid ramp-up.
    pub fn iter_hybrid_start() -> Self {
        Self {
            t_i: ProfileSpec::Parabolic {
                core: 1.5,
                edge: 0.2,
                exponent: 1.0,
            },
            t_e: ProfileSpec::Parabolic {
                core: 1.5,
                edge: 0.2,
                exponent: 1.0,
            },
            n_e: ProfileSpec::Parabolic {
                core: 3.0,
                edge: 1.5,
                exponent: 1.0,
            },
            j_shape: ProfileSpec::Parabolic {
                core: 1.0,
                edge: 0.0,
                exponent: 1.5,
            },
            i_p_ma: 3.0,
        }
    }

    pub fn resolve(&self, grid: &RadialGrid) -> InitialProfiles {
        InitialProfiles {
            t_i: self.t_i.evaluate(grid),
            t_e: self.t_e.evaluate(grid),
            n_e: self.n_e.evaluate(grid),
            j: self.j_shape.evaluate(grid),
            i_p_ma: self.i_p_ma,
        }
    }
}

/// Concrete cell values handed to [`super::init_state`].
#[derive(Debug, Clone, PartialEq)]
pub struct InitialProfiles {
    pub t_i: Vec<f64>,
    pub t_e: Vec<f64>,
    pub n_e: Vec<f64>,
    /// Current-density shape; rescaled so that its area integral is `i_p_ma`.
    pub j: Vec<f64>,
    pub i_p_ma: f64,
}

impl InitialProfiles {
    pub(crate) fn check(&self, grid: &RadialGrid) -> Result<(), SimError> {
        let n = grid.n_cells();
        for (field, v) in [
            ("t_i", &self.t_i),
            ("t_e", &self.t_e),
            ("n_e", &self.n_e),
            ("j", &self.j),
        ] {
            if v.len() != n {
                return Err(SimError::GridMismatch {
                    field,
                    expected: n,
                    found: v.len(),
                });
            }
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                return Err(SimError::NonFinite { field, index: i });
            }
        }
        for (field, v) in [("t_i", &self.t_i), ("t_e", &self.t_e), ("n_e", &self.n_e)] {
            if let Some(i) = v.iter().position(|&x| x <= 0.0) {
                return Err(SimError::NonPositiveProfile {
                    field,
                    index: i,
                    value: v[i],
                });
            }
        }
        if !(self.i_p_ma.is_finite() && self.i_p_ma >= 0.0) {
            return Err(SimError::InvalidControls(format!(
                "initial i_p must be finite and >= 0, got {}",
                self.i_p_ma
            )));
        }
        Ok(())
    }
}
