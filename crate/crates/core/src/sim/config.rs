//! Transport-model coefficients and numerical settings.

use serde::{Deserialize, Serialize};

use super::grid::RadialGrid;
use super::profiles::ProfileSpec;

/// A coefficient that takes a different value in L-mode and H-mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeValues {
    pub l_mode: f64,
    pub h_mode: f64,
}

impl ModeValues {
    pub fn at(&self, h_mode: bool) -> f64 {
        if h_mode {
            self.h_mode
        } else {
            self.l_mode
        }
    }
}

/// Gaussian power deposition `exp(-((rho - center) / width)^2)`, normalized
/// to unit volume integral on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deposition {
    pub center: f64,
    pub width: f64,
}

impl Deposition {
    /// Power density per MW injected, MW/m³.
    pub fn shape(&self, grid: &RadialGrid) -> Vec<f64> {
        let raw: Vec<f64> = grid
            .rho()
            .iter()
            .map(|r| (-((r - self.center) / self.width).powi(2)).exp())
            .collect();
        let norm = grid.volume_integral(&raw);
        raw.into_iter().map(|v| v / norm).collect()
    }
}

/// Everything the transport surrogate needs besides state and controls.
/// Plasma cross-section shape, used to correct the cylindrical safety
/// factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shaping {
    pub elongation: f64,
    pub triangularity: f64,
}

impl Shaping {
    /// Multiplier on the circular-cylinder q: shaping term times the
    /// toroidal correction for inverse aspect ratio `eps`.
    pub fn q_factor(&self, eps: f64) -> f64 {
        let (k, d) = (self.elongation, self.triangularity);
        let shape = 0.5 * (1.0 + k * k * (1.0 + 2.0 * d * d - 1.2 * d * d * d));
        let toroidal = (1.17 - 0.65 * eps) / ((1.0 - eps * eps) * (1.0 - eps * eps));
        shape * toroidal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub grid: RadialGrid,
    /// `None` keeps the plain circular-cylinder safety factor.
    pub shaping: Option<Shaping>,
    /// Ion heat diffusivity at the reference current, m²/s.
    pub chi_i: ModeValues,
    /// Electron heat diffusivity at the reference current, m²/s.
    pub chi_e: ModeValues,
    /// Radial peaking of the heat diffusivities: `chi * (1 + chi_edge_shape * rho^2)`.
    pub chi_edge_shape: f64,
    /// Heat diffusivities scale as `(i_ref / i_p)^chi_current_exponent`.
    pub chi_current_exponent: f64,
    pub chi_reference_current_ma: f64,
    /// Particle diffusivity, m²/s.
    pub d_e: f64,
    /// Density target approached by the particle source.
    pub density_target: ProfileSpec,
    /// Relaxation time towards `density_target`; `None` disables the source.
    pub density_relax_time_s: Option<f64>,
    /// Current-diffusion coefficient, m²/s.
    pub eta: f64,
    /// When set, `eta` applies at this electron temperature and scales
    /// as `T_e^-1.5` elsewhere; otherwise it is uniform.
    pub eta_reference_temperature_kev: Option<f64>,
    pub z_eff: f64,
    /// Charge of the single lumped impurity used for main-ion dilution.
    pub impurity_charge: f64,
    pub lh_transition_time_s: f64,
    /// Multiplier on the IPB98 reference confinement time per mode.
    pub confinement_multiplier: ModeValues,
    pub nbi_deposition: Deposition,
    /// Fraction of NBI power absorbed by ions.
    pub nbi_ion_fraction: f64,
    pub ecrh_deposition: Deposition,
    /// Equipartition time `coeff * T_e^1.5 / n_e` (s, keV, 1e19 m⁻³).
    pub equipartition_coeff: f64,
    /// Ohmic power density `coeff * z_eff * j^2 / T_e^1.5`, MW/m³; 0 disables.
    pub ohmic_coeff: f64,
    /// Dirichlet edge temperature, keV; `None` gives a zero-flux edge.
    pub edge_temperature_kev: Option<f64>,
    /// Thermal energy loss rate of the outermost cell, 1/s.
    pub edge_loss_rate_per_s: f64,
    /// e-folding width (in rho) of the edge-localized current increment.
    pub skin_width: f64,
    pub dt_fixed_s: f64,
    pub dt_min_s: f64,
    pub dt_max_s: f64,
    /// Auto-mode step as a multiple of the explicit diffusion limit.
    pub auto_dt_factor: f64,
    pub t_ceiling_kev: f64,
    /// Floor on external power in the fusion-gain denominator, MW.
    pub fusion_gain_floor_mw: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::iter_like()
    }
}

impl SimConfig {
    /// Reference configuration: 25 cells, ITER-like geometry.
    pub fn iter_like() -> Self {
        Self {
            grid: RadialGrid::iter_like(25).expect("reference grid is valid"),
            shaping: Some(Shaping {
                elongation: 1.7,
                triangularity: 0.33,
            }),
            chi_i: ModeValues {
                l_mode: 0.6,
                h_mode: 0.2,
            },
            chi_e: ModeValues {
                l_mode: 0.6,
                h_mode: 0.2,
            },
            chi_edge_shape: 0.5,
            chi_current_exponent: 0.9,
            chi_reference_current_ma: 15.0,
            d_e: 0.3,
            density_target: ProfileSpec::Parabolic {
                core: 9.0,
                edge: 4.0,
                exponent: 1.0,
            },
            density_relax_time_s: Some(30.0),
            eta: 0.04,
            eta_reference_temperature_kev: Some(1.0),
            z_eff: 1.6,
            impurity_charge: 10.0,
            lh_transition_time_s: 100.0,
            confinement_multiplier: ModeValues {
                l_mode: 0.5,
                h_mode: 1.0,
            },
            nbi_deposition: Deposition {
                center: 0.25,
                width: 0.25,
            },
            nbi_ion_fraction: 0.5,
            ecrh_deposition: Deposition {
                center: 0.35,
                width: 0.1,
            },
            equipartition_coeff: 1.0,
            ohmic_coeff: 0.0175,
            edge_temperature_kev: Some(0.2),
            edge_loss_rate_per_s: 0.0,
            skin_width: 0.1,
            dt_fixed_s: 0.2,
            dt_min_s: 0.02,
            dt_max_s: 0.5,
            auto_dt_factor: 50.0,
            t_ceiling_kev: 100.0,
            fusion_gain_floor_mw: 0.1,
        }
    }

    /// Closed system: no sources, sinks or boundary losses. Thermal energy,
    /// particle count and current are all conserved by the transport step.
    pub fn conservative(mut self) -> Self {
        self.density_relax_time_s = None;
        self.ohmic_coeff = 0.0;
        self.edge_temperature_kev = None;
        self.edge_loss_rate_per_s = 0.0;
        self
    }

    /// Factor applied to the cylindrical safety factor.
    pub fn q_factor(&self) -> f64 {
        let eps = self.grid.minor_radius_m() / self.grid.major_radius_m();
        self.shaping.map_or(1.0, |s| s.q_factor(eps))
    }

    pub fn is_h_mode(&self, t: f64) -> bool {
        t >= self.lh_transition_time_s
    }

    /// Main-ion to electron density ratio from quasi-neutrality with one
    /// impurity species.
    pub fn ion_dilution(&self) -> f64 {
        (self.impurity_charge - self.z_eff) / (self.impurity_charge - 1.0)
    }

    /// Heat diffusivities `(chi_i, chi_e)` on the cell centres.
    pub fn heat_diffusivities(&self, t: f64, i_p_ma: f64) -> (Vec<f64>, Vec<f64>) {
        let h = self.is_h_mode(t);
        let scale = (self.chi_reference_current_ma / i_p_ma.max(0.1))
            .powf(self.chi_current_exponent);
        let shape = |r: &f64| 1.0 + self.chi_edge_shape * r * r;
        let ci = self.chi_i.at(h) * scale;
        let ce = self.chi_e.at(h) * scale;
        let rho = self.grid.rho();
        (
            rho.iter().map(|r| ci * shape(r)).collect(),
            rho.iter().map(|r| ce * shape(r)).collect(),
        )
    }

    /// Current diffusivity on the cell centres, m²/s.
    pub fn current_diffusivities(&self, t_e: &[f64]) -> Vec<f64> {
        match self.eta_reference_temperature_kev {
            Some(t_ref) => t_e
                .iter()
                .map(|t| self.eta * (t_ref / t.max(1e-3)).powf(1.5))
                .collect(),
            None => vec![self.eta; t_e.len()],
        }
    }

    /// Every violated invariant, as human-readable messages.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("sim.{name} must be finite and > 0, got {v}"));
            }
        };
        positive("chi_i.l_mode", self.chi_i.l_mode);
        positive("chi_i.h_mode", self.chi_i.h_mode);
        positive("chi_e.l_mode", self.chi_e.l_mode);
        positive("chi_e.h_mode", self.chi_e.h_mode);
        positive("d_e", self.d_e);
        positive("eta", self.eta);
        positive("confinement_multiplier.l_mode", self.confinement_multiplier.l_mode);
        positive("confinement_multiplier.h_mode", self.confinement_multiplier.h_mode);
        positive("nbi_deposition.width", self.nbi_deposition.width);
        positive("ecrh_deposition.width", self.ecrh_deposition.width);
        positive("equipartition_coeff", self.equipartition_coeff);
        positive("skin_width", self.skin_width);
        positive("dt_fixed_s", self.dt_fixed_s);
        positive("dt_min_s", self.dt_min_s);
        positive("dt_max_s", self.dt_max_s);
        positive("auto_dt_factor", self.auto_dt_factor);
        positive("t_ceiling_kev", self.t_ceiling_kev);
        positive("fusion_gain_floor_mw", self.fusion_gain_floor_mw);
        positive("chi_reference_current_ma", self.chi_reference_current_ma);
        if let Some(tau) = self.density_relax_time_s {
            positive("density_relax_time_s", tau);
        }
        if let Some(t_ref) = self.eta_reference_temperature_kev {
            positive("eta_reference_temperature_kev", t_ref);
        }
        if let Some(te) = self.edge_temperature_kev {
            positive("edge_temperature_kev", te);
        }
        if let Some(s) = self.shaping {
            if !(s.elongation.is_finite() && s.elongation >= 1.0) {
                out.push(format!("sim.shaping.elongation must be >= 1, got {}", s.elongation));
            }
            if !(0.0..1.0).contains(&s.triangularity) {
                out.push(format!("sim.shaping.triangularity must lie in [0, 1), got {}", s.triangularity));
            }
        }
        if self.dt_min_s > self.dt_max_s {
            out.push(format!(
                "sim.dt_min_s ({}) must not exceed sim.dt_max_s ({})",
                self.dt_min_s, self.dt_max_s
            ));
        }
        if !(self.z_eff >= 1.0 && self.z_eff < self.impurity_charge) {
            out.push(format!(
                "sim.z_eff must lie in [1, impurity_charge), got {}",
                self.z_eff
            ));
        }
        if !(0.0..=1.0).contains(&self.nbi_ion_fraction) {
            out.push("sim.nbi_ion_fraction must lie in [0, 1]".into());
        }
        for (name, v) in [
            ("chi_edge_shape", self.chi_edge_shape),
            ("chi_current_exponent", self.chi_current_exponent),
            ("ohmic_coeff", self.ohmic_coeff),
            ("edge_loss_rate_per_s", self.edge_loss_rate_per_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                out.push(format!("sim.{name} must be finite and >= 0, got {v}"));
            }
        }
        if !self.lh_transition_time_s.is_finite() {
            out.push("sim.lh_transition_time_s must be finite".into());
        }
        let target = self.density_target.evaluate(&self.grid);
        if target.len() != self.grid.n_cells() {
            out.push("sim.density_target length does not match the grid".into());
        } else if target.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            out.push("sim.density_target must be positive everywhere".into());
        }
        out
    }
}
