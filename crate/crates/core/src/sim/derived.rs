//! Performance quantities computed from a plasma state: safety factor,
//! beta, fusion gain and confinement quality.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::state::{enclosed_current, Controls, PlasmaState};
use super::{SimError, KEV_DENSITY_MJ, MU0};

/// Normalized radius at which the edge safety factor is reported.
pub const Q95_RHO: f64 = 0.95;

/// D-T fusion energy per reaction, J (17.59 MeV).
const E_FUSION_J: f64 = 17.59 * 1.602_176_634e-13;

/// Upper temperature bound of the reactivity fit, keV.
const REACTIVITY_T_MAX: f64 = 100.0;

/// Isotope mass (amu) and elongation folded into the confinement scaling.
const SCALING_ION_MASS: f64 = 2.5;
const SCALING_ELONGATION: f64 = 1.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub q_profile: Vec<f64>,
    pub q_min: f64,
    pub q95: f64,
    pub beta: f64,
    pub q_fusion_gain: f64,
    pub h98: f64,
    /// Fusion power, MW.
    pub p_fusion_mw: f64,
    /// Thermal stored energy, MJ.
    pub stored_energy_mj: f64,
    /// Energy confinement time, s.
    pub tau_e_s: f64,
    /// Power conducted out through the edge plus edge sink, MW.
    pub p_loss_mw: f64,
}

/// D-T reactivity `<sigma v>` in m³/s from the Bosch-Hale parameterization,
/// with `T` clamped to `(0, 100]` keV.
pub fn dt_reactivity(t_kev: f64) -> f64 {
    const BG: f64 = 34.3827;
    const MRC2: f64 = 1_124_656.0;
    const C: [f64; 7] = [
        1.17302e-9,
        1.51361e-2,
        7.51886e-2,
        4.60643e-3,
        1.35e-2,
        -1.0675e-4,
        1.366e-5,
    ];
    if !(t_kev > 0.0) {
        return 0.0;
    }
    let t = t_kev.min(REACTIVITY_T_MAX);
    let theta = t / (1.0 - t * (C[1] + t * (C[3] + t * C[5])) / (1.0 + t * (C[2] + t * (C[4] + t * C[6]))));
    let xi = (BG * BG / (4.0 * theta)).cbrt();
    // cm^3/s -> m^3/s
    C[0] * theta * (xi / (MRC2 * t * t * t)).sqrt() * (-3.0 * xi).exp() * 1e-6
}

/// Reduced IPB98(y,2) H-mode confinement time, s.
///
/// Arguments in MA, 1e19 m⁻³, MW, T and m.
pub fn tau_ipb98(i_p_ma: f64, n_bar: f64, p_mw: f64, b0: f64, r0: f64, a: f64) -> f64 {
    0.0562
        * SCALING_ION_MASS.powf(0.19)
        * SCALING_ELONGATION.powf(0.78)
        * i_p_ma.powf(0.93)
        * b0.powf(0.15)
        * n_bar.powf(0.41)
        * p_mw.powf(-0.69)
        * r0.powf(1.97)
        * (a / r0).powf(0.58)
}

/// Cylindrical safety factor `2 pi rho^2 a^2 B0 / (mu0 R0 I_enc(rho))` at
/// each cell centre, times the shaping factor when one is configured.
pub fn safety_factor_profile(state: &PlasmaState, config: &SimConfig) -> Result<Vec<f64>, SimError> {
    let g = &config.grid;
    let (a, r0, b0) = (g.minor_radius_m(), g.major_radius_m(), g.b0_tesla());
    let f = config.q_factor();
    g.rho()
        .iter()
        .map(|&rho| {
            let i_enc = enclosed_current(g, &state.j, rho);
            if !(i_enc.is_finite() && i_enc > 0.0) {
                return Err(SimError::ZeroCurrent { rho });
            }
            Ok(f * 2.0 * PI * rho * rho * a * a * b0 / (MU0 * r0 * i_enc * 1e6))
        })
        .collect()
}

pub fn compute_derived(
    state: &PlasmaState,
    controls: &Controls,
    config: &SimConfig,
) -> Result<DerivedQuantities, SimError> {
    let g = &config.grid;
    let n = g.n_cells();
    let q_profile = safety_factor_profile(state, config)?;
    let q_min = q_profile.iter().copied().fold(f64::INFINITY, f64::min);
    let q95 = g.interpolate(&q_profile, Q95_RHO);

    let dil = config.ion_dilution();
    let pressure_units: Vec<f64> = (0..n)
        .map(|i| state.n_e[i] * (state.t_e[i] + dil * state.t_i[i]))
        .collect();
    let volume = g.total_volume();
    // 1 MJ/m^3 = 1e6 Pa
    let mean_pressure_pa = g.volume_integral(&pressure_units) * KEV_DENSITY_MJ * 1e6 / volume;
    let b0 = g.b0_tesla();
    let beta = 2.0 * MU0 * mean_pressure_pa / (b0 * b0);
    let stored_energy_mj = 1.5 * g.volume_integral(&pressure_units) * KEV_DENSITY_MJ;

    let fusion_density: Vec<f64> = (0..n)
        .map(|i| {
            let n_fuel = 0.5 * dil * state.n_e[i] * 1e19;
            n_fuel * n_fuel * dt_reactivity(state.t_i[i]) * E_FUSION_J * 1e-6
        })
        .collect();
    let p_fusion_mw = g.volume_integral(&fusion_density);
    let eps = config.fusion_gain_floor_mw;
    let p_ext = controls.external_power();
    let q_fusion_gain = p_fusion_mw / p_ext.max(eps);

    let (chi_i, chi_e) = config.heat_diffusivities(state.t, controls.i_p);
    let last = n - 1;
    let conducted = match config.edge_temperature_kev {
        Some(t_edge) => {
            let h = 0.5 * g.minor_radius_m() * g.d_rho();
            let surface = 4.0 * PI * PI * g.major_radius_m() * g.minor_radius_m();
            let ne = state.n_e[last];
            let flux = ne * chi_e[last] * (state.t_e[last] - t_edge) / h
                + dil * ne * chi_i[last] * (state.t_i[last] - t_edge) / h;
            flux * surface * KEV_DENSITY_MJ
        }
        None => 0.0,
    };
    let sink = config.edge_loss_rate_per_s
        * 1.5
        * pressure_units[last]
        * g.cell_volume(last)
        * KEV_DENSITY_MJ;
    let p_loss_mw = (conducted + sink).max(eps);
    let tau_e_s = stored_energy_mj / p_loss_mw;
    let n_bar = g.volume_integral(&state.n_e) / volume;
    let tau_ref = tau_ipb98(
        controls.i_p,
        n_bar,
        p_ext.max(eps),
        b0,
        g.major_radius_m(),
        g.minor_radius_m(),
    ) * config
        .confinement_multiplier
        .at(config.is_h_mode(state.t));
    let h98 = tau_e_s / tau_ref;

    Ok(DerivedQuantities {
        q_profile,
        q_min,
        q95,
        beta,
        q_fusion_gain,
        h98,
        p_fusion_mw,
        stored_energy_mj,
        tau_e_s,
        p_loss_mw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::grid::RadialGrid;
    use crate::sim::profiles::{InitialProfiles, ProfileSpec};
    use crate::sim::state::init_state;

    fn state_with_j(config: &SimConfig, j: Vec<f64>, i_p: f64, temp: f64) -> PlasmaState {
        let n = config.grid.n_cells();
        init_state(
            config,
            &InitialProfiles {
                t_i: vec![temp; n],
                t_e: vec![temp; n],
                n_e: vec![5.0; n],
                j,
                i_p_ma: i_p,
            },
        )
        .unwrap()
    }

    fn controls(i_p: f64, p: f64) -> Controls {
        Controls { i_p, p_nbi: p, p_ecrh: 0.0 }
    }

    #[test]
    fn uniform_current_gives_flat_q() {
        let mut cfg = SimConfig::iter_like();
        cfg.shaping = None;
        let s = state_with_j(&cfg, vec![1.0; 25], 10.0, 2.0);
        let d = compute_derived(&s, &controls(10.0, 20.0), &cfg).unwrap();
        let q0 = d.q_profile[0];
        assert!(d.q_profile.iter().all(|q| (q - q0).abs() < 1e-9 * q0));
        // q = 2 B0 / (mu0 R0 j)
        let j = 10.0 / (PI * 4.0);
        assert!((q0 - 2.0 * 5.3 / (MU0 * 6.2 * j * 1e6)).abs() < 1e-9);
        assert!((d.q95 - q0).abs() < 1e-9);
        assert!((d.q_min - q0).abs() < 1e-9);
    }

    #[test]
    fn cold_unheated_plasma_has_no_gain() {
        let cfg = SimConfig::iter_like();
        let s = state_with_j(&cfg, vec![1.0; 25], 3.0, 0.05);
        let d = compute_derived(&s, &controls(3.0, 0.0), &cfg).unwrap();
        assert!(d.q_fusion_gain < 1e-12, "{}", d.q_fusion_gain);
        assert!(d.q_fusion_gain >= 0.0);
    }

    #[test]
    fn reversed_core_current_is_rejected() {
        let cfg = SimConfig::iter_like();
        let mut s = state_with_j(&cfg, vec![1.0; 25], 3.0, 1.0);
        s.j[0] = -1.0;
        assert!(matches!(
            compute_derived(&s, &controls(3.0, 0.0), &cfg),
            Err(SimError::ZeroCurrent { .. })
        ));
    }

    #[test]
    fn reactivity_peaks_in_the_tens_of_kev() {
        assert_eq!(dt_reactivity(0.0), 0.0);
        assert!(dt_reactivity(10.0) > dt_reactivity(5.0));
        // tabulated D-T values: 1.136e-22 m^3/s at 10 keV, 4.33e-22 at 20 keV
        let r10 = dt_reactivity(10.0);
        assert!((r10 - 1.136e-22).abs() / 1.136e-22 < 0.01, "{r10}");
        let r20 = dt_reactivity(20.0);
        assert!((r20 - 4.33e-22).abs() / 4.33e-22 < 0.01, "{r20}");
        assert_eq!(dt_reactivity(150.0), dt_reactivity(100.0));
    }

    #[test]
    fn ipb98_reference_point() {
        // ITER baseline: 15 MA, 10.1e19, 87 MW loss, 5.3 T, 6.2 m, 2.0 m -> ~3.7 s
        let tau = tau_ipb98(15.0, 10.1, 87.0, 5.3, 6.2, 2.0);
        assert!((tau - 3.7).abs() < 0.3, "{tau}");
    }

    /// Fine-grid oracle: cumulative sum of j dA on a grid ten times finer,
    /// q(0.95) from the enclosed current at exactly rho = 0.95.
    fn q95_oracle(core_exponent: f64, i_p: f64, n_coarse: usize) -> f64 {
        let (a, r0, b0) = (2.0, 6.2, 5.3);
        let n = 10 * n_coarse;
        let d = 1.0 / n as f64;
        let shape = |r: f64| (1.0 - r * r).powf(core_exponent);
        let mut total = 0.0;
        let mut enclosed_95 = 0.0;
        for i in 0..n {
            let r = (i as f64 + 0.5) * d;
            let da = 2.0 * PI * a * a * r * d;
            total += shape(r) * da;
            if r < 0.95 {
                enclosed_95 += shape(r) * da;
            }
        }
        let i_enc = enclosed_95 * i_p / total;
        2.0 * PI * 0.95 * 0.95 * a * a * b0 / (MU0 * r0 * i_enc * 1e6)
    }

    #[test]
    fn q95_matches_fine_grid_oracle() {
        let mut cfg = SimConfig::iter_like();
        cfg.shaping = None;
        let j = ProfileSpec::Parabolic { core: 1.0, edge: 0.0, exponent: 1.0 }.evaluate(&cfg.grid);
        let s = state_with_j(&cfg, j, 15.0, 5.0);
        let d = compute_derived(&s, &controls(15.0, 40.0), &cfg).unwrap();
        let oracle = q95_oracle(1.0, 15.0, 25);
        assert!(((d.q95 - oracle) / oracle).abs() < 0.02, "{} vs {}", d.q95, oracle);
    }

    #[test]
    fn shaped_q95_scales_the_cylinder_value() {
        let cfg = SimConfig::iter_like();
        let j = ProfileSpec::Parabolic { core: 1.0, edge: 0.0, exponent: 1.0 }.evaluate(&cfg.grid);
        let s = state_with_j(&cfg, j, 15.0, 5.0);
        let d = compute_derived(&s, &controls(15.0, 40.0), &cfg).unwrap();
        // kappa 1.7, delta 0.33, eps 2/6.2
        let eps: f64 = 2.0 / 6.2;
        let k2 = 1.7f64 * 1.7;
        let shape = (1.0 + k2 * (1.0 + 2.0 * 0.33 * 0.33 - 1.2 * 0.33f64.powi(3))) / 2.0;
        let factor = shape * (1.17 - 0.65 * eps) / (1.0 - eps * eps).powi(2);
        let oracle = factor * q95_oracle(1.0, 15.0, 25);
        assert!(((d.q95 - oracle) / oracle).abs() < 0.02, "{} vs {}", d.q95, oracle);
        // ITER design point sits near q95 = 3 at 15 MA
        assert!(d.q95 > 2.5 && d.q95 < 3.5, "{}", d.q95);
    }

    #[test]
    fn q95_converges_under_refinement() {
        let mut q = Vec::new();
        for n in [25, 50] {
            let mut cfg = SimConfig::iter_like();
            cfg.grid = RadialGrid::iter_like(n).unwrap();
            let j = ProfileSpec::Parabolic { core: 1.0, edge: 0.0, exponent: 1.0 }.evaluate(&cfg.grid);
            let s = state_with_j(&cfg, j, 15.0, 5.0);
            q.push(compute_derived(&s, &controls(15.0, 40.0), &cfg).unwrap().q95);
        }
        assert!(((q[1] - q[0]) / q[0]).abs() < 0.05);
    }
}
