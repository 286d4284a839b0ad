//! Substep solver: finite-volume cylindrical diffusion with backward-Euler
//! time stepping, explicit heating sources and exact equipartition.
//!
//! One substep runs, in order: density update, ion-electron energy exchange,
//! explicit heating, implicit heat diffusion (in conservative `1.5 n T`
//! form), current diffusion towards the conductivity profile, and finally
//! the edge current increment that pins the total current to the request.

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::grid::RadialGrid;
use super::state::{poloidal_flux, Controls, PlasmaState};
use super::tridiag::Tridiagonal;
use super::{SimError, KEV_DENSITY_MJ};

/// How a control interval is split into solver substeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubstepMode {
    /// Step size from a diffusion-stability estimate, clamped to `[dt_min, dt_max]`.
    Auto,
    /// Exactly `k` equal substeps.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SubstepStats {
    pub n_substeps: usize,
    pub dt_used_s: Vec<f64>,
}

/// A failed [`advance`], with the substeps that completed before the failure.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{source} (after {} substeps)", stats.n_substeps)]
pub struct AdvanceError {
    #[source]
    pub source: SimError,
    pub stats: SubstepStats,
}

/// Boundary at `rho = 1` for one diffused quantity.
#[derive(Debug, Clone, Copy)]
enum Edge {
    ZeroFlux,
    /// Fixed boundary value with its face conductance.
    Fixed { value: f64, conductance: f64 },
}

/// Conductances `D_k S_k / (a d_rho)` on faces `0..=n` from cell-centred
/// diffusivities; the axis face is always closed, the edge face uses the
/// outermost cell and a half-cell distance.
fn conductances(grid: &RadialGrid, diffusivity: &[f64]) -> Vec<f64> {
    let n = grid.n_cells();
    let a = grid.minor_radius_m();
    let r0 = grid.major_radius_m();
    let h = a * grid.d_rho();
    let surface = |k: usize| 4.0 * std::f64::consts::PI * std::f64::consts::PI * r0 * a * grid.face(k);
    let mut g = vec![0.0; n + 1];
    for k in 1..n {
        let d = 0.5 * (diffusivity[k - 1] + diffusivity[k]);
        g[k] = d * surface(k) / h;
    }
    g[n] = diffusivity[n - 1] * surface(n) / (0.5 * h);
    g
}

/// Assembles `c_i V_i x_i - dt * div(G grad x) + dt * sink_i V_i x_i`.
///
/// Returns the matrix and the boundary contribution to the right-hand side.
fn implicit_operator(
    grid: &RadialGrid,
    dt: f64,
    capacity: &[f64],
    face_g: &[f64],
    sink: &[f64],
    edge: Edge,
) -> (Tridiagonal, Vec<f64>) {
    let n = grid.n_cells();
    let mut m = Tridiagonal::zeros(n);
    let mut bnd = vec![0.0; n];
    for i in 0..n {
        let v = grid.cell_volume(i);
        m.diag[i] = capacity[i] * v + dt * sink[i] * v;
        if i > 0 {
            let g = dt * face_g[i];
            m.diag[i] += g;
            m.lower[i] = -g;
        }
        if i + 1 < n {
            let g = dt * face_g[i + 1];
            m.diag[i] += g;
            m.upper[i] = -g;
        }
    }
    if let Edge::Fixed { value, conductance } = edge {
        m.diag[n - 1] += dt * conductance;
        bnd[n - 1] = dt * conductance * value;
    }
    (m, bnd)
}

fn check_profile(
    field: &'static str,
    v: &[f64],
    t: f64,
    positive: bool,
    ceiling: Option<f64>,
) -> Result<(), SimError> {
    for (i, &x) in v.iter().enumerate() {
        if !x.is_finite() {
            return Err(SimError::NumericalBlowup {
                t,
                reason: format!("{field}[{i}] is not finite"),
            });
        }
        if positive && x <= 0.0 {
            return Err(SimError::NumericalBlowup {
                t,
                reason: format!("{field}[{i}] = {x} is not positive"),
            });
        }
        if let Some(c) = ceiling {
            if x > c {
                return Err(SimError::NumericalBlowup {
                    t,
                    reason: format!("{field}[{i}] = {x} keV exceeds ceiling {c} keV"),
                });
            }
        }
    }
    Ok(())
}

/// Advances `state` by one substep of length `dt` under fixed `controls`.
///
/// Fails with [`SimError::NumericalBlowup`] when any output is non-finite,
/// a temperature or density is not positive, or a temperature exceeds
/// `config.t_ceiling_kev`.
pub fn substep(
    state: &PlasmaState,
    controls: &Controls,
    dt: f64,
    config: &SimConfig,
) -> Result<PlasmaState, SimError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SimError::InvalidStep(format!("dt must be > 0, got {dt}")));
    }
    controls.validate()?;
    let grid = &config.grid;
    let n = grid.n_cells();
    for (field, v) in [
        ("t_i", &state.t_i),
        ("t_e", &state.t_e),
        ("n_e", &state.n_e),
        ("j", &state.j),
    ] {
        if v.len() != n {
            return Err(SimError::GridMismatch {
                field,
                expected: n,
                found: v.len(),
            });
        }
    }
    let dil = config.ion_dilution();
    let zeros = vec![0.0; n];
    let ones = vec![1.0; n];
    let volumes: Vec<f64> = (0..n).map(|i| grid.cell_volume(i)).collect();

    // density: diffusion plus optional relaxation to the target, zero flux
    let n_old = &state.n_e;
    let g_n = conductances(grid, &vec![config.d_e; n]);
    let (sink, source): (Vec<f64>, Vec<f64>) = match config.density_relax_time_s {
        Some(tau) => (
            vec![1.0 / tau; n],
            config.density_target.evaluate(grid).iter().map(|v| v / tau).collect(),
        ),
        None => (zeros.clone(), zeros.clone()),
    };
    let (m_n, _) = implicit_operator(grid, dt, &ones, &g_n, &sink, Edge::ZeroFlux);
    let rhs_n: Vec<f64> = (0..n)
        .map(|i| volumes[i] * (n_old[i] + dt * source[i]))
        .collect();
    let n_new = m_n.solve(&rhs_n);

    // equipartition: exact exponential relaxation towards the common
    // temperature, conserving n_e T_e + n_i T_i in each cell
    let mut t_e = state.t_e.clone();
    let mut t_i = state.t_i.clone();
    for i in 0..n {
        let ne = n_old[i];
        let ni = dil * ne;
        let tau = config.equipartition_coeff * t_e[i].powf(1.5) / ne;
        let t_eq = (ne * t_e[i] + ni * t_i[i]) / (ne + ni);
        let f = (-dt * (1.0 + ni / ne) / tau).exp();
        t_e[i] = t_eq + (t_e[i] - t_eq) * f;
        t_i[i] = t_eq + (t_i[i] - t_eq) * f;
    }

    // explicit sources, converted from MW/m^3 to 1e19 keV m^-3 s^-1
    let nbi = config.nbi_deposition.shape(grid);
    let ecrh = config.ecrh_deposition.shape(grid);
    let mut rhs_i = vec![0.0; n];
    let mut rhs_e = vec![0.0; n];
    for i in 0..n {
        let ne = n_old[i];
        let ni = dil * ne;
        let p_nbi = controls.p_nbi * nbi[i];
        let p_ohm = if config.ohmic_coeff > 0.0 {
            config.ohmic_coeff * config.z_eff * state.j[i] * state.j[i] / state.t_e[i].powf(1.5)
        } else {
            0.0
        };
        let p_ion = config.nbi_ion_fraction * p_nbi;
        let p_el = (1.0 - config.nbi_ion_fraction) * p_nbi + controls.p_ecrh * ecrh[i] + p_ohm;
        rhs_i[i] = volumes[i] * (1.5 * ni * t_i[i] + dt * p_ion / KEV_DENSITY_MJ);
        rhs_e[i] = volumes[i] * (1.5 * ne * t_e[i] + dt * p_el / KEV_DENSITY_MJ);
    }

    // heat diffusion in 1.5 n T form with flux -n chi grad T
    let (chi_i, chi_e) = config.heat_diffusivities(state.t, controls.i_p);
    let mut edge_sink = vec![0.0; n];
    let last = n - 1;
    let ni_new: Vec<f64> = n_new.iter().map(|v| dil * v).collect();
    let solve_heat = |dens: &[f64], chi: &[f64], rhs: &mut Vec<f64>, sink: &mut Vec<f64>| {
        let coeff: Vec<f64> = (0..n).map(|i| dens[i] * chi[i]).collect();
        let g = conductances(grid, &coeff);
        let capacity: Vec<f64> = dens.iter().map(|v| 1.5 * v).collect();
        sink[last] = 1.5 * dens[last] * config.edge_loss_rate_per_s;
        let edge = match config.edge_temperature_kev {
            Some(value) => Edge::Fixed {
                value,
                conductance: g[n],
            },
            None => Edge::ZeroFlux,
        };
        let (m, bnd) = implicit_operator(grid, dt, &capacity, &g, sink, edge);
        for (r, b) in rhs.iter_mut().zip(bnd) {
            *r += b;
        }
        m.solve(rhs)
    };
    let t_i_new = solve_heat(&ni_new, &chi_i, &mut rhs_i, &mut edge_sink);
    let t_e_new = solve_heat(&n_new, &chi_e, &mut rhs_e, &mut edge_sink);

    // current: diffuse j - j_sigma, where j_sigma ~ T_e^1.5 carries the same
    // total current, then add the edge-localized increment to reach i_p
    let j_old = &state.j;
    let i_now = grid.area_integral(j_old);
    let sigma: Vec<f64> = t_e_new.iter().map(|t| t.max(0.0).powf(1.5)).collect();
    let sigma_current = grid.area_integral(&sigma);
    let j_sigma: Vec<f64> = if sigma_current > 0.0 {
        sigma.iter().map(|s| s * i_now / sigma_current).collect()
    } else {
        vec![0.0; n]
    };
    let g_j = conductances(grid, &config.current_diffusivities(&t_e_new));
    let (m_j, _) = implicit_operator(grid, dt, &ones, &g_j, &zeros, Edge::ZeroFlux);
    let a_sigma = m_j.apply(&j_sigma);
    let rhs_j: Vec<f64> = (0..n)
        .map(|i| volumes[i] * (j_old[i] - j_sigma[i]) + a_sigma[i])
        .collect();
    let mut j_new = m_j.solve(&rhs_j);
    let skin: Vec<f64> = grid
        .rho()
        .iter()
        .map(|r| ((r - 1.0) / config.skin_width).exp())
        .collect();
    let skin_current = grid.area_integral(&skin);
    let deficit = controls.i_p - grid.area_integral(&j_new);
    for (j, s) in j_new.iter_mut().zip(&skin) {
        *j += deficit * s / skin_current;
    }

    let t_new = state.t + dt;
    check_profile("n_e", &n_new, t_new, true, None)?;
    check_profile("t_i", &t_i_new, t_new, true, Some(config.t_ceiling_kev))?;
    check_profile("t_e", &t_e_new, t_new, true, Some(config.t_ceiling_kev))?;
    check_profile("j", &j_new, t_new, false, None)?;
    let psi = poloidal_flux(grid, &j_new);
    Ok(PlasmaState {
        t: t_new,
        t_i: t_i_new,
        t_e: t_e_new,
        n_e: n_new,
        j: j_new,
        psi,
    })
}

/// Auto-mode substep: `auto_dt_factor * (a d_rho)^2 / D_max`, clamped.
pub fn auto_substep_size(state: &PlasmaState, controls: &Controls, config: &SimConfig) -> f64 {
    let (chi_i, chi_e) = config.heat_diffusivities(state.t, controls.i_p);
    let eta = config.current_diffusivities(&state.t_e);
    let d_max = chi_i
        .iter()
        .chain(&chi_e)
        .chain(&eta)
        .copied()
        .fold(config.d_e, f64::max);
    let h = config.grid.minor_radius_m() * config.grid.d_rho();
    (config.auto_dt_factor * h * h / d_max).clamp(config.dt_min_s, config.dt_max_s)
}

/// Advances over one control interval, returning the final state and the
/// substep sizes used. In fixed mode without `k`, `k` is derived from
/// `config.dt_fixed_s`.
pub fn advance(
    state: &PlasmaState,
    controls: &Controls,
    interval: f64,
    mode: SubstepMode,
    k: Option<usize>,
    config: &SimConfig,
) -> Result<(PlasmaState, SubstepStats), AdvanceError> {
    let mut stats = SubstepStats::default();
    let fail = |source: SimError, stats: &SubstepStats| AdvanceError {
        source,
        stats: stats.clone(),
    };
    if !(interval.is_finite() && interval > 0.0) {
        return Err(fail(
            SimError::InvalidStep(format!("interval must be > 0, got {interval}")),
            &stats,
        ));
    }
    let t0 = state.t;
    let mut current = state.clone();
    match mode {
        SubstepMode::Fixed => {
            let k = k.unwrap_or_else(|| ((interval / config.dt_fixed_s).round() as usize).max(1));
            if k == 0 {
                return Err(fail(
                    SimError::InvalidStep("fixed mode requires k >= 1".into()),
                    &stats,
                ));
            }
            let dt = interval / k as f64;
            for _ in 0..k {
                current = substep(&current, controls, dt, config).map_err(|e| fail(e, &stats))?;
                stats.n_substeps += 1;
                stats.dt_used_s.push(dt);
            }
        }
        SubstepMode::Auto => {
            let mut elapsed = 0.0;
            // relative slack so round-off does not produce a sliver step
            while interval - elapsed > 1e-12 * interval {
                let dt = auto_substep_size(&current, controls, config).min(interval - elapsed);
                current = substep(&current, controls, dt, config).map_err(|e| fail(e, &stats))?;
                elapsed += dt;
                stats.n_substeps += 1;
                stats.dt_used_s.push(dt);
            }
        }
    }
    current.t = t0 + interval;
    Ok((current, stats))
}
