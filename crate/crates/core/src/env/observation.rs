use serde::{Deserialize, Serialize};

use crate::sim::{Controls, DerivedQuantities, PlasmaState};

/// A quantity the agent may observe. Profile fields contribute one entry
/// per grid cell, scalar fields one entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservedQuantity {
    TI,
    TE,
    NE,
    J,
    Psi,
    QProfile,
    QMin,
    Q95,
    Beta,
    FusionGain,
    H98,
    IP,
    PNbi,
    PEcrh,
    Time,
}

impl ObservedQuantity {
    pub const ALL: [ObservedQuantity; 15] = [
        ObservedQuantity::TI,
        ObservedQuantity::TE,
        ObservedQuantity::NE,
        ObservedQuantity::J,
        ObservedQuantity::Psi,
        ObservedQuantity::QProfile,
        ObservedQuantity::QMin,
        ObservedQuantity::Q95,
        ObservedQuantity::Beta,
        ObservedQuantity::FusionGain,
        ObservedQuantity::H98,
        ObservedQuantity::IP,
        ObservedQuantity::PNbi,
        ObservedQuantity::PEcrh,
        ObservedQuantity::Time,
    ];

    pub fn size(self, n_cells: usize) -> usize {
        use ObservedQuantity::*;
        match self {
            TI | TE | NE | J | Psi | QProfile => n_cells,
            _ => 1,
        }
    }

    pub fn raw(self, state: &PlasmaState, derived: &DerivedQuantities, controls: &Controls, t: f64) -> Vec<f64> {
        use ObservedQuantity::*;
        match self {
            TI => state.t_i.clone(),
            TE => state.t_e.clone(),
            NE => state.n_e.clone(),
            J => state.j.clone(),
            Psi => state.psi.clone(),
            QProfile => derived.q_profile.clone(),
            QMin => vec![derived.q_min],
            Q95 => vec![derived.q95],
            Beta => vec![derived.beta],
            FusionGain => vec![derived.q_fusion_gain],
            H98 => vec![derived.h98],
            IP => vec![controls.i_p],
            PNbi => vec![controls.p_nbi],
            PEcrh => vec![controls.p_ecrh],
            Time => vec![t],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservedField {
    pub quantity: ObservedQuantity,
    /// Raw value mapped to -1.
    pub lower: f64,
    /// Raw value mapped to +1.
    pub upper: f64,
}

/// Selected observation fields, in output order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationSpec {
    pub fields: Vec<ObservedField>,
}

impl ObservationSpec {
    pub fn len(&self, n_cells: usize) -> usize {
        self.fields.iter().map(|f| f.quantity.size(n_cells)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.fields.is_empty() {
            out.push("observations.fields must not be empty".into());
        }
        for (i, f) in self.fields.iter().enumerate() {
            if !(f.lower.is_finite() && f.upper.is_finite() && f.lower < f.upper) {
                out.push(format!(
                    "observations.{:?}: bounds must be finite with lower < upper",
                    f.quantity
                ));
            }
            if self.fields[..i].iter().any(|o| o.quantity == f.quantity) {
                out.push(format!("observations.{:?} appears more than once", f.quantity));
            }
        }
        out
    }
}

/// Affine map of each selected field from `[lower, upper]` to `[-1, 1]`.
/// Values outside the bounds map linearly outside `[-1, 1]`.
pub fn normalize_observation(
    state: &PlasmaState,
    derived: &DerivedQuantities,
    controls: &Controls,
    t: f64,
    spec: &ObservationSpec,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(spec.len(state.t_e.len()));
    for f in &spec.fields {
        let scale = 2.0 / (f.upper - f.lower);
        out.extend(
            f.quantity
                .raw(state, derived, controls, t)
                .into_iter()
                .map(|v| (v - f.lower) * scale - 1.0),
        );
    }
    out
}
