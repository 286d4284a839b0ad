use serde::{Deserialize, Serialize};

use crate::sim::Controls;

/// A plasma input that can be driven either by the agent or by a
/// prescribed time series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ControlChannel {
    #[serde(rename = "i_p")]
    PlasmaCurrent,
    #[serde(rename = "p_nbi")]
    NbiPower,
    #[serde(rename = "p_ecrh")]
    EcrhPower,
}

impl ControlChannel {
    pub const ALL: [ControlChannel; 3] = [
        ControlChannel::PlasmaCurrent,
        ControlChannel::NbiPower,
        ControlChannel::EcrhPower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControlChannel::PlasmaCurrent => "i_p",
            ControlChannel::NbiPower => "p_nbi",
            ControlChannel::EcrhPower => "p_ecrh",
        }
    }

    pub fn units(self) -> &'static str {
        match self {
            ControlChannel::PlasmaCurrent => "MA",
            ControlChannel::NbiPower | ControlChannel::EcrhPower => "MW",
        }
    }

    pub fn get(self, c: &Controls) -> f64 {
        match self {
            ControlChannel::PlasmaCurrent => c.i_p,
            ControlChannel::NbiPower => c.p_nbi,
            ControlChannel::EcrhPower => c.p_ecrh,
        }
    }

    pub fn set(self, c: &mut Controls, v: f64) {
        match self {
            ControlChannel::PlasmaCurrent => c.i_p = v,
            ControlChannel::NbiPower => c.p_nbi = v,
            ControlChannel::EcrhPower => c.p_ecrh = v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionChannel {
    pub channel: ControlChannel,
    pub lower: f64,
    pub upper: f64,
    /// Maximum change per control interval.
    #[serde(default)]
    pub ramp_rate_limit: Option<f64>,
}

impl ActionChannel {
    pub fn units(&self) -> &'static str {
        self.channel.units()
    }
}

/// Ordered, bounded action channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpec {
    pub channels: Vec<ActionChannel>,
}

impl ActionSpec {
    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn index_of(&self, channel: ControlChannel) -> Option<usize> {
        self.channels.iter().position(|c| c.channel == channel)
    }

    pub fn lower_bounds(&self) -> ActionVector {
        ActionVector(self.channels.iter().map(|c| c.lower).collect())
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.channels.is_empty() {
            out.push("actions.channels must not be empty".into());
        }
        for (i, c) in self.channels.iter().enumerate() {
            let name = c.channel.name();
            if !(c.lower.is_finite() && c.upper.is_finite() && c.lower < c.upper) {
                out.push(format!(
                    "actions.{name}: bounds must be finite with lower < upper, got [{}, {}]",
                    c.lower, c.upper
                ));
            }
            if c.lower < 0.0 {
                out.push(format!("actions.{name}: lower bound must be >= 0"));
            }
            if let Some(l) = c.ramp_rate_limit {
                if !(l.is_finite() && l > 0.0) {
                    out.push(format!("actions.{name}: ramp_rate_limit must be > 0, got {l}"));
                }
            }
            if self.channels[..i].iter().any(|o| o.channel == c.channel) {
                out.push(format!("actions.{name} appears more than once"));
            }
        }
        out
    }
}

/// Channel values in [`ActionSpec`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionVector(pub Vec<f64>);

impl ActionVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClippedAction {
    pub applied: ActionVector,
    /// Some channel was outside its bounds.
    pub clipped: bool,
    /// Some channel moved further than its ramp-rate limit allows.
    pub ramp_limited: bool,
}

/// Clamps each channel to its bounds, then to `previous ± ramp_rate_limit`.
///
/// Vectors must match `spec` in length.
pub fn clip_action(requested: &ActionVector, spec: &ActionSpec, previous: &ActionVector) -> ClippedAction {
    let mut clipped = false;
    let mut ramp_limited = false;
    let applied = spec
        .channels
        .iter()
        .zip(requested.values())
        .zip(previous.values())
        .map(|((ch, &req), &prev)| {
            let bounded = req.clamp(ch.lower, ch.upper);
            clipped |= bounded != req;
            match ch.ramp_rate_limit {
                Some(limit) => {
                    let ramped = bounded.clamp(prev - limit, prev + limit);
                    ramp_limited |= ramped != bounded;
                    ramped
                }
                None => bounded,
            }
        })
        .collect();
    ClippedAction {
        applied: ActionVector(applied),
        clipped,
        ramp_limited,
    }
}
