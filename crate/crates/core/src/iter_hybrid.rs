//! The ITER hybrid ramp-up scenario: a 100 s current and power ramp in
//! L-mode followed by a 50 s H-mode flat-top, controlled through plasma
//! current, NBI power and ECRH power.
//!
//! The reward is a weighted sum of four trapezoidal target-band scores on
//! fusion gain, minimum safety factor, edge safety factor and H98.

use serde::{Deserialize, Serialize};

use crate::env::{
    ActionChannel, ActionSpec, ControlChannel, EnvConfig, ObservationSpec, ObservedField,
    ObservedQuantity, RewardSpec,
};
use crate::sim::{DerivedQuantities, ProfileSet, SimConfig, SubstepMode};

pub const HORIZON_STEPS: usize = 150;
pub const CONTROL_INTERVAL_S: f64 = 1.0;
pub const SUBSTEPS_PER_INTERVAL: usize = 5;
pub const RAMP_DURATION_S: f64 = 100.0;

pub const IP_BOUNDS_MA: (f64, f64) = (3.0, 15.0);
pub const IP_RAMP_LIMIT_MA: f64 = 0.2;
pub const NBI_BOUNDS_MW: (f64, f64) = (0.0, 33.0);
pub const ECRH_BOUNDS_MW: (f64, f64) = (0.0, 20.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardWeights {
    pub alpha_q: f64,
    pub alpha_qmin: f64,
    pub alpha_q95: f64,
    pub alpha_h98: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            alpha_q: 0.01,
            alpha_qmin: 0.01,
            alpha_q95: 0.005,
            alpha_h98: 0.005,
        }
    }
}

impl RewardWeights {
    pub fn total(&self) -> f64 {
        self.alpha_q + self.alpha_qmin + self.alpha_q95 + self.alpha_h98
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            alpha_q: c * self.alpha_q,
            alpha_qmin: c * self.alpha_qmin,
            alpha_q95: c * self.alpha_q95,
            alpha_h98: c * self.alpha_h98,
        }
    }
}

mod unbounded {
    //! `null` in config files stands for an infinite band edge.
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub mod lower {
        use super::*;
        pub use super::serialize;
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
            Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
        }
    }

    pub mod upper {
        use super::*;
        pub use super::serialize;
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
            Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
        }
    }
}

/// Trapezoid: 0 outside `[low_zero, high_zero]`, 1 on `[low_one, high_one]`,
/// linear in between. Infinite edges give one-sided bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetBand {
    #[serde(with = "unbounded::lower")]
    pub low_zero: f64,
    #[serde(with = "unbounded::lower")]
    pub low_one: f64,
    #[serde(with = "unbounded::upper")]
    pub high_one: f64,
    #[serde(with = "unbounded::upper")]
    pub high_zero: f64,
}

impl TargetBand {
    /// Rises from 0 at `zero` to 1 at `one`, then stays at 1.
    pub fn at_least(zero: f64, one: f64) -> Self {
        Self {
            low_zero: zero,
            low_one: one,
            high_one: f64::INFINITY,
            high_zero: f64::INFINITY,
        }
    }

    /// 1 up to `one`, falling to 0 at `zero`.
    pub fn at_most(one: f64, zero: f64) -> Self {
        Self {
            low_zero: f64::NEG_INFINITY,
            low_one: f64::NEG_INFINITY,
            high_one: one,
            high_zero: zero,
        }
    }

    pub fn problems(&self, name: &str) -> Vec<String> {
        let Self { low_zero, low_one, high_one, high_zero } = *self;
        let mut out = Vec::new();
        if [low_zero, low_one, high_one, high_zero].iter().any(|v| v.is_nan()) {
            out.push(format!("reward.bands.{name} contains NaN"));
        } else if !(low_zero <= low_one && low_one <= high_one && high_one <= high_zero) {
            out.push(format!(
                "reward.bands.{name} must satisfy low_zero <= low_one <= high_one <= high_zero"
            ));
        } else if !(low_zero < low_one || low_one < high_one || high_one < high_zero) {
            out.push(format!("reward.bands.{name} is degenerate"));
        }
        out
    }
}

/// Trapezoidal band membership of `x`, in `[0, 1]`.
pub fn g_term(x: f64, band: &TargetBand) -> f64 {
    if x.is_nan() || x < band.low_zero || x > band.high_zero {
        return 0.0;
    }
    if x < band.low_one {
        return (x - band.low_zero) / (band.low_one - band.low_zero);
    }
    if x > band.high_one {
        return (band.high_zero - x) / (band.high_zero - band.high_one);
    }
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardBands {
    pub q: TargetBand,
    pub q_min: TargetBand,
    pub q95: TargetBand,
    pub h98: TargetBand,
}

impl Default for RewardBands {
    fn default() -> Self {
        Self {
            q: TargetBand::at_least(0.0, 10.0),
            q_min: TargetBand::at_least(0.5, 1.0),
            q95: TargetBand {
                low_zero: 2.0,
                low_one: 3.0,
                high_one: 4.0,
                high_zero: 6.0,
            },
            h98: TargetBand::at_least(0.5, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterHybridReward {
    pub weights: RewardWeights,
    pub bands: RewardBands,
}

impl IterHybridReward {
    pub fn reward(&self, derived: &DerivedQuantities) -> f64 {
        reward(derived, &self.weights, &self.bands)
    }

    pub fn problems(&self) -> Vec<String> {
        let w = &self.weights;
        let mut out = Vec::new();
        for (name, v) in [
            ("alpha_q", w.alpha_q),
            ("alpha_qmin", w.alpha_qmin),
            ("alpha_q95", w.alpha_q95),
            ("alpha_h98", w.alpha_h98),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                out.push(format!("reward.weights.{name} must be finite and >= 0, got {v}"));
            }
        }
        out.extend(self.bands.q.problems("q"));
        out.extend(self.bands.q_min.problems("q_min"));
        out.extend(self.bands.q95.problems("q95"));
        out.extend(self.bands.h98.problems("h98"));
        out
    }
}

/// `alpha_q g(Q) + alpha_qmin g(q_min) + alpha_q95 g(q95) + alpha_h98 g(H98)`.
pub fn reward(derived: &DerivedQuantities, weights: &RewardWeights, bands: &RewardBands) -> f64 {
    weights.alpha_q * g_term(derived.q_fusion_gain, &bands.q)
        + weights.alpha_qmin * g_term(derived.q_min, &bands.q_min)
        + weights.alpha_q95 * g_term(derived.q95, &bands.q95)
        + weights.alpha_h98 * g_term(derived.h98, &bands.h98)
}

pub fn action_spec() -> ActionSpec {
    ActionSpec {
        channels: vec![
            ActionChannel {
                channel: ControlChannel::PlasmaCurrent,
                lower: IP_BOUNDS_MA.0,
                upper: IP_BOUNDS_MA.1,
                ramp_rate_limit: Some(IP_RAMP_LIMIT_MA),
            },
            ActionChannel {
                channel: ControlChannel::NbiPower,
                lower: NBI_BOUNDS_MW.0,
                upper: NBI_BOUNDS_MW.1,
                ramp_rate_limit: None,
            },
            ActionChannel {
                channel: ControlChannel::EcrhPower,
                lower: ECRH_BOUNDS_MW.0,
                upper: ECRH_BOUNDS_MW.1,
                ramp_rate_limit: None,
            },
        ],
    }
}

/// Every state profile, derived quantity, control and the time, each with
/// a normalization range covering the scenario's operating space.
pub fn full_observation() -> ObservationSpec {
    use ObservedQuantity::*;
    let bounds = |q: ObservedQuantity| -> (f64, f64) {
        match q {
            TI | TE => (0.0, 40.0),
            NE => (0.0, 15.0),
            J => (-1.0, 5.0),
            Psi => (0.0, 150.0),
            QProfile => (0.0, 20.0),
            QMin => (0.0, 5.0),
            Q95 => (0.0, 20.0),
            Beta => (0.0, 0.1),
            FusionGain => (0.0, 20.0),
            H98 => (0.0, 3.0),
            IP => (0.0, 20.0),
            PNbi => (0.0, 40.0),
            PEcrh => (0.0, 40.0),
            Time => (0.0, 150.0),
        }
    };
    ObservationSpec {
        fields: ObservedQuantity::ALL
            .into_iter()
            .map(|quantity| {
                let (lower, upper) = bounds(quantity);
                ObservedField { quantity, lower, upper }
            })
            .collect(),
    }
}

/// The canonical `iter_hybrid` environment.
pub fn build_iter_hybrid_env() -> EnvConfig {
    EnvConfig {
        sim: SimConfig::iter_like(),
        initial_profiles: ProfileSet::iter_hybrid_start(),
        horizon_steps: HORIZON_STEPS,
        control_interval_s: CONTROL_INTERVAL_S,
        substep_mode: SubstepMode::Fixed,
        k_fixed: Some(SUBSTEPS_PER_INTERVAL),
        action_spec: action_spec(),
        observation_spec: full_observation(),
        uncontrolled_series: Default::default(),
        reward: RewardSpec::IterHybrid(IterHybridReward::default()),
        gamma: 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn derived(q: f64, q_min: f64, q95: f64, h98: f64) -> DerivedQuantities {
        DerivedQuantities {
            q_profile: vec![q_min],
            q_min,
            q95,
            beta: 0.0,
            q_fusion_gain: q,
            h98,
            p_fusion_mw: 0.0,
            stored_energy_mj: 0.0,
            tau_e_s: 0.0,
            p_loss_mw: 0.0,
        }
    }

    fn trapezoid() -> TargetBand {
        TargetBand { low_zero: 1.0, low_one: 3.0, high_one: 5.0, high_zero: 9.0 }
    }

    #[test]
    fn g_examples() {
        let b = trapezoid();
        assert_eq!(g_term(4.0, &b), 1.0);
        assert_eq!(g_term(1.0, &b), 0.0);
        assert_eq!(g_term(2.0, &b), 0.5);
        assert_eq!(g_term(7.0, &b), 0.5);
        assert_eq!(g_term(0.0, &b), 0.0);
        assert_eq!(g_term(10.0, &b), 0.0);
        assert_eq!(g_term(f64::NAN, &b), 0.0);
    }

    #[test]
    fn one_sided_band_is_a_descending_ramp() {
        let b = TargetBand::at_most(2.0, 6.0);
        assert_eq!(g_term(-1e9, &b), 1.0);
        assert_eq!(g_term(2.0, &b), 1.0);
        assert_eq!(g_term(3.0, &b), 0.75);
        assert_eq!(g_term(6.0, &b), 0.0);
        assert_eq!(g_term(60.0, &b), 0.0);
    }

    #[test]
    fn reward_examples() {
        let perfect = derived(20.0, 1.5, 3.5, 1.2);
        let bands = RewardBands::default();
        let zero = RewardWeights { alpha_q: 0.0, alpha_qmin: 0.0, alpha_q95: 0.0, alpha_h98: 0.0 };
        assert_eq!(reward(&perfect, &zero, &bands), 0.0);
        let r = reward(&perfect, &RewardWeights::default(), &bands);
        assert!((r - 0.03).abs() < 1e-15);
    }

    #[test]
    fn band_validation() {
        assert!(trapezoid().problems("x").is_empty());
        let flat = TargetBand { low_zero: 1.0, low_one: 1.0, high_one: 1.0, high_zero: 1.0 };
        assert_eq!(flat.problems("x").len(), 1);
        let swapped = TargetBand { low_zero: 3.0, low_one: 1.0, high_one: 5.0, high_zero: 9.0 };
        assert_eq!(swapped.problems("x").len(), 1);
    }

    #[test]
    fn infinite_edges_serialize_as_null() {
        let b = TargetBand::at_least(0.0, 10.0);
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"low_zero":0.0,"low_one":10.0,"high_one":null,"high_zero":null}"#);
        let back: TargetBand = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
        let lower: TargetBand =
            serde_json::from_str(r#"{"low_zero":null,"low_one":null,"high_one":1,"high_zero":2}"#).unwrap();
        assert_eq!(lower, TargetBand::at_most(1.0, 2.0));
    }

    #[test]
    fn scenario_constants() {
        let env = build_iter_hybrid_env();
        let ip = &env.action_spec.channels[0];
        assert_eq!(ip.channel, ControlChannel::PlasmaCurrent);
        assert_eq!(ip.upper, 15.0);
        assert_eq!(ip.ramp_rate_limit, Some(0.2));
        assert_eq!(env.horizon_steps as f64 * env.control_interval_s, 150.0);
        assert_eq!(env.sim.lh_transition_time_s, RAMP_DURATION_S);
        assert_eq!(env.gamma, 1.0);
        assert_eq!(env.observation_spec.fields.len(), ObservedQuantity::ALL.len());
        env.validate().unwrap();
    }

    proptest! {
        #[test]
        fn g_is_piecewise_linear_with_analytic_slope(x in 1.0f64..2.999, h in 1e-6f64..1e-4) {
            let b = trapezoid();
            let x2 = (x + h).min(3.0);
            let fd = (g_term(x2, &b) - g_term(x, &b)) / (x2 - x);
            prop_assert!((fd - 0.5).abs() < 1e-9 / (x2 - x).max(1e-6) * 1e-3 + 1e-6);
        }

        #[test]
        fn reward_is_bounded_and_monotone(
            q in 0.0f64..30.0, qm in 0.0f64..3.0, q95 in 0.0f64..10.0, h in 0.0f64..3.0,
            dq in 0.0f64..1.0,
        ) {
            let w = RewardWeights::default();
            let bands = RewardBands::default();
            let r = reward(&derived(q, qm, q95, h), &w, &bands);
            prop_assert!(r >= 0.0 && r <= w.total() + 1e-15);
            // Q and H98 bands are one-sided, so raising them never lowers the reward
            let r2 = reward(&derived(q + dq, qm, q95, h + dq), &w, &bands);
            prop_assert!(r2 >= r);
            let scaled = reward(&derived(q, qm, q95, h), &w.scaled(3.0), &bands);
            prop_assert!((scaled - 3.0 * r).abs() < 1e-15);
        }
    }
}
