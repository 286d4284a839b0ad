//! Piecewise-linear time series given as `(time, value)` breakpoints.

use serde::{Deserialize, Serialize};

/// Breakpoints sorted by strictly increasing time. Sampling interpolates
/// linearly and holds the end values outside the covered range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Breakpoints(pub Vec<(f64, f64)>);

impl Breakpoints {
    pub fn constant(value: f64) -> Self {
        Self(vec![(0.0, value)])
    }

    pub fn sample(&self, t: f64) -> f64 {
        let pts = &self.0;
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        if t <= first.0 {
            return first.1;
        }
        if t >= last.0 {
            return last.1;
        }
        // first index with time > t; t is strictly inside the range here
        let hi = pts.partition_point(|p| p.0 <= t);
        let (t0, v0) = pts[hi - 1];
        let (t1, v1) = pts[hi];
        if t == t0 {
            return v0;
        }
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|p| p.1)
    }

    /// Every violated invariant: non-empty, finite, strictly increasing
    /// times, first time at zero.
    pub fn problems(&self, name: &str) -> Vec<String> {
        let mut out = Vec::new();
        if self.0.is_empty() {
            out.push(format!("{name} has no breakpoints"));
            return out;
        }
        if self.0.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            out.push(format!("{name} has non-finite breakpoints"));
        }
        if self.0[0].0 != 0.0 {
            out.push(format!("{name} must start at t = 0, starts at {}", self.0[0].0));
        }
        if self.0.windows(2).any(|w| w[1].0 <= w[0].0) {
            out.push(format!("{name} breakpoint times must be strictly increasing"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp() -> Breakpoints {
        Breakpoints(vec![(0.0, 3.0), (100.0, 15.0), (120.0, 15.0)])
    }

    #[test]
    fn breakpoints_are_hit_exactly() {
        let b = ramp();
        assert_eq!(b.sample(0.0), 3.0);
        assert_eq!(b.sample(100.0), 15.0);
        assert_eq!(b.sample(50.0), 9.0);
    }

    #[test]
    fn holds_outside_range() {
        let b = ramp();
        assert_eq!(b.sample(-4.0), 3.0);
        assert_eq!(b.sample(1e6), 15.0);
    }

    #[test]
    fn validation() {
        assert!(ramp().problems("x").is_empty());
        assert_eq!(Breakpoints(vec![]).problems("x").len(), 1);
        assert_eq!(Breakpoints(vec![(1.0, 0.0), (1.0, 2.0)]).problems("x").len(), 2);
    }

    #[test]
    fn parses_as_pairs() {
        let b: Breakpoints = serde_json::from_str("[[0, 1], [10, 2.5]]").unwrap();
        assert_eq!(b.sample(5.0), 1.75);
    }

    proptest! {
        #[test]
        fn continuous_and_bounded(t in -10.0f64..200.0, dt in 1e-9f64..1e-6) {
            let b = ramp();
            let (a, c) = (b.sample(t), b.sample(t + dt));
            prop_assert!((a - c).abs() <= 0.12 * dt + 1e-12);
            prop_assert!((3.0..=15.0).contains(&a));
        }
    }
}
