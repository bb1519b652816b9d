//! Hierarchical coverage-then-rate reward with a Gompertz gate.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// Reference distance `d0` to the target centroid.
    pub d0_m: f64,
    /// Distance normalizer. `None` uses the deployment-area diagonal.
    pub d_max_m: Option<f64>,
    /// Number of past episodes in the sum-rate running mean.
    pub r_avg_window: usize,
    pub gompertz_a: f64,
    /// Per meter.
    pub gompertz_b: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { d0_m: 30.0, d_max_m: None, r_avg_window: 100, gompertz_a: 0.9, gompertz_b: 0.06 }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.d0_m > 0.0 && self.d_max_m.is_none_or(|d| d > 0.0) && self.r_avg_window > 0;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Config("reward: d0_m, d_max_m and r_avg_window must be > 0".into()))
        }
    }
}

/// Smooth coverage gate `1 - a exp(-exp(-b (d - d0)))`, in `(1 - a, 1)`.
pub fn gompertz_delta(distance_m: f64, config: &RewardConfig) -> f64 {
    1.0 - config.gompertz_a * (-(-config.gompertz_b * (distance_m - config.d0_m)).exp()).exp()
}

/// Normalizers for the two reward terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardScale {
    pub d_max_m: f64,
    pub r_avg_bps: f64,
}

/// `(delta - 1) d / d_max + delta (R / r_avg - d0 / d_max)`.
///
/// The first term pulls the agent toward its centroid; once it is within
/// roughly `d0` the gate opens onto the normalized sum-rate.
pub fn reward(distance_m: f64, sum_rate_bps: f64, scale: RewardScale, config: &RewardConfig) -> f64 {
    let delta = gompertz_delta(distance_m, config);
    let rate_term = sum_rate_bps / scale.r_avg_bps - config.d0_m / scale.d_max_m;
    (delta - 1.0) * distance_m / scale.d_max_m + delta * rate_term
}

/// Mean of the last `window` pushed values.
#[derive(Debug, Clone)]
pub struct RunningMean {
    window: usize,
    values: VecDeque<f64>,
}

impl RunningMean {
    pub fn new(window: usize) -> Self {
        Self { window, values: VecDeque::with_capacity(window) }
    }

    pub fn push(&mut self, v: f64) {
        if self.values.len() == self.window {
            self.values.pop_front();
        }
        self.values.push_back(v);
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.values.is_empty()).then(|| self.values.iter().sum::<f64>() / self.values.len() as f64)
    }
}
