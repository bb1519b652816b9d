//! Random-waypoint group mobility and Poisson traffic.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::{EnvConfig, Environment, NetworkState};
use crate::channel::Location3D;

pub(super) fn member_location(cfg: &EnvConfig, center: &Location3D, offset: [f64; 2]) -> Location3D {
    Location3D::new(
        (center.x + offset[0]).clamp(0.0, cfg.area_x_m),
        (center.y + offset[1]).clamp(0.0, cfg.area_y_m),
        0.0,
    )
}

/// Per-UE demand in bit/s, drawn from Poisson(`poisson_mbps`) in Mbps.
pub fn sample_traffic<R: Rng + ?Sized>(num_ues: usize, poisson_mbps: f64, rng: &mut R) -> Vec<f64> {
    if poisson_mbps <= 0.0 {
        return vec![0.0; num_ues];
    }
    let dist = Poisson::new(poisson_mbps).expect("positive poisson rate");
    (0..num_ues).map(|_| dist.sample(rng) * 1e6).collect()
}

impl Environment {
    /// Moves every centroid one slot toward its waypoint and carries the
    /// member UEs along. A centroid that can reach its waypoint within the
    /// slot lands on it and draws a fresh waypoint.
    pub fn move_ues<R: Rng + ?Sized>(&self, state: &mut NetworkState, rng: &mut R) {
        let cfg = &self.config;
        for c in &mut state.centroids {
            let travel = c.speed_mps * cfg.step_duration_s;
            if travel <= 0.0 {
                continue;
            }
            let remaining = c.center.horizontal_distance(&c.waypoint);
            if remaining <= travel {
                c.center = c.waypoint;
                c.waypoint = self.uniform_in_area(rng);
            } else {
                let f = travel / remaining;
                c.center.x += (c.waypoint.x - c.center.x) * f;
                c.center.y += (c.waypoint.y - c.center.y) * f;
            }
        }
        for ue in &mut state.ues {
            ue.loc = member_location(cfg, &state.centroids[ue.centroid_id].center, ue.offset);
        }
    }
}
