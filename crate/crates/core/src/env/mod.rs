//! Discrete-time network environment.
//!
//! One [`NetworkState`] holds every UE and MAP. [`Environment`] owns the
//! static configuration and advances a state one slot at a time: MAP moves,
//! UE mobility, traffic redraw, then max-SNR association.

mod association;
mod metrics;
mod mobility;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{Location3D, RadioConfig};
use crate::error::{Error, Result};

pub use metrics::{ChannelDraw, Load};
pub use mobility::sample_traffic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub area_x_m: f64,
    pub area_y_m: f64,
    /// Altitude bounds of the operation zone.
    pub z_min_m: f64,
    pub z_max_m: f64,
    /// Per-slot MAP displacement.
    pub step_size_m: f64,
    /// Connection cap per MAP.
    pub max_connections: usize,
    pub num_maps: usize,
    pub num_ues: usize,
    pub episode_len: usize,
    pub neighborhood_ue_max: usize,
    pub neighborhood_map_max: usize,
    pub ue_speed_mps: f64,
    pub step_duration_s: f64,
    pub traffic_poisson_mbps: f64,
    pub centroid_radius_m: f64,
    pub mbs_location: Location3D,
    /// Count other MAPs' received power as interference.
    pub inter_cell_interference: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            area_x_m: 200.0,
            area_y_m: 200.0,
            z_min_m: 10.0,
            z_max_m: 150.0,
            step_size_m: 5.0,
            max_connections: 15,
            num_maps: 3,
            num_ues: 25,
            episode_len: 300,
            neighborhood_ue_max: 15,
            neighborhood_map_max: 3,
            ue_speed_mps: 0.8,
            step_duration_s: 1.0,
            traffic_poisson_mbps: 1000.0,
            centroid_radius_m: 25.0,
            mbs_location: Location3D::new(100.0, -1000.0, 25.0),
            inter_cell_interference: true,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.area_x_m > 0.0 && self.area_y_m > 0.0) {
            return fail("deployment area must have positive extent");
        }
        if !(self.z_min_m >= 0.0 && self.z_min_m <= self.z_max_m) {
            return fail("operation zone needs 0 <= z_min_m <= z_max_m");
        }
        if !(self.step_size_m > 0.0) {
            return fail("step_size_m must be > 0");
        }
        if self.num_maps == 0 {
            return fail("num_maps must be >= 1");
        }
        if self.neighborhood_ue_max == 0 || self.neighborhood_map_max == 0 {
            return fail("neighborhood caps must be >= 1");
        }
        if !(self.ue_speed_mps >= 0.0 && self.step_duration_s > 0.0) {
            return fail("ue_speed_mps must be >= 0 and step_duration_s > 0");
        }
        if !(self.traffic_poisson_mbps >= 0.0 && self.centroid_radius_m >= 0.0) {
            return fail("traffic and centroid radius must be non-negative");
        }
        if !self.mbs_location.is_valid() {
            return fail("mbs_location must be finite with z >= 0");
        }
        Ok(())
    }

    /// Clamp a location componentwise into the operation zone.
    pub fn clamp_to_zone(&self, loc: Location3D) -> Location3D {
        Location3D::new(
            loc.x.clamp(0.0, self.area_x_m),
            loc.y.clamp(0.0, self.area_y_m),
            loc.z.clamp(self.z_min_m, self.z_max_m),
        )
    }

    pub fn in_zone(&self, loc: &Location3D) -> bool {
        (0.0..=self.area_x_m).contains(&loc.x)
            && (0.0..=self.area_y_m).contains(&loc.y)
            && (self.z_min_m..=self.z_max_m).contains(&loc.z)
    }

    pub fn area_diagonal_m(&self) -> f64 {
        self.area_x_m.hypot(self.area_y_m)
    }

    /// Number of UEs attached to each mobility centroid: as even as possible,
    /// earlier centroids take the remainder.
    pub fn centroid_sizes(&self) -> Vec<usize> {
        let m = self.num_maps;
        (0..m)
            .map(|c| self.num_ues / m + usize::from(c < self.num_ues % m))
            .collect()
    }
}

/// MAP movement primitives. FORWARD/BACKWARD move along +y/-y, RIGHT/LEFT
/// along +x/-x and UP/DOWN along +z/-z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Forward,
    Backward,
    Up,
    Down,
    Left,
    Right,
    Hover,
}

impl Action {
    pub const COUNT: usize = 7;
    pub const ALL: [Action; Action::COUNT] = [
        Action::Forward,
        Action::Backward,
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::Hover,
    ];

    pub fn index(self) -> usize {
        Action::ALL.iter().position(|&a| a == self).expect("listed")
    }

    pub fn from_index(i: usize) -> Action {
        Action::ALL[i]
    }

    /// Unit direction of the move.
    pub fn direction(self) -> [f64; 3] {
        match self {
            Action::Forward => [0.0, 1.0, 0.0],
            Action::Backward => [0.0, -1.0, 0.0],
            Action::Up => [0.0, 0.0, 1.0],
            Action::Down => [0.0, 0.0, -1.0],
            Action::Left => [-1.0, 0.0, 0.0],
            Action::Right => [1.0, 0.0, 0.0],
            Action::Hover => [0.0, 0.0, 0.0],
        }
    }

    /// Action that moves along `delta` (a unit lattice step), if any.
    pub fn from_direction(delta: [i64; 3]) -> Option<Action> {
        Action::ALL.iter().copied().find(|a| {
            let d = a.direction();
            d[0] as i64 == delta[0] && d[1] as i64 == delta[1] && d[2] as i64 == delta[2]
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ServingAp {
    Map(usize),
    Mbs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeState {
    pub id: usize,
    pub loc: Location3D,
    pub demand_bps: f64,
    pub serving_ap: ServingAp,
    pub centroid_id: usize,
    /// Horizontal offset from the mobility centroid, fixed for the episode.
    pub offset: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapState {
    pub id: usize,
    pub loc: Location3D,
    /// Sorted UE ids.
    pub connected_ues: Vec<usize>,
}

/// Group mobility anchor: UEs translate rigidly with it.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityCentroid {
    pub center: Location3D,
    pub waypoint: Location3D,
    pub speed_mps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub time: usize,
    pub ues: Vec<UeState>,
    pub maps: Vec<MapState>,
    pub centroids: Vec<MobilityCentroid>,
}

impl NetworkState {
    pub fn map_locations(&self) -> Vec<Location3D> {
        self.maps.iter().map(|m| m.loc).collect()
    }

    pub fn ue_locations(&self) -> Vec<Location3D> {
        self.ues.iter().map(|u| u.loc).collect()
    }

    pub fn total_demand_bps(&self) -> f64 {
        self.ues.iter().map(|u| u.demand_bps).sum()
    }
}

/// Entity class of a neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityClass {
    Ue,
    Map,
}

/// Static environment description: geometry, traffic and radio parameters.
#[derive(Debug, Clone)]
pub struct Environment {
    pub config: EnvConfig,
    pub radio: RadioConfig,
}

impl Environment {
    pub fn new(config: EnvConfig, radio: RadioConfig) -> Result<Self> {
        config.validate()?;
        radio.validate()?;
        Ok(Self { config, radio })
    }

    fn uniform_in_area<R: Rng + ?Sized>(&self, rng: &mut R) -> Location3D {
        Location3D::new(
            rng.random::<f64>() * self.config.area_x_m,
            rng.random::<f64>() * self.config.area_y_m,
            0.0,
        )
    }

    /// Fresh random deployment with traffic drawn and association computed.
    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> NetworkState {
        let cfg = &self.config;
        let maps = (0..cfg.num_maps)
            .map(|id| {
                let p = self.uniform_in_area(rng);
                let z = cfg.z_min_m + rng.random::<f64>() * (cfg.z_max_m - cfg.z_min_m);
                MapState { id, loc: Location3D::new(p.x, p.y, z), connected_ues: Vec::new() }
            })
            .collect();

        let centroids: Vec<MobilityCentroid> = (0..cfg.num_maps)
            .map(|_| MobilityCentroid {
                center: self.uniform_in_area(rng),
                waypoint: self.uniform_in_area(rng),
                speed_mps: cfg.ue_speed_mps,
            })
            .collect();

        let mut ues = Vec::with_capacity(cfg.num_ues);
        for (c, &size) in cfg.centroid_sizes().iter().enumerate() {
            for _ in 0..size {
                // Uniform in the disc.
                let r = cfg.centroid_radius_m * rng.random::<f64>().sqrt();
                let a = std::f64::consts::TAU * rng.random::<f64>();
                let offset = [r * a.cos(), r * a.sin()];
                let id = ues.len();
                ues.push(UeState {
                    id,
                    loc: mobility::member_location(cfg, &centroids[c].center, offset),
                    demand_bps: 0.0,
                    serving_ap: ServingAp::Mbs,
                    centroid_id: c,
                    offset,
                });
            }
        }

        let mut state = NetworkState { time: 0, ues, maps, centroids };
        let demands = sample_traffic(cfg.num_ues, cfg.traffic_poisson_mbps, rng);
        for (ue, d) in state.ues.iter_mut().zip(demands) {
            ue.demand_bps = d;
        }
        self.associate(&mut state);
        state
    }

    /// Advance one slot: execute one action per MAP (clamped into the
    /// zone), move UEs, redraw traffic and recompute association.
    pub fn step<R: Rng + ?Sized>(&self, state: &mut NetworkState, actions: &[Action], rng: &mut R) -> Result<()> {
        if actions.len() != state.maps.len() {
            return Err(Error::ActionCount { expected: state.maps.len(), got: actions.len() });
        }
        let step = self.config.step_size_m;
        for (map, action) in state.maps.iter_mut().zip(actions) {
            let [dx, dy, dz] = action.direction();
            let moved = Location3D::new(map.loc.x + dx * step, map.loc.y + dy * step, map.loc.z + dz * step);
            map.loc = self.config.clamp_to_zone(moved);
        }
        self.move_ues(state, rng);
        let demands = sample_traffic(state.ues.len(), self.config.traffic_poisson_mbps, rng);
        for (ue, d) in state.ues.iter_mut().zip(demands) {
            ue.demand_bps = d;
        }
        self.associate(state);
        state.time += 1;
        Ok(())
    }
}
