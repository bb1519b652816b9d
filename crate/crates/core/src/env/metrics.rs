//! Sum-rate, load and neighborhood queries on a [`NetworkState`].

use rand::Rng;

use super::{EntityClass, Environment, NetworkState, ServingAp};
use crate::channel::{self, Location3D};

/// How link realizations are drawn when computing rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelDraw {
    /// LoS state, shadowing and Nakagami fading sampled per link.
    Sampled,
    /// Expected path loss, no shadowing, unit fading. Consumes no randomness.
    Expected,
}

/// Fraction of all UEs attached to each MAP.
#[derive(Debug, Clone, PartialEq)]
pub struct Load {
    pub per_map: Vec<f64>,
    pub total: f64,
    pub mbs_share: f64,
}

impl Environment {
    fn link_rx_dbm<R: Rng + ?Sized>(
        &self,
        params: &channel::ChannelParams,
        tx: &Location3D,
        rx: &Location3D,
        draw: ChannelDraw,
        rng: &mut R,
    ) -> f64 {
        match draw {
            ChannelDraw::Sampled => {
                let pl = channel::sample_pathloss_db(params, tx, rx, rng);
                let fading = channel::sample_fading(params.nakagami_nu, rng);
                channel::rx_power_dbm(params, tx, rx, pl, fading)
            }
            ChannelDraw::Expected => {
                let pl = channel::expected_pathloss_db(params, tx, rx);
                channel::rx_power_dbm(params, tx, rx, pl, 1.0)
            }
        }
    }

    /// Achievable rate of every UE at its serving AP, before the demand cap.
    ///
    /// Links are realized in a fixed order (per UE: every MAP, then the MBS)
    /// so the random stream consumption does not depend on association.
    pub fn ue_link_rates<R: Rng + ?Sized>(&self, state: &NetworkState, draw: ChannelDraw, rng: &mut R) -> Vec<f64> {
        let map_params = &self.radio.map;
        let mbs_params = &self.radio.mbs;
        let mbs_users = state.ues.iter().filter(|u| u.serving_ap == ServingAp::Mbs).count();
        let map_noise = map_params.noise_power_dbm();
        let mbs_noise = mbs_params.noise_power_dbm();

        let mut rx_from_maps = vec![0.0; state.maps.len()];
        state
            .ues
            .iter()
            .map(|ue| {
                for (slot, map) in rx_from_maps.iter_mut().zip(&state.maps) {
                    *slot = self.link_rx_dbm(map_params, &map.loc, &ue.loc, draw, rng);
                }
                let rx_mbs = self.link_rx_dbm(mbs_params, &self.config.mbs_location, &ue.loc, draw, rng);
                match ue.serving_ap {
                    ServingAp::Map(i) => {
                        let interferers: Vec<f64> = if self.config.inter_cell_interference {
                            rx_from_maps
                                .iter()
                                .enumerate()
                                .filter(|&(k, _)| k != i)
                                .map(|(_, &p)| p)
                                .collect()
                        } else {
                            Vec::new()
                        };
                        let sinr = channel::sinr(rx_from_maps[i], &interferers, map_noise);
                        let share = map_params.bandwidth_hz / state.maps[i].connected_ues.len() as f64;
                        channel::shannon_rate(share, sinr)
                    }
                    ServingAp::Mbs => {
                        let sinr = channel::sinr(rx_mbs, &[], mbs_noise);
                        channel::shannon_rate(mbs_params.bandwidth_hz / mbs_users as f64, sinr)
                    }
                }
            })
            .collect()
    }

    /// Effective network sum-rate: every UE contributes
    /// `min(demand, achievable rate)` at its serving AP, MBS included.
    pub fn sum_rate<R: Rng + ?Sized>(&self, state: &NetworkState, draw: ChannelDraw, rng: &mut R) -> f64 {
        self.ue_link_rates(state, draw, rng)
            .iter()
            .zip(&state.ues)
            .map(|(&r, ue)| ue.demand_bps.min(r))
            .sum()
    }

    pub fn network_load(&self, state: &NetworkState) -> Load {
        let k = state.ues.len();
        if k == 0 {
            return Load { per_map: vec![0.0; state.maps.len()], total: 0.0, mbs_share: 0.0 };
        }
        let per_map: Vec<f64> = state
            .maps
            .iter()
            .map(|m| m.connected_ues.len() as f64 / k as f64)
            .collect();
        let on_maps: usize = state.maps.iter().map(|m| m.connected_ues.len()).sum();
        Load {
            total: on_maps as f64 / k as f64,
            mbs_share: (k - on_maps) as f64 / k as f64,
            per_map,
        }
    }

    /// Locations of the nearest entities of `class` around MAP `agent`,
    /// nearest first, capped by the configured neighborhood size. The agent
    /// itself is never its own MAP neighbor. Ties go to the lower id.
    pub fn neighborhood(&self, state: &NetworkState, agent: usize, class: EntityClass) -> Vec<Location3D> {
        let own = state.maps[agent].loc;
        let (mut ranked, cap): (Vec<(f64, usize, Location3D)>, usize) = match class {
            EntityClass::Ue => (
                state.ues.iter().map(|u| (own.distance(&u.loc), u.id, u.loc)).collect(),
                self.config.neighborhood_ue_max,
            ),
            EntityClass::Map => (
                state
                    .maps
                    .iter()
                    .filter(|m| m.id != agent)
                    .map(|m| (own.distance(&m.loc), m.id, m.loc))
                    .collect(),
                self.config.neighborhood_map_max,
            ),
        };
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        ranked.into_iter().take(cap).map(|(_, _, loc)| loc).collect()
    }
}
