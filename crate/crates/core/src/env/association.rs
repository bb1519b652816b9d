//! Capacity-capped max-SNR association.

use std::cmp::Ordering;

use super::{Environment, NetworkState, ServingAp};
use crate::channel::{self, ChannelParams, Location3D};

/// SNR in dB of a link evaluated on expected path loss (no fading, no
/// shadowing).
pub(crate) fn expected_snr_db(params: &ChannelParams, tx: &Location3D, rx: &Location3D) -> f64 {
    let pl = channel::expected_pathloss_db(params, tx, rx);
    channel::rx_power_dbm(params, tx, rx, pl, 1.0) - params.noise_power_dbm()
}

impl Environment {
    /// Recomputes `serving_ap` for every UE and `connected_ues` for every MAP.
    ///
    /// Only UE-MAP pairs whose SNR beats the UE's MBS SNR are candidates.
    /// Candidates are granted in descending SNR order (ties: lower UE id,
    /// then lower MAP id) while the MAP has a free slot; everything left
    /// over attaches to the MBS, which has no cap.
    pub fn associate(&self, state: &mut NetworkState) {
        let mbs = &self.config.mbs_location;
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for ue in &state.ues {
            let mbs_snr = expected_snr_db(&self.radio.mbs, mbs, &ue.loc);
            for map in &state.maps {
                let snr = expected_snr_db(&self.radio.map, &map.loc, &ue.loc);
                if snr > mbs_snr {
                    candidates.push((snr, ue.id, map.id));
                }
            }
        }
        candidates.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });

        for ue in &mut state.ues {
            ue.serving_ap = ServingAp::Mbs;
        }
        let mut slots: Vec<Vec<usize>> = vec![Vec::new(); state.maps.len()];
        let mut assigned = vec![false; state.ues.len()];
        let cap = self.config.max_connections;
        for (_, ue, map) in candidates {
            if assigned[ue] || slots[map].len() >= cap {
                continue;
            }
            assigned[ue] = true;
            slots[map].push(ue);
            state.ues[ue].serving_ap = ServingAp::Map(map);
        }
        for (map, mut ues) in state.maps.iter_mut().zip(slots) {
            ues.sort_unstable();
            map.connected_ues = ues;
        }
    }
}
