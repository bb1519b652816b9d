//! Radio channel models for the two link classes.
//!
//! MAPs reach UEs over a mmWave air-to-ground link: free-space path loss with
//! log-normal shadowing, mixed over an elevation-dependent LoS probability.
//! The macro base station uses a sub-6GHz ground-to-ground alpha-beta-gamma
//! model. Both link classes see Nakagami fading on top.
//!
//! Everything here is a pure function; randomness comes in through an
//! explicit `Rng` argument.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// A point in the deployment frame, meters. Ground level is `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Location3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Location3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.z >= 0.0
    }

    pub fn distance(&self, other: &Location3D) -> f64 {
        let [dx, dy, dz] = self.offset_from(other);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn horizontal_distance(&self, other: &Location3D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Componentwise `self - other`.
    pub fn offset_from(&self, other: &Location3D) -> [f64; 3] {
        [self.x - other.x, self.y - other.y, self.z - other.z]
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkClass {
    MmwaveAtg,
    Sub6Gtg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleUnit {
    Degrees,
    Radians,
}

impl AngleUnit {
    pub fn from_radians(self, rad: f64) -> f64 {
        match self {
            AngleUnit::Degrees => rad.to_degrees(),
            AngleUnit::Radians => rad,
        }
    }

    pub fn to_degrees(self, angle: f64) -> f64 {
        match self {
            AngleUnit::Degrees => angle,
            AngleUnit::Radians => angle.to_degrees(),
        }
    }
}

/// Parameters of one access-point class.
///
/// The air-to-ground S-curve fields (`los_alpha`, `los_beta`) only matter for
/// [`LinkClass::MmwaveAtg`]; the `abg_*` triples and `gtg_los_decay_m` only
/// for [`LinkClass::Sub6Gtg`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub link_class: LinkClass,
    pub carrier_freq_ghz: f64,
    pub bandwidth_hz: f64,
    pub noise_density_dbm_per_hz: f64,
    pub shadow_sigma_los_db: f64,
    pub shadow_sigma_nlos_db: f64,
    pub los_alpha: f64,
    pub los_beta: f64,
    /// Second (alpha, beta) row of the MAP column. Kept for reference, not
    /// used by the LoS probability.
    pub nlos_alpha: f64,
    pub nlos_beta: f64,
    pub abg_alpha_los: f64,
    pub abg_beta_los: f64,
    pub abg_eta_los: f64,
    pub abg_alpha_nlos: f64,
    pub abg_beta_nlos: f64,
    pub abg_eta_nlos: f64,
    /// Ground link LoS probability is `exp(-d / gtg_los_decay_m)`.
    pub gtg_los_decay_m: f64,
    pub tx_power_dbm: f64,
    pub antenna_gain_main_dbi: f64,
    pub antenna_gain_side_dbi: f64,
    pub aperture_angle_deg: f64,
    pub nakagami_nu: f64,
    pub angle_unit: AngleUnit,
}

impl ChannelParams {
    /// 28 GHz mmWave MAP defaults.
    pub fn map_default() -> Self {
        Self {
            link_class: LinkClass::MmwaveAtg,
            carrier_freq_ghz: 28.0,
            bandwidth_hz: 500e6,
            noise_density_dbm_per_hz: -174.0,
            // Listed as a 12 dB variance, so sigma = sqrt(12).
            shadow_sigma_los_db: 12f64.sqrt(),
            shadow_sigma_nlos_db: 12f64.sqrt(),
            los_alpha: 10.37,
            los_beta: 0.05,
            nlos_alpha: 35.85,
            nlos_beta: 0.04,
            abg_alpha_los: 2.0,
            abg_beta_los: 31.4,
            abg_eta_los: 2.1,
            abg_alpha_nlos: 3.5,
            abg_beta_nlos: 24.4,
            abg_eta_nlos: 1.9,
            gtg_los_decay_m: 150.0,
            tx_power_dbm: 30.0,
            antenna_gain_main_dbi: 15.0,
            antenna_gain_side_dbi: -10.0,
            aperture_angle_deg: 90.0,
            nakagami_nu: 1.0,
            angle_unit: AngleUnit::Degrees,
        }
    }

    /// 2 GHz macro base station defaults.
    pub fn mbs_default() -> Self {
        Self {
            link_class: LinkClass::Sub6Gtg,
            carrier_freq_ghz: 2.0,
            bandwidth_hz: 10e6,
            shadow_sigma_los_db: 3f64.sqrt(),
            shadow_sigma_nlos_db: 3f64.sqrt(),
            tx_power_dbm: 46.0,
            antenna_gain_main_dbi: 17.0,
            antenna_gain_side_dbi: 17.0,
            aperture_angle_deg: 180.0,
            ..Self::map_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("channel parameter {what}")))
            }
        };
        check(self.bandwidth_hz > 0.0, "bandwidth_hz must be > 0")?;
        check(self.carrier_freq_ghz > 0.0, "carrier_freq_ghz must be > 0")?;
        check(
            self.aperture_angle_deg > 0.0 && self.aperture_angle_deg <= 180.0,
            "aperture_angle_deg must lie in (0, 180]",
        )?;
        check(self.nakagami_nu > 0.0, "nakagami_nu must be > 0")?;
        check(
            self.shadow_sigma_los_db >= 0.0 && self.shadow_sigma_nlos_db >= 0.0,
            "shadow sigmas must be >= 0",
        )?;
        check(self.gtg_los_decay_m > 0.0, "gtg_los_decay_m must be > 0")?;
        Ok(())
    }

    pub fn noise_power_dbm(&self) -> f64 {
        self.noise_density_dbm_per_hz + 10.0 * self.bandwidth_hz.log10()
    }

    pub fn shadow_sigma_db(&self, los: bool) -> f64 {
        if los {
            self.shadow_sigma_los_db
        } else {
            self.shadow_sigma_nlos_db
        }
    }

    /// Two-level directive pattern: main-lobe gain inside the aperture cone
    /// around nadir, side-lobe gain outside it. `elevation_deg` is measured
    /// from the horizontal plane at the receiver.
    pub fn antenna_gain_dbi(&self, elevation_deg: f64) -> f64 {
        let cone_edge = 90.0 - self.aperture_angle_deg / 2.0;
        if elevation_deg >= cone_edge - 1e-9 {
            self.antenna_gain_main_dbi
        } else {
            self.antenna_gain_side_dbi
        }
    }
}

/// Channel parameters for both access-point classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioConfig {
    #[serde(default = "ChannelParams::map_default")]
    pub map: ChannelParams,
    #[serde(default = "ChannelParams::mbs_default")]
    pub mbs: ChannelParams,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self { map: ChannelParams::map_default(), mbs: ChannelParams::mbs_default() }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.map.link_class != LinkClass::MmwaveAtg || self.mbs.link_class != LinkClass::Sub6Gtg {
            return Err(Error::Config("radio.map must be mmwave_atg and radio.mbs sub6_gtg".into()));
        }
        self.map.validate()?;
        self.mbs.validate()
    }
}

/// Intermediate quantities of one realized link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub pathloss_db: f64,
    pub rx_power_dbm: f64,
    pub sinr_linear: f64,
    pub rate_bps: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Elevation of the MAP as seen from the UE, in `unit`.
///
/// A MAP directly overhead gives 90 degrees.
pub fn elevation_angle(map_loc: &Location3D, ue_loc: &Location3D, unit: AngleUnit) -> f64 {
    let dz = map_loc.z - ue_loc.z;
    let h = map_loc.horizontal_distance(ue_loc);
    unit.from_radians(dz.atan2(h))
}

/// S-curve LoS probability `1 / (1 + a exp(-b (theta - a)))`.
pub fn los_probability(theta: f64, params: &ChannelParams) -> f64 {
    let a = params.los_alpha;
    let b = params.los_beta;
    1.0 / (1.0 + a * (-b * (theta - a)).exp())
}

/// Free-space air-to-ground path loss plus an externally drawn shadowing
/// term. The caller draws `shadowing_db` with the sigma of the LoS class it
/// realized.
pub fn atg_pathloss(distance_m: f64, params: &ChannelParams, shadowing_db: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::Domain(format!("path loss distance must be > 0, got {distance_m}")));
    }
    let fc_hz = params.carrier_freq_ghz * 1e9;
    Ok(20.0 * (4.0 * std::f64::consts::PI * fc_hz * distance_m / SPEED_OF_LIGHT).log10() + shadowing_db)
}

/// LoS/NLoS mixture, taken in dB.
pub fn expected_atg_pathloss(p_los: f64, pl_los_db: f64, pl_nlos_db: f64) -> f64 {
    p_los * pl_los_db + (1.0 - p_los) * pl_nlos_db
}

/// Alpha-beta-gamma ground-to-ground path loss, frequency in GHz.
pub fn gtg_pathloss(distance_m: f64, los: bool, params: &ChannelParams, shadowing_db: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::Domain(format!("path loss distance must be > 0, got {distance_m}")));
    }
    let (alpha, beta, eta) = if los {
        (params.abg_alpha_los, params.abg_beta_los, params.abg_eta_los)
    } else {
        (params.abg_alpha_nlos, params.abg_beta_nlos, params.abg_eta_nlos)
    };
    Ok(10.0 * alpha * distance_m.log10() + beta + 10.0 * eta * params.carrier_freq_ghz.log10() + shadowing_db)
}

pub fn gtg_los_probability(distance_m: f64, params: &ChannelParams) -> f64 {
    (-distance_m / params.gtg_los_decay_m).exp()
}

/// Nakagami-`nu` power gain, i.e. a Gamma(nu, 1/nu) draw with unit mean.
pub fn sample_fading<R: Rng + ?Sized>(nu: f64, rng: &mut R) -> f64 {
    Gamma::new(nu, 1.0 / nu)
        .expect("nakagami nu must be > 0")
        .sample(rng)
}

/// Linear SINR from powers in dBm.
pub fn sinr(serving_rx_dbm: f64, interferer_rx_dbm: &[f64], noise_dbm: f64) -> f64 {
    let interference: f64 = interferer_rx_dbm.iter().map(|&p| db_to_linear(p)).sum();
    db_to_linear(serving_rx_dbm) / (db_to_linear(noise_dbm) + interference)
}

pub fn shannon_rate(bandwidth_hz: f64, sinr_linear: f64) -> f64 {
    bandwidth_hz * (1.0 + sinr_linear).log2()
}

/// Path loss of a link with no random draws: zero shadowing and the LoS
/// mixture applied in dB. Used for association.
pub fn expected_pathloss_db(params: &ChannelParams, tx: &Location3D, rx: &Location3D) -> f64 {
    let d = tx.distance(rx).max(MIN_LINK_DISTANCE_M);
    match params.link_class {
        LinkClass::MmwaveAtg => {
            let theta = elevation_angle(tx, rx, params.angle_unit);
            let p = los_probability(theta, params);
            // Both LoS classes share the free-space law; only shadowing differs.
            let pl = atg_pathloss(d, params, 0.0).expect("positive distance");
            expected_atg_pathloss(p, pl, pl)
        }
        LinkClass::Sub6Gtg => {
            let p = gtg_los_probability(d, params);
            let los = gtg_pathloss(d, true, params, 0.0).expect("positive distance");
            let nlos = gtg_pathloss(d, false, params, 0.0).expect("positive distance");
            expected_atg_pathloss(p, los, nlos)
        }
    }
}

/// Draws the LoS state and the class-specific shadowing, returning the
/// realized path loss in dB.
pub fn sample_pathloss_db<R: Rng + ?Sized>(
    params: &ChannelParams,
    tx: &Location3D,
    rx: &Location3D,
    rng: &mut R,
) -> f64 {
    let d = tx.distance(rx).max(MIN_LINK_DISTANCE_M);
    let p_los = match params.link_class {
        LinkClass::MmwaveAtg => los_probability(elevation_angle(tx, rx, params.angle_unit), params),
        LinkClass::Sub6Gtg => gtg_los_probability(d, params),
    };
    let los = rng.random::<f64>() < p_los;
    let z: f64 = rng.sample(StandardNormal);
    let shadow = z * params.shadow_sigma_db(los);
    match params.link_class {
        LinkClass::MmwaveAtg => atg_pathloss(d, params, shadow),
        LinkClass::Sub6Gtg => gtg_pathloss(d, los, params, shadow),
    }
    .expect("positive distance")
}

/// Received power in dBm for a transmitter at `tx` and receiver at `rx`,
/// given a path loss and a linear fading gain.
pub fn rx_power_dbm(params: &ChannelParams, tx: &Location3D, rx: &Location3D, pathloss_db: f64, fading: f64) -> f64 {
    let elevation = elevation_angle(tx, rx, AngleUnit::Degrees);
    params.tx_power_dbm + params.antenna_gain_dbi(elevation) - pathloss_db + linear_to_db(fading)
}

/// Links shorter than this are evaluated at this distance.
pub const MIN_LINK_DISTANCE_M: f64 = 1.0;
