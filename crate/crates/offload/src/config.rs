//! Scenario config file.
//!
//! Units: `T`, `tau` and times in seconds; `mu_c*` in GHz; `mu_r`,
//! `sigma_r`, `lte_floor`, `u_lte`, `u_v2v` and SINR table rates in Mb/s;
//! `d` in KB (1 KB = 8000 bits); `c` in CPU cycles. A `null` cap means no cap.

use hybrid_offload_core::scenario::{ComputeMix, LteRateModel, ScenarioConfig, SinrTable, SynthConfig, TaskProfile};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::OffloadError;

pub const BITS_PER_KB: f64 = 8000.0;
pub const HZ_PER_GHZ: f64 = 1e9;
pub const BPS_PER_MBPS: f64 = 1e6;

/// Churn and path-loss parameters of the synthetic timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthFile {
    pub initial_cars: usize,
    pub arrival_rate_per_s: f64,
    /// `null` keeps cars forever.
    pub mean_dwell_s: Option<f64>,
    pub snapshot_interval_s: f64,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub path_loss_a_db: f64,
    pub path_loss_b_db: f64,
}

impl Default for SynthFile {
    fn default() -> Self {
        SynthFile::from_core(&SynthConfig::default())
    }
}

impl SynthFile {
    fn from_core(s: &SynthConfig) -> Self {
        SynthFile {
            initial_cars: s.initial_cars,
            arrival_rate_per_s: s.arrival_rate_per_s,
            mean_dwell_s: finite(s.mean_dwell_s),
            snapshot_interval_s: s.snapshot_interval_s,
            tx_power_dbm: s.tx_power_dbm,
            noise_dbm: s.noise_dbm,
            path_loss_a_db: s.path_loss_a_db,
            path_loss_b_db: s.path_loss_b_db,
        }
    }

    fn to_core(&self) -> SynthConfig {
        SynthConfig {
            initial_cars: self.initial_cars,
            arrival_rate_per_s: self.arrival_rate_per_s,
            mean_dwell_s: self.mean_dwell_s.unwrap_or(f64::INFINITY),
            snapshot_interval_s: self.snapshot_interval_s,
            tx_power_dbm: self.tx_power_dbm,
            noise_dbm: self.noise_dbm,
            path_loss_a_db: self.path_loss_a_db,
            path_loss_b_db: self.path_loss_b_db,
        }
    }
}

/// Scenario parameters as written in JSON. Missing fields take the defaults
/// of [`ScenarioConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    #[serde(rename = "T")]
    pub t: f64,
    pub eta_s: f64,
    pub eta_r: f64,
    pub v2v_penetration: f64,
    /// Sender and regular car compute power.
    pub mu_c1: f64,
    /// High-end car compute power.
    pub mu_c2: f64,
    /// Edge server compute power.
    pub mu_c3: f64,
    pub highend_share: f64,
    pub mu_r: f64,
    pub sigma_r: f64,
    pub lte_floor: f64,
    pub u_lte: Option<f64>,
    pub u_v2v: Option<f64>,
    pub d: f64,
    pub c: f64,
    pub tau: f64,
    pub radius_m: f64,
    pub edge_servers: usize,
    /// `[threshold_db, rate_mbps]` steps.
    pub sinr_table: Vec<(f64, f64)>,
    pub synth: SynthFile,
    pub seed: u64,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile::from_scenario(&ScenarioConfig::default())
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl ConfigFile {
    pub fn from_scenario(s: &ScenarioConfig) -> Self {
        let mix = &s.compute_mix;
        ConfigFile {
            t: s.period_s,
            eta_s: s.sender_share,
            eta_r: s.receiver_share,
            v2v_penetration: s.v2v_penetration,
            mu_c1: mix.sender_hz / HZ_PER_GHZ,
            mu_c2: mix.highend_hz / HZ_PER_GHZ,
            mu_c3: mix.edge_hz / HZ_PER_GHZ,
            highend_share: mix.highend_share,
            mu_r: s.lte_rate.mean_bps / BPS_PER_MBPS,
            sigma_r: s.lte_rate.stddev_bps / BPS_PER_MBPS,
            lte_floor: s.lte_rate.floor_bps / BPS_PER_MBPS,
            u_lte: finite(s.cap_lte_bps / BPS_PER_MBPS),
            u_v2v: finite(s.cap_v2v_bps / BPS_PER_MBPS),
            d: s.task_profile.data_bits / BITS_PER_KB,
            c: s.task_profile.compute_cycles,
            tau: s.task_profile.max_delay_s,
            radius_m: s.microcloud_radius_m,
            edge_servers: s.edge_servers,
            sinr_table: s.sinr_table.0.iter().map(|&(db, bps)| (db, bps / BPS_PER_MBPS)).collect(),
            synth: SynthFile::from_core(&s.synth),
            seed: s.seed,
        }
    }

    /// Converts to base units and validates.
    pub fn to_scenario(&self) -> Result<ScenarioConfig, OffloadError> {
        let cap = |c: Option<f64>| c.map_or(f64::INFINITY, |v| v * BPS_PER_MBPS);
        let s = ScenarioConfig {
            period_s: self.t,
            sender_share: self.eta_s,
            receiver_share: self.eta_r,
            v2v_penetration: self.v2v_penetration,
            compute_mix: ComputeMix {
                sender_hz: self.mu_c1 * HZ_PER_GHZ,
                regular_hz: self.mu_c1 * HZ_PER_GHZ,
                highend_hz: self.mu_c2 * HZ_PER_GHZ,
                highend_share: self.highend_share,
                edge_hz: self.mu_c3 * HZ_PER_GHZ,
            },
            lte_rate: LteRateModel {
                mean_bps: self.mu_r * BPS_PER_MBPS,
                stddev_bps: self.sigma_r * BPS_PER_MBPS,
                floor_bps: self.lte_floor * BPS_PER_MBPS,
            },
            cap_lte_bps: cap(self.u_lte),
            cap_v2v_bps: cap(self.u_v2v),
            task_profile: TaskProfile {
                data_bits: self.d * BITS_PER_KB,
                compute_cycles: self.c,
                max_delay_s: self.tau,
            },
            microcloud_radius_m: self.radius_m,
            edge_servers: self.edge_servers,
            sinr_table: SinrTable(self.sinr_table.iter().map(|&(db, mbps)| (db, mbps * BPS_PER_MBPS)).collect()),
            synth: self.synth.to_core(),
            seed: self.seed,
        };
        s.validate().map_err(|e| OffloadError::Validation(e.to_string()))?;
        Ok(s)
    }

    pub fn from_value(value: Value) -> Result<Self, OffloadError> {
        serde_json::from_value(value).map_err(|e| OffloadError::Validation(format!("config: {e}")))
    }

    /// Copy with `path` (dot separated, e.g. `synth.initial_cars`) set to
    /// `value`.
    pub fn with_field(&self, path: &str, value: &Value) -> Result<Self, OffloadError> {
        let mut root = serde_json::to_value(self).expect("config serializes");
        let mut slot = &mut root;
        for key in path.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(key))
                .ok_or_else(|| OffloadError::Validation(format!("unknown config field `{path}`")))?;
        }
        *slot = value.clone();
        Self::from_value(root)
    }
}
