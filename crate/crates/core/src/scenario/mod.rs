//! Per-period instances from traces or synthetic generators.
//!
//! All randomness is keyed: every draw comes from its own stream seeded by
//! `(seed, purpose, period, car)`. A car's V2V capability and compute class
//! therefore do not depend on how many other cars exist or on any other
//! parameter, which keeps sweeps over the V2V penetration nested: raising
//! the penetration only adds V2V cars.

mod snapshot;
mod timeline;

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use snapshot::{snapshot_instance, RoleState, Scenario};
pub use timeline::{synth_timeline, LinkObservation, LinkValue, Member, Snapshot, TraceTimeline};

use crate::math::derive_seed;
use crate::model::ModelError;

/// Compute powers of the node classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComputeMix {
    pub sender_hz: f64,
    pub regular_hz: f64,
    pub highend_hz: f64,
    /// Share of non-sender cars with `highend_hz`.
    pub highend_share: f64,
    pub edge_hz: f64,
}

/// Gaussian uplink rate, truncated below at `floor_bps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LteRateModel {
    pub mean_bps: f64,
    pub stddev_bps: f64,
    pub floor_bps: f64,
}

/// Parameters every sender's task type copies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskProfile {
    pub data_bits: f64,
    pub compute_cycles: f64,
    pub max_delay_s: f64,
}

impl TaskProfile {
    /// 20 KB frames, 1e9 cycles, 0.6 s.
    pub const IMAGE: TaskProfile = TaskProfile { data_bits: 160e3, compute_cycles: 1e9, max_delay_s: 0.6 };
    /// 400 KB frames, 2e8 cycles, 0.6 s.
    pub const POINT_CLOUD: TaskProfile = TaskProfile { data_bits: 3.2e6, compute_cycles: 2e8, max_delay_s: 0.6 };
}

/// Step function from SINR to link rate: sorted `(threshold_db, rate_bps)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SinrTable(pub Vec<(f64, f64)>);

impl SinrTable {
    /// DSRC-style 10 MHz rates (3 to 27 Mb/s) at commonly quoted thresholds.
    /// Illustrative only; supply measured values through the config.
    pub fn dsrc_default() -> Self {
        SinrTable(vec![
            (5.0, 3e6),
            (6.0, 4.5e6),
            (8.0, 6e6),
            (11.0, 9e6),
            (15.0, 12e6),
            (20.0, 18e6),
            (25.0, 24e6),
            (26.0, 27e6),
        ])
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.0.is_empty() {
            return Err(ScenarioError::Config("SINR table must not be empty"));
        }
        let sorted = self.0.windows(2).all(|w| w[0].0 < w[1].0);
        let finite = self.0.iter().all(|&(t, r)| t.is_finite() && r.is_finite() && r > 0.0);
        if !sorted || !finite {
            return Err(ScenarioError::Config("SINR table must be strictly increasing with positive finite rates"));
        }
        Ok(())
    }
}

/// Largest rate whose threshold is at most `sinr_db`; 0 below the table.
pub fn sinr_to_rate(sinr_db: f64, table: &SinrTable) -> f64 {
    table.0.iter().take_while(|&&(t, _)| t <= sinr_db).last().map_or(0.0, |&(_, r)| r)
}

/// One uplink rate draw.
pub fn sample_lte_rate<R: Rng + ?Sized>(model: &LteRateModel, rng: &mut R) -> f64 {
    if model.stddev_bps == 0.0 {
        return model.mean_bps.max(model.floor_bps);
    }
    let normal = Normal::new(model.mean_bps, model.stddev_bps).expect("stddev validated finite and non-negative");
    normal.sample(rng).max(model.floor_bps)
}

/// Membership churn and the path-loss stub of the synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Cars present at time zero.
    pub initial_cars: usize,
    /// Poisson arrival rate of new cars, per second.
    pub arrival_rate_per_s: f64,
    /// Mean of the exponential dwell time; infinite keeps cars forever.
    pub mean_dwell_s: f64,
    /// Spacing of snapshots; usually the period.
    pub snapshot_interval_s: f64,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    /// Path loss `a + b log10(distance_m)` in dB.
    pub path_loss_a_db: f64,
    pub path_loss_b_db: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            initial_cars: 20,
            arrival_rate_per_s: 0.0,
            mean_dwell_s: f64::INFINITY,
            snapshot_interval_s: 1.0,
            tx_power_dbm: 20.0,
            noise_dbm: -99.0,
            path_loss_a_db: 47.86,
            path_loss_b_db: 27.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub period_s: f64,
    pub sender_share: f64,
    pub receiver_share: f64,
    /// Share of cars other than senders and receivers that are V2V capable.
    pub v2v_penetration: f64,
    pub compute_mix: ComputeMix,
    pub lte_rate: LteRateModel,
    pub cap_lte_bps: f64,
    pub cap_v2v_bps: f64,
    pub task_profile: TaskProfile,
    pub microcloud_radius_m: f64,
    pub edge_servers: usize,
    pub sinr_table: SinrTable,
    pub synth: SynthConfig,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            period_s: 1.0,
            sender_share: 0.2,
            receiver_share: 0.2,
            v2v_penetration: 1.0,
            compute_mix: ComputeMix {
                sender_hz: 1e9,
                regular_hz: 1e9,
                highend_hz: 5e9,
                highend_share: 0.3,
                edge_hz: 10e9,
            },
            lte_rate: LteRateModel { mean_bps: 50e6, stddev_bps: 5e6, floor_bps: 1e6 },
            cap_lte_bps: 24e6,
            cap_v2v_bps: f64::INFINITY,
            task_profile: TaskProfile::IMAGE,
            microcloud_radius_m: 150.0,
            edge_servers: 1,
            sinr_table: SinrTable::dsrc_default(),
            synth: SynthConfig::default(),
            seed: 0,
        }
    }
}

fn share(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        use ScenarioError::Config;
        if !positive(self.period_s) {
            return Err(Config("period_s must be positive"));
        }
        if !share(self.sender_share) || !share(self.receiver_share) || !share(self.v2v_penetration) {
            return Err(Config("shares must lie in [0, 1]"));
        }
        if self.sender_share + self.receiver_share > 1.0 + 1e-12 {
            return Err(Config("sender and receiver shares must not exceed 1 together"));
        }
        let m = &self.compute_mix;
        if ![m.sender_hz, m.regular_hz, m.highend_hz, m.edge_hz].iter().all(|&x| positive(x)) || !share(m.highend_share) {
            return Err(Config("compute powers must be positive and highend_share in [0, 1]"));
        }
        let l = &self.lte_rate;
        if !positive(l.mean_bps) || !positive(l.floor_bps) || !l.stddev_bps.is_finite() || l.stddev_bps < 0.0 {
            return Err(Config("LTE rate model needs positive mean and floor and finite stddev"));
        }
        if self.cap_lte_bps.is_nan() || self.cap_lte_bps < 0.0 || self.cap_v2v_bps.is_nan() || self.cap_v2v_bps < 0.0 {
            return Err(Config("caps must be non-negative"));
        }
        let p = &self.task_profile;
        if !positive(p.data_bits) || !positive(p.compute_cycles) || !positive(p.max_delay_s) {
            return Err(Config("task profile values must be positive"));
        }
        if !positive(self.microcloud_radius_m) {
            return Err(Config("microcloud_radius_m must be positive"));
        }
        if self.edge_servers == 0 {
            return Err(Config("at least one edge server is required"));
        }
        let s = &self.synth;
        if !positive(s.snapshot_interval_s)
            || !s.arrival_rate_per_s.is_finite()
            || s.arrival_rate_per_s < 0.0
            || s.mean_dwell_s.is_nan()
            || s.mean_dwell_s <= 0.0
        {
            return Err(Config("synthetic churn parameters out of range"));
        }
        self.sinr_table.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid scenario config: {0}")]
    Config(&'static str),
    #[error("time {t} s is outside the timeline")]
    OutOfRange { t: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Purposes of the keyed random streams.
pub(crate) mod tag {
    pub const ROLES: u64 = 10;
    pub const V2V: u64 = 11;
    pub const COMPUTE: u64 = 12;
    pub const LTE: u64 = 13;
    pub const CHURN: u64 = 14;
    pub const POSITION: u64 = 15;
}

/// FNV-1a, used to key random streams by car id.
pub(crate) fn id_hash(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub(crate) fn stream(seed: u64, tag: u64, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_step() -> SinrTable {
        SinrTable(vec![(5.0, 3e6), (11.0, 6e6)])
    }

    #[test]
    fn step_lookup() {
        assert_eq!(sinr_to_rate(7.0, &two_step()), 3e6);
        assert_eq!(sinr_to_rate(3.0, &two_step()), 0.0);
        assert_eq!(sinr_to_rate(11.0, &two_step()), 6e6);
        assert_eq!(sinr_to_rate(40.0, &two_step()), 6e6);
    }

    #[test]
    fn empty_table_is_rejected() {
        assert!(SinrTable(vec![]).validate().is_err());
        assert!(SinrTable(vec![(5.0, 1.0), (4.0, 2.0)]).validate().is_err());
        assert!(SinrTable::dsrc_default().validate().is_ok());
    }

    #[test]
    fn degenerate_gaussian_is_the_mean() {
        let model = LteRateModel { mean_bps: 50e6, stddev_bps: 0.0, floor_bps: 1e6 };
        let mut rng = stream(1, tag::LTE, 0, 0);
        assert_eq!(sample_lte_rate(&model, &mut rng), 50e6);
    }

    #[test]
    fn gaussian_mean_converges() {
        let model = LteRateModel { mean_bps: 50e6, stddev_bps: 5e6, floor_bps: 1e6 };
        let mut rng = stream(42, tag::LTE, 0, 0);
        let n = 100_000;
        let mean = (0..n).map(|_| sample_lte_rate(&model, &mut rng)).sum::<f64>() / n as f64;
        // standard error is 5e6 / sqrt(1e5) = 15.8 kb/s
        assert!((mean - 50e6).abs() < 0.1e6, "mean {mean}");
    }

    #[test]
    fn draws_below_floor_are_clamped() {
        let model = LteRateModel { mean_bps: 1e6, stddev_bps: 10e6, floor_bps: 2e6 };
        let mut rng = stream(3, tag::LTE, 0, 0);
        let draws: Vec<f64> = (0..1000).map(|_| sample_lte_rate(&model, &mut rng)).collect();
        assert!(draws.iter().all(|&r| r >= 2e6));
        assert!(draws.contains(&2e6));
    }

    #[test]
    fn defaults_are_valid() {
        assert!(ScenarioConfig::default().validate().is_ok());
        let bad = ScenarioConfig { sender_share: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
