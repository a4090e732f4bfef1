use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{stream, tag, ScenarioConfig, ScenarioError};
use crate::math::{floor, sqrt, FLOOR_GUARD};
use crate::model::{Medium, NodeId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub id: NodeId,
    /// `None` leaves the capability to the penetration draw.
    pub v2v_capable: Option<bool>,
    /// Position relative to the area center, in meters, when known.
    pub position_m: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LinkValue {
    SinrDb(f64),
    Rate { bps: f64, medium: Medium },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkObservation {
    pub src: NodeId,
    pub dst: NodeId,
    pub value: LinkValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time_s: f64,
    pub members: Vec<Member>,
    pub links: Vec<LinkObservation>,
}

/// Snapshots in nondecreasing time; each holds until the next one.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceTimeline {
    pub snapshots: Vec<Snapshot>,
}

impl TraceTimeline {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.snapshots.windows(2).all(|w| w[0].time_s <= w[1].time_s) {
            Ok(())
        } else {
            Err(ScenarioError::Config("snapshot times must be nondecreasing"))
        }
    }

    /// Latest snapshot taken at or before `t`.
    pub fn at(&self, t: f64) -> Result<&Snapshot, ScenarioError> {
        let idx = self.snapshots.partition_point(|s| s.time_s <= t + 1e-12);
        if idx == 0 {
            return Err(ScenarioError::OutOfRange { t });
        }
        Ok(&self.snapshots[idx - 1])
    }
}

struct SynthCar {
    enter_s: f64,
    exit_s: f64,
}

/// Synthetic stand-in for a mobility trace: cars arrive as a Poisson
/// process, stay for an exponential dwell time, and sit at a uniformly drawn
/// spot inside the area at every snapshot. SINR follows from the configured
/// log-distance path loss at snapshot time.
pub fn synth_timeline(config: &ScenarioConfig, duration_s: f64) -> Result<TraceTimeline, ScenarioError> {
    config.validate()?;
    let s = &config.synth;
    let mut cars: Vec<SynthCar> = Vec::new();
    let dwell = |i: usize| {
        if s.mean_dwell_s.is_finite() {
            let mut rng = stream(config.seed, tag::CHURN, 1, i as u64);
            Exp::new(1.0 / s.mean_dwell_s).expect("positive rate").sample(&mut rng)
        } else {
            f64::INFINITY
        }
    };
    for i in 0..s.initial_cars {
        cars.push(SynthCar { enter_s: 0.0, exit_s: dwell(i) });
    }
    if s.arrival_rate_per_s > 0.0 {
        let gap = Exp::new(s.arrival_rate_per_s).expect("positive rate");
        let mut rng = stream(config.seed, tag::CHURN, 0, 0);
        let mut t = gap.sample(&mut rng);
        while t < duration_s {
            let i = cars.len();
            cars.push(SynthCar { enter_s: t, exit_s: t + dwell(i) });
            t += gap.sample(&mut rng);
        }
    }

    let count = (floor(duration_s / s.snapshot_interval_s + FLOOR_GUARD) as usize).max(1);
    let radius = config.microcloud_radius_m;
    let snapshots = (0..count)
        .map(|k| {
            let t = k as f64 * s.snapshot_interval_s;
            let members = cars
                .iter()
                .enumerate()
                .filter(|(_, c)| c.enter_s <= t && t < c.exit_s)
                .map(|(i, _)| {
                    let mut rng = stream(config.seed, tag::POSITION, k as u64, i as u64);
                    let r = radius * sqrt(rng.random::<f64>());
                    let theta = core::f64::consts::TAU * rng.random::<f64>();
                    Member {
                        id: NodeId(format!("car_{i:04}")),
                        v2v_capable: None,
                        position_m: Some((r * libm::cos(theta), r * libm::sin(theta))),
                    }
                })
                .collect();
            Snapshot { time_s: t, members, links: Vec::new() }
        })
        .collect();
    Ok(TraceTimeline { snapshots })
}
