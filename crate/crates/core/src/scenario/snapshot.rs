use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{id_hash, sample_lte_rate, sinr_to_rate, stream, tag, LinkValue, Member, ScenarioConfig, ScenarioError, TraceTimeline};
use crate::math::{log10, round};
use crate::model::{build_link_table, validate_instance, Instance, Node, NodeId, Roles, TaskType, ValidatedInstance};
use crate::simulator::InstanceSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarRole {
    Sender,
    Receiver,
    Plain,
}

/// Roles of the cars currently in the area. A car keeps its role while it
/// stays; counts are topped up from new entrants first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RoleState {
    pub roles: BTreeMap<NodeId, CarRole>,
}

impl RoleState {
    pub fn role(&self, id: &NodeId) -> Option<CarRole> {
        self.roles.get(id).copied()
    }

    /// Brings the role map in line with `members`, keeping `want_s` senders
    /// and `want_r` receivers.
    fn update<R: Rng>(&mut self, members: &[NodeId], want_s: usize, want_r: usize, rng: &mut R) {
        let mut next: BTreeMap<NodeId, CarRole> = BTreeMap::new();
        let mut fresh: Vec<NodeId> = Vec::new();
        for id in members {
            match self.roles.get(id) {
                Some(&r) => {
                    next.insert(id.clone(), r);
                }
                None => {
                    next.insert(id.clone(), CarRole::Plain);
                    fresh.push(id.clone());
                }
            }
        }
        for (role, want) in [(CarRole::Sender, want_s), (CarRole::Receiver, want_r)] {
            let mut holders: Vec<NodeId> = next.iter().filter(|(_, &r)| r == role).map(|(id, _)| id.clone()).collect();
            if holders.len() > want {
                holders.shuffle(rng);
                for id in &holders[want..] {
                    next.insert(id.clone(), CarRole::Plain);
                }
                continue;
            }
            let plain = |id: &NodeId, next: &BTreeMap<NodeId, CarRole>| next[id] == CarRole::Plain;
            let mut new_pool: Vec<NodeId> = fresh.iter().filter(|id| plain(id, &next)).cloned().collect();
            let mut old_pool: Vec<NodeId> =
                next.keys().filter(|id| plain(id, &next) && !fresh.contains(id)).cloned().collect();
            new_pool.shuffle(rng);
            old_pool.shuffle(rng);
            for id in new_pool.into_iter().chain(old_pool).take(want - holders.len()) {
                next.insert(id, role);
            }
        }
        self.roles = next;
    }
}

fn unit_draw(seed: u64, purpose: u64, id: &NodeId) -> f64 {
    stream(seed, purpose, 0, id_hash(id.as_str())).random::<f64>()
}

/// Received SINR between two positions under the configured path loss.
fn path_loss_sinr_db(config: &ScenarioConfig, a: (f64, f64), b: (f64, f64)) -> f64 {
    let s = &config.synth;
    let d = libm::hypot(a.0 - b.0, a.1 - b.1).max(1.0);
    s.tx_power_dbm - (s.path_loss_a_db + s.path_loss_b_db * log10(d)) - s.noise_dbm
}

/// Instance for the period starting at `t`, the `period`-th of the run.
///
/// Roles are drawn over every car present, then V2V capability: senders
/// and receivers always have it, other cars get it when their own uniform
/// draw falls below the penetration. Only V2V cars serve as workers; the
/// rest only hold an LTE link. Every sender gets one task type whose
/// receivers are all receiver cars (the sender itself when there are none).
pub fn snapshot_instance(
    timeline: &TraceTimeline,
    t: f64,
    period: usize,
    config: &ScenarioConfig,
    roles: &mut RoleState,
) -> Result<ValidatedInstance, ScenarioError> {
    let snap = timeline.at(t)?;
    let mut members: Vec<&Member> = snap.members.iter().collect();
    members.sort_by(|a, b| a.id.cmp(&b.id));
    members.dedup_by(|a, b| a.id == b.id);
    let n = members.len();
    let want_s = (round(config.sender_share * n as f64) as usize).min(n);
    let want_r = (round(config.receiver_share * n as f64) as usize).min(n - want_s);
    let ids: Vec<NodeId> = members.iter().map(|m| m.id.clone()).collect();
    roles.update(&ids, want_s, want_r, &mut stream(config.seed, tag::ROLES, period as u64, 0));

    let mix = &config.compute_mix;
    let mut nodes = Vec::with_capacity(n + config.edge_servers);
    for m in &members {
        let role = roles.role(&m.id).unwrap_or(CarRole::Plain);
        let v2v = m.v2v_capable.unwrap_or_else(|| {
            role != CarRole::Plain || unit_draw(config.seed, tag::V2V, &m.id) < config.v2v_penetration
        });
        let hz = if role == CarRole::Sender {
            mix.sender_hz
        } else if unit_draw(config.seed, tag::COMPUTE, &m.id) < mix.highend_share {
            mix.highend_hz
        } else {
            mix.regular_hz
        };
        let r = Roles { sender: role == CarRole::Sender, receiver: role == CarRole::Receiver, worker: v2v };
        nodes.push(Node::car(m.id.0.clone(), hz, v2v, r));
    }
    let edges: Vec<NodeId> = (0..config.edge_servers).map(|j| NodeId(format!("edge_{j}"))).collect();
    for e in &edges {
        nodes.push(Node::edge_server(e.0.clone(), mix.edge_hz));
    }

    let index: BTreeMap<&NodeId, usize> = nodes.iter().enumerate().map(|(i, nd)| (&nd.id, i)).collect();
    let mut given: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for obs in &snap.links {
        let (Some(&i), Some(&j)) = (index.get(&obs.src), index.get(&obs.dst)) else { continue };
        let rate = match obs.value {
            LinkValue::SinrDb(db) => sinr_to_rate(db, &config.sinr_table),
            LinkValue::Rate { bps, .. } => bps,
        };
        given.insert((i, j), rate);
    }

    let mut rates = Vec::new();
    for (i, m) in members.iter().enumerate() {
        for (j, e) in edges.iter().enumerate() {
            let edge = n + j;
            let rate = given.get(&(i, edge)).copied().unwrap_or_else(|| {
                let key = id_hash(m.id.as_str()) ^ j as u64;
                sample_lte_rate(&config.lte_rate, &mut stream(config.seed, tag::LTE, period as u64, key))
            });
            rates.push((m.id.clone(), e.clone(), rate));
        }
        if !nodes[i].v2v_capable {
            continue;
        }
        for (j, other) in members.iter().enumerate() {
            if i == j || !nodes[j].v2v_capable {
                continue;
            }
            let rate = match (given.get(&(i, j)), m.position_m, other.position_m) {
                (Some(&r), _, _) => r,
                (None, Some(a), Some(b)) => sinr_to_rate(path_loss_sinr_db(config, a, b), &config.sinr_table),
                _ => 0.0,
            };
            if rate > 0.0 {
                rates.push((m.id.clone(), other.id.clone(), rate));
            }
        }
    }
    let links = build_link_table(&nodes, &rates)?;

    let receivers: Vec<NodeId> = nodes.iter().filter(|nd| nd.roles.receiver).map(|nd| nd.id.clone()).collect();
    let task_types = nodes
        .iter()
        .filter(|nd| nd.roles.sender)
        .map(|nd| TaskType {
            id: format!("tt_{}", nd.id),
            data_bits: config.task_profile.data_bits,
            compute_cycles: config.task_profile.compute_cycles,
            sender: nd.id.clone(),
            receivers: if receivers.is_empty() { vec![nd.id.clone()] } else { receivers.clone() },
            max_delay_s: config.task_profile.max_delay_s,
        })
        .collect();
    Ok(validate_instance(Instance {
        nodes,
        links,
        task_types,
        period_s: config.period_s,
        cap_lte_bps: config.cap_lte_bps,
        cap_v2v_bps: config.cap_v2v_bps,
    })?)
}

/// A timeline plus the role memory needed to walk it period by period.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub timeline: TraceTimeline,
    pub config: ScenarioConfig,
    pub roles: RoleState,
}

impl Scenario {
    pub fn new(timeline: TraceTimeline, config: ScenarioConfig) -> Result<Self, ScenarioError> {
        config.validate()?;
        timeline.validate()?;
        Ok(Scenario { timeline, config, roles: RoleState::default() })
    }
}

impl InstanceSource for Scenario {
    type Error = ScenarioError;

    fn snapshot(&mut self, period: usize, t: f64) -> Result<ValidatedInstance, ScenarioError> {
        snapshot_instance(&self.timeline, t, period, &self.config, &mut self.roles)
    }

    fn period_s(&self) -> f64 {
        self.config.period_s
    }
}
