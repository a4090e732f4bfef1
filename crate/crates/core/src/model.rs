//! Nodes, links and task types of one optimization period.
//!
//! Units are fixed everywhere: bits, seconds, CPU cycles and Hz. Rates are
//! directional; only the sender to worker direction is ever consumed since
//! task outputs are treated as negligible in size.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Opaque node identifier (car id from a trace, or an edge server name).
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Car,
    EdgeServer,
}

/// Role membership of a node. Roles may overlap: one car can be sender,
/// receiver and worker at the same time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub sender: bool,
    pub receiver: bool,
    pub worker: bool,
}

impl Roles {
    pub const NONE: Roles = Roles { sender: false, receiver: false, worker: false };
    pub const WORKER: Roles = Roles { sender: false, receiver: false, worker: true };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Compute power `F_i` in cycles per second.
    pub compute_hz: f64,
    pub v2v_capable: bool,
    pub roles: Roles,
}

impl Node {
    pub fn car(id: impl Into<String>, compute_hz: f64, v2v_capable: bool, roles: Roles) -> Self {
        Node { id: NodeId::new(id), kind: NodeKind::Car, compute_hz, v2v_capable, roles }
    }

    /// Edge servers are never V2V capable and always carry the worker role.
    pub fn edge_server(id: impl Into<String>, compute_hz: f64) -> Self {
        Node {
            id: NodeId::new(id),
            kind: NodeKind::EdgeServer,
            compute_hz,
            v2v_capable: false,
            roles: Roles::WORKER,
        }
    }

    pub fn is_edge(&self) -> bool {
        self.kind == NodeKind::EdgeServer
    }
}

/// Transmission medium between an ordered node pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Medium {
    /// Cellular link; exactly one endpoint is an edge server.
    Lte,
    /// Direct link between two V2V-capable cars.
    V2v,
    /// No usable link (unlisted, zero rate, or impossible pair).
    Disconnected,
    /// A node to itself; no transfer happens.
    Local,
}

/// Medium a pair of nodes would use if a link existed, or `None` when the
/// pair can never communicate.
pub fn medium_kind(a: &Node, b: &Node) -> Option<Medium> {
    match (a.kind, b.kind) {
        (NodeKind::Car, NodeKind::EdgeServer) | (NodeKind::EdgeServer, NodeKind::Car) => {
            Some(Medium::Lte)
        }
        (NodeKind::Car, NodeKind::Car) if a.v2v_capable && b.v2v_capable => Some(Medium::V2v),
        _ => None,
    }
}

/// Dense directional rate and medium table `R_{i,j}`, indexed by node position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkTable {
    n: usize,
    rate_bps: Vec<f64>,
    medium: Vec<Medium>,
}

impl LinkTable {
    /// Table with every distinct pair disconnected.
    pub fn disconnected(n: usize) -> Self {
        let mut medium = vec![Medium::Disconnected; n * n];
        for i in 0..n {
            medium[i * n + i] = Medium::Local;
        }
        LinkTable { n, rate_bps: vec![0.0; n * n], medium }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rate_bps[from * self.n + to]
    }

    pub fn medium(&self, from: usize, to: usize) -> Medium {
        self.medium[from * self.n + to]
    }

    /// `D^LTE_{i,j}`.
    pub fn is_lte(&self, from: usize, to: usize) -> bool {
        self.medium(from, to) == Medium::Lte
    }

    /// `D^V2V_{i,j}`.
    pub fn is_v2v(&self, from: usize, to: usize) -> bool {
        self.medium(from, to) == Medium::V2v
    }

    fn set(&mut self, from: usize, to: usize, rate: f64, medium: Medium) {
        self.rate_bps[from * self.n + to] = rate;
        self.medium[from * self.n + to] = medium;
    }

    /// Raw `(src, dst, rate)` triples of every connected pair, in index order.
    pub fn connected_pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (0..self.n).filter_map(move |j| match self.medium(i, j) {
                Medium::Lte | Medium::V2v => Some((i, j, self.rate(i, j))),
                _ => None,
            })
        })
    }
}

/// Parameters `A_k = {d_k, c_k, s_k, R_k, tau_k}` shared by every task of a type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskType {
    pub id: String,
    /// Frame size `d_k` in bits.
    pub data_bits: f64,
    /// Load `c_k` in CPU cycles per task.
    pub compute_cycles: f64,
    pub sender: NodeId,
    pub receivers: Vec<NodeId>,
    /// Deadline `tau_k` in seconds, measured from frame capture.
    pub max_delay_s: f64,
}

/// One frame `l` of a task type, captured at `arrival_s` after period start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub type_index: usize,
    pub index: usize,
    pub arrival_s: f64,
}

/// The world for one optimization period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub nodes: Vec<Node>,
    pub links: LinkTable,
    pub task_types: Vec<TaskType>,
    /// Period length `T` in seconds.
    pub period_s: f64,
    /// `U^LTE` in bits per second; `f64::INFINITY` for no cap.
    pub cap_lte_bps: f64,
    /// `U^V2V` in bits per second; `f64::INFINITY` for no cap.
    pub cap_v2v_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("impossible pair {src} -> {dst}: no LTE or V2V link can exist between them")]
    ImpossiblePair { src: String, dst: String },
    #[error("rate supplied for self link of `{0}`")]
    SelfLink(String),
    #[error("duplicate rate for pair {src} -> {dst}")]
    DuplicatePair { src: String, dst: String },
    #[error("invalid rate {rate} for pair {src} -> {dst}")]
    InvalidRate { src: String, dst: String, rate: f64 },
    #[error("instance is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// Builds the link table from raw `(src, dst, bits/s)` observations.
///
/// The medium of each pair follows from the endpoints: LTE iff exactly one
/// is an edge server, V2V iff both are V2V-capable cars. Unlisted pairs and
/// zero rates become [`Medium::Disconnected`]. Supplying a rate for a pair
/// that can never communicate is an error.
pub fn build_link_table(nodes: &[Node], raw_rates: &[(NodeId, NodeId, f64)]) -> Result<LinkTable, ModelError> {
    let index: BTreeMap<&str, usize> =
        nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let lookup = |id: &NodeId| {
        index.get(id.as_str()).copied().ok_or_else(|| ModelError::UnknownNode(id.0.clone()))
    };

    let mut table = LinkTable::disconnected(nodes.len());
    let mut seen = vec![false; nodes.len() * nodes.len()];
    for (src, dst, rate) in raw_rates {
        let (i, j) = (lookup(src)?, lookup(dst)?);
        if i == j {
            return Err(ModelError::SelfLink(src.0.clone()));
        }
        if !rate.is_finite() || *rate < 0.0 {
            return Err(ModelError::InvalidRate { src: src.0.clone(), dst: dst.0.clone(), rate: *rate });
        }
        let Some(medium) = medium_kind(&nodes[i], &nodes[j]) else {
            return Err(ModelError::ImpossiblePair { src: src.0.clone(), dst: dst.0.clone() });
        };
        if core::mem::replace(&mut seen[i * nodes.len() + j], true) {
            return Err(ModelError::DuplicatePair { src: src.0.clone(), dst: dst.0.clone() });
        }
        if *rate > 0.0 {
            table.set(i, j, *rate, medium);
        }
    }
    Ok(table)
}

/// One broken invariant, naming the offending node or task type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

/// An [`Instance`] whose invariants hold, with node references resolved to
/// positions in the node list.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedInstance {
    instance: Instance,
    sender_index: Vec<usize>,
    receiver_index: Vec<Vec<usize>>,
    workers: Vec<usize>,
}

impl Deref for ValidatedInstance {
    type Target = Instance;

    fn deref(&self) -> &Instance {
        &self.instance
    }
}

impl ValidatedInstance {
    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn into_inner(self) -> Instance {
        self.instance
    }

    /// Node position of `s_k`.
    pub fn sender_of(&self, k: usize) -> usize {
        self.sender_index[k]
    }

    pub fn receivers_of(&self, k: usize) -> &[usize] {
        &self.receiver_index[k]
    }

    /// Positions of worker nodes, ascending.
    pub fn workers(&self) -> &[usize] {
        &self.workers
    }

    /// Distinct sender positions, ascending.
    pub fn senders(&self) -> Vec<usize> {
        let mut s = self.sender_index.clone();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn num_task_types(&self) -> usize {
        self.task_types.len()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id.as_str() == id)
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Checks every invariant of the model types, collecting all violations.
pub fn validate_instance(instance: Instance) -> Result<ValidatedInstance, ModelError> {
    let mut violations = Vec::new();
    let mut report = |subject: &str, message: &str| {
        violations.push(Violation { subject: subject.to_string(), message: message.to_string() })
    };

    if !positive(instance.period_s) {
        report("instance", "period_s must be positive");
    }
    for (name, cap) in [("cap_lte_bps", instance.cap_lte_bps), ("cap_v2v_bps", instance.cap_v2v_bps)] {
        if cap.is_nan() || cap < 0.0 {
            report("instance", &alloc::format!("{name} must be non-negative"));
        }
    }

    let mut index = BTreeMap::new();
    for (i, node) in instance.nodes.iter().enumerate() {
        let id = node.id.as_str();
        if index.insert(id, i).is_some() {
            report(id, "duplicate node id");
        }
        if node.roles.worker && !positive(node.compute_hz) {
            report(id, "compute_hz must be positive for a worker");
        }
        if !node.compute_hz.is_finite() || node.compute_hz < 0.0 {
            report(id, "compute_hz must be finite and non-negative");
        }
        if node.is_edge() {
            if node.v2v_capable {
                report(id, "edge server cannot be V2V capable");
            }
            if !positive(node.compute_hz) {
                report(id, "edge server must have positive compute_hz");
            }
            if node.roles.sender || node.roles.receiver {
                report(id, "edge server cannot be a sender or receiver");
            }
        } else if node.roles.worker && !node.v2v_capable {
            report(id, "worker car must be V2V capable (micro-cloud member)");
        }
    }

    let n = instance.nodes.len();
    if instance.links.len() != n {
        report("links", "link table size does not match node count");
    } else {
        for i in 0..n {
            for j in 0..n {
                let medium = instance.links.medium(i, j);
                let rate = instance.links.rate(i, j);
                let (a, b) = (&instance.nodes[i], &instance.nodes[j]);
                let subject = alloc::format!("link {} -> {}", a.id, b.id);
                if i == j {
                    if medium != Medium::Local {
                        report(&subject, "self link must have medium Local");
                    }
                    continue;
                }
                match medium {
                    Medium::Local => report(&subject, "Local medium on distinct nodes"),
                    Medium::Disconnected => {
                        if rate != 0.0 {
                            report(&subject, "disconnected pair must have zero rate");
                        }
                    }
                    Medium::Lte | Medium::V2v => {
                        if medium_kind(a, b) != Some(medium) {
                            report(&subject, "medium inconsistent with endpoint kinds");
                        }
                        if !positive(rate) {
                            report(&subject, "connected pair must have positive finite rate");
                        }
                    }
                }
            }
        }
    }

    let mut sender_index = Vec::with_capacity(instance.task_types.len());
    let mut receiver_index = Vec::with_capacity(instance.task_types.len());
    let mut tt_ids = BTreeMap::new();
    for tt in &instance.task_types {
        let id = tt.id.as_str();
        if tt_ids.insert(id, ()).is_some() {
            report(id, "duplicate task type id");
        }
        if !positive(tt.data_bits) {
            report(id, "data_bits must be positive");
        }
        if !positive(tt.compute_cycles) {
            report(id, "compute_cycles must be positive");
        }
        if !positive(tt.max_delay_s) {
            report(id, "max_delay_s must be positive");
        }
        match index.get(tt.sender.as_str()) {
            Some(&s) => {
                if !instance.nodes[s].roles.sender {
                    report(id, &alloc::format!("sender `{}` lacks the sender role", tt.sender));
                }
                sender_index.push(s);
            }
            None => {
                report(id, &alloc::format!("sender `{}` is not a node", tt.sender));
                sender_index.push(usize::MAX);
            }
        }
        if tt.receivers.is_empty() {
            report(id, "receiver set must not be empty");
        }
        let mut rx = Vec::with_capacity(tt.receivers.len());
        for r in &tt.receivers {
            match index.get(r.as_str()) {
                Some(&ri) => {
                    if rx.contains(&ri) {
                        report(id, &alloc::format!("receiver `{r}` listed twice"));
                    }
                    rx.push(ri);
                }
                None => report(id, &alloc::format!("receiver `{r}` is not a node")),
            }
        }
        receiver_index.push(rx);
    }

    let workers: Vec<usize> =
        instance.nodes.iter().enumerate().filter(|(_, n)| n.roles.worker).map(|(i, _)| i).collect();
    if workers.is_empty() {
        report("instance", "worker set must not be empty");
    }

    if violations.is_empty() {
        Ok(ValidatedInstance { instance, sender_index, receiver_index, workers })
    } else {
        Err(ModelError::Invalid(violations))
    }
}
