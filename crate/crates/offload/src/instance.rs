//! Single-period instance and assignment files, in the config file units.

use hybrid_offload_core::model::{build_link_table, validate_instance, Instance, Node, NodeId, NodeKind, Roles, TaskType};
use hybrid_offload_core::{Assignment, ValidatedInstance};
use serde::{Deserialize, Serialize};

use crate::config::{BITS_PER_KB, BPS_PER_MBPS, HZ_PER_GHZ};
use crate::OffloadError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeFile {
    pub id: String,
    pub kind: NodeKind,
    /// GHz.
    pub mu_c: f64,
    #[serde(default)]
    pub v2v_capable: bool,
    #[serde(default)]
    pub sender: bool,
    #[serde(default)]
    pub receiver: bool,
    /// Edge servers are always workers.
    #[serde(default)]
    pub worker: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkFile {
    pub src: String,
    pub dst: String,
    /// Mb/s.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskTypeFile {
    pub id: String,
    pub sender: String,
    pub receivers: Vec<String>,
    /// KB.
    pub d: f64,
    /// Cycles.
    pub c: f64,
    /// Seconds.
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(rename = "T")]
    pub t: f64,
    /// Mb/s; `null` or absent means no cap.
    #[serde(default)]
    pub u_lte: Option<f64>,
    #[serde(default)]
    pub u_v2v: Option<f64>,
    pub nodes: Vec<NodeFile>,
    pub links: Vec<LinkFile>,
    pub task_types: Vec<TaskTypeFile>,
}

impl InstanceFile {
    pub fn to_instance(&self) -> Result<ValidatedInstance, OffloadError> {
        let invalid = |e: hybrid_offload_core::ModelError| OffloadError::Validation(e.to_string());
        let nodes: Vec<Node> = self
            .nodes
            .iter()
            .map(|n| match n.kind {
                NodeKind::EdgeServer => Node::edge_server(n.id.clone(), n.mu_c * HZ_PER_GHZ),
                NodeKind::Car => Node::car(
                    n.id.clone(),
                    n.mu_c * HZ_PER_GHZ,
                    n.v2v_capable,
                    Roles { sender: n.sender, receiver: n.receiver, worker: n.worker },
                ),
            })
            .collect();
        let rates: Vec<(NodeId, NodeId, f64)> = self
            .links
            .iter()
            .map(|l| (NodeId::new(l.src.clone()), NodeId::new(l.dst.clone()), l.rate * BPS_PER_MBPS))
            .collect();
        let links = build_link_table(&nodes, &rates).map_err(invalid)?;
        let task_types = self
            .task_types
            .iter()
            .map(|t| TaskType {
                id: t.id.clone(),
                data_bits: t.d * BITS_PER_KB,
                compute_cycles: t.c,
                sender: NodeId::new(t.sender.clone()),
                receivers: t.receivers.iter().map(|r| NodeId::new(r.clone())).collect(),
                max_delay_s: t.tau,
            })
            .collect();
        let cap = |c: Option<f64>| c.map_or(f64::INFINITY, |v| v * BPS_PER_MBPS);
        validate_instance(Instance {
            nodes,
            links,
            task_types,
            period_s: self.t,
            cap_lte_bps: cap(self.u_lte),
            cap_v2v_bps: cap(self.u_v2v),
        })
        .map_err(invalid)
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let cap = |c: f64| c.is_finite().then_some(c / BPS_PER_MBPS);
        let nodes = inst
            .nodes
            .iter()
            .map(|n| NodeFile {
                id: n.id.0.clone(),
                kind: n.kind,
                mu_c: n.compute_hz / HZ_PER_GHZ,
                v2v_capable: n.v2v_capable,
                sender: n.roles.sender,
                receiver: n.roles.receiver,
                worker: n.roles.worker,
            })
            .collect();
        let links = inst
            .links
            .connected_pairs()
            .map(|(i, j, r)| LinkFile {
                src: inst.nodes[i].id.0.clone(),
                dst: inst.nodes[j].id.0.clone(),
                rate: r / BPS_PER_MBPS,
            })
            .collect();
        let task_types = inst
            .task_types
            .iter()
            .map(|t| TaskTypeFile {
                id: t.id.clone(),
                sender: t.sender.0.clone(),
                receivers: t.receivers.iter().map(|r| r.0.clone()).collect(),
                d: t.data_bits / BITS_PER_KB,
                c: t.compute_cycles,
                tau: t.max_delay_s,
            })
            .collect();
        InstanceFile {
            t: inst.period_s,
            u_lte: cap(inst.cap_lte_bps),
            u_v2v: cap(inst.cap_v2v_bps),
            nodes,
            links,
            task_types,
        }
    }
}

/// Assignment with the row and column labels it was solved for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignmentFile {
    pub task_types: Vec<String>,
    pub nodes: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y_lte: Vec<Vec<f64>>,
    pub y_v2v: Vec<Vec<f64>>,
    pub tasks: Vec<Vec<u32>>,
    pub totals: Vec<u32>,
    /// Solver status, informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
}

impl AssignmentFile {
    pub fn new(inst: &ValidatedInstance, a: &Assignment, status: Option<String>) -> Self {
        AssignmentFile {
            task_types: inst.task_types.iter().map(|t| t.id.clone()).collect(),
            nodes: inst.nodes.iter().map(|n| n.id.0.clone()).collect(),
            x: a.x.clone(),
            y_lte: a.y_lte.clone(),
            y_v2v: a.y_v2v.clone(),
            tasks: a.tasks.clone(),
            totals: a.totals.clone(),
            status,
        }
    }

    /// Checks the labels against `inst` and returns the bare assignment.
    pub fn to_assignment(&self, inst: &ValidatedInstance) -> Result<Assignment, OffloadError> {
        let tts: Vec<&str> = inst.task_types.iter().map(|t| t.id.as_str()).collect();
        let nodes: Vec<&str> = inst.nodes.iter().map(|n| n.id.as_str()).collect();
        if self.task_types != tts || self.nodes != nodes {
            return Err(OffloadError::Validation(
                "assignment labels do not match the instance's task types and nodes".into(),
            ));
        }
        let a = Assignment {
            x: self.x.clone(),
            y_lte: self.y_lte.clone(),
            y_v2v: self.y_v2v.clone(),
            tasks: self.tasks.clone(),
            totals: self.totals.clone(),
        };
        if !a.has_shape(tts.len(), nodes.len()) {
            return Err(OffloadError::Validation("assignment matrices have the wrong shape".into()));
        }
        Ok(a)
    }
}
