//! Test-only oracles and instance generators.
#![allow(dead_code)]

use hybrid_offload_core::model::{build_link_table, validate_instance, Instance, Node, NodeId, Roles, TaskType};
use hybrid_offload_core::{tasks_for_share, Assignment, Medium, ValidatedInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn sender_worker() -> Roles {
    Roles { sender: true, receiver: false, worker: true }
}

/// One car sender and one edge worker, caps optional.
pub fn single_edge(cap_lte_bps: f64) -> ValidatedInstance {
    let nodes = vec![Node::car("car", 1e9, true, sender_worker()), Node::edge_server("edge", 10e9)];
    let links = build_link_table(&nodes, &[(NodeId::from("car"), NodeId::from("edge"), 50e6)]).unwrap();
    validate_instance(Instance {
        nodes,
        links,
        task_types: vec![TaskType {
            id: "tt".into(),
            data_bits: 160e3,
            compute_cycles: 1e9,
            sender: NodeId::from("car"),
            receivers: vec![NodeId::from("car")],
            max_delay_s: 0.6,
        }],
        period_s: 1.0,
        cap_lte_bps,
        cap_v2v_bps: f64::INFINITY,
    })
    .unwrap()
}

/// Random instance with at most two task types and three workers (one edge
/// server plus up to two cars); each car may be a sender.
pub fn random_small(seed: u64) -> ValidatedInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cars = rng.random_range(1..=2usize);
    let senders = rng.random_range(1..=cars);
    let mut nodes = Vec::new();
    for i in 0..cars {
        let roles = Roles { sender: i < senders, receiver: true, worker: true };
        nodes.push(Node::car(format!("c{i}"), rng.random_range(1.0..4.0) * 1e9, true, roles));
    }
    nodes.push(Node::edge_server("edge", rng.random_range(3.0..10.0) * 1e9));
    let mut rates = Vec::new();
    for i in 0..cars {
        rates.push((NodeId(format!("c{i}")), NodeId::from("edge"), rng.random_range(5.0..50.0) * 1e6));
        for j in 0..cars {
            if i != j && rng.random_bool(0.8) {
                rates.push((NodeId(format!("c{i}")), NodeId(format!("c{j}")), rng.random_range(3.0..27.0) * 1e6));
            }
        }
    }
    let links = build_link_table(&nodes, &rates).unwrap();
    let task_types = (0..senders)
        .map(|k| TaskType {
            id: format!("tt{k}"),
            data_bits: rng.random_range(50e3..1.5e6),
            compute_cycles: rng.random_range(0.2..1.2) * 1e9,
            sender: NodeId(format!("c{k}")),
            receivers: vec![NodeId::from("c0")],
            max_delay_s: rng.random_range(0.4..1.0),
        })
        .collect();
    let cap_lte_bps = if rng.random_bool(0.5) { f64::INFINITY } else { rng.random_range(0.5..6.0) * 1e6 };
    validate_instance(Instance { nodes, links, task_types, period_s: 1.0, cap_lte_bps, cap_v2v_bps: f64::INFINITY })
        .unwrap()
}

/// One usable `(x, y)` setting of a pair with its task count.
#[derive(Clone, Copy, Debug)]
struct Choice {
    m: u32,
    x: u32,
    y: u32,
}

struct PairOptions {
    k: usize,
    w: usize,
    medium: Medium,
    choices: Vec<Choice>,
}

/// Best total task count over all shares on a `1/steps` grid, checked
/// against the original constraints: true floors, true delay sums, caps
/// and budgets. Returns the count and a witness assignment.
pub fn grid_oracle(inst: &ValidatedInstance, steps: u32) -> (u64, Assignment) {
    let t = inst.period_s;
    let g = steps as f64;
    let n = inst.nodes.len();
    let mut pairs: Vec<PairOptions> = Vec::new();
    for (k, tt) in inst.task_types.iter().enumerate() {
        let s = inst.sender_of(k);
        for w in 0..n {
            if !inst.nodes[w].roles.worker && w != s {
                continue;
            }
            let medium = if w == s { Medium::Local } else { inst.links.medium(s, w) };
            if !matches!(medium, Medium::Local | Medium::Lte | Medium::V2v) {
                continue;
            }
            let f = inst.nodes[w].compute_hz;
            let r = inst.links.rate(s, w);
            let mut choices: Vec<Choice> = Vec::new();
            for xi in 1..=steps {
                let x = xi as f64 / g;
                let m = tasks_for_share(t, f, x, tt.compute_cycles);
                if m == 0 {
                    continue;
                }
                let compute = tt.compute_cycles / (f * x);
                if medium == Medium::Local {
                    if compute <= tt.max_delay_s {
                        choices.push(Choice { m, x: xi, y: 0 });
                    }
                    continue;
                }
                let y = (1..=steps).find(|&yi| {
                    let y = yi as f64 / g;
                    tt.data_bits * m as f64 <= t * r * y && tt.data_bits / (r * y) + compute <= tt.max_delay_s
                });
                if let Some(yi) = y {
                    choices.push(Choice { m, x: xi, y: yi });
                }
            }
            // keep settings not dominated in (m up, x down, y down)
            let mut kept: Vec<Choice> = Vec::new();
            for c in &choices {
                let dominated = choices.iter().any(|o| {
                    o.m >= c.m && o.x <= c.x && o.y <= c.y && (o.m > c.m || o.x < c.x || o.y < c.y)
                });
                if !dominated {
                    kept.push(*c);
                }
            }
            kept.sort_by(|a, b| b.m.cmp(&a.m).then(a.x.cmp(&b.x)));
            if !kept.is_empty() {
                pairs.push(PairOptions { k, w, medium, choices: kept });
            }
        }
    }

    struct Search<'a> {
        inst: &'a ValidatedInstance,
        pairs: &'a [PairOptions],
        suffix_max: Vec<u64>,
        steps: u32,
        compute_used: Vec<u32>,
        lte_used: Vec<u32>,
        v2v_used: Vec<u32>,
        lte_bits: f64,
        v2v_bits: f64,
        current: Vec<Option<Choice>>,
        best: u64,
        best_pick: Vec<Option<Choice>>,
    }

    impl Search<'_> {
        fn go(&mut self, i: usize, total: u64) {
            if total > self.best {
                self.best = total;
                self.best_pick = self.current.clone();
            }
            if i == self.pairs.len() || total + self.suffix_max[i] <= self.best {
                return;
            }
            let p = &self.pairs[i];
            let s = self.inst.sender_of(p.k);
            let d = self.inst.task_types[p.k].data_bits;
            let cap_bits = |cap: f64| cap * self.inst.period_s;
            for c in &p.choices {
                if self.compute_used[p.w] + c.x > self.steps {
                    continue;
                }
                let bits = d * c.m as f64;
                let ok = match p.medium {
                    Medium::Lte => {
                        self.lte_used[s] + c.y <= self.steps && self.lte_bits + bits <= cap_bits(self.inst.cap_lte_bps)
                    }
                    Medium::V2v => {
                        self.v2v_used[s] + c.y <= self.steps && self.v2v_bits + bits <= cap_bits(self.inst.cap_v2v_bps)
                    }
                    _ => true,
                };
                if !ok {
                    continue;
                }
                self.apply(p.w, s, p.medium, c, bits, true);
                self.current[i] = Some(*c);
                self.go(i + 1, total + c.m as u64);
                self.current[i] = None;
                self.apply(p.w, s, p.medium, c, bits, false);
            }
            self.go(i + 1, total);
        }

        fn apply(&mut self, w: usize, s: usize, medium: Medium, c: &Choice, bits: f64, add: bool) {
            let sign = |v: &mut u32, d: u32| if add { *v += d } else { *v -= d };
            sign(&mut self.compute_used[w], c.x);
            match medium {
                Medium::Lte => {
                    sign(&mut self.lte_used[s], c.y);
                    self.lte_bits += if add { bits } else { -bits };
                }
                Medium::V2v => {
                    sign(&mut self.v2v_used[s], c.y);
                    self.v2v_bits += if add { bits } else { -bits };
                }
                _ => {}
            }
        }
    }

    let mut suffix_max = vec![0u64; pairs.len() + 1];
    for i in (0..pairs.len()).rev() {
        suffix_max[i] = suffix_max[i + 1] + pairs[i].choices.iter().map(|c| c.m as u64).max().unwrap_or(0);
    }
    let mut search = Search {
        inst,
        pairs: &pairs,
        suffix_max,
        steps,
        compute_used: vec![0; n],
        lte_used: vec![0; n],
        v2v_used: vec![0; n],
        lte_bits: 0.0,
        v2v_bits: 0.0,
        current: vec![None; pairs.len()],
        best: 0,
        best_pick: vec![None; pairs.len()],
    };
    search.go(0, 0);

    let mut asg = Assignment::zeros(inst.num_task_types(), n);
    for (p, c) in pairs.iter().zip(&search.best_pick) {
        if let Some(c) = c {
            asg.x[p.k][p.w] = c.x as f64 / g;
            match p.medium {
                Medium::Lte => asg.y_lte[p.k][p.w] = c.y as f64 / g,
                Medium::V2v => asg.y_v2v[p.k][p.w] = c.y as f64 / g,
                _ => {}
            }
        }
    }
    asg.recompute_tasks(inst);
    (search.best, asg)
}

/// Number of `(k, w)` pairs the oracle could use at all.
pub fn reachable_pairs(inst: &ValidatedInstance) -> usize {
    (0..inst.num_task_types())
        .map(|k| {
            let s = inst.sender_of(k);
            (0..inst.nodes.len())
                .filter(|&w| w == s || (inst.nodes[w].roles.worker && matches!(inst.links.medium(s, w), Medium::Lte | Medium::V2v)))
                .count()
        })
        .sum()
}
