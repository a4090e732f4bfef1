//! Event loop for one period's frames over fluid pipes.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::assignment::Assignment;
use crate::model::{Medium, ValidatedInstance};
use crate::scheduler::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    FrameGenerated,
    TxComplete,
    ComputeComplete,
    Delivered,
}

/// `task` indexes the period's frames flattened as (task type, frame).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub task: usize,
    pub worker: usize,
}

impl Eq for Event {}

impl Ord for Event {
    // reversed so the max-heap pops the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.kind.cmp(&self.kind))
            .then(other.task.cmp(&self.task))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Timeline of one frame, in seconds from the period start. Frames stuck
/// behind a zero-rate pipe keep `None` for the stages they never reach.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub type_index: usize,
    pub index: usize,
    pub worker: usize,
    pub medium: Medium,
    pub arrival_s: f64,
    pub tx_start_s: Option<f64>,
    pub tx_done_s: Option<f64>,
    pub compute_start_s: Option<f64>,
    pub done_s: Option<f64>,
}

impl TaskRecord {
    pub fn delay_s(&self) -> Option<f64> {
        self.done_s.map(|d| d - self.arrival_s)
    }
}

#[derive(Default)]
struct Pipe {
    rate: f64,
    busy: bool,
    queue: VecDeque<usize>,
}

impl Pipe {
    /// Accepts a frame; returns it when service can start now.
    fn offer(&mut self, task: usize) -> Option<usize> {
        if self.busy || self.rate <= 0.0 {
            self.queue.push_back(task);
            None
        } else {
            self.busy = true;
            Some(task)
        }
    }

    /// Frees the pipe and returns the next frame to serve.
    fn release(&mut self) -> Option<usize> {
        match self.queue.pop_front() {
            Some(t) => Some(t),
            None => {
                self.busy = false;
                None
            }
        }
    }
}

/// Runs every frame of `schedule` to completion. Each `(k, w)` pair owns a
/// channel of rate `R y` and a processor of rate `F x`, both FIFO. Events
/// are returned in processing order.
pub fn trace_period(
    instance: &ValidatedInstance,
    assignment: &Assignment,
    schedule: &Schedule,
) -> (Vec<TaskRecord>, Vec<Event>) {
    let n = instance.nodes.len();
    let mut records = Vec::new();
    for (k, tts) in schedule.task_types.iter().enumerate() {
        let s = instance.sender_of(k);
        for (l, (&t, &w)) in tts.arrivals.iter().zip(&tts.worker).enumerate() {
            let medium = if w == s { Medium::Local } else { instance.links.medium(s, w) };
            records.push(TaskRecord {
                type_index: k,
                index: l,
                worker: w,
                medium,
                arrival_s: t,
                tx_start_s: None,
                tx_done_s: None,
                compute_start_s: None,
                done_s: None,
            });
        }
    }

    let pair = |k: usize, w: usize| k * n + w;
    let kk = schedule.task_types.len();
    let mut channels: Vec<Pipe> = (0..kk * n).map(|_| Pipe::default()).collect();
    let mut processors: Vec<Pipe> = (0..kk * n).map(|_| Pipe::default()).collect();
    for k in 0..kk {
        let s = instance.sender_of(k);
        for w in 0..n {
            let rate = match instance.links.medium(s, w) {
                Medium::Lte => instance.links.rate(s, w) * assignment.y_lte[k][w],
                Medium::V2v => instance.links.rate(s, w) * assignment.y_v2v[k][w],
                _ => 0.0,
            };
            channels[pair(k, w)].rate = rate;
            processors[pair(k, w)].rate = instance.nodes[w].compute_hz * assignment.x[k][w];
        }
    }

    let mut heap: BinaryHeap<Event> = records
        .iter()
        .enumerate()
        .map(|(i, r)| Event { time: r.arrival_s, kind: EventKind::FrameGenerated, task: i, worker: r.worker })
        .collect();
    let mut log = Vec::with_capacity(records.len() * 4);

    let start_tx = |records: &mut Vec<TaskRecord>, heap: &mut BinaryHeap<Event>, ch: &Pipe, i: usize, now: f64| {
        let bits = instance.task_types[records[i].type_index].data_bits;
        records[i].tx_start_s = Some(now);
        heap.push(Event { time: now + bits / ch.rate, kind: EventKind::TxComplete, task: i, worker: records[i].worker });
    };
    let start_compute = |records: &mut Vec<TaskRecord>, heap: &mut BinaryHeap<Event>, p: &Pipe, i: usize, now: f64| {
        let cycles = instance.task_types[records[i].type_index].compute_cycles;
        records[i].compute_start_s = Some(now);
        heap.push(Event { time: now + cycles / p.rate, kind: EventKind::ComputeComplete, task: i, worker: records[i].worker });
    };

    while let Some(ev) = heap.pop() {
        log.push(ev);
        let i = ev.task;
        let key = pair(records[i].type_index, records[i].worker);
        let now = ev.time;
        match ev.kind {
            EventKind::FrameGenerated => {
                if records[i].medium == Medium::Local {
                    records[i].tx_done_s = Some(now);
                    if let Some(j) = processors[key].offer(i) {
                        start_compute(&mut records, &mut heap, &processors[key], j, now);
                    }
                } else if let Some(j) = channels[key].offer(i) {
                    start_tx(&mut records, &mut heap, &channels[key], j, now);
                }
            }
            EventKind::TxComplete => {
                records[i].tx_done_s = Some(now);
                if let Some(j) = channels[key].release() {
                    start_tx(&mut records, &mut heap, &channels[key], j, now);
                }
                if let Some(j) = processors[key].offer(i) {
                    start_compute(&mut records, &mut heap, &processors[key], j, now);
                }
            }
            EventKind::ComputeComplete => {
                records[i].done_s = Some(now);
                if let Some(j) = processors[key].release() {
                    start_compute(&mut records, &mut heap, &processors[key], j, now);
                }
                heap.push(Event { time: now, kind: EventKind::Delivered, task: i, worker: ev.worker });
            }
            EventKind::Delivered => {}
        }
    }
    (records, log)
}

/// Frame counts per `(k, w)`, for checking a schedule against an assignment.
pub fn per_pair_counts(records: &[TaskRecord], task_types: usize, nodes: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0u32; nodes]; task_types];
    for r in records {
        out[r.type_index][r.worker] += 1;
    }
    out
}
