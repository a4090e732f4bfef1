//! Frame arrival times and round-robin placement of frames on workers.
//!
//! Frames of a task type arrive evenly over the period, `t_l = l T / L`
//! for `l = 0..L` (zero-based), so the arrival rate matches the processing
//! rate the assignment provides. Frame `l` then goes to a worker picked by
//! sweeping a randomly ordered worker list, one frame per worker per sweep,
//! skipping workers whose quota is used up.
//!
//! With unequal quotas this sends bursts towards the bigger worker (quotas
//! `[3, 1]` put frames 0, 2 and 3 on the first worker). That queueing is
//! part of the heuristic and shows up in the simulator.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::Assignment;
use crate::model::ValidatedInstance;

/// Evenly spaced arrival offsets `[0, T/L, 2T/L, ...]`.
pub fn arrival_times(count: u32, period_s: f64) -> Vec<f64> {
    (0..count).map(|l| l as f64 * period_s / count as f64).collect()
}

/// Round-robin placement. `quota[i]` is the task count of `order[i]`;
/// returns the worker of every frame in index order.
pub fn round_robin(quota: &[u32], order: &[usize]) -> Vec<usize> {
    debug_assert_eq!(quota.len(), order.len());
    let total: u64 = quota.iter().map(|&m| m as u64).sum();
    let mut left = quota.to_vec();
    let mut z = Vec::with_capacity(total as usize);
    while (z.len() as u64) < total {
        for (i, &w) in order.iter().enumerate() {
            if left[i] != 0 {
                z.push(w);
                left[i] -= 1;
            }
        }
    }
    z
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTypeSchedule {
    /// Arrival offset of each frame from the period start.
    pub arrivals: Vec<f64>,
    /// Worker (node position) of each frame; the nonzero of `Z_{l,.}`.
    pub worker: Vec<usize>,
    /// The shuffled worker order used for the sweep.
    pub worker_order: Vec<usize>,
}

impl TaskTypeSchedule {
    /// Frames placed on `w`: `sum_l Z_{l,w}`.
    pub fn count_for(&self, w: usize) -> usize {
        self.worker.iter().filter(|&&x| x == w).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub task_types: Vec<TaskTypeSchedule>,
}

impl Schedule {
    /// Schedules every task type of `assignment`. The worker order of each
    /// task type is a shuffle of the workers (plus the sender, when it
    /// processes locally) drawn from `seed`, so a schedule can be replayed.
    pub fn build(instance: &ValidatedInstance, assignment: &Assignment, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let task_types = (0..assignment.num_task_types())
            .map(|k| {
                let mut order: Vec<usize> = instance.workers().to_vec();
                let s = instance.sender_of(k);
                if !order.contains(&s) && assignment.tasks[k][s] > 0 {
                    order.push(s);
                    order.sort_unstable();
                }
                order.shuffle(&mut rng);
                let quota: Vec<u32> = order.iter().map(|&w| assignment.tasks[k][w]).collect();
                let worker = round_robin(&quota, &order);
                TaskTypeSchedule {
                    arrivals: arrival_times(worker.len() as u32, instance.period_s),
                    worker,
                    worker_order: order,
                }
            })
            .collect();
        Schedule { task_types }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn four_arrivals_in_one_second() {
        assert_eq!(arrival_times(4, 1.0), vec![0.0, 0.25, 0.5, 0.75]);
        assert_eq!(arrival_times(1, 1.0), vec![0.0]);
        assert!(arrival_times(0, 1.0).is_empty());
    }

    #[test]
    fn hand_traced_two_one() {
        assert_eq!(round_robin(&[2, 1], &[10, 20]), vec![10, 20, 10]);
    }

    #[test]
    fn hand_traced_three_one() {
        assert_eq!(round_robin(&[3, 1], &[10, 20]), vec![10, 20, 10, 10]);
    }

    #[test]
    fn all_zero_quota_assigns_nothing() {
        assert!(round_robin(&[0, 0, 0], &[1, 2, 3]).is_empty());
    }

    proptest! {
        #[test]
        fn counts_match_quota(quota in proptest::collection::vec(0u32..20, 0..8)) {
            let order: Vec<usize> = (0..quota.len()).collect();
            let z = round_robin(&quota, &order);
            prop_assert_eq!(z.len() as u32, quota.iter().sum::<u32>());
            for (w, &m) in quota.iter().enumerate() {
                prop_assert_eq!(z.iter().filter(|&&x| x == w).count() as u32, m);
            }
        }

        #[test]
        fn equal_quotas_are_evenly_spaced(m in 1u32..10, workers in 1usize..6) {
            let order: Vec<usize> = (0..workers).collect();
            let z = round_robin(&vec![m; workers], &order);
            for w in 0..workers {
                let idx: Vec<usize> = z.iter().enumerate().filter(|(_, &x)| x == w).map(|(i, _)| i).collect();
                for pair in idx.windows(2) {
                    prop_assert_eq!(pair[1] - pair[0], workers);
                }
            }
        }

        #[test]
        fn order_never_changes_counts(quota in proptest::collection::vec(0u32..10, 1..6), seed in any::<u64>()) {
            let mut order: Vec<usize> = (0..quota.len()).collect();
            let base = round_robin(&quota, &order);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut paired: Vec<(usize, u32)> = order.iter().copied().zip(quota.iter().copied()).collect();
            paired.shuffle(&mut rng);
            order = paired.iter().map(|p| p.0).collect();
            let q: Vec<u32> = paired.iter().map(|p| p.1).collect();
            let shuffled = round_robin(&q, &order);
            for w in 0..quota.len() {
                prop_assert_eq!(
                    base.iter().filter(|&&x| x == w).count(),
                    shuffled.iter().filter(|&&x| x == w).count()
                );
            }
        }
    }
}
