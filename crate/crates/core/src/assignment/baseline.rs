use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{optimize, Assignment, AssignmentError, OptimizeOptions, PairScope};
use crate::model::{Medium, ValidatedInstance};

/// Reference policies compared against the optimized hybrid assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Every sender processes its own task types on its own processor.
    NoOffload,
    /// The optimizer restricted to edge servers plus local processing.
    VerticalOnly,
    /// Senders keep their own task types; every other worker picks a random
    /// reachable task type and gives it its whole processor; each sender
    /// splits its transmit time equally over the workers it feeds, per medium.
    /// Rate, cap and delay constraints are not guaranteed.
    RandomHybrid,
}

/// Each sender splits its own processor evenly across its task types.
fn self_processing(instance: &ValidatedInstance, out: &mut Assignment) {
    for s in instance.senders() {
        let mine: Vec<usize> = (0..instance.num_task_types()).filter(|&k| instance.sender_of(k) == s).collect();
        let share = 1.0 / mine.len() as f64;
        for k in mine {
            out.x[k][s] = share;
        }
    }
}

pub fn baseline_assignment(
    instance: &ValidatedInstance,
    policy: Baseline,
    seed: u64,
    options: &OptimizeOptions,
) -> Result<Assignment, AssignmentError> {
    let kk = instance.num_task_types();
    let n = instance.nodes.len();
    let mut out = Assignment::zeros(kk, n);
    match policy {
        Baseline::NoOffload => self_processing(instance, &mut out),
        Baseline::VerticalOnly => {
            let mut opts = *options;
            opts.p1.scope = PairScope::VerticalOnly;
            return Ok(optimize(instance, &opts)?.assignment);
        }
        Baseline::RandomHybrid => {
            self_processing(instance, &mut out);
            let senders = instance.senders();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let links = &instance.links;
            for &w in instance.workers() {
                if senders.contains(&w) {
                    continue;
                }
                let reachable: Vec<usize> = (0..kk)
                    .filter(|&k| matches!(links.medium(instance.sender_of(k), w), Medium::Lte | Medium::V2v))
                    .collect();
                if reachable.is_empty() {
                    continue;
                }
                let k = reachable[rng.random_range(0..reachable.len())];
                out.x[k][w] = 1.0;
            }
            for s in senders {
                for medium in [Medium::Lte, Medium::V2v] {
                    let fed: Vec<(usize, usize)> = (0..kk)
                        .filter(|&k| instance.sender_of(k) == s)
                        .flat_map(|k| (0..n).map(move |w| (k, w)))
                        .filter(|&(k, w)| w != s && out.x[k][w] > 0.0 && links.medium(s, w) == medium)
                        .collect();
                    let share = 1.0 / fed.len().max(1) as f64;
                    for (k, w) in fed {
                        match medium {
                            Medium::Lte => out.y_lte[k][w] = share,
                            _ => out.y_v2v[k][w] = share,
                        }
                    }
                }
            }
        }
    }
    out.recompute_tasks(instance);
    Ok(out)
}
