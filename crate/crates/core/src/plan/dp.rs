use std::collections::HashMap;

use super::{PlanInstance, PlanResult};

/// A representative of one discretized state `(k, t, b, r)`: exact time and
/// buffer of the best-scoring prefix that reached it.
#[derive(Clone, Copy, Debug)]
struct Node {
    time: f64,
    buffer: f64,
    qoe: f64,
    /// Bitrate prefix in base `levels`, first chunk most significant.
    /// Doubles as the back-pointer and orders ties lexicographically.
    code: u128,
}

fn decode(mut code: u128, levels: usize, len: usize) -> Vec<usize> {
    let mut plan = vec![0; len];
    for slot in plan.iter_mut().rev() {
        *slot = (code % levels as u128) as usize;
        code /= levels as u128;
    }
    plan
}

fn cell(x: f64, dt: f64) -> i64 {
    (x / dt).floor() as i64
}

/// Horizon search over states discretized on time and buffer at `dt`.
/// Prefixes that land in the same `(k, floor(T/dt), floor(B/dt), r)` cell
/// are merged, keeping the higher accumulated QoE.
pub fn dp_search(inst: &PlanInstance<'_>, dt: f64) -> PlanResult {
    assert!(dt > 0.0, "dp_search needs a positive time step");
    let levels = inst.video.levels();
    if inst.horizon == 0 {
        return PlanResult {
            best_qoe: 0.0,
            first_bitrate_idx: 0,
            full_bitrate_plan: Vec::new(),
            visited: 0,
        };
    }
    assert!(
        (levels as u128).checked_pow(inst.horizon as u32).is_some(),
        "horizon too long to encode"
    );

    let mut stage = vec![Node {
        time: inst.start_s,
        buffer: inst.buffer_s,
        qoe: 0.0,
        code: 0,
    }];
    let mut index: HashMap<(i64, i64, usize), usize> = HashMap::new();
    let mut visited = 0;
    for n in 1..=inst.horizon {
        let mut next: Vec<Node> = Vec::with_capacity(stage.len() * levels);
        index.clear();
        for node in &stage {
            let prev = if n == 1 {
                inst.prev_bitrate_idx
            } else {
                Some((node.code % levels as u128) as usize)
            };
            for r in 0..levels {
                let Some((time, buffer, q)) = inst.step(n, node.time, node.buffer, prev, r) else {
                    continue;
                };
                let cand = Node {
                    time,
                    buffer,
                    qoe: node.qoe + q,
                    code: node.code * levels as u128 + r as u128,
                };
                let key = (cell(time, dt), cell(buffer, dt), r);
                match index.get(&key) {
                    Some(&i) => {
                        let held = &mut next[i];
                        if cand.qoe > held.qoe || (cand.qoe == held.qoe && cand.code > held.code) {
                            *held = cand;
                        }
                    }
                    None => {
                        index.insert(key, next.len());
                        next.push(cand);
                    }
                }
            }
        }
        visited += next.len();
        if next.is_empty() {
            return PlanResult::infeasible(inst, visited);
        }
        stage = next;
    }

    let best = stage
        .iter()
        .copied()
        .reduce(|a, b| {
            if b.qoe > a.qoe || (b.qoe == a.qoe && b.code > a.code) {
                b
            } else {
                a
            }
        })
        .expect("non-empty final stage");
    let plan = decode(best.code, levels, inst.horizon);
    PlanResult {
        best_qoe: best.qoe,
        first_bitrate_idx: plan[0],
        full_bitrate_plan: plan,
        visited,
    }
}
