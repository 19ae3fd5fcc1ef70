use super::{evaluate_plan, PlanInstance, PlanResult};

/// Scores every bitrate plan of the horizon, each simulated from the start
/// state. Ties go to the higher first bitrate, then the lexicographically
/// higher plan.
pub fn exhaustive_search(inst: &PlanInstance<'_>) -> PlanResult {
    if inst.horizon == 0 {
        return PlanResult {
            best_qoe: 0.0,
            first_bitrate_idx: 0,
            full_bitrate_plan: Vec::new(),
            visited: 0,
        };
    }
    let levels = inst.video.levels();
    let mut plan = vec![0; inst.horizon];
    let mut best_qoe = f64::NEG_INFINITY;
    let mut best_plan: Option<Vec<usize>> = None;
    let mut visited = 0;
    loop {
        visited += 1;
        let q = evaluate_plan(inst, &plan);
        // plans arrive in ascending lexicographic order, so `>=` keeps the
        // highest plan among equals
        if q >= best_qoe && q.is_finite() {
            best_qoe = q;
            best_plan = Some(plan.clone());
        }
        // odometer step, last chunk fastest
        let Some(pos) = plan.iter().rposition(|&r| r + 1 < levels) else {
            break;
        };
        plan[pos] += 1;
        plan[pos + 1..].fill(0);
    }
    match best_plan {
        Some(plan) => PlanResult {
            best_qoe,
            first_bitrate_idx: plan[0],
            full_bitrate_plan: plan,
            visited,
        },
        None => PlanResult::infeasible(inst, visited),
    }
}
