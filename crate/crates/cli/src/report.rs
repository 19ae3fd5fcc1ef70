//! QoE breakdown per (users, controller).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::run::ResultRow;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BreakdownRow {
    pub n_users: usize,
    pub controller: String,
    pub cells: usize,
    pub quality: f64,
    pub rebuf_penalty: f64,
    pub smooth_penalty: f64,
    pub qoe_total: f64,
    pub rebuffer_s: f64,
    pub handoff_count: f64,
}

pub fn breakdown(rows: &[ResultRow]) -> Vec<BreakdownRow> {
    let mut groups: BTreeMap<(usize, &str), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.qoe_total.is_finite()) {
        groups.entry((r.n_users, &r.controller)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((n_users, controller), g)| {
            let mean = |f: fn(&ResultRow) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / g.len() as f64;
            BreakdownRow {
                n_users,
                controller: controller.to_string(),
                cells: g.len(),
                quality: mean(|r| r.quality),
                rebuf_penalty: mean(|r| r.rebuf_penalty),
                smooth_penalty: mean(|r| r.smooth_penalty),
                qoe_total: mean(|r| r.qoe_total),
                rebuffer_s: mean(|r| r.rebuffer_s),
                handoff_count: mean(|r| r.handoff_count),
            }
        })
        .collect()
}

pub fn render(rows: &[BreakdownRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>5}  {:<18} {:>5} {:>10} {:>10} {:>10} {:>10} {:>9} {:>8}",
        "users", "controller", "cells", "quality", "rebuf", "smooth", "qoe", "stall_s", "handoffs"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>5}  {:<18} {:>5} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>9.3} {:>8.2}",
            r.n_users, r.controller, r.cells, r.quality, r.rebuf_penalty, r.smooth_penalty, r.qoe_total, r.rebuffer_s, r.handoff_count
        );
    }
    s
}
