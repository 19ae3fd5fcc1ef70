//! Summary statistics across result files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::bail;
use serde::Serialize;

use crate::config::ControllerSpec;
use crate::run::{read_results, ResultRow};

type CellKey = (usize, String, String, u64);

fn key(r: &ResultRow) -> CellKey {
    (r.n_users, r.controller.clone(), r.trace_id.clone(), r.seed)
}

/// Long-format summary line for one (file, users, controller) group.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub source: String,
    pub n_users: usize,
    pub controller: String,
    pub cells: usize,
    pub mean_qoe: f64,
    pub median_qoe: f64,
    pub p10_qoe: f64,
    pub p90_qoe: f64,
    /// Change of the mean against the same group in the first file, percent.
    pub vs_first_pct: f64,
    /// Joint controllers only: change of the mean against the best separate
    /// controller in the same file and user count, percent.
    pub vs_best_separate_pct: Option<f64>,
}

/// Linear-interpolated percentile of ascending `xs`.
pub fn percentile(xs: &[f64], p: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let pos = p / 100.0 * (xs.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    xs[lo] + (xs[hi] - xs[lo]) * (pos - lo as f64)
}

/// Relative change of `new` over `base`, in percent of `|base|`.
pub fn improvement_pct(new: f64, base: f64) -> f64 {
    if new == base {
        0.0
    } else {
        (new - base) / base.abs() * 100.0
    }
}

/// Compares result sets restricted to the cells that completed in all of
/// them.
pub fn compare_rows(sources: &[(String, Vec<ResultRow>)]) -> anyhow::Result<Vec<SummaryRow>> {
    if sources.len() < 2 {
        bail!("compare needs at least two result files");
    }
    let ok_keys = |rows: &[ResultRow]| -> BTreeSet<CellKey> {
        rows.iter().filter(|r| !r.is_failure() && r.qoe_total.is_finite()).map(key).collect()
    };
    let mut common = ok_keys(&sources[0].1);
    for (_, rows) in &sources[1..] {
        common = common.intersection(&ok_keys(rows)).cloned().collect();
    }
    if common.is_empty() {
        bail!("the result files share no completed cells");
    }

    let mut grouped: Vec<BTreeMap<(usize, String), Vec<f64>>> = Vec::new();
    for (_, rows) in sources {
        let mut g: BTreeMap<(usize, String), Vec<f64>> = BTreeMap::new();
        for r in rows {
            if common.contains(&key(r)) {
                g.entry((r.n_users, r.controller.clone())).or_default().push(r.qoe_total);
            }
        }
        for v in g.values_mut() {
            v.sort_by(f64::total_cmp);
        }
        grouped.push(g);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    let mut out = Vec::new();
    for ((name, _), g) in sources.iter().zip(&grouped) {
        let mut best_separate: BTreeMap<usize, f64> = BTreeMap::new();
        for ((users, ctrl), v) in g {
            if ctrl.parse::<ControllerSpec>().is_ok_and(|c| c.is_separate()) {
                let m = mean(v);
                best_separate.entry(*users).and_modify(|b| *b = b.max(m)).or_insert(m);
            }
        }
        for ((users, ctrl), v) in g {
            let m = mean(v);
            let first = mean(&grouped[0][&(*users, ctrl.clone())]);
            let joint = ctrl.parse::<ControllerSpec>().is_ok_and(|c| c.is_joint());
            out.push(SummaryRow {
                source: name.clone(),
                n_users: *users,
                controller: ctrl.clone(),
                cells: v.len(),
                mean_qoe: m,
                median_qoe: percentile(v, 50.0),
                p10_qoe: percentile(v, 10.0),
                p90_qoe: percentile(v, 90.0),
                vs_first_pct: improvement_pct(m, first),
                vs_best_separate_pct: if joint {
                    best_separate.get(users).map(|&b| improvement_pct(m, b))
                } else {
                    None
                },
            });
        }
    }
    Ok(out)
}

pub fn compare_files(paths: &[PathBuf]) -> anyhow::Result<Vec<SummaryRow>> {
    let sources = paths
        .iter()
        .map(|p| Ok((source_name(p), read_results(p)?)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    compare_rows(&sources)
}

fn source_name(p: &Path) -> String {
    p.display().to_string()
}
