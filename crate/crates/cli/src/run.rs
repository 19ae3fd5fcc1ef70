//! Experiment cells: one (users, controller, trace, seed) combination each.

use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use satstream::json::to_stable_json;
use satstream::multi::{simulate_multi, BackgroundProfile, CentralizedMpc, Independent, MultiResult};
use satstream::plan::{offline_optimal, CandidateDump, JointController, SeparateController};
use satstream::sim::SessionResult;
use satstream::trace::{gen_trace_set, read_trace, write_trace};
use satstream::{Controller, SimConfig, TraceSet, VideoSpec};

use crate::config::{ControllerSpec, ExperimentConfig, TraceSource};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub n_users: usize,
    pub controller: String,
    pub trace_id: String,
    pub seed: u64,
    pub spec: ControllerSpec,
    trace_idx: usize,
}

impl Cell {
    /// File-name-safe identifier, unique within one run.
    pub fn key(&self) -> String {
        format!("u{}_{}_{}_s{}", self.n_users, self.controller.replace(':', "-"), self.trace_id, self.seed)
    }
}

/// One line of `results.csv`: a cell's mean over its users.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub controller: String,
    pub predictor: String,
    pub n_users: usize,
    pub trace_id: String,
    pub seed: u64,
    pub qoe_total: f64,
    pub quality: f64,
    pub rebuf_penalty: f64,
    pub smooth_penalty: f64,
    pub rebuffer_s: f64,
    pub handoff_count: f64,
    pub failed_users: usize,
    pub error: String,
}

impl ResultRow {
    pub fn is_failure(&self) -> bool {
        !self.error.is_empty() || self.failed_users > 0
    }
}

/// One line of `timing.csv`. Kept apart from the results so those stay
/// byte-identical between runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub controller: String,
    pub n_users: usize,
    pub trace_id: String,
    pub seed: u64,
    pub decisions: usize,
    pub mean_latency_ms: f64,
    pub median_latency_ms: f64,
}

pub struct CellOutput {
    pub cell: Cell,
    pub row: ResultRow,
    pub timing: TimingRow,
    pub detail: String,
}

#[derive(Serialize)]
struct UserDetail<'a> {
    user: usize,
    error: Option<&'a str>,
    session: Option<satstream::sim::SessionReport<'a>>,
    candidates: Option<&'a [CandidateDump]>,
}

#[derive(Serialize)]
struct CellDetail<'a> {
    key: String,
    controller: &'a str,
    predictor: &'a str,
    n_users: usize,
    trace_id: &'a str,
    seed: u64,
    qos: Option<f64>,
    error: Option<&'a str>,
    users: Vec<UserDetail<'a>>,
}

pub struct LoadedTrace {
    pub id: String,
    pub trace: TraceSet,
    pub seed: Option<u64>,
}

/// Generated traces carry their own seed; loaded ones are run once per
/// repetition seed.
pub fn load_traces(cfg: &ExperimentConfig) -> anyhow::Result<Vec<LoadedTrace>> {
    match &cfg.traces {
        TraceSource::Generate(g) => cfg
            .rep_seeds()
            .map(|seed| {
                let trace = gen_trace_set(&satstream::TraceGenConfig { seed, ..g.clone() })
                    .with_context(|| format!("generating trace for seed {seed}"))?;
                Ok(LoadedTrace {
                    id: format!("gen{seed}"),
                    trace,
                    seed: Some(seed),
                })
            })
            .collect(),
        TraceSource::Load(paths) => paths
            .iter()
            .map(|p| {
                let trace = read_trace(p).with_context(|| format!("loading {}", p.display()))?;
                let id = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "trace".into());
                Ok(LoadedTrace { id, trace, seed: None })
            })
            .collect(),
    }
}

pub fn gen_traces(cfg: &ExperimentConfig, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let TraceSource::Generate(_) = cfg.traces else {
        anyhow::bail!("gen-traces needs a `generate` trace source");
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    for t in load_traces(cfg)? {
        let path = dir.join(format!("{}.csv", t.id));
        write_trace(&t.trace, &path).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

/// Every applicable cell, in canonical order. Offline-optimal plans for a
/// single client, so it only appears in one-user cells.
pub fn plan_cells(cfg: &ExperimentConfig, traces: &[LoadedTrace]) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &n_users in &cfg.users {
        for &spec in &cfg.controllers {
            if spec == ControllerSpec::OfflineOptimal && n_users > 1 {
                continue;
            }
            for (i, t) in traces.iter().enumerate() {
                let seeds: Vec<u64> = match t.seed {
                    Some(s) => vec![s],
                    None => cfg.rep_seeds().collect(),
                };
                for seed in seeds {
                    cells.push(Cell {
                        n_users,
                        controller: spec.to_string(),
                        trace_id: t.id.clone(),
                        seed,
                        spec,
                        trace_idx: i,
                    });
                }
            }
        }
    }
    cells.sort();
    cells
}

fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn independent<C: Controller>(
    ctrls: Vec<C>,
    trace: &TraceSet,
    video: &VideoSpec,
    sim: &SimConfig,
    bg: &BackgroundProfile,
) -> satstream::Result<(MultiResult, Vec<C>)> {
    let n = ctrls.len();
    let mut p = Independent(ctrls);
    let r = simulate_multi(trace, video, sim, bg, n, &mut p, false)?;
    Ok((r, p.0))
}

struct Sessions {
    per_user: Vec<Result<SessionResult, String>>,
    dumps: Vec<Option<Vec<CandidateDump>>>,
    qos: Option<f64>,
}

fn simulate(cfg: &ExperimentConfig, cell: &Cell, trace: &TraceSet) -> satstream::Result<Sessions> {
    let (video, sim, n) = (&cfg.video, &cfg.sim, cell.n_users);
    let bg = BackgroundProfile::generate(trace, cfg.background.users, cfg.background.max_demand, cell.seed);
    let from_multi = |r: MultiResult, dumps| Sessions {
        qos: r.qos,
        per_user: r.users.into_iter().map(|u| u.session).collect(),
        dumps,
    };
    Ok(match cell.spec {
        ControllerSpec::Separate(s) => {
            let ctrls = (0..n)
                .map(|_| {
                    let mut c = SeparateController::new(Some(s), cfg.predictor);
                    c.horizon = cfg.horizon;
                    c
                })
                .collect();
            let (r, _) = independent(ctrls, trace, video, sim, &bg)?;
            from_multi(r, vec![None; n])
        }
        ControllerSpec::Joint(mode) => {
            let ctrls = (0..n)
                .map(|_| {
                    let c = JointController::new(mode, cfg.predictor).with_search(cfg.horizon, cfg.inner_search);
                    if cfg.dump_candidates {
                        c.with_dump()
                    } else {
                        c
                    }
                })
                .collect();
            let (r, ctrls) = independent(ctrls, trace, video, sim, &bg)?;
            from_multi(r, ctrls.into_iter().map(|c| c.dump).collect())
        }
        ControllerSpec::Centralized => {
            let mut p = CentralizedMpc::new(cfg.predictor);
            p.horizon = cfg.horizon;
            p.search = cfg.inner_search;
            let r = simulate_multi(trace, video, sim, &bg, n, &mut p, false)?;
            from_multi(r, vec![None; n])
        }
        ControllerSpec::OfflineOptimal => {
            let r = offline_optimal(trace, video, sim, sim.dt_s)?;
            let qos = Some(r.session.breakdown.qoe_total);
            Sessions {
                per_user: vec![Ok(r.session)],
                dumps: vec![None],
                qos,
            }
        }
    })
}

pub fn run_cell(cfg: &ExperimentConfig, cell: &Cell, trace: &TraceSet) -> CellOutput {
    let predictor = cfg.predictor.as_str();
    let outcome = simulate(cfg, cell, trace);
    let mut row = ResultRow {
        controller: cell.controller.clone(),
        predictor: predictor.to_string(),
        n_users: cell.n_users,
        trace_id: cell.trace_id.clone(),
        seed: cell.seed,
        qoe_total: f64::NAN,
        quality: f64::NAN,
        rebuf_penalty: f64::NAN,
        smooth_penalty: f64::NAN,
        rebuffer_s: f64::NAN,
        handoff_count: f64::NAN,
        failed_users: 0,
        error: String::new(),
    };
    let mut latency = Vec::new();
    let detail = match &outcome {
        Err(e) => {
            row.error = e.to_string();
            row.failed_users = cell.n_users;
            CellDetail {
                key: cell.key(),
                controller: &cell.controller,
                predictor,
                n_users: cell.n_users,
                trace_id: &cell.trace_id,
                seed: cell.seed,
                qos: None,
                error: Some(&row.error),
                users: Vec::new(),
            }
        }
        Ok(s) => {
            let ok: Vec<&SessionResult> = s.per_user.iter().filter_map(|r| r.as_ref().ok()).collect();
            row.failed_users = s.per_user.len() - ok.len();
            if !ok.is_empty() {
                let mean = |f: &dyn Fn(&SessionResult) -> f64| ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64;
                row.qoe_total = mean(&|r| r.breakdown.qoe_total);
                row.quality = mean(&|r| r.breakdown.quality_total);
                row.rebuf_penalty = mean(&|r| r.breakdown.rebuf_penalty_total);
                row.smooth_penalty = mean(&|r| r.breakdown.smooth_penalty_total);
                row.rebuffer_s = mean(&|r| r.breakdown.rebuffer_s);
                row.handoff_count = mean(&|r| r.handoffs() as f64);
            }
            for r in &ok {
                latency.extend_from_slice(&r.decision_latency_ms);
            }
            let users = s
                .per_user
                .iter()
                .zip(&s.dumps)
                .enumerate()
                .map(|(user, (r, dump))| UserDetail {
                    user,
                    error: r.as_ref().err().map(String::as_str),
                    session: r.as_ref().ok().map(|r| r.report(&cfg.video, &cfg.sim)),
                    candidates: dump.as_deref(),
                })
                .collect();
            CellDetail {
                key: cell.key(),
                controller: &cell.controller,
                predictor,
                n_users: cell.n_users,
                trace_id: &cell.trace_id,
                seed: cell.seed,
                qos: s.qos,
                error: None,
                users,
            }
        }
    };
    let detail = to_stable_json(&detail).unwrap_or_else(|e| format!("{{\"error\": \"{e}\"}}\n"));
    let timing = TimingRow {
        controller: cell.controller.clone(),
        n_users: cell.n_users,
        trace_id: cell.trace_id.clone(),
        seed: cell.seed,
        decisions: latency.len(),
        mean_latency_ms: if latency.is_empty() {
            0.0
        } else {
            latency.iter().sum::<f64>() / latency.len() as f64
        },
        median_latency_ms: median(&latency),
    };
    CellOutput {
        cell: cell.clone(),
        row,
        timing,
        detail,
    }
}

pub struct RunSummary {
    pub rows: Vec<ResultRow>,
    pub timings: Vec<TimingRow>,
    pub failures: usize,
}

/// Runs every cell on up to `jobs` threads and writes `results.csv`,
/// `timing.csv` and `cells/<key>.json` under the output directory.
pub fn run(cfg: &ExperimentConfig, jobs: Option<usize>) -> anyhow::Result<RunSummary> {
    let traces = load_traces(cfg)?;
    let cells = plan_cells(cfg, &traces);
    let out = cfg.out_dir();
    let cells_dir = out.join("cells");
    std::fs::create_dir_all(&cells_dir).with_context(|| format!("creating {}", cells_dir.display()))?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build()?;
    let mut outputs: Vec<CellOutput> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| run_cell(cfg, c, &traces[c.trace_idx].trace))
            .collect()
    });
    outputs.sort_by(|a, b| a.cell.cmp(&b.cell));

    for o in &outputs {
        let path = cells_dir.join(format!("{}.json", o.cell.key()));
        std::fs::write(&path, &o.detail).with_context(|| format!("writing {}", path.display()))?;
    }
    let rows: Vec<ResultRow> = outputs.iter().map(|o| o.row.clone()).collect();
    let timings: Vec<TimingRow> = outputs.iter().map(|o| o.timing.clone()).collect();
    write_csv(&out.join("results.csv"), &rows)?;
    write_csv(&out.join("timing.csv"), &timings)?;
    let failures = rows.iter().filter(|r| r.is_failure()).count();
    Ok(RunSummary { rows, timings, failures })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> anyhow::Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize()
        .collect::<Result<_, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}
