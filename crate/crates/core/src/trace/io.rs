//! Trace CSV (`t_s,sat_id,throughput_mbps,elevation_deg,visible`) plus a
//! JSON metadata sidecar carrying pass geometry and provenance.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{PassGeometry, SatId, SatelliteTrace, Samples, TraceMeta, TraceSet};
use crate::{Error, Result};

const HEADER: [&str; 5] = ["t_s", "sat_id", "throughput_mbps", "elevation_deg", "visible"];

#[derive(Serialize, Deserialize)]
struct Sidecar {
    sample_dt: f64,
    meta: TraceMeta,
    passes: BTreeMap<u32, Vec<PassGeometry>>,
}

/// `trace.csv` -> `trace.meta.json`.
pub fn metadata_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

pub fn write_trace(trace: &TraceSet, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HEADER)?;
    for i in 0..trace.n_samples() {
        let t = format!("{:.3}", i as f64 * trace.sample_dt);
        for sat in &trace.satellites {
            let s = &sat.samples;
            w.write_record([
                t.as_str(),
                &sat.id.0.to_string(),
                &format!("{:.6}", s.throughput_mbps[i]),
                &format!("{:.6}", s.elevation_deg[i]),
                if s.visible[i] { "1" } else { "0" },
            ])?;
        }
    }
    w.flush()?;

    let sidecar = Sidecar {
        sample_dt: trace.sample_dt,
        meta: trace.meta.clone(),
        passes: trace
            .satellites
            .iter()
            .map(|s| (s.id.0, s.passes.clone()))
            .collect(),
    };
    let mut json = serde_json::to_string_pretty(&sidecar)?;
    json.push('\n');
    fs::write(metadata_path(path), json)?;
    Ok(())
}

#[derive(Default)]
struct Column {
    times: Vec<f64>,
    samples: Samples,
}

pub fn read_trace(path: &Path) -> Result<TraceSet> {
    let parse_err = |line: u64, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message,
    };

    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(parse_err(1, 1, format!("expected header {}", HEADER.join(","))));
    }

    let mut columns: BTreeMap<u32, Column> = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != HEADER.len() {
            return Err(parse_err(line, rec.len().min(HEADER.len()) + 1, format!(
                "expected {} fields, found {}",
                HEADER.len(),
                rec.len()
            )));
        }
        let num = |col: usize| -> Result<f64> {
            rec[col]
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| parse_err(line, col + 1, format!("`{}` is not a number", &rec[col])))
        };
        let t = num(0)?;
        let sat: u32 = rec[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(line, 2, format!("`{}` is not a satellite id", &rec[1])))?;
        let tp = num(2)?;
        if tp < 0.0 {
            return Err(parse_err(line, 3, format!("negative throughput {tp}")));
        }
        let elev = num(3)?;
        let visible = match rec[4].trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(parse_err(line, 5, format!("`{other}` is not a visibility flag"))),
        };
        let c = columns.entry(sat).or_default();
        if c.times.last().is_some_and(|&last| t <= last) {
            return Err(parse_err(line, 1, format!("time {t} is not increasing for sat{sat}")));
        }
        c.times.push(t);
        c.samples.throughput_mbps.push(tp);
        c.samples.elevation_deg.push(elev);
        c.samples.visible.push(visible);
    }

    let Some(first) = columns.values().next() else {
        return Err(Error::Structure("trace file has no rows".into()));
    };
    let axis = first.times.clone();
    for (id, c) in &columns {
        if c.times != axis {
            return Err(Error::Structure(format!(
                "sat{id} does not share the time axis of the first satellite"
            )));
        }
    }

    let meta_path = metadata_path(path);
    let sidecar: Option<Sidecar> = if meta_path.exists() {
        Some(serde_json::from_str(&fs::read_to_string(&meta_path)?)?)
    } else {
        None
    };
    let sample_dt = match &sidecar {
        Some(s) => s.sample_dt,
        None if axis.len() >= 2 => axis[1] - axis[0],
        None => 1.0,
    };
    for (i, &t) in axis.iter().enumerate() {
        let expected = format!("{:.3}", i as f64 * sample_dt);
        if format!("{t:.3}") != expected {
            return Err(Error::Structure(format!(
                "sample {i} at t={t} is off the {sample_dt} s grid (expected {expected})"
            )));
        }
    }

    let (meta, mut passes) = match sidecar {
        Some(s) => (s.meta, s.passes),
        None => (TraceMeta::default(), BTreeMap::new()),
    };
    let satellites = columns
        .into_iter()
        .map(|(id, c)| SatelliteTrace {
            id: SatId(id),
            passes: passes.remove(&id).unwrap_or_default(),
            samples: c.samples,
        })
        .collect();
    TraceSet::new(sample_dt, satellites, meta)
}
