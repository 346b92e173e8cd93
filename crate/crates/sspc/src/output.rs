//! Trace, metrics and summary files.
//!
//! Floats are written with Rust's `Display`, the shortest decimal that
//! parses back to the same `f64`.

use std::fmt::Write as _;
use std::path::Path;

use sspc_core::SimTrace;

use crate::{Error, Result};

/// Residual level reported as the "solved" milestone in metrics.
pub const RESIDUAL_MILESTONE: f64 = 1e-10;
const SUMMARY_MILESTONES: [f64; 3] = [1e-2, 1e-6, RESIDUAL_MILESTONE];

pub fn trace_header(n_x: usize, n_u: usize) -> Vec<String> {
    let mut h = vec!["k".to_string(), "t".to_string()];
    h.extend((0..n_x).map(|i| format!("x_{i}")));
    h.extend((0..n_u).map(|i| format!("u_{i}")));
    h.extend(["residual", "cost", "max_violation", "subopt_err", "ell", "step_wall_s"].map(String::from));
    h
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_trace(path: &Path, trace: &SimTrace, n_x: usize, n_u: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(trace_header(n_x, n_u))?;
    for r in &trace.records {
        let mut row = vec![r.k.to_string(), r.t.to_string()];
        row.extend(r.x.iter().map(f64::to_string));
        row.extend(r.u.iter().map(f64::to_string));
        row.push(r.residual.to_string());
        row.push(r.cost.to_string());
        row.push(r.max_violation.to_string());
        row.push(opt(r.subopt));
        row.push(r.ell.to_string());
        row.push(opt(r.wall));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub ell: usize,
    /// First sample with residual at or below [`RESIDUAL_MILESTONE`].
    pub steps_to_milestone: Option<usize>,
    pub max_violation: f64,
    pub cost_sum: f64,
    pub completed: bool,
}

impl MetricsRow {
    pub fn from_trace(ell: usize, trace: &SimTrace) -> Self {
        MetricsRow {
            ell,
            steps_to_milestone: trace
                .records
                .iter()
                .find(|r| r.residual <= RESIDUAL_MILESTONE)
                .map(|r| r.k),
            max_violation: trace.max_violation(),
            cost_sum: trace.cumulative_cost(),
            completed: trace.is_complete(),
        }
    }
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["ell", "steps_to_residual_1e-10", "max_violation", "cost_sum"])?;
    for r in rows {
        w.write_record([
            r.ell.to_string(),
            r.steps_to_milestone.map(|k| k.to_string()).unwrap_or_default(),
            r.max_violation.to_string(),
            r.cost_sum.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Human-readable `key = value` report of one run.
pub fn summary(problem: &str, ell: usize, trace: &SimTrace) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "problem = {problem}");
    let _ = writeln!(s, "ell = {ell}");
    let _ = writeln!(s, "samples = {}", trace.records.len());
    match &trace.failure {
        None => s.push_str("status = completed\n"),
        Some(e) => {
            let _ = writeln!(s, "status = aborted after {} samples: {e}", trace.records.len());
        }
    }
    let Some(last) = trace.records.last() else {
        return s;
    };
    let inf = last.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let two = last.x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let _ = writeln!(s, "final_t = {}", last.t);
    let _ = writeln!(s, "final_state_norm_inf = {inf:e}");
    let _ = writeln!(s, "final_state_norm_2 = {two:e}");

    let worst = trace
        .records
        .iter()
        .max_by(|a, b| a.max_violation.total_cmp(&b.max_violation))
        .expect("nonempty");
    if worst.max_violation > 0.0 {
        let _ = writeln!(
            s,
            "max_violation = {:e} (k = {}, t = {})",
            worst.max_violation, worst.k, worst.t
        );
    } else {
        s.push_str("max_violation = 0\n");
    }
    for i in 0..last.x.len() {
        let m = trace.records.iter().fold(0.0f64, |m, r| m.max(r.x[i].abs()));
        let _ = writeln!(s, "max_abs_x_{i} = {m:e}");
    }
    for i in 0..last.u.len() {
        let m = trace.records.iter().fold(0.0f64, |m, r| m.max(r.u[i].abs()));
        let _ = writeln!(s, "max_abs_u_{i} = {m:e}");
    }
    for level in SUMMARY_MILESTONES {
        match trace.first_time_below(level) {
            Some(t) => {
                let _ = writeln!(s, "residual_first_below_{level:e} = t {t}");
            }
            None => {
                let _ = writeln!(s, "residual_first_below_{level:e} = never");
            }
        }
    }
    let _ = writeln!(s, "cumulative_stage_cost = {}", trace.cumulative_cost());
    let walls: Vec<f64> = trace.records.iter().filter_map(|r| r.wall).collect();
    if walls.is_empty() {
        s.push_str("wall_time_max_s = not recorded\nwall_time_mean_s = not recorded\n");
    } else {
        let max = walls.iter().copied().fold(0.0, f64::max);
        let mean = walls.iter().sum::<f64>() / walls.len() as f64;
        let _ = writeln!(s, "wall_time_max_s = {max:e}");
        let _ = writeln!(s, "wall_time_mean_s = {mean:e}");
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
