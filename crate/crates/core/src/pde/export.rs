use std::fmt::Write;

use serde::Serialize;
use serde_json::{json, Value};

use super::run::Trajectory;
use super::solver::sup;
use crate::scalar::Real;

/// `t,x,u,v`, one row per node per snapshot.
pub fn snapshots_csv<T: Real>(tr: &Trajectory<T>) -> String {
    let mut out = String::from("t,x,u,v\n");
    for s in &tr.snapshots {
        for i in 0..tr.grid.n {
            let _ = writeln!(out, "{},{},{},{}", s.t, tr.grid.x(i), s.u[i], s.v[i]);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotStats {
    pub t: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub u_mass: f64,
    pub clipped: usize,
}

fn inf<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::infinity(), |a, &b| a.min(b))
}

pub fn snapshot_stats<T: Real>(tr: &Trajectory<T>) -> Vec<SnapshotStats> {
    tr.snapshots
        .iter()
        .map(|s| SnapshotStats {
            t: s.t.as_f64(),
            u_min: inf(&s.u).as_f64(),
            u_max: sup(&s.u).as_f64(),
            v_min: inf(&s.v).as_f64(),
            v_max: sup(&s.v).as_f64(),
            u_mass: tr.grid.integrate(&s.u).as_f64(),
            clipped: s.clipped,
        })
        .collect()
}

/// Summary document: the caller's config echo, kernel bound, per-snapshot
/// statistics and clipping totals.
pub fn summary_json<T: Real>(tr: &Trajectory<T>, config_echo: Value) -> Value {
    json!({
        "config": config_echo,
        "grid": tr.grid,
        "kernel_row_sum": tr.kernel_row_sum.as_f64(),
        "steps": tr.steps,
        "clipped_total": tr.clipped,
        "snapshots": snapshot_stats(tr),
    })
}
