//! Scalar summaries of a recorded run.

use serde::{Deserialize, Serialize};

use crate::network::FaultSpec;
use crate::sim::scenario::{Sample, TimeSeries};

/// Post-fault averages skip this long after clearing [s].
pub const POST_FAULT_DELAY: f64 = 0.2;
/// Recovery threshold [p.u.].
pub const RECOVERY_LEVEL: f64 = 0.98;
/// Half-width of the settling band around 1 p.u.
pub const SETTLING_BAND: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub v_max: f64,
    pub v_min: f64,
    /// `max(0, v_max - 1)` in percent.
    pub overvoltage_pct: f64,
    pub v_min_during_fault: Option<f64>,
    /// Time after clearing until the PCC stays at or above 0.98 p.u. [s].
    pub recovery_time: Option<f64>,
    /// Time after clearing until the PCC stays within ±2 % of 1 p.u. [s].
    pub settling_time: Option<f64>,
    /// Largest `|v - 1|` over the whole run [p.u.].
    pub max_deviation: f64,
    /// Largest `|v - 1|` from clearing onwards [p.u.].
    pub max_post_fault_deviation: f64,
    pub peak_q_statcom: f64,
    pub post_fault_mean_q_statcom: Option<f64>,
    pub mean_p_grid: f64,
    pub post_fault_mean_q_grid: Option<f64>,
    pub post_fault_q_grid_min: Option<f64>,
    pub post_fault_q_grid_max: Option<f64>,
    pub diverged: bool,
}

fn mean(it: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, sum) = it.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    (n > 0).then(|| sum / n as f64)
}

/// Time from `t0` until `ok` holds for every remaining sample.
fn time_to_hold(samples: &[Sample], t0: f64, ok: impl Fn(&Sample) -> bool) -> Option<f64> {
    let after: Vec<&Sample> = samples.iter().filter(|s| s.time >= t0).collect();
    if after.is_empty() {
        return None;
    }
    match after.iter().rposition(|s| !ok(s)) {
        None => Some(0.0),
        Some(k) if k + 1 < after.len() => Some(after[k + 1].time - t0),
        Some(_) => None,
    }
}

pub fn compute_metrics(ts: &TimeSeries, fault: &FaultSpec) -> Metrics {
    let s = &ts.samples;
    let v = || s.iter().map(|x| x.v_pcc);
    let v_max = v().fold(f64::NEG_INFINITY, f64::max);
    let v_min = v().fold(f64::INFINITY, f64::min);
    let t_clear = if fault.enabled { fault.t_end } else { 0.0 };
    let during = fault
        .enabled
        .then(|| {
            ts.window(fault.t_start, fault.t_end)
                .map(|x| x.v_pcc)
                .fold(f64::INFINITY, f64::min)
        })
        .filter(|m| m.is_finite());
    let post = || s.iter().filter(|x| x.time >= t_clear + POST_FAULT_DELAY);
    let q_grid = || post().map(|x| x.q_grid);
    Metrics {
        v_max,
        v_min,
        overvoltage_pct: ((v_max - 1.0) * 100.0).max(0.0),
        v_min_during_fault: during,
        recovery_time: time_to_hold(s, t_clear, |x| x.v_pcc >= RECOVERY_LEVEL),
        settling_time: time_to_hold(s, t_clear, |x| (x.v_pcc - 1.0).abs() <= SETTLING_BAND),
        max_deviation: v().map(|x| (x - 1.0).abs()).fold(0.0, f64::max),
        max_post_fault_deviation: s
            .iter()
            .filter(|x| x.time >= t_clear)
            .map(|x| (x.v_pcc - 1.0).abs())
            .fold(0.0, f64::max),
        peak_q_statcom: s.iter().map(|x| x.q_statcom.abs()).fold(0.0, f64::max),
        post_fault_mean_q_statcom: mean(post().map(|x| x.q_statcom)),
        mean_p_grid: mean(s.iter().map(|x| x.p_grid)).unwrap_or(0.0),
        post_fault_mean_q_grid: mean(q_grid()),
        post_fault_q_grid_min: q_grid().reduce(f64::min),
        post_fault_q_grid_max: q_grid().reduce(f64::max),
        diverged: ts.truncated,
    }
}
