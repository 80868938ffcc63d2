//! Scenario execution and the recorded time series.

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::sim::system::{ix, PowerFlows, Signals, StoredEnergy, System, NX};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
    /// Only written in verbose mode.
    pub verbose: bool,
}

const fn col(name: &'static str, unit: &'static str, verbose: bool) -> Column {
    Column { name, unit, verbose }
}

/// Column layout of a recorded sample, in output order.
pub const COLUMNS: &[Column] = &[
    col("time", "s", false),
    col("v_pcc", "pu", false),
    col("v_pcc_d", "V", false),
    col("v_pcc_q", "V", false),
    col("i_grid", "A", false),
    col("p_grid", "MW", false),
    col("q_grid", "Mvar", false),
    col("v_wecs", "V", false),
    col("i_wecs", "A", false),
    col("p_wecs", "MW", false),
    col("q_wecs", "Mvar", false),
    col("i_t_d", "A", false),
    col("i_t_q", "A", false),
    col("q_statcom", "Mvar", false),
    col("v_dc", "V", false),
    col("omega_r", "rad/s", false),
    col("t_e", "N*m", false),
    col("t_m", "N*m", false),
    col("wind", "m/s", false),
    col("fault", "flag", false),
    col("converter_saturated", "flag", false),
    col("current_limited", "flag", false),
    col("theta_pll", "rad", true),
    col("omega_pll", "rad/s", true),
    col("i_dref", "A", true),
    col("i_qref", "A", true),
    col("v_meas", "pu", true),
    col("v_cmd_d", "V", true),
    col("v_cmd_q", "V", true),
    col("pll_coasting", "flag", true),
    col("load_collapsed", "flag", true),
];

/// One recorded instant. Powers are delivered into the PCC (grid) or out of
/// the generator terminals (WECS); `q_statcom > 0` is capacitive injection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sample {
    pub time: f64,
    pub v_pcc: f64,
    pub v_pcc_d: f64,
    pub v_pcc_q: f64,
    pub i_grid: f64,
    pub p_grid: f64,
    pub q_grid: f64,
    pub v_wecs: f64,
    pub i_wecs: f64,
    pub p_wecs: f64,
    pub q_wecs: f64,
    pub i_t_d: f64,
    pub i_t_q: f64,
    pub q_statcom: f64,
    pub v_dc: f64,
    pub omega_r: f64,
    pub t_e: f64,
    pub t_m: f64,
    pub wind: f64,
    pub fault: bool,
    pub converter_saturated: bool,
    pub current_limited: bool,
    pub theta_pll: f64,
    pub omega_pll: f64,
    pub i_dref: f64,
    pub i_qref: f64,
    pub v_meas: f64,
    pub v_cmd_d: f64,
    pub v_cmd_q: f64,
    pub pll_coasting: bool,
    pub load_collapsed: bool,
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl Sample {
    /// Values in [`COLUMNS`] order.
    pub fn values(&self) -> [f64; 31] {
        [
            self.time,
            self.v_pcc,
            self.v_pcc_d,
            self.v_pcc_q,
            self.i_grid,
            self.p_grid,
            self.q_grid,
            self.v_wecs,
            self.i_wecs,
            self.p_wecs,
            self.q_wecs,
            self.i_t_d,
            self.i_t_q,
            self.q_statcom,
            self.v_dc,
            self.omega_r,
            self.t_e,
            self.t_m,
            self.wind,
            flag(self.fault),
            flag(self.converter_saturated),
            flag(self.current_limited),
            self.theta_pll,
            self.omega_pll,
            self.i_dref,
            self.i_qref,
            self.v_meas,
            self.v_cmd_d,
            self.v_cmd_q,
            flag(self.pll_coasting),
            flag(self.load_collapsed),
        ]
    }

    /// Set the field behind column `index` of [`COLUMNS`].
    pub fn set(&mut self, index: usize, v: f64) {
        let b = v != 0.0;
        match index {
            0 => self.time = v,
            1 => self.v_pcc = v,
            2 => self.v_pcc_d = v,
            3 => self.v_pcc_q = v,
            4 => self.i_grid = v,
            5 => self.p_grid = v,
            6 => self.q_grid = v,
            7 => self.v_wecs = v,
            8 => self.i_wecs = v,
            9 => self.p_wecs = v,
            10 => self.q_wecs = v,
            11 => self.i_t_d = v,
            12 => self.i_t_q = v,
            13 => self.q_statcom = v,
            14 => self.v_dc = v,
            15 => self.omega_r = v,
            16 => self.t_e = v,
            17 => self.t_m = v,
            18 => self.wind = v,
            19 => self.fault = b,
            20 => self.converter_saturated = b,
            21 => self.current_limited = b,
            22 => self.theta_pll = v,
            23 => self.omega_pll = v,
            24 => self.i_dref = v,
            25 => self.i_qref = v,
            26 => self.v_meas = v,
            27 => self.v_cmd_d = v,
            28 => self.v_cmd_q = v,
            29 => self.pll_coasting = b,
            30 => self.load_collapsed = b,
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub samples: Vec<Sample>,
    /// The run stopped before `t_end`.
    pub truncated: bool,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn end_time(&self) -> Option<f64> {
        self.samples.last().map(|s| s.time)
    }

    /// Build a voltage-only series, e.g. for checking an external trace.
    pub fn from_voltage_trace(times: &[f64], v_pcc: &[f64]) -> Result<Self> {
        if times.len() != v_pcc.len() {
            return Err(Error::Trace("time and voltage columns differ in length".into()));
        }
        let ts = TimeSeries {
            samples: times
                .iter()
                .zip(v_pcc)
                .map(|(&time, &v)| Sample {
                    time,
                    v_pcc: v,
                    ..Sample::default()
                })
                .collect(),
            truncated: false,
        };
        ts.validate()?;
        Ok(ts)
    }

    pub fn validate(&self) -> Result<()> {
        for w in self.samples.windows(2) {
            if !(w[1].time > w[0].time) {
                return Err(Error::Trace(format!("time not strictly increasing at {}", w[1].time)));
            }
        }
        Ok(())
    }

    /// Samples with `time` in `[from, to)`.
    pub fn window(&self, from: f64, to: f64) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.time >= from && s.time < to)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceEvent {
    pub time: f64,
    pub quantity: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    FaultApplied,
    FaultCleared,
    PllCoastStart,
    PllCoastEnd,
    LoadCollapse,
    LoadRestored,
    DcUndervoltage,
    NetworkFallback,
    LimitViolation,
    Divergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Integrated energy terms over the run [J].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBalance {
    pub source: f64,
    pub airgap: f64,
    pub line: f64,
    pub load: f64,
    pub fault: f64,
    pub machine_copper: f64,
    pub transformer: f64,
    pub filter: f64,
    pub dc_loss: f64,
    pub stored_change: f64,
}

impl EnergyBalance {
    fn from_run(flows: PowerFlows, e0: StoredEnergy, e1: StoredEnergy) -> Self {
        EnergyBalance {
            source: flows.source,
            airgap: flows.airgap,
            line: flows.line,
            load: flows.load,
            fault: flows.fault,
            machine_copper: flows.machine_copper,
            transformer: flows.transformer,
            filter: flows.filter,
            dc_loss: flows.dc_loss,
            stored_change: e1.total() - e0.total(),
        }
    }

    /// Inputs minus sinks minus stored energy change.
    pub fn mismatch(&self) -> f64 {
        self.source + self.airgap
            - (self.line
                + self.load
                + self.fault
                + self.machine_copper
                + self.transformer
                + self.filter
                + self.dc_loss
                + self.stored_change)
    }

    pub fn throughput(&self) -> f64 {
        self.source.abs() + self.airgap.abs()
    }

    pub fn relative_mismatch(&self) -> f64 {
        let t = self.throughput();
        if t > 0.0 {
            self.mismatch().abs() / t
        } else {
            self.mismatch().abs()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunAudit {
    pub steps: usize,
    pub max_kcl_residual: f64,
    pub max_network_iterations: usize,
    pub network_fallbacks: usize,
    pub limit_checks: usize,
    pub limit_violations: usize,
    pub converter_saturated_steps: usize,
    pub current_limited_steps: usize,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub series: TimeSeries,
    pub divergence: Option<DivergenceEvent>,
    pub energy: EnergyBalance,
    pub audit: RunAudit,
    pub events: Vec<Event>,
    pub final_state: [f64; NX],
    /// Fault window actually applied, on step boundaries.
    pub realized_fault: Option<(f64, f64)>,
}

fn sample(sys: &System, t: f64, x: &[f64; NX], s: &Signals, fault: bool) -> Sample {
    Sample {
        time: t,
        v_pcc: s.v_pcc.norm() / sys.network.nominal_voltage,
        v_pcc_d: s.v_pcc_pll.d,
        v_pcc_q: s.v_pcc_pll.q,
        i_grid: s.i_grid,
        p_grid: s.s_grid.re / 1e6,
        q_grid: s.s_grid.im / 1e6,
        v_wecs: s.v_s.norm(),
        i_wecs: s.i_s.norm(),
        p_wecs: s.s_wecs.re / 1e6,
        q_wecs: s.s_wecs.im / 1e6,
        i_t_d: s.i_t.d,
        i_t_q: s.i_t.q,
        q_statcom: s.q_statcom / 1e6,
        v_dc: x[ix::V_DC],
        omega_r: x[ix::OMEGA_R],
        t_e: s.t_e,
        t_m: s.t_m,
        wind: s.wind,
        fault,
        converter_saturated: s.converter_saturated,
        current_limited: s.current_limited,
        theta_pll: sys.pll_angle(t, x),
        omega_pll: s.omega_pll,
        i_dref: s.refs.i_dref,
        i_qref: s.refs.i_qref,
        v_meas: s.v_meas,
        v_cmd_d: s.refs.v_cmd.d,
        v_cmd_q: s.refs.v_cmd.q,
        pll_coasting: s.pll_coasting,
        load_collapsed: s.load_collapsed,
    }
}

fn check_divergence(sys: &System, t: f64, x: &[f64; NX], s: &Signals, ceiling: f64) -> Option<DivergenceEvent> {
    if let Some(k) = x.iter().position(|v| !v.is_finite()) {
        return Some(DivergenceEvent {
            time: t,
            quantity: format!("state[{k}]"),
            value: x[k],
        });
    }
    sys.per_unit_magnitudes(x, s)
        .into_iter()
        .find(|(_, v)| !v.is_finite() || *v > ceiling)
        .map(|(name, value)| DivergenceEvent {
            time: t,
            quantity: name.to_string(),
            value,
        })
}

/// Run one scenario from `t = 0` to `t_end`.
///
/// Divergence is a valid outcome: the series is truncated and the event is
/// reported in the result.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let mut sys = System::new(cfg)?;
    let sc = cfg.simulation;
    let mut x = sys.initial_state(sc.init, 0.0)?;
    let e0 = sys.stored_energy(&x);
    let n = sc.steps();
    let (k_on, k_off) = if cfg.fault.enabled {
        (
            (cfg.fault.t_start / sc.dt).round() as usize,
            (cfg.fault.t_end / sc.dt).round() as usize,
        )
    } else {
        (usize::MAX, usize::MAX)
    };
    let realized_fault = cfg
        .fault
        .enabled
        .then_some((k_on as f64 * sc.dt, k_off as f64 * sc.dt));

    let mut samples = Vec::with_capacity(n / sc.record_decimation + 2);
    let mut events = Vec::new();
    let mut audit = RunAudit::default();
    let mut divergence = None;
    let mut prev = Signals::default();

    for k in 0..=n {
        let t = k as f64 * sc.dt;
        let fault = k >= k_on && k < k_off;
        if k == k_on {
            events.push(Event { time: t, kind: EventKind::FaultApplied });
        }
        if k == k_off {
            events.push(Event { time: t, kind: EventKind::FaultCleared });
        }
        let (dx, sig) = match sys.evaluate(t, &x, fault) {
            Ok(v) => v,
            Err(e) => {
                divergence = Some(DivergenceEvent {
                    time: t,
                    quantity: e.to_string(),
                    value: f64::NAN,
                });
                break;
            }
        };
        if let Some(d) = check_divergence(&sys, t, &x, &sig, sc.divergence_ceiling) {
            divergence = Some(d);
            break;
        }

        audit.steps = k;
        audit.max_kcl_residual = audit.max_kcl_residual.max(sig.kcl_residual);
        audit.max_network_iterations = audit.max_network_iterations.max(sig.network_iterations);
        if sys.statcom_enabled {
            audit.limit_checks += 1;
        }
        debug_assert!(!sig.limit_violation, "controller reference left its limits at t = {t}");
        audit.limit_violations += sig.limit_violation as usize;
        audit.converter_saturated_steps += sig.converter_saturated as usize;
        audit.current_limited_steps += sig.current_limited as usize;
        if sig.network_fallback {
            audit.network_fallbacks += 1;
            events.push(Event { time: t, kind: EventKind::NetworkFallback });
        }
        let transitions = [
            (sig.pll_coasting, prev.pll_coasting, EventKind::PllCoastStart, EventKind::PllCoastEnd),
            (sig.load_collapsed, prev.load_collapsed, EventKind::LoadCollapse, EventKind::LoadRestored),
        ];
        for (now, before, on, off) in transitions {
            if now && !before {
                events.push(Event { time: t, kind: on });
            } else if !now && before && k > 0 {
                events.push(Event { time: t, kind: off });
            }
        }
        if sig.dc_undervoltage && !prev.dc_undervoltage {
            events.push(Event { time: t, kind: EventKind::DcUndervoltage });
        }
        if sig.limit_violation && !prev.limit_violation {
            events.push(Event { time: t, kind: EventKind::LimitViolation });
        }
        prev = sig;

        if k % sc.record_decimation == 0 {
            samples.push(sample(&sys, t, &x, &sig, fault));
        }
        if k == n {
            break;
        }

        let mut first = Some(dx);
        let mut failure = None;
        let mut rhs = |tt: f64, xx: &[f64; NX]| -> [f64; NX] {
            if let Some(d) = first.take() {
                return d;
            }
            match sys.evaluate(tt, xx, fault) {
                Ok((d, _)) => d,
                Err(e) => {
                    failure.get_or_insert(e);
                    [f64::NAN; NX]
                }
            }
        };
        let next = sc.solver.step(&mut rhs, t, &x, sc.dt);
        if let Some(e) = failure {
            divergence = Some(DivergenceEvent {
                time: t + sc.dt,
                quantity: e.to_string(),
                value: f64::NAN,
            });
            break;
        }
        x = next;
    }

    if let Some(d) = &divergence {
        events.push(Event { time: d.time, kind: EventKind::Divergence });
    }
    let flows = PowerFlows::from_array(&x[ix::ENERGY..ix::ENERGY + ix::N_ENERGY]);
    let energy = EnergyBalance::from_run(flows, e0, sys.stored_energy(&x));
    Ok(ScenarioResult {
        series: TimeSeries {
            samples,
            truncated: divergence.is_some(),
        },
        divergence,
        energy,
        audit,
        events,
        final_state: x,
        realized_fault,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_table_matches_sample() {
        assert_eq!(COLUMNS.len(), Sample::default().values().len());
        let mut s = Sample::default();
        for k in 0..COLUMNS.len() {
            s.set(k, 1.0);
        }
        assert!(s.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn voltage_trace_must_increase() {
        assert!(TimeSeries::from_voltage_trace(&[0.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(TimeSeries::from_voltage_trace(&[0.0, 1.0], &[1.0]).is_err());
        assert_eq!(TimeSeries::from_voltage_trace(&[0.0, 1.0], &[1.0, 0.9]).unwrap().len(), 2);
    }
}
