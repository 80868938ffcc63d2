//! Quasi-static network at the point of common coupling (PCC).
//!
//! The grid is a Thevenin source behind the grid impedance in series with the
//! line. The PCC also carries a constant-power load, an optional fault shunt,
//! the STATCOM filter current and the generator transformer. All phasors are
//! in a synchronous frame at nominal frequency and use `x = d + j q`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::frames::Dq;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformerParams {
    /// Machine-side line-to-line voltage [V]; the PCC side is the network
    /// nominal voltage.
    pub lv_voltage: f64,
    /// Leakage reactance [p.u. on the machine rating].
    pub leakage: f64,
    /// Winding resistance [p.u. on the machine rating].
    pub resistance: f64,
}

impl Default for TransformerParams {
    fn default() -> Self {
        TransformerParams {
            lv_voltage: 6000.0,
            leakage: 0.06,
            resistance: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverParams {
    pub max_iterations: usize,
    /// Convergence threshold on the voltage update [p.u.].
    pub tolerance: f64,
    /// Relaxation factor of the fixed-point update.
    pub damping: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            max_iterations: 50,
            tolerance: 1e-9,
            damping: 0.7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkParams {
    /// PCC line-to-line voltage base [V].
    pub nominal_voltage: f64,
    /// Grid frequency [Hz].
    pub frequency: f64,
    /// Power base for per-unit currents [VA].
    pub base_power: f64,
    /// Thevenin source magnitude [V].
    pub grid_voltage: f64,
    /// `[R, X]` of the grid equivalent [Ω].
    pub grid_impedance: Complex64,
    /// `[R, X]` per km of line [Ω/km].
    pub line_impedance_per_km: Complex64,
    /// Line length [km].
    pub line_length: f64,
    /// `[P, Q]` of the constant-power load [W, var].
    pub load: Complex64,
    /// Below this PCC voltage [p.u.] the load is held at constant impedance.
    pub load_collapse_voltage: f64,
    /// Fault resistance to ground [Ω].
    pub fault_resistance: f64,
    pub transformer: TransformerParams,
    pub solver: SolverParams,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            nominal_voltage: 25e3,
            frequency: 50.0,
            base_power: 100e6,
            grid_voltage: 27e3,
            grid_impedance: Complex64::new(0.034274, 4.32274),
            line_impedance_per_km: Complex64::new(0.12, -2.78),
            line_length: 1.0,
            load: Complex64::new(80e6, 10e6),
            load_collapse_voltage: 0.7,
            fault_resistance: 0.4,
            transformer: TransformerParams::default(),
            solver: SolverParams::default(),
        }
    }
}

impl NetworkParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let positive = [
            ("nominal_voltage", self.nominal_voltage),
            ("frequency", self.frequency),
            ("base_power", self.base_power),
            ("grid_voltage", self.grid_voltage),
            ("fault_resistance", self.fault_resistance),
            ("load_collapse_voltage", self.load_collapse_voltage),
            ("transformer.lv_voltage", self.transformer.lv_voltage),
            ("transformer.leakage", self.transformer.leakage),
            ("solver.tolerance", self.solver.tolerance),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{prefix}.{k}"), format!("must be positive, got {v}")));
            }
        }
        if !(self.line_length.is_finite() && self.line_length >= 0.0) {
            return Err(Error::config(format!("{prefix}.line_length"), "must be non-negative"));
        }
        if !(self.transformer.resistance >= 0.0) {
            return Err(Error::config(format!("{prefix}.transformer.resistance"), "must be non-negative"));
        }
        if !(self.solver.damping > 0.0 && self.solver.damping <= 1.0) {
            return Err(Error::config(format!("{prefix}.solver.damping"), "must be in (0, 1]"));
        }
        if self.solver.max_iterations == 0 {
            return Err(Error::config(format!("{prefix}.solver.max_iterations"), "must be at least 1"));
        }
        if self.grid_impedance.re < 0.0 {
            return Err(Error::config(format!("{prefix}.grid_impedance"), "resistance must be non-negative"));
        }
        if self.branch_impedance().norm() == 0.0 {
            return Err(Error::config(format!("{prefix}.grid_impedance"), "grid branch has zero impedance"));
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.frequency
    }

    pub fn line_impedance(&self) -> Complex64 {
        self.line_impedance_per_km * self.line_length
    }

    /// Grid equivalent and line in series.
    pub fn branch_impedance(&self) -> Complex64 {
        self.grid_impedance + self.line_impedance()
    }

    pub fn base_current(&self) -> f64 {
        self.base_power / self.nominal_voltage
    }

    /// Short-circuit ratio of the branch against the load apparent power.
    pub fn short_circuit_ratio(&self) -> f64 {
        let s_sc = self.nominal_voltage.powi(2) / self.branch_impedance().norm();
        s_sc / self.load.norm()
    }
}

/// Ideal-ratio transformer with series impedance on the machine side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transformer {
    /// PCC voltage / machine-side voltage.
    pub ratio: f64,
    /// Series impedance referred to the machine side [Ω].
    pub impedance: Complex64,
}

impl Transformer {
    pub fn new(net: &NetworkParams, machine_va: f64) -> Self {
        let t = &net.transformer;
        let z_base = t.lv_voltage * t.lv_voltage / machine_va;
        Transformer {
            ratio: net.nominal_voltage / t.lv_voltage,
            impedance: Complex64::new(t.resistance, t.leakage) * z_base,
        }
    }

    /// Machine terminal voltage for PCC voltage `v_pcc` and stator current
    /// `i_s` (into the machine), both in the same frame.
    pub fn terminal_voltage(&self, v_pcc: Dq, i_s: Dq) -> Dq {
        v_pcc * (1.0 / self.ratio) - Dq::from_complex(self.impedance * i_s.to_complex())
    }

    /// Current injected into the PCC by the generator branch.
    pub fn pcc_injection(&self, i_s: Dq) -> Dq {
        i_s * (-1.0 / self.ratio)
    }

    pub fn loss(&self, i_s: Dq) -> f64 {
        self.impedance.re * i_s.dot(i_s)
    }
}

/// Self admittance at the PCC seen from the network side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodalAdmittance {
    pub branch: Complex64,
    pub fault: Complex64,
}

impl NodalAdmittance {
    pub fn total(&self) -> Complex64 {
        self.branch + self.fault
    }

    /// Real 2x2 block acting on `[d, q]`.
    pub fn block(&self) -> [[f64; 2]; 2] {
        let y = self.total();
        [[y.re, -y.im], [y.im, y.re]]
    }
}

pub fn build_admittance(p: &NetworkParams, fault_active: bool) -> Result<NodalAdmittance> {
    let z = p.branch_impedance();
    if !(z.re.is_finite() && z.im.is_finite()) || z.norm() == 0.0 {
        return Err(Error::Topology("grid branch impedance is zero or not finite".into()));
    }
    let fault = if fault_active {
        if !(p.fault_resistance > 0.0) {
            return Err(Error::Topology("fault resistance must be positive".into()));
        }
        Complex64::new(1.0 / p.fault_resistance, 0.0)
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(NodalAdmittance {
        branch: z.inv(),
        fault,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadCurrent {
    pub current: Complex64,
    /// Voltage was below the collapse threshold, so the load behaved as a
    /// constant impedance.
    pub collapsed: bool,
}

/// Current drawn by the constant-power load. Below the collapse voltage the
/// load becomes the impedance it would have at that voltage.
pub fn constant_power_load_current(p: &NetworkParams, v: Complex64) -> LoadCurrent {
    let v_col = p.load_collapse_voltage * p.nominal_voltage;
    if v.norm() >= v_col {
        LoadCurrent {
            current: (p.load / v).conj(),
            collapsed: false,
        }
    } else {
        LoadCurrent {
            current: p.load.conj() * v / (v_col * v_col),
            collapsed: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PccSolution {
    pub v: Complex64,
    pub load_current: Complex64,
    pub iterations: usize,
    /// The fixed point did not converge and the load was linearized.
    pub fallback: bool,
    pub load_collapsed: bool,
    /// KCL residual at the PCC [A].
    pub residual: f64,
}

/// Solve PCC KCL `y_b (E - v) + Σ i_inj = i_load(v) + y_f v` by damped
/// fixed-point iteration, warm-started at `guess`.
pub fn solve_pcc_voltage(
    p: &NetworkParams,
    y: &NodalAdmittance,
    injections: &[Complex64],
    guess: Complex64,
) -> Result<PccSolution> {
    for z in injections {
        ensure_finite("injected current", &[z.re, z.im])?;
    }
    let e = Complex64::new(p.grid_voltage, 0.0);
    let inj: Complex64 = injections.iter().sum();
    let y_tot = y.total();
    let drive = y.branch * e + inj;
    let tol = p.solver.tolerance * p.nominal_voltage;
    let alpha = p.solver.damping;
    let mut v = if guess.norm().is_finite() && guess.norm() > 0.0 {
        guess
    } else {
        e
    };
    let mut converged = false;
    let mut iterations = 0;
    for k in 1..=p.solver.max_iterations {
        iterations = k;
        let il = constant_power_load_current(p, v).current;
        let target = (drive - il) / y_tot;
        let next = v + (target - v) * alpha;
        let step = (next - v).norm();
        v = next;
        if step < tol {
            converged = true;
            break;
        }
    }
    let mut fallback = false;
    if !converged {
        let v_col = p.load_collapse_voltage * p.nominal_voltage;
        let mag = v.norm().max(v_col);
        let y_load = p.load.conj() / (mag * mag);
        v = drive / (y_tot + y_load);
        fallback = true;
    }
    let load = if fallback {
        let v_col = p.load_collapse_voltage * p.nominal_voltage;
        let mag = v.norm().max(v_col);
        LoadCurrent {
            current: p.load.conj() * v / (mag * mag),
            collapsed: v.norm() < v_col,
        }
    } else {
        constant_power_load_current(p, v)
    };
    let residual = (drive - y_tot * v - load.current).norm();
    Ok(PccSolution {
        v,
        load_current: load.current,
        iterations,
        fallback,
        load_collapsed: load.collapsed,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    ThreePhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FaultSpec {
    pub enabled: bool,
    /// Fault inception [s].
    pub t_start: f64,
    /// Fault clearing [s].
    pub t_end: f64,
    pub kind: FaultKind,
}

impl Default for FaultSpec {
    fn default() -> Self {
        FaultSpec {
            enabled: true,
            t_start: 0.8,
            t_end: 0.82,
            kind: FaultKind::ThreePhase,
        }
    }
}

impl FaultSpec {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_start >= 0.0) {
            return Err(Error::config(format!("{prefix}.t_start"), "must be non-negative"));
        }
        if !(self.t_end.is_finite() && self.t_end > self.t_start) {
            return Err(Error::config(format!("{prefix}.t_end"), "must be after t_start"));
        }
        Ok(())
    }
}

/// Fault active on the half-open interval `[t_start, t_end)`.
pub fn fault_state(t: f64, f: &FaultSpec) -> bool {
    f.enabled && t >= f.t_start && t < f.t_end
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_branch_has_scr_five() {
        let p = NetworkParams::default();
        assert_abs_diff_eq!(p.short_circuit_ratio(), 5.0, epsilon = 1e-4);
        let z = p.branch_impedance();
        assert_abs_diff_eq!(z.im / z.re, 10.0, epsilon = 1e-3);
    }

    #[test]
    fn fault_window_half_open() {
        let f = FaultSpec::default();
        assert!(!fault_state(0.7999, &f));
        assert!(fault_state(0.8, &f));
        assert!(fault_state(0.8199, &f));
        assert!(!fault_state(0.82, &f));
        let off = FaultSpec {
            enabled: false,
            ..f
        };
        assert!(!fault_state(0.81, &off));
    }

    #[test]
    fn zero_branch_is_a_topology_error() {
        let p = NetworkParams {
            grid_impedance: Complex64::new(0.0, 0.0),
            line_length: 0.0,
            ..NetworkParams::default()
        };
        assert!(matches!(build_admittance(&p, false), Err(Error::Topology(_))));
    }

    #[test]
    fn load_collapse_is_continuous() {
        let p = NetworkParams::default();
        let v_col = p.load_collapse_voltage * p.nominal_voltage;
        let above = constant_power_load_current(&p, Complex64::new(v_col * (1.0 + 1e-12), 0.0));
        let below = constant_power_load_current(&p, Complex64::new(v_col * (1.0 - 1e-12), 0.0));
        assert!(!above.collapsed && below.collapsed);
        assert!((above.current - below.current).norm() < 1e-6);
    }

    #[test]
    fn solution_satisfies_kcl() {
        let p = NetworkParams::default();
        let y = build_admittance(&p, false).unwrap();
        let s = solve_pcc_voltage(&p, &y, &[Complex64::new(30.0, -200.0)], Complex64::new(0.0, 0.0)).unwrap();
        assert!(!s.fallback);
        assert!(s.residual < 1e-6 * p.base_current(), "{}", s.residual);
    }

    #[test]
    fn transformer_referral() {
        let p = NetworkParams::default();
        let t = Transformer::new(&p, 1.5e6 / 0.85);
        assert_abs_diff_eq!(t.ratio, 25e3 / 6e3, epsilon = 1e-12);
        assert_abs_diff_eq!(t.impedance.im, 0.06 * 36e6 / (1.5e6 / 0.85), epsilon = 1e-9);
        let inj = t.pcc_injection(Dq::new(10.0, 0.0));
        assert!(inj.d < 0.0);
    }
}
