//! The coupled plant: generator, turbine, STATCOM with its controls, PLL and
//! the algebraic PCC network, flattened into one state vector.

use num_complex::Complex64;

use crate::config::ScenarioConfig;
use crate::control::{ControlInputs, ControlIntegrals, ControlLaw, ControlReferences, Pll};
use crate::error::{Error, Result};
use crate::frames::{wrap_angle, Dq};
use crate::network::{build_admittance, solve_pcc_voltage, NetworkParams, NodalAdmittance, Transformer};
use crate::scig::Scig;
use crate::sim::wind::WindProfile;
use crate::sim::InitMode;
use crate::statcom::{converter_voltage, filter_current_derivative, reactive_power, StatcomParams};
use crate::turbine::{TurbineParams, MIN_SHAFT_SPEED};

/// Length of the composite state.
pub const NX: usize = 24;

/// Offsets into the composite state.
pub mod ix {
    /// Stator and rotor fluxes `ψ_ds, ψ_qs, ψ_dr, ψ_qr` in the PLL frame.
    pub const PSI: usize = 0;
    /// Electrical rotor speed.
    pub const OMEGA_R: usize = 4;
    /// STATCOM filter current, d and q.
    pub const I_T: usize = 5;
    pub const V_DC: usize = 7;
    /// PLL angle relative to a frame rotating at nominal frequency.
    pub const DELTA: usize = 8;
    pub const PLL_INT: usize = 9;
    /// Filtered PCC magnitude [p.u.].
    pub const V_MEAS: usize = 10;
    pub const INT_DC: usize = 11;
    pub const INT_AC: usize = 12;
    pub const INT_CD: usize = 13;
    pub const INT_CQ: usize = 14;
    /// Integrated energies, see [`super::PowerFlows`] for order.
    pub const ENERGY: usize = 15;
    pub const N_ENERGY: usize = 9;
}

/// Instantaneous power terms of the global energy balance [W]. Sources are
/// `source` and `airgap`; the rest are sinks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerFlows {
    pub source: f64,
    pub airgap: f64,
    pub line: f64,
    pub load: f64,
    pub fault: f64,
    pub machine_copper: f64,
    pub transformer: f64,
    pub filter: f64,
    pub dc_loss: f64,
}

impl PowerFlows {
    pub fn to_array(self) -> [f64; ix::N_ENERGY] {
        [
            self.source,
            self.airgap,
            self.line,
            self.load,
            self.fault,
            self.machine_copper,
            self.transformer,
            self.filter,
            self.dc_loss,
        ]
    }

    pub fn from_array(a: &[f64]) -> Self {
        PowerFlows {
            source: a[0],
            airgap: a[1],
            line: a[2],
            load: a[3],
            fault: a[4],
            machine_copper: a[5],
            transformer: a[6],
            filter: a[7],
            dc_loss: a[8],
        }
    }
}

/// Algebraic outputs of one right-hand-side evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Signals {
    /// PCC voltage in the nominal synchronous frame.
    pub v_pcc: Complex64,
    /// PCC voltage in the PLL frame.
    pub v_pcc_pll: Dq,
    pub omega_pll: f64,
    pub pll_coasting: bool,
    pub i_s: Dq,
    pub v_s: Dq,
    pub t_e: f64,
    pub t_m: f64,
    pub wind: f64,
    pub startup_torque: bool,
    /// Complex power delivered by the grid branch into the PCC.
    pub s_grid: Complex64,
    pub i_grid: f64,
    /// Complex power delivered by the generator at its terminals.
    pub s_wecs: Complex64,
    pub i_t: Dq,
    pub q_statcom: f64,
    pub refs: ControlReferences,
    pub v_meas: f64,
    pub converter_saturated: bool,
    pub current_limited: bool,
    pub limit_violation: bool,
    pub dc_undervoltage: bool,
    pub load_collapsed: bool,
    pub network_fallback: bool,
    pub network_iterations: usize,
    pub kcl_residual: f64,
    pub power: PowerFlows,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StoredEnergy {
    pub magnetic: f64,
    pub filter: f64,
    pub dc: f64,
}

impl StoredEnergy {
    pub fn total(&self) -> f64 {
        self.magnetic + self.filter + self.dc
    }
}

pub struct System {
    pub machine: Scig,
    pub turbine: TurbineParams,
    pub statcom: StatcomParams,
    pub control: ControlLaw,
    pub pll: Pll,
    pub network: NetworkParams,
    pub transformer: Transformer,
    pub wind: WindProfile,
    pub omega0: f64,
    pub statcom_enabled: bool,
    y_normal: NodalAdmittance,
    y_fault: NodalAdmittance,
    filter_rate: f64,
    v_guess: Complex64,
}

fn rotate(z: Complex64, angle: f64) -> Complex64 {
    z * Complex64::from_polar(1.0, angle)
}

impl System {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let machine = Scig::new(cfg.machine)?;
        let net = cfg.network;
        let transformer = Transformer::new(&net, cfg.machine.rated_va());
        Ok(System {
            control: ControlLaw {
                params: cfg.control,
                i_max: cfg.statcom.i_max,
                l_f: cfg.statcom.l_f,
            },
            pll: Pll {
                params: cfg.control.pll,
                omega_nominal: net.omega(),
                v_nominal: net.nominal_voltage,
            },
            y_normal: build_admittance(&net, false)?,
            y_fault: build_admittance(&net, true)?,
            filter_rate: 2.0 * std::f64::consts::PI * cfg.control.measurement_filter_hz,
            v_guess: Complex64::new(net.grid_voltage, 0.0),
            omega0: net.omega(),
            statcom_enabled: cfg.statcom.enabled,
            machine,
            turbine: cfg.turbine,
            statcom: cfg.statcom,
            network: net,
            transformer,
            wind: cfg.wind.clone(),
        })
    }

    pub fn pll_angle(&self, t: f64, x: &[f64; NX]) -> f64 {
        wrap_angle(self.omega0 * t + x[ix::DELTA])
    }

    pub fn stored_energy(&self, x: &[f64; NX]) -> StoredEnergy {
        let psi = [x[0], x[1], x[2], x[3]];
        let (filter, dc) = if self.statcom_enabled {
            let i_t = Dq::new(x[ix::I_T], x[ix::I_T + 1]);
            (self.statcom.filter_energy(i_t), self.statcom.dc_energy(x[ix::V_DC]))
        } else {
            (0.0, 0.0)
        };
        StoredEnergy {
            magnetic: self.machine.magnetic_energy(&psi),
            filter,
            dc,
        }
    }

    /// Right-hand side of the composite ODE at time `t`.
    pub fn evaluate(&mut self, t: f64, x: &[f64; NX], fault: bool) -> Result<([f64; NX], Signals)> {
        let mut dx = [0.0; NX];
        let mut s = Signals::default();
        let psi = [x[0], x[1], x[2], x[3]];
        let omega_r = x[ix::OMEGA_R];
        let delta = x[ix::DELTA];
        let v_dc = x[ix::V_DC];
        let i_t = if self.statcom_enabled {
            Dq::new(x[ix::I_T], x[ix::I_T + 1])
        } else {
            Dq::ZERO
        };

        let i = self.machine.currents_from_fluxes(&psi);
        let i_s = Dq::new(i[0], i[1]);
        let mut injections = vec![rotate(self.transformer.pcc_injection(i_s).to_complex(), delta)];
        if self.statcom_enabled {
            injections.push(rotate(i_t.to_complex(), delta));
        }
        let y = if fault { self.y_fault } else { self.y_normal };
        let sol = solve_pcc_voltage(&self.network, &y, &injections, self.v_guess)?;
        self.v_guess = sol.v;
        let v = sol.v;
        let v_p = Dq::from_complex(rotate(v, -delta));

        let pll = self.pll.rates(v_p, x[ix::PLL_INT]);
        let omega = pll.omega_hat;
        dx[ix::DELTA] = omega - self.omega0;
        dx[ix::PLL_INT] = pll.integral_rate;

        let v_s = self.transformer.terminal_voltage(v_p, i_s);
        let dpsi = self.machine.flux_derivative(&psi, omega, omega_r, v_s);
        dx[..4].copy_from_slice(&dpsi);
        let t_e = self.machine.electromagnetic_torque(&i);
        let wind = self.wind.at(t);
        let poles = self.machine.params.poles as f64;
        let omega_m = 2.0 * omega_r / poles;
        let t_m = self.turbine.generator_torque(wind, omega_m)?;
        dx[ix::OMEGA_R] = self.machine.rotor_acceleration(t_e, t_m)?;

        let v_pu = v.norm() / self.network.nominal_voltage;
        dx[ix::V_MEAS] = self.filter_rate * (v_pu - x[ix::V_MEAS]);

        let mut filter_loss = 0.0;
        let mut dc_loss = 0.0;
        if self.statcom_enabled {
            let ints = ControlIntegrals {
                dc: x[ix::INT_DC],
                ac: x[ix::INT_AC],
                current_d: x[ix::INT_CD],
                current_q: x[ix::INT_CQ],
            };
            let out = self.control.evaluate(
                &ControlInputs {
                    v_pcc: v_p,
                    v_meas: x[ix::V_MEAS],
                    v_dc,
                    i_t,
                    omega,
                },
                &ints,
            );
            let blocked = v_dc <= self.statcom.v_dc_min;
            let conv = converter_voltage(&self.statcom, out.refs.v_cmd, v_dc);
            let v_t = if blocked { Dq::ZERO } else { conv.v_t };
            let di = filter_current_derivative(&self.statcom, i_t, v_t, v_p, omega);
            dx[ix::I_T] = di.d;
            dx[ix::I_T + 1] = di.q;
            let p_conv = v_t.dot(i_t);
            dc_loss = self.statcom.dc_loss(v_dc);
            dx[ix::V_DC] = (-p_conv - dc_loss) / (self.statcom.c_dc * v_dc.max(self.statcom.v_dc_min.max(1.0)));
            dx[ix::INT_DC] = out.rates.dc;
            dx[ix::INT_AC] = out.rates.ac;
            dx[ix::INT_CD] = out.rates.current_d;
            dx[ix::INT_CQ] = out.rates.current_q;
            filter_loss = self.statcom.r_f * i_t.dot(i_t);
            s.refs = out.refs;
            s.converter_saturated = conv.saturated;
            s.current_limited = out.ac_saturated || out.dc_saturated || out.current_saturated;
            s.limit_violation = out.limit_violation;
            s.dc_undervoltage = blocked;
            s.q_statcom = reactive_power(v_p, i_t);
        }

        let e = Complex64::new(self.network.grid_voltage, 0.0);
        let i_g = y.branch * (e - v);
        let s_grid = v * i_g.conj();
        let i_s_g = Complex64::from(i_s);
        let power = PowerFlows {
            source: (e * i_g.conj()).re,
            airgap: -t_e * omega_m,
            line: self.network.branch_impedance().re * i_g.norm_sqr(),
            load: (v * sol.load_current.conj()).re,
            fault: y.fault.re * v.norm_sqr(),
            machine_copper: self.machine.copper_loss(&i),
            transformer: self.transformer.loss(i_s),
            filter: filter_loss,
            dc_loss,
        };
        dx[ix::ENERGY..ix::ENERGY + ix::N_ENERGY].copy_from_slice(&power.to_array());

        s.v_pcc = v;
        s.v_pcc_pll = v_p;
        s.omega_pll = omega;
        s.pll_coasting = pll.coasting;
        s.i_s = i_s;
        s.v_s = v_s;
        s.t_e = t_e;
        s.t_m = t_m;
        s.wind = wind;
        s.startup_torque = omega_m / self.turbine.gear_ratio <= MIN_SHAFT_SPEED;
        s.s_grid = s_grid;
        s.i_grid = i_g.norm();
        s.s_wecs = v_s.to_complex() * (-i_s_g).conj();
        s.i_t = i_t;
        s.v_meas = x[ix::V_MEAS];
        s.load_collapsed = sol.load_collapsed;
        s.network_fallback = sol.fallback;
        s.network_iterations = sol.iterations;
        s.kcl_residual = sol.residual;
        s.power = power;
        Ok((dx, s))
    }

    /// Initial state for the chosen mode at time `t0`.
    pub fn initial_state(&mut self, mode: InitMode, t0: f64) -> Result<[f64; NX]> {
        match mode {
            InitMode::Steady => self.steady_state(t0),
            InitMode::Cold => Ok(self.cold_state()),
        }
    }

    /// De-energized machine at synchronous speed, PLL unsynchronized.
    pub fn cold_state(&mut self) -> [f64; NX] {
        let mut x = [0.0; NX];
        x[ix::OMEGA_R] = self.omega0;
        x[ix::V_DC] = self.control.params.v_dcref;
        self.v_guess = Complex64::new(self.network.grid_voltage, 0.0);
        x
    }

    /// Machine fluxes (nominal frame) for a given PCC voltage and speed.
    fn machine_fluxes(&self, v: Complex64, omega_r: f64) -> Result<[f64; 4]> {
        let v_src = Dq::from_complex(v / self.transformer.ratio);
        self.machine
            .steady_state_fluxes(v_src, self.transformer.impedance, self.omega0, omega_r)
    }

    /// PCC voltage and machine fluxes with the STATCOM drawing `i_local`
    /// (expressed relative to the PCC voltage angle).
    fn coupled_point(&self, omega_r: f64, i_local: Complex64) -> Result<(Complex64, [f64; 4])> {
        let y = self.y_normal;
        let mut v = Complex64::new(self.network.grid_voltage, 0.0);
        let tol = 1e-9 * self.network.nominal_voltage;
        for _ in 0..500 {
            let psi = self.machine_fluxes(v, omega_r)?;
            let i = self.machine.currents_from_fluxes(&psi);
            let inj = self.transformer.pcc_injection(Dq::new(i[0], i[1])).to_complex();
            let i_t = rotate(i_local, v.arg());
            let sol = solve_pcc_voltage(&self.network, &y, &[inj, i_t], v)?;
            let next = v + (sol.v - v) * 0.7;
            if (next - v).norm() < tol {
                return Ok((next, self.machine_fluxes(next, omega_r)?));
            }
            v = next;
        }
        Err(Error::NoOperatingPoint("network/machine fixed point did not converge".into()))
    }

    fn torque_mismatch(&self, t0: f64, omega_r: f64, i_local: Complex64) -> Result<(f64, Complex64, [f64; 4])> {
        let (v, psi) = self.coupled_point(omega_r, i_local)?;
        let i = self.machine.currents_from_fluxes(&psi);
        let t_e = self.machine.electromagnetic_torque(&i);
        let omega_m = 2.0 * omega_r / self.machine.params.poles as f64;
        let t_m = self.turbine.generator_torque(self.wind.at(t0), omega_m)?;
        Ok((t_e - t_m, v, psi))
    }

    /// Rotor speed on the stable branch balancing turbine and machine torque.
    fn balance_speed(&self, t0: f64, i_local: Complex64) -> Result<(f64, Complex64, [f64; 4])> {
        let w0 = self.omega0;
        let at_sync = self.torque_mismatch(t0, w0, i_local)?;
        if at_sync.0 <= 0.0 {
            return Ok((w0, at_sync.1, at_sync.2));
        }
        let mut lo = w0;
        let mut hi = None;
        for k in 1..=200 {
            let w = w0 * (1.0 + 2.5e-4 * k as f64);
            if self.torque_mismatch(t0, w, i_local)?.0 < 0.0 {
                hi = Some(w);
                break;
            }
            lo = w;
        }
        let mut hi = hi.ok_or_else(|| {
            Error::NoOperatingPoint("turbine torque exceeds generator pull-out torque".into())
        })?;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.torque_mismatch(t0, mid, i_local)?.0 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (_, v, psi) = self.torque_mismatch(t0, hi, i_local)?;
        Ok((hi, v, psi))
    }

    /// Analytic steady state: machine at torque balance, network solved,
    /// PLL aligned with the PCC voltage and, if present, the STATCOM holding
    /// the PCC at its reference with the controller integrators preloaded.
    pub fn steady_state(&mut self, t0: f64) -> Result<[f64; NX]> {
        let mut i_local = Complex64::new(0.0, 0.0);
        let (mut omega_r, mut v, mut psi) = self.balance_speed(t0, i_local)?;
        if self.statcom_enabled {
            let vn = self.network.nominal_voltage;
            let v_ref = self.control.params.v_ref;
            let limit = 0.99 * self.statcom.i_max;
            let loss = self.statcom.dc_loss(self.control.params.v_dcref);
            let solve = |sys: &Self, iq: f64| -> Result<(f64, f64, Complex64, [f64; 4], Complex64)> {
                let mut il = Complex64::new(0.0, iq);
                let mut out = sys.balance_speed(t0, il)?;
                for _ in 0..5 {
                    let p_in = loss + sys.statcom.r_f * il.norm_sqr();
                    il = Complex64::new(-p_in / out.1.norm(), iq);
                    out = sys.balance_speed(t0, il)?;
                }
                Ok((out.1.norm() / vn - v_ref, out.0, out.1, out.2, il))
            };
            let (mut a, mut b) = (0.0, -100.0);
            let mut best = solve(self, a)?;
            let mut fa = best.0;
            for _ in 0..30 {
                let fb_full = solve(self, b)?;
                let fb = fb_full.0;
                best = fb_full;
                if fb.abs() < 1e-10 || (fb - fa).abs() < 1e-15 {
                    break;
                }
                let c = (b - (fb * (b - a) / (fb - fa))).clamp(-limit, limit);
                a = b;
                fa = fb;
                b = c;
            }
            omega_r = best.1;
            v = best.2;
            psi = best.3;
            i_local = best.4;
        }

        let delta = v.arg();
        let mut x = [0.0; NX];
        let sr = rotate(Complex64::new(psi[0], psi[1]), -delta);
        let rr = rotate(Complex64::new(psi[2], psi[3]), -delta);
        x[0] = sr.re;
        x[1] = sr.im;
        x[2] = rr.re;
        x[3] = rr.im;
        x[ix::OMEGA_R] = omega_r;
        x[ix::V_DC] = self.control.params.v_dcref;
        x[ix::DELTA] = delta;
        x[ix::V_MEAS] = v.norm() / self.network.nominal_voltage;
        if self.statcom_enabled {
            x[ix::I_T] = i_local.re;
            x[ix::I_T + 1] = i_local.im;
            let p = &self.control.params;
            let preload = |value: f64, k_i: f64| if k_i > 0.0 { value / k_i } else { 0.0 };
            // filter reference is (-i_dref, -i_qref)
            x[ix::INT_DC] = preload(-i_local.re, p.dc_loop.k_i);
            x[ix::INT_AC] = preload(-i_local.im, p.ac_loop.k_i);
            x[ix::INT_CD] = preload(self.statcom.r_f * i_local.re, p.current_loop.k_i);
            x[ix::INT_CQ] = preload(self.statcom.r_f * i_local.im, p.current_loop.k_i);
        }
        self.v_guess = v;
        Ok(x)
    }

    /// Per-unit magnitudes checked against the divergence ceiling.
    pub fn per_unit_magnitudes(&self, x: &[f64; NX], s: &Signals) -> [(&'static str, f64); 6] {
        let psi_base = self.network.transformer.lv_voltage / self.omega0;
        let stator = x[0].hypot(x[1]) / psi_base;
        let rotor = x[2].hypot(x[3]) / psi_base;
        let i_t = x[ix::I_T].hypot(x[ix::I_T + 1]) / self.statcom.i_max;
        [
            ("stator flux", stator),
            ("rotor flux", rotor),
            ("rotor speed", x[ix::OMEGA_R].abs() / self.omega0),
            ("statcom current", if self.statcom_enabled { i_t } else { 0.0 }),
            (
                "dc voltage",
                if self.statcom_enabled { x[ix::V_DC].abs() / self.statcom.v_dc_rated } else { 0.0 },
            ),
            ("pcc voltage", s.v_pcc.norm() / self.network.nominal_voltage),
        ]
    }
}
