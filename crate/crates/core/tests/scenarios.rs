use num_complex::Complex64;
use statcom_frt::network::{build_admittance, solve_pcc_voltage};
use statcom_frt::sim::system::ix;
use statcom_frt::sim::{run_scenario, InitMode, Solver, WindProfile};
use statcom_frt::ScenarioConfig;

fn quiet(t_end: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    c.fault.enabled = false;
    c.simulation.t_end = t_end;
    c
}

#[test]
fn calm_wind_without_statcom_is_load_flow() {
    let mut c = quiet(0.3);
    c.wind = WindProfile::constant(0.0);
    c.statcom.enabled = false;
    let r = run_scenario(&c).unwrap();
    assert!(r.divergence.is_none());
    let last = r.series.samples.last().unwrap();
    // oracle: PCC with the magnetizing branch only is close to the bare load flow
    let n = &c.network;
    let y = build_admittance(n, false).unwrap();
    let bare = solve_pcc_voltage(n, &y, &[], Complex64::new(n.grid_voltage, 0.0)).unwrap();
    let bare_pu = bare.v.norm() / n.nominal_voltage;
    assert!((last.v_pcc - bare_pu).abs() < 0.01, "{} vs {}", last.v_pcc, bare_pu);
    assert!((last.p_grid - 80.0).abs() < 0.5, "{}", last.p_grid);
    assert!(last.p_wecs.abs() < 0.05);
    let first = r.series.samples.first().unwrap();
    assert!((first.v_pcc - last.v_pcc).abs() < 1e-6);
}

#[test]
fn steady_initialization_is_stationary() {
    let mut c = quiet(0.2);
    c.wind = WindProfile::constant(9.0);
    let r = run_scenario(&c).unwrap();
    let s = &r.series.samples;
    let (a, b) = (s.first().unwrap(), s.last().unwrap());
    assert!((a.v_pcc - b.v_pcc).abs() < 1e-5, "{} {}", a.v_pcc, b.v_pcc);
    assert!((a.omega_r - b.omega_r).abs() < 1e-6);
    assert!((a.v_dc - b.v_dc).abs() < 1.0);
    assert!((a.t_e - a.t_m).abs() < 1e-3 * a.t_m.abs());
    assert!((a.v_pcc - 1.0).abs() < 1e-6, "STATCOM should hold the reference");
}

#[test]
fn fault_events_on_step_boundaries() {
    let mut c = ScenarioConfig::default();
    c.simulation.t_end = 0.9;
    c.fault.t_start = 0.80004;
    c.fault.t_end = 0.82003;
    let r = run_scenario(&c).unwrap();
    let (on, off) = r.realized_fault.unwrap();
    assert!((on - c.fault.t_start).abs() < c.simulation.dt);
    assert!((off - c.fault.t_end).abs() < c.simulation.dt);
    let faulted: Vec<f64> = r.series.samples.iter().filter(|s| s.fault).map(|s| s.time).collect();
    assert!(faulted.iter().all(|&t| t >= on - 1e-12 && t < off));
    assert!(!faulted.is_empty());
}

#[test]
fn rk4_and_small_step_euler_agree() {
    let mut c = quiet(0.4);
    c.wind = WindProfile::constant(10.0);
    c.statcom.enabled = false;
    c.simulation.record_decimation = 100;
    let rk = run_scenario(&c).unwrap();
    let mut e = c.clone();
    e.simulation.solver = Solver::Euler;
    e.simulation.dt = 1e-5;
    e.simulation.record_decimation = 1000;
    let eu = run_scenario(&e).unwrap();
    let a = rk.series.samples.last().unwrap();
    let b = eu.series.samples.last().unwrap();
    assert!((a.v_pcc - b.v_pcc).abs() < 1e-3 * a.v_pcc);
    assert!((a.omega_r - b.omega_r).abs() < 1e-3 * a.omega_r);
    assert!((a.p_wecs - b.p_wecs).abs() < 1e-3 * a.p_wecs.abs().max(0.1));
}

#[test]
fn cold_start_settles() {
    let mut c = quiet(1.0);
    c.simulation.init = InitMode::Cold;
    c.wind = WindProfile::constant(3.0);
    let r = run_scenario(&c).unwrap();
    assert!(r.divergence.is_none(), "{:?}", r.divergence);
    let last = r.series.samples.last().unwrap();
    assert!((last.v_pcc - 1.0).abs() < 0.05, "{}", last.v_pcc);
}

#[test]
fn divergence_truncates_series() {
    let mut c = ScenarioConfig::default();
    c.simulation.t_end = 1.0;
    // a ceiling just above nominal trips on the post-fault swing
    c.simulation.divergence_ceiling = 1.01;
    let r = run_scenario(&c).unwrap();
    let d = r.divergence.expect("should trip");
    assert!(r.series.truncated);
    assert!(r.series.end_time().unwrap() <= d.time);
    assert!(d.time > 0.8);
}

#[test]
fn no_limit_violations_in_fault_scenario() {
    let r = run_scenario(&ScenarioConfig::default()).unwrap();
    assert_eq!(r.audit.limit_violations, 0);
    assert_eq!(r.audit.limit_checks, r.audit.steps + 1);
    assert!(r.audit.current_limited_steps > 0, "the fault should drive the loops into their limits");
    assert!(r.final_state[ix::V_DC] > 45e3);
}

#[test]
fn statcom_off_keeps_its_states_frozen() {
    let mut c = quiet(0.1);
    c.statcom.enabled = false;
    let r = run_scenario(&c).unwrap();
    assert_eq!(r.final_state[ix::I_T], 0.0);
    assert_eq!(r.final_state[ix::V_DC], c.control.v_dcref);
    assert!(r.series.samples.iter().all(|s| s.q_statcom == 0.0));
}
