use num_complex::Complex64;
use proptest::prelude::*;
use statcom_frt::network::{build_admittance, constant_power_load_current, solve_pcc_voltage, NetworkParams};

fn kcl_residual(p: &NetworkParams, fault: bool, inj: &[Complex64], v: Complex64) -> f64 {
    let y = build_admittance(p, fault).unwrap();
    let e = Complex64::new(p.grid_voltage, 0.0);
    let il = constant_power_load_current(p, v).current;
    (y.branch * (e - v) + inj.iter().sum::<Complex64>() - il - y.fault * v).norm()
}

proptest! {
    #[test]
    fn solution_satisfies_kcl(d in -1500.0..1500.0f64, q in -1500.0..1500.0f64, fault in any::<bool>()) {
        let p = NetworkParams::default();
        let y = build_admittance(&p, fault).unwrap();
        let inj = [Complex64::new(d, q)];
        let s = solve_pcc_voltage(&p, &y, &inj, Complex64::new(p.grid_voltage, 0.0)).unwrap();
        prop_assert!(!s.fallback);
        prop_assert!(kcl_residual(&p, fault, &inj, s.v) < 1e-6 * p.base_current());
    }
}

#[test]
fn zero_current_device_is_absent() {
    let p = NetworkParams::default();
    let y = build_admittance(&p, false).unwrap();
    let g = Complex64::new(p.grid_voltage, 0.0);
    let a = solve_pcc_voltage(&p, &y, &[], g).unwrap();
    let b = solve_pcc_voltage(&p, &y, &[Complex64::new(0.0, 0.0)], g).unwrap();
    assert_eq!(a.v, b.v);
}

#[test]
fn pure_source_without_load_or_line() {
    let p = NetworkParams {
        load: Complex64::new(0.0, 0.0),
        line_length: 0.0,
        ..NetworkParams::default()
    };
    let y = build_admittance(&p, false).unwrap();
    assert!((y.branch - p.grid_impedance.inv()).norm() < 1e-15);
    let s = solve_pcc_voltage(&p, &y, &[], Complex64::new(1.0, 0.0)).unwrap();
    assert!((s.v.re - p.grid_voltage).abs() < 1e-3);
}

#[test]
fn fault_depresses_voltage() {
    let p = NetworkParams::default();
    let g = Complex64::new(p.grid_voltage, 0.0);
    let normal = solve_pcc_voltage(&p, &build_admittance(&p, false).unwrap(), &[], g).unwrap();
    let faulted = solve_pcc_voltage(&p, &build_admittance(&p, true).unwrap(), &[], normal.v).unwrap();
    let pu = |v: Complex64| v.norm() / p.nominal_voltage;
    assert!(pu(normal.v) > 0.95 && pu(normal.v) < 1.05, "{}", pu(normal.v));
    assert!(pu(faulted.v) > 0.15 && pu(faulted.v) < 0.4, "{}", pu(faulted.v));
    assert!(faulted.load_collapsed);
}

#[test]
fn non_convergence_falls_back_to_impedance_load() {
    let mut p = NetworkParams::default();
    p.solver.max_iterations = 1;
    let y = build_admittance(&p, false).unwrap();
    let s = solve_pcc_voltage(&p, &y, &[], Complex64::new(1.0, 0.0)).unwrap();
    assert!(s.fallback);
    assert!(s.v.norm().is_finite());
}

#[test]
fn rejects_non_finite_injection() {
    let p = NetworkParams::default();
    let y = build_admittance(&p, false).unwrap();
    assert!(solve_pcc_voltage(&p, &y, &[Complex64::new(f64::NAN, 0.0)], Complex64::new(1.0, 0.0)).is_err());
}
