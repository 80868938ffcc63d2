use statcom_frt::network::FaultSpec;
use statcom_frt::sim::gridcode::Region;
use statcom_frt::sim::{grid_code_check, FrtEnvelope, TimeSeries, Verdict};

/// 1 ms samples over [0, 2] s with the given voltage during region 2 and
/// region 3 of a fault at 0.8 s.
fn trace(sag: f64, recovery: f64) -> TimeSeries {
    let env = FrtEnvelope::default();
    let t: Vec<f64> = (0..=2000).map(|k| k as f64 * 1e-3).collect();
    let v: Vec<f64> = t
        .iter()
        .map(|&x| {
            let tau = x - 0.8;
            if tau < 0.0 {
                1.0
            } else if tau < env.t_sag {
                sag
            } else {
                recovery
            }
        })
        .collect();
    TimeSeries::from_voltage_trace(&t, &v).unwrap()
}

fn check(ts: &TimeSeries) -> statcom_frt::sim::GridCodeReport {
    grid_code_check(ts, &FrtEnvelope::default(), &FaultSpec::default())
}

#[test]
fn flat_nominal_passes() {
    let r = check(&trace(1.0, 1.0));
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.violations.is_empty());
    assert_eq!(r.checked_samples, 1001);
}

#[test]
fn below_floor_fails_in_sag_region() {
    let r = check(&trace(0.10, 1.0));
    assert_eq!(r.verdict, Verdict::Fail);
    assert_eq!(r.violations.len(), 1);
    let v = &r.violations[0];
    assert_eq!(v.region, Region::Sag);
    assert!((v.t_from - 0.8).abs() < 1e-9);
    assert!((v.worst_margin + 0.05).abs() < 1e-12);
}

#[test]
fn at_floor_is_boundary() {
    let r = check(&trace(0.15, 1.0));
    assert_eq!(r.verdict, Verdict::Boundary);
    assert!(r.passed());
}

#[test]
fn recovery_above_requirement_passes() {
    let r = check(&trace(0.5, 0.85));
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn stalled_recovery_fails_in_region_three() {
    let r = check(&trace(0.5, 0.6));
    assert_eq!(r.verdict, Verdict::Fail);
    assert!(r.violations.iter().all(|v| v.region == Region::Recovery));
}

#[test]
fn truncated_record_fails() {
    let mut ts = trace(1.0, 1.0);
    ts.samples.truncate(900);
    ts.truncated = true;
    let r = check(&ts);
    assert_eq!(r.verdict, Verdict::Fail);
    assert_eq!(r.violations.last().unwrap().region, Region::Incomplete);
}

#[test]
fn no_fault_nothing_to_check() {
    let fault = FaultSpec {
        enabled: false,
        ..FaultSpec::default()
    };
    let r = grid_code_check(&trace(0.0, 0.0), &FrtEnvelope::default(), &fault);
    assert_eq!(r.verdict, Verdict::Pass);
    assert_eq!(r.checked_samples, 0);
}
