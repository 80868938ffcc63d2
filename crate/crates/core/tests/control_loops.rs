use std::f64::consts::PI;

use proptest::prelude::*;
use statcom_frt::control::{
    pi_step, ControlInputs, ControlIntegrals, ControlLaw, ControlParams, PiGains, PiState, Pll, PllParams, PllState,
};
use statcom_frt::frames::{Angle, Dq};

const W0: f64 = 2.0 * PI * 50.0;

fn pll() -> Pll {
    Pll {
        params: PllParams::default(),
        omega_nominal: W0,
        v_nominal: 25e3,
    }
}

/// Grid voltage at angle `phi` seen from a frame at `theta`.
fn seen(mag: f64, phi: f64, theta: f64) -> Dq {
    Dq::new(mag * (phi - theta).cos(), mag * (phi - theta).sin())
}

#[test]
fn pll_tracks_phase_jump() {
    let p = pll();
    let dt = 1e-4;
    let mut s = PllState {
        theta: Angle::new(0.0).unwrap(),
        omega_hat: W0,
        integral: 0.0,
        coasting: false,
    };
    for k in 0..5000 {
        let t = k as f64 * dt;
        let phi = W0 * t + if t >= 0.1 { 0.5 } else { 0.0 };
        s = p.step(seen(25e3, phi, s.theta.radians()), &s, dt);
    }
    let phi_end = W0 * 5000.0 * dt + 0.5;
    let err = Angle::new(phi_end).unwrap().difference(s.theta);
    assert!(err.abs() < 1e-3, "residual phase error {err}");
}

#[test]
fn pll_coasts_through_voltage_loss() {
    let p = pll();
    let dt = 1e-4;
    let mut s = PllState {
        theta: Angle::new(0.0).unwrap(),
        omega_hat: W0,
        integral: 0.0,
        coasting: false,
    };
    let mut coasted = false;
    for k in 0..3000 {
        let t = k as f64 * dt;
        let mag = if (0.1..0.2).contains(&t) { 0.0 } else { 25e3 };
        s = p.step(seen(mag, W0 * t, s.theta.radians()), &s, dt);
        coasted |= s.coasting;
        if (0.1..0.2).contains(&t) {
            assert!((s.omega_hat - W0).abs() < 1e-9);
        }
        if (0.2..0.201).contains(&t) {
            let err = Angle::new(W0 * (t + dt)).unwrap().difference(s.theta);
            assert!(err.abs() < 0.05, "phase error after recovery {err}");
        }
    }
    assert!(coasted);
}

#[test]
fn windup_recovery_is_bounded() {
    // Saturate for a long time, then reverse the error: the output must
    // leave the clamp almost immediately.
    let g = PiGains {
        k_p: 1.0,
        k_i: 50.0,
        out_min: -10.0,
        out_max: 10.0,
    };
    let mut s = PiState::default();
    for _ in 0..100_000 {
        pi_step(&g, &mut s, 100.0, 1e-4);
    }
    let mut steps = 0;
    while pi_step(&g, &mut s, -1.0, 1e-4) >= 10.0 {
        steps += 1;
        assert!(steps < 100, "integrator wound up");
    }
}

fn law() -> ControlLaw {
    ControlLaw {
        params: ControlParams::default(),
        i_max: 1000.0,
        l_f: 8e-3,
    }
}

proptest! {
    #[test]
    fn references_respect_current_limit(
        v_meas in 0.0..1.5f64,
        v_dc in 20e3..80e3f64,
        ints in prop::array::uniform4(-1.0..1.0f64),
        itd in -1500.0..1500.0f64,
        itq in -1500.0..1500.0f64,
    ) {
        let c = law();
        let out = c.evaluate(
            &ControlInputs { v_pcc: Dq::new(25e3 * v_meas, 0.0), v_meas, v_dc, i_t: Dq::new(itd, itq), omega: W0 },
            &ControlIntegrals { dc: ints[0] * 100.0, ac: ints[1] * 0.01, current_d: ints[2] * 100.0, current_q: ints[3] * 100.0 },
        );
        let r = out.refs;
        prop_assert!(r.i_dref.hypot(r.i_qref) <= 1000.0 * (1.0 + 1e-12));
        prop_assert!(!out.limit_violation);
    }

    #[test]
    fn reactive_current_has_priority(v_meas in 0.0..0.9f64) {
        // deep undervoltage: the ac loop takes the whole budget
        let c = law();
        let out = c.evaluate(
            &ControlInputs { v_pcc: Dq::new(25e3 * v_meas, 0.0), v_meas, v_dc: 40e3, i_t: Dq::ZERO, omega: W0 },
            &ControlIntegrals { ac: 0.01, ..ControlIntegrals::default() },
        );
        prop_assert!((out.refs.i_qref - 1000.0).abs() < 1e-9);
        prop_assert!(out.refs.i_dref.abs() < 1e-6);
    }
}

#[test]
fn capacitive_reference_for_low_voltage() {
    let c = law();
    let out = c.evaluate(
        &ControlInputs {
            v_pcc: Dq::new(24e3, 0.0),
            v_meas: 0.96,
            v_dc: 50e3,
            i_t: Dq::ZERO,
            omega: W0,
        },
        &ControlIntegrals::default(),
    );
    assert!(out.refs.i_qref > 0.0);
    // filter current reference is -i_qref on q: injecting reactive power
    assert!(out.rates.current_q < 0.0);
}
