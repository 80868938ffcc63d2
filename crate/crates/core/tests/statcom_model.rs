use proptest::prelude::*;
use statcom_frt::control::{current_loop, PiState};
use statcom_frt::frames::Dq;
use statcom_frt::statcom::{converter_voltage, dc_link_derivative, filter_current_derivative, StatcomParams};
use statcom_frt::control::ControlParams;

fn dq() -> impl Strategy<Value = Dq> {
    (-3e4..3e4f64, -3e4..3e4f64).prop_map(|(d, q)| Dq::new(d, q))
}

fn current() -> impl Strategy<Value = Dq> {
    (-1500.0..1500.0f64, -1500.0..1500.0f64).prop_map(|(d, q)| Dq::new(d, q))
}

proptest! {
    /// v_t·i = r|i|² + l i·di/dt + v·i: the rotating-frame term does no work.
    #[test]
    fn filter_power_balance(i in current(), v_t in dq(), v in dq(), w in 250.0..380.0f64) {
        let p = StatcomParams::default();
        let di = filter_current_derivative(&p, i, v_t, v, w);
        let lhs = v_t.dot(i);
        let rhs = p.r_f * i.dot(i) + p.l_f * i.dot(di) + v.dot(i);
        prop_assert!((lhs - rhs).abs() < 1e-6 * (1.0 + lhs.abs() + v.dot(i).abs()));
    }

    /// C v dv/dt = -p_conv - v²/R
    #[test]
    fn dc_power_balance(v_dc in 20e3..80e3f64, p_conv in -30e6..30e6f64) {
        let p = StatcomParams::default();
        let d = dc_link_derivative(&p, v_dc, p_conv).unwrap();
        let lhs = p.c_dc * v_dc * d;
        prop_assert!((lhs + p_conv + p.dc_loss(v_dc)).abs() < 1e-6 * (1.0 + p_conv.abs()));
    }

    #[test]
    fn modulation_bound_holds(cmd in dq(), v_dc in 0.0..80e3f64) {
        let p = StatcomParams::default();
        let out = converter_voltage(&p, cmd, v_dc);
        prop_assert!(out.v_t.norm() <= p.modulation_limit * v_dc * (1.0 + 1e-12) + 1e-9);
        if !out.saturated {
            prop_assert_eq!(out.v_t, cmd);
        }
    }
}

/// With decoupling feed-forward, a d-axis current step leaves the q axis
/// essentially undisturbed.
#[test]
fn current_loop_decouples_axes() {
    let p = StatcomParams::default();
    let c = ControlParams::default();
    let w = 2.0 * std::f64::consts::PI * 50.0;
    let v = Dq::new(25e3, 0.0);
    let dt = 1e-5;
    let mut i = Dq::ZERO;
    let mut states = [PiState::default(); 2];
    let i_ref = Dq::new(500.0, 0.0);
    let mut max_q: f64 = 0.0;
    for _ in 0..2000 {
        let cmd = current_loop(&c.current_loop, i_ref, i, v, w, p.l_f, &mut states, dt);
        let v_t = converter_voltage(&p, cmd, 50e3).v_t;
        i += filter_current_derivative(&p, i, v_t, v, w) * dt;
        max_q = max_q.max(i.q.abs());
    }
    assert!((i.d - 500.0).abs() < 1.0, "{i:?}");
    assert!(max_q < 0.01 * 500.0, "q-axis disturbance {max_q}");
}
