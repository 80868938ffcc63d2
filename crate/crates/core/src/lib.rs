//! Averaged-model simulation of a fixed-speed squirrel-cage wind generator
//! sharing a weak-grid point of common coupling with a STATCOM, for fault
//! ride-through studies.
//!
//! Quantities are SI unless a name ends in `_pu`. All dq quantities use the
//! power-invariant Park transform in [`frames`], so `|v_dq|` equals the
//! line-to-line rms voltage and `p = v_d i_d + v_q i_q`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod control;
pub mod error;
pub mod frames;
pub mod network;
pub mod report;
pub mod scig;
pub mod sim;
pub mod statcom;
pub mod trace;
pub mod turbine;

pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use frames::{Angle, Dq, DqZero, ThreePhase};
