//! Park and Clarke style transforms between phase quantities and a rotating
//! dq0 frame.
//!
//! The transform is power invariant:
//!
//! ```text
//!            | sin θ   sin(θ - 2π/3)   sin(θ + 2π/3) |
//! T(θ) = k · | cos θ   cos(θ - 2π/3)   cos(θ + 2π/3) |,   k = sqrt(2/3)
//!            | 1/√2    1/√2            1/√2          |
//! ```
//!
//! so `T⁻¹ = Tᵀ`. For a frame rotating at `ω`, `d/dt x_dq = T d/dt x_abc + ω J x_dq`
//! with `J = [[0, 1], [-1, 0]]`. Writing `x = d + j q`, `J x = -j x`, which
//! gives the usual `v = (r + jωl) i` impedance convention for phasors.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Result};

const TWO_PI_3: f64 = 2.0 * PI / 3.0;

fn scale() -> f64 {
    (2.0_f64 / 3.0).sqrt()
}

/// Wrap an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// An electrical angle kept in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct Angle(f64);

impl Angle {
    pub fn new(theta: f64) -> Result<Self> {
        ensure_finite("angle", &[theta])?;
        Ok(Angle(wrap_angle(theta)))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Advance by `delta` radians and wrap.
    pub fn advance(self, delta: f64) -> Self {
        Angle(wrap_angle(self.0 + delta))
    }

    /// Signed difference `self - other` folded into `(-π, π]`.
    pub fn difference(self, other: Angle) -> f64 {
        let d = wrap_angle(self.0 - other.0);
        if d > PI {
            d - TAU
        } else {
            d
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ThreePhase {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ThreePhase {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        ThreePhase { a, b, c }
    }

    /// Balanced set `x_k = amplitude * sin(angle - k 2π/3)`.
    pub fn balanced(amplitude: f64, angle: f64) -> Self {
        ThreePhase {
            a: amplitude * angle.sin(),
            b: amplitude * (angle - TWO_PI_3).sin(),
            c: amplitude * (angle + TWO_PI_3).sin(),
        }
    }

    fn as_array(self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DqZero {
    pub d: f64,
    pub q: f64,
    pub zero: f64,
}

impl DqZero {
    pub fn dq(self) -> Dq {
        Dq::new(self.d, self.q)
    }
}

/// A two-axis vector in a rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Dq {
    pub d: f64,
    pub q: f64,
}

impl Dq {
    pub const ZERO: Dq = Dq { d: 0.0, q: 0.0 };

    pub const fn new(d: f64, q: f64) -> Self {
        Dq { d, q }
    }

    pub fn norm(self) -> f64 {
        self.d.hypot(self.q)
    }

    pub fn dot(self, other: Dq) -> f64 {
        self.d * other.d + self.q * other.q
    }

    /// `J x = (q, -d)`.
    pub fn j(self) -> Dq {
        SkewJ::apply(self)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.d, self.q)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Dq::new(z.re, z.im)
    }

    /// Re-express a vector in a frame leading the current one by `delta`.
    pub fn shift_frame(self, delta: f64) -> Dq {
        Dq::from_complex(self.to_complex() * Complex64::from_polar(1.0, -delta))
    }

    pub fn is_finite(self) -> bool {
        self.d.is_finite() && self.q.is_finite()
    }
}

impl Add for Dq {
    type Output = Dq;
    fn add(self, rhs: Dq) -> Dq {
        Dq::new(self.d + rhs.d, self.q + rhs.q)
    }
}

impl AddAssign for Dq {
    fn add_assign(&mut self, rhs: Dq) {
        self.d += rhs.d;
        self.q += rhs.q;
    }
}

impl Sub for Dq {
    type Output = Dq;
    fn sub(self, rhs: Dq) -> Dq {
        Dq::new(self.d - rhs.d, self.q - rhs.q)
    }
}

impl SubAssign for Dq {
    fn sub_assign(&mut self, rhs: Dq) {
        self.d -= rhs.d;
        self.q -= rhs.q;
    }
}

impl Neg for Dq {
    type Output = Dq;
    fn neg(self) -> Dq {
        Dq::new(-self.d, -self.q)
    }
}

impl Mul<f64> for Dq {
    type Output = Dq;
    fn mul(self, k: f64) -> Dq {
        Dq::new(self.d * k, self.q * k)
    }
}

impl Mul<Dq> for f64 {
    type Output = Dq;
    fn mul(self, v: Dq) -> Dq {
        v * self
    }
}

impl From<Complex64> for Dq {
    fn from(z: Complex64) -> Self {
        Dq::from_complex(z)
    }
}

impl From<Dq> for Complex64 {
    fn from(v: Dq) -> Self {
        v.to_complex()
    }
}

/// The skew-symmetric rotation `J = [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, Copy)]
pub struct SkewJ;

impl SkewJ {
    pub const MATRIX: [[f64; 2]; 2] = [[0.0, 1.0], [-1.0, 0.0]];

    pub fn apply(v: Dq) -> Dq {
        Dq::new(v.q, -v.d)
    }
}

fn rows(theta: f64) -> [[f64; 3]; 3] {
    let k = scale();
    let z = k * std::f64::consts::FRAC_1_SQRT_2;
    [
        [
            k * theta.sin(),
            k * (theta - TWO_PI_3).sin(),
            k * (theta + TWO_PI_3).sin(),
        ],
        [
            k * theta.cos(),
            k * (theta - TWO_PI_3).cos(),
            k * (theta + TWO_PI_3).cos(),
        ],
        [z, z, z],
    ]
}

/// `x_dq0 = T(θ) x_abc`.
pub fn park(theta: f64, x: ThreePhase) -> Result<DqZero> {
    ensure_finite("park input", &[theta, x.a, x.b, x.c])?;
    let t = rows(theta);
    let v = x.as_array();
    let row = |r: [f64; 3]| r[0] * v[0] + r[1] * v[1] + r[2] * v[2];
    Ok(DqZero {
        d: row(t[0]),
        q: row(t[1]),
        zero: row(t[2]),
    })
}

/// `x_abc = T(θ)ᵀ x_dq0`.
pub fn inverse_park(theta: f64, x: DqZero) -> Result<ThreePhase> {
    ensure_finite("inverse park input", &[theta, x.d, x.q, x.zero])?;
    let t = rows(theta);
    let col = |i: usize| t[0][i] * x.d + t[1][i] * x.q + t[2][i] * x.zero;
    Ok(ThreePhase {
        a: col(0),
        b: col(1),
        c: col(2),
    })
}

/// The speed-voltage term `ω J v` that appears when differentiating in a
/// frame rotating at `ω`.
pub fn rotate_dq(omega: f64, v: Dq) -> Dq {
    SkewJ::apply(v) * omega
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn balanced_set_maps_to_d_axis() {
        let theta = 0.7;
        let x = ThreePhase::balanced(1.0, theta);
        let dq = park(theta, x).unwrap();
        assert_abs_diff_eq!(dq.d, 1.224744871391589, epsilon = 1e-12);
        assert_abs_diff_eq!(dq.q, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dq.zero, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_sequence_only() {
        let dq = park(0.3, ThreePhase::new(1.0, 1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(dq.d, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dq.q, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dq.zero, 3.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn rejects_nan() {
        assert!(park(f64::NAN, ThreePhase::default()).is_err());
        assert!(inverse_park(0.0, DqZero { d: f64::INFINITY, q: 0.0, zero: 0.0 }).is_err());
    }

    #[test]
    fn rotation_is_j() {
        let r = rotate_dq(2.0, Dq::new(1.0, 0.0));
        assert_eq!(r, Dq::new(0.0, -2.0));
        // J x = -j x under the complex mapping
        let v = Dq::new(0.3, -1.1);
        let lhs = v.j().to_complex();
        let rhs = -Complex64::i() * v.to_complex();
        assert_abs_diff_eq!(lhs.re, rhs.re, epsilon = 1e-15);
        assert_abs_diff_eq!(lhs.im, rhs.im, epsilon = 1e-15);
    }

    #[test]
    fn angle_wraps() {
        assert_abs_diff_eq!(Angle::new(-0.5).unwrap().radians(), TAU - 0.5, epsilon = 1e-12);
        assert_eq!(Angle::new(-1e-18).unwrap().radians(), 0.0);
        let a = Angle::new(0.1).unwrap();
        let b = Angle::new(TAU - 0.1).unwrap();
        assert_abs_diff_eq!(a.difference(b), 0.2, epsilon = 1e-12);
        assert!(Angle::new(f64::NAN).is_err());
    }

    #[test]
    fn shift_frame_matches_park_at_offset_angle() {
        let x = ThreePhase::balanced(2.0, 1.3);
        let base = park(0.2, x).unwrap().dq();
        let shifted = park(0.2 + 0.4, x).unwrap().dq();
        let via = base.shift_frame(0.4);
        assert_abs_diff_eq!(via.d, shifted.d, epsilon = 1e-12);
        assert_abs_diff_eq!(via.q, shifted.q, epsilon = 1e-12);
    }
}
