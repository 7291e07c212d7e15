//! Reduced 4-DoF quantities: translation along X/Y/Z plus rotation about Y.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Number of controlled degrees of freedom.
pub const DOF: usize = 4;

macro_rules! dof4 {
    ($(#[$meta:meta])* $name:ident { $a:ident, $b:ident, $c:ident, $d:ident }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
        pub struct $name {
            pub $a: f64,
            pub $b: f64,
            pub $c: f64,
            pub $d: f64,
        }

        impl $name {
            pub const ZERO: Self = Self { $a: 0.0, $b: 0.0, $c: 0.0, $d: 0.0 };

            pub const fn new($a: f64, $b: f64, $c: f64, $d: f64) -> Self {
                Self { $a, $b, $c, $d }
            }

            pub const fn from_array(v: [f64; DOF]) -> Self {
                Self { $a: v[0], $b: v[1], $c: v[2], $d: v[3] }
            }

            pub const fn to_array(self) -> [f64; DOF] {
                [self.$a, self.$b, self.$c, self.$d]
            }

            pub fn is_finite(&self) -> bool {
                self.to_array().iter().all(|v| v.is_finite())
            }

            /// Applies `f` to each component pair.
            pub fn zip_with(self, other: Self, f: impl Fn(f64, f64) -> f64) -> Self {
                let (a, b) = (self.to_array(), other.to_array());
                Self::from_array(std::array::from_fn(|i| f(a[i], b[i])))
            }

            pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
                Self::from_array(self.to_array().map(f))
            }
        }

        impl Add for $name {
            type Output = Self;
            fn add(self, rhs: Self) -> Self {
                self.zip_with(rhs, |a, b| a + b)
            }
        }

        impl Sub for $name {
            type Output = Self;
            fn sub(self, rhs: Self) -> Self {
                self.zip_with(rhs, |a, b| a - b)
            }
        }

        impl Mul<f64> for $name {
            type Output = Self;
            fn mul(self, rhs: f64) -> Self {
                self.map(|a| a * rhs)
            }
        }

        impl From<[f64; DOF]> for $name {
            fn from(v: [f64; DOF]) -> Self {
                Self::from_array(v)
            }
        }
    };
}

dof4!(
    /// Board-center position (m) and rotation about world Y (rad).
    Pose4 { x, y, z, theta_y }
);
dof4!(
    /// Linear velocity (m/s) and angular rate about Y (rad/s).
    Twist4 { vx, vy, vz, wy }
);
dof4!(
    /// Force (N) and torque about Y (N·m).
    Wrench4 { fx, fy, fz, ty }
);

/// Per-DoF diagonal gains or bounds, ordered x, y, z, θy.
pub type Diag4 = [f64; DOF];

impl Pose4 {
    /// Reinterprets a pose difference as a twist-like rate vector.
    pub fn as_twist(self) -> Twist4 {
        Twist4::from_array(self.to_array())
    }
}

impl Twist4 {
    /// Integrates this twist over `dt` as a pose increment.
    pub fn integrate(self, dt: f64) -> Pose4 {
        Pose4::from_array(self.to_array()) * dt
    }

    /// Clamps translational components to `±v_max` and the angular rate to `±w_max`.
    pub fn clamped(self, v_max: f64, w_max: f64) -> Self {
        Self {
            vx: self.vx.clamp(-v_max, v_max),
            vy: self.vy.clamp(-v_max, v_max),
            vz: self.vz.clamp(-v_max, v_max),
            wy: self.wy.clamp(-w_max, w_max),
        }
    }
}

impl Wrench4 {
    pub fn force_norm(&self) -> f64 {
        (self.fx * self.fx + self.fy * self.fy + self.fz * self.fz).sqrt()
    }

    pub fn torque_abs(&self) -> f64 {
        self.ty.abs()
    }
}

/// Plain 3-vector used for contact geometry and the sensor lever arms.
pub type Vec3 = [f64; 3];

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[cfg(test)]
pub(crate) fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_limits_each_component() {
        let t = Twist4::new(0.5, -0.5, 0.05, 1.0).clamped(0.1, 0.3);
        assert_eq!(t, Twist4::new(0.1, -0.1, 0.05, 0.3));
    }

    #[test]
    fn cross_product_basis() {
        assert_eq!(cross([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), [0.0, 0.0, 1.0]);
    }
}
