//! Wrist force/torque sensor between the robot flange and the board.
//!
//! The sensor reports the sum of every external load on the board, referred to
//! its own origin: the human's grasp force (with its lever arm), the human's
//! wrist torque, and all frame contacts. Payload weight is taken as already
//! compensated.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::Geometry;
use crate::sim::contact::Contact;
use crate::sim::geometry::board_point;
use crate::types::{cross, sub3, Pose4, Vec3, Wrench4};

/// Load applied by the operator: a force at the grasp point plus a pure torque about Y.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HumanLoad {
    /// Force (N), world frame.
    pub force: Vec3,
    /// Pure torque about world Y (N·m).
    pub torque_y: f64,
    /// Grasp point (m), world frame.
    pub point: Vec3,
}

impl HumanLoad {
    pub fn zero_at(point: Vec3) -> Self {
        Self { force: [0.0; 3], torque_y: 0.0, point }
    }
}

/// Additive zero-mean Gaussian measurement noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorNoise {
    pub force_sigma: f64,
    pub torque_sigma: f64,
}

impl SensorNoise {
    pub const OFF: Self = Self { force_sigma: 0.0, torque_sigma: 0.0 };

    pub fn apply<R: Rng + ?Sized>(&self, w: Wrench4, rng: &mut R) -> Wrench4 {
        let mut draw = |s: f64| {
            let n: f64 = rng.sample(StandardNormal);
            s * n
        };
        Wrench4 {
            fx: w.fx + draw(self.force_sigma),
            fy: w.fy + draw(self.force_sigma),
            fz: w.fz + draw(self.force_sigma),
            ty: w.ty + draw(self.torque_sigma),
        }
    }
}

/// World position of the sensor origin.
pub fn sensor_origin(pose: &Pose4, geometry: &Geometry) -> Vec3 {
    board_point(pose, geometry.sensor_offset_board)
}

/// World position of the human grasp point.
pub fn grasp_point(pose: &Pose4, geometry: &Geometry) -> Vec3 {
    board_point(pose, geometry.grasp_offset_board)
}

/// Noise-free coupled wrench projected to (fx, fy, fz, τy).
pub fn ideal_wrench(human: &HumanLoad, contacts: &[Contact], pose: &Pose4, geometry: &Geometry) -> Wrench4 {
    let origin = sensor_origin(pose, geometry);
    let mut force = human.force;
    let mut torque_y = human.torque_y + cross(sub3(human.point, origin), human.force)[1];
    for c in contacts {
        for i in 0..3 {
            force[i] += c.force[i];
        }
        torque_y += cross(sub3(c.point, origin), c.force)[1];
    }
    Wrench4::new(force[0], force[1], force[2], torque_y)
}

/// One sensor reading with noise drawn from `rng`.
pub fn sensor_read<R: Rng + ?Sized>(
    human: &HumanLoad,
    contacts: &[Contact],
    pose: &Pose4,
    geometry: &Geometry,
    noise: &SensorNoise,
    rng: &mut R,
) -> Wrench4 {
    noise.apply(ideal_wrench(human, contacts, pose, geometry), rng)
}
