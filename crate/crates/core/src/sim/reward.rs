//! Episode status, termination and the sparse reward.

use serde::{Deserialize, Serialize};

use crate::config::{EnvParams, Geometry};
use crate::sim::geometry::is_inserted;
use crate::types::{Pose4, Wrench4};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Running,
    Success,
    ViolationForce,
    ViolationTorque,
    Timeout,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        self != Status::Running
    }

    pub fn is_violation(self) -> bool {
        matches!(self, Status::ViolationForce | Status::ViolationTorque)
    }
}

/// ‖(fx/F_max, fy/F_max, fz/F_max, τy/T_max)‖₂.
pub fn normalized_wrench_norm(f: &Wrench4, params: &EnvParams) -> f64 {
    let (a, b, c) = (f.fx / params.f_max, f.fy / params.f_max, f.fz / params.f_max);
    let d = f.ty / params.t_max;
    (a * a + b * b + c * c + d * d).sqrt()
}

pub fn kappa(status: Status, params: &EnvParams) -> f64 {
    match status {
        Status::Success => params.kappa_success,
        Status::ViolationForce | Status::ViolationTorque => params.kappa_violation,
        Status::Running | Status::Timeout => 0.0,
    }
}

/// `ω1·κ − ω2·‖f_meas‖/f_max`.
pub fn reward(status: Status, f_meas: &Wrench4, params: &EnvParams) -> f64 {
    params.omega1 * kappa(status, params) - params.omega2 * normalized_wrench_norm(f_meas, params)
}

/// Status after a step that ended at `pose` at `time` with reading `f_meas`.
pub fn check_termination(pose: &Pose4, time: f64, f_meas: &Wrench4, geometry: &Geometry, params: &EnvParams) -> Status {
    if f_meas.force_norm() > params.f_max {
        Status::ViolationForce
    } else if f_meas.torque_abs() > params.t_max {
        Status::ViolationTorque
    } else if is_inserted(pose, geometry) {
        Status::Success
    } else if time >= params.timeout - 1e-9 {
        Status::Timeout
    } else {
        Status::Running
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_zero_wrench_is_zero() {
        assert_eq!(reward(Status::Running, &Wrench4::ZERO, &EnvParams::default()), 0.0);
    }

    #[test]
    fn success_with_small_penalty() {
        let p = EnvParams::default();
        let f = Wrench4::new(8.0, 0.0, 0.0, 0.0); // normalized norm 0.1
        assert!((reward(Status::Success, &f, &p) - 199.998).abs() < 1e-12);
    }

    #[test]
    fn violation_at_threshold() {
        let p = EnvParams::default();
        let f = Wrench4::new(0.0, 80.0, 0.0, 0.0);
        assert!((reward(Status::ViolationForce, &f, &p) - -10.02).abs() < 1e-12);
    }

    #[test]
    fn thresholds() {
        let p = EnvParams::default();
        let g = Geometry::default();
        let far = Pose4::new(0.0, -0.25, 0.0, 0.0);
        let f = Wrench4::new(81.0, 0.0, 0.0, 0.0);
        assert_eq!(check_termination(&far, 1.0, &f, &g, &p), Status::ViolationForce);
        let t = Wrench4::new(3.0, 4.0, 0.0, 8.5);
        assert_eq!(check_termination(&far, 1.0, &t, &g, &p), Status::ViolationTorque);
        assert_eq!(check_termination(&g.target_pose(), 1.0, &Wrench4::ZERO, &g, &p), Status::Success);
        assert_eq!(check_termination(&far, 30.0, &Wrench4::ZERO, &g, &p), Status::Timeout);
        assert_eq!(check_termination(&far, 1.0, &Wrench4::ZERO, &g, &p), Status::Running);
    }
}
