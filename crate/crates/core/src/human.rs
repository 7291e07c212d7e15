//! Simulated operator: limb spring-damper driven by a cubic intended trajectory.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Geometry, HumanBounds};
use crate::error::{Error, Result};
use crate::sim::sensor::{grasp_point, HumanLoad};
use crate::types::{Diag4, Pose4, Twist4, Wrench4, DOF};

/// Limb damping and stiffness for one episode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HumanParams {
    pub damping: Diag4,
    pub stiffness: Diag4,
}

/// Per-DoF cubic `a t³ + b t² + c t + d` reaching `target` at `horizon`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplineCoeffs {
    pub a: Diag4,
    pub b: Diag4,
    pub c: Diag4,
    pub d: Diag4,
    pub horizon: f64,
    pub target: Pose4,
}

/// Fits the cubic through `start` with velocity `v_start` and `target` with `v_target` at `horizon`.
pub fn plan_trajectory(
    start: Pose4,
    target: Pose4,
    v_start: Twist4,
    v_target: Twist4,
    horizon: f64,
) -> Result<SplineCoeffs> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Domain(format!("planning horizon must be positive, got {horizon}")));
    }
    let (xi, xf) = (start.to_array(), target.to_array());
    let (vi, vf) = (v_start.to_array(), v_target.to_array());
    let t = horizon;
    let c = vi;
    let d = xi;
    let a: Diag4 = std::array::from_fn(|k| (2.0 * (d[k] - xf[k]) + (c[k] + vf[k]) * t) / (t * t * t));
    let b: Diag4 = std::array::from_fn(|k| (vf[k] - c[k] - 3.0 * a[k] * t * t) / (2.0 * t));
    Ok(SplineCoeffs { a, b, c, d, horizon, target })
}

impl SplineCoeffs {
    fn cubic(&self, t: f64) -> Diag4 {
        std::array::from_fn(|k| ((self.a[k] * t + self.b[k]) * t + self.c[k]) * t + self.d[k])
    }

    fn cubic_rate(&self, t: f64) -> Diag4 {
        std::array::from_fn(|k| (3.0 * self.a[k] * t + 2.0 * self.b[k]) * t + self.c[k])
    }

    /// Raw polynomial value, ignoring the hold after the horizon.
    pub fn eval_polynomial(&self, t: f64) -> Pose4 {
        Pose4::from_array(self.cubic(t))
    }

    pub fn eval_polynomial_rate(&self, t: f64) -> Twist4 {
        Twist4::from_array(self.cubic_rate(t))
    }
}

/// Intended pose at time `t`: the cubic up to the horizon, the target after.
pub fn desired_pose(coeffs: &SplineCoeffs, t: f64) -> Pose4 {
    if t > coeffs.horizon {
        coeffs.target
    } else {
        coeffs.eval_polynomial(t)
    }
}

/// `f_h = −D_h ẋ + K_h (x_d − x)`, componentwise.
pub fn human_force(params: &HumanParams, x: &Pose4, xdot: &Twist4, x_d: &Pose4) -> Wrench4 {
    let (x, v, xd) = (x.to_array(), xdot.to_array(), x_d.to_array());
    Wrench4::from_array(std::array::from_fn(|k| -params.damping[k] * v[k] + params.stiffness[k] * (xd[k] - x[k])))
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Independent uniform draw of every gain between its bounds.
pub fn sample_human_params<R: Rng + ?Sized>(rng: &mut R, bounds: &HumanBounds) -> HumanParams {
    let mut damping = [0.0; DOF];
    let mut stiffness = [0.0; DOF];
    for k in 0..DOF {
        damping[k] = uniform(rng, bounds.damping_lo[k], bounds.damping_hi[k]);
    }
    for k in 0..DOF {
        stiffness[k] = uniform(rng, bounds.stiffness_lo[k], bounds.stiffness_hi[k]);
    }
    HumanParams { damping, stiffness }
}

/// One randomized operator for one episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulatedHuman {
    pub params: HumanParams,
    pub plan: SplineCoeffs,
}

impl SimulatedHuman {
    /// Samples gains and a horizon, and plans a rest-to-rest motion from
    /// `start` to the inserted pose.
    pub fn sample<R: Rng + ?Sized>(
        rng: &mut R,
        bounds: &HumanBounds,
        start: Pose4,
        geometry: &Geometry,
    ) -> Result<Self> {
        let params = sample_human_params(rng, bounds);
        let horizon = uniform(rng, bounds.horizon[0], bounds.horizon[1]);
        let plan = plan_trajectory(start, geometry.target_pose(), Twist4::ZERO, Twist4::ZERO, horizon)?;
        Ok(Self { params, plan })
    }

    /// Load on the board at pose `x` moving with `xdot` at time `t`.
    ///
    /// Translational components act at the grasp point; the rotational
    /// component is a pure torque.
    pub fn load(&self, x: &Pose4, xdot: &Twist4, t: f64, geometry: &Geometry) -> HumanLoad {
        let f = human_force(&self.params, x, xdot, &desired_pose(&self.plan, t));
        HumanLoad { force: [f.fx, f.fy, f.fz], torque_y: f.ty, point: grasp_point(x, geometry) }
    }
}
