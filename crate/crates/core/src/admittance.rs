//! Fixed-gain admittance control: `M ẍ + C ẋ + K x = f_meas` per DoF, turned
//! into a velocity command by semi-implicit Euler.

use serde::{Deserialize, Serialize};

use crate::config::AdmittanceParams;
use crate::error::{Error, Result};
use crate::sim::Observation;
use crate::types::{Pose4, Twist4, Wrench4, DOF};

/// Velocity limits applied to the command.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocityLimits {
    pub linear: f64,
    pub angular: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdmittanceState {
    /// Displacement since the controller was reset.
    pub disp: Pose4,
    pub vel: Twist4,
}

pub fn ac_reset(_params: &AdmittanceParams) -> AdmittanceState {
    AdmittanceState::default()
}

/// One integration step; returns the new state and the clamped command.
pub fn ac_step(
    state: &AdmittanceState,
    f_meas: &Wrench4,
    params: &AdmittanceParams,
    dt: f64,
    limits: VelocityLimits,
) -> Result<(AdmittanceState, Twist4)> {
    if !f_meas.is_finite() {
        return Err(Error::NonFinite("measured wrench".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let f = f_meas.to_array();
    let mut vel = state.vel.to_array();
    let mut disp = state.disp.to_array();
    for k in 0..DOF {
        let acc = (f[k] - params.damping[k] * vel[k] - params.stiffness[k] * disp[k]) / params.mass[k];
        vel[k] += acc * dt;
        disp[k] += vel[k] * dt;
    }
    let next = AdmittanceState { disp: disp.into(), vel: vel.into() };
    let command = next.vel.clamped(limits.linear, limits.angular);
    Ok((next, command))
}

/// Guide policy evaluated from an observation alone.
///
/// The controller state is rebuilt as `vel = ẋ_r` and `disp = x_r − start`,
/// where `start` is the pose the episode began from.
pub fn pi_h(obs: &Observation, start: &Pose4, params: &AdmittanceParams, dt: f64, limits: VelocityLimits) -> Twist4 {
    let state = reconstruct_state(obs, start);
    match ac_step(&state, &obs.f_meas, params, dt, limits) {
        Ok((_, cmd)) => cmd,
        Err(_) => Twist4::ZERO,
    }
}

pub fn reconstruct_state(obs: &Observation, start: &Pose4) -> AdmittanceState {
    AdmittanceState { disp: obs.x_r - *start, vel: obs.xdot_r }
}

/// Spectral radius of the per-DoF update matrix of the discrete scheme.
pub fn spectral_radius(mass: f64, damping: f64, stiffness: f64, dt: f64) -> f64 {
    // [v', x'] = A [v, x]
    let a11 = 1.0 - dt * damping / mass;
    let a12 = -dt * stiffness / mass;
    let a21 = dt * a11;
    let a22 = 1.0 + dt * a12;
    let tr = a11 + a22;
    let det = a11 * a22 - a12 * a21;
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (tr / 2.0 + s).abs().max((tr / 2.0 - s).abs())
    } else {
        det.sqrt()
    }
}

/// Stateful controller for running episodes.
#[derive(Clone, Debug)]
pub struct AdmittanceController {
    pub params: AdmittanceParams,
    pub dt: f64,
    pub limits: VelocityLimits,
    pub state: AdmittanceState,
}

impl AdmittanceController {
    pub fn new(params: AdmittanceParams, dt: f64, limits: VelocityLimits) -> Self {
        let state = ac_reset(&params);
        Self { params, dt, limits, state }
    }

    pub fn reset(&mut self) {
        self.state = ac_reset(&self.params);
    }

    pub fn command(&mut self, f_meas: &Wrench4) -> Result<Twist4> {
        let (next, cmd) = ac_step(&self.state, f_meas, &self.params, self.dt, self.limits)?;
        self.state = next;
        Ok(cmd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LIMITS: VelocityLimits = VelocityLimits { linear: 0.1, angular: 0.3 };

    fn unlimited() -> VelocityLimits {
        VelocityLimits { linear: f64::INFINITY, angular: f64::INFINITY }
    }

    #[test]
    fn reset_is_zero_and_idempotent() {
        let p = AdmittanceParams::default();
        assert_eq!(ac_reset(&p), AdmittanceState::default());
        assert_eq!(ac_reset(&p), ac_reset(&p));
    }

    #[test]
    fn zero_wrench_keeps_rest() {
        let p = AdmittanceParams::default();
        let mut s = ac_reset(&p);
        for _ in 0..1000 {
            let (n, cmd) = ac_step(&s, &Wrench4::ZERO, &p, 0.01, LIMITS).unwrap();
            assert_eq!(cmd, Twist4::ZERO);
            s = n;
        }
    }

    #[test]
    fn one_hand_integrated_step() {
        let p = AdmittanceParams::default();
        let (s, cmd) = ac_step(&ac_reset(&p), &Wrench4::new(1.0, 0.0, 0.0, 0.0), &p, 0.01, LIMITS).unwrap();
        assert!((s.vel.vx - 0.02).abs() < 1e-15);
        assert!((s.disp.x - 0.0002).abs() < 1e-15);
        assert_eq!(cmd.vx, s.vel.vx);
    }

    #[test]
    fn steady_state_displacement() {
        let p = AdmittanceParams { mass: [0.5; 4], damping: [12.5; 4], stiffness: [100.0; 4] };
        let mut s = ac_reset(&p);
        let f = Wrench4::new(1.0, 0.0, 0.0, 0.0);
        for _ in 0..6000 {
            s = ac_step(&s, &f, &p, 0.01, unlimited()).unwrap().0;
        }
        assert!((s.disp.x - 0.01).abs() < 0.01 * 0.01);
    }

    #[test]
    fn non_finite_wrench_rejected() {
        let p = AdmittanceParams::default();
        let f = Wrench4::new(f64::NAN, 0.0, 0.0, 0.0);
        assert!(ac_step(&ac_reset(&p), &f, &p, 0.01, LIMITS).is_err());
    }

    #[test]
    fn table_gains_are_discretely_stable() {
        let p = AdmittanceParams::default();
        for k in 0..DOF {
            let rho = spectral_radius(p.mass[k], p.damping[k], p.stiffness[k], 0.01);
            assert!(rho < 1.0, "dof {k}: spectral radius {rho}");
        }
    }

    #[test]
    fn superposition_holds() {
        let p = AdmittanceParams::default();
        let s1 = AdmittanceState { disp: Pose4::new(0.01, -0.02, 0.0, 0.03), vel: Twist4::new(0.01, 0.0, -0.02, 0.1) };
        let s2 =
            AdmittanceState { disp: Pose4::new(-0.03, 0.01, 0.02, -0.01), vel: Twist4::new(0.0, 0.03, 0.01, -0.2) };
        let f1 = Wrench4::new(1.0, -2.0, 0.5, 0.3);
        let f2 = Wrench4::new(-0.5, 4.0, 1.0, -0.1);
        let sum = AdmittanceState { disp: s1.disp + s2.disp, vel: s1.vel + s2.vel };
        let (a, _) = ac_step(&s1, &f1, &p, 0.01, unlimited()).unwrap();
        let (b, _) = ac_step(&s2, &f2, &p, 0.01, unlimited()).unwrap();
        let (c, _) = ac_step(&sum, &(f1 + f2), &p, 0.01, unlimited()).unwrap();
        for k in 0..DOF {
            assert!((a.vel.to_array()[k] + b.vel.to_array()[k] - c.vel.to_array()[k]).abs() < 1e-12);
            assert!((a.disp.to_array()[k] + b.disp.to_array()[k] - c.disp.to_array()[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn guide_matches_controller_on_reconstructed_state() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let p = AdmittanceParams::default();
        let mut r4 = |s: f64| -> [f64; 4] { std::array::from_fn(|_| rng.random_range(-s..s)) };
        for _ in 0..1000 {
            let obs = Observation { x_r: r4(0.3).into(), xdot_r: r4(0.1).into(), f_meas: r4(50.0).into() };
            let start: Pose4 = r4(0.3).into();
            let guide = pi_h(&obs, &start, &p, 0.01, LIMITS);
            let (_, cmd) = ac_step(&reconstruct_state(&obs, &start), &obs.f_meas, &p, 0.01, LIMITS).unwrap();
            assert_eq!(guide, cmd);
        }
    }

    #[test]
    fn acceleration_term_scales_with_wrench() {
        let p = AdmittanceParams::default();
        let s = AdmittanceState { disp: Pose4::new(0.01, 0.02, 0.0, 0.0), vel: Twist4::new(0.0, 0.0, 0.0, 0.0) };
        let base = ac_step(&s, &Wrench4::ZERO, &p, 0.01, unlimited()).unwrap().0.vel;
        let f = Wrench4::new(2.0, 1.0, -1.0, 0.2);
        let once = ac_step(&s, &f, &p, 0.01, unlimited()).unwrap().0.vel - base;
        let twice = ac_step(&s, &(f * 2.0), &p, 0.01, unlimited()).unwrap().0.vel - base;
        for k in 0..DOF {
            assert!((twice.to_array()[k] - 2.0 * once.to_array()[k]).abs() < 1e-12);
        }
    }
}
