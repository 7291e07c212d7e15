//! Fixed-step episode state machine.
//!
//! The robot is an ideal Cartesian velocity source: the board moves exactly by
//! the clamped command each step, and loads only show up through the sensor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{EnvParams, Geometry};
use crate::error::{Error, Result};
use crate::sim::contact::{contact_damping, contact_forces, series_stiffness, Contact};
use crate::sim::obs::Observation;
use crate::sim::reward::{check_termination, reward, Status};
use crate::sim::sensor::{grasp_point, sensor_read, HumanLoad, SensorNoise};
use crate::types::{Pose4, Twist4, Wrench4};

const START_POSE_RETRIES: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    pub pose: Pose4,
    pub twist: Twist4,
    pub start_pose: Pose4,
    pub steps: u64,
    pub time: f64,
    pub k_board: f64,
    pub k_frame: f64,
    pub k_eff: f64,
    pub c_contact: f64,
    pub first_contact_time: Option<f64>,
    pub status: Status,
    pub last_wrench: Wrench4,
    pub rng: ChaCha8Rng,
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub obs: Observation,
    pub reward: f64,
    pub status: Status,
    pub contacts: Vec<Contact>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Env {
    params: EnvParams,
    geometry: Geometry,
    state: EnvState,
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

impl Env {
    /// Starts a new episode; everything random is drawn from `seed`.
    pub fn reset(params: EnvParams, geometry: Geometry, seed: u64) -> Result<(Self, Observation)> {
        params.validate()?;
        geometry.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k_board = uniform(&mut rng, params.k_board[0], params.k_board[1]);
        let k_frame = uniform(&mut rng, params.k_frame[0], params.k_frame[1]);
        let k_eff = series_stiffness(k_board, k_frame);
        let c_contact = contact_damping(k_eff, params.board_mass, params.contact_damping_ratio);

        let mut start = None;
        for _ in 0..START_POSE_RETRIES {
            let p: [f64; 4] =
                std::array::from_fn(|i| uniform(&mut rng, params.start_pose_lo[i], params.start_pose_hi[i]));
            let pose = Pose4::from_array(p);
            if contact_forces(&pose, &Twist4::ZERO, &geometry, k_eff, c_contact).is_empty() {
                start = Some(pose);
                break;
            }
        }
        let pose = start.ok_or_else(|| {
            Error::Config(format!("no interpenetration-free start pose found in {START_POSE_RETRIES} draws"))
        })?;

        let noise = SensorNoise { force_sigma: params.force_noise_sigma, torque_sigma: params.torque_noise_sigma };
        let idle = HumanLoad::zero_at(grasp_point(&pose, &geometry));
        let wrench = sensor_read(&idle, &[], &pose, &geometry, &noise, &mut rng);

        let state = EnvState {
            pose,
            twist: Twist4::ZERO,
            start_pose: pose,
            steps: 0,
            time: 0.0,
            k_board,
            k_frame,
            k_eff,
            c_contact,
            first_contact_time: None,
            status: Status::Running,
            last_wrench: wrench,
            rng,
        };
        let env = Self { params, geometry, state };
        let obs = env.observation();
        Ok((env, obs))
    }

    pub fn params(&self) -> &EnvParams {
        &self.params
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn status(&self) -> Status {
        self.state.status
    }

    pub fn observation(&self) -> Observation {
        Observation { x_r: self.state.pose, xdot_r: self.state.twist, f_meas: self.state.last_wrench }
    }

    pub fn clamp_action(&self, action: Twist4) -> Twist4 {
        action.clamped(self.params.v_max, self.params.w_max)
    }

    /// Pose, twist and time the next `step(action, ..)` will land on.
    pub fn predict(&self, action: Twist4) -> (Pose4, Twist4, f64) {
        let a = self.clamp_action(action);
        let pose = self.state.pose + a.integrate(self.params.dt);
        (pose, a, (self.state.steps + 1) as f64 * self.params.dt)
    }

    /// Advances one step under `action` with the operator applying `human`
    /// (evaluated at the predicted next pose by the caller).
    pub fn step(&mut self, action: Twist4, human: &HumanLoad) -> Result<StepOutcome> {
        if self.state.status.is_terminal() {
            return Err(Error::Usage(format!("step after terminal status {:?}", self.state.status)));
        }
        if !action.is_finite() {
            return Err(Error::NonFinite("action".into()));
        }
        let (pose, twist, time) = self.predict(action);
        let contacts = contact_forces(&pose, &twist, &self.geometry, self.state.k_eff, self.state.c_contact);
        let noise =
            SensorNoise { force_sigma: self.params.force_noise_sigma, torque_sigma: self.params.torque_noise_sigma };
        let wrench = sensor_read(human, &contacts, &pose, &self.geometry, &noise, &mut self.state.rng);

        let s = &mut self.state;
        s.pose = pose;
        s.twist = twist;
        s.time = time;
        s.steps += 1;
        s.last_wrench = wrench;
        if s.first_contact_time.is_none() && !contacts.is_empty() {
            s.first_contact_time = Some(time);
        }
        s.status = check_termination(&pose, time, &wrench, &self.geometry, &self.params);
        let r = reward(s.status, &wrench, &self.params);
        Ok(StepOutcome { obs: self.observation(), reward: r, status: self.state.status, contacts })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> EnvParams {
        EnvParams { force_noise_sigma: 0.0, torque_noise_sigma: 0.0, ..EnvParams::default() }
    }

    fn idle(env: &Env, action: Twist4) -> HumanLoad {
        let (pose, _, _) = env.predict(action);
        HumanLoad::zero_at(grasp_point(&pose, env.geometry()))
    }

    #[test]
    fn reset_is_deterministic() {
        let (a, oa) = Env::reset(EnvParams::default(), Geometry::default(), 42).unwrap();
        let (b, ob) = Env::reset(EnvParams::default(), Geometry::default(), 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(oa, ob);
        let (c, _) = Env::reset(EnvParams::default(), Geometry::default(), 43).unwrap();
        assert_ne!(a.state().pose, c.state().pose);
    }

    #[test]
    fn degenerate_start_range_and_stiffness() {
        let p = EnvParams {
            start_pose_lo: [0.0, -0.25, 0.0, 0.0],
            start_pose_hi: [0.0, -0.25, 0.0, 0.0],
            k_board: [1e5, 1e5],
            k_frame: [1e5, 1e5],
            ..quiet()
        };
        let (env, _) = Env::reset(p, Geometry::default(), 3).unwrap();
        assert_eq!(env.state().pose, Pose4::new(0.0, -0.25, 0.0, 0.0));
        assert_eq!(env.state().k_eff, 5e4);
        assert_eq!(env.state().status, Status::Running);
        assert_eq!(env.state().twist, Twist4::ZERO);
    }

    #[test]
    fn interpenetrating_start_is_a_configuration_error() {
        let p = EnvParams { start_pose_lo: [0.05, 0.01, 0.0, 0.0], start_pose_hi: [0.05, 0.01, 0.0, 0.0], ..quiet() };
        assert!(matches!(Env::reset(p, Geometry::default(), 0), Err(Error::Config(_))));
    }

    #[test]
    fn zero_action_is_a_fixed_point() {
        let (mut env, _) = Env::reset(quiet(), Geometry::default(), 5).unwrap();
        let before = env.state().pose;
        let out = env.step(Twist4::ZERO, &idle(&env, Twist4::ZERO)).unwrap();
        assert_eq!(env.state().pose, before);
        assert_eq!(out.reward, 0.0);
        assert_eq!(out.status, Status::Running);
    }

    #[test]
    fn one_step_of_y_velocity() {
        let (mut env, _) = Env::reset(quiet(), Geometry::default(), 5).unwrap();
        let y0 = env.state().pose.y;
        let a = Twist4::new(0.0, 0.1, 0.0, 0.0);
        env.step(a, &idle(&env, a)).unwrap();
        assert!((env.state().pose.y - y0 - 0.001).abs() < 1e-15);
    }

    #[test]
    fn action_is_clamped() {
        let (mut env, _) = Env::reset(quiet(), Geometry::default(), 5).unwrap();
        let a = Twist4::new(5.0, 0.0, 0.0, -5.0);
        let out = env.step(a, &idle(&env, a)).unwrap();
        assert_eq!(out.obs.xdot_r, Twist4::new(0.1, 0.0, 0.0, -0.3));
    }

    #[test]
    fn driving_into_the_face_violates_and_then_refuses_steps() {
        // Offset so two corners sit outside the opening, then push along +Y.
        let p = EnvParams { start_pose_lo: [0.03, -0.02, 0.0, 0.0], start_pose_hi: [0.03, -0.02, 0.0, 0.0], ..quiet() };
        let (mut env, _) = Env::reset(p, Geometry::default(), 0).unwrap();
        let a = Twist4::new(0.0, 0.1, 0.0, 0.0);
        let mut status = Status::Running;
        let mut first_contact = None;
        for _ in 0..100 {
            let out = env.step(a, &idle(&env, a)).unwrap();
            status = out.status;
            if first_contact.is_none() {
                first_contact = env.state().first_contact_time;
            }
            if status.is_terminal() {
                break;
            }
        }
        assert_eq!(status, Status::ViolationForce);
        assert!(first_contact.is_some());
        assert!(env.step(a, &idle(&env, a)).is_err());
    }
}
