//! Runs one simulated episode: environment, randomized operator and a controller.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::admittance::{AdmittanceController, VelocityLimits};
use crate::config::Config;
use crate::error::Result;
use crate::human::SimulatedHuman;
use crate::sim::{Env, Observation, Status, StepRecord};
use crate::types::{Pose4, Twist4};

/// Anything that maps observations to velocity commands for one episode.
pub trait Controller {
    fn begin(&mut self, obs: &Observation, start: &Pose4);
    fn act(&mut self, obs: &Observation) -> Result<Twist4>;
}

impl Controller for AdmittanceController {
    fn begin(&mut self, _obs: &Observation, _start: &Pose4) {
        self.reset();
    }

    fn act(&mut self, obs: &Observation) -> Result<Twist4> {
        self.command(&obs.f_meas)
    }
}

pub fn admittance_controller(cfg: &Config) -> AdmittanceController {
    AdmittanceController::new(cfg.admittance.clone(), cfg.env.dt, limits(cfg))
}

pub fn limits(cfg: &Config) -> VelocityLimits {
    VelocityLimits { linear: cfg.env.v_max, angular: cfg.env.w_max }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EpisodeOptions {
    pub record_log: bool,
    pub record_pairs: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub seed: u64,
    pub status: Status,
    /// Episode time at termination (s).
    pub duration: f64,
    pub first_contact_time: Option<f64>,
    pub steps: u64,
    pub total_reward: f64,
    /// Force norms (N) at every step from first contact on.
    pub insert_force_norms: Vec<f64>,
    /// |τy| (N·m) at every step from first contact on.
    pub insert_torque_norms: Vec<f64>,
    /// Steps before the last whose reading exceeded a safety threshold.
    pub premature_violations: usize,
    #[serde(skip)]
    pub log: Vec<StepRecord>,
    /// (observation, executed command) pairs.
    #[serde(skip)]
    pub pairs: Vec<(Observation, Twist4)>,
}

/// Env and operator streams derived from one episode seed.
pub fn episode_rngs(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Sets up the environment and a randomized operator for `seed`.
pub fn start_episode(cfg: &Config, seed: u64) -> Result<(Env, SimulatedHuman, Observation)> {
    let (env, obs) = Env::reset(cfg.env.clone(), cfg.geometry.clone(), seed)?;
    let mut human_rng = episode_rngs(seed);
    let human = SimulatedHuman::sample(&mut human_rng, &cfg.human, env.state().start_pose, &cfg.geometry)?;
    Ok((env, human, obs))
}

/// Advances `env` one step with the operator reacting at the landing pose.
pub fn step_with_human(env: &mut Env, human: &SimulatedHuman, action: Twist4) -> Result<crate::sim::StepOutcome> {
    let (pose, twist, t) = env.predict(action);
    let load = human.load(&pose, &twist, t, env.geometry());
    env.step(action, &load)
}

pub fn run_episode(
    cfg: &Config,
    seed: u64,
    controller: &mut dyn Controller,
    opts: EpisodeOptions,
) -> Result<EpisodeSummary> {
    let (mut env, human, mut obs) = start_episode(cfg, seed)?;
    let start = env.state().start_pose;
    controller.begin(&obs, &start);

    let mut summary = EpisodeSummary {
        seed,
        status: Status::Running,
        duration: 0.0,
        first_contact_time: None,
        steps: 0,
        total_reward: 0.0,
        insert_force_norms: Vec::new(),
        insert_torque_norms: Vec::new(),
        premature_violations: 0,
        log: Vec::new(),
        pairs: Vec::new(),
    };

    while !env.status().is_terminal() {
        let action = controller.act(&obs)?;
        let out = step_with_human(&mut env, &human, action)?;
        let st = env.state();
        if opts.record_pairs {
            summary.pairs.push((obs, out.obs.xdot_r));
        }
        if opts.record_log {
            summary.log.push(StepRecord {
                t: st.time,
                pose: st.pose.to_array(),
                twist: st.twist.to_array(),
                wrench: st.last_wrench.to_array(),
                reward: out.reward,
                status: out.status,
            });
        }
        if st.first_contact_time.is_some() {
            summary.insert_force_norms.push(st.last_wrench.force_norm());
            summary.insert_torque_norms.push(st.last_wrench.torque_abs());
        }
        if !out.status.is_terminal()
            && (st.last_wrench.force_norm() > cfg.env.f_max || st.last_wrench.torque_abs() > cfg.env.t_max)
        {
            summary.premature_violations += 1;
        }
        summary.total_reward += out.reward;
        obs = out.obs;
    }

    let st = env.state();
    summary.status = st.status;
    summary.duration = st.time;
    summary.first_contact_time = st.first_contact_time;
    summary.steps = st.steps;
    Ok(summary)
}
