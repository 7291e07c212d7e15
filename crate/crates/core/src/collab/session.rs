use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::wire::{SessionInfo, StateMessage};
use crate::admittance::AdmittanceController;
use crate::config::{CollabConfig, Config};
use crate::error::{Error, Result};
use crate::harness::episode::{admittance_controller, Controller};
use crate::harness::PolicyController;
use crate::pgppo::Checkpoint;
use crate::sim::{grasp_point, Env, HumanLoad, Observation};
use crate::types::{Pose4, Twist4, Wrench4};

pub type SessionId = u64;

/// The part of the target the pointer controls; y follows the feed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CursorTarget {
    pub x: f64,
    pub z: f64,
    pub theta: f64,
}

/// Spring-damper pull from `target` on a board at `pose` moving with `twist`,
/// applied at the grasp point. The force vector and the torque are each
/// saturated at the configured maxima.
pub fn coupling_force(
    target: &Pose4,
    pose: &Pose4,
    twist: &Twist4,
    gains: &CollabConfig,
    grasp: [f64; 3],
) -> HumanLoad {
    let e = *target - *pose;
    let mut force = [
        gains.k_ui * e.x - gains.d_ui * twist.vx,
        gains.k_ui * e.y - gains.d_ui * twist.vy,
        gains.k_ui * e.z - gains.d_ui * twist.vz,
    ];
    let norm = force.iter().map(|f| f * f).sum::<f64>().sqrt();
    if norm > gains.force_max {
        force.iter_mut().for_each(|f| *f *= gains.force_max / norm);
    }
    let torque_y = (gains.k_ui_rot * e.theta_y - gains.d_ui_rot * twist.wy).clamp(-gains.torque_max, gains.torque_max);
    HumanLoad { force, torque_y, point: grasp }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssistantSpec {
    Admittance,
    Policy { checkpoint: PathBuf },
}

/// The robot side of a session.
#[derive(Clone, Debug)]
pub enum Assistant {
    Admittance(AdmittanceController),
    Policy(PolicyController),
}

impl Assistant {
    pub fn admittance(cfg: &Config) -> Self {
        Self::Admittance(admittance_controller(cfg))
    }

    pub fn policy(ck: &Checkpoint) -> Self {
        Self::Policy(PolicyController::from_checkpoint(ck))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Admittance(_) => "admittance",
            Self::Policy(_) => "policy",
        }
    }

    fn controller(&mut self) -> &mut dyn Controller {
        match self {
            Self::Admittance(c) => c,
            Self::Policy(c) => c,
        }
    }
}

/// One live episode. Ticks are broadcast-rate; each tick advances physics by
/// however many fixed steps bring simulated time level with
/// `ticks_run / broadcast_hz`.
pub struct Session {
    pub id: SessionId,
    cfg: Config,
    assistant: Assistant,
    env: Env,
    obs: Observation,
    seed: u64,
    cursor: Option<CursorTarget>,
    feed_rate: f64,
    y_target: f64,
    paused: bool,
    tick: u64,
    ticks_run: u64,
    last_reward: f64,
    last_human: Wrench4,
}

impl Session {
    pub fn new(id: SessionId, cfg: &Config, assistant: Assistant, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let (env, obs) = Env::reset(cfg.env.clone(), cfg.geometry.clone(), seed)?;
        let mut s = Self {
            id,
            cfg: cfg.clone(),
            assistant,
            y_target: env.state().pose.y,
            env,
            obs,
            seed,
            cursor: None,
            feed_rate: cfg.collab.feed_rate,
            paused: false,
            tick: 0,
            ticks_run: 0,
            last_reward: 0.0,
            last_human: Wrench4::ZERO,
        };
        let start = s.env.state().start_pose;
        s.assistant.controller().begin(&s.obs, &start);
        Ok(s)
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn set_cursor(&mut self, c: CursorTarget) -> Result<()> {
        if !(c.x.is_finite() && c.z.is_finite() && c.theta.is_finite()) {
            return Err(Error::NonFinite("cursor target".into()));
        }
        self.cursor = Some(c);
        Ok(())
    }

    pub fn set_feed(&mut self, rate: f64) -> Result<()> {
        if !(rate.is_finite() && rate >= 0.0 && rate <= self.cfg.env.v_max) {
            return Err(Error::Domain(format!("feed rate must lie in [0, {}] m/s", self.cfg.env.v_max)));
        }
        self.feed_rate = rate;
        Ok(())
    }

    pub fn set_paused(&mut self, paused: bool) {
        self.paused = paused;
    }

    /// New episode in the same session; the tick counter keeps counting.
    pub fn reset(&mut self, seed: Option<u64>) -> Result<()> {
        let seed = seed.unwrap_or(self.seed);
        let (env, obs) = Env::reset(self.cfg.env.clone(), self.cfg.geometry.clone(), seed)?;
        self.y_target = env.state().pose.y;
        self.env = env;
        self.obs = obs;
        self.seed = seed;
        self.cursor = None;
        self.ticks_run = 0;
        self.last_reward = 0.0;
        self.last_human = Wrench4::ZERO;
        let start = self.env.state().start_pose;
        self.assistant.controller().begin(&self.obs, &start);
        Ok(())
    }

    /// Full coupling target: cursor for x, z, θ and the fed-in depth for y.
    pub fn target(&self) -> Option<Pose4> {
        self.cursor.map(|c| Pose4::new(c.x, self.y_target, c.z, c.theta))
    }

    /// One physics step: the assistant acts on the current observation, the
    /// coupling is evaluated where the board will land.
    pub fn step_physics(&mut self) -> Result<()> {
        let cmd = self.assistant.controller().act(&self.obs)?;
        let (pose, twist, _) = self.env.predict(cmd);
        let grasp = grasp_point(&pose, self.env.geometry());
        let load = match self.target() {
            Some(target) => coupling_force(&target, &pose, &twist, &self.cfg.collab, grasp),
            None => HumanLoad::zero_at(grasp),
        };
        let out = self.env.step(cmd, &load)?;
        self.obs = out.obs;
        self.last_reward = out.reward;
        self.last_human = Wrench4::new(load.force[0], load.force[1], load.force[2], load.torque_y);
        if self.cursor.is_some() {
            let depth = self.env.geometry().target_pose().y;
            self.y_target = (self.y_target + self.feed_rate * self.cfg.env.dt).min(depth);
        }
        Ok(())
    }

    /// Advances to the next broadcast. Paused or finished sessions keep
    /// ticking with a frozen state.
    pub fn tick(&mut self) -> Result<StateMessage> {
        self.tick += 1;
        if !self.paused && !self.env.status().is_terminal() {
            self.ticks_run += 1;
            let due = (self.ticks_run as f64 / (self.cfg.collab.broadcast_hz * self.cfg.env.dt) + 1e-9).floor() as u64;
            while self.env.state().steps < due && !self.env.status().is_terminal() {
                self.step_physics()?;
            }
        }
        Ok(self.state_message())
    }

    pub fn state_message(&self) -> StateMessage {
        let st = self.env.state();
        StateMessage {
            tick: self.tick,
            time: st.time,
            steps: st.steps,
            pose: st.pose.to_array(),
            twist: st.twist.to_array(),
            wrench: st.last_wrench.to_array(),
            human: self.last_human.to_array(),
            target: self.target().map(|t| t.to_array()),
            reward: self.last_reward,
            status: st.status,
            first_contact_time: st.first_contact_time,
            paused: self.paused,
        }
    }

    pub fn info(&self) -> SessionInfo {
        let g = self.env.geometry();
        SessionInfo {
            session: self.id,
            assistant: self.assistant.kind().into(),
            seed: self.seed,
            broadcast_hz: self.cfg.collab.broadcast_hz,
            dt: self.cfg.env.dt,
            f_max: self.cfg.env.f_max,
            t_max: self.cfg.env.t_max,
            feed_rate: self.feed_rate,
            start_pose: self.env.state().start_pose.to_array(),
            target_pose: g.target_pose().to_array(),
            board_half_extents: g.board_half_extents,
            clearance: g.clearance,
            slot_depth: g.slot_depth,
        }
    }
}

struct Parked {
    session: Session,
    since: Instant,
}

/// Owns sessions that are not attached to a connection. A connection takes its
/// session out while live and parks it on disconnect.
pub struct SessionManager {
    cfg: Config,
    next_id: SessionId,
    parked: HashMap<SessionId, Parked>,
    checkpoints: HashMap<PathBuf, Arc<Checkpoint>>,
}

impl SessionManager {
    pub fn new(cfg: Config) -> Self {
        Self { cfg, next_id: 1, parked: HashMap::new(), checkpoints: HashMap::new() }
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    /// Shared read-only checkpoint, loaded once per path.
    pub fn checkpoint(&mut self, path: &PathBuf) -> Result<Arc<Checkpoint>> {
        if let Some(ck) = self.checkpoints.get(path) {
            return Ok(ck.clone());
        }
        let ck = Arc::new(Checkpoint::load(path)?);
        self.checkpoints.insert(path.clone(), ck.clone());
        Ok(ck)
    }

    /// Builds a fresh session; nothing is allocated an id if loading fails.
    pub fn create(&mut self, spec: &AssistantSpec, seed: u64) -> Result<Session> {
        let assistant = match spec {
            AssistantSpec::Admittance => Assistant::admittance(&self.cfg),
            AssistantSpec::Policy { checkpoint } => Assistant::policy(&*self.checkpoint(checkpoint)?),
        };
        let session = Session::new(self.next_id, &self.cfg, assistant, seed)?;
        self.next_id += 1;
        Ok(session)
    }

    pub fn park(&mut self, session: Session, now: Instant) {
        self.parked.insert(session.id, Parked { session, since: now });
    }

    /// Hands a parked session back if its grace period has not run out.
    pub fn resume(&mut self, id: SessionId, now: Instant) -> Result<Session> {
        self.purge(now);
        self.parked.remove(&id).map(|p| p.session).ok_or_else(|| Error::Usage(format!("no resumable session {id}")))
    }

    /// Drops parked sessions older than the grace period.
    pub fn purge(&mut self, now: Instant) {
        let grace = Duration::from_secs_f64(self.cfg.collab.grace_period);
        self.parked.retain(|_, p| now.saturating_duration_since(p.since) <= grace);
    }

    pub fn parked_len(&self) -> usize {
        self.parked.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admittance::ac_step;
    use crate::harness::episode::limits;
    use crate::sim::Status;

    fn gains() -> CollabConfig {
        CollabConfig::default()
    }

    #[test]
    fn coupling_at_rest_on_target_is_zero() {
        let p = Pose4::new(0.01, -0.2, 0.003, 0.02);
        let l = coupling_force(&p, &p, &Twist4::ZERO, &gains(), [0.0; 3]);
        assert_eq!(l.force, [0.0; 3]);
        assert_eq!(l.torque_y, 0.0);
    }

    #[test]
    fn coupling_spring_law() {
        let target = Pose4::new(0.05, 0.0, 0.0, 0.0);
        let l = coupling_force(&target, &Pose4::ZERO, &Twist4::ZERO, &gains(), [0.0; 3]);
        assert!((l.force[0] - 10.0).abs() < 1e-12);
        assert_eq!(l.force[1], 0.0);
    }

    #[test]
    fn coupling_saturates() {
        let target = Pose4::new(3.0, -4.0, 0.0, 100.0);
        let g = gains();
        let l = coupling_force(&target, &Pose4::ZERO, &Twist4::ZERO, &g, [0.0; 3]);
        let n = l.force.iter().map(|f| f * f).sum::<f64>().sqrt();
        assert!((n - g.force_max).abs() < 1e-9);
        assert!((l.force[0] / l.force[1] + 0.75).abs() < 1e-12);
        assert_eq!(l.torque_y, g.torque_max);
    }

    #[test]
    fn no_cursor_means_no_human_force() {
        let cfg = Config::default();
        let mut s = Session::new(1, &cfg, Assistant::admittance(&cfg), 5).unwrap();
        for _ in 0..10 {
            let m = s.tick().unwrap();
            assert_eq!(m.human, [0.0; 4]);
        }
        assert!(s.env().state().steps > 0);
    }

    #[test]
    fn ticks_count_by_one_and_track_wall_rate() {
        let cfg = Config::default();
        let mut s = Session::new(1, &cfg, Assistant::admittance(&cfg), 5).unwrap();
        let mut last = 0;
        for _ in 0..30 {
            let m = s.tick().unwrap();
            assert_eq!(m.tick, last + 1);
            last = m.tick;
        }
        // 30 ticks at 30 Hz is one simulated second
        assert_eq!(s.env().state().steps, 100);
        s.set_paused(true);
        let m = s.tick().unwrap();
        assert_eq!((m.tick, m.steps), (31, 100));
    }

    #[test]
    fn admittance_assistant_matches_ac_step() {
        let cfg = Config::default();
        let mut s = Session::new(1, &cfg, Assistant::admittance(&cfg), 9).unwrap();
        let start = s.env().state().start_pose;
        s.set_cursor(CursorTarget { x: start.x + 0.01, z: start.z - 0.005, theta: start.theta_y + 0.02 }).unwrap();
        let mut state = crate::admittance::ac_reset(&cfg.admittance);
        for _ in 0..200 {
            let f = s.env().observation().f_meas;
            let (next, cmd) = ac_step(&state, &f, &cfg.admittance, cfg.env.dt, limits(&cfg)).unwrap();
            state = next;
            s.step_physics().unwrap();
            assert_eq!(s.env().state().twist, s.env().clamp_action(cmd));
        }
    }

    #[test]
    fn terminal_state_freezes() {
        let mut cfg = Config::default();
        cfg.collab.force_max = 200.0;
        cfg.collab.k_ui = 5000.0;
        cfg.collab.d_ui = 1.0;
        let mut s = Session::new(1, &cfg, Assistant::admittance(&cfg), 3).unwrap();
        let start = s.env().state().start_pose;
        // a hard yank past the 80 N limit
        s.set_cursor(CursorTarget { x: start.x + 0.5, z: start.z, theta: start.theta_y }).unwrap();
        let mut frozen = None;
        for _ in 0..60 {
            let m = s.tick().unwrap();
            match &frozen {
                None if m.status.is_terminal() => frozen = Some(m),
                None => {}
                Some(f) => {
                    assert_eq!(m.status, f.status);
                    assert_eq!((m.pose, m.steps, m.time), (f.pose, f.steps, f.time));
                    assert!(m.tick > f.tick);
                }
            }
        }
        assert_eq!(frozen.unwrap().status, Status::ViolationForce);
    }

    #[test]
    fn sessions_are_isolated() {
        let mut mgr = SessionManager::new(Config::default());
        let mut a = mgr.create(&AssistantSpec::Admittance, 1).unwrap();
        let mut b = mgr.create(&AssistantSpec::Admittance, 1).unwrap();
        assert_ne!(a.id, b.id);
        let sa = a.env().state().start_pose;
        a.set_cursor(CursorTarget { x: sa.x + 0.02, z: sa.z, theta: sa.theta_y }).unwrap();
        for _ in 0..20 {
            a.tick().unwrap();
            b.tick().unwrap();
        }
        assert_ne!(a.env().state().pose, b.env().state().pose);
        let cfg = Config::default();
        let mut twin = Session::new(99, &cfg, Assistant::admittance(&cfg), 1).unwrap();
        for _ in 0..20 {
            twin.tick().unwrap();
        }
        assert_eq!(twin.env().state(), b.env().state());
    }

    #[test]
    fn missing_checkpoint_creates_nothing() {
        let mut mgr = SessionManager::new(Config::default());
        let spec = AssistantSpec::Policy { checkpoint: "/nonexistent/ck.json".into() };
        assert!(matches!(mgr.create(&spec, 0), Err(Error::Checkpoint(_))));
        assert_eq!(mgr.create(&AssistantSpec::Admittance, 0).unwrap().id, 1);
    }

    #[test]
    fn parked_sessions_expire() {
        let mut cfg = Config::default();
        cfg.collab.grace_period = 10.0;
        let mut mgr = SessionManager::new(cfg);
        let t0 = Instant::now();
        let s = mgr.create(&AssistantSpec::Admittance, 0).unwrap();
        let id = s.id;
        mgr.park(s, t0);
        assert_eq!(mgr.resume(id, t0 + Duration::from_secs(5)).unwrap().id, id);
        let s = mgr.create(&AssistantSpec::Admittance, 0).unwrap();
        let id = s.id;
        mgr.park(s, t0);
        assert!(mgr.resume(id, t0 + Duration::from_secs(11)).is_err());
        assert_eq!(mgr.parked_len(), 0);
    }

    #[test]
    fn reset_restarts_the_episode_not_the_counter() {
        let cfg = Config::default();
        let mut s = Session::new(1, &cfg, Assistant::admittance(&cfg), 2).unwrap();
        for _ in 0..5 {
            s.tick().unwrap();
        }
        s.reset(Some(4)).unwrap();
        let m = s.tick().unwrap();
        assert_eq!(m.tick, 6);
        assert!(m.time < 0.05);
    }
}
