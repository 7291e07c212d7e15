//! Configuration for every subsystem, loaded from one TOML file.
//!
//! Each section is a flat set of keys. Units are SI (m, s, N, N·m, rad, kg)
//! and documented on each field; `configs/default.toml` lists every key with
//! its default. Unknown keys are rejected.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Diag4, Pose4, Vec3};

/// Physical and reward parameters of the insertion environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvParams {
    /// Integration step (s).
    pub dt: f64,
    /// Board contact stiffness range (N/m), sampled uniformly per episode.
    pub k_board: [f64; 2],
    /// Frame contact stiffness range (N/m), sampled uniformly per episode.
    pub k_frame: [f64; 2],
    /// Contact damping as a fraction of critical damping for the board mass.
    pub contact_damping_ratio: f64,
    /// Force-norm safety threshold (N).
    pub f_max: f64,
    /// Torque safety threshold (N·m).
    pub t_max: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub kappa_success: f64,
    pub kappa_violation: f64,
    /// Episode time limit (s).
    pub timeout: f64,
    /// Standard deviation of additive force noise (N).
    pub force_noise_sigma: f64,
    /// Standard deviation of additive torque noise (N·m).
    pub torque_noise_sigma: f64,
    /// Lower corner of the start-pose box (m, m, m, rad).
    pub start_pose_lo: Diag4,
    /// Upper corner of the start-pose box (m, m, m, rad).
    pub start_pose_hi: Diag4,
    /// Board mass (kg).
    pub board_mass: f64,
    /// Vacuum gripper mass (kg); payload is assumed gravity-compensated.
    pub vacuum_mass: f64,
    /// Translational velocity limit (m/s).
    pub v_max: f64,
    /// Angular velocity limit (rad/s).
    pub w_max: f64,
}

impl Default for EnvParams {
    fn default() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        Self {
            dt: 0.01,
            k_board: [1.0e5, 1.5e5],
            k_frame: [1.0e5, 1.5e5],
            contact_damping_ratio: 1.0,
            f_max: 80.0,
            t_max: 8.0,
            omega1: 1.0,
            omega2: 0.02,
            kappa_success: 200.0,
            kappa_violation: -10.0,
            timeout: 30.0,
            force_noise_sigma: (1.0f64 / 16.0).sqrt(),
            torque_noise_sigma: (1.0f64 / 750.0).sqrt(),
            start_pose_lo: [-0.002, -0.30, -0.002, -0.6 * deg],
            start_pose_hi: [0.002, -0.20, 0.002, 0.6 * deg],
            board_mass: 0.714,
            vacuum_mass: 0.418,
            v_max: 0.1,
            w_max: 0.3,
        }
    }
}

impl EnvParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("f_max", self.f_max),
            ("t_max", self.t_max),
            ("timeout", self.timeout),
            ("v_max", self.v_max),
            ("w_max", self.w_max),
            ("board_mass", self.board_mass),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("env.{name} must be positive, got {v}")));
            }
        }
        for (name, r) in [("k_board", self.k_board), ("k_frame", self.k_frame)] {
            if !(r[0] > 0.0 && r[0] <= r[1] && r[1].is_finite()) {
                return Err(Error::Config(format!("env.{name} must be an increasing positive range")));
            }
        }
        if self.force_noise_sigma < 0.0 || self.torque_noise_sigma < 0.0 {
            return Err(Error::Config("noise sigmas must be nonnegative".into()));
        }
        if self.contact_damping_ratio < 0.0 {
            return Err(Error::Config("env.contact_damping_ratio must be nonnegative".into()));
        }
        for i in 0..4 {
            if !(self.start_pose_lo[i] <= self.start_pose_hi[i]) {
                return Err(Error::Config(format!("env.start_pose_lo[{i}] exceeds start_pose_hi[{i}]")));
            }
        }
        Ok(())
    }
}

/// Board, frame and sensor geometry.
///
/// The frame opening lies in the world XZ plane with its front face at
/// `frame_center.y`; insertion proceeds along +Y.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Geometry {
    /// Board half extents along board-local X, Y (thickness) and Z (m).
    pub board_half_extents: Vec3,
    /// Gap between board edge and slot wall on each side (m).
    pub clearance: f64,
    /// Depth of the slot along +Y (m).
    pub slot_depth: f64,
    /// Center of the slot opening on the front face.
    pub frame_center: Pose4,
    /// Board-center depth past the front face at the inserted pose (m).
    pub target_depth: f64,
    /// F/T sensor origin in the board frame (m).
    pub sensor_offset_board: Vec3,
    /// Human grasp point in the board frame (m).
    pub grasp_offset_board: Vec3,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            board_half_extents: [0.200, 0.0075, 0.100],
            clearance: 0.001,
            slot_depth: 0.05,
            frame_center: Pose4::ZERO,
            target_depth: 0.03,
            sensor_offset_board: [0.0, 0.0, 0.1],
            grasp_offset_board: [0.05, 0.0, 0.0],
        }
    }
}

impl Geometry {
    /// Slot half extents in the frame's X and Z directions (m).
    pub fn slot_half_extents(&self) -> [f64; 2] {
        [self.board_half_extents[0] + self.clearance, self.board_half_extents[2] + self.clearance]
    }

    /// The fully inserted board pose.
    pub fn target_pose(&self) -> Pose4 {
        Pose4 { y: self.frame_center.y + self.target_depth, ..self.frame_center }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clearance > 0.0) {
            return Err(Error::Config("geometry.clearance must be positive".into()));
        }
        if self.board_half_extents.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::Config("geometry.board_half_extents must be positive".into()));
        }
        if !(self.slot_depth > 0.0) {
            return Err(Error::Config("geometry.slot_depth must be positive".into()));
        }
        let thickness = 2.0 * self.board_half_extents[1];
        if self.target_depth - self.board_half_extents[1] < thickness {
            return Err(Error::Config(
                "geometry.target_depth leaves the trailing face short of one board thickness".into(),
            ));
        }
        Ok(())
    }
}

/// Uniform domain-randomization bounds for the simulated operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HumanBounds {
    /// Limb damping lower bound (kg/s ×3, N·m·s/rad).
    pub damping_lo: Diag4,
    pub damping_hi: Diag4,
    /// Limb stiffness lower bound (N/m ×3, N·m/rad).
    pub stiffness_lo: Diag4,
    pub stiffness_hi: Diag4,
    /// Planning horizon range for the intended trajectory (s).
    pub horizon: [f64; 2],
}

impl Default for HumanBounds {
    /// Table ranges, with translational damping capped at 75 kg/s: above
    /// roughly `2 M / dt - C` the explicit admittance loop diverges even in
    /// free space.
    fn default() -> Self {
        Self { damping_hi: [75.0, 75.0, 75.0, 2.0], ..Self::table() }
    }
}

impl HumanBounds {
    /// The full published randomization ranges.
    pub fn table() -> Self {
        Self {
            damping_lo: [5.0, 5.0, 5.0, 0.05],
            damping_hi: [375.0, 375.0, 375.0, 2.0],
            stiffness_lo: [200.0, 200.0, 200.0, 2.0],
            stiffness_hi: [1500.0, 1500.0, 1500.0, 10.0],
            horizon: [8.0, 15.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..4 {
            if !(0.0 <= self.damping_lo[i] && self.damping_lo[i] <= self.damping_hi[i]) {
                return Err(Error::Config(format!("human damping bounds invalid at {i}")));
            }
            if !(0.0 <= self.stiffness_lo[i] && self.stiffness_lo[i] <= self.stiffness_hi[i]) {
                return Err(Error::Config(format!("human stiffness bounds invalid at {i}")));
            }
        }
        if !(self.horizon[0] > 0.0 && self.horizon[0] <= self.horizon[1]) {
            return Err(Error::Config("human.horizon must be a positive range".into()));
        }
        Ok(())
    }
}

/// Diagonal gains of the admittance law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmittanceParams {
    /// Virtual inertia (kg ×3, kg·m²).
    pub mass: Diag4,
    /// Virtual damping (kg/s ×3, N·m·s/rad).
    pub damping: Diag4,
    /// Virtual stiffness (N/m ×3, N·m/rad).
    pub stiffness: Diag4,
}

impl Default for AdmittanceParams {
    fn default() -> Self {
        Self { mass: [0.5, 0.5, 0.5, 0.1], damping: [12.5, 12.5, 12.5, 1.5], stiffness: [1.5, 1.5, 1.5, 4.5] }
    }
}

impl AdmittanceParams {
    pub fn validate(&self) -> Result<()> {
        for i in 0..4 {
            if !(self.mass[i] > 0.0) {
                return Err(Error::Config(format!("admittance.mass[{i}] must be positive")));
            }
            if self.damping[i] < 0.0 || self.stiffness[i] < 0.0 {
                return Err(Error::Config(format!("admittance gains at {i} must be nonnegative")));
            }
        }
        Ok(())
    }
}

/// Network and optimizer settings for the policy and value function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub hidden: usize,
    pub log_std_init: f64,
    /// Floor for the policy log standard deviation.
    pub log_std_min: f64,
    pub lr_policy: f64,
    pub lr_value: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub clip_eps: f64,
    /// Global gradient-norm cap per minibatch step.
    pub max_grad_norm: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            log_std_init: 0.3f64.ln(),
            log_std_min: -3.5,
            lr_policy: 3e-4,
            lr_value: 1e-3,
            epochs: 10,
            minibatch: 256,
            gamma: 0.99,
            lambda: 0.95,
            clip_eps: 0.2,
            max_grad_norm: 0.5,
        }
    }
}

/// Source of guidance in the policy guidance step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuidanceMode {
    /// Admittance controller only.
    GuidePolicy,
    /// Demonstration pairs only.
    Demos,
    /// Admittance controller and demonstrations.
    Both,
    /// Plain PPO.
    None,
}

impl GuidanceMode {
    pub fn uses_guide(self) -> bool {
        matches!(self, Self::GuidePolicy | Self::Both)
    }

    pub fn uses_demos(self) -> bool {
        matches!(self, Self::Demos | Self::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::GuidePolicy => "guide_policy",
            Self::Demos => "demos",
            Self::Both => "both",
            Self::None => "none",
        }
    }
}

impl FromStr for GuidanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "guide_policy" | "guide" | "pi_h" => Ok(Self::GuidePolicy),
            "demos" | "demo" => Ok(Self::Demos),
            "both" => Ok(Self::Both),
            "none" | "ppo" => Ok(Self::None),
            other => Err(Error::Config(format!("unknown guidance mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for GuidanceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Guidance-step settings and the δ schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuidanceConfig {
    pub mode: GuidanceMode,
    /// Upper clip margin on the guidance likelihood ratio.
    pub delta: f64,
    /// Geometric decay factor applied after `decay_onset`.
    pub alpha: f64,
    /// Iteration index after which δ starts decaying.
    pub decay_onset: usize,
    pub epochs: usize,
    /// Guidance is skipped once δ falls below this value.
    pub min_delta: f64,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self { mode: GuidanceMode::Both, delta: 0.5, alpha: 0.9, decay_onset: 20, epochs: 5, min_delta: 1e-3 }
    }
}

impl GuidanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0) {
            return Err(Error::Config("guidance.delta must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config("guidance.alpha must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Outer training loop and evaluation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub iterations: usize,
    pub trajectories_per_iteration: usize,
    /// Successful admittance episodes to collect as demonstrations.
    pub demo_episodes: usize,
    /// Maximum attempts when collecting demonstrations.
    pub demo_attempt_budget: usize,
    pub eval_trials: usize,
    pub seed: u64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            iterations: 75,
            trajectories_per_iteration: 20,
            demo_episodes: 10,
            demo_attempt_budget: 200,
            eval_trials: 50,
            seed: 0,
        }
    }
}

/// Live-session settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollabConfig {
    /// Virtual coupling stiffness (N/m).
    pub k_ui: f64,
    /// Virtual coupling damping (kg/s).
    pub d_ui: f64,
    /// Coupling torque stiffness about Y (N·m/rad).
    pub k_ui_rot: f64,
    /// Coupling torque damping about Y (N·m·s/rad).
    pub d_ui_rot: f64,
    /// Saturation of the coupling force norm (N).
    pub force_max: f64,
    /// Saturation of the coupling torque (N·m).
    pub torque_max: f64,
    /// State broadcasts per second; physics runs at 1/dt.
    pub broadcast_hz: f64,
    /// Default insertion feed rate of the cursor target (m/s).
    pub feed_rate: f64,
    /// How long a disconnected session stays resumable (s).
    pub grace_period: f64,
    pub bind: String,
}

impl Default for CollabConfig {
    fn default() -> Self {
        Self {
            k_ui: 200.0,
            d_ui: 20.0,
            k_ui_rot: 6.0,
            d_ui_rot: 1.0,
            force_max: 40.0,
            torque_max: 4.0,
            broadcast_hz: 30.0,
            feed_rate: 0.02,
            grace_period: 30.0,
            bind: "127.0.0.1:8787".into(),
        }
    }
}

impl CollabConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_ui > 0.0 && self.d_ui > 0.0 && self.k_ui_rot > 0.0 && self.d_ui_rot > 0.0) {
            return Err(Error::Config("coupling gains must be positive".into()));
        }
        if !(self.force_max > 0.0 && self.torque_max > 0.0) {
            return Err(Error::Config("coupling saturation must be positive".into()));
        }
        if !(self.broadcast_hz >= 30.0) {
            return Err(Error::Config("collab.broadcast_hz must be at least 30".into()));
        }
        if !(self.feed_rate >= 0.0 && self.grace_period >= 0.0) {
            return Err(Error::Config("collab.feed_rate and collab.grace_period must be nonnegative".into()));
        }
        Ok(())
    }
}

/// The whole configuration file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub env: EnvParams,
    pub geometry: Geometry,
    pub human: HumanBounds,
    pub admittance: AdmittanceParams,
    pub ppo: PpoConfig,
    pub guidance: GuidanceConfig,
    pub train: TrainSettings,
    pub collab: CollabConfig,
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.geometry.validate()?;
        self.human.validate()?;
        self.admittance.validate()?;
        self.guidance.validate()?;
        self.collab.validate()?;
        if self.train.iterations == 0 {
            return Err(Error::Config("train.iterations must be at least 1".into()));
        }
        if self.train.trajectories_per_iteration == 0 {
            return Err(Error::Config("train.trajectories_per_iteration must be at least 1".into()));
        }
        if self.ppo.minibatch == 0 || self.ppo.hidden == 0 {
            return Err(Error::Config("ppo.minibatch and ppo.hidden must be positive".into()));
        }
        if !(self.ppo.log_std_min >= -5.0 && self.ppo.log_std_min <= self.ppo.log_std_init) {
            return Err(Error::Config("ppo.log_std_min must lie in [-5, log_std_init]".into()));
        }
        if !(self.ppo.max_grad_norm > 0.0)
            || !(0.0..=1.0).contains(&self.ppo.gamma)
            || !(0.0..=1.0).contains(&self.ppo.lambda)
        {
            return Err(Error::Config("ppo.max_grad_norm must be positive, gamma and lambda in [0, 1]".into()));
        }
        Ok(())
    }
}
