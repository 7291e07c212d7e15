//! The outer PGPPO loop: collect, improve, guide, fit values, decay δ.

use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::demos::{action_scale, denormalize_action, normalize_action, DemoDataset};
use super::episode::{limits, start_episode, step_with_human};
use crate::admittance::pi_h;
use crate::config::{Config, GuidanceMode};
use crate::error::{Error, Result};
use crate::nn::{Adam, Mlp};
use crate::pgppo::{
    compute_gae, decay_delta, guidance_step, ppo_improve, value_fit, Architecture, Checkpoint, GaussianPolicy,
    GuidanceStats, GuideSet, PpoStats, Transition, ACT_DIM, CHECKPOINT_VERSION,
};
use crate::sim::{ObsNormalizer, Status, OBS_DIM};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningCurveRecord {
    pub iteration: usize,
    /// Mean undiscounted episode return over the iteration's rollouts.
    pub mean_return: f64,
    pub success_fraction: f64,
    /// δ in force during this iteration.
    pub delta: f64,
    /// Seconds since training started.
    pub wall_time: f64,
    pub mean_length: f64,
    /// Policy log standard deviation after the iteration.
    pub log_std: [f64; ACT_DIM],
    pub ppo: PpoStats,
    pub guidance: GuidanceStats,
}

pub fn write_curve(path: impl AsRef<Path>, records: &[LearningCurveRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Outcome of one collected rollout.
#[derive(Clone, Debug)]
pub struct Rollout {
    pub transitions: Vec<Transition>,
    pub status: Status,
    pub total_reward: f64,
}

/// Stateful trainer; `iterate` runs one outer iteration.
pub struct Trainer {
    pub cfg: Config,
    pub mode: GuidanceMode,
    pub policy: GaussianPolicy,
    pub value: Mlp,
    pub policy_opt: Adam,
    pub guide_opt: Adam,
    pub value_opt: Adam,
    pub normalizer: ObsNormalizer,
    pub action_scale: [f64; ACT_DIM],
    pub delta: f64,
    pub iteration: usize,
    pub rng: ChaCha8Rng,
    pub demos: GuideSet,
    pub records: Vec<LearningCurveRecord>,
    started: Instant,
}

impl Trainer {
    pub fn new(cfg: &Config, demos: Option<&DemoDataset>) -> Result<Self> {
        cfg.validate()?;
        let mode = cfg.guidance.mode;
        let demos = demos.map(DemoDataset::guide_set).unwrap_or_default();
        if mode.uses_demos() && demos.is_empty() {
            return Err(Error::Config(format!("guidance mode {mode} needs demonstrations")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
        let h = cfg.ppo.hidden;
        let mut policy = GaussianPolicy::new(h, cfg.ppo.log_std_init, &mut rng);
        policy.log_std_min = cfg.ppo.log_std_min;
        let value = Mlp::new(&[OBS_DIM, h, h, 1], 1.0, &mut rng);
        Ok(Self {
            mode,
            policy_opt: Adam::new(policy.n_params(), cfg.ppo.lr_policy),
            guide_opt: Adam::new(policy.n_params(), cfg.ppo.lr_policy),
            value_opt: Adam::new(value.n_params(), cfg.ppo.lr_value),
            policy,
            value,
            normalizer: ObsNormalizer::new(&cfg.env, &cfg.geometry),
            action_scale: action_scale(cfg),
            delta: cfg.guidance.delta,
            iteration: 0,
            rng,
            demos,
            records: Vec::new(),
            started: Instant::now(),
            cfg: cfg.clone(),
        })
    }

    /// One stochastic episode under the current policy, with values and
    /// advantages filled in.
    pub fn rollout(&mut self, seed: u64) -> Result<Rollout> {
        let cfg = &self.cfg;
        let (mut env, human, mut obs) = start_episode(cfg, seed)?;
        let start = env.state().start_pose;
        let lim = limits(cfg);
        let mut transitions = Vec::new();
        let mut total_reward = 0.0;
        loop {
            let on = self.normalizer.normalize(&obs);
            let (u, logprob) = self.policy.sample(&on, &mut self.rng);
            let guide = self.mode.uses_guide().then(|| {
                let g = pi_h(&obs, &start, &cfg.admittance, cfg.env.dt, lim);
                normalize_action(&g, &self.action_scale)
            });
            let out = step_with_human(&mut env, &human, denormalize_action(&u, &self.action_scale))?;
            total_reward += out.reward;
            transitions.push(Transition {
                obs: on,
                action: u,
                logprob,
                reward: out.reward,
                value: 0.0,
                advantage: 0.0,
                return_to_go: 0.0,
                terminal: out.status.is_terminal(),
                guide,
            });
            obs = out.obs;
            if out.status.is_terminal() {
                break;
            }
        }
        let states = crate::pgppo::update::stack(transitions.iter().map(|t| t.obs));
        let values = self.value.forward(states.view());
        for (t, v) in transitions.iter_mut().zip(values.column(0)) {
            t.value = *v;
        }
        compute_gae(&mut transitions, cfg.ppo.gamma, cfg.ppo.lambda, 0.0)?;
        Ok(Rollout { transitions, status: env.status(), total_reward })
    }

    pub fn collect(&mut self) -> Result<Vec<Rollout>> {
        (0..self.cfg.train.trajectories_per_iteration)
            .map(|_| {
                let seed: u64 = self.rng.random();
                self.rollout(seed)
            })
            .collect()
    }

    pub fn iterate(&mut self) -> Result<&LearningCurveRecord> {
        let k = self.iteration + 1;
        self.delta = decay_delta(self.delta, self.cfg.guidance.alpha, k, self.cfg.guidance.decay_onset);
        let rollouts = self.collect()?;
        let n_traj = rollouts.len() as f64;
        let mean_return = rollouts.iter().map(|r| r.total_reward).sum::<f64>() / n_traj;
        let success_fraction = rollouts.iter().filter(|r| r.status == Status::Success).count() as f64 / n_traj;
        let batch: Vec<Transition> = rollouts.into_iter().flat_map(|r| r.transitions).collect();

        let ppo = ppo_improve(&mut self.policy, &mut self.policy_opt, &batch, &self.cfg.ppo, &mut self.rng);
        let guidance = if self.mode != GuidanceMode::None && self.delta >= self.cfg.guidance.min_delta {
            let rollout_set = GuideSet::from_rollouts(&batch);
            guidance_step(
                &mut self.policy,
                &mut self.guide_opt,
                self.mode,
                &rollout_set,
                &self.demos,
                self.delta,
                self.cfg.guidance.epochs,
                &self.cfg.ppo,
                &mut self.rng,
            )?
        } else {
            GuidanceStats { skipped: true, ..Default::default() }
        };

        let states = crate::pgppo::update::stack(batch.iter().map(|t| t.obs));
        let returns: Vec<f64> = batch.iter().map(|t| t.return_to_go).collect();
        value_fit(
            &mut self.value,
            &mut self.value_opt,
            &states,
            &returns,
            self.cfg.ppo.epochs,
            self.cfg.ppo.minibatch,
            &mut self.rng,
        );
        if !self.policy.is_finite() || !self.value.params.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("parameters became non-finite at iteration {k}")));
        }

        self.iteration = k;
        self.records.push(LearningCurveRecord {
            iteration: k,
            mean_return,
            success_fraction,
            delta: self.delta,
            wall_time: self.started.elapsed().as_secs_f64(),
            mean_length: batch.len() as f64 / n_traj,
            log_std: self.policy.log_std,
            ppo,
            guidance,
        });
        Ok(self.records.last().unwrap())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            arch: Architecture { obs_dim: OBS_DIM, act_dim: ACT_DIM, hidden: self.cfg.ppo.hidden },
            mode: self.mode,
            iteration: self.iteration,
            delta: self.delta,
            policy: self.policy.clone(),
            value: self.value.clone(),
            normalizer: self.normalizer.clone(),
            action_scale: self.action_scale,
            rng: self.rng.clone(),
        }
    }
}

/// Full training run as configured; `on_iteration` sees every record.
pub fn train(
    cfg: &Config,
    demos: Option<&DemoDataset>,
    mut on_iteration: impl FnMut(&LearningCurveRecord),
) -> Result<(Checkpoint, Vec<LearningCurveRecord>)> {
    let mut trainer = Trainer::new(cfg, demos)?;
    for _ in 0..cfg.train.iterations {
        on_iteration(trainer.iterate()?);
    }
    Ok((trainer.checkpoint(), trainer.records))
}

/// Stacked normalized states of a batch.
pub fn batch_states(batch: &[Transition]) -> Array2<f64> {
    crate::pgppo::update::stack(batch.iter().map(|t| t.obs))
}
