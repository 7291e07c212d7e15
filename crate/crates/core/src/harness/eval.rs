//! Evaluation protocol and report.

use serde::{Deserialize, Serialize};

use super::demos::denormalize_action;
use super::episode::{run_episode, Controller, EpisodeOptions, EpisodeSummary};
use crate::config::Config;
use crate::error::Result;
use crate::pgppo::{Checkpoint, GaussianPolicy, ACT_DIM};
use crate::sim::{ObsNormalizer, Observation, Status};
use crate::types::{Pose4, Twist4};

/// Evaluation episode seeds start here.
pub const EVAL_SEED_BASE: u64 = 1_000_000;

pub fn eval_seeds(n: usize, offset: u64) -> Vec<u64> {
    (0..n as u64).map(|i| EVAL_SEED_BASE + offset + i).collect()
}

/// Runs a trained policy with its mean action.
#[derive(Clone, Debug)]
pub struct PolicyController {
    pub policy: GaussianPolicy,
    pub normalizer: ObsNormalizer,
    pub action_scale: [f64; ACT_DIM],
}

impl PolicyController {
    pub fn from_checkpoint(ck: &Checkpoint) -> Self {
        Self { policy: ck.policy.clone(), normalizer: ck.normalizer.clone(), action_scale: ck.action_scale }
    }
}

impl Controller for PolicyController {
    fn begin(&mut self, _obs: &Observation, _start: &Pose4) {}

    fn act(&mut self, obs: &Observation) -> Result<Twist4> {
        let u = self.policy.mean(&self.normalizer.normalize(obs));
        Ok(denormalize_action(&u, &self.action_scale))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(v: &[f64]) -> Self {
        let n = v.len();
        if n == 0 {
            return Self::default();
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
        Self { n, mean, std }
    }
}

/// Shares of each failure cause among failed episodes (percent).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FailureCauses {
    pub force_pct: f64,
    pub torque_pct: f64,
    pub timeout_pct: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Over successful episodes (s).
    pub completion_time: Summary,
    pub failures: usize,
    pub failure_causes: FailureCauses,
    /// Time to first contact, over successful episodes that touched the frame (s).
    pub approach_duration: Summary,
    /// Success time minus first-contact time (s).
    pub insert_duration: Summary,
    /// Steps, across all episodes, whose reading exceeded a threshold without terminating.
    pub safety_breaches: usize,
    /// Every post-contact force norm (N), pooled across episodes.
    pub insert_force_norms: Vec<f64>,
    /// Every post-contact |τy| (N·m), pooled across episodes.
    pub insert_torque_norms: Vec<f64>,
}

impl EvalReport {
    pub fn from_episodes(episodes: &[EpisodeSummary]) -> Self {
        let n = episodes.len();
        let ok: Vec<&EpisodeSummary> = episodes.iter().filter(|e| e.status == Status::Success).collect();
        let count = |s: Status| episodes.iter().filter(|e| e.status == s).count();
        let failures = n - ok.len();
        let pct = |k: usize| if failures == 0 { 0.0 } else { 100.0 * k as f64 / failures as f64 };
        let times: Vec<f64> = ok.iter().map(|e| e.duration).collect();
        let approach: Vec<f64> = ok.iter().filter_map(|e| e.first_contact_time).collect();
        let insert: Vec<f64> = ok.iter().filter_map(|e| e.first_contact_time.map(|c| e.duration - c)).collect();
        Self {
            n_trials: n,
            successes: ok.len(),
            success_rate: if n == 0 { 0.0 } else { ok.len() as f64 / n as f64 },
            completion_time: Summary::of(&times),
            failures,
            failure_causes: FailureCauses {
                force_pct: pct(count(Status::ViolationForce)),
                torque_pct: pct(count(Status::ViolationTorque)),
                timeout_pct: pct(count(Status::Timeout)),
            },
            approach_duration: Summary::of(&approach),
            insert_duration: Summary::of(&insert),
            safety_breaches: episodes.iter().map(|e| e.premature_violations).sum(),
            insert_force_norms: episodes.iter().flat_map(|e| e.insert_force_norms.iter().copied()).collect(),
            insert_torque_norms: episodes.iter().flat_map(|e| e.insert_torque_norms.iter().copied()).collect(),
        }
    }

    /// One-line human-readable summary.
    pub fn headline(&self) -> String {
        format!(
            "success {:.1}% ({}/{}), time {:.2} ± {:.2} s, failures F {:.0}% / T {:.0}% / timeout {:.0}%",
            100.0 * self.success_rate,
            self.successes,
            self.n_trials,
            self.completion_time.mean,
            self.completion_time.std,
            self.failure_causes.force_pct,
            self.failure_causes.torque_pct,
            self.failure_causes.timeout_pct,
        )
    }
}

/// Runs one episode per seed and assembles the report.
pub fn evaluate(
    cfg: &Config,
    controller: &mut dyn Controller,
    seeds: &[u64],
    opts: EpisodeOptions,
) -> Result<(EvalReport, Vec<EpisodeSummary>)> {
    let episodes = seeds.iter().map(|&s| run_episode(cfg, s, controller, opts)).collect::<Result<Vec<_>>>()?;
    Ok((EvalReport::from_episodes(&episodes), episodes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ep(status: Status, duration: f64, contact: Option<f64>) -> EpisodeSummary {
        EpisodeSummary {
            seed: 0,
            status,
            duration,
            first_contact_time: contact,
            steps: 0,
            total_reward: 0.0,
            insert_force_norms: vec![],
            insert_torque_norms: vec![],
            premature_violations: 0,
            log: vec![],
            pairs: vec![],
        }
    }

    #[test]
    fn rates_and_causes() {
        let mut eps: Vec<_> = (0..8).map(|_| ep(Status::Success, 10.0, None)).collect();
        eps.push(ep(Status::ViolationTorque, 4.0, Some(3.0)));
        eps.push(ep(Status::Timeout, 30.0, None));
        let r = EvalReport::from_episodes(&eps);
        assert!((r.success_rate - 0.8).abs() < 1e-15);
        assert_eq!(r.failures, 2);
        assert_eq!(r.failure_causes.torque_pct, 50.0);
        assert_eq!(r.failure_causes.timeout_pct, 50.0);
        assert_eq!(r.failure_causes.force_pct, 0.0);
        assert_eq!(r.completion_time.mean, 10.0);
        assert_eq!(r.completion_time.n, 8);
    }

    #[test]
    fn phase_split() {
        let r = EvalReport::from_episodes(&[ep(Status::Success, 14.27, Some(6.2))]);
        assert!((r.approach_duration.mean - 6.2).abs() < 1e-12);
        assert!((r.insert_duration.mean - 8.07).abs() < 1e-12);
    }
}
