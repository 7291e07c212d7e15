//! Demonstrations from successful admittance-control episodes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::episode::{admittance_controller, run_episode, EpisodeOptions};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::pgppo::{GuideSet, ACT_DIM};
use crate::sim::{ObsNormalizer, Status, OBS_DIM};
use crate::types::Twist4;

/// Episode seeds for demonstration attempts start here.
pub const DEMO_SEED_BASE: u64 = 2_000_000_000;

/// (state, action) pairs in normalized units, from successful episodes only.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DemoDataset {
    pub pairs: Vec<([f64; OBS_DIM], [f64; ACT_DIM])>,
    /// Seeds of the successful episodes the pairs came from.
    pub episode_seeds: Vec<u64>,
    pub attempts: usize,
}

impl DemoDataset {
    pub fn guide_set(&self) -> GuideSet {
        GuideSet::new(&self.pairs)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

pub fn action_scale(cfg: &Config) -> [f64; ACT_DIM] {
    [cfg.env.v_max, cfg.env.v_max, cfg.env.v_max, cfg.env.w_max]
}

pub fn normalize_action(cmd: &Twist4, scale: &[f64; ACT_DIM]) -> [f64; ACT_DIM] {
    let c = cmd.to_array();
    std::array::from_fn(|j| c[j] / scale[j])
}

pub fn denormalize_action(u: &[f64; ACT_DIM], scale: &[f64; ACT_DIM]) -> Twist4 {
    Twist4::from_array(std::array::from_fn(|j| u[j] * scale[j]))
}

/// Runs the admittance controller with simulated operators until `n_success`
/// episodes succeed, keeping only those episodes' pairs.
pub fn collect_demos(cfg: &Config, n_success: usize, seed: u64) -> Result<DemoDataset> {
    if n_success == 0 {
        return Err(Error::Usage("demonstration count must be at least 1".into()));
    }
    let normalizer = ObsNormalizer::new(&cfg.env, &cfg.geometry);
    let scale = action_scale(cfg);
    let mut ac = admittance_controller(cfg);
    let mut data = DemoDataset::default();
    let base = DEMO_SEED_BASE.wrapping_add(seed.wrapping_mul(100_000));
    while data.episode_seeds.len() < n_success {
        if data.attempts >= cfg.train.demo_attempt_budget {
            return Err(Error::DemoBudgetExceeded {
                requested: n_success,
                successes: data.episode_seeds.len(),
                attempts: data.attempts,
            });
        }
        let ep_seed = base.wrapping_add(data.attempts as u64);
        data.attempts += 1;
        let ep = run_episode(cfg, ep_seed, &mut ac, EpisodeOptions { record_pairs: true, ..Default::default() })?;
        if ep.status == Status::Success {
            data.episode_seeds.push(ep_seed);
            data.pairs.extend(ep.pairs.iter().map(|(o, a)| (normalizer.normalize(o), normalize_action(a, &scale))));
        }
    }
    Ok(data)
}
