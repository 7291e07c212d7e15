//! Versioned JSON checkpoints of a trained policy.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::policy::{GaussianPolicy, ACT_DIM};
use crate::config::GuidanceMode;
use crate::error::{Error, Result};
use crate::nn::Mlp;
use crate::sim::{ObsNormalizer, OBS_DIM};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub hidden: usize,
}

/// Everything needed to run or resume a policy.
///
/// `action_scale` maps normalized actions to velocity commands
/// (m/s ×3, rad/s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub arch: Architecture,
    pub mode: GuidanceMode,
    pub iteration: usize,
    pub delta: f64,
    pub policy: GaussianPolicy,
    pub value: Mlp,
    pub normalizer: ObsNormalizer,
    pub action_scale: [f64; ACT_DIM],
    pub rng: ChaCha8Rng,
}

impl Checkpoint {
    pub fn validate(&self) -> Result<()> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        let h = self.arch.hidden;
        let want_policy = [OBS_DIM, h, h, ACT_DIM];
        let want_value = [OBS_DIM, h, h, 1];
        if self.arch.obs_dim != OBS_DIM || self.arch.act_dim != ACT_DIM {
            return Err(Error::Checkpoint("observation/action dimensions do not match".into()));
        }
        if self.policy.net.sizes != want_policy || self.policy.net.n_params() != Mlp::count(&want_policy) {
            return Err(Error::Checkpoint("policy network shape does not match the header".into()));
        }
        if self.value.sizes != want_value || self.value.n_params() != Mlp::count(&want_value) {
            return Err(Error::Checkpoint("value network shape does not match the header".into()));
        }
        if !self.policy.is_finite() || !self.value.params.iter().all(|v| v.is_finite()) {
            return Err(Error::Checkpoint("non-finite parameters".into()));
        }
        if self.normalizer.scale.iter().any(|s| !(*s > 0.0)) || self.action_scale.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Checkpoint("scales must be positive".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(s).map_err(|e| Error::Checkpoint(e.to_string()))?;
        ck.validate()?;
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
