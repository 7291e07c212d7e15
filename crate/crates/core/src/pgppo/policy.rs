//! Diagonal Gaussian policy over normalized velocity commands.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::nn::{Mlp, MlpCache};
use crate::sim::OBS_DIM;
use crate::types::DOF;

pub const ACT_DIM: usize = DOF;
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 1.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Mean from an MLP, state-independent log standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPolicy {
    pub net: Mlp,
    pub log_std: [f64; ACT_DIM],
    /// Lower clamp applied to `log_std` after every update.
    pub log_std_min: f64,
}

/// Forward results for a batch, reusable for the gradient.
pub struct PolicyEval {
    pub logprob: Array1<f64>,
    pub mean: Array2<f64>,
    cache: MlpCache,
}

pub fn gaussian_logprob(mean: &[f64], log_std: &[f64; ACT_DIM], action: &[f64]) -> f64 {
    let mut lp = 0.0;
    for j in 0..ACT_DIM {
        let z = (action[j] - mean[j]) / log_std[j].exp();
        lp += -0.5 * z * z - log_std[j] - HALF_LN_2PI;
    }
    lp
}

impl GaussianPolicy {
    pub fn new<R: Rng + ?Sized>(hidden: usize, log_std_init: f64, rng: &mut R) -> Self {
        Self {
            net: Mlp::new(&[OBS_DIM, hidden, hidden, ACT_DIM], 0.01, rng),
            log_std: [log_std_init.clamp(LOG_STD_MIN, LOG_STD_MAX); ACT_DIM],
            log_std_min: LOG_STD_MIN,
        }
    }

    pub fn mean(&self, obs: &[f64; OBS_DIM]) -> [f64; ACT_DIM] {
        let m = self.net.forward_one(obs);
        std::array::from_fn(|j| m[j])
    }

    pub fn logprob(&self, obs: &[f64; OBS_DIM], action: &[f64; ACT_DIM]) -> f64 {
        gaussian_logprob(&self.mean(obs), &self.log_std, action)
    }

    /// Draws an action and reports its exact log density.
    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64; OBS_DIM], rng: &mut R) -> ([f64; ACT_DIM], f64) {
        let mean = self.mean(obs);
        let action: [f64; ACT_DIM] = std::array::from_fn(|j| {
            let eps: f64 = rng.sample(StandardNormal);
            mean[j] + self.log_std[j].exp() * eps
        });
        (action, gaussian_logprob(&mean, &self.log_std, &action))
    }

    pub fn evaluate(&self, obs: ArrayView2<f64>, actions: ArrayView2<f64>) -> PolicyEval {
        let (mean, cache) = self.net.forward_cached(obs);
        let logprob = Array1::from_iter(
            mean.rows()
                .into_iter()
                .zip(actions.rows())
                .map(|(m, a)| gaussian_logprob(&m.to_vec(), &self.log_std, &a.to_vec())),
        );
        PolicyEval { logprob, mean, cache }
    }

    /// Gradient of `Σ_i weights[i] · log π(a_i | s_i)` in flat-parameter layout.
    pub fn weighted_grad(&self, eval: &PolicyEval, actions: ArrayView2<f64>, weights: &[f64]) -> Vec<f64> {
        let var: [f64; ACT_DIM] = std::array::from_fn(|j| (2.0 * self.log_std[j]).exp());
        let mut dmean = Array2::zeros(eval.mean.raw_dim());
        let mut dls = [0.0; ACT_DIM];
        for (i, w) in weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            for j in 0..ACT_DIM {
                let diff = actions[[i, j]] - eval.mean[[i, j]];
                dmean[[i, j]] = w * diff / var[j];
                dls[j] += w * (diff * diff / var[j] - 1.0);
            }
        }
        let mut grad = self.net.backward(&eval.cache, dmean.view());
        grad.extend_from_slice(&dls);
        grad
    }

    /// Log density of one pair and its gradient with respect to all parameters.
    pub fn logprob_grad(&self, obs: &[f64; OBS_DIM], action: &[f64; ACT_DIM]) -> (f64, Vec<f64>) {
        let o = ArrayView2::from_shape((1, OBS_DIM), obs).unwrap();
        let a = ArrayView2::from_shape((1, ACT_DIM), action).unwrap();
        let ev = self.evaluate(o, a);
        let g = self.weighted_grad(&ev, a, &[1.0]);
        (ev.logprob[0], g)
    }

    pub fn n_params(&self) -> usize {
        self.net.n_params() + ACT_DIM
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.net.params.clone();
        v.extend_from_slice(&self.log_std);
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let n = self.net.n_params();
        self.net.params.copy_from_slice(&flat[..n]);
        self.log_std.copy_from_slice(&flat[n..]);
        for ls in &mut self.log_std {
            *ls = ls.clamp(self.log_std_min, LOG_STD_MAX);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.net.params.iter().chain(self.log_std.iter()).all(|v| v.is_finite())
    }
}
