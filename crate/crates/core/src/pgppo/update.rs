//! Advantage estimation, the clipped improvement step, the guidance step and
//! value regression.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::policy::{GaussianPolicy, ACT_DIM};
use crate::config::{GuidanceMode, PpoConfig};
use crate::error::{Error, Result};
use crate::nn::{clip_grad_norm, Adam, Mlp};
use crate::sim::OBS_DIM;

/// One environment step as seen by the learner (normalized units).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: [f64; OBS_DIM],
    pub action: [f64; ACT_DIM],
    pub logprob: f64,
    pub reward: f64,
    pub value: f64,
    pub advantage: f64,
    pub return_to_go: f64,
    pub terminal: bool,
    /// Guide action for this state, when a guide policy is available.
    pub guide: Option<[f64; ACT_DIM]>,
}

/// Generalized advantage estimation over one trajectory, backward in time.
///
/// `bootstrap` is the value after the last step when that step is not terminal.
pub fn compute_gae(traj: &mut [Transition], gamma: f64, lambda: f64, bootstrap: f64) -> Result<()> {
    if traj.is_empty() {
        return Err(Error::Domain("advantage estimation needs a nonempty trajectory".into()));
    }
    let mut next_value = bootstrap;
    let mut gae = 0.0;
    for tr in traj.iter_mut().rev() {
        let (nv, carry) = if tr.terminal { (0.0, 0.0) } else { (next_value, gamma * lambda * gae) };
        let delta = tr.reward + gamma * nv - tr.value;
        gae = delta + carry;
        tr.advantage = gae;
        tr.return_to_go = gae + tr.value;
        next_value = tr.value;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PpoStats {
    pub mean_ratio: f64,
    pub surrogate: f64,
    pub clip_fraction: f64,
    pub aborted: bool,
}

pub(crate) fn stack<const N: usize>(rows: impl ExactSizeIterator<Item = [f64; N]>) -> Array2<f64> {
    let n = rows.len();
    let mut flat = Vec::with_capacity(n * N);
    for r in rows {
        flat.extend_from_slice(&r);
    }
    Array2::from_shape_vec((n, N), flat).unwrap()
}

fn select(a: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    a.select(ndarray::Axis(0), idx)
}

/// Per-sample clipped surrogate and its derivative with respect to the log ratio.
pub fn clipped_objective(ratio: f64, advantage: f64, eps: f64) -> (f64, f64) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * advantage;
    if unclipped <= clipped {
        (unclipped, unclipped)
    } else {
        (clipped, 0.0)
    }
}

fn apply_step(policy: &mut GaussianPolicy, opt: &mut Adam, mut grad: Vec<f64>, max_norm: f64) -> bool {
    if !grad.iter().all(|g| g.is_finite()) {
        return false;
    }
    clip_grad_norm(&mut grad, max_norm);
    let mut flat = policy.flat();
    opt.step(&mut flat, &grad);
    policy.set_flat(&flat);
    policy.is_finite()
}

/// Clipped-surrogate ascent from θ_k over `batch`; restores θ_k if anything
/// goes non-finite.
pub fn ppo_improve<R: Rng + ?Sized>(
    policy: &mut GaussianPolicy,
    opt: &mut Adam,
    batch: &[Transition],
    cfg: &PpoConfig,
    rng: &mut R,
) -> PpoStats {
    let n = batch.len();
    if n == 0 {
        return PpoStats { mean_ratio: 1.0, ..Default::default() };
    }
    let obs = stack(batch.iter().map(|t| t.obs));
    let act = stack(batch.iter().map(|t| t.action));
    let old_lp = policy.evaluate(obs.view(), act.view()).logprob;
    let mean = batch.iter().map(|t| t.advantage).sum::<f64>() / n as f64;
    let var = batch.iter().map(|t| (t.advantage - mean).powi(2)).sum::<f64>() / n as f64;
    let adv: Vec<f64> = batch.iter().map(|t| (t.advantage - mean) / (var.sqrt() + 1e-8)).collect();

    let snapshot = (policy.clone(), opt.clone());
    let mut idx: Vec<usize> = (0..n).collect();
    let (mut ratio_sum, mut obj_sum, mut clipped, mut count) = (0.0, 0.0, 0usize, 0usize);
    for _ in 0..cfg.epochs {
        idx.shuffle(rng);
        for chunk in idx.chunks(cfg.minibatch) {
            let o = select(&obs, chunk);
            let a = select(&act, chunk);
            let ev = policy.evaluate(o.view(), a.view());
            let m = chunk.len() as f64;
            let mut weights = Vec::with_capacity(chunk.len());
            let mut obj = 0.0;
            for (r, &i) in chunk.iter().enumerate() {
                let ratio = (ev.logprob[r] - old_lp[i]).exp();
                let (value, dlp) = clipped_objective(ratio, adv[i], cfg.clip_eps);
                obj += value;
                ratio_sum += ratio;
                if (ratio - 1.0).abs() > cfg.clip_eps {
                    clipped += 1;
                }
                weights.push(-dlp / m);
            }
            count += chunk.len();
            obj_sum += obj;
            let grad = policy.weighted_grad(&ev, a.view(), &weights);
            if !obj.is_finite() || !apply_step(policy, opt, grad, cfg.max_grad_norm) {
                (*policy, *opt) = snapshot;
                return PpoStats { aborted: true, ..Default::default() };
            }
        }
    }
    let c = count.max(1) as f64;
    PpoStats { mean_ratio: ratio_sum / c, surrogate: obj_sum / c, clip_fraction: clipped as f64 / c, aborted: false }
}

/// States with target actions for the guidance step.
#[derive(Clone, Debug, PartialEq)]
pub struct GuideSet {
    pub obs: Array2<f64>,
    pub actions: Array2<f64>,
}

impl Default for GuideSet {
    fn default() -> Self {
        Self { obs: Array2::zeros((0, OBS_DIM)), actions: Array2::zeros((0, ACT_DIM)) }
    }
}

impl GuideSet {
    pub fn new(pairs: &[([f64; OBS_DIM], [f64; ACT_DIM])]) -> Self {
        Self { obs: stack(pairs.iter().map(|p| p.0)), actions: stack(pairs.iter().map(|p| p.1)) }
    }

    /// Rollout states paired with their stored guide actions.
    pub fn from_rollouts(batch: &[Transition]) -> Self {
        let pairs: Vec<_> = batch.iter().filter_map(|t| t.guide.map(|g| (t.obs, g))).collect();
        Self::new(&pairs)
    }

    pub fn len(&self) -> usize {
        self.obs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Mean of `min(π_θ(a|s) / π_ref(a|s), 1 + δ)` over the given rows, and its gradient.
fn ratio_objective(
    policy: &GaussianPolicy,
    obs: ArrayView2<f64>,
    actions: ArrayView2<f64>,
    ref_lp: &[f64],
    delta: f64,
) -> (f64, Vec<f64>) {
    let n = ref_lp.len();
    if n == 0 {
        return (0.0, vec![0.0; policy.n_params()]);
    }
    let ev = policy.evaluate(obs, actions);
    let mut value = 0.0;
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let ratio = (ev.logprob[i] - ref_lp[i]).exp();
        if ratio < 1.0 + delta {
            value += ratio;
            weights.push(ratio / n as f64);
        } else {
            value += 1.0 + delta;
            weights.push(0.0);
        }
    }
    (value / n as f64, policy.weighted_grad(&ev, actions, &weights))
}

/// Reference log densities under θ_{k+1/2}.
pub fn reference_logprobs(policy: &GaussianPolicy, set: &GuideSet) -> Vec<f64> {
    policy.evaluate(set.obs.view(), set.actions.view()).logprob.to_vec()
}

/// Guidance objective for `mode`: F over rollout states, G over demonstration
/// pairs, their sum for `Both`. Returns the value and its gradient.
pub fn guidance_objective(
    policy: &GaussianPolicy,
    mode: GuidanceMode,
    rollout: (&GuideSet, &[f64]),
    demos: (&GuideSet, &[f64]),
    delta: f64,
) -> (f64, Vec<f64>) {
    let mut value = 0.0;
    let mut grad = vec![0.0; policy.n_params()];
    if mode.uses_guide() {
        let (v, g) = ratio_objective(policy, rollout.0.obs.view(), rollout.0.actions.view(), rollout.1, delta);
        value += v;
        grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    if mode.uses_demos() {
        let (v, g) = ratio_objective(policy, demos.0.obs.view(), demos.0.actions.view(), demos.1, delta);
        value += v;
        grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    (value, grad)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GuidanceStats {
    pub objective_before: f64,
    pub objective_after: f64,
    pub skipped: bool,
}

fn chunk_bounds(n: usize, parts: usize, b: usize) -> std::ops::Range<usize> {
    (b * n / parts)..((b + 1) * n / parts)
}

/// Ascent on the guidance objective from θ_{k+1/2} for a fixed number of epochs.
#[allow(clippy::too_many_arguments)]
pub fn guidance_step<R: Rng + ?Sized>(
    policy: &mut GaussianPolicy,
    opt: &mut Adam,
    mode: GuidanceMode,
    rollout: &GuideSet,
    demos: &GuideSet,
    delta: f64,
    epochs: usize,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<GuidanceStats> {
    if mode == GuidanceMode::None {
        return Ok(GuidanceStats { skipped: true, ..Default::default() });
    }
    if mode.uses_demos() && demos.is_empty() {
        return Err(Error::Config(format!("guidance mode {mode} needs a nonempty demonstration set")));
    }
    let empty = GuideSet::default();
    let rollout = if mode.uses_guide() { rollout } else { &empty };
    let demos = if mode.uses_demos() { demos } else { &empty };
    let ref_r = reference_logprobs(policy, rollout);
    let ref_d = reference_logprobs(policy, demos);
    let before = guidance_objective(policy, mode, (rollout, &ref_r), (demos, &ref_d), delta).0;

    let snapshot = (policy.clone(), opt.clone());
    let (nr, nd) = (rollout.len(), demos.len());
    let parts = nr.div_ceil(cfg.minibatch).max(nd.div_ceil(cfg.minibatch)).max(1);
    let mut ir: Vec<usize> = (0..nr).collect();
    let mut id: Vec<usize> = (0..nd).collect();
    for _ in 0..epochs {
        ir.shuffle(rng);
        id.shuffle(rng);
        for b in 0..parts {
            let cr = &ir[chunk_bounds(nr, parts, b)];
            let cd = &id[chunk_bounds(nd, parts, b)];
            let sub_r = GuideSet { obs: select(&rollout.obs, cr), actions: select(&rollout.actions, cr) };
            let sub_d = GuideSet { obs: select(&demos.obs, cd), actions: select(&demos.actions, cd) };
            let lr: Vec<f64> = cr.iter().map(|&i| ref_r[i]).collect();
            let ld: Vec<f64> = cd.iter().map(|&i| ref_d[i]).collect();
            let (value, grad) = guidance_objective(policy, mode, (&sub_r, &lr), (&sub_d, &ld), delta);
            let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
            if !value.is_finite() || !apply_step(policy, opt, neg, cfg.max_grad_norm) {
                (*policy, *opt) = snapshot;
                return Err(Error::NonFinite("guidance step diverged".into()));
            }
        }
    }
    let after = guidance_objective(policy, mode, (rollout, &ref_r), (demos, &ref_d), delta).0;
    Ok(GuidanceStats { objective_before: before, objective_after: after, skipped: false })
}

/// Mean squared error regression of the value net onto returns. Returns the
/// full-batch loss before the first epoch and after each epoch.
pub fn value_fit<R: Rng + ?Sized>(
    value: &mut Mlp,
    opt: &mut Adam,
    obs: &Array2<f64>,
    returns: &[f64],
    epochs: usize,
    minibatch: usize,
    rng: &mut R,
) -> Vec<f64> {
    let n = returns.len();
    let loss = |net: &Mlp| -> f64 {
        let out = net.forward(obs.view());
        out.column(0).iter().zip(returns).map(|(v, r)| (v - r).powi(2)).sum::<f64>() / n.max(1) as f64
    };
    let mut losses = vec![loss(value)];
    if n == 0 {
        return losses;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    for _ in 0..epochs {
        idx.shuffle(rng);
        for chunk in idx.chunks(minibatch) {
            let o = select(obs, chunk);
            let (out, cache) = value.forward_cached(o.view());
            let m = chunk.len() as f64;
            let dout = Array2::from_shape_fn((chunk.len(), 1), |(r, _)| 2.0 * (out[[r, 0]] - returns[chunk[r]]) / m);
            let grad = value.backward(&cache, dout.view());
            if grad.iter().all(|g| g.is_finite()) {
                opt.step(&mut value.params, &grad);
            }
        }
        losses.push(loss(value));
    }
    losses
}

/// δ ← αδ once the iteration index passes the onset.
pub fn decay_delta(delta: f64, alpha: f64, k: usize, onset: usize) -> f64 {
    if k > onset {
        alpha * delta
    } else {
        delta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tr(reward: f64, value: f64, terminal: bool) -> Transition {
        Transition {
            obs: [0.0; OBS_DIM],
            action: [0.0; ACT_DIM],
            logprob: 0.0,
            reward,
            value,
            advantage: 0.0,
            return_to_go: 0.0,
            terminal,
            guide: None,
        }
    }

    #[test]
    fn gae_base_cases() {
        let mut t = vec![tr(2.0, 0.5, true)];
        compute_gae(&mut t, 0.99, 0.95, 7.0).unwrap();
        assert_eq!(t[0].advantage, 1.5);
        let mut t = vec![tr(1.0, 0.5, false)];
        compute_gae(&mut t, 0.99, 0.95, 0.2).unwrap();
        assert!((t[0].advantage - 0.698).abs() < 1e-12);
        assert!((t[0].return_to_go - 1.198).abs() < 1e-12);
        assert!(compute_gae(&mut [], 0.99, 0.95, 0.0).is_err());
    }

    #[test]
    fn gae_with_zero_lambda_is_one_step_td() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let n = rng.random_range(1..30);
            let mut t: Vec<Transition> =
                (0..n).map(|i| tr(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), i + 1 == n)).collect();
            compute_gae(&mut t, 0.97, 0.0, 0.0).unwrap();
            for i in 0..n {
                let next = if i + 1 < n { t[i + 1].value } else { 0.0 };
                let td = t[i].reward + 0.97 * next - t[i].value;
                assert!((t[i].advantage - td).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn clipped_objective_cases() {
        let (v, d) = clipped_objective(1.5, 2.0, 0.2);
        assert!((v - 1.2 * 2.0).abs() < 1e-12 && d == 0.0);
        // min(0.5·A, 0.8·A) with A < 0 picks the clipped term
        let (v, d) = clipped_objective(0.5, -2.0, 0.2);
        assert!((v - 0.8 * -2.0).abs() < 1e-12 && d == 0.0);
        assert_eq!(clipped_objective(1.1, 3.0, 0.2).1, 1.1 * 3.0);
    }

    #[test]
    fn decay_schedule() {
        assert!((decay_delta(0.3, 0.9, 21, 20) - 0.27).abs() < 1e-15);
        assert_eq!(decay_delta(0.3, 0.9, 20, 20), 0.3);
        assert_eq!(decay_delta(0.3, 1.0, 500, 20), 0.3);
    }
}
