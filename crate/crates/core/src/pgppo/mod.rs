//! Policy-guided PPO: a clipped policy-improvement step followed by a guidance
//! step that pulls the policy toward the admittance controller and/or
//! demonstrations, with a decaying trust bound δ.

pub mod checkpoint;
pub mod policy;
pub mod update;

pub use checkpoint::{Architecture, Checkpoint, CHECKPOINT_VERSION};
pub use policy::{gaussian_logprob, GaussianPolicy, PolicyEval, ACT_DIM};
pub use update::{
    clipped_objective, compute_gae, decay_delta, guidance_objective, guidance_step, ppo_improve, reference_logprobs,
    value_fit, GuidanceStats, GuideSet, PpoStats, Transition,
};
