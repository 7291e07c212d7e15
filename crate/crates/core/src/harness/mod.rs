//! Experiment driver: episodes, demonstrations, training, evaluation, statistics.

pub mod demos;
pub mod episode;
pub mod eval;
pub mod stats;
pub mod train;

pub use demos::{action_scale, collect_demos, DemoDataset};
pub use episode::{run_episode, Controller, EpisodeOptions, EpisodeSummary};
pub use eval::{eval_seeds, evaluate, EvalReport, PolicyController};
pub use stats::{mann_whitney_u, Alternative, MannWhitney};
pub use train::{train, write_curve, LearningCurveRecord, Trainer};
