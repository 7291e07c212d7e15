//! Board–frame–sensor simulation.

pub mod contact;
pub mod env;
pub mod geometry;
pub mod log;
pub mod obs;
pub mod reward;
pub mod sensor;

pub use contact::{contact_forces, Contact, Surface};
pub use env::{Env, EnvState, StepOutcome};
pub use log::StepRecord;
pub use obs::{ObsNormalizer, Observation, OBS_DIM};
pub use reward::{check_termination, normalized_wrench_norm, reward, Status};
pub use sensor::{grasp_point, ideal_wrench, sensor_read, HumanLoad, SensorNoise};
