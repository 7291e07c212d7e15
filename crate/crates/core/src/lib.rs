//! Human-robot co-manipulated board insertion: a 4-DoF simulator with a
//! randomized operator model, an admittance-control baseline, and a
//! policy-guided PPO trainer that leans on the admittance controller and
//! demonstrations under a sparse success reward.

pub mod admittance;
pub mod collab;
pub mod config;
pub mod error;
pub mod harness;
pub mod human;
pub mod nn;
pub mod pgppo;
pub mod sim;
pub mod types;

pub use config::{AdmittanceParams, Config, EnvParams, Geometry, GuidanceConfig, GuidanceMode, HumanBounds};
pub use error::{Error, Result};
pub use types::{Pose4, Twist4, Wrench4};
