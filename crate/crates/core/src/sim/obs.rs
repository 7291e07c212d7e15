//! Observation vector `[x_r, ẋ_r, f_meas]` and its fixed affine normalization.

use serde::{Deserialize, Serialize};

use crate::config::{EnvParams, Geometry};
use crate::types::{Pose4, Twist4, Wrench4, DOF};

pub const OBS_DIM: usize = 3 * DOF;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Reference pose after the last step.
    pub x_r: Pose4,
    /// Velocity command executed in the last step.
    pub xdot_r: Twist4,
    /// Latest sensor reading.
    pub f_meas: Wrench4,
}

/// `normalized = (raw − offset) / scale`, componentwise over the 12 entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObsNormalizer {
    pub offset: [f64; OBS_DIM],
    pub scale: [f64; OBS_DIM],
}

impl ObsNormalizer {
    /// Positions are centered on the inserted pose and scaled by the widest
    /// start offset per DoF; rates by the velocity limits; loads by the
    /// safety thresholds.
    pub fn new(params: &EnvParams, geometry: &Geometry) -> Self {
        let target = geometry.target_pose().to_array();
        let floor = 0.01;
        let mut offset = [0.0; OBS_DIM];
        let mut scale = [1.0; OBS_DIM];
        for i in 0..DOF {
            offset[i] = target[i];
            scale[i] =
                (params.start_pose_lo[i] - target[i]).abs().max((params.start_pose_hi[i] - target[i]).abs()).max(floor);
        }
        let rate = [params.v_max, params.v_max, params.v_max, params.w_max];
        let load = [params.f_max, params.f_max, params.f_max, params.t_max];
        scale[DOF..2 * DOF].copy_from_slice(&rate);
        scale[2 * DOF..].copy_from_slice(&load);
        Self { offset, scale }
    }

    pub fn normalize(&self, obs: &Observation) -> [f64; OBS_DIM] {
        let raw = flatten(obs);
        std::array::from_fn(|i| (raw[i] - self.offset[i]) / self.scale[i])
    }

    pub fn denormalize(&self, v: &[f64; OBS_DIM]) -> Observation {
        let raw: [f64; OBS_DIM] = std::array::from_fn(|i| v[i] * self.scale[i] + self.offset[i]);
        unflatten(&raw)
    }
}

pub fn flatten(obs: &Observation) -> [f64; OBS_DIM] {
    let mut out = [0.0; OBS_DIM];
    out[..DOF].copy_from_slice(&obs.x_r.to_array());
    out[DOF..2 * DOF].copy_from_slice(&obs.xdot_r.to_array());
    out[2 * DOF..].copy_from_slice(&obs.f_meas.to_array());
    out
}

pub fn unflatten(v: &[f64; OBS_DIM]) -> Observation {
    let part = |k: usize| -> [f64; DOF] { std::array::from_fn(|i| v[k * DOF + i]) };
    Observation { x_r: part(0).into(), xdot_r: part(1).into(), f_meas: part(2).into() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn normalization_round_trip(raw in proptest::array::uniform12(-100.0f64..100.0)) {
            let n = ObsNormalizer::new(&EnvParams::default(), &Geometry::default());
            let obs = unflatten(&raw);
            let back = n.denormalize(&n.normalize(&obs));
            let b = flatten(&back);
            for i in 0..OBS_DIM {
                prop_assert!((b[i] - raw[i]).abs() <= 1e-12 * raw[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn target_maps_to_origin() {
        let g = Geometry::default();
        let n = ObsNormalizer::new(&EnvParams::default(), &g);
        let obs = Observation { x_r: g.target_pose(), ..Default::default() };
        assert!(n.normalize(&obs).iter().all(|v| *v == 0.0));
    }
}
