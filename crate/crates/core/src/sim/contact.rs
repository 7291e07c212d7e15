//! Penalty contact between the board's cross-section corners and the frame.
//!
//! Each corner is the edge of the board running along Y. A corner that overlaps
//! the slot in depth and lies outside the opening is pushed out of the frame
//! along the direction of least penetration: back out through the front face,
//! or inward off each wall it has crossed.

use serde::{Deserialize, Serialize};

use crate::config::Geometry;
use crate::sim::geometry::{board_point, corners_local, frame_dir_to_world, rotate_y, to_frame};
use crate::types::{Pose4, Twist4, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Surface {
    FrontFace,
    WallPosX,
    WallNegX,
    WallPosZ,
    WallNegZ,
}

impl Surface {
    /// Unit normal pointing out of the surface toward free space, frame coordinates.
    pub fn inward_normal(self) -> Vec3 {
        match self {
            Surface::FrontFace => [0.0, -1.0, 0.0],
            Surface::WallPosX => [-1.0, 0.0, 0.0],
            Surface::WallNegX => [1.0, 0.0, 0.0],
            Surface::WallPosZ => [0.0, 0.0, -1.0],
            Surface::WallNegZ => [0.0, 0.0, 1.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact {
    pub surface: Surface,
    /// World application point (m).
    pub point: Vec3,
    /// Force on the board (N), world frame.
    pub force: Vec3,
    /// Unit normal along which the force acts, world frame.
    pub normal: Vec3,
    /// Penetration depth (m).
    pub depth: f64,
}

/// Board-frame contact forces at `pose` moving with `twist`.
///
/// Force magnitude per contact is `max(0, k_eff·d + c_contact·ḋ)`.
pub fn contact_forces(pose: &Pose4, twist: &Twist4, geometry: &Geometry, k_eff: f64, c_contact: f64) -> Vec<Contact> {
    let [sx, sz] = geometry.slot_half_extents();
    let hy = geometry.board_half_extents[1];
    let depth = geometry.slot_depth;
    let center_f = to_frame(geometry, [pose.x, pose.y, pose.z]);
    let (lead, trail) = (center_f[1] + hy, center_f[1] - hy);
    let mut out = Vec::new();
    if lead <= 0.0 || trail >= depth {
        return out;
    }

    let lin_f = rotate_y(-geometry.frame_center.theta_y, [twist.vx, twist.vy, twist.vz]);
    for local in corners_local(geometry) {
        let p_world = board_point(pose, local);
        let p = to_frame(geometry, p_world);
        // corner velocity: v + ω × r with ω along Y
        let r = [p[0] - center_f[0], 0.0, p[2] - center_f[2]];
        let v = [lin_f[0] + twist.wy * r[2], lin_f[1], lin_f[2] - twist.wy * r[0]];

        let walls = [
            (Surface::WallPosX, p[0] - sx, v[0]),
            (Surface::WallNegX, -sx - p[0], -v[0]),
            (Surface::WallPosZ, p[2] - sz, v[2]),
            (Surface::WallNegZ, -sz - p[2], -v[2]),
        ];
        let deepest_wall = walls.iter().map(|w| w.1).fold(0.0, f64::max);
        if deepest_wall <= 0.0 {
            continue;
        }

        let mut emit = |surface: Surface, d: f64, d_rate: f64, y: f64| {
            let magnitude = (k_eff * d + c_contact * d_rate).max(0.0);
            let n_frame = surface.inward_normal();
            let normal = frame_dir_to_world(geometry, n_frame);
            let point_frame = [p[0], y, p[2]];
            let pf = rotate_y(geometry.frame_center.theta_y, point_frame);
            let c = &geometry.frame_center;
            out.push(Contact {
                surface,
                point: [pf[0] + c.x, pf[1] + c.y, pf[2] + c.z],
                force: normal.map(|n| n * magnitude),
                normal,
                depth: d,
            });
        };

        let front_depth = lead.min(depth);
        if front_depth < deepest_wall {
            emit(Surface::FrontFace, front_depth, v[1], 0.0);
        } else {
            let y_mid = 0.5 * (trail.max(0.0) + lead.min(depth));
            for &(surface, d, d_rate) in &walls {
                if d > 0.0 {
                    emit(surface, d, d_rate, y_mid);
                }
            }
        }
    }
    out
}

/// Stiffness of the board and frame springs acting in series.
pub fn series_stiffness(k_board: f64, k_frame: f64) -> f64 {
    k_board * k_frame / (k_board + k_frame)
}

/// Contact damping `2ζ√(k·m)`.
pub fn contact_damping(k_eff: f64, mass: f64, ratio: f64) -> f64 {
    2.0 * ratio * (k_eff * mass).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::dot3;

    fn g() -> Geometry {
        Geometry::default()
    }

    #[test]
    fn series_spring_formula() {
        assert_eq!(series_stiffness(1e5, 1e5), 5e4);
    }

    #[test]
    fn centered_board_before_slot_has_no_contact() {
        let c = contact_forces(&Pose4::new(0.0, -0.25, 0.0, 0.0), &Twist4::ZERO, &g(), 1e5, 0.0);
        assert!(c.is_empty());
    }

    #[test]
    fn centered_board_inside_slot_has_no_contact() {
        let c = contact_forces(&g().target_pose(), &Twist4::ZERO, &g(), 1e5, 0.0);
        assert!(c.is_empty());
    }

    #[test]
    fn single_wall_penetration_gives_k_times_depth() {
        // Board fully inside; shift +x so the +x corners pass the wall by 1 mm.
        let geo = g();
        let mut pose = geo.target_pose();
        pose.x = geo.clearance + 0.001;
        let c = contact_forces(&pose, &Twist4::ZERO, &geo, 1e5, 0.0);
        assert_eq!(c.len(), 2, "both +x corners touch the +x wall");
        for contact in &c {
            assert_eq!(contact.surface, Surface::WallPosX);
            assert!((contact.depth - 0.001).abs() < 1e-12);
            let mag = dot3(contact.force, contact.force).sqrt();
            assert!((mag - 100.0).abs() < 1e-7);
            assert!(contact.force[0] < 0.0);
        }
    }

    #[test]
    fn misaligned_entry_hits_front_face_first() {
        let geo = g();
        let pose = Pose4::new(0.01, -0.0075 + 0.0005, 0.0, 0.0);
        let c = contact_forces(&pose, &Twist4::ZERO, &geo, 1e5, 0.0);
        assert_eq!(c.len(), 2);
        for contact in &c {
            assert_eq!(contact.surface, Surface::FrontFace);
            assert!((contact.depth - 0.0005).abs() < 1e-12);
            assert!((contact.force[1] + 50.0).abs() < 1e-7);
        }
    }

    #[test]
    fn separating_corner_force_clamps_to_zero() {
        let geo = g();
        let mut pose = geo.target_pose();
        pose.x = geo.clearance + 0.001;
        let twist = Twist4::new(-1.0, 0.0, 0.0, 0.0);
        let c = contact_forces(&pose, &twist, &geo, 1e5, 1000.0);
        assert!(!c.is_empty());
        for contact in &c {
            assert_eq!(contact.force, [0.0, 0.0, 0.0]);
        }
    }
}
