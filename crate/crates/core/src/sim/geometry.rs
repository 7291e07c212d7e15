//! Rigid transforms between the board, world and frame coordinates.

use crate::config::Geometry;
use crate::types::{Pose4, Vec3};

/// Rotates `v` about the Y axis by `theta`.
pub fn rotate_y(theta: f64, v: Vec3) -> Vec3 {
    let (s, c) = theta.sin_cos();
    [c * v[0] + s * v[2], v[1], -s * v[0] + c * v[2]]
}

/// World position of a point given in the board frame.
pub fn board_point(pose: &Pose4, local: Vec3) -> Vec3 {
    let r = rotate_y(pose.theta_y, local);
    [pose.x + r[0], pose.y + r[1], pose.z + r[2]]
}

/// Expresses a world point in frame coordinates: origin at the center of the
/// opening on the front face, y measured into the slot.
pub fn to_frame(geometry: &Geometry, p: Vec3) -> Vec3 {
    let c = &geometry.frame_center;
    rotate_y(-c.theta_y, [p[0] - c.x, p[1] - c.y, p[2] - c.z])
}

/// Rotates a frame-coordinate direction back into the world.
pub fn frame_dir_to_world(geometry: &Geometry, d: Vec3) -> Vec3 {
    rotate_y(geometry.frame_center.theta_y, d)
}

/// The four cross-section corners in board coordinates, ordered
/// (+x,+z), (−x,+z), (−x,−z), (+x,−z).
pub fn corners_local(geometry: &Geometry) -> [Vec3; 4] {
    let [hx, _, hz] = geometry.board_half_extents;
    [[hx, 0.0, hz], [-hx, 0.0, hz], [-hx, 0.0, -hz], [hx, 0.0, -hz]]
}

/// True when every corner lies inside the slot cross-section and the
/// trailing face is at least one board thickness past the front face.
pub fn is_inserted(pose: &Pose4, geometry: &Geometry) -> bool {
    let [sx, sz] = geometry.slot_half_extents();
    let hy = geometry.board_half_extents[1];
    let inside = corners_local(geometry).iter().all(|&c| {
        let p = to_frame(geometry, board_point(pose, c));
        p[0].abs() <= sx && p[2].abs() <= sz
    });
    let center = to_frame(geometry, [pose.x, pose.y, pose.z]);
    inside && center[1] - hy >= 2.0 * hy
}
