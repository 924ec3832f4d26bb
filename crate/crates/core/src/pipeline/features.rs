use super::TrajectoryPoint;
use crate::geodesy::signed_course_diff;

/// Backward-difference acceleration and course rate. The first point of the
/// segment has no predecessor and gets zero for both.
pub fn derive_kinematics(segment: &mut [TrajectoryPoint]) {
    let Some(first) = segment.first_mut() else {
        return;
    };
    first.accel = 0.0;
    first.cog_rate = 0.0;
    for i in 1..segment.len() {
        let prev = segment[i - 1];
        let cur = &mut segment[i];
        let dt = cur.t - prev.t;
        cur.accel = (cur.sog - prev.sog) / dt;
        cur.cog_rate = signed_course_diff(cur.cog, prev.cog) / dt;
    }
}
