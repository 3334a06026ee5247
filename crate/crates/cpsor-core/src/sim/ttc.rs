//! Time-to-collision from current position, speed and heading.

use crate::traj::VehicleState;

/// Arrival-time horizon for crossing conflicts; later conflicts read as no
/// collision course.
pub const TTC_HORIZON: f64 = 20.0;

/// Headings within this sine bound count as parallel (following) geometry.
const PARALLEL_SIN: f64 = 0.08;

/// Time to collision between two road users, or +infinity when there is no
/// collision course.
///
/// Parallel headings use following geometry: gap along the ego heading over
/// the closing speed, when closing. Crossing geometries use the difference
/// of the two arrival times at the paths' intersection point, provided both
/// arrive within [`TTC_HORIZON`]. Coincident positions return 0.
pub fn compute_ttc(ego: &VehicleState, other: &VehicleState) -> f64 {
    debug_assert!((ego.t - other.t).abs() < 1e-9, "states must share an instant");
    let dx = other.x - ego.x;
    let dy = other.y - ego.y;
    if (dx * dx + dy * dy).sqrt() < 1e-9 {
        return 0.0;
    }
    let e_dir = [ego.heading_rad.cos(), ego.heading_rad.sin()];
    let o_dir = [other.heading_rad.cos(), other.heading_rad.sin()];
    let cross = e_dir[0] * o_dir[1] - e_dir[1] * o_dir[0];

    if cross.abs() < PARALLEL_SIN {
        // Following / head-on geometry along the ego heading.
        let gap = dx * e_dir[0] + dy * e_dir[1];
        if gap <= 0.0 {
            return f64::INFINITY;
        }
        let other_along = other.v * (o_dir[0] * e_dir[0] + o_dir[1] * e_dir[1]);
        let closing = ego.v - other_along;
        if closing > 1e-9 {
            gap / closing
        } else {
            f64::INFINITY
        }
    } else {
        // Ray intersection: ego.pos + a·e_dir = other.pos + b·o_dir.
        let a = (dx * o_dir[1] - dy * o_dir[0]) / cross;
        let b = (dx * e_dir[1] - dy * e_dir[0]) / cross;
        if a < 0.0 || b < 0.0 {
            return f64::INFINITY;
        }
        if ego.v < 1e-9 || other.v < 1e-9 {
            return f64::INFINITY;
        }
        let t_ego = a / ego.v;
        let t_other = b / other.v;
        if t_ego <= TTC_HORIZON && t_other <= TTC_HORIZON {
            (t_ego - t_other).abs()
        } else {
            f64::INFINITY
        }
    }
}
