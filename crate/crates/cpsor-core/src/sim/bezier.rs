//! Cubic Bezier evaluation for scripted cut-in paths.

use super::SimError;

pub type Point = [f64; 2];

/// Cubic Bezier point at parameter `u` in [0, 1]:
/// (1−u)³p0 + 3(1−u)²u·p1 + 3(1−u)u²·p2 + u³·p3.
pub fn bezier3(p0: Point, p1: Point, p2: Point, p3: Point, u: f64) -> Result<Point, SimError> {
    if !(0.0..=1.0).contains(&u) {
        return Err(SimError::Domain(format!("bezier parameter {u} outside [0, 1]")));
    }
    let w = 1.0 - u;
    let (b0, b1, b2, b3) = (w * w * w, 3.0 * w * w * u, 3.0 * w * u * u, u * u * u);
    Ok([
        b0 * p0[0] + b1 * p1[0] + b2 * p2[0] + b3 * p3[0],
        b0 * p0[1] + b1 * p1[1] + b2 * p2[1] + b3 * p3[1],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lerp(a: Point, b: Point, u: f64) -> Point {
        [a[0] + (b[0] - a[0]) * u, a[1] + (b[1] - a[1]) * u]
    }

    /// Independent oracle: de Casteljau subdivision.
    fn de_casteljau(p0: Point, p1: Point, p2: Point, p3: Point, u: f64) -> Point {
        let q0 = lerp(p0, p1, u);
        let q1 = lerp(p1, p2, u);
        let q2 = lerp(p2, p3, u);
        let r0 = lerp(q0, q1, u);
        let r1 = lerp(q1, q2, u);
        lerp(r0, r1, u)
    }

    #[test]
    fn endpoints() {
        let (p0, p1, p2, p3) = ([0.0, 0.0], [1.0, 0.0], [2.0, 1.0], [3.0, 1.0]);
        assert_eq!(bezier3(p0, p1, p2, p3, 0.0).unwrap(), p0);
        assert_eq!(bezier3(p0, p1, p2, p3, 1.0).unwrap(), p3);
    }

    #[test]
    fn midpoint_matches_de_casteljau() {
        let (p0, p1, p2, p3) = ([0.0, 0.0], [1.0, 0.0], [2.0, 1.0], [3.0, 1.0]);
        let got = bezier3(p0, p1, p2, p3, 0.5).unwrap();
        let oracle = de_casteljau(p0, p1, p2, p3, 0.5);
        assert!((got[0] - oracle[0]).abs() < 1e-15);
        assert!((got[1] - oracle[1]).abs() < 1e-15);
        assert!((got[0] - 1.5).abs() < 1e-15);
        assert!((got[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sweep_matches_de_casteljau() {
        let (p0, p1, p2, p3) = ([-2.0, 3.5], [0.7, 3.5], [2.9, -0.2], [5.0, -0.2]);
        for k in 0..=100 {
            let u = k as f64 / 100.0;
            let got = bezier3(p0, p1, p2, p3, u).unwrap();
            let oracle = de_casteljau(p0, p1, p2, p3, u);
            assert!((got[0] - oracle[0]).abs() < 1e-12);
            assert!((got[1] - oracle[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let p = [0.0, 0.0];
        assert!(bezier3(p, p, p, p, -0.01).is_err());
        assert!(bezier3(p, p, p, p, 1.01).is_err());
    }
}
