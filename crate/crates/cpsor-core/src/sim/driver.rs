//! Emotion-modulated driver control law.
//!
//! Longitudinal: a desired-gap car-following controller capped by a
//! free-road speed controller. Lateral: proportional lane centering plus
//! heading tracking with emotion-scaled steering noise. Anger raises the
//! desired speed and acceleration gain and shrinks the desired gap; fright
//! backs the target speed off, overshoots on the brakes and adds steering
//! noise.

use crate::discretize::EmoCluster;
use crate::rng::Rng;

/// Full-throttle acceleration, m/s².
pub const MAX_ACCEL: f64 = 3.0;
/// Full-brake deceleration, m/s².
pub const MAX_BRAKE: f64 = 8.0;
/// Steering-wheel angle limit, degrees.
pub const MAX_STEER_DEG: f64 = 400.0;
/// Wheelbase, m.
pub const WHEELBASE: f64 = 2.8;
/// Steering-wheel to road-wheel ratio.
pub const STEER_RATIO: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverGains {
    /// Anger multiplier on desired speed and acceleration gain (> 1); the
    /// desired gap shrinks by the same factor.
    pub anger_speed: f64,
    /// Fright multiplier on desired speed (< 1): a frightened driver backs
    /// off and settles well below the nominal target.
    pub fright_speed: f64,
    /// Fright multiplier on the brake gain (> 1).
    pub fright_brake: f64,
    /// Anger multiplier on steering noise.
    pub anger_lateral_noise: f64,
    /// Fright multiplier on steering noise.
    pub fright_lateral_noise: f64,
    /// Baseline steering noise, degrees (1σ).
    pub steer_noise_deg: f64,
    /// Free-road speed gain, 1/s.
    pub accel_gain: f64,
    /// Gap-error gain, 1/s².
    pub gap_gain: f64,
    /// Closing-speed gain, 1/s.
    pub closing_gain: f64,
    /// Standstill desired gap, m.
    pub min_gap: f64,
    /// Desired time headway, s.
    pub time_headway: f64,
    /// Steering response to lateral offset, deg/m.
    pub lat_gain: f64,
    /// Steering response to heading error, deg/rad.
    pub heading_gain: f64,
    /// Perception-reaction delay on conflict objects, seconds.
    pub reaction_delay: f64,
}

impl Default for DriverGains {
    fn default() -> Self {
        DriverGains {
            anger_speed: 1.4,
            fright_speed: 0.85,
            fright_brake: 2.4,
            anger_lateral_noise: 2.2,
            fright_lateral_noise: 1.3,
            steer_noise_deg: 0.6,
            accel_gain: 0.8,
            gap_gain: 0.3,
            closing_gain: 0.72,
            min_gap: 6.0,
            time_headway: 1.4,
            lat_gain: 2.2,
            heading_gain: 170.0,
            reaction_delay: 0.72,
        }
    }
}

/// Conflict object the driver is regulating against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lead {
    /// Distance to the object along the ego path, m.
    pub gap: f64,
    /// Object speed along the ego path, m/s (0 for crossing conflicts).
    pub speed: f64,
}

/// What the driver perceives at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverContext {
    pub lead: Option<Lead>,
    pub desired_speed: f64,
    /// Lateral offset from the reference path, m, positive left.
    pub lane_offset: f64,
    /// Reference heading minus actual heading, rad.
    pub heading_error: f64,
    /// Steering demanded by the reference path's curvature, degrees.
    pub steer_feedforward_deg: f64,
}

impl DriverContext {
    /// Straight-lane context: follow `lead` at `desired_speed`, centering
    /// on the lane at `lane_offset` with heading error `heading_error`.
    pub fn straight(lead: Option<Lead>, desired_speed: f64, lane_offset: f64, heading_error: f64) -> Self {
        DriverContext { lead, desired_speed, lane_offset, heading_error, steer_feedforward_deg: 0.0 }
    }
}

/// Emotion multiplier on the driver's target speed.
pub fn emotion_speed_scale(emotion: EmoCluster, gains: &DriverGains) -> f64 {
    match emotion {
        EmoCluster::Anger => gains.anger_speed,
        EmoCluster::Fright => gains.fright_speed,
        EmoCluster::Neutral => 1.0,
    }
}

/// Desired following gap at speed `v`; anger closes in.
pub fn desired_gap(v: f64, emotion: EmoCluster, gains: &DriverGains) -> f64 {
    let shrink = if emotion == EmoCluster::Anger { gains.anger_speed } else { 1.0 };
    (gains.min_gap + v * gains.time_headway) / shrink
}

/// One control decision. Positive steering turns right; the ±4° maneuver
/// threshold downstream refers to this wheel angle. Pass no RNG for
/// noise-free output.
pub fn driver_step(
    ego_v: f64,
    ctx: &DriverContext,
    emotion: EmoCluster,
    gains: &DriverGains,
    rng: Option<&mut Rng>,
) -> (f64, f64, f64) {
    let anger = emotion == EmoCluster::Anger;
    let fright = emotion == EmoCluster::Fright;

    let speed_scale = emotion_speed_scale(emotion, gains);
    let gain_scale = if anger { gains.anger_speed } else { 1.0 };
    let v_des = ctx.desired_speed * speed_scale;
    let a_free = gains.accel_gain * gain_scale * (v_des - ego_v);
    let a_cmd = match ctx.lead {
        Some(lead) => {
            let a_follow = gains.gap_gain * gain_scale
                * (lead.gap - desired_gap(ego_v, emotion, gains))
                + gains.closing_gain * (lead.speed - ego_v);
            a_free.min(a_follow)
        }
        None => a_free,
    };

    let throttle = (a_cmd / MAX_ACCEL).clamp(0.0, 1.0);
    let brake_gain = if fright { gains.fright_brake } else { 1.0 };
    let brake = (-a_cmd * brake_gain / MAX_BRAKE).clamp(0.0, 1.0);

    let noise_scale = if anger {
        gains.anger_lateral_noise
    } else if fright {
        gains.fright_lateral_noise
    } else {
        1.0
    };
    let noise = match rng {
        Some(r) => gains.steer_noise_deg * noise_scale * r.gauss(),
        None => 0.0,
    };
    let steer_deg = (ctx.steer_feedforward_deg + gains.lat_gain * ctx.lane_offset
        - gains.heading_gain * ctx.heading_error
        + noise)
        .clamp(-MAX_STEER_DEG, MAX_STEER_DEG);
    (throttle, brake, steer_deg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equilibrium_ctx(v: f64, gains: &DriverGains) -> DriverContext {
        DriverContext::straight(
            Some(Lead { gap: gains.min_gap + v * gains.time_headway, speed: v }),
            v,
            0.0,
            0.0,
        )
    }

    #[test]
    fn neutral_equilibrium_is_quiet() {
        let gains = DriverGains::default();
        let (throttle, brake, steer) =
            driver_step(15.0, &equilibrium_ctx(15.0, &gains), EmoCluster::Neutral, &gains, None);
        assert!(throttle.abs() < 1e-12);
        assert!(brake.abs() < 1e-12);
        assert!(steer.abs() < 1e-12);
    }

    #[test]
    fn anger_never_throttles_less() {
        let gains = DriverGains::default();
        let mut rng = Rng::new(5);
        for _ in 0..2000 {
            let v = rng.uniform(0.0, 25.0);
            let ctx = DriverContext::straight(
                if rng.next_f64() < 0.7 {
                    Some(Lead { gap: rng.uniform(2.0, 60.0), speed: rng.uniform(0.0, 25.0) })
                } else {
                    None
                },
                rng.uniform(5.0, 20.0),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-0.05, 0.05),
            );
            let (t_neutral, _, _) = driver_step(v, &ctx, EmoCluster::Neutral, &gains, None);
            let (t_anger, _, _) = driver_step(v, &ctx, EmoCluster::Anger, &gains, None);
            assert!(
                t_anger >= t_neutral - 1e-12,
                "anger throttled less: {t_anger} < {t_neutral} (ctx {ctx:?})"
            );
        }
    }

    #[test]
    fn fright_brakes_harder_for_the_same_deficit() {
        // Brake-gain mechanism in isolation (speed backoff disabled), with
        // a mild deficit so neither pedal command saturates.
        let gains = DriverGains { fright_speed: 1.0, ..DriverGains::default() };
        let ctx = DriverContext::straight(Some(Lead { gap: 20.0, speed: 10.0 }), 15.0, 0.0, 0.0);
        let (_, b_neutral, _) = driver_step(12.0, &ctx, EmoCluster::Neutral, &gains, None);
        let (_, b_fright, _) = driver_step(12.0, &ctx, EmoCluster::Fright, &gains, None);
        assert!(b_neutral > 0.0 && b_fright < 1.0);
        assert!((b_fright / b_neutral - gains.fright_brake).abs() < 1e-9);
        // With the backoff active the frightened response is still harder.
        let full = DriverGains::default();
        let (_, b_full, _) = driver_step(12.0, &ctx, EmoCluster::Fright, &full, None);
        assert!(b_full > b_neutral);
    }

    #[test]
    fn steering_corrects_offsets_toward_the_reference() {
        let gains = DriverGains::default();
        let left = DriverContext::straight(None, 10.0, 0.5, 0.0);
        let (_, _, steer) = driver_step(10.0, &left, EmoCluster::Neutral, &gains, None);
        assert!(steer > 0.0, "left of lane steers right (positive)");
        let turn = DriverContext::straight(None, 10.0, 0.0, 0.5);
        let (_, _, steer) = driver_step(10.0, &turn, EmoCluster::Neutral, &gains, None);
        assert!(steer < -4.0, "a left-turn reference steers left past the maneuver threshold");
    }

    #[test]
    fn anger_widens_steering_noise() {
        let gains = DriverGains::default();
        let ctx = DriverContext::straight(None, 10.0, 0.0, 0.0);
        let spread = |emotion: EmoCluster| {
            let mut rng = Rng::new(77);
            let mut sq = 0.0;
            for _ in 0..4000 {
                let (_, _, steer) = driver_step(10.0, &ctx, emotion, &gains, Some(&mut rng));
                sq += steer * steer;
            }
            (sq / 4000.0).sqrt()
        };
        let neutral = spread(EmoCluster::Neutral);
        let anger = spread(EmoCluster::Anger);
        assert!(
            (anger / neutral - gains.anger_lateral_noise).abs() < 0.05,
            "anger/neutral steering spread {anger}/{neutral}"
        );
    }
}
