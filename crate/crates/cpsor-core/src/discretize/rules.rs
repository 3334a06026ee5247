//! Threshold rules and series statistics for cognitive-node states.

use super::{DiscretizeError, ManLateral, RiskGrade, SubStyle};

/// Acceleration discretization interval, m/s².
pub const ACCEL_BIN_WIDTH: f64 = 0.2;

/// Lag-1 autocorrelation threshold for window selection ("significantly
/// smaller" resolved to this configurable default).
pub const AC_THRESHOLD: f64 = 0.2;

/// Maximum downsampling spacing; 20 steps = 0.8 s at 25 Hz, matching the
/// clustering window length used downstream.
pub const WINDOW_CAP: usize = 20;

/// Grades conflict risk from time-to-collision.
///
/// Safe above 2 s, Moderate in (1.5 s, 2 s], Danger at or below 1.5 s.
/// The 1.5 s boundary grades as Danger (safety-conservative resolution of
/// the overlapping band edges). `ttc` may be `+inf` (no collision course).
pub fn ttc_risk_grade(ttc: f64) -> Result<RiskGrade, DiscretizeError> {
    if ttc.is_nan() || ttc <= 0.0 {
        return Err(DiscretizeError::Domain(format!("ttc must be positive, got {ttc}")));
    }
    Ok(if ttc > 2.0 {
        RiskGrade::Safe
    } else if ttc > 1.5 {
        RiskGrade::Moderate
    } else {
        RiskGrade::Danger
    })
}

/// Signed acceleration bin: `floor(a / width)`. Bin `b` covers
/// `[b·width, (b+1)·width)`.
pub fn bin_acceleration(a: f64, width: f64) -> Result<i32, DiscretizeError> {
    if !a.is_finite() {
        return Err(DiscretizeError::Domain(format!("acceleration must be finite, got {a}")));
    }
    // NaN widths must fail too, hence not a plain `<=`.
    if width.is_nan() || width <= 0.0 {
        return Err(DiscretizeError::Domain(format!("bin width must be positive, got {width}")));
    }
    Ok((a / width).floor() as i32)
}

/// Lateral maneuver from the steering wheel angle with a ±4° threshold.
pub fn lateral_maneuver(steer_deg: f64) -> Result<ManLateral, DiscretizeError> {
    if !steer_deg.is_finite() {
        return Err(DiscretizeError::Domain(format!(
            "steering angle must be finite, got {steer_deg}"
        )));
    }
    Ok(if steer_deg < -4.0 {
        ManLateral::LeftTurn
    } else if steer_deg > 4.0 {
        ManLateral::RightTurn
    } else {
        ManLateral::Straight
    })
}

/// Autocorrelation at lag `k`: Cov(b_t, b_{t−k}) / Var(b_t), with
/// mean-centered sums over the overlapping range. Clamped to [-1, 1].
pub fn autocorrelation(series: &[f64], k: usize) -> Result<f64, DiscretizeError> {
    let n = series.len();
    if n <= k {
        return Err(DiscretizeError::Domain(format!(
            "series of length {n} too short for lag {k}"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let var = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return Err(DiscretizeError::Degenerate(
            "constant signal has undefined autocorrelation".into(),
        ));
    }
    let cov = (k..n)
        .map(|i| (series[i] - mean) * (series[i - k] - mean))
        .sum::<f64>()
        / (n - k) as f64;
    Ok((cov / var).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSelection {
    /// Chosen downsampling spacing in steps, in [1, WINDOW_CAP].
    pub spacing: usize,
    /// Set when the series degenerated before a spacing could be chosen.
    pub degenerate: bool,
}

/// Smallest downsampling spacing `s` such that the lag-1 autocorrelation of
/// the `s`-spaced series falls below [`AC_THRESHOLD`], capped at
/// [`WINDOW_CAP`]. A degenerate (constant) series returns the cap with the
/// warning flag set.
pub fn select_window(series: &[f64]) -> Result<WindowSelection, DiscretizeError> {
    select_window_with(series, AC_THRESHOLD, WINDOW_CAP)
}

/// [`select_window`] with a caller-chosen threshold and cap.
pub fn select_window_with(
    series: &[f64],
    threshold: f64,
    cap: usize,
) -> Result<WindowSelection, DiscretizeError> {
    if series.len() < 40 {
        return Err(DiscretizeError::Domain(format!(
            "window selection needs at least 40 samples, got {}",
            series.len()
        )));
    }
    if cap == 0 {
        return Err(DiscretizeError::Domain("window cap must be at least 1".into()));
    }
    for spacing in 1..cap {
        let spaced: Vec<f64> = series.iter().copied().step_by(spacing).collect();
        if spaced.len() < 2 {
            break;
        }
        match autocorrelation(&spaced, 1) {
            Ok(ac) if ac < threshold => {
                return Ok(WindowSelection { spacing, degenerate: false })
            }
            Ok(_) => {}
            Err(DiscretizeError::Degenerate(_)) => {
                return Ok(WindowSelection { spacing: cap, degenerate: true })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(WindowSelection { spacing: cap, degenerate: false })
}

/// Tertile split of a driving-style-score population: top third Aggressive,
/// middle Neutral, bottom Conservative. A score that is the strict maximum
/// (minimum) of the population is always Aggressive (Conservative); an
/// all-equal population maps everyone to Neutral.
pub fn sub_style(score: f64, population: &[f64]) -> Result<SubStyle, DiscretizeError> {
    if population.is_empty() {
        return Err(DiscretizeError::Domain("empty style-score population".into()));
    }
    if !score.is_finite() {
        return Err(DiscretizeError::Domain(format!("score must be finite, got {score}")));
    }
    let n = population.len() as f64;
    let max = population.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = population.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == min {
        return Ok(SubStyle::Neutral);
    }
    if score >= max {
        return Ok(SubStyle::Aggressive);
    }
    if score <= min {
        return Ok(SubStyle::Conservative);
    }
    let below = population.iter().filter(|&&p| p < score).count() as f64;
    let at_or_below = population.iter().filter(|&&p| p <= score).count() as f64;
    Ok(if below / n >= 2.0 / 3.0 {
        SubStyle::Aggressive
    } else if at_or_below / n <= 1.0 / 3.0 {
        SubStyle::Conservative
    } else {
        SubStyle::Neutral
    })
}
