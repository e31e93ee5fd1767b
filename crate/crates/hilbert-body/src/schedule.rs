//! Bar-separation schedules: the end distance as a function of time.

use crate::error::{Error, Result};

/// End-distance schedule presets over the run window `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    /// Constant `d(t) = d_final`.
    Hold,
    /// Linear ramp from the full sheet length at `t = 0` down to `d_final`
    /// at `t = T`.
    Ramp,
    /// Piecewise-linear interpolation of `(t, d)` points covering `[0, T]`.
    Piecewise(Vec<(f64, f64)>),
}

/// Time grid plus the end-distance function.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub total_time: f64,
    pub dt: f64,
    pub d_final: f64,
    pub sheet_length: f64,
    pub kind: ScheduleKind,
}

impl Schedule {
    pub fn new(
        kind: ScheduleKind,
        total_time: f64,
        dt: f64,
        d_final: f64,
        sheet_length: f64,
    ) -> Result<Schedule> {
        let mut issues = Vec::new();
        if !(total_time > 0.0) {
            issues.push(format!("schedule.T must be positive, got {total_time}"));
        }
        if !(dt > 0.0 && dt <= total_time) {
            issues.push(format!(
                "schedule.dt must satisfy 0 < dt <= T (dt = {dt}, T = {total_time})"
            ));
        }
        if !(d_final > 0.0 && d_final <= sheet_length * (1.0 + 1e-12)) {
            issues.push(format!(
                "schedule.d_final must lie in (0, sheet_length], got {d_final}"
            ));
        }
        if let ScheduleKind::Piecewise(points) = &kind {
            if points.len() < 2 {
                issues.push("piecewise schedule needs at least 2 points".to_string());
            } else {
                if points[0].0.abs() > 1e-12 {
                    issues.push("piecewise schedule must start at t = 0".to_string());
                }
                if (points[points.len() - 1].0 - total_time).abs() > 1e-9 * total_time {
                    issues.push("piecewise schedule must end at t = T".to_string());
                }
                for pair in points.windows(2) {
                    if pair[1].0 <= pair[0].0 {
                        issues.push("piecewise schedule times must strictly increase".to_string());
                    }
                }
                for &(t, d) in points {
                    if !(d > 0.0 && d <= sheet_length * (1.0 + 1e-12)) {
                        issues.push(format!(
                            "piecewise point (t = {t}, d = {d}) leaves (0, sheet_length]"
                        ));
                    }
                }
            }
        }
        if issues.is_empty() {
            Ok(Schedule {
                total_time,
                dt,
                d_final,
                sheet_length,
                kind,
            })
        } else {
            Err(Error::ConfigInvalid(issues))
        }
    }

    /// Number of full time steps inside `[0, T]`.
    pub fn n_steps(&self) -> usize {
        (self.total_time / self.dt + 1e-9).floor() as usize
    }

    /// End distance at time `t`.
    pub fn end_distance(&self, t: f64) -> f64 {
        match &self.kind {
            ScheduleKind::Hold => self.d_final,
            ScheduleKind::Ramp => {
                let frac = (t / self.total_time).clamp(0.0, 1.0);
                self.sheet_length + (self.d_final - self.sheet_length) * frac
            }
            ScheduleKind::Piecewise(points) => {
                if t <= points[0].0 {
                    return points[0].1;
                }
                for pair in points.windows(2) {
                    let ((t0, d0), (t1, d1)) = (pair[0], pair[1]);
                    if t <= t1 {
                        let frac = (t - t0) / (t1 - t0);
                        return d0 + (d1 - d0) * frac;
                    }
                }
                points[points.len() - 1].1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_starts_flat_and_hits_the_target() {
        let s = Schedule::new(ScheduleKind::Ramp, 5.0, 0.05, 0.8, 1.0).unwrap();
        assert_eq!(s.end_distance(0.0), 1.0);
        assert!((s.end_distance(5.0) - 0.8).abs() < 1e-15);
        assert!((s.end_distance(2.5) - 0.9).abs() < 1e-15);
        assert_eq!(s.n_steps(), 100);
    }

    #[test]
    fn hold_is_constant() {
        let s = Schedule::new(ScheduleKind::Hold, 2.0, 0.1, 1.0, 1.0).unwrap();
        for k in 0..=20 {
            assert_eq!(s.end_distance(0.1 * k as f64), 1.0);
        }
    }

    #[test]
    fn piecewise_interpolates_and_validates() {
        let s = Schedule::new(
            ScheduleKind::Piecewise(vec![(0.0, 0.95), (1.0, 0.9), (2.0, 0.9)]),
            2.0,
            0.1,
            0.9,
            1.0,
        )
        .unwrap();
        assert_eq!(s.end_distance(0.0), 0.95);
        assert!((s.end_distance(0.5) - 0.925).abs() < 1e-15);
        assert_eq!(s.end_distance(1.7), 0.9);

        assert!(Schedule::new(
            ScheduleKind::Piecewise(vec![(0.0, 1.0), (0.5, 0.9), (0.4, 0.8)]),
            2.0,
            0.1,
            0.8,
            1.0
        )
        .is_err());
    }

    #[test]
    fn bad_windows_are_rejected_with_both_keys_named() {
        let err = Schedule::new(ScheduleKind::Hold, 1.0, 2.0, 1.0, 1.0).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("dt") && text.contains("T"), "{text}");
    }
}
