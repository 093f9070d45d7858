//! Drive cycles and their decomposition into acceleration, cruising and
//! deceleration sections. Deceleration sections are the stretches on which
//! advice can be given; they convert directly into velocity events.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::route::VelocityEvent;

/// A reference velocity-over-time trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveCycle {
    pub name: String,
    pub time_s: Vec<f64>,
    pub speed_m_per_s: Vec<f64>,
}

impl DriveCycle {
    pub fn validate(&self) -> Result<(), CycleError> {
        if self.time_s.len() != self.speed_m_per_s.len() {
            return Err(CycleError::LengthMismatch);
        }
        if self.time_s.len() < 2 {
            return Err(CycleError::TooFewSamples);
        }
        for (i, pair) in self.time_s.windows(2).enumerate() {
            if !(pair[1] > pair[0]) {
                return Err(CycleError::NonIncreasingTime { index: i + 1 });
            }
        }
        if let Some(i) = self.speed_m_per_s.iter().position(|&v| v < 0.0 || !v.is_finite()) {
            return Err(CycleError::BadSpeed { index: i });
        }
        Ok(())
    }

    /// Cumulative distance at each sample \[m\], by trapezoidal integration.
    pub fn distances(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.time_s.len());
        let mut acc = 0.0;
        s.push(0.0);
        for i in 1..self.time_s.len() {
            let dt = self.time_s[i] - self.time_s[i - 1];
            acc += 0.5 * (self.speed_m_per_s[i] + self.speed_m_per_s[i - 1]) * dt;
            s.push(acc);
        }
        s
    }

    pub fn total_distance_m(&self) -> f64 {
        let mut acc = 0.0;
        for i in 1..self.time_s.len() {
            let dt = self.time_s[i] - self.time_s[i - 1];
            acc += 0.5 * (self.speed_m_per_s[i] + self.speed_m_per_s[i - 1]) * dt;
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionKind {
    Acceleration,
    Cruising,
    Deceleration,
}

impl fmt::Display for SectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectionKind::Acceleration => write!(f, "acceleration"),
            SectionKind::Cruising => write!(f, "cruising"),
            SectionKind::Deceleration => write!(f, "deceleration"),
        }
    }
}

/// One classified stretch of a cycle, in both time and distance coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSection {
    pub kind: SectionKind,
    pub start_m: f64,
    pub end_m: f64,
    pub start_time_s: f64,
    pub end_time_s: f64,
    pub entry_m_per_s: f64,
    pub exit_m_per_s: f64,
}

impl CycleSection {
    pub fn length_m(&self) -> f64 {
        self.end_m - self.start_m
    }

    pub fn duration_s(&self) -> f64 {
        self.end_time_s - self.start_time_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationOptions {
    /// Smoothed accelerations within +/- this magnitude count as cruising
    /// \[m/s^2\].
    pub accel_threshold_m_per_s2: f64,
    /// Sections shorter than this are merged into a neighbor \[m\].
    pub min_section_length_m: f64,
    /// Centered moving-average window applied to the slopes \[s\]; 0 disables
    /// smoothing.
    pub smoothing_window_s: f64,
}

impl Default for SegmentationOptions {
    fn default() -> Self {
        SegmentationOptions {
            accel_threshold_m_per_s2: 0.05,
            min_section_length_m: 50.0,
            smoothing_window_s: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleError {
    LengthMismatch,
    TooFewSamples,
    NonIncreasingTime { index: usize },
    BadSpeed { index: usize },
    /// Total distance shorter than the minimum section length.
    DegenerateCycle,
}

impl fmt::Display for CycleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CycleError::LengthMismatch => write!(f, "time/speed arrays differ in length"),
            CycleError::TooFewSamples => write!(f, "cycle needs at least 2 samples"),
            CycleError::NonIncreasingTime { index } => {
                write!(f, "time must be strictly increasing (sample {index})")
            }
            CycleError::BadSpeed { index } => {
                write!(f, "speed must be finite and non-negative (sample {index})")
            }
            CycleError::DegenerateCycle => write!(f, "cycle too short to segment"),
        }
    }
}

impl core::error::Error for CycleError {}

/// Split a cycle into acceleration / cruising / deceleration sections.
///
/// Each inter-sample interval is classified by its (optionally smoothed)
/// velocity slope against the threshold, consecutive intervals of one kind
/// are grouped, and sections shorter than the minimum length are absorbed
/// into their longer neighbor. Section boundaries always sit on cycle
/// samples, so the sections partition the total distance exactly.
pub fn segment_cycle(
    cycle: &DriveCycle,
    opts: &SegmentationOptions,
) -> Result<Vec<CycleSection>, CycleError> {
    cycle.validate()?;
    let t = &cycle.time_s;
    let v = &cycle.speed_m_per_s;
    let n_int = t.len() - 1;
    let s = cycle.distances();
    if s[n_int] < opts.min_section_length_m {
        return Err(CycleError::DegenerateCycle);
    }

    // per-interval slope, then a centered time-window moving average
    let mut slope = Vec::with_capacity(n_int);
    for i in 0..n_int {
        slope.push((v[i + 1] - v[i]) / (t[i + 1] - t[i]));
    }
    let smoothed: Vec<f64> = if opts.smoothing_window_s > 0.0 {
        let half = 0.5 * opts.smoothing_window_s;
        let mid: Vec<f64> = (0..n_int).map(|i| 0.5 * (t[i] + t[i + 1])).collect();
        (0..n_int)
            .map(|i| {
                let mut sum = 0.0;
                let mut cnt = 0usize;
                for j in 0..n_int {
                    if (mid[j] - mid[i]).abs() <= half {
                        sum += slope[j];
                        cnt += 1;
                    }
                }
                sum / cnt as f64
            })
            .collect()
    } else {
        slope
    };

    let classify = |a: f64| -> SectionKind {
        if a > opts.accel_threshold_m_per_s2 {
            SectionKind::Acceleration
        } else if a < -opts.accel_threshold_m_per_s2 {
            SectionKind::Deceleration
        } else {
            SectionKind::Cruising
        }
    };

    // runs of equal interval kind, as sample-index ranges [a, b]
    let mut runs: Vec<(usize, usize, SectionKind)> = Vec::new();
    for (i, value) in smoothed.iter().enumerate() {
        let kind = classify(*value);
        match runs.last_mut() {
            Some((_, end, k)) if *k == kind => *end = i + 1,
            _ => runs.push((i, i + 1, kind)),
        }
    }

    // absorb short runs into the longer neighbor, then coalesce
    loop {
        if runs.len() <= 1 {
            break;
        }
        let lengths: Vec<f64> = runs.iter().map(|&(a, b, _)| s[b] - s[a]).collect();
        let mut shortest: Option<usize> = None;
        for (i, &len) in lengths.iter().enumerate() {
            if len < opts.min_section_length_m
                && shortest.map_or(true, |j| len < lengths[j])
            {
                shortest = Some(i);
            }
        }
        let Some(i) = shortest else { break };
        let absorb_into_prev = if i == 0 {
            false
        } else if i + 1 == runs.len() {
            true
        } else {
            lengths[i - 1] >= lengths[i + 1]
        };
        if absorb_into_prev {
            runs[i - 1].1 = runs[i].1;
            runs.remove(i);
        } else {
            runs[i + 1].0 = runs[i].0;
            runs.remove(i);
        }
        // coalesce equal-kind neighbors created by the merge
        let mut j = 0;
        while j + 1 < runs.len() {
            if runs[j].2 == runs[j + 1].2 {
                runs[j].1 = runs[j + 1].1;
                runs.remove(j + 1);
            } else {
                j += 1;
            }
        }
    }

    Ok(runs
        .into_iter()
        .map(|(a, b, kind)| CycleSection {
            kind,
            start_m: s[a],
            end_m: s[b],
            start_time_s: t[a],
            end_time_s: t[b],
            entry_m_per_s: v[a],
            exit_m_per_s: v[b],
        })
        .collect())
}

/// Deceleration sections as advice candidates. Sections ending below
/// `min_target_m_per_s` (approaches to standstill) are skipped: the advice
/// model is invalid near zero speed.
pub fn decel_events(sections: &[CycleSection], min_target_m_per_s: f64) -> Vec<VelocityEvent> {
    sections
        .iter()
        .filter(|sec| sec.kind == SectionKind::Deceleration)
        .filter(|sec| sec.exit_m_per_s >= min_target_m_per_s)
        .filter(|sec| sec.entry_m_per_s > sec.exit_m_per_s)
        .map(|sec| VelocityEvent {
            trigger_m: sec.start_m,
            horizon_m: sec.length_m(),
            entry_m_per_s: sec.entry_m_per_s,
            target_m_per_s: sec.exit_m_per_s,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn cycle_from(parts: &[(f64, f64)]) -> DriveCycle {
        // (duration, end speed) ramps starting from the first entry's speed
        let mut time_s = alloc::vec![0.0];
        let mut speed = alloc::vec![parts[0].1];
        let mut t = 0.0;
        for &(dur, v_end) in &parts[1..] {
            let v_start = *speed.last().unwrap();
            let steps = dur as usize;
            for k in 1..=steps {
                t += 1.0;
                time_s.push(t);
                speed.push(v_start + (v_end - v_start) * k as f64 / steps as f64);
            }
        }
        DriveCycle {
            name: "test".to_string(),
            time_s,
            speed_m_per_s: speed,
        }
    }

    fn no_smoothing() -> SegmentationOptions {
        SegmentationOptions {
            smoothing_window_s: 0.0,
            ..SegmentationOptions::default()
        }
    }

    #[test]
    fn constant_speed_is_one_cruising_section() {
        let c = cycle_from(&[(0.0, 15.0), (100.0, 15.0)]);
        let sections = segment_cycle(&c, &SegmentationOptions::default()).unwrap();
        assert_eq!(sections.len(), 1);
        assert_eq!(sections[0].kind, SectionKind::Cruising);
        assert!((sections[0].end_m - 1500.0).abs() < 1e-9);
    }

    #[test]
    fn trapezoid_breakpoints_are_exact_without_smoothing() {
        // 10 -> 20 m/s in 20 s, hold 40 s, 20 -> 10 m/s in 25 s
        let c = cycle_from(&[(0.0, 10.0), (20.0, 20.0), (40.0, 20.0), (25.0, 10.0)]);
        let sections = segment_cycle(&c, &no_smoothing()).unwrap();
        assert_eq!(sections.len(), 3);
        assert_eq!(sections[0].kind, SectionKind::Acceleration);
        assert_eq!(sections[1].kind, SectionKind::Cruising);
        assert_eq!(sections[2].kind, SectionKind::Deceleration);
        // hand-integrated corner distances: 300 m and 1100 m; total 1475 m
        assert!((sections[0].end_m - 300.0).abs() < 1e-9);
        assert!((sections[1].end_m - 1100.0).abs() < 1e-9);
        assert!((sections[2].end_m - 1475.0).abs() < 1e-9);
        assert!((sections[2].entry_m_per_s - 20.0).abs() < 1e-12);
        assert!((sections[2].exit_m_per_s - 10.0).abs() < 1e-12);
    }

    #[test]
    fn sections_partition_distance_exactly() {
        let c = cycle_from(&[
            (0.0, 12.0),
            (30.0, 22.0),
            (50.0, 22.0),
            (40.0, 14.0),
            (20.0, 14.0),
            (15.0, 19.0),
        ]);
        for opts in [SegmentationOptions::default(), no_smoothing()] {
            let sections = segment_cycle(&c, &opts).unwrap();
            let total: f64 = sections.iter().map(|s| s.length_m()).sum();
            assert!((total - c.total_distance_m()).abs() <= 1e-6 * total);
            for pair in sections.windows(2) {
                assert_eq!(pair[0].end_m, pair[1].start_m);
                assert_eq!(pair[0].end_time_s, pair[1].start_time_s);
            }
        }
    }

    #[test]
    fn short_blips_are_merged_into_neighbors() {
        // a 2 s wobble inside a long cruise must not survive as a section
        let mut c = cycle_from(&[(0.0, 18.0), (60.0, 18.0), (2.0, 17.0), (60.0, 17.0)]);
        c.name = "wobble".to_string();
        let sections = segment_cycle(&c, &no_smoothing()).unwrap();
        assert_eq!(sections.len(), 1, "got {:?}", sections);
        assert_eq!(sections[0].kind, SectionKind::Cruising);
    }

    #[test]
    fn decel_events_skip_near_standstill_targets() {
        let c = cycle_from(&[(0.0, 20.0), (60.0, 20.0), (60.0, 8.0), (30.0, 8.0), (50.0, 0.5)]);
        let sections = segment_cycle(&c, &no_smoothing()).unwrap();
        let events = decel_events(&sections, 2.0);
        assert_eq!(events.len(), 1);
        assert!((events[0].entry_m_per_s - 20.0).abs() < 1e-12);
        assert!((events[0].target_m_per_s - 8.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycle_is_rejected() {
        let c = cycle_from(&[(0.0, 1.0), (10.0, 1.0)]);
        assert_eq!(
            segment_cycle(&c, &SegmentationOptions::default()),
            Err(CycleError::DegenerateCycle)
        );
    }

    #[test]
    fn validation_errors() {
        let mut c = cycle_from(&[(0.0, 10.0), (10.0, 10.0)]);
        c.time_s[5] = c.time_s[4];
        assert!(matches!(c.validate(), Err(CycleError::NonIncreasingTime { .. })));
        let mut c = cycle_from(&[(0.0, 10.0), (10.0, 10.0)]);
        c.speed_m_per_s[3] = -0.1;
        assert!(matches!(c.validate(), Err(CycleError::BadSpeed { .. })));
    }
}
