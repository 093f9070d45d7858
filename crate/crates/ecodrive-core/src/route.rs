//! Road scenarios: ordered speed-limit segments plus the velocity-trigger
//! events on which deceleration advice can be given.

use alloc::vec::Vec;
use core::fmt;

use crate::solver::{CostWeights, SegmentProblem};

/// One stretch of road with a constant speed limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadSegment {
    pub start_m: f64,
    pub end_m: f64,
    pub speed_limit_m_per_s: f64,
}

/// A deceleration advice trigger: crossing `trigger_m` arms advice that
/// guides the truck from `entry_m_per_s` down to `target_m_per_s` over the
/// next `horizon_m` meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityEvent {
    pub trigger_m: f64,
    pub horizon_m: f64,
    pub entry_m_per_s: f64,
    pub target_m_per_s: f64,
}

impl VelocityEvent {
    pub fn end_m(&self) -> f64 {
        self.trigger_m + self.horizon_m
    }

    /// `true` while `s` lies inside the advice window (lower-inclusive).
    pub fn contains(&self, s: f64) -> bool {
        s >= self.trigger_m && s < self.end_m()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteScenario {
    pub length_m: f64,
    pub segments: Vec<RoadSegment>,
    pub events: Vec<VelocityEvent>,
}

const POSITION_EPS: f64 = 1e-6;

impl RouteScenario {
    /// Speed limit at position `s` \[m/s\]; positions are clamped into the
    /// route, and the final segment is end-inclusive.
    pub fn speed_limit_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length_m);
        for seg in &self.segments {
            if s < seg.end_m {
                return seg.speed_limit_m_per_s;
            }
        }
        self.segments.last().map(|seg| seg.speed_limit_m_per_s).unwrap_or(0.0)
    }

    /// Index of the event whose advice window contains `s`, if any.
    pub fn event_at(&self, s: f64) -> Option<usize> {
        self.events.iter().position(|ev| ev.contains(s))
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.segments.is_empty() {
            return Err(ScenarioError::NoSegments);
        }
        if !(self.length_m > 0.0) {
            return Err(ScenarioError::BadLength);
        }
        if self.segments[0].start_m.abs() > POSITION_EPS {
            return Err(ScenarioError::CoverageGap { position_m: 0.0 });
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.end_m > seg.start_m) {
                return Err(ScenarioError::EmptySegment { index: i });
            }
            if !(seg.speed_limit_m_per_s > 0.0) {
                return Err(ScenarioError::NonPositiveLimit { index: i });
            }
            if let Some(next) = self.segments.get(i + 1) {
                if (next.start_m - seg.end_m).abs() > POSITION_EPS {
                    return Err(ScenarioError::CoverageGap { position_m: seg.end_m });
                }
            }
        }
        let last_end = self.segments[self.segments.len() - 1].end_m;
        if (last_end - self.length_m).abs() > POSITION_EPS {
            return Err(ScenarioError::CoverageGap { position_m: last_end });
        }

        for (i, ev) in self.events.iter().enumerate() {
            if !(ev.horizon_m > 0.0) || ev.trigger_m < 0.0 {
                return Err(ScenarioError::BadEvent { index: i, reason: "bad geometry" });
            }
            if ev.end_m() > self.length_m + POSITION_EPS {
                return Err(ScenarioError::BadEvent {
                    index: i,
                    reason: "window extends past the route end",
                });
            }
            if !(ev.target_m_per_s > 0.0) || ev.entry_m_per_s <= ev.target_m_per_s {
                return Err(ScenarioError::BadEvent {
                    index: i,
                    reason: "needs entry > target > 0",
                });
            }
            if ev.target_m_per_s > self.speed_limit_at(ev.end_m()) + 1e-9 {
                return Err(ScenarioError::TargetAboveLimit { index: i });
            }
            if let Some(next) = self.events.get(i + 1) {
                if next.trigger_m < ev.end_m() - POSITION_EPS {
                    return Err(ScenarioError::OverlappingEvents { index: i });
                }
            }
        }
        Ok(())
    }
}

/// One optimization problem per event: the advice window becomes the segment
/// and the event velocities its boundary conditions. `samples` and `weights`
/// propagate verbatim.
pub fn events_to_problems(
    scenario: &RouteScenario,
    weights: CostWeights,
    samples: usize,
) -> Vec<SegmentProblem> {
    scenario
        .events
        .iter()
        .map(|ev| SegmentProblem {
            start_m: ev.trigger_m,
            end_m: ev.end_m(),
            entry_m_per_s: ev.entry_m_per_s,
            target_m_per_s: ev.target_m_per_s,
            samples,
            weights,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioError {
    NoSegments,
    BadLength,
    EmptySegment { index: usize },
    NonPositiveLimit { index: usize },
    CoverageGap { position_m: f64 },
    BadEvent { index: usize, reason: &'static str },
    TargetAboveLimit { index: usize },
    OverlappingEvents { index: usize },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::NoSegments => write!(f, "route has no segments"),
            ScenarioError::BadLength => write!(f, "route length must be positive"),
            ScenarioError::EmptySegment { index } => write!(f, "segment {index} has no extent"),
            ScenarioError::NonPositiveLimit { index } => {
                write!(f, "segment {index} has a non-positive speed limit")
            }
            ScenarioError::CoverageGap { position_m } => {
                write!(f, "segments do not cover the route (gap near {position_m} m)")
            }
            ScenarioError::BadEvent { index, reason } => write!(f, "event {index}: {reason}"),
            ScenarioError::TargetAboveLimit { index } => {
                write!(f, "event {index}: target above the downstream speed limit")
            }
            ScenarioError::OverlappingEvents { index } => {
                write!(f, "event {index} overlaps the next advice window")
            }
        }
    }
}

impl core::error::Error for ScenarioError {}

/// The motorway-to-urban assessment route: 4500 m with three 1000 m
/// deceleration events of 20 km/h each (80 -> 60 -> 40 -> 20 km/h).
pub fn motorway_to_urban() -> RouteScenario {
    const KMH: f64 = 1.0 / 3.6;
    let seg = |a: f64, b: f64, lim: f64| RoadSegment {
        start_m: a,
        end_m: b,
        speed_limit_m_per_s: lim * KMH,
    };
    let ev = |trigger: f64, entry: f64, target: f64| VelocityEvent {
        trigger_m: trigger,
        horizon_m: 1000.0,
        entry_m_per_s: entry * KMH,
        target_m_per_s: target * KMH,
    };
    RouteScenario {
        length_m: 4500.0,
        segments: alloc::vec![
            seg(0.0, 1500.0, 80.0),
            seg(1500.0, 3000.0, 60.0),
            seg(3000.0, 4400.0, 40.0),
            seg(4400.0, 4500.0, 20.0),
        ],
        events: alloc::vec![
            ev(500.0, 80.0, 60.0),
            ev(2000.0, 60.0, 40.0),
            ev(3400.0, 40.0, 20.0),
        ],
    }
}
