//! Forward longitudinal simulator, the advice-dispatching state machine and
//! the deterministic baseline driver used as the no-advice reference.
//!
//! The state update per step applies the same discrete relation the solver
//! sweeps backward — the upstream and downstream velocity of a slice satisfy
//! `v_up = v_down - dvds(v_down) * ds` — solved for the downstream value by
//! fixed-point iteration. Substeps refine only the fuel/time quadrature
//! within a step, so replaying a solved mode sequence at matched slice
//! length reproduces the solver's velocity array to iteration tolerance.
//!
//! The baseline driver cruises at the prevailing speed limit and, ahead of
//! every limit drop, engine-brakes in the highest admissible gear starting
//! at the latest position that still meets the lower limit. Advice-enabled
//! runs use the same braking plan for limit drops not covered by an advice
//! window, so a route without events simulates identically with advice on
//! or off.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::dynamics::{self, ModelError};
use crate::modes::DrivingMode;
use crate::route::RouteScenario;
use crate::solver::{SegmentProblem, SolveResult};
use crate::truck::TruckConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub position_m: f64,
    pub velocity_m_per_s: f64,
    pub gear: u8,
    pub mode: DrivingMode,
    pub fuel_g: f64,
    pub time_s: f64,
}

impl SimState {
    pub fn at_start(position_m: f64, velocity_m_per_s: f64, mode: DrivingMode) -> Self {
        SimState {
            position_m,
            velocity_m_per_s,
            gear: mode.gear(),
            mode,
            fuel_g: 0.0,
            time_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Fuel/time quadrature substeps per step.
    pub substeps: usize,
    /// Step length while cruising between advice samples \[m\]; also the
    /// trace granularity.
    pub trace_step_m: f64,
    /// Backward integration step for the latest-braking computation \[m\].
    pub brake_step_m: f64,
    /// Below this velocity the model is invalid \[m/s\].
    pub velocity_floor_m_per_s: f64,
    /// Velocity mismatches up to this are snapped onto the cruise set speed
    /// (the driver applies advice instantaneously) \[m/s\].
    pub cruise_snap_m_per_s: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            substeps: 10,
            trace_step_m: 5.0,
            brake_step_m: 2.0,
            velocity_floor_m_per_s: 0.5,
            cruise_snap_m_per_s: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimError {
    VelocityFloorBreach { position_m: f64, v_m_per_s: f64 },
    /// An event was triggered without a solved advice entry.
    MissingSolution { event: usize },
    /// No gear keeps the engine inside the envelope at this speed.
    NoFeasibleGear { v_m_per_s: f64 },
    /// The latest-braking point for a limit drop lies before the previous
    /// limit change; the scenario cannot be driven by the baseline driver.
    BrakingInfeasible { boundary_m: f64 },
    InvalidScenario,
    Model(ModelError),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::VelocityFloorBreach { position_m, v_m_per_s } => {
                write!(f, "velocity {v_m_per_s:.3} m/s below floor at {position_m:.1} m")
            }
            SimError::MissingSolution { event } => {
                write!(f, "event {event} triggered without a solved advice entry")
            }
            SimError::NoFeasibleGear { v_m_per_s } => {
                write!(f, "no admissible gear at {v_m_per_s:.3} m/s")
            }
            SimError::BrakingInfeasible { boundary_m } => {
                write!(f, "cannot brake down in time for the limit drop at {boundary_m:.1} m")
            }
            SimError::InvalidScenario => write!(f, "scenario failed validation"),
            SimError::Model(e) => write!(f, "model: {e}"),
        }
    }
}

impl core::error::Error for SimError {}

impl From<ModelError> for SimError {
    fn from(e: ModelError) -> Self {
        SimError::Model(e)
    }
}

/// Downstream velocity after `ds` meters under `mode`, satisfying the
/// slice relation `v_from = w - dvds(w) * ds`.
fn step_velocity(
    cfg: &TruckConfig,
    mode: DrivingMode,
    v_from: f64,
    ds: f64,
    position_m: f64,
    floor: f64,
) -> Result<f64, SimError> {
    if matches!(mode, DrivingMode::Cruising { .. }) {
        return Ok(v_from);
    }
    let mut w = v_from + dynamics::mode_dvds(cfg, mode, v_from)? * ds;
    for _ in 0..60 {
        if w < floor {
            return Err(SimError::VelocityFloorBreach {
                position_m: position_m + ds,
                v_m_per_s: w,
            });
        }
        let next = v_from + dynamics::mode_dvds(cfg, mode, w)? * ds;
        if (next - w).abs() <= 1e-12 * w.abs().max(1.0) {
            return Ok(next);
        }
        w = next;
    }
    Ok(w)
}

/// Advance one step of `delta_s` meters under a fixed driving mode,
/// accumulating elapsed time and fuel.
///
/// Time integrates `1/v` and cruising fuel the map rate over `substeps`
/// trapezoids along the step; eco-roll fuel is the idle rate times the
/// elapsed time, and coasting/engine braking burn exactly zero.
pub fn step(
    cfg: &TruckConfig,
    state: &SimState,
    mode: DrivingMode,
    delta_s: f64,
    substeps: usize,
) -> Result<SimState, SimError> {
    debug_assert!(delta_s > 0.0);
    let v0 = state.velocity_m_per_s;
    let floor = 0.5;
    let w = step_velocity(cfg, mode, v0, delta_s, state.position_m, floor)?;

    let n = substeps.max(1);
    let h = delta_s / n as f64;
    let vel_at = |j: usize| v0 + (w - v0) * j as f64 / n as f64;
    let mut dt = 0.0;
    let mut fuel = 0.0;
    match mode {
        DrivingMode::Cruising { gear } => {
            let rate = |v: f64| {
                let omega = dynamics::engine_speed(cfg, mode, v);
                dynamics::fuel_rate(cfg, dynamics::cruise_torque(cfg, gear, v), omega) / v
            };
            for j in 0..n {
                let (va, vb) = (vel_at(j), vel_at(j + 1));
                dt += h * 0.5 * (1.0 / va + 1.0 / vb);
                fuel += h * 0.5 * (rate(va) + rate(vb));
            }
        }
        DrivingMode::EcoRoll => {
            for j in 0..n {
                let (va, vb) = (vel_at(j), vel_at(j + 1));
                dt += h * 0.5 * (1.0 / va + 1.0 / vb);
            }
            fuel = cfg.idle_fuel_g_per_s * dt;
        }
        _ => {
            for j in 0..n {
                let (va, vb) = (vel_at(j), vel_at(j + 1));
                dt += h * 0.5 * (1.0 / va + 1.0 / vb);
            }
        }
    }

    Ok(SimState {
        position_m: state.position_m + delta_s,
        velocity_m_per_s: w,
        gear: mode.gear(),
        mode,
        fuel_g: state.fuel_g + fuel,
        time_s: state.time_s + dt,
    })
}

/// Highest gear that can hold `v` inside the engine envelope (speed band
/// and full-load torque).
pub fn best_cruise_gear(cfg: &TruckConfig, v: f64) -> Option<u8> {
    (1..=cfg.gear_count()).rev().find(|&gear| {
        let omega = dynamics::engine_speed(cfg, DrivingMode::Cruising { gear }, v);
        cfg.envelope.speed_in_band(omega)
            && dynamics::cruise_torque(cfg, gear, v) <= cfg.envelope.max_torque_nm(omega)
    })
}

/// Highest gear whose engine speed stays in band at `v` (for engine
/// braking; the full-load curve does not apply).
pub fn best_brake_gear(cfg: &TruckConfig, v: f64) -> Option<u8> {
    (1..=cfg.gear_count()).rev().find(|&gear| {
        let omega = dynamics::engine_speed(cfg, DrivingMode::EngineBrake { gear }, v);
        cfg.envelope.speed_in_band(omega)
    })
}

/// Latest position at which engine braking in the highest admissible gear
/// still brings `from_m_per_s` down to `to_m_per_s` by `boundary_m`,
/// computed by backward integration from the boundary.
pub fn latest_brake_start(
    cfg: &TruckConfig,
    boundary_m: f64,
    to_m_per_s: f64,
    from_m_per_s: f64,
    step_m: f64,
) -> Result<f64, SimError> {
    if from_m_per_s <= to_m_per_s {
        return Ok(boundary_m);
    }
    let mut v = to_m_per_s;
    let mut s = boundary_m;
    loop {
        let gear = best_brake_gear(cfg, v).ok_or(SimError::NoFeasibleGear { v_m_per_s: v })?;
        let f = dynamics::mode_dvds(cfg, DrivingMode::EngineBrake { gear }, v)?;
        let up = v - f * step_m;
        if up >= from_m_per_s {
            let frac = (from_m_per_s - v) / (up - v);
            return Ok(s - frac * step_m);
        }
        v = up;
        s -= step_m;
        if s < boundary_m - 1e5 {
            return Err(SimError::BrakingInfeasible { boundary_m });
        }
    }
}

/// Dispatcher state: idle until a trigger is crossed, tracking advice by
/// position while advising, and holding a set speed after the advice ends
/// (or is cut short).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FsmState {
    Idle,
    Advising { event: usize, cursor: usize },
    Cruising { set_m_per_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdviceFsm {
    pub state: FsmState,
    pub ed_enabled: bool,
    /// Early-termination snap tolerance around set speeds \[m/s\].
    pub snap_m_per_s: f64,
    /// Event whose advice already ended (normally or cut short); it must
    /// not re-arm while the truck is still inside its window.
    pub completed_event: Option<usize>,
}

impl AdviceFsm {
    pub fn new(ed_enabled: bool) -> Self {
        AdviceFsm {
            state: FsmState::Idle,
            ed_enabled,
            snap_m_per_s: SimOptions::default().cruise_snap_m_per_s,
            completed_event: None,
        }
    }
}

/// Advance the dispatcher at the truck's current position/velocity and
/// return the successor state plus the commanded driving mode.
///
/// Advising selects the advice sample whose position bracket contains the
/// truck (lower-inclusive). Advice is cut over to cruising when the target
/// velocity is reached early or the active speed limit is exceeded; with
/// advice disabled the dispatcher never leaves idle. While idle or holding
/// a set speed, the command is the highest-gear cruise at the current
/// velocity, or an engine brake when the truck is above the set speed.
pub fn fsm_advance(
    fsm: &AdviceFsm,
    cfg: &TruckConfig,
    sim: &SimState,
    scenario: &RouteScenario,
    solutions: &BTreeMap<usize, SolveResult>,
) -> Result<(AdviceFsm, DrivingMode), SimError> {
    let s = sim.position_m;
    let v = sim.velocity_m_per_s;
    let limit = scenario.speed_limit_at(s);
    let mut next = *fsm;

    if let FsmState::Advising { event, .. } = fsm.state {
        let ev = &scenario.events[event];
        if s >= ev.end_m() - 1e-9 {
            next.state = FsmState::Cruising { set_m_per_s: ev.target_m_per_s };
            next.completed_event = Some(event);
        } else if v <= ev.target_m_per_s + 1e-9 {
            // target reached early
            next.state = FsmState::Cruising { set_m_per_s: ev.target_m_per_s };
            next.completed_event = Some(event);
        } else if v > limit + 1e-9 {
            // crossing the active limit disables the advice immediately
            next.state = FsmState::Cruising { set_m_per_s: limit };
            next.completed_event = Some(event);
        } else {
            let sol = solutions.get(&event).ok_or(SimError::MissingSolution { event })?;
            let ds = ev.horizon_m / sol.modes.len() as f64;
            let cursor = (((s - ev.trigger_m) / ds) + 1e-9) as usize;
            let cursor = cursor.min(sol.modes.len() - 1);
            next.state = FsmState::Advising { event, cursor };
            return Ok((next, sol.modes[cursor]));
        }
    }

    // idle or holding a set speed: arm advice when crossing a trigger,
    // unless this event's advice already ended
    if fsm.ed_enabled {
        if let Some(event) = scenario.event_at(s) {
            if next.completed_event != Some(event) {
                let sol = solutions.get(&event).ok_or(SimError::MissingSolution { event })?;
                let ev = &scenario.events[event];
                let ds = ev.horizon_m / sol.modes.len() as f64;
                let cursor =
                    ((((s - ev.trigger_m) / ds) + 1e-9) as usize).min(sol.modes.len() - 1);
                next.state = FsmState::Advising { event, cursor };
                return Ok((next, sol.modes[cursor]));
            }
        }
    }

    let set = match next.state {
        FsmState::Cruising { set_m_per_s } => set_m_per_s.min(limit),
        _ => limit,
    };
    if let FsmState::Cruising { .. } = next.state {
        next.state = FsmState::Cruising { set_m_per_s: set };
    }
    if v > set + fsm.snap_m_per_s {
        let gear = best_brake_gear(cfg, v).ok_or(SimError::NoFeasibleGear { v_m_per_s: v })?;
        Ok((next, DrivingMode::EngineBrake { gear }))
    } else {
        let hold = v.min(set);
        let gear = best_cruise_gear(cfg, hold).ok_or(SimError::NoFeasibleGear { v_m_per_s: hold })?;
        Ok((next, DrivingMode::Cruising { gear }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub s_m: f64,
    pub t_s: f64,
    pub v_m_per_s: f64,
    pub gear: u8,
    pub mode: DrivingMode,
    pub fuel_g_cum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SectionTotals {
    pub time_s: f64,
    pub fuel_g: f64,
}

/// Full log of one simulated route pass.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteLog {
    pub trace: Vec<TraceRow>,
    /// Time/fuel accumulated inside each event window.
    pub sections: Vec<SectionTotals>,
    pub route: SectionTotals,
}

struct BrakePhase {
    start_m: f64,
    boundary_m: f64,
    to_m_per_s: f64,
}

fn brake_plan(
    cfg: &TruckConfig,
    scenario: &RouteScenario,
    step_m: f64,
) -> Result<Vec<BrakePhase>, SimError> {
    let mut plan = Vec::new();
    for pair in scenario.segments.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b.speed_limit_m_per_s < a.speed_limit_m_per_s {
            let start = latest_brake_start(
                cfg,
                a.end_m,
                b.speed_limit_m_per_s,
                a.speed_limit_m_per_s,
                step_m,
            )?;
            if start < a.start_m - 1e-9 {
                return Err(SimError::BrakingInfeasible { boundary_m: a.end_m });
            }
            plan.push(BrakePhase {
                start_m: start,
                boundary_m: a.end_m,
                to_m_per_s: b.speed_limit_m_per_s,
            });
        }
    }
    Ok(plan)
}

/// Simulate a full route pass. With `advice`, triggered events are tracked
/// through the dispatcher; without, the baseline driver runs alone. Either
/// way, limit drops outside advice windows are handled by the anticipatory
/// braking plan.
pub fn run_route(
    cfg: &TruckConfig,
    scenario: &RouteScenario,
    advice: Option<&BTreeMap<usize, SolveResult>>,
    opts: &SimOptions,
) -> Result<RouteLog, SimError> {
    scenario.validate().map_err(|_| SimError::InvalidScenario)?;
    let empty = BTreeMap::new();
    let solutions = advice.unwrap_or(&empty);
    let plan = brake_plan(cfg, scenario, opts.brake_step_m)?;

    // positions every step must land on exactly
    let mut breakpoints: Vec<f64> = Vec::new();
    for seg in &scenario.segments {
        breakpoints.push(seg.start_m);
        breakpoints.push(seg.end_m);
    }
    for ev in &scenario.events {
        breakpoints.push(ev.trigger_m);
        breakpoints.push(ev.end_m());
    }
    for phase in &plan {
        breakpoints.push(phase.start_m);
    }
    breakpoints.push(scenario.length_m);
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breakpoints.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let v_start = scenario.speed_limit_at(0.0);
    let gear = best_cruise_gear(cfg, v_start)
        .ok_or(SimError::NoFeasibleGear { v_m_per_s: v_start })?;
    let mut state = SimState::at_start(0.0, v_start, DrivingMode::Cruising { gear });
    let mut fsm = AdviceFsm::new(advice.is_some());
    fsm.snap_m_per_s = opts.cruise_snap_m_per_s;

    let mut sections = alloc::vec![SectionTotals::default(); scenario.events.len()];
    let mut trace = Vec::new();
    trace.push(TraceRow {
        s_m: 0.0,
        t_s: 0.0,
        v_m_per_s: state.velocity_m_per_s,
        gear: state.gear,
        mode: state.mode,
        fuel_g_cum: 0.0,
    });

    while state.position_m < scenario.length_m - 1e-6 {
        let s = state.position_m;
        let (next_fsm, mut cmd) = fsm_advance(&fsm, cfg, &state, scenario, solutions)?;
        fsm = next_fsm;

        // instantaneous-driver snap onto the set speed
        if let FsmState::Cruising { set_m_per_s } = fsm.state {
            if (state.velocity_m_per_s - set_m_per_s).abs() <= fsm.snap_m_per_s {
                state.velocity_m_per_s = set_m_per_s;
                if let DrivingMode::Cruising { .. } = cmd {
                    let gear = best_cruise_gear(cfg, set_m_per_s)
                        .ok_or(SimError::NoFeasibleGear { v_m_per_s: set_m_per_s })?;
                    cmd = DrivingMode::Cruising { gear };
                }
            }
        }

        let step_len = if let FsmState::Advising { event, cursor } = fsm.state {
            let ev = &scenario.events[event];
            let sol = &solutions[&event];
            let ds = ev.horizon_m / sol.modes.len() as f64;
            ev.trigger_m + (cursor + 1) as f64 * ds - s
        } else {
            // baseline braking overrides cruising inside a planned phase
            if let Some(phase) = plan
                .iter()
                .find(|p| s >= p.start_m - 1e-9 && s < p.boundary_m - 1e-9)
            {
                if state.velocity_m_per_s > phase.to_m_per_s + 1e-9
                    && scenario.event_at(s).is_none()
                {
                    let gear = best_brake_gear(cfg, state.velocity_m_per_s).ok_or(
                        SimError::NoFeasibleGear {
                            v_m_per_s: state.velocity_m_per_s,
                        },
                    )?;
                    cmd = DrivingMode::EngineBrake { gear };
                }
            }
            let next_bp = breakpoints
                .iter()
                .copied()
                .find(|&b| b > s + 1e-9)
                .unwrap_or(scenario.length_m);
            (next_bp - s).min(opts.trace_step_m)
        };
        let step_len = step_len.min(scenario.length_m - s).max(1e-9);

        let before = state;
        state = step(cfg, &state, cmd, step_len, opts.substeps)?;

        // settle exactly on the set speed when a phase boundary is crossed
        // (instantaneous driver): integration residue from replaying advice
        // at the nominal entry speed, and the fractional first step of a
        // planned brake, both land within the snap tolerance
        let near = |v: f64, set: f64| (v - set).abs() <= opts.cruise_snap_m_per_s;
        if advice.is_some() {
            if let Some(ev) = scenario
                .events
                .iter()
                .find(|ev| (state.position_m - ev.end_m()).abs() < 1e-6)
            {
                if near(state.velocity_m_per_s, ev.target_m_per_s) {
                    state.velocity_m_per_s = ev.target_m_per_s;
                }
            }
        }
        if matches!(cmd, DrivingMode::EngineBrake { .. }) {
            if let Some(phase) = plan
                .iter()
                .find(|p| (state.position_m - p.boundary_m).abs() < 1e-6)
            {
                if near(state.velocity_m_per_s, phase.to_m_per_s) {
                    state.velocity_m_per_s = phase.to_m_per_s;
                }
            }
        }

        if let Some(idx) = scenario.event_at(before.position_m) {
            sections[idx].time_s += state.time_s - before.time_s;
            sections[idx].fuel_g += state.fuel_g - before.fuel_g;
        }
        trace.push(TraceRow {
            s_m: state.position_m,
            t_s: state.time_s,
            v_m_per_s: state.velocity_m_per_s,
            gear: state.gear,
            mode: state.mode,
            fuel_g_cum: state.fuel_g,
        });
    }

    Ok(RouteLog {
        trace,
        sections,
        route: SectionTotals {
            time_s: state.time_s,
            fuel_g: state.fuel_g,
        },
    })
}

/// Per-section assessment line: absolute time/fuel plus deltas relative to
/// the baseline run (0 for the baseline itself).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionReport {
    pub time_s: f64,
    pub fuel_g: f64,
    pub time_increase_pct: f64,
    pub fuel_saved_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripReport {
    pub sections: Vec<SectionReport>,
    pub route: SectionReport,
}

fn report_line(run: SectionTotals, baseline: SectionTotals) -> SectionReport {
    let pct = |delta: f64, base: f64| if base > 0.0 { 100.0 * delta / base } else { 0.0 };
    SectionReport {
        time_s: run.time_s,
        fuel_g: run.fuel_g,
        time_increase_pct: pct(run.time_s - baseline.time_s, baseline.time_s),
        fuel_saved_pct: pct(baseline.fuel_g - run.fuel_g, baseline.fuel_g),
    }
}

/// Per-section and whole-route deltas of one run against a baseline run.
pub fn compare_logs(run: &RouteLog, baseline: &RouteLog) -> TripReport {
    TripReport {
        sections: run
            .sections
            .iter()
            .zip(&baseline.sections)
            .map(|(r, b)| report_line(*r, *b))
            .collect(),
        route: report_line(run.route, baseline.route),
    }
}

/// Simulate the route and report per-section and whole-route time/fuel with
/// deltas against the baseline (no-advice) driver. With advice disabled the
/// report simply describes the baseline against itself.
pub fn run_trip(
    cfg: &TruckConfig,
    scenario: &RouteScenario,
    solutions: &BTreeMap<usize, SolveResult>,
    ed_enabled: bool,
    opts: &SimOptions,
) -> Result<TripReport, SimError> {
    let baseline = run_route(cfg, scenario, None, opts)?;
    let log = if ed_enabled {
        run_route(cfg, scenario, Some(solutions), opts)?
    } else {
        baseline.clone()
    };
    Ok(compare_logs(&log, &baseline))
}

/// Forward-simulate a solved mode sequence at matched slice length and
/// return the velocity at every slice boundary, for consistency checks
/// against the solver's own array.
pub fn replay_solution(
    cfg: &TruckConfig,
    prob: &SegmentProblem,
    result: &SolveResult,
    substeps: usize,
) -> Result<Vec<f64>, SimError> {
    let ds = prob.delta_s();
    let mut state = SimState::at_start(prob.start_m, result.v[0], result.modes[0]);
    let mut velocities = Vec::with_capacity(result.modes.len() + 1);
    velocities.push(state.velocity_m_per_s);
    for &mode in &result.modes {
        state = step(cfg, &state, mode, ds, substeps)?;
        velocities.push(state.velocity_m_per_s);
    }
    Ok(velocities)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::route::motorway_to_urban;
    use crate::solver::{solve_costate, CostWeights, SolverOptions};

    fn cfg() -> TruckConfig {
        TruckConfig::default()
    }

    #[test]
    fn cruising_step_is_exact() {
        let cfg = cfg();
        let v = 22.2;
        let s0 = SimState::at_start(0.0, v, DrivingMode::Cruising { gear: 8 });
        let s1 = step(&cfg, &s0, DrivingMode::Cruising { gear: 8 }, 50.0, 10).unwrap();
        assert_eq!(s1.velocity_m_per_s, v);
        assert!((s1.time_s - 50.0 / v).abs() < 1e-12);
        let rate = dynamics::mode_fuel_per_meter(&cfg, DrivingMode::Cruising { gear: 8 }, v)
            .unwrap();
        assert!((s1.fuel_g - rate * 50.0).abs() < 1e-12);
    }

    #[test]
    fn zero_fuel_modes_and_idle_fuel() {
        let cfg = cfg();
        let s0 = SimState::at_start(0.0, 19.0861, DrivingMode::Coasting { gear: 8 });
        let coast = step(&cfg, &s0, DrivingMode::Coasting { gear: 8 }, 30.0, 10).unwrap();
        assert_eq!(coast.fuel_g, 0.0);
        let brake = step(&cfg, &s0, DrivingMode::EngineBrake { gear: 8 }, 30.0, 10).unwrap();
        assert_eq!(brake.fuel_g, 0.0);

        // ~0.5 g over 100 m of eco-roll near 19.09 m/s (slightly above the
        // constant-speed estimate because the truck slows down a little)
        let eco = step(&cfg, &s0, DrivingMode::EcoRoll, 100.0, 10).unwrap();
        assert!((eco.fuel_g - 0.5).abs() < 0.015, "got {}", eco.fuel_g);
        assert!((eco.fuel_g - cfg.idle_fuel_g_per_s * eco.time_s).abs() < 1e-15);
    }

    #[test]
    fn floor_breach_is_reported() {
        let cfg = cfg();
        let s0 = SimState::at_start(0.0, 1.2, DrivingMode::EngineBrake { gear: 1 });
        let err = step(&cfg, &s0, DrivingMode::EngineBrake { gear: 1 }, 20.0, 10).unwrap_err();
        assert!(matches!(err, SimError::VelocityFloorBreach { .. }));
    }

    fn fake_solution(n: usize, v0: f64) -> SolveResult {
        SolveResult {
            v: alloc::vec![v0; n + 1],
            lambda: alloc::vec![0.0; n + 1],
            modes: alloc::vec![DrivingMode::Coasting { gear: 8 }; n],
            omega_rpm: alloc::vec![1000.0; n],
            fuel_g: alloc::vec![0.0; n],
            time_s: alloc::vec![1.0; n],
            cost: 0.0,
            converged: true,
            iterations: 0,
        }
    }

    #[test]
    fn fsm_transitions() {
        let cfg = cfg();
        let scenario = motorway_to_urban();
        let mut solutions = BTreeMap::new();
        solutions.insert(0usize, fake_solution(10, 80.0 / 3.6));

        // exactly at the trigger: advising, first sample commanded
        let fsm = AdviceFsm::new(true);
        let state = SimState::at_start(500.0, 80.0 / 3.6, DrivingMode::Cruising { gear: 8 });
        let (fsm2, cmd) = fsm_advance(&fsm, &cfg, &state, &scenario, &solutions).unwrap();
        assert_eq!(fsm2.state, FsmState::Advising { event: 0, cursor: 0 });
        assert_eq!(cmd, DrivingMode::Coasting { gear: 8 });

        // target reached early: cut over to cruising at the target
        let state = SimState::at_start(900.0, 60.0 / 3.6 - 0.01, DrivingMode::Coasting { gear: 8 });
        let fsm = AdviceFsm {
            state: FsmState::Advising { event: 0, cursor: 4 },
            ..AdviceFsm::new(true)
        };
        let (fsm2, cmd) = fsm_advance(&fsm, &cfg, &state, &scenario, &solutions).unwrap();
        assert!(matches!(fsm2.state, FsmState::Cruising { .. }));
        assert!(matches!(cmd, DrivingMode::Cruising { .. }));

        // crossing the active limit disables the advice
        let state = SimState::at_start(900.0, 81.0 / 3.6, DrivingMode::Coasting { gear: 8 });
        let fsm = AdviceFsm {
            state: FsmState::Advising { event: 0, cursor: 4 },
            ..AdviceFsm::new(true)
        };
        let (fsm2, cmd) = fsm_advance(&fsm, &cfg, &state, &scenario, &solutions).unwrap();
        assert!(matches!(fsm2.state, FsmState::Cruising { .. }));
        assert!(matches!(cmd, DrivingMode::EngineBrake { .. }));

        // advice disabled: idle across triggers
        let fsm = AdviceFsm::new(false);
        let state = SimState::at_start(500.0, 80.0 / 3.6, DrivingMode::Cruising { gear: 8 });
        let (fsm2, _) = fsm_advance(&fsm, &cfg, &state, &scenario, &BTreeMap::new()).unwrap();
        assert_eq!(fsm2.state, FsmState::Idle);

        // triggered event without a solution
        let fsm = AdviceFsm::new(true);
        let err = fsm_advance(&fsm, &cfg, &state, &scenario, &BTreeMap::new()).unwrap_err();
        assert_eq!(err, SimError::MissingSolution { event: 0 });
    }

    #[test]
    fn replay_matches_solver_velocities() {
        let cfg = cfg();
        let samples = crate::solver::samples_for_tolerance(&cfg, 1000.0, 60.0 / 3.6, 0.1, 8.0);
        let prob = SegmentProblem {
            start_m: 0.0,
            end_m: 1000.0,
            entry_m_per_s: 80.0 / 3.6,
            target_m_per_s: 60.0 / 3.6,
            samples,
            weights: CostWeights::from_phi(15.0),
        };
        let sol = solve_costate(&cfg, &prob, &SolverOptions::default()).unwrap();
        let replay = replay_solution(&cfg, &prob, &sol, 10).unwrap();
        let worst = replay
            .iter()
            .zip(&sol.v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= 1e-3, "worst per-sample deviation {worst}");
    }

    #[test]
    fn zero_event_route_identical_with_and_without_advice() {
        let cfg = cfg();
        let mut scenario = motorway_to_urban();
        scenario.events.clear();
        let opts = SimOptions::default();
        let empty = BTreeMap::new();
        let with = run_route(&cfg, &scenario, Some(&empty), &opts).unwrap();
        let without = run_route(&cfg, &scenario, None, &opts).unwrap();
        assert_eq!(with, without);

        let report = run_trip(&cfg, &scenario, &empty, true, &opts).unwrap();
        assert_eq!(report.route.time_increase_pct, 0.0);
        assert_eq!(report.route.fuel_saved_pct, 0.0);
    }

    #[test]
    fn trip_report_shows_savings_on_the_standard_route() {
        let cfg = cfg();
        let scenario = motorway_to_urban();
        let opts = SimOptions::default();
        let weights = CostWeights::from_phi(15.0);
        let mut solutions = BTreeMap::new();
        for (i, ev) in scenario.events.iter().enumerate() {
            let samples = crate::solver::samples_for_tolerance(
                &cfg,
                ev.horizon_m,
                ev.target_m_per_s,
                0.1,
                8.0,
            );
            let prob = SegmentProblem {
                start_m: ev.trigger_m,
                end_m: ev.end_m(),
                entry_m_per_s: ev.entry_m_per_s,
                target_m_per_s: ev.target_m_per_s,
                samples,
                weights,
            };
            solutions.insert(i, solve_costate(&cfg, &prob, &SolverOptions::default()).unwrap());
        }
        let report = run_trip(&cfg, &scenario, &solutions, true, &opts).unwrap();
        assert!(report.route.fuel_saved_pct > 0.0, "{:?}", report.route);
        assert!(report.route.time_increase_pct > 0.0);
        for sec in &report.sections {
            assert!(sec.fuel_saved_pct > 0.0, "{sec:?}");
        }
        // highest-entry-speed section saves the largest share
        assert!(report.sections[0].fuel_saved_pct > report.sections[1].fuel_saved_pct);
        assert!(report.sections[1].fuel_saved_pct > report.sections[2].fuel_saved_pct);

        // the advised run never exceeds the active speed limit
        let log = run_route(&cfg, &scenario, Some(&solutions), &opts).unwrap();
        for row in &log.trace {
            let limit = scenario.speed_limit_at(row.s_m);
            assert!(
                row.v_m_per_s <= limit + 1e-6,
                "v {} above limit {} at {} m",
                row.v_m_per_s,
                limit,
                row.s_m
            );
        }
    }

    #[test]
    fn route_totals_match_trace_accumulation() {
        let cfg = cfg();
        let scenario = motorway_to_urban();
        let log = run_route(&cfg, &scenario, None, &SimOptions::default()).unwrap();
        let last = log.trace.last().unwrap();
        assert!((last.fuel_g_cum - log.route.fuel_g).abs() < 1e-9);
        assert!((last.t_s - log.route.time_s).abs() < 1e-9);
        assert!((last.s_m - scenario.length_m).abs() < 1e-6);
        // positions strictly increase and velocity stays positive
        for pair in log.trace.windows(2) {
            assert!(pair[1].s_m > pair[0].s_m);
            assert!(pair[1].v_m_per_s > 0.0);
        }
        // section totals never exceed the route totals
        let sec_fuel: f64 = log.sections.iter().map(|s| s.fuel_g).sum();
        assert!(sec_fuel <= log.route.fuel_g + 1e-9);

        // independent accumulation: each section's totals equal the trace
        // deltas across its window, and the route splits exactly into
        // section plus inter-section shares
        let at = |s: f64| {
            log.trace
                .iter()
                .find(|row| (row.s_m - s).abs() < 1e-6)
                .unwrap_or_else(|| panic!("no trace row at {s} m"))
        };
        let mut windows_fuel = 0.0;
        for (ev, totals) in scenario.events.iter().zip(&log.sections) {
            let (a, b) = (at(ev.trigger_m), at(ev.end_m()));
            assert!((b.fuel_g_cum - a.fuel_g_cum - totals.fuel_g).abs() < 1e-9);
            assert!((b.t_s - a.t_s - totals.time_s).abs() < 1e-9);
            windows_fuel += totals.fuel_g;
        }
        let inter_fuel = log.route.fuel_g - windows_fuel;
        assert!(inter_fuel > 0.0);
    }
}
