//! Drive-cycle assessment: segment a cycle, advise its deceleration
//! sections, and compare fuel/time against the no-advice driver.
//!
//! Acceleration and cruising stretches are costed by quasi-static reference
//! tracking (inverse dynamics along the recorded trace) and are identical
//! with advice on or off, so they cancel in the deltas. On each advisable
//! deceleration section the no-advice driver cruises at the entry speed and
//! engine-brakes as late as possible to the exit speed, while the advised
//! run follows the optimizer's mode sequence for the same boundary pair.

use ecodrive_core::cycle::{
    segment_cycle, CycleSection, DriveCycle, SectionKind, SegmentationOptions,
};
use ecodrive_core::dynamics;
use ecodrive_core::modes::DrivingMode;
use ecodrive_core::sim;
use ecodrive_core::solver::{
    samples_for_tolerance, solve_costate, CostWeights, SegmentProblem, SolverOptions,
};
use ecodrive_core::truck::TruckConfig;

#[derive(Debug, Clone, Copy)]
pub struct AssessOptions {
    /// Fixed sample count per advice section; tolerance-scaled when None.
    pub samples: Option<usize>,
    pub tol_m_per_s: f64,
    /// Deceleration sections ending below this speed are not advisable.
    pub min_target_m_per_s: f64,
    pub segmentation: SegmentationOptions,
}

impl Default for AssessOptions {
    fn default() -> Self {
        AssessOptions {
            samples: None,
            tol_m_per_s: 0.1,
            min_target_m_per_s: 2.0,
            segmentation: SegmentationOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PhiOutcome {
    pub phi: f64,
    pub time_s: f64,
    pub fuel_g: f64,
    pub time_increase_pct: f64,
    pub fuel_saved_pct: f64,
    /// Advice sections actually solved / solved sections that fell back to
    /// the baseline behavior (solver reported infeasibility).
    pub advised: usize,
    pub fallbacks: usize,
}

/// One advised outcome on a single section.
#[derive(Debug, Clone, Copy)]
pub struct AdvisedSectionOutcome {
    pub phi: f64,
    pub time_s: f64,
    pub fuel_g: f64,
    /// The solver reported infeasibility and the baseline behavior was kept.
    pub fallback: bool,
}

/// Per-section records of one advisable deceleration stretch; run totals
/// are the common part plus the sum of these records.
#[derive(Debug, Clone)]
pub struct AdvisableSection {
    pub section_index: usize,
    pub start_m: f64,
    pub length_m: f64,
    pub entry_m_per_s: f64,
    pub target_m_per_s: f64,
    pub baseline_time_s: f64,
    pub baseline_fuel_g: f64,
    pub advised: Vec<AdvisedSectionOutcome>,
}

#[derive(Debug, Clone)]
pub struct CycleAssessment {
    pub cycle_name: String,
    pub total_length_m: f64,
    pub sections: Vec<CycleSection>,
    /// Time/fuel of the advice-independent parts (tracking the recorded
    /// trace), identical with advice on or off.
    pub common_time_s: f64,
    pub common_fuel_g: f64,
    pub advisable: Vec<AdvisableSection>,
    /// Share of the cycle length covered by deceleration sections [%].
    pub decel_share_pct: f64,
    pub disabled_time_s: f64,
    pub disabled_fuel_g: f64,
    pub outcomes: Vec<PhiOutcome>,
}

impl CycleAssessment {
    pub fn advisable_sections(&self) -> usize {
        self.advisable.len()
    }
}

/// Quasi-static tracking cost of the recorded trace between two sample
/// indices: per interval, the engine torque that produces the recorded
/// acceleration against the resistances, mapped through the fuel polynomial
/// when positive (clipped at full load), zero in overrun.
fn tracking_totals(cfg: &TruckConfig, cycle: &DriveCycle, i0: usize, i1: usize) -> (f64, f64) {
    let mut time = 0.0;
    let mut fuel = 0.0;
    for i in i0..i1 {
        let dt = cycle.time_s[i + 1] - cycle.time_s[i];
        let va = cycle.speed_m_per_s[i];
        let vb = cycle.speed_m_per_s[i + 1];
        let vbar = 0.5 * (va + vb);
        time += dt;
        if vbar < 0.5 {
            fuel += cfg.idle_fuel_g_per_s * dt; // standstill idling
            continue;
        }
        let Some(gear) = sim::best_cruise_gear(cfg, vbar) else {
            fuel += cfg.idle_fuel_g_per_s * dt; // crawling below the band
            continue;
        };
        let accel = (vb - va) / dt;
        let rw = cfg.wheel_radius_m;
        let mass_eq = cfg.mass_kg + cfg.powertrain_inertia(gear) / (rw * rw);
        let force = mass_eq * accel + dynamics::resistance_force(cfg, vbar);
        if force > 0.0 {
            let omega = dynamics::engine_speed(cfg, DrivingMode::Cruising { gear }, vbar);
            let torque = (force * rw / (cfg.final_drive_ratio * cfg.gear_ratio(gear)))
                .min(cfg.envelope.max_torque_nm(omega));
            fuel += dynamics::fuel_rate(cfg, torque, omega) * dt;
        }
    }
    (time, fuel)
}

/// No-advice behavior on one deceleration section: cruise at the entry
/// speed, then engine-brake from the latest point that still reaches the
/// exit speed at the section end. `None` when even immediate braking cannot
/// shed the speed within the section.
fn baseline_decel(
    cfg: &TruckConfig,
    entry: f64,
    target: f64,
    length: f64,
) -> Option<(f64, f64)> {
    let start = sim::latest_brake_start(cfg, length, target, entry, 2.0).ok()?;
    if start < -1e-9 {
        return None;
    }
    let start = start.max(0.0);
    let gear = sim::best_cruise_gear(cfg, entry)?;
    let fuel = dynamics::mode_fuel_per_meter(cfg, DrivingMode::Cruising { gear }, entry).ok()?
        * start;
    let mut time = start / entry;

    let mut state = sim::SimState::at_start(start, entry, DrivingMode::Cruising { gear });
    while state.position_m < length - 1e-9 {
        let step_m = (length - state.position_m).min(2.0);
        let gear = sim::best_brake_gear(cfg, state.velocity_m_per_s)?;
        state = sim::step(cfg, &state, DrivingMode::EngineBrake { gear }, step_m, 4).ok()?;
    }
    time += state.time_s;
    Some((time, fuel))
}

fn advice_decel(
    cfg: &TruckConfig,
    entry: f64,
    target: f64,
    length: f64,
    weights: CostWeights,
    opts: &AssessOptions,
) -> Option<(f64, f64)> {
    let samples = opts
        .samples
        .unwrap_or_else(|| samples_for_tolerance(cfg, length, target, opts.tol_m_per_s, 8.0));
    let prob = SegmentProblem {
        start_m: 0.0,
        end_m: length,
        entry_m_per_s: entry,
        target_m_per_s: target,
        samples,
        weights,
    };
    let solver = SolverOptions {
        tol_m_per_s: opts.tol_m_per_s,
        ..SolverOptions::default()
    };
    let result = solve_costate(cfg, &prob, &solver).ok()?;
    Some((result.total_time_s(), result.total_fuel_g()))
}

/// Assess one cycle for a list of cost ratios.
pub fn assess_cycle(
    cfg: &TruckConfig,
    cycle: &DriveCycle,
    phis: &[f64],
    opts: &AssessOptions,
) -> Result<CycleAssessment, String> {
    let sections = segment_cycle(cycle, &opts.segmentation).map_err(|e| e.to_string())?;

    // map section boundaries back to sample indices (boundaries sit on
    // samples by construction)
    let mut bounds = Vec::with_capacity(sections.len());
    let mut idx = 0usize;
    for sec in &sections {
        let i0 = idx;
        while cycle.time_s[idx] < sec.end_time_s - 1e-9 {
            idx += 1;
        }
        bounds.push((i0, idx));
    }

    let advisable = |sec: &CycleSection| {
        sec.kind == SectionKind::Deceleration
            && sec.exit_m_per_s >= opts.min_target_m_per_s
            && sec.entry_m_per_s > sec.exit_m_per_s
    };

    // common (advice-independent) cost plus per-section baselines
    let mut common_time = 0.0;
    let mut common_fuel = 0.0;
    let mut advisable_records: Vec<AdvisableSection> = Vec::new();
    for (i, sec) in sections.iter().enumerate() {
        let (i0, i1) = bounds[i];
        if advisable(sec) {
            match baseline_decel(cfg, sec.entry_m_per_s, sec.exit_m_per_s, sec.length_m()) {
                Some((bt, bf)) => {
                    advisable_records.push(AdvisableSection {
                        section_index: i,
                        start_m: sec.start_m,
                        length_m: sec.length_m(),
                        entry_m_per_s: sec.entry_m_per_s,
                        target_m_per_s: sec.exit_m_per_s,
                        baseline_time_s: bt,
                        baseline_fuel_g: bf,
                        advised: Vec::with_capacity(phis.len()),
                    });
                    continue;
                }
                None => {
                    // too steep for the weak baseline brake: track it in
                    // both runs so it cancels
                }
            }
        }
        let (t, f) = tracking_totals(cfg, cycle, i0, i1);
        common_time += t;
        common_fuel += f;
    }

    for record in &mut advisable_records {
        for &phi in phis {
            let weights = CostWeights::from_phi(phi);
            let outcome = match advice_decel(
                cfg,
                record.entry_m_per_s,
                record.target_m_per_s,
                record.length_m,
                weights,
                opts,
            ) {
                Some((t, f)) => AdvisedSectionOutcome {
                    phi,
                    time_s: t,
                    fuel_g: f,
                    fallback: false,
                },
                None => AdvisedSectionOutcome {
                    phi,
                    time_s: record.baseline_time_s,
                    fuel_g: record.baseline_fuel_g,
                    fallback: true,
                },
            };
            record.advised.push(outcome);
        }
    }

    let disabled_time: f64 =
        common_time + advisable_records.iter().map(|s| s.baseline_time_s).sum::<f64>();
    let disabled_fuel: f64 =
        common_fuel + advisable_records.iter().map(|s| s.baseline_fuel_g).sum::<f64>();

    let mut outcomes = Vec::with_capacity(phis.len());
    for (pi, &phi) in phis.iter().enumerate() {
        let mut time = common_time;
        let mut fuel = common_fuel;
        let mut advised = 0usize;
        let mut fallbacks = 0usize;
        for record in &advisable_records {
            let o = record.advised[pi];
            time += o.time_s;
            fuel += o.fuel_g;
            if o.fallback {
                fallbacks += 1;
            } else {
                advised += 1;
            }
        }
        outcomes.push(PhiOutcome {
            phi,
            time_s: time,
            fuel_g: fuel,
            time_increase_pct: 100.0 * (time - disabled_time) / disabled_time,
            fuel_saved_pct: 100.0 * (disabled_fuel - fuel) / disabled_fuel,
            advised,
            fallbacks,
        });
    }

    let decel_len: f64 = sections
        .iter()
        .filter(|s| s.kind == SectionKind::Deceleration)
        .map(|s| s.length_m())
        .sum();
    let total_length = cycle.total_distance_m();
    Ok(CycleAssessment {
        cycle_name: cycle.name.clone(),
        total_length_m: total_length,
        sections,
        common_time_s: common_time,
        common_fuel_g: common_fuel,
        advisable: advisable_records,
        decel_share_pct: 100.0 * decel_len / total_length,
        disabled_time_s: disabled_time,
        disabled_fuel_g: disabled_fuel,
        outcomes,
    })
}
