//! Plot-ready data files plus the plain-text and JSON report writers.
//! All numeric output uses fixed-precision formatting and carries no
//! timestamps, so identical runs produce byte-identical files.

use serde::Serialize;

use ecodrive_core::sim::{RouteLog, TripReport};
use ecodrive_core::solver::{CostateIteration, SegmentProblem, SolveResult};

use crate::assess::CycleAssessment;

fn phi_label(phi: Option<f64>) -> String {
    match phi {
        Some(p) => format!("{p}"),
        None => "-".to_string(),
    }
}

// ---------------------------------------------------------------- solve ---

/// Per-slice solution columns: velocity/co-state panel, gear panel and
/// engine-speed panel over distance, one row per slice.
pub fn profile_data(prob: &SegmentProblem, result: &SolveResult) -> String {
    let mut out = String::from("# s_m v_m_per_s lambda mode gear omega_rpm fuel_g time_s\n");
    let ds = prob.delta_s();
    for k in 0..result.modes.len() {
        let s = prob.start_m + k as f64 * ds;
        out.push_str(&format!(
            "{:.4} {:.6} {:.6} {} {} {:.2} {:.6} {:.6}\n",
            s,
            result.v[k],
            result.lambda[k],
            result.modes[k],
            result.modes[k].gear(),
            result.omega_rpm[k],
            result.fuel_g[k],
            result.time_s[k],
        ));
    }
    out
}

pub fn costate_trace_data(trace: &[CostateIteration]) -> String {
    let mut out = String::from("# iteration lambda_n error_m_per_s lambda_lo lambda_hi\n");
    for it in trace {
        out.push_str(&format!(
            "{} {:.9e} {:.6} {:.9e} {:.9e}\n",
            it.iteration, it.lambda_n, it.error_m_per_s, it.lambda_lo, it.lambda_hi
        ));
    }
    out
}

#[derive(Serialize)]
pub struct SolveSummary {
    pub event: usize,
    pub phi: f64,
    pub samples: usize,
    pub delta_s_m: f64,
    pub converged: bool,
    pub iterations: usize,
    pub boundary_error_m_per_s: f64,
    pub cost: f64,
    pub fuel_g: f64,
    pub time_s: f64,
}

// ----------------------------------------------------------------- trip ---

#[derive(Serialize)]
pub struct SectionJson {
    pub time_s: f64,
    pub fuel_g: f64,
    pub time_increase_pct: Option<f64>,
    pub fuel_saved_pct: Option<f64>,
}

#[derive(Serialize)]
pub struct TripRunJson {
    pub ed_enabled: bool,
    pub phi: Option<f64>,
    pub sections: Vec<SectionJson>,
    pub route: SectionJson,
}

#[derive(Serialize)]
pub struct TripJson {
    pub route: String,
    pub section_count: usize,
    pub runs: Vec<TripRunJson>,
}

fn section_json(sec: &ecodrive_core::sim::SectionReport, baseline: bool) -> SectionJson {
    SectionJson {
        time_s: sec.time_s,
        fuel_g: sec.fuel_g,
        time_increase_pct: (!baseline).then_some(sec.time_increase_pct),
        fuel_saved_pct: (!baseline).then_some(sec.fuel_saved_pct),
    }
}

pub fn trip_json(route: &str, runs: &[(Option<f64>, TripReport)]) -> TripJson {
    TripJson {
        route: route.to_string(),
        section_count: runs.first().map(|(_, r)| r.sections.len()).unwrap_or(0),
        runs: runs
            .iter()
            .map(|(phi, report)| TripRunJson {
                ed_enabled: phi.is_some(),
                phi: *phi,
                sections: report
                    .sections
                    .iter()
                    .map(|s| section_json(s, phi.is_none()))
                    .collect(),
                route: section_json(&report.route, phi.is_none()),
            })
            .collect(),
    }
}

/// Combined table: one row per run (baseline first), one column block of
/// `time_s time_incr_pct fuel_g fuel_saved_pct` per section plus the route.
pub fn trip_table(route: &str, runs: &[(Option<f64>, TripReport)]) -> String {
    let sections = runs.first().map(|(_, r)| r.sections.len()).unwrap_or(0);
    let mut out = format!("# trip report: {route}\n");
    out.push_str("# one block of [time_s time_incr_pct fuel_g fuel_saved_pct] per section, then the route\n");
    out.push_str(&format!("{:<9} {:>6}", "ed", "phi"));
    for i in 0..sections {
        let name = format!("section{}", i + 1);
        out.push_str(&format!(" | {name:>12} {:>9} {:>12} {:>9}", "incr%", "fuel_g", "saved%"));
    }
    out.push_str(&format!(" | {:>12} {:>9} {:>12} {:>9}\n", "route", "incr%", "fuel_g", "saved%"));

    for (phi, report) in runs {
        let ed = if phi.is_some() { "enabled" } else { "disabled" };
        out.push_str(&format!("{ed:<9} {:>6}", phi_label(*phi)));
        let blocks = report.sections.iter().chain(core::iter::once(&report.route));
        for sec in blocks {
            if phi.is_some() {
                out.push_str(&format!(
                    " | {:>12.4} {:>9.2} {:>12.4} {:>9.2}",
                    sec.time_s, sec.time_increase_pct, sec.fuel_g, sec.fuel_saved_pct
                ));
            } else {
                out.push_str(&format!(
                    " | {:>12.4} {:>9} {:>12.4} {:>9}",
                    sec.time_s, "-", sec.fuel_g, "-"
                ));
            }
        }
        out.push('\n');
    }
    out
}

/// Per-step simulation trace: `s_m t_s v_ms gear mode fuel_g_cum`.
pub fn trace_data(log: &RouteLog) -> String {
    let mut out = String::from("# s_m t_s v_ms gear mode fuel_g_cum\n");
    for row in &log.trace {
        out.push_str(&format!(
            "{:.4} {:.6} {:.6} {} {} {:.6}\n",
            row.s_m, row.t_s, row.v_m_per_s, row.gear, row.mode, row.fuel_g_cum
        ));
    }
    out
}

// --------------------------------------------------------------- verify ---

#[derive(Serialize)]
pub struct VerifyRow {
    pub event: usize,
    pub phi: f64,
    pub samples: usize,
    pub outcome: VerifyOutcome,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerifyOutcome {
    Compared { j_dp: f64, j_pmp: f64, gap_pct: f64 },
    Failed { reason: String },
}

#[derive(Serialize)]
pub struct VerifyJson {
    pub route: String,
    pub gap_bound_pct: f64,
    pub rows: Vec<VerifyRow>,
}

pub fn verify_table(report: &VerifyJson) -> String {
    let mut out = format!(
        "# optimality check: {} (gap bound {:.2} %)\n# event phi samples j_dp j_pmp gap_pct\n",
        report.route, report.gap_bound_pct
    );
    for row in &report.rows {
        match &row.outcome {
            VerifyOutcome::Compared { j_dp, j_pmp, gap_pct } => {
                out.push_str(&format!(
                    "{} {} {} {:.6} {:.6} {:+.4}\n",
                    row.event, row.phi, row.samples, j_dp, j_pmp, gap_pct
                ));
            }
            VerifyOutcome::Failed { reason } => {
                out.push_str(&format!(
                    "{} {} {} failed: {}\n",
                    row.event, row.phi, row.samples, reason
                ));
            }
        }
    }
    out
}

// ---------------------------------------------------------------- cycle ---

#[derive(Serialize)]
pub struct CycleOutcomeJson {
    pub phi: f64,
    pub time_s: f64,
    pub fuel_g: f64,
    pub time_increase_pct: f64,
    pub fuel_saved_pct: f64,
    pub advised_sections: usize,
    pub fallback_sections: usize,
}

#[derive(Serialize)]
pub struct AdvisedSectionJson {
    pub phi: f64,
    pub time_s: f64,
    pub fuel_g: f64,
    pub fallback: bool,
}

#[derive(Serialize)]
pub struct AdvisableSectionJson {
    pub start_m: f64,
    pub length_m: f64,
    pub entry_m_per_s: f64,
    pub target_m_per_s: f64,
    pub baseline_time_s: f64,
    pub baseline_fuel_g: f64,
    pub advised: Vec<AdvisedSectionJson>,
}

#[derive(Serialize)]
pub struct CycleJson {
    pub cycle: String,
    pub total_length_m: f64,
    pub section_count: usize,
    pub advisable_sections: usize,
    pub decel_share_pct: f64,
    /// Advice-independent share, identical in every run; run totals are
    /// this plus the per-section records.
    pub common_time_s: f64,
    pub common_fuel_g: f64,
    pub disabled_time_s: f64,
    pub disabled_fuel_g: f64,
    pub sections: Vec<AdvisableSectionJson>,
    pub outcomes: Vec<CycleOutcomeJson>,
}

pub fn cycle_json(a: &CycleAssessment) -> CycleJson {
    CycleJson {
        cycle: a.cycle_name.clone(),
        total_length_m: a.total_length_m,
        section_count: a.sections.len(),
        advisable_sections: a.advisable_sections(),
        decel_share_pct: a.decel_share_pct,
        common_time_s: a.common_time_s,
        common_fuel_g: a.common_fuel_g,
        disabled_time_s: a.disabled_time_s,
        disabled_fuel_g: a.disabled_fuel_g,
        sections: a
            .advisable
            .iter()
            .map(|s| AdvisableSectionJson {
                start_m: s.start_m,
                length_m: s.length_m,
                entry_m_per_s: s.entry_m_per_s,
                target_m_per_s: s.target_m_per_s,
                baseline_time_s: s.baseline_time_s,
                baseline_fuel_g: s.baseline_fuel_g,
                advised: s
                    .advised
                    .iter()
                    .map(|o| AdvisedSectionJson {
                        phi: o.phi,
                        time_s: o.time_s,
                        fuel_g: o.fuel_g,
                        fallback: o.fallback,
                    })
                    .collect(),
            })
            .collect(),
        outcomes: a
            .outcomes
            .iter()
            .map(|o| CycleOutcomeJson {
                phi: o.phi,
                time_s: o.time_s,
                fuel_g: o.fuel_g,
                time_increase_pct: o.time_increase_pct,
                fuel_saved_pct: o.fuel_saved_pct,
                advised_sections: o.advised,
                fallback_sections: o.fallbacks,
            })
            .collect(),
    }
}

pub fn cycle_table(a: &CycleAssessment) -> String {
    let mut out = format!(
        "# cycle report: {} | length {:.1} m | {} sections, {} advisable | decel share {:.2} %\n",
        a.cycle_name,
        a.total_length_m,
        a.sections.len(),
        a.advisable_sections(),
        a.decel_share_pct
    );
    out.push_str(&format!(
        "{:<9} {:>6} {:>12} {:>9} {:>12} {:>9} {:>8} {:>9}\n",
        "ed", "phi", "time_s", "incr%", "fuel_g", "saved%", "advised", "fallback"
    ));
    out.push_str(&format!(
        "{:<9} {:>6} {:>12.4} {:>9} {:>12.4} {:>9} {:>8} {:>9}\n",
        "disabled", "-", a.disabled_time_s, "-", a.disabled_fuel_g, "-", "-", "-"
    ));
    for o in &a.outcomes {
        out.push_str(&format!(
            "{:<9} {:>6} {:>12.4} {:>9.2} {:>12.4} {:>9.2} {:>8} {:>9}\n",
            "enabled",
            phi_label(Some(o.phi)),
            o.time_s,
            o.time_increase_pct,
            o.fuel_g,
            o.fuel_saved_pct,
            o.advised,
            o.fallbacks
        ));
    }
    out
}

/// Section listing of a segmented cycle.
pub fn sections_data(a: &CycleAssessment) -> String {
    let mut out =
        String::from("# kind start_m end_m entry_m_per_s exit_m_per_s duration_s\n");
    for sec in &a.sections {
        out.push_str(&format!(
            "{} {:.4} {:.4} {:.6} {:.6} {:.4}\n",
            sec.kind,
            sec.start_m,
            sec.end_m,
            sec.entry_m_per_s,
            sec.exit_m_per_s,
            sec.duration_s()
        ));
    }
    out
}
