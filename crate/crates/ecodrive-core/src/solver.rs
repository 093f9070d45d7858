//! Deceleration-advice optimizer: a backward sweep over distance samples
//! that picks the Hamiltonian-minimizing driving mode per sample, wrapped in
//! a bisection search for the terminal co-state.
//!
//! The two-point boundary problem (entry and target velocity fixed at the
//! segment ends) is shot backward: the terminal velocity is seeded exactly
//! and the free terminal co-state `lambda_N` is searched until the swept
//! initial velocity matches the entry velocity. Engine-envelope constraints
//! are enforced inside the sweep by deleting infeasible modes before the
//! argmin, so converged solutions respect them at every sample.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dynamics::{self, ModelError};
use crate::modes::DrivingMode;
use crate::truck::TruckConfig;

/// Cost weights of the running cost `g = (w_f * mdot + w_t) / v` \[per m\].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    /// Weight on fuel mass \[per g\].
    pub fuel_weight: f64,
    /// Weight on elapsed time \[per s\].
    pub time_weight: f64,
}

impl CostWeights {
    /// Unit fuel weight with the given time/fuel ratio.
    pub fn from_phi(phi: f64) -> Self {
        CostWeights {
            fuel_weight: 1.0,
            time_weight: phi,
        }
    }

    /// Time/fuel weight ratio.
    pub fn phi(&self) -> f64 {
        self.time_weight / self.fuel_weight
    }
}

/// One deceleration segment to optimize: boundary velocities at both ends of
/// a distance interval, discretized into `samples` equal slices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentProblem {
    pub start_m: f64,
    pub end_m: f64,
    pub entry_m_per_s: f64,
    pub target_m_per_s: f64,
    pub samples: usize,
    pub weights: CostWeights,
}

impl SegmentProblem {
    pub fn length_m(&self) -> f64 {
        self.end_m - self.start_m
    }

    /// Sample length `(end - start) / samples` \[m\].
    pub fn delta_s(&self) -> f64 {
        self.length_m() / self.samples as f64
    }

    pub fn validate(&self, opts: &SolverOptions) -> Result<(), SweepError> {
        let all_finite = self.start_m.is_finite()
            && self.end_m.is_finite()
            && self.entry_m_per_s.is_finite()
            && self.target_m_per_s.is_finite();
        if !all_finite {
            return Err(SweepError::InvalidProblem("non-finite problem data"));
        }
        if !(self.end_m > self.start_m) {
            return Err(SweepError::InvalidProblem("segment must have positive length"));
        }
        if self.samples < 2 {
            return Err(SweepError::InvalidProblem("at least 2 samples required"));
        }
        if !(self.weights.fuel_weight > 0.0) || !(self.weights.time_weight >= 0.0) {
            return Err(SweepError::InvalidProblem("cost weights must be positive"));
        }
        if !(self.target_m_per_s > 0.0) || self.entry_m_per_s < self.target_m_per_s {
            return Err(SweepError::InvalidProblem(
                "deceleration segment needs entry >= target > 0",
            ));
        }
        if self.target_m_per_s < opts.velocity_floor_m_per_s {
            return Err(SweepError::InvalidProblem("target velocity below model floor"));
        }
        if self.entry_m_per_s >= opts.velocity_cap_m_per_s {
            return Err(SweepError::InvalidProblem("entry velocity above velocity cap"));
        }
        Ok(())
    }
}

/// Bounds on the terminal co-state for the bisection search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostateBracket {
    pub lo: f64,
    pub hi: f64,
}

impl CostateBracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Accepted boundary error `|v0 - v(s_0)|` \[m/s\].
    pub tol_m_per_s: f64,
    /// Maximum bisection iterations.
    pub max_iterations: usize,
    /// Initial terminal co-state bounds.
    pub bracket: CostateBracket,
    /// Symmetric width doublings tried when the initial bounds do not
    /// produce a sign change of the boundary error.
    pub max_bracket_expansions: usize,
    /// Sweeps abort below this velocity (1/v singularity) \[m/s\].
    pub velocity_floor_m_per_s: f64,
    /// Sweeps abort above this velocity \[m/s\].
    pub velocity_cap_m_per_s: f64,
    /// Allow the eco-roll mode (vehicles without a sailing function set this
    /// to false, which can make low-speed samples infeasible).
    pub allow_eco_roll: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_m_per_s: 0.1,
            max_iterations: 60,
            bracket: CostateBracket { lo: -1e6, hi: 1e6 },
            max_bracket_expansions: 8,
            velocity_floor_m_per_s: 0.5,
            velocity_cap_m_per_s: 40.0,
            allow_eco_roll: true,
        }
    }
}

/// Output of one solved segment.
///
/// `v` and `lambda` hold the `samples + 1` slice-boundary values from the
/// segment start to its end; `modes`, `omega_rpm`, `fuel_g` and `time_s` hold
/// one entry per slice. Engine speed is stored at the slice's downstream
/// boundary, the point the feasibility filter checked. Fuel and time
/// increments are evaluated at the slice's upstream boundary, so the total
/// cost is the plain weighted sum of the increments.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub v: Vec<f64>,
    pub lambda: Vec<f64>,
    pub modes: Vec<DrivingMode>,
    pub omega_rpm: Vec<f64>,
    pub fuel_g: Vec<f64>,
    pub time_s: Vec<f64>,
    /// Total discretized cost `sum(w_f * fuel_k + w_t * time_k)`.
    pub cost: f64,
    pub converged: bool,
    /// Bisection iterations spent (0 when a bracket endpoint already met the
    /// tolerance or for a raw sweep).
    pub iterations: usize,
}

impl SolveResult {
    pub fn total_fuel_g(&self) -> f64 {
        self.fuel_g.iter().sum()
    }

    pub fn total_time_s(&self) -> f64 {
        self.time_s.iter().sum()
    }
}

/// One bisection step of the co-state search, for debugging/reporting.
/// `lambda_lo`/`lambda_hi` are the bounds the tried value was the midpoint
/// of (before the sign-directed update).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostateIteration {
    pub iteration: usize,
    pub lambda_n: f64,
    pub error_m_per_s: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepError {
    InvalidProblem(&'static str),
    /// No feasible mode at a sample, or the state left the admissible
    /// velocity range. `sample` counts slice boundaries from the segment
    /// start.
    InfeasibleAtSample { sample: usize, v_m_per_s: f64 },
    NonFiniteState { sample: usize },
    Model(ModelError),
}

impl fmt::Display for SweepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepError::InvalidProblem(msg) => write!(f, "invalid problem: {msg}"),
            SweepError::InfeasibleAtSample { sample, v_m_per_s } => {
                write!(f, "infeasible at sample {sample} (v = {v_m_per_s:.3} m/s)")
            }
            SweepError::NonFiniteState { sample } => {
                write!(f, "non-finite state at sample {sample}")
            }
            SweepError::Model(e) => write!(f, "model: {e}"),
        }
    }
}

impl core::error::Error for SweepError {}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    Sweep(SweepError),
    /// Both bracket endpoints produced a boundary error of the same sign
    /// even after expansion (or never produced a usable sweep at all).
    BracketNotSignChanging { error_lo: f64, error_hi: f64 },
    /// Tolerance not met within the iteration budget; carries the best
    /// result seen.
    MaxIterationsExceeded {
        best: Box<SolveResult>,
        error_m_per_s: f64,
    },
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Sweep(e) => write!(f, "{e}"),
            SolveError::BracketNotSignChanging { error_lo, error_hi } => write!(
                f,
                "co-state bracket does not change the boundary-error sign \
                 (e_lo = {error_lo:.4}, e_hi = {error_hi:.4})"
            ),
            SolveError::MaxIterationsExceeded { error_m_per_s, .. } => write!(
                f,
                "bisection exhausted iterations (best |error| = {:.4} m/s)",
                error_m_per_s.abs()
            ),
        }
    }
}

impl core::error::Error for SolveError {}

impl From<SweepError> for SolveError {
    fn from(e: SweepError) -> Self {
        SolveError::Sweep(e)
    }
}

/// Running cost per meter `g = w_f * mdot/v + w_t / v`.
pub fn running_cost(
    cfg: &TruckConfig,
    weights: &CostWeights,
    mode: DrivingMode,
    v: f64,
) -> Result<f64, ModelError> {
    let fuel_per_m = dynamics::mode_fuel_per_meter(cfg, mode, v)?;
    Ok(weights.fuel_weight * fuel_per_m + weights.time_weight / v)
}

/// Hamiltonian `H = lambda * f(v) + g(v)` of a mode.
pub fn hamiltonian(
    cfg: &TruckConfig,
    weights: &CostWeights,
    mode: DrivingMode,
    v: f64,
    lambda: f64,
) -> Result<f64, ModelError> {
    let f = dynamics::mode_dvds(cfg, mode, v)?;
    Ok(lambda * f + running_cost(cfg, weights, mode, v)?)
}

/// Analytic `dH/dv`, the co-state update slope.
pub fn hamiltonian_dv(
    cfg: &TruckConfig,
    weights: &CostWeights,
    mode: DrivingMode,
    v: f64,
    lambda: f64,
) -> Result<f64, ModelError> {
    let d = dynamics::mode_derivatives(cfg, mode, v)?;
    Ok(lambda * d.dvds_dv
        + weights.fuel_weight * d.fuel_per_meter_dv
        + weights.time_weight * d.pace_dv)
}

/// All modes admissible at velocity `v`: engaged modes whose engine speed
/// falls inside the envelope band, with cruising additionally limited by the
/// full-load torque curve. Eco-roll runs at idle speed and is exempt from
/// the band.
pub fn feasible_modes(cfg: &TruckConfig, v: f64, include_eco_roll: bool) -> Vec<DrivingMode> {
    let mut out = Vec::new();
    if include_eco_roll {
        out.push(DrivingMode::EcoRoll);
    }
    for gear in 1..=cfg.gear_count() {
        let omega = dynamics::engine_speed(cfg, DrivingMode::Coasting { gear }, v);
        if !cfg.envelope.speed_in_band(omega) {
            continue;
        }
        if dynamics::cruise_torque(cfg, gear, v) <= cfg.envelope.max_torque_nm(omega) {
            out.push(DrivingMode::Cruising { gear });
        }
        out.push(DrivingMode::Coasting { gear });
        out.push(DrivingMode::EngineBrake { gear });
    }
    out
}

/// Hamiltonians within this distance of each other count as tied and are
/// resolved by the deterministic mode preference.
const TIE_EPS: f64 = 1e-12;

fn argmin_prefers(candidate: DrivingMode, h_cand: f64, best: DrivingMode, h_best: f64) -> bool {
    if h_cand < h_best - TIE_EPS {
        true
    } else if h_cand > h_best + TIE_EPS {
        false
    } else {
        candidate.preference() > best.preference()
    }
}

/// Backward sweep for a fixed terminal co-state.
///
/// Seeds the terminal boundary with the target velocity and `lambda_n`, then
/// walks slices from the segment end toward its start. At each downstream
/// boundary the feasibility-filtered mode set is scored by the Hamiltonian,
/// the argmin is stored as the slice's mode, and the state/co-state pair is
/// stepped upstream with the slopes evaluated at that boundary:
/// `v_prev = v - f(v)*ds`, `lambda_prev = lambda + dH/dv * ds`.
pub fn backward_sweep(
    cfg: &TruckConfig,
    prob: &SegmentProblem,
    lambda_n: f64,
    opts: &SolverOptions,
) -> Result<SolveResult, SweepError> {
    prob.validate(opts)?;
    let n = prob.samples;
    let ds = prob.delta_s();
    let weights = prob.weights;

    let mut v = vec![0.0; n + 1];
    let mut lambda = vec![0.0; n + 1];
    let mut modes = vec![DrivingMode::EcoRoll; n];
    let mut omega_rpm = vec![0.0; n];

    v[n] = prob.target_m_per_s;
    lambda[n] = lambda_n;

    for k in (1..=n).rev() {
        let vk = v[k];
        let lam = lambda[k];
        if vk < opts.velocity_floor_m_per_s || vk > opts.velocity_cap_m_per_s {
            return Err(SweepError::InfeasibleAtSample { sample: k, v_m_per_s: vk });
        }

        let candidates = feasible_modes(cfg, vk, opts.allow_eco_roll);
        let mut best: Option<(DrivingMode, f64)> = None;
        for mode in candidates {
            let h = hamiltonian(cfg, &weights, mode, vk, lam).map_err(SweepError::Model)?;
            best = Some(match best {
                None => (mode, h),
                Some((bm, bh)) => {
                    if argmin_prefers(mode, h, bm, bh) {
                        (mode, h)
                    } else {
                        (bm, bh)
                    }
                }
            });
        }
        let (mode, _) = best.ok_or(SweepError::InfeasibleAtSample { sample: k, v_m_per_s: vk })?;

        let f = dynamics::mode_dvds(cfg, mode, vk).map_err(SweepError::Model)?;
        let dh_dv = hamiltonian_dv(cfg, &weights, mode, vk, lam).map_err(SweepError::Model)?;
        let v_prev = vk - f * ds;
        let lambda_prev = lam + dh_dv * ds;
        if !v_prev.is_finite() || !lambda_prev.is_finite() {
            return Err(SweepError::NonFiniteState { sample: k - 1 });
        }
        v[k - 1] = v_prev;
        lambda[k - 1] = lambda_prev;
        modes[k - 1] = mode;
        omega_rpm[k - 1] = dynamics::engine_speed(cfg, mode, vk);
    }
    if v[0] > opts.velocity_cap_m_per_s || v[0] < opts.velocity_floor_m_per_s {
        return Err(SweepError::InfeasibleAtSample { sample: 0, v_m_per_s: v[0] });
    }

    // Per-slice bookkeeping at the upstream boundary, so the cost is the
    // discrete sum of g over slice starts.
    let mut fuel_g = vec![0.0; n];
    let mut time_s = vec![0.0; n];
    for j in 0..n {
        fuel_g[j] =
            dynamics::mode_fuel_per_meter(cfg, modes[j], v[j]).map_err(SweepError::Model)? * ds;
        time_s[j] = ds / v[j];
    }
    let mut cost = 0.0;
    for j in 0..n {
        cost += weights.fuel_weight * fuel_g[j] + weights.time_weight * time_s[j];
    }

    Ok(SolveResult {
        v,
        lambda,
        modes,
        omega_rpm,
        fuel_g,
        time_s,
        cost,
        converged: true,
        iterations: 0,
    })
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Outcome of one sweep evaluation inside the co-state search. A sweep that
/// runs past the velocity cap still yields a usable signed boundary error
/// (the swept velocity exceeded the entry velocity by construction), which
/// keeps the bisection well defined at extreme co-state values.
fn eval_sweep(
    cfg: &TruckConfig,
    prob: &SegmentProblem,
    lambda_n: f64,
    opts: &SolverOptions,
) -> Result<(Option<SolveResult>, f64), SweepError> {
    match backward_sweep(cfg, prob, lambda_n, opts) {
        Ok(result) => {
            let e = prob.entry_m_per_s - result.v[0];
            Ok((Some(result), e))
        }
        Err(SweepError::InfeasibleAtSample { v_m_per_s, .. })
            if v_m_per_s >= opts.velocity_cap_m_per_s =>
        {
            Ok((None, prob.entry_m_per_s - v_m_per_s))
        }
        Err(e) => Err(e),
    }
}

/// Bisection search for the terminal co-state (see [`solve_costate`]),
/// optionally recording one trace entry per bisection iteration.
pub fn solve_costate_traced(
    cfg: &TruckConfig,
    prob: &SegmentProblem,
    opts: &SolverOptions,
    mut trace: Option<&mut Vec<CostateIteration>>,
) -> Result<SolveResult, SolveError> {
    prob.validate(opts)?;
    if !(opts.bracket.lo < opts.bracket.hi) {
        return Err(SweepError::InvalidProblem("bracket must satisfy lo < hi").into());
    }
    if !(opts.tol_m_per_s > 0.0) || opts.max_iterations == 0 {
        return Err(SweepError::InvalidProblem("tolerance/iterations must be positive").into());
    }

    let mut lo = opts.bracket.lo;
    let mut hi = opts.bracket.hi;

    let accept = |result: SolveResult, iterations: usize| {
        let mut r = result;
        r.converged = true;
        r.iterations = iterations;
        r
    };

    // Runtime sign-change check on the bracket endpoints, with symmetric
    // width doubling while both errors share a sign.
    let (mut r_lo, mut e_lo) = eval_sweep(cfg, prob, lo, opts)?;
    if r_lo.is_some() && e_lo.abs() <= opts.tol_m_per_s {
        return Ok(accept(r_lo.take().unwrap(), 0));
    }
    let (mut r_hi, mut e_hi) = eval_sweep(cfg, prob, hi, opts)?;
    if r_hi.is_some() && e_hi.abs() <= opts.tol_m_per_s {
        return Ok(accept(r_hi.take().unwrap(), 0));
    }
    let mut expansions = 0;
    while sign(e_lo) == sign(e_hi) && expansions < opts.max_bracket_expansions {
        let width = hi - lo;
        lo -= width;
        hi += width;
        let (rl, el) = eval_sweep(cfg, prob, lo, opts)?;
        if let Some(result) = rl.as_ref().filter(|_| el.abs() <= opts.tol_m_per_s) {
            return Ok(accept(result.clone(), 0));
        }
        let (rh, eh) = eval_sweep(cfg, prob, hi, opts)?;
        if let Some(result) = rh.as_ref().filter(|_| eh.abs() <= opts.tol_m_per_s) {
            return Ok(accept(result.clone(), 0));
        }
        (r_lo, e_lo) = (rl, el);
        (r_hi, e_hi) = (rh, eh);
        expansions += 1;
    }
    if sign(e_lo) == sign(e_hi) {
        return Err(SolveError::BracketNotSignChanging {
            error_lo: e_lo,
            error_hi: e_hi,
        });
    }

    // Best real sweep so far, for the iteration-exhausted error path.
    let mut best: Option<(SolveResult, f64)> = None;
    for (r, e) in [(r_lo, e_lo), (r_hi, e_hi)] {
        if let Some(result) = r {
            let replace = best.as_ref().map_or(true, |(_, be)| e.abs() < be.abs());
            if replace {
                best = Some((result, e));
            }
        }
    }

    for iteration in 1..=opts.max_iterations {
        let lambda_n = 0.5 * (lo + hi);
        let (result, e) = eval_sweep(cfg, prob, lambda_n, opts)?;
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(CostateIteration {
                iteration,
                lambda_n,
                error_m_per_s: e,
                lambda_lo: lo,
                lambda_hi: hi,
            });
        }
        if let Some(result) = result {
            if e.abs() <= opts.tol_m_per_s {
                return Ok(accept(result, iteration));
            }
            let replace = best.as_ref().map_or(true, |(_, be)| e.abs() < be.abs());
            if replace {
                best = Some((result, e));
            }
        }

        // Sign-directed bound update: a positive error (swept start velocity
        // too low, more deceleration needed) raises the lower bound, a
        // negative error lowers the upper bound.
        let s = sign(e);
        hi = s * f64::max(s * hi, s * lambda_n);
        lo = s * f64::max(s * lo, s * lambda_n);
    }

    match best {
        Some((mut result, e)) => {
            result.converged = false;
            result.iterations = opts.max_iterations;
            Err(SolveError::MaxIterationsExceeded {
                best: Box::new(result),
                error_m_per_s: e,
            })
        }
        None => Err(SolveError::BracketNotSignChanging {
            error_lo: e_lo,
            error_hi: e_hi,
        }),
    }
}

/// Solve a segment by bisecting the terminal co-state until the swept start
/// velocity matches the entry velocity within tolerance.
pub fn solve_costate(
    cfg: &TruckConfig,
    prob: &SegmentProblem,
    opts: &SolverOptions,
) -> Result<SolveResult, SolveError> {
    solve_costate_traced(cfg, prob, opts, None)
}

/// Sample count that keeps single-sample mode granularity below the
/// boundary tolerance.
///
/// The swept start velocity is quantized: toggling one slice between the
/// weakest and the strongest zero-fuel mode changes it by up to
/// `|dv/ds|_max(target) * delta_s`, and the strongest candidate is the
/// engine brake in the lowest admissible gear at the target velocity. The
/// bisection can only meet `tol` when that quantum is below it, so the slice
/// length is chosen as `min(max_delta_s, tol / |dv/ds|_max(target))`.
pub fn samples_for_tolerance(
    cfg: &TruckConfig,
    length_m: f64,
    target_m_per_s: f64,
    tol_m_per_s: f64,
    max_delta_s: f64,
) -> usize {
    let mut strongest = dynamics::mode_dvds(cfg, DrivingMode::EcoRoll, target_m_per_s)
        .map(f64::abs)
        .unwrap_or(0.0);
    for mode in feasible_modes(cfg, target_m_per_s, true) {
        if matches!(mode, DrivingMode::EngineBrake { .. }) {
            if let Ok(f) = dynamics::mode_dvds(cfg, mode, target_m_per_s) {
                strongest = strongest.max(f.abs());
            }
        }
    }
    let ds = if strongest > 0.0 {
        (tol_m_per_s / strongest).min(max_delta_s)
    } else {
        max_delta_s
    };
    // ceil for positive values without std float methods
    let ratio = length_m / ds;
    let mut n = ratio as usize;
    if (n as f64) < ratio {
        n += 1;
    }
    n.clamp(2, 40_000)
}

/// Optional advice smoothing: relabel mode runs shorter than `min_run`
/// slices with the longer neighboring run's mode. The optimizer applies no
/// switching penalty, so solutions can alternate modes for a slice or two
/// near phase junctions; dispatchers that find that too busy can smooth the
/// displayed sequence. Off by default everywhere — the returned labels no
/// longer match the stored velocity array exactly, so re-simulate (e.g.
/// with the forward stepper) if trajectory-accurate numbers are needed.
pub fn smooth_mode_runs(modes: &[DrivingMode], min_run: usize) -> Vec<DrivingMode> {
    let mut runs: Vec<(usize, DrivingMode)> = Vec::new();
    for &mode in modes {
        match runs.last_mut() {
            Some((count, m)) if *m == mode => *count += 1,
            _ => runs.push((1, mode)),
        }
    }
    loop {
        if runs.len() <= 1 {
            break;
        }
        let Some(idx) = (0..runs.len())
            .filter(|&i| runs[i].0 < min_run)
            .min_by_key(|&i| runs[i].0)
        else {
            break;
        };
        let into_prev = if idx == 0 {
            false
        } else if idx + 1 == runs.len() {
            true
        } else {
            runs[idx - 1].0 >= runs[idx + 1].0
        };
        let count = runs[idx].0;
        if into_prev {
            runs[idx - 1].0 += count;
            runs.remove(idx);
        } else {
            runs[idx + 1].0 += count;
            runs.remove(idx);
        }
        let mut j = 0;
        while j + 1 < runs.len() {
            if runs[j].1 == runs[j + 1].1 {
                runs[j].0 += runs[j + 1].0;
                runs.remove(j + 1);
            } else {
                j += 1;
            }
        }
    }
    let mut out = Vec::with_capacity(modes.len());
    for (count, mode) in runs {
        out.extend(core::iter::repeat(mode).take(count));
    }
    out
}

/// Shape mismatch between the arrays of a [`SolveResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapeError;

impl fmt::Display for ShapeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "solve-result arrays have inconsistent lengths")
    }
}

impl core::error::Error for ShapeError {}

/// Re-accumulate the total cost from the stored per-slice fuel and time
/// increments. Uses the same summation order as the sweep, so the value is
/// bit-identical to `result.cost`.
pub fn cost_of(result: &SolveResult, weights: &CostWeights) -> Result<f64, ShapeError> {
    let n = result.modes.len();
    let consistent = result.v.len() == n + 1
        && result.lambda.len() == n + 1
        && result.omega_rpm.len() == n
        && result.fuel_g.len() == n
        && result.time_s.len() == n;
    if !consistent {
        return Err(ShapeError);
    }
    let mut cost = 0.0;
    for j in 0..n {
        cost += weights.fuel_weight * result.fuel_g[j] + weights.time_weight * result.time_s[j];
    }
    Ok(cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> TruckConfig {
        TruckConfig::default()
    }

    fn problem_80_to_60() -> SegmentProblem {
        let cfg = TruckConfig::default();
        let samples = samples_for_tolerance(&cfg, 1000.0, 60.0 / 3.6, 0.1, 8.0);
        SegmentProblem {
            start_m: 0.0,
            end_m: 1000.0,
            entry_m_per_s: 80.0 / 3.6,
            target_m_per_s: 60.0 / 3.6,
            samples,
            weights: CostWeights::from_phi(15.0),
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let cfg = cfg();
        let w = CostWeights::from_phi(15.0);
        // cruising H is independent of lambda
        let m = DrivingMode::Cruising { gear: 8 };
        let h1 = hamiltonian(&cfg, &w, m, 20.0, -5.0).unwrap();
        let h2 = hamiltonian(&cfg, &w, m, 20.0, 40.0).unwrap();
        assert_eq!(h1, h2);
        // lambda = 0 reduces H to the running cost for every mode
        for mode in DrivingMode::all(8) {
            let h = hamiltonian(&cfg, &w, mode, 15.0, 0.0).unwrap();
            let g = running_cost(&cfg, &w, mode, 15.0).unwrap();
            assert_eq!(h, g);
        }
        // coasting at gear 8, v = 20, lambda = 2: frozen hand evaluation
        let h = hamiltonian(&cfg, &w, DrivingMode::Coasting { gear: 8 }, 20.0, 2.0).unwrap();
        assert!((h - 0.7289111746787807).abs() < 1e-12);
    }

    #[test]
    fn feasible_modes_respect_envelope() {
        let cfg = cfg();
        // at 1 m/s only gear 1 keeps the engine above the lower band edge
        let feas = feasible_modes(&cfg, 1.0, true);
        assert!(feas.contains(&DrivingMode::EcoRoll));
        let engaged_gears: alloc::vec::Vec<u8> = feas
            .iter()
            .filter(|m| m.clutch_engaged())
            .map(|m| m.gear())
            .collect();
        assert!(engaged_gears.iter().all(|&g| g == 1));
        assert!(feas.contains(&DrivingMode::Cruising { gear: 1 }));

        // at 22.2 m/s gears 7 and 8 are in band
        let feas = feasible_modes(&cfg, 22.2, true);
        let mut gears: alloc::vec::Vec<u8> =
            feas.iter().filter(|m| m.clutch_engaged()).map(|m| m.gear()).collect();
        gears.sort_unstable();
        gears.dedup();
        assert_eq!(gears, alloc::vec![7, 8]);

        // eco-roll is present for any v
        for v in [0.6, 3.0, 10.0, 30.0, 39.0] {
            assert!(feasible_modes(&cfg, v, true).contains(&DrivingMode::EcoRoll));
        }
        assert!(!feasible_modes(&cfg, 10.0, false).contains(&DrivingMode::EcoRoll));
    }

    #[test]
    fn cruising_excluded_when_full_load_exceeded() {
        // Raise drag until holding 22.2 m/s in gear 8 needs more torque than
        // the full-load curve allows; the coasting entry must survive.
        let mut cfg = cfg();
        cfg.drag_coefficient = 5.0;
        let omega = dynamics::engine_speed(&cfg, DrivingMode::Cruising { gear: 8 }, 22.2);
        assert!(dynamics::cruise_torque(&cfg, 8, 22.2) > cfg.envelope.max_torque_nm(omega));
        let feas = feasible_modes(&cfg, 22.2, true);
        assert!(!feas.contains(&DrivingMode::Cruising { gear: 8 }));
        assert!(feas.contains(&DrivingMode::Coasting { gear: 8 }));
    }

    #[test]
    fn sweep_at_zero_costate_starts_with_a_zero_fuel_mode() {
        let cfg = cfg();
        let prob = problem_80_to_60();
        let opts = SolverOptions::default();
        let result = backward_sweep(&cfg, &prob, 0.0, &opts).unwrap();
        let last = result.modes[prob.samples - 1];
        assert!(!last.is_fueled(), "argmin at lambda=0 must be zero-fuel, got {last}");
    }

    #[test]
    fn sweep_scaling_invariance() {
        let cfg = cfg();
        let prob = problem_80_to_60();
        let opts = SolverOptions::default();
        let lambda_n = -7.5;
        let base = backward_sweep(&cfg, &prob, lambda_n, &opts).unwrap();

        let mut scaled_prob = prob;
        scaled_prob.weights = CostWeights {
            fuel_weight: 2.0,
            time_weight: 30.0,
        };
        let scaled = backward_sweep(&cfg, &scaled_prob, 2.0 * lambda_n, &opts).unwrap();
        assert_eq!(base.modes, scaled.modes);
        assert_eq!(2.0 * base.cost, scaled.cost);
    }

    #[test]
    fn bisection_converges_on_standard_event() {
        let cfg = cfg();
        let prob = problem_80_to_60();
        let opts = SolverOptions::default();
        let mut trace = Vec::new();
        let result = solve_costate_traced(&cfg, &prob, &opts, Some(&mut trace)).unwrap();
        assert!(result.converged);
        assert!(result.iterations <= 30, "took {} iterations", result.iterations);
        assert!((prob.entry_m_per_s - result.v[0]).abs() <= opts.tol_m_per_s);
        assert_eq!(result.v[prob.samples], prob.target_m_per_s);

        // bracket width halves every iteration
        for pair in trace.windows(2) {
            let w0 = pair[0].lambda_hi - pair[0].lambda_lo;
            let w1 = pair[1].lambda_hi - pair[1].lambda_lo;
            assert!(w1 <= 0.5000001 * w0, "width did not halve: {w0} -> {w1}");
        }

        // cost bookkeeping is exact
        assert_eq!(cost_of(&result, &prob.weights).unwrap(), result.cost);

        // argmin correctness: the stored mode minimizes H at the slice's
        // downstream boundary among all feasible modes there
        for k in 0..prob.samples {
            let vk = result.v[k + 1];
            let lam = result.lambda[k + 1];
            let h_stored =
                hamiltonian(&cfg, &prob.weights, result.modes[k], vk, lam).unwrap();
            for m in feasible_modes(&cfg, vk, true) {
                let h = hamiltonian(&cfg, &prob.weights, m, vk, lam).unwrap();
                assert!(
                    h_stored <= h + 1e-9,
                    "sample {k}: stored {} beaten by {m}",
                    result.modes[k]
                );
            }
        }

        // engaged engine speeds inside the band, eco-roll pinned at idle
        for (mode, omega) in result.modes.iter().zip(&result.omega_rpm) {
            if mode.clutch_engaged() {
                assert!(cfg.envelope.speed_in_band(*omega));
            } else {
                assert_eq!(*omega, cfg.idle_speed_rpm);
            }
        }
    }

    #[test]
    fn solution_phases_are_ordered_and_gears_decrease() {
        // Converged deceleration advice holds the entry speed in top gear
        // first, sheds speed through progressively stronger zero-fuel modes
        // (eco-roll, then coasting, then engine brake) and meets the target
        // exactly at the segment end. Engaged gears never step up.
        let cfg = cfg();
        let prob = problem_80_to_60();
        let result = solve_costate(&cfg, &prob, &SolverOptions::default()).unwrap();

        assert!(matches!(result.modes[0], DrivingMode::Cruising { .. }));
        let rank = |m: &DrivingMode| match m {
            DrivingMode::Cruising { .. } => 0,
            DrivingMode::EcoRoll => 1,
            DrivingMode::Coasting { .. } => 2,
            DrivingMode::EngineBrake { .. } => 3,
        };
        let mut phases: Vec<i32> = Vec::new();
        for m in &result.modes {
            let r = rank(m);
            if phases.last() != Some(&r) {
                phases.push(r);
            }
        }
        assert!(
            phases.windows(2).all(|w| w[1] > w[0]),
            "phases must strengthen monotonically, got {phases:?}"
        );
        assert!(phases.len() >= 3, "expected several phases, got {phases:?}");

        let engaged: Vec<u8> = result
            .modes
            .iter()
            .filter(|m| m.clutch_engaged())
            .map(|m| m.gear())
            .collect();
        assert!(engaged.windows(2).all(|w| w[1] <= w[0]), "gears must not step up");

        // velocity decreases monotonically from entry to target
        assert!(result.v.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn degenerate_equal_velocities_converges_immediately() {
        let cfg = cfg();
        let prob = SegmentProblem {
            start_m: 0.0,
            end_m: 1.0,
            entry_m_per_s: 60.0 / 3.6,
            target_m_per_s: 60.0 / 3.6,
            samples: 2,
            weights: CostWeights::from_phi(15.0),
        };
        let result = solve_costate(&cfg, &prob, &SolverOptions::default()).unwrap();
        assert!(result.converged);
        assert!(result.iterations <= 1);
    }

    #[test]
    fn smoothing_absorbs_short_runs_and_preserves_length() {
        use DrivingMode::{Coasting, Cruising, EcoRoll};
        let modes = [
            Cruising { gear: 8 },
            Cruising { gear: 8 },
            Cruising { gear: 8 },
            EcoRoll, // one-slice blip
            Cruising { gear: 8 },
            Cruising { gear: 8 },
            Coasting { gear: 8 },
            Coasting { gear: 8 },
            Coasting { gear: 8 },
        ];
        let smoothed = smooth_mode_runs(&modes, 2);
        assert_eq!(smoothed.len(), modes.len());
        assert!(smoothed[..6].iter().all(|m| *m == Cruising { gear: 8 }));
        assert!(smoothed[6..].iter().all(|m| *m == Coasting { gear: 8 }));
        // already-long runs pass through untouched
        assert_eq!(smooth_mode_runs(&smoothed, 2), smoothed);
    }

    #[test]
    fn cost_of_rejects_inconsistent_arrays() {
        let cfg = cfg();
        let prob = problem_80_to_60();
        let mut result = backward_sweep(&cfg, &prob, -5.0, &SolverOptions::default()).unwrap();
        result.fuel_g.pop();
        assert_eq!(cost_of(&result, &prob.weights), Err(ShapeError));
    }

    #[test]
    fn infeasible_without_eco_roll_at_low_speed() {
        let cfg = cfg();
        // 0.6 m/s sits below gear 1's lower band edge; with eco-roll
        // disabled no mode survives the filter.
        let prob = SegmentProblem {
            start_m: 0.0,
            end_m: 100.0,
            entry_m_per_s: 2.0,
            target_m_per_s: 0.6,
            samples: 10,
            weights: CostWeights::from_phi(15.0),
        };
        let opts = SolverOptions {
            allow_eco_roll: false,
            ..SolverOptions::default()
        };
        let err = backward_sweep(&cfg, &prob, 0.0, &opts).unwrap_err();
        assert!(matches!(err, SweepError::InfeasibleAtSample { .. }));
    }

    #[test]
    fn unreachable_entry_velocity_reports_bad_bracket() {
        let cfg = cfg();
        // 80 -> 20 km/h inside 60 m: even full braking cannot climb that far
        // backward, so the boundary error never changes sign.
        let prob = SegmentProblem {
            start_m: 0.0,
            end_m: 60.0,
            entry_m_per_s: 80.0 / 3.6,
            target_m_per_s: 20.0 / 3.6,
            samples: 12,
            weights: CostWeights::from_phi(15.0),
        };
        let err = solve_costate(&cfg, &prob, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, SolveError::BracketNotSignChanging { .. }));
    }
}
