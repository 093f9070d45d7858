//! Per-mode longitudinal dynamics in the distance domain, fuel rates, and
//! their analytic velocity derivatives.
//!
//! All mode dynamics are expressed as velocity gradients `dv/ds` obtained
//! from Newton's second law divided by `v` (time-to-distance change of
//! variables), so a `1/v` factor appears throughout and every operation
//! rejects non-positive velocities. Road grade is fixed at zero. Engine
//! speed is kept in RPM, so the `30/pi` scaling between wheel angular speed
//! and crankshaft speed stays explicit.
//!
//! Model note: the engine drag torque acting through the driveline while
//! coasting or engine braking is taken as the internal friction torque
//! `g0 + g1*w`; the service brake adds its constant torque on top of it and
//! is assumed to consume neither energy nor fuel.

use core::fmt;

use crate::modes::DrivingMode;
use crate::truck::TruckConfig;

/// Conversion from wheel angular speed `v / r_w` \[rad/s\] to RPM.
pub const RPM_PER_RAD_PER_S: f64 = 30.0 / core::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelError {
    /// The distance-domain dynamics are singular at `v <= 0`.
    NonPositiveVelocity,
    /// Engaged modes require a driving gear `1..=n`.
    InvalidGear { gear: u8, gear_count: u8 },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::NonPositiveVelocity => write!(f, "velocity must be positive"),
            ModelError::InvalidGear { gear, gear_count } => {
                write!(f, "gear {gear} outside 1..={gear_count}")
            }
        }
    }
}

impl core::error::Error for ModelError {}

fn check_mode(cfg: &TruckConfig, mode: DrivingMode, v: f64) -> Result<(), ModelError> {
    if !(v > 0.0) {
        return Err(ModelError::NonPositiveVelocity);
    }
    if mode.clutch_engaged() {
        let gear = mode.gear();
        if gear == 0 || gear > cfg.gear_count() {
            return Err(ModelError::InvalidGear {
                gear,
                gear_count: cfg.gear_count(),
            });
        }
    }
    Ok(())
}

/// Engine speed \[RPM\] for a mode at velocity `v` \[m/s\]: proportional to wheel
/// speed through the gear and final-drive ratios while the clutch is engaged,
/// the constant idle speed otherwise.
pub fn engine_speed(cfg: &TruckConfig, mode: DrivingMode, v: f64) -> f64 {
    match mode {
        DrivingMode::EcoRoll => cfg.idle_speed_rpm,
        _ => {
            RPM_PER_RAD_PER_S * cfg.gear_ratio(mode.gear()) * cfg.final_drive_ratio * v
                / cfg.wheel_radius_m
        }
    }
}

/// Total resistance force \[N\] at velocity `v` \[m/s\]: quadratic aerodynamic
/// drag plus the constant rolling term (zero road grade).
pub fn resistance_force(cfg: &TruckConfig, v: f64) -> f64 {
    0.5 * cfg.air_density_kg_per_m3 * cfg.drag_coefficient * cfg.frontal_area_m2 * v * v
        + cfg.mass_kg * cfg.gravity_m_per_s2 * cfg.roll_resistance
}

/// Derivative of [`resistance_force`] with respect to velocity \[N per m/s\].
fn resistance_force_dv(cfg: &TruckConfig, v: f64) -> f64 {
    cfg.air_density_kg_per_m3 * cfg.drag_coefficient * cfg.frontal_area_m2 * v
}

/// Fuel mass flow \[g/s\] from the second-order polynomial map in engine
/// output torque \[Nm\] and engine speed \[RPM\].
pub fn fuel_rate(cfg: &TruckConfig, torque_nm: f64, omega_rpm: f64) -> f64 {
    let b = &cfg.fuel_poly;
    b[0] + b[1] * omega_rpm
        + b[2] * torque_nm
        + b[3] * omega_rpm * omega_rpm
        + b[4] * omega_rpm * torque_nm
        + b[5] * torque_nm * torque_nm
}

/// Engine internal friction torque \[Nm\], affine in engine speed \[RPM\].
pub fn internal_friction_torque(cfg: &TruckConfig, omega_rpm: f64) -> f64 {
    cfg.friction_torque[0] + cfg.friction_torque[1] * omega_rpm
}

/// Engine torque \[Nm\] that holds velocity `v` constant in `gear`: the value
/// that balances the drive force against the total resistance.
pub fn cruise_torque(cfg: &TruckConfig, gear: u8, v: f64) -> f64 {
    resistance_force(cfg, v) * cfg.wheel_radius_m
        / (cfg.final_drive_ratio * cfg.gear_ratio(gear))
}

/// Velocity gradient dv/ds [per m, in units of m/s per m] of a mode.
///
/// Cruising holds velocity (exactly zero). The free-rolling modes divide the
/// decelerating force by the equivalent translating-plus-rotating mass, where
/// the rotating part depends on whether the driveline is open (eco-roll) or
/// the full powertrain is engaged (coasting, engine brake).
pub fn mode_dvds(cfg: &TruckConfig, mode: DrivingMode, v: f64) -> Result<f64, ModelError> {
    check_mode(cfg, mode, v)?;
    let rw2 = cfg.wheel_radius_m * cfg.wheel_radius_m;
    Ok(match mode {
        DrivingMode::Cruising { .. } => 0.0,
        DrivingMode::EcoRoll => {
            -rw2 * resistance_force(cfg, v)
                / ((cfg.mass_kg * rw2 + cfg.driveline_inertia_kgm2) * v)
        }
        DrivingMode::Coasting { gear } | DrivingMode::EngineBrake { gear } => {
            let omega = engine_speed(cfg, mode, v);
            let mut drag_torque = internal_friction_torque(cfg, omega);
            if matches!(mode, DrivingMode::EngineBrake { .. }) {
                drag_torque += cfg.engine_brake_torque_nm;
            }
            let trans = cfg.final_drive_ratio * cfg.gear_ratio(gear) / cfg.wheel_radius_m;
            -rw2 * (trans * drag_torque + resistance_force(cfg, v))
                / ((cfg.mass_kg * rw2 + cfg.powertrain_inertia(gear)) * v)
        }
    })
}

/// Fuel consumed per meter \[g/m\]: map-valued for cruising, the constant idle
/// rate spread over distance for eco-roll, exactly zero for coasting and
/// engine braking (fuel cut, unfueled service brake).
pub fn mode_fuel_per_meter(
    cfg: &TruckConfig,
    mode: DrivingMode,
    v: f64,
) -> Result<f64, ModelError> {
    check_mode(cfg, mode, v)?;
    Ok(match mode {
        DrivingMode::Cruising { gear } => {
            let omega = engine_speed(cfg, mode, v);
            fuel_rate(cfg, cruise_torque(cfg, gear, v), omega) / v
        }
        DrivingMode::EcoRoll => cfg.idle_fuel_g_per_s / v,
        _ => 0.0,
    })
}

/// Analytic velocity derivatives of a mode's dynamics and running-cost
/// ingredients, for the backward co-state update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeDerivatives {
    /// d(dv/ds)/dv.
    pub dvds_dv: f64,
    /// d(fuel per meter)/dv; weight with the fuel cost weight.
    pub fuel_per_meter_dv: f64,
    /// d(1/v)/dv = -1/v^2; weight with the time cost weight.
    pub pace_dv: f64,
}

/// Analytic partial derivatives of [`mode_dvds`] and of the per-meter
/// running-cost components with respect to velocity. The cruising branch
/// chains through both the engine speed and the velocity-dependent cruise
/// torque.
pub fn mode_derivatives(
    cfg: &TruckConfig,
    mode: DrivingMode,
    v: f64,
) -> Result<ModeDerivatives, ModelError> {
    check_mode(cfg, mode, v)?;
    let rw2 = cfg.wheel_radius_m * cfg.wheel_radius_m;
    let pace_dv = -1.0 / (v * v);
    Ok(match mode {
        DrivingMode::Cruising { gear } => {
            let omega = engine_speed(cfg, mode, v);
            let torque = cruise_torque(cfg, gear, v);
            let omega_dv = RPM_PER_RAD_PER_S * cfg.gear_ratio(gear) * cfg.final_drive_ratio
                / cfg.wheel_radius_m;
            let torque_dv = resistance_force_dv(cfg, v) * cfg.wheel_radius_m
                / (cfg.final_drive_ratio * cfg.gear_ratio(gear));
            let b = &cfg.fuel_poly;
            let mdot = fuel_rate(cfg, torque, omega);
            let mdot_dv = (b[1] + 2.0 * b[3] * omega + b[4] * torque) * omega_dv
                + (b[2] + b[4] * omega + 2.0 * b[5] * torque) * torque_dv;
            ModeDerivatives {
                dvds_dv: 0.0,
                fuel_per_meter_dv: (mdot_dv * v - mdot) / (v * v),
                pace_dv,
            }
        }
        DrivingMode::EcoRoll => {
            let mass_eq = cfg.mass_kg * rw2 + cfg.driveline_inertia_kgm2;
            let force = resistance_force(cfg, v);
            let force_dv = resistance_force_dv(cfg, v);
            ModeDerivatives {
                dvds_dv: -rw2 * (force_dv * v - force) / (mass_eq * v * v),
                fuel_per_meter_dv: -cfg.idle_fuel_g_per_s / (v * v),
                pace_dv,
            }
        }
        DrivingMode::Coasting { gear } | DrivingMode::EngineBrake { gear } => {
            let omega = engine_speed(cfg, mode, v);
            let omega_dv = RPM_PER_RAD_PER_S * cfg.gear_ratio(gear) * cfg.final_drive_ratio
                / cfg.wheel_radius_m;
            let trans = cfg.final_drive_ratio * cfg.gear_ratio(gear) / cfg.wheel_radius_m;
            let mut drag_torque = internal_friction_torque(cfg, omega);
            if matches!(mode, DrivingMode::EngineBrake { .. }) {
                drag_torque += cfg.engine_brake_torque_nm;
            }
            let numer = trans * drag_torque + resistance_force(cfg, v);
            let numer_dv = trans * cfg.friction_torque[1] * omega_dv + resistance_force_dv(cfg, v);
            let mass_eq = cfg.mass_kg * rw2 + cfg.powertrain_inertia(gear);
            ModeDerivatives {
                dvds_dv: -rw2 * (numer_dv * v - numer) / (mass_eq * v * v),
                fuel_per_meter_dv: 0.0,
                pace_dv,
            }
        }
    })
}
