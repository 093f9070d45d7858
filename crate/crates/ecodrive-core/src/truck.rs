//! Truck parameters: mass, resistance coefficients, driveline ratios and
//! inertias, the fuel-rate polynomial and the engine operating envelope.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Engine operating envelope: admissible speed band plus the full-load
/// torque curve.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineEnvelope {
    /// Lower engine-speed bound for engaged driving \[RPM\].
    pub min_rpm: f64,
    /// Upper engine-speed bound \[RPM\].
    pub max_rpm: f64,
    /// Full-load torque samples as `(engine speed \[RPM\], torque \[Nm\])`,
    /// strictly ascending in speed. Evaluated by linear interpolation and
    /// clamped to the end values outside the sampled range.
    pub max_torque_curve: Vec<(f64, f64)>,
}

impl EngineEnvelope {
    /// Maximum engine output torque at the given speed \[Nm\].
    pub fn max_torque_nm(&self, rpm: f64) -> f64 {
        let curve = &self.max_torque_curve;
        if curve.is_empty() {
            return 0.0;
        }
        if rpm <= curve[0].0 {
            return curve[0].1;
        }
        if rpm >= curve[curve.len() - 1].0 {
            return curve[curve.len() - 1].1;
        }
        for pair in curve.windows(2) {
            let (r0, t0) = pair[0];
            let (r1, t1) = pair[1];
            if rpm <= r1 {
                let frac = (rpm - r0) / (r1 - r0);
                return t0 + frac * (t1 - t0);
            }
        }
        curve[curve.len() - 1].1
    }

    /// `true` when `rpm` lies inside the admissible band for engaged modes.
    pub fn speed_in_band(&self, rpm: f64) -> bool {
        rpm >= self.min_rpm && rpm <= self.max_rpm
    }
}

impl Default for EngineEnvelope {
    /// Constant 600–2000 RPM band with a flat 2500 Nm full-load plateau
    /// between 1000 and 1400 RPM, tapering at both ends. The torque samples
    /// are a placeholder shape; override them with measured data when
    /// fidelity of the full-load limit matters.
    fn default() -> Self {
        EngineEnvelope {
            min_rpm: 600.0,
            max_rpm: 2000.0,
            max_torque_curve: vec![
                (600.0, 1500.0),
                (800.0, 2100.0),
                (1000.0, 2500.0),
                (1400.0, 2500.0),
                (1700.0, 2200.0),
                (2000.0, 1900.0),
            ],
        }
    }
}

/// Full parameter set of one truck.
///
/// All downstream computations are pure functions of this struct; it is
/// immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct TruckConfig {
    pub mass_kg: f64,
    /// Rolling-resistance coefficient [-].
    pub roll_resistance: f64,
    /// Aerodynamic drag coefficient [-].
    pub drag_coefficient: f64,
    pub frontal_area_m2: f64,
    pub air_density_kg_per_m3: f64,
    pub gravity_m_per_s2: f64,
    /// Final-drive (axle) ratio [-].
    pub final_drive_ratio: f64,
    pub wheel_radius_m: f64,
    /// Transmission ratio per gear; entry 0 is neutral (0.0), driving gears
    /// 1..=n are strictly decreasing.
    pub gear_ratios: Vec<f64>,
    /// Equivalent rotational inertia of the open driveline in neutral \[kg m2\].
    pub driveline_inertia_kgm2: f64,
    /// Combined equivalent rotational inertia of wheels + powertrain per
    /// driving gear (index 0 is gear 1) \[kg m2\].
    pub powertrain_inertia_kgm2: Vec<f64>,
    pub idle_speed_rpm: f64,
    /// Fuel rate of the idling, disengaged engine \[g/s\].
    pub idle_fuel_g_per_s: f64,
    /// Continuous service-brake (retarder) torque, speed-independent \[Nm\].
    pub engine_brake_torque_nm: f64,
    /// Fuel-rate polynomial coefficients:
    /// `mdot = b0 + b1*w + b2*T + b3*w^2 + b4*w*T + b5*T^2` \[g/s\], with `w`
    /// in RPM and `T` in Nm.
    pub fuel_poly: [f64; 6],
    /// Engine internal friction torque coefficients: `T_fric = g0 + g1*w` \[Nm\].
    pub friction_torque: [f64; 2],
    pub envelope: EngineEnvelope,
}

impl TruckConfig {
    /// Number of driving gears.
    pub fn gear_count(&self) -> u8 {
        (self.gear_ratios.len() - 1) as u8
    }

    /// Transmission ratio of `gear` (0 = neutral).
    pub fn gear_ratio(&self, gear: u8) -> f64 {
        self.gear_ratios[gear as usize]
    }

    /// Equivalent powertrain inertia for driving `gear` (1..=n) \[kg m2\].
    pub fn powertrain_inertia(&self, gear: u8) -> f64 {
        self.powertrain_inertia_kgm2[gear as usize - 1]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(v: f64, name: &'static str) -> Result<(), ConfigError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::NonPositive(name))
            }
        }
        positive(self.mass_kg, "mass_kg")?;
        positive(self.wheel_radius_m, "wheel_radius_m")?;
        positive(self.final_drive_ratio, "final_drive_ratio")?;
        positive(self.frontal_area_m2, "frontal_area_m2")?;
        positive(self.air_density_kg_per_m3, "air_density_kg_per_m3")?;
        positive(self.gravity_m_per_s2, "gravity_m_per_s2")?;
        positive(self.roll_resistance, "roll_resistance")?;
        positive(self.drag_coefficient, "drag_coefficient")?;
        positive(self.driveline_inertia_kgm2, "driveline_inertia_kgm2")?;
        positive(self.idle_speed_rpm, "idle_speed_rpm")?;
        positive(self.idle_fuel_g_per_s, "idle_fuel_g_per_s")?;
        positive(self.engine_brake_torque_nm, "engine_brake_torque_nm")?;

        if self.gear_ratios.len() < 2 {
            return Err(ConfigError::GearTable("at least one driving gear required"));
        }
        if self.gear_ratios[0] != 0.0 {
            return Err(ConfigError::GearTable("gear 0 (neutral) must have ratio 0"));
        }
        let driving = &self.gear_ratios[1..];
        for pair in driving.windows(2) {
            if pair[1] >= pair[0] {
                return Err(ConfigError::GearTable(
                    "driving gear ratios must be strictly decreasing",
                ));
            }
        }
        if driving.iter().any(|&r| r <= 0.0 || !r.is_finite()) {
            return Err(ConfigError::GearTable("driving gear ratios must be positive"));
        }
        if self.powertrain_inertia_kgm2.len() != driving.len() {
            return Err(ConfigError::GearTable(
                "one powertrain inertia entry per driving gear required",
            ));
        }
        if self.powertrain_inertia_kgm2.iter().any(|&j| j <= 0.0) {
            return Err(ConfigError::GearTable("powertrain inertias must be positive"));
        }

        let env = &self.envelope;
        if !(env.min_rpm < env.max_rpm) {
            return Err(ConfigError::Envelope("min_rpm must be below max_rpm"));
        }
        if env.max_torque_curve.is_empty() {
            return Err(ConfigError::Envelope("empty full-load torque curve"));
        }
        for pair in env.max_torque_curve.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(ConfigError::Envelope(
                    "torque curve speeds must be strictly ascending",
                ));
            }
        }
        // The full-load limit must stay positive over the admissible band.
        let mut probe = env.min_rpm;
        while probe <= env.max_rpm {
            if env.max_torque_nm(probe) <= 0.0 {
                return Err(ConfigError::Envelope(
                    "full-load torque must be positive across the speed band",
                ));
            }
            probe += (env.max_rpm - env.min_rpm) / 32.0;
        }
        Ok(())
    }
}

impl Default for TruckConfig {
    /// Stock 25.2 t tractor dataset with an 8-speed box. This is the shipped
    /// default configuration and the parameter set used throughout the tests.
    fn default() -> Self {
        TruckConfig {
            mass_kg: 25_200.0,
            roll_resistance: 9.57e-3,
            drag_coefficient: 0.41,
            frontal_area_m2: 10.2,
            air_density_kg_per_m3: 1.204,
            gravity_m_per_s2: 9.81,
            final_drive_ratio: 3.08,
            wheel_radius_m: 0.496,
            gear_ratios: vec![0.0, 14.12, 9.54, 6.52, 4.75, 3.09, 2.09, 1.43, 1.0],
            driveline_inertia_kgm2: 83.77,
            powertrain_inertia_kgm2: vec![
                3983.74, 1864.56, 916.41, 526.28, 271.06, 169.60, 123.97, 103.42,
            ],
            idle_speed_rpm: 450.0,
            idle_fuel_g_per_s: 0.09542,
            engine_brake_torque_nm: 1278.0,
            fuel_poly: [0.3615, -8.521e-4, 5.816e-4, 4.489e-7, 5.866e-6, -4.083e-7],
            friction_torque: [-16.87, 0.2899],
            envelope: EngineEnvelope::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigError {
    NonPositive(&'static str),
    GearTable(&'static str),
    Envelope(&'static str),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::NonPositive(name) => write!(f, "parameter {name} must be positive"),
            ConfigError::GearTable(msg) => write!(f, "gear table: {msg}"),
            ConfigError::Envelope(msg) => write!(f, "engine envelope: {msg}"),
        }
    }
}

impl core::error::Error for ConfigError {}
