//! Text file formats: truck parameters, route scenarios and drive cycles.
//!
//! All formats are plain whitespace/`=`-separated text with `#` comments and
//! `.` decimal separators. Velocities in route and cycle files are km/h and
//! convert to m/s at this boundary; everything downstream is SI.

use std::collections::BTreeMap;
use std::fmt;

use ecodrive_core::cycle::DriveCycle;
use ecodrive_core::route::{RoadSegment, RouteScenario, VelocityEvent};
use ecodrive_core::truck::{EngineEnvelope, TruckConfig};

const KMH_TO_MPS: f64 = 1.0 / 3.6;

#[derive(Debug, Clone, PartialEq)]
pub struct FileError {
    pub line: Option<usize>,
    pub message: String,
}

impl FileError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        FileError {
            line: Some(line),
            message: message.into(),
        }
    }

    fn new(message: impl Into<String>) -> Self {
        FileError {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for FileError {}

/// Strip a trailing comment and surrounding whitespace.
fn clean(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => line[..pos].trim(),
        None => line.trim(),
    }
}

// ---------------------------------------------------------------- truck ---

/// Parse a flat `key = value` truck parameter file.
pub fn parse_truck(text: &str) -> Result<TruckConfig, FileError> {
    let mut entries: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = clean(raw);
        if line.is_empty() {
            continue;
        }
        let lineno = no + 1;
        let Some((key, value)) = line.split_once('=') else {
            return Err(FileError::at(lineno, "expected 'key = value'"));
        };
        let key = key.trim().to_string();
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| FileError::at(lineno, format!("cannot parse value for '{key}'")))?;
        if entries.insert(key.clone(), (value, lineno)).is_some() {
            return Err(FileError::at(lineno, format!("duplicate key '{key}'")));
        }
    }

    fn take(
        entries: &mut BTreeMap<String, (f64, usize)>,
        key: &str,
    ) -> Result<f64, FileError> {
        entries
            .remove(key)
            .map(|(v, _)| v)
            .ok_or_else(|| FileError::new(format!("missing key '{key}'")))
    }

    let mass_kg = take(&mut entries, "mass_kg")?;
    let roll_resistance = take(&mut entries, "roll_resistance")?;
    let drag_coefficient = take(&mut entries, "drag_coefficient")?;
    let frontal_area_m2 = take(&mut entries, "frontal_area_m2")?;
    let air_density_kg_per_m3 = take(&mut entries, "air_density_kg_per_m3")?;
    let gravity_m_per_s2 = take(&mut entries, "gravity_m_per_s2")?;
    let final_drive_ratio = take(&mut entries, "final_drive_ratio")?;
    let wheel_radius_m = take(&mut entries, "wheel_radius_m")?;
    let driveline_inertia_kgm2 = take(&mut entries, "driveline_inertia_kgm2")?;
    let idle_speed_rpm = take(&mut entries, "idle_speed_rpm")?;
    let idle_fuel_g_per_s = take(&mut entries, "idle_fuel_gps")?;
    let engine_brake_torque_nm = take(&mut entries, "engine_brake_torque_nm")?;

    let mut gear_ratios = vec![0.0];
    let mut powertrain_inertia = Vec::new();
    let mut gear = 1usize;
    while entries.contains_key(&format!("gear_ratio_{gear}")) {
        gear_ratios.push(take(&mut entries, &format!("gear_ratio_{gear}"))?);
        powertrain_inertia.push(take(&mut entries, &format!("powertrain_inertia_{gear}_kgm2"))?);
        gear += 1;
    }
    if gear_ratios.len() < 2 {
        return Err(FileError::new("no gear_ratio_1 found"));
    }

    let fuel_poly = [
        take(&mut entries, "beta_0")?,
        take(&mut entries, "beta_1")?,
        take(&mut entries, "beta_2")?,
        take(&mut entries, "beta_3")?,
        take(&mut entries, "beta_4")?,
        take(&mut entries, "beta_5")?,
    ];
    let friction_torque = [take(&mut entries, "gamma_0")?, take(&mut entries, "gamma_1")?];

    let min_rpm = take(&mut entries, "omega_min_rpm")?;
    let max_rpm = take(&mut entries, "omega_max_rpm")?;
    let points = take(&mut entries, "t_max_points")? as usize;
    let mut max_torque_curve = Vec::with_capacity(points);
    for i in 0..points {
        let rpm = take(&mut entries, &format!("t_max_rpm_{i}"))?;
        let nm = take(&mut entries, &format!("t_max_nm_{i}"))?;
        max_torque_curve.push((rpm, nm));
    }

    if let Some((key, (_, lineno))) = entries.iter().next() {
        return Err(FileError::at(*lineno, format!("unknown key '{key}'")));
    }

    let cfg = TruckConfig {
        mass_kg,
        roll_resistance,
        drag_coefficient,
        frontal_area_m2,
        air_density_kg_per_m3,
        gravity_m_per_s2,
        final_drive_ratio,
        wheel_radius_m,
        gear_ratios,
        driveline_inertia_kgm2,
        powertrain_inertia_kgm2: powertrain_inertia,
        idle_speed_rpm,
        idle_fuel_g_per_s,
        engine_brake_torque_nm,
        fuel_poly,
        friction_torque,
        envelope: EngineEnvelope {
            min_rpm,
            max_rpm,
            max_torque_curve,
        },
    };
    cfg.validate().map_err(|e| FileError::new(e.to_string()))?;
    Ok(cfg)
}

// ---------------------------------------------------------------- route ---

/// Render a velocity \[m/s\] as a km/h literal that converts back to exactly
/// the same double. The naive `v * 3.6` can land on a neighboring double
/// whose division does not round back; nudge by ulps until it does.
fn kmh_literal(v_mps: f64) -> String {
    let y = v_mps * 3.6;
    if y / 3.6 == v_mps {
        return format!("{y}");
    }
    let mut up = y;
    let mut down = y;
    for _ in 0..8 {
        up = up.next_up();
        if up / 3.6 == v_mps {
            return format!("{up}");
        }
        down = down.next_down();
        if down / 3.6 == v_mps {
            return format!("{down}");
        }
    }
    format!("{y}")
}

/// Parse a route file: a `[segments]` table (`s_start_m s_end_m
/// speed_limit_kmh`) plus an `[events]` table (`trigger_m horizon_m
/// v_entry_kmh v_target_kmh`).
pub fn parse_route(text: &str) -> Result<RouteScenario, FileError> {
    #[derive(PartialEq)]
    enum Block {
        None,
        Segments,
        Events,
    }
    let mut block = Block::None;
    let mut segments = Vec::new();
    let mut events = Vec::new();

    for (no, raw) in text.lines().enumerate() {
        let line = clean(raw);
        if line.is_empty() {
            continue;
        }
        let lineno = no + 1;
        match line {
            "[segments]" => {
                block = Block::Segments;
                continue;
            }
            "[events]" => {
                block = Block::Events;
                continue;
            }
            _ => {}
        }
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(|tok| tok.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| FileError::at(lineno, "cannot parse numeric field"))?;
        match block {
            Block::None => return Err(FileError::at(lineno, "data before a [segments]/[events] header")),
            Block::Segments => {
                if fields.len() != 3 {
                    return Err(FileError::at(lineno, "segment rows need 3 columns"));
                }
                segments.push(RoadSegment {
                    start_m: fields[0],
                    end_m: fields[1],
                    speed_limit_m_per_s: fields[2] * KMH_TO_MPS,
                });
            }
            Block::Events => {
                if fields.len() != 4 {
                    return Err(FileError::at(lineno, "event rows need 4 columns"));
                }
                events.push(VelocityEvent {
                    trigger_m: fields[0],
                    horizon_m: fields[1],
                    entry_m_per_s: fields[2] * KMH_TO_MPS,
                    target_m_per_s: fields[3] * KMH_TO_MPS,
                });
            }
        }
    }

    let length_m = segments.last().map(|s| s.end_m).unwrap_or(0.0);
    let scenario = RouteScenario {
        length_m,
        segments,
        events,
    };
    scenario
        .validate()
        .map_err(|e| FileError::new(e.to_string()))?;
    Ok(scenario)
}

/// Serialize a scenario in the route file format; reloading the output
/// reproduces the structure exactly.
pub fn write_route(scenario: &RouteScenario) -> String {
    let mut out = String::new();
    out.push_str("[segments]\n# s_start_m  s_end_m  speed_limit_kmh\n");
    for seg in &scenario.segments {
        out.push_str(&format!(
            "{} {} {}\n",
            seg.start_m,
            seg.end_m,
            kmh_literal(seg.speed_limit_m_per_s)
        ));
    }
    out.push_str("\n[events]\n# trigger_m  horizon_m  v_entry_kmh  v_target_kmh\n");
    for ev in &scenario.events {
        out.push_str(&format!(
            "{} {} {} {}\n",
            ev.trigger_m,
            ev.horizon_m,
            kmh_literal(ev.entry_m_per_s),
            kmh_literal(ev.target_m_per_s)
        ));
    }
    out
}

// ---------------------------------------------------------------- cycle ---

/// Parse a two-column drive cycle file: `t_s v_kmh`.
pub fn parse_cycle(text: &str, name: &str) -> Result<DriveCycle, FileError> {
    let mut time_s = Vec::new();
    let mut speed = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = clean(raw);
        if line.is_empty() {
            continue;
        }
        let lineno = no + 1;
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(|tok| tok.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| FileError::at(lineno, "cannot parse numeric field"))?;
        if fields.len() != 2 {
            return Err(FileError::at(lineno, "cycle rows need 2 columns (t_s v_kmh)"));
        }
        time_s.push(fields[0]);
        speed.push(fields[1] * KMH_TO_MPS);
    }
    let cycle = DriveCycle {
        name: name.to_string(),
        time_s,
        speed_m_per_s: speed,
    };
    cycle.validate().map_err(|e| FileError::new(e.to_string()))?;
    Ok(cycle)
}

pub fn write_cycle(cycle: &DriveCycle) -> String {
    let mut out = String::from("# t_s  v_kmh\n");
    for (t, v) in cycle.time_s.iter().zip(&cycle.speed_m_per_s) {
        out.push_str(&format!("{} {}\n", t, kmh_literal(*v)));
    }
    out
}
