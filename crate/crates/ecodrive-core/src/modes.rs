//! Driving modes: the switched powertrain configurations the optimizer
//! chooses among. With `n` driving gears there are `3n + 1` modes in total:
//! cruising, coasting and engine braking per gear, plus one eco-roll mode.

use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DrivingMode {
    /// Constant velocity in the given gear, clutch engaged, engine fueled.
    Cruising { gear: u8 },
    /// Neutral gear, clutch open; the engine idles while resistance forces
    /// decelerate the truck.
    EcoRoll,
    /// Clutch engaged, zero fueling; engine internal friction brakes the
    /// truck through the driveline.
    Coasting { gear: u8 },
    /// Coasting plus the continuous service brake.
    EngineBrake { gear: u8 },
}

impl DrivingMode {
    /// Gear position; 0 (neutral) for eco-roll.
    pub fn gear(&self) -> u8 {
        match *self {
            DrivingMode::Cruising { gear } => gear,
            DrivingMode::EcoRoll => 0,
            DrivingMode::Coasting { gear } => gear,
            DrivingMode::EngineBrake { gear } => gear,
        }
    }

    pub fn clutch_engaged(&self) -> bool {
        !matches!(self, DrivingMode::EcoRoll)
    }

    /// `true` for the modes that consume fuel (cruising and idling eco-roll).
    pub fn is_fueled(&self) -> bool {
        matches!(self, DrivingMode::Cruising { .. } | DrivingMode::EcoRoll)
    }

    /// Enumerate all `3n + 1` modes for a box with `gear_count` driving gears.
    pub fn all(gear_count: u8) -> impl Iterator<Item = DrivingMode> {
        let cruising = (1..=gear_count).map(|gear| DrivingMode::Cruising { gear });
        let coasting = (1..=gear_count).map(|gear| DrivingMode::Coasting { gear });
        let braking = (1..=gear_count).map(|gear| DrivingMode::EngineBrake { gear });
        cruising
            .chain(core::iter::once(DrivingMode::EcoRoll))
            .chain(coasting)
            .chain(braking)
    }

    /// Deterministic tie-break preference: higher gear first, then
    /// cruising > eco-roll > coasting > engine brake. Larger wins.
    pub(crate) fn preference(&self) -> (u8, u8) {
        let kind = match self {
            DrivingMode::Cruising { .. } => 3,
            DrivingMode::EcoRoll => 2,
            DrivingMode::Coasting { .. } => 1,
            DrivingMode::EngineBrake { .. } => 0,
        };
        (self.gear(), kind)
    }
}

impl fmt::Display for DrivingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DrivingMode::Cruising { gear } => write!(f, "cruise({gear})"),
            DrivingMode::EcoRoll => write!(f, "eco-roll"),
            DrivingMode::Coasting { gear } => write!(f, "coast({gear})"),
            DrivingMode::EngineBrake { gear } => write!(f, "brake({gear})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_count_is_3n_plus_1() {
        assert_eq!(DrivingMode::all(8).count(), 25);
        assert_eq!(DrivingMode::all(1).count(), 4);
    }

    #[test]
    fn eco_roll_is_neutral_and_disengaged() {
        assert_eq!(DrivingMode::EcoRoll.gear(), 0);
        assert!(!DrivingMode::EcoRoll.clutch_engaged());
        assert!(DrivingMode::EcoRoll.is_fueled());
        assert!(!DrivingMode::Coasting { gear: 3 }.is_fueled());
    }

    #[test]
    fn preference_orders_gear_then_kind() {
        let cr8 = DrivingMode::Cruising { gear: 8 };
        let co8 = DrivingMode::Coasting { gear: 8 };
        let eb8 = DrivingMode::EngineBrake { gear: 8 };
        let co7 = DrivingMode::Coasting { gear: 7 };
        assert!(cr8.preference() > co8.preference());
        assert!(co8.preference() > eb8.preference());
        assert!(eb8.preference() > co7.preference());
    }
}
