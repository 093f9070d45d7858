//! Property tests over the model and solver invariants.

use ecodrive_core::dynamics::{mode_dvds, mode_fuel_per_meter, resistance_force};
use ecodrive_core::modes::DrivingMode;
use ecodrive_core::route::motorway_to_urban;
use ecodrive_core::sim::{run_route, SimOptions};
use ecodrive_core::solver::{
    cost_of, feasible_modes, hamiltonian, samples_for_tolerance, solve_costate_traced,
    CostWeights, SegmentProblem, SolverOptions,
};
use ecodrive_core::truck::TruckConfig;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// All free-rolling modes decelerate, and harder in the documented
    /// order; cruising holds speed exactly.
    #[test]
    fn dvds_sign_and_ordering(v in 0.6..38.0f64, gear in 1u8..=8) {
        let cfg = TruckConfig::default();
        prop_assert_eq!(mode_dvds(&cfg, DrivingMode::Cruising { gear }, v).unwrap(), 0.0);
        let ec = mode_dvds(&cfg, DrivingMode::EcoRoll, v).unwrap();
        let co = mode_dvds(&cfg, DrivingMode::Coasting { gear }, v).unwrap();
        let eb = mode_dvds(&cfg, DrivingMode::EngineBrake { gear }, v).unwrap();
        prop_assert!(ec < 0.0);
        prop_assert!(eb < co && co < ec);
    }

    /// Fuel per meter is non-negative and zero exactly for the unfueled
    /// modes.
    #[test]
    fn fuel_per_meter_sign(v in 0.6..38.0f64, gear in 1u8..=8) {
        let cfg = TruckConfig::default();
        for mode in DrivingMode::all(cfg.gear_count()) {
            let fpm = mode_fuel_per_meter(&cfg, mode, v).unwrap();
            prop_assert!(fpm >= 0.0);
            if !mode.is_fueled() {
                prop_assert_eq!(fpm, 0.0);
            }
        }
        prop_assert!(mode_fuel_per_meter(&cfg, DrivingMode::EcoRoll, v).unwrap() > 0.0);
        let _ = gear;
    }

    /// Doubling speed quadruples the drag share of the resistance force.
    #[test]
    fn quadratic_drag_scaling(v in 0.1..19.0f64) {
        let cfg = TruckConfig::default();
        let rolling = resistance_force(&cfg, 0.0);
        let lhs = resistance_force(&cfg, 2.0 * v) - rolling;
        let rhs = 4.0 * (resistance_force(&cfg, v) - rolling);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
    }

    /// Randomized deceleration events solve within tolerance and respect
    /// every operating constraint; the co-state bracket halves step by step.
    #[test]
    fn solved_events_meet_all_invariants(
        v0_kmh in 40.0..90.0f64,
        drop_kmh in 10.0..30.0f64,
        length in 500.0..1500.0f64,
        phi in 8.0..70.0f64,
    ) {
        let cfg = TruckConfig::default();
        let opts = SolverOptions::default();
        let target = (v0_kmh - drop_kmh) / 3.6;
        let samples = samples_for_tolerance(&cfg, length, target, opts.tol_m_per_s, 8.0);
        let prob = SegmentProblem {
            start_m: 0.0,
            end_m: length,
            entry_m_per_s: v0_kmh / 3.6,
            target_m_per_s: target,
            samples,
            weights: CostWeights::from_phi(phi),
        };
        let mut trace = Vec::new();
        let result = solve_costate_traced(&cfg, &prob, &opts, Some(&mut trace)).unwrap();

        // boundary satisfaction
        prop_assert!(result.converged);
        prop_assert!((prob.entry_m_per_s - result.v[0]).abs() <= opts.tol_m_per_s);
        prop_assert_eq!(result.v[samples], prob.target_m_per_s);
        prop_assert!(result.v.iter().all(|&v| v > 0.0));

        // engine envelope on every engaged slice
        for (mode, omega) in result.modes.iter().zip(&result.omega_rpm) {
            if mode.clutch_engaged() {
                prop_assert!(cfg.envelope.speed_in_band(*omega));
            } else {
                prop_assert_eq!(*omega, cfg.idle_speed_rpm);
            }
        }

        // pointwise Hamiltonian minimality at the selection point
        for k in 0..samples {
            let (vk, lk) = (result.v[k + 1], result.lambda[k + 1]);
            let h_sel = hamiltonian(&cfg, &prob.weights, result.modes[k], vk, lk).unwrap();
            for m in feasible_modes(&cfg, vk, true) {
                let h = hamiltonian(&cfg, &prob.weights, m, vk, lk).unwrap();
                prop_assert!(h_sel <= h + 1e-9);
            }
        }

        // bisection bracket is non-increasing and halves every iteration
        for pair in trace.windows(2) {
            let w0 = pair[0].lambda_hi - pair[0].lambda_lo;
            let w1 = pair[1].lambda_hi - pair[1].lambda_lo;
            prop_assert!(w1 <= 0.5000001 * w0);
        }

        // cost bookkeeping agrees bit for bit
        prop_assert_eq!(cost_of(&result, &prob.weights).unwrap(), result.cost);
    }
}

/// Deterministic end-to-end identity: a route without events simulates
/// identically with and without the advice machinery.
#[test]
fn adviceless_route_is_bit_identical() {
    let cfg = TruckConfig::default();
    let mut scenario = motorway_to_urban();
    scenario.events.clear();
    let opts = SimOptions::default();
    let empty = alloc_map();
    let a = run_route(&cfg, &scenario, Some(&empty), &opts).unwrap();
    let b = run_route(&cfg, &scenario, None, &opts).unwrap();
    assert_eq!(a, b);
}

fn alloc_map() -> alloc::collections::BTreeMap<usize, ecodrive_core::solver::SolveResult> {
    alloc::collections::BTreeMap::new()
}

extern crate alloc;
