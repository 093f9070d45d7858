//! Finite-difference oracle for the analytic velocity derivatives: the
//! co-state update relies on dH/dv, so the analytic value must track a
//! central difference of the Hamiltonian itself.

use ecodrive_core::modes::DrivingMode;
use ecodrive_core::solver::{hamiltonian, hamiltonian_dv, CostWeights};
use ecodrive_core::truck::TruckConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_mode(rng: &mut ChaCha8Rng, gear_count: u8) -> DrivingMode {
    let gear = rng.gen_range(1..=gear_count);
    match rng.gen_range(0..4) {
        0 => DrivingMode::Cruising { gear },
        1 => DrivingMode::EcoRoll,
        2 => DrivingMode::Coasting { gear },
        _ => DrivingMode::EngineBrake { gear },
    }
}

#[test]
fn hamiltonian_slope_matches_central_differences_at_100_random_points() {
    let cfg = TruckConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for trial in 0..100 {
        let mode = random_mode(&mut rng, cfg.gear_count());
        let v: f64 = rng.gen_range(2.0..30.0);
        let lambda: f64 = rng.gen_range(-60.0..60.0);
        let weights = CostWeights::from_phi(rng.gen_range(5.0..80.0));

        let h = 1e-4 * v;
        let f = |v: f64| hamiltonian(&cfg, &weights, mode, v, lambda).unwrap();
        let fd = (f(v + h) - f(v - h)) / (2.0 * h);
        let analytic = hamiltonian_dv(&cfg, &weights, mode, v, lambda).unwrap();
        let rel = (analytic - fd).abs() / fd.abs().max(1e-9);
        assert!(
            rel < 1e-6,
            "trial {trial}: {mode} at v={v:.3}, lambda={lambda:.3}: analytic {analytic} vs fd {fd} (rel {rel:.2e})"
        );
    }
}
