//! File formats, workflows and report rendering for the deceleration-advice
//! tool. The numerical core lives in `ecodrive-core`; this crate adds the
//! text formats (truck config, routes, drive cycles), the synthetic cycle
//! generator, the cycle assessment workflow and the table/JSON writers
//! behind the `ecodrive` binary.

pub mod assess;
pub mod io;
pub mod report;
pub mod synth;

/// Process exit codes of the `ecodrive` binary.
pub mod exit_code {
    pub const OK: i32 = 0;
    /// The optimization problem is infeasible (no admissible mode, boundary
    /// velocity unreachable, iteration budget exhausted).
    pub const INFEASIBLE: i32 = 2;
    /// A verify run found an optimality gap above the configured bound.
    pub const GAP_EXCEEDED: i32 = 3;
    /// Input files or arguments failed parsing/validation.
    pub const INPUT: i32 = 4;
}

/// Shipped default truck parameter file.
pub const DEFAULT_TRUCK_FILE: &str = include_str!("../data/truck_default.cfg");
/// Shipped motorway-to-urban assessment route.
pub const DEFAULT_ROUTE_FILE: &str = include_str!("../data/motorway_to_urban.route");
