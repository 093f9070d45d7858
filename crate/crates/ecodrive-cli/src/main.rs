use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::exit;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use ecodrive_cli::assess::{assess_cycle, AssessOptions};
use ecodrive_cli::exit_code;
use ecodrive_cli::io;
use ecodrive_cli::report;
use ecodrive_cli::synth::{synthetic_cycle, CycleKind};
use ecodrive_cli::{DEFAULT_ROUTE_FILE, DEFAULT_TRUCK_FILE};
use ecodrive_core::cycle::DriveCycle;
use ecodrive_core::dp::{dp_solve, DpOptions};
use ecodrive_core::route::{events_to_problems, RouteScenario};
use ecodrive_core::sim::{compare_logs, run_route, SimOptions};
use ecodrive_core::solver::{
    samples_for_tolerance, solve_costate, solve_costate_traced, SegmentProblem, SolveResult,
    SolverOptions,
};
use ecodrive_core::truck::TruckConfig;
use ecodrive_core::CostWeights;

#[derive(Parser)]
#[command(
    name = "ecodrive",
    version,
    about = "Deceleration advice for heavy trucks: mode/gear optimization, trip and cycle assessment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Truck parameter file (built-in 25.2 t dataset when omitted)
    #[arg(long)]
    truck: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "ecodrive_out")]
    out: PathBuf,
    /// Cost ratio(s) phi = w_t/w_f, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = vec![15.0, 30.0, 60.0])]
    phi: Vec<f64>,
    /// Distance samples per advice segment (tolerance-scaled when omitted)
    #[arg(long)]
    samples: Option<usize>,
    /// Boundary velocity tolerance [m/s]
    #[arg(long, default_value_t = 0.1)]
    tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum CycleKindArg {
    Rural,
    Motorway,
}

impl From<CycleKindArg> for CycleKind {
    fn from(k: CycleKindArg) -> Self {
        match k {
            CycleKindArg::Rural => CycleKind::Rural,
            CycleKindArg::Motorway => CycleKind::Motorway,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one advice event and write plot-ready profile columns
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Route file (built-in motorway-to-urban route when omitted)
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Index of the event to solve
        #[arg(long, default_value_t = 0)]
        event: usize,
    },
    /// Simulate a route with advice off and once per phi with advice on
    Trip {
        #[command(flatten)]
        common: CommonArgs,
        /// Route file (built-in motorway-to-urban route when omitted)
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Compare the sweep solver against the exhaustive reference optimum
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Route file (built-in motorway-to-urban route when omitted)
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Largest tolerated optimality gap [%]
        #[arg(long, default_value_t = 2.0)]
        gap_bound: f64,
        /// Velocity grid resolution of the reference [m/s]
        #[arg(long, default_value_t = 0.05)]
        resolution: f64,
    },
    /// Segment a drive cycle, advise its deceleration sections, report totals
    Cycle {
        #[command(flatten)]
        common: CommonArgs,
        /// Cycle file (t_s v_kmh columns)
        #[arg(long, conflicts_with = "synthetic")]
        cycle: Option<PathBuf>,
        /// Use a built-in synthetic cycle instead of a file
        #[arg(long, value_enum)]
        synthetic: Option<CycleKindArg>,
        /// Seed for the synthetic cycle
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Generate a synthetic drive cycle file
    GenCycle {
        /// Cycle flavor
        #[arg(long, value_enum)]
        kind: CycleKindArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "ecodrive_out")]
        out: PathBuf,
    },
}

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError {
            code: exit_code::INPUT,
            message: message.into(),
        }
    }

    fn infeasible(message: impl Into<String>) -> Self {
        CliError {
            code: exit_code::INFEASIBLE,
            message: message.into(),
        }
    }

    fn io(err: std::io::Error, path: &Path) -> Self {
        CliError {
            code: 1,
            message: format!("{}: {err}", path.display()),
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => match err.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                print!("{err}");
                exit(exit_code::OK);
            }
            _ => {
                eprint!("{err}");
                exit(exit_code::INPUT);
            }
        },
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {}", err.message);
        exit(err.code);
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { common, scenario, event } => cmd_solve(common, scenario, event),
        Command::Trip { common, scenario } => cmd_trip(common, scenario),
        Command::Verify { common, scenario, gap_bound, resolution } => {
            cmd_verify(common, scenario, gap_bound, resolution)
        }
        Command::Cycle { common, cycle, synthetic, seed } => {
            cmd_cycle(common, cycle, synthetic, seed)
        }
        Command::GenCycle { kind, seed, out } => cmd_gen_cycle(kind, seed, out),
    }
}

// ------------------------------------------------------------- loading ---

fn load_truck(path: &Option<PathBuf>) -> Result<TruckConfig, CliError> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError::io(e, p))?,
        None => DEFAULT_TRUCK_FILE.to_string(),
    };
    io::parse_truck(&text).map_err(|e| CliError::input(format!("truck config: {e}")))
}

fn load_scenario(path: &Option<PathBuf>) -> Result<(String, RouteScenario), CliError> {
    let (name, text) = match path {
        Some(p) => (
            p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            fs::read_to_string(p).map_err(|e| CliError::io(e, p))?,
        ),
        None => ("motorway_to_urban".to_string(), DEFAULT_ROUTE_FILE.to_string()),
    };
    let scenario = io::parse_route(&text).map_err(|e| CliError::input(format!("route: {e}")))?;
    Ok((name, scenario))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(e, dir))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(e, &path))?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn json_string<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn event_samples(
    cfg: &TruckConfig,
    common: &CommonArgs,
    length_m: f64,
    target_m_per_s: f64,
) -> usize {
    common
        .samples
        .unwrap_or_else(|| samples_for_tolerance(cfg, length_m, target_m_per_s, common.tol, 8.0))
}

fn solver_options(common: &CommonArgs) -> SolverOptions {
    SolverOptions {
        tol_m_per_s: common.tol,
        ..SolverOptions::default()
    }
}

fn solve_all_events(
    cfg: &TruckConfig,
    scenario: &RouteScenario,
    common: &CommonArgs,
    phi: f64,
) -> Result<BTreeMap<usize, SolveResult>, CliError> {
    let mut out = BTreeMap::new();
    for (i, ev) in scenario.events.iter().enumerate() {
        let samples = event_samples(cfg, common, ev.horizon_m, ev.target_m_per_s);
        let prob = SegmentProblem {
            start_m: ev.trigger_m,
            end_m: ev.end_m(),
            entry_m_per_s: ev.entry_m_per_s,
            target_m_per_s: ev.target_m_per_s,
            samples,
            weights: CostWeights::from_phi(phi),
        };
        let result = solve_costate(cfg, &prob, &solver_options(common))
            .map_err(|e| CliError::infeasible(format!("event {i} (phi {phi}): {e}")))?;
        out.insert(i, result);
    }
    Ok(out)
}

// -------------------------------------------------------------- solve ----

fn cmd_solve(
    common: CommonArgs,
    scenario: Option<PathBuf>,
    event: usize,
) -> Result<(), CliError> {
    let cfg = load_truck(&common.truck)?;
    let (_, route) = load_scenario(&scenario)?;
    let ev = route
        .events
        .get(event)
        .ok_or_else(|| CliError::input(format!("event {event} out of range (route has {})", route.events.len())))?;
    let phi = *common.phi.first().unwrap_or(&15.0);
    let samples = event_samples(&cfg, &common, ev.horizon_m, ev.target_m_per_s);
    let prob = SegmentProblem {
        start_m: ev.trigger_m,
        end_m: ev.end_m(),
        entry_m_per_s: ev.entry_m_per_s,
        target_m_per_s: ev.target_m_per_s,
        samples,
        weights: CostWeights::from_phi(phi),
    };
    let mut trace = Vec::new();
    let result = solve_costate_traced(&cfg, &prob, &solver_options(&common), Some(&mut trace))
        .map_err(|e| CliError::infeasible(format!("event {event}: {e}")))?;

    let summary = report::SolveSummary {
        event,
        phi,
        samples,
        delta_s_m: prob.delta_s(),
        converged: result.converged,
        iterations: result.iterations,
        boundary_error_m_per_s: prob.entry_m_per_s - result.v[0],
        cost: result.cost,
        fuel_g: result.total_fuel_g(),
        time_s: result.total_time_s(),
    };
    write_file(&common.out, "profile.dat", &report::profile_data(&prob, &result))?;
    write_file(&common.out, "costate_trace.dat", &report::costate_trace_data(&trace))?;
    write_file(&common.out, "solve_summary.json", &json_string(&summary))?;
    println!(
        "event {event} solved: {} iterations, fuel {:.2} g, time {:.2} s over {:.0} m",
        result.iterations,
        result.total_fuel_g(),
        result.total_time_s(),
        prob.length_m()
    );
    Ok(())
}

// --------------------------------------------------------------- trip ----

fn cmd_trip(common: CommonArgs, scenario: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = load_truck(&common.truck)?;
    let (name, route) = load_scenario(&scenario)?;
    let sim_opts = SimOptions::default();

    let baseline = run_route(&cfg, &route, None, &sim_opts)
        .map_err(|e| CliError::infeasible(format!("baseline run: {e}")))?;
    write_file(&common.out, "trace_disabled.dat", &report::trace_data(&baseline))?;

    // the advised runs are independent; solve and simulate them in parallel
    // and assemble the report in phi order
    let logs: Vec<Result<_, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = common
            .phi
            .iter()
            .map(|&phi| {
                let (cfg, route, common) = (&cfg, &route, &common);
                scope.spawn(move || {
                    let solutions = solve_all_events(cfg, route, common, phi)?;
                    run_route(cfg, route, Some(&solutions), &sim_opts)
                        .map_err(|e| CliError::infeasible(format!("advised run (phi {phi}): {e}")))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("run thread")).collect()
    });

    let mut runs = vec![(None, compare_logs(&baseline, &baseline))];
    for (&phi, log) in common.phi.iter().zip(logs) {
        let log = log?;
        write_file(&common.out, &format!("trace_phi{phi}.dat"), &report::trace_data(&log))?;
        runs.push((Some(phi), compare_logs(&log, &baseline)));
    }

    write_file(&common.out, "trip_report.txt", &report::trip_table(&name, &runs))?;
    write_file(
        &common.out,
        "trip_report.json",
        &json_string(&report::trip_json(&name, &runs)),
    )?;
    for (phi, rep) in &runs[1..] {
        println!(
            "phi {:>4}: route fuel {:.1} g ({:.2} % saved), time {:.1} s ({:+.2} %)",
            phi.unwrap(),
            rep.route.fuel_g,
            rep.route.fuel_saved_pct,
            rep.route.time_s,
            rep.route.time_increase_pct
        );
    }
    Ok(())
}

// ------------------------------------------------------------- verify ----

fn cmd_verify(
    common: CommonArgs,
    scenario: Option<PathBuf>,
    gap_bound: f64,
    resolution: f64,
) -> Result<(), CliError> {
    let cfg = load_truck(&common.truck)?;
    let (name, route) = load_scenario(&scenario)?;
    let phi = *common.phi.first().unwrap_or(&15.0);
    if route.events.is_empty() {
        return Err(CliError::input("route has no events to verify"));
    }

    let mut rows = Vec::new();
    let mut any_failed = false;
    let mut worst_gap = f64::NEG_INFINITY;
    for (i, prob) in events_to_problems(&route, CostWeights::from_phi(phi), 2)
        .into_iter()
        .enumerate()
    {
        let samples = event_samples(&cfg, &common, prob.length_m(), prob.target_m_per_s);
        let prob = SegmentProblem { samples, ..prob };
        let dp_opts = DpOptions {
            resolution_m_per_s: resolution,
            max_samples: samples.max(200),
            ..DpOptions::default()
        };
        let outcome = match (
            dp_solve(&cfg, &prob, &dp_opts),
            solve_costate(&cfg, &prob, &solver_options(&common)),
        ) {
            (Ok(dp), Ok(pmp)) => {
                let gap_pct = 100.0 * (pmp.cost - dp.cost) / dp.cost;
                worst_gap = worst_gap.max(gap_pct);
                report::VerifyOutcome::Compared {
                    j_dp: dp.cost,
                    j_pmp: pmp.cost,
                    gap_pct,
                }
            }
            (Err(e), _) => {
                any_failed = true;
                report::VerifyOutcome::Failed { reason: format!("reference: {e}") }
            }
            (_, Err(e)) => {
                any_failed = true;
                report::VerifyOutcome::Failed { reason: format!("solver: {e}") }
            }
        };
        rows.push(report::VerifyRow { event: i, phi, samples, outcome });
    }

    let json = report::VerifyJson {
        route: name,
        gap_bound_pct: gap_bound,
        rows,
    };
    write_file(&common.out, "verify_report.txt", &report::verify_table(&json))?;
    write_file(&common.out, "verify_report.json", &json_string(&json))?;

    if worst_gap.is_finite() {
        println!("worst optimality gap: {worst_gap:+.4} % (bound {gap_bound:.2} %)");
    }
    if worst_gap > gap_bound {
        return Err(CliError {
            code: exit_code::GAP_EXCEEDED,
            message: format!("optimality gap {worst_gap:.4} % exceeds the {gap_bound:.2} % bound"),
        });
    }
    if any_failed {
        return Err(CliError::infeasible("at least one instance could not be compared"));
    }
    Ok(())
}

// -------------------------------------------------------------- cycle ----

fn cmd_cycle(
    common: CommonArgs,
    cycle: Option<PathBuf>,
    synthetic: Option<CycleKindArg>,
    seed: u64,
) -> Result<(), CliError> {
    let cfg = load_truck(&common.truck)?;
    let cycle: DriveCycle = match (&cycle, synthetic) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(e, path))?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            io::parse_cycle(&text, &name).map_err(|e| CliError::input(format!("cycle: {e}")))?
        }
        (None, Some(kind)) => synthetic_cycle(kind.into(), seed),
        _ => return Err(CliError::input("pass exactly one of --cycle or --synthetic")),
    };

    let opts = AssessOptions {
        samples: common.samples,
        tol_m_per_s: common.tol,
        ..AssessOptions::default()
    };
    let assessment = assess_cycle(&cfg, &cycle, &common.phi, &opts)
        .map_err(|e| CliError::input(format!("cycle assessment: {e}")))?;

    write_file(&common.out, "cycle_report.txt", &report::cycle_table(&assessment))?;
    write_file(
        &common.out,
        "cycle_report.json",
        &json_string(&report::cycle_json(&assessment)),
    )?;
    write_file(&common.out, "cycle_sections.dat", &report::sections_data(&assessment))?;
    for o in &assessment.outcomes {
        println!(
            "phi {:>4}: fuel {:.1} g ({:.2} % saved), time {:.1} s ({:+.2} %)",
            o.phi, o.fuel_g, o.fuel_saved_pct, o.time_s, o.time_increase_pct
        );
    }
    Ok(())
}

fn cmd_gen_cycle(kind: CycleKindArg, seed: u64, out: PathBuf) -> Result<(), CliError> {
    let cycle = synthetic_cycle(kind.into(), seed);
    let name = format!("{}.cycle", cycle.name);
    write_file(&out, &name, &io::write_cycle(&cycle))?;
    Ok(())
}
