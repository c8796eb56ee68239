use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wardrop_cli::commands::{
    self, comparison_table, describe, flow_table, parse_methods, CliError, RunOptions, Status,
};
use wardrop_cli::{presets, Scenario};

#[derive(Parser)]
#[command(name = "wardrop", version, about = "Multi-population Wardrop equilibria")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario, certify it and write flow tables and drawings.
    Run(RunArgs),
    /// Solve with several methods and report how far they disagree.
    Compare(CompareArgs),
    /// Check a scenario file without solving it.
    Validate(ScenarioArg),
}

#[derive(Args)]
struct ScenarioArg {
    /// Scenario file, or a preset name (scenario1, scenario2, scenario3).
    scenario: String,
    /// JSON array of [tail, head, km] entries replacing edge lengths.
    #[arg(long, value_name = "FILE")]
    lengths: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    /// Directory for flows.csv, flows_<population>.dot and summary.json.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Also write trajectory.csv.
    #[arg(long)]
    trajectory: bool,
    /// Integration step h.
    #[arg(long, value_name = "H")]
    step: Option<f64>,
    /// Convergence tolerance on the flow speed.
    #[arg(long, value_name = "TOL")]
    tol: Option<f64>,
    /// Relative gap accepted by the certificate.
    #[arg(long, value_name = "TOL")]
    gap_tol: Option<f64>,
    /// Start from a random interior point drawn with this seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Decimal places of printed flows.
    #[arg(long, value_name = "DIGITS")]
    precision: Option<u32>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    /// Comma-separated subset of hrf, gauss_seidel, qp.
    #[arg(long, default_value = "hrf,gauss_seidel,qp")]
    methods: String,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

fn load(arg: &ScenarioArg) -> Result<Scenario, CliError> {
    let mut scenario = presets::load(&arg.scenario)?;
    if let Some(path) = &arg.lengths {
        scenario.apply_lengths(&Scenario::read_lengths(path)?)?;
    }
    Ok(scenario)
}

fn placeholder_note(scenario: &Scenario) {
    if scenario.placeholder_lengths {
        eprintln!("note: edge lengths are placeholders; pass --lengths FILE for measured values");
    }
}

fn execute(cli: Cli) -> Result<Status, CliError> {
    match cli.command {
        Command::Run(args) => {
            let mut scenario = load(&args.scenario)?;
            let s = &mut scenario.solver;
            s.step = args.step.or(s.step);
            s.rhs_tol = args.tol.or(s.rhs_tol);
            s.gap_tol = args.gap_tol.or(s.gap_tol);
            s.seed = args.seed.or(s.seed);
            scenario.output.precision = args.precision.or(scenario.output.precision);
            placeholder_note(&scenario);
            let built = scenario.build()?;
            let outcome = commands::run(
                &built,
                &RunOptions {
                    out: Some(args.out.clone()),
                    trajectory: args.trajectory,
                },
            )?;
            print!("{}", flow_table(&built, &outcome.report));
            let s = &outcome.summary;
            println!(
                "\nconverged: {}  certified: {}  max relative gap: {:e}  iterations: {}  wall clock: {:.3} s  drift: {:e}",
                s.converged, s.certified, s.max_relative_gap, s.iterations, s.wall_clock_s, s.max_conservation_drift
            );
            println!("total cost: {}", s.total_cost);
            if let Some(d) = s.emission_dollars {
                println!("emission dollars: {d}");
            }
            for path in &outcome.written {
                println!("wrote {}", path.display());
            }
            Ok(outcome.status)
        }
        Command::Compare(args) => {
            let methods = parse_methods(&args.methods)?;
            let mut scenario = load(&args.scenario)?;
            scenario.solver.seed = args.seed.or(scenario.solver.seed);
            placeholder_note(&scenario);
            let built = scenario.build()?;
            let cmp = commands::compare(&built, &methods)?;
            print!("{}", comparison_table(&built, &cmp));
            Ok(Status::Certified)
        }
        Command::Validate(args) => {
            let scenario = load(&args)?;
            let built = scenario.build()?;
            print!("{}", describe(&built));
            println!("ok");
            Ok(Status::Certified)
        }
    }
}

fn main() -> ExitCode {
    let status = match execute(Cli::parse()) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            e.status()
        }
    };
    ExitCode::from(status.code() as u8)
}
