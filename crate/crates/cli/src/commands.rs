//! `run`, `compare` and `validate`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use thiserror::Error;
use wardrop_core::costs::total_cost;
use wardrop_core::equilibrium::{certify, gauss_seidel_oracle, potential_qp_oracle, GaussSeidelConfig};
use wardrop_core::sampling::random_interior_flows;
use wardrop_core::{EquilibriumError, GapCertificate, HrfError, SolveReport};

use crate::output::{flows_csv, flows_dot, trajectory_csv, write_atomic, PopulationSummary, RunSummary};
use crate::scenario::{BuiltScenario, ScenarioError};

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Certified = 0,
    Uncertified = 2,
    NotConverged = 3,
    InputError = 4,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("method `{method}` does not apply to this scenario: {source}")]
    Inapplicable {
        method: Method,
        #[source]
        source: EquilibriumError,
    },
    #[error("unknown method `{0}` (expected hrf, gauss_seidel or qp)")]
    UnknownMethod(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("writing {0}: {1}")]
    Output(PathBuf, #[source] std::io::Error),
}

impl CliError {
    pub fn status(&self) -> Status {
        match self {
            CliError::Scenario(_) | CliError::Inapplicable { .. } | CliError::UnknownMethod(_) => Status::InputError,
            CliError::Solver(_) | CliError::Output(..) => Status::NotConverged,
        }
    }
}

impl From<HrfError> for CliError {
    fn from(e: HrfError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<EquilibriumError> for CliError {
    fn from(e: EquilibriumError) -> Self {
        CliError::Solver(e.to_string())
    }
}

/// Integrates the flow and certifies the end point.
pub fn solve(built: &BuiltScenario) -> Result<(SolveReport, GapCertificate), CliError> {
    let initial = match built.seed {
        Some(seed) => Some(random_interior_flows(&built.system, seed).map_err(|e| CliError::Solver(e.to_string()))?),
        None => None,
    };
    let mut report = wardrop_core::hrf::solve(&built.system, &*built.cost, &built.solver, initial)?;
    let cert = certify(&report.profile, &*built.cost, &built.system, built.gap_tol)?;
    report.certificate = Some(cert.clone());
    Ok((report, cert))
}

/// Certified wins; otherwise a solve that stopped short is a non-convergence.
pub fn status_of(report: &SolveReport, cert: &GapCertificate) -> Status {
    if cert.passed {
        Status::Certified
    } else if report.converged {
        Status::Uncertified
    } else {
        Status::NotConverged
    }
}

pub fn summarize(built: &BuiltScenario, report: &SolveReport, cert: &GapCertificate) -> Result<RunSummary, CliError> {
    let cost = total_cost(&*built.cost, &report.profile).map_err(|e| CliError::Solver(e.to_string()))?;
    let emission_dollars = match &built.emission {
        Some(m) => Some(
            m.emission_dollars(&report.profile)
                .map_err(|e| CliError::Solver(e.to_string()))?,
        ),
        None => None,
    };
    Ok(RunSummary {
        scenario: built.name.clone(),
        cost_model: built.cost.name().to_string(),
        converged: report.converged,
        certified: cert.passed,
        gap_tol: cert.tolerance,
        max_relative_gap: cert.max_relative_gap(),
        total_gap: cert.total_gap,
        populations: built
            .system
            .populations()
            .iter()
            .enumerate()
            .map(|(r, p)| PopulationSummary {
                name: p.name().to_string(),
                gap: cert.gaps[r],
                relative_gap: cert.relative_gaps[r],
                cost: cert.costs[r],
            })
            .collect(),
        iterations: report.iterations,
        simulated_time: report.time,
        rhs_norm: report.rhs_norm,
        wall_clock_s: report.wall_clock.as_secs_f64(),
        max_conservation_drift: report.max_conservation_drift,
        min_component: report.min_component,
        lyapunov_violations: report.lyapunov_violations,
        halvings: report.halvings,
        reprojections: report.reprojections,
        total_cost: cost,
        emission_dollars,
        placeholder_lengths: built.placeholder_lengths,
        seed: built.seed,
    })
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Artifact directory; nothing is written if absent.
    pub out: Option<PathBuf>,
    pub trajectory: bool,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: SolveReport,
    pub certificate: GapCertificate,
    pub summary: RunSummary,
    pub status: Status,
    pub written: Vec<PathBuf>,
}

fn safe_file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write(dir: &Path, file: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = dir.join(file);
    write_atomic(&path, contents.as_bytes()).map_err(|e| CliError::Output(path.clone(), e))?;
    written.push(path);
    Ok(())
}

/// Solve, certify and write artifacts. Artifacts are written whatever the
/// outcome of certification.
pub fn run(built: &BuiltScenario, options: &RunOptions) -> Result<RunOutcome, CliError> {
    let (report, cert) = solve(built)?;
    let summary = summarize(built, &report, &cert)?;
    let status = status_of(&report, &cert);
    let mut written = Vec::new();
    if let Some(dir) = &options.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Output(dir.clone(), e))?;
        let p = built.precision;
        write(
            dir,
            "flows.csv",
            &flows_csv(&built.system, &report.profile, p),
            &mut written,
        )?;
        for (r, pop) in built.system.populations().iter().enumerate() {
            let file = format!("flows_{}.dot", safe_file_stem(pop.name()));
            write(
                dir,
                &file,
                &flows_dot(&built.system, &report.profile, r, p),
                &mut written,
            )?;
        }
        let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
        write(dir, "summary.json", &json, &mut written)?;
        if options.trajectory || built.trajectory {
            write(
                dir,
                "trajectory.csv",
                &trajectory_csv(&built.system, &report.trajectory),
                &mut written,
            )?;
        }
    }
    Ok(RunOutcome {
        report,
        certificate: cert,
        summary,
        status,
        written,
    })
}

/// Flow table text: one row per edge, population columns and total.
pub fn flow_table(built: &BuiltScenario, report: &SolveReport) -> String {
    let net = built.system.network();
    let full = report.profile.full_matrix();
    let p = built.precision;
    let mut out = format!("{:<10}", "edge");
    for pop in built.system.populations() {
        let _ = write!(out, "{:>12}", pop.name());
    }
    let _ = writeln!(out, "{:>12}", "total");
    for k in 0..net.edge_count() {
        let row: Vec<f64> = full.row(k).iter().copied().collect();
        let (units, total) = crate::output::round_row(&row, p);
        let _ = write!(out, "{:<10}", net.edge_label(k));
        for u in units {
            let _ = write!(out, "{:>12}", crate::output::format_units(u, p));
        }
        let _ = writeln!(out, "{:>12}", crate::output::format_units(total, p));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Hrf,
    GaussSeidel,
    Qp,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Hrf => "hrf",
            Method::GaussSeidel => "gauss_seidel",
            Method::Qp => "qp",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "hrf" => Ok(Method::Hrf),
            "gauss_seidel" | "gauss-seidel" | "gs" => Ok(Method::GaussSeidel),
            "qp" => Ok(Method::Qp),
            other => Err(CliError::UnknownMethod(other.to_string())),
        }
    }
}

pub fn parse_methods(list: &str) -> Result<Vec<Method>, CliError> {
    let mut out: Vec<Method> = Vec::new();
    for m in list.split(',').filter(|s| !s.trim().is_empty()) {
        let m = m.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(CliError::UnknownMethod(list.to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct MethodResult {
    pub method: Method,
    /// Per-edge totals over the network.
    pub totals: DVector<f64>,
    /// Per-population flows over the network, when the method resolves them.
    pub populations: Option<Vec<DVector<f64>>>,
    pub wall_clock: Duration,
    /// Certificate of the method's own answer, when it has a per-population profile.
    pub certified: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub results: Vec<MethodResult>,
    /// Largest |Δ total| on any edge between any two methods.
    pub max_total_disagreement: f64,
    /// Largest |Δ flow| on any edge and population, over methods that give splits.
    pub max_population_disagreement: Option<f64>,
}

fn run_method(built: &BuiltScenario, method: Method) -> Result<MethodResult, CliError> {
    let started = Instant::now();
    let full = |profile: &wardrop_core::FlowProfile| -> Vec<DVector<f64>> {
        (0..profile.population_count())
            .map(|r| profile.full_population(r))
            .collect()
    };
    let (totals, populations, certified) = match method {
        Method::Hrf => {
            let (report, cert) = solve(built)?;
            (report.profile.totals(), Some(full(&report.profile)), Some(cert.passed))
        }
        Method::GaussSeidel => {
            let config = GaussSeidelConfig {
                gap_tol: built.gap_tol,
                solver: built.solver,
                ..Default::default()
            };
            let result = gauss_seidel_oracle(&built.system, &*built.cost, &config, None)?;
            let cert = certify(&result.profile, &*built.cost, &built.system, built.gap_tol)?;
            (result.profile.totals(), Some(full(&result.profile)), Some(cert.passed))
        }
        Method::Qp => {
            let result = potential_qp_oracle(&built.system, &*built.cost).map_err(|e| match e {
                EquilibriumError::NonPotentialCost(_) | EquilibriumError::RestrictedPopulation(_) => {
                    CliError::Inapplicable { method, source: e }
                }
                other => other.into(),
            })?;
            (result.totals, None, None)
        }
    };
    Ok(MethodResult {
        method,
        totals,
        populations,
        wall_clock: started.elapsed(),
        certified,
    })
}

/// Runs `methods` concurrently and measures their disagreement.
pub fn compare(built: &BuiltScenario, methods: &[Method]) -> Result<Comparison, CliError> {
    let outcomes: Vec<Result<MethodResult, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = methods.iter().map(|&m| s.spawn(move || run_method(built, m))).collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(CliError::Solver("method thread panicked".into())))
            })
            .collect()
    });
    // input errors take precedence over solver failures
    let mut results = Vec::new();
    let mut first_err: Option<CliError> = None;
    for o in outcomes {
        match o {
            Ok(r) => results.push(r),
            Err(e) => {
                let replace = match &first_err {
                    None => true,
                    Some(prev) => prev.status() != Status::InputError && e.status() == Status::InputError,
                };
                if replace {
                    first_err = Some(e);
                }
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }

    let mut max_total = 0.0f64;
    let mut max_pop: Option<f64> = None;
    for (i, a) in results.iter().enumerate() {
        for b in &results[i + 1..] {
            max_total = max_total.max((&a.totals - &b.totals).amax());
            if let (Some(pa), Some(pb)) = (&a.populations, &b.populations) {
                let d = pa.iter().zip(pb).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max);
                max_pop = Some(max_pop.unwrap_or(0.0).max(d));
            }
        }
    }
    Ok(Comparison {
        results,
        max_total_disagreement: max_total,
        max_population_disagreement: max_pop,
    })
}

pub fn comparison_table(built: &BuiltScenario, cmp: &Comparison) -> String {
    let net = built.system.network();
    let mut out = format!("{:<10}", "edge");
    for r in &cmp.results {
        let _ = write!(out, "{:>16}", r.method.label());
    }
    out.push('\n');
    for k in 0..net.edge_count() {
        let _ = write!(out, "{:<10}", net.edge_label(k));
        for r in &cmp.results {
            let _ = write!(out, "{:>16.6}", r.totals[k]);
        }
        out.push('\n');
    }
    out.push('\n');
    for r in &cmp.results {
        let cert = match r.certified {
            Some(true) => "certified",
            Some(false) => "not certified",
            None => "totals only",
        };
        let _ = writeln!(
            out,
            "{:<14} {:>10.3} s   {cert}",
            r.method.label(),
            r.wall_clock.as_secs_f64()
        );
    }
    let _ = writeln!(out, "max per-edge total disagreement: {:e}", cmp.max_total_disagreement);
    if let Some(d) = cmp.max_population_disagreement {
        let _ = writeln!(out, "max per-edge per-population disagreement: {d:e}");
    }
    out
}

/// One-paragraph description of a valid scenario.
pub fn describe(built: &BuiltScenario) -> String {
    let net = built.system.network();
    let mut out = format!(
        "{}: {} vertices, {} edges, {} exits, cost `{}`\n",
        built.name,
        net.vertex_count(),
        net.edge_count(),
        net.exits().count(),
        built.cost.name()
    );
    for p in built.system.populations() {
        let entrances: Vec<String> = p
            .entrances()
            .iter()
            .map(|&(v, rate)| format!("{}={rate}", net.vertex_name(v)))
            .collect();
        let _ = writeln!(
            out,
            "  population `{}`: entrances {}, {} of {} edges usable",
            p.name(),
            entrances.join(" "),
            p.n_reduced(),
            net.edge_count()
        );
    }
    if built.placeholder_lengths {
        out.push_str("  edge lengths are placeholders\n");
    }
    out
}
