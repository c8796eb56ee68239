//! Flow tables, DOT drawings, summaries and trajectory dumps.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use wardrop_core::hrf::TrajectoryPoint;
use wardrop_core::{FlowProfile, PopulationSystem};

/// Rounds each value to `precision` decimals so that the rounded values sum
/// to the rounded total (largest-remainder method). Returns the values and
/// the total, both in units of 10^-precision.
pub fn round_row(values: &[f64], precision: u32) -> (Vec<i64>, i64) {
    let scale = 10f64.powi(precision as i32);
    let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
    let total = scaled.iter().sum::<f64>().round() as i64;
    let mut units: Vec<i64> = scaled.iter().map(|v| v.floor() as i64).collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (scaled[a] - scaled[a].floor(), scaled[b] - scaled[b].floor());
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let missing = total - units.iter().sum::<i64>();
    for &i in order.iter().cycle().take(missing.max(0) as usize) {
        units[i] += 1;
    }
    (units, total)
}

/// Fixed-point text for `units` × 10^-precision.
pub fn format_units(units: i64, precision: u32) -> String {
    if precision == 0 {
        return units.to_string();
    }
    let scale = 10i64.pow(precision);
    let sign = if units < 0 { "-" } else { "" };
    let a = units.unsigned_abs();
    format!(
        "{sign}{}.{:0width$}",
        a / scale as u64,
        a % scale as u64,
        width = precision as usize
    )
}

/// One row per network edge: printed population flows and their total, then
/// the raw values at full precision.
pub fn flows_csv(system: &PopulationSystem, profile: &FlowProfile, precision: u32) -> String {
    let net = system.network();
    let names: Vec<&str> = system.populations().iter().map(|p| p.name()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["edge".to_string(), "tail".into(), "head".into()];
    header.extend(names.iter().map(|n| n.to_string()));
    header.push("total".into());
    header.extend(names.iter().map(|n| format!("raw_{n}")));
    header.push("raw_total".into());
    w.write_record(&header).expect("in-memory write");

    let full = profile.full_matrix();
    for k in 0..net.edge_count() {
        let row: Vec<f64> = full.row(k).iter().copied().collect();
        let (printed, total) = round_row(&row, precision);
        let e = net.edge(k);
        let mut rec = vec![
            net.edge_label(k),
            net.vertex_name(e.tail).to_string(),
            net.vertex_name(e.head).to_string(),
        ];
        rec.extend(printed.iter().map(|&u| format_units(u, precision)));
        rec.push(format_units(total, precision));
        rec.extend(row.iter().map(|v| v.to_string()));
        rec.push(row.iter().sum::<f64>().to_string());
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Population `r`'s flow as a DOT digraph. Edges with a nonzero printed
/// flow carry it as a label; the rest are drawn dotted and unlabeled.
pub fn flows_dot(system: &PopulationSystem, profile: &FlowProfile, r: usize, precision: u32) -> String {
    let net = system.network();
    let flow = profile.full_population(r);
    let scale = 10f64.powi(precision as i32);
    let mut out = format!("digraph {} {{\n  rankdir=LR;\n", dot_id(system.population(r).name()));
    for v in 0..net.vertex_count() {
        let shape = if net.is_exit(v) { "doublecircle" } else { "circle" };
        out.push_str(&format!("  {} [shape={shape}];\n", dot_id(net.vertex_name(v))));
    }
    for (k, e) in net.edges().iter().enumerate() {
        let units = (flow[k] * scale).round() as i64;
        let (t, h) = (dot_id(net.vertex_name(e.tail)), dot_id(net.vertex_name(e.head)));
        if units != 0 {
            out.push_str(&format!(
                "  {t} -> {h} [label={}];\n",
                dot_id(&format_units(units, precision))
            ));
        } else {
            out.push_str(&format!("  {t} -> {h} [style=dotted];\n"));
        }
    }
    out.push_str("}\n");
    out
}

/// `t`, every reduced flow population-major, then the RHS norm.
pub fn trajectory_csv(system: &PopulationSystem, points: &[TrajectoryPoint]) -> String {
    let net = system.network();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    for p in system.populations() {
        header.extend(
            p.edge_map()
                .iter()
                .map(|&k| format!("{}:{}", p.name(), net.edge_label(k))),
        );
    }
    header.push("rhs_norm".into());
    w.write_record(&header).expect("in-memory write");
    for point in points {
        let mut rec = vec![point.t.to_string()];
        for f in &point.flows {
            rec.extend(f.iter().map(|v| v.to_string()));
        }
        rec.push(point.rhs_norm.to_string());
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
}

#[derive(Debug, Clone, Serialize)]
pub struct PopulationSummary {
    pub name: String,
    pub gap: f64,
    pub relative_gap: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub cost_model: String,
    pub converged: bool,
    pub certified: bool,
    pub gap_tol: f64,
    pub max_relative_gap: f64,
    pub total_gap: f64,
    pub populations: Vec<PopulationSummary>,
    pub iterations: usize,
    pub simulated_time: f64,
    pub rhs_norm: f64,
    pub wall_clock_s: f64,
    pub max_conservation_drift: f64,
    pub min_component: f64,
    pub lyapunov_violations: usize,
    pub halvings: usize,
    pub reprojections: usize,
    /// Σ_r ⟨c^r, ϑ^r⟩.
    pub total_cost: f64,
    /// Priced emissions Σ ϑ s w·e, for the emission cost only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emission_dollars: Option<f64>,
    pub placeholder_lengths: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
