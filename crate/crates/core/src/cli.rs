//! Scenario files, traces, reports, plots and the `dmpc` command line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use thiserror::Error;

use crate::harness::{compare_modes, run_dmpc, sweep_delta, RunReport, Scenario, SweepReport};
use crate::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("override `{0}`: {1}")]
    Override(String, String),
    #[error("cannot serialize: {0}")]
    Serialize(String),
}

pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario, Error> {
    let sc: Scenario = toml::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    sc.validate()?;
    Ok(sc)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, Error> {
    load_scenario_with(path, &[])
}

/// Scenarios compiled into the binary, addressable by name.
pub const SHIPPED: [(&str, &str); 4] = [
    ("paper_4agents_2d", include_str!("../scenarios/paper_4agents_2d.toml")),
    ("paper_4agents_3d", include_str!("../scenarios/paper_4agents_3d.toml")),
    ("swap_2agents", include_str!("../scenarios/swap_2agents.toml")),
    ("dense_2agents", include_str!("../scenarios/dense_2agents.toml")),
];

fn shipped(path: &Path) -> Option<&'static str> {
    let name = path.to_str()?;
    SHIPPED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Loads `path` and applies `key=value` overrides to scalar fields.
///
/// A bare shipped scenario name is accepted when no such file exists.
pub fn load_scenario_with(path: &Path, overrides: &[String]) -> Result<Scenario, Error> {
    let text = match (path.exists(), shipped(path)) {
        (false, Some(text)) => text.to_string(),
        _ => fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?,
    };
    let text = apply_overrides(&text, overrides)?;
    parse_scenario(&text, &path.display().to_string())
}

fn parse_scalar(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => match t.remove("v") {
            Some(v) if !v.is_array() && !v.is_table() => v,
            _ => toml::Value::String(raw.to_string()),
        },
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

pub fn apply_overrides(text: &str, overrides: &[String]) -> Result<String, CliError> {
    if overrides.is_empty() {
        return Ok(text.to_string());
    }
    let mut doc: toml::Table = toml::from_str(text).map_err(|e| CliError::Parse {
        path: "scenario".into(),
        message: e.to_string(),
    })?;
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::Override(item.clone(), "expected key=value".into()))?;
        let parts: Vec<&str> = key.trim().split('.').collect();
        let (last, path) = parts.split_last().expect("split yields one part");
        let mut table = &mut doc;
        for p in path {
            let entry = table
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = entry
                .as_table_mut()
                .ok_or_else(|| CliError::Override(item.clone(), format!("`{p}` is not a section")))?;
        }
        if let Some(existing) = table.get(*last) {
            if existing.is_array() || existing.is_table() {
                return Err(CliError::Override(item.clone(), "only scalar fields can be set".into()));
            }
        }
        table.insert(last.to_string(), parse_scalar(raw.trim()));
    }
    toml::to_string(&doc).map_err(|e| CliError::Serialize(e.to_string()))
}

pub fn emit_scenario(sc: &Scenario) -> Result<String, CliError> {
    toml::to_string(sc).map_err(|e| CliError::Serialize(e.to_string()))
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

/// One row per (step, agent) with the state reached after the step.
pub fn trace_csv(report: &RunReport, dim: usize) -> String {
    let axes = ["x", "y", "z"];
    let mut out = String::from("step,agent");
    for a in &axes[..dim] {
        out.push(',');
        out.push_str(a);
    }
    for a in &axes[..dim] {
        out.push_str(",v");
        out.push_str(a);
    }
    for a in &axes[..dim] {
        out.push_str(",u");
        out.push_str(a);
    }
    out.push_str(",min_dist,admm_rounds,residual\n");
    for log in &report.logs {
        for (agent, (s, u)) in log.states.iter().zip(&log.inputs).enumerate() {
            let _ = write!(out, "{},{}", log.step, agent);
            for v in s.iter().chain(u) {
                out.push(',');
                out.push_str(&num(*v));
            }
            let _ = writeln!(
                out,
                ",{},{},{}",
                num(log.min_distance),
                log.admm_rounds,
                num(log.residual)
            );
        }
    }
    out
}

pub fn report_toml(report: &RunReport) -> Result<String, CliError> {
    toml::to_string(report).map_err(|e| CliError::Serialize(e.to_string()))
}

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

struct Frame {
    lo: (f64, f64),
    hi: (f64, f64),
    size: f64,
    pad: f64,
}

impl Frame {
    fn new(points: impl Iterator<Item = (f64, f64)>, size: f64) -> Self {
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (x, y) in points {
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
        if !lo.0.is_finite() {
            lo = (0.0, 0.0);
            hi = (1.0, 1.0);
        }
        if hi.0 - lo.0 < 1e-9 {
            hi.0 = lo.0 + 1.0;
        }
        if hi.1 - lo.1 < 1e-9 {
            hi.1 = lo.1 + 1.0;
        }
        Self { lo, hi, size, pad: 40.0 }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let w = self.size - 2.0 * self.pad;
        (
            self.pad + (x - self.lo.0) / (self.hi.0 - self.lo.0) * w,
            self.size - self.pad - (y - self.lo.1) / (self.hi.1 - self.lo.1) * w,
        )
    }
}

fn svg_open(size: f64, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{title}</text>\n",
        size / 2.0
    )
}

fn polyline(points: &[(f64, f64)], color: &str, extra: &str) -> String {
    let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" {extra} points=\"{}\"/>\n",
        pts.join(" ")
    )
}

/// Agent paths projected on the first two axes.
pub fn trajectory_svg(sc: &Scenario, report: &RunReport) -> String {
    let starts = sc.start_states();
    let mut paths: Vec<Vec<(f64, f64)>> = starts.iter().map(|s| vec![(s[0], s[1])]).collect();
    for log in &report.logs {
        for (i, s) in log.states.iter().enumerate() {
            paths[i].push((s[0], s[1]));
        }
    }
    let goals: Vec<(f64, f64)> = sc.agents.iter().map(|a| (a.goal[0], a.goal[1])).collect();
    let frame = Frame::new(paths.iter().flatten().copied().chain(goals.iter().copied()), 480.0);
    let mut svg = svg_open(480.0, &format!("{}: agent trajectories", sc.name));
    for (i, path) in paths.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mapped: Vec<(f64, f64)> = path.iter().map(|&(x, y)| frame.map(x, y)).collect();
        svg.push_str(&polyline(&mapped, color, ""));
        let (sx, sy) = mapped[0];
        let _ = writeln!(svg, "<circle cx=\"{sx:.2}\" cy=\"{sy:.2}\" r=\"4\" fill=\"{color}\"/>");
        let (gx, gy) = frame.map(goals[i].0, goals[i].1);
        let _ = writeln!(
            svg,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"8\" height=\"8\" fill=\"none\" stroke=\"{color}\"/>",
            gx - 4.0,
            gy - 4.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Consensus residual per ADMM round, all MPC steps concatenated, log scale.
pub fn residual_svg(report: &RunReport) -> String {
    let values: Vec<f64> = report
        .logs
        .iter()
        .flat_map(|l| l.residual_history.iter().copied())
        .map(|r| r.max(1e-12).log10())
        .collect();
    let frame = Frame::new(values.iter().enumerate().map(|(i, &v)| (i as f64, v)), 480.0);
    let mut svg = svg_open(480.0, "consensus residual (log10) per ADMM round");
    let mapped: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| frame.map(i as f64, v))
        .collect();
    svg.push_str(&polyline(&mapped, COLORS[0], ""));
    let _ = writeln!(
        svg,
        "<text x=\"10\" y=\"470\" font-family=\"sans-serif\" font-size=\"11\">range {:.1} .. {:.1}</text>",
        frame.lo.1, frame.hi.1
    );
    svg.push_str("</svg>\n");
    svg
}

/// Closed-loop cost per delta.
pub fn sweep_svg(sweep: &SweepReport) -> String {
    let size = 480.0;
    let mut svg = svg_open(size, "closed-loop cost per delta");
    let costs: Vec<Option<f64>> = sweep
        .entries
        .iter()
        .map(|e| e.report.as_ref().map(|r| r.cost))
        .collect();
    let max = costs.iter().flatten().copied().fold(0.0, f64::max).max(1e-12);
    let count = costs.len().max(1) as f64;
    let width = (size - 80.0) / count;
    for (i, (entry, cost)) in sweep.entries.iter().zip(&costs).enumerate() {
        let x = 40.0 + i as f64 * width;
        if let Some(c) = cost {
            let h = c / max * (size - 100.0);
            let _ = writeln!(
                svg,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{h:.2}\" fill=\"{}\"/>",
                x + 0.1 * width,
                size - 50.0 - h,
                0.8 * width,
                COLORS[i % COLORS.len()]
            );
            let _ = writeln!(
                svg,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{c:.3}</text>",
                x + 0.5 * width,
                size - 55.0 - h
            );
        }
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">delta {}</text>",
            x + 0.5 * width,
            size - 30.0,
            entry.delta
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes trace, report, effective scenario and plots for one run.
pub fn write_run(dir: &Path, sc: &Scenario, report: &RunReport) -> Result<(), Error> {
    create_dir(dir)?;
    write(&dir.join("trace.csv"), &trace_csv(report, sc.dimension))?;
    write(&dir.join("report.toml"), &report_toml(report)?)?;
    write(&dir.join("scenario.effective.toml"), &emit_scenario(sc)?)?;
    write(&dir.join("trajectories.svg"), &trajectory_svg(sc, report))?;
    write(&dir.join("residuals.svg"), &residual_svg(report))?;
    Ok(())
}

fn summary_table(rows: &[(String, Option<&RunReport>, Option<&str>)]) -> String {
    let mut out = format!(
        "{:<12} {:>8} {:>6} {:>14} {:>14} {:>10} {:>10} {:>8}\n",
        "run", "success", "steps", "cost", "cost_no_slack", "min_dist", "max_slack", "events"
    );
    for (label, report, error) in rows {
        match (report, error) {
            (Some(r), _) => {
                let _ = writeln!(
                    out,
                    "{:<12} {:>8} {:>6} {:>14.6} {:>14.6} {:>10.5} {:>10.3e} {:>8}",
                    label,
                    r.success,
                    r.steps,
                    r.cost,
                    r.cost_without_slack,
                    r.min_distance,
                    r.max_slack,
                    r.infeasibility_events
                );
            }
            (None, Some(e)) => {
                let _ = writeln!(out, "{label:<12} error: {e}");
            }
            (None, None) => {}
        }
    }
    out
}

#[derive(Debug, Parser)]
#[command(name = "dmpc", version, about = "Distributed MPC with dual collision certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file
    pub scenario: PathBuf,
    /// Output directory (default: out/<scenario name>)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override a scalar field, e.g. --set admm.rho=5
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-loop run of one scenario
    Run(Common),
    /// Runs the scenario for several cube sizes
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated deltas
        #[arg(long, value_delimiter = ',', required = true)]
        deltas: Vec<f64>,
    },
    /// Runs the scenario in hard and soft mode
    Compare(Common),
}

fn out_dir(common: &Common, sc: &Scenario) -> PathBuf {
    common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(&sc.name))
}

/// Executes a subcommand; `Ok(true)` iff every run succeeded.
pub fn run_command(cmd: &Command) -> Result<bool, Error> {
    match cmd {
        Command::Run(common) => {
            let sc = load_scenario_with(&common.scenario, &common.overrides)?;
            let dir = out_dir(common, &sc);
            let report = run_dmpc(&sc)?;
            write_run(&dir, &sc, &report)?;
            print!("{}", summary_table(&[(sc.name.clone(), Some(&report), None)]));
            info!("wrote {}", dir.display());
            Ok(report.success)
        }
        Command::Sweep { common, deltas } => {
            let sc = load_scenario_with(&common.scenario, &common.overrides)?;
            let dir = out_dir(common, &sc);
            create_dir(&dir)?;
            let sweep = sweep_delta(&sc, deltas);
            let mut rows = Vec::new();
            for entry in &sweep.entries {
                let label = format!("delta_{}", entry.delta);
                if let Some(r) = &entry.report {
                    let mut run_sc = sc.clone();
                    run_sc.delta = entry.delta;
                    write_run(&dir.join(&label), &run_sc, r)?;
                }
                rows.push((label, entry.report.as_ref(), entry.error.as_deref()));
            }
            let table = summary_table(&rows);
            write(&dir.join("sweep.txt"), &table)?;
            write(
                &dir.join("sweep.toml"),
                &toml::to_string(&sweep).map_err(|e| CliError::Serialize(e.to_string()))?,
            )?;
            write(&dir.join("sweep.svg"), &sweep_svg(&sweep))?;
            print!("{table}");
            Ok(sweep
                .entries
                .iter()
                .all(|e| e.report.as_ref().is_some_and(|r| r.success)))
        }
        Command::Compare(common) => {
            let sc = load_scenario_with(&common.scenario, &common.overrides)?;
            let dir = out_dir(common, &sc);
            create_dir(&dir)?;
            let cmp = compare_modes(&sc);
            for (label, report) in [("hard", &cmp.hard), ("soft", &cmp.soft)] {
                if let Some(r) = report {
                    let mut run_sc = sc.clone();
                    run_sc.mode = r.mode;
                    write_run(&dir.join(label), &run_sc, r)?;
                }
            }
            let table = summary_table(&[
                ("hard".into(), cmp.hard.as_ref(), cmp.hard_error.as_deref()),
                ("soft".into(), cmp.soft.as_ref(), cmp.soft_error.as_deref()),
            ]);
            let mut text = table.clone();
            for (label, r) in [("hard", &cmp.hard), ("soft", &cmp.soft)] {
                if let Some(r) = r {
                    let _ = writeln!(text, "{label} mean solve time per step: {:.6} s", r.mean_solve_time_s);
                }
            }
            write(&dir.join("compare.txt"), &text)?;
            print!("{text}");
            Ok(cmp.hard.as_ref().is_some_and(|r| r.success) && cmp.soft.as_ref().is_some_and(|r| r.success))
        }
    }
}

/// Entry point shared by the binary and tests; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_command(&cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
