//! Command-line front end: `analyze`, `sweep`, `compare-oracle` and
//! `import-response`.
//!
//! Exit codes: 0 all Stable, 2 any Unstable, 3 any Indeterminate or Marginal
//! (Unstable wins), 1 on error. `sweep` exits 0 on success and
//! `compare-oracle` exits 1 when a criterion disagrees with the oracle.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{self, OracleResult, PointAnalysis};
use crate::config::{parse_list, RunConfig, Scenario};
use crate::criteria::{Criterion, StabilityReport, Verdict};
use crate::error::{Error, Result};
use crate::frames::DomainKind;
use crate::io;
use crate::logderiv::{self, ChannelModes, LoopChannel};

#[derive(Debug, Parser)]
#[command(name = "impstab", version, about = "Impedance-based stability analysis of converter/grid systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the selected criteria on the scenario's base point.
    Analyze(CommonArgs),
    /// Run the selected criteria at every point of the scenario's sweep.
    Sweep(CommonArgs),
    /// Compare every criterion with closed-loop eigenvalues along the sweep.
    CompareOracle(CommonArgs),
    /// Run the logarithmic-derivative criterion on a measured response.
    ImportResponse(ImportArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "impstab-out")]
    pub out: PathBuf,
    /// Comma-separated criteria: determinant, eigenvalue, schur-loop, logderiv, or `all`.
    #[arg(long)]
    pub criteria: Option<String>,
    /// Comma-separated domains: dq, sequence.
    #[arg(long)]
    pub domains: Option<String>,
    /// Display-grid spacing in Hz.
    #[arg(long)]
    pub step_hz: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// CSV with columns freq_hz, re, im and optionally channel.
    pub csv: PathBuf,
    /// Domain the response was measured in.
    #[arg(long, default_value = "dq")]
    pub domain: String,
    /// Resample onto this spacing (Hz); required for non-uniform data.
    #[arg(long)]
    pub step_hz: Option<f64>,
    #[arg(long, default_value = "impstab-out")]
    pub out: PathBuf,
}

/// Exit code of a set of verdicts.
pub fn exit_code(reports: &[StabilityReport]) -> i32 {
    match analysis::overall(reports) {
        Verdict::Stable => 0,
        Verdict::Unstable => 2,
        Verdict::Indeterminate | Verdict::Marginal => 3,
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli.command) {
        Ok((code, text)) => {
            print!("{text}");
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs one command; returns the exit code and the text meant for stdout.
pub fn run(cmd: &Command) -> Result<(i32, String)> {
    match cmd {
        Command::Analyze(a) => {
            let (s, rc) = load(a, None)?;
            cmd_analyze(&s, &rc)
        }
        Command::Sweep(a) => {
            let (s, rc) = load(a, None)?;
            cmd_sweep(&s, &rc)
        }
        Command::CompareOracle(a) => {
            let (s, rc) = load(a, Some(Criterion::ALL.to_vec()))?;
            cmd_compare_oracle(&s, &rc)
        }
        Command::ImportResponse(a) => cmd_import_response(a),
    }
}

fn load(a: &CommonArgs, default_criteria: Option<Vec<Criterion>>) -> Result<(Scenario, RunConfig)> {
    let s = Scenario::load(&a.config)?;
    let criteria = match &a.criteria {
        Some(c) if c.trim() == "all" => Some(Criterion::ALL.to_vec()),
        Some(c) => Some(parse_list(c)?),
        None => default_criteria,
    };
    let domains = a.domains.as_deref().map(parse_list).transpose()?;
    let rc = RunConfig::resolve(a.config.clone(), &s, a.out.clone(), criteria, domains, a.step_hz)?;
    Ok((s, rc))
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

#[derive(Serialize)]
struct AnalyzeDocument<'a> {
    scenario: &'a str,
    verdict: Verdict,
    exit_code: i32,
    point: &'a PointAnalysis,
}

fn summary_line(r: &StabilityReport) -> String {
    let opt = |v: Option<i64>| v.map_or("-".to_string(), |x| x.to_string());
    let mut line = format!(
        "{:<12} {:<9} {:<13} ccw={:<4} P={:<3} Z={:<3}",
        r.criterion.name(),
        r.domain.to_string(),
        format!("{:?}", r.verdict),
        opt(r.encirclements),
        opt(r.rhp_open_loop_poles.map(|p| p as i64)),
        opt(r.rhp_closed_loop_zeros)
    );
    if !r.per_locus_encirclements.is_empty() {
        let _ = write!(line, " per-locus={:?}", r.per_locus_encirclements);
    }
    if let Some(m) = r.modes.iter().filter(|m| m.unstable).max_by(|a, b| a.alpha_z.total_cmp(&b.alpha_z)) {
        let _ = write!(line, " alpha={:.6} omega={:.4}", m.alpha_z, m.omega_z);
    }
    line.trim_end().to_string()
}

fn write_point_files(dir: &Path, point: &PointAnalysis) -> Result<()> {
    io::write_loci_csv(&dir.join("loci.csv"), &point.loci)?;
    if !point.traces.is_empty() {
        let tdir = dir.join("traces");
        prepare_out(&tdir)?;
        for (domain, t) in &point.traces {
            io::write_trace_csv(&tdir.join(format!("{}_{}.csv", domain, io::slug(&t.channel))), t)?;
        }
    }
    Ok(())
}

/// Analyzes the base point and writes `report.json`, `loci.csv` and
/// `traces/`.
pub fn cmd_analyze(s: &Scenario, rc: &RunConfig) -> Result<(i32, String)> {
    let point = analysis::analyze_point(s, rc, None)?;
    prepare_out(&rc.out_dir)?;
    write_point_files(&rc.out_dir, &point)?;
    let code = exit_code(&point.reports);
    let doc = AnalyzeDocument { scenario: &s.name, verdict: analysis::overall(&point.reports), exit_code: code, point: &point };
    io::write_json(&rc.out_dir.join("report.json"), &doc)?;
    let mut text = String::new();
    for r in &point.reports {
        let _ = writeln!(text, "{}", summary_line(r));
    }
    let _ = writeln!(text, "overall: {:?}", doc.verdict);
    Ok((code, text))
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    scenario: &'a str,
    parameter: &'a str,
    points: &'a [PointAnalysis],
}

/// Analyzes every sweep point; writes `sweep.json`, `sweep.csv` and one
/// `loci_<k>.csv` per point.
pub fn cmd_sweep(s: &Scenario, rc: &RunConfig) -> Result<(i32, String)> {
    let sw = s.sweep.as_ref().ok_or_else(|| Error::Config("scenario has no [sweep] section".into()))?;
    prepare_out(&rc.out_dir)?;
    let mut points = Vec::new();
    for (k, (x, sc)) in s.sweep_points()?.into_iter().enumerate() {
        let p = analysis::analyze_point(&sc, rc, x)?;
        io::write_loci_csv(&rc.out_dir.join(format!("loci_{k:03}.csv")), &p.loci)?;
        points.push(p);
    }
    let mut w = csv::Writer::from_path(rc.out_dir.join("sweep.csv"))?;
    w.write_record(["parameter", "criterion", "domain", "verdict", "encirclements", "rhp_open_loop_poles", "rhp_closed_loop_zeros"])?;
    let opt = |v: Option<i64>| v.map_or(String::new(), |x| x.to_string());
    let mut text = String::new();
    for p in &points {
        let x = p.parameter.unwrap_or(f64::NAN);
        let _ = writeln!(text, "{} = {x:.6e}: {:?}", sw.parameter, analysis::overall(&p.reports));
        for r in &p.reports {
            w.write_record([
                format!("{x:.16e}"),
                r.criterion.name().to_string(),
                r.domain.to_string(),
                format!("{:?}", r.verdict),
                opt(r.encirclements),
                opt(r.rhp_open_loop_poles.map(|v| v as i64)),
                opt(r.rhp_closed_loop_zeros),
            ])?;
            let _ = writeln!(text, "  {}", summary_line(r));
        }
    }
    w.flush()?;
    io::write_json(&rc.out_dir.join("sweep.json"), &SweepDocument { scenario: &s.name, parameter: &sw.parameter, points: &points })?;
    Ok((0, text))
}

/// Conditions under which the eigenvalue criterion is known to mislead:
/// an anticlockwise locus or a count that disagrees with the oracle, while
/// the determinant and logderiv criteria both see the instability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenHazard {
    pub domain: DomainKind,
    pub anticlockwise: bool,
    pub oracle_mismatch: bool,
    pub eigen_indeterminate: bool,
    pub determinant_unstable: bool,
    pub logderiv_unstable: bool,
}

impl EigenHazard {
    pub fn flagged(&self) -> bool {
        (self.anticlockwise || self.oracle_mismatch)
            && self.eigen_indeterminate
            && self.determinant_unstable
            && self.logderiv_unstable
    }
}

pub fn eigen_hazard(point: &PointAnalysis, oracle: &OracleResult, domain: DomainKind, margin: f64) -> Option<EigenHazard> {
    let e = point.report(Criterion::Eigenvalue, domain)?;
    let rhp = oracle.eigenvalues.iter().filter(|z| z.re > margin).count() as i64;
    let verdict_of = |c| point.report(c, domain).map(|r: &StabilityReport| r.verdict);
    Some(EigenHazard {
        domain,
        anticlockwise: e.per_locus_encirclements.iter().any(|&n| n > 0),
        oracle_mismatch: e.rhp_closed_loop_zeros.is_some_and(|z| z != rhp),
        eigen_indeterminate: e.verdict == Verdict::Indeterminate,
        determinant_unstable: verdict_of(Criterion::Determinant) == Some(Verdict::Unstable),
        logderiv_unstable: verdict_of(Criterion::Logderiv) == Some(Verdict::Unstable),
    })
}

/// One sweep point of the oracle comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub parameter: Option<f64>,
    pub oracle: OracleResult,
    pub verdicts: Vec<(Criterion, DomainKind, Verdict)>,
    pub alpha_rel_error: Option<f64>,
    pub hazards: Vec<EigenHazard>,
    pub mismatches: Vec<String>,
}

/// Criterion verdicts against the oracle. Eigenvalue-criterion
/// Indeterminates are expected and never count as mismatches.
pub fn compare_point(point: &PointAnalysis, oracle: &OracleResult, margin: f64) -> ComparisonRow {
    let mut mismatches = Vec::new();
    if oracle.verdict != Verdict::Marginal {
        for r in &point.reports {
            let ok = match (r.criterion, r.verdict) {
                (Criterion::Eigenvalue, Verdict::Indeterminate) => true,
                (_, v) => v == oracle.verdict,
            };
            if !ok {
                mismatches.push(format!("{} {}: {:?} vs oracle {:?}", r.criterion, r.domain, r.verdict, oracle.verdict));
            }
        }
    }
    let mut domains: Vec<DomainKind> = point.reports.iter().map(|r| r.domain).collect();
    domains.dedup();
    ComparisonRow {
        parameter: point.parameter,
        oracle: oracle.clone(),
        verdicts: point.reports.iter().map(|r| (r.criterion, r.domain, r.verdict)).collect(),
        alpha_rel_error: analysis::alpha_error(point, oracle),
        hazards: domains.into_iter().filter_map(|d| eigen_hazard(point, oracle, d, margin)).collect(),
        mismatches,
    }
}

/// Oracle comparison over every sweep point (or the base point).
pub fn compare_oracle(s: &Scenario, rc: &RunConfig) -> Result<Vec<(PointAnalysis, ComparisonRow)>> {
    s.sweep_points()?
        .into_iter()
        .map(|(x, sc)| {
            let point = analysis::analyze_point(&sc, rc, x)?;
            let oracle = analysis::oracle(&sc, rc.margin)?;
            let row = compare_point(&point, &oracle, rc.margin);
            Ok((point, row))
        })
        .collect()
}

/// Writes `compare.csv` and `compare.json` and prints the table.
pub fn cmd_compare_oracle(s: &Scenario, rc: &RunConfig) -> Result<(i32, String)> {
    let rows: Vec<ComparisonRow> = compare_oracle(s, rc)?.into_iter().map(|(_, r)| r).collect();
    prepare_out(&rc.out_dir)?;
    let cols: Vec<(Criterion, DomainKind)> = rows.first().map(|r| r.verdicts.iter().map(|v| (v.0, v.1)).collect()).unwrap_or_default();
    let mut header = vec!["parameter".to_string(), "oracle".into(), "oracle_max_re".into(), "oracle_mode_im".into()];
    header.extend(cols.iter().map(|(c, d)| format!("{c}:{d}")));
    header.extend(["alpha_rel_error".to_string(), "eigen_hazard".into(), "mismatches".into()]);
    let mut w = csv::Writer::from_path(rc.out_dir.join("compare.csv"))?;
    w.write_record(&header)?;
    let mut text = header.join("  ") + "\n";
    for r in &rows {
        let mut rec = vec![
            r.parameter.map_or(String::new(), |x| format!("{x:.6e}")),
            format!("{:?}", r.oracle.verdict),
            format!("{:.6}", r.oracle.max_re),
            format!("{:.4}", r.oracle.dominant.im),
        ];
        rec.extend(r.verdicts.iter().map(|v| format!("{:?}", v.2)));
        rec.push(r.alpha_rel_error.map_or(String::new(), |e| format!("{e:.3e}")));
        rec.push(r.hazards.iter().any(EigenHazard::flagged).to_string());
        rec.push(r.mismatches.len().to_string());
        w.write_record(&rec)?;
        text += &(rec.join("  ") + "\n");
    }
    w.flush()?;
    io::write_json(&rc.out_dir.join("compare.json"), &rows)?;
    let bad: Vec<&String> = rows.iter().flat_map(|r| &r.mismatches).collect();
    for m in &bad {
        let _ = writeln!(text, "mismatch: {m}");
    }
    Ok((if bad.is_empty() { 0 } else { 1 }, text))
}

#[derive(Serialize)]
struct ImportDocument<'a> {
    source: String,
    verdict: Verdict,
    report: &'a StabilityReport,
    channels: &'a [ChannelModes],
}

/// Logderiv analysis of a measured response; writes `report.json` and one
/// trace CSV per channel.
pub fn cmd_import_response(a: &ImportArgs) -> Result<(i32, String)> {
    let domain: DomainKind = a.domain.parse()?;
    let imported = io::read_response_csv(&a.csv)?;
    let mut channels = Vec::new();
    let mut step = None;
    for ch in &imported {
        let mut r = ch.to_response()?;
        if let Some(hz) = a.step_hz {
            r = r.resample(2.0 * PI * hz)?;
        }
        step.get_or_insert(r.omega.get(1).map_or(0.0, |w| w - r.omega[0]));
        channels.push(LoopChannel { domain, response: r, physical: true });
    }
    let step = step.unwrap_or(0.0);
    if !(step > 0.0) {
        return Err(Error::Schema("column 'freq_hz' needs at least two samples per channel".into()));
    }
    let (report, per, traces) = logderiv::stability_from_loops(&channels, step)?;
    prepare_out(&a.out)?;
    let tdir = a.out.join("traces");
    prepare_out(&tdir)?;
    for t in &traces {
        io::write_trace_csv(&tdir.join(format!("{}_{}.csv", domain, io::slug(&t.channel))), t)?;
    }
    let doc = ImportDocument { source: a.csv.display().to_string(), verdict: report.verdict, report: &report, channels: &per };
    io::write_json(&a.out.join("report.json"), &doc)?;
    let code = exit_code(std::slice::from_ref(&report));
    let mut text = summary_line(&report) + "\n";
    for c in &per {
        for m in &c.modes {
            let _ = writeln!(
                text,
                "  {}: omega_z={:.4} alpha_z={:.6} {}",
                c.channel,
                m.omega_z,
                m.alpha_z,
                if m.unstable { "unstable" } else { "stable" }
            );
        }
    }
    Ok((code, text))
}
