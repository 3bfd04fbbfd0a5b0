//! End-to-end analysis of one scenario point: converter and grid models,
//! every requested criterion in every requested domain, and the
//! closed-loop eigenvalue oracle.

use std::f64::consts::PI;

use serde::Serialize;

use crate::config::{RunConfig, Scenario};
use crate::criteria::{self, Criterion, FreqGrid, Locus, StabilityReport, Verdict};
use crate::error::{Error, Result};
use crate::frames::{self, DomainKind, DomainTag};
use crate::logderiv::{self, ChannelModes, FreqResponse, LogDerivTrace, LoopChannel};
use crate::models;
use crate::ratfun::RatFun;
use crate::ratmatrix::RatMatrix;
use crate::schur::{self, Frame};
use crate::statespace::{self, StateSpace};
use crate::C64;

/// A locus with the labels used for export.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedLocus {
    pub channel: String,
    pub domain: DomainKind,
    pub criterion: Criterion,
    pub locus: Locus,
}

/// Closed-loop eigenvalues of the interconnected state-space model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub verdict: Verdict,
    pub max_re: f64,
    /// Eigenvalue with the largest real part (upper half plane if complex).
    pub dominant: C64,
    pub eigenvalues: Vec<C64>,
}

/// Everything computed at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointAnalysis {
    pub parameter: Option<f64>,
    pub reports: Vec<StabilityReport>,
    #[serde(skip)]
    pub loci: Vec<NamedLocus>,
    #[serde(skip)]
    pub traces: Vec<(DomainKind, LogDerivTrace)>,
    pub channel_modes: Vec<ChannelModes>,
}

impl PointAnalysis {
    pub fn report(&self, criterion: Criterion, domain: DomainKind) -> Option<&StabilityReport> {
        self.reports.iter().find(|r| r.criterion == criterion && r.domain == domain)
    }
}

/// Models of one scenario point.
#[derive(Clone, Debug)]
pub struct Plant {
    pub converter: StateSpace,
    pub yc: RatMatrix,
    pub zc: RatMatrix,
    pub zg: RatMatrix,
    pub omega0: f64,
}

impl Plant {
    pub fn build(s: &Scenario) -> Result<Plant> {
        let converter = models::build_vsc(&s.vsc)?;
        let yc = statespace::transfer_matrix(&converter)?;
        let zc = yc.inverse()?;
        let zg = models::build_rl_grid(&s.grid)?;
        Ok(Plant { converter, yc, zc, zg, omega0: s.vsc.omega0 })
    }
}

/// Closed-loop eigenvalues with `margin` as the marginal band on `Re`.
pub fn oracle(s: &Scenario, margin: f64) -> Result<OracleResult> {
    let conv = models::build_vsc(&s.vsc)?;
    let (z0, z1) = s.grid.split();
    let cl = statespace::close_loop_series(&conv, &z0, &z1)?;
    let mut eigenvalues = cl.eigenvalues()?;
    eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let dominant = eigenvalues.first().copied().ok_or(Error::EmptyPolynomial)?;
    let max_re = dominant.re;
    let verdict = if max_re > margin {
        Verdict::Unstable
    } else if max_re < -margin {
        Verdict::Stable
    } else {
        Verdict::Marginal
    };
    Ok(OracleResult { verdict, max_re, dominant, eigenvalues })
}

fn frame_label(frame: Frame, kind: DomainKind) -> String {
    match (kind, frame) {
        (DomainKind::Dq, f) => format!("S_Z^{}", f.index()),
        (DomainKind::Sequence, Frame::One) => "S_Z^p".into(),
        (DomainKind::Sequence, Frame::Two) => "S_Z^n".into(),
    }
}

/// One report out of the two eliminations. Frame one carries the headline
/// numbers; disagreement between frames makes the verdict Indeterminate.
fn combine_frames(mut a: StabilityReport, b: StabilityReport) -> StabilityReport {
    let summary = |r: &StabilityReport, label: &str| {
        format!(
            "{label}: {:?} (ccw encirclements={}, P={}, Z={})",
            r.verdict,
            fmt_opt(r.encirclements),
            fmt_opt(r.rhp_open_loop_poles.map(|p| p as i64)),
            fmt_opt(r.rhp_closed_loop_zeros)
        )
    };
    a.per_locus_encirclements = vec![a.encirclements.unwrap_or(0), b.encirclements.unwrap_or(0)];
    let (la, lb) = (a.loci[0].clone(), b.loci[0].clone());
    a.reasons.extend(b.reasons.iter().map(|r| format!("{lb}: {r}")));
    if a.verdict != b.verdict {
        a.reasons.push(format!("frames disagree; {}; {}", summary(&a, &la), summary(&b, &lb)));
        a.verdict = Verdict::Indeterminate;
    } else {
        a.caveat = Some(format!("{}; {}", summary(&a, &la), summary(&b, &lb)));
    }
    a.loci.extend(b.loci);
    a.grid_points += b.grid_points;
    a.low_confidence |= b.low_confidence;
    a
}

fn fmt_opt(v: Option<i64>) -> String {
    v.map_or_else(|| "?".into(), |x| x.to_string())
}

/// Samples `f` on a uniform grid, nudging off exact poles.
fn sample_uniform(channel: String, f: &RatFun, shift: f64, rc: &RunConfig) -> Result<FreqResponse> {
    let step = 2.0 * PI * rc.logderiv_step_hz;
    let n = ((rc.f_max - rc.f_min) / rc.logderiv_step_hz).round() as usize + 1;
    let start = 2.0 * PI * rc.f_min;
    let eval = |w: f64| match f.eval(C64::new(0.0, w - shift)) {
        Ok(v) => Ok(v),
        Err(Error::PoleHit(_)) => f.eval(C64::new(0.0, w - shift + 1e-6 * step)),
        Err(e) => Err(e),
    };
    FreqResponse::sample(channel, eval, start, step, n)
}

/// Loop impedances of both frames sampled for the logarithmic derivative.
pub fn loop_channels(plant: &Plant, tag: &DomainTag, rc: &RunConfig) -> Result<Vec<LoopChannel>> {
    let (g, c) = match tag.kind {
        DomainKind::Dq => (plant.zg.clone(), plant.zc.clone()),
        DomainKind::Sequence => (frames::rotate(&plant.zg)?, frames::rotate(&plant.zc)?),
    };
    [Frame::One, Frame::Two]
        .into_iter()
        .map(|frame| {
            let d = schur::loop_impedance(&g, &c, frame)?;
            let response = sample_uniform(frame_label(frame, tag.kind), &d.loop_imp, tag.shift(), rc)?;
            Ok(LoopChannel { domain: tag.kind, response, physical: true })
        })
        .collect()
}

fn largest_unstable_alpha(r: &StabilityReport) -> Option<f64> {
    r.modes.iter().filter(|m| m.unstable).map(|m| m.alpha_z).reduce(f64::max)
}

/// Domains must agree on the largest unstable `α` before any of them may
/// report Unstable.
fn reconcile_logderiv(reports: &mut [StabilityReport]) {
    let idx: Vec<usize> = (0..reports.len()).filter(|&i| reports[i].criterion == Criterion::Logderiv).collect();
    if idx.len() < 2 {
        return;
    }
    let alphas: Vec<Option<f64>> = idx.iter().map(|&i| largest_unstable_alpha(&reports[i])).collect();
    let msg = if alphas.iter().any(|a| a.is_some()) && alphas.iter().any(|a| a.is_none()) {
        Some("an unstable mode appears in only some domains".to_string())
    } else if alphas.iter().all(|a| a.is_some()) {
        let v: Vec<f64> = alphas.iter().flatten().copied().collect();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo > logderiv::DOMAIN_ALPHA_TOL * hi.abs()).then(|| format!("unstable α ranges over {lo:.4e}..{hi:.4e}"))
    } else {
        None
    };
    if let Some(m) = msg {
        for &i in &idx {
            reports[i].verdict = Verdict::Indeterminate;
            reports[i].reasons.push(Error::InconsistentDomains(m.clone()).to_string());
        }
    }
}

/// Runs every requested criterion in every requested domain.
pub fn analyze_point(s: &Scenario, rc: &RunConfig, parameter: Option<f64>) -> Result<PointAnalysis> {
    let plant = Plant::build(s)?;
    analyze_plant(&plant, rc, parameter)
}

pub fn analyze_plant(plant: &Plant, rc: &RunConfig, parameter: Option<f64>) -> Result<PointAnalysis> {
    let grid: FreqGrid = rc.grid()?;
    let mut out = PointAnalysis { parameter, reports: Vec::new(), loci: Vec::new(), traces: Vec::new(), channel_modes: Vec::new() };
    for &kind in &rc.domains {
        let tag = DomainTag::new(kind, plant.omega0)?;
        for &criterion in &rc.criteria {
            match criterion {
                Criterion::Determinant => {
                    let (r, l) = criteria::determinant_locus(&plant.zg, &plant.yc, &grid, &tag)?;
                    out.loci.push(NamedLocus { channel: "det(I+R)".into(), domain: kind, criterion, locus: l });
                    out.reports.push(r);
                }
                Criterion::Eigenvalue => {
                    let (l1, l2, r) = criteria::eigen_loci_in(&plant.zg, &plant.yc, &grid, &tag)?;
                    out.loci.push(NamedLocus { channel: "lambda1".into(), domain: kind, criterion, locus: l1 });
                    out.loci.push(NamedLocus { channel: "lambda2".into(), domain: kind, criterion, locus: l2 });
                    out.reports.push(r);
                }
                Criterion::SchurLoop => {
                    let mut parts = Vec::new();
                    for frame in [Frame::One, Frame::Two] {
                        let (mut r, l, _) = criteria::schur_loop_criterion(&plant.zg, &plant.zc, frame, &grid, &tag)?;
                        r.loci = vec![frame_label(frame, kind)];
                        out.loci.push(NamedLocus { channel: frame_label(frame, kind), domain: kind, criterion, locus: l });
                        parts.push(r);
                    }
                    let b = parts.pop().expect("two frames");
                    let a = parts.pop().expect("two frames");
                    out.reports.push(combine_frames(a, b));
                }
                Criterion::Logderiv => {
                    let channels = loop_channels(plant, &tag, rc)?;
                    let (r, per, traces) = logderiv::stability_from_loops(&channels, 2.0 * PI * rc.logderiv_step_hz)?;
                    out.reports.push(r);
                    out.channel_modes.extend(per);
                    out.traces.extend(traces.into_iter().map(|t| (kind, t)));
                }
            }
        }
    }
    reconcile_logderiv(&mut out.reports);
    Ok(out)
}

/// Worst verdict over a set of reports, with Unstable taking precedence.
pub fn overall(reports: &[StabilityReport]) -> Verdict {
    if reports.iter().any(|r| r.verdict == Verdict::Unstable) {
        Verdict::Unstable
    } else if reports.iter().any(|r| r.verdict == Verdict::Indeterminate) {
        Verdict::Indeterminate
    } else if reports.iter().any(|r| r.verdict == Verdict::Marginal) {
        Verdict::Marginal
    } else {
        Verdict::Stable
    }
}

/// Relative error of the largest unstable logderiv `α` against the oracle's
/// dominant real part, when both exist.
pub fn alpha_error(point: &PointAnalysis, oracle: &OracleResult) -> Option<f64> {
    if oracle.max_re <= 0.0 {
        return None;
    }
    point
        .reports
        .iter()
        .filter(|r| r.criterion == Criterion::Logderiv)
        .filter_map(largest_unstable_alpha)
        .map(|a| (a - oracle.max_re).abs() / oracle.max_re)
        .reduce(f64::max)
}
