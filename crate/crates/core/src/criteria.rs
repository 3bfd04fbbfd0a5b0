//! Frequency sweeps, encirclement counting, and the Nyquist-type verdicts
//! with explicit right-half-plane accounting.
//!
//! Encirclements are counted counter-clockwise positive. The Nyquist contour
//! runs up the imaginary axis and closes clockwise through the right half
//! plane, so a channel with `Z` right-half-plane zeros and `P` poles winds
//! `-(Z - P)` times around the origin.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{self, eval_in, DomainKind, DomainTag};
use crate::logderiv::ModeEstimate;
use crate::ratfun::{geometric_mean, RatFun};
use crate::ratmatrix::RatMatrix;
use crate::schur::{self, Frame, RHP_BAND};
use crate::smform::det_return_ratio;
use crate::C64;

/// Phase change between neighbours that triggers bisection.
pub const MAX_PHASE_STEP: f64 = PI / 6.0;
/// Bisection stops below this spacing.
pub const MIN_SPACING_HZ: f64 = 1e-4;
/// Points that refinement may add to one sweep.
pub const REFINE_BUDGET: usize = 200_000;
/// Origin guard relative to the median sample magnitude.
pub const ORIGIN_GUARD_REL: f64 = 1e-6;
/// Points per decade of the automatic verdict grid.
pub const PER_DECADE: usize = 100;
const WINDING_RESIDUE: f64 = 0.15;
const TAU: f64 = 2.0 * PI;

/// Strictly increasing list of angular frequencies (rad/s).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreqGrid {
    points: Vec<f64>,
    /// Nominal spacing in Hz; zero for non-uniform grids.
    base_step_hz: f64,
}

impl FreqGrid {
    pub fn new(points: Vec<f64>, base_step_hz: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("frequency grid is empty".into()));
        }
        if points.iter().any(|w| !w.is_finite()) || points.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Config("frequency grid must be finite and strictly increasing".into()));
        }
        Ok(FreqGrid { points, base_step_hz })
    }

    /// `f_min, f_min + step, ..., f_max` in Hz.
    pub fn uniform_hz(f_min: f64, f_max: f64, step_hz: f64) -> Result<Self> {
        if !(f_min < f_max) || !(step_hz > 0.0) {
            return Err(Error::Config(format!("bad grid: f_min={f_min}, f_max={f_max}, step={step_hz}")));
        }
        let n = ((f_max - f_min) / step_hz).round() as usize;
        let points = (0..=n).map(|k| TAU * (f_min + k as f64 * step_hz)).collect();
        FreqGrid::new(points, step_hz)
    }

    /// `0` plus `±` a log-spaced ladder from `w_min` to `w_max`.
    pub fn log_symmetric(w_min: f64, w_max: f64, per_decade: usize) -> Self {
        let pos = log_ladder(w_min, w_max, per_decade);
        let mut points: Vec<f64> = pos.iter().rev().map(|w| -w).collect();
        points.push(0.0);
        points.extend(pos);
        FreqGrid { points, base_step_hz: 0.0 }
    }

    /// Symmetric grid spanning three decades either side of the root
    /// magnitudes, with extra points at each root's damped frequency band.
    pub fn covering(roots: &[C64], per_decade: usize) -> Self {
        let mags: Vec<f64> = roots.iter().map(|r| r.norm()).filter(|m| *m > 1e-12).collect();
        let (lo, hi) = if mags.is_empty() {
            (1e-3, 1e3)
        } else {
            let lo = mags.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = mags.iter().copied().fold(0.0, f64::max);
            (1e-3 * lo, 1e3 * hi)
        };
        let mut pos = log_ladder(lo, hi, per_decade);
        for r in roots {
            let (a, b) = (r.re.abs(), r.im.abs());
            if b > 0.0 {
                pos.extend([b, b + a, (b - a).max(0.0)].into_iter().filter(|w| *w > 0.0));
            }
        }
        let mut points: Vec<f64> = pos.iter().map(|w| -w).collect();
        points.push(0.0);
        points.extend(pos);
        FreqGrid { points: sorted_unique(points), base_step_hz: 0.0 }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn base_step_hz(&self) -> f64 {
        self.base_step_hz
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn union(&self, other: &FreqGrid) -> FreqGrid {
        let mut p = self.points.clone();
        p.extend_from_slice(&other.points);
        FreqGrid { points: sorted_unique(p), base_step_hz: 0.0 }
    }

    pub fn shifted(&self, by: f64) -> FreqGrid {
        FreqGrid {
            points: self.points.iter().map(|w| w + by).collect(),
            base_step_hz: self.base_step_hz,
        }
    }

    /// Points with `ω ≥ 0`, mirrored so that the result contains `0`.
    pub fn nonnegative(&self) -> FreqGrid {
        let mut p: Vec<f64> = self.points.iter().map(|w| w.abs()).collect();
        p.push(0.0);
        FreqGrid { points: sorted_unique(p), base_step_hz: self.base_step_hz }
    }
}

fn log_ladder(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    let n = (((b - a) * per_decade as f64).ceil() as usize).max(1);
    (0..=n).map(|k| 10f64.powf(a + (b - a) * k as f64 / n as f64)).collect()
}

fn sorted_unique(mut p: Vec<f64>) -> Vec<f64> {
    p.retain(|w| w.is_finite());
    p.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<f64> = Vec::with_capacity(p.len());
    for w in p {
        match out.last() {
            Some(&last) if (w - last).abs() <= 1e-12 * w.abs().max(1.0) => {}
            _ => out.push(w),
        }
    }
    out
}

/// Sampled image of the imaginary axis under a scalar channel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Locus {
    pub omega: Vec<f64>,
    pub values: Vec<C64>,
    /// Whether the closing arc through the right half plane is accounted for.
    pub closed: bool,
    /// Relative degree used for the closing arc.
    pub rel_degree: i64,
    /// Corner of the `(jω + σ)^r` factor that removes the behaviour at infinity.
    pub norm_scale: f64,
    /// Set when the refinement budget ran out.
    pub low_confidence: bool,
    /// Number of points inserted by refinement.
    pub inserted: usize,
}

impl Locus {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Marks the locus as closed through the right half plane.
    pub fn closed_with(mut self, rel_degree: i64, norm_scale: f64) -> Locus {
        self.closed = true;
        self.rel_degree = rel_degree;
        self.norm_scale = if norm_scale > 0.0 && norm_scale.is_finite() { norm_scale } else { 1.0 };
        self
    }

    /// Extends a locus sampled on `ω ≥ 0` to negative frequencies by conjugation.
    pub fn mirror_conjugate(self) -> Locus {
        let mut omega = Vec::with_capacity(2 * self.omega.len());
        let mut values = Vec::with_capacity(2 * self.omega.len());
        for (w, v) in self.omega.iter().zip(&self.values).rev() {
            if *w > 0.0 {
                omega.push(-w);
                values.push(v.conj());
            }
        }
        omega.extend_from_slice(&self.omega);
        values.extend_from_slice(&self.values);
        Locus { omega, values, inserted: 2 * self.inserted, ..self }
    }

    fn effective_degree(&self, about: C64) -> i64 {
        if about != C64::new(0.0, 0.0) && self.rel_degree > 0 {
            0
        } else {
            self.rel_degree
        }
    }

    /// `(v - about)·(jω + σ)^r`: shares its winding with the locus (the extra
    /// factor only has a left-half-plane root) but is finite and nonzero at
    /// infinity.
    fn normalized(&self, about: C64) -> Vec<C64> {
        let r = self.effective_degree(about);
        self.omega
            .iter()
            .zip(&self.values)
            .map(|(w, v)| {
                let d = *v - about;
                if r == 0 {
                    d
                } else {
                    d * C64::new(self.norm_scale, *w).powi(r as i32)
                }
            })
            .collect()
    }

    /// `ORIGIN_GUARD_REL` times the median distance to `about`.
    pub fn origin_guard(&self, about: C64) -> f64 {
        let mut m: Vec<f64> = self.normalized(about).iter().map(|v| v.norm()).collect();
        if m.is_empty() {
            return 0.0;
        }
        m.sort_by(|a, b| a.total_cmp(b));
        ORIGIN_GUARD_REL * m[m.len() / 2]
    }

    /// Smallest distance of the (normalized) locus to `about`.
    pub fn min_distance(&self, about: C64) -> f64 {
        self.normalized(about).iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
    }
}

fn wrap(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// Net counter-clockwise turns of the locus around `about`.
pub fn winding_number(locus: &Locus, about: C64) -> Result<i64> {
    if locus.len() < 2 {
        return Err(Error::UnresolvedWinding { turns: f64::NAN });
    }
    let v = locus.normalized(about);
    let guard = locus.origin_guard(about);
    let distance = v.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if distance <= guard {
        return Err(Error::OriginPass { distance, guard });
    }
    let mut total = 0.0;
    let mut max_step: f64 = 0.0;
    for p in v.windows(2) {
        let d = (p[1] / p[0]).arg();
        max_step = max_step.max(d.abs());
        total += d;
    }
    if locus.closed {
        // the normalized channel is finite at infinity, so the arc adds only
        // the short way back
        total += wrap(v[0].arg() - v[v.len() - 1].arg());
    }
    let turns = total / TAU;
    let n = turns.round();
    if (turns - n).abs() > WINDING_RESIDUE || max_step > 0.9 * PI {
        return Err(Error::UnresolvedWinding { turns });
    }
    Ok(n as i64)
}

struct Sampled {
    omega: Vec<f64>,
    values: Vec<Vec<C64>>,
    low_confidence: bool,
    inserted: usize,
}

fn eval_bumped<F>(f: &F, w: f64, half_step: f64) -> Option<Vec<C64>>
where
    F: Fn(f64) -> Result<Vec<C64>>,
{
    let ok = |v: &Vec<C64>| v.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    match f(w) {
        Ok(v) if ok(&v) => Some(v),
        _ => {
            // exactly on a pole: bump by half a step
            let h = if half_step > 0.0 { half_step } else { 1e-9 * w.abs().max(1.0) };
            f(w + h).ok().filter(ok)
        }
    }
}

/// Reorders two-channel samples so each channel is continuous in `ω`.
fn track_pairs(values: &mut [Vec<C64>]) {
    for k in 1..values.len() {
        let (prev, cur) = values.split_at_mut(k);
        let p = &prev[k - 1];
        let c = &mut cur[0];
        if c.len() == 2 {
            let keep = (c[0] - p[0]).norm() + (c[1] - p[1]).norm();
            let swap = (c[0] - p[1]).norm() + (c[1] - p[0]).norm();
            if swap < keep {
                c.swap(0, 1);
            }
        }
    }
}

fn median_abs(values: &[Vec<C64>], k: usize) -> f64 {
    let mut m: Vec<f64> = values.iter().map(|v| v[k].norm()).collect();
    m.sort_by(|a, b| a.total_cmp(b));
    m.get(m.len() / 2).copied().unwrap_or(0.0)
}

fn sample_refined<F>(f: F, points: &[f64], track: bool) -> Sampled
where
    F: Fn(f64) -> Result<Vec<C64>>,
{
    let min_spacing = TAU * MIN_SPACING_HZ;
    let mut omega = Vec::with_capacity(points.len());
    let mut values = Vec::with_capacity(points.len());
    for (i, &w) in points.iter().enumerate() {
        let next = points.get(i + 1).map(|x| 0.5 * (x - w)).unwrap_or(0.0);
        if let Some(v) = eval_bumped(&f, w, next) {
            omega.push(w);
            values.push(v);
        }
    }
    if track {
        track_pairs(&mut values);
    }
    let channels = values.first().map(|v| v.len()).unwrap_or(0);
    let guards: Vec<f64> = (0..channels).map(|k| ORIGIN_GUARD_REL * median_abs(&values, k)).collect();
    let mut inserted = 0;
    let mut low_confidence = false;
    loop {
        let mut mids = Vec::new();
        for i in 0..omega.len().saturating_sub(1) {
            if omega[i + 1] - omega[i] <= min_spacing {
                continue;
            }
            let (a, b) = (&values[i], &values[i + 1]);
            let need = (0..channels).any(|k| {
                let step = (b[k] / a[k]).arg().abs();
                let near = a[k].norm().min(b[k].norm()) < 10.0 * guards[k];
                step > MAX_PHASE_STEP || !step.is_finite() || (near && step > PI / 180.0)
            });
            if need {
                mids.push(0.5 * (omega[i] + omega[i + 1]));
            }
        }
        if mids.is_empty() {
            break;
        }
        if inserted + mids.len() > REFINE_BUDGET {
            low_confidence = true;
            break;
        }
        inserted += mids.len();
        let new: Vec<(f64, Vec<C64>)> = mids
            .iter()
            .filter_map(|&w| eval_bumped(&f, w, 0.25 * min_spacing).map(|v| (w, v)))
            .collect();
        let old = std::mem::take(&mut omega).into_iter().zip(std::mem::take(&mut values));
        let mut merged: Vec<(f64, Vec<C64>)> = old.chain(new).collect();
        merged.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (w, v) in merged {
            omega.push(w);
            values.push(v);
        }
        if track {
            track_pairs(&mut values);
        }
    }
    Sampled { omega, values, low_confidence, inserted }
}

/// Samples a scalar channel on `grid`, bisecting where the phase turns fast
/// or the locus runs close to the origin.
pub fn sweep<F>(f: F, grid: &FreqGrid) -> Locus
where
    F: Fn(f64) -> Result<C64>,
{
    let s = sample_refined(|w| f(w).map(|v| vec![v]), grid.points(), false);
    Locus {
        omega: s.omega,
        values: s.values.into_iter().map(|v| v[0]).collect(),
        closed: false,
        rel_degree: 0,
        norm_scale: 1.0,
        low_confidence: s.low_confidence,
        inserted: s.inserted,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Determinant,
    Eigenvalue,
    SchurLoop,
    Logderiv,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [Criterion::Determinant, Criterion::Eigenvalue, Criterion::SchurLoop, Criterion::Logderiv];

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Determinant => "determinant",
            Criterion::Eigenvalue => "eigenvalue",
            Criterion::SchurLoop => "schur-loop",
            Criterion::Logderiv => "logderiv",
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown criterion '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Stable,
    Unstable,
    Indeterminate,
    Marginal,
}

/// Outcome of one criterion in one domain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub criterion: Criterion,
    pub domain: DomainKind,
    pub verdict: Verdict,
    /// Net counter-clockwise encirclements of the origin.
    pub encirclements: Option<i64>,
    /// Per-locus counts for the eigenvalue criterion.
    pub per_locus_encirclements: Vec<i64>,
    pub rhp_open_loop_poles: Option<usize>,
    /// `Z = N + P` with `N` counted clockwise.
    pub rhp_closed_loop_zeros: Option<i64>,
    /// Why the verdict is not a clean Stable/Unstable.
    pub reasons: Vec<String>,
    pub caveat: Option<String>,
    pub loci: Vec<String>,
    pub modes: Vec<ModeEstimate>,
    pub grid_points: usize,
    pub low_confidence: bool,
}

impl StabilityReport {
    pub fn new(criterion: Criterion, domain: DomainKind) -> Self {
        StabilityReport {
            criterion,
            domain,
            verdict: Verdict::Indeterminate,
            encirclements: None,
            per_locus_encirclements: Vec::new(),
            rhp_open_loop_poles: None,
            rhp_closed_loop_zeros: None,
            reasons: Vec::new(),
            caveat: None,
            loci: Vec::new(),
            modes: Vec::new(),
            grid_points: 0,
            low_confidence: false,
        }
    }

    fn indeterminate(&mut self, reason: impl Into<String>) {
        self.verdict = Verdict::Indeterminate;
        self.reasons.push(reason.into());
    }
}

/// Right-half-plane count with the census band.
pub fn rhp_count(roots: &[C64]) -> usize {
    schur::rhp(roots, RHP_BAND).len()
}

fn all_roots(f: &RatFun) -> Vec<C64> {
    f.zeros().iter().chain(f.poles()).copied().collect()
}

fn scale_of(roots: &[C64]) -> f64 {
    let m: Vec<f64> = roots.iter().map(|r| r.norm()).filter(|m| *m > 1e-12).collect();
    geometric_mean(&m)
}

fn all_real(m: &RatMatrix) -> bool {
    m.entries().iter().all(|e| e.real_coeffs())
}

/// Verdict grid: the caller's grid joined with an automatic one that spans
/// every characteristic frequency of `roots`, in the domain's frequency axis.
fn verdict_grid(grid: &FreqGrid, roots: &[C64], tag: &DomainTag) -> FreqGrid {
    grid.union(&FreqGrid::covering(roots, PER_DECADE).shifted(tag.shift()))
}

/// Samples `f` over the full axis, using conjugate symmetry when allowed.
fn scalar_locus<F>(f: F, grid: &FreqGrid, mirror: bool) -> Locus
where
    F: Fn(f64) -> Result<C64>,
{
    if mirror {
        sweep(f, &grid.nonnegative()).mirror_conjugate()
    } else {
        sweep(f, grid)
    }
}

fn check_pair(zg: &RatMatrix, yc: &RatMatrix) -> Result<()> {
    if !zg.is_square() || yc.rows() != zg.cols() || yc.cols() != zg.rows() {
        return Err(Error::DimensionMismatch(format!(
            "Z_g {}x{}, Y_c {}x{}",
            zg.rows(),
            zg.cols(),
            yc.rows(),
            yc.cols()
        )));
    }
    Ok(())
}

fn require_stable_parts(zg: &RatMatrix, yc: &RatMatrix) -> Result<()> {
    let (pg, pc) = (zg.rhp_poles(RHP_BAND), yc.rhp_poles(RHP_BAND));
    if !pg.is_empty() || !pc.is_empty() {
        return Err(Error::OpenLoopUnstable(format!(
            "{} right-half-plane poles in Z_g, {} in Y_c",
            pg.len(),
            pc.len()
        )));
    }
    Ok(())
}

fn return_difference_at(zg: &RatMatrix, yc: &RatMatrix, w: f64, tag: &DomainTag) -> Result<DMatrix<C64>> {
    let r = eval_in(zg, w, tag)? * eval_in(yc, w, tag)?;
    Ok(DMatrix::identity(r.nrows(), r.ncols()) + r)
}

/// Reads a determinant-type winding into a report. `census` is the factored
/// count of right-half-plane zeros used as a cross-check.
fn conclude(report: &mut StabilityReport, winding: Result<i64>, p: usize, census: usize, axis_zeros: bool) {
    report.rhp_open_loop_poles = Some(p);
    match winding {
        Ok(w) => {
            let z = -w + p as i64;
            report.encirclements = Some(w);
            report.rhp_closed_loop_zeros = Some(z);
            if z < 0 {
                report.indeterminate(format!("inconsistent N: winding {w} implies Z = {z}"));
            } else if z as usize != census {
                report.indeterminate(format!("inconsistent N: winding gives Z = {z}, factored census finds {census}"));
            } else if z == 0 {
                report.verdict = Verdict::Stable;
            } else {
                report.verdict = Verdict::Unstable;
            }
        }
        Err(Error::OriginPass { distance, guard }) if axis_zeros => {
            report.verdict = Verdict::Marginal;
            report.reasons.push(format!("origin pass at distance {distance:.3e} (guard {guard:.3e}); zero on the imaginary axis"));
        }
        Err(e) => report.indeterminate(e.to_string()),
    }
}

fn has_axis_roots(roots: &[C64]) -> bool {
    !schur::marginal(roots, 1e-6).is_empty()
}

/// Determinant criterion in the dq domain.
pub fn determinant_criterion(zg: &RatMatrix, yc: &RatMatrix, grid: &FreqGrid) -> Result<StabilityReport> {
    let tag = DomainTag::new(DomainKind::Dq, 1.0)?;
    Ok(determinant_locus(zg, yc, grid, &tag)?.0)
}

/// Locus of `det(I + Z_g Y_c)` and the verdict read from it. Both subsystems
/// must be free of right-half-plane poles, so `P = 0`.
pub fn determinant_locus(zg: &RatMatrix, yc: &RatMatrix, grid: &FreqGrid, tag: &DomainTag) -> Result<(StabilityReport, Locus)> {
    check_pair(zg, yc)?;
    require_stable_parts(zg, yc)?;
    let det = det_return_ratio(zg, yc)?;
    let roots = all_roots(&det);
    let vg = verdict_grid(grid, &roots, tag);
    let mirror = tag.kind == DomainKind::Dq && all_real(zg) && all_real(yc);
    let locus = scalar_locus(|w| Ok(return_difference_at(zg, yc, w, tag)?.determinant()), &vg, mirror)
        .closed_with(det.relative_degree(), scale_of(&roots));
    let mut report = StabilityReport::new(Criterion::Determinant, tag.kind);
    report.grid_points = locus.len();
    report.low_confidence = locus.low_confidence;
    report.loci.push("det(I+R)".into());
    let census = rhp_count(det.zeros());
    conclude(&mut report, winding_number(&locus, C64::new(0.0, 0.0)), 0, census, has_axis_roots(det.zeros()));
    Ok((report, locus))
}

/// Eigenvalues of a 2×2 matrix from the trace/determinant closed form,
/// choosing the root of the quadratic that avoids cancellation.
pub fn eig2_closed_form(m: &DMatrix<C64>) -> [C64; 2] {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (tr * tr - 4.0 * det).sqrt();
    let q = if (tr.conj() * disc).re >= 0.0 { tr + disc } else { tr - disc };
    if q.norm() == 0.0 {
        return [C64::new(0.0, 0.0); 2];
    }
    [0.5 * q, 2.0 * det / q]
}

/// Right-half-plane roots of odd multiplicity: branch points of the square
/// root in the eigenvalue closed form.
fn odd_rhp_roots(roots: &[C64]) -> Vec<C64> {
    let mut rhp = schur::rhp(roots, 1e-6);
    let mut out = Vec::new();
    while let Some(r) = rhp.pop() {
        let tol = 1e-4 * r.norm().max(1e-12);
        let before = rhp.len();
        rhp.retain(|x| (x - r).norm() > tol);
        if (before - rhp.len()) % 2 == 0 {
            out.push(r);
        }
    }
    out
}

/// Characteristic loci of `I + Z_g Y_c` (2×2) and the eigenvalue criterion.
///
/// Each locus is counted on its own and the counts are compared with the
/// determinant. The verdict is Indeterminate, with the reason recorded, when
/// the eigenvalue functions have right-half-plane branch points, when a locus
/// encircles the origin anticlockwise, or when the counts disagree with the
/// determinant.
pub fn eigen_loci(zg: &RatMatrix, yc: &RatMatrix, grid: &FreqGrid) -> Result<(Locus, Locus, StabilityReport)> {
    let tag = DomainTag::new(DomainKind::Dq, 1.0)?;
    eigen_loci_in(zg, yc, grid, &tag)
}

pub fn eigen_loci_in(zg: &RatMatrix, yc: &RatMatrix, grid: &FreqGrid, tag: &DomainTag) -> Result<(Locus, Locus, StabilityReport)> {
    check_pair(zg, yc)?;
    if zg.rows() != 2 {
        return Err(Error::DimensionMismatch("eigenvalue loci need 2x2 matrices".into()));
    }
    let det = det_return_ratio(zg, yc)?;
    let roots = all_roots(&det);
    let vg = verdict_grid(grid, &roots, tag);
    let s = sample_refined(
        |w| Ok(eig2_closed_form(&return_difference_at(zg, yc, w, tag)?).to_vec()),
        vg.points(),
        true,
    );
    let make = |k: usize| Locus {
        omega: s.omega.clone(),
        values: s.values.iter().map(|v| v[k]).collect(),
        closed: true,
        rel_degree: 0,
        norm_scale: 1.0,
        low_confidence: s.low_confidence,
        inserted: s.inserted,
    };
    let (l1, l2) = (make(0), make(1));
    let mut report = StabilityReport::new(Criterion::Eigenvalue, tag.kind);
    report.grid_points = l1.len();
    report.low_confidence = s.low_confidence;
    report.loci = vec!["lambda1".into(), "lambda2".into()];

    let open_unstable = !zg.rhp_poles(RHP_BAND).is_empty() || !yc.rhp_poles(RHP_BAND).is_empty();
    report.rhp_open_loop_poles = Some(if open_unstable { 1 } else { 0 });
    if open_unstable {
        report.indeterminate("unknown P: a subsystem has right-half-plane poles");
    }

    // branches swapping on the closing arc do not close individually
    let n = l1.len();
    if n >= 2 {
        let (a_end, b_end) = (l1.values[n - 1], l2.values[n - 1]);
        let (a_start, b_start) = (l1.values[0], l2.values[0]);
        let keep = (a_end - a_start).norm() + (b_end - b_start).norm();
        let swap = (a_end - b_start).norm() + (b_end - a_start).norm();
        if swap < 0.5 * keep {
            report.indeterminate("eigenvalue branches exchange on the closing arc");
        }
    }

    let mut counts = Vec::new();
    for (k, l) in [&l1, &l2].into_iter().enumerate() {
        match winding_number(l, C64::new(0.0, 0.0)) {
            Ok(w) => counts.push(w),
            Err(e) => report.indeterminate(format!("locus {}: {e}", k + 1)),
        }
    }
    report.per_locus_encirclements = counts.clone();

    let r = zg.mul(yc)?;
    let tr = r.trace()?;
    let disc = tr.mul(&tr).sub(&r.det()?.scale(C64::new(4.0, 0.0)));
    let branch = odd_rhp_roots(disc.zeros());
    if !branch.is_empty() {
        let list: Vec<String> = branch.iter().map(|b| format!("{:.4}{:+.4}j", b.re, b.im)).collect();
        report.indeterminate(format!(
            "eigenvalue functions have right-half-plane branch points at s = {}; the argument principle does not apply per locus",
            list.join(", ")
        ));
    }

    let anticlockwise: Vec<usize> = counts.iter().enumerate().filter(|(_, w)| **w > 0).map(|(k, _)| k + 1).collect();
    if !anticlockwise.is_empty() {
        let caveat = format!(
            "anticlockwise encirclement by locus {}: per-locus counts are not mode counts when the square root in the closed form has no rational branch",
            anticlockwise.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" and ")
        );
        report.indeterminate(caveat.clone());
        report.caveat = Some(caveat);
    }

    if counts.len() == 2 {
        let total = counts[0] + counts[1];
        report.encirclements = Some(total);
        let dloc = Locus {
            omega: l1.omega.clone(),
            values: l1.values.iter().zip(&l2.values).map(|(a, b)| a * b).collect(),
            ..l1.clone()
        }
        .closed_with(det.relative_degree(), scale_of(&roots));
        match winding_number(&dloc, C64::new(0.0, 0.0)) {
            Ok(d) if d != total => {
                report.indeterminate(format!("loci total {total} differs from determinant winding {d}"));
            }
            Ok(_) => {}
            Err(e) => report.indeterminate(format!("determinant: {e}")),
        }
        report.rhp_closed_loop_zeros = Some(-total);
        if report.reasons.is_empty() {
            report.verdict = if total == 0 { Verdict::Stable } else { Verdict::Unstable };
        }
    }
    Ok((l1, l2, report))
}

/// Loop impedance of one frame, its locus, and the verdict `Z = N + P` with
/// `P` taken from the factored census of the loop impedance.
pub fn schur_loop_criterion(
    zg: &RatMatrix,
    zc: &RatMatrix,
    frame: Frame,
    grid: &FreqGrid,
    tag: &DomainTag,
) -> Result<(StabilityReport, Locus, schur::LoopDecomposition)> {
    let (g, c) = match tag.kind {
        DomainKind::Dq => (zg.clone(), zc.clone()),
        DomainKind::Sequence => (frames::rotate(zg)?, frames::rotate(zc)?),
    };
    let d = schur::loop_impedance(&g, &c, frame)?;
    let f = &d.loop_imp;
    let roots = all_roots(f);
    let vg = verdict_grid(grid, &roots, tag);
    let shift = tag.shift();
    let mirror = tag.kind == DomainKind::Dq && f.real_coeffs();
    let locus = scalar_locus(|w| f.eval(C64::new(0.0, w - shift)), &vg, mirror)
        .closed_with(f.relative_degree(), scale_of(&roots));
    let mut report = StabilityReport::new(Criterion::SchurLoop, tag.kind);
    report.grid_points = locus.len();
    report.low_confidence = locus.low_confidence;
    report.loci.push(format!("S_Z^{}", frame.index()));
    let p = d.rhp_poles.len();
    if !d.marginal_poles.is_empty() {
        report.indeterminate("loop impedance has poles on the imaginary axis");
        report.rhp_open_loop_poles = Some(p);
        return Ok((report, locus, d));
    }
    let census = d.rhp_zeros.len();
    conclude(&mut report, winding_number(&locus, C64::new(0.0, 0.0)), p, census, has_axis_roots(f.zeros()));
    Ok((report, locus, d))
}

/// Argument-principle bookkeeping for a scalar channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ArgumentCheck {
    /// Clockwise encirclements of the origin.
    pub n: i64,
    pub z: usize,
    pub p: usize,
    pub consistent: bool,
}

/// Counts clockwise encirclements of `rf` over the closed contour and
/// compares them with `Z - P` from its factored form. An inconsistent first
/// pass is repeated on a grid four times denser before giving up.
pub fn argument_principle_check(rf: &RatFun, grid: &FreqGrid) -> Result<ArgumentCheck> {
    let roots = all_roots(rf);
    let z = rhp_count(rf.zeros());
    let p = rhp_count(rf.poles());
    let mut last = 0.0;
    for density in [PER_DECADE, 4 * PER_DECADE] {
        let vg = grid.union(&FreqGrid::covering(&roots, density));
        let locus = scalar_locus(|w| rf.eval(C64::new(0.0, w)), &vg, rf.real_coeffs())
            .closed_with(rf.relative_degree(), scale_of(&roots));
        let w = winding_number(&locus, C64::new(0.0, 0.0))?;
        let n = -w;
        if n == z as i64 - p as i64 {
            return Ok(ArgumentCheck { n, z, p, consistent: true });
        }
        last = w as f64;
    }
    Err(Error::UnresolvedWinding { turns: last })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn circle(n: usize, centre: C64) -> Locus {
        let omega: Vec<f64> = (0..n).map(|k| k as f64).collect();
        let values = (0..n).map(|k| centre + C64::from_polar(1.0, TAU * k as f64 / n as f64)).collect();
        Locus { omega, values, closed: true, rel_degree: 0, norm_scale: 1.0, low_confidence: false, inserted: 0 }
    }

    #[test]
    fn unit_circle_winds_once() {
        let l = circle(64, r(0.0));
        assert_eq!(winding_number(&l, r(0.0)).unwrap(), 1);
        assert_eq!(winding_number(&l, r(3.0)).unwrap(), 0);
    }

    #[test]
    fn origin_pass_is_reported() {
        let l = circle(64, r(1.0));
        assert!(matches!(winding_number(&l, r(0.0)), Err(Error::OriginPass { .. })));
    }

    #[test]
    fn constant_channel_gives_constant_locus() {
        let g = FreqGrid::uniform_hz(0.0, 10.0, 1.0).unwrap();
        let l = sweep(|_| Ok(C64::new(2.0, -1.0)), &g);
        assert_eq!(l.len(), 11);
        assert!(l.values.iter().all(|v| *v == C64::new(2.0, -1.0)));
    }

    #[test]
    fn lag_magnitude_decreases() {
        let g = FreqGrid::uniform_hz(0.01, 100.0, 0.5).unwrap();
        let l = sweep(|w| Ok(C64::new(1.0, 0.0) / C64::new(1.0, w)), &g);
        assert!(l.values.windows(2).all(|p| p[1].norm() < p[0].norm()));
    }

    #[test]
    fn resonance_gets_refined() {
        let w0: f64 = 50.0;
        let g = FreqGrid::uniform_hz(0.0, 20.0, 0.5).unwrap();
        let l = sweep(
            |w| {
                let s = C64::new(0.0, w);
                Ok(C64::new(1.0, 0.0) / (s * s + 0.001 * s + w0 * w0))
            },
            &g,
        );
        assert!(l.inserted > 0);
        let near = l.omega.iter().filter(|w| (**w - w0).abs() < 0.1).count();
        let far = l.omega.iter().filter(|w| (**w - 80.0).abs() < 0.1).count();
        assert!(near > 10 * far.max(1), "near {near}, far {far}");
    }

    #[test]
    fn argument_principle_examples() {
        let g = FreqGrid::log_symmetric(1e-2, 1e2, 20);
        let a = RatFun::from_roots(1.0, &[r(1.0)], &[r(-1.0)]);
        let c = argument_principle_check(&a, &g).unwrap();
        assert_eq!((c.n, c.z, c.p, c.consistent), (1, 1, 0, true));
        let b = RatFun::from_roots(1.0, &[r(-1.0)], &[r(1.0)]);
        let c = argument_principle_check(&b, &g).unwrap();
        assert_eq!((c.n, c.z, c.p), (-1, 0, 1));
    }

    #[test]
    fn strictly_proper_channel_closes() {
        let g = FreqGrid::log_symmetric(1e-2, 1e2, 20);
        let f = RatFun::from_roots(5.0, &[], &[r(2.0), C64::new(-1.0, 3.0), C64::new(-1.0, -3.0)]);
        let c = argument_principle_check(&f, &g).unwrap();
        assert_eq!((c.n, c.z, c.p), (-1, 0, 1));
    }

    #[test]
    fn closed_form_matches_diagonal() {
        let m = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 2.0), r(0.0), r(0.0), C64::new(-3.0, 0.5)]);
        let mut e = eig2_closed_form(&m).to_vec();
        e.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((e[0] - C64::new(-3.0, 0.5)).norm() < 1e-15);
        assert!((e[1] - C64::new(1.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_admittance_is_stable() {
        let zg = RatMatrix::diag(vec![RatFun::from_roots(1.0, &[r(-1.0)], &[]), RatFun::from_roots(2.0, &[], &[r(-3.0)])]);
        let yc = RatMatrix::zeros(2, 2);
        let g = FreqGrid::uniform_hz(-10.0, 10.0, 0.5).unwrap();
        let rep = determinant_criterion(&zg, &yc, &g).unwrap();
        assert_eq!(rep.verdict, Verdict::Stable);
        assert_eq!(rep.encirclements, Some(0));
    }

    #[test]
    fn unstable_subsystem_rejected() {
        let zg = RatMatrix::diag(vec![RatFun::from_roots(1.0, &[], &[r(1.0)]), RatFun::one()]);
        let g = FreqGrid::uniform_hz(-10.0, 10.0, 0.5).unwrap();
        assert!(matches!(determinant_criterion(&zg, &RatMatrix::identity(2), &g), Err(Error::OpenLoopUnstable(_))));
    }
}
