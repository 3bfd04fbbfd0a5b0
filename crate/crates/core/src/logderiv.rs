//! Logarithmic-derivative stability criterion on sampled frequency responses.
//!
//! For a numerator unit `a (jω - λ)`, `λ = α + jω_Z`, the derivative
//! `D_L = d log g / dω = j / (jω - λ)` is free of the gain `a`. At `ω = ω_Z`
//! its imaginary part is `-1/α` and its real part crosses zero upwards, so a
//! negative minimum of `Im D_L` next to an upward crossing of `Re D_L` marks
//! a right-half-plane zero. Poles produce the mirrored signature.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::criteria::{Criterion, StabilityReport, Verdict};
use crate::error::{Error, Result};
use crate::frames::DomainKind;
use crate::C64;

/// Default sampling step: 0.01 Hz.
pub const DEFAULT_STEP_HZ: f64 = 0.01;
/// Half-width of the artifact mask (Hz).
pub const MASK_HALF_WIDTH_HZ: f64 = 0.5;
/// Co-location tolerance between the `Im` extremum and the `Re` crossing.
pub const COLOCATION_STEPS: usize = 2;
/// Half-width of the fitting window in steps.
pub const FIT_HALF_WINDOW: usize = 20;
/// Relative α agreement required across domains.
pub const DOMAIN_ALPHA_TOL: f64 = 0.05;
const UNDERFLOW_GUARD: f64 = 1e-300;

/// One sampled channel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreqResponse {
    pub channel: String,
    pub omega: Vec<f64>,
    pub values: Vec<C64>,
}

impl FreqResponse {
    pub fn new(channel: impl Into<String>, omega: Vec<f64>, values: Vec<C64>) -> Result<Self> {
        if omega.len() != values.len() {
            return Err(Error::DimensionMismatch(format!("{} frequencies, {} values", omega.len(), values.len())));
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Schema("frequency must be strictly increasing".into()));
        }
        Ok(FreqResponse { channel: channel.into(), omega, values })
    }

    /// Samples `f` on `ω = start + k·step`, `k = 0..n`.
    pub fn sample<F>(channel: impl Into<String>, f: F, start: f64, step: f64, n: usize) -> Result<Self>
    where
        F: Fn(f64) -> Result<C64>,
    {
        let omega: Vec<f64> = (0..n).map(|k| start + k as f64 * step).collect();
        let values = omega.iter().map(|&w| f(w)).collect::<Result<Vec<_>>>()?;
        FreqResponse::new(channel, omega, values)
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Linear interpolation of re/im onto a uniform grid of spacing `step`.
    pub fn resample(&self, step: f64) -> Result<FreqResponse> {
        if self.len() < 2 || !(step > 0.0) {
            return Err(Error::NonUniformGrid("need two samples and a positive step".into()));
        }
        let (a, b) = (self.omega[0], self.omega[self.len() - 1]);
        let n = ((b - a) / step).floor() as usize + 1;
        let mut j = 0;
        let mut omega = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for k in 0..n {
            let w = (a + k as f64 * step).min(b);
            while j + 2 < self.len() && self.omega[j + 1] < w {
                j += 1;
            }
            let (w0, w1) = (self.omega[j], self.omega[j + 1]);
            let t = ((w - w0) / (w1 - w0)).clamp(0.0, 1.0);
            omega.push(w);
            values.push(self.values[j] * (1.0 - t) + self.values[j + 1] * t);
        }
        FreqResponse::new(self.channel.clone(), omega, values)
    }
}

/// `D_L` samples with separated parts and masks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogDerivTrace {
    pub channel: String,
    pub omega: Vec<f64>,
    pub dl: Vec<C64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    /// Spacing (rad/s).
    pub step: f64,
    /// `Some(reason)` for excluded samples.
    pub mask: Vec<Option<String>>,
}

impl LogDerivTrace {
    fn masked(&self, k: usize) -> bool {
        self.mask[k].is_some()
    }
}

/// Central-difference logarithmic derivative on a uniform grid of spacing
/// `step` (rad/s); one-sided at the ends.
pub fn log_derivative(samples: &FreqResponse, step: f64) -> Result<LogDerivTrace> {
    log_derivative_masked(samples, step, &[])
}

/// As [`log_derivative`], masking `±MASK_HALF_WIDTH_HZ` around each artifact
/// frequency (rad/s).
pub fn log_derivative_masked(samples: &FreqResponse, step: f64, artifacts: &[f64]) -> Result<LogDerivTrace> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::NonUniformGrid("need at least three samples".into()));
    }
    for w in samples.omega.windows(2) {
        if ((w[1] - w[0]) - step).abs() > 1e-6 * step {
            return Err(Error::NonUniformGrid(format!("spacing {} differs from step {step}", w[1] - w[0])));
        }
    }
    let g = &samples.values;
    let half = 2.0 * std::f64::consts::PI * MASK_HALF_WIDTH_HZ;
    let mut dl = Vec::with_capacity(n);
    let mut mask = Vec::with_capacity(n);
    for k in 0..n {
        let w = samples.omega[k];
        let mut reason = artifacts
            .iter()
            .find(|a| (w - **a).abs() <= half)
            .map(|a| format!("artifact near {a:.4} rad/s"));
        let (lo, hi, span) = match k {
            0 => (0, 1, step),
            _ if k == n - 1 => (n - 2, n - 1, step),
            _ => (k - 1, k + 1, 2.0 * step),
        };
        let v = if g[k].norm() < UNDERFLOW_GUARD || !g[k].norm().is_finite() {
            reason.get_or_insert_with(|| "zero sample".into());
            C64::new(0.0, 0.0)
        } else {
            (g[hi] - g[lo]) / (g[k] * span)
        };
        if !(v.re.is_finite() && v.im.is_finite()) {
            reason.get_or_insert_with(|| "non-finite difference".into());
        }
        dl.push(if reason.is_some() { C64::new(0.0, 0.0) } else { v });
        mask.push(reason);
    }
    Ok(LogDerivTrace {
        channel: samples.channel.clone(),
        omega: samples.omega.clone(),
        re: dl.iter().map(|z| z.re).collect(),
        im: dl.iter().map(|z| z.im).collect(),
        dl,
        step,
        mask,
    })
}

/// One identified zero of the channel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeEstimate {
    pub omega_z: f64,
    /// Positive means unstable.
    pub alpha_z: f64,
    /// `Im D_L` of the fitted unit at `ω_Z`, i.e. `-1/α_Z`.
    pub im_extreme: f64,
    /// `d Re D_L / dω` across the crossing.
    pub re_slope: f64,
    /// Relative RMS misfit of the single-unit model over the fit window.
    pub quality: f64,
    pub unstable: bool,
    pub refined: bool,
}

/// Single-unit `D_L` model.
fn unit(w: f64, alpha: f64, omega_z: f64) -> C64 {
    C64::new(0.0, 1.0) / C64::new(-alpha, w - omega_z)
}

fn window(trace: &LogDerivTrace, centre: usize, half: usize) -> Vec<usize> {
    let lo = centre.saturating_sub(half);
    let hi = (centre + half).min(trace.omega.len() - 1);
    (lo..=hi).filter(|k| !trace.masked(*k)).collect()
}

fn misfit(trace: &LogDerivTrace, idx: &[usize], alpha: f64, omega_z: f64) -> f64 {
    if idx.is_empty() {
        return f64::INFINITY;
    }
    let r: Vec<C64> = idx.iter().map(|&k| trace.dl[k] - unit(trace.omega[k], alpha, omega_z)).collect();
    let mean = r.iter().sum::<C64>() / r.len() as f64;
    let num: f64 = r.iter().map(|z| (z - mean).norm_sqr()).sum();
    let den: f64 = idx.iter().map(|&k| unit(trace.omega[k], alpha, omega_z).norm_sqr()).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// Upward (`dir = 1`) or downward (`dir = -1`) zero crossing of `Re` within
/// the co-location tolerance of `k`; returns the slope.
fn crossing(trace: &LogDerivTrace, k: usize, dir: f64, offset: f64) -> Option<f64> {
    let n = trace.omega.len();
    let lo = k.saturating_sub(COLOCATION_STEPS);
    let hi = (k + COLOCATION_STEPS).min(n - 1);
    (lo..hi)
        .filter(|&j| !trace.masked(j) && !trace.masked(j + 1))
        .filter(|&j| dir * (trace.re[j] - offset) <= 0.0 && dir * (trace.re[j + 1] - offset) > 0.0)
        .map(|j| (trace.re[j + 1] - trace.re[j]) / trace.step)
        .min_by(|a, b| {
            let (da, db) = (a.abs(), b.abs());
            db.total_cmp(&da)
        })
}

/// Background level of `Re D_L` at sample `k`. The unit's real part is odd
/// about `ω_Z`, so a symmetric average leaves only the smooth background.
fn re_background(trace: &LogDerivTrace, k: usize) -> f64 {
    let n = trace.omega.len();
    let (mut sum, mut count) = (0.0, 0usize);
    for m in 1..=FIT_HALF_WINDOW {
        if k < m || k + m >= n || trace.masked(k - m) || trace.masked(k + m) {
            break;
        }
        sum += 0.5 * (trace.re[k - m] + trace.re[k + m]);
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Local inversion of the unit model at sample `k`: `1/D_L = (ω - ω_Z) + jα`.
fn invert_at(trace: &LogDerivTrace, k: usize, offset: f64) -> Option<(f64, f64)> {
    let inv = C64::new(1.0, 0.0) / (trace.dl[k] - offset);
    let (alpha, omega_z) = (inv.im, trace.omega[k] - inv.re);
    (alpha.is_finite() && omega_z.is_finite() && alpha != 0.0).then_some((alpha, omega_z))
}

/// Zeros signalled by co-located `Im` extrema and upward `Re` crossings:
/// negative minima are unstable, positive maxima stable.
pub fn find_modes(trace: &LogDerivTrace) -> Vec<ModeEstimate> {
    let n = trace.omega.len();
    let mut out = Vec::new();
    for k in 1..n.saturating_sub(1) {
        if trace.masked(k - 1) || trace.masked(k) || trace.masked(k + 1) {
            continue;
        }
        let (a, b, c) = (trace.im[k - 1], trace.im[k], trace.im[k + 1]);
        let is_min = b < 0.0 && b <= a && b < c;
        let is_max = b > 0.0 && b >= a && b > c;
        if !(is_min || is_max) {
            continue;
        }
        // a smooth background shifts the crossing by about α²·offset
        let offset = re_background(trace, k);
        let Some(slope) = crossing(trace, k, 1.0, offset) else { continue };
        let Some((alpha, omega_z)) = invert_at(trace, k, offset) else { continue };
        // the inversion must land on this extremum, and agree in sign
        if (omega_z - trace.omega[k]).abs() > COLOCATION_STEPS as f64 * trace.step || (alpha > 0.0) != is_min {
            continue;
        }
        let idx = window(trace, k, FIT_HALF_WINDOW);
        out.push(ModeEstimate {
            omega_z,
            alpha_z: alpha,
            im_extreme: -1.0 / alpha,
            re_slope: slope,
            quality: misfit(trace, &idx, alpha, omega_z),
            unstable: is_min && slope > 0.0,
            refined: false,
        });
    }
    out
}

/// Sum of signed units plus a linear complex background.
#[derive(Clone, Debug)]
struct Model {
    units: Vec<(f64, f64, f64)>, // (sign, α, ω)
    c: [f64; 4],                 // re0, im0, re1, im1
    centre: f64,
}

impl Model {
    fn params(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.units.iter().flat_map(|u| [u.1, u.2]).collect();
        p.extend_from_slice(&self.c);
        p
    }

    fn with_params(&self, p: &[f64]) -> Model {
        let units = self
            .units
            .iter()
            .enumerate()
            .map(|(i, u)| (u.0, p[2 * i], p[2 * i + 1]))
            .collect();
        let o = 2 * self.units.len();
        Model { units, c: [p[o], p[o + 1], p[o + 2], p[o + 3]], centre: self.centre }
    }

    fn eval(&self, w: f64) -> C64 {
        let x = w - self.centre;
        let mut v = C64::new(self.c[0] + self.c[2] * x, self.c[1] + self.c[3] * x);
        for &(s, a, o) in &self.units {
            v += unit(w, a, o) * s;
        }
        v
    }

    fn residuals(&self, trace: &LogDerivTrace, idx: &[usize]) -> DVector<f64> {
        let mut r = DVector::zeros(2 * idx.len());
        for (i, &k) in idx.iter().enumerate() {
            let d = trace.dl[k] - self.eval(trace.omega[k]);
            r[2 * i] = d.re;
            r[2 * i + 1] = d.im;
        }
        r
    }
}

/// Levenberg–Marquardt with a forward-difference Jacobian.
fn fit(model: Model, trace: &LogDerivTrace, idx: &[usize]) -> (Model, f64) {
    let mut m = model;
    let mut p = m.params();
    let mut r = m.residuals(trace, idx);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let np = p.len();
        let mut jac = DMatrix::zeros(r.len(), np);
        for j in 0..np {
            let h = 1e-7 * p[j].abs().max(1e-3);
            let mut q = p.clone();
            q[j] += h;
            let rj = m.with_params(&q).residuals(trace, idx);
            jac.set_column(j, &((&rj - &r) / h));
        }
        let jt = jac.transpose();
        let g = &jt * &r;
        let h = &jt * &jac;
        let mut improved = false;
        for _ in 0..20 {
            let mut a = h.clone();
            for d in 0..np {
                a[(d, d)] += lambda * h[(d, d)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let q: Vec<f64> = p.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
            let cand = m.with_params(&q);
            let rc = cand.residuals(trace, idx);
            let cc = rc.norm_squared();
            if cc.is_finite() && cc < cost {
                let done = (cost - cc) <= 1e-15 * cost;
                p = q;
                m = cand;
                r = rc;
                cost = cc;
                lambda = (lambda / 3.0).max(1e-12);
                improved = !done;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (m, cost)
}

/// Least-squares fit of the unit model around a seed from [`find_modes`].
///
/// The target unit is fitted with a linear background over `±FIT_HALF_WINDOW`
/// steps. When the residual still carries structure, a second unit (zero or
/// pole) is seeded at the largest residual and the better model is kept; this
/// separates a nearby root whose real part is close to the target's.
pub fn refine_mode(trace: &LogDerivTrace, seed: &ModeEstimate) -> Result<ModeEstimate> {
    let k = trace.omega.partition_point(|w| *w < seed.omega_z).min(trace.omega.len() - 1);
    let idx = window(trace, k, FIT_HALF_WINDOW);
    if idx.len() < 8 {
        return Err(Error::FitDiverged("fit window has too few unmasked samples".into()));
    }
    let base = Model { units: vec![(1.0, seed.alpha_z, seed.omega_z)], c: [0.0; 4], centre: seed.omega_z };
    let (single, c1) = fit(base, trace, &idx);
    let scale: f64 = idx.iter().map(|&j| trace.dl[j].norm_sqr()).sum();
    let mut best = (single.clone(), c1);
    if c1 > 1e-10 * scale {
        let res = single.residuals(trace, &idx);
        let (imax, _) = (0..idx.len())
            .map(|i| (i, res[2 * i].hypot(res[2 * i + 1])))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let w2 = trace.omega[idx[imax]];
        let im2 = res[2 * imax + 1];
        for sign in [1.0, -1.0] {
            let a2 = if im2 != 0.0 { -sign / im2 } else { seed.alpha_z };
            let mut m = single.clone();
            m.units.push((sign, a2, w2));
            let (cand, cc) = fit(m, trace, &idx);
            if cc < 0.1 * best.1 {
                best = (cand, cc);
            }
        }
    }
    let (_, alpha, omega_z) = best.0.units[0];
    if !alpha.is_finite() || !omega_z.is_finite() || (omega_z - seed.omega_z).abs() > FIT_HALF_WINDOW as f64 * trace.step {
        return Err(Error::FitDiverged(format!("fit left the window (ω = {omega_z:.4e})")));
    }
    Ok(ModeEstimate {
        omega_z,
        alpha_z: alpha,
        im_extreme: -1.0 / alpha,
        re_slope: seed.re_slope,
        quality: (best.1 / scale.max(f64::MIN_POSITIVE)).sqrt(),
        unstable: alpha > 0.0 && seed.re_slope > 0.0,
        refined: true,
    })
}

/// [`refine_mode`], falling back to the seed on failure.
pub fn refine_or_seed(trace: &LogDerivTrace, seed: &ModeEstimate) -> ModeEstimate {
    refine_mode(trace, seed).unwrap_or_else(|_| seed.clone())
}

/// First and second `ω`-derivatives of `Im D_L` at `ω_Z`, from the channel
/// itself with a step small against `|α_Z|`; ideally `0` and `2/α³`.
pub fn curvature_at<F>(g: F, mode: &ModeEstimate) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<C64>,
{
    let h = 0.05 * mode.alpha_z.abs();
    let inner = 1e-3 * h;
    let im_dl = |w: f64| -> Result<f64> {
        let (a, b, c) = (g(w - inner)?, g(w)?, g(w + inner)?);
        Ok(((c - a) / (b * 2.0 * inner)).im)
    };
    let w = mode.omega_z;
    let (m, z, p) = (im_dl(w - h)?, im_dl(w)?, im_dl(w + h)?);
    Ok(((p - m) / (2.0 * h), (p - 2.0 * z + m) / (h * h)))
}

/// A sampled loop channel.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopChannel {
    pub domain: DomainKind,
    pub response: FreqResponse,
    /// False for channels that are not a physical loop, such as a
    /// characteristic locus.
    pub physical: bool,
}

/// Per-channel outcome kept alongside the report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelModes {
    pub channel: String,
    pub domain: DomainKind,
    pub physical: bool,
    pub modes: Vec<ModeEstimate>,
}

/// Runs the criterion on every channel and combines the verdicts.
///
/// Physical channels decide the verdict; domains must agree on the largest
/// unstable `α` within `DOMAIN_ALPHA_TOL`, else the result is Indeterminate.
pub fn stability_from_loops(channels: &[LoopChannel], step: f64) -> Result<(StabilityReport, Vec<ChannelModes>, Vec<LogDerivTrace>)> {
    if channels.is_empty() {
        return Err(Error::Config("no loop channels supplied".into()));
    }
    let domain = channels[0].domain;
    let mut report = StabilityReport::new(Criterion::Logderiv, domain);
    let mut per = Vec::new();
    let mut traces = Vec::new();
    for ch in channels {
        let trace = log_derivative(&ch.response, step)?;
        let modes: Vec<ModeEstimate> = find_modes(&trace).iter().map(|m| refine_or_seed(&trace, m)).collect();
        if !ch.physical {
            report
                .reasons
                .push(format!("channel {} is not a physical loop; its modes are reported but not used", ch.response.channel));
        }
        per.push(ChannelModes { channel: ch.response.channel.clone(), domain: ch.domain, physical: ch.physical, modes });
        report.grid_points += trace.omega.len();
        traces.push(trace);
    }
    let mut worst_by_domain: Vec<(DomainKind, Option<f64>)> = Vec::new();
    for c in per.iter().filter(|c| c.physical) {
        let worst = c.modes.iter().filter(|m| m.unstable).map(|m| m.alpha_z).fold(None, |acc: Option<f64>, a| Some(acc.map_or(a, |b| b.max(a))));
        match worst_by_domain.iter_mut().find(|(d, _)| *d == c.domain) {
            Some((_, w)) => {
                *w = match (*w, worst) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                }
            }
            None => worst_by_domain.push((c.domain, worst)),
        }
    }
    for c in per.iter().filter(|c| c.physical) {
        report.modes.extend(c.modes.iter().cloned());
    }
    if worst_by_domain.is_empty() {
        report.verdict = Verdict::Indeterminate;
        report.reasons.push("no physical loop channel".into());
        return Ok((report, per, traces));
    }
    let flags: Vec<Option<f64>> = worst_by_domain.iter().map(|(_, w)| *w).collect();
    let any = flags.iter().any(|w| w.is_some());
    let all = flags.iter().all(|w| w.is_some());
    if any && !all {
        report.verdict = Verdict::Indeterminate;
        report.reasons.push(Error::InconsistentDomains("an unstable mode appears in only some domains".into()).to_string());
    } else if all {
        let a: Vec<f64> = flags.iter().map(|w| w.unwrap()).collect();
        let (lo, hi) = a.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(*x), h.max(*x)));
        if hi - lo > DOMAIN_ALPHA_TOL * hi.abs() {
            report.verdict = Verdict::Indeterminate;
            report.reasons.push(Error::InconsistentDomains(format!("unstable α ranges over {lo:.4e}..{hi:.4e}")).to_string());
        } else {
            report.verdict = Verdict::Unstable;
        }
    } else {
        report.verdict = Verdict::Stable;
    }
    // Both frames of a domain see the same closed-loop modes; count each once.
    let mut distinct: Vec<(DomainKind, f64)> = Vec::new();
    for c in per.iter().filter(|c| c.physical) {
        for m in c.modes.iter().filter(|m| m.unstable) {
            let tol = COLOCATION_STEPS as f64 * step + 1e-6 * m.omega_z.abs();
            if !distinct.iter().any(|(d, w)| *d == c.domain && (w - m.omega_z).abs() <= tol) {
                distinct.push((c.domain, m.omega_z));
            }
        }
    }
    let first = distinct.first().map(|(d, _)| *d);
    report.rhp_closed_loop_zeros = Some(distinct.iter().filter(|(d, _)| Some(*d) == first).count() as i64);
    Ok((report, per, traces))
}
