//! Checks shared by the acceptance run and the focused integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use impstab::analysis::{self, Plant};
use impstab::cli::{self, CommonArgs};
use impstab::config::{RunConfig, Scenario};
use impstab::criteria::{self, Criterion, FreqGrid, Verdict};
use impstab::frames::{self, DomainKind, DomainTag, MatrixSample};
use impstab::logderiv::{self, FreqResponse, LoopChannel};
use impstab::models;
use impstab::ratfun::{multiset_distance, RatFun};
use impstab::ratmatrix::RatMatrix;
use impstab::schur::{self, RHP_BAND};
use impstab::smform;
use impstab::statespace::{self, StateSpace};
use impstab::synth::{self, SynthSpec};
use impstab::C64;
use nalgebra::DMatrix;
use rand::Rng;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

pub fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

pub fn canonical() -> Scenario {
    Scenario::load(&scenario_dir().join("canonical.toml")).expect("canonical scenario")
}

pub fn canonical_unstable() -> Scenario {
    Scenario::load(&scenario_dir().join("canonical_unstable.toml")).expect("canonical unstable scenario")
}

pub fn run_config(s: &Scenario, criteria: Option<Vec<Criterion>>, out: &Path) -> RunConfig {
    RunConfig::resolve(scenario_dir().join("canonical.toml"), s, out.to_path_buf(), criteria, None, None).unwrap()
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Oracle verdict from closed-loop eigenvalues with the stability margin.
pub fn verdict_of(eigs: &[C64], margin: f64) -> Verdict {
    let m = eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    if m > margin {
        Verdict::Unstable
    } else if m < -margin {
        Verdict::Stable
    } else {
        Verdict::Marginal
    }
}

pub struct RandomPair {
    pub zg: StateSpace,
    pub yc: StateSpace,
    pub g: RatMatrix,
    pub c: RatMatrix,
    pub closed: Vec<C64>,
}

pub fn random_pairs(seed: u64, count: usize) -> Vec<RandomPair> {
    let mut r = synth::rng(seed);
    (0..count)
        .map(|_| {
            let (zg, yc) = synth::random_pair(&mut r, 8);
            let g = statespace::transfer_matrix(&zg).unwrap();
            let c = statespace::transfer_matrix(&yc).unwrap();
            let closed = statespace::close_loop(&zg, &yc).unwrap().eigenvalues().unwrap();
            RandomPair { zg, yc, g, c, closed }
        })
        .collect()
}

/// Zeros of `det(I + Z_g Y_c)` against closed-loop eigenvalues, and no
/// right-half-plane poles after cancellation.
pub fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let pairs = random_pairs(1, 100);
    let (mut worst, mut bad_card, mut rhp_poles) = (0.0f64, 0, 0);
    for p in &pairs {
        let d = smform::det_return_ratio(&p.g, &p.c).unwrap();
        match multiset_distance(d.zeros(), &p.closed) {
            Some(x) => worst = worst.max(x),
            None => bad_card += 1,
        }
        rhp_poles += schur::rhp(d.poles(), RHP_BAND).len();
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome::new(
        worst <= 1e-6 && bad_card == 0 && rhp_poles == 0 && secs < 30.0,
        format!("100 pairs, worst relative zero distance {worst:.2e}, cardinality mismatches {bad_card}, RHP poles {rhp_poles}, {secs:.2} s"),
    )
}

/// Determinant verdicts on random pairs and along the canonical sweep.
pub fn determinant_vs_oracle() -> Outcome {
    let margin = 1e-6;
    let grid = FreqGrid::uniform_hz(-20.0, 20.0, 0.05).unwrap();
    let mut agree = 0;
    let mut total = 0;
    let mut unstable_seen = 0;
    let mut notes = Vec::new();
    for (k, p) in random_pairs(1, 100).iter().enumerate() {
        let oracle = verdict_of(&p.closed, margin);
        let r = criteria::determinant_criterion(&p.g, &p.c, &grid).unwrap();
        total += 1;
        unstable_seen += (oracle == Verdict::Unstable) as usize;
        if r.verdict == oracle {
            agree += 1;
        } else {
            notes.push(format!("pair {k}: {:?} vs {:?}", r.verdict, oracle));
        }
    }
    let s = canonical();
    let dir = tempfile::tempdir().unwrap();
    let rc = run_config(&s, Some(vec![Criterion::Determinant]), dir.path());
    let mut crossed = (false, false);
    for (x, sc) in s.sweep_points().unwrap() {
        let o = analysis::oracle(&sc, margin).unwrap();
        let a = analysis::analyze_point(&sc, &rc, x).unwrap();
        let r = a.report(Criterion::Determinant, DomainKind::Dq).unwrap();
        crossed.0 |= o.verdict == Verdict::Stable;
        crossed.1 |= o.verdict == Verdict::Unstable;
        total += 1;
        if r.verdict == o.verdict {
            agree += 1;
        } else {
            notes.push(format!("lg={:.4e}: {:?} vs {:?}", x.unwrap_or(f64::NAN), r.verdict, o.verdict));
        }
    }
    Outcome::new(
        agree == total && total == 120 && crossed.0 && crossed.1,
        format!(
            "{agree}/{total} agree ({unstable_seen} random pairs closed-loop unstable; sweep crosses boundary: {}) {}",
            crossed.0 && crossed.1,
            notes.join("; ")
        ),
    )
}

/// A stable 2×2 pair with invertible feedthrough, so that `Z_c = Y_c⁻¹` and
/// `Y_g = Z_g⁻¹` exist.
pub fn invertible_pair<R: Rng>(r: &mut R) -> (RatMatrix, RatMatrix) {
    loop {
        let ng = r.gen_range(1..=6);
        let nc = r.gen_range(1..=6);
        let zg = synth::random_stable(r, &SynthSpec { order: ng, ..SynthSpec::default() });
        let mut yc = synth::random_stable(r, &SynthSpec { order: nc, ..SynthSpec::default() });
        yc.d += DMatrix::identity(2, 2);
        let mut zg = zg;
        zg.d += DMatrix::identity(2, 2);
        let ok = |m: &DMatrix<f64>| m.determinant().abs() > 0.2;
        if ok(&zg.d) && ok(&yc.d) {
            return (statespace::transfer_matrix(&zg).unwrap(), statespace::transfer_matrix(&yc).unwrap());
        }
    }
}

/// `det(S_Z)`, `det(S_Y)`, `det(I+R)` and `det(I+R')` share zeros; a
/// non-minimum-phase converter puts an RHP pole into `det(S_Z)` only.
pub fn four_determinants() -> Outcome {
    let mut r = synth::rng(7);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..50 {
        let (zg, yc) = invertible_pair(&mut r);
        let zc = yc.inverse().unwrap();
        let yg = zg.inverse().unwrap();
        let d = smform::det_return_ratio(&zg, &yc).unwrap();
        let rd = smform::det_return_differences(&zg, &zc, &yg, &yc).unwrap();
        for other in [&rd.det_sz, &rd.det_sy, &rd.det_r_prime] {
            match multiset_distance(other.zeros(), d.zeros()) {
                Some(x) => worst = worst.max(x),
                None => failures += 1,
            }
        }
    }
    // converter admittance with a transmission zero at s = 1
    let nmp = RatFun::from_roots(1.0, &[c(1.0, 0.0)], &[c(-2.0, 0.0)]);
    let yc = RatMatrix::diag(vec![nmp.clone(), RatFun::from_roots(1.0, &[c(-1.0, 0.0)], &[c(-3.0, 0.0)])]);
    let zg = RatMatrix::diag(vec![
        RatFun::from_roots(0.5, &[c(-4.0, 0.0)], &[c(-5.0, 0.0)]),
        RatFun::from_roots(0.5, &[c(-4.0, 0.0)], &[c(-6.0, 0.0)]),
    ]);
    let zc = yc.inverse().unwrap();
    let det_sz = zg.add(&zc).unwrap().det().unwrap();
    let det_r = smform::det_return_ratio(&zg, &yc).unwrap();
    let sz_rhp = schur::rhp(det_sz.poles(), RHP_BAND).len();
    let r_rhp = schur::rhp(det_r.poles(), RHP_BAND).len();
    let zeros_match = multiset_distance(det_sz.zeros(), det_r.zeros()).is_some_and(|x| x < 1e-6);
    Outcome::new(
        worst <= 1e-6 && failures == 0 && sz_rhp > 0 && r_rhp == 0 && zeros_match,
        format!(
            "50 pairs, worst zero distance {worst:.2e}, cardinality failures {failures}; constructed pair: det(S_Z) RHP poles {sz_rhp}, det(I+R) RHP poles {r_rhp}"
        ),
    )
}

/// Closed-form 2×2 eigenvalues against a Schur decomposition.
pub fn eigen_closed_form() -> Outcome {
    let mut r = synth::rng(11);
    let mut worst = 0.0f64;
    let mut worst_scaled = 0.0f64;
    for _ in 0..20 {
        let (zg, yc) = synth::random_pair(&mut r, 6);
        let (g, cm) = (statespace::transfer_matrix(&zg).unwrap(), statespace::transfer_matrix(&yc).unwrap());
        for k in 0..500 {
            let w = -50.0 + 100.0 * k as f64 / 499.0;
            let s = c(0.0, w);
            let m = DMatrix::identity(2, 2) + g.eval(s).unwrap() * cm.eval(s).unwrap();
            let cf = criteria::eig2_closed_form(&m);
            let num = m.clone().schur().eigenvalues().expect("triangular");
            let d_keep = (cf[0] - num[0]).norm().max((cf[1] - num[1]).norm());
            let d_swap = (cf[0] - num[1]).norm().max((cf[1] - num[0]).norm());
            let (d, pairs) = if d_keep <= d_swap { (d_keep, [(cf[0], num[0]), (cf[1], num[1])]) } else { (d_swap, [(cf[0], num[1]), (cf[1], num[0])]) };
            for (a, b) in pairs {
                worst = worst.max((a - b).norm() / b.norm().max(f64::MIN_POSITIVE));
            }
            worst_scaled = worst_scaled.max(d / m.norm());
        }
    }
    Outcome::new(worst <= 1e-10, format!("20 matrices x 500 frequencies, worst relative {worst:.2e} (relative to |M|: {worst_scaled:.2e})"))
}

/// `g(ω) = k (jω - λ)` sampled around `ω_Z` at 0.01 Hz.
pub fn single_factor(alpha: f64, omega_z: f64, gain: C64, half_width: f64) -> (FreqResponse, f64) {
    let step = 2.0 * PI * logderiv::DEFAULT_STEP_HZ;
    let n = (2.0 * half_width / step) as usize + 1;
    // start off the grid so that ω_Z is not a sample
    let start = omega_z - half_width + 0.37 * step;
    let lam = c(alpha, omega_z);
    let r = FreqResponse::sample("g", move |w| Ok(gain * (c(0.0, w) - lam)), start, step, n).unwrap();
    (r, step)
}

/// Recovery of α and ω_Z, gain invariance and the second derivative.
pub fn logderiv_analytics() -> Outcome {
    let mut worst_alpha = 0.0f64;
    let mut worst_omega_steps = 0.0f64;
    let mut worst_curv = 0.0f64;
    let mut missing = Vec::new();
    let omega_z = 150.0;
    for alpha in [0.01, -0.01, 0.1, -0.1, 1.0, -1.0, 10.0, -10.0] {
        let (r, step) = single_factor(alpha, omega_z, c(2.0, -3.0), (40.0 * alpha.abs()).max(2.0));
        let t = logderiv::log_derivative(&r, step).unwrap();
        let modes: Vec<_> = logderiv::find_modes(&t).into_iter().map(|m| logderiv::refine_or_seed(&t, &m)).collect();
        let Some(m) = modes.iter().min_by(|a, b| (a.omega_z - omega_z).abs().total_cmp(&(b.omega_z - omega_z).abs())) else {
            missing.push(alpha);
            continue;
        };
        worst_alpha = worst_alpha.max((m.alpha_z - alpha).abs() / alpha.abs());
        worst_omega_steps = worst_omega_steps.max((m.omega_z - omega_z).abs() / step);
        if m.unstable != (alpha > 0.0) {
            missing.push(alpha);
        }
        let lam = c(alpha, omega_z);
        let (_, d2) = logderiv::curvature_at(|w| Ok(c(0.0, w) - lam), m).unwrap();
        worst_curv = worst_curv.max((d2 - 2.0 / alpha.powi(3)).abs() / (2.0 / alpha.powi(3)).abs());
    }
    // gain invariance
    let (a, step) = single_factor(0.3, 80.0, c(1.0, 0.0), 5.0);
    let b = FreqResponse::new("g", a.omega.clone(), a.values.iter().map(|v| v * c(-7.5, 2.25)).collect()).unwrap();
    let (ta, tb) = (logderiv::log_derivative(&a, step).unwrap(), logderiv::log_derivative(&b, step).unwrap());
    let scale = ta.dl.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let gain_diff = ta.dl.iter().zip(&tb.dl).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale;
    Outcome::new(
        missing.is_empty() && worst_alpha <= 0.01 && worst_omega_steps <= 1.0 && gain_diff <= 1e-12 && worst_curv <= 0.10,
        format!(
            "worst α error {:.3}%, worst ω_Z offset {worst_omega_steps:.3} steps, gain invariance {gain_diff:.1e}, curvature error {:.2}%, misses {missing:?}",
            100.0 * worst_alpha,
            100.0 * worst_curv
        ),
    )
}

fn pairs(list: &[(f64, f64)]) -> Vec<C64> {
    let mut out = Vec::new();
    for &(re, im) in list {
        out.push(c(re, im));
        if im != 0.0 {
            out.push(c(re, -im));
        }
    }
    out
}

/// Loop impedance with the unstable root pattern: one lightly unstable pair
/// among well-damped zeros and poles (values in rad/s).
pub fn clutter_unstable() -> RatFun {
    let zeros = pairs(&[(0.18, 62.0), (-61.0, 407.0), (-27.0, 48.0), (-35.0, 0.0), (-226.0, 0.0)]);
    let poles = pairs(&[(-102.0, 472.0), (-38.0, 93.0), (-10.0, 49.0), (-35.0, 0.0), (-219.0, 0.0)]);
    RatFun::from_roots(1.0, &zeros, &poles)
}

/// Variant with all zeros stable and an RHP pole pair near the mode.
pub fn clutter_stable() -> RatFun {
    let zeros = pairs(&[(-1.5, 62.0), (-66.0, 410.0), (-27.0, 49.0), (-35.0, 0.0), (-246.0, 0.0)]);
    let poles = pairs(&[(-95.0, 381.0), (-30.0, 45.0), (0.2, 58.0), (-35.0, 0.0), (-892.0, 0.0)]);
    RatFun::from_roots(1.0, &zeros, &poles)
}

pub fn clutter_channel(f: &RatFun) -> (LoopChannel, f64) {
    let step = 2.0 * PI * logderiv::DEFAULT_STEP_HZ;
    let n = (200.0 / logderiv::DEFAULT_STEP_HZ) as usize + 1;
    let f = f.clone();
    let r = FreqResponse::sample("S_Z", move |w| f.eval(c(0.0, w)), -2.0 * PI * 100.0, step, n).unwrap();
    (LoopChannel { domain: DomainKind::Dq, response: r, physical: true }, step)
}

pub fn mode_recovery() -> Outcome {
    let (ch, step) = clutter_channel(&clutter_unstable());
    let (r, _, _) = logderiv::stability_from_loops(&[ch], step).unwrap();
    let found = r.modes.iter().filter(|m| m.unstable).map(|m| (m.alpha_z, m.omega_z)).collect::<Vec<_>>();
    let alpha_ok = found.len() == 2 && found.iter().all(|(a, w)| (a - 0.18).abs() <= 0.02 * 0.18 && (w.abs() - 62.0).abs() < 0.5);
    let (ch, step) = clutter_channel(&clutter_stable());
    let (r2, _, _) = logderiv::stability_from_loops(&[ch], step).unwrap();
    Outcome::new(
        r.verdict == Verdict::Unstable && alpha_ok && r2.verdict == Verdict::Stable,
        format!("unstable pattern: {:?} with modes {found:?}; stable pattern: {:?}", r.verdict, r2.verdict),
    )
}

/// The eigenvalue criterion on the canonical unstable scenario, through the
/// oracle comparison.
pub fn eigen_hazard() -> Outcome {
    let mut s = canonical_unstable();
    s.sweep = None;
    let dir = tempfile::tempdir().unwrap();
    let rc = run_config(&s, Some(Criterion::ALL.to_vec()), dir.path());
    let rows = cli::compare_oracle(&s, &rc).unwrap();
    let (point, row) = &rows[0];
    let flagged = row.hazards.iter().any(cli::EigenHazard::flagged);
    let mut detail = format!("oracle {:?} (max Re {:.4}); ", row.oracle.verdict, row.oracle.max_re);
    for h in &row.hazards {
        let e = point.report(Criterion::Eigenvalue, h.domain).unwrap();
        detail += &format!(
            "{}: eigen {:?} per-locus {:?}, anticlockwise {}, oracle mismatch {}, determinant unstable {}, logderiv unstable {}; ",
            h.domain, e.verdict, e.per_locus_encirclements, h.anticlockwise, h.oracle_mismatch, h.determinant_unstable, h.logderiv_unstable
        );
        if let Some(reason) = e.reasons.first() {
            detail += &format!("reason: {reason}; ");
        }
    }
    Outcome::new(flagged, detail.trim_end_matches("; ").to_string())
}

fn random_complex<R: Rng>(r: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |_, _| c(r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0)))
}

fn mirrored_samples(m: &RatMatrix, tag: &DomainTag, xs: &[f64]) -> Vec<MatrixSample> {
    let centre = tag.shift();
    let mut omegas: Vec<f64> = xs.iter().flat_map(|x| [centre - x, centre + x]).collect();
    omegas.sort_by(f64::total_cmp);
    omegas.dedup();
    omegas.into_iter().map(|w| MatrixSample { omega: w, value: frames::eval_in(m, w, tag).unwrap() }).collect()
}

/// Round trip, the fundamental-shift identity of the determinant, and
/// conjugate symmetry of every generated model.
pub fn frame_identities() -> Outcome {
    let mut r = synth::rng(5);
    let round = (0..200)
        .map(|_| {
            let h = random_complex(&mut r);
            (frames::sequence_to_dq(&frames::dq_to_sequence(&h)) - &h).norm() / h.norm()
        })
        .fold(0.0, f64::max);

    let s = canonical();
    let p = Plant::build(&s).unwrap();
    let omegas: Vec<f64> = (0..=400).map(|k| 2.0 * PI * (-100.0 + 0.5 * k as f64) + 0.013).collect();
    let shift = frames::det_shift_identity(&p.zg, &p.yc, &omegas, p.omega0).unwrap();
    // symbolic rotation evaluated in the sequence variable
    let (gs, cs) = (frames::rotate(&p.zg).unwrap(), frames::rotate(&p.yc).unwrap());
    let mut shift_sym = 0.0f64;
    for &w in &omegas {
        let dq = (DMatrix::identity(2, 2) + p.zg.eval(c(0.0, w)).unwrap() * p.yc.eval(c(0.0, w)).unwrap()).determinant();
        let pn = (DMatrix::identity(2, 2) + gs.eval(c(0.0, w)).unwrap() * cs.eval(c(0.0, w)).unwrap()).determinant();
        shift_sym = shift_sym.max((pn - dq).norm() / dq.norm().max(1.0));
    }

    let xs: Vec<f64> = (1..200).map(|k| 3.17 * k as f64).collect();
    let mut sym = 0.0f64;
    let mut models = 0;
    let mut check = |m: &RatMatrix, omega0: f64| {
        for kind in [DomainKind::Dq, DomainKind::Sequence] {
            let tag = DomainTag::new(kind, omega0).unwrap();
            sym = sym.max(frames::symmetry_violation(&mirrored_samples(m, &tag, &xs), &tag));
        }
        models += 1;
    };
    for lg in [0.5e-3, 0.9e-3, 1.2e-3, 1.5e-3] {
        let mut sc = s.clone();
        sc.grid.lg = lg;
        let pl = Plant::build(&sc).unwrap();
        check(&pl.yc, pl.omega0);
        check(&pl.zg, pl.omega0);
    }
    for pr in random_pairs(3, 10) {
        check(&pr.g, 100.0 * PI);
        check(&pr.c, 100.0 * PI);
    }
    Outcome::new(
        round <= 1e-12 && shift < 1e-7 && shift_sym < 1e-7 && sym < 1e-9,
        format!(
            "round trip {round:.1e}, shift identity {shift:.1e} (symbolic rotation {shift_sym:.1e}), conjugate symmetry {sym:.1e} over {models} models"
        ),
    )
}

fn max_gap(a: &RatFun, b: &RatFun, omegas: &[f64]) -> f64 {
    omegas
        .iter()
        .map(|&w| {
            let s = c(0.3, w);
            let (x, y) = (a.eval(s).unwrap(), b.eval(s).unwrap());
            (x - y).norm() / y.norm().max(1.0)
        })
        .fold(0.0, f64::max)
}

fn same_function(a: &RatFun, b: &RatFun, omegas: &[f64]) -> (bool, f64) {
    let gap = max_gap(a, b, omegas);
    let zeros = multiset_distance(a.zeros(), b.zeros()).is_some_and(|x| x < 1e-9);
    let poles = multiset_distance(a.poles(), b.poles()).is_some_and(|x| x < 1e-9);
    (zeros && poles && gap < 1e-9, gap)
}

/// Point-to-point DC link determinants, and the shunt-cable form whose
/// verdict needs the pole census of `Z_s`.
pub fn appendix_determinants() -> Outcome {
    let omegas: Vec<f64> = (0..200).map(|k| -50.0 + 0.5 * k as f64).collect();
    let zr = RatFun::from_roots(2.0, &[c(-1.0, 0.0)], &[c(-3.0, 0.0)]);
    let ys = RatFun::from_roots(0.5, &[c(-0.5, 0.0)], &[c(-2.0, 1.0), c(-2.0, -1.0)]);
    let zcable = RatFun::from_roots(0.1, &[c(-10.0, 0.0)], &[]);

    let sys0 = models::build_p2p_dc(&zr, &ys, &RatFun::zero()).unwrap();
    let (ok18, g18) = same_function(&sys0.det, &RatFun::one().add(&zr.mul(&ys)), &omegas);
    let sys = models::build_p2p_dc(&zr, &ys, &zcable).unwrap();
    let (ok19, g19) = same_function(&sys.det, &RatFun::one().add(&ys.mul(&zcable.add(&zr))), &omegas);

    // Z_s has a pole at s = 1; the closed loop is stable
    let zs = RatFun::from_roots(1.0, &[c(-5.0, 0.0)], &[c(1.0, 0.0)]);
    let zr2 = RatFun::constant(c(0.5, 0.0));
    let ycable = RatFun::from_roots(2.0, &[], &[c(-4.0, 0.0)]);
    let form = models::build_p2p_admittance_form(&zr2, &zs, &ycable).unwrap();
    let (ok20, g20) = same_function(&form.system.det, &RatFun::one().add(&ycable.mul(&zs.add(&zr2))), &omegas);
    let closed_stable = schur::rhp(form.system.det.zeros(), RHP_BAND).is_empty();
    let grid = FreqGrid::uniform_hz(-5.0, 5.0, 0.01).unwrap();
    let blind = form.verdict(&grid, None).unwrap();
    let census = form.verdict(&grid, Some(form.zs_rhp_poles.len())).unwrap();
    Outcome::new(
        ok18 && ok19 && ok20 && closed_stable && blind.verdict == Verdict::Indeterminate && census.verdict == Verdict::Stable,
        format!(
            "zero-cable reduction gap {g18:.1e}, series cable gap {g19:.1e}, shunt cable gap {g20:.1e}; RHP pole in Z_s: without census {:?}, with census {:?} (closed loop stable: {closed_stable})",
            blind.verdict, census.verdict
        ),
    )
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Two `analyze` runs on the canonical scenario give byte-identical files.
pub fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut trees = Vec::new();
    for d in &dirs {
        let args = CommonArgs {
            config: scenario_dir().join("canonical.toml"),
            out: d.path().to_path_buf(),
            criteria: None,
            domains: None,
            step_hz: None,
        };
        let code = cli::run(&cli::Command::Analyze(args)).unwrap().0;
        assert_eq!(code, 0);
        trees.push(read_tree(d.path()));
    }
    let files = trees[0].len();
    let bytes: usize = trees[0].iter().map(|(_, b)| b.len()).sum();
    Outcome::new(files > 0 && trees[0] == trees[1], format!("{files} files, {bytes} bytes compared"))
}
