//! Polynomials and rational functions carried in factored (gain + roots) form.
//!
//! Coefficient form is derived on demand. Common factors are found as
//! tolerance-matched intersections of root multisets rather than through
//! floating-point Euclid.

mod poly;
mod roots;

pub use poly::Poly;
pub use roots::roots_of;
pub(crate) use roots::{poly_roots, polish_with_values};

use crate::error::{Error, Result};
use crate::C64;

/// Default relative tolerance for matching a zero against a pole.
pub const TOL_CANCEL: f64 = 1e-6;

/// Returns true when `a` and `b` agree within `tol * max(1, |a|, |b|)`.
pub fn roots_close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * 1f64.max(a.norm()).max(b.norm())
}

/// Greedy nearest-pair matching between two root multisets. Each returned
/// `(i, j)` pairs `a[i]` with `b[j]`; pairs are taken in order of increasing
/// distance and every index is used at most once.
pub fn match_roots(a: &[C64], b: &[C64], tol: f64) -> Vec<(usize, usize)> {
    let mut cand = Vec::new();
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            if roots_close(x, y, tol) {
                cand.push(((x - y).norm(), i, j));
            }
        }
    }
    cand.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut out = Vec::new();
    for (_, i, j) in cand {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// Multiset difference `a \ b` (matched within `tol`), plus the count of matches.
fn multiset_minus(a: &[C64], b: &[C64], tol: f64) -> (Vec<C64>, usize) {
    let m = match_roots(a, b, tol);
    let mut used = vec![false; a.len()];
    for &(i, _) in &m {
        used[i] = true;
    }
    let rest = a
        .iter()
        .zip(used)
        .filter(|(_, u)| !u)
        .map(|(r, _)| *r)
        .collect();
    (rest, m.len())
}

/// Maximum distance of an optimal-enough pairing between two equal-size
/// multisets, measured relatively as `|a - b| / max(1, |a|, |b|)`.
///
/// Pairing is greedy on the global sorted distance list, which is exact for
/// well-separated roots. Returns `None` on a cardinality mismatch.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let m = match_roots(a, b, f64::INFINITY);
    Some(
        m.iter()
            .map(|&(i, j)| (a[i] - b[j]).norm() / 1f64.max(a[i].norm()).max(b[j].norm()))
            .fold(0.0, f64::max),
    )
}

/// Polynomial `gain * prod (s - roots[i])`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredPoly {
    /// Leading coefficient. Real whenever `real_coeffs` holds.
    pub gain: C64,
    pub roots: Vec<C64>,
    /// When set, complex roots are kept in conjugate pairs.
    pub real_coeffs: bool,
}

impl FactoredPoly {
    pub fn new(gain: C64, roots: Vec<C64>, real_coeffs: bool) -> Self {
        let mut p = FactoredPoly {
            gain,
            roots,
            real_coeffs,
        };
        if real_coeffs {
            p.gain = C64::new(p.gain.re, 0.0);
            p.repair_conjugates();
        }
        p
    }

    pub fn constant(c: C64) -> Self {
        FactoredPoly {
            gain: c,
            roots: Vec::new(),
            real_coeffs: c.im == 0.0,
        }
    }

    pub fn one() -> Self {
        FactoredPoly::constant(C64::new(1.0, 0.0))
    }

    pub fn zero() -> Self {
        FactoredPoly::constant(C64::new(0.0, 0.0))
    }

    /// Monic real polynomial with the given real roots.
    pub fn from_real_roots(gain: f64, roots: &[f64]) -> Self {
        FactoredPoly::new(
            C64::new(gain, 0.0),
            roots.iter().map(|&r| C64::new(r, 0.0)).collect(),
            true,
        )
    }

    /// Factors a coefficient polynomial.
    pub fn from_poly(p: &Poly) -> Result<Self> {
        if p.is_zero() {
            return Ok(FactoredPoly::zero());
        }
        let roots = poly_roots(p)?;
        Ok(FactoredPoly::new(p.leading(), roots, p.has_real_coeffs()))
    }

    /// Factors `p` and refines its roots against an independent evaluator of the
    /// same polynomial (for example a sum of products evaluated in factored form).
    pub fn from_poly_refined<F>(p: &Poly, eval: F) -> Result<Self>
    where
        F: Fn(C64) -> C64,
    {
        if p.is_zero() {
            return Ok(FactoredPoly::zero());
        }
        let mut roots = poly_roots(p)?;
        let scale = p.natural_scale();
        polish_with_values(&mut roots, scale, eval, 60);
        Ok(FactoredPoly::new(p.leading(), roots, p.has_real_coeffs()))
    }

    pub fn is_zero(&self) -> bool {
        self.gain == C64::new(0.0, 0.0)
    }

    pub fn degree(&self) -> Option<usize> {
        if self.is_zero() {
            None
        } else {
            Some(self.roots.len())
        }
    }

    pub fn eval(&self, s: C64) -> C64 {
        self.roots.iter().fold(self.gain, |acc, r| acc * (s - r))
    }

    pub fn expand(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut p = Poly::from_roots(self.gain, &self.roots);
        if self.real_coeffs {
            p = Poly::new(p.coeffs().iter().map(|c| C64::new(c.re, 0.0)).collect());
        }
        p
    }

    pub fn mul(&self, other: &FactoredPoly) -> FactoredPoly {
        if self.is_zero() || other.is_zero() {
            return FactoredPoly::zero();
        }
        let mut roots = self.roots.clone();
        roots.extend_from_slice(&other.roots);
        FactoredPoly {
            gain: self.gain * other.gain,
            roots,
            real_coeffs: self.real_coeffs && other.real_coeffs,
        }
    }

    pub fn scale(&self, k: C64) -> FactoredPoly {
        FactoredPoly {
            gain: self.gain * k,
            roots: if k == C64::new(0.0, 0.0) { Vec::new() } else { self.roots.clone() },
            real_coeffs: self.real_coeffs && k.im == 0.0,
        }
    }

    pub fn powi(&self, n: usize) -> FactoredPoly {
        (0..n).fold(FactoredPoly::one(), |acc, _| acc.mul(self))
    }

    /// Monic part (gain set to one).
    pub fn monic(&self) -> FactoredPoly {
        FactoredPoly {
            gain: C64::new(1.0, 0.0),
            roots: self.roots.clone(),
            real_coeffs: self.real_coeffs,
        }
    }

    /// Divides out `other` as a root multiset. Returns `None` if some root of
    /// `other` has no partner within `tol`.
    pub fn divide(&self, other: &FactoredPoly, tol: f64) -> Option<FactoredPoly> {
        if other.is_zero() {
            return None;
        }
        let (rest, matched) = multiset_minus(&self.roots, &other.roots, tol);
        if matched != other.roots.len() {
            return None;
        }
        Some(FactoredPoly {
            gain: self.gain / other.gain,
            roots: rest,
            real_coeffs: self.real_coeffs && other.real_coeffs,
        })
    }

    /// True when every root of `other` is matched by a root of `self`.
    pub fn divisible_by(&self, other: &FactoredPoly, tol: f64) -> bool {
        match_roots(&other.roots, &self.roots, tol).len() == other.roots.len()
    }

    /// Monic greatest common divisor as a root-multiset intersection.
    pub fn gcd(&self, other: &FactoredPoly, tol: f64) -> FactoredPoly {
        if self.is_zero() {
            return other.monic();
        }
        if other.is_zero() {
            return self.monic();
        }
        let m = match_roots(&self.roots, &other.roots, tol);
        let roots = m
            .iter()
            .map(|&(i, j)| (self.roots[i] + other.roots[j]) * 0.5)
            .collect();
        FactoredPoly::new(C64::new(1.0, 0.0), roots, self.real_coeffs && other.real_coeffs)
    }

    /// Monic least common multiple as a root-multiset union.
    pub fn lcm(&self, other: &FactoredPoly, tol: f64) -> FactoredPoly {
        let (extra, _) = multiset_minus(&other.roots, &self.roots, tol);
        let mut roots = self.roots.clone();
        roots.extend(extra);
        FactoredPoly::new(C64::new(1.0, 0.0), roots, self.real_coeffs && other.real_coeffs)
    }

    /// Averages conjugate partners so real-coefficient polynomials keep exact
    /// conjugate symmetry; near-real singletons are projected onto the real axis.
    pub fn repair_conjugates(&mut self) {
        let n = self.roots.len();
        let mut done = vec![false; n];
        let tol = 1e-6;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let r = self.roots[i];
            let scale = 1f64.max(r.norm());
            if r.im.abs() <= 1e-12 * scale {
                self.roots[i] = C64::new(r.re, 0.0);
                done[i] = true;
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in (i + 1)..n {
                if done[j] {
                    continue;
                }
                let d = (self.roots[j] - r.conj()).norm();
                if d <= tol * scale && best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
            match best {
                Some((j, _)) => {
                    let avg = (r + self.roots[j].conj()) * 0.5;
                    let (a, b) = if avg.im >= 0.0 { (avg, avg.conj()) } else { (avg.conj(), avg) };
                    self.roots[i] = a;
                    self.roots[j] = b;
                    done[i] = true;
                    done[j] = true;
                }
                None => {
                    if r.im.abs() <= tol * scale {
                        self.roots[i] = C64::new(r.re, 0.0);
                    }
                    done[i] = true;
                }
            }
        }
    }

    /// Roots with strictly positive real part beyond a relative band.
    pub fn rhp_roots(&self, band: f64) -> Vec<C64> {
        self.roots
            .iter()
            .copied()
            .filter(|r| r.re > band * r.norm().max(1.0))
            .collect()
    }
}

/// Ratio of two factored polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct RatFun {
    pub num: FactoredPoly,
    pub den: FactoredPoly,
}

impl RatFun {
    pub fn new(num: FactoredPoly, den: FactoredPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivideByZeroFunction);
        }
        Ok(RatFun { num, den })
    }

    pub fn constant(c: C64) -> Self {
        RatFun {
            num: FactoredPoly::constant(c),
            den: FactoredPoly::one(),
        }
    }

    pub fn zero() -> Self {
        RatFun::constant(C64::new(0.0, 0.0))
    }

    pub fn one() -> Self {
        RatFun::constant(C64::new(1.0, 0.0))
    }

    pub fn from_poly(p: FactoredPoly) -> Self {
        RatFun {
            num: p,
            den: FactoredPoly::one(),
        }
    }

    /// Real-coefficient rational function from real zeros/poles given as
    /// complex lists (conjugate partners must be listed).
    pub fn from_roots(gain: f64, zeros: &[C64], poles: &[C64]) -> Self {
        RatFun {
            num: FactoredPoly::new(C64::new(gain, 0.0), zeros.to_vec(), true),
            den: FactoredPoly::new(C64::new(1.0, 0.0), poles.to_vec(), true),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn zeros(&self) -> &[C64] {
        &self.num.roots
    }

    pub fn poles(&self) -> &[C64] {
        &self.den.roots
    }

    /// `deg(den) - deg(num)`; positive for strictly proper functions.
    pub fn relative_degree(&self) -> i64 {
        self.den.roots.len() as i64 - self.num.roots.len() as i64
    }

    pub fn real_coeffs(&self) -> bool {
        self.num.real_coeffs && self.den.real_coeffs
    }

    /// Evaluates in product form.
    pub fn eval(&self, s: C64) -> Result<C64> {
        if self.num.is_zero() {
            return Ok(C64::new(0.0, 0.0));
        }
        let mut v = self.num.gain / self.den.gain;
        // interleave factors to keep intermediate magnitudes bounded
        let n = self.num.roots.len().max(self.den.roots.len());
        for k in 0..n {
            if let Some(z) = self.num.roots.get(k) {
                v *= s - z;
            }
            if let Some(p) = self.den.roots.get(k) {
                let d = s - p;
                if d.norm() < 1e-300 {
                    return Err(Error::PoleHit(format!("{s}")));
                }
                v /= d;
            }
        }
        Ok(v)
    }

    /// Removes zero/pole pairs closer than `tol * max(1, |z|, |p|)`.
    pub fn cancel(&self, tol: f64) -> RatFun {
        if self.num.is_zero() {
            return RatFun::zero();
        }
        let m = match_roots(&self.num.roots, &self.den.roots, tol);
        if m.is_empty() {
            return self.clone();
        }
        let mut zn = vec![true; self.num.roots.len()];
        let mut zd = vec![true; self.den.roots.len()];
        for (i, j) in m {
            zn[i] = false;
            zd[j] = false;
        }
        let keep = |roots: &[C64], mask: &[bool]| -> Vec<C64> {
            roots
                .iter()
                .zip(mask)
                .filter(|(_, k)| **k)
                .map(|(r, _)| *r)
                .collect()
        };
        RatFun {
            num: FactoredPoly {
                gain: self.num.gain,
                roots: keep(&self.num.roots, &zn),
                real_coeffs: self.num.real_coeffs,
            },
            den: FactoredPoly {
                gain: self.den.gain,
                roots: keep(&self.den.roots, &zd),
                real_coeffs: self.den.real_coeffs,
            },
        }
    }

    pub fn mul(&self, other: &RatFun) -> RatFun {
        RatFun {
            num: self.num.mul(&other.num),
            den: self.den.mul(&other.den),
        }
        .cancel(TOL_CANCEL)
    }

    pub fn inv(&self) -> Result<RatFun> {
        if self.num.is_zero() {
            return Err(Error::DivideByZeroFunction);
        }
        Ok(RatFun {
            num: self.den.clone(),
            den: self.num.clone(),
        })
    }

    pub fn div(&self, other: &RatFun) -> Result<RatFun> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn scale(&self, k: C64) -> RatFun {
        RatFun {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    pub fn neg(&self) -> RatFun {
        self.scale(C64::new(-1.0, 0.0))
    }

    pub fn add(&self, other: &RatFun) -> RatFun {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let l = self.den.lcm(&other.den, TOL_CANCEL);
        // multipliers that lift each numerator onto the common denominator
        let ma = FactoredPoly {
            gain: C64::new(1.0, 0.0) / self.den.gain,
            roots: multiset_minus(&l.roots, &self.den.roots, TOL_CANCEL).0,
            real_coeffs: self.den.real_coeffs,
        };
        let mb = FactoredPoly {
            gain: C64::new(1.0, 0.0) / other.den.gain,
            roots: multiset_minus(&l.roots, &other.den.roots, TOL_CANCEL).0,
            real_coeffs: other.den.real_coeffs,
        };
        let ta = self.num.mul(&ma);
        let tb = other.num.mul(&mb);
        let num = sum_factored(&ta, &tb);
        RatFun { num, den: l }.cancel(TOL_CANCEL)
    }

    pub fn sub(&self, other: &RatFun) -> RatFun {
        self.add(&other.neg())
    }
}

/// Factored form of `a + b`, with roots refined against the exact sum evaluated
/// in product form.
pub(crate) fn sum_factored(a: &FactoredPoly, b: &FactoredPoly) -> FactoredPoly {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    let real = a.real_coeffs && b.real_coeffs;
    let all: Vec<f64> = a
        .roots
        .iter()
        .chain(&b.roots)
        .map(|r| r.norm())
        .filter(|m| *m > 0.0)
        .collect();
    let sigma = geometric_mean(&all);
    let pa = a.expand();
    let pb = b.expand();
    let raw = pa.add(&pb);
    let mag = pa.scaled(sigma).norm_inf().max(pb.scaled(sigma).norm_inf());
    if raw.scaled(sigma).norm_inf() <= 1e-13 * mag {
        return FactoredPoly::zero();
    }
    let mut p = raw.trim_relative(sigma, 1e-13);
    if real {
        p = Poly::new(p.coeffs().iter().map(|c| C64::new(c.re, 0.0)).collect());
    }
    let mut f = match FactoredPoly::from_poly_refined(&p, |s| a.eval(s) + b.eval(s)) {
        Ok(f) => f,
        Err(_) => return FactoredPoly::zero(),
    };
    f.real_coeffs = real;
    if real {
        f.gain = C64::new(f.gain.re, 0.0);
        f.repair_conjugates();
    }
    f
}

pub(crate) fn geometric_mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 1.0;
    }
    (v.iter().map(|x| x.ln()).sum::<f64>() / v.len() as f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn r(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn cancel_exact_pair() {
        // (s+1)(s+2)/((s+1)(s+3))
        let f = RatFun::from_roots(1.0, &[r(-1.0), r(-2.0)], &[r(-1.0), r(-3.0)]).cancel(TOL_CANCEL);
        assert_eq!(f.zeros(), &[r(-2.0)]);
        assert_eq!(f.poles(), &[r(-3.0)]);
    }

    #[test]
    fn cancel_within_tolerance() {
        let f = RatFun::from_roots(1.0, &[r(-1.0)], &[r(-1.0000000001)]).cancel(1e-6);
        assert!(f.zeros().is_empty() && f.poles().is_empty());
    }

    #[test]
    fn cancel_outside_tolerance_is_noop() {
        let f = RatFun::from_roots(1.0, &[r(-1.0)], &[r(-1.01)]);
        assert_eq!(f.cancel(1e-6), f);
    }

    #[test]
    fn eval_simple() {
        let f = RatFun::from_roots(1.0, &[], &[r(-1.0)]);
        assert_eq!(f.eval(r(0.0)).unwrap(), r(1.0));
        let g = RatFun::new(
            FactoredPoly::new(r(1.0), vec![c(0.0, 2.0)], false),
            FactoredPoly::from_real_roots(1.0, &[-1.0]),
        )
        .unwrap();
        assert_eq!(g.eval(c(0.0, 2.0)).unwrap(), r(0.0));
    }

    #[test]
    fn eval_at_pole_is_an_error() {
        let f = RatFun::from_roots(1.0, &[], &[r(-1.0)]);
        assert!(matches!(f.eval(r(-1.0)), Err(Error::PoleHit(_))));
    }

    #[test]
    fn add_partial_fractions() {
        // 1/(s+1) + 1/(s+2) = (2s+3)/((s+1)(s+2))
        let a = RatFun::from_roots(1.0, &[], &[r(-1.0)]);
        let b = RatFun::from_roots(1.0, &[], &[r(-2.0)]);
        let s = a.add(&b);
        assert_eq!(s.poles().len(), 2);
        assert_eq!(s.zeros().len(), 1);
        assert!((s.zeros()[0] - r(-1.5)).norm() < 1e-14);
        assert!((s.num.gain - r(2.0)).norm() < 1e-14);
    }

    #[test]
    fn inverse_identity() {
        let a = RatFun::from_roots(3.0, &[r(-4.0), c(-1.0, 2.0), c(-1.0, -2.0)], &[r(-1.0), r(-7.0)]);
        let one = a.mul(&a.inv().unwrap());
        assert!(one.zeros().is_empty() && one.poles().is_empty());
        assert!((one.eval(c(0.3, 1.0)).unwrap() - r(1.0)).norm() < 1e-14);
    }

    #[test]
    fn inverse_of_zero_fails() {
        assert_eq!(RatFun::zero().inv(), Err(Error::DivideByZeroFunction));
    }

    #[test]
    fn subtracting_itself_gives_zero() {
        let a = RatFun::from_roots(2.0, &[r(-4.0)], &[r(-1.0), r(-7.0)]);
        assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn gcd_and_lcm_as_multisets() {
        let a = FactoredPoly::from_real_roots(1.0, &[-1.0, -2.0, -2.0]);
        let b = FactoredPoly::from_real_roots(1.0, &[-2.0, -3.0]);
        assert_eq!(a.gcd(&b, 1e-9).roots, vec![r(-2.0)]);
        assert_eq!(a.lcm(&b, 1e-9).roots.len(), 4);
        assert!(a.divisible_by(&FactoredPoly::from_real_roots(1.0, &[-2.0, -2.0]), 1e-9));
        assert!(!b.divisible_by(&FactoredPoly::from_real_roots(1.0, &[-2.0, -2.0]), 1e-9));
    }

    #[test]
    fn conjugate_repair_restores_symmetry() {
        let p = FactoredPoly::new(r(1.0), vec![c(-1.0, 2.0), c(-1.0 + 1e-10, -2.0 + 1e-10), c(-3.0, 1e-14)], true);
        assert_eq!(p.roots[0], p.roots[1].conj());
        assert_eq!(p.roots[2].im, 0.0);
    }
}
