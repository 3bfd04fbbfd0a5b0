//! Dense complex-coefficient polynomials in ascending-degree order.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::C64;

/// Polynomial `c[0] + c[1] s + ... + c[n] s^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<C64>,
}

impl Poly {
    /// Builds a polynomial, dropping trailing coefficients that are exactly zero.
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(C64::new(0.0, 0.0));
        }
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Poly::new(vec![C64::new(0.0, 0.0)])
    }

    pub fn one() -> Self {
        Poly::constant(C64::new(1.0, 0.0))
    }

    pub fn constant(c: C64) -> Self {
        Poly::new(vec![c])
    }

    /// `gain * prod (s - r)`.
    pub fn from_roots(gain: C64, roots: &[C64]) -> Self {
        let mut c = vec![C64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![C64::new(0.0, 0.0); c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        for ck in c.iter_mut() {
            *ck *= gain;
        }
        Poly::new(c)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == C64::new(0.0, 0.0))
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.is_zero() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn leading(&self) -> C64 {
        *self.coeffs.last().unwrap()
    }

    pub fn has_real_coeffs(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }

    pub fn eval(&self, s: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    /// Value and first derivative by Horner's scheme.
    pub fn eval_with_derivative(&self, s: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * s + p;
            p = p * s + c;
        }
        (p, dp)
    }

    /// Sum of `|c_k| |s|^k`, the rounding scale of a Horner evaluation at `s`.
    pub fn abs_eval(&self, s: C64) -> f64 {
        let r = s.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut c = vec![C64::new(0.0, 0.0); n];
        for (k, v) in self.coeffs.iter().enumerate() {
            c[k] += v;
        }
        for (k, v) in other.coeffs.iter().enumerate() {
            c[k] += v;
        }
        Poly::new(c)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }

    pub fn scale(&self, k: C64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    /// Coefficients of `p(sigma * t)` as a polynomial in `t`.
    pub fn scaled(&self, sigma: f64) -> Poly {
        let mut f = 1.0;
        let mut c = Vec::with_capacity(self.coeffs.len());
        for &ck in &self.coeffs {
            c.push(ck * f);
            f *= sigma;
        }
        Poly::new(c)
    }

    /// Frequency scale that balances the outer coefficients: `(|c0| / |cn|)^(1/n)`.
    pub fn natural_scale(&self) -> f64 {
        let n = match self.degree() {
            Some(n) if n > 0 => n,
            _ => return 1.0,
        };
        let lo = self.coeffs.iter().position(|c| c.norm() > 0.0).unwrap_or(0);
        if lo >= n {
            return 1.0;
        }
        let s = (self.coeffs[lo].norm() / self.coeffs[n].norm()).powf(1.0 / (n - lo) as f64);
        if s.is_finite() && s > 0.0 {
            s
        } else {
            1.0
        }
    }

    /// Drops leading coefficients that are negligible relative to the rest,
    /// judged in the variable scaled by `sigma`.
    pub fn trim_relative(&self, sigma: f64, rel: f64) -> Poly {
        let sc = self.scaled(sigma);
        let max = sc.norm_inf();
        if max == 0.0 {
            return Poly::zero();
        }
        let mut len = self.coeffs.len();
        while len > 1 && sc.coeffs[len - 1].norm() <= rel * max {
            len -= 1;
        }
        Poly::new(self.coeffs[..len].to_vec())
    }

    /// Divides by `s - r` and returns the quotient, discarding the remainder.
    pub fn deflate(&self, r: C64) -> Poly {
        let n = self.coeffs.len();
        if n <= 1 {
            return Poly::zero();
        }
        let mut q = vec![C64::new(0.0, 0.0); n - 1];
        let mut acc = C64::new(0.0, 0.0);
        for k in (1..n).rev() {
            acc = acc * r + self.coeffs[k];
            q[k - 1] = acc;
        }
        Poly::new(q)
    }

    /// Exact division `self / d`, solved as a least-squares convolution problem in a
    /// frequency-scaled variable. Returns `None` when the relative residual exceeds `tol`.
    pub fn div_exact(&self, d: &Poly, tol: f64) -> Option<Poly> {
        let dd = d.degree()?;
        if self.is_zero() {
            return Some(Poly::zero());
        }
        let pd = self.degree()?;
        if pd < dd {
            return None;
        }
        if dd == 0 {
            return Some(self.scale(C64::new(1.0, 0.0) / d.coeffs[0]));
        }
        let sigma = d.natural_scale();
        let ps = self.scaled(sigma);
        let ds = d.scaled(sigma);
        let pn = ps.norm_inf();
        let dn = ds.norm_inf();
        let m = pd - dd;
        let rows = pd + 1;
        let mut t = DMatrix::<Complex64>::zeros(rows, m + 1);
        for j in 0..=m {
            for (k, dk) in ds.coeffs.iter().enumerate() {
                t[(j + k, j)] = dk / dn;
            }
        }
        let b = DVector::from_iterator(rows, ps.coeffs.iter().map(|c| c / pn));
        let svd = t.clone().svd(true, true);
        let q = svd.solve(&b, 1e-14).ok()?;
        let res = (&t * &q - &b).norm() / b.norm().max(f64::MIN_POSITIVE);
        if !(res <= tol) {
            return None;
        }
        let mut f = 1.0;
        let coeffs = q
            .iter()
            .map(|qk| {
                let v = qk * (pn / dn) / f;
                f *= sigma;
                v
            })
            .collect();
        Some(Poly::new(coeffs))
    }
}
