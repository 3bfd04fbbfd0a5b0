//! Matrices of rational functions with a tracked common denominator.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ratfun::{FactoredPoly, Poly, RatFun, TOL_CANCEL};
use crate::C64;

/// Row-major grid of [`RatFun`] entries.
///
/// `common_den` is a multiple of every entry denominator. Matrices built by
/// [`crate::statespace::transfer_matrix`] carry the characteristic polynomial
/// here even where individual entries cancel.
#[derive(Clone, Debug, PartialEq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<RatFun>,
    common_den: FactoredPoly,
}

impl RatMatrix {
    /// Builds from entries; the common denominator is their monic LCM.
    pub fn new(rows: usize, cols: usize, entries: Vec<RatFun>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        let den = entries
            .iter()
            .fold(FactoredPoly::one(), |acc, e| acc.lcm(&e.den, TOL_CANCEL));
        Ok(RatMatrix {
            rows,
            cols,
            entries,
            common_den: den,
        })
    }

    pub fn with_common_den(rows: usize, cols: usize, entries: Vec<RatFun>, den: FactoredPoly) -> Result<Self> {
        let mut m = RatMatrix::new(rows, cols, entries)?;
        if !den.divisible_by(&m.common_den, TOL_CANCEL) {
            return Err(Error::DimensionMismatch(
                "common denominator is not a multiple of the entry denominators".into(),
            ));
        }
        m.common_den = den.monic();
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        let mut e = vec![RatFun::zero(); n * n];
        for i in 0..n {
            e[i * n + i] = RatFun::one();
        }
        RatMatrix::new(n, n, e).expect("square")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix::new(rows, cols, vec![RatFun::zero(); rows * cols]).expect("consistent")
    }

    pub fn from_constant(m: &DMatrix<f64>) -> Self {
        let (r, c) = m.shape();
        let mut e = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                e.push(RatFun::constant(C64::new(m[(i, j)], 0.0)));
            }
        }
        RatMatrix::new(r, c, e).expect("consistent")
    }

    pub fn diag(d: Vec<RatFun>) -> Self {
        let n = d.len();
        let mut e = vec![RatFun::zero(); n * n];
        for (i, v) in d.into_iter().enumerate() {
            e[i * n + i] = v;
        }
        RatMatrix::new(n, n, e).expect("square")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &RatFun {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[RatFun] {
        &self.entries
    }

    pub fn common_den(&self) -> &FactoredPoly {
        &self.common_den
    }

    /// Numerator of entry `(i, j)` over the common denominator, in factored form.
    pub fn numerator(&self, i: usize, j: usize) -> FactoredPoly {
        let e = self.get(i, j);
        if e.is_zero() {
            return FactoredPoly::zero();
        }
        let lift = self
            .common_den
            .divide(&e.den, TOL_CANCEL)
            .unwrap_or_else(|| self.common_den.clone());
        e.num.mul(&lift)
    }

    pub fn eval(&self, s: C64) -> Result<DMatrix<C64>> {
        let mut m = DMatrix::<C64>::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self.get(i, j).eval(s)?;
            }
        }
        Ok(m)
    }

    fn check_same_shape(&self, other: &RatMatrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &RatMatrix) -> Result<RatMatrix> {
        self.check_same_shape(other)?;
        let e = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect();
        let mut m = RatMatrix::new(self.rows, self.cols, e)?;
        let den = self.common_den.lcm(&other.common_den, TOL_CANCEL);
        if den.divisible_by(&m.common_den, TOL_CANCEL) {
            m.common_den = den;
        }
        Ok(m)
    }

    pub fn sub(&self, other: &RatMatrix) -> Result<RatMatrix> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, k: C64) -> RatMatrix {
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.scale(k)).collect(),
            common_den: self.common_den.clone(),
        }
    }

    pub fn mul(&self, other: &RatMatrix) -> Result<RatMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut e = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = RatFun::zero();
                for k in 0..self.cols {
                    acc = acc.add(&self.get(i, k).mul(other.get(k, j)));
                }
                e.push(acc);
            }
        }
        let mut m = RatMatrix::new(self.rows, other.cols, e)?;
        let den = self.common_den.mul(&other.common_den);
        if den.divisible_by(&m.common_den, TOL_CANCEL) {
            m.common_den = den;
        }
        Ok(m)
    }

    pub fn transpose(&self) -> RatMatrix {
        let mut e = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                e.push(self.get(i, j).clone());
            }
        }
        RatMatrix {
            rows: self.cols,
            cols: self.rows,
            entries: e,
            common_den: self.common_den.clone(),
        }
    }

    /// Submatrix on the given row and column index sets.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> RatMatrix {
        let e = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j).clone())
            .collect();
        RatMatrix::new(rows.len(), cols.len(), e).expect("consistent")
    }

    pub fn trace(&self) -> Result<RatFun> {
        if !self.is_square() {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok((0..self.rows).fold(RatFun::zero(), |acc, i| acc.add(self.get(i, i))))
    }

    /// Determinant; cofactor expansion in rational arithmetic is the fallback.
    pub fn det(&self) -> Result<RatFun> {
        if !self.is_square() {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if self.rows >= 2 {
            if let Some(d) = self.det_over_common_den() {
                return Ok(d);
            }
        }
        let idx: Vec<usize> = (0..self.rows).collect();
        Ok(self.minor(&idx, &idx))
    }

    /// `det(N) / L^n` with `L` the common denominator. The factor `L^{n-1}` that
    /// `det(N)` must contain is divided out exactly in coefficient form, so no
    /// hidden copy of a denominator root is left to cancel by tolerance. Roots
    /// of the quotient are polished against the pointwise determinant.
    fn det_over_common_den(&self) -> Option<RatFun> {
        let n = self.rows;
        let l = &self.common_den;
        let nums: Vec<Poly> = (0..n * n)
            .map(|k| self.numerator(k / n, k % n).expand())
            .collect();
        let p = poly_det(&nums, n);
        if p.is_zero() {
            return Some(RatFun::zero());
        }
        let lp = l.expand();
        let mut q = p;
        for _ in 1..n {
            q = q.div_exact(&lp, 1e-8)?;
        }
        let real = self.entries.iter().all(|e| e.real_coeffs());
        if real {
            q = Poly::new(q.coeffs().iter().map(|c| C64::new(c.re, 0.0)).collect());
        }
        let eval = |s: C64| -> C64 {
            match self.eval(s) {
                Ok(m) => m.determinant() * l.eval(s),
                Err(_) => C64::new(f64::NAN, 0.0),
            }
        };
        let mut num = FactoredPoly::from_poly_refined(&q, eval).ok()?;
        num.real_coeffs = real;
        if real {
            num.repair_conjugates();
        }
        Some(
            RatFun {
                num,
                den: l.clone(),
            }
            .cancel(TOL_CANCEL),
        )
    }

    /// Determinant of the square submatrix on `rows` x `cols`.
    pub fn minor(&self, rows: &[usize], cols: &[usize]) -> RatFun {
        match rows.len() {
            0 => RatFun::one(),
            1 => self.get(rows[0], cols[0]).clone(),
            2 => {
                let a = self.get(rows[0], cols[0]).mul(self.get(rows[1], cols[1]));
                let b = self.get(rows[0], cols[1]).mul(self.get(rows[1], cols[0]));
                a.sub(&b)
            }
            _ => {
                let r0 = rows[0];
                let rest = &rows[1..];
                let mut acc = RatFun::zero();
                for (k, &c) in cols.iter().enumerate() {
                    let e = self.get(r0, c);
                    if e.is_zero() {
                        continue;
                    }
                    let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                    let term = e.mul(&self.minor(rest, &sub_cols));
                    acc = if k % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
                }
                acc
            }
        }
    }

    /// Inverse by adjugate over determinant.
    pub fn inverse(&self) -> Result<RatMatrix> {
        let det = self.det()?;
        if det.is_zero() {
            return Err(Error::SingularMatrixFunction);
        }
        let n = self.rows;
        let dinv = det.inv()?;
        let all: Vec<usize> = (0..n).collect();
        let mut e = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                // adj(i, j) = (-1)^{i+j} minor(j, i)
                let r: Vec<usize> = all.iter().copied().filter(|&x| x != j).collect();
                let c: Vec<usize> = all.iter().copied().filter(|&x| x != i).collect();
                let mut cof = self.minor(&r, &c);
                if (i + j) % 2 == 1 {
                    cof = cof.neg();
                }
                e.push(cof.mul(&dinv));
            }
        }
        RatMatrix::new(n, n, e)
    }

    /// Poles of all entries with `Re > band·|p|`.
    pub fn rhp_poles(&self, band: f64) -> Vec<C64> {
        self.common_den.rhp_roots(band)
    }
}

/// Determinant of a row-major polynomial matrix by cofactor expansion.
fn poly_det(m: &[Poly], n: usize) -> Poly {
    fn rec(m: &[Poly], n: usize, rows: &[usize], cols: &[usize]) -> Poly {
        if rows.len() == 1 {
            return m[rows[0] * n + cols[0]].clone();
        }
        let mut acc = Poly::zero();
        for (k, &c) in cols.iter().enumerate() {
            let e = &m[rows[0] * n + c];
            if e.is_zero() {
                continue;
            }
            let sub: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let t = e.mul(&rec(m, n, &rows[1..], &sub));
            acc = if k % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
        }
        acc
    }
    let idx: Vec<usize> = (0..n).collect();
    rec(m, n, &idx, &idx)
}

/// Inverse of a 2×2 rational matrix: `adj(m) / det(m)`.
pub fn invert_2x2(m: &RatMatrix) -> Result<RatMatrix> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::DimensionMismatch(format!("expected 2x2, got {}x{}", m.rows(), m.cols())));
    }
    m.inverse()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn lag(p: f64) -> RatFun {
        RatFun::from_roots(1.0, &[], &[r(p)])
    }

    #[test]
    fn diagonal_inverse() {
        let m = RatMatrix::diag(vec![lag(-1.0), lag(-2.0)]);
        let inv = invert_2x2(&m).unwrap();
        assert_eq!(inv.get(0, 0).zeros(), &[r(-1.0)]);
        assert!(inv.get(0, 0).poles().is_empty());
        assert_eq!(inv.get(1, 1).zeros(), &[r(-2.0)]);
        assert!(inv.get(0, 1).is_zero());
    }

    #[test]
    fn constant_inverse() {
        let m = RatMatrix::from_constant(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let inv = invert_2x2(&m).unwrap().eval(r(0.0)).unwrap();
        let want = [-2.0, 1.0, 1.5, -0.5];
        for (k, w) in want.iter().enumerate() {
            assert!((inv[(k / 2, k % 2)] - r(*w)).norm() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = RatMatrix::from_constant(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
        assert_eq!(invert_2x2(&m), Err(Error::SingularMatrixFunction));
    }

    #[test]
    fn rational_inverse_pointwise() {
        let m = RatMatrix::new(
            2,
            2,
            vec![
                lag(-1.0),
                RatFun::from_roots(2.0, &[r(-3.0)], &[r(-1.0), r(-4.0)]),
                RatFun::from_roots(0.5, &[], &[r(-2.0)]),
                RatFun::from_roots(1.0, &[r(-5.0)], &[r(-6.0)]),
            ],
        )
        .unwrap();
        let inv = invert_2x2(&m).unwrap();
        for w in [0.1, 1.0, 7.0, 40.0] {
            let s = C64::new(0.0, w);
            let p = m.eval(s).unwrap() * inv.eval(s).unwrap();
            let err = (p - DMatrix::<C64>::identity(2, 2)).norm();
            assert!(err < 1e-9, "err {err} at {w}");
        }
    }

    #[test]
    fn det_of_three_by_three() {
        let m = RatMatrix::from_constant(&DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 1.0, 1.0, 3.0, 0.0, 0.0, 1.0, 4.0]));
        let d = m.det().unwrap();
        assert!((d.eval(r(0.0)).unwrap() - r(25.0)).norm() < 1e-12);
    }
}
