//! Smith–McMillan reduction, matrix zeros and poles, and the determinant
//! identities of the return ratio and return differences.

use crate::error::{Error, Result};
use crate::ratfun::{FactoredPoly, RatFun, TOL_CANCEL};
use crate::ratmatrix::RatMatrix;
use crate::C64;

/// `diag(k_i ε_i / δ_i)` with the minor GCDs `χ_i` kept as evidence.
#[derive(Clone, Debug, PartialEq)]
pub struct SmithMcMillan {
    pub eps: Vec<FactoredPoly>,
    pub delta: Vec<FactoredPoly>,
    /// Constant gains; only their product is invariant, it is carried by `k[0]`.
    pub k: Vec<C64>,
    /// `χ_0 = 1, χ_1, ..., χ_r`.
    pub chi: Vec<FactoredPoly>,
    /// True when the δ list had to be reordered to satisfy the divisibility chain.
    pub reordered: bool,
}

impl SmithMcMillan {
    pub fn rank(&self) -> usize {
        self.eps.len()
    }

    /// `(∏ k_i) ∏ ε_i / δ_i` evaluated at `s`.
    pub fn det_eval(&self, s: C64) -> C64 {
        let k: C64 = self.k.iter().product();
        self.eps
            .iter()
            .zip(&self.delta)
            .fold(k, |acc, (e, d)| acc * e.eval(s) / d.eval(s))
    }

    /// The determinant as a rational function.
    pub fn det(&self) -> RatFun {
        let k: C64 = self.k.iter().product();
        let num = self
            .eps
            .iter()
            .fold(FactoredPoly::constant(k), |acc, e| acc.mul(e));
        let den = self.delta.iter().fold(FactoredPoly::one(), |acc, d| acc.mul(d));
        RatFun { num, den }.cancel(TOL_CANCEL)
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Smith–McMillan form by the three-step procedure: factor out the common
/// denominator, take minor GCDs of the numerator matrix, then reduce.
pub fn smith_mcmillan(m: &RatMatrix) -> Result<SmithMcMillan> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    let den = m
        .entries()
        .iter()
        .fold(FactoredPoly::one(), |acc, e| acc.lcm(&e.den, TOL_CANCEL));
    // numerator polynomial matrix over the LCM, as a rational matrix with unit denominators
    let mut nums = Vec::with_capacity(n * n);
    for e in m.entries() {
        if e.is_zero() {
            nums.push(RatFun::zero());
            continue;
        }
        let lift = den.divide(&e.den, TOL_CANCEL).unwrap_or_else(|| den.clone());
        let mut num = e.num.mul(&lift);
        num.gain /= e.den.gain;
        nums.push(RatFun::from_poly(num));
    }
    let nm = RatMatrix::new(n, n, nums)?;
    if nm.entries().iter().all(|e| e.is_zero()) {
        return Err(Error::ZeroMatrix);
    }

    let mut chi = vec![FactoredPoly::one()];
    for k in 1..=n {
        let sets = combinations(n, k);
        let mut g: Option<FactoredPoly> = None;
        for rows in &sets {
            for cols in &sets {
                let minor = nm.minor(rows, cols);
                if minor.is_zero() {
                    continue;
                }
                // minors of a polynomial matrix are polynomials; stray denominator
                // roots only appear through rounding and are dropped
                let p = minor.num.monic();
                g = Some(match g {
                    None => p,
                    Some(prev) => prev.gcd(&p, TOL_CANCEL),
                });
            }
        }
        match g {
            Some(p) => chi.push(p),
            None => break,
        }
    }
    let rank = chi.len() - 1;

    let mut eps = Vec::with_capacity(rank);
    for i in 1..=rank {
        let e = chi[i]
            .divide(&chi[i - 1], 1e-4)
            .unwrap_or_else(|| chi[i].monic());
        eps.push(e.monic());
    }
    // reduce ε_i / D
    let mut eps_r = Vec::with_capacity(rank);
    let mut delta = Vec::with_capacity(rank);
    for e in &eps {
        let rf = RatFun {
            num: e.clone(),
            den: den.monic(),
        }
        .cancel(TOL_CANCEL);
        eps_r.push(rf.num.monic());
        delta.push(rf.den.monic());
    }
    // δ_{i+1} | δ_i; enforce by ordering on degree when rounding broke it
    let mut reordered = false;
    for i in 0..rank.saturating_sub(1) {
        if !delta[i].divisible_by(&delta[i + 1], TOL_CANCEL) {
            reordered = true;
        }
    }
    if reordered {
        delta.sort_by(|a, b| b.roots.len().cmp(&a.roots.len()));
    }
    let mut sm = SmithMcMillan {
        eps: eps_r,
        delta,
        k: vec![C64::new(1.0, 0.0); rank],
        chi,
        reordered,
    };
    if rank == n {
        // overall gain from a probe away from all roots
        let det = m.det()?;
        let probe = probe_point(&det, &sm);
        let want = det.eval(probe)?;
        let got = sm.det_eval(probe);
        if got.norm() > 0.0 {
            sm.k[0] = want / got;
        }
    }
    Ok(sm)
}

fn probe_point(f: &RatFun, sm: &SmithMcMillan) -> C64 {
    let mut mag: f64 = 1.0;
    for r in f
        .zeros()
        .iter()
        .chain(f.poles())
        .chain(sm.eps.iter().flat_map(|e| e.roots.iter()))
        .chain(sm.delta.iter().flat_map(|d| d.roots.iter()))
    {
        mag = mag.max(r.norm());
    }
    C64::new(0.37 * mag, 1.13 * mag)
}

/// Zeros are the roots of `∏ ε_i`, poles the roots of `∏ δ_i`.
pub fn matrix_zeros_poles(sm: &SmithMcMillan) -> (Vec<C64>, Vec<C64>) {
    let zeros = sm.eps.iter().flat_map(|e| e.roots.iter().copied()).collect();
    let poles = sm.delta.iter().flat_map(|d| d.roots.iter().copied()).collect();
    (zeros, poles)
}

/// `det(I + Z_g Y_c)` as a cancelled rational function.
pub fn det_return_ratio(zg: &RatMatrix, yc: &RatMatrix) -> Result<RatFun> {
    let n = zg.rows();
    if !zg.is_square() || yc.rows() != zg.cols() || yc.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "Z_g {}x{}, Y_c {}x{}",
            zg.rows(),
            zg.cols(),
            yc.rows(),
            yc.cols()
        )));
    }
    let r = zg.mul(yc)?;
    RatMatrix::identity(n).add(&r)?.det()
}

/// The same determinant obtained through the Smith–McMillan form of `I + R`.
pub fn det_return_ratio_via_sm(zg: &RatMatrix, yc: &RatMatrix) -> Result<RatFun> {
    let r = zg.mul(yc)?;
    let m = RatMatrix::identity(zg.rows()).add(&r)?;
    Ok(smith_mcmillan(&m)?.det())
}

/// Determinants of the two return differences and of the second return ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnDifferences {
    /// `det(Z_g + Z_c)`.
    pub det_sz: RatFun,
    /// `det(Y_g + Y_c)`.
    pub det_sy: RatFun,
    /// `det(I + Z_c Y_g)`.
    pub det_r_prime: RatFun,
}

/// Return differences `S_Z = Z_g + Z_c`, `S_Y = Y_g + Y_c` and the second
/// return ratio `R' = Z_c Y_g`.
pub fn det_return_differences(zg: &RatMatrix, zc: &RatMatrix, yg: &RatMatrix, yc: &RatMatrix) -> Result<ReturnDifferences> {
    let n = zg.rows();
    for m in [zc, yg, yc] {
        if m.rows() != n || m.cols() != n {
            return Err(Error::DimensionMismatch("all four matrices must be n x n".into()));
        }
    }
    let det_sz = zg.add(zc)?.det()?;
    let det_sy = yg.add(yc)?.det()?;
    let det_r_prime = RatMatrix::identity(n).add(&zc.mul(yg)?)?.det()?;
    if det_sz.is_zero() || det_sy.is_zero() {
        return Err(Error::SingularMatrixFunction);
    }
    Ok(ReturnDifferences {
        det_sz,
        det_sy,
        det_r_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn r(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    #[test]
    fn sm_of_diagonal_lags() {
        let m = RatMatrix::diag(vec![
            RatFun::from_roots(1.0, &[], &[r(-1.0)]),
            RatFun::from_roots(1.0, &[], &[r(-1.0), r(-2.0)]),
        ]);
        let sm = smith_mcmillan(&m).unwrap();
        assert!(sm.eps.iter().all(|e| e.roots.is_empty()));
        assert_eq!(sm.delta[0].roots.len(), 2);
        assert_eq!(sm.delta[1].roots.len(), 1);
        assert!((sm.delta[1].roots[0] - r(-1.0)).norm() < 1e-12);
        assert!(sm.delta[0].divisible_by(&sm.delta[1], 1e-9));
    }

    #[test]
    fn sm_of_identity() {
        let sm = smith_mcmillan(&RatMatrix::identity(2)).unwrap();
        assert!(sm.eps.iter().chain(&sm.delta).all(|p| p.roots.is_empty()));
    }

    #[test]
    fn zeros_and_poles_from_invariants() {
        let sm = SmithMcMillan {
            eps: vec![FactoredPoly::one(), FactoredPoly::from_real_roots(1.0, &[1.0])],
            delta: vec![FactoredPoly::from_real_roots(1.0, &[-1.0]), FactoredPoly::one()],
            k: vec![r(1.0), r(1.0)],
            chi: vec![],
            reordered: false,
        };
        let (z, p) = matrix_zeros_poles(&sm);
        assert_eq!(z, vec![r(1.0)]);
        assert_eq!(p, vec![r(-1.0)]);
    }

    #[test]
    fn zero_matrix_rejected() {
        assert_eq!(smith_mcmillan(&RatMatrix::zeros(2, 2)), Err(Error::ZeroMatrix));
    }

    #[test]
    fn return_ratio_of_zero_grid_is_one() {
        let yc = RatMatrix::diag(vec![RatFun::from_roots(1.0, &[], &[r(-1.0)]); 2]);
        let d = det_return_ratio(&RatMatrix::zeros(2, 2), &yc).unwrap();
        assert!((d.eval(r(0.3)).unwrap() - r(1.0)).norm() < 1e-15);
    }

    #[test]
    fn return_ratio_of_diagonal_pair() {
        let z1 = RatFun::from_roots(2.0, &[], &[r(-1.0)]);
        let z2 = RatFun::from_roots(1.0, &[r(-3.0)], &[r(-2.0)]);
        let y1 = RatFun::from_roots(1.0, &[], &[r(-4.0)]);
        let y2 = RatFun::from_roots(3.0, &[], &[r(-5.0)]);
        let d = det_return_ratio(&RatMatrix::diag(vec![z1.clone(), z2.clone()]), &RatMatrix::diag(vec![y1.clone(), y2.clone()])).unwrap();
        for w in [0.0, 0.5, 3.0, 20.0] {
            let s = C64::new(0.0, w);
            let want = (r(1.0) + z1.eval(s).unwrap() * y1.eval(s).unwrap()) * (r(1.0) + z2.eval(s).unwrap() * y2.eval(s).unwrap());
            assert!((d.eval(s).unwrap() - want).norm() < 1e-12 * want.norm());
        }
    }

    #[test]
    fn scalar_return_difference_shares_zeros() {
        let zg = RatMatrix::from_constant(&DMatrix::from_element(1, 1, 0.0))
            .add(&RatMatrix::diag(vec![RatFun::from_roots(1.0, &[], &[r(-1.0)])]))
            .unwrap();
        let zc = RatMatrix::diag(vec![RatFun::from_roots(1.0, &[r(-3.0)], &[r(-2.0)])]);
        let yc = zc.inverse().unwrap();
        let yg = zg.inverse().unwrap();
        let rd = det_return_differences(&zg, &zc, &yg, &yc).unwrap();
        let dr = det_return_ratio(&zg, &yc).unwrap();
        let mut a = rd.det_sz.zeros().to_vec();
        let mut b = dr.zeros().to_vec();
        a.sort_by(|x, y| x.re.total_cmp(&y.re));
        b.sort_by(|x, y| x.re.total_cmp(&y.re));
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-9);
        }
    }
}
