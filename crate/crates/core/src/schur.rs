//! Schur-complement diagonalization of 2×2 return differences into scalar
//! loop impedances, and their split into converter- and grid-side parts.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ratfun::RatFun;
use crate::ratmatrix::RatMatrix;
use crate::C64;

/// Which diagonal position is kept; the other one is eliminated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Frame {
    One,
    Two,
}

impl Frame {
    fn indices(self) -> (usize, usize) {
        match self {
            Frame::One => (0, 1),
            Frame::Two => (1, 0),
        }
    }

    pub fn index(self) -> usize {
        self.indices().0 + 1
    }
}

/// Relative band for the strict right-half-plane census.
pub const RHP_BAND: f64 = 1e-9;

/// Roots with `Re > band·max(|r|, 1)`.
pub fn rhp(roots: &[C64], band: f64) -> Vec<C64> {
    roots.iter().copied().filter(|r| r.re > band * r.norm().max(1.0)).collect()
}

/// Roots with `|Re| <= band·max(|r|, 1)`.
pub fn marginal(roots: &[C64], band: f64) -> Vec<C64> {
    roots
        .iter()
        .copied()
        .filter(|r| r.re.abs() <= band * r.norm().max(1.0))
        .collect()
}

/// `m_kk - m_ke m_ek / m_ee` for the kept index `k` and eliminated index `e`.
///
/// Evaluated as `det(m) / m_ee` so that the numerator is the determinant
/// numerator itself rather than a difference of products.
pub fn schur_complement(m: &RatMatrix, keep: Frame) -> Result<RatFun> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::DimensionMismatch(format!("expected 2x2, got {}x{}", m.rows(), m.cols())));
    }
    let (_, e) = keep.indices();
    let block = m.get(e, e);
    if block.is_zero() {
        return Err(Error::SingularEliminationBlock);
    }
    m.det()?.div(block)
}

/// Loop impedance of one frame together with its side split.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopDecomposition {
    pub frame: Frame,
    /// `S_Z^f`.
    pub loop_imp: RatFun,
    /// Converter-side share `Z_c^f`.
    pub zc_eq: RatFun,
    /// Grid-side share `Z_g^f`.
    pub zg_eq: RatFun,
    /// `Z_g^f / Z_c^f`.
    pub r1d: RatFun,
    /// Poles of `loop_imp` in the open right half plane.
    pub rhp_poles: Vec<C64>,
    /// Numerator roots of `loop_imp` in the open right half plane.
    pub rhp_zeros: Vec<C64>,
    /// Poles on the imaginary axis within the marginal band.
    pub marginal_poles: Vec<C64>,
}

/// Eliminates one frame of `S_Z = Z_g + Z_c`.
pub fn loop_impedance(zg: &RatMatrix, zc: &RatMatrix, frame: Frame) -> Result<LoopDecomposition> {
    for m in [zg, zc] {
        if m.rows() != 2 || m.cols() != 2 {
            return Err(Error::DimensionMismatch("loop impedance needs 2x2 matrices".into()));
        }
    }
    let s = zg.add(zc)?;
    let (k, e) = frame.indices();
    let see = s.get(e, e);
    if see.is_zero() {
        return Err(Error::SingularEliminationBlock);
    }
    let loop_imp = schur_complement(&s, frame)?;
    let coupling = s.get(e, k).div(see)?;
    let zc_eq = zc.get(k, k).sub(&zc.get(k, e).mul(&coupling));
    let zg_eq = zg.get(k, k).sub(&zg.get(k, e).mul(&coupling));
    let r1d = if zc_eq.is_zero() {
        RatFun::zero()
    } else {
        zg_eq.div(&zc_eq)?
    };
    Ok(LoopDecomposition {
        frame,
        rhp_poles: rhp(loop_imp.poles(), RHP_BAND),
        rhp_zeros: rhp(loop_imp.zeros(), RHP_BAND),
        marginal_poles: marginal(loop_imp.poles(), RHP_BAND),
        loop_imp,
        zc_eq,
        zg_eq,
        r1d,
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
    fn diagonal_keeps_entry() {
        let a = RatFun::from_roots(1.0, &[r(-2.0)], &[r(-1.0)]);
        let m = RatMatrix::diag(vec![a.clone(), RatFun::from_roots(3.0, &[], &[r(-4.0)])]);
        let s = schur_complement(&m, Frame::One).unwrap();
        for w in [0.0, 1.0, 10.0] {
            let z = C64::new(0.0, w);
            assert!((s.eval(z).unwrap() - a.eval(z).unwrap()).norm() < 1e-13);
        }
    }

    #[test]
    fn constant_schur() {
        let m = RatMatrix::from_constant(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let s = schur_complement(&m, Frame::One).unwrap();
        assert!((s.eval(r(0.0)).unwrap() - r(1.0 - 6.0 / 4.0)).norm() < 1e-14);
        let s2 = schur_complement(&m, Frame::Two).unwrap();
        assert!((s2.eval(r(0.0)).unwrap() - r(4.0 - 6.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_block_rejected() {
        let m = RatMatrix::from_constant(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 0.0]));
        assert_eq!(schur_complement(&m, Frame::One), Err(Error::SingularEliminationBlock));
    }

    #[test]
    fn split_adds_up() {
        let zg = RatMatrix::new(
            2,
            2,
            vec![
                RatFun::from_roots(1.0, &[r(-1.0)], &[]),
                RatFun::constant(r(-0.5)),
                RatFun::constant(r(0.5)),
                RatFun::from_roots(1.0, &[r(-1.0)], &[]),
            ],
        )
        .unwrap();
        let zc = RatMatrix::new(
            2,
            2,
            vec![
                RatFun::from_roots(2.0, &[], &[r(-3.0)]),
                RatFun::from_roots(0.3, &[], &[r(-2.0)]),
                RatFun::constant(r(0.1)),
                RatFun::from_roots(1.0, &[r(-5.0)], &[r(-6.0)]),
            ],
        )
        .unwrap();
        let d = loop_impedance(&zg, &zc, Frame::One).unwrap();
        for w in [0.1, 2.0, 30.0] {
            let z = C64::new(0.0, w);
            let sum = d.zc_eq.eval(z).unwrap() + d.zg_eq.eval(z).unwrap();
            assert!((d.loop_imp.eval(z).unwrap() - sum).norm() < 1e-9 * sum.norm());
        }
    }
}
