//! dq ↔ sequence-domain mapping of frequency responses and symmetry checks.
//!
//! The rotation is the power-invariant `T = [[1, j], [1, -j]] / √2`, so that
//! `H_pn(jω) = T · H_dq(j(ω - ω₀)) · T⁻¹` with `T⁻¹ = Tᴴ`. Sequence-domain
//! objects exist only as sampled responses.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratmatrix::RatMatrix;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Dq,
    Sequence,
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DomainKind::Dq => "dq",
            DomainKind::Sequence => "sequence",
        })
    }
}

impl std::str::FromStr for DomainKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dq" => Ok(DomainKind::Dq),
            "sequence" | "seq" | "pn" => Ok(DomainKind::Sequence),
            other => Err(Error::Config(format!("unknown domain '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DomainTag {
    pub kind: DomainKind,
    /// Fundamental (rad/s).
    pub omega0: f64,
}

impl DomainTag {
    pub fn new(kind: DomainKind, omega0: f64) -> Result<Self> {
        if !(omega0 > 0.0) || !omega0.is_finite() {
            return Err(Error::Config(format!("omega0 must be positive, got {omega0}")));
        }
        Ok(DomainTag { kind, omega0 })
    }

    /// Frequency shift from dq to this domain.
    pub fn shift(&self) -> f64 {
        match self.kind {
            DomainKind::Dq => 0.0,
            DomainKind::Sequence => self.omega0,
        }
    }
}

fn t_pair() -> (DMatrix<C64>, DMatrix<C64>) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (one, j) = (C64::new(h, 0.0), C64::new(0.0, h));
    let t = DMatrix::from_row_slice(2, 2, &[one, j, one, -j]);
    let tinv = t.adjoint();
    (t, tinv)
}

/// The rotation `T`.
pub fn rotation() -> DMatrix<C64> {
    t_pair().0
}

/// `T · H · T⁻¹` for an already shifted dq sample.
pub fn dq_to_sequence(h_dq: &DMatrix<C64>) -> DMatrix<C64> {
    let (t, tinv) = t_pair();
    t * h_dq * tinv
}

/// `T⁻¹ · H · T`.
pub fn sequence_to_dq(h_pn: &DMatrix<C64>) -> DMatrix<C64> {
    let (t, tinv) = t_pair();
    tinv * h_pn * t
}

/// `T · M(x) · T⁻¹` as a complex-coefficient rational matrix in the dq
/// variable `x`; the sequence-domain object is this evaluated at `s - jω₀`.
/// The shift moves every zero and pole by `jω₀`, so right-half-plane counts
/// can be read from the rotated matrix directly.
pub fn rotate(m: &RatMatrix) -> Result<RatMatrix> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::DimensionMismatch(format!("expected 2x2, got {}x{}", m.rows(), m.cols())));
    }
    let (t, tinv) = t_pair();
    let mut entries = Vec::with_capacity(4);
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = crate::ratfun::RatFun::zero();
            for k in 0..2 {
                for l in 0..2 {
                    let w = t[(i, k)] * tinv[(l, j)];
                    if w.norm() > 0.0 && !m.get(k, l).is_zero() {
                        acc = acc.add(&m.get(k, l).scale(w));
                    }
                }
            }
            entries.push(acc);
        }
    }
    RatMatrix::new(2, 2, entries)
}

/// Sequence-domain response at `omega` from a dq-domain evaluator.
pub fn dq_to_sequence_response<F>(h_dq: F, omega: f64, omega0: f64) -> Result<DMatrix<C64>>
where
    F: Fn(C64) -> Result<DMatrix<C64>>,
{
    Ok(dq_to_sequence(&h_dq(C64::new(0.0, omega - omega0))?))
}

/// Evaluates `m` at `jω` as seen from the given domain.
pub fn eval_in(m: &RatMatrix, omega: f64, tag: &DomainTag) -> Result<DMatrix<C64>> {
    match tag.kind {
        DomainKind::Dq => m.eval(C64::new(0.0, omega)),
        DomainKind::Sequence => dq_to_sequence_response(|s| m.eval(s), omega, tag.omega0),
    }
}

/// One sampled 2×2 response.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSample {
    pub omega: f64,
    pub value: DMatrix<C64>,
}

fn find_sample(samples: &[MatrixSample], omega: f64, scale: f64) -> Option<&MatrixSample> {
    let idx = samples.partition_point(|m| m.omega < omega - 1e-9 * scale);
    samples.get(idx).filter(|m| (m.omega - omega).abs() <= 1e-9 * scale)
}

/// Largest relative violation of the domain's conjugate symmetry.
///
/// dq: `H(-ω) = conj H(ω)`. Sequence: `H_pp(ω₀-x) = conj H_nn(ω₀+x)` and
/// `H_pn(ω₀-x) = conj H_np(ω₀+x)`. Samples must be sorted by frequency and
/// contain mirrored points; unmatched points are ignored.
pub fn symmetry_violation(samples: &[MatrixSample], tag: &DomainTag) -> f64 {
    let scale = samples.iter().map(|m| m.omega.abs()).fold(1.0, f64::max);
    let centre = tag.shift();
    let mut worst: f64 = 0.0;
    for m in samples {
        let x = m.omega - centre;
        if x < 0.0 {
            continue;
        }
        let Some(mirror) = find_sample(samples, centre - x, scale) else { continue };
        let expected = match tag.kind {
            DomainKind::Dq => m.value.map(|z| z.conj()),
            DomainKind::Sequence => {
                let v = &m.value;
                DMatrix::from_row_slice(2, 2, &[v[(1, 1)].conj(), v[(1, 0)].conj(), v[(0, 1)].conj(), v[(0, 0)].conj()])
            }
        };
        let denom = m.value.norm().max(f64::MIN_POSITIVE);
        worst = worst.max((&mirror.value - expected).norm() / denom);
    }
    worst
}

/// [`symmetry_violation`] turned into a check against `tol`.
pub fn verify_symmetries(samples: &[MatrixSample], tag: &DomainTag, tol: f64) -> Result<f64> {
    let v = symmetry_violation(samples, tag);
    if v > tol {
        Err(Error::SymmetryViolation { violation: v, tol })
    } else {
        Ok(v)
    }
}

/// Largest relative gap between `det(I+R_pn)(j(ω+ω₀))` and `det(I+R_dq)(jω)`
/// over `omegas`, with both return ratios formed in their own domain.
pub fn det_shift_identity(zg: &RatMatrix, yc: &RatMatrix, omegas: &[f64], omega0: f64) -> Result<f64> {
    let seq = DomainTag::new(DomainKind::Sequence, omega0)?;
    let dq = DomainTag::new(DomainKind::Dq, omega0)?;
    let mut worst: f64 = 0.0;
    for &w in omegas {
        let det_of = |tag: &DomainTag, at: f64| -> Result<C64> {
            let r = eval_in(zg, at, tag)? * eval_in(yc, at, tag)?;
            Ok((DMatrix::identity(2, 2) + r).determinant())
        };
        let a = det_of(&seq, w + omega0)?;
        let b = det_of(&dq, w)?;
        worst = worst.max((a - b).norm() / b.norm().max(1.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_stays_identity() {
        let i = DMatrix::<C64>::identity(2, 2);
        assert!((dq_to_sequence(&i) - &i).norm() < 1e-15);
    }

    #[test]
    fn pure_coupling_diagonalizes() {
        let x = 2.5;
        let h = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-x, 0.0), c(x, 0.0), c(0.0, 0.0)]);
        let p = dq_to_sequence(&h);
        let want = DMatrix::from_row_slice(2, 2, &[c(0.0, x), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -x)]);
        assert!((p - want).norm() < 1e-14);
    }

    #[test]
    fn round_trip() {
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0, 2.0), c(-0.3, 0.7), c(4.0, -1.0), c(0.2, 0.0)]);
        let back = sequence_to_dq(&dq_to_sequence(&h));
        assert!((back - &h).norm() < 1e-12 * h.norm());
    }

    #[test]
    fn corrupted_sample_is_caught() {
        let tag = DomainTag::new(DomainKind::Dq, 100.0).unwrap();
        let h = |w: f64| DMatrix::from_row_slice(2, 2, &[c(1.0, w), c(0.5, -w), c(0.1, 0.0), c(2.0, 3.0 * w)]);
        let mut s: Vec<MatrixSample> = [-2.0, -1.0, 0.0, 1.0, 2.0]
            .iter()
            .map(|&w| MatrixSample { omega: w, value: h(w) })
            .collect();
        assert!(verify_symmetries(&s, &tag, 1e-6).unwrap() < 1e-15);
        s[0].value[(0, 0)] += c(0.0, 0.1);
        assert!(matches!(verify_symmetries(&s, &tag, 1e-6), Err(Error::SymmetryViolation { .. })));
    }
}
