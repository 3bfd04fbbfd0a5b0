//! Polynomial roots through eigenvalues of the balanced companion matrix,
//! followed by simultaneous (Aberth) polishing.

use nalgebra::DMatrix;

use super::poly::Poly;
use crate::error::{Error, Result};
use crate::C64;

/// Roots of the polynomial with ascending coefficients `coeffs`.
///
/// Trailing zero coefficients are dropped first; the result has exactly
/// `degree` entries.
pub fn roots_of(coeffs: &[C64]) -> Result<Vec<C64>> {
    let p = Poly::new(coeffs.to_vec());
    poly_roots(&p)
}

pub(crate) fn poly_roots(p: &Poly) -> Result<Vec<C64>> {
    let n = p.degree().ok_or(Error::EmptyPolynomial)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let c = p.coeffs();
    let zeros_at_origin = c.iter().take_while(|v| v.norm() == 0.0).count();
    let mut roots = vec![C64::new(0.0, 0.0); zeros_at_origin];
    let reduced = Poly::new(c[zeros_at_origin..].to_vec());
    let m = n - zeros_at_origin;
    if m == 0 {
        return Ok(roots);
    }
    if m == 1 {
        let r = reduced.coeffs();
        roots.push(-r[0] / r[1]);
        return Ok(roots);
    }

    let sigma = reduced.natural_scale();
    let scaled = reduced.scaled(sigma);
    let lead = scaled.leading();
    let monic: Vec<C64> = scaled.coeffs().iter().map(|v| v / lead).collect();
    let mut t_roots = companion_eigenvalues(&monic)?;

    let sp = Poly::new(monic);
    polish_with(&mut t_roots, |z| sp.eval_with_derivative(z), 12);
    roots.extend(t_roots.into_iter().map(|t| t * sigma));
    Ok(roots)
}

fn companion_eigenvalues(monic: &[C64]) -> Result<Vec<C64>> {
    let n = monic.len() - 1;
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -monic[i];
    }
    balance(&mut m);
    let real = m.iter().all(|v| v.im == 0.0);
    if real {
        let mr = m.map(|v| v.re);
        let schur = nalgebra::Schur::try_new(mr, 1e-15, 10_000).ok_or(Error::EigenNoConvergence)?;
        Ok(schur.complex_eigenvalues().iter().copied().collect())
    } else {
        let schur = nalgebra::Schur::try_new(m, 1e-15, 10_000).ok_or(Error::EigenNoConvergence)?;
        let ev = schur.eigenvalues().ok_or(Error::EigenNoConvergence)?;
        Ok(ev.iter().copied().collect())
    }
}

/// Parlett-Reinsch balancing with radix-2 scaling factors.
pub(crate) fn balance(m: &mut DMatrix<C64>) {
    let n = m.nrows();
    let radix = 2.0_f64;
    let sqrdx = radix * radix;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].norm();
                    r += m[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / radix;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let gi = 1.0 / f;
                for j in 0..n {
                    m[(i, j)] *= gi;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// Aberth-Ehrlich refinement of a full root set given value and derivative.
///
/// A step is kept only when it does not increase the residual at that root.
pub(crate) fn polish_with<F>(roots: &mut [C64], f: F, max_iter: usize)
where
    F: Fn(C64) -> (C64, C64),
{
    let n = roots.len();
    for _ in 0..max_iter {
        let mut moved = false;
        for i in 0..n {
            let z = roots[i];
            let (fz, dz) = f(z);
            if fz.norm() == 0.0 || dz.norm() == 0.0 || !fz.is_finite() || !dz.is_finite() {
                continue;
            }
            let ratio = fz / dz;
            let mut sum = C64::new(0.0, 0.0);
            for (j, &zj) in roots.iter().enumerate() {
                if j != i {
                    let d = z - zj;
                    if d.norm() > 0.0 {
                        sum += C64::new(1.0, 0.0) / d;
                    }
                }
            }
            let denom = C64::new(1.0, 0.0) - ratio * sum;
            let w = if denom.norm() > 0.0 { ratio / denom } else { ratio };
            let cand = z - w;
            if !cand.is_finite() {
                continue;
            }
            let (fc, _) = f(cand);
            if fc.norm() <= fz.norm() {
                if w.norm() > 4.0 * f64::EPSILON * z.norm().max(1e-300) {
                    moved = true;
                }
                roots[i] = cand;
            }
        }
        if !moved {
            break;
        }
    }
}

/// Polishes roots against a function known only by value; the derivative is
/// taken by a central difference on a step relative to the root magnitude.
pub(crate) fn polish_with_values<F>(roots: &mut [C64], scale: f64, f: F, max_iter: usize)
where
    F: Fn(C64) -> C64,
{
    let g = |z: C64| {
        let h = 1e-6 * z.norm().max(scale);
        let hc = C64::new(h, 0.0);
        let d = (f(z + hc) - f(z - hc)) / (2.0 * hc);
        (f(z), d)
    };
    polish_with(roots, g, max_iter);
}
