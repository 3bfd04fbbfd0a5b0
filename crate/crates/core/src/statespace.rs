//! Linear time-invariant state-space models, exact transfer-matrix
//! extraction and the closed-loop eigenvalue oracle.
//!
//! Port convention: the converter subsystem is an admittance (terminal voltage
//! in, absorbed current out). The grid subsystem is an impedance driven by the
//! current that flows from the converter into the grid, so `u_g = -y_c` and
//! `u_c = y_g`. The characteristic return difference is `I + Z_g Y_c`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ratfun::{polish_with_values, FactoredPoly, Poly, RatFun, TOL_CANCEL};
use crate::ratmatrix::RatMatrix;
use crate::C64;

/// `(A, B, C, D)` with channel labels.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub input_labels: Vec<String>,
    pub output_labels: Vec<String>,
}

/// Result of the open-loop stability gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum OpenLoopStatus {
    Stable,
    Marginal,
    Unstable,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!("A is {}x{}", n, a.ncols())));
        }
        let (m, p) = (b.ncols(), c.nrows());
        if b.nrows() != n || c.ncols() != n || d.nrows() != p || d.ncols() != m {
            return Err(Error::DimensionMismatch(format!(
                "A {n}x{n}, B {}x{}, C {}x{}, D {}x{}",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        Ok(StateSpace {
            a,
            b,
            c,
            d,
            input_labels: (0..m).map(|i| format!("u{i}")).collect(),
            output_labels: (0..p).map(|i| format!("y{i}")).collect(),
        })
    }

    /// Static gain `y = D u` with no states.
    pub fn static_gain(d: DMatrix<f64>) -> Self {
        let (p, m) = d.shape();
        StateSpace::new(DMatrix::zeros(0, 0), DMatrix::zeros(0, m), DMatrix::zeros(p, 0), d)
            .expect("static gain is always consistent")
    }

    pub fn with_labels(mut self, inputs: &[&str], outputs: &[&str]) -> Result<Self> {
        if inputs.len() != self.n_inputs() || outputs.len() != self.n_outputs() {
            return Err(Error::DimensionMismatch("label count".into()));
        }
        self.input_labels = inputs.iter().map(|s| s.to_string()).collect();
        self.output_labels = outputs.iter().map(|s| s.to_string()).collect();
        Ok(self)
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Keeps the listed inputs and outputs (by index), in the given order.
    pub fn select(&self, inputs: &[usize], outputs: &[usize]) -> Result<Self> {
        let (m, p) = (self.n_inputs(), self.n_outputs());
        if inputs.iter().any(|&i| i >= m) || outputs.iter().any(|&o| o >= p) {
            return Err(Error::DimensionMismatch("channel index out of range".into()));
        }
        let b = self.b.select_columns(inputs);
        let c = self.c.select_rows(outputs);
        let d = self.d.select_rows(outputs).select_columns(inputs);
        let mut ss = StateSpace::new(self.a.clone(), b, c, d)?;
        ss.input_labels = inputs.iter().map(|&i| self.input_labels[i].clone()).collect();
        ss.output_labels = outputs.iter().map(|&o| self.output_labels[o].clone()).collect();
        Ok(ss)
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        eigenvalues(&self.a)
    }

    /// Strict open-loop stability with margin `Re(λ) < -margin·‖A‖`;
    /// eigenvalues inside the margin band give `Marginal`.
    pub fn open_loop_status(&self, margin: f64) -> Result<OpenLoopStatus> {
        if self.n_states() == 0 {
            return Ok(OpenLoopStatus::Stable);
        }
        let band = margin * self.a.norm().max(f64::MIN_POSITIVE);
        let ev = self.eigenvalues()?;
        if ev.iter().any(|l| l.re > band) {
            Ok(OpenLoopStatus::Unstable)
        } else if ev.iter().any(|l| l.re >= -band) {
            Ok(OpenLoopStatus::Marginal)
        } else {
            Ok(OpenLoopStatus::Stable)
        }
    }

    pub fn open_loop_stable(&self) -> Result<bool> {
        Ok(self.open_loop_status(1e-9)? == OpenLoopStatus::Stable)
    }

    /// `C (sI - A)^{-1} B + D` by a direct complex solve.
    pub fn frequency_response(&self, s: C64) -> Result<DMatrix<C64>> {
        let n = self.n_states();
        let d = self.d.map(|v| C64::new(v, 0.0));
        if n == 0 {
            return Ok(d);
        }
        let a = self.a.map(|v| C64::new(v, 0.0));
        let m = DMatrix::<C64>::identity(n, n) * s - a;
        let b = self.b.map(|v| C64::new(v, 0.0));
        let x = m
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::PoleHit(format!("{s}")))?;
        Ok(self.c.map(|v| C64::new(v, 0.0)) * x + d)
    }

    /// Forward simulation with classical RK4 for a piecewise-constant input.
    pub fn simulate(&self, x0: &DVector<f64>, u: impl Fn(f64) -> DVector<f64>, dt: f64, steps: usize) -> Vec<DVector<f64>> {
        let f = |t: f64, x: &DVector<f64>| &self.a * x + &self.b * u(t);
        let mut x = x0.clone();
        let mut out = Vec::with_capacity(steps + 1);
        out.push(&self.c * &x + &self.d * u(0.0));
        for k in 0..steps {
            let t = k as f64 * dt;
            let k1 = f(t, &x);
            let k2 = f(t + 0.5 * dt, &(&x + &k1 * (0.5 * dt)));
            let k3 = f(t + 0.5 * dt, &(&x + &k2 * (0.5 * dt)));
            let k4 = f(t + dt, &(&x + &k3 * dt));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            out.push(&self.c * &x + &self.d * u(t + dt));
        }
        out
    }
}

/// Eigenvalues of a real square matrix through the real Schur form.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<C64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 100_000).ok_or(Error::EigenNoConvergence)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

fn geometric_scale(ev: &[C64]) -> f64 {
    let mags: Vec<f64> = ev.iter().map(|l| l.norm()).filter(|m| *m > 0.0).collect();
    if mags.is_empty() {
        return 1.0;
    }
    (mags.iter().map(|m| m.ln()).sum::<f64>() / mags.len() as f64).exp()
}

/// Orthonormal basis of the Krylov space `span{B, AB, A²B, …}`, built one
/// vector at a time with two passes of Gram–Schmidt. A vector is dependent
/// when projection leaves less than `tol` of its norm.
fn krylov_basis(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let n = a.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut queue: std::collections::VecDeque<DVector<f64>> = b.column_iter().map(|c| c.into_owned()).collect();
    while let Some(v) = queue.pop_front() {
        if basis.len() == n {
            break;
        }
        let norm = v.norm();
        if norm == 0.0 {
            continue;
        }
        let mut w = v;
        for _ in 0..2 {
            for q in &basis {
                let h = q.dot(&w);
                w -= q * h;
            }
        }
        let r = w.norm();
        if r <= tol * norm {
            continue;
        }
        let q = w / r;
        queue.push_back(a * &q);
        basis.push(q);
    }
    basis
}

fn project(ss: &StateSpace, basis: &[DVector<f64>]) -> StateSpace {
    let v = DMatrix::from_columns(basis);
    let vt = v.transpose();
    StateSpace {
        a: &vt * &ss.a * &v,
        b: &vt * &ss.b,
        c: &ss.c * &v,
        d: ss.d.clone(),
        input_labels: ss.input_labels.clone(),
        output_labels: ss.output_labels.clone(),
    }
}

/// Removes uncontrollable and then unobservable states. A model that is
/// already minimal comes back unchanged, bit for bit.
pub fn minimal_realization(ss: &StateSpace) -> StateSpace {
    const TOL: f64 = 1e-10;
    let n = ss.n_states();
    if n == 0 {
        return ss.clone();
    }
    let ctrb = krylov_basis(&ss.a, &ss.b, TOL);
    let reduced = if ctrb.len() < n { project(ss, &ctrb) } else { ss.clone() };
    let m = reduced.n_states();
    if m == 0 {
        return reduced;
    }
    let obsv = krylov_basis(&reduced.a.transpose(), &reduced.c.transpose(), TOL);
    if obsv.len() < m {
        project(&reduced, &obsv)
    } else {
        reduced
    }
}

/// Exact transfer matrix by the Leverrier–Faddeev recursion.
///
/// Uncontrollable and unobservable states are removed first: their poles
/// would otherwise have to cancel against numerator roots, which fails for
/// repeated poles such as stacked integrators.
///
/// The recursion runs on `A / σ` (σ the geometric mean eigenvalue magnitude)
/// so coefficients stay balanced. The shared denominator is the characteristic
/// polynomial, factored as the eigenvalues of `A`; numerator roots are refined
/// against a direct complex solve.
pub fn transfer_matrix(ss: &StateSpace) -> Result<RatMatrix> {
    let ss = &minimal_realization(ss);
    let n = ss.n_states();
    let (p, m) = (ss.n_outputs(), ss.n_inputs());
    if n == 0 {
        let entries = ss
            .d
            .iter()
            .copied()
            .collect::<Vec<_>>();
        // nalgebra is column-major
        let mut e = Vec::with_capacity(p * m);
        for i in 0..p {
            for j in 0..m {
                e.push(RatFun::constant(C64::new(entries[i + j * p], 0.0)));
            }
        }
        return RatMatrix::new(p, m, e);
    }
    let ev = eigenvalues(&ss.a)?;
    let sigma = geometric_scale(&ev);
    let at = &ss.a / sigma;

    // M_k (k = 1..n), char-poly coefficients c_0..c_n of the scaled variable
    let mut ms: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut mk = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        if k > 1 {
            mk = &at * &mk + DMatrix::<f64>::identity(n, n) * c[n - k + 1];
        }
        let am = &at * &mk;
        c[n - k] = -am.trace() / k as f64;
        ms.push(mk.clone());
    }
    let char_t = Poly::from_real(&c);

    let babs = ss.b.abs();
    let cabs = ss.c.abs();
    let den = FactoredPoly::new(C64::new(1.0, 0.0), ev.clone(), true);

    let mut entries = Vec::with_capacity(p * m);
    for i in 0..p {
        for j in 0..m {
            // numerator in t: sum_k (C M_k B)_ij t^{n-k} + σ D_ij p(t)
            let mut coef = vec![0.0; n + 1];
            let mut scale = vec![0.0; n + 1];
            for (k, mk) in ms.iter().enumerate() {
                let deg = n - 1 - k;
                let row = ss.c.row(i);
                let v = (row * mk * ss.b.column(j))[(0, 0)];
                let r = (cabs.row(i) * mk.abs() * babs.column(j))[(0, 0)];
                coef[deg] += v;
                scale[deg] += r;
            }
            let dij = ss.d[(i, j)];
            for k in 0..=n {
                coef[k] += sigma * dij * c[k];
                scale[k] += (sigma * dij * c[k]).abs();
            }
            // trim leading coefficients that are rounding residue
            let refmag = scale.iter().cloned().fold(0.0, f64::max);
            let mut len = n + 1;
            while len > 0 && coef[len - 1].abs() <= 1e-11 * scale[len - 1].max(1e-300) {
                len -= 1;
            }
            if len == 0 || refmag == 0.0 {
                entries.push(RatFun::zero());
                continue;
            }
            coef.truncate(len);
            // G = N_t(t) σ^{n-1} / χ(s), with t = s/σ
            let mut f = sigma.powi(n as i32 - 1);
            let num_s: Vec<C64> = coef
                .iter()
                .map(|&v| {
                    let out = C64::new(v * f, 0.0);
                    f /= sigma;
                    out
                })
                .collect();
            let num_poly = Poly::new(num_s);
            let mut num = FactoredPoly::from_poly(&num_poly)?;
            let evd = ev.clone();
            let eval = |s: C64| -> C64 {
                match ss.frequency_response(s) {
                    Ok(g) => evd.iter().fold(g[(i, j)], |acc, l| acc * (s - l)),
                    Err(_) => num_poly.eval(s),
                }
            };
            polish_with_values(&mut num.roots, sigma, eval, 6);
            num.repair_conjugates();
            let _ = &char_t;
            entries.push(RatFun { num, den: den.clone() }.cancel(TOL_CANCEL));
        }
    }
    RatMatrix::with_common_den(p, m, entries, den)
}

/// Interconnects a grid impedance (current in, voltage out) with a converter
/// admittance (voltage in, current out). The state is `[x_g; x_c]`.
pub fn close_loop(zg: &StateSpace, yc: &StateSpace) -> Result<StateSpace> {
    let q = yc.n_outputs();
    if zg.n_inputs() != q || zg.n_outputs() != yc.n_inputs() {
        return Err(Error::DimensionMismatch(format!(
            "grid {}->{} vs converter {}->{}",
            zg.n_inputs(),
            zg.n_outputs(),
            yc.n_inputs(),
            yc.n_outputs()
        )));
    }
    // y_c = C_c x_c + D_c (C_g x_g - D_g y_c)  =>  (I + D_c D_g) y_c = C_c x_c + D_c C_g x_g
    let loop_m = DMatrix::<f64>::identity(q, q) + &yc.d * &zg.d;
    let lu = loop_m.clone().lu();
    if loop_m.nrows() > 0 && lu.determinant().abs() <= 1e-12 * loop_m.norm().max(1.0).powi(q as i32) {
        return Err(Error::AlgebraicLoop("I + D_c D_g is singular".into()));
    }
    let inv = lu.try_inverse().ok_or_else(|| Error::AlgebraicLoop("I + D_c D_g is singular".into()))?;
    let (ng, nc) = (zg.n_states(), yc.n_states());
    // y_c = Kc x_c + Kg x_g
    let kc = &inv * &yc.c;
    let kg = &inv * &yc.d * &zg.c;
    // u_g = -y_c ; u_c = y_g = C_g x_g + D_g u_g
    let n = ng + nc;
    let mut a = DMatrix::<f64>::zeros(n, n);
    // x_g' = A_g x_g - B_g y_c
    a.view_mut((0, 0), (ng, ng)).copy_from(&(&zg.a - &zg.b * &kg));
    a.view_mut((0, ng), (ng, nc)).copy_from(&(-&zg.b * &kc));
    // x_c' = A_c x_c + B_c (C_g x_g - D_g y_c)
    let ucg = &zg.c - &zg.d * &kg;
    let ucc = -&zg.d * &kc;
    a.view_mut((ng, 0), (nc, ng)).copy_from(&(&yc.b * ucg));
    a.view_mut((ng, ng), (nc, nc)).copy_from(&(&yc.a + &yc.b * ucc));
    StateSpace::new(a, DMatrix::zeros(n, 0), DMatrix::zeros(0, n), DMatrix::zeros(0, 0))
}

/// Interconnects a converter admittance with a first-order grid impedance
/// `Z_g(s) = Z0 + s Z1` (an RL grid is improper, so it has no state-space form
/// in impedance orientation). Requires strictly proper converter output.
pub fn close_loop_series(yc: &StateSpace, z0: &DMatrix<f64>, z1: &DMatrix<f64>) -> Result<StateSpace> {
    let q = yc.n_outputs();
    if yc.n_inputs() != q || z0.shape() != (q, q) || z1.shape() != (q, q) {
        return Err(Error::DimensionMismatch("series grid must be square and match the converter".into()));
    }
    if yc.d.iter().any(|v| *v != 0.0) {
        return Err(Error::AlgebraicLoop("inductive grid with converter feedthrough".into()));
    }
    // v = Z0 i_g + Z1 d/dt i_g, i_g = -C x  =>  v = -Z0 C x - Z1 C (A x + B v)
    let n = yc.n_states();
    let m = DMatrix::<f64>::identity(q, q) + z1 * &yc.c * &yc.b;
    let rhs = -(z0 * &yc.c + z1 * &yc.c * &yc.a);
    let g = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::AlgebraicLoop("I + Z1 C B is singular".into()))?;
    let a = &yc.a + &yc.b * g;
    StateSpace::new(a, DMatrix::zeros(n, 0), DMatrix::zeros(0, n), DMatrix::zeros(0, 0))
}
