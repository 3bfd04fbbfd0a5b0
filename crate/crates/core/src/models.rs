//! Reference systems: a representative grid-following VSC, an RL grid, the
//! 3×3 transfer immittances of an AC-DC converter, and two-terminal DC links.

use nalgebra::{DMatrix, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::criteria::{rhp_count, winding_number, FreqGrid, StabilityReport, Verdict, Criterion};
use crate::error::{Error, Result};
use crate::frames::DomainKind;
use crate::ratfun::{FactoredPoly, RatFun};
use crate::ratmatrix::RatMatrix;
use crate::statespace::{transfer_matrix, StateSpace};
use crate::C64;

/// Parameters of the representative two-level VSC in SI units.
///
/// The defaults form the canonical scenario; they are representative, not
/// taken from any particular hardware.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VscParams {
    /// Grid fundamental (rad/s).
    pub omega0: f64,
    /// Terminal voltage amplitude in the dq frame (V).
    pub v0: f64,
    /// Exported active power (W).
    pub p0: f64,
    /// DC-bus voltage (V).
    pub vdc0: f64,
    pub lf: f64,
    pub rf: f64,
    pub c_dc: f64,
    pub kp_i: f64,
    pub ki_i: f64,
    pub kp_v: f64,
    pub ki_v: f64,
    pub kp_pll: f64,
    pub ki_pll: f64,
    /// Terminal-voltage feed-forward gain in the current loop.
    pub kff: f64,
    /// q-axis current set-point (A).
    pub iq0: f64,
}

impl Default for VscParams {
    fn default() -> Self {
        VscParams {
            omega0: 100.0 * std::f64::consts::PI,
            v0: 311.0,
            p0: 200e3,
            vdc0: 800.0,
            lf: 0.5e-3,
            rf: 0.01,
            c_dc: 10e-3,
            kp_i: 0.5,
            ki_i: 50.0,
            kp_v: 2.0,
            ki_v: 40.0,
            kp_pll: 0.1,
            ki_pll: 30.0,
            kff: 0.0,
            iq0: 0.0,
        }
    }
}

/// Linearization point of the converter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub id0: f64,
    pub iq0: f64,
    /// Converter-side voltage `E₀ = V₀ + R_f I₀ + ω₀L_f J I₀`.
    pub ed0: f64,
    pub eq0: f64,
}

impl VscParams {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("omega0", self.omega0),
            ("v0", self.v0),
            ("vdc0", self.vdc0),
            ("lf", self.lf),
            ("c_dc", self.c_dc),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("vsc.{name} must be positive, got {v}")));
            }
        }
        let nonneg = [
            ("rf", self.rf),
            ("kp_i", self.kp_i),
            ("ki_i", self.ki_i),
            ("kp_v", self.kp_v),
            ("ki_v", self.ki_v),
            ("kp_pll", self.kp_pll),
            ("ki_pll", self.ki_pll),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("vsc.{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Solves `P₀ = 1.5 (V₀ I_d + R_f |I|²)` for `I_d`.
    pub fn operating_point(&self) -> Result<OperatingPoint> {
        self.validate()?;
        let (a, b, c) = (1.5 * self.rf, 1.5 * self.v0, 1.5 * self.rf * self.iq0 * self.iq0 - self.p0);
        let id0 = if a > 0.0 {
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                return Err(Error::OperatingPointInfeasible(format!("no real d-axis current for P0 = {}", self.p0)));
            }
            (-b + disc.sqrt()) / (2.0 * a)
        } else {
            -c / b
        };
        let x = self.omega0 * self.lf;
        Ok(OperatingPoint {
            id0,
            iq0: self.iq0,
            ed0: self.v0 + self.rf * id0 - x * self.iq0,
            eq0: self.rf * self.iq0 + x * id0,
        })
    }
}

const NX: usize = 8;
const NZ: usize = NX + 3;
type Lin = SVector<f64, NZ>;

fn unit(i: usize) -> Lin {
    let mut v = Lin::zeros();
    v[i] = 1.0;
    v
}

/// Linearized dq model of the VSC with DC-bus voltage, AC current and PLL
/// control.
///
/// States: `i_d, i_q, v_dc, ∫e_d, ∫e_q, ∫v_dc, θ, x_pll`. Inputs: terminal
/// voltage `v_d, v_q` and the DC current `i_dc` fed into the bus. Outputs:
/// `-i_d, -i_q` (admittance orientation: current drawn from the grid node)
/// and `v_dc`.
pub fn build_vsc_full(p: &VscParams) -> Result<StateSpace> {
    let op = p.operating_point()?;
    let (id, iq, vdc, xid, xiq, xv, th, xp) = (unit(0), unit(1), unit(2), unit(3), unit(4), unit(5), unit(6), unit(7));
    let (vd, vq, idc) = (unit(8), unit(9), unit(10));
    let x = p.omega0 * p.lf;
    // small-angle frame error: J·V₀ = (0, V₀), J·I₀ = (-I_q0, I_d0), J·E₀ = (-E_q0, E_d0)
    let vcd = vd;
    let vcq = vq - th * p.v0;
    let icd = id + th * op.iq0;
    let icq = iq - th * op.id0;
    let ird = vdc * p.kp_v + xv;
    let (errd, errq) = (ird - icd, -icq);
    let ecd = errd * p.kp_i + xid - icq * x + vcd * p.kff;
    let ecq = errq * p.kp_i + xiq + icd * x + vcq * p.kff;
    let ed = ecd - th * op.eq0;
    let eq = ecq + th * op.ed0;
    let did = (ed - vd - id * p.rf + iq * x) / p.lf;
    let diq = (eq - vq - iq * p.rf - id * x) / p.lf;
    let dp = (id * op.ed0 + iq * op.eq0 + ed * op.id0 + eq * op.iq0) * 1.5;
    let dvdc = (idc - dp / p.vdc0 + vdc * (p.p0 / (p.vdc0 * p.vdc0))) / p.c_dc;
    let rows = [did, diq, dvdc, errd * p.ki_i, errq * p.ki_i, vdc * p.ki_v, vcq * p.kp_pll + xp, vcq * p.ki_pll];
    let m = SMatrix::<f64, NX, NZ>::from_fn(|i, j| rows[i][j]);
    let a = DMatrix::from_fn(NX, NX, |i, j| m[(i, j)]);
    let b = DMatrix::from_fn(NX, 3, |i, j| m[(i, NX + j)]);
    let mut c = DMatrix::zeros(3, NX);
    c[(0, 0)] = -1.0;
    c[(1, 1)] = -1.0;
    c[(2, 2)] = 1.0;
    StateSpace::new(a, b, c, DMatrix::zeros(3, 3))?.with_labels(&["v_d", "v_q", "i_dc"], &["-i_d", "-i_q", "v_dc"])
}

/// AC-side admittance model `Y_c`: inputs `v_d, v_q`, outputs `-i_d, -i_q`.
pub fn build_vsc(p: &VscParams) -> Result<StateSpace> {
    build_vsc_full(p)?.select(&[0, 1], &[0, 1])
}

/// RL grid seen from the converter terminal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    pub lg: f64,
    pub rg: f64,
    pub omega0: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams { lg: 0.9e-3, rg: 0.0, omega0: 100.0 * std::f64::consts::PI }
    }
}

impl GridParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lg >= 0.0) || !(self.rg >= 0.0) || (self.lg == 0.0 && self.rg == 0.0) {
            return Err(Error::Config(format!("grid needs lg >= 0, rg >= 0, not both zero (lg={}, rg={})", self.lg, self.rg)));
        }
        if !(self.omega0 > 0.0) {
            return Err(Error::Config("grid.omega0 must be positive".into()));
        }
        Ok(())
    }

    /// `Z = Z₀ + s Z₁` with `Z₀ = R_g I + ω₀L_g J`, `Z₁ = L_g I`.
    pub fn split(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let x = self.omega0 * self.lg;
        let z0 = DMatrix::from_row_slice(2, 2, &[self.rg, -x, x, self.rg]);
        let z1 = DMatrix::identity(2, 2) * self.lg;
        (z0, z1)
    }
}

/// `Z_dq = [[R + sL, -ω₀L], [ω₀L, R + sL]]`.
pub fn build_rl_grid(g: &GridParams) -> Result<RatMatrix> {
    g.validate()?;
    let diag = if g.lg > 0.0 {
        RatFun::from_roots(g.lg, &[C64::new(-g.rg / g.lg, 0.0)], &[])
    } else {
        RatFun::constant(C64::new(g.rg, 0.0))
    };
    let x = C64::new(g.omega0 * g.lg, 0.0);
    RatMatrix::new(2, 2, vec![diag.clone(), RatFun::constant(-x), RatFun::constant(x), diag])
}

/// Two-state admittance realization of the RL grid (needs `L_g > 0`):
/// `L di/dt = v - R i - ω₀L J i`.
pub fn rl_grid_admittance(g: &GridParams) -> Result<StateSpace> {
    g.validate()?;
    if g.lg <= 0.0 {
        return Err(Error::Config("admittance realization needs lg > 0".into()));
    }
    let (z0, _) = g.split();
    let a = -z0 / g.lg;
    let b = DMatrix::identity(2, 2) / g.lg;
    StateSpace::new(a, b, DMatrix::identity(2, 2), DMatrix::zeros(2, 2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImmittanceMode {
    /// Inputs `(v¹, v², v⁰)`, outputs `(i¹, i², i⁰)`.
    PowerControl,
    /// Inputs `(v¹, v², i⁰)`, outputs `(i¹, i², v⁰)`.
    DcVoltageControl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Unit {
    Siemens,
    Ohm,
    Dimensionless,
}

/// 3×3 transfer immittance of an AC-DC converter.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferImmittance {
    pub matrix: RatMatrix,
    pub mode: ImmittanceMode,
    pub units: [[Unit; 3]; 3],
}

fn units_for(mode: ImmittanceMode) -> [[Unit; 3]; 3] {
    use Unit::*;
    match mode {
        ImmittanceMode::PowerControl => [[Siemens; 3]; 3],
        ImmittanceMode::DcVoltageControl => [
            [Siemens, Siemens, Dimensionless],
            [Siemens, Siemens, Dimensionless],
            [Dimensionless, Dimensionless, Ohm],
        ],
    }
}

/// Exchanges input and output of the last port:
/// `[[G₁₁ - G₁₂G₂₂⁻¹G₂₁, G₁₂G₂₂⁻¹], [-G₂₂⁻¹G₂₁, G₂₂⁻¹]]`.
pub fn partial_inversion_last(g: &RatMatrix) -> Result<RatMatrix> {
    let n = g.rows();
    if n < 2 || !g.is_square() {
        return Err(Error::DimensionMismatch("partial inversion needs a square matrix".into()));
    }
    let l = n - 1;
    let g22 = g.get(l, l);
    if g22.is_zero() {
        return Err(Error::SingularEliminationBlock);
    }
    let inv = g22.inv()?;
    let mut e = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let v = match (i == l, j == l) {
                (false, false) => g.get(i, j).sub(&g.get(i, l).mul(&inv).mul(g.get(l, j))),
                (false, true) => g.get(i, l).mul(&inv),
                (true, false) => inv.mul(g.get(l, j)).neg(),
                (true, true) => inv.clone(),
            };
            e.push(v);
        }
    }
    RatMatrix::new(n, n, e)
}

/// Transfer immittance of a model whose third port is the DC bus with the DC
/// voltage as a state (the form [`build_vsc_full`] returns). The power-control
/// form is obtained by exchanging input and output of that port.
pub fn build_transfer_immittance(ss: &StateSpace, mode: ImmittanceMode) -> Result<TransferImmittance> {
    if ss.n_inputs() < 3 || ss.n_outputs() < 3 {
        return Err(Error::PortNotAvailable(format!(
            "need AC (2) and DC (1) ports, model has {} inputs and {} outputs",
            ss.n_inputs(),
            ss.n_outputs()
        )));
    }
    let native = transfer_matrix(&ss.select(&[0, 1, 2], &[0, 1, 2])?)?;
    let matrix = match mode {
        ImmittanceMode::DcVoltageControl => native,
        ImmittanceMode::PowerControl => partial_inversion_last(&native)?,
    };
    Ok(TransferImmittance { matrix, mode, units: units_for(mode) })
}

/// Back-to-back or point-to-point DC link in impedance form.
#[derive(Clone, Debug, PartialEq)]
pub struct P2pSystem {
    /// `diag(Z_r, Y_s)` or `diag(Z_r, Z_s)`.
    pub z_con: RatMatrix,
    pub y_g: RatMatrix,
    /// `det(I + Z_con Y_g)`.
    pub det: RatFun,
}

/// Rectifier impedance `Z_r`, inverter admittance `Y_s` and cable impedance
/// in series: `det(I + Z_con Y_g) = 1 + Y_s (Z_cable + Z_r)`.
pub fn build_p2p_dc(zr: &RatFun, ys: &RatFun, zcable: &RatFun) -> Result<P2pSystem> {
    let z_con = RatMatrix::diag(vec![zr.clone(), ys.clone()]);
    let y_g = RatMatrix::new(
        2,
        2,
        vec![RatFun::zero(), RatFun::constant(C64::new(-1.0, 0.0)), RatFun::one(), zcable.clone()],
    )?;
    let det = RatMatrix::identity(2).add(&z_con.mul(&y_g)?)?.det()?;
    Ok(P2pSystem { z_con, y_g, det })
}

/// Admittance-form link with the cable as a shunt admittance.
#[derive(Clone, Debug, PartialEq)]
pub struct P2pAdmittanceForm {
    pub system: P2pSystem,
    /// Right-half-plane poles of `Z_s`.
    pub zs_rhp_poles: Vec<C64>,
}

/// `det(I + Z_con Y_g) = 1 + Y_cable (Z_s + Z_r)` with `Z_con = diag(Z_r, Z_s)`.
pub fn build_p2p_admittance_form(zr: &RatFun, zs: &RatFun, ycable: &RatFun) -> Result<P2pAdmittanceForm> {
    let z_con = RatMatrix::diag(vec![zr.clone(), zs.clone()]);
    let y_g = RatMatrix::new(2, 2, vec![ycable.clone(), ycable.neg(), ycable.neg(), ycable.clone()])?;
    let det = RatMatrix::identity(2).add(&z_con.mul(&y_g)?)?.det()?;
    let zs_rhp_poles = crate::schur::rhp(zs.poles(), crate::schur::RHP_BAND);
    Ok(P2pAdmittanceForm { system: P2pSystem { z_con, y_g, det }, zs_rhp_poles })
}

impl P2pAdmittanceForm {
    /// Encirclement verdict on the determinant. Without a supplied pole count
    /// a nonzero census of `Z_s` leaves the verdict Indeterminate; with one,
    /// `Z = N + P`.
    pub fn verdict(&self, grid: &FreqGrid, pole_count: Option<usize>) -> Result<StabilityReport> {
        let det = &self.system.det;
        let roots: Vec<C64> = det.zeros().iter().chain(det.poles()).copied().collect();
        let vg = grid.union(&FreqGrid::covering(&roots, crate::criteria::PER_DECADE));
        let scale = crate::ratfun::geometric_mean(&roots.iter().map(|r| r.norm()).filter(|m| *m > 1e-12).collect::<Vec<_>>());
        let locus = crate::criteria::sweep(|w| det.eval(C64::new(0.0, w)), &vg.nonnegative())
            .mirror_conjugate()
            .closed_with(det.relative_degree(), scale);
        let mut report = StabilityReport::new(Criterion::Determinant, DomainKind::Dq);
        report.loci.push("det(1+Z_con Y_g)".into());
        report.grid_points = locus.len();
        let w = match winding_number(&locus, C64::new(0.0, 0.0)) {
            Ok(w) => w,
            Err(e) => {
                report.reasons.push(e.to_string());
                return Ok(report);
            }
        };
        report.encirclements = Some(w);
        let census = self.zs_rhp_poles.len();
        let p = match pole_count {
            Some(p) => p,
            None if census > 0 => {
                report.verdict = Verdict::Indeterminate;
                report.rhp_open_loop_poles = None;
                report.reasons.push(format!("unknown P: Z_s has {census} right-half-plane poles and no pole count was supplied"));
                return Ok(report);
            }
            None => 0,
        };
        report.rhp_open_loop_poles = Some(p);
        let z = -w + p as i64;
        report.rhp_closed_loop_zeros = Some(z);
        let found = rhp_count(det.zeros());
        report.verdict = if z < 0 || z as usize != found {
            report.reasons.push(format!("inconsistent N: Z = {z}, factored census {found}"));
            Verdict::Indeterminate
        } else if z == 0 {
            Verdict::Stable
        } else {
            Verdict::Unstable
        };
        Ok(report)
    }
}

/// `Y_c` closed-form for the frozen-PLL, frozen-DC-loop reduction:
/// `s / (L_f s² + (R_f + k_p) s + k_i)` on the diagonal.
pub fn reduced_current_loop_admittance(p: &VscParams) -> RatFun {
    let den = crate::ratfun::Poly::from_real(&[p.ki_i, p.rf + p.kp_i, p.lf]);
    let den = FactoredPoly::from_poly(&den).expect("nonzero quadratic");
    RatFun::new(FactoredPoly::new(C64::new(1.0, 0.0), vec![C64::new(0.0, 0.0)], true), den).expect("nonzero den")
}
