//! Seeded generators of random stable subsystems for cross-checks.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::statespace::StateSpace;

/// Knobs for [`random_stable`].
#[derive(Clone, Debug)]
pub struct SynthSpec {
    pub order: usize,
    pub inputs: usize,
    pub outputs: usize,
    /// Eigenvalue magnitudes are log-uniform on this range (rad/s).
    pub mag_range: (f64, f64),
    pub feedthrough: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            order: 4,
            inputs: 2,
            outputs: 2,
            mag_range: (0.5, 50.0),
            feedthrough: true,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal<R: Rng>(r: &mut R) -> f64 {
    // Box-Muller; one draw per call keeps the stream easy to reason about.
    let u1: f64 = r.gen_range(f64::EPSILON..1.0);
    let u2: f64 = r.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Random strictly stable system: block-diagonal modal form under a
/// well-conditioned similarity, with dense `B`, `C` and optional `D`.
pub fn random_stable<R: Rng>(r: &mut R, spec: &SynthSpec) -> StateSpace {
    let n = spec.order;
    let (lo, hi) = (spec.mag_range.0.ln(), spec.mag_range.1.ln());
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut k = 0;
    while k < n {
        let mag = r.gen_range(lo..hi).exp();
        if k + 1 < n && r.gen_bool(0.5) {
            // complex pair with damping ratio in [0.05, 0.9]
            let zeta: f64 = r.gen_range(0.05..0.9);
            let re = -zeta * mag;
            let im = mag * (1.0 - zeta * zeta).sqrt();
            a[(k, k)] = re;
            a[(k + 1, k + 1)] = re;
            a[(k, k + 1)] = im;
            a[(k + 1, k)] = -im;
            k += 2;
        } else {
            a[(k, k)] = -mag;
            k += 1;
        }
    }
    let mut v = DMatrix::<f64>::identity(n, n);
    for x in v.iter_mut() {
        *x += 0.3 * normal(r);
    }
    let vinv = v.clone().try_inverse().unwrap_or_else(|| DMatrix::identity(n, n));
    let (v, vinv) = if vinv.norm() * v.norm() < 1e3 {
        (v, vinv)
    } else {
        (DMatrix::identity(n, n), DMatrix::identity(n, n))
    };
    let a = &v * a * &vinv;
    let scale = (spec.mag_range.0 * spec.mag_range.1).sqrt();
    let b = DMatrix::from_fn(n, spec.inputs, |_, _| normal(r) * scale.sqrt());
    let c = DMatrix::from_fn(spec.outputs, n, |_, _| normal(r) * scale.sqrt() / n as f64);
    let d = if spec.feedthrough {
        DMatrix::from_fn(spec.outputs, spec.inputs, |_, _| 0.3 * normal(r))
    } else {
        DMatrix::zeros(spec.outputs, spec.inputs)
    };
    StateSpace::new(a, b, c, d).expect("consistent by construction")
}

/// A random pair `(Z_g, Y_c)` of 2×2 stable subsystems with orders in `1..=max_order`.
pub fn random_pair<R: Rng>(r: &mut R, max_order: usize) -> (StateSpace, StateSpace) {
    let ng = r.gen_range(1..=max_order);
    let nc = r.gen_range(1..=max_order);
    let zg = random_stable(r, &SynthSpec { order: ng, ..SynthSpec::default() });
    let yc = random_stable(r, &SynthSpec { order: nc, ..SynthSpec::default() });
    (zg, yc)
}
