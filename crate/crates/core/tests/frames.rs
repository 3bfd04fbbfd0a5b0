//! Frame transforms: algebraic properties over random matrices.

use impstab::frames;
use impstab::C64;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn matrix() -> impl Strategy<Value = DMatrix<C64>> {
    proptest::collection::vec(-1e3..1e3f64, 8).prop_map(|v| DMatrix::from_fn(2, 2, |i, j| C64::new(v[2 * (2 * i + j)], v[2 * (2 * i + j) + 1])))
}

proptest! {
    #[test]
    fn round_trip(h in matrix()) {
        let back = frames::sequence_to_dq(&frames::dq_to_sequence(&h));
        prop_assert!((back - &h).norm() <= 1e-12 * h.norm().max(1e-300));
    }

    #[test]
    fn similarity_keeps_determinant_and_trace(h in matrix()) {
        let p = frames::dq_to_sequence(&h);
        prop_assert!((p.determinant() - h.determinant()).norm() <= 1e-12 * h.norm().powi(2).max(1e-300));
        prop_assert!((p.trace() - h.trace()).norm() <= 1e-12 * h.norm().max(1e-300));
    }

    #[test]
    fn transform_is_linear(a in matrix(), b in matrix(), k in -10.0..10.0f64) {
        let lhs = frames::dq_to_sequence(&(&a + &b * C64::new(k, 0.0)));
        let rhs = frames::dq_to_sequence(&a) + frames::dq_to_sequence(&b) * C64::new(k, 0.0);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (a.norm() + k.abs() * b.norm()).max(1e-300));
    }
}

#[test]
fn symmetric_dq_matrix_is_diagonal_in_sequence() {
    // a rotation-invariant dq matrix [[a, -b], [b, a]] decouples the sequences
    let (a, b) = (C64::new(1.5, -0.25), C64::new(0.75, 2.0));
    let h = DMatrix::from_row_slice(2, 2, &[a, -b, b, a]);
    let p = frames::dq_to_sequence(&h);
    assert!(p[(0, 1)].norm() < 1e-14 && p[(1, 0)].norm() < 1e-14);
    let eig = [a + C64::i() * b, a - C64::i() * b];
    let diag = [p[(0, 0)], p[(1, 1)]];
    assert!(eig.iter().all(|e| diag.iter().any(|d| (d - e).norm() < 1e-14)));
}
