//! Smith–McMillan form of a 2×2 transfer matrix with a zero that no single
//! entry shows, and the return-ratio determinant it implies.
//!
//! cargo run --release --example smith_mcmillan

use impstab::ratfun::RatFun;
use impstab::ratmatrix::RatMatrix;
use impstab::smform;
use impstab::C64;

fn main() -> impstab::Result<()> {
    let re = |x: f64| C64::new(x, 0.0);
    let lag = |k: f64, p: f64| RatFun::from_roots(k, &[], &[re(-p)]);
    // every entry is minimum phase, yet det G = (1 - s) / ((s+1)²(s+3))
    let g = RatMatrix::new(2, 2, vec![lag(1.0, 1.0), lag(2.0, 3.0), lag(1.0, 1.0), lag(1.0, 1.0)])?;
    let sm = smform::smith_mcmillan(&g)?;
    for i in 0..sm.rank() {
        println!("diagonal {i}: zeros {:.4?}, poles {:.4?}", sm.eps[i].roots, sm.delta[i].roots);
    }
    let (zeros, poles) = smform::matrix_zeros_poles(&sm);
    println!("matrix zeros {zeros:.4?}\nmatrix poles {poles:.4?}");

    let c = RatMatrix::diag(vec![RatFun::constant(re(3.0)), RatFun::constant(re(3.0))]);
    let d = smform::det_return_ratio(&g, &c)?;
    println!("det(I + G C): zeros {:.4?}, poles {:.4?}", d.zeros(), d.poles());
    Ok(())
}
