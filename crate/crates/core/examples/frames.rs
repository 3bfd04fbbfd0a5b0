//! The converter admittance in the dq frame and in the sequence domain, and
//! the fundamental shift that relates their determinants.
//!
//! cargo run --release --example frames

use std::f64::consts::PI;

use impstab::analysis::Plant;
use impstab::config::Scenario;
use impstab::frames::{self, DomainKind, DomainTag};

fn main() -> impstab::Result<()> {
    let plant = Plant::build(&Scenario::from_toml("")?)?;
    let dq = DomainTag::new(DomainKind::Dq, plant.omega0)?;
    let seq = DomainTag::new(DomainKind::Sequence, plant.omega0)?;
    let f = 20.0;
    let w = 2.0 * PI * f;
    let y_dq = frames::eval_in(&plant.yc, w, &dq)?;
    let y_pn = frames::eval_in(&plant.yc, w + plant.omega0, &seq)?;
    println!("{f} Hz in dq, {} Hz in sequence", f + plant.omega0 / (2.0 * PI));
    println!("Y_dq = {y_dq:.4}");
    println!("Y_pn = {y_pn:.4}");
    let omegas: Vec<f64> = (1..200).map(|k| 2.0 * PI * 0.5 * k as f64).collect();
    let dev = frames::det_shift_identity(&plant.zg, &plant.yc, &omegas, plant.omega0)?;
    println!("largest deviation of det(I + Z Y) between frames: {dev:.2e}");
    Ok(())
}
