//! Applies the logarithmic-derivative criterion to a loop impedance stored as
//! CSV, the way a measured sweep would arrive. The file is generated here from
//! a rational model with a lightly unstable pair at 62 rad/s.
//!
//! cargo run --release --example measured_response

use std::f64::consts::PI;

use impstab::frames::DomainKind;
use impstab::io;
use impstab::logderiv::{self, FreqResponse, LoopChannel};
use impstab::ratfun::RatFun;
use impstab::C64;

fn conj_pairs(v: &[(f64, f64)]) -> Vec<C64> {
    v.iter().flat_map(|&(re, im)| if im == 0.0 { vec![C64::new(re, 0.0)] } else { vec![C64::new(re, im), C64::new(re, -im)] }).collect()
}

fn main() -> impstab::Result<()> {
    let zeros = conj_pairs(&[(0.18, 62.0), (-61.0, 407.0), (-27.0, 48.0), (-35.0, 0.0)]);
    let poles = conj_pairs(&[(-102.0, 472.0), (-38.0, 93.0), (-10.0, 49.0), (-219.0, 0.0)]);
    let model = RatFun::from_roots(1.0, &zeros, &poles);
    let step_hz = 0.01;
    let step = 2.0 * PI * step_hz;
    let sweep = FreqResponse::sample("S_Z", |w| model.eval(C64::new(0.0, w)), 2.0 * PI * 1.0, step, 4000)?;

    let dir = std::env::temp_dir().join("impstab-measured");
    std::fs::create_dir_all(&dir)?;
    let csv = dir.join("loop.csv");
    io::write_response_csv(&csv, &[sweep])?;

    let imported = io::read_response_csv(&csv)?;
    let channels = imported
        .iter()
        .map(|c| Ok(LoopChannel { domain: DomainKind::Dq, response: c.to_response()?, physical: true }))
        .collect::<impstab::Result<Vec<_>>>()?;
    let (report, _, _) = logderiv::stability_from_loops(&channels, step)?;
    println!("{} -> {:?}", csv.display(), report.verdict);
    for m in &report.modes {
        println!("  omega_z {:>8.3} rad/s  alpha_z {:>+9.4}  {}", m.omega_z, m.alpha_z, if m.unstable { "unstable" } else { "stable" });
    }
    Ok(())
}
