//! Runs every criterion on the canonical converter at two grid inductances,
//! next to the closed-loop eigenvalue oracle.
//!
//! cargo run --release --example analyze_canonical

use impstab::analysis;
use impstab::config::{RunConfig, Scenario};
use impstab::criteria::Criterion;

fn main() -> impstab::Result<()> {
    let base = Scenario::from_toml("")?;
    for lg in [0.9e-3, 1.2e-3] {
        let mut s = base.clone();
        s.grid.lg = lg;
        let rc = RunConfig::resolve("canonical".into(), &s, "unused".into(), Some(Criterion::ALL.to_vec()), None, None)?;
        let oracle = analysis::oracle(&s, rc.margin)?;
        println!("L_g = {:.2} mH, oracle {:?}, dominant {:.3}", lg * 1e3, oracle.verdict, oracle.dominant);
        let point = analysis::analyze_point(&s, &rc, None)?;
        for r in &point.reports {
            let n = r.encirclements.map_or("-".into(), |n| n.to_string());
            println!("  {:<12} {:<9} {:?} (encirclements {n})", r.criterion.to_string(), r.domain.to_string(), r.verdict);
            for m in r.modes.iter().filter(|m| m.unstable) {
                println!("      unstable mode at {:.2} rad/s, alpha {:.4}", m.omega_z, m.alpha_z);
            }
        }
    }
    Ok(())
}
