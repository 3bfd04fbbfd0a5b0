//! Point-to-point DC link determinants, and why the shunt-cable form needs
//! the count of right-half-plane poles of the sending-end impedance.
//!
//! cargo run --release --example p2p_link

use impstab::criteria::FreqGrid;
use impstab::models;
use impstab::ratfun::RatFun;
use impstab::C64;

fn main() -> impstab::Result<()> {
    let re = |x: f64| C64::new(x, 0.0);
    let zr = RatFun::from_roots(2.0, &[re(-1.0)], &[re(-3.0)]);
    let ys = RatFun::from_roots(0.5, &[re(-0.5)], &[C64::new(-2.0, 1.0), C64::new(-2.0, -1.0)]);
    let zcable = RatFun::from_roots(0.1, &[re(-10.0)], &[]);
    let sys = models::build_p2p_dc(&zr, &ys, &zcable)?;
    println!("series cable: det zeros {:.4?}", sys.det.zeros());

    let zs = RatFun::from_roots(1.0, &[re(-5.0)], &[re(1.0)]);
    let form = models::build_p2p_admittance_form(&RatFun::constant(re(0.5)), &zs, &RatFun::from_roots(2.0, &[], &[re(-4.0)]))?;
    println!("shunt cable: det zeros {:.4?}, Z_s RHP poles {:.4?}", form.system.det.zeros(), form.zs_rhp_poles);
    let grid = FreqGrid::uniform_hz(-5.0, 5.0, 0.01)?;
    let blind = form.verdict(&grid, None)?;
    let known = form.verdict(&grid, Some(form.zs_rhp_poles.len()))?;
    println!("without pole count: {:?} ({})", blind.verdict, blind.reasons.join("; "));
    println!("with pole count:    {:?}", known.verdict);
    Ok(())
}
