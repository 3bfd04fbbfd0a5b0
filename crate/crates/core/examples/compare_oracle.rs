//! Sweeps the grid inductance of the canonical scenario and compares each
//! criterion with the eigenvalue oracle.
//!
//! cargo run --release --example compare_oracle

use std::path::Path;

use impstab::cli;
use impstab::config::{RunConfig, Scenario};

fn main() -> impstab::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/canonical.toml");
    let s = Scenario::load(&path)?;
    let rc = RunConfig::resolve(path, &s, std::env::temp_dir().join("impstab-compare"), None, None, None)?;
    println!("{:>8}  {:<10} {:>9}  mismatches", "L_g (mH)", "oracle", "max Re");
    for (_, row) in cli::compare_oracle(&s, &rc)? {
        println!(
            "{:>8.3}  {:<10} {:>9.3}  {}",
            row.parameter.unwrap_or(f64::NAN) * 1e3,
            format!("{:?}", row.oracle.verdict),
            row.oracle.max_re,
            if row.mismatches.is_empty() { "-".to_string() } else { row.mismatches.join(", ") }
        );
    }
    Ok(())
}
