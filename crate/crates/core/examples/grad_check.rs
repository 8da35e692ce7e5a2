//! Compares the analytic critic, director and actor gradients with central
//! finite differences on random small networks.
//!
//! ```bash
//! cargo run --release --example grad_check -- [instances]
//! ```

use ctd3::agent::gradcheck::{run_all, GRAD_TOLERANCE};

fn main() -> ctd3::Result<()> {
    let instances = std::env::args().nth(1).map_or(100, |s| s.parse().expect("instances must be an integer"));
    let reports = run_all(instances, 0)?;
    for r in &reports {
        println!("{r}");
    }
    let ok = reports.iter().all(|r| r.passed());
    println!("tolerance {GRAD_TOLERANCE:e}: {}", if ok { "all paths agree" } else { "MISMATCH" });
    std::process::exit(if ok { 0 } else { 1 });
}
