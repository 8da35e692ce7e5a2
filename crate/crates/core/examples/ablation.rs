//! Runs the four ablation arms (TD3, TD3+ADCF, TD3+IDEM, CTD3) on one
//! environment and prints the per-arm median of the final smoothed return.
//!
//! ```bash
//! cargo run --release --example ablation -- pointmass 20000 0,1,2 runs/ablation
//! ```

use ctd3::env::EnvId;
use ctd3::harness::{run_ablation_seeds, RunConfig, Variant};

fn main() -> ctd3::Result<()> {
    let mut args = std::env::args().skip(1);
    let env: EnvId = args.next().as_deref().unwrap_or("pointmass").parse()?;
    let steps = args.next().map_or(20_000, |s| s.parse().expect("steps must be an integer"));
    let seeds: Vec<u64> = args
        .next()
        .unwrap_or_else(|| "0".into())
        .split(',')
        .map(|s| s.trim().parse().expect("seeds are comma-separated integers"))
        .collect();

    let mut base = RunConfig::new(env, seeds[0], steps);
    base.out_dir = args.next().map(Into::into);
    let summary = run_ablation_seeds(&base, &seeds)?;

    println!("{env}, {steps} steps, seeds {seeds:?}");
    for v in Variant::ALL {
        let finals: Vec<String> = summary.finals(v).iter().map(|f| format!("{f:.1}")).collect();
        let median = summary.median_final(v).unwrap_or(f64::NAN);
        println!("{:<9} median {median:>9.2}   per seed [{}]", v.name(), finals.join(", "));
    }
    for arm in summary.failures() {
        println!("{} seed {} failed: {:?}", arm.variant, arm.seed, arm.result);
    }
    Ok(())
}
