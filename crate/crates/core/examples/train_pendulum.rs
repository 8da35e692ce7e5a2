//! Trains the combined agent on the pendulum swing-up and prints the
//! learning curve against the random-policy baseline.
//!
//! ```bash
//! cargo run --release --example train_pendulum -- [seed] [steps] [out_dir]
//! ```

use ctd3::env::EnvId;
use ctd3::harness::{run_training, RunConfig};

fn main() -> ctd3::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));
    let steps = args.next().map_or(50_000, |s| s.parse().expect("steps must be an integer"));

    let mut cfg = RunConfig::new(EnvId::Pendulum, seed, steps);
    cfg.out_dir = args.next().map(Into::into);
    let out = run_training(&cfg)?;

    let base = EnvId::Pendulum.random_baseline();
    let (_, high) = base.band();
    for r in &out.rows {
        println!("{:>6}  raw {:>9.2}  smooth {:>9.2}", r.step, r.return_raw, r.return_smooth);
    }
    let last = out.final_smooth_return().expect("at least one evaluation");
    println!("final smoothed return {last:.2}; random band upper edge {high:.2}; margin {:.1} band widths", (last - high) / base.band_width());
    Ok(())
}
