//! Builds a run from `key = value` config text, the same format the `ctd3`
//! binary reads and echoes, then trains on the point-mass task with an
//! adaptive reward cutoff.

use ctd3::harness::{run_training, RunConfig};

const CONFIG: &str = "
[run]
env = pointmass
seed = 2
steps = 10000
eval_interval = 500
window = 10

[agent]
cutoff_quantile = 0.7      # track the 70% reward quantile
cutoff_refresh_interval = 500
director_weight = 0.5
";

fn main() -> ctd3::Result<()> {
    let cfg = RunConfig::from_config_text(CONFIG)?;
    print!("effective config:\n{}", cfg.to_config_text());
    let out = run_training(&cfg)?;
    for r in &out.rows {
        println!("{:>6} smoothed return {:>8.2}  high/low {:>5}/{:<5}", r.step, r.return_smooth, r.buf_high, r.buf_low);
    }
    println!("final cutoff {:.4}", out.trainer.replay.cutoff());
    Ok(())
}
