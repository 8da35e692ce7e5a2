//! Trains a short point-mass run, saves the agent, loads it back and checks
//! that evaluation gives the same value bit for bit. Loading into the wrong
//! environment fails before any rollout.

use ctd3::agent::Ctd3Agent;
use ctd3::env::EnvId;
use ctd3::harness::{evaluate, run_training, RunConfig};

fn main() -> ctd3::Result<()> {
    let dir = std::env::temp_dir().join("ctd3-checkpoint-example");
    let mut cfg = RunConfig::new(EnvId::PointMass, 0, 5000);
    cfg.out_dir = Some(dir.clone());
    let out = run_training(&cfg)?;

    let path = dir.join("agent.ckpt");
    let loaded = Ctd3Agent::load(&path, &EnvId::PointMass.spec())?;
    let before = evaluate(out.trainer.agent.actor(), EnvId::PointMass, 10, 7)?;
    let after = evaluate(loaded.actor(), EnvId::PointMass, 10, 7)?;
    println!("in-process {before:.17e}\nreloaded   {after:.17e}\nidentical: {}", before.to_bits() == after.to_bits());

    match Ctd3Agent::load(&path, &EnvId::Pendulum.spec()) {
        Ok(_) => println!("unexpectedly loaded into the pendulum"),
        Err(e) => println!("pendulum load rejected: {e}"),
    }
    Ok(())
}
