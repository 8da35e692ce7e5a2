//! With both extensions switched off the combined agent is plain TD3. This
//! runs it beside the reference TD3 on the same random streams and compares
//! the step reports bit for bit.

use ctd3::agent::{Ctd3Agent, StepReport, Td3Agent};
use ctd3::env::EnvId;
use ctd3::harness::{run_training_with, RunConfig, Trainer};

fn main() -> ctd3::Result<()> {
    let mut cfg = RunConfig::new(EnvId::Pendulum, 0, 3000);
    cfg.agent = cfg.agent.with_flags(false, false);
    let spec = cfg.env.spec();

    let (mut init, mut train) = cfg.rngs();
    let mut combined = Trainer::new(Ctd3Agent::new(cfg.agent.clone(), &spec, &mut init)?, cfg.seed)?;
    let mut a: Vec<StepReport> = Vec::new();
    run_training_with(&mut combined, &cfg, &mut train, None, |r| a.push(r.clone()))?;

    let (mut init, mut train) = cfg.rngs();
    let mut reference = Td3Agent::new(cfg.agent.clone(), &spec, &mut init)?;
    let mut b: Vec<StepReport> = Vec::new();
    run_training_with(&mut reference, &cfg, &mut train, None, |r| b.push(r.clone()))?;

    let first_diff = a.iter().zip(&b).position(|(x, y)| !x.bit_eq(y));
    let learned = a.iter().filter(|r| r.learned).count();
    match first_diff {
        None => println!("{} step reports ({learned} with learning) are bit-identical", a.len()),
        Some(i) => println!("traces diverge at step {}", i + 1),
    }
    Ok(())
}
