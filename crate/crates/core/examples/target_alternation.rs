//! Trains briefly and compares how each critic's pair of target networks
//! evolves under the alternating schedule and under the literal one,
//! which refreshes both targets of a critic together.

use ctd3::agent::{AgentConfig, Ctd3Agent, TargetSchedule};
use ctd3::env::EnvId;
use ctd3::replay::{Transition, TripleReplay};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn train(schedule: TargetSchedule) -> ctd3::Result<Ctd3Agent> {
    let id = EnvId::Pendulum;
    let spec = id.spec();
    let cfg = AgentConfig {
        target_schedule: schedule,
        warmup: 256,
        ..AgentConfig::for_env(id, 2000)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut agent = Ctd3Agent::new(cfg, &spec, &mut rng)?;
    let mut replay = TripleReplay::new(id.default_cutoff());
    let mut env = id.make();
    let mut obs = env.reset(0);
    for t in 0..2000u64 {
        let action = if t < 256 { spec.sample_action(&mut rng) } else { agent.select_action(&obs, true, &mut rng)? };
        let r = env.step(&action)?;
        let next = r.observation.clone();
        let tr = Transition { state: obs, action, reward: r.reward, next_state: next.clone(), truncated: r.truncated, terminal: r.terminal };
        agent.train_step(&mut replay, tr, &mut rng)?;
        obs = if r.done { env.reset(t) } else { next };
    }
    Ok(agent)
}

fn main() -> ctd3::Result<()> {
    for schedule in [TargetSchedule::Alternating, TargetSchedule::Literal] {
        let agent = train(schedule)?;
        for i in 0..2 {
            let c = agent.critic(i);
            let [a, b] = c.targets() else { unreachable!("two targets per critic") };
            println!(
                "{schedule:<11} critic {}: {} update occasions, gap between its targets {:.3e}, target lag behind critic {:.3e}",
                i + 1,
                c.occasions(),
                a.max_param_gap(b)?,
                a.max_param_gap(c.net())?
            );
        }
    }
    Ok(())
}
