//! Fills the triple replay from random pendulum rollouts and shows how the
//! reward cutoff splits transitions, first with the fixed default cutoff
//! and then with a cutoff that tracks a reward quantile.

use ctd3::env::{EnvId, Environment};
use ctd3::replay::{BufferKind, Transition, TripleReplay};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fill(replay: &mut TripleReplay, env: &mut dyn Environment, steps: usize, refresh_every: usize) -> ctd3::Result<()> {
    let spec = env.spec().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut obs = env.reset(0);
    for t in 1..=steps {
        let action = spec.sample_action(&mut rng);
        let r = env.step(&action)?;
        replay.classify_and_store(Transition {
            state: obs,
            action,
            reward: r.reward,
            next_state: r.observation.clone(),
            truncated: r.truncated,
            terminal: r.terminal,
        });
        obs = if r.done { env.reset(t as u64) } else { r.observation };
        if t % refresh_every == 0 {
            replay.refresh_cutoff()?;
        }
    }
    Ok(())
}

fn show(label: &str, replay: &TripleReplay) {
    println!(
        "{label:<22} cutoff {:>7.3}  main {:>6}  high {:>6}  low {:>6}  placement valid: {}",
        replay.cutoff(),
        replay.len(BufferKind::Main),
        replay.len(BufferKind::High),
        replay.len(BufferKind::Low),
        replay.check_invariants()
    );
}

fn main() -> ctd3::Result<()> {
    let id = EnvId::Pendulum;
    let mut env = id.make();

    let mut fixed = TripleReplay::new(id.default_cutoff());
    fill(&mut fixed, env.as_mut(), 20_000, 1000)?;
    show("fixed cutoff", &fixed);

    // start from a cutoff nothing exceeds; the 70% quantile takes over at
    // the first refresh
    let mut adaptive = TripleReplay::new(0.0).adaptive(0.7, 10_000, 1)?;
    fill(&mut adaptive, env.as_mut(), 20_000, 1000)?;
    show("adaptive (q = 0.7)", &adaptive);
    Ok(())
}
