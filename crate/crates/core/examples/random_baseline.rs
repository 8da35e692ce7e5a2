//! Measures the uniformly random policy on every built-in environment.
//!
//! ```bash
//! cargo run --release --example random_baseline
//! ```

use ctd3::env::{random_policy_returns, EnvId, RandomBaseline};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ctd3::Result<()> {
    for id in EnvId::ALL {
        let mut env = id.make();
        let returns = random_policy_returns(env.as_mut(), RandomBaseline::SEED, RandomBaseline::EPISODES)?;
        let n = returns.len() as f64;
        let mean = returns.iter().sum::<f64>() / n;
        let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);

        // share of single-step rewards above the default cutoff
        let spec = env.spec().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut above, mut total) = (0usize, 0usize);
        for ep in 0..200u64 {
            env.reset(ep);
            loop {
                let r = env.step(&spec.sample_action(&mut rng))?;
                total += 1;
                above += usize::from(r.reward > id.default_cutoff());
                if r.done {
                    break;
                }
            }
        }
        let base = RandomBaseline { seed: RandomBaseline::SEED, episodes: returns.len(), mean, std_dev: var.sqrt() };
        println!("{id}: {base:?}");
        println!("{id}: band {:?}", base.band());
        println!("{id}: {:.3} of random-policy rewards exceed R = {}", above as f64 / total as f64, id.default_cutoff());
    }
    Ok(())
}
