//! The network toolkit on its own: fit `sin` with a small MLP using the
//! reverse pass and Adam, then round-trip it through a text checkpoint.

use ctd3::nn::{AdamState, Activation, Mlp, Tensor2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ctd3::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut net = Mlp::with_hidden(1, &[32, 32], 1, Activation::Tanh, Activation::Identity, &mut rng)?;
    let mut adam = AdamState::new(net.param_count());

    for step in 0..=3000 {
        let xs: Vec<f64> = (0..64).map(|_| rng.random_range(-3.0..3.0)).collect();
        let x = Tensor2::from_vec(64, 1, xs.clone())?;
        let cache = net.forward_cached(&x)?;
        let mut upstream = Tensor2::zeros(64, 1);
        let mut loss = 0.0;
        for (i, xi) in xs.iter().enumerate() {
            let d = cache.output().data()[i] - xi.sin();
            loss += d * d / 64.0;
            upstream.data_mut()[i] = 2.0 * d / 64.0;
        }
        let mut grads = vec![0.0; net.param_count()];
        net.backward_batch(&cache, &upstream, Some(&mut grads))?;
        adam.step(net.params_mut(), &grads, 1e-2)?;
        if step % 500 == 0 {
            println!("step {step:>4}  mse {loss:.5}");
        }
    }

    let text = net.to_checkpoint_string();
    let back = Mlp::from_checkpoint_str(&text)?;
    println!("checkpoint header: {}", text.lines().next().unwrap_or_default());
    println!("round trip exact: {}", back == net);
    println!("net(1.0) = {:.4}, sin(1.0) = {:.4}", net.forward(&[1.0])?[0], 1f64.sin());
    Ok(())
}
