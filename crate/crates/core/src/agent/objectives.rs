//! The three learning objectives and their analytic gradients.
//!
//! * critic: `L(w) = mean((Q_w(s, a) - y)^2)`, minimized;
//! * director: `V(phi) = mean(D(s, a_h)) + mean(1 - D(s, a_l))`, maximized;
//! * actor: `J(theta) = gamma_D mean(D(s, mu(s))) + mean(Q_1(s, mu(s)))`,
//!   maximized, with critic and director held fixed.

use crate::env::EnvSpec;
use crate::error::{Error, Result};
use crate::nn::{Activation, ForwardCache, Mlp, Tensor2};

/// Anything that maps an observation to an action deterministically.
pub trait Policy {
    fn act(&self, obs: &[f64]) -> Result<Vec<f64>>;
}

/// Deterministic policy `mu(s) = center + half_range * net(s)` where the
/// network ends in `tanh`, so actions always respect the bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct Actor {
    net: Mlp,
    center: Vec<f64>,
    half_range: Vec<f64>,
}

impl Actor {
    pub fn new(net: Mlp, spec: &EnvSpec) -> Result<Self> {
        if net.input_dim() != spec.obs_dim {
            return Err(Error::Dimension {
                what: "actor input (observation)",
                expected: spec.obs_dim,
                found: net.input_dim(),
            });
        }
        if net.output_dim() != spec.action_dim {
            return Err(Error::Dimension {
                what: "actor output (action)",
                expected: spec.action_dim,
                found: net.output_dim(),
            });
        }
        if net.activations().last() != Some(&Activation::Tanh) {
            return Err(Error::Architecture("actor output layer must be tanh".into()));
        }
        Ok(Self {
            net,
            center: spec.action_center(),
            half_range: spec.action_half_range(),
        })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn half_range(&self) -> &[f64] {
        &self.half_range
    }

    fn scale(&self, raw: &mut Tensor2) {
        for i in 0..raw.rows() {
            for ((v, c), h) in raw.row_mut(i).iter_mut().zip(&self.center).zip(&self.half_range) {
                *v = c + h * *v;
            }
        }
    }

    pub fn act_batch(&self, states: &Tensor2) -> Result<Tensor2> {
        let mut out = self.net.forward_batch(states)?;
        self.scale(&mut out);
        Ok(out)
    }

    pub fn act_cached(&self, states: &Tensor2) -> Result<(ForwardCache, Tensor2)> {
        let cache = self.net.forward_cached(states)?;
        let mut out = cache.output().clone();
        self.scale(&mut out);
        Ok((cache, out))
    }
}

impl Policy for Actor {
    fn act(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let x = Tensor2::from_vec(1, obs.len(), obs.to_vec())?;
        Ok(self.act_batch(&x)?.into_vec())
    }
}

/// Critic regression loss and its gradient with respect to the critic.
pub fn critic_loss_and_grad(critic: &Mlp, inputs: &Tensor2, targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = inputs.rows();
    if targets.len() != n {
        return Err(Error::Dimension {
            what: "critic targets",
            expected: n,
            found: targets.len(),
        });
    }
    let cache = critic.forward_cached(inputs)?;
    let q = cache.output().data();
    let mut loss = 0.0;
    let mut upstream = Tensor2::zeros(n, 1);
    for i in 0..n {
        let diff = q[i] - targets[i];
        loss += diff * diff;
        upstream.data_mut()[i] = 2.0 * diff / n as f64;
    }
    loss /= n as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite("critic loss"));
    }
    let mut grads = vec![0.0; critic.param_count()];
    critic.backward_batch(&cache, &upstream, Some(&mut grads))?;
    Ok((loss, grads))
}

/// Director objective and its gradient with respect to the director.
pub fn director_objective_and_grad(director: &Mlp, high: &Tensor2, low: &Tensor2) -> Result<(f64, Vec<f64>)> {
    let (nh, nl) = (high.rows(), low.rows());
    if nh == 0 || nl == 0 {
        return Err(Error::InsufficientSamples {
            available: nh.min(nl),
            requested: 1,
        });
    }
    let ch = director.forward_cached(high)?;
    let cl = director.forward_cached(low)?;
    let mean_high = ch.output().data().iter().sum::<f64>() / nh as f64;
    let mean_low = cl.output().data().iter().map(|d| 1.0 - d).sum::<f64>() / nl as f64;
    let value = mean_high + mean_low;
    let mut grads = vec![0.0; director.param_count()];
    let up_h = Tensor2::from_vec(nh, 1, vec![1.0 / nh as f64; nh])?;
    let up_l = Tensor2::from_vec(nl, 1, vec![-1.0 / nl as f64; nl])?;
    director.backward_batch(&ch, &up_h, Some(&mut grads))?;
    director.backward_batch(&cl, &up_l, Some(&mut grads))?;
    Ok((value, grads))
}

/// Actor objective and its gradient with respect to the actor network.
///
/// `director` carries the director network and its current weight; `None`
/// drops the director term entirely.
pub fn actor_objective_and_grad(
    actor: &Actor,
    critic: &Mlp,
    director: Option<(&Mlp, f64)>,
    states: &Tensor2,
) -> Result<(f64, Vec<f64>)> {
    let n = states.rows();
    let obs_dim = states.cols();
    let act_dim = actor.net.output_dim();
    let (actor_cache, actions) = actor.act_cached(states)?;
    let inputs = Tensor2::hcat(states, &actions)?;

    let qc = critic.forward_cached(&inputs)?;
    let mut objective = qc.output().data().iter().sum::<f64>() / n as f64;
    let ones = Tensor2::from_vec(n, 1, vec![1.0 / n as f64; n])?;
    let mut d_action = critic
        .backward_batch(&qc, &ones, None)?
        .column_slice(obs_dim, act_dim);

    if let Some((dnet, weight)) = director {
        let dc = dnet.forward_cached(&inputs)?;
        objective += weight * dc.output().data().iter().sum::<f64>() / n as f64;
        let up = Tensor2::from_vec(n, 1, vec![weight / n as f64; n])?;
        let dd = dnet.backward_batch(&dc, &up, None)?.column_slice(obs_dim, act_dim);
        for (a, b) in d_action.data_mut().iter_mut().zip(dd.data()) {
            *a += b;
        }
    }

    // chain through the affine action scaling
    for i in 0..n {
        for (g, h) in d_action.row_mut(i).iter_mut().zip(&actor.half_range) {
            *g *= h;
        }
    }
    let mut grads = vec![0.0; actor.net.param_count()];
    actor.net.backward_batch(&actor_cache, &d_action, Some(&mut grads))?;
    Ok((objective, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvId;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn net(rng: &mut ChaCha8Rng, input: usize, output: usize, out: Activation) -> Mlp {
        Mlp::with_hidden(input, &[6, 5], output, Activation::Relu, out, rng).unwrap()
    }

    fn matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Tensor2 {
        Tensor2::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
    }

    #[test]
    fn actor_rejects_mismatched_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let spec = EnvId::Pendulum.spec();
        assert!(Actor::new(net(&mut rng, 4, 1, Activation::Tanh), &spec).is_err());
        assert!(Actor::new(net(&mut rng, 3, 2, Activation::Tanh), &spec).is_err());
        let err = Actor::new(net(&mut rng, 3, 1, Activation::Identity), &spec).unwrap_err();
        assert!(err.to_string().contains("tanh"));
    }

    #[test]
    fn critic_loss_is_zero_at_its_own_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = net(&mut rng, 4, 1, Activation::Identity);
        let x = matrix(&mut rng, 9, 4, 1.0);
        let q = c.forward_batch(&x).unwrap().into_vec();
        let (loss, g) = critic_loss_and_grad(&c, &x, &q).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|v| *v == 0.0));
        let shifted: Vec<f64> = q.iter().map(|v| v - 2.0).collect();
        assert!((critic_loss_and_grad(&c, &x, &shifted).unwrap().0 - 4.0).abs() < 1e-12);
        assert!(critic_loss_and_grad(&c, &x, &q[..3]).is_err());
        let bad = vec![f64::NAN; 9];
        assert!(matches!(critic_loss_and_grad(&c, &x, &bad), Err(Error::NonFinite(_))));
    }

    #[test]
    fn director_needs_both_batches() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = net(&mut rng, 4, 1, Activation::Sigmoid);
        let x = matrix(&mut rng, 3, 4, 1.0);
        assert!(director_objective_and_grad(&d, &x, &Tensor2::zeros(0, 4)).is_err());
    }

    #[test]
    fn actor_objective_without_director_is_mean_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = EnvId::PointMass.spec();
        let actor = Actor::new(net(&mut rng, 4, 2, Activation::Tanh), &spec).unwrap();
        let critic = net(&mut rng, 6, 1, Activation::Identity);
        let director = net(&mut rng, 6, 1, Activation::Sigmoid);
        let s = matrix(&mut rng, 7, 4, 1.0);
        let inputs = Tensor2::hcat(&s, &actor.act_batch(&s).unwrap()).unwrap();
        let mean_q = critic.forward_batch(&inputs).unwrap().data().iter().sum::<f64>() / 7.0;
        let mean_d = director.forward_batch(&inputs).unwrap().data().iter().sum::<f64>() / 7.0;
        let (j, _) = actor_objective_and_grad(&actor, &critic, None, &s).unwrap();
        assert!((j - mean_q).abs() < 1e-12);
        let (j, _) = actor_objective_and_grad(&actor, &critic, Some((&director, 0.25)), &s).unwrap();
        assert!((j - mean_q - 0.25 * mean_d).abs() < 1e-12);
        // zero weight leaves the gradient untouched
        let (_, g0) = actor_objective_and_grad(&actor, &critic, None, &s).unwrap();
        let (_, gz) = actor_objective_and_grad(&actor, &critic, Some((&director, 0.0)), &s).unwrap();
        assert_eq!(g0, gz);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn director_value_lies_in_zero_two(seed in any::<u64>(), nh in 1usize..6, nl in 1usize..6, scale in 0.1f64..50.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = net(&mut rng, 3, 1, Activation::Sigmoid);
            let high = matrix(&mut rng, nh, 3, scale);
            let low = matrix(&mut rng, nl, 3, scale);
            let out = d.forward_batch(&high).unwrap();
            prop_assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
            let (v, _) = director_objective_and_grad(&d, &high, &low).unwrap();
            prop_assert!((0.0..=2.0).contains(&v));
        }

        #[test]
        fn actor_actions_stay_in_bounds(seed in any::<u64>(), scale in 0.1f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = EnvId::Pendulum.spec();
            let actor = Actor::new(net(&mut rng, 3, 1, Activation::Tanh), &spec).unwrap();
            let a = actor.act_batch(&matrix(&mut rng, 16, 3, scale)).unwrap();
            prop_assert!(a.data().iter().all(|v| (-2.0..=2.0).contains(v)));
        }
    }
}
