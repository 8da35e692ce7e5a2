//! Finite-difference verification of the three learning gradients on small
//! random instances.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::objectives::{actor_objective_and_grad, critic_loss_and_grad, director_objective_and_grad, Actor};
use crate::env::EnvSpec;
use crate::error::Result;
use crate::nn::{central_difference, relative_error, Activation, Mlp, Tensor2};

/// Tolerance on the max relative error.
pub const GRAD_TOLERANCE: f64 = 1e-4;

/// Instances with a relu pre-activation this close to zero are redrawn.
const KINK_MARGIN: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradPath {
    Critic,
    Director,
    Actor,
}

impl GradPath {
    pub const ALL: [GradPath; 3] = [GradPath::Critic, GradPath::Director, GradPath::Actor];

    pub fn name(self) -> &'static str {
        match self {
            GradPath::Critic => "critic",
            GradPath::Director => "director",
            GradPath::Actor => "actor",
        }
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub path: GradPath,
    pub instances: usize,
    /// Draws discarded for sitting on a relu kink.
    pub redrawn: usize,
    pub max_relative_error: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error <= GRAD_TOLERANCE
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<8} instances={} redrawn={} max_rel_err={:.3e} {}",
            self.path.name(),
            self.instances,
            self.redrawn,
            self.max_relative_error,
            if self.passed() { "ok" } else { "FAIL" }
        )
    }
}

fn near_kink(net: &Mlp, x: &Tensor2) -> Result<bool> {
    let cache = net.forward_cached(x)?;
    Ok(net
        .activations()
        .iter()
        .zip(cache.pre_activations())
        .any(|(a, z)| *a == Activation::Relu && z.data().iter().any(|v| v.abs() < KINK_MARGIN)))
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Tensor2 {
    let data = (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect();
    Tensor2::from_vec(rows, cols, data).expect("shape matches data")
}

fn small_net(rng: &mut ChaCha8Rng, input: usize, output: usize, out_act: Activation) -> Result<Mlp> {
    let depth = rng.random_range(1..=2);
    let hidden: Vec<usize> = (0..depth).map(|_| rng.random_range(2..=6)).collect();
    Mlp::with_hidden(input, &hidden, output, Activation::Relu, out_act, rng)
}

fn random_spec(rng: &mut ChaCha8Rng) -> EnvSpec {
    let action_dim = rng.random_range(1..=3);
    let low: Vec<f64> = (0..action_dim).map(|_| rng.random_range(-2.0..-0.5)).collect();
    let high: Vec<f64> = (0..action_dim).map(|_| rng.random_range(0.5..2.0)).collect();
    EnvSpec {
        obs_dim: rng.random_range(1..=4),
        action_dim,
        action_low: low,
        action_high: high,
        max_episode_steps: 1,
    }
}

/// One random instance; `None` when it landed on a relu kink.
fn instance_error(path: GradPath, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let spec = random_spec(rng);
    let sa = spec.obs_dim + spec.action_dim;
    let n = rng.random_range(1..=5);
    match path {
        GradPath::Critic => {
            let critic = small_net(rng, sa, 1, Activation::Identity)?;
            let x = random_matrix(rng, n, sa, 1.5);
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            if near_kink(&critic, &x)? {
                return Ok(None);
            }
            let (_, analytic) = critic_loss_and_grad(&critic, &x, &y)?;
            let estimate = central_difference(&critic, |c| {
                critic_loss_and_grad(c, &x, &y).map(|(l, _)| l).unwrap_or(f64::NAN)
            });
            Ok(Some(relative_error(&analytic, &estimate)))
        }
        GradPath::Director => {
            let director = small_net(rng, sa, 1, Activation::Sigmoid)?;
            let nl = rng.random_range(1..=5);
            let high = random_matrix(rng, n, sa, 1.5);
            let low = random_matrix(rng, nl, sa, 1.5);
            if near_kink(&director, &high)? || near_kink(&director, &low)? {
                return Ok(None);
            }
            let (_, analytic) = director_objective_and_grad(&director, &high, &low)?;
            let estimate = central_difference(&director, |d| {
                director_objective_and_grad(d, &high, &low).map(|(v, _)| v).unwrap_or(f64::NAN)
            });
            Ok(Some(relative_error(&analytic, &estimate)))
        }
        GradPath::Actor => {
            let actor = Actor::new(small_net(rng, spec.obs_dim, spec.action_dim, Activation::Tanh)?, &spec)?;
            let critic = small_net(rng, sa, 1, Activation::Identity)?;
            let director = if rng.random_bool(0.5) {
                Some((small_net(rng, sa, 1, Activation::Sigmoid)?, rng.random_range(0.0..2.0)))
            } else {
                None
            };
            let states = random_matrix(rng, n, spec.obs_dim, 1.5);
            let inputs = Tensor2::hcat(&states, &actor.act_batch(&states)?)?;
            if near_kink(actor.net(), &states)?
                || near_kink(&critic, &inputs)?
                || director.as_ref().map_or(Ok(false), |(d, _)| near_kink(d, &inputs))?
            {
                return Ok(None);
            }
            let dir = director.as_ref().map(|(d, w)| (d, *w));
            let (_, analytic) = actor_objective_and_grad(&actor, &critic, dir, &states)?;
            let estimate = central_difference(actor.net(), |net| {
                let probe = Actor::new(net.clone(), &spec).expect("same architecture");
                actor_objective_and_grad(&probe, &critic, dir, &states)
                    .map(|(j, _)| j)
                    .unwrap_or(f64::NAN)
            });
            Ok(Some(relative_error(&analytic, &estimate)))
        }
    }
}

/// Checks `instances` random instances of one gradient path.
pub fn run_suite(path: GradPath, instances: usize, seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradCheckReport {
        path,
        instances: 0,
        redrawn: 0,
        max_relative_error: 0.0,
    };
    while report.instances < instances {
        match instance_error(path, &mut rng)? {
            Some(err) => {
                // NaN must not be swallowed by f64::max
                report.max_relative_error = if err.is_nan() { f64::NAN } else { report.max_relative_error.max(err) };
                report.instances += 1;
                if err.is_nan() {
                    break;
                }
            }
            None => report.redrawn += 1,
        }
    }
    Ok(report)
}

/// All three suites with seeds derived from `seed`.
pub fn run_all(instances: usize, seed: u64) -> Result<Vec<GradCheckReport>> {
    GradPath::ALL
        .iter()
        .enumerate()
        .map(|(i, &p)| run_suite(p, instances, seed.wrapping_add(i as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_path_passes_on_small_suites() {
        for r in run_all(30, 99).unwrap() {
            assert!(r.passed(), "{r}");
            assert_eq!(r.instances, 30);
        }
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let critic = small_net(&mut rng, 3, 1, Activation::Identity).unwrap();
        let x = random_matrix(&mut rng, 4, 3, 1.0);
        let y = vec![1.0, -1.0, 0.5, 0.0];
        let (_, mut analytic) = critic_loss_and_grad(&critic, &x, &y).unwrap();
        let estimate = central_difference(&critic, |c| critic_loss_and_grad(c, &x, &y).unwrap().0);
        analytic[0] += 1e-2 * analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(relative_error(&analytic, &estimate) > GRAD_TOLERANCE);
    }

    #[test]
    fn display_marks_failures() {
        let r = GradCheckReport {
            path: GradPath::Actor,
            instances: 1,
            redrawn: 0,
            max_relative_error: 1.0,
        };
        assert!(r.to_string().ends_with("FAIL"));
        assert!(!r.passed());
    }
}
