//! Continuous-control environments.
//!
//! Two small, fully specified tasks stand in for heavyweight physics
//! simulators: a torque-limited [`Pendulum`] swing-up and a planar
//! [`PointMass`] reaching task. Both have dense rewards and a fixed
//! 200-step horizon that ends episodes by truncation only.

mod baseline;
mod pendulum;
mod pointmass;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use baseline::RandomBaseline;
pub use pendulum::{wrap_angle, Pendulum};
pub use pointmass::PointMass;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EnvSpec {
    pub obs_dim: usize,
    pub action_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub max_episode_steps: usize,
}

impl EnvSpec {
    pub fn action_center(&self) -> Vec<f64> {
        self.action_low
            .iter()
            .zip(&self.action_high)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }

    pub fn action_half_range(&self) -> Vec<f64> {
        self.action_low
            .iter()
            .zip(&self.action_high)
            .map(|(l, h)| 0.5 * (h - l))
            .collect()
    }

    /// Clamps `action` into the box in place.
    pub fn clamp(&self, action: &mut [f64]) {
        for ((a, l), h) in action.iter_mut().zip(&self.action_low).zip(&self.action_high) {
            *a = a.clamp(*l, *h);
        }
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.action_low
            .iter()
            .zip(&self.action_high)
            .map(|(&l, &h)| rng.random_range(l..=h))
            .collect()
    }
}

/// Outcome of one environment transition.
///
/// `done` ends the episode; it is the union of `terminal` (a true absorbing
/// state, never bootstrapped through) and `truncated` (the time limit).
#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub truncated: bool,
    pub terminal: bool,
}

pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;

    /// Re-initializes the state deterministically from `seed`.
    fn reset(&mut self, seed: u64) -> Vec<f64>;

    /// Applies `action` (clamped to the action box).
    fn step(&mut self, action: &[f64]) -> Result<StepResult>;
}

pub(crate) fn check_action(spec: &EnvSpec, action: &[f64]) -> Result<()> {
    if action.len() != spec.action_dim {
        return Err(Error::Dimension {
            what: "action",
            expected: spec.action_dim,
            found: action.len(),
        });
    }
    Ok(())
}

pub(crate) fn clamp_action(spec: &EnvSpec, action: &[f64]) -> Vec<f64> {
    let mut a = action.to_vec();
    spec.clamp(&mut a);
    a
}

/// Identifier used in configs and on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnvId {
    Pendulum,
    PointMass,
}

impl EnvId {
    pub const ALL: [EnvId; 2] = [EnvId::Pendulum, EnvId::PointMass];

    pub fn name(self) -> &'static str {
        match self {
            EnvId::Pendulum => "pendulum",
            EnvId::PointMass => "pointmass",
        }
    }

    pub fn make(self) -> Box<dyn Environment> {
        match self {
            EnvId::Pendulum => Box::new(Pendulum::new()),
            EnvId::PointMass => Box::new(PointMass::new()),
        }
    }

    pub fn spec(self) -> EnvSpec {
        self.make().spec().clone()
    }

    /// Default reward cutoff separating high- from low-quality transitions.
    pub fn default_cutoff(self) -> f64 {
        match self {
            EnvId::Pendulum => -4.0,
            EnvId::PointMass => -0.85,
        }
    }

    pub fn random_baseline(self) -> RandomBaseline {
        match self {
            EnvId::Pendulum => RandomBaseline::PENDULUM,
            EnvId::PointMass => RandomBaseline::POINTMASS,
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::UnknownEnv(s.to_string()))
    }
}

/// Undiscounted return of each of `episodes` uniformly random episodes.
pub fn random_policy_returns(env: &mut dyn Environment, seed: u64, episodes: usize) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = env.spec().clone();
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        env.reset(rng.random());
        let mut total = 0.0;
        loop {
            let a = spec.sample_action(&mut rng);
            let r = env.step(&a)?;
            total += r.reward;
            if r.done {
                break;
            }
        }
        out.push(total);
    }
    Ok(out)
}

/// Mean undiscounted episode return under uniformly random actions.
pub fn random_policy_return(env: &mut dyn Environment, seed: u64, episodes: usize) -> Result<f64> {
    if episodes == 0 {
        return Err(Error::config("episodes", "must be at least 1"));
    }
    let returns = random_policy_returns(env, seed, episodes)?;
    Ok(returns.iter().sum::<f64>() / episodes as f64)
}
