use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_action, clamp_action, EnvSpec, Environment, StepResult};
use crate::error::Result;

pub const DT: f64 = 0.05;
pub const MAX_ACCEL: f64 = 1.0;
pub const EPISODE_STEPS: usize = 200;

/// Planar double integrator steered toward the origin.
///
/// Observation `(px, py, vx, vy)`; action is an acceleration in
/// `[-1, 1]^2`. Semi-implicit Euler `v' = v + a dt`, `p' = p + v' dt`.
/// Reward `-|p| - 0.01 |a|^2` is charged on the pre-step position.
#[derive(Clone, Debug)]
pub struct PointMass {
    spec: EnvSpec,
    position: [f64; 2],
    velocity: [f64; 2],
    steps: usize,
}

impl Default for PointMass {
    fn default() -> Self {
        Self::new()
    }
}

impl PointMass {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                obs_dim: 4,
                action_dim: 2,
                action_low: vec![-MAX_ACCEL; 2],
                action_high: vec![MAX_ACCEL; 2],
                max_episode_steps: EPISODE_STEPS,
            },
            position: [0.0; 2],
            velocity: [0.0; 2],
            steps: 0,
        }
    }

    pub fn set_state(&mut self, position: [f64; 2], velocity: [f64; 2]) {
        self.position = position;
        self.velocity = velocity;
    }

    pub fn position(&self) -> [f64; 2] {
        self.position
    }

    pub fn velocity(&self) -> [f64; 2] {
        self.velocity
    }

    fn observation(&self) -> Vec<f64> {
        vec![
            self.position[0],
            self.position[1],
            self.velocity[0],
            self.velocity[1],
        ]
    }
}

impl Environment for PointMass {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.position = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
        self.velocity = [0.0; 2];
        self.steps = 0;
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        check_action(&self.spec, action)?;
        let a = clamp_action(&self.spec, action);
        let dist = self.position[0].hypot(self.position[1]);
        let reward = -dist - 0.01 * (a[0] * a[0] + a[1] * a[1]);
        for i in 0..2 {
            self.velocity[i] += a[i] * DT;
            self.position[i] += self.velocity[i] * DT;
        }
        self.steps += 1;
        let truncated = self.steps >= self.spec.max_episode_steps;
        Ok(StepResult {
            observation: self.observation(),
            reward,
            done: truncated,
            truncated,
            terminal: false,
        })
    }
}
