use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_action, clamp_action, EnvSpec, Environment, StepResult};
use crate::error::Result;

pub const GRAVITY: f64 = 10.0;
pub const MASS: f64 = 1.0;
pub const LENGTH: f64 = 1.0;
pub const DT: f64 = 0.05;
pub const MAX_SPEED: f64 = 8.0;
pub const MAX_TORQUE: f64 = 2.0;
pub const EPISODE_STEPS: usize = 200;

/// Torque-limited swing-up pendulum. `theta = 0` is upright.
///
/// Semi-implicit Euler:
/// `w' = clamp(w + 3g/(2l) sin(theta) dt + 3/(m l^2) u dt, -8, 8)`,
/// `theta' = theta + w' dt`. The reward
/// `-(wrap(theta)^2 + 0.1 w^2 + 0.001 u^2)` is charged on the state the
/// action is applied in.
#[derive(Clone, Debug)]
pub struct Pendulum {
    spec: EnvSpec,
    theta: f64,
    theta_dot: f64,
    steps: usize,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self::new()
    }
}

/// Wraps an angle to `[-pi, pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    (theta + PI).rem_euclid(2.0 * PI) - PI
}

impl Pendulum {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                obs_dim: 3,
                action_dim: 1,
                action_low: vec![-MAX_TORQUE],
                action_high: vec![MAX_TORQUE],
                max_episode_steps: EPISODE_STEPS,
            },
            theta: 0.0,
            theta_dot: 0.0,
            steps: 0,
        }
    }

    pub fn state(&self) -> (f64, f64) {
        (self.theta, self.theta_dot)
    }

    pub fn set_state(&mut self, theta: f64, theta_dot: f64) {
        self.theta = theta;
        self.theta_dot = theta_dot;
    }

    pub fn observation(&self) -> Vec<f64> {
        vec![self.theta.cos(), self.theta.sin(), self.theta_dot]
    }

    /// Mechanical energy of a uniform rod pivoting at one end.
    pub fn energy(theta: f64, theta_dot: f64) -> f64 {
        let inertia = MASS * LENGTH * LENGTH / 3.0;
        0.5 * inertia * theta_dot * theta_dot + MASS * GRAVITY * 0.5 * LENGTH * theta.cos()
    }
}

impl Environment for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.theta = rng.random_range(-PI..=PI);
        self.theta_dot = rng.random_range(-1.0..=1.0);
        self.steps = 0;
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        check_action(&self.spec, action)?;
        let u = clamp_action(&self.spec, action)[0];
        let th = wrap_angle(self.theta);
        let reward = -(th * th + 0.1 * self.theta_dot * self.theta_dot + 0.001 * u * u);

        let accel = 3.0 * GRAVITY / (2.0 * LENGTH) * self.theta.sin() + 3.0 / (MASS * LENGTH * LENGTH) * u;
        self.theta_dot = (self.theta_dot + accel * DT).clamp(-MAX_SPEED, MAX_SPEED);
        self.theta += self.theta_dot * DT;
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upright_rest_has_zero_reward() {
        let mut env = Pendulum::new();
        env.set_state(0.0, 0.0);
        let r = env.step(&[0.0]).unwrap();
        assert_eq!(r.reward, 0.0);
        assert_eq!(env.state(), (0.0, 0.0));
    }

    #[test]
    fn hanging_rest_costs_pi_squared() {
        let mut env = Pendulum::new();
        env.set_state(PI, 0.0);
        let r = env.step(&[0.0]).unwrap();
        assert!((r.reward + PI * PI).abs() < 1e-12, "{}", r.reward);
    }

    #[test]
    fn reset_is_deterministic_and_bounded() {
        let mut env = Pendulum::new();
        for seed in 0..10_000u64 {
            let a = env.reset(seed);
            let (th, w) = env.state();
            assert!((-PI..=PI).contains(&th));
            assert!((-1.0..=1.0).contains(&w));
            assert_eq!(a, env.reset(seed));
        }
    }

    #[test]
    fn episode_truncates_at_time_limit() {
        let mut env = Pendulum::new();
        env.reset(3);
        for i in 1..=EPISODE_STEPS {
            let r = env.step(&[0.5]).unwrap();
            assert_eq!(r.done, i == EPISODE_STEPS);
            assert!(!r.terminal);
        }
    }

    #[test]
    fn out_of_range_torque_is_clamped() {
        let mut a = Pendulum::new();
        let mut b = Pendulum::new();
        a.set_state(1.0, 0.5);
        b.set_state(1.0, 0.5);
        let ra = a.step(&[10.0]).unwrap();
        let rb = b.step(&[MAX_TORQUE]).unwrap();
        assert_eq!(ra.observation, rb.observation);
        assert_eq!(ra.reward, rb.reward);
    }

    #[test]
    fn wrong_action_dimension_is_rejected() {
        let mut env = Pendulum::new();
        env.reset(0);
        assert!(env.step(&[0.0, 0.0]).is_err());
    }

    /// Independent semi-implicit Euler with `substeps` equal sub-intervals.
    fn integrate(theta: f64, w: f64, dt: f64, substeps: usize) -> (f64, f64) {
        let h = dt / substeps as f64;
        let (mut th, mut om) = (theta, w);
        for _ in 0..substeps {
            om += 1.5 * GRAVITY / LENGTH * th.sin() * h;
            th += om * h;
        }
        (th, om)
    }

    #[test]
    fn zero_torque_energy_error_is_first_order_in_dt() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut env = Pendulum::new();
        let mut worst_coarse = 0.0f64;
        let mut worst_fine = 0.0f64;
        for _ in 0..10_000 {
            let th = rng.random_range(-PI..PI);
            let w = rng.random_range(-4.0..4.0);
            env.set_state(th, w);
            env.step(&[0.0]).unwrap();
            let (th1, w1) = env.state();
            // the environment step must equal the one-substep oracle exactly
            let (oth, ow) = integrate(th, w, DT, 1);
            assert!((oth - th1).abs() < 1e-12 && (ow - w1).abs() < 1e-12);
            let e0 = Pendulum::energy(th, w);
            worst_coarse = worst_coarse.max((Pendulum::energy(th1, w1) - e0).abs());
            let (fth, fw) = integrate(th, w, DT, 10);
            worst_fine = worst_fine.max((Pendulum::energy(fth, fw) - e0).abs());
        }
        // the step-size error shrinks roughly tenfold with a tenfold finer step
        assert!(worst_fine * 5.0 < worst_coarse, "{worst_fine} vs {worst_coarse}");
        assert!(worst_coarse < 0.8, "per-step energy drift {worst_coarse}");
    }

    #[test]
    fn zero_torque_energy_does_not_drift_over_an_episode() {
        let mut env = Pendulum::new();
        env.set_state(2.0, 0.0);
        let e0 = Pendulum::energy(2.0, 0.0);
        let mut worst = 0.0f64;
        for _ in 0..EPISODE_STEPS {
            env.step(&[0.0]).unwrap();
            let (th, w) = env.state();
            worst = worst.max((Pendulum::energy(th, w) - e0).abs());
        }
        assert!(worst < 0.8, "{worst}");
    }
}
