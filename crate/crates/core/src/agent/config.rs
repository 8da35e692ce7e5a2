use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::env::EnvId;
use crate::error::{Error, Result};

/// How each critic's pair of target networks is refreshed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetSchedule {
    /// Each critic alternates between its two targets on successive update
    /// occasions, so the pair holds snapshots from different periods.
    Alternating,
    /// Odd environment steps refresh both targets of critic 1, even steps
    /// both targets of critic 2.
    Literal,
}

/// Which critics learn on a given step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriticSchedule {
    Both,
    /// Critic 1 on odd steps, critic 2 on even steps.
    Alternate,
}

/// Action fed to the critics in their regression loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriticAction {
    /// The action stored with the transition.
    Stored,
    /// `mu(s) + N(0, sigma)` recomputed for the sampled state.
    Recomputed,
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $($ty::$variant => $name),+ }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    _ => Err(format!("expected one of: {}", [$($name),+].join(", "))),
                }
            }
        }
    };
}

keyword_enum!(TargetSchedule { Alternating => "alternating", Literal => "literal" });
keyword_enum!(CriticSchedule { Both => "both", Alternate => "alternate" });
keyword_enum!(CriticAction { Stored => "stored", Recomputed => "recomputed" });

/// Every hyperparameter of the learner.
///
/// Noise levels: `exploration_noise` is a fraction of each action
/// dimension's half-range; `target_noise` and `noise_clip` are absolute.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentConfig {
    pub gamma_q: f64,
    pub tau: f64,
    pub policy_delay: u64,
    pub exploration_noise: f64,
    pub target_noise: f64,
    pub noise_clip: f64,
    pub batch_size: usize,
    /// Director weight at step 0.
    pub director_weight: f64,
    /// Steps over which the director weight halves.
    pub director_half_life: f64,
    pub cutoff: f64,
    /// When set, the cutoff follows this quantile of observed rewards.
    pub cutoff_quantile: Option<f64>,
    pub cutoff_refresh_interval: u64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub director_lr: f64,
    pub hidden: Vec<usize>,
    pub director_hidden: Vec<usize>,
    pub adcf: bool,
    pub idem: bool,
    pub warmup: u64,
    pub target_schedule: TargetSchedule,
    pub critic_schedule: CriticSchedule,
    pub critic_action: CriticAction,
    pub main_capacity: usize,
    pub side_capacity: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma_q: 0.99,
            tau: 0.005,
            policy_delay: 2,
            exploration_noise: 0.1,
            target_noise: 0.2,
            noise_clip: 0.5,
            batch_size: 256,
            director_weight: 1.0,
            director_half_life: 10_000.0,
            cutoff: EnvId::Pendulum.default_cutoff(),
            cutoff_quantile: None,
            cutoff_refresh_interval: 1000,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            director_lr: 3e-4,
            hidden: vec![64, 64],
            director_hidden: vec![64, 64],
            adcf: true,
            idem: true,
            warmup: 1000,
            target_schedule: TargetSchedule::Alternating,
            critic_schedule: CriticSchedule::Both,
            critic_action: CriticAction::Stored,
            main_capacity: crate::replay::DEFAULT_MAIN_CAPACITY,
            side_capacity: crate::replay::DEFAULT_SIDE_CAPACITY,
        }
    }
}

/// Keys accepted by [`AgentConfig::set`], in canonical order.
pub const AGENT_KEYS: &[&str] = &[
    "gamma_q",
    "tau",
    "policy_delay",
    "exploration_noise",
    "target_noise",
    "noise_clip",
    "batch_size",
    "director_weight",
    "director_half_life",
    "cutoff",
    "cutoff_quantile",
    "cutoff_refresh_interval",
    "actor_lr",
    "critic_lr",
    "director_lr",
    "hidden",
    "director_hidden",
    "adcf",
    "idem",
    "warmup",
    "target_schedule",
    "critic_schedule",
    "critic_action",
    "main_capacity",
    "side_capacity",
];

pub(crate) fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e: T::Err| Error::config(key, format!("cannot parse `{value}`: {e}")))
}

pub(crate) fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "on" | "1" | "yes" => Ok(true),
        "false" | "off" | "0" | "no" => Ok(false),
        other => Err(Error::config(key, format!("expected a boolean, found `{other}`"))),
    }
}

fn parse_widths(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|w| parse_value::<usize>(key, w))
        .collect()
}

fn widths(v: &[usize]) -> String {
    v.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",")
}

impl AgentConfig {
    /// Defaults for `env` over a budget of `total_steps` environment steps.
    pub fn for_env(env: EnvId, total_steps: u64) -> Self {
        Self {
            cutoff: env.default_cutoff(),
            director_half_life: (0.2 * total_steps as f64).max(1.0),
            ..Self::default()
        }
    }

    pub fn with_flags(mut self, adcf: bool, idem: bool) -> Self {
        self.adcf = adcf;
        self.idem = idem;
        self
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "gamma_q" => self.gamma_q = parse_value(key, value)?,
            "tau" => self.tau = parse_value(key, value)?,
            "policy_delay" => self.policy_delay = parse_value(key, value)?,
            "exploration_noise" => self.exploration_noise = parse_value(key, value)?,
            "target_noise" => self.target_noise = parse_value(key, value)?,
            "noise_clip" => self.noise_clip = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "director_weight" => self.director_weight = parse_value(key, value)?,
            "director_half_life" => self.director_half_life = parse_value(key, value)?,
            "cutoff" => self.cutoff = parse_value(key, value)?,
            "cutoff_quantile" => {
                self.cutoff_quantile = match value.trim() {
                    "none" | "" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "cutoff_refresh_interval" => self.cutoff_refresh_interval = parse_value(key, value)?,
            "actor_lr" => self.actor_lr = parse_value(key, value)?,
            "critic_lr" => self.critic_lr = parse_value(key, value)?,
            "director_lr" => self.director_lr = parse_value(key, value)?,
            "hidden" => self.hidden = parse_widths(key, value)?,
            "director_hidden" => self.director_hidden = parse_widths(key, value)?,
            "adcf" => self.adcf = parse_bool(key, value)?,
            "idem" => self.idem = parse_bool(key, value)?,
            "warmup" => self.warmup = parse_value(key, value)?,
            "target_schedule" => self.target_schedule = parse_value(key, value)?,
            "critic_schedule" => self.critic_schedule = parse_value(key, value)?,
            "critic_action" => self.critic_action = parse_value(key, value)?,
            "main_capacity" => self.main_capacity = parse_value(key, value)?,
            "side_capacity" => self.side_capacity = parse_value(key, value)?,
            _ => return Err(Error::config(key, "unknown agent key")),
        }
        Ok(())
    }

    /// `(key, value)` pairs in canonical order; feeding them back through
    /// [`set`](Self::set) reproduces the config exactly.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("gamma_q", format!("{:?}", self.gamma_q)),
            ("tau", format!("{:?}", self.tau)),
            ("policy_delay", self.policy_delay.to_string()),
            ("exploration_noise", format!("{:?}", self.exploration_noise)),
            ("target_noise", format!("{:?}", self.target_noise)),
            ("noise_clip", format!("{:?}", self.noise_clip)),
            ("batch_size", self.batch_size.to_string()),
            ("director_weight", format!("{:?}", self.director_weight)),
            ("director_half_life", format!("{:?}", self.director_half_life)),
            ("cutoff", format!("{:?}", self.cutoff)),
            (
                "cutoff_quantile",
                self.cutoff_quantile.map_or("none".into(), |q| format!("{q:?}")),
            ),
            ("cutoff_refresh_interval", self.cutoff_refresh_interval.to_string()),
            ("actor_lr", format!("{:?}", self.actor_lr)),
            ("critic_lr", format!("{:?}", self.critic_lr)),
            ("director_lr", format!("{:?}", self.director_lr)),
            ("hidden", widths(&self.hidden)),
            ("director_hidden", widths(&self.director_hidden)),
            ("adcf", self.adcf.to_string()),
            ("idem", self.idem.to_string()),
            ("warmup", self.warmup.to_string()),
            ("target_schedule", self.target_schedule.to_string()),
            ("critic_schedule", self.critic_schedule.to_string()),
            ("critic_action", self.critic_action.to_string()),
            ("main_capacity", self.main_capacity.to_string()),
            ("side_capacity", self.side_capacity.to_string()),
        ]
    }

    /// Short stable fingerprint of every setting.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.entries() {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, key: &str, msg: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::config(key, msg))
            }
        }
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        check(self.gamma_q > 0.0 && self.gamma_q < 1.0, "gamma_q", "must lie in (0, 1)")?;
        check(self.tau > 0.0 && self.tau <= 1.0, "tau", "must lie in (0, 1]")?;
        check(self.policy_delay >= 1, "policy_delay", "must be at least 1")?;
        check(
            self.exploration_noise.is_finite() && self.exploration_noise >= 0.0,
            "exploration_noise",
            "must be non-negative",
        )?;
        check(
            self.target_noise.is_finite() && self.target_noise >= 0.0,
            "target_noise",
            "must be non-negative",
        )?;
        check(
            self.noise_clip.is_finite() && self.noise_clip >= 0.0,
            "noise_clip",
            "must be non-negative",
        )?;
        check(self.batch_size >= 1, "batch_size", "must be at least 1")?;
        check(
            self.director_weight.is_finite() && self.director_weight >= 0.0,
            "director_weight",
            "must be non-negative",
        )?;
        check(finite_pos(self.director_half_life), "director_half_life", "must be positive")?;
        check(self.cutoff.is_finite(), "cutoff", "must be finite")?;
        if let Some(q) = self.cutoff_quantile {
            check((0.0..=1.0).contains(&q), "cutoff_quantile", "must lie in [0, 1]")?;
        }
        check(
            self.cutoff_refresh_interval >= 1,
            "cutoff_refresh_interval",
            "must be at least 1",
        )?;
        check(finite_pos(self.actor_lr), "actor_lr", "must be positive")?;
        check(finite_pos(self.critic_lr), "critic_lr", "must be positive")?;
        check(finite_pos(self.director_lr), "director_lr", "must be positive")?;
        check(self.hidden.iter().all(|&w| w > 0), "hidden", "widths must be positive")?;
        check(
            self.director_hidden.iter().all(|&w| w > 0),
            "director_hidden",
            "widths must be positive",
        )?;
        check(self.main_capacity >= 1, "main_capacity", "must be at least 1")?;
        check(self.side_capacity >= 1, "side_capacity", "must be at least 1")?;
        Ok(())
    }
}

/// Director weight `gamma_D(t) = gamma_D0 * 2^(-t / half_life)`.
pub fn director_weight(config: &AgentConfig, t: u64) -> f64 {
    config.director_weight * (-(t as f64) / config.director_half_life).exp2()
}
