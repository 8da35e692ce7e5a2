//! Whole-agent checkpoints.
//!
//! ```text
//! CTD3 v1 <config hash> <step>
//! occasions <critic 1> <critic 2>
//! <key> = <value>            one line per config entry
//! end
//! <network checkpoints>      actor, target actor, critic 1 and its
//!                            targets, critic 2 and its targets, director
//! ```
//!
//! Optimizer moments are not stored; a loaded agent evaluates identically
//! but restarts Adam from zero if trained further.

use std::fs;
use std::path::Path;

use super::config::AgentConfig;
use super::ctd3::Ctd3Agent;
use crate::env::EnvSpec;
use crate::error::{Error, Result};
use crate::nn::{read_checkpoint, Mlp};

const MAGIC: &str = "CTD3";
const VERSION: &str = "v1";

/// Parsed header of an agent checkpoint.
struct Header {
    hash: String,
    step: u64,
    occasions: [u64; 2],
    config: AgentConfig,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn read_header<'a, I: Iterator<Item = &'a str>>(lines: &mut I) -> Result<Header> {
    let first = lines.next().ok_or_else(|| bad("empty checkpoint"))?;
    let tok: Vec<&str> = first.split_whitespace().collect();
    let [magic, version, hash, step] = tok.as_slice() else {
        return Err(bad(format!("malformed header `{first}`")));
    };
    if *magic != MAGIC || *version != VERSION {
        return Err(bad(format!("expected `{MAGIC} {VERSION}` header, found `{first}`")));
    }
    let step = step.parse().map_err(|_| bad(format!("malformed step counter `{step}`")))?;

    let occ_line = lines.next().ok_or_else(|| bad("missing occasions line"))?;
    let occ: Vec<&str> = occ_line.split_whitespace().collect();
    let occasions = match occ.as_slice() {
        ["occasions", a, b] => [
            a.parse().map_err(|_| bad("malformed occasion count"))?,
            b.parse().map_err(|_| bad("malformed occasion count"))?,
        ],
        _ => return Err(bad(format!("expected occasions line, found `{occ_line}`"))),
    };

    let mut config = AgentConfig::default();
    loop {
        let line = lines.next().ok_or_else(|| bad("config block is not terminated"))?;
        if line.trim() == "end" {
            break;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("malformed config line `{line}`")))?;
        config.set(k.trim(), v.trim())?;
    }
    Ok(Header {
        hash: hash.to_string(),
        step,
        occasions,
        config,
    })
}

impl Ctd3Agent {
    fn member_networks(&self) -> Vec<&Mlp> {
        let mut nets = vec![self.actor().net(), self.actor_target()];
        for i in 0..2 {
            nets.push(self.critic(i).net());
            nets.extend(self.critic(i).targets());
        }
        nets.extend(self.director());
        nets
    }

    pub fn to_checkpoint_string(&self) -> String {
        let mut out = format!("{MAGIC} {VERSION} {} {}\n", self.config().hash(), self.step_count());
        out += &format!(
            "occasions {} {}\n",
            self.critic(0).occasions(),
            self.critic(1).occasions()
        );
        for (k, v) in self.config().entries() {
            out += &format!("{k} = {v}\n");
        }
        out += "end\n";
        for net in self.member_networks() {
            out += &net.to_checkpoint_string();
        }
        out
    }

    /// Rebuilds an agent for `spec`. Fails with a dimension error before
    /// anything else when the stored actor does not fit `spec`.
    pub fn from_checkpoint_str(text: &str, spec: &EnvSpec) -> Result<Self> {
        let mut lines = text.lines();
        let header = read_header(&mut lines)?;
        if header.config.hash() != header.hash {
            return Err(bad(format!(
                "config hash mismatch: header says {}, entries give {}",
                header.hash,
                header.config.hash()
            )));
        }
        let config = header.config;
        let actor = read_checkpoint(&mut lines)?;
        super::objectives::Actor::new(actor.clone(), spec)?;
        let actor_target = read_checkpoint(&mut lines)?;
        let per_critic = if config.idem { 2 } else { 1 };
        let mut critics = Vec::with_capacity(2);
        for _ in 0..2 {
            let net = read_checkpoint(&mut lines)?;
            let targets = (0..per_critic)
                .map(|_| read_checkpoint(&mut lines))
                .collect::<Result<Vec<_>>>()?;
            critics.push((net, targets));
        }
        let director = if config.adcf { Some(read_checkpoint(&mut lines)?) } else { None };
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(bad("trailing data after the last network"));
        }

        let [(c1, t1), (c2, t2)]: [(Mlp, Vec<Mlp>); 2] = critics.try_into().expect("two critics");
        let mut agent = Ctd3Agent::from_networks(config, spec, actor, c1, c2, director)?;
        actor_target.ensure_same_architecture(agent.actor().net())?;
        *agent.actor_target_mut() = actor_target;
        for (i, targets) in [t1, t2].into_iter().enumerate() {
            for (slot, t) in agent.critic_targets_mut(i).iter_mut().zip(targets) {
                t.ensure_same_architecture(slot)?;
                *slot = t;
            }
        }
        agent.set_step_count(header.step);
        agent.set_occasions(header.occasions);
        Ok(agent)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_checkpoint_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, spec: &EnvSpec) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint_str(&text, spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvId;
    use crate::replay::{Transition, TripleReplay};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trained(adcf: bool, idem: bool) -> Ctd3Agent {
        let spec = EnvId::Pendulum.spec();
        let cfg = AgentConfig {
            hidden: vec![6],
            director_hidden: vec![5],
            batch_size: 4,
            warmup: 5,
            ..AgentConfig::default()
        }
        .with_flags(adcf, idem);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut agent = Ctd3Agent::new(cfg, &spec, &mut rng).unwrap();
        let mut replay = TripleReplay::new(-4.0);
        for _ in 0..30 {
            let t = Transition {
                state: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                action: vec![rng.random_range(-2.0..2.0)],
                reward: rng.random_range(-8.0..0.0),
                next_state: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                truncated: false,
                terminal: false,
            };
            agent.train_step(&mut replay, t, &mut rng).unwrap();
        }
        agent
    }

    #[test]
    fn round_trip_restores_every_network() {
        for (adcf, idem) in [(true, true), (false, false), (true, false), (false, true)] {
            let agent = trained(adcf, idem);
            let text = agent.to_checkpoint_string();
            let back = Ctd3Agent::from_checkpoint_str(&text, agent.spec()).unwrap();
            assert_eq!(back.member_networks(), agent.member_networks());
            assert_eq!(back.step_count(), 30);
            assert_eq!(back.config(), agent.config());
            assert_eq!(back.critic(0).occasions(), agent.critic(0).occasions());
            assert_eq!(back.to_checkpoint_string(), text);
        }
    }

    #[test]
    fn wrong_environment_is_a_dimension_error() {
        let agent = trained(true, true);
        let err = Ctd3Agent::from_checkpoint_str(&agent.to_checkpoint_string(), &EnvId::PointMass.spec()).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Dimension { .. }), "{msg}");
        assert!(msg.contains("expected 4") && msg.contains("found 3"), "{msg}");
    }

    #[test]
    fn corruption_is_rejected() {
        let text = trained(true, true).to_checkpoint_string();
        let spec = EnvId::Pendulum.spec();
        let tampered = text.replacen("tau = 0.005", "tau = 0.5", 1);
        assert!(Ctd3Agent::from_checkpoint_str(&tampered, &spec).unwrap_err().to_string().contains("hash"));
        let truncated = &text[..text.len() / 2];
        assert!(Ctd3Agent::from_checkpoint_str(truncated, &spec).is_err());
        assert!(Ctd3Agent::from_checkpoint_str("", &spec).is_err());
        assert!(Ctd3Agent::from_checkpoint_str(&format!("{text}1.0\n"), &spec).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agent.ckpt");
        let agent = trained(false, true);
        agent.save(&path).unwrap();
        let back = Ctd3Agent::load(&path, agent.spec()).unwrap();
        assert_eq!(back.member_networks(), agent.member_networks());
        assert!(Ctd3Agent::load(&dir.path().join("missing"), agent.spec()).is_err());
    }
}
