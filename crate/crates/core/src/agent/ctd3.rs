use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{director_weight, AgentConfig, CriticAction, CriticSchedule, TargetSchedule};
use super::objectives::{
    actor_objective_and_grad, critic_loss_and_grad, director_objective_and_grad, Actor,
};
use super::report::StepReport;
use crate::env::EnvSpec;
use crate::error::{Error, Result};
use crate::nn::{soft_update, Activation, AdamState, Mlp, Tensor2};
use crate::replay::{Batch, BufferKind, Transition, TripleReplay};

/// One online critic, its optimizer and its target networks (two with the
/// improved double estimator, one without).
#[derive(Clone, Debug)]
pub struct CriticUnit {
    pub(crate) net: Mlp,
    pub(crate) opt: AdamState,
    pub(crate) targets: Vec<Mlp>,
    /// Number of target-update occasions seen so far.
    pub(crate) occasions: u64,
}

impl CriticUnit {
    fn new(net: Mlp, idem: bool) -> Self {
        let targets = vec![net.clone(); if idem { 2 } else { 1 }];
        Self {
            opt: AdamState::new(net.param_count()),
            net,
            targets,
            occasions: 0,
        }
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn targets(&self) -> &[Mlp] {
        &self.targets
    }

    pub fn occasions(&self) -> u64 {
        self.occasions
    }

    /// Mean of the target networks' estimates, row by row.
    fn target_estimate(&self, inputs: &Tensor2) -> Result<Vec<f64>> {
        match self.targets.as_slice() {
            [single] => Ok(single.forward_batch(inputs)?.into_vec()),
            [first, second] => {
                let a = first.forward_batch(inputs)?;
                let b = second.forward_batch(inputs)?;
                Ok(a.data().iter().zip(b.data()).map(|(x, y)| (x + y) / 2.0).collect())
            }
            _ => unreachable!("a critic has one or two targets"),
        }
    }
}

#[derive(Clone, Debug)]
struct DirectorUnit {
    net: Mlp,
    opt: AdamState,
}

/// Actor, director and twin critics with their target networks.
///
/// With `adcf` and `idem` both off this is plain TD3: one target per critic
/// and no director term in the actor objective.
#[derive(Clone, Debug)]
pub struct Ctd3Agent {
    config: AgentConfig,
    spec: EnvSpec,
    actor: Actor,
    actor_target: Mlp,
    actor_opt: AdamState,
    critics: [CriticUnit; 2],
    director: Option<DirectorUnit>,
    t: u64,
}

/// Builds `(actor, critic 1, critic 2, director)` networks in that order from
/// `rng`, the order every learner in this crate relies on.
pub(crate) fn init_networks<R: Rng + ?Sized>(
    config: &AgentConfig,
    spec: &EnvSpec,
    with_director: bool,
    rng: &mut R,
) -> Result<(Mlp, Mlp, Mlp, Option<Mlp>)> {
    let sa = spec.obs_dim + spec.action_dim;
    let actor = Mlp::with_hidden(
        spec.obs_dim,
        &config.hidden,
        spec.action_dim,
        Activation::Relu,
        Activation::Tanh,
        rng,
    )?;
    let c1 = Mlp::with_hidden(sa, &config.hidden, 1, Activation::Relu, Activation::Identity, rng)?;
    let c2 = Mlp::with_hidden(sa, &config.hidden, 1, Activation::Relu, Activation::Identity, rng)?;
    let director = if with_director {
        Some(Mlp::with_hidden(
            sa,
            &config.director_hidden,
            1,
            Activation::Relu,
            Activation::Sigmoid,
            rng,
        )?)
    } else {
        None
    };
    Ok((actor, c1, c2, director))
}

impl Ctd3Agent {
    pub fn new<R: Rng + ?Sized>(config: AgentConfig, spec: &EnvSpec, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let (actor_net, c1, c2, director) = init_networks(&config, spec, config.adcf, rng)?;
        Self::from_networks(config, spec, actor_net, c1, c2, director)
    }

    /// Assembles an agent from explicit networks; every target starts as an
    /// exact copy of its source.
    pub fn from_networks(
        config: AgentConfig,
        spec: &EnvSpec,
        actor_net: Mlp,
        critic1: Mlp,
        critic2: Mlp,
        director: Option<Mlp>,
    ) -> Result<Self> {
        config.validate()?;
        let sa = spec.obs_dim + spec.action_dim;
        for (name, c) in [("critic 1", &critic1), ("critic 2", &critic2)] {
            if c.input_dim() != sa || c.output_dim() != 1 {
                return Err(Error::Architecture(format!(
                    "{name} must map {sa} inputs to 1 output, found {}",
                    c.describe()
                )));
            }
        }
        if director.is_some() != config.adcf {
            return Err(Error::Architecture(
                "a director network is required exactly when adcf is enabled".into(),
            ));
        }
        let director = match director {
            Some(d) => {
                if d.input_dim() != sa || d.output_dim() != 1 || d.activations().last() != Some(&Activation::Sigmoid) {
                    return Err(Error::Architecture(format!(
                        "director must map {sa} inputs to 1 sigmoid output, found {}",
                        d.describe()
                    )));
                }
                Some(DirectorUnit {
                    opt: AdamState::new(d.param_count()),
                    net: d,
                })
            }
            None => None,
        };
        let actor = Actor::new(actor_net, spec)?;
        Ok(Self {
            actor_target: actor.net().clone(),
            actor_opt: AdamState::new(actor.net().param_count()),
            actor,
            critics: [
                CriticUnit::new(critic1, config.idem),
                CriticUnit::new(critic2, config.idem),
            ],
            director,
            spec: spec.clone(),
            config,
            t: 0,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn actor(&self) -> &Actor {
        &self.actor
    }

    pub fn actor_target(&self) -> &Mlp {
        &self.actor_target
    }

    pub fn critic(&self, i: usize) -> &CriticUnit {
        &self.critics[i]
    }

    pub fn director(&self) -> Option<&Mlp> {
        self.director.as_ref().map(|d| &d.net)
    }

    /// Environment steps seen so far.
    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn actor_net_mut(&mut self) -> &mut Mlp {
        self.actor.net_mut()
    }

    pub fn actor_target_mut(&mut self) -> &mut Mlp {
        &mut self.actor_target
    }

    pub fn critic_net_mut(&mut self, i: usize) -> &mut Mlp {
        &mut self.critics[i].net
    }

    pub fn critic_targets_mut(&mut self, i: usize) -> &mut [Mlp] {
        &mut self.critics[i].targets
    }

    pub fn director_mut(&mut self) -> Option<&mut Mlp> {
        self.director.as_mut().map(|d| &mut d.net)
    }

    pub(crate) fn set_step_count(&mut self, t: u64) {
        self.t = t;
    }

    pub(crate) fn set_occasions(&mut self, occasions: [u64; 2]) {
        for (c, o) in self.critics.iter_mut().zip(occasions) {
            c.occasions = o;
        }
    }

    /// `mu(obs)`, plus Gaussian exploration noise when `explore` is set,
    /// clamped to the action bounds.
    pub fn select_action<R: Rng + ?Sized>(&self, obs: &[f64], explore: bool, rng: &mut R) -> Result<Vec<f64>> {
        use super::objectives::Policy;
        let mut a = self.actor.act(obs)?;
        if explore {
            for (v, h) in a.iter_mut().zip(self.actor.half_range()) {
                let z: f64 = rng.sample(StandardNormal);
                *v += self.config.exploration_noise * h * z;
            }
            self.spec.clamp(&mut a);
        }
        Ok(a)
    }

    /// `mu'(s') + clip(N(0, sigma'), -c, c)` for every row, clamped to the
    /// action bounds. Noise is drawn row by row.
    pub fn smoothed_target_actions<R: Rng + ?Sized>(&self, next_states: &Tensor2, rng: &mut R) -> Result<Tensor2> {
        let mut raw = self.actor_target.forward_batch(next_states)?;
        let (center, half) = (self.spec.action_center(), self.actor.half_range().to_vec());
        let c = self.config.noise_clip;
        for i in 0..raw.rows() {
            let row = raw.row_mut(i);
            for ((v, m), h) in row.iter_mut().zip(&center).zip(&half) {
                let z: f64 = rng.sample(StandardNormal);
                let noise = (self.config.target_noise * z).clamp(-c, c);
                *v = m + h * *v + noise;
            }
            self.spec.clamp(row);
        }
        Ok(raw)
    }

    pub fn smoothed_target_action<R: Rng + ?Sized>(&self, next_obs: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let x = Tensor2::from_vec(1, next_obs.len(), next_obs.to_vec())?;
        Ok(self.smoothed_target_actions(&x, rng)?.into_vec())
    }

    /// Shared regression target `y = r + gamma_Q * min(Q'_1, Q'_2)`, where
    /// `Q'_i` averages critic i's two targets (or is its single target), and
    /// the bootstrap term is dropped on terminal transitions.
    pub fn compute_target<R: Rng + ?Sized>(&self, batch: &Batch, rng: &mut R) -> Result<Vec<f64>> {
        let next_actions = self.smoothed_target_actions(&batch.next_states, rng)?;
        let inputs = Tensor2::hcat(&batch.next_states, &next_actions)?;
        let q1 = self.critics[0].target_estimate(&inputs)?;
        let q2 = self.critics[1].target_estimate(&inputs)?;
        Ok((0..batch.len())
            .map(|i| {
                if batch.terminal[i] {
                    batch.rewards[i]
                } else {
                    batch.rewards[i] + self.config.gamma_q * q1[i].min(q2[i])
                }
            })
            .collect())
    }

    /// Critics scheduled to learn at step `t`.
    fn scheduled_critics(&self, t: u64) -> &'static [usize] {
        match self.config.critic_schedule {
            CriticSchedule::Both => &[0, 1],
            CriticSchedule::Alternate if t % 2 == 1 => &[0],
            CriticSchedule::Alternate => &[1],
        }
    }

    fn critic_inputs<R: Rng + ?Sized>(&self, batch: &Batch, rng: &mut R) -> Result<Tensor2> {
        match self.config.critic_action {
            CriticAction::Stored => Tensor2::hcat(&batch.states, &batch.actions),
            CriticAction::Recomputed => {
                let mut actions = self.actor.act_batch(&batch.states)?;
                let sigma = self.config.exploration_noise;
                let half = self.actor.half_range().to_vec();
                for i in 0..actions.rows() {
                    let row = actions.row_mut(i);
                    for (v, h) in row.iter_mut().zip(&half) {
                        let z: f64 = rng.sample(StandardNormal);
                        *v += sigma * h * z;
                    }
                    self.spec.clamp(row);
                }
                Tensor2::hcat(&batch.states, &actions)
            }
        }
    }

    /// One Adam step for each scheduled critic toward the shared `targets`.
    /// Returns each critic's pre-step loss (`None` when it did not learn).
    pub fn update_critics<R: Rng + ?Sized>(
        &mut self,
        batch: &Batch,
        targets: &[f64],
        rng: &mut R,
    ) -> Result<[Option<f64>; 2]> {
        let inputs = self.critic_inputs(batch, rng)?;
        let scheduled = self.scheduled_critics(self.t.max(1));
        let mut losses = [None, None];
        for &i in scheduled {
            let (loss, grads) = critic_loss_and_grad(&self.critics[i].net, &inputs, targets)?;
            let unit = &mut self.critics[i];
            unit.opt.step(unit.net.params_mut(), &grads, self.config.critic_lr)?;
            losses[i] = Some(loss);
        }
        Ok(losses)
    }

    /// One ascent step on the director objective. Returns its pre-step value.
    pub fn update_director(&mut self, high: &Batch, low: &Batch) -> Result<f64> {
        let lr = self.config.director_lr;
        let Some(unit) = self.director.as_mut() else {
            return Err(Error::config("adcf", "director update requested with adcf disabled"));
        };
        let hi = Tensor2::hcat(&high.states, &high.actions)?;
        let lo = Tensor2::hcat(&low.states, &low.actions)?;
        let (value, grads) = director_objective_and_grad(&unit.net, &hi, &lo)?;
        unit.opt.ascend(unit.net.params_mut(), &grads, lr)?;
        Ok(value)
    }

    /// Actor ascent step at environment step `t` followed by the target-actor
    /// soft update. Returns the pre-step objective.
    pub fn update_actor(&mut self, states: &Tensor2, t: u64) -> Result<f64> {
        let weight = director_weight(&self.config, t);
        let director = self.director.as_ref().map(|d| (&d.net, weight));
        let (objective, grads) = actor_objective_and_grad(&self.actor, &self.critics[0].net, director, states)?;
        if !objective.is_finite() {
            return Err(Error::NonFinite("actor objective"));
        }
        let lr = self.config.actor_lr;
        self.actor_opt.ascend(self.actor.net_mut().params_mut(), &grads, lr)?;
        soft_update(&mut self.actor_target, self.actor.net(), self.config.tau)?;
        Ok(objective)
    }

    /// Soft-updates critic targets after the critics in `updated` learned at
    /// step `t`.
    pub fn update_targets(&mut self, t: u64, updated: &[usize]) -> Result<()> {
        let tau = self.config.tau;
        for &i in updated {
            let unit = &mut self.critics[i];
            unit.occasions += 1;
            if unit.targets.len() == 1 {
                soft_update(&mut unit.targets[0], &unit.net, tau)?;
                continue;
            }
            match self.config.target_schedule {
                TargetSchedule::Alternating => {
                    let k = if unit.occasions % 2 == 1 { 0 } else { 1 };
                    soft_update(&mut unit.targets[k], &unit.net, tau)?;
                }
                TargetSchedule::Literal => {
                    let owner = if t % 2 == 1 { 0 } else { 1 };
                    if i == owner {
                        let CriticUnit { net, targets, .. } = unit;
                        for target in targets.iter_mut() {
                            soft_update(target, net, tau)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// One iteration of the training loop for an environment transition.
    ///
    /// Order: store; director step (when both side buffers can fill a
    /// batch); critic step on a main-buffer batch; on every `d`-th step the
    /// actor step with its target update; critic target updates. During
    /// warmup only the storage happens.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        replay: &mut TripleReplay,
        transition: Transition,
        rng: &mut R,
    ) -> Result<StepReport> {
        self.t += 1;
        let t = self.t;
        replay.classify_and_store(transition);
        if replay.is_adaptive() && t % self.config.cutoff_refresh_interval == 0 {
            replay.refresh_cutoff()?;
        }
        let mut report = StepReport::idle(t);
        if self.config.adcf {
            report.gamma_d = director_weight(&self.config, t);
        }
        if t <= self.config.warmup {
            return Ok(report);
        }
        let n = self.config.batch_size;

        if self.config.adcf {
            if replay.len(BufferKind::High) >= n && replay.len(BufferKind::Low) >= n {
                let high = Batch::from_transitions(&replay.sample(BufferKind::High, n, rng)?)?;
                let low = Batch::from_transitions(&replay.sample(BufferKind::Low, n, rng)?)?;
                report.director_v = Some(self.update_director(&high, &low)?);
            } else {
                report.director_skipped = true;
            }
        }

        if replay.len(BufferKind::Main) < n {
            report.critic_skipped = true;
            return Ok(report);
        }
        let batch = Batch::from_transitions(&replay.sample(BufferKind::Main, n, rng)?)?;
        let y = self.compute_target(&batch, rng)?;
        let [l1, l2] = self.update_critics(&batch, &y, rng)?;
        report.loss_q1 = l1;
        report.loss_q2 = l2;
        report.learned = true;

        if t % self.config.policy_delay == 0 {
            report.actor_j = Some(self.update_actor(&batch.states, t)?);
        }
        let updated: Vec<usize> = (0..2).filter(|&i| [l1, l2][i].is_some()).collect();
        self.update_targets(t, &updated)?;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvId;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn small_config() -> AgentConfig {
        AgentConfig {
            hidden: vec![8, 8],
            director_hidden: vec![8],
            batch_size: 8,
            warmup: 20,
            ..AgentConfig::for_env(EnvId::Pendulum, 1000)
        }
    }

    fn constant_net(input: usize, value: f64) -> Mlp {
        let mut net = Mlp::zeros(&[input, 1], &[Activation::Identity]).unwrap();
        let last = net.param_count() - 1;
        net.params_mut()[last] = value;
        net
    }

    fn random_transition(rng: &mut ChaCha8Rng, spec: &EnvSpec) -> Transition {
        Transition {
            state: (0..spec.obs_dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            action: spec.sample_action(rng),
            reward: rng.random_range(-8.0..0.0),
            next_state: (0..spec.obs_dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            truncated: false,
            terminal: false,
        }
    }

    #[test]
    fn targets_start_as_exact_copies() {
        let spec = EnvId::Pendulum.spec();
        let agent = Ctd3Agent::new(small_config(), &spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(agent.actor_target(), agent.actor().net());
        for i in 0..2 {
            assert_eq!(agent.critic(i).targets().len(), 2);
            for tgt in agent.critic(i).targets() {
                assert_eq!(tgt, agent.critic(i).net());
            }
        }
        assert!(agent.director().is_some());
        let off = Ctd3Agent::new(small_config().with_flags(false, false), &spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(off.director().is_none());
        assert_eq!(off.critic(0).targets().len(), 1);
    }

    #[test]
    fn stub_targets_give_averaged_minimum() {
        let spec = EnvId::Pendulum.spec();
        let mut agent = Ctd3Agent::new(small_config(), &spec, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let sa = spec.obs_dim + spec.action_dim;
        let [a, b] = agent.critic_targets_mut(0) else { unreachable!() };
        *a = constant_net(sa, 2.0);
        *b = constant_net(sa, 4.0);
        let [c, d] = agent.critic_targets_mut(1) else { unreachable!() };
        *c = constant_net(sa, 10.0);
        *d = constant_net(sa, 0.0);
        let t = Transition {
            state: vec![1.0, 0.0, 0.0],
            action: vec![0.0],
            reward: 1.0,
            next_state: vec![0.0, 1.0, 0.5],
            truncated: false,
            terminal: false,
        };
        let mut terminal = t.clone();
        terminal.terminal = true;
        let batch = Batch::from_transitions(&[&t, &terminal]).unwrap();
        let y = agent.compute_target(&batch, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert!((y[0] - 3.97).abs() < 1e-12, "{}", y[0]);
        assert_eq!(y[1], 1.0);
    }

    #[test]
    fn zero_noise_action_is_the_policy_output() {
        use crate::agent::Policy;
        let spec = EnvId::PointMass.spec();
        let mut cfg = AgentConfig { exploration_noise: 0.0, ..small_config() };
        cfg.cutoff = EnvId::PointMass.default_cutoff();
        let agent = Ctd3Agent::new(cfg, &spec, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let obs = [0.3, -0.2, 0.1, 0.0];
        let mu = agent.actor().act(&obs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(agent.select_action(&obs, true, &mut rng).unwrap(), mu);
        assert_eq!(agent.select_action(&obs, false, &mut rng).unwrap(), mu);
    }

    #[test]
    fn actions_respect_bounds_under_heavy_noise() {
        let spec = EnvId::Pendulum.spec();
        let cfg = AgentConfig { exploration_noise: 3.0, ..small_config() };
        let agent = Ctd3Agent::new(cfg, &spec, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10_000 {
            let obs: Vec<f64> = (0..3).map(|_| rng.random_range(-8.0..8.0)).collect();
            let a = agent.select_action(&obs, true, &mut rng).unwrap();
            assert!((-2.0..=2.0).contains(&a[0]));
        }
    }

    #[test]
    fn target_noise_is_clipped() {
        let spec = EnvId::PointMass.spec();
        let cfg = AgentConfig { target_noise: 5.0, noise_clip: 0.5, ..small_config() };
        let mut agent = Ctd3Agent::new(cfg, &spec, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        // a zero target actor outputs the action center exactly
        for p in agent.actor_target_mut().params_mut() {
            *p = 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = Tensor2::zeros(1000, 4);
        let mut hit_clip = false;
        for _ in 0..50 {
            let a = agent.smoothed_target_actions(&s, &mut rng).unwrap();
            for v in a.data() {
                assert!(v.abs() <= 0.5);
                hit_clip |= v.abs() == 0.5;
            }
        }
        assert!(hit_clip);
    }

    #[test]
    fn zero_target_noise_is_exact_target_policy() {
        let spec = EnvId::Pendulum.spec();
        let cfg = AgentConfig { target_noise: 0.0, ..small_config() };
        let agent = Ctd3Agent::new(cfg, &spec, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let s = [0.5, 0.5, -1.0];
        let got = agent.smoothed_target_action(&s, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let want = 2.0 * agent.actor_target().forward(&s).unwrap()[0];
        assert_eq!(got, vec![want]);
    }

    #[test]
    fn warmup_only_stores() {
        let spec = EnvId::Pendulum.spec();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut agent = Ctd3Agent::new(small_config(), &spec, &mut rng).unwrap();
        let before = agent.clone();
        let mut replay = TripleReplay::new(-4.0);
        for _ in 0..20 {
            let tr = random_transition(&mut rng, &spec);
            let rep = agent.train_step(&mut replay, tr, &mut rng).unwrap();
            assert!(!rep.learned && rep.loss_q1.is_none());
        }
        assert_eq!(replay.len(BufferKind::Main), 20);
        assert_eq!(agent.actor().net(), before.actor().net());
        assert_eq!(agent.critic(0).net(), before.critic(0).net());
        assert_eq!(agent.director(), before.director());
    }

    #[test]
    fn report_tracks_director_weight_and_delay() {
        let spec = EnvId::Pendulum.spec();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = small_config();
        let mut agent = Ctd3Agent::new(cfg.clone(), &spec, &mut rng).unwrap();
        let mut replay = TripleReplay::new(-4.0);
        for _ in 0..60 {
            let tr = random_transition(&mut rng, &spec);
            let rep = agent.train_step(&mut replay, tr, &mut rng).unwrap();
            assert_eq!(rep.gamma_d, director_weight(&cfg, rep.step));
            if rep.learned {
                assert_eq!(rep.actor_j.is_some(), rep.step % cfg.policy_delay == 0);
                assert!(rep.loss_q1.is_some() && rep.loss_q2.is_some());
            }
        }
        assert_eq!(agent.step_count(), 60);
    }

    fn shifted_critics(tau: f64) -> Ctd3Agent {
        let spec = EnvId::Pendulum.spec();
        let cfg = AgentConfig { tau, ..small_config() };
        Ctd3Agent::new(cfg, &spec, &mut ChaCha8Rng::seed_from_u64(17)).unwrap()
    }

    fn shift(agent: &mut Ctd3Agent, by: f64) {
        for i in 0..2 {
            for p in agent.critic_net_mut(i).params_mut() {
                *p += by;
            }
        }
    }

    #[test]
    fn first_occasion_moves_only_the_first_target() {
        let mut agent = shifted_critics(0.3);
        let before = agent.clone();
        shift(&mut agent, 1.0);
        agent.update_targets(1, &[0, 1]).unwrap();
        for i in 0..2 {
            let [a, b] = agent.critic(i).targets() else { unreachable!() };
            assert_eq!(b, &before.critic(i).targets()[1]);
            for ((t, old), src) in a.params().iter().zip(before.critic(i).targets()[0].params()).zip(agent.critic(i).net().params()) {
                assert!((t - (0.3 * src + 0.7 * old)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_tau_targets_ping_pong() {
        let mut agent = shifted_critics(1.0);
        let mut history = Vec::new();
        for k in 1..=5u64 {
            shift(&mut agent, k as f64);
            history.push(agent.critic(0).net().clone());
            agent.update_targets(k, &[0, 1]).unwrap();
            let [a, b] = agent.critic(0).targets() else { unreachable!() };
            let last_odd = history.len() - if k % 2 == 1 { 1 } else { 2 };
            assert_eq!(a, &history[last_odd]);
            if k >= 2 {
                let last_even = history.len() - if k % 2 == 0 { 1 } else { 2 };
                assert_eq!(b, &history[last_even]);
            }
        }
    }

    #[test]
    fn single_target_moves_every_occasion_without_idem() {
        let spec = EnvId::Pendulum.spec();
        let cfg = AgentConfig { tau: 1.0, ..small_config().with_flags(true, false) };
        let mut agent = Ctd3Agent::new(cfg, &spec, &mut ChaCha8Rng::seed_from_u64(18)).unwrap();
        for k in 1..=3 {
            shift(&mut agent, 0.5);
            agent.update_targets(k, &[0, 1]).unwrap();
            assert_eq!(&agent.critic(1).targets()[0], agent.critic(1).net());
        }
    }

    #[test]
    fn literal_schedule_moves_both_targets_of_one_critic() {
        let spec = EnvId::Pendulum.spec();
        let cfg = AgentConfig { target_schedule: TargetSchedule::Literal, tau: 0.5, ..small_config() };
        let mut agent = Ctd3Agent::new(cfg, &spec, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
        for p in agent.critic_net_mut(0).params_mut() {
            *p += 1.0;
        }
        for p in agent.critic_net_mut(1).params_mut() {
            *p += 1.0;
        }
        let before = agent.clone();
        agent.update_targets(1, &[0, 1]).unwrap();
        let c0 = agent.critic(0);
        assert_eq!(c0.targets()[0], c0.targets()[1]);
        assert_ne!(&c0.targets()[0], &before.critic(0).targets()[0]);
        assert_eq!(agent.critic(1).targets(), before.critic(1).targets());
    }

    #[test]
    fn alternate_critic_schedule_updates_one_critic() {
        let spec = EnvId::Pendulum.spec();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let cfg = AgentConfig { critic_schedule: CriticSchedule::Alternate, ..small_config() };
        let mut agent = Ctd3Agent::new(cfg, &spec, &mut rng).unwrap();
        let mut replay = TripleReplay::new(-4.0);
        for _ in 0..40 {
            let tr = random_transition(&mut rng, &spec);
            let rep = agent.train_step(&mut replay, tr, &mut rng).unwrap();
            if rep.learned {
                assert_eq!(rep.loss_q1.is_some(), rep.step % 2 == 1);
                assert_eq!(rep.loss_q2.is_some(), rep.step % 2 == 0);
            }
        }
        assert_eq!(agent.critic(0).occasions() + agent.critic(1).occasions(), 20);
    }

    #[test]
    fn recomputed_critic_action_runs() {
        let spec = EnvId::Pendulum.spec();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let cfg = AgentConfig { critic_action: CriticAction::Recomputed, ..small_config() };
        let mut agent = Ctd3Agent::new(cfg, &spec, &mut rng).unwrap();
        let mut replay = TripleReplay::new(-4.0);
        for _ in 0..30 {
            let tr = random_transition(&mut rng, &spec);
            agent.train_step(&mut replay, tr, &mut rng).unwrap();
        }
        assert!(agent.critic(0).net().is_finite());
    }

    #[test]
    fn adaptive_cutoff_refreshes_on_interval() {
        let spec = EnvId::Pendulum.spec();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let cfg = AgentConfig { cutoff_quantile: Some(0.5), cutoff_refresh_interval: 10, ..small_config() };
        let mut agent = Ctd3Agent::new(cfg, &spec, &mut rng).unwrap();
        let mut replay = TripleReplay::new(100.0).adaptive(0.5, 1000, 0).unwrap();
        for _ in 0..10 {
            let tr = random_transition(&mut rng, &spec);
            agent.train_step(&mut replay, tr, &mut rng).unwrap();
        }
        assert!(replay.cutoff() < 0.0);
        assert!(replay.check_invariants());
    }

    #[test]
    fn director_update_without_director_is_an_error() {
        let spec = EnvId::Pendulum.spec();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let mut agent = Ctd3Agent::new(small_config().with_flags(false, true), &spec, &mut rng).unwrap();
        let t = random_transition(&mut rng, &spec);
        let b = Batch::from_transitions(&[&t]).unwrap();
        assert!(agent.update_director(&b, &b).is_err());
    }
}
