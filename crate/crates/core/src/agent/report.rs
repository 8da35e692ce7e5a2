/// What one call to `train_step` did.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    /// Environment step, counted from 1.
    pub step: u64,
    /// A critic update happened.
    pub learned: bool,
    /// The director was due but a side buffer held fewer than a batch.
    pub director_skipped: bool,
    /// The main buffer held fewer than a batch after warmup.
    pub critic_skipped: bool,
    pub loss_q1: Option<f64>,
    pub loss_q2: Option<f64>,
    pub director_v: Option<f64>,
    pub actor_j: Option<f64>,
    /// Director weight at this step; zero without a director.
    pub gamma_d: f64,
}

impl StepReport {
    pub(crate) fn idle(step: u64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }

    /// Exact comparison that also distinguishes `0.0` from `-0.0`.
    pub fn bit_eq(&self, other: &Self) -> bool {
        fn opt(a: Option<f64>, b: Option<f64>) -> bool {
            a.map(f64::to_bits) == b.map(f64::to_bits)
        }
        self.step == other.step
            && self.learned == other.learned
            && self.director_skipped == other.director_skipped
            && self.critic_skipped == other.critic_skipped
            && opt(self.loss_q1, other.loss_q1)
            && opt(self.loss_q2, other.loss_q2)
            && opt(self.director_v, other.director_v)
            && opt(self.actor_j, other.actor_j)
            && self.gamma_d.to_bits() == other.gamma_d.to_bits()
    }
}
