/// Statistics of the uniformly random policy, measured once over
/// [`RandomBaseline::EPISODES`] episodes and recorded here.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomBaseline {
    pub seed: u64,
    pub episodes: usize,
    /// Mean undiscounted episode return.
    pub mean: f64,
    /// Sample standard deviation of the episode return.
    pub std_dev: f64,
}

impl RandomBaseline {
    pub const SEED: u64 = 20_240_917;
    pub const EPISODES: usize = 10_000;

    pub const PENDULUM: RandomBaseline = RandomBaseline {
        seed: Self::SEED,
        episodes: Self::EPISODES,
        mean: -1227.9998935014937,
        std_dev: 286.36652874897067,
    };

    pub const POINTMASS: RandomBaseline = RandomBaseline {
        seed: Self::SEED,
        episodes: Self::EPISODES,
        mean: -300.308648098764,
        std_dev: 129.36115202030606,
    };
}

impl RandomBaseline {
    /// 95% confidence interval of the mean return.
    pub fn band(&self) -> (f64, f64) {
        let half = 1.96 * self.std_dev / (self.episodes as f64).sqrt();
        (self.mean - half, self.mean + half)
    }

    pub fn band_width(&self) -> f64 {
        let (lo, hi) = self.band();
        hi - lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{random_policy_returns, EnvId};

    /// Re-runs the full Monte Carlo measurement behind the recorded values.
    #[test]
    fn recorded_values_match_a_fresh_oracle_run() {
        for id in EnvId::ALL {
            let recorded = id.random_baseline();
            let returns = random_policy_returns(id.make().as_mut(), recorded.seed, recorded.episodes).unwrap();
            let n = returns.len() as f64;
            let mean = returns.iter().sum::<f64>() / n;
            let std = (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            assert!((mean - recorded.mean).abs() <= 1e-9 * recorded.mean.abs(), "{id}: {mean}");
            assert!((std - recorded.std_dev).abs() <= 1e-9 * recorded.std_dev, "{id}: {std}");
        }
    }

    #[test]
    fn short_runs_land_near_the_band() {
        // a 1000-episode estimate sits within 4 standard errors of the recorded mean
        for id in EnvId::ALL {
            let b = id.random_baseline();
            let m = crate::env::random_policy_return(id.make().as_mut(), 77, 1000).unwrap();
            assert!((m - b.mean).abs() < 4.0 * b.std_dev / 1000f64.sqrt(), "{id}: {m}");
        }
    }

    #[test]
    fn band_is_symmetric_confidence_interval() {
        let b = RandomBaseline::PENDULUM;
        let (lo, hi) = b.band();
        assert!(lo < b.mean && b.mean < hi);
        assert!((b.band_width() - 2.0 * 1.96 * b.std_dev / 100.0).abs() < 1e-9);
    }
}
