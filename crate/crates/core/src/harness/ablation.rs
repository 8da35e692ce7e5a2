use std::fmt;
use std::fs;
use std::path::PathBuf;

use super::metrics::MetricsRow;
use super::run::{run_training_named, RunConfig};
use crate::env::EnvId;
use crate::error::{Error, Result};
use crate::nn::format_f64;

pub const SUMMARY_HEADER: &str = "variant,env,seed,final_smooth_return";

/// The four arms of the ablation, in reporting order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Td3,
    Td3Adcf,
    Td3Idem,
    Ctd3,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Td3, Variant::Td3Adcf, Variant::Td3Idem, Variant::Ctd3];

    /// `(adcf, idem)`.
    pub fn flags(self) -> (bool, bool) {
        match self {
            Variant::Td3 => (false, false),
            Variant::Td3Adcf => (true, false),
            Variant::Td3Idem => (false, true),
            Variant::Ctd3 => (true, true),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Td3 => "TD3",
            Variant::Td3Adcf => "TD3+ADCF",
            Variant::Td3Idem => "TD3+IDEM",
            Variant::Ctd3 => "CTD3",
        }
    }

    /// File-system friendly name.
    pub fn slug(self) -> &'static str {
        match self {
            Variant::Td3 => "td3",
            Variant::Td3Adcf => "td3_adcf",
            Variant::Td3Idem => "td3_idem",
            Variant::Ctd3 => "ctd3",
        }
    }

    /// `base` with this arm's flags.
    pub fn config(self, base: &RunConfig) -> RunConfig {
        let (adcf, idem) = self.flags();
        let mut cfg = base.clone();
        cfg.agent.adcf = adcf;
        cfg.agent.idem = idem;
        cfg
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one arm for one seed. A failed arm keeps its error message.
#[derive(Clone, Debug)]
pub struct AblationArm {
    pub variant: Variant,
    pub seed: u64,
    pub result: std::result::Result<Vec<MetricsRow>, String>,
}

impl AblationArm {
    pub fn final_smooth_return(&self) -> Option<f64> {
        self.result.as_ref().ok()?.last().map(|r| r.return_smooth)
    }
}

#[derive(Clone, Debug)]
pub struct AblationSummary {
    pub env: EnvId,
    pub arms: Vec<AblationArm>,
}

impl AblationSummary {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{SUMMARY_HEADER}\n");
        for arm in &self.arms {
            let v = arm.final_smooth_return().map(format_f64).unwrap_or_default();
            s += &format!("{},{},{},{v}\n", arm.variant, self.env, arm.seed);
        }
        s
    }

    /// Final smoothed returns of `variant` over the seeds that succeeded.
    pub fn finals(&self, variant: Variant) -> Vec<f64> {
        self.arms
            .iter()
            .filter(|a| a.variant == variant)
            .filter_map(AblationArm::final_smooth_return)
            .collect()
    }

    /// Median of [`finals`](Self::finals); the mean of the middle pair for
    /// an even count.
    pub fn median_final(&self, variant: Variant) -> Option<f64> {
        median(&self.finals(variant))
    }

    pub fn failures(&self) -> impl Iterator<Item = &AblationArm> {
        self.arms.iter().filter(|a| a.result.is_err())
    }
}

pub(crate) fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Runs the four arms of `base` for its seed.
pub fn run_ablation(base: &RunConfig) -> Result<AblationSummary> {
    run_ablation_seeds(base, &[base.seed])
}

/// Runs every arm for every seed. Arms run one after another with disjoint
/// state. An arm that fails is recorded and the rest continue. With an
/// output directory, arm `v` for seed `s` writes under `seed<s>/<v>/` and a
/// `summary.csv` lands at the top.
pub fn run_ablation_seeds(base: &RunConfig, seeds: &[u64]) -> Result<AblationSummary> {
    base.validate()?;
    let mut arms = Vec::with_capacity(seeds.len() * Variant::ALL.len());
    for &seed in seeds {
        for variant in Variant::ALL {
            let mut cfg = variant.config(base);
            cfg.seed = seed;
            cfg.out_dir = base
                .out_dir
                .as_ref()
                .map(|d| d.join(format!("seed{seed}")).join(variant.slug()));
            let result = run_training_named(&cfg, "metrics.csv", "agent.ckpt")
                .map(|out| out.rows)
                .map_err(|e| e.to_string());
            arms.push(AblationArm { variant, seed, result });
        }
    }
    let summary = AblationSummary { env: base.env, arms };
    if let Some(dir) = &base.out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path: PathBuf = dir.join("summary.csv");
        fs::write(&path, summary.to_csv()).map_err(|e| Error::io(&path, e))?;
    }
    Ok(summary)
}
