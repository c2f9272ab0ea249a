//! Monte Carlo campaigns over `(scheme, model, t)` grids.
//!
//! Every trial draws its seeds from `(master_seed, cell, trial)` alone, so
//! rows do not depend on thread scheduling.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use gean::ezb::{ezb_prefix_estimates, EzbError};
use gean::probe::{upper_bound, DEFAULT_PROBE_ROUNDS};
use gean::runtime::{estimate_from_bound, estimation_slots, slots_used, EstimateError};
use gean::seed;
use gean::{AccuracySpec, ChannelModel, EstimatorOptions, PlannerConfig, Population, ReplyModel};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `10^2 .. 10^5` in half-decade steps.
pub const DEFAULT_T_VALUES: [u64; 7] = [100, 316, 1_000, 3_162, 10_000, 31_623, 100_000];

/// Frame sizes swept for EZB.
pub const EZB_FRAMES: [u64; 8] = [32, 64, 128, 256, 512, 1024, 2048, 4096];

/// Round counts swept for EZB.
pub const EZB_ROUNDS: [u64; 10] = [1, 2, 3, 4, 6, 8, 12, 16, 24, 32];

/// Trials at which the slot spread switches to 50-sample bootstrap bands.
pub const BOOTSTRAP_SAMPLE: usize = 50;
const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "GEAN")]
    Gean,
    #[serde(rename = "GEAN-WAEC")]
    GeanWaec,
    #[serde(rename = "EZB")]
    Ezb,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Gean, Scheme::GeanWaec, Scheme::Ezb];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Gean => "GEAN",
            Scheme::GeanWaec => "GEAN-WAEC",
            Scheme::Ezb => "EZB",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().replace('_', "-").as_str() {
            "GEAN" => Ok(Scheme::Gean),
            "GEAN-WAEC" | "WAEC" => Ok(Scheme::GeanWaec),
            "EZB" => Ok(Scheme::Ezb),
            other => Err(format!("unknown scheme `{other}` (expected GEAN, GEAN-WAEC or EZB)")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CampaignError {
    #[error("invalid campaign: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub schemes: Vec<Scheme>,
    pub models: Vec<ChannelModel>,
    pub t_values: Vec<u64>,
    pub alpha: f64,
    pub beta: f64,
    pub trials: u64,
    pub master_seed: u64,
    /// Add probe slots to `mean_slots` and `std_slots`.
    pub include_probe_cost: bool,
    pub output_dir: PathBuf,
    pub reply: ReplyModel,
    pub probe_rounds: u32,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            schemes: Scheme::ALL.to_vec(),
            models: ChannelModel::ALL.to_vec(),
            t_values: DEFAULT_T_VALUES.to_vec(),
            alpha: 0.95,
            beta: 0.05,
            trials: 100,
            master_seed: 1,
            include_probe_cost: false,
            output_dir: PathBuf::from("campaign-out"),
            reply: ReplyModel::default(),
            probe_rounds: DEFAULT_PROBE_ROUNDS,
        }
    }
}

impl CampaignConfig {
    pub fn spec(&self) -> Result<AccuracySpec, CampaignError> {
        AccuracySpec::new(self.alpha, self.beta).map_err(|e| CampaignError::Invalid(e.to_string()))
    }

    pub fn validate(&self) -> Result<AccuracySpec, CampaignError> {
        if self.trials == 0 {
            return Err(CampaignError::Invalid("trials must be >= 1".into()));
        }
        if self.t_values.is_empty() || self.schemes.is_empty() || self.models.is_empty() {
            return Err(CampaignError::Invalid("schemes, models and t values must be nonempty".into()));
        }
        if self.probe_rounds == 0 {
            return Err(CampaignError::Invalid("probe rounds must be >= 1".into()));
        }
        self.spec()
    }

    /// Cells in output order.
    pub fn cells(&self) -> Vec<(Scheme, ChannelModel, u64)> {
        let mut out = Vec::new();
        for &s in &self.schemes {
            for &m in &self.models {
                for &t in &self.t_values {
                    out.push((s, m, t));
                }
            }
        }
        out
    }
}

/// One grid cell. Optional fields are blank in CSV when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRow {
    pub scheme: Scheme,
    #[serde(with = "model_tag")]
    pub model: ChannelModel,
    pub t: u64,
    pub alpha: f64,
    pub beta: f64,
    pub trials: u64,
    pub achieved_reliability: Option<f64>,
    pub mean_slots: Option<f64>,
    pub std_slots: Option<f64>,
    pub mean_t_hat: Option<f64>,
    pub mean_probe_slots: Option<f64>,
    pub reason: String,
}

impl CampaignRow {
    pub fn is_infeasible(&self) -> bool {
        self.achieved_reliability.is_none()
    }
}

mod model_tag {
    use gean::ChannelModel;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &ChannelModel, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(m.tag())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ChannelModel, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Default)]
struct Trial {
    hit: bool,
    slots: Option<f64>,
    t_hat: Option<f64>,
    probe_slots: Option<f64>,
    infeasible: Option<String>,
    saturated: bool,
    failure: Option<String>,
}

/// Population, probe and estimator seeds of one trial.
fn trial_seeds(master: u64, cell: usize, trial: u64) -> (u64, u64, u64) {
    let base = seed::derive(master, &[cell as u64, trial]);
    (seed::child(base, 0), seed::child(base, 1), seed::child(base, 2))
}

fn gean_trial(cfg: &CampaignConfig, spec: AccuracySpec, options: &EstimatorOptions, model: ChannelModel, t: u64, cell: usize, i: u64) -> Trial {
    let (pop_seed, probe_seed, est_seed) = trial_seeds(cfg.master_seed, cell, i);
    let pop = Population::new(t, pop_seed);
    let bound = match upper_bound(pop, options.probe_rounds, options.reply, probe_seed) {
        Ok(b) => b,
        Err(e) => {
            return Trial {
                failure: Some(e.to_string()),
                ..Trial::default()
            }
        }
    };
    let probe = bound.slots() as f64;
    match estimate_from_bound(spec, pop, model, est_seed, options, &bound) {
        Ok(r) => Trial {
            hit: r.within(t, spec.beta()),
            slots: Some(slots_used(&r, cfg.include_probe_cost)),
            t_hat: Some(r.t_hat),
            probe_slots: Some(probe),
            ..Trial::default()
        },
        Err(EstimateError::Saturated { slots_estimation, .. }) => Trial {
            slots: Some(slots_estimation + if cfg.include_probe_cost { probe } else { 0.0 }),
            probe_slots: Some(probe),
            saturated: true,
            ..Trial::default()
        },
        Err(EstimateError::Plan(e)) => Trial {
            probe_slots: Some(probe),
            infeasible: Some(e.to_string()),
            ..Trial::default()
        },
        Err(e) => Trial {
            probe_slots: Some(probe),
            failure: Some(e.to_string()),
            ..Trial::default()
        },
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 || xs.iter().all(|&x| x == xs[0]) {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let ss = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Sample standard deviation, or with at least 50 trials the mean spread of
/// 50-sample bootstrap resamples.
pub fn slot_spread(xs: &[f64], seed_value: u64) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    if xs.len() < BOOTSTRAP_SAMPLE {
        return Some(sample_sd(xs));
    }
    let mut rng = seed::frame_rng(seed_value, u64::MAX);
    let mut buf = vec![0.0; BOOTSTRAP_SAMPLE];
    let total: f64 = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = xs[rng.random_range(0..xs.len())];
            }
            sample_sd(&buf)
        })
        .sum();
    Some(total / BOOTSTRAP_RESAMPLES as f64)
}

fn summarize(cfg: &CampaignConfig, scheme: Scheme, model: ChannelModel, t: u64, cell: usize, trials: &[Trial]) -> CampaignRow {
    let n = trials.len() as u64;
    let probe: Vec<f64> = trials.iter().filter_map(|x| x.probe_slots).collect();
    let infeasible = trials.iter().filter(|x| x.infeasible.is_some()).count() as u64;
    let mut row = CampaignRow {
        scheme,
        model,
        t,
        alpha: cfg.alpha,
        beta: cfg.beta,
        trials: n,
        achieved_reliability: None,
        mean_slots: None,
        std_slots: None,
        mean_t_hat: None,
        mean_probe_slots: mean(&probe),
        reason: String::new(),
    };
    if infeasible == n {
        let why = trials.iter().find_map(|x| x.infeasible.clone()).unwrap_or_default();
        row.reason = if why.starts_with("infeasible") { why } else { format!("infeasible: {why}") };
        return row;
    }
    let slots: Vec<f64> = trials.iter().filter_map(|x| x.slots).collect();
    let t_hats: Vec<f64> = trials.iter().filter_map(|x| x.t_hat).collect();
    row.achieved_reliability = Some(trials.iter().filter(|x| x.hit).count() as f64 / n as f64);
    row.mean_slots = mean(&slots);
    row.std_slots = slot_spread(&slots, seed::derive(cfg.master_seed, &[cell as u64]));
    row.mean_t_hat = mean(&t_hats);
    let mut notes = Vec::new();
    if infeasible > 0 {
        notes.push(format!("{infeasible} of {n} trials infeasible"));
    }
    let saturated = trials.iter().filter(|x| x.saturated).count();
    if saturated > 0 {
        notes.push(format!("{saturated} of {n} trials saturated"));
    }
    let failed = trials.iter().filter(|x| x.failure.is_some()).count();
    if failed > 0 {
        notes.push(format!("{failed} of {n} trials failed"));
    }
    row.reason = notes.join("; ");
    row
}

/// Outcome of one EZB trial for every `(f, n)` candidate.
struct EzbTrial {
    probe_slots: f64,
    /// Indexed `[frame][rounds]`: `(hit, t_hat)`, `t_hat` absent when saturated.
    grid: Vec<Vec<(bool, Option<f64>)>>,
}

fn ezb_trial(cfg: &CampaignConfig, t: u64, cell: usize, i: u64) -> Result<EzbTrial, String> {
    let (pop_seed, probe_seed, est_seed) = trial_seeds(cfg.master_seed, cell, i);
    let pop = Population::new(t, pop_seed);
    let bound = upper_bound(pop, cfg.probe_rounds, cfg.reply, probe_seed).map_err(|e| e.to_string())?;
    let t_m = bound.planning_bound() as f64;
    let grid = EZB_FRAMES
        .iter()
        .map(|&f| {
            let p = (f as f64 / t_m).min(1.0);
            ezb_prefix_estimates(pop, f, p, cfg.reply, seed::child(est_seed, f), &EZB_ROUNDS)
                .into_iter()
                .map(|r| match r {
                    Ok(e) => ((e.t_hat - t as f64).abs() <= cfg.beta * t as f64, Some(e.t_hat)),
                    Err(EzbError::Saturated { .. }) | Err(EzbError::InvalidConfig(_)) => (false, None),
                })
                .collect()
        })
        .collect();
    Ok(EzbTrial {
        probe_slots: bound.slots() as f64,
        grid,
    })
}

fn ezb_row(cfg: &CampaignConfig, model: ChannelModel, t: u64, cell: usize) -> CampaignRow {
    let results: Vec<Result<EzbTrial, String>> = (0..cfg.trials).into_par_iter().map(|i| ezb_trial(cfg, t, cell, i)).collect();
    let n = cfg.trials as f64;
    let ok: Vec<&EzbTrial> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let failed = results.len() - ok.len();
    let probe: Vec<f64> = ok.iter().map(|x| x.probe_slots).collect();

    // Cheapest configuration meeting alpha; otherwise the most reliable.
    let mut candidates = Vec::new();
    for (fi, &f) in EZB_FRAMES.iter().enumerate() {
        for (ni, &rounds) in EZB_ROUNDS.iter().enumerate() {
            let hits = ok.iter().filter(|x| x.grid[fi][ni].0).count() as f64;
            candidates.push((hits / n, estimation_slots(f, rounds), fi, ni));
        }
    }
    let meets = candidates
        .iter()
        .filter(|c| c.0 >= cfg.alpha)
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.2.cmp(&b.2)));
    let (rel, cost, fi, ni) = *meets.unwrap_or_else(|| {
        candidates
            .iter()
            .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)))
            .expect("nonempty sweep")
    });
    let t_hats: Vec<f64> = ok.iter().filter_map(|x| x.grid[fi][ni].1).collect();
    let slots: Vec<f64> = ok
        .iter()
        .map(|x| cost + if cfg.include_probe_cost { x.probe_slots } else { 0.0 })
        .collect();
    let mut notes = Vec::new();
    if meets.is_none() {
        notes.push(format!(
            "no swept configuration met alpha; most reliable shown (f={}, n={})",
            EZB_FRAMES[fi], EZB_ROUNDS[ni]
        ));
    }
    let saturated = ok.len() - t_hats.len();
    if saturated > 0 {
        notes.push(format!("{saturated} of {} trials saturated", cfg.trials));
    }
    if failed > 0 {
        notes.push(format!("{failed} of {} trials failed", cfg.trials));
    }
    CampaignRow {
        scheme: Scheme::Ezb,
        model,
        t,
        alpha: cfg.alpha,
        beta: cfg.beta,
        trials: cfg.trials,
        achieved_reliability: Some(rel),
        mean_slots: mean(&slots),
        std_slots: slot_spread(&slots, seed::derive(cfg.master_seed, &[cell as u64])),
        mean_t_hat: mean(&t_hats),
        mean_probe_slots: mean(&probe),
        reason: notes.join("; "),
    }
}

pub fn run_campaign(cfg: &CampaignConfig) -> Result<Vec<CampaignRow>, CampaignError> {
    let spec = cfg.validate()?;
    let rows = cfg
        .cells()
        .into_iter()
        .enumerate()
        .map(|(cell, (scheme, model, t))| match scheme {
            Scheme::Ezb => ezb_row(cfg, model, t, cell),
            Scheme::Gean | Scheme::GeanWaec => {
                let options = EstimatorOptions {
                    probe_rounds: cfg.probe_rounds,
                    reply: cfg.reply,
                    planner: if scheme == Scheme::Gean {
                        PlannerConfig::default()
                    } else {
                        PlannerConfig::without_compensation()
                    },
                };
                let trials: Vec<Trial> = (0..cfg.trials)
                    .into_par_iter()
                    .map(|i| gean_trial(cfg, spec, &options, model, t, cell, i))
                    .collect();
                summarize(cfg, scheme, model, t, cell, &trials)
            }
        })
        .collect();
    Ok(rows)
}

/// True when every row is an infeasible marker.
pub fn all_infeasible(rows: &[CampaignRow]) -> bool {
    !rows.is_empty() && rows.iter().all(CampaignRow::is_infeasible)
}
