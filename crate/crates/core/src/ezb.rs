//! Enhanced zero-based (EZB) baseline: average the empty-slot count over
//! frames, then invert `E[N_0] = f·(1 - p/f)^t`.

use thiserror::Error;

use crate::runtime::estimation_slots;
use crate::seed;
use crate::sim::{run_frame, tally, Population, ReplyModel};
use crate::stats::ChannelModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EzbError {
    #[error("invalid EZB configuration: {0}")]
    InvalidConfig(String),
    #[error("every slot of every frame was busy; clamped estimate {clamped_t_hat:.1}")]
    Saturated { clamped_t_hat: f64, slots: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EzbConfig {
    pub f: u64,
    pub p: f64,
    pub n: u64,
}

impl EzbConfig {
    pub fn new(f: u64, p: f64, n: u64) -> Result<Self, EzbError> {
        if f == 0 || n == 0 || !(p > 0.0 && p <= 1.0) {
            return Err(EzbError::InvalidConfig(format!("f = {f}, p = {p}, n = {n}")));
        }
        Ok(Self { f, p, n })
    }

    pub fn slots(&self) -> f64 {
        estimation_slots(self.f, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EzbEstimate {
    pub t_hat: f64,
    pub mean_empty: f64,
    pub slots: f64,
}

/// Inverts a mean empty count. A mean of exactly `f` gives zero; anything
/// else is clamped into `[0.5, f - 0.5]` first.
pub fn invert_mean_empty(mean_empty: f64, f: u64, p: f64) -> f64 {
    let fr = f as f64;
    if mean_empty >= fr {
        return 0.0;
    }
    let clamped = mean_empty.clamp(0.5, (fr - 0.5).max(0.5));
    let t = (clamped / fr).ln() / (-p / fr).ln_1p();
    t.max(0.0)
}

pub fn ezb_estimate(pop: Population, cfg: EzbConfig, reply: ReplyModel, seed: u64) -> Result<EzbEstimate, EzbError> {
    let cfg = EzbConfig::new(cfg.f, cfg.p, cfg.n)?;
    ezb_prefix_estimates(pop, cfg.f, cfg.p, reply, seed, &[cfg.n]).pop().expect("one round count")
}

/// Estimates for several round counts from one run of `max(rounds)` frames.
///
/// Frame `j` uses the same seed as in [`ezb_estimate`], so the entry for `n`
/// equals `ezb_estimate` with `n` rounds.
pub fn ezb_prefix_estimates(
    pop: Population,
    f: u64,
    p: f64,
    reply: ReplyModel,
    seed: u64,
    rounds: &[u64],
) -> Vec<Result<EzbEstimate, EzbError>> {
    let longest = rounds.iter().copied().max().unwrap_or(0);
    if let Err(e) = EzbConfig::new(f, p, longest.max(1)) {
        return rounds.iter().map(|_| Err(e.clone())).collect();
    }
    let mut prefix = Vec::with_capacity(longest as usize + 1);
    prefix.push(0u64);
    for j in 0..longest {
        let seq = run_frame(pop, f, p, reply, ChannelModel::ZeroOne, seed::child(seed, j))
            .expect("validated frame parameters");
        prefix.push(prefix[j as usize] + tally(&seq).n0);
    }
    rounds
        .iter()
        .map(|&n| {
            let cfg = EzbConfig::new(f, p, n)?;
            let empties = prefix[n as usize];
            let mean_empty = empties as f64 / n as f64;
            let t_hat = invert_mean_empty(mean_empty, f, p);
            if empties == 0 {
                return Err(EzbError::Saturated {
                    clamped_t_hat: t_hat,
                    slots: cfg.slots(),
                });
            }
            Ok(EzbEstimate {
                t_hat,
                mean_empty,
                slots: cfg.slots(),
            })
        })
        .collect()
}
