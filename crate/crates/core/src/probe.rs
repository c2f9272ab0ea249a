//! Flajolet-Martin style upper bound on the population.
//!
//! The reader issues one-slot frames with persistence `1, 1/2, 1/4, ...`
//! until a slot comes back empty. If that happens in frame `j` the round
//! reports `1.2897·2^(j-2)`; the bound is the mean over many rounds.

use thiserror::Error;

use crate::seed;
use crate::sim::{run_frame, Population, ReplyModel, Symbol};
use crate::stats::ChannelModel;

/// Scale applied to `2^(j-2)`.
pub const FM_SCALE: f64 = 1.2897;

/// Frames issued per round before giving up.
pub const MAX_PROBE_FRAMES: u32 = 64;

/// Rounds averaged by default.
pub const DEFAULT_PROBE_ROUNDS: u32 = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbeError {
    #[error("no empty slot within {MAX_PROBE_FRAMES} probe frames")]
    Overflow,
    #[error("probe needs at least one round")]
    NoRounds,
}

/// One probe round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeResult {
    /// Index of the first frame whose slot was empty.
    pub j: u32,
    pub t_m_sample: f64,
}

impl ProbeResult {
    pub fn from_index(j: u32) -> Self {
        Self {
            j,
            t_m_sample: FM_SCALE * 2f64.powi(j as i32 - 2),
        }
    }

    /// One-slot frames this round consumed.
    pub fn slots(&self) -> u64 {
        u64::from(self.j)
    }
}

pub fn probe_once(pop: Population, reply: ReplyModel, round_seed: u64) -> Result<ProbeResult, ProbeError> {
    for i in 1..=MAX_PROBE_FRAMES {
        let p = 0.5f64.powi(i as i32 - 1);
        let seq = run_frame(pop, 1, p, reply, ChannelModel::ZeroOne, seed::child(round_seed, u64::from(i)))
            .expect("one-slot frame with p in (0, 1] is valid");
        if seq.symbols[0] == Symbol::Empty {
            return Ok(ProbeResult::from_index(i));
        }
    }
    Err(ProbeError::Overflow)
}

/// Averaged probe over several rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperBound {
    pub t_m: f64,
    pub rounds: Vec<ProbeResult>,
}

impl UpperBound {
    /// Total one-slot frames issued.
    pub fn slots(&self) -> u64 {
        self.rounds.iter().map(ProbeResult::slots).sum()
    }

    /// A round that found the slot empty at full persistence: in an ideal
    /// channel that only happens when nobody is active.
    pub fn saw_silence(&self) -> bool {
        self.rounds.iter().any(|r| r.j == 1)
    }

    /// `t_m` as the planner takes it: rounded up, at least one.
    pub fn planning_bound(&self) -> u64 {
        if self.t_m.is_finite() && self.t_m > 1.0 {
            self.t_m.ceil() as u64
        } else {
            1
        }
    }
}

pub fn upper_bound(pop: Population, rounds: u32, reply: ReplyModel, seed: u64) -> Result<UpperBound, ProbeError> {
    if rounds == 0 {
        return Err(ProbeError::NoRounds);
    }
    let results = (0..rounds)
        .map(|r| probe_once(pop, reply, seed::child(seed, u64::from(r))))
        .collect::<Result<Vec<_>, _>>()?;
    let t_m = results.iter().map(|r| r.t_m_sample).sum::<f64>() / f64::from(rounds);
    Ok(UpperBound { t_m, rounds: results })
}
