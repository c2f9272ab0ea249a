//! Framed slotted Aloha channel simulator.
//!
//! The reader announces a frame of `f` slots; agents answer according to a
//! [`ReplyModel`] and the reader reduces each slot's occupancy to a symbol of
//! the active [`ChannelModel`]. The channel is ideal: every symbol is
//! observed correctly.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

use crate::seed;
use crate::stats::ChannelModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("malformed trace line `{0}`")]
    MalformedTrace(String),
}

/// The agents currently active around the reader.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Population {
    pub t: u64,
    pub seed: u64,
}

impl Population {
    pub fn new(t: u64, seed: u64) -> Self {
        Self { t, seed }
    }
}

/// How a participating agent chooses its slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ReplyModel {
    /// Each participant hashes to exactly one uniformly chosen slot.
    HashOnce,
    /// Each agent fires in each slot independently with probability `p/f`.
    #[default]
    IndependentPerSlot,
}

impl ReplyModel {
    pub fn tag(self) -> &'static str {
        match self {
            ReplyModel::HashOnce => "hash",
            ReplyModel::IndependentPerSlot => "indep",
        }
    }
}

impl fmt::Display for ReplyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.tag())
    }
}

impl FromStr for ReplyModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hash" | "hash-once" => Ok(ReplyModel::HashOnce),
            "indep" | "independent" | "independent-per-slot" => Ok(ReplyModel::IndependentPerSlot),
            other => Err(format!("unknown reply model `{other}` (expected hash or indep)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Empty,
    Singleton,
    Collision,
    /// `{0,1}` only: at least one reply.
    NonEmpty,
}

impl Symbol {
    pub fn as_char(self) -> char {
        match self {
            Symbol::Empty => '0',
            Symbol::Singleton | Symbol::NonEmpty => '1',
            Symbol::Collision => 'e',
        }
    }

    fn from_occupancy(count: u8, model: ChannelModel) -> Self {
        match (count, model) {
            (0, _) => Symbol::Empty,
            (_, ChannelModel::ZeroOne) => Symbol::NonEmpty,
            (1, ChannelModel::ZeroOneE) => Symbol::Singleton,
            (_, ChannelModel::ZeroOneE) => Symbol::Collision,
        }
    }
}

/// Symbols observed by the reader over one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReaderSequence {
    pub model: ChannelModel,
    pub symbols: Vec<Symbol>,
}

impl ReaderSequence {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// The frame as a string over `0`, `1` and `e`.
    pub fn symbol_string(&self) -> String {
        self.symbols.iter().map(|s| s.as_char()).collect()
    }

    pub fn parse(symbols: &str, model: ChannelModel) -> Result<Self, SimError> {
        let symbols = symbols
            .chars()
            .map(|c| match (c, model) {
                ('0', _) => Ok(Symbol::Empty),
                ('1', ChannelModel::ZeroOne) => Ok(Symbol::NonEmpty),
                ('1', ChannelModel::ZeroOneE) => Ok(Symbol::Singleton),
                ('e', ChannelModel::ZeroOneE) => Ok(Symbol::Collision),
                _ => Err(SimError::MalformedTrace(symbols.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { model, symbols })
    }
}

/// Per-frame symbol counts. Under `{0,1}` non-empty slots are counted in `n1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FrameTally {
    pub f: u64,
    pub n0: u64,
    pub n1: u64,
    pub ne: u64,
}

impl FrameTally {
    /// Non-empty slots.
    pub fn nn(&self) -> u64 {
        self.f - self.n0
    }
}

/// Simulates one frame. The outcome is a pure function of the population,
/// the frame parameters and `frame_seed`.
pub fn run_frame(
    pop: Population,
    f: u64,
    p: f64,
    reply: ReplyModel,
    model: ChannelModel,
    frame_seed: u64,
) -> Result<ReaderSequence, SimError> {
    if f == 0 {
        return Err(SimError::InvalidFrame("frame size must be >= 1".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(SimError::InvalidFrame(format!("p = {p} must lie in (0, 1]")));
    }
    let len = usize::try_from(f).map_err(|_| SimError::InvalidFrame(format!("f = {f} too large")))?;
    let mut rng = seed::frame_rng(pop.seed, frame_seed);
    let mut occupancy = vec![0u8; len];
    match reply {
        ReplyModel::HashOnce => {
            let participants = sample_binomial(&mut rng, pop.t, p);
            for _ in 0..participants {
                let slot = rng.random_range(0..len);
                occupancy[slot] = occupancy[slot].saturating_add(1).min(2);
            }
        }
        ReplyModel::IndependentPerSlot => {
            let q = p / f as f64;
            let per_slot = Binomial::new(pop.t, q).expect("q lies in (0, 1]");
            for slot in occupancy.iter_mut() {
                *slot = per_slot.sample(&mut rng).min(2) as u8;
            }
        }
    }
    Ok(ReaderSequence {
        model,
        symbols: occupancy
            .into_iter()
            .map(|c| Symbol::from_occupancy(c, model))
            .collect(),
    })
}

fn sample_binomial<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p lies in (0, 1)").sample(rng)
}

pub fn tally(seq: &ReaderSequence) -> FrameTally {
    let mut t = FrameTally {
        f: seq.len() as u64,
        ..FrameTally::default()
    };
    for s in &seq.symbols {
        match s {
            Symbol::Empty => t.n0 += 1,
            Symbol::Singleton | Symbol::NonEmpty => t.n1 += 1,
            Symbol::Collision => t.ne += 1,
        }
    }
    t
}

/// `(N_n - N_0)/f` under `{0,1}`, `(N_e - N_1)/f` under `{0,1,e}`.
pub fn z_statistic(t: &FrameTally, model: ChannelModel) -> f64 {
    let f = t.f as f64;
    match model {
        ChannelModel::ZeroOne => (t.nn() as f64 - t.n0 as f64) / f,
        ChannelModel::ZeroOneE => (t.ne as f64 - t.n1 as f64) / f,
    }
}

/// One trace line, `frame_index,symbol_string`.
pub fn trace_line(frame_index: usize, seq: &ReaderSequence) -> String {
    format!("{frame_index},{}", seq.symbol_string())
}

pub fn parse_trace_line(line: &str, model: ChannelModel) -> Result<(usize, ReaderSequence), SimError> {
    let (idx, symbols) = line
        .split_once(',')
        .ok_or_else(|| SimError::MalformedTrace(line.to_string()))?;
    let idx = idx
        .trim()
        .parse()
        .map_err(|_| SimError::MalformedTrace(line.to_string()))?;
    Ok((idx, ReaderSequence::parse(symbols.trim_end(), model)?))
}

pub fn write_trace<'a, W, I>(mut out: W, frames: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a ReaderSequence>,
{
    for (i, seq) in frames.into_iter().enumerate() {
        writeln!(out, "{}", trace_line(i, seq))?;
    }
    Ok(())
}
