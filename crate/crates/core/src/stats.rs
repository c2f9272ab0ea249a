//! Closed-form statistics of the per-frame Z observable.
//!
//! Under the `{0,1}` channel the reader only sees empty and non-empty slots
//! and a frame yields `Z = (N_n - N_0) / f`. Under `{0,1,e}` singletons and
//! collisions are distinguished and `Z = (N_e - N_1) / f`. Every function here
//! uses exact binomial powers of `(1 - p/f)`; the exponential approximations
//! only appear in the planner's `k(r)` bounds.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::root;

/// Absolute tolerance in `t` used when inverting the `{0,1,e}` expectation.
pub const INVERSION_TOLERANCE: f64 = 1e-6;

/// Upper end of the bracket searched when inverting the `{0,1,e}` expectation.
pub const MAX_BRACKET_T: f64 = 1e9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("invalid load point: {0}")]
    InvalidPoint(String),
    #[error("z = {zbar} is outside the invertible range [{lower}, {upper}) of the {model} expectation")]
    OutOfRange {
        zbar: f64,
        lower: f64,
        upper: f64,
        model: ChannelModel,
    },
}

/// What the reader can tell apart in a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelModel {
    /// Empty versus non-empty.
    ZeroOne,
    /// Empty, singleton and collision.
    ZeroOneE,
}

impl ChannelModel {
    pub const ALL: [ChannelModel; 2] = [ChannelModel::ZeroOne, ChannelModel::ZeroOneE];

    /// Short tag used on the command line and in CSV output.
    pub fn tag(self) -> &'static str {
        match self {
            ChannelModel::ZeroOne => "zo",
            ChannelModel::ZeroOneE => "zoe",
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.tag())
    }
}

impl FromStr for ChannelModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zo" | "01" | "{0,1}" | "zero-one" => Ok(ChannelModel::ZeroOne),
            "zoe" | "01e" | "{0,1,e}" | "zero-one-e" => Ok(ChannelModel::ZeroOneE),
            other => Err(format!("unknown channel model `{other}` (expected zo or zoe)")),
        }
    }
}

/// Population size, persistence probability and frame size of one frame.
///
/// `t` is kept real-valued so the expectation can be inverted continuously.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadPoint {
    t: f64,
    p: f64,
    f: u64,
}

impl LoadPoint {
    pub fn new(t: f64, p: f64, f: u64) -> Result<Self, StatsError> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(StatsError::InvalidPoint(format!("t = {t} must be finite and >= 0")));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(StatsError::InvalidPoint(format!("p = {p} must lie in (0, 1]")));
        }
        if f == 0 {
            return Err(StatsError::InvalidPoint("frame size must be >= 1".into()));
        }
        Ok(Self { t, p, f })
    }

    /// Convenience constructor for an integer population.
    pub fn from_count(t: u64, p: f64, f: u64) -> Result<Self, StatsError> {
        Self::new(t as f64, p, f)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn f(&self) -> u64 {
        self.f
    }

    /// Expected number of participating agents per slot, `t·p/f`.
    pub fn load(&self) -> f64 {
        self.t * self.p / self.f as f64
    }

    fn reply_prob(&self) -> f64 {
        self.p / self.f as f64
    }
}

/// Per-slot outcome probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotProbs {
    pub p0: f64,
    pub p1: f64,
    pub pe: f64,
    pub pn: f64,
}

/// `(1 - x)^t` for real `t >= 0`, computed without rounding `1 - x` first.
pub(crate) fn pow_one_minus(x: f64, t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else if x >= 1.0 {
        0.0
    } else {
        (t * (-x).ln_1p()).exp()
    }
}

/// `t·x·(1 - x)^(t-1)`, the singleton probability.
fn singleton_prob(x: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        // Every agent fires: a singleton happens only with exactly one agent.
        return if t == 1.0 { 1.0 } else { 0.0 };
    }
    t * x * ((t - 1.0) * (-x).ln_1p()).exp()
}

pub fn slot_probs(point: LoadPoint, model: ChannelModel) -> SlotProbs {
    let x = point.reply_prob();
    let p0 = pow_one_minus(x, point.t);
    match model {
        ChannelModel::ZeroOne => SlotProbs {
            p0,
            p1: 0.0,
            pe: 0.0,
            pn: 1.0 - p0,
        },
        ChannelModel::ZeroOneE => {
            let p1 = singleton_prob(x, point.t).min(1.0 - p0);
            let pe = (1.0 - p0 - p1).max(0.0);
            SlotProbs {
                p0,
                p1,
                pe,
                pn: 1.0 - p0,
            }
        }
    }
}

/// Mean of the per-frame Z statistic, `g_f(t)`.
pub fn expected_z(point: LoadPoint, model: ChannelModel) -> f64 {
    let s = slot_probs(point, model);
    match model {
        ChannelModel::ZeroOne => s.pn - s.p0,
        ChannelModel::ZeroOneE => s.pe - s.p1,
    }
}

/// Variance of the per-frame Z statistic, `σ_f²`.
pub fn variance_z(point: LoadPoint, model: ChannelModel) -> f64 {
    let s = slot_probs(point, model);
    let (up, down) = match model {
        ChannelModel::ZeroOne => (s.pn, s.p0),
        ChannelModel::ZeroOneE => (s.pe, s.p1),
    };
    let per_slot = up + down - (up - down) * (up - down);
    per_slot.max(0.0) / point.f as f64
}

/// Approximate location of the `{0,1,e}` dip, `f / (2p)`.
///
/// The exact minimiser of the expectation differs from this by `O(p/f)`
/// agents; see [`exact_dip_location`].
pub fn dip_location(p: f64, f: u64) -> f64 {
    f as f64 / (2.0 * p)
}

/// Exact stationary point of the `{0,1,e}` expectation in `t`.
pub fn exact_dip_location(p: f64, f: u64) -> f64 {
    let x = p / f as f64;
    if x >= 1.0 {
        return 1.0;
    }
    let l = (-x).ln_1p();
    (-2.0 * x - (1.0 - x) * l) / (2.0 * x * l)
}

fn expectation_at(t: f64, p: f64, f: u64, model: ChannelModel) -> f64 {
    // Callers validated p and f; t comes from a bracket so it is finite.
    expected_z(LoadPoint { t, p, f }, model)
}

/// Solves `expected_z(t) = zbar` for `t`.
///
/// For `{0,1}` the closed form is used and `zbar <= -1` maps to zero. For
/// `{0,1,e}` the root right of the dip is returned, found by bisection on
/// `[f/(2p), hi]` where `hi` doubles until the expectation exceeds `zbar`.
pub fn invert_expected_z(
    zbar: f64,
    p: f64,
    f: u64,
    model: ChannelModel,
) -> Result<f64, StatsError> {
    // Validates p and f.
    LoadPoint::new(0.0, p, f)?;
    if zbar.is_nan() {
        return Err(StatsError::InvalidPoint("z is NaN".into()));
    }
    let x = p / f as f64;
    match model {
        ChannelModel::ZeroOne => {
            if zbar >= 1.0 {
                return Err(StatsError::OutOfRange {
                    zbar,
                    lower: -1.0,
                    upper: 1.0,
                    model,
                });
            }
            if zbar <= -1.0 {
                return Ok(0.0);
            }
            let t = ((1.0 - zbar) / 2.0).ln() / (-x).ln_1p();
            Ok(t.max(0.0))
        }
        ChannelModel::ZeroOneE => {
            if zbar >= 1.0 {
                return Err(StatsError::OutOfRange {
                    zbar,
                    lower: -1.0,
                    upper: 1.0,
                    model,
                });
            }
            let lo = dip_location(p, f);
            let g_lo = expectation_at(lo, p, f, model);
            if zbar <= g_lo {
                let floor = expectation_at(exact_dip_location(p, f), p, f, model).min(g_lo);
                if zbar >= floor {
                    return Ok(lo);
                }
                return Err(StatsError::OutOfRange {
                    zbar,
                    lower: floor,
                    upper: 1.0,
                    model,
                });
            }
            let mut hi = (2.0 * lo).max(lo + 1.0);
            loop {
                let hi_c = hi.min(MAX_BRACKET_T);
                let g_hi = expectation_at(hi_c, p, f, model);
                if g_hi >= zbar {
                    hi = hi_c;
                    break;
                }
                if hi_c >= MAX_BRACKET_T {
                    return Err(StatsError::OutOfRange {
                        zbar,
                        lower: g_lo,
                        upper: g_hi,
                        model,
                    });
                }
                hi *= 2.0;
            }
            Ok(root::bisect(
                |t| expectation_at(t, p, f, model) - zbar,
                lo,
                hi,
                INVERSION_TOLERANCE,
            ))
        }
    }
}
