//! Frame-size and round-count selection.
//!
//! A frame of size `f` at load `r` is treated as Gaussian with approximation
//! error `ε` once `ε²·f ≥ k(r)`. The reliability target is then raised from
//! `α` to `α + ε`, which caps `ε` at `1 - α`. The planner searches a grid of
//! loads and frame sizes for the cheapest `(f + l)·n` that meets the
//! accuracy contract against the upper bound `t_m`.

use std::fmt;

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::root;
use crate::stats::{expected_z, variance_z, ChannelModel, LoadPoint, StatsError};

/// Smallest load at which the `{0,1,e}` expectation is invertible over the
/// whole population range `t >= 1`.
pub const R_MIN_ZERO_ONE_E: f64 = 1.2564;

/// Inter-frame gap, in slot equivalents, charged once per frame.
pub const FRAME_GAP_SLOTS: f64 = 3.33;

/// Denominators smaller than this make a `k(r)` case degenerate.
const DEGENERATE_DENOMINATOR: f64 = 1e-12;

/// Lower end of the `{0,1}` load domain searched by [`r_max`].
const ZERO_ONE_LOAD_FLOOR: f64 = 1e-9;

/// Loads above this are never feasible for any `u64` population.
const LOAD_CEILING: f64 = 64.0;

const R_MAX_SCAN_POINTS: usize = 4000;
const R_MAX_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("k(r) is degenerate at r = {r}: denominator of case {case} vanishes")]
    Degenerate { r: f64, case: &'static str },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("upper bound t_m = {0} must be >= 1")]
    InvalidUpperBound(f64),
    #[error("invalid accuracy requirement: {0}")]
    InvalidSpec(String),
    #[error("invalid load r = {0}")]
    InvalidLoad(f64),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Required reliability `alpha` for the interval `|t̂ - t| <= beta·t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracySpec {
    alpha: f64,
    beta: f64,
}

impl AccuracySpec {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, PlanError> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(PlanError::InvalidSpec(format!("alpha = {alpha} must lie in [0, 1)")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(PlanError::InvalidSpec(format!("beta = {beta} must lie in (0, 1)")));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Largest approximation error the reliability target can absorb.
    pub fn eps_max(&self) -> f64 {
        1.0 - self.alpha
    }
}

/// Gaussian approximation error of a concrete frame size at load `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxBound {
    pub r: f64,
    pub k: f64,
    pub eps: f64,
}

impl ApproxBound {
    pub fn new(r: f64, f: u64, model: ChannelModel) -> Result<Self, PlanError> {
        let k = k_bound(r, model)?;
        Ok(Self {
            r,
            k,
            eps: (k / f as f64).sqrt(),
        })
    }
}

/// `k(r)`: the smallest `ε²·f` for which no centred per-slot value exceeds
/// `ε·√f·σ`, using the exponential forms of the slot probabilities.
pub fn k_bound(r: f64, model: ChannelModel) -> Result<f64, PlanError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(PlanError::InvalidLoad(r));
    }
    let check = |den: f64, case: &'static str| {
        if den.abs() < DEGENERATE_DENOMINATOR {
            Err(PlanError::Degenerate { r, case })
        } else {
            Ok(den)
        }
    };
    match model {
        ChannelModel::ZeroOne => {
            let empty = (-r).exp();
            let k1 = empty / check(1.0 - empty, "k1")?;
            let k2 = (1.0 - empty) / check(empty, "k2")?;
            Ok(k1.max(k2))
        }
        ChannelModel::ZeroOneE => {
            let er = r.exp();
            let a = 1.0 + 2.0 * r;
            let b = 1.0 + 4.0 * r;
            let k1 = 1.0 / check((-er * b / (a * a)).abs() - 1.0, "k1")?;
            let k2 = ((er * er + a * (0.25 - er)) / check(0.25 * a * a - r * er, "k2")?).abs();
            let k3 = ((er * er - 2.0 * er * a + a * a) / check(a * a - er * b, "k3")?).abs();
            Ok(k1.max(k2).max(k3))
        }
    }
}

/// `sqrt(k(r) / f)`.
pub fn epsilon_for(f: u64, r: f64, model: ChannelModel) -> Result<f64, PlanError> {
    if f == 0 {
        return Err(PlanError::InvalidSpec("frame size must be >= 1".into()));
    }
    Ok(ApproxBound::new(r, f, model)?.eps)
}

/// Frame sizes `[f_min, f_max]` usable at load `r` against upper bound `t_m`.
pub fn frame_bounds(
    r: f64,
    t_m: u64,
    eps_max: f64,
    model: ChannelModel,
) -> Result<(u64, u64), PlanError> {
    if t_m == 0 {
        return Err(PlanError::InvalidUpperBound(0.0));
    }
    if !(eps_max > 0.0 && eps_max < 1.0) {
        return Err(PlanError::InvalidSpec(format!("eps_max = {eps_max} must lie in (0, 1)")));
    }
    let k = k_bound(r, model)?;
    let f_max = to_count((t_m as f64 / r).floor()).max(1);
    let f_min = to_count((k / (eps_max * eps_max)).ceil()).max(1);
    if f_min > f_max {
        return Err(PlanError::Infeasible(format!(
            "f_min = {f_min} exceeds f_max = {f_max} at r = {r:.4}, t_m = {t_m}"
        )));
    }
    Ok((f_min, f_max))
}

fn to_count(x: f64) -> u64 {
    if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        x as u64
    }
}

/// Standard-normal quantile with upper-tail mass `q`, `Q⁻¹(q)`.
pub fn upper_tail_quantile(q: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - q)
}

/// Both halves of the round-count computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundsBreakdown {
    pub z_star: f64,
    pub n_left: f64,
    pub n_right: f64,
    pub n: u64,
}

/// Round counts needed so both interval ends `(1 ∓ β)·t_m` sit `z*`
/// standard errors from the mean, with `z* = Q⁻¹((1 - α - ε)/2)`.
pub fn rounds_breakdown(
    f: u64,
    p: f64,
    t_m: u64,
    spec: AccuracySpec,
    eps: f64,
    model: ChannelModel,
) -> Result<RoundsBreakdown, PlanError> {
    let target = spec.alpha + eps;
    if eps.is_nan() || eps < 0.0 || target >= 1.0 {
        return Err(PlanError::Infeasible(format!(
            "alpha + eps = {target} leaves no approximation budget"
        )));
    }
    let tm = t_m as f64;
    let at = |t: f64| LoadPoint::new(t, p, f).map(|pt| expected_z(pt, model));
    let center = LoadPoint::new(tm, p, f)?;
    let mu = expected_z(center, model);
    let var = variance_z(center, model);
    let left = at((1.0 - spec.beta) * tm)? - mu;
    let right = at((1.0 + spec.beta) * tm)? - mu;
    if left == 0.0 || right == 0.0 {
        return Err(PlanError::Infeasible(format!(
            "interval ends are indistinguishable from the mean at f = {f}, p = {p}"
        )));
    }
    let z_star = upper_tail_quantile((1.0 - target) / 2.0);
    let n_left = z_star * z_star * var / (left * left);
    let n_right = z_star * z_star * var / (right * right);
    let n = to_count(n_left.max(n_right).ceil()).max(1);
    Ok(RoundsBreakdown {
        z_star,
        n_left,
        n_right,
        n,
    })
}

pub fn rounds_needed(
    f: u64,
    p: f64,
    t_m: u64,
    spec: AccuracySpec,
    eps: f64,
    model: ChannelModel,
) -> Result<u64, PlanError> {
    rounds_breakdown(f, p, t_m, spec, eps, model).map(|b| b.n)
}

/// Lower end of the load domain for a channel model.
pub fn load_floor(model: ChannelModel) -> f64 {
    match model {
        ChannelModel::ZeroOne => ZERO_ONE_LOAD_FLOOR,
        ChannelModel::ZeroOneE => R_MIN_ZERO_ONE_E,
    }
}

/// Largest load `r` with `eps_max²·t_m/r >= k(r)`.
pub fn r_max(t_m: u64, eps_max: f64, model: ChannelModel) -> Result<f64, PlanError> {
    if t_m == 0 {
        return Err(PlanError::InvalidUpperBound(0.0));
    }
    let budget = eps_max * eps_max * t_m as f64;
    let feasible = |r: f64| k_bound(r, model).map(|k| budget / r >= k).unwrap_or(false);
    let lo = load_floor(model);
    let ratio = (LOAD_CEILING / lo).powf(1.0 / (R_MAX_SCAN_POINTS - 1) as f64);
    let grid: Vec<f64> = (0..R_MAX_SCAN_POINTS)
        .map(|i| if i == 0 { lo } else { lo * ratio.powi(i as i32) })
        .collect();
    let last = grid.iter().rposition(|&r| feasible(r)).ok_or_else(|| {
        PlanError::Infeasible(format!(
            "no load in the {model} domain satisfies eps_max²·t_m/r >= k(r) for t_m = {t_m}"
        ))
    })?;
    if last + 1 == grid.len() {
        return Ok(grid[last]);
    }
    let (a, b) = (grid[last], grid[last + 1]);
    // Bisect on the boundary, keeping the feasible side.
    let r = root::bisect(
        |r| if feasible(r) { -1.0 } else { 1.0 },
        a,
        b,
        R_MAX_TOLERANCE,
    );
    Ok(if feasible(r) { r } else { a.max(r - R_MAX_TOLERANCE) })
}

/// Smallest upper bound the `{0,1,e}` planner can work with,
/// `k(r_min)·r_min / (1 - α)²`.
pub fn min_estimable_upper_bound(spec: AccuracySpec) -> f64 {
    let k = k_bound(R_MIN_ZERO_ONE_E, ChannelModel::ZeroOneE)
        .expect("k(r_min) is regular for the {0,1,e} model");
    k * R_MIN_ZERO_ONE_E / (spec.eps_max() * spec.eps_max())
}

/// Grid densities and the approximation-error switch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    pub r_points: usize,
    pub f_points: usize,
    /// When false the round count targets `α` instead of `α + ε`.
    pub compensate_approx_error: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            r_points: 200,
            f_points: 64,
            compensate_approx_error: true,
        }
    }
}

impl PlannerConfig {
    pub fn without_compensation() -> Self {
        Self {
            compensate_approx_error: false,
            ..Self::default()
        }
    }
}

/// Operating point chosen by [`plan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePlan {
    pub model: ChannelModel,
    pub t_m: u64,
    pub r_op: f64,
    pub f_op: u64,
    pub p_op: f64,
    pub n_op: u64,
    pub eps_op: f64,
    pub f_min: u64,
    pub f_max: u64,
    pub total_slots: f64,
}

impl FramePlan {
    pub fn slots(f: u64, n: u64) -> f64 {
        (f as f64 + FRAME_GAP_SLOTS) * n as f64
    }
}

impl fmt::Display for FramePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model       {}", self.model)?;
        writeln!(f, "t_m         {}", self.t_m)?;
        writeln!(f, "r_op        {:.6}", self.r_op)?;
        writeln!(f, "f_op        {}  (range {}..={})", self.f_op, self.f_min, self.f_max)?;
        writeln!(f, "p_op        {:.6}", self.p_op)?;
        writeln!(f, "n_op        {}", self.n_op)?;
        writeln!(f, "eps_op      {:.6}", self.eps_op)?;
        write!(f, "total_slots {:.2}", self.total_slots)
    }
}

fn geometric(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 || hi <= lo {
        return vec![hi];
    }
    let ratio = (hi / lo).powf(1.0 / (points - 1) as f64);
    let mut out: Vec<f64> = (0..points).map(|i| lo * ratio.powi(i as i32)).collect();
    out[points - 1] = hi;
    out
}

fn frame_candidates(f_min: u64, f_max: u64, points: usize) -> Vec<u64> {
    let mut fs: Vec<u64> = geometric(f_min as f64, f_max as f64, points)
        .into_iter()
        .map(|f| to_count(f.round()).clamp(f_min, f_max))
        .collect();
    fs.push(f_min);
    fs.push(f_max);
    fs.sort_unstable();
    fs.dedup();
    fs
}

pub fn plan(spec: AccuracySpec, t_m: u64, model: ChannelModel) -> Result<FramePlan, PlanError> {
    plan_with(spec, t_m, model, &PlannerConfig::default())
}

/// Grid search for the cheapest `(f + l)·n` over loads in the model's range.
///
/// Ties go to the smaller frame, then the smaller load, so the result does not
/// depend on evaluation order.
pub fn plan_with(
    spec: AccuracySpec,
    t_m: u64,
    model: ChannelModel,
    config: &PlannerConfig,
) -> Result<FramePlan, PlanError> {
    if t_m == 0 {
        return Err(PlanError::InvalidUpperBound(0.0));
    }
    let eps_max = spec.eps_max();
    if model == ChannelModel::ZeroOneE {
        let t_ml = min_estimable_upper_bound(spec);
        if (t_m as f64) < t_ml {
            return Err(PlanError::Infeasible(format!(
                "t_m = {t_m} is below the smallest estimable upper bound {t_ml:.1} for the {{0,1,e}} model"
            )));
        }
    }
    let r_hi = r_max(t_m, eps_max, model)?;
    let r_lo = match model {
        ChannelModel::ZeroOne => r_hi / 1e4,
        ChannelModel::ZeroOneE => R_MIN_ZERO_ONE_E.min(r_hi),
    };

    let mut best: Option<FramePlan> = None;
    for r in geometric(r_lo, r_hi, config.r_points.max(1)) {
        let Ok(k) = k_bound(r, model) else { continue };
        let Ok((f_min, f_max)) = frame_bounds(r, t_m, eps_max, model) else {
            continue;
        };
        for f in frame_candidates(f_min, f_max, config.f_points) {
            let p = (r * f as f64 / t_m as f64).min(1.0);
            let eps = (k / f as f64).sqrt();
            if eps > eps_max {
                continue;
            }
            let budget = if config.compensate_approx_error { eps } else { 0.0 };
            let Ok(n) = rounds_needed(f, p, t_m, spec, budget, model) else {
                continue;
            };
            let candidate = FramePlan {
                model,
                t_m,
                r_op: r,
                f_op: f,
                p_op: p,
                n_op: n,
                eps_op: eps,
                f_min,
                f_max,
                total_slots: FramePlan::slots(f, n),
            };
            let better = match &best {
                None => true,
                Some(b) => {
                    (candidate.total_slots, candidate.f_op, candidate.r_op)
                        < (b.total_slots, b.f_op, b.r_op)
                }
            };
            if better {
                best = Some(candidate);
            }
        }
    }
    best.ok_or_else(|| {
        PlanError::Infeasible(format!(
            "no (r, f) cell in (0, {r_hi:.4}] meets the accuracy requirement for t_m = {t_m}"
        ))
    })
}
