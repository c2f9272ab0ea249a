//! End-to-end estimation: probe, plan, run frames, average, invert.

use std::fmt;

use thiserror::Error;

use crate::planner::{plan_with, AccuracySpec, FramePlan, PlanError, PlannerConfig, FRAME_GAP_SLOTS};
use crate::probe::{upper_bound, ProbeError, UpperBound, DEFAULT_PROBE_ROUNDS};
use crate::seed;
use crate::sim::{run_frame, tally, z_statistic, Population, ReplyModel};
use crate::stats::{dip_location, invert_expected_z, ChannelModel, StatsError};

const PROBE_STREAM: u64 = 0;
const FRAME_STREAM: u64 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("probe failed: {0}")]
    Probe(#[from] ProbeError),
    #[error("planning failed: {0}")]
    Plan(#[from] PlanError),
    #[error("channel saturated: mean z = {z_bar} is at or above the reachable supremum {supremum} (f = {f_op}, p = {p_op})")]
    Saturated {
        z_bar: f64,
        supremum: f64,
        f_op: u64,
        p_op: f64,
        slots_estimation: f64,
        slots_probe: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    pub probe_rounds: u32,
    pub reply: ReplyModel,
    pub planner: PlannerConfig,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            probe_rounds: DEFAULT_PROBE_ROUNDS,
            reply: ReplyModel::default(),
            planner: PlannerConfig::default(),
        }
    }
}

/// Result of one estimation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub model: ChannelModel,
    pub t_hat: f64,
    /// Averaged probe bound, before rounding.
    pub t_m: f64,
    /// `None` when the probe already proved the population empty.
    pub plan: Option<FramePlan>,
    pub z_values: Vec<f64>,
    pub z_bar: f64,
    pub slots_estimation: f64,
    pub slots_probe: f64,
}

impl EstimateReport {
    pub fn within(&self, t: u64, beta: f64) -> bool {
        (self.t_hat - t as f64).abs() <= beta * t as f64
    }
}

impl fmt::Display for EstimateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "t_hat            {:.3}", self.t_hat)?;
        writeln!(f, "t_m (probe)      {:.3}", self.t_m)?;
        match &self.plan {
            Some(p) => writeln!(
                f,
                "plan             r={:.4} f={} p={:.6} n={} eps={:.5}",
                p.r_op, p.f_op, p.p_op, p.n_op, p.eps_op
            )?,
            None => writeln!(f, "plan             none (probe saw an empty slot at p = 1)")?,
        }
        writeln!(f, "z_bar            {:.6}", self.z_bar)?;
        writeln!(f, "frames           {}", self.z_values.len())?;
        writeln!(f, "slots_estimation {:.2}", self.slots_estimation)?;
        write!(f, "slots_probe      {:.2}", self.slots_probe)
    }
}

/// Slots charged to a report, optionally including the probe.
pub fn slots_used(report: &EstimateReport, include_probe: bool) -> f64 {
    if include_probe {
        report.slots_estimation + report.slots_probe
    } else {
        report.slots_estimation
    }
}

/// `(f + l)·n` with the fixed inter-frame gap.
pub fn estimation_slots(f: u64, n: u64) -> f64 {
    (f as f64 + FRAME_GAP_SLOTS) * n as f64
}

pub fn estimate(
    spec: AccuracySpec,
    pop: Population,
    model: ChannelModel,
    reply: ReplyModel,
    seed: u64,
) -> Result<EstimateReport, EstimateError> {
    let options = EstimatorOptions {
        reply,
        ..EstimatorOptions::default()
    };
    estimate_with(spec, pop, model, seed, &options)
}

pub fn estimate_with(
    spec: AccuracySpec,
    pop: Population,
    model: ChannelModel,
    seed: u64,
    options: &EstimatorOptions,
) -> Result<EstimateReport, EstimateError> {
    let bound = upper_bound(pop, options.probe_rounds, options.reply, seed::child(seed, PROBE_STREAM))?;
    estimate_from_bound(spec, pop, model, seed, options, &bound)
}

/// Runs the estimation phase against an already measured bound.
pub fn estimate_from_bound(
    spec: AccuracySpec,
    pop: Population,
    model: ChannelModel,
    seed: u64,
    options: &EstimatorOptions,
    bound: &UpperBound,
) -> Result<EstimateReport, EstimateError> {
    let slots_probe = bound.slots() as f64;
    if bound.saw_silence() {
        // The one-slot frame at p = 1 was empty, so nobody is active.
        let z = match model {
            ChannelModel::ZeroOne => -1.0,
            ChannelModel::ZeroOneE => 0.0,
        };
        return Ok(EstimateReport {
            model,
            t_hat: 0.0,
            t_m: bound.t_m,
            plan: None,
            z_values: vec![z],
            z_bar: z,
            slots_estimation: 0.0,
            slots_probe,
        });
    }
    let plan = plan_with(spec, bound.planning_bound(), model, &options.planner)?;
    run_plan(pop, &plan, options.reply, seed, bound.t_m, slots_probe)
}

/// Runs `n_op` frames of a plan and inverts the averaged statistic.
pub fn run_plan(
    pop: Population,
    plan: &FramePlan,
    reply: ReplyModel,
    seed: u64,
    t_m: f64,
    slots_probe: f64,
) -> Result<EstimateReport, EstimateError> {
    let frames = seed::child(seed, FRAME_STREAM);
    let z_values: Vec<f64> = (0..plan.n_op)
        .map(|j| {
            let seq = run_frame(pop, plan.f_op, plan.p_op, reply, plan.model, seed::child(frames, j))
                .expect("planned frame parameters are valid");
            z_statistic(&tally(&seq), plan.model)
        })
        .collect();
    let z_bar = z_values.iter().sum::<f64>() / z_values.len() as f64;
    let slots_estimation = estimation_slots(plan.f_op, plan.n_op);
    let t_hat = match invert_expected_z(z_bar, plan.p_op, plan.f_op, plan.model) {
        Ok(t) => t,
        Err(StatsError::OutOfRange { lower, upper, .. }) => {
            if z_bar < lower {
                // Below the dip: the right-of-dip rule puts the estimate on the boundary.
                dip_location(plan.p_op, plan.f_op)
            } else {
                return Err(EstimateError::Saturated {
                    z_bar,
                    supremum: upper,
                    f_op: plan.f_op,
                    p_op: plan.p_op,
                    slots_estimation,
                    slots_probe,
                });
            }
        }
        Err(e) => return Err(PlanError::from(e).into()),
    };
    Ok(EstimateReport {
        model: plan.model,
        t_hat,
        t_m,
        plan: Some(*plan),
        z_values,
        z_bar,
        slots_estimation,
        slots_probe,
    })
}
