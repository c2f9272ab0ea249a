use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use gean::planner::plan;
use gean::probe::{upper_bound, UpperBound, DEFAULT_PROBE_ROUNDS};
use gean::runtime::{estimate_from_bound, estimate_with};
use gean::{AccuracySpec, ChannelModel, EstimatorOptions, Population, ReplyModel};
use gean_cli::campaign::{all_infeasible, run_campaign, CampaignConfig, Scheme, DEFAULT_T_VALUES};
use gean_cli::config::{ConfigFile, Settings};
use gean_cli::output::write_outputs;

/// GEAN active-node cardinality estimator.
#[derive(Parser)]
#[command(name = "gean", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the frame plan for an accuracy requirement and upper bound.
    Plan(Common),
    /// Run the Flajolet-Martin upper-bound probe.
    Probe(Common),
    /// One end-to-end estimate.
    Estimate(Common),
    /// Monte Carlo campaign over a (scheme, model, t) grid.
    Campaign(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Upper bound on the population.
    #[arg(long)]
    tm: Option<u64>,
    /// Population size (a comma-separated list for campaigns).
    #[arg(long)]
    t: Option<String>,
    /// zo or zoe (a comma-separated list for campaigns).
    #[arg(long)]
    model: Option<String>,
    /// hash or indep.
    #[arg(long)]
    reply: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Output directory for campaign files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of GEAN, GEAN-WAEC, EZB.
    #[arg(long)]
    schemes: Option<String>,
    /// Probe rounds averaged into t_m.
    #[arg(long)]
    rounds: Option<u32>,
    /// Count probe slots in the campaign slot figures.
    #[arg(long)]
    include_probe_cost: bool,
}

impl Common {
    fn settings(&self) -> Result<Settings> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        Ok(Settings::new(file)
            .flag("alpha", self.alpha)
            .flag("beta", self.beta)
            .flag("tm", self.tm)
            .flag("t", self.t.as_ref())
            .flag("model", self.model.as_ref())
            .flag("reply", self.reply.as_ref())
            .flag("seed", self.seed)
            .flag("trials", self.trials)
            .flag("out", self.out.as_ref().map(|p| p.display()))
            .flag("schemes", self.schemes.as_ref())
            .flag("rounds", self.rounds)
            .flag("include_probe_cost", self.include_probe_cost.then_some(true)))
    }
}

fn spec(s: &Settings) -> Result<AccuracySpec> {
    Ok(AccuracySpec::new(s.require("alpha")?, s.require("beta")?)?)
}

fn options(s: &Settings) -> Result<EstimatorOptions> {
    Ok(EstimatorOptions {
        probe_rounds: s.get_or("rounds", DEFAULT_PROBE_ROUNDS)?,
        reply: s.get_or("reply", ReplyModel::default())?,
        ..EstimatorOptions::default()
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Plan(c) => {
            let s = c.settings()?;
            let model: ChannelModel = s.get_or("model", ChannelModel::ZeroOne)?;
            let p = plan(spec(&s)?, s.require("tm")?, model)?;
            println!("{p}");
        }
        Command::Probe(c) => {
            let s = c.settings()?;
            let o = options(&s)?;
            let pop = Population::new(s.require("t")?, s.get_or("seed", 1)?);
            let ub = upper_bound(pop, o.probe_rounds, o.reply, s.get_or("seed", 1)?)?;
            println!("t_m            {:.3}", ub.t_m);
            println!("planning bound {}", ub.planning_bound());
            println!("rounds         {}", ub.rounds.len());
            println!("probe slots    {}", ub.slots());
        }
        Command::Estimate(c) => {
            let s = c.settings()?;
            let o = options(&s)?;
            let model: ChannelModel = s.get_or("model", ChannelModel::ZeroOne)?;
            let seed: u64 = s.get_or("seed", 1)?;
            let pop = Population::new(s.require("t")?, seed);
            let report = match s.get::<u64>("tm")? {
                Some(t_m) => {
                    // A known bound replaces the probe.
                    let bound = UpperBound {
                        t_m: t_m as f64,
                        rounds: Vec::new(),
                    };
                    estimate_from_bound(spec(&s)?, pop, model, seed, &o, &bound)?
                }
                None => estimate_with(spec(&s)?, pop, model, seed, &o)?,
            };
            println!("{report}");
        }
        Command::Campaign(c) => {
            let s = c.settings()?;
            let defaults = CampaignConfig::default();
            let cfg = CampaignConfig {
                schemes: s.list::<Scheme>("schemes")?.unwrap_or(defaults.schemes),
                models: s.list::<ChannelModel>("model")?.unwrap_or(defaults.models),
                t_values: s.list::<u64>("t")?.unwrap_or_else(|| DEFAULT_T_VALUES.to_vec()),
                alpha: s.get_or("alpha", defaults.alpha)?,
                beta: s.get_or("beta", defaults.beta)?,
                trials: s.get_or("trials", defaults.trials)?,
                master_seed: s.get_or("seed", defaults.master_seed)?,
                include_probe_cost: s.get_or("include_probe_cost", false)?,
                output_dir: s.get_or("out", defaults.output_dir)?,
                reply: s.get_or("reply", defaults.reply)?,
                probe_rounds: s.get_or("rounds", defaults.probe_rounds)?,
            };
            let rows = run_campaign(&cfg)?;
            let paths = write_outputs(&rows, &cfg)?;
            for r in &rows {
                let rel = r.achieved_reliability.map_or("-".to_string(), |x| format!("{x:.4}"));
                let slots = r.mean_slots.map_or("-".to_string(), |x| format!("{x:.1}"));
                println!("{:<10} {:<4} t={:<7} reliability={rel:<7} slots={slots:<10} {}", r.scheme, r.model, r.t, r.reason);
            }
            for p in paths {
                println!("wrote {}", p.display());
            }
            if all_infeasible(&rows) {
                eprintln!("every cell was infeasible");
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
