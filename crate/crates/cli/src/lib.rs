//! Command-line front end for the `gean` estimator: configuration files,
//! Monte Carlo campaigns and their CSV/SVG outputs.

pub mod campaign;
pub mod config;
pub mod output;
pub mod svg;

pub use campaign::{run_campaign, CampaignConfig, CampaignRow, Scheme};
pub use output::{read_csv, write_csv, write_outputs};
