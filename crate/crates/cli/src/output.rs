//! `results.csv`, `reliability.svg` and `slots.svg`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::campaign::{CampaignConfig, CampaignRow};
use crate::svg::{Chart, Series};

pub const CSV_HEADER: &str =
    "scheme,model,t,alpha,beta,trials,achieved_reliability,mean_slots,std_slots,mean_t_hat,mean_probe_slots,reason";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("nothing to write: no campaign rows")]
    NoRows,
}

pub fn write_csv<W: Write>(out: W, rows: &[CampaignRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CampaignRow>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

type Points = Vec<(f64, Option<f64>)>;

fn series_by_scheme(rows: &[CampaignRow], value: impl Fn(&CampaignRow) -> Option<f64>) -> Vec<Series> {
    let mut grouped: BTreeMap<(String, String), Points> = BTreeMap::new();
    for r in rows {
        grouped
            .entry((r.scheme.to_string(), r.model.to_string()))
            .or_default()
            .push((r.t.max(1) as f64, value(r)));
    }
    grouped
        .into_iter()
        .map(|((scheme, model), mut points)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series {
                label: format!("{scheme} {model}"),
                points,
            }
        })
        .collect()
}

pub fn reliability_chart(rows: &[CampaignRow], cfg: &CampaignConfig) -> Chart {
    Chart {
        title: format!("Achieved reliability (alpha = {}, beta = {})", cfg.alpha, cfg.beta),
        x_label: "number of active nodes t".into(),
        y_label: "fraction of trials within beta".into(),
        log_x: true,
        reference: Some((cfg.alpha, format!("alpha = {}", cfg.alpha))),
        series: series_by_scheme(rows, |r| r.achieved_reliability),
    }
}

pub fn slots_chart(rows: &[CampaignRow], cfg: &CampaignConfig) -> Chart {
    let what = if cfg.include_probe_cost { "slots incl. probe" } else { "estimation slots" };
    Chart {
        title: format!("Mean {what} (alpha = {}, beta = {})", cfg.alpha, cfg.beta),
        x_label: "number of active nodes t".into(),
        y_label: what.into(),
        log_x: true,
        reference: None,
        series: series_by_scheme(rows, |r| r.mean_slots),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), OutputError> {
    let io_err = |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = BufWriter::new(File::create(path).map_err(io_err)?);
    f.write_all(bytes).map_err(io_err)?;
    f.flush().map_err(io_err)
}

/// Writes the three campaign files into `cfg.output_dir` and returns their paths.
pub fn write_outputs(rows: &[CampaignRow], cfg: &CampaignConfig) -> Result<Vec<PathBuf>, OutputError> {
    if rows.is_empty() {
        return Err(OutputError::NoRows);
    }
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.clone(),
        source,
    })?;
    let csv_path = dir.join("results.csv");
    let mut buf = Vec::new();
    write_csv(&mut buf, rows).map_err(|source| OutputError::Csv {
        path: csv_path.clone(),
        source,
    })?;
    write_file(&csv_path, &buf)?;
    let rel = dir.join("reliability.svg");
    write_file(&rel, reliability_chart(rows, cfg).render().as_bytes())?;
    let slots = dir.join("slots.svg");
    write_file(&slots, slots_chart(rows, cfg).render().as_bytes())?;
    Ok(vec![csv_path, rel, slots])
}
