use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExperimentConfig, Study};
use super::dumps::LandscapeDump;
use super::study::{GapBinning, MetricsReport, Stat};
use crate::error::Result;
use crate::expansion::ResourceReport;

#[derive(Debug, Serialize)]
struct MetricLine {
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    p: u32,
    gamma: Option<f64>,
    value: f64,
    stderr: f64,
    count: usize,
}

/// Long-format rows `n,M,p,gamma,value,stderr,count` for one metric.
pub fn write_metric_csv<W: Write>(out: W, report: &MetricsReport, metric: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in &report.rows {
        let stat: Stat = match metric {
            "epsilon" => row.epsilon,
            "delta" => row.delta,
            "nu" => match row.nu {
                Some(s) => s,
                None => continue,
            },
            other => return Err(crate::error::MoqaError::invalid(format!("unknown metric '{other}'"))),
        };
        w.serialize(MetricLine {
            n: row.n,
            m: row.m,
            p: row.p,
            gamma: row.gamma,
            value: stat.mean,
            stderr: stat.stderr,
            count: stat.count,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_samples_csv<W: Write>(out: W, report: &MetricsReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in &report.samples {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_gap_bins_csv<W: Write>(out: W, binning: &GapBinning) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for bin in &binning.bins {
        w.serialize(bin)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `index,bits,h_1..h_M,h_max,root_p..,argmin_max,argmin_p..`.
pub fn write_landscape_dump<W: Write>(out: W, dump: &LandscapeDump) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["index".to_string(), "bits".to_string()];
    header.extend((1..=dump.objectives.len()).map(|m| format!("h_{m}")));
    header.push("h_max".to_string());
    header.extend(dump.levels.iter().map(|p| format!("root_p{p}")));
    header.push("argmin_max".to_string());
    header.extend(dump.levels.iter().map(|p| format!("argmin_p{p}")));
    w.write_record(&header)?;
    for i in 0..dump.hmax.len() {
        let bits: String = (0..dump.n)
            .map(|k| if (i >> k) & 1 == 1 { '1' } else { '0' })
            .collect();
        let mut rec = vec![i.to_string(), bits];
        rec.extend(dump.objectives.iter().map(|h| h[i].to_string()));
        rec.push(dump.hmax[i].to_string());
        rec.extend(dump.roots.iter().map(|r| r[i].to_string()));
        rec.push(u8::from(dump.argmin_max == i as u64).to_string());
        rec.extend(dump.argmin_levels.iter().map(|&a| u8::from(a == i as u64).to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ResourceLine {
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    p: u32,
    brute_force_steps: f64,
    classical_steps: f64,
    max_terms: String,
}

pub fn write_resources_csv<W: Write>(out: W, rows: &[ResourceReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(ResourceLine {
            n: r.n,
            m: r.objectives,
            p: r.level,
            brute_force_steps: r.brute_force_steps,
            classical_steps: r.classical_steps,
            max_terms: r.max_terms.to_string(),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub version: &'static str,
    pub study: Study,
    pub config_hash: String,
    pub config: &'a ExperimentConfig,
    pub warnings: &'a [String],
    pub files: Vec<String>,
    pub sample_records: usize,
    pub resamples: usize,
    pub gap_ratio_undefined: usize,
    pub guarantee_violations: usize,
}

/// Writes every CSV of a finished study plus `manifest.json` into `dir`.
pub fn write_study_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    report: &MetricsReport,
    binning: &GapBinning,
    warnings: &[String],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let name = report.study.name();
    let mut files = Vec::new();
    let mut metrics = vec!["epsilon", "delta"];
    if report.study == Study::Constrained {
        metrics.push("nu");
    }
    for metric in metrics {
        let path = dir.join(format!("{name}_{metric}.csv"));
        write_metric_csv(fs::File::create(&path)?, report, metric)?;
        files.push(path);
    }
    let path = dir.join(format!("{name}_samples.csv"));
    write_samples_csv(fs::File::create(&path)?, report)?;
    files.push(path);
    let path = dir.join(format!("{name}_gap_bins.csv"));
    write_gap_bins_csv(fs::File::create(&path)?, binning)?;
    files.push(path);

    let manifest = Manifest {
        version: crate::VERSION,
        study: report.study,
        config_hash: cfg.hash()?,
        config: cfg,
        warnings,
        files: files
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
        sample_records: report.samples.len(),
        resamples: report.resamples,
        gap_ratio_undefined: binning.excluded,
        guarantee_violations: report.guarantee_violations,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    files.push(path);
    Ok(files)
}
