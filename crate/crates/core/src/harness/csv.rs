//! CSV output. Every file starts with one `#` line naming the tool
//! version, experiment kind, seed and cutoff, then a header row.
//!
//! | kind | columns |
//! |------|---------|
//! | random-1d, worst-1d, impossible-regime, random-2d | [`TRIAL_COLUMNS`] |
//! | music-compare | [`MUSIC_COLUMNS`]; spectra separately as [`SPECTRUM_COLUMNS`] |
//! | amplitude-scaling | [`SCALING_COLUMNS`] |
//! | limit-sweep | [`SWEEP_COLUMNS`] |
//!
//! Booleans are `1`/`0`; absent values are empty cells.

use std::io::Write;

use crate::error::{Error, Result};
use crate::harness::campaigns::{MusicReport, SweepRow, TrialRecord};
use crate::harness::config::ExperimentConfig;
use crate::harness::scaling::ScalingReport;
use crate::VERSION;

pub const TRIAL_COLUMNS: [&str; 15] = [
    "trial",
    "kind",
    "ratio",
    "sigma",
    "d_min",
    "limit",
    "a_max",
    "true_n",
    "detected_n",
    "sigma1",
    "sigma2",
    "threshold",
    "success",
    "admissible",
    "direction",
];
pub const MUSIC_COLUMNS: [&str; 7] = [
    "case",
    "ratio",
    "d_min",
    "limit",
    "detected_n",
    "sigma2",
    "music_peaks",
];
pub const SPECTRUM_COLUMNS: [&str; 3] = ["case", "y", "spectrum"];
pub const SCALING_COLUMNS: [&str; 6] = [
    "srf",
    "d_min",
    "sigma",
    "error_all_exact",
    "error_target_exact",
    "error_free",
];
pub const SWEEP_COLUMNS: [&str; 4] = ["ratio", "limit_formula", "limit_empirical", "relative_gap"];

/// Case id written for the noiseless control of music-compare.
pub const CONTROL_CASE: &str = "control";

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

/// The leading comment line.
pub fn preamble(config: &ExperimentConfig) -> String {
    format!(
        "# resolve-limit v{VERSION} kind={} seed={} omega={} trials={}",
        config.kind, config.seed, config.cutoff, config.trials
    )
}

fn start<W: Write>(out: W, config: &ExperimentConfig, columns: &[&str]) -> Result<csv::Writer<W>> {
    let mut out = out;
    writeln!(out, "{}", preamble(config))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns).map_err(csv_err)?;
    Ok(w)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_trials<W: Write>(
    out: W,
    config: &ExperimentConfig,
    records: &[TrialRecord],
) -> Result<()> {
    let mut w = start(out, config, &TRIAL_COLUMNS)?;
    for r in records {
        w.write_record([
            r.trial.to_string(),
            r.kind.to_string(),
            r.ratio.to_string(),
            r.sigma.to_string(),
            r.d_min.to_string(),
            opt(r.limit),
            r.a_max.to_string(),
            r.true_n.to_string(),
            r.detected_n.to_string(),
            r.sigma1.to_string(),
            r.sigma2.to_string(),
            r.threshold.to_string(),
            flag(r.success).into(),
            opt(r.admissible.map(flag)),
            opt(r.direction),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_music<W: Write>(
    out: W,
    config: &ExperimentConfig,
    report: &MusicReport,
) -> Result<()> {
    let mut w = start(out, config, &MUSIC_COLUMNS)?;
    let control = std::iter::once((CONTROL_CASE.to_string(), &report.control));
    let cases = report.cases.iter().map(|c| (c.trial.to_string(), c));
    for (id, c) in cases.chain(control) {
        w.write_record([
            id,
            c.ratio.to_string(),
            c.d_min.to_string(),
            opt(c.limit),
            c.detected_n.to_string(),
            c.sigma2.to_string(),
            opt(c.peaks),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format spectra: one row per (case, scan location).
pub fn write_spectra<W: Write>(
    out: W,
    config: &ExperimentConfig,
    report: &MusicReport,
) -> Result<()> {
    let mut w = start(out, config, &SPECTRUM_COLUMNS)?;
    for (trial, spectrum) in &report.spectra {
        let id = if *trial == usize::MAX {
            CONTROL_CASE.to_string()
        } else {
            trial.to_string()
        };
        for (y, s) in report.scan.iter().zip(spectrum) {
            w.write_record([id.clone(), y.to_string(), s.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_scaling<W: Write>(
    out: W,
    config: &ExperimentConfig,
    report: &ScalingReport,
) -> Result<()> {
    let mut w = start(out, config, &SCALING_COLUMNS)?;
    for r in &report.rows {
        w.write_record([
            r.srf.to_string(),
            r.d.to_string(),
            report.sigma.to_string(),
            r.errors[0].to_string(),
            r.errors[1].to_string(),
            r.errors[2].to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep<W: Write>(out: W, config: &ExperimentConfig, rows: &[SweepRow]) -> Result<()> {
    let mut w = start(out, config, &SWEEP_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.ratio.to_string(),
            r.formula.to_string(),
            r.empirical.to_string(),
            r.relative_gap.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
