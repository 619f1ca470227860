//! Seeded Monte Carlo campaigns.
//!
//! Trial `i` of a campaign seeded with `s` draws everything from its own
//! ChaCha8 stream seeded with [`exec::trial_seed`]`(s, i)`, so sequential
//! and parallel runs agree byte for byte.

pub mod campaigns;
pub mod config;
pub mod csv;
pub mod exec;
pub mod scaling;

use std::io::Write;

pub use campaigns::{
    guarantee_violations, run_limit_sweep, run_music_compare, run_random_1d, run_random_2d,
    run_worst_case_1d, MusicCase, MusicReport, SweepRow, TrialRecord,
};
pub use config::{DScale, ExperimentConfig, ExperimentKind};
pub use exec::Execution;
pub use scaling::{run_amplitude_scaling, ScalingReport, ScalingVariant};

use crate::error::Result;

/// Relative gap tolerated between empirical and closed-form limits.
pub const SWEEP_GAP: f64 = 0.02;
/// Accepted amplitude-scaling slope window around `2n - 2` for `n = 2`.
pub const SLOPE_TARGET: f64 = 2.0;
pub const SLOPE_TOLERANCE: f64 = 0.5;
/// Contrast cases the MUSIC comparison should turn up.
pub const MUSIC_MIN_CASES: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Trials(Vec<TrialRecord>),
    Music(MusicReport),
    Scaling(ScalingReport),
    Sweep(Vec<SweepRow>),
}

/// What a run established, for people and for exit codes.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub lines: Vec<String>,
    /// Number of observations contradicting a proven statement or an
    /// acceptance threshold.
    pub violations: usize,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Output> {
    use ExperimentKind::*;
    Ok(match config.kind {
        Random1d => Output::Trials(run_random_1d(config)?),
        Worst1d | ImpossibleRegime => Output::Trials(run_worst_case_1d(config)?),
        Random2d => Output::Trials(run_random_2d(config)?),
        MusicCompare => Output::Music(run_music_compare(config)?),
        AmplitudeScaling => Output::Scaling(run_amplitude_scaling(config)?),
        LimitSweep => Output::Sweep(run_limit_sweep(config)?),
    })
}

impl Output {
    /// The main CSV of this output.
    pub fn write_csv<W: Write>(&self, out: W, config: &ExperimentConfig) -> Result<()> {
        match self {
            Self::Trials(r) => csv::write_trials(out, config, r),
            Self::Music(r) => csv::write_music(out, config, r),
            Self::Scaling(r) => csv::write_scaling(out, config, r),
            Self::Sweep(r) => csv::write_sweep(out, config, r),
        }
    }

    pub fn summary(&self, config: &ExperimentConfig) -> Summary {
        match self {
            Self::Trials(records) => {
                let successes = records.iter().filter(|r| r.success).count();
                let bad = guarantee_violations(config, records);
                let mut lines = vec![
                    format!(
                        "{}: {} trials, {} detected two sources",
                        config.kind,
                        records.len(),
                        successes
                    ),
                    format!("theorem violations: {}", bad.len()),
                ];
                if let Some(first) = bad.first() {
                    lines.push(format!("first violating trial: {first}"));
                }
                Summary {
                    lines,
                    violations: bad.len(),
                }
            }
            Self::Music(r) => {
                let found = r.contrast_count();
                Summary {
                    lines: vec![
                        format!(
                            "music-compare: {found} of {} draws detected as two sources with a single MUSIC peak",
                            r.cases.len()
                        ),
                        format!(
                            "control: thresholding {} sources, MUSIC {} peaks",
                            r.control.detected_n,
                            r.control.peaks.unwrap_or(0)
                        ),
                    ],
                    violations: usize::from(found < MUSIC_MIN_CASES),
                }
            }
            Self::Scaling(r) => {
                let mut lines = Vec::new();
                for v in ScalingVariant::ALL {
                    let s = r.slope(v);
                    lines.push(format!(
                        "amplitude-scaling slope ({}): {}",
                        v.name(),
                        s.map_or("undefined".into(), |s| format!("{s:.3}"))
                    ));
                }
                let target = r.slope(ScalingVariant::TargetExact);
                let ok = r.sigma == 0.0
                    || target.is_some_and(|s| (s - SLOPE_TARGET).abs() <= SLOPE_TOLERANCE);
                Summary {
                    lines,
                    violations: usize::from(!ok),
                }
            }
            Self::Sweep(rows) => {
                let worst = rows.iter().map(|r| r.relative_gap).fold(0.0, f64::max);
                let over = rows.iter().filter(|r| r.relative_gap >= SWEEP_GAP).count();
                Summary {
                    lines: vec![format!(
                        "limit-sweep: {} ratios, worst relative gap {worst:.3e}, {over} above {SWEEP_GAP}",
                        rows.len()
                    )],
                    violations: over,
                }
            }
        }
    }
}
