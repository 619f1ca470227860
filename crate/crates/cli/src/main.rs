use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use resolve_limit::bounds::{
    amplitude_error_exponent, combinatorial_constants, diffraction_limit, location_bound,
    location_error_bound, number_detection_bound, Limit, LimitQuery,
};
use resolve_limit::detect::{
    default_directions, detect_1d, detect_multid, music_scan, music_spectrum, peak_count,
    DetectionResult, DEFAULT_DIRECTIONS, MUSIC_PROMINENCE, MUSIC_SCAN_POINTS,
};
use resolve_limit::harness::{
    csv, run_experiment, Execution, ExperimentConfig, ExperimentKind, Output,
};
use resolve_limit::io::read_measurement;
use resolve_limit::model::Measurement;
use resolve_limit::oracle::empirical_two_point_limit;

/// Exit status when a run contradicts a proven statement or misses an
/// acceptance threshold.
const VIOLATION: u8 = 2;

#[derive(Parser)]
#[command(
    name = "resolve-limit",
    version,
    about = "Resolution limits of two-point super-resolution"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form bounds for n sources at cutoff omega and noise ratio sigma/m.
    Limits(LimitsArgs),
    /// Count sources (one or two) in a measurement file.
    Detect(DetectArgs),
    /// Empirical two-point limit from the one-source minimax fit.
    Oracle(OracleArgs),
    /// Run the campaign described by a config file.
    Run(RunArgs),
    #[command(name = "random-1d", about = "Random bounded noise, one dimension")]
    Random1d(RunArgs),
    #[command(name = "worst-1d", about = "Adversarial noise, one dimension")]
    Worst1d(RunArgs),
    #[command(
        name = "impossible-regime",
        about = "Adversarial noise with sigma/m above one half"
    )]
    ImpossibleRegime(RunArgs),
    #[command(
        name = "random-2d",
        about = "Random noise in the plane, multi-direction detection"
    )]
    Random2d(RunArgs),
    #[command(
        name = "music-compare",
        about = "Thresholding against MUSIC below the limit"
    )]
    MusicCompare(RunArgs),
    #[command(
        name = "amplitude-scaling",
        about = "Worst-case amplitude error against SRF"
    )]
    AmplitudeScaling(RunArgs),
    #[command(
        name = "limit-sweep",
        about = "Empirical against closed-form limits over sigma/m"
    )]
    LimitSweep(RunArgs),
}

#[derive(Args)]
struct LimitsArgs {
    /// Number of sources.
    #[arg(short, long, default_value_t = 2)]
    n: usize,
    /// Cutoff frequency.
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Noise-to-minimum-amplitude ratio sigma/m.
    #[arg(long)]
    ratio: f64,
    /// Super-resolution factor for the location error bound.
    #[arg(long)]
    srf: Option<f64>,
    /// Print `quantity,value` rows instead of a table.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct DetectArgs {
    /// Measurement file.
    file: PathBuf,
    /// Noise level; defaults to the one recorded in the file.
    #[arg(long)]
    sigma: Option<f64>,
    /// Directions for planar measurements.
    #[arg(long)]
    directions: Option<usize>,
    /// Also compute the MUSIC pseudospectrum and write it to this CSV.
    #[arg(long, value_name = "CSV")]
    music: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Sweep sigma/m and print empirical and closed-form limits as CSV.
    #[arg(long)]
    sweep: bool,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Noise level (single query).
    #[arg(long, required_unless_present = "sweep")]
    sigma: Option<f64>,
    /// Bisection width, in units of 1/omega.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// Number of ratios in the sweep.
    #[arg(long, default_value_t = 10)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra `key=value` settings, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run trials on one thread.
    #[arg(long)]
    sequential: bool,
}

fn main() -> ExitCode {
    // usage errors exit with 1; 2 is reserved for violations
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let kind = |k| Some(k);
    let outcome = match cli.command {
        Command::Limits(a) => limits(&a),
        Command::Detect(a) => detect(&a),
        Command::Oracle(a) => oracle(&a),
        Command::Run(a) => campaign(None, &a),
        Command::Random1d(a) => campaign(kind(ExperimentKind::Random1d), &a),
        Command::Worst1d(a) => campaign(kind(ExperimentKind::Worst1d), &a),
        Command::ImpossibleRegime(a) => campaign(kind(ExperimentKind::ImpossibleRegime), &a),
        Command::Random2d(a) => campaign(kind(ExperimentKind::Random2d), &a),
        Command::MusicCompare(a) => campaign(kind(ExperimentKind::MusicCompare), &a),
        Command::AmplitudeScaling(a) => campaign(kind(ExperimentKind::AmplitudeScaling), &a),
        Command::LimitSweep(a) => campaign(kind(ExperimentKind::LimitSweep), &a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn fmt_result(r: resolve_limit::Result<f64>) -> String {
    r.map_or_else(|_| "undefined".into(), |v| v.to_string())
}

fn limits(a: &LimitsArgs) -> Result<ExitCode> {
    let q = LimitQuery::new(a.n, a.omega, a.ratio)?;
    let constants = combinatorial_constants(a.n)?;
    let mut rows: Vec<(&str, String)> = vec![
        (
            "diffraction_limit",
            match diffraction_limit(a.omega, a.ratio)? {
                Limit::Length(d) => d.to_string(),
                Limit::NoSuperResolution => "none".into(),
            },
        ),
        (
            "rayleigh_length",
            (std::f64::consts::PI / a.omega).to_string(),
        ),
        ("number_detection", fmt_result(number_detection_bound(&q))),
        ("location", fmt_result(location_bound(&q))),
        ("zeta", constants.zeta().to_string()),
        ("xi", constants.xi().to_string()),
        ("lambda", constants.lambda().to_string()),
        ("location_constant", constants.c().to_string()),
        (
            "amplitude_exponent_exact",
            amplitude_error_exponent(a.n, true).to_string(),
        ),
        (
            "amplitude_exponent_free",
            amplitude_error_exponent(a.n, false).to_string(),
        ),
    ];
    if let Some(srf) = a.srf {
        rows.push((
            "location_error",
            location_error_bound(a.n, a.omega, srf, a.ratio)?.to_string(),
        ));
    }
    let mut out = io::stdout().lock();
    if a.csv {
        writeln!(out, "quantity,value")?;
        for (k, v) in &rows {
            writeln!(out, "{k},{v}")?;
        }
    } else {
        writeln!(
            out,
            "n = {}, omega = {}, sigma/m = {}",
            a.n, a.omega, a.ratio
        )?;
        for (k, v) in &rows {
            writeln!(out, "  {k:<26} {v}")?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn planar(y: &Measurement, sigma: f64, count: usize) -> Result<DetectionResult> {
    let directions = default_directions(count);
    let cutoff = y.cutoff();
    for v in &directions {
        for s in [-1.0, 1.0] {
            let w: Vec<f64> = v.iter().map(|c| s * cutoff * c).collect();
            if y.value_at(&w).is_none() {
                bail!("measurement has no observed sample at {w:?}");
            }
        }
    }
    if y.value_at(&[0.0, 0.0]).is_none() {
        bail!("measurement has no observed sample at the origin");
    }
    let provider = |w: &[f64]| y.value_at(w).expect("checked above");
    Ok(detect_multid(provider, cutoff, sigma, &directions)?)
}

fn detect(a: &DetectArgs) -> Result<ExitCode> {
    let f = File::open(&a.file).with_context(|| format!("opening {}", a.file.display()))?;
    let file = read_measurement(BufReader::new(f))
        .with_context(|| format!("reading {}", a.file.display()))?;
    let y = &file.measurement;
    let sigma = a.sigma.unwrap_or(y.noise_level());
    let result = match y.dim() {
        1 => detect_1d(y, sigma)?,
        2 => planar(y, sigma, a.directions.unwrap_or(DEFAULT_DIRECTIONS))?,
        k => bail!("detection is implemented in one and two dimensions, not {k}"),
    };
    let mut out = io::stdout().lock();
    writeln!(out, "sources: {}", result.detected_n)?;
    writeln!(out, "threshold: {}", result.threshold)?;
    if let Some(q) = result.direction {
        let (s1, s2) = result.singular_values[q];
        writeln!(out, "direction: {q}")?;
        writeln!(out, "singular values: {s1} {s2}")?;
    }
    if let Some(path) = &a.music {
        if y.dim() != 1 {
            bail!("MUSIC is one-dimensional");
        }
        let scan = music_scan(y.cutoff(), MUSIC_SCAN_POINTS);
        let spectrum = music_spectrum(y, 2, &scan)?;
        writeln!(
            out,
            "music peaks: {}",
            peak_count(&spectrum, MUSIC_PROMINENCE)
        )?;
        let mut w = create(path)?;
        writeln!(w, "y,spectrum")?;
        for (x, s) in scan.iter().zip(&spectrum) {
            writeln!(w, "{x},{s}")?;
        }
        w.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn oracle(a: &OracleArgs) -> Result<ExitCode> {
    if a.sweep {
        let mut c = ExperimentConfig::new(ExperimentKind::LimitSweep);
        c.cutoff = a.omega;
        c.points = a.points;
        c.tolerance = a.tolerance;
        c.output = a.out.clone();
        return finish(&c, run_experiment(&c)?);
    }
    let sigma = a.sigma.expect("clap requires sigma without --sweep");
    let empirical = empirical_two_point_limit(a.m, a.omega, sigma, a.tolerance / a.omega)?;
    let formula = diffraction_limit(a.omega, sigma / a.m)?;
    let mut out = io::stdout().lock();
    writeln!(out, "empirical: {empirical}")?;
    if let Limit::Length(d) = formula {
        writeln!(out, "formula: {d}")?;
        writeln!(out, "relative gap: {:e}", (empirical - d).abs() / d)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn campaign(kind: Option<ExperimentKind>, a: &RunArgs) -> Result<ExitCode> {
    let text = match &a.config {
        Some(p) => {
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?
        }
        None if kind.is_some() => String::new(),
        None => bail!("`run` needs --config"),
    };
    let mut c = ExperimentConfig::parse_as(kind, &text)?;
    if let Some(t) = a.trials {
        c.trials = t;
    }
    if let Some(s) = a.seed {
        c.seed = s;
    }
    for kv in &a.overrides {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("expected KEY=VALUE, got {kv:?}"))?;
        c.set(k.trim(), v.trim())?;
    }
    if let Some(p) = &a.out {
        c.output = Some(p.clone());
    }
    if a.sequential {
        c.execution = Execution::Sequential;
    }
    c.validate()?;
    finish(&c, run_experiment(&c)?)
}

/// `runs.csv` -> `runs.spectra.csv`
fn spectra_path(out: &Path) -> PathBuf {
    out.with_extension("spectra.csv")
}

fn finish(c: &ExperimentConfig, output: Output) -> Result<ExitCode> {
    match &c.output {
        Some(path) => {
            let mut w = create(path)?;
            output.write_csv(&mut w, c)?;
            w.flush()?;
            if let Output::Music(report) = &output {
                let mut w = create(&spectra_path(path))?;
                csv::write_spectra(&mut w, c, report)?;
                w.flush()?;
            }
        }
        None => output.write_csv(io::stdout().lock(), c)?,
    }
    let summary = output.summary(c);
    for line in &summary.lines {
        eprintln!("{line}");
    }
    Ok(if summary.violations > 0 {
        ExitCode::from(VIOLATION)
    } else {
        ExitCode::SUCCESS
    })
}
