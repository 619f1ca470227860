//! Monte Carlo campaigns over random two-source scenes.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{diffraction_limit, Limit};
use crate::detect::{
    default_directions, detect_1d, detect_multid, music_scan, music_spectrum, peak_count,
    MUSIC_PROMINENCE, MUSIC_SCAN_POINTS,
};
use crate::error::{Error, Result};
use crate::harness::config::{DScale, ExperimentConfig, ExperimentKind};
use crate::harness::exec::trial_seed;
use crate::model::{synthesize, uniform_grid, DiscreteMeasure, NoiseDraw, NoiseField};
use crate::oracle::{empirical_two_point_limit, worst_case_noise_with_fit, NOISE_CLIP};

/// One Monte Carlo trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub kind: ExperimentKind,
    /// `sigma / m_min`.
    pub ratio: f64,
    pub sigma: f64,
    pub d_min: f64,
    /// Diffraction limit at `ratio`; `None` past `1/2`.
    pub limit: Option<f64>,
    /// Largest amplitude modulus; the smallest is 1.
    pub a_max: f64,
    pub true_n: usize,
    pub detected_n: usize,
    /// Singular values of the deciding Hankel matrix.
    pub sigma1: f64,
    pub sigma2: f64,
    pub threshold: f64,
    pub success: bool,
    /// Adversarial campaigns: whether a one-source explanation exists.
    pub admissible: Option<bool>,
    /// Multi-direction campaigns: the deciding direction.
    pub direction: Option<usize>,
}

/// A random scene: separation, noise ratio and a unit-minimum pair.
#[derive(Debug, Clone)]
struct Scene {
    ratio: f64,
    limit: Option<f64>,
    d: f64,
    center: f64,
    amplitudes: [Complex64; 2],
}

fn uniform_open_closed<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    // 1 - U[0,1) lies in (0, 1]
    lo + (hi - lo) * (1.0 - rng.random::<f64>())
}

fn limit_of(cutoff: f64, ratio: f64) -> Result<Option<f64>> {
    Ok(match diffraction_limit(cutoff, ratio)? {
        Limit::Length(l) => Some(l),
        Limit::NoSuperResolution => None,
    })
}

fn draw_scene<R: Rng>(config: &ExperimentConfig, rng: &mut R) -> Result<Scene> {
    let ratio = uniform_open_closed(rng, config.ratio_range);
    let limit = limit_of(config.cutoff, ratio)?;
    let cap = config.d_cap();
    let d = match (config.d_scale, limit) {
        (DScale::Limit, Some(l)) if l > 0.0 => {
            (uniform_open_closed(rng, config.d_range) * l).min(cap)
        }
        (DScale::Limit, _) => uniform_open_closed(rng, (0.0, cap)),
        (DScale::Absolute, _) => {
            let (lo, hi) = config.d_range;
            if lo >= cap {
                return Err(Error::Config(format!(
                    "d range starts at {lo}, beyond the cap {cap}"
                )));
            }
            uniform_open_closed(rng, (lo, hi.min(cap)))
        }
    };
    let half = FRAC_PI_2 / config.cutoff;
    let center = rng.random_range(-half..=half);
    let amplitudes = if config.equal_amplitudes {
        [Complex64::new(1.0, 0.0); 2]
    } else {
        // |a| log-uniform on [1, 3], rescaled so the smaller modulus is 1
        let mut m = [0.0f64; 2];
        for v in &mut m {
            *v = (rng.random::<f64>() * 3f64.ln()).exp();
        }
        let lo = m[0].min(m[1]);
        let mut a = [Complex64::new(0.0, 0.0); 2];
        for (aj, mj) in a.iter_mut().zip(m) {
            *aj = Complex64::from_polar(mj / lo, rng.random::<f64>() * TAU);
        }
        a
    };
    Ok(Scene {
        ratio,
        limit,
        d,
        center,
        amplitudes,
    })
}

impl Scene {
    fn measure_1d(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::from_1d(
            &[self.center - self.d / 2.0, self.center + self.d / 2.0],
            &self.amplitudes,
        )
    }

    fn a_max(&self) -> f64 {
        self.amplitudes[0].norm().max(self.amplitudes[1].norm())
    }

    fn record(
        &self,
        trial: usize,
        kind: ExperimentKind,
        detection: &crate::detect::DetectionResult,
    ) -> TrialRecord {
        let (sigma1, sigma2) = detection
            .direction
            .and_then(|q| detection.singular_values.get(q).copied())
            .unwrap_or((0.0, 0.0));
        TrialRecord {
            trial,
            kind,
            ratio: self.ratio,
            sigma: self.ratio,
            d_min: self.d,
            limit: self.limit,
            a_max: self.a_max(),
            true_n: 2,
            detected_n: detection.detected_n,
            sigma1,
            sigma2,
            threshold: detection.threshold,
            success: detection.detected_n == 2,
            admissible: None,
            direction: None,
        }
    }
}

fn trial_rng(config: &ExperimentConfig, id: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(config.seed, id))
}

fn random_1d_trial(config: &ExperimentConfig, grid: &[f64], id: usize) -> Result<TrialRecord> {
    let mut rng = trial_rng(config, id);
    let scene = draw_scene(config, &mut rng)?;
    let mu = scene.measure_1d()?;
    let noise = NoiseDraw::sample(grid.len(), scene.ratio, &mut rng);
    let y = synthesize(&mu, grid, config.cutoff, Some(&noise), None)?;
    let det = detect_1d(&y, scene.ratio)?;
    Ok(scene.record(id, config.kind, &det))
}

/// Random scenes with uniformly bounded random noise.
pub fn run_random_1d(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let grid = uniform_grid(config.cutoff, config.grid_points)?;
    config
        .execution
        .try_map(config.trials, |id| random_1d_trial(config, &grid, id))
}

fn worst_trial(config: &ExperimentConfig, grid: &[f64], id: usize) -> Result<TrialRecord> {
    let mut rng = trial_rng(config, id);
    let scene = draw_scene(config, &mut rng)?;
    let mu = scene.measure_1d()?;
    let sigma = scene.ratio;
    let (noise, fit) = worst_case_noise_with_fit(&mu, sigma, grid)?;
    let y = synthesize(&mu, grid, config.cutoff, Some(&noise), None)?;
    let det = detect_1d(&y, sigma)?;
    let mut r = scene.record(id, config.kind, &det);
    // admissible only when the clipped noise really realises the one-source
    // explanation, i.e. when no clipping happened
    r.admissible = Some(fit.residual < 2.0 * sigma * (1.0 - NOISE_CLIP));
    Ok(r)
}

/// Random scenes under the adversarial noise of the one-source oracle.
/// Also serves the `impossible-regime` kind, which differs only in its
/// default ranges.
pub fn run_worst_case_1d(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let grid = uniform_grid(config.cutoff, config.grid_points)?;
    config
        .execution
        .try_map(config.trials, |id| worst_trial(config, &grid, id))
}

fn random_2d_trial(
    config: &ExperimentConfig,
    directions: &[Vec<f64>],
    id: usize,
) -> Result<TrialRecord> {
    let mut rng = trial_rng(config, id);
    let scene = draw_scene(config, &mut rng)?;
    let half = FRAC_PI_2 / config.cutoff;
    let center = [scene.center, rng.random_range(-half..=half)];
    let angle = rng.random::<f64>() * PI;
    let (s, c) = angle.sin_cos();
    let h = scene.d / 2.0;
    let mu = DiscreteMeasure::new(
        2,
        vec![
            center[0] - h * c,
            center[1] - h * s,
            center[0] + h * c,
            center[1] + h * s,
        ],
        scene.amplitudes.to_vec(),
    )?;
    let field = NoiseField::new(rng.random(), scene.ratio);
    let det = detect_multid(
        |w| mu.fourier(w) + field.at(w),
        config.cutoff,
        scene.ratio,
        directions,
    )?;
    let mut r = scene.record(id, config.kind, &det);
    r.direction = det.direction;
    Ok(r)
}

/// Random planar scenes (uniform separation direction), multi-direction
/// detection with the configured number of directions.
pub fn run_random_2d(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let directions = default_directions(config.directions);
    config
        .execution
        .try_map(config.trials, |id| random_2d_trial(config, &directions, id))
}

/// Separations for which the thresholding guarantee holds at `limit`: the
/// noiseless floor is `4 m_min min(sin^2, cos^2)(dΩ/4)`, which falls again
/// past `dΩ = π`.
fn guarantee_window(cutoff: f64, limit: f64) -> (f64, f64) {
    (limit, 2.0 * PI / cutoff - limit)
}

/// Trials contradicting the thresholding theorems: a guaranteed-region
/// failure, a success although a one-source explanation exists, or (for
/// adversarial campaigns) a success with `sigma/m > 1/2`.
pub fn guarantee_violations(config: &ExperimentConfig, records: &[TrialRecord]) -> Vec<usize> {
    let slack = match config.kind {
        ExperimentKind::Random2d => 1.0 / (PI / (2.0 * config.directions as f64)).cos(),
        _ => 1.0,
    };
    let adversarial = matches!(
        config.kind,
        ExperimentKind::Worst1d | ExperimentKind::ImpossibleRegime
    );
    records
        .iter()
        .filter(|r| {
            let guaranteed = r.limit.is_some_and(|l| {
                let (lo, hi) = guarantee_window(config.cutoff, l);
                r.d_min >= lo * slack && r.d_min <= hi
            });
            (guaranteed && !r.success)
                || (r.admissible == Some(true) && r.success)
                || (adversarial && r.ratio > 0.5 && r.success)
        })
        .map(|r| r.trial)
        .collect()
}

/// One candidate of the MUSIC comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MusicCase {
    pub trial: usize,
    pub ratio: f64,
    pub d_min: f64,
    pub limit: Option<f64>,
    pub detected_n: usize,
    pub sigma2: f64,
    /// Only computed when thresholding detects two sources.
    pub peaks: Option<usize>,
}

impl MusicCase {
    /// Thresholding finds two sources while MUSIC shows a single peak.
    pub fn is_contrast(&self) -> bool {
        self.detected_n == 2 && self.peaks == Some(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MusicReport {
    pub cases: Vec<MusicCase>,
    /// Noiseless pair at the Rayleigh separation.
    pub control: MusicCase,
    pub scan: Vec<f64>,
    /// `(trial, spectrum)` for the first few contrast cases, then the control
    /// (trial id `usize::MAX`).
    pub spectra: Vec<(usize, Vec<f64>)>,
}

impl MusicReport {
    pub fn contrast_count(&self) -> usize {
        self.cases.iter().filter(|c| c.is_contrast()).count()
    }
}

#[allow(clippy::too_many_arguments)]
fn music_case(
    trial: usize,
    mu: &DiscreteMeasure,
    ratio: f64,
    limit: Option<f64>,
    noise: Option<&NoiseDraw>,
    grid: &[f64],
    cutoff: f64,
    scan: &[f64],
) -> Result<(MusicCase, Option<Vec<f64>>)> {
    let y = synthesize(mu, grid, cutoff, noise, None)?;
    let det = detect_1d(&y, ratio)?;
    let spectrum = if det.detected_n == 2 {
        Some(music_spectrum(&y, 2, scan)?)
    } else {
        None
    };
    let case = MusicCase {
        trial,
        ratio,
        d_min: mu.d_min().unwrap_or(0.0),
        limit,
        detected_n: det.detected_n,
        sigma2: det.max_sigma2(),
        peaks: spectrum.as_deref().map(|s| peak_count(s, MUSIC_PROMINENCE)),
    };
    Ok((case, spectrum))
}

/// Sub-limit scenes under random noise, thresholding against MUSIC.
pub fn run_music_compare(config: &ExperimentConfig) -> Result<MusicReport> {
    config.validate()?;
    let grid = uniform_grid(config.cutoff, config.grid_points)?;
    let scan = music_scan(config.cutoff, MUSIC_SCAN_POINTS);
    let results = config.execution.try_map(config.trials, |id| {
        let mut rng = trial_rng(config, id);
        let scene = draw_scene(config, &mut rng)?;
        let mu = scene.measure_1d()?;
        let noise = NoiseDraw::sample(grid.len(), scene.ratio, &mut rng);
        music_case(
            id,
            &mu,
            scene.ratio,
            scene.limit,
            Some(&noise),
            &grid,
            config.cutoff,
            &scan,
        )
    })?;
    let mut cases = Vec::with_capacity(results.len());
    let mut spectra = Vec::new();
    for (case, spectrum) in results {
        if case.is_contrast() && spectra.len() < config.spectra {
            spectra.push((case.trial, spectrum.unwrap_or_default()));
        }
        cases.push(case);
    }
    let rayleigh = PI / config.cutoff;
    let pair = DiscreteMeasure::symmetric_pair(0.0, rayleigh, 1.0)?;
    let (control, spectrum) = music_case(
        usize::MAX,
        &pair,
        0.0,
        Some(0.0),
        None,
        &grid,
        config.cutoff,
        &scan,
    )?;
    spectra.push((usize::MAX, spectrum.unwrap_or_default()));
    Ok(MusicReport {
        cases,
        control,
        scan,
        spectra,
    })
}

/// One row of the limit sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub ratio: f64,
    pub formula: f64,
    pub empirical: f64,
    pub relative_gap: f64,
}

/// `points` ratios log-spaced over the configured range.
pub fn sweep_ratios(config: &ExperimentConfig) -> Vec<f64> {
    let (lo, hi) = config.ratio_range;
    let n = config.points;
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo * (hi / lo).powf(i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

/// Empirical (oracle bisection) against closed-form two-point limits.
pub fn run_limit_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let ratios = sweep_ratios(config);
    let tol = config.tolerance / config.cutoff;
    config.execution.try_map(ratios.len(), |i| {
        let ratio = ratios[i];
        let formula = limit_of(config.cutoff, ratio)?
            .ok_or_else(|| Error::Domain(format!("ratio {ratio} has no finite limit")))?;
        let empirical = empirical_two_point_limit(1.0, config.cutoff, ratio, tol)?;
        Ok(SweepRow {
            ratio,
            formula,
            empirical,
            relative_gap: (empirical - formula).abs() / formula,
        })
    })
}
