//! Source-number detection by thresholding the second singular value of
//! the 2x2 Hankel matrix built from `Y(-Ω)`, `Y(0)`, `Y(Ω)`, plus a
//! MUSIC pseudospectrum used as a classical baseline.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{norm, Measurement};

pub const MUSIC_GRID_POINTS: usize = 101;
pub const MUSIC_SCAN_POINTS: usize = 2048;
pub const MUSIC_PROMINENCE: f64 = 0.2;
pub const DEFAULT_DIRECTIONS: usize = 10;

/// `[[Y(-Ω), Y(0)], [Y(0), Y(Ω)]]` with its singular values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hankel2 {
    pub y_minus: Complex64,
    pub y_zero: Complex64,
    pub y_plus: Complex64,
    sigma1: f64,
    sigma2: f64,
}

impl Hankel2 {
    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        [[self.y_minus, self.y_zero], [self.y_zero, self.y_plus]]
    }

    pub fn singular_values(&self) -> (f64, f64) {
        (self.sigma1, self.sigma2)
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

/// Singular values of a complex 2x2 matrix from the eigenvalues of `M^H M`:
/// `s1^2 + s2^2 = ||M||_F^2` and `s1 s2 = |det M|`.
pub fn singular_values_2x2(m: [[Complex64; 2]; 2]) -> (f64, f64) {
    let t = m.iter().flatten().map(Complex64::norm_sqr).sum::<f64>();
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
    let disc = (t * t - 4.0 * det * det).max(0.0).sqrt();
    let s1 = (0.5 * (t + disc)).sqrt();
    // the small root via the product avoids cancellation in t - disc
    let s2 = if s1 > 0.0 { (det / s1).min(s1) } else { 0.0 };
    (s1, s2)
}

pub fn hankel_from_samples(y_minus: Complex64, y_zero: Complex64, y_plus: Complex64) -> Hankel2 {
    let (sigma1, sigma2) = singular_values_2x2([[y_minus, y_zero], [y_zero, y_plus]]);
    Hankel2 {
        y_minus,
        y_zero,
        y_plus,
        sigma1,
        sigma2,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub detected_n: usize,
    /// `(s1, s2)` per evaluated direction (one entry in 1-D).
    pub singular_values: Vec<(f64, f64)>,
    pub threshold: f64,
    /// Direction that decided the outcome: the first passing one, or else
    /// the one with the largest `s2` (smallest index among ties).
    pub direction: Option<usize>,
}

impl DetectionResult {
    pub fn max_sigma2(&self) -> f64 {
        self.singular_values.iter().map(|s| s.1).fold(0.0, f64::max)
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!(
            "noise level {sigma} must be nonnegative"
        )));
    }
    Ok(())
}

/// Decide between one and two sources: two iff `s2 >= 2 sigma`.
pub fn detect_1d(measurement: &Measurement, sigma: f64) -> Result<DetectionResult> {
    check_sigma(sigma)?;
    if measurement.dim() != 1 {
        return Err(Error::Domain(
            "detect_1d needs a one-dimensional measurement".into(),
        ));
    }
    let cutoff = measurement.cutoff();
    let sample = |w: f64| {
        measurement
            .value_at(&[w])
            .ok_or_else(|| Error::MissingSample(format!("{w}")))
    };
    let h = hankel_from_samples(sample(-cutoff)?, sample(0.0)?, sample(cutoff)?);
    let threshold = 2.0 * sigma;
    Ok(DetectionResult {
        detected_n: if h.sigma2() >= threshold { 2 } else { 1 },
        singular_values: vec![h.singular_values()],
        threshold,
        direction: Some(0),
    })
}

/// `(cos(q pi/N), sin(q pi/N))` for `q = 1..=N`.
pub fn default_directions(count: usize) -> Vec<Vec<f64>> {
    (1..=count)
        .map(|q| {
            let t = q as f64 * PI / count as f64;
            vec![t.cos(), t.sin()]
        })
        .collect()
}

/// Multi-direction detection: for each unit direction `v`, threshold the
/// Hankel matrix of `Y(-Ωv)`, `Y(0)`, `Y(Ωv)`; stop at the first pass.
pub fn detect_multid<F>(
    provider: F,
    cutoff: f64,
    sigma: f64,
    directions: &[Vec<f64>],
) -> Result<DetectionResult>
where
    F: Fn(&[f64]) -> Complex64,
{
    check_sigma(sigma)?;
    if directions.is_empty() {
        return Err(Error::Domain("no directions given".into()));
    }
    let dim = directions[0].len();
    for (index, v) in directions.iter().enumerate() {
        let n = norm(v);
        if v.len() != dim || (n - 1.0).abs() > 1e-12 {
            return Err(Error::NonUnitDirection { index, norm: n });
        }
    }
    let threshold = 2.0 * sigma;
    let y0 = provider(&vec![0.0; dim]);
    let mut singular_values = Vec::with_capacity(directions.len());
    let mut best = 0;
    for (q, v) in directions.iter().enumerate() {
        let plus: Vec<f64> = v.iter().map(|c| cutoff * c).collect();
        let minus: Vec<f64> = plus.iter().map(|c| -c).collect();
        let h = hankel_from_samples(provider(&minus), y0, provider(&plus));
        singular_values.push(h.singular_values());
        if h.sigma2() >= threshold {
            return Ok(DetectionResult {
                detected_n: 2,
                singular_values,
                threshold,
                direction: Some(q),
            });
        }
        if h.sigma2() > singular_values[best].1 {
            best = q;
        }
    }
    Ok(DetectionResult {
        detected_n: 1,
        singular_values,
        threshold,
        direction: Some(best),
    })
}

/// `points` equispaced candidate locations on `[-pi/cutoff, pi/cutoff]`.
pub fn music_scan(cutoff: f64, points: usize) -> Vec<f64> {
    let h = PI / cutoff;
    if points < 2 {
        return vec![0.0; points];
    }
    (0..points)
        .map(|i| -h + 2.0 * h * i as f64 / (points - 1) as f64)
        .collect()
}

/// MUSIC pseudospectrum `1/||P_noise phi(y)||` at each candidate `y`, from
/// the `ceil(M/2) x (M - ceil(M/2) + 1)` Hankel matrix of the samples.
/// Masks are ignored; the grid must be uniform.
pub fn music_spectrum(
    measurement: &Measurement,
    assumed_n: usize,
    candidates: &[f64],
) -> Result<Vec<f64>> {
    if measurement.dim() != 1 {
        return Err(Error::Domain(
            "MUSIC needs a one-dimensional measurement".into(),
        ));
    }
    let m = measurement.len();
    if assumed_n == 0 || m < 2 * assumed_n + 1 {
        return Err(Error::GridTooSmall(format!(
            "{m} samples for {assumed_n} sources"
        )));
    }
    let grid = measurement.grid();
    let step = grid[1] - grid[0];
    if grid
        .windows(2)
        .any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs())
    {
        return Err(Error::InvalidMeasurement(
            "MUSIC needs a uniform grid".into(),
        ));
    }
    let rows = m.div_ceil(2);
    let cols = m - rows + 1;
    let values = measurement.values();
    let h = DMatrix::from_fn(rows, cols, |r, c| values[r + c]);
    let svd = h.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let signal: Vec<usize> = order[..assumed_n].to_vec();

    let scale = 1.0 / (rows as f64).sqrt();
    let mut phi = vec![Complex64::new(0.0, 0.0); rows];
    Ok(candidates
        .iter()
        .map(|&y| {
            let rot = Complex64::cis(y * step);
            let mut cur = Complex64::new(scale, 0.0);
            for p in phi.iter_mut() {
                *p = cur;
                cur *= rot;
            }
            let captured: f64 = signal
                .iter()
                .map(|&k| {
                    u.column(k)
                        .iter()
                        .zip(&phi)
                        .map(|(a, b)| a.conj() * b)
                        .sum::<Complex64>()
                        .norm_sqr()
                })
                .sum();
            let residual = (1.0 - captured).max(1e-300);
            1.0 / residual.sqrt()
        })
        .collect())
}

/// Number of strict interior local maxima higher than `fraction` times the
/// global maximum.
pub fn peak_count(spectrum: &[f64], fraction: f64) -> usize {
    let max = spectrum.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    spectrum
        .windows(3)
        .filter(|w| w[1] > w[0] && w[1] > w[2] && w[1] > fraction * max)
        .count()
}
