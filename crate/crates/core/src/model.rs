//! Point-source measures and their band-limited Fourier measurements.
//!
//! A measure is `sum_j a_j delta_{y_j}` with `y_j` in R^k; its Fourier data is
//! `F[mu](w) = sum_j a_j exp(i y_j . w)`. A [`Measurement`] samples that data
//! (plus bounded noise, optionally masked) on a finite frequency grid that
//! always contains the origin and, in one dimension, both band edges.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Default number of points of the one-dimensional frequency grid. Odd, so
/// that `0` and `±cutoff` are grid points.
pub const DEFAULT_GRID_POINTS: usize = 513;

const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<f64>,
    amplitudes: Vec<Complex64>,
}

impl DiscreteMeasure {
    /// `points` is row-major: point `j` occupies `points[j*dim..(j+1)*dim]`.
    pub fn new(dim: usize, points: Vec<f64>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be positive".into()));
        }
        if points.len() != dim * amplitudes.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} coordinates for {} amplitudes in dimension {dim}",
                points.len(),
                amplitudes.len()
            )));
        }
        if points.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite coordinate".into()));
        }
        for (j, a) in amplitudes.iter().enumerate() {
            if !(a.norm() > 0.0) || !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "amplitude {j} is zero or non-finite"
                )));
            }
        }
        let measure = Self {
            dim,
            points,
            amplitudes,
        };
        for p in 0..measure.len() {
            for q in 0..p {
                if measure.point(p) == measure.point(q) {
                    return Err(Error::InvalidMeasure(format!(
                        "points {q} and {p} coincide"
                    )));
                }
            }
        }
        Ok(measure)
    }

    pub fn from_1d(locations: &[f64], amplitudes: &[Complex64]) -> Result<Self> {
        Self::new(1, locations.to_vec(), amplitudes.to_vec())
    }

    /// Two equal real amplitudes `m` at `center ± separation/2`.
    pub fn symmetric_pair(center: f64, separation: f64, m: f64) -> Result<Self> {
        let a = Complex64::new(m, 0.0);
        Self::from_1d(
            &[center - separation / 2.0, center + separation / 2.0],
            &[a, a],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Smallest amplitude modulus.
    pub fn m_min(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest pairwise Euclidean distance, `None` for fewer than two points.
    pub fn d_min(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for p in 0..self.len() {
            for q in 0..p {
                let d = distance(self.point(p), self.point(q));
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    pub fn fourier(&self, omega: &[f64]) -> Complex64 {
        debug_assert_eq!(omega.len(), self.dim);
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| a * Complex64::cis(dot(self.point(j), omega)))
            .sum()
    }

    /// Translate every point by `offset`.
    pub fn shifted(&self, offset: &[f64]) -> Self {
        assert_eq!(offset.len(), self.dim);
        let points = self
            .points
            .chunks(self.dim)
            .flat_map(|p| p.iter().zip(offset).map(|(a, b)| a + b))
            .collect();
        Self {
            dim: self.dim,
            points,
            amplitudes: self.amplitudes.clone(),
        }
    }

    /// Sum of two measures of equal dimension (points are concatenated, so the
    /// supports must be disjoint).
    pub fn combined(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::InvalidMeasure("dimension mismatch".into()));
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let mut amplitudes = self.amplitudes.clone();
        amplitudes.extend_from_slice(&other.amplitudes);
        Self::new(self.dim, points, amplitudes)
    }
}

pub fn fourier_transform(measure: &DiscreteMeasure, omega: &[f64]) -> Complex64 {
    measure.fourier(omega)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Per-grid-point complex perturbation with `|w| < sigma` everywhere
/// (or identically zero when `sigma == 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    sigma: f64,
    values: Vec<Complex64>,
}

impl NoiseDraw {
    pub fn new(values: Vec<Complex64>, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::Domain(format!(
                "noise level {sigma} must be nonnegative"
            )));
        }
        for (index, w) in values.iter().enumerate() {
            let modulus = w.norm();
            let ok = if sigma == 0.0 {
                modulus == 0.0
            } else {
                modulus < sigma
            };
            if !ok {
                return Err(Error::NoiseBound {
                    index,
                    modulus,
                    sigma,
                });
            }
        }
        Ok(Self { sigma, values })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            sigma: 0.0,
            values: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Independent draws with modulus `sigma * u`, `u ~ U[0, 1)`, and uniform phase.
    pub fn sample<R: Rng + ?Sized>(len: usize, sigma: f64, rng: &mut R) -> Self {
        let values = (0..len).map(|_| bounded_sample(sigma, rng)).collect();
        Self { sigma, values }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn bounded_sample<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> Complex64 {
    if sigma == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    loop {
        let u: f64 = rng.random();
        let phase: f64 = rng.random::<f64>() * TAU;
        let w = Complex64::from_polar(sigma * u, phase);
        // from_polar can round the modulus up onto sigma
        if w.norm() < sigma {
            return w;
        }
    }
}

/// Seeded noise draw for a grid of `len` points.
pub fn draw_noise(len: usize, sigma: f64, seed: u64) -> Result<NoiseDraw> {
    if !(sigma >= 0.0) {
        return Err(Error::Domain(format!(
            "noise level {sigma} must be nonnegative"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(NoiseDraw::sample(len, sigma, &mut rng))
}

/// A noise function defined at every frequency: the value at `w` is a
/// deterministic hash of `(seed, bits of w)`, with the same law as
/// [`NoiseDraw::sample`]. Used where samples are requested lazily, e.g. by
/// the multi-direction detector.
#[derive(Debug, Clone, Copy)]
pub struct NoiseField {
    seed: u64,
    sigma: f64,
}

impl NoiseField {
    pub fn new(seed: u64, sigma: f64) -> Self {
        Self { seed, sigma }
    }

    pub fn at(&self, omega: &[f64]) -> Complex64 {
        let mut h = splitmix(self.seed);
        for c in omega {
            // +0.0 and -0.0 are the same frequency
            let bits = if *c == 0.0 { 0 } else { c.to_bits() };
            h = splitmix(h ^ bits);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        bounded_sample(self.sigma, &mut rng)
    }
}

pub(crate) fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `points` equispaced frequencies on `[-cutoff, cutoff]`; `points` must be
/// odd and at least 3. The end points and the origin are exact.
pub fn uniform_grid(cutoff: f64, points: usize) -> Result<Vec<f64>> {
    if points < 3 || points.is_multiple_of(2) {
        return Err(Error::GridTooSmall(format!(
            "uniform grid needs an odd point count >= 3, got {points}"
        )));
    }
    let half = (points - 1) as f64;
    Ok((0..points)
        .map(|i| cutoff * (2.0 * i as f64 - half) / half)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    dim: usize,
    grid: Vec<f64>,
    values: Vec<Complex64>,
    cutoff: f64,
    noise_level: f64,
    mask: Option<Vec<bool>>,
}

impl Measurement {
    pub fn new(
        dim: usize,
        grid: Vec<f64>,
        values: Vec<Complex64>,
        cutoff: f64,
        noise_level: f64,
        mask: Option<Vec<bool>>,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidMeasurement(m));
        if dim == 0 {
            return bad("dimension must be positive".into());
        }
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return bad(format!("cutoff {cutoff} must be positive"));
        }
        if !(noise_level >= 0.0) {
            return bad(format!("noise level {noise_level} must be nonnegative"));
        }
        if !grid.len().is_multiple_of(dim) || grid.len() / dim != values.len() {
            return bad(format!(
                "{} grid coordinates do not match {} values in dimension {dim}",
                grid.len(),
                values.len()
            ));
        }
        if let Some(m) = &mask {
            if m.len() != values.len() {
                return bad("mask length differs from grid length".into());
            }
        }
        let measurement = Self {
            dim,
            grid,
            values,
            cutoff,
            noise_level,
            mask,
        };
        for i in 0..measurement.len() {
            let r = norm(measurement.frequency(i));
            if !r.is_finite() || r > cutoff * (1.0 + BOUNDARY_TOL) {
                return bad(format!("grid point {i} lies outside the band (|w| = {r})"));
            }
        }
        if measurement.position(&vec![0.0; dim]).is_none() {
            return bad("grid does not contain the origin".into());
        }
        if dim == 1 {
            if measurement.position(&[-cutoff]).is_none()
                || measurement.position(&[cutoff]).is_none()
            {
                return bad("grid does not contain both band edges".into());
            }
            if measurement.grid.windows(2).any(|w| w[0] >= w[1]) {
                return bad("one-dimensional grid must be strictly increasing".into());
            }
        }
        if let Some(mask) = &measurement.mask {
            for (i, &keep) in mask.iter().enumerate() {
                let r = norm(measurement.frequency(i));
                let pinned = r == 0.0 || (r - cutoff).abs() <= cutoff * BOUNDARY_TOL;
                if pinned && !keep {
                    return bad(format!(
                        "mask must be set at the origin and on the boundary (point {i})"
                    ));
                }
            }
        }
        Ok(measurement)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn noise_level(&self) -> f64 {
        self.noise_level
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn frequency(&self, i: usize) -> &[f64] {
        &self.grid[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_observed(&self, i: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[i])
    }

    /// Index of the grid point exactly equal to `omega`.
    pub fn position(&self, omega: &[f64]) -> Option<usize> {
        (0..self.len()).find(|&i| self.frequency(i) == omega)
    }

    pub fn value_at(&self, omega: &[f64]) -> Option<Complex64> {
        self.position(omega).map(|i| self.values[i])
    }

    /// Same measurement with a different nominal noise level.
    pub fn with_noise_level(mut self, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::Domain(format!(
                "noise level {sigma} must be nonnegative"
            )));
        }
        self.noise_level = sigma;
        Ok(self)
    }
}

/// Sample `chi(w) * (F[mu](w) + W(w))` on `grid` (row-major, dimension taken
/// from the measure).
pub fn synthesize(
    measure: &DiscreteMeasure,
    grid: &[f64],
    cutoff: f64,
    noise: Option<&NoiseDraw>,
    mask: Option<&[bool]>,
) -> Result<Measurement> {
    let dim = measure.dim();
    if !grid.len().is_multiple_of(dim) {
        return Err(Error::InvalidMeasurement(
            "grid length is not a multiple of the dimension".into(),
        ));
    }
    let count = grid.len() / dim;
    if let Some(w) = noise {
        if w.len() != count {
            return Err(Error::InvalidMeasurement(format!(
                "noise draw has {} samples for {count} grid points",
                w.len()
            )));
        }
        // re-validate, the draw may have been built by hand
        NoiseDraw::new(w.values().to_vec(), w.sigma())?;
    }
    let values = grid
        .chunks(dim)
        .enumerate()
        .map(|(i, omega)| {
            let clean = measure.fourier(omega);
            let noisy = clean + noise.map_or(Complex64::new(0.0, 0.0), |w| w.values()[i]);
            if mask.is_some_and(|m| !m[i]) {
                Complex64::new(0.0, 0.0)
            } else {
                noisy
            }
        })
        .collect();
    Measurement::new(
        dim,
        grid.to_vec(),
        values,
        cutoff,
        noise.map_or(0.0, NoiseDraw::sigma),
        mask.map(<[bool]>::to_vec),
    )
}
