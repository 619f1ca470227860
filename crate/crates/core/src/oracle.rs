//! Brute-force minimax one-source fitting.
//!
//! Given target samples `T(w_i)`, find `c = a e^{i gamma}` and `y_hat`
//! minimising `max_i |c e^{i y_hat w_i} - T(w_i)|`. For fixed `y_hat` this
//! is `max_i |c - T(w_i) e^{-i y_hat w_i}|`, i.e. the smallest disk that
//! encloses the de-rotated samples, which is solved exactly. Only the
//! one-dimensional search over `y_hat` is numerical: a coarse scan over
//! `[-2pi/Ω, 2pi/Ω]` followed by golden-section refinement of the best
//! local minima.
//!
//! A two-source measure admits a one-source explanation of some noisy
//! measurement at level `sigma` iff this minimax residual is below `2 sigma`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::bounds::{diffraction_limit, Limit};
use crate::error::{Error, Result};
use crate::model::{
    splitmix, uniform_grid, DiscreteMeasure, Measurement, NoiseDraw, DEFAULT_GRID_POINTS,
};

/// Relative margin in the strict test `residual < 2 sigma`; absorbs
/// round-off where the residual meets `2 sigma` exactly.
pub const ADMISSIBILITY_MARGIN: f64 = 1e-9;
/// Worst-case noise is clipped to `(1 - NOISE_CLIP) sigma`.
pub const NOISE_CLIP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    /// Coarse scan points over the location range.
    pub coarse_points: usize,
    /// How many of the best coarse local minima get refined.
    pub refine: usize,
    /// Golden-section stopping width, relative to `1/Ω`.
    pub location_tol: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            coarse_points: 121,
            refine: 3,
            location_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSourceFit {
    pub amplitude: f64,
    /// In `[0, 2pi)`.
    pub phase: f64,
    pub location: f64,
    /// `max_i |a e^{i(gamma + y_hat w_i)} - T(w_i)|` over the fitted samples.
    pub residual: f64,
}

impl OneSourceFit {
    pub fn coefficient(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }

    pub fn value(&self, omega: f64) -> Complex64 {
        self.coefficient() * Complex64::cis(self.location * omega)
    }

    /// The fitted measure; `None` when the amplitude is zero.
    pub fn measure(&self) -> Option<DiscreteMeasure> {
        DiscreteMeasure::from_1d(&[self.location], &[self.coefficient()]).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

impl Disk {
    fn contains(&self, p: Complex64) -> bool {
        (p - self.center).norm() <= self.radius * (1.0 + 1e-12) + 1e-300
    }

    fn diameter(a: Complex64, b: Complex64) -> Self {
        Self {
            center: 0.5 * (a + b),
            radius: 0.5 * (a - b).norm(),
        }
    }

    fn through(a: Complex64, b: Complex64, c: Complex64) -> Self {
        let (bx, by) = ((b - a).re, (b - a).im);
        let (cx, cy) = ((c - a).re, (c - a).im);
        let d = 2.0 * (bx * cy - by * cx);
        let scale = (bx * bx + by * by).max(cx * cx + cy * cy);
        if d.abs() <= 1e-14 * scale {
            // collinear: the widest pair spans the other point
            let pairs = [
                Self::diameter(a, b),
                Self::diameter(a, c),
                Self::diameter(b, c),
            ];
            return pairs
                .into_iter()
                .max_by(|p, q| p.radius.total_cmp(&q.radius))
                .expect("three candidates");
        }
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (cy * b2 - by * c2) / d;
        let uy = (bx * c2 - cx * b2) / d;
        let center = a + Complex64::new(ux, uy);
        let radius = [
            (a - center).norm(),
            (b - center).norm(),
            (c - center).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        Self { center, radius }
    }
}

fn welzl(points: &[Complex64]) -> Disk {
    let mut disk = Disk {
        center: points[0],
        radius: 0.0,
    };
    for i in 1..points.len() {
        if disk.contains(points[i]) {
            continue;
        }
        disk = Disk {
            center: points[i],
            radius: 0.0,
        };
        for j in 0..i {
            if disk.contains(points[j]) {
                continue;
            }
            disk = Disk::diameter(points[i], points[j]);
            for k in 0..j {
                if !disk.contains(points[k]) {
                    disk = Disk::through(points[i], points[j], points[k]);
                }
            }
        }
    }
    disk
}

fn centroid(points: &[Complex64]) -> Complex64 {
    points.iter().sum::<Complex64>() / points.len() as f64
}

/// Smallest disk containing every point. Deterministic: points are visited
/// in a fixed pseudo-random order, which keeps the expected cost linear.
pub fn min_enclosing_circle(points: &[Complex64]) -> Disk {
    assert!(!points.is_empty(), "enclosing circle of no points");
    let mut order: Vec<usize> = (0..points.len()).collect();
    let mut h = 0x5EED_u64;
    for i in (1..order.len()).rev() {
        h = splitmix(h);
        order.swap(i, (h % (i as u64 + 1)) as usize);
    }
    // predicates are relative to the radius, so work around the centroid:
    // a tiny cluster far from the origin would otherwise drown in round-off
    let shift = centroid(points);
    let shuffled: Vec<Complex64> = order.iter().map(|&i| points[i] - shift).collect();
    let mut disk = welzl(&shuffled);
    disk.center += shift;
    disk
}

/// Fitting problem over a fixed set of samples.
struct Problem {
    omegas: Vec<f64>,
    values: Vec<Complex64>,
    /// Subsample whose enclosing disk is tried first.
    seed_idx: Vec<usize>,
    /// Uniform spacing, when the frequencies are equispaced.
    step: Option<f64>,
}

impl Problem {
    fn new(omegas: Vec<f64>, values: Vec<Complex64>) -> Self {
        let n = omegas.len();
        let stride = (n / 48).max(1);
        let mut seed_idx: Vec<usize> = (0..n).step_by(stride).collect();
        if seed_idx.last() != Some(&(n - 1)) {
            seed_idx.push(n - 1);
        }
        let step = if n >= 2 {
            let s = omegas[1] - omegas[0];
            let uniform = omegas
                .windows(2)
                .all(|w| ((w[1] - w[0]) - s).abs() <= 1e-12 * s.abs().max(1e-300));
            uniform.then_some(s)
        } else {
            None
        };
        Self {
            omegas,
            values,
            seed_idx,
            step,
        }
    }

    /// Every `stride`-th sample plus the last one; `None` when that would
    /// not shrink the problem.
    fn thinned(&self, stride: usize) -> Option<Self> {
        let n = self.omegas.len();
        if n < 8 * stride {
            return None;
        }
        let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
        if idx.last() != Some(&(n - 1)) {
            idx.push(n - 1);
        }
        Some(Self::new(
            idx.iter().map(|&i| self.omegas[i]).collect(),
            idx.iter().map(|&i| self.values[i]).collect(),
        ))
    }

    fn derotated(&self, y: f64, out: &mut Vec<Complex64>) {
        out.clear();
        match self.step {
            Some(s) => {
                let rot = Complex64::cis(-y * s);
                let mut cur = Complex64::new(0.0, 0.0);
                for (i, (w, v)) in self.omegas.iter().zip(&self.values).enumerate() {
                    // re-anchor periodically to keep the recurrence exact enough
                    if i % 32 == 0 {
                        cur = Complex64::cis(-y * w);
                    } else {
                        cur *= rot;
                    }
                    out.push(v * cur);
                }
            }
            None => out.extend(
                self.omegas
                    .iter()
                    .zip(&self.values)
                    .map(|(w, v)| v * Complex64::cis(-y * w)),
            ),
        }
    }

    /// Exact minimal sup-residual at location `y`.
    fn disk_at(&self, y: f64, buf: &mut Vec<Complex64>) -> Disk {
        self.derotated(y, buf);
        let shift = centroid(buf);
        for p in buf.iter_mut() {
            *p -= shift;
        }
        let mut active: Vec<Complex64> = self.seed_idx.iter().map(|&i| buf[i]).collect();
        loop {
            let mut disk = min_enclosing_circle(&active);
            // looser than the containment test inside the solver, so points
            // already in `active` are never re-added
            let limit = disk.radius * disk.radius * (1.0 + 4e-12);
            let before = active.len();
            active.extend(buf.iter().filter(|p| (*p - disk.center).norm_sqr() > limit));
            if active.len() == before {
                disk.center += shift;
                return disk;
            }
        }
    }
}

fn golden_min(f: &mut impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn fit_problem(problem: &Problem, cutoff: f64, settings: &OracleSettings) -> OneSourceFit {
    let half = 2.0 * PI / cutoff;
    let count = settings.coarse_points.max(3);
    let locs: Vec<f64> = (0..count)
        .map(|i| -half + 2.0 * half * i as f64 / (count - 1) as f64)
        .collect();
    let mut buf = Vec::with_capacity(problem.omegas.len());
    // the scan only has to find basins, so it runs on a thinned sample set;
    // refinement below uses every sample
    let thin = problem.thinned(4);
    let scan = thin.as_ref().unwrap_or(problem);
    let radii: Vec<f64> = locs
        .iter()
        .map(|&y| scan.disk_at(y, &mut buf).radius)
        .collect();

    let mut minima: Vec<usize> = (0..count)
        .filter(|&i| {
            let left = i == 0 || radii[i] <= radii[i - 1];
            let right = i + 1 == count || radii[i] <= radii[i + 1];
            left && right
        })
        .collect();
    // best first; equal radii keep the smaller location
    minima.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]).then(a.cmp(&b)));
    minima.truncate(settings.refine.max(1));

    let tol = settings.location_tol / cutoff;
    let mut best = (0.0, f64::INFINITY);
    for &i in &minima {
        let lo = locs[i.saturating_sub(1)];
        let hi = locs[(i + 1).min(count - 1)];
        let mut f = |y: f64| problem.disk_at(y, &mut buf).radius;
        let (y, r) = golden_min(&mut f, lo, hi, tol);
        if r < best.1 || (r == best.1 && y < best.0) {
            best = (y, r);
        }
    }
    let disk = problem.disk_at(best.0, &mut buf);
    OneSourceFit {
        amplitude: disk.center.norm(),
        phase: disk.center.arg().rem_euclid(TAU),
        location: best.0,
        residual: disk.radius,
    }
}

/// Best one-source fit to the observed samples of a 1-D measurement.
pub fn best_one_source_fit(target: &Measurement) -> Result<OneSourceFit> {
    best_one_source_fit_with(target, &OracleSettings::default())
}

pub fn best_one_source_fit_with(
    target: &Measurement,
    settings: &OracleSettings,
) -> Result<OneSourceFit> {
    if target.dim() != 1 {
        return Err(Error::Domain("the oracle works along one axis".into()));
    }
    let (omegas, values): (Vec<f64>, Vec<Complex64>) = (0..target.len())
        .filter(|&i| target.is_observed(i))
        .map(|i| (target.grid()[i], target.values()[i]))
        .unzip();
    if omegas.is_empty() {
        return Err(Error::GridTooSmall("no observed samples".into()));
    }
    Ok(fit_problem(
        &Problem::new(omegas, values),
        target.cutoff(),
        settings,
    ))
}

/// Best one-source fit to the noiseless data of `measure` on `grid`.
pub fn fit_measure(measure: &DiscreteMeasure, grid: &[f64], cutoff: f64) -> Result<OneSourceFit> {
    if measure.dim() != 1 {
        return Err(Error::Domain("the oracle works along one axis".into()));
    }
    if grid.is_empty() {
        return Err(Error::GridTooSmall("empty grid".into()));
    }
    let values = grid.iter().map(|&w| measure.fourier(&[w])).collect();
    Ok(fit_problem(
        &Problem::new(grid.to_vec(), values),
        cutoff,
        &OracleSettings::default(),
    ))
}

/// `max_i |a e^{i(gamma + y w_i)} - T(w_i)|`.
pub fn sup_residual(
    grid: &[f64],
    values: &[Complex64],
    amplitude: f64,
    phase: f64,
    location: f64,
) -> f64 {
    grid.iter()
        .zip(values)
        .map(|(&w, t)| (Complex64::from_polar(amplitude, phase + location * w) - t).norm())
        .fold(0.0, f64::max)
}

/// Ternary search over `a in [0, a_max]` for fixed phase and location; the
/// objective is convex in `a`. Returns `(a, residual)`.
pub fn fit_amplitude_ternary(
    grid: &[f64],
    values: &[Complex64],
    phase: f64,
    location: f64,
    a_max: f64,
) -> (f64, f64) {
    let (mut lo, mut hi) = (0.0, a_max);
    let f = |a: f64| sup_residual(grid, values, a, phase, location);
    while hi - lo > 1e-12 * a_max.max(1.0) {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let a = 0.5 * (lo + hi);
    (a, f(a))
}

fn fit_pair(measure: &DiscreteMeasure, grid: &[f64]) -> Result<OneSourceFit> {
    if measure.len() != 2 {
        return Err(Error::InvalidMeasure(format!(
            "expected a two-source measure, got {} sources",
            measure.len()
        )));
    }
    let (lo, hi) = (grid.first().copied(), grid.last().copied());
    let cutoff = match (lo, hi) {
        (Some(l), Some(h)) => l.abs().max(h.abs()),
        _ => return Err(Error::GridTooSmall("empty grid".into())),
    };
    fit_measure(measure, grid, cutoff)
}

/// Whether some one-source measure stays within `2 sigma` of `F[measure]`
/// on `grid`, i.e. whether a noisy measurement at level `sigma` could be
/// explained by a single source.
pub fn one_source_admissible(measure: &DiscreteMeasure, sigma: f64, grid: &[f64]) -> Result<bool> {
    let fit = fit_pair(measure, grid)?;
    Ok(fit.residual < 2.0 * sigma * (1.0 - ADMISSIBILITY_MARGIN))
}

/// Adversarial noise `w = (F[mu_hat*] - F[mu]) / 2`, clipped below `sigma`,
/// where `mu_hat*` is the best one-source fit; returned with that fit.
pub fn worst_case_noise_with_fit(
    measure: &DiscreteMeasure,
    sigma: f64,
    grid: &[f64],
) -> Result<(NoiseDraw, OneSourceFit)> {
    let fit = fit_pair(measure, grid)?;
    if sigma == 0.0 {
        return Ok((NoiseDraw::zeros(grid.len()), fit));
    }
    let cap = (1.0 - NOISE_CLIP) * sigma;
    let values = grid
        .iter()
        .map(|&w| {
            let half = 0.5 * (fit.value(w) - measure.fourier(&[w]));
            let r = half.norm();
            if r > cap {
                half * (cap / r)
            } else {
                half
            }
        })
        .collect();
    Ok((NoiseDraw::new(values, sigma)?, fit))
}

pub fn worst_case_noise(measure: &DiscreteMeasure, sigma: f64, grid: &[f64]) -> Result<NoiseDraw> {
    worst_case_noise_with_fit(measure, sigma, grid).map(|(w, _)| w)
}

/// Separation at which an equal-amplitude pair stops admitting a
/// one-source explanation, located by bisection on the default grid.
/// The closed form only seeds the initial bracket.
pub fn empirical_two_point_limit(m: f64, cutoff: f64, sigma: f64, tolerance: f64) -> Result<f64> {
    empirical_limit_for(m, m, cutoff, sigma, tolerance)
}

/// As [`empirical_two_point_limit`] for a positive pair with amplitudes
/// `a1` and `a2`; the bracket is seeded from the smaller one.
pub fn empirical_limit_for(
    a1: f64,
    a2: f64,
    cutoff: f64,
    sigma: f64,
    tolerance: f64,
) -> Result<f64> {
    if !(a1 > 0.0 && a2 > 0.0) {
        return Err(Error::Domain("amplitudes must be positive".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "noise level {sigma} must be positive"
        )));
    }
    if !(tolerance > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance {tolerance} must be positive"
        )));
    }
    let hint = match diffraction_limit(cutoff, sigma / a1.min(a2))? {
        Limit::Length(d) => d,
        Limit::NoSuperResolution => {
            return Err(Error::Domain("sigma/m exceeds 1/2: no finite limit".into()));
        }
    };
    let grid = uniform_grid(cutoff, DEFAULT_GRID_POINTS)?;
    let admissible = |d: f64| -> Result<bool> {
        let mu = DiscreteMeasure::from_1d(
            &[-d / 2.0, d / 2.0],
            &[Complex64::new(a1, 0.0), Complex64::new(a2, 0.0)],
        )?;
        one_source_admissible(&mu, sigma, &grid)
    };
    let (mut lo, mut hi) = (0.1 * hint, 2.0 * hint);
    if !admissible(lo)? || admissible(hi)? {
        return Err(Error::NonBracketing { lo, hi });
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if admissible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
