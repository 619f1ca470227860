//! Worst-case amplitude error of a two-source fit as the pair closes up.
//!
//! For `mu = delta_{-d/2} + delta_{d/2}` and noise below `sigma`, any
//! admissible `mu_hat` satisfies `sup |F[mu_hat] - F[mu]| < 2 sigma`. To
//! first order in the perturbation the largest reachable `|a_hat_1 - a_1|`
//! is `2 sigma / s`, where `s` is the best uniform approximation of
//! `e^{i y_1 w}` by the remaining perturbation directions:
//!
//! * all locations exact: `e^{i y_2 w}` (complex amplitude change);
//! * target location exact: additionally `i w e^{i y_2 w}` (the other source moves);
//! * free: additionally `i w e^{i y_1 w}` (the target moves too).
//!
//! The approximation problem is solved by Lawson's iteratively reweighted
//! least squares, which brackets the minimax value from both sides.

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::model::{uniform_grid, DiscreteMeasure};

/// Frequency samples of the approximation problem.
pub const SCALING_GRID_POINTS: usize = 257;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingVariant {
    AllExact,
    TargetExact,
    Free,
}

impl ScalingVariant {
    pub const ALL: [ScalingVariant; 3] = [Self::AllExact, Self::TargetExact, Self::Free];

    pub fn name(self) -> &'static str {
        match self {
            Self::AllExact => "all_exact",
            Self::TargetExact => "target_exact",
            Self::Free => "free",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevFit {
    /// Real coefficients of the columns.
    pub x: Vec<f64>,
    /// `max_i |f_i - sum_k x_k g_k(i)|` at `x`.
    pub sup: f64,
    /// Lower bound on the minimax value.
    pub lower: f64,
    pub iterations: usize,
}

/// Minimise `max_i |f_i - sum_k x_k columns[k][i]|` over real `x` by
/// Lawson's algorithm; stops once the bracket `[lower, sup]` is tighter
/// than `rel_tol` or after `max_iter` rounds.
pub fn lawson_chebyshev(
    f: &[Complex64],
    columns: &[Vec<Complex64>],
    max_iter: usize,
    rel_tol: f64,
) -> Result<ChebyshevFit> {
    let m = f.len();
    let p = columns.len();
    if m == 0 || columns.iter().any(|c| c.len() != m) {
        return Err(Error::Domain("columns must match the target length".into()));
    }
    let mut w = vec![1.0 / m as f64; m];
    let mut best = ChebyshevFit {
        x: vec![0.0; p],
        sup: f.iter().map(|v| v.norm()).fold(0.0, f64::max),
        lower: 0.0,
        iterations: 0,
    };
    let mut r = vec![0.0; m];
    for it in 1..=max_iter {
        let mut n = DMatrix::<f64>::zeros(p, p);
        let mut b = DVector::<f64>::zeros(p);
        for i in 0..m {
            for k in 0..p {
                let gk = columns[k][i].conj();
                b[k] += w[i] * (gk * f[i]).re;
                for l in k..p {
                    n[(k, l)] += w[i] * (gk * columns[l][i]).re;
                }
            }
        }
        for k in 0..p {
            for l in 0..k {
                n[(k, l)] = n[(l, k)];
            }
        }
        let x = match n.clone().cholesky() {
            Some(ch) => ch.solve(&b),
            None => n
                .lu()
                .solve(&b)
                .ok_or_else(|| Error::Domain("singular normal equations".into()))?,
        };
        let mut sup: f64 = 0.0;
        let mut weighted = 0.0;
        for i in 0..m {
            let fit: Complex64 = (0..p).map(|k| columns[k][i] * x[k]).sum();
            r[i] = (f[i] - fit).norm();
            sup = sup.max(r[i]);
            weighted += w[i] * r[i] * r[i];
        }
        // weighted least squares under a probability weight never exceeds
        // the minimax value
        best.lower = best.lower.max(weighted.sqrt());
        if sup < best.sup {
            best.sup = sup;
            best.x = x.iter().copied().collect();
        }
        best.iterations = it;
        if best.sup - best.lower <= rel_tol * best.sup {
            break;
        }
        let total: f64 = w.iter().zip(&r).map(|(wi, ri)| wi * ri).sum();
        if !(total > 0.0) {
            break;
        }
        for (wi, ri) in w.iter_mut().zip(&r) {
            *wi *= ri / total;
        }
    }
    Ok(best)
}

/// The pair, the target direction and the perturbation columns.
struct Setup {
    e1: Vec<Complex64>,
    columns: Vec<Vec<Complex64>>,
}

fn setup(d: f64, cutoff: f64, variant: ScalingVariant) -> Result<Setup> {
    let grid = uniform_grid(cutoff, SCALING_GRID_POINTS)?;
    let (y1, y2) = (-d / 2.0, d / 2.0);
    let i = Complex64::i();
    let e1: Vec<Complex64> = grid.iter().map(|&w| Complex64::cis(y1 * w)).collect();
    let e2: Vec<Complex64> = grid.iter().map(|&w| Complex64::cis(y2 * w)).collect();
    let mut columns = vec![e2.clone(), e2.iter().map(|v| i * v).collect()];
    if variant != ScalingVariant::AllExact {
        columns.push(grid.iter().zip(&e2).map(|(&w, v)| i * w * v).collect());
    }
    if variant == ScalingVariant::Free {
        columns.push(grid.iter().zip(&e1).map(|(&w, v)| i * w * v).collect());
    }
    Ok(Setup { e1, columns })
}

const PHASES: usize = 4;
const MAX_ITER: usize = 20_000;
const REL_TOL: f64 = 1e-4;

/// `(phase, fit)` with the smallest uniform approximation error over the
/// probed phases of the target change.
fn hardest_direction(s: &Setup) -> Result<(f64, ChebyshevFit)> {
    let mut best: Option<(f64, ChebyshevFit)> = None;
    for k in 0..PHASES {
        let phase = k as f64 * FRAC_PI_4;
        let rot = Complex64::cis(phase);
        let f: Vec<Complex64> = s.e1.iter().map(|v| rot * v).collect();
        let fit = lawson_chebyshev(&f, &s.columns, MAX_ITER, REL_TOL)?;
        if best.as_ref().is_none_or(|b| fit.sup < b.1.sup) {
            best = Some((phase, fit));
        }
    }
    Ok(best.expect("at least one phase"))
}

/// First-order worst-case `|a_hat_1 - a_1|` for the unit pair at
/// separation `d` and noise level `sigma`.
pub fn worst_amplitude_error(
    d: f64,
    cutoff: f64,
    sigma: f64,
    variant: ScalingVariant,
) -> Result<f64> {
    if !(d > 0.0 && cutoff > 0.0 && sigma >= 0.0) {
        return Err(Error::Domain("need d > 0, cutoff > 0, sigma >= 0".into()));
    }
    let (_, fit) = hardest_direction(&setup(d, cutoff, variant)?)?;
    Ok(2.0 * sigma / fit.sup)
}

/// A concrete perturbed pair realising (to first order) the worst-case
/// amplitude error, scaled so the linearised data misfit is
/// `2 sigma (1 - margin)`. Returns `(truth, perturbed, |a_hat_1 - a_1|)`.
pub fn worst_case_pair(
    d: f64,
    cutoff: f64,
    sigma: f64,
    margin: f64,
    variant: ScalingVariant,
) -> Result<(DiscreteMeasure, DiscreteMeasure, f64)> {
    let s = setup(d, cutoff, variant)?;
    let (phase, fit) = hardest_direction(&s)?;
    let t = 2.0 * sigma * (1.0 - margin) / fit.sup;
    let x = &fit.x;
    let one = Complex64::new(1.0, 0.0);
    let (y1, y2) = (-d / 2.0, d / 2.0);
    let truth = DiscreteMeasure::from_1d(&[y1, y2], &[one, one])?;
    let dy1 = if variant == ScalingVariant::Free {
        -t * x[3]
    } else {
        0.0
    };
    let dy2 = if variant == ScalingVariant::AllExact {
        0.0
    } else {
        -t * x[2]
    };
    let a1 = one + t * Complex64::cis(phase);
    let a2 = one - t * Complex64::new(x[0], x[1]);
    let perturbed = DiscreteMeasure::from_1d(&[y1 + dy1, y2 + dy2], &[a1, a2])?;
    Ok((truth, perturbed, t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub srf: f64,
    pub d: f64,
    /// Per variant, in [`ScalingVariant::ALL`] order.
    pub errors: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub sigma: f64,
    pub rows: Vec<ScalingRow>,
    /// Log-log slope of error against SRF per variant; `None` when some
    /// error is zero.
    pub slopes: [Option<f64>; 3],
}

impl ScalingReport {
    pub fn slope(&self, variant: ScalingVariant) -> Option<f64> {
        let k = ScalingVariant::ALL
            .iter()
            .position(|v| *v == variant)
            .expect("listed");
        self.slopes[k]
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Some(sxy / sxx)
}

/// Sweep `config.points` log-spaced SRF values over `config.srf_range` at
/// noise level `config.sigma`.
pub fn run_amplitude_scaling(config: &ExperimentConfig) -> Result<ScalingReport> {
    config.validate()?;
    let (lo, hi) = config.srf_range;
    let n = config.points;
    let srfs: Vec<f64> = (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect();
    let rows = config.execution.try_map(n, |i| {
        let srf = srfs[i];
        let d = PI / (config.cutoff * srf);
        let mut errors = [0.0; 3];
        for (e, v) in errors.iter_mut().zip(ScalingVariant::ALL) {
            *e = worst_amplitude_error(d, config.cutoff, config.sigma, v)?;
        }
        Ok(ScalingRow { srf, d, errors })
    })?;
    let mut slopes = [None; 3];
    for (k, s) in slopes.iter_mut().enumerate() {
        let e: Vec<f64> = rows.iter().map(|r| r.errors[k]).collect();
        *s = log_log_slope(&srfs, &e);
    }
    Ok(ScalingReport {
        sigma: config.sigma,
        rows,
        slopes,
    })
}
