//! Closed-form resolution limits and the constants behind them.
//!
//! Every limit is a length in the same unit as source locations and scales
//! as `1/cutoff`. Factorial-bearing constants are kept in natural-log form
//! (via `ln_gamma`) so they stay finite for large `n`.

use std::f64::consts::{E, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Result of the two-point diffraction limit: either a separation, or the
/// regime where no separation suffices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    Length(f64),
    NoSuperResolution,
}

impl Limit {
    pub fn length(self) -> Option<f64> {
        match self {
            Self::Length(d) => Some(d),
            Self::NoSuperResolution => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitQuery {
    pub n: usize,
    pub cutoff: f64,
    pub sigma_over_m: f64,
}

impl LimitQuery {
    pub fn new(n: usize, cutoff: f64, sigma_over_m: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!(
                "source count {n} must be at least 2"
            )));
        }
        check_cutoff(cutoff)?;
        check_ratio(sigma_over_m)?;
        Ok(Self {
            n,
            cutoff,
            sigma_over_m,
        })
    }
}

fn check_cutoff(cutoff: f64) -> Result<()> {
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::Domain(format!(
            "cutoff {cutoff} must be positive and finite"
        )));
    }
    Ok(())
}

fn check_ratio(r: f64) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "noise-to-amplitude ratio {r} must be nonnegative"
        )));
    }
    Ok(())
}

/// `4 arcsin(sqrt(sigma/m)) / cutoff` for `sigma/m <= 1/2`.
pub fn diffraction_limit(cutoff: f64, sigma_over_m: f64) -> Result<Limit> {
    check_cutoff(cutoff)?;
    check_ratio(sigma_over_m)?;
    if sigma_over_m > 0.5 {
        return Ok(Limit::NoSuperResolution);
    }
    // 4 asin(sqrt r) = 2 acos(1 - 2r); the second form is exact at r = 1/2,
    // the first keeps full precision for small r
    let angle = if sigma_over_m < 0.25 {
        4.0 * sigma_over_m.sqrt().asin()
    } else {
        2.0 * (1.0 - 2.0 * sigma_over_m).acos()
    };
    Ok(Limit::Length(angle / cutoff))
}

/// `(2 e pi / cutoff) r^{1/(2n-2)}`.
pub fn number_detection_general(q: &LimitQuery) -> f64 {
    2.0 * E * PI / q.cutoff * q.sigma_over_m.powf(1.0 / (2 * q.n - 2) as f64)
}

/// Sharper forms available for two and three sources; `None` for larger `n`.
pub fn number_detection_refined(q: &LimitQuery) -> Option<Result<f64>> {
    match q.n {
        2 => {
            let s = 2.0 * q.sigma_over_m.sqrt();
            Some(if s > 1.0 {
                Err(Error::Domain(format!("2 sqrt(sigma/m) = {s} exceeds 1")))
            } else {
                Ok(2.0 * s.asin() / q.cutoff)
            })
        }
        3 => Some(Ok(2.0 * PI / q.cutoff * (8.0 * q.sigma_over_m).powf(0.25))),
        _ => None,
    }
}

/// Separation above which no admissible measure has fewer than `n` sources.
pub fn number_detection_bound(q: &LimitQuery) -> Result<f64> {
    let general = number_detection_general(q);
    match number_detection_refined(q) {
        Some(refined) => Ok(refined?.min(general)),
        None => Ok(general),
    }
}

/// `(2.36 e pi / cutoff) r^{1/(2n-1)}`.
pub fn location_general(q: &LimitQuery) -> f64 {
    2.36 * E * PI / q.cutoff * q.sigma_over_m.powf(1.0 / (2 * q.n - 1) as f64)
}

pub fn location_refined(q: &LimitQuery) -> Option<Result<f64>> {
    if q.n != 2 {
        return None;
    }
    let s = 2.0 * q.sigma_over_m.cbrt();
    Some(if s > 1.0 {
        Err(Error::Domain(format!("2 (sigma/m)^(1/3) = {s} exceeds 1")))
    } else {
        Ok(3.0 * s.asin() / q.cutoff)
    })
}

/// Separation above which every admissible `n`-source measure places one
/// source near each true source.
pub fn location_bound(q: &LimitQuery) -> Result<f64> {
    let general = location_general(q);
    match location_refined(q) {
        Some(refined) => Ok(refined?.min(general)),
        None => Ok(general),
    }
}

/// `C(n)/cutoff * SRF^{2n-2} * sigma/m`.
pub fn location_error_bound(n: usize, cutoff: f64, srf: f64, sigma_over_m: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "source count {n} must be at least 2"
        )));
    }
    check_cutoff(cutoff)?;
    check_ratio(sigma_over_m)?;
    if !(srf >= 1.0) {
        return Err(Error::Domain(format!(
            "super-resolution factor {srf} must be at least 1"
        )));
    }
    if sigma_over_m == 0.0 {
        return Ok(0.0);
    }
    let log =
        log_location_constant(n) + (2 * n - 2) as f64 * srf.ln() + sigma_over_m.ln() - cutoff.ln();
    Ok(log.exp())
}

/// Rayleigh length over separation, `pi / (cutoff d_min)`.
pub fn srf(cutoff: f64, d_min: f64) -> Result<f64> {
    check_cutoff(cutoff)?;
    if !(d_min > 0.0) {
        return Err(Error::Domain(format!(
            "separation {d_min} must be positive"
        )));
    }
    Ok(PI / (cutoff * d_min))
}

/// Exponent of SRF in the amplitude error: `2n-2` when the recovered
/// location of the target is exact, `2n-1` otherwise. The multiplying
/// constants are not known in closed form.
pub fn amplitude_error_exponent(n: usize, target_location_exact: bool) -> usize {
    if target_location_exact {
        2 * n - 2
    } else {
        2 * n - 1
    }
}

pub fn log_factorial(k: usize) -> f64 {
    if k < 2 {
        0.0
    } else {
        ln_gamma(k as f64 + 1.0)
    }
}

fn ensure_at_least(k: usize, min: usize, what: &str) -> Result<()> {
    if k < min {
        return Err(Error::Domain(format!(
            "{what}({k}) is defined for k >= {min}"
        )));
    }
    Ok(())
}

pub fn log_zeta(k: usize) -> Result<f64> {
    ensure_at_least(k, 1, "zeta")?;
    Ok(if k % 2 == 1 {
        2.0 * log_factorial((k - 1) / 2)
    } else {
        log_factorial(k / 2) + log_factorial((k - 2) / 2)
    })
}

pub fn log_xi(k: usize) -> Result<f64> {
    ensure_at_least(k, 1, "xi")?;
    let quarter = -(4f64.ln());
    Ok(if k == 1 {
        -(2f64.ln())
    } else if k % 2 == 1 {
        log_factorial((k - 1) / 2) + log_factorial((k - 3) / 2) + quarter
    } else {
        2.0 * log_factorial((k - 2) / 2) + quarter
    })
}

pub fn log_lambda(k: usize) -> Result<f64> {
    ensure_at_least(k, 2, "lambda")?;
    if k == 2 {
        Ok(0.0)
    } else {
        log_xi(k - 2)
    }
}

/// `ln C(n)` with `C(n) = 2^{2n-3/2} e^{2n-1} (max(sqrt(n-2), 1) pi)^{-1/2}`.
pub fn log_location_constant(n: usize) -> f64 {
    let n = n as f64;
    let spread = (n - 2.0).max(0.0).sqrt().max(1.0);
    (2.0 * n - 1.5) * 2f64.ln() + (2.0 * n - 1.0) - 0.5 * (spread * PI).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinatorialConstants {
    pub n: usize,
    pub log_zeta: f64,
    pub log_xi: f64,
    pub log_lambda: f64,
    pub log_c: f64,
}

impl CombinatorialConstants {
    pub fn zeta(&self) -> f64 {
        self.log_zeta.exp()
    }
    pub fn xi(&self) -> f64 {
        self.log_xi.exp()
    }
    pub fn lambda(&self) -> f64 {
        self.log_lambda.exp()
    }
    pub fn c(&self) -> f64 {
        self.log_c.exp()
    }
}

pub fn combinatorial_constants(n: usize) -> Result<CombinatorialConstants> {
    ensure_at_least(n, 2, "constants")?;
    Ok(CombinatorialConstants {
        n,
        log_zeta: log_zeta(n)?,
        log_xi: log_xi(n)?,
        log_lambda: log_lambda(n)?,
        log_c: log_location_constant(n),
    })
}

/// Log-margins (`ln rhs - ln lhs`, nonnegative when the inequality holds)
/// of the auxiliary inequalities at one `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppendixRow {
    pub n: usize,
    /// `(2/(zeta(n) xi(n-1)))^{1/(2n-2)} <= 2e/(n-1)`
    pub number: f64,
    /// `(8/(zeta(n) lambda(n)))^{1/(2n-1)} <= 2.36e/(n-1/2)`
    pub location: f64,
    /// `(n-1/2)^{2n-2}/(zeta(n)(n-2)!) <= 2^{n-3/2} e^{2n-1}/(pi^{3/2} max(sqrt(n-2),1))`
    pub constant: f64,
    /// `sqrt(2 pi) n^{n+1/2} e^{-n} <= n!`
    pub stirling_lower: f64,
    /// `n! <= e n^{n+1/2} e^{-n}`
    pub stirling_upper: f64,
}

impl AppendixRow {
    pub fn min_margin(&self) -> f64 {
        [
            self.number,
            self.location,
            self.constant,
            self.stirling_lower,
            self.stirling_upper,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppendixReport {
    pub rows: Vec<AppendixRow>,
}

impl AppendixReport {
    pub fn min_margin(&self) -> f64 {
        self.rows
            .iter()
            .map(AppendixRow::min_margin)
            .fold(f64::INFINITY, f64::min)
    }

    /// True when every margin is nonnegative up to `slack` (absolute, in
    /// log units; the upper Stirling bound is an equality at `n = 1`).
    pub fn all_hold(&self, slack: f64) -> bool {
        self.min_margin() >= -slack
    }
}

/// Stirling log-margins at `n` (lower, upper).
pub fn stirling_margins(n: usize) -> (f64, f64) {
    let nf = n as f64;
    let core = (nf + 0.5) * nf.ln() - nf;
    let fact = log_factorial(n);
    (fact - (0.5 * (2.0 * PI).ln() + core), (1.0 + core) - fact)
}

pub fn verify_appendix_inequalities(n_max: usize) -> Result<AppendixReport> {
    ensure_at_least(n_max, 2, "appendix range")?;
    let mut rows = Vec::with_capacity(n_max - 1);
    for n in 2..=n_max {
        let nf = n as f64;
        let lz = log_zeta(n)?;
        let number =
            (2.0 * E / (nf - 1.0)).ln() - (2f64.ln() - lz - log_xi(n - 1)?) / (2.0 * nf - 2.0);
        let location =
            (2.36 * E / (nf - 0.5)).ln() - (8f64.ln() - lz - log_lambda(n)?) / (2.0 * nf - 1.0);
        let lhs = (2.0 * nf - 2.0) * (nf - 0.5).ln() - lz - log_factorial(n - 2);
        let spread = (nf - 2.0).sqrt().max(1.0);
        let rhs = (nf - 1.5) * 2f64.ln() + (2.0 * nf - 1.0) - 1.5 * PI.ln() - spread.ln();
        let (stirling_lower, stirling_upper) = stirling_margins(n);
        rows.push(AppendixRow {
            n,
            number,
            location,
            constant: rhs - lhs,
            stirling_lower,
            stirling_upper,
        });
    }
    Ok(AppendixReport { rows })
}

/// Outcome of the Monte Carlo check of the product lower bounds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProductBoundReport {
    pub configurations: usize,
    pub checks: usize,
    pub product_violations: usize,
    pub chord_violations: usize,
    pub eta_violations: usize,
    /// Smallest relative margin `lhs/rhs - 1` seen across all checks.
    pub min_relative_margin: f64,
}

impl ProductBoundReport {
    pub fn violations(&self) -> usize {
        self.product_violations + self.chord_violations + self.eta_violations
    }
}

/// Relative slack for round-off: several inequalities are attained exactly
/// (e.g. two points at `±pi/2`).
const PRODUCT_TOL: f64 = 1e-12;

fn chord(a: f64, b: f64) -> f64 {
    2.0 * ((a - b) / 2.0).sin().abs()
}

/// Sorted `k` angles in `[-pi/2, pi/2]` with pairwise distinct entries.
fn random_angles<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let mut t: Vec<f64> = match rng.random_range(0..3) {
            // uniform
            0 => (0..k)
                .map(|_| rng.random_range(-PI / 2.0..=PI / 2.0))
                .collect(),
            // one tight cluster plus uniform rest, stresses small theta_min
            1 => {
                let c = rng.random_range(-PI / 2.0..=PI / 2.0);
                let w = 10f64.powf(rng.random_range(-4.0..0.0));
                (0..k)
                    .map(|i| {
                        if i < 2 {
                            (c + rng.random_range(-w..=w)).clamp(-PI / 2.0, PI / 2.0)
                        } else {
                            rng.random_range(-PI / 2.0..=PI / 2.0)
                        }
                    })
                    .collect()
            }
            // equispaced over a random sub-interval, the extremal shape
            _ => {
                let lo = rng.random_range(-PI / 2.0..=0.0);
                let hi = rng.random_range(0.0..=PI / 2.0);
                if k == 1 {
                    vec![lo]
                } else {
                    (0..k)
                        .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
                        .collect()
                }
            }
        };
        t.sort_by(f64::total_cmp);
        if t.windows(2).all(|w| w[1] > w[0]) {
            return t;
        }
    }
}

fn theta_min(t: &[f64]) -> f64 {
    t.windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

fn log_eta_inf(theta: &[f64], theta_hat: &[f64]) -> f64 {
    theta
        .iter()
        .map(|&a| theta_hat.iter().map(|&b| chord(a, b).ln()).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Checks, on `trials` random configurations per `k <= k_max`, the chord
/// inequality, the product lower bound with `zeta(k)`, and the `eta`
/// lower bound with `xi(k)` against random and adversarial `theta_hat`.
pub fn verify_product_lower_bounds(trials: usize, k_max: usize, seed: u64) -> ProductBoundReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ProductBoundReport {
        min_relative_margin: f64::INFINITY,
        ..Default::default()
    };
    let record = |report: &mut ProductBoundReport, log_lhs: f64, log_rhs: f64| -> bool {
        report.checks += 1;
        let rel = (log_lhs - log_rhs).exp_m1();
        report.min_relative_margin = report.min_relative_margin.min(rel);
        rel < -PRODUCT_TOL
    };
    for k in 2..=k_max.max(2) {
        let lz = log_zeta(k).expect("k >= 2");
        for _ in 0..trials {
            report.configurations += 1;
            let t = random_angles(&mut rng, k);
            let tmin = theta_min(&t);
            let log_scale = (2.0 * tmin / PI).ln();
            for j in 0..k {
                let mut log_prod = 0.0;
                for p in 0..k {
                    if p == j {
                        continue;
                    }
                    let ch = chord(t[j], t[p]);
                    if p > j && record(&mut report, ch.ln(), (2.0 / PI * (t[j] - t[p]).abs()).ln())
                    {
                        report.chord_violations += 1;
                    }
                    log_prod += ch.ln();
                }
                if record(&mut report, log_prod, lz + (k - 1) as f64 * log_scale) {
                    report.product_violations += 1;
                }
            }

            // eta lemma: k+1 angles against k arbitrary angles
            let kk = k;
            let big = random_angles(&mut rng, kk + 1);
            let log_rhs =
                log_xi(kk).expect("k >= 1") + kk as f64 * (2.0 * theta_min(&big) / PI).ln();
            let mut candidates: Vec<Vec<f64>> = Vec::new();
            candidates.push((0..kk).map(|_| rng.random_range(-PI..PI)).collect());
            // sit on all but one of the angles, slightly jittered
            let skip = rng.random_range(0..=kk);
            let jitter = 10f64.powf(rng.random_range(-8.0..-1.0));
            candidates.push(
                big.iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &b)| b + rng.random_range(-jitter..=jitter))
                    .collect(),
            );
            // midpoints of consecutive angles
            candidates.push(big.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect());
            for cand in &candidates {
                if record(&mut report, log_eta_inf(&big, cand), log_rhs) {
                    report.eta_violations += 1;
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: usize, cutoff: f64, r: f64) -> LimitQuery {
        LimitQuery::new(n, cutoff, r).unwrap()
    }

    fn fact(k: usize) -> f64 {
        (1..=k).map(|i| i as f64).product()
    }

    #[test]
    fn diffraction_spot_values() {
        assert_eq!(diffraction_limit(1.0, 0.5).unwrap(), Limit::Length(PI));
        assert_eq!(diffraction_limit(1.0, 0.0).unwrap(), Limit::Length(0.0));
        let d = diffraction_limit(2.0, 0.25).unwrap().length().unwrap();
        assert!((d - PI / 3.0).abs() < 1e-15);
        assert_eq!(
            diffraction_limit(1.0, 0.6).unwrap(),
            Limit::NoSuperResolution
        );
        assert!(diffraction_limit(1.0, -0.1).is_err());
    }

    #[test]
    fn number_detection_spot_values() {
        assert!((number_detection_bound(&q(2, 1.0, 1.0 / 16.0)).unwrap() - PI / 3.0).abs() < 1e-15);
        assert!((number_detection_bound(&q(3, 1.0, 1.0 / 8.0)).unwrap() - 2.0 * PI).abs() < 1e-14);
        let r = (2.0 * E).powi(-6);
        assert!((number_detection_bound(&q(4, 1.0, r)).unwrap() - PI).abs() < 1e-13);
        assert!(number_detection_bound(&q(2, 1.0, 0.3)).is_err());
        assert!(number_detection_general(&q(2, 1.0, 0.3)).is_finite());
    }

    #[test]
    fn location_spot_values() {
        assert!((location_bound(&q(2, 1.0, 0.125)).unwrap() - 1.5 * PI).abs() < 1e-14);
        let expect = 1.18 * E * PI * 0.1;
        assert!((location_bound(&q(3, 2.0, 1e-5)).unwrap() - expect).abs() < 1e-13);
        assert!(location_bound(&q(2, 1.0, 0.2)).is_err());
    }

    #[test]
    fn refined_forms_are_not_looser() {
        for r in [1e-6, 1e-3, 0.05, 0.125] {
            let a = number_detection_refined(&q(2, 1.0, r)).unwrap().unwrap();
            assert!(a <= number_detection_general(&q(2, 1.0, r)));
            let b = location_refined(&q(2, 1.0, r)).unwrap().unwrap();
            assert!(b <= location_general(&q(2, 1.0, r)));
        }
    }

    #[test]
    fn location_constant_and_error_bound() {
        let c2 = log_location_constant(2).exp();
        assert!((c2 - 2f64.powf(2.5) * E.powi(3) / PI.sqrt()).abs() < 1e-12);
        assert_eq!(location_error_bound(2, 1.0, 1.0, 0.0).unwrap(), 0.0);
        let c3 = log_location_constant(3).exp();
        let got = location_error_bound(3, 1.0, 2.0, 1e-4).unwrap();
        assert!((got / (c3 * 16.0 * 1e-4) - 1.0).abs() < 1e-12);
        assert!(location_error_bound(2, 1.0, 0.5, 0.1).is_err());
    }

    #[test]
    fn srf_values() {
        assert!((srf(3.0, PI / 3.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((srf(1.0, PI / 4.0).unwrap() - 4.0).abs() < 1e-15);
        assert!((srf(2.0, PI).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constants_match_factorials() {
        assert!((log_xi(1).unwrap().exp() - 0.5).abs() < 1e-15);
        assert!((log_zeta(2).unwrap().exp() - 1.0).abs() < 1e-15);
        assert!((log_zeta(5).unwrap().exp() - 4.0).abs() < 1e-13);
        assert!((log_lambda(2).unwrap().exp() - 1.0).abs() < 1e-15);
        for k in 1..=20 {
            let zeta = if k % 2 == 1 {
                fact((k - 1) / 2).powi(2)
            } else {
                fact(k / 2) * fact((k - 2) / 2)
            };
            let xi = if k == 1 {
                0.5
            } else if k % 2 == 1 {
                fact((k - 1) / 2) * fact((k - 3) / 2) / 4.0
            } else {
                fact((k - 2) / 2).powi(2) / 4.0
            };
            assert!(
                (log_zeta(k).unwrap().exp() / zeta - 1.0).abs() < 1e-12,
                "zeta({k})"
            );
            assert!(
                (log_xi(k).unwrap().exp() / xi - 1.0).abs() < 1e-12,
                "xi({k})"
            );
        }
        assert!(log_lambda(1).is_err());
        assert!(combinatorial_constants(1).is_err());
        assert!(combinatorial_constants(50).unwrap().c().is_finite());
    }

    #[test]
    fn appendix_at_two() {
        let report = verify_appendix_inequalities(2).unwrap();
        let row = report.rows[0];
        // (2/(1 * 1/2))^{1/2} = 2 against 2e
        assert!((row.number - E.ln()).abs() < 1e-14);
        let (lo, hi) = stirling_margins(1);
        assert!((lo - (1.0 - 0.5 * (2.0 * PI).ln())).abs() < 1e-15);
        assert!(hi.abs() < 1e-15);
    }

    #[test]
    fn product_bound_equality_case() {
        // two angles at the ends of the interval: 2 >= zeta(2) * 2
        let lhs = chord(-PI / 2.0, PI / 2.0);
        let rhs = log_zeta(2).unwrap().exp() * (2.0 * PI / PI);
        assert!((lhs - rhs).abs() < 1e-15);
    }
}
