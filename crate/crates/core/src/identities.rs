//! Vandermonde inversion and the location-amplitude identities.
//!
//! For a true measure `mu` and a recovered measure `mu_hat` (both 1-D) with
//! `F[mu_hat] = F[mu] + w`, fix a target source `y_j`, its closest recovered
//! point `y_hat`, and the clutter set `S` of the remaining true points plus
//! the remaining recovered points that are not true points. With
//! `P(x) = prod_{q in S} (x - e^{i q w*})` and `v` its coefficient vector,
//! sampling `w` on the progression `0, w*, 2w*, ...` gives
//!
//! ```text
//! a_hat P(e^{i y_hat w*}) / P(e^{i y_j w*})            = a_j + w1.v / P(e^{i y_j w*})
//! (e^{i y_hat w*} - e^{i y_j w*}) a_j                   = (w2 - e^{i y_hat w*} w1).v / P(e^{i y_j w*})
//! ```
//!
//! where `w1 = (w(0), .., w(#S w*))` and `w2 = (w(w*), .., w((#S+1) w*))`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::DiscreteMeasure;

/// Rotated nodes closer than this are treated as colliding.
pub const COLLISION_TOL: f64 = 1e-12;

/// `(t^p, t^{p+1}, .., t^q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiVector {
    base: Complex64,
    first_power: usize,
    entries: Vec<Complex64>,
}

impl PhiVector {
    pub fn new(base: Complex64, p: usize, q: usize) -> Self {
        assert!(p <= q, "empty power range {p}..{q}");
        let mut entries = Vec::with_capacity(q - p + 1);
        let mut cur = base.powu(p as u32);
        for _ in p..=q {
            entries.push(cur);
            cur *= base;
        }
        Self {
            base,
            first_power: p,
            entries,
        }
    }

    pub fn base(&self) -> Complex64 {
        self.base
    }

    pub fn first_power(&self) -> usize {
        self.first_power
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Coefficients of `prod (X - r)` over `roots`, lowest degree first.
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        c.push(Complex64::new(0.0, 0.0));
        for i in (0..c.len()).rev() {
            let lower = if i > 0 {
                c[i - 1]
            } else {
                Complex64::new(0.0, 0.0)
            };
            c[i] = lower - r * c[i];
        }
    }
    c
}

pub fn poly_eval(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
}

fn check_distinct(nodes: &[Complex64]) -> Result<()> {
    for p in 0..nodes.len() {
        for q in 0..p {
            if nodes[p] == nodes[q] {
                return Err(Error::DegenerateNodes(q, p));
            }
        }
    }
    Ok(())
}

/// Row `j` of the inverse of the Vandermonde matrix whose columns are
/// `(1, t_m, .., t_m^{k-1})`: the coefficients of the Lagrange basis
/// polynomial for node `j`.
pub fn vandermonde_inverse_row(nodes: &[Complex64], j: usize) -> Result<Vec<Complex64>> {
    check_distinct(nodes)?;
    if j >= nodes.len() {
        return Err(Error::Domain(format!(
            "row {j} out of range for {} nodes",
            nodes.len()
        )));
    }
    let others: Vec<Complex64> = nodes
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != j)
        .map(|(_, t)| *t)
        .collect();
    let denom: Complex64 = others.iter().map(|t| nodes[j] - t).product();
    Ok(poly_from_roots(&others)
        .into_iter()
        .map(|c| c / denom)
        .collect())
}

/// `prod_{q != j} (t - t_q) / (t_j - t_q)`.
pub fn lagrange_weight(nodes: &[Complex64], j: usize, t: Complex64) -> Result<Complex64> {
    check_distinct(nodes)?;
    if j >= nodes.len() {
        return Err(Error::Domain(format!(
            "index {j} out of range for {} nodes",
            nodes.len()
        )));
    }
    Ok(nodes
        .iter()
        .enumerate()
        .filter(|&(q, _)| q != j)
        .map(|(_, tq)| (t - tq) / (nodes[j] - tq))
        .product())
}

/// How "recovered point equals a true point" is decided when building `S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetMatching {
    Exact,
    /// Absolute tolerance, for data that went through a lossy round trip.
    Tolerance(f64),
}

impl SetMatching {
    fn same(self, a: f64, b: f64) -> bool {
        match self {
            Self::Exact => a == b,
            Self::Tolerance(tol) => (a - b).abs() <= tol,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IdentityContext {
    target: usize,
    matched: usize,
    y: f64,
    y_hat: f64,
    a: Complex64,
    a_hat: Complex64,
    clutter: Vec<f64>,
    step: f64,
    v: Vec<Complex64>,
}

impl IdentityContext {
    pub fn new(
        truth: &DiscreteMeasure,
        recovered: &DiscreteMeasure,
        target: usize,
        step: f64,
        matching: SetMatching,
    ) -> Result<Self> {
        if truth.dim() != 1 || recovered.dim() != 1 {
            return Err(Error::Domain("identities are one-dimensional".into()));
        }
        if target >= truth.len() {
            return Err(Error::Domain(format!("target {target} out of range")));
        }
        if recovered.is_empty() {
            return Err(Error::Domain("recovered measure is empty".into()));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Domain(format!(
                "sampling step {step} must be positive"
            )));
        }
        let ys = truth.points();
        let yh = recovered.points();
        let y = ys[target];
        let mut matched = 0;
        for (l, &cand) in yh.iter().enumerate() {
            // strict: equidistant candidates keep the smaller index
            if (cand - y).abs() < (yh[matched] - y).abs() {
                matched = l;
            }
        }
        let mut clutter: Vec<f64> = ys
            .iter()
            .enumerate()
            .filter(|&(p, _)| p != target)
            .map(|(_, &q)| q)
            .collect();
        for (l, &cand) in yh.iter().enumerate() {
            if l == matched {
                continue;
            }
            if matching.same(cand, y) {
                return Err(Error::Domain(format!(
                    "recovered point {l} coincides with the target but is not its closest match"
                )));
            }
            if !ys.iter().any(|&q| matching.same(cand, q)) {
                clutter.push(cand);
            }
        }

        let rotated_target = Complex64::cis(y * step);
        let roots: Vec<Complex64> = clutter.iter().map(|q| Complex64::cis(q * step)).collect();
        let mut all = vec![rotated_target];
        all.extend_from_slice(&roots);
        for p in 0..all.len() {
            for q in 0..p {
                let gap = (all[p] - all[q]).norm();
                if gap < COLLISION_TOL {
                    return Err(Error::DegenerateRotation {
                        step,
                        detail: format!("rotated nodes {q} and {p} differ by {gap:e}"),
                    });
                }
            }
        }
        Ok(Self {
            target,
            matched,
            y,
            y_hat: yh[matched],
            a: truth.amplitudes()[target],
            a_hat: recovered.amplitudes()[matched],
            clutter,
            step,
            v: poly_from_roots(&roots),
        })
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// Index of the recovered point closest to the target.
    pub fn matched(&self) -> usize {
        self.matched
    }

    pub fn matched_location(&self) -> f64 {
        self.y_hat
    }

    pub fn clutter(&self) -> &[f64] {
        &self.clutter
    }

    /// `#S`.
    pub fn clutter_len(&self) -> usize {
        self.clutter.len()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Coefficients of `prod_{q in S} (X - e^{i q w*})`, lowest degree first.
    pub fn v(&self) -> &[Complex64] {
        &self.v
    }

    /// `prod_{q in S} (e^{i x w*} - e^{i q w*})`.
    pub fn clutter_product(&self, x: f64) -> Complex64 {
        poly_eval(&self.v, Complex64::cis(x * self.step))
    }

    pub fn check_step(&self, cutoff: f64, extra: usize) -> Result<()> {
        let slots = (self.clutter.len() + extra) as f64;
        if slots > 0.0 && self.step > cutoff / slots * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "step {} exceeds cutoff/{} = {}",
                self.step,
                slots,
                cutoff / slots
            )));
        }
        Ok(())
    }

    /// `w1.v` and `(w2 - e^{i y_hat w*} w1).v` for an arbitrary sampled `w`.
    pub fn noise_contractions(&self, w: impl Fn(f64) -> Complex64) -> (Complex64, Complex64) {
        let s = self.clutter.len();
        let samples: Vec<Complex64> = (0..=s + 1).map(|m| w(m as f64 * self.step)).collect();
        let w1v: Complex64 = self.v.iter().zip(&samples[..=s]).map(|(v, w)| v * w).sum();
        let w2v: Complex64 = self.v.iter().zip(&samples[1..]).map(|(v, w)| v * w).sum();
        let rot = Complex64::cis(self.y_hat * self.step);
        (w1v, w2v - rot * w1v)
    }

    /// Left side of the amplitude identity.
    pub fn amplitude_lhs(&self) -> Complex64 {
        self.a_hat * self.clutter_product(self.y_hat) / self.clutter_product(self.y)
    }

    /// Left side of the location identity.
    pub fn location_lhs(&self) -> Complex64 {
        (Complex64::cis(self.y_hat * self.step) - Complex64::cis(self.y * self.step)) * self.a
    }

    pub fn true_amplitude(&self) -> Complex64 {
        self.a
    }

    /// Corollary bound on `|amplitude_lhs - a_j|` for noise below `sigma`.
    pub fn amplitude_error_bound(&self, sigma: f64) -> f64 {
        2f64.powi(self.clutter.len() as i32) * sigma / self.clutter_product(self.y).norm()
    }

    /// Corollary bound on `|location_lhs|` for noise below `sigma`.
    pub fn location_error_bound(&self, sigma: f64) -> f64 {
        2f64.powi(self.clutter.len() as i32 + 1) * sigma / self.clutter_product(self.y).norm()
    }
}

fn exact_residual<'a>(
    truth: &'a DiscreteMeasure,
    recovered: &'a DiscreteMeasure,
) -> impl Fn(f64) -> Complex64 + 'a {
    move |w| recovered.fourier(&[w]) - truth.fourier(&[w])
}

/// Both sides of the amplitude identity with `w = F[recovered] - F[truth]`:
/// returns `(lhs, noise_term)` with `lhs - a_j = noise_term`.
pub fn identity_amplitude(
    truth: &DiscreteMeasure,
    recovered: &DiscreteMeasure,
    target: usize,
    step: f64,
    cutoff: f64,
) -> Result<(Complex64, Complex64)> {
    let ctx = IdentityContext::new(truth, recovered, target, step, SetMatching::Exact)?;
    ctx.check_step(cutoff, 0)?;
    let (w1v, _) = ctx.noise_contractions(exact_residual(truth, recovered));
    Ok((ctx.amplitude_lhs(), w1v / ctx.clutter_product(ctx.y)))
}

/// Both sides of the location identity with `w = F[recovered] - F[truth]`.
pub fn identity_location(
    truth: &DiscreteMeasure,
    recovered: &DiscreteMeasure,
    target: usize,
    step: f64,
    cutoff: f64,
) -> Result<(Complex64, Complex64)> {
    let ctx = IdentityContext::new(truth, recovered, target, step, SetMatching::Exact)?;
    ctx.check_step(cutoff, 1)?;
    let (_, loc) = ctx.noise_contractions(exact_residual(truth, recovered));
    Ok((ctx.location_lhs(), loc / ctx.clutter_product(ctx.y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn phi_vector_is_geometric() {
        let t = c(0.3, -1.1);
        let phi = PhiVector::new(t, 2, 6);
        assert_eq!(phi.len(), 5);
        assert!((phi.entries()[0] - t * t).norm() < 1e-15);
        for w in phi.entries().windows(2) {
            assert!((w[1] - t * w[0]).norm() < 1e-14);
        }
    }

    #[test]
    fn poly_from_roots_expands() {
        // (X - 1)(X + 2) = X^2 + X - 2
        let p = poly_from_roots(&[c(1.0, 0.0), c(-2.0, 0.0)]);
        assert_eq!(p, vec![c(-2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(poly_from_roots(&[]), vec![c(1.0, 0.0)]);
    }

    #[test]
    fn two_node_inverse() {
        // V = [[1, 1], [1, -1]], V^-1 = [[1/2, 1/2], [1/2, -1/2]]
        let nodes = [c(1.0, 0.0), c(-1.0, 0.0)];
        assert_eq!(
            vandermonde_inverse_row(&nodes, 0).unwrap(),
            vec![c(0.5, 0.0), c(0.5, 0.0)]
        );
        assert_eq!(
            vandermonde_inverse_row(&nodes, 1).unwrap(),
            vec![c(0.5, 0.0), c(-0.5, 0.0)]
        );
        assert_eq!(
            vandermonde_inverse_row(&[c(0.7, 0.2)], 0).unwrap(),
            vec![c(1.0, 0.0)]
        );
    }

    #[test]
    fn duplicate_nodes_are_rejected() {
        let nodes = [c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0)];
        assert!(matches!(
            vandermonde_inverse_row(&nodes, 0),
            Err(Error::DegenerateNodes(0, 2))
        ));
        assert!(lagrange_weight(&nodes, 1, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn lagrange_cardinality() {
        let nodes = [c(1.0, 0.0), c(0.0, 1.0), c(-0.5, -0.5)];
        for j in 0..3 {
            for q in 0..3 {
                let l = lagrange_weight(&nodes, j, nodes[q]).unwrap();
                let expect = if j == q { 1.0 } else { 0.0 };
                assert!((l - c(expect, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn identical_measures_give_trivial_identities() {
        let mu =
            DiscreteMeasure::from_1d(&[-0.4, 0.1, 0.9], &[c(1.0, 0.5), c(-2.0, 0.0), c(0.3, 0.3)])
                .unwrap();
        for j in 0..3 {
            let (lhs, noise) = identity_amplitude(&mu, &mu, j, 0.3, 1.0).unwrap();
            assert!((lhs - mu.amplitudes()[j]).norm() < 1e-12);
            assert!(noise.norm() < 1e-12);
            let (lhs, rhs) = identity_location(&mu, &mu, j, 0.25, 1.0).unwrap();
            assert!(lhs.norm() < 1e-15 && rhs.norm() < 1e-12);
        }
    }

    #[test]
    fn clutter_counts() {
        let mu = DiscreteMeasure::from_1d(&[-0.5, 0.5], &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let one = DiscreteMeasure::from_1d(&[0.05], &[c(2.0, 0.0)]).unwrap();
        let ctx = IdentityContext::new(&mu, &one, 0, 0.5, SetMatching::Exact).unwrap();
        assert_eq!(ctx.clutter_len(), 1);
        let three = DiscreteMeasure::from_1d(&[-0.45, 0.5, 1.4], &[c(1.0, 0.0); 3]).unwrap();
        let ctx = IdentityContext::new(&mu, &three, 0, 0.3, SetMatching::Exact).unwrap();
        // y_2 = 0.5 is shared, so only 1.4 joins S
        assert_eq!(ctx.clutter(), &[0.5, 1.4]);
        assert_eq!(ctx.v().len(), 3);
    }

    #[test]
    fn closest_match_ties_prefer_lower_index() {
        let mu = DiscreteMeasure::from_1d(&[0.0], &[c(1.0, 0.0)]).unwrap();
        let rec = DiscreteMeasure::from_1d(&[0.2, -0.2], &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let ctx = IdentityContext::new(&mu, &rec, 0, 0.1, SetMatching::Exact).unwrap();
        assert_eq!(ctx.matched(), 0);
    }

    #[test]
    fn rotation_collisions_are_errors() {
        use std::f64::consts::PI;
        let mu = DiscreteMeasure::from_1d(&[0.0, 2.0 * PI], &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let err = IdentityContext::new(&mu, &mu, 0, 1.0, SetMatching::Exact).unwrap_err();
        assert!(matches!(err, Error::DegenerateRotation { .. }));
    }

    #[test]
    fn tolerance_matching_absorbs_round_off() {
        let mu = DiscreteMeasure::from_1d(&[-0.5, 0.5], &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let rec =
            DiscreteMeasure::from_1d(&[-0.5, 0.5 + 1e-14], &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        // exact matching keeps both 0.5 and 0.5 + 1e-14, whose rotations collide
        let exact = IdentityContext::new(&mu, &rec, 0, 0.3, SetMatching::Exact);
        assert!(matches!(exact, Err(Error::DegenerateRotation { .. })));
        let loose = IdentityContext::new(&mu, &rec, 0, 0.3, SetMatching::Tolerance(1e-12)).unwrap();
        assert_eq!(loose.clutter_len(), 1);
    }

    #[test]
    fn step_is_limited_by_clutter_size() {
        let mu = DiscreteMeasure::from_1d(&[-0.5, 0.5], &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let one = DiscreteMeasure::from_1d(&[0.0], &[c(2.0, 0.0)]).unwrap();
        assert!(identity_amplitude(&mu, &one, 0, 1.0, 1.0).is_ok());
        assert!(identity_location(&mu, &one, 0, 1.0, 1.0).is_err());
        assert!(identity_location(&mu, &one, 0, 0.5, 1.0).is_ok());
    }
}
