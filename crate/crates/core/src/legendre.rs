//! Normalized Legendre polynomials on an arbitrary interval `[a', b']`.
//!
//! With `μ = (a'+b')/2` and `δ = (b'-a')/2` the monic Legendre polynomials
//! `r_k(t) = Σ_l R_{k,l} t^{l-1}` satisfy
//!
//! ```text
//! r_1 = 1,   r_{k+1}(t) = (t - μ) r_k(t) - β_k r_{k-1}(t),   r_0 = 0,
//! β_1 = 2δ,  β_k = δ²(k-1)² / (4(k-1)² - 1)  (k ≥ 2),
//! ```
//!
//! and `‖r_k‖² = β_1⋯β_k`, so `Q_{k,l} = R_{k,l} / √(β_1⋯β_k)` are the monomial
//! coefficients of the orthonormal system `p_k`. The coefficients are built in
//! extended precision and kept at that precision; an `f64` copy is provided
//! for the estimator's hot loops.

use alloc::vec::Vec;

use dashu_float::ops::SquareRoot;

use crate::error::{Error, Result};
use crate::ext::{horner, to_f64, Big, Precision};
use crate::interval::Interval;
use crate::quadrature::{self, Rule};

pub const DEFAULT_PRECISION_DIGITS: u32 = 50;

/// Largest admissible `max |⟨p_j, p_k⟩ - δ_{jk}|` for a built basis.
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-8;

/// Extra Gauss nodes beyond the order used to validate orthonormality; the
/// products `p_j p_k` have degree at most `2m - 2`, so the rule is exact.
pub const VALIDATION_EXTRA_NODES: usize = 16;

#[derive(Debug, Clone)]
pub struct LegendreBasis {
    interval: Interval,
    order: usize,
    precision: Precision,
    /// Row `k` (0-based) holds `k + 1` coefficients.
    q_ext: Vec<Vec<Big>>,
    /// Row-major `order × order`, zero above the diagonal.
    q: Vec<f64>,
    beta: Vec<f64>,
    sqrt_beta: Vec<f64>,
    residual: f64,
}

/// Gauss–Legendre nodes and weights on `interval`, exact for polynomials of
/// degree `≤ 2·n_nodes - 1`.
pub fn gauss_nodes(interval: Interval, n_nodes: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n_nodes == 0 {
        return Err(Error::invalid("gauss_nodes needs n_nodes >= 1"));
    }
    let Rule { nodes, weights } = quadrature::gauss_legendre(interval, n_nodes);
    Ok((nodes, weights))
}

/// Builds the normalized Legendre basis of order `m` on `interval`.
///
/// Fails with [`Error::OrthonormalityLost`] when `precision_digits` is not
/// enough for this interval and order.
pub fn build_basis(interval: Interval, m: usize, precision_digits: u32) -> Result<LegendreBasis> {
    if m == 0 {
        return Err(Error::invalid("basis order must be at least 1"));
    }
    if precision_digits < 15 {
        return Err(Error::invalid(alloc::format!(
            "precision_digits must be at least 15, got {precision_digits}"
        )));
    }
    let prec = Precision::from_digits(precision_digits);
    let lo = prec.lift(interval.lo());
    let hi = prec.lift(interval.hi());
    let two = prec.int(2);
    let mu = (&lo + &hi) / &two;
    let delta = (&hi - &lo) / &two;
    let delta_sq = &delta * &delta;

    let beta_ext: Vec<Big> = (1..=m)
        .map(|k| {
            if k == 1 {
                &two * &delta
            } else {
                let j = (k - 1) as i64;
                &delta_sq * prec.int(j * j) / prec.int(4 * j * j - 1)
            }
        })
        .collect();

    // R rows, row k (0-based) of length k+1.
    let mut r: Vec<Vec<Big>> = Vec::with_capacity(m);
    r.push(alloc::vec![prec.int(1)]);
    for k in 1..m {
        let prev = &r[k - 1];
        let mut row = alloc::vec![prec.zero(); k + 1];
        for (l, slot) in row.iter_mut().enumerate() {
            let mut v = prec.zero();
            if l >= 1 {
                v += &prev[l - 1];
            }
            if l < prev.len() {
                v -= &mu * &prev[l];
            }
            if k >= 2 {
                let prev2 = &r[k - 2];
                if l < prev2.len() {
                    v -= &beta_ext[k - 1] * &prev2[l];
                }
            }
            *slot = v;
        }
        r.push(row);
    }

    let mut norm_sq = prec.int(1);
    let mut q_ext = Vec::with_capacity(m);
    for (k, row) in r.into_iter().enumerate() {
        norm_sq = &norm_sq * &beta_ext[k];
        let norm = norm_sq.sqrt();
        q_ext.push(row.into_iter().map(|v| v / &norm).collect::<Vec<_>>());
    }

    let mut q = alloc::vec![0.0; m * m];
    for (k, row) in q_ext.iter().enumerate() {
        for (l, v) in row.iter().enumerate() {
            q[k * m + l] = to_f64(v);
        }
    }
    let beta: Vec<f64> = beta_ext.iter().map(to_f64).collect();
    let sqrt_beta = beta_ext.iter().map(|b| to_f64(&b.sqrt())).collect();

    let mut basis = LegendreBasis {
        interval,
        order: m,
        precision: prec,
        q_ext,
        q,
        beta,
        sqrt_beta,
        residual: f64::NAN,
    };
    let residual = basis.orthonormality_residual(m + VALIDATION_EXTRA_NODES);
    basis.residual = residual;
    if !(residual <= ORTHONORMALITY_TOLERANCE) {
        return Err(Error::OrthonormalityLost {
            residual,
            tolerance: ORTHONORMALITY_TOLERANCE,
            order: m,
            precision_digits,
        });
    }
    Ok(basis)
}

impl LegendreBasis {
    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn precision_digits(&self) -> u32 {
        self.precision.digits()
    }

    /// Residual `max |⟨p_j,p_k⟩ - δ_{jk}|` measured when the basis was built.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `β_1..β_m`.
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// `Q_{k,l}` rounded to `f64`, 1-based; zero for `l > k`.
    pub fn q(&self, k: usize, l: usize) -> f64 {
        self.q[(k - 1) * self.order + (l - 1)]
    }

    /// Row `k` (1-based) of `Q` in `f64`, length `order`.
    pub fn q_row(&self, k: usize) -> &[f64] {
        &self.q[(k - 1) * self.order..k * self.order]
    }

    /// Row `k` (1-based) of `Q` at the working extended precision, length `k`.
    pub fn q_row_ext(&self, k: usize) -> &[Big] {
        &self.q_ext[k - 1]
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.order {
            return Err(Error::IndexOutOfRange {
                index: k,
                order: self.order,
            });
        }
        Ok(())
    }

    /// `p_k(t) = Σ_l Q_{k,l} t^{l-1}` by Horner's scheme at extended precision.
    pub fn eval_poly(&self, k: usize, t: f64) -> Result<f64> {
        self.check_index(k)?;
        self.interval.check(t)?;
        Ok(self.eval_poly_unchecked(k, t))
    }

    fn eval_poly_unchecked(&self, k: usize, t: f64) -> f64 {
        to_f64(&horner(&self.q_ext[k - 1], &self.precision.lift(t)))
    }

    /// Values `p_1(u), …, p_n(u)` with `n = out.len() ≤ order`, from the
    /// normalized three-term recurrence
    /// `√β_{k+1} p_{k+1} = (u - μ) p_k - √β_k p_{k-1}`.
    ///
    /// This is the numerically stable route and is accurate to a few ulps
    /// regardless of how large the monomial coefficients are. No range check.
    pub fn eval_all(&self, u: f64, out: &mut [f64]) {
        let n = out.len();
        debug_assert!(n <= self.order);
        if n == 0 {
            return;
        }
        let x = u - self.interval.center();
        out[0] = 1.0 / self.sqrt_beta[0];
        if n == 1 {
            return;
        }
        out[1] = x * out[0] / self.sqrt_beta[1];
        for k in 1..n - 1 {
            out[k + 1] = (x * out[k] - self.sqrt_beta[k] * out[k - 1]) / self.sqrt_beta[k + 1];
        }
    }

    /// `s_k = Σ_l Q_{k,l}²` for `k = 1..m`.
    pub fn coefficient_growth_report(&self) -> Vec<f64> {
        self.q_ext
            .iter()
            .map(|row| {
                let mut s = self.precision.zero();
                for v in row {
                    s += v * v;
                }
                to_f64(&s)
            })
            .collect()
    }

    /// Growth constant `λ = r + √(1 + r)` with `r = (2 + a' + b')/(b' - a')`
    /// for this basis' interval.
    pub fn growth_lambda(&self) -> f64 {
        growth_lambda(self.interval)
    }

    /// Gram matrix of `p_1..p_m` (row-major) under an `n_nodes` Gauss rule,
    /// with the polynomials evaluated at extended precision.
    pub fn gram_matrix(&self, n_nodes: usize) -> Vec<f64> {
        let m = self.order;
        let rule = quadrature::gauss_legendre(self.interval, n_nodes);
        let values: Vec<Vec<f64>> = rule
            .nodes
            .iter()
            .map(|&t| {
                let t = self.precision.lift(t);
                self.q_ext
                    .iter()
                    .map(|row| to_f64(&horner(row, &t)))
                    .collect()
            })
            .collect();
        let mut gram = alloc::vec![0.0; m * m];
        for j in 0..m {
            for k in 0..=j {
                let mut acc = crate::stats::NeumaierSum::default();
                for (vals, &w) in values.iter().zip(&rule.weights) {
                    acc.add(w * vals[j] * vals[k]);
                }
                gram[j * m + k] = acc.value();
                gram[k * m + j] = acc.value();
            }
        }
        gram
    }

    /// `max_{j,k} |⟨p_j,p_k⟩ - δ_{jk}|` under an `n_nodes` Gauss rule.
    pub fn orthonormality_residual(&self, n_nodes: usize) -> f64 {
        let m = self.order;
        let gram = self.gram_matrix(n_nodes);
        let mut worst: f64 = 0.0;
        for j in 0..m {
            for k in 0..m {
                let target = if j == k { 1.0 } else { 0.0 };
                let d = (gram[j * m + k] - target).abs();
                if d.is_nan() {
                    return f64::NAN;
                }
                worst = worst.max(d);
            }
        }
        worst
    }

    /// `Q v` restricted to the leading `v.len()` rows and columns, accumulated
    /// at extended precision and rounded once.
    pub fn apply_q(&self, v: &[f64]) -> Vec<f64> {
        let m = v.len();
        debug_assert!(m <= self.order);
        let lifted: Vec<Big> = v.iter().map(|&x| self.precision.lift(x)).collect();
        self.q_ext[..m]
            .iter()
            .map(|row| {
                let mut acc = self.precision.zero();
                for (q, x) in row.iter().zip(&lifted) {
                    acc += q * x;
                }
                to_f64(&acc)
            })
            .collect()
    }

    /// `tr(Q Σ Qᵀ)` for a symmetric row-major `m×m` matrix `sigma`,
    /// at extended precision.
    pub fn trace_q_sigma_qt(&self, sigma: &[f64], m: usize) -> f64 {
        debug_assert_eq!(sigma.len(), m * m);
        let s: Vec<Big> = sigma.iter().map(|&x| self.precision.lift(x)).collect();
        let mut total = self.precision.zero();
        for row in &self.q_ext[..m] {
            for (j, qj) in row.iter().enumerate() {
                let mut inner = self.precision.zero();
                for (l, ql) in row.iter().enumerate() {
                    inner += ql * &s[j * m + l];
                }
                total += qj * inner;
            }
        }
        to_f64(&total)
    }
}

/// `λ = r + √(1 + r)` with `r = (2 + a' + b')/(b' - a')`.
pub fn growth_lambda(interval: Interval) -> f64 {
    let r = (2.0 + interval.lo() + interval.hi()) / interval.length();
    r + libm::sqrt(1.0 + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn order_one_on_symmetric_interval() {
        let b = build_basis(iv(-1.0, 1.0), 1, 50).unwrap();
        assert!((b.q(1, 1) - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn order_two_row() {
        let b = build_basis(iv(-1.0, 1.0), 2, 50).unwrap();
        assert_eq!(b.q(2, 1), 0.0);
        assert!((b.q(2, 2) - libm::sqrt(1.5)).abs() < 1e-15);
        assert_eq!(b.q(1, 2), 0.0);
    }

    #[test]
    fn unit_interval_constant() {
        let b = build_basis(iv(0.0, 1.0), 1, 50).unwrap();
        assert!((b.q(1, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eval_poly_examples() {
        let b = build_basis(iv(-1.0, 1.0), 2, 50).unwrap();
        assert!((b.eval_poly(1, 0.3).unwrap() - 0.707_106_781_186_547_5).abs() < 1e-12);
        assert_eq!(b.eval_poly(2, 0.0).unwrap(), 0.0);
        assert!((b.eval_poly(2, 1.0).unwrap() - 1.224_744_871_391_589).abs() < 1e-12);
    }

    #[test]
    fn eval_poly_errors() {
        let b = build_basis(iv(-1.0, 1.0), 2, 50).unwrap();
        assert!(matches!(
            b.eval_poly(0, 0.0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            b.eval_poly(3, 0.0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            b.eval_poly(1, 1.5),
            Err(Error::PointOutsideInterval { .. })
        ));
    }

    #[test]
    fn growth_report_examples() {
        let b = build_basis(iv(-1.0, 1.0), 2, 50).unwrap();
        let s = b.coefficient_growth_report();
        assert!((s[0] - 0.5).abs() < 1e-15);
        assert!((s[1] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn beta_closed_forms() {
        let b = build_basis(iv(1.0, 5.0), 8, 50).unwrap();
        let d = 2.0;
        assert_eq!(b.beta()[0], 2.0 * d);
        for k in 2..=8usize {
            let j = (k - 1) as f64;
            let want = d * d * j * j / (4.0 * j * j - 1.0);
            let got = b.beta()[k - 1];
            assert!((got - want).abs() <= 2.0 * f64::EPSILON * want, "k={k}");
        }
    }

    #[test]
    fn bad_arguments() {
        assert!(build_basis(iv(0.0, 1.0), 0, 50).is_err());
        assert!(build_basis(iv(0.0, 1.0), 3, 14).is_err());
        assert!(gauss_nodes(iv(0.0, 1.0), 0).is_err());
    }

    #[test]
    fn low_precision_loses_orthonormality_on_narrow_interval() {
        let lo = libm::exp(-2.0);
        let hi = libm::exp(-1.0);
        let err = build_basis(iv(lo, hi), 25, 15).unwrap_err();
        assert!(matches!(err, Error::OrthonormalityLost { .. }), "{err:?}");
        assert!(build_basis(iv(lo, hi), 25, 50).is_ok());
    }

    #[test]
    fn recurrence_values_match_horner() {
        let lo = libm::exp(-2.0);
        let hi = libm::exp(-1.0);
        let b = build_basis(iv(lo, hi), 20, 50).unwrap();
        let mut vals = [0.0; 20];
        for i in 0..=10 {
            let u = lo + (hi - lo) * i as f64 / 10.0;
            b.eval_all(u, &mut vals);
            for k in 1..=20 {
                let h = b.eval_poly(k, u).unwrap();
                assert!(
                    (vals[k - 1] - h).abs() < 1e-11 * (1.0 + h.abs()),
                    "k={k} u={u}"
                );
            }
        }
    }

    #[test]
    fn apply_q_identity_row() {
        let b = build_basis(iv(0.0, 1.0), 3, 50).unwrap();
        let c = b.apply_q(&[1.0, 0.0, 0.0]);
        assert!((c[0] - b.q(1, 1)).abs() < 1e-15);
        assert!((c[1] - b.q(2, 1)).abs() < 1e-15);
    }
}
