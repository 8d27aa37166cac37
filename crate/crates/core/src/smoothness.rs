//! Weighted moduli of smoothness `ω_φ^r(f, t)₂` with step weight
//! `φ(x) = √((x-a)(b-x))`, and membership checks for the classes
//! `{f : ‖f‖ ≤ C, ω_φ^r(f, t)₂ ≤ C t^α for all t}` with `r = ⌊α⌋ + 1`.

use alloc::vec::Vec;

use crate::density::MixingDensity;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::quadrature::{gauss_legendre_reference, Rule};

pub const DEFAULT_H_SUBDIVISIONS: usize = 64;
pub const DEFAULT_T_POINTS: usize = 16;
/// The smallest step tried for a given `t` is `t · H_FLOOR`.
pub const H_FLOOR: f64 = 1e-3;
/// Panels × nodes per panel of the composite Gauss rule for the `L²` norm.
pub const QUADRATURE_PANELS: usize = 16;
pub const QUADRATURE_PANEL_NODES: usize = 16;
/// Relative slack in the norm check, absorbing quadrature rounding.
pub const NORM_RELATIVE_SLACK: f64 = 1e-12;

fn binomial(r: u32, i: u32) -> f64 {
    let mut c = 1.0;
    for j in 0..i {
        c = c * f64::from(r - j) / f64::from(j + 1);
    }
    c
}

/// `Δ_h^r(f, x) = Σ_{i=0}^r C(r,i)(-1)^{r-i} f(x + (i - r/2)h)` for an
/// arbitrary evaluator on `interval`, zero when `x ± rh/2 ∉ [a, b]`.
///
/// The sum is accumulated as `Σ C(r,i)(-1)^{r-i}(f(x_i) - f(x_0))`, so it is
/// exactly zero for constant `f`.
pub fn symmetric_difference_with<F: Fn(f64) -> f64>(
    f: F,
    interval: Interval,
    r: u32,
    h: f64,
    x: f64,
) -> f64 {
    let half = 0.5 * f64::from(r) * h.abs();
    if !(x - half >= interval.lo() && x + half <= interval.hi()) {
        return 0.0;
    }
    let x0 = x - 0.5 * f64::from(r) * h;
    let f0 = f(x0);
    let mut acc = 0.0;
    for i in 1..=r {
        let sign = if (r - i).is_multiple_of(2) { 1.0 } else { -1.0 };
        acc += sign * binomial(r, i) * (f(x0 + f64::from(i) * h) - f0);
    }
    acc
}

/// [`symmetric_difference_with`] for a mixing density.
pub fn symmetric_difference(f: &MixingDensity, r: u32, h: f64, x: f64) -> f64 {
    symmetric_difference_with(|t| f.eval(t), f.interval(), r, h, x)
}

/// `φ(x) = √((x-a)(b-x))`.
pub fn step_weight(interval: Interval, x: f64) -> f64 {
    libm::sqrt(((x - interval.lo()) * (interval.hi() - x)).max(0.0))
}

/// `t_k = 10^{-3 + 3k/(n-1)}`, `k = 0..n-1`.
pub fn default_t_grid() -> Vec<f64> {
    geometric_grid(1e-3, 1.0, DEFAULT_T_POINTS)
}

fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![hi];
    }
    let ratio = libm::log(hi / lo);
    (0..n)
        .map(|k| {
            if k + 1 == n {
                hi
            } else {
                lo * libm::exp(ratio * k as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ModulusQuery {
    pub f: MixingDensity,
    pub r: u32,
    pub t_grid: Vec<f64>,
    pub h_subdivisions: usize,
}

impl ModulusQuery {
    pub fn new(f: MixingDensity, r: u32) -> Self {
        Self {
            f,
            r,
            t_grid: default_t_grid(),
            h_subdivisions: DEFAULT_H_SUBDIVISIONS,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::invalid("modulus order r must be at least 1"));
        }
        if self.h_subdivisions == 0 {
            return Err(Error::invalid("h_subdivisions must be positive"));
        }
        if self.t_grid.is_empty() {
            return Err(Error::invalid("t grid is empty"));
        }
        for &t in &self.t_grid {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::ParameterOutOfRange {
                    t,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        Ok(())
    }
}

fn composite_rule(interval: Interval) -> Rule {
    let reference = gauss_legendre_reference(QUADRATURE_PANEL_NODES);
    let width = interval.length() / QUADRATURE_PANELS as f64;
    let mut nodes = Vec::with_capacity(QUADRATURE_PANELS * QUADRATURE_PANEL_NODES);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for p in 0..QUADRATURE_PANELS {
        let lo = interval.lo() + width * p as f64;
        let hi = if p + 1 == QUADRATURE_PANELS {
            interval.hi()
        } else {
            lo + width
        };
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (x, w) in reference.nodes.iter().zip(&reference.weights) {
            nodes.push(mid + half * x);
            weights.push(half * w);
        }
    }
    Rule { nodes, weights }
}

/// `‖x ↦ Δ_{hφ(x)}^r(f, x)‖₂` on `[a, b]`.
pub fn weighted_difference_norm(f: &MixingDensity, r: u32, h: f64) -> f64 {
    let iv = f.interval();
    let rule = composite_rule(iv);
    weighted_difference_norm_with(f, &rule, r, h)
}

fn weighted_difference_norm_with(f: &MixingDensity, rule: &Rule, r: u32, h: f64) -> f64 {
    let iv = f.interval();
    let sq = rule.integrate(|x| {
        let d = symmetric_difference(f, r, h * step_weight(iv, x), x);
        d * d
    });
    libm::sqrt(sq.max(0.0))
}

/// `(t, ω̂(t))` for each `t` of the query grid, in ascending `t`.
///
/// `ω̂(t)` is the largest difference norm over `h` in a geometric grid of
/// `h_subdivisions` points on `[t·10⁻³, t]` and over the grids of all smaller
/// `t`; it is a lower bound for `ω_φ^r(f, t)₂`. Doubling the grid size minus
/// one (`N → 2N - 1`) refines it.
pub fn weighted_modulus(query: &ModulusQuery) -> Result<Vec<(f64, f64)>> {
    query.validate()?;
    let rule = composite_rule(query.f.interval());
    let mut ts = query.t_grid.clone();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut running = 0.0f64;
    let mut out = Vec::with_capacity(ts.len());
    for &t in &ts {
        for h in geometric_grid(t * H_FLOOR, t, query.h_subdivisions) {
            running = running.max(weighted_difference_norm_with(&query.f, &rule, query.r, h));
        }
        out.push((t, running));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    /// `‖f‖ > C`.
    NormExceeded { norm: f64 },
    /// `ω̂(t) > C t^α`.
    ModulusExceeded { t: f64, omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    ConsistentWithMembership,
    Violated(Violation),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassCertificate {
    pub alpha: f64,
    pub c: f64,
    pub verdict: Verdict,
    /// Smallest slack over all checks, `min(C - ‖f‖, min_t (C t^α - ω̂(t)))`;
    /// negative exactly when the verdict is a violation.
    pub margin: f64,
    /// The modulus curve used, empty when the norm check already failed.
    pub modulus: Vec<(f64, f64)>,
}

impl ClassCertificate {
    pub fn is_consistent(&self) -> bool {
        self.verdict == Verdict::ConsistentWithMembership
    }
}

/// Checks `‖f‖ ≤ C` and `ω̂(t) ≤ C t^α` on `t_grid` (the default grid when
/// empty) with `r = ⌊α⌋ + 1`. Because `ω̂` underestimates the modulus, a pass
/// only shows consistency; a failure is a definite violation.
pub fn certify_class(
    f: &MixingDensity,
    alpha: f64,
    c: f64,
    t_grid: &[f64],
) -> Result<ClassCertificate> {
    let r = if alpha > 0.0 && alpha.is_finite() {
        libm::floor(alpha) as u32 + 1
    } else {
        1
    };
    let mut query = ModulusQuery::new(f.clone(), r);
    if !t_grid.is_empty() {
        query.t_grid = t_grid.to_vec();
    }
    certify_query(&query, alpha, c)
}

/// [`certify_class`] with the grid, step count and order taken from `query`.
pub fn certify_query(query: &ModulusQuery, alpha: f64, c: f64) -> Result<ClassCertificate> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(alloc::format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(alloc::format!(
            "C must be positive, got {c}"
        )));
    }
    let norm = libm::sqrt(query.f.norm_sq());
    let norm_margin = c - norm;
    if norm > c * (1.0 + NORM_RELATIVE_SLACK) {
        return Ok(ClassCertificate {
            alpha,
            c,
            verdict: Verdict::Violated(Violation::NormExceeded { norm }),
            margin: norm_margin,
            modulus: Vec::new(),
        });
    }
    let modulus = weighted_modulus(query)?;
    let mut margin = norm_margin.max(0.0);
    let mut verdict = Verdict::ConsistentWithMembership;
    for &(t, omega) in &modulus {
        let slack = c * libm::pow(t, alpha) - omega;
        margin = margin.min(slack);
        if slack < 0.0 && verdict == Verdict::ConsistentWithMembership {
            verdict = Verdict::Violated(Violation::ModulusExceeded { t, omega });
        }
    }
    Ok(ClassCertificate {
        alpha,
        c,
        verdict,
        margin,
        modulus,
    })
}
