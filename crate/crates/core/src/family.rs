//! Mixture families: kernel `π_t`, test functions `g_k`, moments
//! `φ_k(t) = π_t(g_k)`, and the isometry `T: L²[a,b] → L²[a',b']` with
//! `T φ_k(u) = u^{k-1}`.
//!
//! | family                 | `π_t(x)`                      | `g_k(x)`                 | `φ_k(t)`          | `[a',b']`        |
//! |------------------------|-------------------------------|--------------------------|-------------------|------------------|
//! | `ExponentialIndicator` | `t e^{-tx}`                   | `1{x > k - 1/2}`         | `e^{-(k-1/2)t}`   | `[e^{-b},e^{-a}]`|
//! | `ExponentialMoment`    | `t e^{-tx}`                   | `x^k / k!`               | `t^{-k}`          | `[1/b, 1/a]`     |
//! | `GammaShape`           | `x^{t-1} e^{-x} / Γ(t)`       | `Σ_l c̃_{k,l} x^{l-1}`    | `t^{k-1}`         | `[a, b]`         |
//! | `BetaScale(k)`         | `(k/t)(1 - x/t)^{k-1}`        | `x^{p-1} / (k β(p,k))`   | `t^{p-1}`         | `[a, b]`         |
//! | `GenericScale(π_1)`    | `π_1(x/t) / t`                | `x^{k-1} / ∫x^{k-1}π_1`  | `t^{k-1}`         | `[a, b]`         |

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::ext::{to_f64, Precision};
use crate::gamma_table::{gamma_coeff_table, GammaCoeffTable};
use crate::interval::Interval;
use crate::legendre::LegendreBasis;
use crate::quadrature::integrate_adaptive;

/// Highest `g_k` index supported by families whose test functions need
/// precomputed tables (GammaShape, GenericScale).
pub const DEFAULT_MAX_ORDER: usize = 40;

/// Growth condition on `Var(g_k(X))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceCondition {
    /// `Var(g_k(X)) < C₀ B^{2k}`.
    Geometric { c0: f64, b: f64 },
    /// `Var(g_k(X)) < C₀ k^{ηk}`.
    SuperGeometric { c0: f64, eta: f64 },
}

impl VarianceCondition {
    /// Natural log of the bound at index `k`.
    pub fn log_bound(&self, k: usize) -> f64 {
        let kf = k as f64;
        match *self {
            VarianceCondition::Geometric { c0, b } => libm::log(c0) + 2.0 * kf * libm::log(b),
            VarianceCondition::SuperGeometric { c0, eta } => {
                libm::log(c0) + eta * kf * libm::log(kf)
            }
        }
    }

    pub fn bound(&self, k: usize) -> f64 {
        libm::exp(self.log_bound(k))
    }
}

/// Shape of the unit-scale kernel `π_1` of a generic compactly supported
/// scale family, on `[0, support]`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScaleShape {
    /// Uniform on `[0, support]`.
    Uniform,
    /// `Beta(p, q)` rescaled to `[0, support]`; requires `p, q ≥ 1`.
    Beta { p: f64, q: f64 },
    /// Piecewise-linear interpolation of `(x, y)` pairs spanning
    /// `[0, support]`, renormalized to integrate to one.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
}

/// A compactly supported unit-scale kernel `π_1` with its raw moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleKernel {
    shape: ScaleShape,
    support: f64,
    log_norm: f64,
    sup: f64,
    /// `moments[k-1] = ∫ x^{k-1} π_1(x) dx` for `k = 1..=2·order`.
    moments: Vec<f64>,
}

impl ScaleKernel {
    /// Builds the kernel; raw moments are integrated numerically when
    /// `moments` is `None`. Supplied moments are indexed from `∫x^0 π_1 = 1`.
    pub fn new(shape: ScaleShape, support: f64, moments: Option<Vec<f64>>) -> Result<Self> {
        if !(support.is_finite() && support > 0.0) {
            return Err(Error::invalid(
                "scale kernel support bound must be positive",
            ));
        }
        let (log_norm, sup) = match &shape {
            ScaleShape::Uniform => (-libm::log(support), 1.0 / support),
            ScaleShape::Beta { p, q } => {
                let (p, q) = (*p, *q);
                if !(p >= 1.0 && q >= 1.0 && p.is_finite() && q.is_finite()) {
                    return Err(Error::invalid("beta kernel needs p >= 1 and q >= 1"));
                }
                let log_norm = -(log_beta(p, q) + libm::log(support));
                let mode = if p + q > 2.0 {
                    (p - 1.0) / (p + q - 2.0)
                } else {
                    0.5
                };
                let log_peak = log_norm + xlogy(p - 1.0, mode) + xlogy(q - 1.0, 1.0 - mode);
                (log_norm, libm::exp(log_peak))
            }
            ScaleShape::Tabulated { xs, ys } => {
                if xs.len() < 2 || xs.len() != ys.len() {
                    return Err(Error::invalid(
                        "tabulated kernel needs at least two (x, y) pairs",
                    ));
                }
                if xs.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::invalid("tabulated kernel abscissae must increase"));
                }
                if xs[0] != 0.0 || (xs[xs.len() - 1] - support).abs() > 1e-12 * support {
                    return Err(Error::invalid("tabulated kernel must span [0, support]"));
                }
                if ys.iter().any(|&y| !(y >= 0.0 && y.is_finite())) {
                    return Err(Error::invalid(
                        "tabulated kernel values must be finite and >= 0",
                    ));
                }
                let area: f64 = xs
                    .windows(2)
                    .zip(ys.windows(2))
                    .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
                    .sum();
                if !(area > 0.0) {
                    return Err(Error::invalid("tabulated kernel has zero mass"));
                }
                let peak = ys.iter().cloned().fold(0.0, f64::max);
                (-libm::log(area), peak / area)
            }
        };
        let mut kernel = ScaleKernel {
            shape,
            support,
            log_norm,
            sup,
            moments: Vec::new(),
        };
        let wanted = 2 * DEFAULT_MAX_ORDER;
        kernel.moments = match moments {
            Some(m) => {
                if m.len() < wanted {
                    return Err(Error::invalid(alloc::format!(
                        "scale kernel needs {wanted} raw moments, got {}",
                        m.len()
                    )));
                }
                if (m[0] - 1.0).abs() > 1e-8 || m.iter().any(|&v| !(v > 0.0)) {
                    return Err(Error::invalid(
                        "raw moments must be positive with zeroth moment 1",
                    ));
                }
                m
            }
            None => (0..wanted).map(|j| kernel.integrate_moment(j)).collect(),
        };
        Ok(kernel)
    }

    fn integrate_moment(&self, power: usize) -> f64 {
        let f = |x: f64| libm::pow(x, power as f64) * self.density(x);
        match &self.shape {
            ScaleShape::Tabulated { xs, .. } => xs
                .windows(2)
                .map(|w| integrate_adaptive(f, w[0], w[1], 0.0, 1e-14, 200).0)
                .sum(),
            _ => integrate_adaptive(f, 0.0, self.support, 0.0, 1e-14, 400).0,
        }
    }

    pub fn shape(&self) -> &ScaleShape {
        &self.shape
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    /// Upper bound of `π_1`.
    pub fn sup(&self) -> f64 {
        self.sup
    }

    /// `∫ x^{k-1} π_1(x) dx`, 1-based.
    pub fn moment(&self, k: usize) -> f64 {
        self.moments[k - 1]
    }

    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    /// `π_1(x)`.
    pub fn density(&self, x: f64) -> f64 {
        if !(0.0..=self.support).contains(&x) {
            return 0.0;
        }
        match &self.shape {
            ScaleShape::Uniform => libm::exp(self.log_norm),
            ScaleShape::Beta { p, q } => {
                let s = x / self.support;
                libm::exp(self.log_norm + xlogy(p - 1.0, s) + xlogy(q - 1.0, 1.0 - s))
            }
            ScaleShape::Tabulated { xs, ys } => {
                let i = match xs.partition_point(|&v| v <= x) {
                    0 => 0,
                    i if i >= xs.len() => xs.len() - 2,
                    i => i - 1,
                };
                let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
                (ys[i] + w * (ys[i + 1] - ys[i])) * libm::exp(self.log_norm)
            }
        }
    }

    /// One draw from `π_1` by rejection against the uniform envelope.
    pub fn sample_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if let ScaleShape::Uniform = self.shape {
            return self.support * rng.random::<f64>();
        }
        loop {
            let x = self.support * rng.random::<f64>();
            let y = self.sup * rng.random::<f64>();
            if y < self.density(x) {
                return x;
            }
        }
    }
}

/// `x·ln(y)` with `0·ln(0) = 0`.
pub(crate) fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * libm::log(y)
    }
}

pub(crate) fn log_beta(p: f64, q: f64) -> f64 {
    libm::lgamma(p) + libm::lgamma(q) - libm::lgamma(p + q)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    ExponentialIndicator,
    ExponentialMoment,
    GammaShape,
    BetaScale { k: u32 },
    GenericScale(Arc<ScaleKernel>),
}

impl FamilyKind {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::ExponentialIndicator => "exp-indicator",
            FamilyKind::ExponentialMoment => "exp-moment",
            FamilyKind::GammaShape => "gamma-shape",
            FamilyKind::BetaScale { .. } => "beta-scale",
            FamilyKind::GenericScale(_) => "generic-scale",
        }
    }
}

/// A mixture family on `Θ = [a, b]` with its isometry onto `[a', b']`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFamily {
    kind: FamilyKind,
    theta: Interval,
    target: Interval,
    variance: VarianceCondition,
    gamma: Option<Arc<GammaCoeffTable>>,
}

impl MixtureFamily {
    pub fn new(kind: FamilyKind, theta: Interval) -> Result<Self> {
        let (a, b) = (theta.lo(), theta.hi());
        if !(a > 0.0) {
            return Err(Error::invalid(alloc::format!(
                "mixture families need a > 0, got a = {a}"
            )));
        }
        let target = match kind {
            FamilyKind::ExponentialIndicator => Interval::new(libm::exp(-b), libm::exp(-a))?,
            FamilyKind::ExponentialMoment => Interval::new(1.0 / b, 1.0 / a)?,
            _ => theta,
        };
        let gamma = match kind {
            FamilyKind::GammaShape => Some(Arc::new(gamma_coeff_table(DEFAULT_MAX_ORDER)?)),
            _ => None,
        };
        if let FamilyKind::BetaScale { k } = kind {
            if k == 0 {
                return Err(Error::invalid("beta-scale family needs k >= 1"));
            }
        }
        let variance = default_variance_condition(&kind, theta);
        Ok(Self {
            kind,
            theta,
            target,
            variance,
            gamma,
        })
    }

    pub fn exponential_indicator(theta: Interval) -> Result<Self> {
        Self::new(FamilyKind::ExponentialIndicator, theta)
    }

    pub fn exponential_moment(theta: Interval) -> Result<Self> {
        Self::new(FamilyKind::ExponentialMoment, theta)
    }

    pub fn gamma_shape(theta: Interval) -> Result<Self> {
        Self::new(FamilyKind::GammaShape, theta)
    }

    pub fn beta_scale(theta: Interval, k: u32) -> Result<Self> {
        Self::new(FamilyKind::BetaScale { k }, theta)
    }

    pub fn generic_scale(theta: Interval, kernel: ScaleKernel) -> Result<Self> {
        Self::new(FamilyKind::GenericScale(Arc::new(kernel)), theta)
    }

    /// Replaces the variance condition, e.g. to supply a different `η` for
    /// `ExponentialMoment`.
    pub fn with_variance_condition(mut self, condition: VarianceCondition) -> Self {
        self.variance = condition;
        self
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// `Θ = [a, b]`.
    pub fn theta_interval(&self) -> Interval {
        self.theta
    }

    /// `[a', b']`.
    pub fn target_interval(&self) -> Interval {
        self.target
    }

    pub fn variance_condition_params(&self) -> VarianceCondition {
        self.variance
    }

    /// Largest `k` for which `g_k` is available.
    pub fn max_order(&self) -> usize {
        match self.kind {
            FamilyKind::GammaShape | FamilyKind::GenericScale(_) => DEFAULT_MAX_ORDER,
            _ => usize::MAX,
        }
    }

    fn check_parameter(&self, t: f64) -> Result<()> {
        if self.theta.contains(t) {
            Ok(())
        } else {
            Err(Error::ParameterOutOfRange {
                t,
                lo: self.theta.lo(),
                hi: self.theta.hi(),
            })
        }
    }

    /// `π_t(x)`; zero outside the support.
    pub fn kernel_density(&self, t: f64, x: f64) -> Result<f64> {
        self.check_parameter(t)?;
        if x < 0.0 {
            return Ok(0.0);
        }
        Ok(match &self.kind {
            FamilyKind::ExponentialIndicator | FamilyKind::ExponentialMoment => {
                t * libm::exp(-t * x)
            }
            FamilyKind::GammaShape => {
                if x == 0.0 {
                    if t == 1.0 {
                        1.0
                    } else if t > 1.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    libm::exp((t - 1.0) * libm::log(x) - x - libm::lgamma(t))
                }
            }
            FamilyKind::BetaScale { k } => {
                if x > t {
                    0.0
                } else {
                    let k = *k as f64;
                    k / t * libm::pow(1.0 - x / t, k - 1.0)
                }
            }
            FamilyKind::GenericScale(kernel) => kernel.density(x / t) / t,
        })
    }

    /// Inverse-CDF draw from `π_t` given a uniform `u ∈ [0, 1)`, for the
    /// families that sample this way (exponential and beta-scale).
    pub fn kernel_quantile(&self, t: f64, u: f64) -> Result<Option<f64>> {
        self.check_parameter(t)?;
        Ok(match self.kind {
            FamilyKind::ExponentialIndicator | FamilyKind::ExponentialMoment => {
                Some(-libm::log(1.0 - u) / t)
            }
            FamilyKind::BetaScale { k } => Some(t * (1.0 - libm::pow(1.0 - u, 1.0 / k as f64))),
            _ => None,
        })
    }

    /// One draw from `π_t`.
    pub fn sample_kernel<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Result<f64> {
        self.check_parameter(t)?;
        Ok(match &self.kind {
            FamilyKind::ExponentialIndicator | FamilyKind::ExponentialMoment => {
                -libm::log(1.0 - rng.random::<f64>()) / t
            }
            FamilyKind::BetaScale { k } => {
                let u: f64 = rng.random();
                t * (1.0 - libm::pow(1.0 - u, 1.0 / *k as f64))
            }
            FamilyKind::GammaShape => {
                let dist = rand_distr::Gamma::new(t, 1.0)
                    .map_err(|e| Error::invalid(alloc::format!("gamma sampler: {e}")))?;
                dist.sample(rng)
            }
            FamilyKind::GenericScale(kernel) => t * kernel.sample_unit(rng),
        })
    }

    /// `g_k(x)`, 1-based.
    ///
    /// # Panics
    /// If `k == 0` or `k > self.max_order()`.
    pub fn g(&self, k: usize, x: f64) -> f64 {
        assert!(
            k >= 1 && k <= self.max_order(),
            "g_k index {k} out of range"
        );
        match &self.kind {
            FamilyKind::ExponentialIndicator => {
                if x > k as f64 - 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            FamilyKind::ExponentialMoment => (1..=k).fold(1.0, |acc, j| acc * x / j as f64),
            FamilyKind::GammaShape => {
                let row = self.gamma.as_ref().expect("gamma table").row(k);
                row.iter().rev().fold(0.0, |acc, &c| acc * x + c as f64)
            }
            FamilyKind::BetaScale { k: shape } => {
                beta_scale_weight(k, *shape) * libm::pow(x, (k - 1) as f64)
            }
            FamilyKind::GenericScale(kernel) => libm::pow(x, (k - 1) as f64) / kernel.moment(k),
        }
    }

    /// `g_1(x), …, g_n(x)` into `out` (`n = out.len()`).
    pub fn g_vector(&self, x: f64, out: &mut [f64]) {
        let n = out.len();
        assert!(n <= self.max_order(), "g_k index {n} out of range");
        match &self.kind {
            FamilyKind::ExponentialIndicator => {
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot = if x > j as f64 + 0.5 { 1.0 } else { 0.0 };
                }
            }
            FamilyKind::ExponentialMoment => {
                let mut acc = 1.0;
                for (j, slot) in out.iter_mut().enumerate() {
                    acc *= x / (j + 1) as f64;
                    *slot = acc;
                }
            }
            FamilyKind::BetaScale { k: shape } => {
                let mut power = 1.0;
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot = beta_scale_weight(j + 1, *shape) * power;
                    power *= x;
                }
            }
            _ => {
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot = self.g(j + 1, x);
                }
            }
        }
    }

    /// `φ_k(t) = π_t(g_k)` in closed form.
    pub fn phi(&self, k: usize, t: f64) -> Result<f64> {
        if k == 0 {
            return Err(Error::IndexOutOfRange { index: 0, order: 0 });
        }
        self.check_parameter(t)?;
        Ok(self.phi_unchecked(k, t))
    }

    fn phi_unchecked(&self, k: usize, t: f64) -> f64 {
        match self.kind {
            FamilyKind::ExponentialIndicator => libm::exp(-(k as f64 - 0.5) * t),
            FamilyKind::ExponentialMoment => libm::pow(t, -(k as f64)),
            _ => libm::pow(t, (k - 1) as f64),
        }
    }

    /// `(σ(u), τ(u))` with `Tf(u) = σ(u) f(τ(u))`, `u ∈ [a', b']`.
    pub fn forward_map(&self, u: f64) -> (f64, f64) {
        match self.kind {
            FamilyKind::ExponentialIndicator => (1.0 / libm::sqrt(u), -libm::log(u)),
            FamilyKind::ExponentialMoment => (1.0 / u, 1.0 / u),
            _ => (1.0, u),
        }
    }

    /// `(ρ(t), κ(t))` with `T⁻¹h(t) = ρ(t) h(κ(t))`, `t ∈ [a, b]`.
    pub fn inverse_map(&self, t: f64) -> (f64, f64) {
        match self.kind {
            FamilyKind::ExponentialIndicator => {
                let e = libm::exp(-t);
                (libm::sqrt(e), e)
            }
            FamilyKind::ExponentialMoment => (1.0 / t, 1.0 / t),
            _ => (1.0, t),
        }
    }

    /// `Tf` as a function on `[a', b']`.
    pub fn apply_t<'a, F>(&'a self, f: F) -> impl Fn(f64) -> f64 + 'a
    where
        F: Fn(f64) -> f64 + 'a,
    {
        move |u| {
            let (sigma, tau) = self.forward_map(u);
            sigma * f(tau)
        }
    }

    /// `T⁻¹h` as a function on `[a, b]`.
    pub fn apply_t_inverse<'a, H>(&'a self, h: H) -> impl Fn(f64) -> f64 + 'a
    where
        H: Fn(f64) -> f64 + 'a,
    {
        move |t| {
            let (rho, kappa) = self.inverse_map(t);
            rho * h(kappa)
        }
    }

    fn check_basis(&self, basis: &LegendreBasis) -> Result<()> {
        let b = basis.interval();
        let t = self.target;
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-14 * x.abs().max(y.abs()).max(1.0);
        if close(b.lo(), t.lo()) && close(b.hi(), t.hi()) {
            Ok(())
        } else {
            Err(Error::BasisMismatch {
                basis_lo: b.lo(),
                basis_hi: b.hi(),
                target_lo: t.lo(),
                target_hi: t.hi(),
            })
        }
    }

    pub fn ensure_basis(&self, basis: &LegendreBasis) -> Result<()> {
        self.check_basis(basis)
    }

    /// `ψ_1(t), …, ψ_n(t)` with `ψ_k = T⁻¹ p_k`, `n = out.len()`. No range
    /// check on `t`.
    pub fn psi_all(&self, basis: &LegendreBasis, t: f64, out: &mut [f64]) {
        let (rho, kappa) = self.inverse_map(t);
        basis.eval_all(kappa, out);
        for v in out.iter_mut() {
            *v *= rho;
        }
    }

    /// `ψ_k(t) = Σ_j Q_{k,j} φ_j(t)` summed at the basis' extended precision.
    /// Only the `φ_j(t)` values themselves are rounded to `f64`.
    pub fn psi_via_moments(&self, basis: &LegendreBasis, k: usize, t: f64) -> Result<f64> {
        self.check_basis(basis)?;
        self.check_parameter(t)?;
        if k == 0 || k > basis.order() {
            return Err(Error::IndexOutOfRange {
                index: k,
                order: basis.order(),
            });
        }
        let prec = Precision::from_digits(basis.precision_digits());
        let mut acc = prec.zero();
        for (j, q) in basis.q_row_ext(k).iter().enumerate() {
            acc += q * prec.lift(self.phi_unchecked(j + 1, t));
        }
        Ok(to_f64(&acc))
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            FamilyKind::BetaScale { k } => alloc::format!(
                "beta-scale(k={k}) on [{}, {}]",
                self.theta.lo(),
                self.theta.hi()
            ),
            kind => alloc::format!(
                "{} on [{}, {}]",
                kind.name(),
                self.theta.lo(),
                self.theta.hi()
            ),
        }
    }
}

/// `1 / (k β(p, k)) = C(p + k - 1, k)`.
fn beta_scale_weight(p: usize, k: u32) -> f64 {
    let k = k as usize;
    // C(p+k-1, p-1) built as a running product, exact while it fits in 2^53.
    let mut c = 1.0;
    for i in 1..p {
        c = c * (k + i) as f64 / i as f64;
    }
    c
}

/// `exp(max_{1 ≤ k ≤ cap} f(k))`.
fn sup_exp<F: Fn(usize) -> f64>(cap: usize, f: F) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for k in 1..=cap {
        best = best.max(f(k));
    }
    libm::exp(best)
}

/// Default exponent `η` for the `ExponentialMoment` super-geometric condition.
pub const EXPONENTIAL_MOMENT_DEFAULT_ETA: f64 = 1.0;

fn default_variance_condition(kind: &FamilyKind, theta: Interval) -> VarianceCondition {
    let (a, b) = (theta.lo(), theta.hi());
    match kind {
        FamilyKind::ExponentialIndicator => VarianceCondition::Geometric { c0: 1.0, b: 1.0 },
        FamilyKind::ExponentialMoment => {
            // E[g_k(X)²] = (2k)!/(k!)² · E[θ^{-2k}] ≤ (2k)!/(k!)² a^{-2k}.
            let eta = EXPONENTIAL_MOMENT_DEFAULT_ETA;
            let c0 = sup_exp(2000, |k| {
                let kf = k as f64;
                libm::lgamma(2.0 * kf + 1.0)
                    - 2.0 * libm::lgamma(kf + 1.0)
                    - 2.0 * kf * libm::log(a)
                    - eta * kf * libm::log(kf)
            });
            VarianceCondition::SuperGeometric { c0, eta }
        }
        FamilyKind::GammaShape => {
            // π_f(g_k²) ≤ (k!)² (1 + Γ(b + 2k - 2)/Γ(b)).
            let eta = 4.0;
            let c0 = sup_exp(2000, |k| {
                let kf = k as f64;
                let ratio = libm::lgamma(b + 2.0 * kf - 2.0) - libm::lgamma(b);
                2.0 * libm::lgamma(kf + 1.0) + log1p_exp(ratio) - eta * kf * libm::log(kf)
            });
            VarianceCondition::SuperGeometric { c0, eta }
        }
        FamilyKind::BetaScale { k } => {
            // E[g_p²] ≤ max(1,b)^{2p-2} · kβ(2p-1,k) / (kβ(p,k))².
            let kf = *k as f64;
            let big_b = b.max(1.0) * kf;
            let c0 = sup_exp(2000, |p| {
                let pf = p as f64;
                (2.0 * pf - 2.0) * libm::log(b.max(1.0))
                    + libm::log(kf)
                    + log_beta(2.0 * pf - 1.0, kf)
                    - 2.0 * (libm::log(kf) + log_beta(pf, kf))
                    - 2.0 * pf * libm::log(big_b)
            });
            VarianceCondition::Geometric { c0, b: big_b }
        }
        FamilyKind::GenericScale(kernel) => {
            // E[g_k²] ≤ max(1,b)^{2k-2} M_{2k-1} / M_k², with M_j = ∫x^{j-1}π_1.
            let mean = kernel.moment(2);
            let big_b = (b.max(1.0) * kernel.support() / mean).max(1.0);
            let c0 = sup_exp(DEFAULT_MAX_ORDER, |k| {
                let kf = k as f64;
                (2.0 * kf - 2.0) * libm::log(b.max(1.0)) + libm::log(kernel.moment(2 * k - 1))
                    - 2.0 * libm::log(kernel.moment(k))
                    - 2.0 * kf * libm::log(big_b)
            });
            VarianceCondition::Geometric { c0, b: big_b }
        }
    }
}

/// `ln(1 + e^x)`.
fn log1p_exp(x: f64) -> f64 {
    if x > 30.0 {
        x + libm::exp(-x)
    } else {
        libm::log1p(libm::exp(x))
    }
}
