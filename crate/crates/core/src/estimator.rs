//! The projection estimator `f̂_{m,n} = Σ_{k≤m} ĉ_{n,k} ψ_k` with
//! `ĉ_{n,k} = (1/n) Σ_i Σ_{j≤k} Q_{k,j} g_j(X_i)`, i.e. `ĉ = Q ĝ` where `ĝ` is the
//! vector of empirical means of `g_1..g_m`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::density::MixingDensity;
use crate::error::{Error, Result};
use crate::family::{MixtureFamily, VarianceCondition};
use crate::legendre::{growth_lambda, LegendreBasis};
use crate::quadrature::{gauss_legendre, integrate_adaptive, Rule};
use crate::stats::NeumaierSum;

/// Running sums of `g_1(X_i)..g_m(X_i)`. Accumulators over disjoint chunks of
/// data can be merged.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    sums: Vec<NeumaierSum>,
    count: usize,
    scratch: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(m: usize) -> Self {
        Self {
            sums: alloc::vec![NeumaierSum::default(); m],
            count: 0,
            scratch: alloc::vec![0.0; m],
        }
    }

    pub fn order(&self) -> usize {
        self.sums.len()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, family: &MixtureFamily, x: f64) {
        family.g_vector(x, &mut self.scratch);
        for (s, &v) in self.sums.iter_mut().zip(&self.scratch) {
            s.add(v);
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        assert_eq!(
            self.order(),
            other.order(),
            "merging accumulators of different order"
        );
        for (s, o) in self.sums.iter_mut().zip(&other.sums) {
            s.merge(o);
        }
        self.count += other.count;
    }

    /// `ĝ_j = (1/n) Σ_i g_j(X_i)`.
    pub fn means(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.sums.iter().map(|s| s.value() / n).collect()
    }
}

/// Fitted coefficients `ĉ_{n,1..m}` with what is needed to evaluate `f̂_{m,n}`.
#[derive(Debug, Clone)]
pub struct ProjectionEstimate {
    family: MixtureFamily,
    basis: Arc<LegendreBasis>,
    c_hat: Vec<f64>,
    n: usize,
}

fn check_order(family: &MixtureFamily, basis: &LegendreBasis, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("approximation order m must be at least 1"));
    }
    if m > basis.order() {
        return Err(Error::IndexOutOfRange {
            index: m,
            order: basis.order(),
        });
    }
    if m > family.max_order() {
        return Err(Error::IndexOutOfRange {
            index: m,
            order: family.max_order(),
        });
    }
    Ok(())
}

/// `ĉ_{n,k}` for `k ≤ m` from the observations `data`.
pub fn estimate_coefficients(
    family: &MixtureFamily,
    basis: &Arc<LegendreBasis>,
    data: &[f64],
    m: usize,
) -> Result<ProjectionEstimate> {
    family.ensure_basis(basis)?;
    check_order(family, basis, m)?;
    if data.is_empty() {
        return Err(Error::invalid("cannot estimate from an empty sample"));
    }
    let mut acc = MomentAccumulator::new(m);
    for (i, &x) in data.iter().enumerate() {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::invalid(alloc::format!(
                "observation {i} = {x} is not a finite nonnegative number"
            )));
        }
        acc.push(family, x);
    }
    ProjectionEstimate::from_moments(family, basis, &acc.means(), data.len())
}

impl ProjectionEstimate {
    /// `ĉ = Q ĝ` for given moment means `ĝ_1..ĝ_m`.
    pub fn from_moments(
        family: &MixtureFamily,
        basis: &Arc<LegendreBasis>,
        g_means: &[f64],
        n: usize,
    ) -> Result<Self> {
        family.ensure_basis(basis)?;
        check_order(family, basis, g_means.len())?;
        Ok(Self {
            family: family.clone(),
            basis: basis.clone(),
            c_hat: basis.apply_q(g_means),
            n,
        })
    }

    /// An estimate with explicitly supplied coefficients (e.g. read back from
    /// a file).
    pub fn from_coefficients(
        family: &MixtureFamily,
        basis: &Arc<LegendreBasis>,
        c_hat: Vec<f64>,
        n: usize,
    ) -> Result<Self> {
        family.ensure_basis(basis)?;
        check_order(family, basis, c_hat.len())?;
        Ok(Self {
            family: family.clone(),
            basis: basis.clone(),
            c_hat,
            n,
        })
    }

    pub fn family(&self) -> &MixtureFamily {
        &self.family
    }

    pub fn basis(&self) -> &Arc<LegendreBasis> {
        &self.basis
    }

    pub fn m(&self) -> usize {
        self.c_hat.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c_hat
    }

    /// `f̂_{m,n}(t)`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        self.family.theta_interval().check(t)?;
        Ok(self.evaluate_unchecked(t))
    }

    pub(crate) fn evaluate_unchecked(&self, t: f64) -> f64 {
        let mut psi = alloc::vec![0.0; self.m()];
        self.evaluate_with(t, &mut psi)
    }

    /// Evaluation reusing a caller-provided buffer of length `m`.
    pub fn evaluate_with(&self, t: f64, psi: &mut [f64]) -> f64 {
        self.family.psi_all(&self.basis, t, psi);
        let mut acc = NeumaierSum::default();
        for (p, c) in psi.iter().zip(&self.c_hat) {
            acc.add(p * c);
        }
        acc.value()
    }

    /// `‖f̂‖² = Σ ĉ_k²` (Parseval).
    pub fn norm_sq(&self) -> f64 {
        self.c_hat.iter().map(|c| c * c).sum()
    }

    /// `‖f̂ - f‖²` by an `n_nodes`-point Gauss rule on `[a, b]`.
    pub fn integrated_squared_error(&self, f: &MixingDensity, rule: &Rule) -> f64 {
        let mut psi = alloc::vec![0.0; self.m()];
        rule.integrate(|t| {
            let d = self.evaluate_with(t, &mut psi) - f.eval(t);
            d * d
        })
    }
}

/// Exact projection of a known density onto `V_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactProjection {
    /// `c_k = ⟨f, ψ_k⟩`.
    pub coeffs: Vec<f64>,
    /// `‖f‖²`.
    pub norm_sq: f64,
    /// `‖P_{V_m} f - f‖ = √(‖f‖² - Σ c_k²)`.
    pub bias: f64,
}

impl ExactProjection {
    pub fn bias_sq(&self) -> f64 {
        self.bias * self.bias
    }
}

/// Node count used by [`project_exact`] for order `m`.
pub fn projection_nodes(m: usize) -> usize {
    (m + 32).max(96)
}

/// `c_k = ⟨f, ψ_k⟩` for `k ≤ m` and the bias norm `‖P_{V_m}f - f‖`.
pub fn project_exact(
    family: &MixtureFamily,
    basis: &LegendreBasis,
    f: &MixingDensity,
    m: usize,
) -> Result<ExactProjection> {
    family.ensure_basis(basis)?;
    check_order(family, basis, m)?;
    let rule = gauss_legendre(family.theta_interval(), projection_nodes(m));
    let mut sums = alloc::vec![NeumaierSum::default(); m];
    let mut norm = NeumaierSum::default();
    let mut psi = alloc::vec![0.0; m];
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let ft = f.eval(t);
        family.psi_all(basis, t, &mut psi);
        for (s, p) in sums.iter_mut().zip(&psi) {
            s.add(w * ft * p);
        }
        norm.add(w * ft * ft);
    }
    let coeffs: Vec<f64> = sums.iter().map(NeumaierSum::value).collect();
    let norm_sq = norm.value();
    let captured: f64 = coeffs.iter().map(|c| c * c).sum();
    let bias = libm::sqrt((norm_sq - captured).max(0.0));
    Ok(ExactProjection {
        coeffs,
        norm_sq,
        bias,
    })
}

/// `‖Σ c_k ψ_k - f‖` by direct quadrature of the squared difference; the
/// independent route to the bias reported by [`project_exact`].
pub fn bias_by_integration(
    family: &MixtureFamily,
    basis: &LegendreBasis,
    f: &MixingDensity,
    coeffs: &[f64],
) -> f64 {
    let rule = gauss_legendre(family.theta_interval(), projection_nodes(coeffs.len()));
    let mut psi = alloc::vec![0.0; coeffs.len()];
    let sq = rule.integrate(|t| {
        family.psi_all(basis, t, &mut psi);
        let p: f64 = psi.iter().zip(coeffs).map(|(a, b)| a * b).sum();
        let d = p - f.eval(t);
        d * d
    });
    libm::sqrt(sq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `m_n = A log n`.
    LogN,
    /// `m_n = A log n / log log n`.
    LogNOverLogLogN,
}

/// Deterministic choice of the approximation order as a function of `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionRule {
    pub regime: Regime,
    pub a: f64,
}

impl SelectionRule {
    pub fn new(regime: Regime, a: f64) -> Self {
        Self { regime, a }
    }

    /// Strict upper bound on `A` for this regime and family.
    ///
    /// `LogN` needs the geometric condition `Var(g_k) < C₀B^{2k}` and gives
    /// `A < 1 / (2(log B + log λ))`, `λ = r + √(1+r)`,
    /// `r = (2+a'+b')/(b'-a')`. `LogNOverLogLogN` under `Var(g_k) < C₀k^{ηk}`
    /// gives `A < 1/η`; a geometric condition implies the super-geometric one
    /// for every `η > 0`, so no bound applies there.
    pub fn upper_bound(regime: Regime, family: &MixtureFamily) -> Result<f64> {
        match (regime, family.variance_condition_params()) {
            (Regime::LogN, VarianceCondition::Geometric { b, .. }) => {
                let lambda = growth_lambda(family.target_interval());
                Ok(0.5 / (libm::log(b) + libm::log(lambda)))
            }
            (Regime::LogN, VarianceCondition::SuperGeometric { .. }) => Err(Error::InvalidA {
                a: f64::NAN,
                reason: alloc::format!(
                    "the log n rule needs a geometric variance condition, which {} does not satisfy",
                    family.name()
                ),
            }),
            (Regime::LogNOverLogLogN, VarianceCondition::SuperGeometric { eta, .. }) => {
                Ok(1.0 / eta)
            }
            (Regime::LogNOverLogLogN, VarianceCondition::Geometric { .. }) => Ok(f64::INFINITY),
        }
    }

    /// Half of the admissible bound (or `1/2` when the bound is infinite).
    pub fn default_for(regime: Regime, family: &MixtureFamily) -> Result<Self> {
        let bound = Self::upper_bound(regime, family)?;
        let a = if bound.is_finite() { 0.5 * bound } else { 0.5 };
        Ok(Self { regime, a })
    }

    pub fn label(&self) -> String {
        match self.regime {
            Regime::LogN => alloc::format!("logn:{}", self.a),
            Regime::LogNOverLogLogN => alloc::format!("loglog:{}", self.a),
        }
    }
}

/// `m_n = max(1, ⌊A log n⌋)` or `max(1, ⌊A log n / log log n⌋)`.
pub fn select_m(rule: SelectionRule, n: usize, family: &MixtureFamily) -> Result<usize> {
    if n < 3 {
        return Err(Error::invalid(alloc::format!(
            "order selection needs n >= 3, got {n}"
        )));
    }
    let bound = SelectionRule::upper_bound(rule.regime, family).map_err(|e| match e {
        Error::InvalidA { reason, .. } => Error::InvalidA { a: rule.a, reason },
        other => other,
    })?;
    if !(rule.a > 0.0 && rule.a < bound) {
        return Err(Error::InvalidA {
            a: rule.a,
            reason: alloc::format!("must satisfy 0 < A < {bound}"),
        });
    }
    let log_n = libm::log(n as f64);
    let raw = match rule.regime {
        Regime::LogN => rule.a * log_n,
        Regime::LogNOverLogLogN => rule.a * log_n / libm::log(log_n),
    };
    Ok((libm::floor(raw) as usize).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostProcess {
    Raw,
    ClipRenormalize,
}

/// An estimate optionally clipped at zero and renormalized.
#[derive(Debug, Clone)]
pub struct PostProcessed {
    estimate: ProjectionEstimate,
    mode: PostProcess,
    scale: f64,
}

impl PostProcessed {
    pub fn mode(&self) -> PostProcess {
        self.mode
    }

    /// `1/∫max(f̂, 0)` for clipped estimates, 1 for raw ones.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let v = self.estimate.evaluate(t)?;
        Ok(match self.mode {
            PostProcess::Raw => v,
            PostProcess::ClipRenormalize => v.max(0.0) * self.scale,
        })
    }
}

pub fn postprocess_density(
    estimate: &ProjectionEstimate,
    mode: PostProcess,
) -> Result<PostProcessed> {
    let scale = match mode {
        PostProcess::Raw => 1.0,
        PostProcess::ClipRenormalize => {
            let iv = estimate.family().theta_interval();
            let mut psi = alloc::vec![0.0; estimate.m()];
            let (mass, _) = integrate_adaptive(
                |t| estimate.evaluate_with(t, &mut psi).max(0.0),
                iv.lo(),
                iv.hi(),
                1e-14,
                1e-13,
                4000,
            );
            if !(mass > 0.0) {
                return Err(Error::DegenerateEstimate);
            }
            1.0 / mass
        }
    };
    Ok(PostProcessed {
        estimate: estimate.clone(),
        mode,
        scale,
    })
}
