//! Mixing densities on `[a, b]`: an evaluator plus a sup bound used as the
//! rejection-sampling envelope.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::error::{Error, Result};
use crate::family::{log_beta, xlogy, MixtureFamily};
use crate::interval::Interval;
use crate::legendre::LegendreBasis;
use crate::quadrature::{gauss_legendre, integrate_adaptive};

/// Grid size used to validate nonnegativity and the sup bound.
pub const VALIDATION_GRID: usize = 1024;

/// Tolerance on `|∫f - 1|`.
pub const MASS_TOLERANCE: f64 = 1e-8;

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Coefficients of a function in the span of `ψ_1..ψ_m`.
#[derive(Clone)]
pub struct SeriesDensity {
    pub family: MixtureFamily,
    pub basis: Arc<LegendreBasis>,
    pub coeffs: Vec<f64>,
}

impl SeriesDensity {
    pub fn eval(&self, t: f64) -> f64 {
        let m = self.coeffs.len();
        let mut stack = [0.0; 32];
        let mut heap = Vec::new();
        let psi = if m <= stack.len() {
            &mut stack[..m]
        } else {
            heap.resize(m, 0.0);
            &mut heap[..]
        };
        self.family.psi_all(&self.basis, t, psi);
        psi.iter().zip(&self.coeffs).map(|(p, c)| p * c).sum()
    }
}

#[derive(Clone)]
pub enum DensityShape {
    Uniform,
    /// `(1 - cos(2π(t-a)/(b-a)))/(b-a)`: vanishes at both ends, peak at the
    /// midpoint.
    CosineBump,
    /// `Beta(p, q)` rescaled to `[a, b]`.
    BetaShaped {
        p: f64,
        q: f64,
    },
    /// A density in `V_m`.
    InBasis(Arc<SeriesDensity>),
    Custom {
        label: String,
        eval: Evaluator,
    },
}

impl fmt::Debug for DensityShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityShape::Uniform => write!(f, "Uniform"),
            DensityShape::CosineBump => write!(f, "CosineBump"),
            DensityShape::BetaShaped { p, q } => write!(f, "BetaShaped({p}, {q})"),
            DensityShape::InBasis(s) => write!(f, "InBasis({:?})", s.coeffs),
            DensityShape::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MixingDensity {
    interval: Interval,
    shape: DensityShape,
    sup_bound: f64,
    log_norm: f64,
    exact_coeffs: Option<Vec<f64>>,
}

impl MixingDensity {
    pub fn uniform(interval: Interval) -> Self {
        Self {
            interval,
            shape: DensityShape::Uniform,
            sup_bound: 1.0 / interval.length(),
            log_norm: 0.0,
            exact_coeffs: None,
        }
    }

    pub fn cosine_bump(interval: Interval) -> Self {
        Self {
            interval,
            shape: DensityShape::CosineBump,
            sup_bound: 2.0 / interval.length(),
            log_norm: 0.0,
            exact_coeffs: None,
        }
    }

    /// `Beta(p, q)` on `[a, b]`; `p, q ≥ 1` keeps the density bounded.
    pub fn beta_shaped(interval: Interval, p: f64, q: f64) -> Result<Self> {
        if !(p >= 1.0 && q >= 1.0 && p.is_finite() && q.is_finite()) {
            return Err(Error::InvalidDensity(alloc::format!(
                "beta-shaped density needs p, q >= 1, got ({p}, {q})"
            )));
        }
        let log_norm = -(log_beta(p, q) + libm::log(interval.length()));
        let mode = if p + q > 2.0 {
            (p - 1.0) / (p + q - 2.0)
        } else {
            0.5
        };
        let peak = libm::exp(log_norm + xlogy(p - 1.0, mode) + xlogy(q - 1.0, 1.0 - mode));
        Ok(Self {
            interval,
            shape: DensityShape::BetaShaped { p, q },
            sup_bound: peak * (1.0 + 1e-12),
            log_norm,
            exact_coeffs: None,
        })
    }

    /// The density `Σ c_k ψ_k` rescaled to unit mass. Fails if the rescaled
    /// function is negative somewhere on the validation grid.
    pub fn in_basis(
        family: &MixtureFamily,
        basis: Arc<LegendreBasis>,
        coeffs: &[f64],
    ) -> Result<Self> {
        let m = coeffs.len();
        if m == 0 || m > basis.order() {
            return Err(Error::InvalidDensity(alloc::format!(
                "in-basis density needs 1..={} coefficients, got {m}",
                basis.order()
            )));
        }
        family.ensure_basis(&basis)?;
        let interval = family.theta_interval();
        let raw = SeriesDensity {
            family: family.clone(),
            basis: basis.clone(),
            coeffs: coeffs.to_vec(),
        };
        let rule = gauss_legendre(interval, (m + 32).max(96));
        let mass = rule.integrate(|t| raw.eval(t));
        if !(mass.abs() > 1e-12) {
            return Err(Error::InvalidDensity(
                "in-basis coefficients have zero mass".into(),
            ));
        }
        let coeffs: Vec<f64> = coeffs.iter().map(|c| c / mass).collect();
        let series = SeriesDensity {
            family: family.clone(),
            basis,
            coeffs: coeffs.clone(),
        };
        let grid = interval.uniform_grid(8 * VALIDATION_GRID + 1);
        let mut peak = 0.0f64;
        for &t in &grid {
            let v = series.eval(t);
            if v < 0.0 {
                return Err(Error::InvalidDensity(alloc::format!(
                    "in-basis density is negative ({v}) at t = {t}"
                )));
            }
            peak = peak.max(v);
        }
        Ok(Self {
            interval,
            shape: DensityShape::InBasis(Arc::new(series)),
            sup_bound: peak * 1.01,
            log_norm: 0.0,
            exact_coeffs: Some(coeffs),
        })
    }

    /// Arbitrary evaluator with a caller-supplied sup bound, validated on
    /// construction.
    pub fn custom<F>(interval: Interval, label: &str, sup_bound: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let d = Self {
            interval,
            shape: DensityShape::Custom {
                label: label.into(),
                eval: Arc::new(f),
            },
            sup_bound,
            log_norm: 0.0,
            exact_coeffs: None,
        };
        d.validate()?;
        Ok(d)
    }

    #[cfg(test)]
    pub(crate) fn custom_unchecked<F>(interval: Interval, sup_bound: f64, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            interval,
            shape: DensityShape::Custom {
                label: "unchecked".into(),
                eval: Arc::new(f),
            },
            sup_bound,
            log_norm: 0.0,
            exact_coeffs: None,
        }
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn shape(&self) -> &DensityShape {
        &self.shape
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// `⟨f, ψ_k⟩`, when known in closed form (in-basis densities).
    pub fn exact_coeffs(&self) -> Option<&[f64]> {
        self.exact_coeffs.as_deref()
    }

    pub fn label(&self) -> String {
        match &self.shape {
            DensityShape::Uniform => "uniform".into(),
            DensityShape::CosineBump => "cosine-bump".into(),
            DensityShape::BetaShaped { p, q } => alloc::format!("beta-shaped({p},{q})"),
            DensityShape::InBasis(s) => {
                let parts: Vec<String> = s.coeffs.iter().map(|c| alloc::format!("{c}")).collect();
                alloc::format!("in-basis({})", parts.join(","))
            }
            DensityShape::Custom { label, .. } => label.clone(),
        }
    }

    /// `f(t)`; zero outside `[a, b]`.
    pub fn eval(&self, t: f64) -> f64 {
        if !self.interval.contains(t) {
            return 0.0;
        }
        let (a, len) = (self.interval.lo(), self.interval.length());
        match &self.shape {
            DensityShape::Uniform => 1.0 / len,
            DensityShape::CosineBump => (1.0 - libm::cos(2.0 * PI * (t - a) / len)) / len,
            DensityShape::BetaShaped { p, q } => {
                let s = (t - a) / len;
                libm::exp(self.log_norm + xlogy(p - 1.0, s) + xlogy(q - 1.0, 1.0 - s))
            }
            DensityShape::InBasis(series) => series.eval(t),
            DensityShape::Custom { eval, .. } => eval(t),
        }
    }

    /// `‖f‖²` on `[a, b]` by adaptive quadrature.
    pub fn norm_sq(&self) -> f64 {
        integrate_adaptive(
            |t| {
                let v = self.eval(t);
                v * v
            },
            self.interval.lo(),
            self.interval.hi(),
            1e-14,
            1e-13,
            2000,
        )
        .0
    }

    pub fn mass(&self) -> f64 {
        integrate_adaptive(
            |t| self.eval(t),
            self.interval.lo(),
            self.interval.hi(),
            1e-14,
            1e-13,
            2000,
        )
        .0
    }

    /// Checks unit mass (within [`MASS_TOLERANCE`]) and `0 ≤ f ≤ sup_bound`
    /// on a [`VALIDATION_GRID`]-point grid.
    pub fn validate(&self) -> Result<()> {
        if !(self.sup_bound.is_finite() && self.sup_bound > 0.0) {
            return Err(Error::InvalidDensity(alloc::format!(
                "sup bound must be positive and finite, got {}",
                self.sup_bound
            )));
        }
        for t in self.interval.uniform_grid(VALIDATION_GRID) {
            let v = self.eval(t);
            if !(v >= 0.0) {
                return Err(Error::InvalidDensity(alloc::format!(
                    "f({t}) = {v} is negative"
                )));
            }
            if v > self.sup_bound {
                return Err(Error::EnvelopeViolation {
                    t,
                    value: v,
                    bound: self.sup_bound,
                });
            }
        }
        let mass = self.mass();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDensity(alloc::format!(
                "density integrates to {mass}, not 1"
            )));
        }
        Ok(())
    }
}
