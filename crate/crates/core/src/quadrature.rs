//! Gauss–Legendre rules and an adaptive Gauss–Kronrod integrator.

use alloc::vec::Vec;

use crate::interval::Interval;
use crate::stats::NeumaierSum;

/// A quadrature rule: `∫ f ≈ Σ w_i f(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let mut acc = NeumaierSum::default();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(x));
        }
        acc.value()
    }
}

/// Legendre `P_n(x)` and `P'_n(x)` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre nodes (ascending) and weights on `[-1, 1]`.
pub fn gauss_legendre_reference(n: usize) -> Rule {
    assert!(n >= 1, "a Gauss rule needs at least one node");
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi-type initial guess for the i-th largest root.
        let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Gauss–Legendre rule with `n` nodes mapped affinely onto `interval`.
pub fn gauss_legendre(interval: Interval, n: usize) -> Rule {
    let reference = gauss_legendre_reference(n);
    let mid = interval.center();
    let half = interval.half_length();
    Rule {
        nodes: reference.nodes.iter().map(|&x| mid + half * x).collect(),
        weights: reference.weights.iter().map(|&w| half * w).collect(),
    }
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (positive half).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod_15<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut gauss = fc * WG[3];
    let mut kronrod = fc * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over `[lo, hi]`.
///
/// Bisects the worst interval until the summed error estimate drops below
/// `max(abs_tol, rel_tol·|I|)` or `max_intervals` is reached. Returns the
/// estimate and the error estimate.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> (f64, f64) {
    struct Piece {
        lo: f64,
        hi: f64,
        value: f64,
        error: f64,
    }
    let (value, error) = kronrod_15(&mut f, lo, hi);
    let mut pieces = alloc::vec![Piece {
        lo,
        hi,
        value,
        error
    }];
    loop {
        let mut total = NeumaierSum::default();
        let mut err = 0.0;
        for p in &pieces {
            total.add(p.value);
            err += p.error;
        }
        let total = total.value();
        if err <= abs_tol.max(rel_tol * total.abs()) || pieces.len() >= max_intervals {
            return (total, err);
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        if !(mid > p.lo && mid < p.hi) {
            // Interval exhausted at machine resolution.
            pieces.push(Piece { error: 0.0, ..p });
            continue;
        }
        let (v1, e1) = kronrod_15(&mut f, p.lo, mid);
        let (v2, e2) = kronrod_15(&mut f, mid, p.hi);
        pieces.push(Piece {
            lo: p.lo,
            hi: mid,
            value: v1,
            error: e1,
        });
        pieces.push(Piece {
            lo: mid,
            hi: p.hi,
            value: v2,
            error: e2,
        });
    }
}

/// Integral over `[lo, ∞)`, summing adaptive pieces on doubling intervals
/// until a piece contributes less than `tol` in absolute value twice in a row.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, lo: f64, tol: f64) -> f64 {
    let mut total = NeumaierSum::default();
    let mut left = lo;
    let mut width = 1.0;
    let mut quiet = 0;
    for _ in 0..200 {
        let right = left + width;
        let (v, _) = integrate_adaptive(&mut f, left, right, tol * 1e-3, 1e-15, 400);
        total.add(v);
        if v.abs() < tol * 1e-3 {
            quiet += 1;
            if quiet >= 2 {
                break;
            }
        } else {
            quiet = 0;
        }
        left = right;
        width *= 2.0;
    }
    total.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_node_is_midpoint() {
        let r = gauss_legendre_reference(1);
        assert_eq!(r.nodes, [0.0]);
        assert!((r.weights[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_nodes() {
        let r = gauss_legendre_reference(2);
        let x = 1.0 / libm::sqrt(3.0);
        assert!((r.nodes[0] + x).abs() < 1e-15);
        assert!((r.nodes[1] - x).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
        assert!((r.weights[1] - 1.0).abs() < 1e-15);
        // exact on t^3 and t^2
        assert!(r.integrate(|t| t * t * t).abs() < 1e-15);
        assert!((r.integrate(|t| t * t) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mapped_two_nodes() {
        let r = gauss_legendre(Interval::new(0.0, 2.0).unwrap(), 2);
        let x = 1.0 / libm::sqrt(3.0);
        assert!((r.nodes[0] - (1.0 - x)).abs() < 1e-15);
        assert!((r.nodes[1] - (1.0 + x)).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_up_to_degree_2n_minus_1() {
        for n in [3usize, 10, 37, 80] {
            let r = gauss_legendre_reference(n);
            for d in 0..(2 * n) {
                let got = r.integrate(|t| libm::pow(t, d as f64));
                let want = if d % 2 == 1 {
                    0.0
                } else {
                    2.0 / (d as f64 + 1.0)
                };
                assert!(
                    (got - want).abs() < 1e-13,
                    "n={n} d={d} got {got} want {want}"
                );
            }
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13);
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn adaptive_handles_sqrt_singularity() {
        let (v, _) = integrate_adaptive(libm::sqrt, 0.0, 1.0, 1e-13, 1e-13, 1000);
        assert!((v - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn semi_infinite_exponential() {
        let v = integrate_to_infinity(|x| 2.0 * libm::exp(-2.0 * x), 0.0, 1e-12);
        assert!((v - 1.0).abs() < 1e-12);
    }
}
