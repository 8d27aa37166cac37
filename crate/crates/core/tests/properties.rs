use std::sync::Arc;

use mixdens_core::quadrature::{gauss_legendre, integrate_adaptive, integrate_to_infinity};
use mixdens_core::simulation::{rng_from_seed, sample_mixture};
use mixdens_core::{
    build_basis, estimate_coefficients, project_exact, Interval, LegendreBasis, MixingDensity,
    MixtureFamily,
};
use proptest::prelude::*;

fn iv(a: f64, b: f64) -> Interval {
    Interval::new(a, b).unwrap()
}

fn families(theta: Interval) -> Vec<MixtureFamily> {
    vec![
        MixtureFamily::exponential_indicator(theta).unwrap(),
        MixtureFamily::exponential_moment(theta).unwrap(),
        MixtureFamily::gamma_shape(theta).unwrap(),
        MixtureFamily::beta_scale(theta, 2).unwrap(),
    ]
}

/// Orthonormal polynomials by modified Gram-Schmidt on monomials, applied
/// twice, with inner products from a Gauss rule.
fn gram_schmidt(interval: Interval, m: usize) -> Vec<Vec<f64>> {
    let rule = gauss_legendre(interval, m + 8);
    let ip = |p: &[f64], q: &[f64]| {
        rule.integrate(|t| {
            let ev = |c: &[f64]| c.iter().rev().fold(0.0, |acc, &v| acc * t + v);
            ev(p) * ev(q)
        })
    };
    let mut out: Vec<Vec<f64>> = Vec::new();
    for k in 0..m {
        let mut v = vec![0.0; m];
        v[k] = 1.0;
        for _ in 0..2 {
            for u in &out {
                let c = ip(&v, u);
                for (a, b) in v.iter_mut().zip(u) {
                    *a -= c * b;
                }
            }
        }
        let n = ip(&v, &v).sqrt();
        for a in v.iter_mut() {
            *a /= n;
        }
        out.push(v);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn q_matches_gram_schmidt(lo in -2.0f64..2.0, len in 0.5f64..4.0, m in 1usize..=6) {
        let interval = iv(lo, lo + len);
        let basis = build_basis(interval, m, 50).unwrap();
        let oracle = gram_schmidt(interval, m);
        for k in 1..=m {
            let scale = oracle[k - 1].iter().fold(1.0f64, |a, b| a.max(b.abs()));
            for l in 1..=k {
                let got = basis.q(k, l);
                let want = oracle[k - 1][l - 1];
                prop_assert!((got - want).abs() < 1e-10 * scale, "k={} l={} {} vs {}", k, l, got, want);
            }
        }
    }

    #[test]
    fn recurrence_matches_horner(lo in -2.0f64..2.0, len in 0.5f64..4.0, s in 0.0f64..=1.0) {
        let interval = iv(lo, lo + len);
        let basis = build_basis(interval, 10, 50).unwrap();
        let u = lo + s * len;
        let mut fast = vec![0.0; 10];
        basis.eval_all(u, &mut fast);
        for k in 1..=10 {
            let slow = basis.eval_poly(k, u).unwrap();
            prop_assert!((fast[k - 1] - slow).abs() < 1e-11 * (1.0 + slow.abs()));
        }
    }

    #[test]
    fn isometry_preserves_inner_products(
        a in 0.5f64..2.0,
        len in 0.3f64..2.0,
        c1 in -1.0f64..1.0,
        c2 in -1.0f64..1.0,
    ) {
        let theta = iv(a, a + len);
        let f = move |t: f64| (c1 * t).exp() + t * t;
        let h = move |t: f64| (c2 * t).sin() + 1.0;
        for fam in families(theta) {
            let direct = gauss_legendre(theta, 64).integrate(|t| f(t) * h(t));
            let tf = fam.apply_t(f);
            let th = fam.apply_t(h);
            let target = fam.target_interval();
            let (mapped, _) = integrate_adaptive(|u| tf(u) * th(u), target.lo(), target.hi(), 1e-13, 1e-12, 2000);
            prop_assert!((direct - mapped).abs() < 1e-9 * (1.0 + direct.abs()), "{}: {} vs {}", fam.name(), direct, mapped);
            // T⁻¹ undoes T.
            let back = fam.apply_t_inverse(fam.apply_t(f));
            let t = a + 0.37 * len;
            prop_assert!((back(t) - f(t)).abs() < 1e-12 * (1.0 + f(t).abs()));
        }
    }

    #[test]
    fn psi_paths_agree(a in 0.5f64..2.0, len in 0.3f64..2.0, s in 0.0f64..=1.0) {
        let theta = iv(a, a + len);
        let t = a + s * len;
        for fam in families(theta) {
            let basis = build_basis(fam.target_interval(), 8, 50).unwrap();
            let mut psi = vec![0.0; 8];
            fam.psi_all(&basis, t, &mut psi);
            for k in 1..=8 {
                let via = fam.psi_via_moments(&basis, k, t).unwrap();
                let scale: f64 = basis.q_row(k).iter().map(|q| q.abs()).sum::<f64>()
                    * (1..=k).map(|j| fam.phi(j, t).unwrap().abs()).fold(0.0, f64::max);
                prop_assert!((psi[k - 1] - via).abs() < 1e-12 * scale.max(1.0), "{} k={}", fam.name(), k);
            }
        }
    }

    #[test]
    fn estimator_is_linear_in_the_empirical_measure(seed in 0u64..1000, n1 in 5usize..200, n2 in 5usize..200) {
        let theta = iv(1.0, 2.0);
        let f = MixingDensity::cosine_bump(theta);
        for fam in families(theta) {
            let basis = Arc::new(build_basis(fam.target_interval(), 5, 50).unwrap());
            let mut rng = rng_from_seed(seed);
            let d1 = sample_mixture(&fam, &f, n1, &mut rng).unwrap();
            let d2 = sample_mixture(&fam, &f, n2, &mut rng).unwrap();
            let all: Vec<f64> = d1.iter().chain(&d2).copied().collect();
            let e1 = estimate_coefficients(&fam, &basis, &d1, 5).unwrap();
            let e2 = estimate_coefficients(&fam, &basis, &d2, 5).unwrap();
            let e = estimate_coefficients(&fam, &basis, &all, 5).unwrap();
            let n = (n1 + n2) as f64;
            for k in 0..5 {
                let want = (n1 as f64 * e1.coefficients()[k] + n2 as f64 * e2.coefficients()[k]) / n;
                let scale = e1.coefficients()[k].abs().max(e2.coefficients()[k].abs()).max(1.0);
                prop_assert!((e.coefficients()[k] - want).abs() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn parseval(seed in 0u64..1000) {
        let theta = iv(1.0, 2.0);
        let f = MixingDensity::cosine_bump(theta);
        for fam in families(theta) {
            let basis = Arc::new(build_basis(fam.target_interval(), 4, 50).unwrap());
            let data = sample_mixture(&fam, &f, 50, &mut rng_from_seed(seed)).unwrap();
            let est = estimate_coefficients(&fam, &basis, &data, 4).unwrap();
            let quad = gauss_legendre(theta, 96).integrate(|t| est.evaluate(t).unwrap().powi(2));
            prop_assert!((quad - est.norm_sq()).abs() < 1e-9 * (1.0 + quad), "{}: {} vs {}", fam.name(), quad, est.norm_sq());
        }
    }

    #[test]
    fn densities_in_span_are_recovered(c2 in -0.2f64..0.2, c3 in -0.2f64..0.2) {
        let theta = iv(1.0, 3.0);
        for fam in families(theta) {
            let basis = Arc::new(build_basis(fam.target_interval(), 6, 50).unwrap());
            let c1 = basis_mass_coefficient(&fam, &basis);
            let f = MixingDensity::in_basis(&fam, basis.clone(), &[c1, c2, c3]).unwrap();
            let exact = f.exact_coeffs().unwrap().to_vec();
            let p = project_exact(&fam, &basis, &f, 6).unwrap();
            for (k, c) in p.coeffs.iter().enumerate() {
                let want = exact.get(k).copied().unwrap_or(0.0);
                prop_assert!((c - want).abs() < 1e-10, "{} k={} {} vs {}", fam.name(), k, c, want);
            }
            prop_assert!(p.bias < 1e-6);
        }
    }
}

/// A leading coefficient large enough to dominate small perturbations.
fn basis_mass_coefficient(fam: &MixtureFamily, basis: &LegendreBasis) -> f64 {
    let theta = fam.theta_interval();
    let mut psi = vec![0.0; 1];
    let rule = gauss_legendre(theta, 64);
    let mut lo = f64::INFINITY;
    for &t in &rule.nodes {
        fam.psi_all(basis, t, &mut psi);
        lo = lo.min(psi[0].abs());
    }
    2.0 / lo
}

fn moment_integral(fam: &MixtureFamily, k: usize, t: f64) -> f64 {
    let integrand = |x: f64| fam.g(k, x) * fam.kernel_density(t, x).unwrap();
    match fam.name() {
        "exp-indicator" => {
            integrate_to_infinity(|x| fam.kernel_density(t, x).unwrap(), k as f64 - 0.5, 1e-15)
        }
        "beta-scale" => integrate_adaptive(integrand, 0.0, t, 1e-15, 1e-14, 4000).0,
        _ => integrate_to_infinity(integrand, 0.0, 1e-15),
    }
}

#[test]
fn moment_identities_low_order() {
    let theta = iv(1.0, 2.0);
    for fam in families(theta) {
        for &t in &[1.0, 1.25, 1.6, 2.0] {
            for k in 1..=8 {
                let got = moment_integral(&fam, k, t);
                let want = fam.phi(k, t).unwrap();
                assert!(
                    (got - want).abs() < 1e-8 * (1.0 + want.abs()),
                    "{} k={k} t={t}: {got} vs {want}",
                    fam.name()
                );
            }
        }
    }
}

fn ks_statistic(mut xs: Vec<f64>, density: impl Fn(f64) -> f64, lower: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut cdf = 0.0;
    let mut prev = lower;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        cdf += integrate_adaptive(&density, prev, x, 1e-14, 1e-12, 500).0;
        prev = x;
        d = d
            .max((cdf - i as f64 / n).abs())
            .max((cdf - (i + 1) as f64 / n).abs());
    }
    d
}

#[test]
fn kernel_samplers_pass_ks() {
    let theta = iv(1.0, 2.0);
    let n = 2000;
    let crit = 1.63 / (n as f64).sqrt();
    for fam in families(theta) {
        for (i, &t) in [1.0, 1.5, 2.0].iter().enumerate() {
            let mut rng = rng_from_seed(100 + i as u64);
            let xs: Vec<f64> = (0..n)
                .map(|_| fam.sample_kernel(t, &mut rng).unwrap())
                .collect();
            let d = ks_statistic(xs, |x| fam.kernel_density(t, x).unwrap(), 0.0);
            assert!(d < crit, "{} t={t}: D={d}", fam.name());
        }
    }
}

#[test]
fn narrow_mixing_density_acts_like_point_mass() {
    let theta = iv(1.0, 2.0);
    let f = MixingDensity::beta_shaped(theta, 2000.0, 2000.0).unwrap();
    let n = 2000;
    let crit = 1.63 / (n as f64).sqrt();
    for fam in families(theta) {
        let xs = sample_mixture(&fam, &f, n, &mut rng_from_seed(9)).unwrap();
        let d = ks_statistic(xs, |x| fam.kernel_density(1.5, x).unwrap(), 0.0);
        assert!(d < crit, "{}: D={d}", fam.name());
    }
}
