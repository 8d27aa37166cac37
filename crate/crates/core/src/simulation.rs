//! Sampling from mixtures `π_f` and reproducible seeding.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::density::MixingDensity;
use crate::error::{Error, Result};
use crate::family::MixtureFamily;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replication `r` at sample size `n`.
///
/// `h₀ = splitmix64(master + γ)`, `h₁ = splitmix64(h₀ ^ n + 2γ)`,
/// `h₂ = splitmix64(h₁ ^ r + 3γ)` with `γ = 0x9E3779B97F4A7C15` and all
/// arithmetic wrapping modulo 2⁶⁴. The value is the same on every platform.
pub fn deterministic_hash(master_seed: u64, n: u64, r: u64) -> u64 {
    let h0 = splitmix64(master_seed.wrapping_add(GOLDEN_GAMMA));
    let h1 = splitmix64((h0 ^ n).wrapping_add(GOLDEN_GAMMA.wrapping_mul(2)));
    splitmix64((h1 ^ r).wrapping_add(GOLDEN_GAMMA.wrapping_mul(3)))
}

/// The generator used throughout: ChaCha8 seeded from a 64-bit value.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One draw from `f` by rejection against the uniform density on `[a, b]`
/// with envelope `f.sup_bound()`.
pub fn sample_latent<R: Rng + ?Sized>(f: &MixingDensity, rng: &mut R) -> Result<f64> {
    let iv = f.interval();
    let sup = f.sup_bound();
    loop {
        let t = iv.lo() + iv.length() * rng.random::<f64>();
        let t = t.min(iv.hi());
        let v = f.eval(t);
        if v > sup {
            return Err(Error::EnvelopeViolation {
                t,
                value: v,
                bound: sup,
            });
        }
        if rng.random::<f64>() * sup < v {
            return Ok(t);
        }
    }
}

fn check_support(family: &MixtureFamily, f: &MixingDensity) -> Result<()> {
    let (fi, ti) = (f.interval(), family.theta_interval());
    if fi != ti {
        return Err(Error::invalid(alloc::format!(
            "mixing density lives on [{}, {}] but the family parameter range is [{}, {}]",
            fi.lo(),
            fi.hi(),
            ti.lo(),
            ti.hi()
        )));
    }
    Ok(())
}

/// `n` observations `X_i ~ π_{t_i}` with `t_i ~ f`.
pub fn sample_mixture<R: Rng + ?Sized>(
    family: &MixtureFamily,
    f: &MixingDensity,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_support(family, f)?;
    let mut xs = Vec::with_capacity(n);
    for _ in 0..n {
        let t = sample_latent(f, rng)?;
        xs.push(family.sample_kernel(t, rng)?);
    }
    Ok(xs)
}

/// As [`sample_mixture`], also returning the latent parameters.
pub fn sample_mixture_with_latent<R: Rng + ?Sized>(
    family: &MixtureFamily,
    f: &MixingDensity,
    n: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_support(family, f)?;
    let mut xs = Vec::with_capacity(n);
    let mut ts = Vec::with_capacity(n);
    for _ in 0..n {
        let t = sample_latent(f, rng)?;
        xs.push(family.sample_kernel(t, rng)?);
        ts.push(t);
    }
    Ok((xs, ts))
}
