//! Small summation and moment helpers shared by the estimator and the harness.

use alloc::vec::Vec;

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    let mut s = NeumaierSum::default();
    xs.iter().for_each(|&x| s.add(x));
    s.value() / xs.len() as f64
}

/// Unbiased sample variance (denominator `n - 1`).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let mut s = NeumaierSum::default();
    xs.iter().for_each(|&x| s.add((x - m) * (x - m)));
    s.value() / (n - 1) as f64
}

/// Standard error of the mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    libm::sqrt(sample_variance(xs) / xs.len() as f64)
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 3 {
        return f64::NAN;
    }
    let m = mean(xs);
    let mut num = NeumaierSum::default();
    let mut den = NeumaierSum::default();
    for i in 0..n {
        let d = xs[i] - m;
        den.add(d * d);
        if i + 1 < n {
            num.add(d * (xs[i + 1] - m));
        }
    }
    num.value() / den.value()
}

/// Sample covariance matrix (row-major `m×m`, denominator `n - 1`) of the
/// rows of `samples`, each of length `m`.
pub fn covariance_matrix(samples: &[Vec<f64>], m: usize) -> Vec<f64> {
    let n = samples.len();
    let mut means = alloc::vec![NeumaierSum::default(); m];
    for row in samples {
        for (acc, &v) in means.iter_mut().zip(row) {
            acc.add(v);
        }
    }
    let means: Vec<f64> = means.iter().map(|s| s.value() / n as f64).collect();
    let mut cov = alloc::vec![NeumaierSum::default(); m * m];
    for row in samples {
        for j in 0..m {
            let dj = row[j] - means[j];
            for l in 0..=j {
                cov[j * m + l].add(dj * (row[l] - means[l]));
            }
        }
    }
    let mut out = alloc::vec![0.0; m * m];
    for j in 0..m {
        for l in 0..=j {
            let v = cov[j * m + l].value() / (n as f64 - 1.0);
            out[j * m + l] = v;
            out[l * m + j] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = NeumaierSum::default();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.value(), 1.0);
    }

    #[test]
    fn variance_of_known_set() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((mean(&xs) - 2.5).abs() < 1e-15);
        assert!((sample_variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn covariance_is_symmetric() {
        let rows = alloc::vec![
            alloc::vec![1.0, 2.0],
            alloc::vec![2.0, 1.0],
            alloc::vec![3.0, 5.0]
        ];
        let c = covariance_matrix(&rows, 2);
        assert_eq!(c[1], c[2]);
        assert!((c[0] - 1.0).abs() < 1e-15);
    }
}
