use crate::error::{Error, Result};

/// A compact interval `[lo, hi]` with finite endpoints and `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Midpoint `μ`.
    #[inline]
    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Half-length `δ`.
    #[inline]
    pub fn half_length(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    #[inline]
    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi
    }

    pub fn check(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::PointOutsideInterval {
                t,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    /// `n` equally spaced points including both endpoints.
    pub fn uniform_grid(&self, n: usize) -> alloc::vec::Vec<f64> {
        match n {
            0 => alloc::vec::Vec::new(),
            1 => alloc::vec![self.center()],
            _ => {
                let step = self.length() / (n - 1) as f64;
                (0..n)
                    .map(|i| {
                        if i + 1 == n {
                            self.hi
                        } else {
                            self.lo + step * i as f64
                        }
                    })
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn grid_hits_endpoints() {
        let iv = Interval::new(1.0, 2.0).unwrap();
        let g = iv.uniform_grid(512);
        assert_eq!(g.len(), 512);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[511], 2.0);
    }
}
