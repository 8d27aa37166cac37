//! Extended-precision helpers on top of `dashu-float`.
//!
//! Legendre coefficients on short intervals away from the origin grow like
//! `λ^k` while the polynomials stay `O(1)` on the interval, so both the
//! recurrence and any evaluation in the monomial basis need far more than 53
//! bits.

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

pub type Big = FBig<HalfEven, 2>;

/// Working precision for extended arithmetic, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Precision {
    bits: usize,
    digits: u32,
}

impl Precision {
    pub fn from_digits(digits: u32) -> Self {
        // log2(10) ≈ 3.3219; a few guard bits on top.
        let bits = (digits as f64 * core::f64::consts::LOG2_10) as usize + 8;
        Self { bits, digits }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// Exact conversion of an `f64` followed by widening to this precision.
    pub fn lift(&self, x: f64) -> Big {
        Big::try_from(x)
            .expect("finite f64")
            .with_precision(self.bits)
            .value()
    }

    pub fn int(&self, x: i64) -> Big {
        Big::from(x).with_precision(self.bits).value()
    }

    pub fn zero(&self) -> Big {
        self.int(0)
    }
}

pub fn to_f64(x: &Big) -> f64 {
    x.to_f64().value()
}

/// Horner evaluation of `Σ_l coeffs[l] t^l` in extended precision.
pub fn horner(coeffs: &[Big], t: &Big) -> Big {
    let mut iter = coeffs.iter().rev();
    let mut acc = match iter.next() {
        Some(c) => c.clone(),
        None => return Big::ZERO,
    };
    for c in iter {
        acc = &acc * t + c;
    }
    acc
}
