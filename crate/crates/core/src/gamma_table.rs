//! Expansion of monomials in rising factorials.
//!
//! With `p_1 = 1` and `p_l(t) = t(t+1)⋯(t+l-2)`, the integers `c̃_{k,l}` solve
//! `t^{k-1} = Σ_l c̃_{k,l} p_l(t)`. Since `t p_l = p_{l+1} - (l-1) p_l`, they obey
//! `c̃_{k,l} = c̃_{k-1,l-1} - (l-1) c̃_{k-1,l}` with `c̃_{k,1} = 0`, `c̃_{k,k} = 1`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaCoeffTable {
    /// Row `k` (0-based) holds `k + 1` entries.
    rows: Vec<Vec<i128>>,
}

pub fn gamma_coeff_table(order: usize) -> Result<GammaCoeffTable> {
    if order == 0 {
        return Err(Error::invalid(
            "gamma coefficient table order must be at least 1",
        ));
    }
    let mut rows: Vec<Vec<i128>> = Vec::with_capacity(order);
    rows.push(alloc::vec![1]);
    for k in 2..=order {
        let prev = &rows[k - 2];
        let mut row = alloc::vec![0i128; k];
        for l in 2..k {
            let shifted = prev[l - 2];
            let scaled = prev[l - 1]
                .checked_mul((l - 1) as i128)
                .ok_or(Error::Overflow { k, l })?;
            row[l - 1] = shifted
                .checked_sub(scaled)
                .ok_or(Error::Overflow { k, l })?;
        }
        row[k - 1] = 1;
        rows.push(row);
    }
    Ok(GammaCoeffTable { rows })
}

impl GammaCoeffTable {
    pub fn order(&self) -> usize {
        self.rows.len()
    }

    /// Row `k` (1-based): `c̃_{k,1..k}`.
    pub fn row(&self, k: usize) -> &[i128] {
        &self.rows[k - 1]
    }

    pub fn get(&self, k: usize, l: usize) -> i128 {
        if l > k {
            0
        } else {
            self.rows[k - 1][l - 1]
        }
    }

    /// `Σ_l |c̃_{k,l}|`.
    pub fn abs_row_sum(&self, k: usize) -> u128 {
        self.row(k).iter().map(|c| c.unsigned_abs()).sum()
    }
}
