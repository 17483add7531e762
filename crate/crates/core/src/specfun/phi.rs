//! Exact polynomial table for `Phi_r(i, k) = e^{-r^2/2} M(i, k; r^2/2)`.
//!
//! For integers `i >= k >= 1` this is a polynomial of degree `i - k` in
//! `u = r^2`. The table is generated from `Phi_r(i, i) = 1` and the
//! contiguous relation
//!
//! ```text
//! Phi_r(i, k) = u / (2k) * Phi_r(i, k + 1) + Phi_r(i - 1, k)
//! ```
//!
//! with exact rational coefficients; floating-point copies are kept for
//! evaluation.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Largest first index held by [`PhiTable::global`].
pub const GLOBAL_MAX_INDEX: usize = 40;

#[derive(Debug, Clone)]
pub struct PhiTable {
    max_i: usize,
    // exact[i][k], 1 <= k <= i <= max_i; index 0 unused.
    exact: Vec<Vec<Vec<BigRational>>>,
    float: Vec<Vec<Vec<f64>>>,
}

impl PhiTable {
    pub fn new(max_i: usize) -> Self {
        let max_i = max_i.max(1);
        let mut exact: Vec<Vec<Vec<BigRational>>> = vec![Vec::new(); max_i + 1];
        for i in 1..=max_i {
            let mut row: Vec<Vec<BigRational>> = vec![Vec::new(); i + 1];
            row[i] = vec![BigRational::one()];
            for k in (1..i).rev() {
                // u/(2k) * Phi(i, k+1): shift by one power of u.
                let scale = BigRational::new(BigInt::one(), BigInt::from(2 * k));
                let upper = &row[k + 1];
                let lower = &exact[i - 1][k];
                let mut poly = vec![BigRational::zero(); i - k + 1];
                for (n, c) in upper.iter().enumerate() {
                    poly[n + 1] += c * &scale;
                }
                for (n, c) in lower.iter().enumerate() {
                    poly[n] += c;
                }
                row[k] = poly;
            }
            exact[i] = row;
        }
        let float = exact
            .iter()
            .map(|row| {
                row.iter()
                    .map(|p| p.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect())
                    .collect()
            })
            .collect();
        Self {
            max_i,
            exact,
            float,
        }
    }

    /// Shared table with `i <= GLOBAL_MAX_INDEX`.
    pub fn global() -> &'static PhiTable {
        static TABLE: OnceLock<PhiTable> = OnceLock::new();
        TABLE.get_or_init(|| PhiTable::new(GLOBAL_MAX_INDEX))
    }

    pub fn max_index(&self) -> usize {
        self.max_i
    }

    fn in_range(&self, i: usize, k: usize) -> bool {
        k >= 1 && k <= i && i <= self.max_i
    }

    /// Exact coefficients of `Phi_r(i, k)` in ascending powers of `r^2`.
    pub fn coefficients(&self, i: usize, k: usize) -> Option<&[BigRational]> {
        self.in_range(i, k).then(|| self.exact[i][k].as_slice())
    }

    /// `Phi_r(i, k)` evaluated at amplitude `r`.
    pub fn eval(&self, i: usize, k: usize, r: f64) -> Option<f64> {
        if !self.in_range(i, k) {
            return None;
        }
        let u = r * r;
        Some(
            self.float[i][k]
                .iter()
                .rev()
                .fold(0.0, |acc, &c| acc * u + c),
        )
    }

    /// Coefficient-wise residual of the contiguous relation, exact.
    /// Defined for `2 <= i <= max_i`, `1 <= k < i`.
    pub fn recurrence_residual(&self, i: usize, k: usize) -> Option<Vec<BigRational>> {
        if i < 2 || k < 1 || k >= i || i > self.max_i {
            return None;
        }
        let target = &self.exact[i][k];
        let upper = &self.exact[i][k + 1];
        let lower = &self.exact[i - 1][k];
        let scale = BigRational::new(BigInt::one(), BigInt::from(2 * k));
        let mut residual = target.clone();
        for (n, c) in upper.iter().enumerate() {
            residual[n + 1] -= c * &scale;
        }
        for (n, c) in lower.iter().enumerate() {
            residual[n] -= c;
        }
        Some(residual)
    }
}

/// `2^i i!` as an exact integer.
pub(crate) fn moment_prefactor(i: usize) -> BigInt {
    let mut v = BigInt::one();
    for j in 1..=i {
        v *= BigInt::from(2 * j);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn diagonal_is_one() {
        let t = PhiTable::new(10);
        for i in 1..=10 {
            assert_eq!(t.coefficients(i, i).unwrap(), &[BigRational::one()]);
        }
    }

    #[test]
    fn degree_is_index_difference() {
        let t = PhiTable::new(9);
        for i in 1..=9 {
            for k in 1..=i {
                let c = t.coefficients(i, k).unwrap();
                assert_eq!(c.len(), i - k + 1);
                assert!(!c.last().unwrap().is_zero());
            }
        }
    }

    #[test]
    fn recurrence_holds_exactly_up_to_eight() {
        let t = PhiTable::new(8);
        for i in 2..=8 {
            for k in 1..i {
                let res = t.recurrence_residual(i, k).unwrap();
                assert!(res.iter().all(|c| c.is_zero()), "({i},{k})");
            }
        }
    }

    #[test]
    fn listed_first_column_polynomials() {
        let t = PhiTable::new(6);
        assert_eq!(t.coefficients(2, 1).unwrap(), &[ratio(1, 1), ratio(1, 2)]);
        assert_eq!(
            t.coefficients(3, 1).unwrap(),
            &[ratio(1, 1), ratio(1, 1), ratio(1, 8)]
        );
        assert_eq!(
            t.coefficients(4, 1).unwrap(),
            &[ratio(1, 1), ratio(3, 2), ratio(3, 8), ratio(1, 48)]
        );
        assert_eq!(
            t.coefficients(5, 1).unwrap(),
            &[ratio(1, 1), ratio(2, 1), ratio(3, 4), ratio(1, 12), ratio(1, 384)]
        );
        assert_eq!(
            t.coefficients(6, 1).unwrap(),
            &[
                ratio(1, 1),
                ratio(5, 2),
                ratio(5, 4),
                ratio(5, 24),
                ratio(5, 384),
                ratio(1, 3840)
            ]
        );
    }

    #[test]
    fn first_column_matches_kummer_transform() {
        // e^{-z} M(i, 1; z) = M(1 - i, 1; -z) = sum_n C(i-1, n) z^n / n!,
        // with z = u / 2.
        let t = PhiTable::new(12);
        for i in 1..=12usize {
            let c = t.coefficients(i, 1).unwrap();
            let mut binom = BigInt::one();
            let mut fact = BigInt::one();
            for n in 0..i {
                if n > 0 {
                    binom = binom * BigInt::from(i - n) / BigInt::from(n);
                    fact *= BigInt::from(n);
                }
                let want = BigRational::new(
                    binom.clone(),
                    &fact * (BigInt::one() << n),
                );
                assert_eq!(c[n], want, "i = {i}, n = {n}");
                assert!(!c[n].is_negative());
            }
        }
    }

    #[test]
    fn out_of_range_is_none() {
        let t = PhiTable::new(4);
        assert!(t.coefficients(5, 1).is_none());
        assert!(t.coefficients(2, 3).is_none());
        assert!(t.eval(3, 0, 1.0).is_none());
        assert!(t.recurrence_residual(1, 1).is_none());
    }

    #[test]
    fn prefactor_values() {
        assert_eq!(moment_prefactor(0), BigInt::from(1));
        assert_eq!(moment_prefactor(3), BigInt::from(48));
    }
}
