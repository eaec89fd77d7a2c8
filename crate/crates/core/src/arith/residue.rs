//! Main-term polynomials for the Piltz divisor sums.
//!
//! The residue of zeta(s)^k x^s / s at s = 1 equals x * P_{k-1}(log x).
//! Writing w = s - 1, the coefficients come from the truncated series
//!   zeta(1+w)^k = w^{-k} (1 + g0 w - g1 w^2 + (g2/2) w^3 - ...)^k
//! multiplied by x^{1+w}/(1+w); the Stieltjes constants g0, g1, g2 are
//! embedded, which covers k <= 4.

use crate::error::{Error, Result};

/// Stieltjes constants gamma_0 (Euler-Mascheroni), gamma_1, gamma_2.
pub const GAMMA_0: f64 = 0.5772156649015329;
pub const GAMMA_1: f64 = -0.07281584548367672;
pub const GAMMA_2: f64 = -0.009690363192872318;

/// Coefficients c_0..c_{k-1} of the main term x * Sum_j c_j (log x)^j.
#[derive(Debug, Clone, PartialEq)]
pub struct MainTermCoefficients {
    k: u32,
    coefficients: Vec<f64>,
}

impl MainTermCoefficients {
    pub fn k(&self) -> u32 {
        self.k
    }

    /// c_0..c_{k-1}, lowest degree first.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// x * Sum_j c_j (log x)^j by Horner evaluation.
    pub fn main_term(&self, x: f64) -> f64 {
        let log_x = x.ln();
        let mut acc = 0.0;
        for &c in self.coefficients.iter().rev() {
            acc = acc * log_x + c;
        }
        x * acc
    }
}

const SERIES_LEN: usize = 4;

fn series_mul(a: [f64; SERIES_LEN], b: [f64; SERIES_LEN]) -> [f64; SERIES_LEN] {
    let mut c = [0.0; SERIES_LEN];
    for i in 0..SERIES_LEN {
        for j in 0..SERIES_LEN - i {
            c[i + j] += a[i] * b[j];
        }
    }
    c
}

/// Residue-polynomial coefficients for Sum_{n<=x} d_k(n), 1 <= k <= 4.
pub fn residue_polynomial(k: u32) -> Result<MainTermCoefficients> {
    if k == 0 {
        return Err(Error::Argument("k = 0 has no residue polynomial".into()));
    }
    if k > 4 {
        return Err(Error::UnsupportedOrder(k));
    }
    // A(w) = w * zeta(1+w) truncated; terms beyond w^3 cannot reach w^{k-1}.
    let a = [1.0, GAMMA_0, -GAMMA_1, GAMMA_2 / 2.0];
    let inv_one_plus_w = [1.0, -1.0, 1.0, -1.0];
    let mut pow = [1.0, 0.0, 0.0, 0.0];
    for _ in 0..k {
        pow = series_mul(pow, a);
    }
    let f = series_mul(pow, inv_one_plus_w);
    // c_j = [w^{k-1-j}] f / j!
    let mut coefficients = Vec::with_capacity(k as usize);
    let mut factorial = 1.0;
    for j in 0..k as usize {
        if j > 0 {
            factorial *= j as f64;
        }
        coefficients.push(f[k as usize - 1 - j] / factorial);
    }
    Ok(MainTermCoefficients { k, coefficients })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_is_unit() {
        let p = residue_polynomial(1).unwrap();
        assert_eq!(p.coefficients(), &[1.0]);
        assert_eq!(p.main_term(7.5), 7.5);
    }

    #[test]
    fn k2_reproduces_dirichlet_main_term_bitwise() {
        let p = residue_polynomial(2).unwrap();
        assert_eq!(p.coefficients().len(), 2);
        assert_eq!(p.coefficients()[1], 1.0);
        assert_eq!(p.coefficients()[0], 2.0 * GAMMA_0 - 1.0);
        // Same Horner shape as the hard-coded x*((2g-1) + log x) form.
        for x in [1.0f64, 2.5, 4.0, 1000.0] {
            let hard = x * ((2.0 * GAMMA_0 - 1.0) + x.ln());
            assert_eq!(p.main_term(x), hard, "x={x}");
        }
    }

    #[test]
    fn k3_k4_match_mpmath_series() {
        // mpmath (40 digits) with the same Stieltjes truncation:
        // k=3: [0.48633431316958762, 0.73164699470459858, 0.5]
        // k=4: [0.27277843571883909, 0.98146826517488750, 0.65443132980306572, 1/6]
        let p3 = residue_polynomial(3).unwrap();
        let want3 = [0.48633431316958762, 0.7316469947045986, 0.5];
        for (got, want) in p3.coefficients().iter().zip(want3) {
            assert!((got - want).abs() < 1e-13, "{got} vs {want}");
        }
        let p4 = residue_polynomial(4).unwrap();
        let want4 = [
            0.2727784357188391,
            0.9814682651748875,
            0.6544313298030657,
            1.0 / 6.0,
        ];
        for (got, want) in p4.coefficients().iter().zip(want4) {
            assert!((got - want).abs() < 1e-13, "{got} vs {want}");
        }
    }

    #[test]
    fn unsupported_orders_error() {
        assert!(matches!(
            residue_polynomial(5),
            Err(Error::UnsupportedOrder(5))
        ));
        assert!(matches!(residue_polynomial(0), Err(Error::Argument(_))));
    }
}
