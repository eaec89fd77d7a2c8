//! Lau-Tsang weighted sums P(x, tau), Q(x, tau) and their dilation relation.
//!
//! Both sums run over n <= tau^2 with the triangular weight
//! max{0, 1 - |2 sqrt(n)/tau - 1|}, which peaks at n = tau^2/4 and vanishes
//! at the truncation edge n = tau^2.

use crate::arith::ArithTables;
use crate::dd::{cos_turns, Dd};
use crate::error::{Error, Result};

/// Constants of the dilation relation between Q and P.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LauTsangParams {
    pub tau: f64,
    /// 2^(1/4) - 2^(-1/4)
    pub a: f64,
    /// 2^(1/4) + 2^(-1/4)
    pub b: f64,
    /// floor(2 log log tau), clamped to at least 1.
    pub j_terms: u32,
}

impl LauTsangParams {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau >= 2.0) || !tau.is_finite() {
            return Err(Error::Argument(format!("tau={tau} must be >= 2")));
        }
        let quarter = 2.0f64.powf(0.25);
        let j = (2.0 * tau.ln().ln()).floor();
        Ok(LauTsangParams {
            tau,
            a: quarter - 1.0 / quarter,
            b: quarter + 1.0 / quarter,
            j_terms: if j < 1.0 { 1 } else { j as u32 },
        })
    }
}

/// Triangular weight max{0, 1 - |2 sqrt(n)/tau - 1|}.
pub fn triangle_weight(n: u64, tau: f64) -> f64 {
    (1.0 - (2.0 * (n as f64).sqrt() / tau - 1.0).abs()).max(0.0)
}

fn weighted_sum(x: f64, tau: f64, tables: &ArithTables, alternating: bool) -> Result<f64> {
    if !(tau >= 2.0) || !tau.is_finite() {
        return Err(Error::Argument(format!("tau={tau} must be >= 2")));
    }
    let cap = (tau * tau).floor() as u64;
    if cap > tables.limit() {
        return Err(Error::Range(format!(
            "tau^2 = {cap} exceeds table limit {}",
            tables.limit()
        )));
    }
    let d = tables.d_slice();
    let mut acc = 0.0;
    for n in 1..=cap {
        let w = triangle_weight(n, tau);
        if w == 0.0 {
            continue;
        }
        // cos(4 pi sqrt(n) x): 2 sqrt(n) x revolutions.
        let turns = Dd::sqrt_f64(n as f64).mul_f64(2.0).mul_f64(x);
        let sign = if alternating && n % 2 == 1 { -1.0 } else { 1.0 };
        acc += sign * d[(n - 1) as usize] as f64 * (n as f64).powf(-0.75) * cos_turns(turns, 0.0) * w;
    }
    Ok(acc)
}

/// P(x, tau) = Sum_{n<=tau^2} (-1)^n d(n) n^(-3/4) cos(4 pi sqrt(n) x) w(n).
pub fn lau_tsang_p(x: f64, tau: f64, tables: &ArithTables) -> Result<f64> {
    weighted_sum(x, tau, tables, true)
}

/// Q(x, tau) = Sum_{n<=tau^2} d(n) n^(-3/4) cos(4 pi sqrt(n) x) w(n).
pub fn lau_tsang_q(x: f64, tau: f64, tables: &ArithTables) -> Result<f64> {
    weighted_sum(x, tau, tables, false)
}

/// Q(x, tau) - Sum_{j,i=1..J} a^j b^(-i) P(sqrt2^(j-i) x, sqrt2^(j+i) tau).
///
/// The relation holds up to O(sqrt(tau)); the residual is reported, never
/// asserted here.
pub fn lau_tsang_relation_residual(x: f64, tau: f64, tables: &ArithTables) -> Result<f64> {
    let params = LauTsangParams::new(tau)?;
    let j_max = params.j_terms as i32;
    let sqrt2 = std::f64::consts::SQRT_2;
    let largest_tau = sqrt2.powi(2 * j_max) * tau;
    if largest_tau * largest_tau > tables.limit() as f64 {
        return Err(Error::Range(format!(
            "inner tau' = {largest_tau:.1} needs tau'^2 <= {}",
            tables.limit()
        )));
    }
    let mut sum = 0.0;
    for j in 1..=j_max {
        for i in 1..=j_max {
            let coeff = params.a.powi(j) * params.b.powi(-i);
            let x_inner = sqrt2.powi(j - i) * x;
            let tau_inner = sqrt2.powi(j + i) * tau;
            sum += coeff * lau_tsang_p(x_inner, tau_inner, tables)?;
        }
    }
    Ok(lau_tsang_q(x, tau, tables)? - sum)
}
