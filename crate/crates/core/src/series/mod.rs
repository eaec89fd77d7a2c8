//! Truncated exponential sums: the Voronoi divisor series, the circle
//! series, the Gaussian-smoothed Piltz series, and synthetic sums.
//!
//! Evaluation reduces every phase lambda_n * x modulo 2*pi in double-double
//! arithmetic. Frequencies of the arithmetic series are never trusted as
//! stored doubles: the per-term phase multiplier lambda_n / (2*pi) is
//! rebuilt from the integer n (2*sqrt(n), sqrt(n), or k*n^(1/k)) with a
//! Newton-refined root, so the per-term phase error stays below 1e-10 for
//! |lambda_n * x| up to 2^50.

use std::f64::consts::{FRAC_PI_4, PI};
use std::io::Write;

use rayon::prelude::*;

use crate::arith::{delta_midpoint, ArithTables};
use crate::dd::{cos_turns, Dd, TWO_PI};
use crate::error::{Error, Result};

mod lau_tsang;

pub use lau_tsang::{
    lau_tsang_p, lau_tsang_q, lau_tsang_relation_residual, triangle_weight, LauTsangParams,
};

/// Provenance of a spec's coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesLabel {
    Divisor,
    Circle,
    Piltz(u32),
    Synthetic,
}

impl SeriesLabel {
    pub fn as_str(&self) -> String {
        match self {
            SeriesLabel::Divisor => "divisor".into(),
            SeriesLabel::Circle => "circle".into(),
            SeriesLabel::Piltz(k) => format!("piltz-{k}"),
            SeriesLabel::Synthetic => "synthetic".into(),
        }
    }
}

/// A finite exponential sum Sum a_n cos(lambda_n x + beta).
#[derive(Debug, Clone)]
pub struct ExpSumSpec {
    coefficients: Vec<f64>,
    frequencies: Vec<f64>,
    turns: Vec<Dd>,
    phase: f64,
    index_map: Vec<u64>,
    label: SeriesLabel,
    truncation_x: f64,
    a1_exponent: f64,
}

/// Reduce an angle to the canonical interval (-pi, pi].
pub fn reduce_phase(beta: f64) -> f64 {
    let r = beta.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

impl ExpSumSpec {
    /// A spec from explicit coefficients and frequencies.
    pub fn synthetic(coefficients: Vec<f64>, frequencies: Vec<f64>, beta: f64) -> Result<Self> {
        if coefficients.len() != frequencies.len() {
            return Err(Error::Argument(format!(
                "coefficient/frequency length mismatch: {} vs {}",
                coefficients.len(),
                frequencies.len()
            )));
        }
        if coefficients.is_empty() {
            return Err(Error::Argument("empty spec".into()));
        }
        for &a in &coefficients {
            if !(a >= 0.0) || !a.is_finite() {
                return Err(Error::Argument(format!("coefficient {a} not in [0, inf)")));
            }
        }
        let mut prev = 0.0;
        for &l in &frequencies {
            if !(l > prev) || !l.is_finite() {
                return Err(Error::Argument(format!(
                    "frequencies must be positive and strictly increasing; saw {l} after {prev}"
                )));
            }
            prev = l;
        }
        let turns = frequencies
            .iter()
            .map(|&l| Dd::from_f64(l).div(TWO_PI))
            .collect();
        let index_map = (0..coefficients.len() as u64).collect();
        Ok(ExpSumSpec {
            coefficients,
            frequencies,
            turns,
            phase: reduce_phase(beta),
            index_map,
            label: SeriesLabel::Synthetic,
            truncation_x: 0.0,
            a1_exponent: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub(crate) fn turns(&self) -> &[Dd] {
        &self.turns
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn index_map(&self) -> &[u64] {
        &self.index_map
    }

    pub fn label(&self) -> SeriesLabel {
        self.label
    }

    pub fn truncation_x(&self) -> f64 {
        self.truncation_x
    }

    pub fn a1_exponent(&self) -> f64 {
        self.a1_exponent
    }

    pub fn lambda_max(&self) -> f64 {
        *self.frequencies.last().expect("specs are nonempty")
    }

    pub fn coefficient_sum(&self) -> f64 {
        self.coefficients.iter().sum()
    }

    /// Sum of a_n over terms with lambda_n <= cutoff.
    pub fn coefficient_sum_below(&self, cutoff: f64) -> f64 {
        self.coefficients
            .iter()
            .zip(&self.frequencies)
            .filter(|(_, &l)| l <= cutoff)
            .map(|(&a, _)| a)
            .sum()
    }

    /// sqrt(0.5 * Sum a_n^2), the stationary-phase RMS heuristic.
    pub fn baseline_rms(&self) -> f64 {
        (0.5 * self.coefficients.iter().map(|a| a * a).sum::<f64>()).sqrt()
    }

    /// Term index backed by integer n, if present (index_map is ascending).
    pub fn position_of_n(&self, n: u64) -> Option<usize> {
        self.index_map.binary_search(&n).ok()
    }

    /// Sum a_n cos(lambda_n x + beta) with double-double phase reduction.
    ///
    /// Panics if |lambda_max * x| >= 2^50 (the reduction contract).
    pub fn eval(&self, x: f64) -> f64 {
        assert!(
            (self.lambda_max() * x).abs() < 1.125_899_906_842_624e15,
            "|lambda_max * x| exceeds 2^50"
        );
        let mut acc = 0.0;
        for i in 0..self.coefficients.len() {
            let turns = self.turns[i].mul_f64(x);
            acc += self.coefficients[i] * cos_turns(turns, self.phase);
        }
        acc
    }

    /// Batch evaluation over a grid, parallel by fixed chunks with a
    /// deterministic per-chunk summation order.
    pub fn eval_batch(&self, xs: &[f64]) -> Vec<f64> {
        const CHUNK: usize = 256;
        let chunks: Vec<Vec<f64>> = xs
            .par_chunks(CHUNK)
            .map(|chunk| chunk.iter().map(|&x| self.eval(x)).collect())
            .collect();
        chunks.into_iter().flatten().collect()
    }

    /// CSV export with header "n,a,lambda".
    pub fn export_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "n,a,lambda")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{},{}",
                self.index_map[i], self.coefficients[i], self.frequencies[i]
            )?;
        }
        Ok(())
    }

    /// JSON sidecar describing the spec.
    pub fn sidecar_json(&self) -> serde_json::Value {
        serde_json::json!({
            "label": self.label.as_str(),
            "beta": self.phase,
            "X": self.truncation_x,
            "A1": self.a1_exponent,
        })
    }
}

/// Floor of x^p guarding against the power landing a hair under an integer.
fn floor_power(x: f64, p: f64) -> u64 {
    let v = x.powf(p);
    let f = v.floor();
    // If v is within one ulp-ish of the next integer, prefer it.
    if (f + 1.0) - v < 1e-9 * v.max(1.0) {
        (f + 1.0) as u64
    } else {
        f as u64
    }
}

/// Voronoi divisor series: Sum_{n<=X^3} d(n)/n^(3/4) cos(4 pi sqrt(n) x - pi/4).
pub fn divisor_series_spec(x_big: f64, tables: &ArithTables) -> Result<ExpSumSpec> {
    if !(x_big >= 1.0) || !x_big.is_finite() {
        return Err(Error::Argument(format!("X={x_big} must be >= 1")));
    }
    let len = floor_power(x_big, 3.0);
    if len > tables.limit() {
        return Err(Error::Range(format!(
            "X^3 = {len} exceeds table limit {}",
            tables.limit()
        )));
    }
    let d = tables.d_slice();
    let mut coefficients = Vec::with_capacity(len as usize);
    let mut frequencies = Vec::with_capacity(len as usize);
    let mut turns = Vec::with_capacity(len as usize);
    let mut index_map = Vec::with_capacity(len as usize);
    for n in 1..=len {
        let root = Dd::sqrt_f64(n as f64);
        coefficients.push(d[(n - 1) as usize] as f64 / (n as f64).powf(0.75));
        frequencies.push(4.0 * PI * root.value());
        turns.push(root.mul_f64(2.0));
        index_map.push(n);
    }
    Ok(ExpSumSpec {
        coefficients,
        frequencies,
        turns,
        phase: -FRAC_PI_4,
        index_map,
        label: SeriesLabel::Divisor,
        truncation_x: x_big,
        a1_exponent: 3.0,
    })
}

/// Circle series: Sum_{n<=X^3} r(n)/n^(3/4) cos(2 pi sqrt(n) x + pi/4),
/// zero-coefficient terms omitted.
pub fn circle_series_spec(x_big: f64, tables: &ArithTables) -> Result<ExpSumSpec> {
    if !(x_big >= 1.0) || !x_big.is_finite() {
        return Err(Error::Argument(format!("X={x_big} must be >= 1")));
    }
    let len = floor_power(x_big, 3.0);
    if len > tables.limit() {
        return Err(Error::Range(format!(
            "X^3 = {len} exceeds table limit {}",
            tables.limit()
        )));
    }
    let r2 = tables.r2_slice();
    let mut coefficients = Vec::new();
    let mut frequencies = Vec::new();
    let mut turns = Vec::new();
    let mut index_map = Vec::new();
    for n in 1..=len {
        let r = r2[(n - 1) as usize];
        if r == 0 {
            continue;
        }
        let root = Dd::sqrt_f64(n as f64);
        coefficients.push(r as f64 / (n as f64).powf(0.75));
        frequencies.push(2.0 * PI * root.value());
        turns.push(root);
        index_map.push(n);
    }
    Ok(ExpSumSpec {
        coefficients,
        frequencies,
        turns,
        phase: FRAC_PI_4,
        index_map,
        label: SeriesLabel::Circle,
        truncation_x: x_big,
        a1_exponent: 3.0,
    })
}

/// Smoothed Piltz series: Sum_{n<=X^(8/5)} d_k(n) n^(-(k+1)/2k)
/// exp(-pi^2 (n/alpha)^(2/k)) cos(2 pi k n^(1/k) x + (k-3) pi/4).
pub fn piltz_series_spec(
    x_big: f64,
    k: u32,
    alpha: f64,
    tables: &ArithTables,
) -> Result<ExpSumSpec> {
    if k < 2 {
        return Err(Error::Argument(format!("piltz k={k}; need k >= 2")));
    }
    if !(alpha > 0.0) {
        return Err(Error::Argument(format!("alpha={alpha} must be positive")));
    }
    if !(x_big >= 1.0) || !x_big.is_finite() {
        return Err(Error::Argument(format!("X={x_big} must be >= 1")));
    }
    let len = floor_power(x_big, 1.6);
    if len > tables.limit() {
        return Err(Error::Range(format!(
            "X^(8/5) = {len} exceeds table limit {}",
            tables.limit()
        )));
    }
    if !tables.has_k(k) {
        return Err(Error::Config(format!("tables lack d_{k}")));
    }
    let decay_exp = (k as f64 + 1.0) / (2.0 * k as f64);
    let beta = reduce_phase((k as f64 - 3.0) * FRAC_PI_4);
    let mut coefficients = Vec::with_capacity(len as usize);
    let mut frequencies = Vec::with_capacity(len as usize);
    let mut turns = Vec::with_capacity(len as usize);
    let mut index_map = Vec::with_capacity(len as usize);
    for n in 1..=len {
        let smooth = (-PI * PI * (n as f64 / alpha).powf(2.0 / k as f64)).exp();
        let a = tables.dk(k, n)? as f64 * (n as f64).powf(-decay_exp) * smooth;
        if a == 0.0 {
            continue;
        }
        let root = Dd::nth_root_u64(n, k);
        coefficients.push(a);
        frequencies.push(2.0 * PI * k as f64 * root.value());
        turns.push(root.mul_f64(k as f64));
        index_map.push(n);
    }
    if coefficients.is_empty() {
        return Err(Error::Argument(
            "piltz smoothing annihilated every term; increase alpha".into(),
        ));
    }
    Ok(ExpSumSpec {
        coefficients,
        frequencies,
        turns,
        phase: beta,
        index_map,
        label: SeriesLabel::Piltz(k),
        truncation_x: x_big,
        a1_exponent: 1.6,
    })
}

/// Signed residual pi*sqrt(2)*Delta(x^2)/sqrt(x) - F(x) for a prebuilt
/// divisor spec, valid in the uniformity window sqrt(X) <= x <= X^(3/2).
///
/// When x^2 lands exactly on an integer, Delta is evaluated at the jump
/// midpoint (d(x^2) weighted 1/2): that is the value the series converges
/// to there, and the residual would otherwise be inflated by half the jump
/// pi*sqrt(2)*d(x^2)/(2 sqrt(x)).
pub fn truncation_residual_for(spec: &ExpSumSpec, x: f64) -> Result<f64> {
    if spec.label != SeriesLabel::Divisor {
        return Err(Error::Argument(format!(
            "truncation residual needs a divisor spec, got {}",
            spec.label.as_str()
        )));
    }
    let x_big = spec.truncation_x;
    if !(x >= x_big.sqrt() && x <= x_big.powf(1.5)) {
        return Err(Error::Range(format!(
            "x={x} outside uniformity window [{}, {}]",
            x_big.sqrt(),
            x_big.powf(1.5)
        )));
    }
    let t = x * x;
    if t >= 4.5e15 {
        return Err(Error::Range(format!("x^2={t} too large for exact Delta")));
    }
    let lhs = PI * std::f64::consts::SQRT_2 * delta_midpoint(t) / x.sqrt();
    Ok(lhs - spec.eval(x))
}

/// Builds the divisor spec for X and returns the truncation residual at x.
pub fn truncation_residual(x_big: f64, x: f64, tables: &ArithTables) -> Result<f64> {
    let spec = divisor_series_spec(x_big, tables)?;
    truncation_residual_for(&spec, x)
}
