//! Resonating frequency sets and the resonator R(x).
//!
//! The frequency set M collects lambda_n for squarefree integers n in
//! [C1*alpha, 2*alpha] with a prescribed number of distinct prime factors
//! (all of them congruent to 1 mod 4 in the circle variant). Distinct
//! squarefree n give sqrt(n) that are linearly independent over the
//! rationals, which is what makes the Euler product representation valid.
//!
//! R(x) is evaluated two ways: as the Euler product over M, and as the
//! truncated sum over the semigroup N[M] of nonnegative integer
//! combinations, keeping exactly the frequencies u with weight
//! r(u) = exp(-u/(2 alpha)) >= epsilon.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::arith::{factorize, ArithTables};
use crate::dd::{cos_sin_turns, Dd};
use crate::error::{Error, Result};

/// Which application's frequency map lambda_n the set uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Divisor,
    Circle,
    Piltz(u32),
}

impl Variant {
    pub fn as_str(&self) -> String {
        match self {
            Variant::Divisor => "divisor".into(),
            Variant::Circle => "circle".into(),
            Variant::Piltz(k) => format!("piltz-{k}"),
        }
    }

    /// lambda_n / (2*pi) as a double-double, rebuilt from the integer n.
    fn turns_multiplier(&self, n: u64) -> Dd {
        match self {
            Variant::Divisor => Dd::sqrt_f64(n as f64).mul_f64(2.0),
            Variant::Circle => Dd::sqrt_f64(n as f64),
            Variant::Piltz(k) => Dd::nth_root_u64(n, *k).mul_f64(*k as f64),
        }
    }

    fn frequency(&self, n: u64) -> f64 {
        2.0 * PI * self.turns_multiplier(n).value()
    }
}

/// One member of M: the backing integer and its frequency.
#[derive(Debug, Clone, Copy)]
pub struct ResonatorMember {
    pub n: u64,
    pub freq: f64,
    pub(crate) turns: Dd,
}

/// A constructed resonating set with its parameters.
#[derive(Debug, Clone)]
pub struct ResonatorConfig {
    alpha: f64,
    c1: f64,
    lambda_param: f64,
    variant: Variant,
    members: Vec<ResonatorMember>,
    support_epsilon: f64,
    target_omega: u32,
}

pub const DEFAULT_SUPPORT_EPSILON: f64 = 1e-6;

/// Generation cap for N[M] truncation; exceeding it is a capacity error.
pub const DEFAULT_SUPPORT_CAP: usize = 4_000_000;

fn is_all_factors_1_mod_4(n: u64) -> bool {
    factorize(n).iter().all(|&(p, _)| p % 4 == 1)
}

/// Enumerate the resonating set for the given parameters.
///
/// Squarefree n in [C1*alpha, 2*alpha] with omega(n) = floor(lambda *
/// log log alpha); the circle variant additionally requires every prime
/// factor to be 1 mod 4. Natural logarithms throughout.
pub fn build_frequency_set(
    alpha: f64,
    lambda_param: f64,
    c1: f64,
    variant: Variant,
    tables: &ArithTables,
) -> Result<ResonatorConfig> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Argument(format!("alpha={alpha} must be positive")));
    }
    if !(c1 > 0.0 && c1 < 2.0) {
        return Err(Error::Argument(format!("C1={c1} must lie in (0, 2)")));
    }
    if !(lambda_param > 0.0) {
        return Err(Error::Argument(format!(
            "lambda={lambda_param} must be positive"
        )));
    }
    let hi = (2.0 * alpha).floor() as u64;
    if hi > tables.limit() {
        return Err(Error::Range(format!(
            "2*alpha = {hi} exceeds table limit {}",
            tables.limit()
        )));
    }
    let loglog = alpha.ln().ln();
    let target = (lambda_param * loglog).floor();
    if !(target >= 1.0) {
        return Err(Error::Domain(format!(
            "floor(lambda log log alpha) = {target} < 1; alpha too small"
        )));
    }
    let target_omega = target as u32;
    let lo = (c1 * alpha).ceil() as u64;
    let mut members = Vec::new();
    for n in lo.max(2)..=hi {
        if !tables.is_squarefree(n) || tables.omega(n) != target_omega {
            continue;
        }
        if matches!(variant, Variant::Circle) && !is_all_factors_1_mod_4(n) {
            continue;
        }
        let turns = variant.turns_multiplier(n);
        members.push(ResonatorMember {
            n,
            freq: variant.frequency(n),
            turns,
        });
    }
    if members.is_empty() {
        return Err(Error::EmptyResonator {
            lo: c1 * alpha,
            hi: 2.0 * alpha,
        });
    }
    Ok(ResonatorConfig {
        alpha,
        c1,
        lambda_param,
        variant,
        members,
        support_epsilon: DEFAULT_SUPPORT_EPSILON,
        target_omega,
    })
}

impl ResonatorConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn lambda_param(&self) -> f64 {
        self.lambda_param
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn members(&self) -> &[ResonatorMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn support_epsilon(&self) -> f64 {
        self.support_epsilon
    }

    pub fn target_omega(&self) -> u32 {
        self.target_omega
    }

    pub fn member_ns(&self) -> Vec<u64> {
        self.members.iter().map(|m| m.n).collect()
    }

    /// Resonator weight r(lambda) = exp(-lambda/(2 alpha)).
    pub fn weight_of(&self, freq: f64) -> f64 {
        (-freq / (2.0 * self.alpha)).exp()
    }

    /// True when every member frequency lies in the window [C1*alpha,
    /// 2*alpha] that the sup-norm and lower-bound lemmas assume.
    pub fn frequencies_in_window(&self) -> bool {
        self.members
            .iter()
            .all(|m| m.freq >= self.c1 * self.alpha * (1.0 - 1e-12) && m.freq <= 2.0 * self.alpha * (1.0 + 1e-12))
    }

    pub fn with_support_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Argument(format!(
                "support epsilon {epsilon} must lie in (0, 1)"
            )));
        }
        self.support_epsilon = epsilon;
        Ok(self)
    }

    /// Restrict to the first `m` members (a subset of a valid M is a valid M).
    pub fn take_prefix(mut self, m: usize) -> Result<Self> {
        if m == 0 || m > self.members.len() {
            return Err(Error::Argument(format!(
                "prefix size {m} outside 1..={}",
                self.members.len()
            )));
        }
        self.members.truncate(m);
        Ok(self)
    }

    /// JSON export: {alpha, c1, lambda_param, variant, n_list}.
    pub fn export_json(&self) -> serde_json::Value {
        serde_json::json!({
            "alpha": self.alpha,
            "c1": self.c1,
            "lambda_param": self.lambda_param,
            "variant": self.variant.as_str(),
            "n_list": self.member_ns(),
        })
    }
}

/// Rebinds alpha so tests can place a generator exactly at 2*alpha.
#[cfg(test)]
pub(crate) fn tests_rescale_alpha(cfg: ResonatorConfig, alpha: f64) -> ResonatorConfig {
    ResonatorConfig { alpha, ..cfg }
}

/// Sathe/Stirling size estimate alpha / sqrt(log log alpha) *
/// (log alpha)^(lambda - 1 - lambda log lambda); implied constant one.
pub fn estimate_m(alpha: f64, lambda_param: f64) -> f64 {
    let log_a = alpha.ln();
    let exponent = lambda_param - 1.0 - lambda_param * lambda_param.ln();
    alpha / log_a.ln().sqrt() * log_a.powf(exponent)
}

/// One retained frequency of the truncated semigroup N[M].
#[derive(Debug, Clone, Copy)]
pub struct SupportElement {
    pub freq: f64,
    pub weight: f64,
    /// Number of generators combined (0 for the zero frequency).
    pub degree: u32,
    pub(crate) turns: Dd,
}

/// Truncated expansion of N[M] with weights above the cutoff.
#[derive(Debug, Clone)]
pub struct ResonatorSupport {
    elements: Vec<SupportElement>,
    generation_degree: u32,
    alpha: f64,
}

struct HeapItem {
    freq: f64,
    turns: Dd,
    degree: u32,
    last_gen: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we pop smallest frequency.
        other
            .freq
            .total_cmp(&self.freq)
            .then_with(|| other.degree.cmp(&self.degree))
            .then_with(|| other.last_gen.cmp(&self.last_gen))
    }
}

/// Expand N[M], keeping frequencies u with exp(-u/(2 alpha)) >= epsilon.
///
/// Multisets are generated with nondecreasing generator index so every
/// element of the semigroup appears exactly once; a min-heap on u makes the
/// output deterministic and sorted by frequency.
pub fn expand_support(config: &ResonatorConfig) -> Result<ResonatorSupport> {
    expand_support_capped(config, DEFAULT_SUPPORT_CAP)
}

pub fn expand_support_capped(config: &ResonatorConfig, cap: usize) -> Result<ResonatorSupport> {
    let alpha = config.alpha;
    let eps = config.support_epsilon;
    // Keep u <= u_max; small relative slack so boundary weights (== eps) stay.
    let u_max = 2.0 * alpha * (1.0 / eps).ln() * (1.0 + 1e-12);
    let mut heap: BinaryHeap<HeapItem> = BinaryHeap::new();
    heap.push(HeapItem {
        freq: 0.0,
        turns: Dd::from_f64(0.0),
        degree: 0,
        last_gen: 0,
    });
    let mut elements = Vec::new();
    let mut generation_degree = 0u32;
    while let Some(item) = heap.pop() {
        if elements.len() >= cap {
            let needed = (-item.freq / (2.0 * alpha)).exp();
            return Err(Error::Capacity(format!(
                "support exceeds cap {cap}; epsilon >= {needed:.3e} would fit"
            )));
        }
        let weight = (-item.freq / (2.0 * alpha)).exp();
        generation_degree = generation_degree.max(item.degree);
        elements.push(SupportElement {
            freq: item.freq,
            weight,
            degree: item.degree,
            turns: item.turns,
        });
        for (gi, member) in config.members.iter().enumerate().skip(item.last_gen) {
            let freq = item.freq + member.freq;
            if freq > u_max {
                continue;
            }
            heap.push(HeapItem {
                freq,
                turns: item.turns.add(member.turns),
                degree: item.degree + 1,
                last_gen: gi,
            });
        }
    }
    Ok(ResonatorSupport {
        elements,
        generation_degree,
        alpha,
    })
}

impl ResonatorSupport {
    pub fn elements(&self) -> &[SupportElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn generation_degree(&self) -> u32 {
        self.generation_degree
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Total retained weight Sum r(u).
    pub fn kept_mass(&self) -> f64 {
        self.elements.iter().map(|e| e.weight).sum()
    }

    /// CSV export with header "u,weight".
    pub fn export_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "u,weight")?;
        for e in &self.elements {
            writeln!(out, "{},{}", e.freq, e.weight)?;
        }
        Ok(())
    }
}

/// R(x) by the Euler product over M: prod (1 - r(lambda) e^{i lambda x})^{-1}.
pub fn eval_resonator_product(config: &ResonatorConfig, x: f64) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for m in &config.members {
        let r = config.weight_of(m.freq);
        let (c, s) = cos_sin_turns(m.turns.mul_f64(x), 0.0);
        let factor = Complex64::new(1.0 - r * c, -r * s);
        acc /= factor;
    }
    acc
}

/// R(x) by the truncated support sum: Sum r(u) e^{iux}.
pub fn eval_resonator_sum(support: &ResonatorSupport, x: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for e in &support.elements {
        let (c, s) = cos_sin_turns(e.turns.mul_f64(x), 0.0);
        acc += Complex64::new(e.weight * c, e.weight * s);
    }
    acc
}

/// Upper bound on |product - sum|: the dropped mass Sum_{u not kept} r(u),
/// computed as the full geometric mass minus the kept mass.
pub fn sum_truncation_bound(config: &ResonatorConfig, support: &ResonatorSupport) -> f64 {
    let full: f64 = config
        .members
        .iter()
        .map(|m| 1.0 / (1.0 - config.weight_of(m.freq)))
        .product();
    (full - support.kept_mass()).max(0.0)
}
