//! Executable invariant suites.
//!
//! Each suite runs the properties its module promises and reports one
//! named check per property. The CLI's `verify` subcommand serializes the
//! report as JSON and exits nonzero when anything fails. All sampling is
//! driven by a caller-supplied seed.

use std::f64::consts::{E, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{
    build_tables, delta_exact, divisor_sum_exact, lattice_count, main_term_k2,
    residue_polynomial, GAMMA_0,
};
use crate::engine::{compute_i2, predicted_lower_bound, scan_max, EngineParams, GrowthTarget};
use crate::engine::growth_report_values;
use crate::error::{Error, Result};
use crate::kernel::{convolve_exact, convolve_exact_with, convolve_numeric, weight, KernelParams};
use crate::resonator::{
    build_frequency_set, eval_resonator_product, eval_resonator_sum, expand_support,
    sum_truncation_bound, Variant,
};
use crate::series::{
    circle_series_spec, divisor_series_spec, lau_tsang_p, lau_tsang_q, piltz_series_spec,
    triangle_weight, ExpSumSpec,
};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.checks.len() - self.passed()
    }

    pub fn all_passed(&self) -> bool {
        self.failed() == 0
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "suite": self.suite,
            "seed": self.seed,
            "passed": self.passed(),
            "failed": self.failed(),
            "checks": self.checks.iter().map(|c| serde_json::json!({
                "name": c.name,
                "passed": c.passed,
                "detail": c.detail,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Deliberate defects the CLI can inject to demonstrate that the suites
/// catch them; `None` in production runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Skews the kernel weight used in the Lemma identity reference.
    KernelWeight,
}

impl Fault {
    pub fn parse(s: &str) -> Result<Fault> {
        match s {
            "none" => Ok(Fault::None),
            "kernel-weight" => Ok(Fault::KernelWeight),
            other => Err(Error::Argument(format!("unknown fault '{other}'"))),
        }
    }
}

struct Suite {
    checks: Vec<CheckResult>,
}

impl Suite {
    fn new() -> Self {
        Suite { checks: Vec::new() }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

fn arith_suite(_rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>> {
    let mut suite = Suite::new();
    let tables = build_tables(1_000_000, &[])?;

    // Hyperbola vs naive prefix sums, exhaustive to 10^4.
    let mut prefix = 0u64;
    let mut mismatches = 0u64;
    for n in 1..=10_000u64 {
        prefix += tables.d(n);
        if divisor_sum_exact(n as f64) != prefix {
            mismatches += 1;
        }
    }
    suite.check(
        "hyperbola-vs-naive",
        mismatches == 0,
        format!("{mismatches} mismatches over x <= 10^4"),
    );

    // Lattice count vs 1 + prefix of r2.
    let mut prefix = 1u64;
    let mut mismatches = 0u64;
    for n in 1..=10_000u64 {
        prefix += tables.r2(n);
        if lattice_count(n as f64) != prefix {
            mismatches += 1;
        }
    }
    suite.check(
        "lattice-vs-r2-prefix",
        mismatches == 0,
        format!("{mismatches} mismatches over x <= 10^4"),
    );

    // Multiplicativity on coprime pairs.
    let pairs = [(3u64, 8u64), (5, 49), (9, 16), (25, 77), (121, 169), (7, 144)];
    let mult_ok = pairs
        .iter()
        .all(|&(m, n)| tables.d(m * n) == tables.d(m) * tables.d(n));
    suite.check(
        "d-multiplicative",
        mult_ok,
        format!("{} coprime pairs", pairs.len()),
    );

    // Average order of d: Sum d(n) / (N log N) in [0.9, 1.1] at N = 10^6.
    let n = 1_000_000u64;
    let ratio = divisor_sum_exact(n as f64) as f64 / (n as f64 * (n as f64).ln());
    suite.check(
        "divisor-average-order",
        (0.9..=1.1).contains(&ratio),
        format!("ratio {ratio:.6} at N = 10^6"),
    );

    // Squarefree density near 6/pi^2.
    let sf = (1..=10_000u64).filter(|&k| tables.is_squarefree(k)).count() as f64 / 10_000.0;
    suite.check(
        "squarefree-density",
        (0.58..=0.65).contains(&sf),
        format!("density {sf:.4}"),
    );

    // residue_polynomial(2) reproduces the hard-coded main term exactly.
    let poly = residue_polynomial(2)?;
    let mut max_diff = 0.0f64;
    for x in [1.0f64, 2.5, 4.0, 123.456, 99_991.0] {
        let hard = x * ((2.0 * GAMMA_0 - 1.0) + x.ln());
        max_diff = max_diff.max((poly.main_term(x) - hard).abs());
        max_diff = max_diff.max((main_term_k2(x) - hard).abs());
    }
    suite.check(
        "residue-k2-exact-form",
        max_diff == 0.0,
        format!("max |poly - hardcoded| = {max_diff:e}"),
    );

    // delta_exact agrees with its own cross-check on a few points.
    let ok = [1.0, 2.5, 4.0, 9999.5]
        .iter()
        .all(|&x| delta_exact(x, &tables).is_ok());
    suite.check("delta-cross-check", ok, "hyperbola == naive".into());

    Ok(suite.checks)
}

fn series_suite(rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>> {
    let mut suite = Suite::new();
    let tables = build_tables(10_000, &[3])?;

    // Linearity under disjoint-frequency concatenation.
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n1 = rng.gen_range(1..=4);
        let n2 = rng.gen_range(1..=4);
        let mut freqs: Vec<f64> = (0..n1 + n2).map(|_| rng.gen_range(0.1..50.0)).collect();
        freqs.sort_by(f64::total_cmp);
        freqs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        if freqs.len() < 2 {
            continue;
        }
        let split = freqs.len() / 2;
        let beta = rng.gen_range(-3.0..3.0);
        let coeffs: Vec<f64> = freqs.iter().map(|_| rng.gen_range(0.0..2.0)).collect();
        let s1 = ExpSumSpec::synthetic(coeffs[..split].to_vec(), freqs[..split].to_vec(), beta);
        let s2 = ExpSumSpec::synthetic(coeffs[split..].to_vec(), freqs[split..].to_vec(), beta);
        let all = ExpSumSpec::synthetic(coeffs.clone(), freqs.clone(), beta);
        if let (Ok(s1), Ok(s2), Ok(all)) = (s1, s2, all) {
            let x = rng.gen_range(0.0..100.0);
            worst = worst.max((all.eval(x) - s1.eval(x) - s2.eval(x)).abs());
        }
    }
    suite.check(
        "eval-linearity",
        worst <= 1e-12,
        format!("max |concat - parts| = {worst:e}"),
    );

    // Triangle inequality |F(x)| <= Sum a_n.
    let mut violations = 0;
    for _ in 0..50 {
        let n = rng.gen_range(1..=6);
        let mut freqs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..80.0)).collect();
        freqs.sort_by(f64::total_cmp);
        freqs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let coeffs: Vec<f64> = freqs.iter().map(|_| rng.gen_range(0.0..3.0)).collect();
        if let Ok(spec) = ExpSumSpec::synthetic(coeffs, freqs, rng.gen_range(-3.0..3.0)) {
            let x = rng.gen_range(-50.0..50.0);
            if spec.eval(x).abs() > spec.coefficient_sum() * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    suite.check(
        "triangle-inequality",
        violations == 0,
        format!("{violations} violations in 50 samples"),
    );

    // Piltz k=2 coefficients converge to divisor coefficients as alpha -> inf.
    let alpha = 1.0e6;
    let piltz = piltz_series_spec(4.0, 2, alpha, &tables)?;
    let mut worst = 0.0f64;
    for (i, &n) in piltz.index_map().iter().enumerate().take(9) {
        let unsmoothed = piltz.coefficients()[i] * (PI * PI * n as f64 / alpha).exp();
        let divisor = tables.d(n) as f64 / (n as f64).powf(0.75);
        worst = worst.max((unsmoothed - divisor).abs());
    }
    suite.check(
        "piltz-k2-limit",
        worst <= 1e-6,
        format!("max coefficient gap {worst:e} at alpha = 1e6"),
    );

    // Phase-reduction periodicity for a single tone.
    let lam = 533.77;
    let spec = ExpSumSpec::synthetic(vec![1.0], vec![lam], 0.2)?;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let x = rng.gen_range(0.0..1000.0);
        worst = worst.max((spec.eval(x) - spec.eval(x + 2.0 * PI / lam)).abs());
    }
    suite.check(
        "phase-reduction-period",
        worst <= 1e-9,
        format!("max period defect {worst:e}"),
    );

    // P + Q = 2 * even-restricted Q-type sum.
    let tau = 9.0;
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let x = rng.gen_range(0.0..20.0);
        let p = lau_tsang_p(x, tau, &tables)?;
        let q = lau_tsang_q(x, tau, &tables)?;
        let mut even = 0.0;
        for n in (2..=(tau * tau) as u64).step_by(2) {
            let w = triangle_weight(n, tau);
            let turns = crate::dd::Dd::sqrt_f64(n as f64).mul_f64(2.0).mul_f64(x);
            even += tables.d(n) as f64
                * (n as f64).powf(-0.75)
                * crate::dd::cos_turns(turns, 0.0)
                * w;
        }
        worst = worst.max((p + q - 2.0 * even).abs());
    }
    suite.check(
        "lau-tsang-parity",
        worst <= 1e-12,
        format!("max |P+Q-2*even| = {worst:e}"),
    );

    // Series specs expose the advertised first terms.
    let div = divisor_series_spec(2.0, &tables)?;
    let circ = circle_series_spec(2.0, &tables)?;
    let shape_ok = div.len() == 8
        && (div.frequencies()[0] - 4.0 * PI).abs() < 1e-12
        && circ.coefficients()[0] == 4.0
        && circ.position_of_n(3).is_none();
    suite.check("spec-shapes", shape_ok, "divisor/circle leading terms".into());

    Ok(suite.checks)
}

fn resonator_suite(rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>> {
    let mut suite = Suite::new();
    let tables = build_tables(2000, &[])?;

    // Configs whose frequencies truly lie in [C1*alpha, 2*alpha]; the
    // divisor map does that for alpha in roughly [8 pi^2, 16 pi^2 / C1].
    let configs = [
        build_frequency_set(100.0, 1.0, 1.0, Variant::Divisor, &tables)?.take_prefix(6)?,
        build_frequency_set(100.0, 1.0, 1.5, Variant::Divisor, &tables)?,
        build_frequency_set(120.0, 1.0, 0.5, Variant::Divisor, &tables)?.take_prefix(10)?,
    ];

    // Members distinct and squarefree.
    let mut ok = true;
    for cfg in &configs {
        let mut ns = cfg.member_ns();
        let before = ns.len();
        ns.dedup();
        ok &= ns.len() == before && ns.iter().all(|&n| tables.is_squarefree(n));
    }
    suite.check("members-distinct-squarefree", ok, "exact integer check".into());

    // Window containment diagnostic.
    let window_ok = configs.iter().all(|c| c.frequencies_in_window());
    suite.check(
        "frequencies-in-window",
        window_ok,
        "lambda in [C1 a, 2a] for every member".into(),
    );

    // Lemma sup bound |R(x)|^2 <= e^{2M/C1} over random x.
    let mut violations = 0u32;
    for cfg in &configs {
        let cap = (2.0 * cfg.len() as f64 / cfg.c1()).exp();
        for _ in 0..1000 {
            let x = rng.gen_range(0.0..10_000.0);
            if eval_resonator_product(cfg, x).norm_sqr() > cap * (1.0 + 1e-9) {
                violations += 1;
            }
        }
    }
    suite.check(
        "sup-norm-bound",
        violations == 0,
        format!("{violations} violations over 1000 x per config"),
    );

    // Halving epsilon never increases the product/sum discrepancy.
    let base = configs[0].clone();
    let xs: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..500.0)).collect();
    let mut prev_worst = f64::INFINITY;
    let mut monotone = true;
    for eps in [1e-2, 5e-3, 2.5e-3, 1.25e-3] {
        let cfg = base.clone().with_support_epsilon(eps)?;
        let sup = expand_support(&cfg)?;
        let worst = xs
            .iter()
            .map(|&x| (eval_resonator_product(&cfg, x) - eval_resonator_sum(&sup, x)).norm())
            .fold(0.0, f64::max);
        if worst > prev_worst * (1.0 + 1e-9) {
            monotone = false;
        }
        prev_worst = worst;
    }
    suite.check(
        "epsilon-halving-monotone",
        monotone,
        "discrepancy never grew as epsilon halved".into(),
    );

    // Truncation bound honored at random x.
    let cfg = base.clone().with_support_epsilon(1e-6)?;
    let sup = expand_support(&cfg)?;
    let bound = sum_truncation_bound(&cfg, &sup);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = rng.gen_range(0.0..2000.0);
        worst = worst.max((eval_resonator_product(&cfg, x) - eval_resonator_sum(&sup, x)).norm());
    }
    suite.check(
        "product-sum-tail-bound",
        worst <= bound * (1.0 + 1e-9),
        format!("worst {worst:e} vs bound {bound:e}"),
    );

    // Weight/degree inequality r(u) <= e^{-C1 deg / 2}.
    let mut ok = true;
    for e in sup.elements() {
        if e.weight > (-cfg.c1() * e.degree as f64 / 2.0).exp() * (1.0 + 1e-12) {
            ok = false;
        }
    }
    suite.check(
        "degree-weight-bound",
        ok,
        format!("{} support elements", sup.len()),
    );

    // Multiplicativity spot check on represented pairs.
    let els = sup.elements();
    let mut checked = 0u32;
    let mut worst = 0.0f64;
    'outer: for i in 0..els.len() {
        for j in i..els.len() {
            let u = els[i].freq + els[j].freq;
            if let Some(e) = els.iter().find(|e| {
                (e.freq - u).abs() < 1e-7 && e.degree == els[i].degree + els[j].degree
            }) {
                let prod = els[i].weight * els[j].weight;
                worst = worst.max((e.weight - prod).abs() / prod.max(1e-300));
                checked += 1;
                if checked >= 100 {
                    break 'outer;
                }
            }
        }
    }
    suite.check(
        "weight-multiplicative",
        checked > 0 && worst <= 1e-12,
        format!("{checked} pairs, worst relative defect {worst:e}"),
    );

    Ok(suite.checks)
}

fn random_kernel_case(rng: &mut ChaCha8Rng) -> (f64, ExpSumSpec) {
    loop {
        let alpha = rng.gen_range(0.5..10.0);
        let n = rng.gen_range(1..=5);
        let mut freqs: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(0.05 * alpha..3.95 * alpha))
            .collect();
        freqs.sort_by(f64::total_cmp);
        freqs.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
        let coeffs: Vec<f64> = freqs.iter().map(|_| rng.gen_range(0.05..0.5)).collect();
        if let Ok(spec) = ExpSumSpec::synthetic(coeffs, freqs, rng.gen_range(-3.0..3.0)) {
            return (alpha, spec);
        }
    }
}

fn kernel_suite(rng: &mut ChaCha8Rng, fault: Fault) -> Result<Vec<CheckResult>> {
    let mut suite = Suite::new();

    // Weight symmetry (exact on dyadic inputs, where 2a +- t round-trips)
    // and scaling (1e-12).
    let mut sym_ok = true;
    let mut scale_worst = 0.0f64;
    for _ in 0..200 {
        let alpha = rng.gen_range(8u32..=640) as f64 / 32.0;
        let t = rng.gen_range(0u32..=(96 * 32)) as f64 / 32.0;
        sym_ok &= weight(2.0 * alpha + t, alpha) == weight(2.0 * alpha - t, alpha);
        let c = rng.gen_range(0.1..10.0);
        let lam = rng.gen_range(0.0..5.0 * alpha);
        let diff = (weight(c * lam, c * alpha) - c * weight(lam, alpha)).abs();
        scale_worst = scale_worst.max(diff / (c * weight(lam, alpha)).abs().max(1.0));
    }
    suite.check("weight-symmetry", sym_ok, "w(2a+t) == w(2a-t) exactly".into());
    suite.check(
        "weight-scaling",
        scale_worst <= 1e-12,
        format!("worst relative defect {scale_worst:e}"),
    );

    // Lemma identity: numeric vs exact within the reported budget. Under
    // an injected weight fault, the reference side is wrong and the check
    // is expected to fail.
    let mut worst_excess = f64::NEG_INFINITY;
    let mut compared = 0u32;
    for _ in 0..8 {
        let (alpha, spec) = random_kernel_case(rng);
        let params = KernelParams::for_spec(alpha, &spec, 1e-2)?;
        for _ in 0..2 {
            let x = rng.gen_range(0.0..100.0);
            let numeric = convolve_numeric(&spec, x, &params)?;
            let exact = match fault {
                Fault::None => convolve_exact(&spec, x, alpha),
                Fault::KernelWeight => convolve_exact_with(&spec, x, alpha, |l, a| {
                    weight(l, a) + 0.1 * (1.0 + l)
                }),
            };
            let diff = (numeric.value - exact).norm();
            worst_excess = worst_excess.max(diff - numeric.budget());
            compared += 1;
        }
    }
    suite.check(
        "lemma-identity",
        worst_excess <= 0.0,
        format!("{compared} comparisons, worst diff-budget = {worst_excess:e}"),
    );

    // Phase covariance: exact formula times e^{i beta}.
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (alpha, spec) = random_kernel_case(rng);
        let beta = spec.phase();
        let flat = ExpSumSpec::synthetic(
            spec.coefficients().to_vec(),
            spec.frequencies().to_vec(),
            0.0,
        )?;
        let x = rng.gen_range(0.0..50.0);
        let lhs = convolve_exact(&spec, x, alpha);
        let rhs = num_complex::Complex64::new(beta.cos(), beta.sin()) * convolve_exact(&flat, x, alpha);
        worst = worst.max((lhs - rhs).norm());
    }
    suite.check(
        "phase-covariance",
        worst <= 1e-12,
        format!("worst |e^ib F0 - Fb| = {worst:e}"),
    );

    Ok(suite.checks)
}

fn engine_suite(rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>> {
    let mut suite = Suite::new();
    let tables = build_tables(4000, &[])?;
    let spec = divisor_series_spec(13.0, &tables)?;

    // I2 monotone under support growth and above the Lemma floor.
    let cfg = build_frequency_set(100.0, 1.0, 1.0, Variant::Divisor, &tables)?;
    let y2 = 1000.0;
    let mut prev = 0.0;
    let mut monotone = true;
    let mut floor_ok = true;
    for eps in [0.3, 0.05, 1e-3, 1e-5] {
        let c = cfg.clone().with_support_epsilon(eps)?.take_prefix(8)?;
        let sup = expand_support(&c)?;
        let i2 = compute_i2(&sup, y2);
        if i2 + 1e-12 < prev {
            monotone = false;
        }
        prev = i2;
        if eps <= 1e-3 {
            let bound = (2.0 * PI).sqrt() * y2 * (c.len() as f64 / 7.0).exp();
            floor_ok &= i2 >= bound;
        }
    }
    suite.check("i2-monotone", monotone, "larger support, larger I2".into());
    suite.check("i2-lemma-floor", floor_ok, "I2 >= sqrt(2pi) Y2 e^{M/7}".into());

    // Prediction constant pi/(4e), exact against reordered summation.
    let params = EngineParams::divisor_defaults(1000.0, 1.0)?;
    let bound = predicted_lower_bound(&spec, &cfg, &params)?;
    let mut a_sum_rev = 0.0;
    for m in cfg.members().iter().rev() {
        a_sum_rev += spec.coefficients()[spec.position_of_n(m.n).unwrap()];
    }
    let diff = (bound.main - PI / (4.0 * E) * a_sum_rev).abs();
    suite.check(
        "prediction-constant",
        diff <= 1e-12 * bound.main.max(1.0),
        format!("|main - (pi/4e) sum| = {diff:e}"),
    );

    // Scan refinement never loses to the raw grid.
    let tone = ExpSumSpec::synthetic(
        vec![1.0, 0.8],
        vec![1.0, rng.gen_range(2.0..5.0)],
        rng.gen_range(-1.0..1.0),
    )?;
    let res = scan_max(&tone, 0.0, 100.0, 0)?;
    let mut grid_best = 0.0f64;
    let mut j = 0u64;
    while j < res.samples {
        grid_best = grid_best.max(tone.eval(res.grid_lo + j as f64 * res.grid_step).abs());
        j += 7; // sparse subsample is enough for a lower bound
    }
    suite.check(
        "scan-refinement-dominates",
        res.value >= grid_best - 1e-12,
        format!("refined {} vs grid sample {grid_best}", res.value),
    );

    // Growth report null case.
    let target = GrowthTarget::custom(0.0, 0.0, 0.0, "null");
    let rep = growth_report_values(&[(100.0, 1.0), (1000.0, 1.0), (10_000.0, 1.0)], &target)?;
    let null_ok = rep.rows.iter().all(|r| r.ratio == 1.0) && rep.slope_loglog.abs() < 1e-12;
    suite.check("growth-null-case", null_ok, "flat series, zero slope".into());

    Ok(suite.checks)
}

pub const SUITES: [&str; 6] = ["arith", "series", "resonator", "kernel", "engine", "all"];

/// Run one named suite (or all of them) with the given seed.
pub fn run_suite(name: &str, seed: u64, fault: Fault) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = match name {
        "arith" => arith_suite(&mut rng)?,
        "series" => series_suite(&mut rng)?,
        "resonator" => resonator_suite(&mut rng)?,
        "kernel" => kernel_suite(&mut rng, fault)?,
        "engine" => engine_suite(&mut rng)?,
        "all" => {
            let mut all = Vec::new();
            for s in ["arith", "series", "resonator", "kernel", "engine"] {
                let rep = run_suite(s, seed, fault)?;
                for mut c in rep.checks {
                    c.name = format!("{s}/{}", c.name);
                    all.push(c);
                }
            }
            all
        }
        other => {
            return Err(Error::Argument(format!(
                "unknown suite '{other}'; expected one of {SUITES:?}"
            )))
        }
    };
    Ok(SuiteReport {
        suite: name.to_string(),
        seed,
        checks,
    })
}
