//! Truncation-residual behavior that needs million-term specs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reslab_core::arith::build_tables;
use reslab_core::series::{divisor_series_spec, truncation_residual_for};

/// X = 100, x = 30: the residual sits just under 0.2. x^2 = 900 is a jump
/// of Delta with d(900) = 27, so the midpoint convention is what makes the
/// comparison meaningful at all (the one-sided value is off by ~10.95).
#[test]
fn residual_at_x30_under_point_two() {
    let tables = build_tables(1_000_000, &[]).unwrap();
    let spec = divisor_series_spec(100.0, &tables).unwrap();
    let r = truncation_residual_for(&spec, 30.0).unwrap();
    assert!(r.abs() < 0.2, "residual {r}");
}

/// Doubling the truncation X improves the mean residual over a fixed
/// x-window (50 samples of [sqrt(X), X^(3/2)] at X = 25).
#[test]
fn mean_residual_decreases_with_longer_truncation() {
    let tables = build_tables(125_000, &[]).unwrap();
    let short = divisor_series_spec(25.0, &tables).unwrap();
    let long = divisor_series_spec(50.0, &tables).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let xs: Vec<f64> = (0..50).map(|_| rng.gen_range(5.0..125.0)).collect();
    let mean = |spec: &reslab_core::series::ExpSumSpec| -> f64 {
        xs.iter()
            .map(|&x| truncation_residual_for(spec, x).unwrap().abs())
            .sum::<f64>()
            / xs.len() as f64
    };
    let mean_short = mean(&short);
    // The longer spec's uniformity window [sqrt(50), 50^1.5] contains all
    // samples at or above sqrt(50); compare on the common part.
    let common: Vec<f64> = xs.iter().copied().filter(|&x| x >= 50.0f64.sqrt()).collect();
    let mean_on = |spec: &reslab_core::series::ExpSumSpec, pts: &[f64]| -> f64 {
        pts.iter()
            .map(|&x| truncation_residual_for(spec, x).unwrap().abs())
            .sum::<f64>()
            / pts.len() as f64
    };
    let short_common = mean_on(&short, &common);
    let long_common = mean_on(&long, &common);
    println!(
        "mean |residual|: short {mean_short:.4} (all), short {short_common:.4} vs long {long_common:.4} (common window)"
    );
    assert!(
        long_common < short_common,
        "longer truncation did not improve the mean: {long_common} vs {short_common}"
    );
}
