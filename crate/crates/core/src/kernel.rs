//! Fejér-type convolution identity.
//!
//! Convolving F_beta against (sin(alpha u)/u)^2 e^{-2 i alpha u} picks out
//! each frequency with the triangular weight
//!   w_alpha(lambda) = (pi/2) max{0, 2 alpha - |lambda - 2 alpha|},
//! supported on (0, 4 alpha) and peaking at pi*alpha. `convolve_exact`
//! evaluates the closed-form right side; `convolve_numeric` integrates the
//! left side by composite Simpson so the identity can be checked with an
//! explicit error budget.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dd::cos_sin_turns;
use crate::error::{Error, Result};
use crate::series::ExpSumSpec;

/// w_alpha(lambda) = (pi/2) max{0, 2 alpha - |lambda - 2 alpha|}.
pub fn weight(lambda: f64, alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0);
    0.5 * PI * (2.0 * alpha - (lambda - 2.0 * alpha).abs()).max(0.0)
}

/// Quadrature window and step for the numeric side.
#[derive(Debug, Clone, Copy)]
pub struct KernelParams {
    pub alpha: f64,
    /// Half-width U of the truncated integral.
    pub window: f64,
    /// Base Simpson step h; the integrand is resolved when
    /// h <= pi / (4 (lambda_max + 2 alpha)).
    pub quad_step: f64,
}

impl KernelParams {
    pub fn new(alpha: f64, window: f64, quad_step: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(window > 0.0) || !(quad_step > 0.0) {
            return Err(Error::Argument(
                "alpha, window, and quad_step must all be positive".into(),
            ));
        }
        if window < 10.0 / alpha {
            return Err(Error::Argument(format!(
                "window {window} below 10/alpha = {}",
                10.0 / alpha
            )));
        }
        Ok(KernelParams {
            alpha,
            window,
            quad_step,
        })
    }

    /// Defaults sized for an absolute tolerance: the window makes the
    /// reported tail 2*Sum(a)/U at most half the tolerance, and the step
    /// oversamples the fastest oscillation eightfold.
    pub fn for_spec(alpha: f64, spec: &ExpSumSpec, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(Error::Argument(format!("tolerance {tolerance} <= 0")));
        }
        let coeff_sum = spec.coefficient_sum();
        let window = (10.0 / alpha).max(4.0 * coeff_sum / tolerance);
        let quad_step = PI / (16.0 * (spec.lambda_max() + 2.0 * alpha));
        KernelParams::new(alpha, window, quad_step)
    }
}

/// Closed form: (1/2) e^{i beta} Sum a_n w_alpha(lambda_n) e^{i lambda_n x}.
pub fn convolve_exact(spec: &ExpSumSpec, x: f64, alpha: f64) -> Complex64 {
    convolve_exact_with(spec, x, alpha, weight)
}

/// Closed form with a caller-supplied frequency weight. The verify suites
/// use this to demonstrate that a broken weight is caught by the identity
/// check; production callers want [`convolve_exact`].
pub fn convolve_exact_with(
    spec: &ExpSumSpec,
    x: f64,
    alpha: f64,
    weight_fn: impl Fn(f64, f64) -> f64,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let coeffs = spec.coefficients();
    let freqs = spec.frequencies();
    for i in 0..coeffs.len() {
        let w = weight_fn(freqs[i], alpha);
        if w == 0.0 {
            continue;
        }
        let (c, s) = cos_sin_turns(spec.turns()[i].mul_f64(x), 0.0);
        acc += Complex64::new(coeffs[i] * w * c, coeffs[i] * w * s);
    }
    let beta = spec.phase();
    0.5 * Complex64::new(beta.cos(), beta.sin()) * acc
}

/// Numeric convolution value with its error budget.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureOutcome {
    pub value: Complex64,
    /// Bound on the discarded |u| > U tail: 2 * Sum(a_n) / U.
    pub tail_bound: f64,
    /// Richardson estimate |S(h) - S(h/2)| plus a rounding floor.
    pub quad_budget: f64,
    pub samples: u64,
}

impl QuadratureOutcome {
    pub fn budget(&self) -> f64 {
        self.tail_bound + self.quad_budget
    }
}

const RESYNC_INTERVAL: usize = 4096;

/// Rotating phase state advanced by a fixed step.
#[derive(Clone, Copy)]
struct Rotor {
    c: f64,
    s: f64,
    dc: f64,
    ds: f64,
}

impl Rotor {
    fn new(angle0: f64, step: f64) -> Self {
        Rotor {
            c: angle0.cos(),
            s: angle0.sin(),
            dc: step.cos(),
            ds: step.sin(),
        }
    }

    #[inline]
    fn advance(&mut self) {
        let c = self.c;
        let s = self.s;
        self.c = c * self.dc - s * self.ds;
        self.s = s * self.dc + c * self.ds;
    }
}

/// Simpson quadrature of int_{-U}^{U} F_beta(x+u) (sin(alpha u)/u)^2
/// e^{-2 i alpha u} du on a symmetric grid containing u = 0, where the
/// integrand takes its limit value F_beta(x) * alpha^2.
///
/// Returns the fine-grid Simpson value together with the reported tail
/// bound and a coarse/fine comparison as the quadrature budget.
pub fn convolve_numeric(
    spec: &ExpSumSpec,
    x: f64,
    params: &KernelParams,
) -> Result<QuadratureOutcome> {
    let alpha = params.alpha;
    let u_cap = params.window;
    let lambda_max = spec.lambda_max();
    let h_max = PI / (4.0 * (lambda_max + 2.0 * alpha));
    if params.quad_step > h_max {
        return Err(Error::StepTooCoarse {
            h: params.quad_step,
            max: h_max,
        });
    }
    if u_cap < 10.0 / alpha {
        return Err(Error::Argument(format!(
            "window {u_cap} below 10/alpha = {}",
            10.0 / alpha
        )));
    }

    // Coarse grid: 2m intervals over [-U, U]; fine grid halves the step.
    let m = (u_cap / params.quad_step).ceil() as usize;
    let h_coarse = u_cap / m as f64;
    let h_fine = 0.5 * h_coarse;
    let n_fine = 4 * m; // fine intervals; sample index k in -2m..=2m
    let half = 2 * m as i64;

    let coeffs = spec.coefficients();
    let n_terms = coeffs.len();
    let beta = spec.phase();

    let mut sum_fine = Complex64::new(0.0, 0.0);
    let mut sum_coarse = Complex64::new(0.0, 0.0);
    let mut sum_abs = 0.0;

    let mut term_rotors: Vec<Rotor> = Vec::with_capacity(n_terms);
    let mut sin_rotor = Rotor::new(0.0, 0.0);
    let mut exp_rotor = Rotor::new(0.0, 0.0);

    for (offset, k) in (-half..=half).enumerate() {
        let u = k as f64 * h_fine;
        if offset % RESYNC_INTERVAL == 0 {
            // Re-seed every rotor from full-precision phases.
            term_rotors.clear();
            for t in 0..n_terms {
                let turns = spec.turns()[t].mul_f64(x).add(spec.turns()[t].mul_f64(u));
                let (c, s) = cos_sin_turns(turns, beta);
                let step = spec.frequencies()[t] * h_fine;
                term_rotors.push(Rotor {
                    c,
                    s,
                    dc: step.cos(),
                    ds: step.sin(),
                });
            }
            sin_rotor = Rotor::new(alpha * u, alpha * h_fine);
            exp_rotor = Rotor::new(-2.0 * alpha * u, -2.0 * alpha * h_fine);
        }

        let mut f_val = 0.0;
        for (t, rotor) in term_rotors.iter().enumerate() {
            f_val += coeffs[t] * rotor.c;
        }
        let kernel = if k == 0 {
            alpha * alpha
        } else {
            let ratio = sin_rotor.s / u;
            ratio * ratio
        };
        let sample = Complex64::new(exp_rotor.c, exp_rotor.s) * (f_val * kernel);

        // Simpson weights: endpoints 1, odd nodes 4, even interior 2.
        let j = (k + half) as usize;
        let w_fine = if j == 0 || j == n_fine {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum_fine += sample * w_fine;
        sum_abs += sample.norm() * w_fine;
        if j % 2 == 0 {
            let jc = j / 2;
            let w_coarse = if jc == 0 || jc == 2 * m {
                1.0
            } else if jc % 2 == 1 {
                4.0
            } else {
                2.0
            };
            sum_coarse += sample * w_coarse;
        }

        for rotor in term_rotors.iter_mut() {
            rotor.advance();
        }
        sin_rotor.advance();
        exp_rotor.advance();
    }

    let s_fine = sum_fine * (h_fine / 3.0);
    let s_coarse = sum_coarse * (h_coarse / 3.0);
    let rounding_floor = 8.0 * f64::EPSILON * (sum_abs * h_fine / 3.0);
    let tail_bound = 2.0 * spec.coefficient_sum() / u_cap;
    Ok(QuadratureOutcome {
        value: s_fine,
        tail_bound,
        quad_budget: (s_fine - s_coarse).norm() + rounding_floor,
        samples: (n_fine + 1) as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ExpSumSpec;

    #[test]
    fn weight_pinned_values() {
        let alpha = 3.7;
        assert_eq!(weight(2.0 * alpha, alpha), PI * alpha);
        assert_eq!(weight(4.0 * alpha, alpha), 0.0);
        assert_eq!(weight(-alpha, alpha), 0.0);
        assert!((weight(alpha, alpha) - 0.5 * PI * alpha).abs() < 1e-12);
    }

    #[test]
    fn weight_symmetry_and_scaling() {
        // Dyadic alpha and t keep 2*alpha +- t exactly representable, so
        // the symmetry holds bit for bit.
        let alpha = 1.25;
        for t in [0.0, 0.25, 0.5, 1.0, 2.5] {
            assert_eq!(
                weight(2.0 * alpha + t, alpha),
                weight(2.0 * alpha - t, alpha)
            );
        }
        for c in [0.5, 2.0, 7.3] {
            for lam in [0.3, 1.0, 2.2, 4.9] {
                let lhs = weight(c * lam, c * alpha);
                let rhs = c * weight(lam, alpha);
                assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn exact_single_term() {
        let alpha = 1.0;
        let spec = ExpSumSpec::synthetic(vec![1.0], vec![2.0 * alpha], 0.0).unwrap();
        let v = convolve_exact(&spec, 0.0, alpha);
        assert!((v.re - 0.5 * PI * alpha).abs() < 1e-12);
        assert!(v.im.abs() < 1e-12);

        let spec_i = ExpSumSpec::synthetic(vec![1.0], vec![2.0 * alpha], PI / 2.0).unwrap();
        let vi = convolve_exact(&spec_i, 0.0, alpha);
        assert!(vi.re.abs() < 1e-12);
        assert!((vi.im - 0.5 * PI * alpha).abs() < 1e-12);
    }

    #[test]
    fn exact_outside_support_is_zero() {
        let alpha = 0.25;
        let spec = ExpSumSpec::synthetic(vec![1.0, 2.0], vec![alpha * 4.0, alpha * 5.0], 0.3).unwrap();
        assert_eq!(convolve_exact(&spec, 1.7, alpha), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn phase_covariance() {
        let alpha = 2.0;
        let beta = 0.9;
        let a = vec![0.5, 1.2];
        let l = vec![1.0, 3.1];
        let with_beta = ExpSumSpec::synthetic(a.clone(), l.clone(), beta).unwrap();
        let without = ExpSumSpec::synthetic(a, l, 0.0).unwrap();
        for x in [0.0, 1.3, 9.9] {
            let lhs = convolve_exact(&with_beta, x, alpha);
            let rhs = Complex64::new(beta.cos(), beta.sin()) * convolve_exact(&without, x, alpha);
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn numeric_matches_pi_over_two() {
        // Single term a=1, lambda=2*alpha, alpha=1, x=0, U=2000, h=0.01:
        // the exact value is pi/2; the tail alone allows 1e-3.
        let spec = ExpSumSpec::synthetic(vec![1.0], vec![2.0], 0.0).unwrap();
        let params = KernelParams::new(1.0, 2000.0, 0.01).unwrap();
        let out = convolve_numeric(&spec, 0.0, &params).unwrap();
        assert!(
            (out.value.re - 0.5 * PI).abs() < 2e-3,
            "got {} budget {}",
            out.value.re,
            out.budget()
        );
        assert!((out.value - convolve_exact(&spec, 0.0, 1.0)).norm() <= out.budget());
    }

    #[test]
    fn numeric_outside_support_small() {
        let alpha = 1.0;
        let spec = ExpSumSpec::synthetic(vec![1.0], vec![5.0 * alpha], 0.0).unwrap();
        let params = KernelParams::for_spec(alpha, &spec, 1e-2).unwrap();
        let out = convolve_numeric(&spec, 0.4, &params).unwrap();
        assert!(out.value.norm() <= out.budget(), "value {}", out.value.norm());
    }

    #[test]
    fn step_too_coarse_rejected() {
        let spec = ExpSumSpec::synthetic(vec![1.0], vec![100.0], 0.0).unwrap();
        let params = KernelParams::new(1.0, 50.0, 0.01).unwrap();
        assert!(matches!(
            convolve_numeric(&spec, 0.0, &params),
            Err(Error::StepTooCoarse { .. })
        ));
    }

    #[test]
    fn identity_on_a_few_fixed_specs() {
        let cases = [
            (1.5, vec![0.4, 0.8, 0.3], vec![0.7, 2.9, 5.5], -0.7),
            (0.8, vec![1.0, 0.2], vec![1.1, 3.0], 2.0),
        ];
        for (alpha, a, l, beta) in cases {
            let spec = ExpSumSpec::synthetic(a, l, beta).unwrap();
            let params = KernelParams::for_spec(alpha, &spec, 1e-2).unwrap();
            for x in [0.0, 3.7, 42.0] {
                let num = convolve_numeric(&spec, x, &params).unwrap();
                let exact = convolve_exact(&spec, x, alpha);
                let diff = (num.value - exact).norm();
                assert!(
                    diff <= num.budget(),
                    "alpha={alpha} x={x}: diff {diff} > budget {}",
                    num.budget()
                );
                assert!(num.budget() <= 1e-2);
            }
        }
    }
}
