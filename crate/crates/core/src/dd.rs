//! Double-double (compensated) arithmetic for phase-exact trigonometric sums.
//!
//! A value is stored as an unevaluated sum `hi + lo` with |lo| <= ulp(hi)/2,
//! giving roughly 106 bits of significand. This is enough to reduce phases
//! lambda*x mod 2pi with absolute error well under 1e-10 for |lambda*x| up
//! to 2^50, which plain f64 cannot do once the product passes ~2^30.

/// Unevaluated sum of two doubles, |lo| <= ulp(hi)/2 after renormalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

/// 2*pi to double-double precision.
pub const TWO_PI: Dd = Dd {
    hi: std::f64::consts::TAU,
    lo: 2.4492935982947064e-16,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    debug_assert!(a == 0.0 || a.abs() >= b.abs() || a.is_nan());
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

/// Exact product via FMA: a*b = p + e.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

#[allow(clippy::should_implement_trait)] // plain methods keep call sites monomorphic
impl Dd {
    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn add_f64(self, x: f64) -> Dd {
        let (s, e) = two_sum(self.hi, x);
        let e = e + self.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, other: Dd) -> Dd {
        self.add(Dd {
            hi: -other.hi,
            lo: -other.lo,
        })
    }

    #[inline]
    pub fn mul_f64(self, x: f64) -> Dd {
        let (p, e) = two_prod(self.hi, x);
        let e = e + self.lo * x;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    /// Quotient refined with one Newton step; relative error ~2^-104.
    #[inline]
    pub fn div(self, other: Dd) -> Dd {
        let q0 = self.hi / other.hi;
        let r = self.sub(other.mul_f64(q0));
        let q1 = r.hi / other.hi;
        let r2 = r.sub(other.mul_f64(q1));
        let q2 = r2.hi / other.hi;
        let (hi, lo) = quick_two_sum(q0, q1 + q2);
        Dd { hi, lo }
    }

    /// sqrt(x) for nonnegative f64 x, refined to double-double accuracy.
    pub fn sqrt_f64(x: f64) -> Dd {
        if x == 0.0 {
            return Dd::from_f64(0.0);
        }
        let s = x.sqrt();
        // One Newton step: s + (x - s^2) / (2s), with the residual in exact arithmetic.
        let (p, e) = two_prod(s, s);
        let residual = (x - p) - e;
        let corr = residual / (2.0 * s);
        let (hi, lo) = quick_two_sum(s, corr);
        Dd { hi, lo }
    }

    /// k-th root of a positive integer n, refined with one Newton step in
    /// double-double. Used for Piltz frequencies 2*pi*k*n^(1/k).
    pub fn nth_root_u64(n: u64, k: u32) -> Dd {
        debug_assert!(n >= 1 && k >= 1);
        if k == 1 {
            return Dd::from_f64(n as f64);
        }
        if k == 2 {
            return Dd::sqrt_f64(n as f64);
        }
        let xf = n as f64;
        let y = xf.powf(1.0 / k as f64);
        // Newton on y^k = n: y' = y - (y^k - n) / (k y^(k-1)).
        let yd = Dd::from_f64(y);
        let mut pow = yd;
        for _ in 1..k {
            pow = pow.mul(yd);
        }
        let deriv = k as f64 * y.powi(k as i32 - 1);
        let residual = pow.add_f64(-xf);
        let corr = -residual.value() / deriv;
        let (hi, lo) = quick_two_sum(y, corr);
        Dd { hi, lo }
    }

    /// Fractional part in [0, 1). Requires |self| < 2^52 so that the floor
    /// of `hi` is exact.
    #[inline]
    pub fn fract(self) -> Dd {
        debug_assert!(self.hi.abs() < 4.503_599_627_370_496e15);
        let f = self.hi.floor();
        let (s, e) = two_sum(self.hi - f, self.lo);
        let mut r = Dd { hi: s, lo: e };
        if r.hi < 0.0 {
            r = r.add_f64(1.0);
        } else if r.hi >= 1.0 {
            r = r.add_f64(-1.0);
        }
        r
    }
}

/// cos(2*pi*turns + beta) where `turns` carries the full-precision phase in
/// revolutions. The reduction error is bounded by ~1e-15 in the final angle.
#[inline]
pub fn cos_turns(turns: Dd, beta: f64) -> f64 {
    let mut t = turns.fract();
    // Center to [-0.5, 0.5) so the final angle stays within [-pi, pi).
    if t.hi >= 0.5 {
        t = t.add_f64(-1.0);
    }
    let angle = t.mul(TWO_PI);
    (angle.hi + beta + angle.lo).cos()
}

/// (cos, sin) of 2*pi*turns + beta, same reduction as [`cos_turns`].
#[inline]
pub fn cos_sin_turns(turns: Dd, beta: f64) -> (f64, f64) {
    let mut t = turns.fract();
    if t.hi >= 0.5 {
        t = t.add_f64(-1.0);
    }
    let angle = t.mul(TWO_PI);
    let a = angle.hi + beta + angle.lo;
    (a.cos(), a.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_refinement_beats_plain_double() {
        for n in [2u64, 3, 5, 7, 1_000_003, 999_999_937] {
            let s = Dd::sqrt_f64(n as f64);
            // s^2 should reproduce n to ~2^-100 relative.
            let sq = s.mul(s);
            let err = (sq.value() - n as f64).abs() + sq.lo.abs() * 0.0;
            let resid = sq.add_f64(-(n as f64));
            assert!(err <= 1e-9, "n={n} err={err}");
            assert!(
                resid.value().abs() < n as f64 * 1e-30,
                "n={n} resid={}",
                resid.value()
            );
        }
    }

    #[test]
    fn fract_handles_large_values() {
        // 10^12 + 0.25 exactly representable.
        let v = Dd::from_f64(1.0e12).add_f64(0.25);
        let f = v.fract();
        assert!((f.value() - 0.25).abs() < 1e-16);
    }

    #[test]
    fn cos_turns_matches_direct_for_small_args() {
        for i in 0..100 {
            let x = i as f64 * 0.137;
            let lam = 1.75;
            let turns = Dd::from_f64(lam / (2.0 * std::f64::consts::PI)).mul_f64(x);
            let direct = (lam * x + 0.3).cos();
            let reduced = cos_turns(turns, 0.3);
            assert!((direct - reduced).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn nth_root_cubes_back() {
        for n in [2u64, 10, 12345, 999_983] {
            let r = Dd::nth_root_u64(n, 3);
            let cube = r.mul(r).mul(r);
            assert!(
                (cube.value() - n as f64).abs() < n as f64 * 1e-24,
                "n={n} cube={}",
                cube.value()
            );
        }
    }
}
