//! Sieved arithmetic functions and exact error terms.
//!
//! The tables built here are the ground truth every series module is checked
//! against: divisor counts d(n), sums-of-two-squares counts r(n), Piltz
//! counts d_k(n), distinct-prime-factor counts omega(n), and squarefree
//! flags, all up to a configured limit. The error terms Delta(x), P(x) and
//! Delta_k(x) are computed exactly in 64-bit integers before the main term
//! is subtracted in floating point.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

mod cache;
mod residue;

pub use cache::{cache_file_name, read_cache, write_cache, CACHE_MAGIC, CACHE_VERSION};
pub use residue::{residue_polynomial, MainTermCoefficients, GAMMA_0, GAMMA_1, GAMMA_2};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = GAMMA_0;

/// Hard cap on table size; one u32 table at this limit is 512 MiB.
pub const MAX_TABLE_LIMIT: u64 = 1 << 27;

/// Sieved multiplicative-function tables for 1..=limit.
///
/// Immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct ArithTables {
    limit: u64,
    d: Vec<u32>,
    r2: Vec<u32>,
    dk: BTreeMap<u32, Vec<u32>>,
    omega: Vec<u8>,
    squarefree: Vec<bool>,
}

impl ArithTables {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    #[inline]
    fn idx(&self, n: u64) -> usize {
        assert!(n >= 1 && n <= self.limit, "n={n} outside table range");
        (n - 1) as usize
    }

    /// Divisor count d(n).
    #[inline]
    pub fn d(&self, n: u64) -> u64 {
        self.d[self.idx(n)] as u64
    }

    /// Number of representations of n as an ordered sum of two squares.
    #[inline]
    pub fn r2(&self, n: u64) -> u64 {
        self.r2[self.idx(n)] as u64
    }

    /// Piltz count d_k(n); requires the k-table to have been built.
    pub fn dk(&self, k: u32, n: u64) -> Result<u64> {
        match k {
            1 => Ok(1),
            2 => Ok(self.d(n)),
            _ => self
                .dk
                .get(&k)
                .map(|t| t[self.idx(n)] as u64)
                .ok_or_else(|| Error::Config(format!("no d_{k} table; rebuild with k={k}"))),
        }
    }

    /// Number of distinct prime factors omega(n).
    #[inline]
    pub fn omega(&self, n: u64) -> u32 {
        self.omega[self.idx(n)] as u32
    }

    #[inline]
    pub fn is_squarefree(&self, n: u64) -> bool {
        self.squarefree[self.idx(n)]
    }

    pub fn k_list(&self) -> Vec<u32> {
        self.dk.keys().copied().collect()
    }

    pub fn has_k(&self, k: u32) -> bool {
        k <= 2 || self.dk.contains_key(&k)
    }

    /// Unchecked slice access for hot loops; index 0 holds n = 1.
    pub fn d_slice(&self) -> &[u32] {
        &self.d
    }

    pub fn r2_slice(&self) -> &[u32] {
        &self.r2
    }

    pub(crate) fn parts(&self) -> TableParts<'_> {
        (
            self.limit,
            &self.d,
            &self.r2,
            &self.dk,
            &self.omega,
            &self.squarefree,
        )
    }

    pub(crate) fn from_parts(
        limit: u64,
        d: Vec<u32>,
        r2: Vec<u32>,
        dk: BTreeMap<u32, Vec<u32>>,
        omega: Vec<u8>,
        squarefree: Vec<bool>,
    ) -> Self {
        ArithTables {
            limit,
            d,
            r2,
            dk,
            omega,
            squarefree,
        }
    }
}

/// Borrowed view of every table, in cache serialization order.
pub(crate) type TableParts<'a> = (
    u64,
    &'a [u32],
    &'a [u32],
    &'a BTreeMap<u32, Vec<u32>>,
    &'a [u8],
    &'a [bool],
);

/// Binomial coefficient C(n, r) for the small arguments d_k needs.
fn binom(n: u32, r: u32) -> u64 {
    let r = r.min(n - r.min(n));
    let mut acc = 1u64;
    for i in 0..r {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Sieve all tables for 1..=n_limit. `k_list` selects extra Piltz tables
/// (k = 2 is an alias of d and never stored twice).
pub fn build_tables(n_limit: u64, k_list: &[u32]) -> Result<ArithTables> {
    if n_limit < 2 {
        return Err(Error::Capacity(format!(
            "table limit {n_limit} too small; need at least 2"
        )));
    }
    if n_limit > MAX_TABLE_LIMIT {
        return Err(Error::Capacity(format!(
            "table limit {n_limit} exceeds cap {MAX_TABLE_LIMIT}"
        )));
    }
    for &k in k_list {
        if k < 2 {
            return Err(Error::Argument(format!("k={k} in k_list; need k >= 2")));
        }
        if k > 64 {
            return Err(Error::Argument(format!("k={k} unreasonably large")));
        }
    }

    let n = n_limit as usize;
    // Smallest prime factor; spf[i] = 0 marks i as unvisited.
    let mut spf = vec![0u32; n + 1];
    let mut primes: Vec<u32> = Vec::new();
    #[allow(clippy::needless_range_loop)]
    for i in 2..=n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
        }
        for &p in &primes {
            let ip = i * p as usize;
            if p > spf[i] || ip > n {
                break;
            }
            spf[ip] = p;
        }
    }

    let mut d = vec![0u32; n];
    let mut b = vec![0u32; n]; // r2 = 4*b
    let mut omega = vec![0u8; n];
    let mut squarefree = vec![false; n];
    let extra_k: Vec<u32> = {
        let mut ks: Vec<u32> = k_list.iter().copied().filter(|&k| k > 2).collect();
        ks.sort_unstable();
        ks.dedup();
        ks
    };
    let mut dk: BTreeMap<u32, Vec<u32>> = extra_k.iter().map(|&k| (k, vec![0u32; n])).collect();

    d[0] = 1;
    b[0] = 1;
    omega[0] = 0;
    squarefree[0] = true;
    for t in dk.values_mut() {
        t[0] = 1;
    }

    #[allow(clippy::needless_range_loop)]
    for i in 2..=n {
        let p = spf[i] as usize;
        let mut m = i;
        let mut e = 0u32;
        while m % p == 0 {
            m /= p;
            e += 1;
        }
        // m < i and all its prime factors exceed p, so its entries are final.
        let mi = m - 1;
        let ii = i - 1;
        d[ii] = d[mi] * (e + 1);
        omega[ii] = omega[mi] + 1;
        squarefree[ii] = squarefree[mi] && e == 1;
        b[ii] = b[mi]
            * match (p % 4, e % 2) {
                _ if p == 2 => 1,
                (1, _) => e + 1,
                (3, 1) => 0,
                (3, 0) => 1,
                _ => unreachable!(),
            };
        for (&k, t) in dk.iter_mut() {
            t[ii] = t[mi] * binom(e + k - 1, k - 1) as u32;
        }
    }

    let r2: Vec<u32> = b.into_iter().map(|v| 4 * v).collect();
    Ok(ArithTables {
        limit: n_limit,
        d,
        r2,
        dk,
        omega,
        squarefree,
    })
}

/// Trial-division factorization; intended for the small n the resonator
/// construction examines.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Exact Sum_{n<=x} d(n) by the hyperbola method:
/// Sum_{n<=sqrt(x)} 2*floor(x/n) - floor(sqrt(x))^2, entirely in u64.
pub fn divisor_sum_exact(x: f64) -> u64 {
    if x < 1.0 {
        return 0;
    }
    let u = x.floor() as u64;
    let s = u.isqrt();
    let mut acc = 0u64;
    for n in 1..=s {
        acc += u / n;
    }
    2 * acc - s * s
}

/// Exact number of lattice points (a, b) with a^2 + b^2 <= x, origin included.
pub fn lattice_count(x: f64) -> u64 {
    if x < 0.0 {
        return 0;
    }
    let m = x.floor() as u64;
    let r = m.isqrt();
    let mut total = 2 * m.isqrt() + 1; // the a = 0 column
    for a in 1..=r {
        total += 2 * (2 * (m - a * a).isqrt() + 1);
    }
    total
}

/// Delta(x) = Sum_{n<=x} d(n) - x log x - (2*gamma - 1)x, table-free.
///
/// The divisor sum is exact (hyperbola method); only the main-term
/// subtraction happens in floating point.
pub fn delta(x: f64) -> f64 {
    assert!(x > 0.0 && x.is_finite(), "delta needs positive finite x");
    let sum = divisor_sum_exact(x) as f64;
    sum - main_term_k2(x)
}

/// Divisor count of a single integer by trial division.
pub fn divisor_count(n: u64) -> u64 {
    assert!(n >= 1);
    factorize(n).iter().map(|&(_, e)| (e + 1) as u64).product()
}

/// Delta(x) with the jump symmetrized: at integer x the divisor sum counts
/// d(x) with weight 1/2, which is the value the Voronoi series converges
/// to at a jump.
pub fn delta_midpoint(x: f64) -> f64 {
    assert!(x > 0.0 && x.is_finite(), "delta needs positive finite x");
    let mut sum = divisor_sum_exact(x) as f64;
    if x == x.floor() {
        sum -= divisor_count(x as u64) as f64 / 2.0;
    }
    sum - main_term_k2(x)
}

/// The k = 2 main term x log x + (2*gamma - 1)x, evaluated through the
/// residue polynomial so the hard-coded form and the polynomial route are
/// the same floating-point expression.
pub fn main_term_k2(x: f64) -> f64 {
    residue_polynomial(2)
        .expect("k=2 is always supported")
        .main_term(x)
}

/// Delta(x) with the table cross-check: the hyperbola-method divisor sum
/// must equal the naive prefix sum from the sieve, exactly.
pub fn delta_exact(x: f64, tables: &ArithTables) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Argument(format!("x={x} not a positive real")));
    }
    if x > tables.limit as f64 {
        return Err(Error::Range(format!(
            "x={x} exceeds table limit {}",
            tables.limit
        )));
    }
    let u = x.floor() as u64;
    let naive: u64 = (1..=u).map(|n| tables.d(n)).sum();
    let fast = divisor_sum_exact(x);
    if naive != fast {
        return Err(Error::Consistency(format!(
            "hyperbola divisor sum {fast} != naive {naive} at x={x}"
        )));
    }
    Ok(fast as f64 - main_term_k2(x))
}

/// P(x) = (lattice points with a^2+b^2 <= x) - pi*x. The count includes the
/// origin, so P(0) = 1.
pub fn circle_exact(x: f64) -> Result<f64> {
    if x < 0.0 || !x.is_finite() {
        return Err(Error::Argument(format!("x={x} not a nonnegative real")));
    }
    if x > (1u64 << 62) as f64 {
        return Err(Error::Range(format!("x={x} exceeds 2^62")));
    }
    Ok(lattice_count(x) as f64 - std::f64::consts::PI * x)
}

/// Delta_k(x) = Sum_{n<=x} d_k(n) - x * P_{k-1}(log x) with the residue
/// polynomial main term. k = 1 counts integers and needs no table.
pub fn delta_k_exact(x: f64, k: u32, tables: &ArithTables) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Argument(format!("x={x} not a positive real")));
    }
    if x > tables.limit as f64 {
        return Err(Error::Range(format!(
            "x={x} exceeds table limit {}",
            tables.limit
        )));
    }
    let poly = residue_polynomial(k)?;
    let u = x.floor() as u64;
    let sum: u64 = match k {
        1 => u,
        _ => (1..=u).map(|n| tables.dk(k, n)).sum::<Result<u64>>()?,
    };
    Ok(sum as f64 - poly.main_term(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d_naive(n: u64) -> u64 {
        (1..=n).filter(|k| n % k == 0).count() as u64
    }

    fn r2_naive(n: i64) -> u64 {
        let mut count = 0;
        let r = (n as f64).sqrt() as i64 + 1;
        for a in -r..=r {
            for b in -r..=r {
                if a * a + b * b == n {
                    count += 1;
                }
            }
        }
        count
    }

    fn d3_naive(n: u64) -> u64 {
        let mut count = 0;
        for a in 1..=n {
            if n % a != 0 {
                continue;
            }
            let m = n / a;
            for b in 1..=m {
                if m % b == 0 {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn sieve_matches_naive_enumeration() {
        let t = build_tables(500, &[3, 4]).unwrap();
        for n in 1..=500u64 {
            assert_eq!(t.d(n), d_naive(n), "d({n})");
            assert_eq!(t.r2(n), r2_naive(n as i64), "r2({n})");
            assert_eq!(t.dk(3, n).unwrap(), d3_naive(n), "d3({n})");
        }
        // Spot values from direct enumeration.
        assert_eq!(t.d(12), 6);
        assert_eq!(t.r2(5), 8);
        assert_eq!(t.dk(3, 4).unwrap(), 6);
    }

    #[test]
    fn table_edge_values() {
        let t = build_tables(100, &[]).unwrap();
        assert_eq!(t.d(1), 1);
        assert_eq!(t.r2(1), 4);
        assert_eq!(t.omega(1), 0);
        assert!(t.is_squarefree(1));
        for p in [2u64, 3, 5, 7, 11, 97] {
            assert_eq!(t.d(p), 2, "d({p})");
            assert_eq!(t.omega(p), 1, "omega({p})");
        }
        // dk for k = 2 aliases d.
        for n in 1..=100u64 {
            assert_eq!(t.dk(2, n).unwrap(), t.d(n));
        }
    }

    #[test]
    fn build_rejects_bad_limits() {
        assert!(matches!(build_tables(0, &[]), Err(Error::Capacity(_))));
        assert!(matches!(
            build_tables(MAX_TABLE_LIMIT + 1, &[]),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(build_tables(10, &[1]), Err(Error::Argument(_))));
    }

    #[test]
    fn missing_k_table_is_a_config_error() {
        let t = build_tables(50, &[]).unwrap();
        assert!(matches!(t.dk(3, 10), Err(Error::Config(_))));
        assert!(matches!(
            delta_k_exact(10.0, 3, &t),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn delta_frozen_values() {
        // Oracle: naive divisor summation plus the k=2 main term (mpmath,
        // 40 digits): 0.8455686701969343, 1.8370972363081746, 0.3231948458069480.
        assert!((delta(1.0) - 0.8455686701969343).abs() < 1e-6);
        assert!((delta(4.0) - 1.8370972363081746).abs() < 1e-6);
        assert!((delta(2.5) - 0.323194845806948).abs() < 1e-6);
    }

    #[test]
    fn delta_exact_checks_range() {
        let t = build_tables(100, &[]).unwrap();
        assert!(delta_exact(50.0, &t).is_ok());
        assert!(matches!(delta_exact(101.0, &t), Err(Error::Range(_))));
    }

    #[test]
    fn circle_frozen_values() {
        assert_eq!(circle_exact(0.0).unwrap(), 1.0);
        assert!((circle_exact(1.0).unwrap() - 1.8584073464102068).abs() < 1e-6);
        assert!((circle_exact(2.0).unwrap() - 2.7168146928204135).abs() < 1e-6);
    }

    #[test]
    fn delta_k_trivial_cases() {
        let t = build_tables(100, &[3]).unwrap();
        // d_2 = d entrywise.
        let a = delta_k_exact(4.0, 2, &t).unwrap();
        let b = delta_exact(4.0, &t).unwrap();
        assert!((a - b).abs() < 1e-12);
        // k = 1 counts integers: 7 - 7.5.
        assert!((delta_k_exact(7.5, 1, &t).unwrap() - (-0.5)).abs() < 1e-12);
    }

    #[test]
    fn hyperbola_equals_naive_prefix() {
        let t = build_tables(3000, &[]).unwrap();
        let mut prefix = 0u64;
        for n in 1..=3000u64 {
            prefix += t.d(n);
            assert_eq!(divisor_sum_exact(n as f64), prefix, "x={n}");
        }
        // Non-integer x floors correctly.
        assert_eq!(divisor_sum_exact(2.5), 3);
    }

    #[test]
    fn lattice_count_equals_r2_prefix() {
        let t = build_tables(2000, &[]).unwrap();
        let mut prefix = 1u64;
        for n in 1..=2000u64 {
            prefix += t.r2(n);
            assert_eq!(lattice_count(n as f64), prefix, "x={n}");
        }
    }

    #[test]
    fn d_is_multiplicative_on_coprime_pairs() {
        let t = build_tables(10_000, &[]).unwrap();
        let pairs = [(3u64, 8u64), (5, 49), (9, 16), (25, 77), (11, 13)];
        for (m, n) in pairs {
            assert_eq!(t.d(m * n), t.d(m) * t.d(n), "d({m}*{n})");
        }
    }

    #[test]
    fn squarefree_density_in_expected_band() {
        let t = build_tables(10_000, &[]).unwrap();
        let count = (1..=10_000u64).filter(|&n| t.is_squarefree(n)).count();
        let density = count as f64 / 10_000.0;
        assert!((0.58..=0.65).contains(&density), "density={density}");
    }

    #[test]
    fn factorize_small() {
        assert_eq!(factorize(1), vec![]);
        assert_eq!(factorize(12), vec![(2, 2), (3, 1)]);
        assert_eq!(factorize(97), vec![(97, 1)]);
        assert_eq!(factorize(3 * 5 * 49), vec![(3, 1), (5, 1), (7, 2)]);
    }
}
