//! Integer and multiplicative-function substrate: sieving, factorization,
//! μ, φ, τ, Ω, p-adic valuations, and interval prime sums.
//!
//! Interval conventions are half-open `(lo, hi]` throughout the crate.

use crate::error::{Error, Result};
use crate::kahan::KahanSum;

/// An immutable table of primes up to a fixed limit, produced once by a
/// bit-packed sieve of Eratosthenes and shared read-only by all callers.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    /// Sieve all primes up to `limit` (inclusive). `limit < 2` is an error.
    pub fn new(limit: u64) -> Result<Self> {
        Ok(Self {
            primes: sieve_primes(limit)?,
            limit,
        })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Primes in the half-open interval `(lo, hi]`.
    pub fn range(&self, lo: f64, hi: f64) -> &[u64] {
        let start = self.primes.partition_point(|&p| p as f64 <= lo);
        let end = self.primes.partition_point(|&p| p as f64 <= hi);
        &self.primes[start..end]
    }

    /// Σ 1/p over primes in `(lo, hi]`, compensated, ascending order.
    pub fn reciprocal_sum(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo < hi) {
            if lo == hi {
                return Ok(0.0);
            }
            return Err(Error::domain(format!(
                "prime_reciprocal_sum needs lo <= hi, got ({lo}, {hi}]"
            )));
        }
        if hi > self.limit as f64 {
            return Err(Error::resource(format!(
                "interval upper end {hi} beyond sieve limit {}",
                self.limit
            )));
        }
        let mut acc = KahanSum::new();
        for &p in self.range(lo, hi) {
            acc.add(1.0 / p as f64);
        }
        Ok(acc.value())
    }
}

/// Bit-packed sieve of Eratosthenes over the odd numbers.
///
/// Returns exactly the primes in `[2, limit]`, ascending.
pub fn sieve_primes(limit: u64) -> Result<Vec<u64>> {
    if limit < 2 {
        return Err(Error::domain(format!(
            "sieve_primes needs limit >= 2, got {limit}"
        )));
    }
    let n = limit as usize;
    // bit i represents the odd number 2i+1; index 0 (the number 1) unused
    let bits = n / 2 + 1;
    let mut composite = vec![0u64; bits / 64 + 1];
    let is_set = |v: &[u64], i: usize| v[i / 64] >> (i % 64) & 1 == 1;
    let mut i = 1usize; // number 3
    while {
        let p = 2 * i + 1;
        p * p <= n
    } {
        if !is_set(&composite, i) {
            let p = 2 * i + 1;
            let mut j = (p * p) / 2;
            while j < bits {
                composite[j / 64] |= 1 << (j % 64);
                j += p;
            }
        }
        i += 1;
    }
    let mut primes = Vec::with_capacity(if n > 16 {
        (n as f64 / (n as f64).ln() * 1.2) as usize
    } else {
        8
    });
    primes.push(2);
    for i in 1..bits {
        let p = 2 * i + 1;
        if p > n {
            break;
        }
        if !is_set(&composite, i) {
            primes.push(p as u64);
        }
    }
    Ok(primes)
}

/// A positive integer together with its prime factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredInteger {
    value: u64,
    /// `(prime, exponent)` pairs, primes strictly increasing, exponents >= 1.
    factors: Vec<(u64, u32)>,
}

impl FactoredInteger {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// p-adic valuation v_p(n).
    pub fn valuation(&self, p: u64) -> u32 {
        self.factors
            .iter()
            .find(|&&(q, _)| q == p)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }
}

/// Factor `n >= 1` by trial division. `n = 1` yields an empty factor list.
pub fn factorize(n: u64) -> Result<FactoredInteger> {
    if n == 0 {
        return Err(Error::domain("factorize(0) is undefined"));
    }
    let mut m = n;
    let mut factors = Vec::new();
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        factors.push((m, 1));
    }
    Ok(FactoredInteger { value: n, factors })
}

/// Standard multiplicative functions of one integer, read off its factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultFunctions {
    /// Möbius μ(n) ∈ {-1, 0, 1}; zero iff n is not squarefree.
    pub mobius: i8,
    /// Euler totient φ(n).
    pub phi: u64,
    /// Divisor count τ(n).
    pub tau: u64,
    /// Number of prime factors with multiplicity Ω(n).
    pub big_omega: u32,
}

pub fn mult_functions(n: &FactoredInteger) -> MultFunctions {
    let mut mobius: i8 = 1;
    let mut phi: u64 = 1;
    let mut tau: u64 = 1;
    let mut big_omega: u32 = 0;
    for &(p, e) in n.factors() {
        if e >= 2 {
            mobius = 0;
        } else {
            mobius = -mobius;
        }
        phi *= (p - 1) * p.pow(e - 1);
        tau *= (e + 1) as u64;
        big_omega += e;
    }
    MultFunctions {
        mobius,
        phi,
        tau,
        big_omega,
    }
}

/// Ω restricted to an interval: Σ of exponents of primes p with lo < p <= hi.
pub fn omega_in_interval(n: &FactoredInteger, lo: f64, hi: f64) -> u32 {
    n.factors()
        .iter()
        .filter(|&&(p, _)| {
            let pf = p as f64;
            pf > lo && pf <= hi
        })
        .map(|&(_, e)| e)
        .sum()
}

/// Σ 1/p over primes in `(lo, hi]`, sieving internally up to `hi`.
///
/// Callers holding a [`PrimeTable`] should prefer
/// [`PrimeTable::reciprocal_sum`], which reuses the shared sieve.
pub fn prime_reciprocal_sum(lo: f64, hi: f64) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    if lo > hi {
        return Err(Error::domain(format!(
            "prime_reciprocal_sum needs lo <= hi, got ({lo}, {hi}]"
        )));
    }
    if hi < 2.0 {
        return Ok(0.0);
    }
    if hi > 1e9 {
        return Err(Error::resource(format!("sieve limit {hi} too large")));
    }
    let table = PrimeTable::new(hi.floor() as u64)?;
    table.reciprocal_sum(lo, hi)
}
