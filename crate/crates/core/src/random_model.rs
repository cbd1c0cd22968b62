//! The random multiplicative model: independent uniform phases X(p), one per
//! prime, extended multiplicatively to X(n), with exact combinatorial moments
//! and Monte-Carlo simulation against the Gaussian comparator.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arithmetic::FactoredInteger;
use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::stats::ks_distance_to_std_normal;

/// A deterministic assignment prime ↦ unit-modulus phase.
#[derive(Debug, Clone)]
pub struct PhaseSample {
    seed: u64,
    assignment: BTreeMap<u64, Complex64>,
}

impl PhaseSample {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assignment(&self) -> &BTreeMap<u64, Complex64> {
        &self.assignment
    }

    pub fn phase(&self, p: u64) -> Option<Complex64> {
        self.assignment.get(&p).copied()
    }
}

fn uniform_phase(rng: &mut ChaCha8Rng) -> Complex64 {
    let u: f64 = rng.random();
    let t = 2.0 * std::f64::consts::PI * u;
    let (s, c) = t.sin_cos();
    Complex64::new(c, s)
}

/// Independent uniform phases for each prime, from a counter-based stream:
/// one ChaCha base keyed by `seed`, with the block stream index set to the
/// prime itself. Identical (seed, prime) always reproduces the same phase,
/// regardless of the rest of the prime list.
pub fn sample_phases(primes: &[u64], seed: u64) -> Result<PhaseSample> {
    if primes.is_empty() {
        return Err(Error::domain("sample_phases needs a nonempty prime list"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = BTreeMap::new();
    for &p in primes {
        rng.set_stream(p);
        rng.set_word_pos(0);
        assignment.insert(p, uniform_phase(&mut rng));
    }
    Ok(PhaseSample { seed, assignment })
}

/// X(n) = Π X(pᵢ)^{aᵢ} over the factorization of n.
pub fn x_of(sample: &PhaseSample, n: &FactoredInteger) -> Result<Complex64> {
    let mut prod = Complex64::new(1.0, 0.0);
    for &(p, e) in n.factors() {
        let x = sample.phase(p).ok_or_else(|| {
            Error::domain(format!("prime {p} has no assigned phase in this sample"))
        })?;
        prod *= x.powu(e);
    }
    Ok(prod)
}

/// E[X(n) X̄(m)] by the phase-balance rule: 1 iff every prime appears with
/// equal exponents on both sides (i.e. n = m), else 0.
pub fn expectation_x_product(n: &FactoredInteger, m: &FactoredInteger) -> f64 {
    if n.factors() == m.factors() {
        1.0
    } else {
        0.0
    }
}

/// Exact E[(Σ_p Re a_p X(p))^{2k}] by balanced multinomial enumeration:
///
///   (2k)!/4^k · Σ_{k_p ≥ 0, Σk_p = k} Π |a_p|^{2k_p} / (k_p!)²,
///
/// since only the terms pairing each X(p) with its conjugate survive.
pub fn exact_real_moment(coeffs: &BTreeMap<u64, Complex64>, k: u32) -> Result<f64> {
    if coeffs.len() > 12 || k > 6 {
        return Err(Error::resource(format!(
            "balanced enumeration limited to 12 primes and 2k <= 12, got {} primes, 2k = {}",
            coeffs.len(),
            2 * k
        )));
    }
    if k == 0 {
        return Ok(1.0);
    }
    let norms: Vec<f64> = coeffs.values().map(|a| a.norm_sqr()).collect();
    let factorial = |n: u32| -> f64 { (1..=n).map(|i| i as f64).product() };
    // DFS distributing k among the primes
    fn walk(norms: &[f64], remaining: u32, weight: f64, factorial: &dyn Fn(u32) -> f64) -> f64 {
        if norms.is_empty() {
            return if remaining == 0 { weight } else { 0.0 };
        }
        let mut total = 0.0;
        for kp in 0..=remaining {
            let f = factorial(kp);
            total += walk(
                &norms[1..],
                remaining - kp,
                weight * norms[0].powi(kp as i32) / (f * f),
                factorial,
            );
        }
        total
    }
    let sum = walk(&norms, k, 1.0, &factorial);
    Ok(factorial(2 * k) / 4.0f64.powi(k as i32) * sum)
}

/// (2k)!/(2^k k!) · s2^k: the 2k-th moment of a centered Gaussian with
/// variance s2.
pub fn gaussian_moment(s2: f64, k: u32) -> f64 {
    let factorial = |n: u32| -> f64 { (1..=n).map(|i| i as f64).product() };
    factorial(2 * k) / (2.0f64.powi(k as i32) * factorial(k)) * s2.powi(k as i32)
}

/// Monte-Carlo summary of Σ_p Re X(p)/√p over independent samples.
#[derive(Debug, Clone, Copy)]
pub struct CltSummary {
    /// Mean of the unnormalized sum.
    pub mean: f64,
    /// Variance of the unnormalized sum.
    pub variance: f64,
    /// ½ Σ 1/p, the model variance the simulation should match.
    pub expected_variance: f64,
    /// KS distance of the normalized sum against the standard normal.
    pub ks_distance: f64,
    pub trials: usize,
}

fn trial_seed(seed: u64, t: u64) -> u64 {
    seed ^ t.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Simulate Σ_p Re X(p)/√p, normalize by √(½ Σ 1/p), and compare the
/// empirical law to the standard normal. Deterministic in (primes, trials,
/// seed) and independent of thread count.
pub fn mc_clt(primes: &[u64], trials: usize, seed: u64) -> Result<CltSummary> {
    if primes.is_empty() {
        return Err(Error::domain("mc_clt needs a nonempty prime list"));
    }
    if trials < 1000 {
        return Err(Error::domain(format!(
            "mc_clt needs at least 10³ trials, got {trials}"
        )));
    }
    let sums: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let sample = sample_phases(primes, trial_seed(seed, t)).expect("nonempty primes");
            let mut acc = KahanSum::new();
            for (&p, &x) in sample.assignment() {
                acc.add(x.re / (p as f64).sqrt());
            }
            acc.value()
        })
        .collect();
    let mean = crate::stats::mean(&sums);
    let variance = crate::stats::variance(&sums);
    let mut s2 = KahanSum::new();
    for &p in primes {
        s2.add(0.5 / p as f64);
    }
    let expected_variance = s2.value();
    let scale = expected_variance.sqrt();
    let normalized: Vec<f64> = sums.iter().map(|z| z / scale).collect();
    Ok(CltSummary {
        mean,
        variance,
        expected_variance,
        ks_distance: ks_distance_to_std_normal(&normalized),
        trials,
    })
}

/// Monte-Carlo estimate of E[(Σ Re a_p X(p))^{2k}] with its standard error.
pub fn mc_real_moment(
    coeffs: &BTreeMap<u64, Complex64>,
    k: u32,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if trials < 1000 {
        return Err(Error::domain(format!(
            "mc_real_moment needs at least 10³ trials, got {trials}"
        )));
    }
    let primes: Vec<u64> = coeffs.keys().copied().collect();
    let powers: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let sample = sample_phases(&primes, trial_seed(seed, t)).expect("nonempty primes");
            let mut acc = KahanSum::new();
            for (&p, &a) in coeffs {
                acc.add((a * sample.phase(p).expect("assigned")).re);
            }
            acc.value().powi(2 * k as i32)
        })
        .collect();
    let est = crate::stats::mean(&powers);
    let se = (crate::stats::variance(&powers) / trials as f64).sqrt();
    Ok((est, se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::factorize;

    #[test]
    fn same_seed_reproduces_assignment() {
        let primes = [2u64, 3, 5, 7, 11];
        let a = sample_phases(&primes, 42).unwrap();
        let b = sample_phases(&primes, 42).unwrap();
        assert_eq!(a.assignment(), b.assignment());
        let c = sample_phases(&primes, 43).unwrap();
        assert_ne!(a.assignment(), c.assignment());
    }

    #[test]
    fn phases_are_unimodular() {
        let primes = [2u64, 3, 5, 7, 11, 13];
        let s = sample_phases(&primes, 7).unwrap();
        for (_, x) in s.assignment() {
            assert!((x.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn phase_of_prime_independent_of_list() {
        // counter-based keying: X(5) is the same whether or not 2, 3 are in
        // the list
        let a = sample_phases(&[2, 3, 5], 99).unwrap();
        let b = sample_phases(&[5, 11], 99).unwrap();
        assert_eq!(a.phase(5), b.phase(5));
    }

    #[test]
    fn empirical_mean_of_x2_small() {
        let n = 100_000u64;
        let mut acc = Complex64::new(0.0, 0.0);
        for seed in 0..n {
            acc += sample_phases(&[2], seed).unwrap().phase(2).unwrap();
        }
        let mean = acc / n as f64;
        assert!(mean.norm() <= 0.02, "{mean}"); // CLT bound ~3/√N
    }

    #[test]
    fn x_of_is_multiplicative() {
        let primes = [2u64, 3, 5, 7];
        let s = sample_phases(&primes, 5).unwrap();
        assert_eq!(
            x_of(&s, &factorize(1).unwrap()).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        let x12 = x_of(&s, &factorize(12).unwrap()).unwrap();
        let by_hand = s.phase(2).unwrap().powu(2) * s.phase(3).unwrap();
        assert!((x12 - by_hand).norm() < 1e-14);
        for (m, n) in [(6u64, 35u64), (4, 9), (10, 21)] {
            let lhs = x_of(&s, &factorize(m * n).unwrap()).unwrap();
            let rhs =
                x_of(&s, &factorize(m).unwrap()).unwrap() * x_of(&s, &factorize(n).unwrap()).unwrap();
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn x_of_rejects_unassigned_prime() {
        let s = sample_phases(&[2, 3], 1).unwrap();
        assert!(x_of(&s, &factorize(10).unwrap()).is_err());
    }

    #[test]
    fn orthogonality_analogue_exact() {
        for n in 1u64..=50 {
            for m in 1u64..=50 {
                let e = expectation_x_product(&factorize(n).unwrap(), &factorize(m).unwrap());
                assert_eq!(e, if n == m { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn exact_moment_single_prime() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(2u64, Complex64::new(1.0, 0.0));
        // E[cos²θ] = 1/2
        assert!((exact_real_moment(&coeffs, 1).unwrap() - 0.5).abs() < 1e-15);
        // E[cos⁴θ] = 3/8 (direct integral oracle below)
        assert!((exact_real_moment(&coeffs, 2).unwrap() - 0.375).abs() < 1e-15);
        let n = 1_000_000;
        let mut quad = 0.0;
        for i in 0..n {
            let t = std::f64::consts::PI * 2.0 * (i as f64 + 0.5) / n as f64;
            quad += t.cos().powi(4);
        }
        quad /= n as f64;
        assert!((quad - 0.375).abs() < 1e-9);
    }

    #[test]
    fn gaussian_moment_values() {
        assert!((gaussian_moment(0.5, 1) - 0.5).abs() < 1e-15);
        assert!((gaussian_moment(0.5, 2) - 0.75).abs() < 1e-15);
        assert_eq!(gaussian_moment(0.0, 3), 0.0);
        assert_eq!(gaussian_moment(7.3, 0), 1.0);
    }

    #[test]
    fn exact_moment_bounded_by_gaussian() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(2u64, Complex64::new(0.7, 0.4));
        coeffs.insert(3u64, Complex64::new(-0.3, 0.9));
        coeffs.insert(5u64, Complex64::new(0.2, -0.1));
        let s2: f64 = 0.5 * coeffs.values().map(|a| a.norm_sqr()).sum::<f64>();
        for k in 1..=6 {
            let exact = exact_real_moment(&coeffs, k).unwrap();
            let gauss = gaussian_moment(s2, k);
            assert!(exact <= gauss + 1e-12, "k={k}: {exact} vs {gauss}");
        }
    }

    #[test]
    fn exact_moment_resource_limits() {
        let coeffs: BTreeMap<u64, Complex64> = [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41]
            .iter()
            .map(|&p| (p, Complex64::new(1.0, 0.0)))
            .collect();
        assert!(exact_real_moment(&coeffs, 1).is_err());
        let small: BTreeMap<u64, Complex64> =
            [(2u64, Complex64::new(1.0, 0.0))].into_iter().collect();
        assert!(exact_real_moment(&small, 7).is_err());
    }

    #[test]
    fn mc_matches_exact_moment() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(2u64, Complex64::new(0.8, 0.1));
        coeffs.insert(3u64, Complex64::new(0.3, -0.6));
        for k in 1..=3 {
            let exact = exact_real_moment(&coeffs, k).unwrap();
            let (est, se) = mc_real_moment(&coeffs, k, 20_000, 11).unwrap();
            assert!(
                (est - exact).abs() <= 4.0 * se,
                "k={k}: {est} vs {exact} (se {se})"
            );
        }
    }

    #[test]
    fn mc_clt_small_run_is_deterministic_and_sane() {
        let primes = crate::arithmetic::sieve_primes(200).unwrap();
        let a = mc_clt(&primes, 2000, 3).unwrap();
        let b = mc_clt(&primes, 2000, 3).unwrap();
        assert_eq!(a.ks_distance, b.ks_distance);
        assert_eq!(a.mean, b.mean);
        assert!(a.ks_distance < 0.05, "ks = {}", a.ks_distance);
        // variance of the unnormalized sum near ½ Σ 1/p
        let tol = 3.0 * a.expected_variance * (2.0 / a.trials as f64).sqrt();
        assert!((a.variance - a.expected_variance).abs() <= 3.0 * tol);
        assert!(mc_clt(&primes, 10, 3).is_err());
    }
}
