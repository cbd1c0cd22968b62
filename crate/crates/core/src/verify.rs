//! Acceptance criterion runners. Each returns a [`CriterionResult`] with one
//! summary line; the `acceptance` integration test asserts them and the CLI
//! `verify` subcommand maps them to exit codes.
//!
//! Every tolerance is pinned here. Runners are deterministic (fixed seeds,
//! ordered reductions) and independent of thread count.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arithmetic::{factorize, PrimeTable};
use crate::characters::{
    char_class_sum_with, diagonal_second_moment, enumerate_class, even_second_moment,
    gauss_sums_for, CharClass, ModulusContext, SumClass,
};
use crate::dpoly::{
    real_twist_coeffs, theta_beta, theta_extrapolated, theta_limit, RealTwistFactor,
};
use crate::kahan::KahanSum;
use crate::lcentral::{afe_for_class, l_values_direct_class};
use crate::moments::{
    b_transform, class_moment, moment_from_tail, tail_count, twisted_second_moment, TwistArg,
};
use crate::random_model::{exact_real_moment, gaussian_moment, mc_real_moment};
use crate::scheme::{
    build_schedule, compute_record, mollifier_inequality_check, partition_counts,
    validate_parameters, CharacterRecord, MollifierCheck, ScaleSchedule, ScheduleConfig,
};
use crate::stats::{ks_distance_to_std_normal, linear_fit};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub details: Vec<String>,
}

impl CriterionResult {
    pub fn summary(&self) -> String {
        format!(
            "criterion {:2} [{}] {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.name
        )
    }
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{}", self.summary())?;
        for d in &self.details {
            writeln!(f, "    {d}")?;
        }
        Ok(())
    }
}

fn result(id: usize, name: &'static str, pass: bool, details: Vec<String>) -> CriterionResult {
    CriterionResult {
        id,
        name,
        pass,
        details,
    }
}

/// Exact orthogonality over even characters: 20 random coefficient vectors
/// per q ∈ [3, qmax], length < q/2, both sides within 1e-10.
pub fn criterion_1_orthogonality(qmax: u64) -> CriterionResult {
    let failures: Vec<String> = (3..=qmax)
        .into_par_iter()
        .filter_map(|q| {
            let ctx = ModulusContext::build(q).expect("q >= 3");
            let mut rng = ChaCha8Rng::seed_from_u64(0x0561 + q);
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let n_max = ((q as usize + 1) / 2).saturating_sub(1).max(1);
                let len = rng.random_range(1..=n_max);
                let coeffs: Vec<(u64, Complex64)> = (1..=len as u64)
                    .map(|n| {
                        (
                            n,
                            Complex64::new(
                                rng.random_range(-1.0..1.0),
                                rng.random_range(-1.0..1.0),
                            ),
                        )
                    })
                    .collect();
                let lhs = even_second_moment(&ctx, &coeffs);
                let rhs = diagonal_second_moment(&ctx, &coeffs);
                worst = worst.max((lhs - rhs).abs());
            }
            (worst > 1e-10).then(|| format!("q={q}: worst deviation {worst:.3e}"))
        })
        .collect();
    result(
        1,
        "exact orthogonality over even characters",
        failures.is_empty(),
        if failures.is_empty() {
            vec![format!("q in [3, {qmax}], 20 random vectors each, tol 1e-10")]
        } else {
            failures
        },
    )
}

/// Primitive character-sum identity: exact integer agreement of the direct
/// sum and the Möbius/φ formula for all q ≤ qmax and all m coprime to q.
pub fn criterion_2_primitive_sum(qmax: u64) -> CriterionResult {
    let failures: Vec<String> = (3..=qmax)
        .into_par_iter()
        .filter_map(|q| {
            let ctx = ModulusContext::build(q).expect("q >= 3");
            let primitive = enumerate_class(&ctx, CharClass::Primitive);
            for m in 1..q {
                if !ctx.is_unit(m) {
                    continue;
                }
                let s = match char_class_sum_with(&ctx, &primitive, m as i64, SumClass::Primitive)
                {
                    Ok(s) => s,
                    Err(e) => return Some(format!("q={q} m={m}: {e}")),
                };
                let rounded = s.direct.re.round();
                if rounded != s.formula
                    || (s.direct.re - rounded).abs() > 1e-6
                    || s.direct.im.abs() > 1e-6
                {
                    return Some(format!(
                        "q={q} m={m}: direct {} vs formula {}",
                        s.direct, s.formula
                    ));
                }
            }
            None
        })
        .collect();
    result(
        2,
        "primitive character-sum identity (Mobius formula)",
        failures.is_empty(),
        if failures.is_empty() {
            vec![format!(
                "all q <= {qmax}, all m coprime to q, exact integers"
            )]
        } else {
            failures
        },
    )
}

/// |τ(χ)| = √q ± 1e-9 for every primitive χ, q ≤ qmax.
pub fn criterion_3_gauss_modulus(qmax: u64) -> CriterionResult {
    let failures: Vec<String> = (3..=qmax)
        .into_par_iter()
        .filter_map(|q| {
            let ctx = ModulusContext::build(q).expect("q >= 3");
            let prim = enumerate_class(&ctx, CharClass::Primitive);
            if prim.is_empty() {
                return None;
            }
            let taus = gauss_sums_for(&ctx, &prim);
            let worst = taus
                .iter()
                .map(|t| (t.norm() - (q as f64).sqrt()).abs())
                .fold(0.0f64, f64::max);
            (worst > 1e-9).then(|| format!("q={q}: worst | |tau| - sqrt(q) | = {worst:.3e}"))
        })
        .collect();
    result(
        3,
        "Gauss-sum modulus sqrt(q) for primitive characters",
        failures.is_empty(),
        if failures.is_empty() {
            vec![format!("q <= {qmax}, tol 1e-9")]
        } else {
            failures
        },
    )
}

/// AFE vs Hurwitz agreement ≤ 1e-8 for every even primitive χ, q ≤ qmax.
pub fn criterion_4_dual_method(qmax: u64) -> CriterionResult {
    let failures: Vec<String> = (3..=qmax)
        .into_par_iter()
        .filter_map(|q| {
            let ctx = ModulusContext::build(q).expect("q >= 3");
            let chars = enumerate_class(&ctx, CharClass::EvenPrimitive);
            if chars.is_empty() {
                return None;
            }
            let afe = afe_for_class(&ctx, &chars).expect("even primitive class");
            let hur = l_values_direct_class(&ctx, &chars, Complex64::new(0.5, 0.0))
                .expect("non-principal");
            let worst = afe
                .iter()
                .zip(&hur)
                .map(|(a, h)| (a.value - h.value).norm())
                .fold(0.0f64, f64::max);
            (worst > 1e-8).then(|| format!("q={q}: worst dual-method gap {worst:.3e}"))
        })
        .collect();
    result(
        4,
        "dual-method central values (AFE vs Hurwitz)",
        failures.is_empty(),
        if failures.is_empty() {
            vec![format!(
                "every even primitive character, q <= {qmax}, tol 1e-8"
            )]
        } else {
            failures
        },
    )
}

/// E₊[|L|²]/log q ∈ [0.5, 2.0] at prime q ∈ {101, 1009, 10007}.
pub fn criterion_5_second_moment() -> CriterionResult {
    let mut details = Vec::new();
    let mut pass = true;
    for q in [101u64, 1009, 10007] {
        let ctx = ModulusContext::build(q).expect("prime");
        let chars = enumerate_class(&ctx, CharClass::EvenPrimitive);
        let centrals = afe_for_class(&ctx, &chars).expect("class");
        let sq: Vec<f64> = centrals.iter().map(|c| c.value.norm_sqr()).collect();
        let r = class_moment(q, CharClass::EvenPrimitive, &sq, 1.0).expect("nonempty");
        let ok = (0.5..=2.0).contains(&r.ratio);
        pass &= ok;
        details.push(format!(
            "q={q}: E+[|L|^2]/log q = {:.4} {}",
            r.ratio,
            if ok {
                "in [0.5, 2.0]"
            } else {
                "OUTSIDE [0.5, 2.0]"
            }
        ));
    }
    if !pass {
        details.push(
            "known finite-size effect: the second moment is log q - 4.218 + o(1) \
             (dual-method validated), so the ratio only reaches 0.5 near q ~ 10^4"
                .into(),
        );
    }
    result(5, "second moment against log q", pass, details)
}

/// Regression slope of log E₊[|L|^{2β}] on loglog q equals β² ± 0.25 for
/// β ∈ {0.25, 0.5, 0.75} over six prime moduli in [10³, 10⁵].
pub fn criterion_6_moment_scaling() -> CriterionResult {
    let qs: [u64; 6] = [20_011, 30_011, 50_021, 70_001, 85_009, 100_003];
    let betas = [0.25f64, 0.5, 0.75];
    let mut xs = Vec::new();
    let mut logm: Vec<Vec<f64>> = vec![Vec::new(); betas.len()];
    for &q in &qs {
        let ctx = ModulusContext::build(q).expect("prime");
        let chars = enumerate_class(&ctx, CharClass::EvenPrimitive);
        let centrals = afe_for_class(&ctx, &chars).expect("class");
        let sq: Vec<f64> = centrals.iter().map(|c| c.value.norm_sqr()).collect();
        xs.push((q as f64).ln().ln());
        for (i, &b) in betas.iter().enumerate() {
            let m = class_moment(q, CharClass::EvenPrimitive, &sq, b).expect("nonempty");
            logm[i].push(m.value.ln());
        }
    }
    let mut details = vec![format!("moduli {qs:?}")];
    let mut pass = true;
    for (i, &beta) in betas.iter().enumerate() {
        let (_, slope) = linear_fit(&xs, &logm[i]);
        let ok = (slope - beta * beta).abs() <= 0.25;
        pass &= ok;
        details.push(format!(
            "beta={beta}: slope {slope:.4} vs beta^2 = {:.4} ({})",
            beta * beta,
            if ok { "within 0.25" } else { "OUTSIDE 0.25" }
        ));
    }
    if !pass {
        details.push(
            "known finite-size effect: the local exponent carries a drift of order \
             2 beta * c / log q which exceeds the 0.25 band for beta = 0.75 at every \
             admissible modulus (see notes)"
                .into(),
        );
    }
    result(6, "fractional-moment scaling exponent", pass, details)
}

/// Gaussian-tail shape at q = 30011: KS ≤ 0.1 for log|L|/√(½ loglog q), and
/// tail/comparator ratios finite and ≤ 50 at V = α loglog q.
pub fn criterion_7_gaussian_tail() -> CriterionResult {
    let q = 30_011u64;
    let ctx = ModulusContext::build(q).expect("prime");
    let chars = enumerate_class(&ctx, CharClass::EvenPrimitive);
    let centrals = afe_for_class(&ctx, &chars).expect("class");
    let log_abs: Vec<f64> = centrals.iter().map(|c| c.log_abs).collect();
    let sigma = (0.5 * (q as f64).ln().ln()).sqrt();
    let normalized: Vec<f64> = log_abs
        .iter()
        .filter(|x| x.is_finite())
        .map(|x| x / sigma)
        .collect();
    let ks = ks_distance_to_std_normal(&normalized);
    let mut pass = ks <= 0.1;
    let mut details = vec![format!(
        "q={q}: KS distance {ks:.4} over {} characters ({} sentinels)",
        normalized.len(),
        log_abs.len() - normalized.len()
    )];
    let llq = (q as f64).ln().ln();
    for alpha in [0.3, 0.5, 0.7] {
        let report = tail_count(&ctx, &log_abs, alpha * llq);
        let ok = report.ratio.is_finite() && report.ratio <= 50.0;
        pass &= ok;
        details.push(format!(
            "alpha={alpha}: count_norm {:.5}, gaussian bound {:.5}, ratio {:.3}{}",
            report.count_norm,
            report.gaussian_bound,
            report.ratio,
            if ok { "" } else { " OUT OF BOUND" }
        ));
    }
    result(
        7,
        "Gaussian tail shape and bounded tail ratios",
        pass,
        details,
    )
}

/// Θ machinery: extrapolated theta_beta vs theta_limit ≤ 1e-3 exhaustively
/// over prime sets ⊆ {2,3,5} with valuations ≤ 2; ≥2-differing cases have
/// |Θ| ≤ 1e-2.
pub fn criterion_8_theta() -> CriterionResult {
    let base = [2u64, 3, 5];
    let mut pass = true;
    let mut details = Vec::new();
    let mut checked = 0usize;
    for mask in 1..8usize {
        let primes: Vec<u64> = base
            .iter()
            .enumerate()
            .filter(|&(i, _)| mask >> i & 1 == 1)
            .map(|(_, &p)| p)
            .collect();
        let mut cs = vec![1u64];
        for &p in &primes {
            let mut next = Vec::new();
            for &c in &cs {
                next.push(c);
                next.push(c * p);
                next.push(c * p * p);
            }
            cs = next;
        }
        for &c1 in &cs {
            for &c2 in &cs {
                let f1 = factorize(c1).expect("c1 >= 1");
                let f2 = factorize(c2).expect("c2 >= 1");
                let limit = theta_limit(&f1, &f2, &primes).expect("valid");
                let extrap = theta_extrapolated(&f1, &f2, &primes, (1e-3, 1e-4)).expect("valid");
                checked += 1;
                if (extrap - limit).abs() > 1e-3 {
                    pass = false;
                    details.push(format!(
                        "primes {primes:?} c=({c1},{c2}): extrapolated {extrap:.6} vs limit {limit:.6}"
                    ));
                }
                let differing = primes
                    .iter()
                    .filter(|&&p| f1.valuation(p) != f2.valuation(p))
                    .count();
                if differing >= 2 {
                    let at = theta_beta(&f1, &f2, &primes, 1e-3).expect("valid").norm();
                    if at > 1e-2 {
                        pass = false;
                        details.push(format!(
                            "primes {primes:?} c=({c1},{c2}): |theta(1e-3)| = {at:.3e}"
                        ));
                    }
                }
            }
        }
    }
    if pass {
        details.push(format!(
            "{checked} (c1, c2) pairs over all prime subsets, tol 1e-3 / 1e-2"
        ));
    }
    result(8, "theta limit machinery", pass, details)
}

/// Diagonal evaluation: the unrestricted f-sum on a toy interval computed by
/// brute enumeration equals E_⊕[|F_i|²]·Π(1-1/p) within 1e-8.
pub fn criterion_9_diagonal_eval() -> CriterionResult {
    let primes = [3u64, 5, 7];
    let mut b = BTreeMap::new();
    b.insert(3u64, Complex64::new(0.8, 0.2));
    b.insert(5u64, Complex64::new(-0.4, 0.7));
    b.insert(9u64, Complex64::new(0.3, -0.5));
    let f = RealTwistFactor::new(b, vec![0.3, 1.0, -0.5], 2, (2.0, 7.0)).expect("valid support");
    let coeffs = real_twist_coeffs(&f).expect("expansion fits");

    // route (b): closed form
    let mut euler = 1.0;
    for &p in &primes {
        euler *= 1.0 - 1.0 / p as f64;
    }
    let closed = coeffs.second_moment() * euler;

    // route (a): brute quadruple sum with exhaustive squarefree f1, f2
    let mut subsets = vec![1u64];
    for &p in &primes {
        let len = subsets.len();
        for i in 0..len {
            subsets.push(subsets[i] * p);
        }
    }
    let mobius = |n: u64| -> f64 {
        let f = factorize(n).expect("n >= 1");
        if f.factors().len() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    let gcd = |a: u64, b: u64| -> u64 {
        let (mut a, mut b) = (a, b);
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    };
    let entries: Vec<(u64, u64, f64)> = coeffs
        .entries()
        .iter()
        .map(|(&(m, r), c)| (m, r, c.norm()))
        .collect();
    let mut brute = KahanSum::new();
    for &(u1, k1, a1) in &entries {
        for &(u2, k2, a2) in &entries {
            let mut inner = KahanSum::new();
            for &f1 in &subsets {
                for &f2 in &subsets {
                    let x = u1 * k2 * f1;
                    let y = u2 * k1 * f2;
                    let l = (x / gcd(x, y)) as f64 * y as f64;
                    inner.add(mobius(f1) * mobius(f2) / l);
                }
            }
            brute.add(a1 * a2 * inner.value().abs());
        }
    }
    let diff = (brute.value() - closed).abs();
    let pass = diff <= 1e-8;
    result(
        9,
        "diagonal evaluation of the unrestricted f-sum",
        pass,
        vec![format!(
            "brute {:.12} vs closed form {:.12} (diff {diff:.3e})",
            brute.value(),
            closed
        )],
    )
}

/// Random-model moments: exact ≤ Gaussian for 100 random coefficient sets,
/// k ≤ 6; Monte-Carlo within 4 standard errors for 2k ≤ 6.
pub fn criterion_10_random_model() -> CriterionResult {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let base = [2u64, 3, 5, 7, 11];
    let mut pass = true;
    let mut details = Vec::new();
    let mut sets = Vec::new();
    for i in 0..100 {
        let n_primes = 1 + i % 5;
        let mut coeffs = BTreeMap::new();
        for &p in base.iter().take(n_primes) {
            coeffs.insert(
                p,
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            );
        }
        sets.push(coeffs);
    }
    for (i, coeffs) in sets.iter().enumerate() {
        let s2: f64 = 0.5 * coeffs.values().map(|a| a.norm_sqr()).sum::<f64>();
        for k in 1..=6u32 {
            let exact = exact_real_moment(coeffs, k).expect("within limits");
            let gauss = gaussian_moment(s2, k);
            if exact > gauss + 1e-12 {
                pass = false;
                details.push(format!("set {i} k={k}: exact {exact} > gaussian {gauss}"));
            }
        }
    }
    for (i, coeffs) in sets.iter().enumerate().step_by(10) {
        for k in 1..=3u32 {
            let exact = exact_real_moment(coeffs, k).expect("within limits");
            let (est, se) = mc_real_moment(coeffs, k, 40_000, 7 + i as u64).expect("trials ok");
            if (est - exact).abs() > 4.0 * se {
                pass = false;
                details.push(format!(
                    "set {i} k={k}: MC {est:.5} vs exact {exact:.5} (4se = {:.5})",
                    4.0 * se
                ));
            }
        }
    }
    if pass {
        details.push("100 coefficient sets, k <= 6 inequality, MC on every 10th set".into());
    }
    result(10, "random-model moments vs Gaussian", pass, details)
}

/// Real-twist identity: character-side and coefficient-side expectations
/// agree to 1e-10 for q ≤ 100, deg K ≤ 3.
pub fn criterion_11_real_twist() -> CriterionResult {
    // single-prime supports keep the index products collision-free mod q
    // (ord_q(p) exceeds every exponent in play and -1 is unreachable)
    struct Config {
        q: u64,
        p: u64,
        poly: Vec<f64>,
        with_square: bool,
    }
    let configs = [
        Config {
            q: 67,
            p: 2,
            poly: vec![0.1, 0.9, -0.4, 0.25],
            with_square: true,
        },
        Config {
            q: 79,
            p: 2,
            poly: vec![-0.3, 1.1, 0.6],
            with_square: true,
        },
        Config {
            q: 97,
            p: 2,
            poly: vec![0.0, 0.7, 0.2, -0.35],
            with_square: false,
        },
        Config {
            q: 89,
            p: 3,
            poly: vec![0.5, -0.8, 0.0, 0.15],
            with_square: true,
        },
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for cfg in &configs {
        let ctx = ModulusContext::build(cfg.q).expect("prime");
        let mut b = BTreeMap::new();
        b.insert(cfg.p, Complex64::new(0.8, 0.3));
        if cfg.with_square {
            b.insert(cfg.p * cfg.p, Complex64::new(-0.2, 0.5));
        }
        let f = RealTwistFactor::new(b, cfg.poly.clone(), 2, (1.0, (cfg.p * cfg.p) as f64))
            .expect("support valid");
        let coeffs = real_twist_coeffs(&f).expect("expansion fits");
        let even = enumerate_class(&ctx, CharClass::Even);
        let mut acc = KahanSum::new();
        for chi in &even {
            let v = f.eval(chi);
            acc.add(v * v);
        }
        let lhs = 2.0 * acc.value() / ctx.phi() as f64;
        let rhs = coeffs.second_moment();
        let diff = (lhs - rhs).abs();
        if diff > 1e-10 {
            pass = false;
            details.push(format!(
                "q={} p={} deg {}: direct {lhs:.12} vs coefficients {rhs:.12}",
                cfg.q,
                cfg.p,
                cfg.poly.len() - 1
            ));
        } else {
            details.push(format!(
                "q={} p={} deg {}: agreement {diff:.2e}",
                cfg.q,
                cfg.p,
                cfg.poly.len() - 1
            ));
        }
        if coeffs.hermitian_defect() > 1e-12 {
            pass = false;
            details.push(format!(
                "q={}: hermitian defect {}",
                cfg.q,
                coeffs.hermitian_defect()
            ));
        }
    }
    result(11, "real-twist second-moment identity", pass, details)
}

fn toy_records(q: u64, kappa: f64) -> (Arc<ModulusContext>, ScaleSchedule, Vec<CharacterRecord>) {
    let ctx = ModulusContext::build(q).expect("q >= 3");
    let sched = build_schedule(q, kappa, &ScheduleConfig::toy()).expect("valid");
    let primes = PrimeTable::new(sched.scale(sched.levels()).ceil() as u64 + 10).expect("range");
    let chars = enumerate_class(&ctx, CharClass::EvenPrimitive);
    let centrals = afe_for_class(&ctx, &chars).expect("class");
    let v = kappa * (q as f64).ln().ln();
    let records: Vec<CharacterRecord> = chars
        .par_iter()
        .zip(centrals.par_iter())
        .map(|(chi, cv)| compute_record(chi, &sched, v, *cv, &primes).expect("record"))
        .collect();
    (ctx, sched, records)
}

fn records_10007() -> &'static (Arc<ModulusContext>, ScaleSchedule, Vec<CharacterRecord>) {
    static CACHE: OnceLock<(Arc<ModulusContext>, ScaleSchedule, Vec<CharacterRecord>)> =
        OnceLock::new();
    CACHE.get_or_init(|| toy_records(10_007, 0.5))
}

/// Partition exactness on scheme runs: cells disjoint, exhaustive over H,
/// counts summing to |H|, over a V-grid.
pub fn criterion_12_partition() -> CriterionResult {
    let mut pass = true;
    let mut details = Vec::new();
    let (_, small_sched, small_records) = toy_records(101, 0.3);
    let (_, sched, records) = records_10007();
    for (label, sched, records) in [
        ("q=101", &small_sched, &small_records),
        ("q=10007", sched, records),
    ] {
        let llq = (sched.q() as f64).ln().ln();
        for v in [
            f64::NEG_INFINITY,
            -1.0,
            0.0,
            0.25 * llq,
            0.5 * llq,
            llq,
            f64::INFINITY,
        ] {
            let parts = partition_counts(records, v);
            if !parts.sums_to_h() {
                pass = false;
                details.push(format!(
                    "{label} V={v}: cells {:?} sum != |H| = {}",
                    parts.cells, parts.h_total
                ));
            }
        }
        let parts = partition_counts(records, 0.5 * llq);
        details.push(format!(
            "{label}: L = {}, cells at V = 0.5 loglog q: {:?} (|H| = {})",
            sched.levels(),
            parts.cells,
            parts.h_total
        ));
    }
    result(12, "partition exactness over H", pass, details)
}

/// Parameter inequalities strictly negative on the κ grid with the
/// default constants.
pub fn criterion_13_parameters() -> CriterionResult {
    let mut pass = true;
    let mut worst_a = f64::NEG_INFINITY;
    let mut worst_s = f64::NEG_INFINITY;
    for i in 1..=19 {
        let kappa = i as f64 * 0.05;
        let s = 1e5 / (1.0 - kappa);
        let r = validate_parameters(kappa, 1e3, s);
        worst_a = worst_a.max(r.margin_a);
        worst_s = worst_s.max(r.margin_s);
        pass &= r.ok();
    }
    result(
        13,
        "parameter inequality margins on the kappa grid",
        pass,
        vec![format!(
            "kappa in {{0.05..0.95}}: max margins {worst_a:.3e}, {worst_s:.3e} (both < 0 required)"
        )],
    )
}

/// Pointwise mollifier inequality with exponent override E = 1 for all
/// qualifying characters in the toy schedule at q = 10007.
pub fn criterion_14_mollifier_inequality() -> CriterionResult {
    let (_, sched, records) = records_10007();
    let mut holds = 0usize;
    let mut skipped = 0usize;
    let mut failures = Vec::new();
    for rec in records {
        for l in 1..=sched.levels() {
            match mollifier_inequality_check(rec, sched, l, 1.0) {
                MollifierCheck::Holds(_) => holds += 1,
                MollifierCheck::Skipped => skipped += 1,
                MollifierCheck::Fails(m) => {
                    failures.push(format!("char {} level {l}: margin {m:.3e}", rec.index))
                }
            }
        }
    }
    let pass = failures.is_empty() && holds > 0;
    let mut details = vec![format!(
        "q=10007 toy schedule (L = {}): {holds} checks hold, {skipped} skipped",
        sched.levels()
    )];
    details.extend(failures.into_iter().take(5));
    result(14, "pointwise mollifier inequality (E = 1)", pass, details)
}

/// B-transform: coprime-factor invariance exact, B(1,1) matches the direct
/// accumulation, diagonal leading-term ratio in [0.5, 2] at q ∈ {1009, 10007}.
pub fn criterion_15_b_transform() -> CriterionResult {
    let mut pass = true;
    let mut details = Vec::new();
    for q in [1009u64, 10_007] {
        let ctx = ModulusContext::build(q).expect("prime");
        let chars = enumerate_class(&ctx, CharClass::EvenPrimitive);
        let centrals = afe_for_class(&ctx, &chars).expect("class");
        let b11 = b_transform(&ctx, &chars, &centrals, 1, 1).expect("coprime");
        let mut acc = KahanSum::new();
        for c in &centrals {
            acc.add(c.value.norm_sqr());
        }
        if (b11.value.re - acc.value()).abs() > 1e-6 || b11.value.im.abs() > 1e-9 {
            pass = false;
            details.push(format!(
                "q={q}: B(1,1) {} vs direct {}",
                b11.value,
                acc.value()
            ));
        }
        let b23 = b_transform(&ctx, &chars, &centrals, 2, 3).expect("coprime");
        let scaled = b_transform(&ctx, &chars, &centrals, 2 * 7, 3 * 7).expect("coprime");
        if b23.value != scaled.value {
            pass = false;
            details.push(format!(
                "q={q}: B(2,3) = {} but B(14,21) = {}",
                b23.value, scaled.value
            ));
        }
        let ok = (0.5..=2.0).contains(&b11.ratio);
        pass &= ok;
        details.push(format!(
            "q={q}: B(1,1)/leading-term = {:.4} {} (eta(q) = 0 assumed)",
            b11.ratio,
            if ok {
                "in [0.5, 2]"
            } else {
                "OUTSIDE [0.5, 2]"
            }
        ));
    }
    result(15, "B-transform identities and leading term", pass, details)
}

/// Moment-from-tail integration agrees with the direct estimator within 1%
/// at q = 10⁴, β = 0.5.
pub fn criterion_16_moment_from_tail() -> CriterionResult {
    let q = 10_000u64;
    let ctx = ModulusContext::build(q).expect("q >= 3");
    let chars = enumerate_class(&ctx, CharClass::EvenPrimitive);
    let centrals = afe_for_class(&ctx, &chars).expect("class");
    let sq: Vec<f64> = centrals.iter().map(|c| c.value.norm_sqr()).collect();
    let log_abs: Vec<f64> = centrals.iter().map(|c| c.log_abs).collect();
    let direct = class_moment(q, CharClass::EvenPrimitive, &sq, 0.5)
        .expect("nonempty")
        .value;
    let integrated = moment_from_tail(&log_abs, 0.5).expect("beta in range");
    let rel = ((integrated - direct) / direct).abs();
    result(
        16,
        "moment-from-tail vs direct estimator",
        rel <= 0.01,
        vec![format!(
            "q={q} beta=0.5: direct {direct:.6}, integrated {integrated:.6}, rel diff {rel:.3e} \
             over {} characters",
            sq.len()
        )],
    )
}

/// Twisted-moment boundedness, reported alongside the criteria (the twist
/// theorem itself is asymptotic; only boundedness is checked).
pub fn twist_boundedness_report() -> CriterionResult {
    let q = 2003u64;
    let ctx = ModulusContext::build(q).expect("prime");
    let chars = enumerate_class(&ctx, CharClass::EvenPrimitive);
    let centrals = afe_for_class(&ctx, &chars).expect("class");
    let sched = build_schedule(q, 0.5, &ScheduleConfig::toy()).expect("valid");
    let primes = PrimeTable::new(4000).expect("range");
    let (lo, hi) = sched.interval(1);
    let twist = crate::dpoly::DirichletPolynomial::from_pairs(
        primes
            .range(lo, hi)
            .iter()
            .map(|&p| (p, Complex64::new(1.0, 0.0))),
    );
    let r = twisted_second_moment(
        &ctx,
        &chars,
        &centrals,
        &sched,
        1,
        TwistArg::Poly(&twist),
        &primes,
    )
    .expect("guardrails met");
    result(
        17,
        "twisted second moment boundedness (reported)",
        r.ratio.is_finite() && r.ratio > 0.0 && r.ratio <= 10.0,
        vec![format!(
            "q={q} level 1: normalized ratio {:.4} (bound 10)",
            r.ratio
        )],
    )
}

/// Run every acceptance criterion in order.
pub fn run_all() -> Vec<CriterionResult> {
    vec![
        criterion_1_orthogonality(200),
        criterion_2_primitive_sum(300),
        criterion_3_gauss_modulus(300),
        criterion_4_dual_method(500),
        criterion_5_second_moment(),
        criterion_6_moment_scaling(),
        criterion_7_gaussian_tail(),
        criterion_8_theta(),
        criterion_9_diagonal_eval(),
        criterion_10_random_model(),
        criterion_11_real_twist(),
        criterion_12_partition(),
        criterion_13_parameters(),
        criterion_14_mollifier_inequality(),
        criterion_15_b_transform(),
        criterion_16_moment_from_tail(),
    ]
}

/// Named suites for the CLI `verify` subcommand. `qmax = 0` keeps each
/// suite's default sweep bound.
pub fn run_suite(name: &str, qmax: u64) -> Option<Vec<CriterionResult>> {
    let q = |d: u64| if qmax == 0 { d } else { qmax };
    Some(match name {
        "orthogonality" => vec![criterion_1_orthogonality(q(200))],
        "charsum" => vec![criterion_2_primitive_sum(q(300))],
        "gauss" => vec![criterion_3_gauss_modulus(q(300))],
        "lvalues" => vec![criterion_4_dual_method(q(500))],
        "l2moment" => vec![criterion_5_second_moment()],
        "scaling" => vec![criterion_6_moment_scaling()],
        "tail-shape" => vec![criterion_7_gaussian_tail()],
        "theta" => vec![criterion_8_theta()],
        "diagonal" => vec![criterion_9_diagonal_eval()],
        "random-model" => vec![criterion_10_random_model()],
        "realexp" => vec![criterion_11_real_twist()],
        "partition" => vec![criterion_12_partition()],
        "parameters" => vec![criterion_13_parameters()],
        "mollifier-ineq" => vec![criterion_14_mollifier_inequality()],
        "btransform" => vec![criterion_15_b_transform()],
        "moment-tail" => vec![criterion_16_moment_from_tail()],
        "twist" => vec![twist_boundedness_report()],
        "all" => run_all(),
        _ => return None,
    })
}
