//! Empirical estimators and identity verifiers over character classes:
//! moments, tail counts against the Gaussian comparator, twisted mollified
//! second moments, the B-transform, and moment-from-tail integration.
//!
//! Exact identities (orthogonality, the coprime-factor invariance of B) are
//! hard-asserted whenever they are internally generated; asymptotic ≪ claims
//! are only ever reported as ratios.

use num_complex::Complex64;
use std::sync::Arc;

use crate::characters::{
    diagonal_second_moment, even_second_moment, CharClass, DirichletCharacter, ModulusContext,
};
use crate::dpoly::{
    log_r_of_q, mollifier_value, s_real_cutoff, s_tilde_cutoff, DirichletPolynomial, LSufficient,
};
use crate::error::{Error, Result};
use crate::kahan::{KahanComplex, KahanSum};
use crate::lcentral::CentralValue;
use crate::arithmetic::PrimeTable;
use crate::scheme::ScaleSchedule;

/// One moment estimate with its comparator.
#[derive(Debug, Clone)]
pub struct MomentReport {
    pub q: u64,
    pub class: CharClass,
    pub power: f64,
    pub value: f64,
    pub comparator: f64,
    pub ratio: f64,
}

/// (1/|class|) Σ valueᵢ^power with the Gaussian comparator (log q)^{β²}.
///
/// For the fractional moments E[|L|^{2β}], pass the per-character |L|² as
/// `values` and β as `power`.
pub fn class_moment(
    q: u64,
    class: CharClass,
    values: &[f64],
    power: f64,
) -> Result<MomentReport> {
    if values.is_empty() {
        return Err(Error::domain("class_moment over an empty class"));
    }
    let mut acc = KahanSum::new();
    for &v in values {
        acc.add(v.powf(power));
    }
    let value = acc.value() / values.len() as f64;
    let comparator = (q as f64).ln().powf(power * power);
    Ok(MomentReport {
        q,
        class,
        power,
        value,
        comparator,
        ratio: if comparator > 0.0 {
            value / comparator
        } else {
            f64::NAN
        },
    })
}

/// Normalized tail count against the Gaussian comparator.
#[derive(Debug, Clone, Copy)]
pub struct TailReport {
    pub q: u64,
    pub v: f64,
    /// #{χ in class : log|L| > V}.
    pub count: usize,
    pub class_size: usize,
    /// count / φ(q).
    pub count_norm: f64,
    /// e^{-V²/loglog q} / √(loglog q).
    pub gaussian_bound: f64,
    pub ratio: f64,
    /// Zero sentinels seen (never counted into the tail).
    pub sentinels: usize,
}

/// Count log|L| > V over the class, normalized by φ(q), with the Gaussian
/// tail comparator. -∞ sentinels are excluded and reported.
pub fn tail_count(ctx: &Arc<ModulusContext>, log_abs: &[f64], v: f64) -> TailReport {
    let mut count = 0usize;
    let mut sentinels = 0usize;
    for &x in log_abs {
        if x == f64::NEG_INFINITY {
            sentinels += 1;
        } else if x > v {
            count += 1;
        }
    }
    let loglog_q = (ctx.q() as f64).ln().ln();
    let count_norm = count as f64 / ctx.phi() as f64;
    let gaussian_bound = (-v * v / loglog_q).exp() / loglog_q.sqrt();
    TailReport {
        q: ctx.q(),
        v,
        count,
        class_size: log_abs.len(),
        count_norm,
        gaussian_bound,
        ratio: if gaussian_bound > 0.0 {
            count_norm / gaussian_bound
        } else {
            f64::NAN
        },
        sentinels,
    }
}

/// The twist in a mollified second moment: a well-factorable Dirichlet
/// polynomial or an l-sufficient function.
pub enum TwistArg<'a> {
    Poly(&'a DirichletPolynomial),
    Sufficient(&'a LSufficient),
}

#[derive(Debug, Clone, Copy)]
pub struct TwistReport {
    pub q: u64,
    pub level: usize,
    /// E₊[|L·M₁…M_l·Q|²], direct over even primitive characters.
    pub direct: f64,
    /// E_⊕[|Q|²] via the exact orthogonality identity.
    pub twist_norm: f64,
    /// log q / log q_l.
    pub normalizer: f64,
    /// (direct / twist_norm) / normalizer.
    pub ratio: f64,
}

/// E₊[|L M₁…M_l Q|²] against E_⊕[|Q|²] · log q / log q_l.
///
/// The direct side is a plain average over the supplied even primitive
/// characters (pointwise mollifier products, no orthogonality involved). The
/// E_⊕ side uses the exact identity and is asserted against a full character
/// enumeration before being returned.
pub fn twisted_second_moment(
    ctx: &Arc<ModulusContext>,
    chars: &[DirichletCharacter],
    centrals: &[CentralValue],
    schedule: &ScaleSchedule,
    level: usize,
    twist: TwistArg<'_>,
    primes: &PrimeTable,
) -> Result<TwistReport> {
    assert_eq!(chars.len(), centrals.len());
    if chars.is_empty() {
        return Err(Error::domain("twisted moment over an empty class"));
    }
    let q = ctx.q();
    // length guardrail: the orthogonality route on the twist side must be
    // exact, which needs the support below q/2 (joint square below q for the
    // l-sufficient case)
    let twist_norm = match &twist {
        TwistArg::Poly(p) => {
            if p.length() * 2 >= q {
                return Err(Error::precondition(format!(
                    "twist length {} violates the < q/2 guardrail at q = {q}",
                    p.length()
                )));
            }
            // well-factorable twists depend only on primes up to q_level
            let smooth_bound = schedule.scale(level);
            for &n in p.coeffs().keys() {
                if n > 1 {
                    let f = crate::arithmetic::factorize(n)?;
                    let pmax = f.factors().last().map(|&(p, _)| p).unwrap_or(1);
                    if pmax as f64 > smooth_bound {
                        return Err(Error::precondition(format!(
                            "twist support {n} has prime factor {pmax} above q_{level} = \
                             {smooth_bound:.2}"
                        )));
                    }
                }
            }
            let diag = diagonal_second_moment(ctx, &pairs_of(p));
            let direct = even_second_moment(ctx, &pairs_of(p));
            assert!(
                (diag - direct).abs() <= 1e-10 * diag.abs().max(1.0),
                "orthogonality identity violated: {diag} vs {direct}"
            );
            diag
        }
        TwistArg::Sufficient(f) => {
            // l-sufficiency against this schedule: one factor per level on
            // the level's interval, with ν_j·d_j within the twist cap
            if f.factors().len() != level {
                return Err(Error::precondition(format!(
                    "l-sufficient twist needs {level} factors, got {}",
                    f.factors().len()
                )));
            }
            for (j, factor) in f.factors().iter().enumerate() {
                let (lo, hi) = schedule.interval(j + 1);
                let (flo, fhi) = factor.interval();
                if flo < lo - 1e-9 || fhi > hi + 1e-9 {
                    return Err(Error::precondition(format!(
                        "factor {} lives on ({flo}, {fhi}], outside level interval ({lo}, {hi}]",
                        j + 1
                    )));
                }
                let nu_d = factor.omega_cap() as f64 * factor.degree() as f64;
                let cap = schedule.twist_cap(j + 1);
                if nu_d > cap {
                    return Err(Error::precondition(format!(
                        "factor {}: nu*d = {nu_d} exceeds the twist cap {cap:.3}",
                        j + 1
                    )));
                }
            }
            if 2.0 * f.log_length()? >= (q as f64 / 2.0).ln() {
                return Err(Error::precondition(
                    "l-sufficient twist exceeds the orthogonality guardrail",
                ));
            }
            let split = f.second_moment_split()?;
            let even = crate::characters::enumerate_class(ctx, CharClass::Even);
            let mut acc = KahanSum::new();
            for chi in &even {
                let v = f.eval(chi);
                acc.add(v * v);
            }
            let direct = 2.0 * acc.value() / ctx.phi() as f64;
            assert!(
                (split - direct).abs() <= 1e-10 * split.abs().max(1.0),
                "real-twist splitting identity violated: {split} vs {direct}"
            );
            split
        }
    };

    let mut acc = KahanSum::new();
    for (chi, cv) in chars.iter().zip(centrals) {
        let mut m = Complex64::new(1.0, 0.0);
        for j in 1..=level {
            m *= mollifier_value(chi, schedule.interval(j), schedule.omega_cap(j), primes)?;
        }
        let t = match &twist {
            TwistArg::Poly(p) => p.eval_at_half(chi),
            TwistArg::Sufficient(f) => Complex64::new(f.eval(chi), 0.0),
        };
        acc.add((cv.value * m * t).norm_sqr());
    }
    let direct = acc.value() / chars.len() as f64;
    // log q_0 = log 1.5 < 1 would inflate the level-0 normalizer; floor the
    // denominator at 1 so level 0 reduces to E₊|L|²/log q
    let normalizer = (q as f64).ln() / schedule.scale(level).ln().max(1.0);
    Ok(TwistReport {
        q,
        level,
        direct,
        twist_norm,
        normalizer,
        ratio: direct / twist_norm / normalizer,
    })
}

fn pairs_of(p: &DirichletPolynomial) -> Vec<(u64, Complex64)> {
    // eval_at_half carries n^{-1/2}; the moment identity is stated for the
    // scaled coefficients aₙ n^{-1/2}
    p.coeffs()
        .iter()
        .map(|(&n, &a)| (n, a / (n as f64).sqrt()))
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct BTransformReport {
    pub q: u64,
    pub m1: u64,
    pub m2: u64,
    pub value: Complex64,
    /// φ⁺(q)φ(q)/(q√(m₁m₂)) · log(R²/(m₁m₂)), η = 0.
    pub comparator: f64,
    pub ratio: f64,
}

/// B(m₁, m₂) = Σ_{even primitive χ} χ(m₁)χ̄(m₂)|L(1/2,χ)|², with the
/// diagonal leading-term comparator.
///
/// χ(m₁)χ̄(m₂) is evaluated as a single exact root of unity (integer phases
/// subtract), so B(cm₁, cm₂) = B(m₁, m₂) holds bit-for-bit for (c, q) = 1.
pub fn b_transform(
    ctx: &Arc<ModulusContext>,
    chars: &[DirichletCharacter],
    centrals: &[CentralValue],
    m1: u64,
    m2: u64,
) -> Result<BTransformReport> {
    assert_eq!(chars.len(), centrals.len());
    let q = ctx.q();
    if !ctx.is_unit(m1 % q) || !ctx.is_unit(m2 % q) {
        return Err(Error::domain(format!(
            "B({m1}, {m2}) needs both arguments coprime to q = {q}"
        )));
    }
    let mut acc = KahanComplex::new();
    for (chi, cv) in chars.iter().zip(centrals) {
        acc.add(chi.pair_value(m1, m2) * cv.value.norm_sqr());
    }
    let value = acc.value();
    let phi_plus = chars.len() as f64;
    let prod = (m1 as f64) * (m2 as f64);
    let comparator = phi_plus * ctx.phi() as f64 / q as f64 / prod.sqrt()
        * (2.0 * log_r_of_q(q, 0.0) - prod.ln());
    Ok(BTransformReport {
        q,
        m1,
        m2,
        value,
        comparator,
        ratio: value.re / comparator,
    })
}

/// 2β ∫ e^{2βV} S(V) dV over the empirical survival function of log|L|,
/// with the exact closed form below the sample minimum. Sentinels (-∞)
/// contribute zero mass. β ∈ (0, 1).
pub fn moment_from_tail(log_abs: &[f64], beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::domain(format!("beta must lie in (0,1), got {beta}")));
    }
    if log_abs.is_empty() {
        return Err(Error::domain("moment_from_tail over an empty class"));
    }
    let n_total = log_abs.len() as f64;
    let mut finite: Vec<f64> = log_abs
        .iter()
        .copied()
        .filter(|x| x.is_finite())
        .collect();
    if finite.is_empty() {
        return Ok(0.0);
    }
    finite.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let v_min = finite[0];
    let v_max = *finite.last().expect("nonempty");
    // below v_min the survival is constant n_finite/n_total:
    // ∫_{-∞}^{v_min} 2β e^{2βV} dV = e^{2β v_min}
    let head = (2.0 * beta * v_min).exp() * finite.len() as f64 / n_total;
    if v_max <= v_min {
        return Ok(head);
    }
    let steps = 200_000usize;
    let h = (v_max - v_min) / steps as f64;
    let survival = |v: f64| -> f64 {
        let above = finite.len() - finite.partition_point(|&x| x <= v);
        above as f64 / n_total
    };
    let f = |v: f64| 2.0 * beta * (2.0 * beta * v).exp() * survival(v);
    let mut acc = KahanSum::new();
    acc.add(0.5 * (f(v_min) + f(v_max)));
    for i in 1..steps {
        acc.add(f(v_min + i as f64 * h));
    }
    Ok(head + acc.value() * h)
}

/// Moments of the increments of the truncated sums, against their
/// combinatorial comparators.
#[derive(Debug, Clone, Copy)]
pub struct PartialSumReport {
    pub q: u64,
    pub n: f64,
    pub m: f64,
    pub k: u32,
    /// E₊ |S̃_m - S̃_n|^{2k} and k!(m-n+1)^k.
    pub tilde_moment: f64,
    pub tilde_comparator: f64,
    pub tilde_ratio: f64,
    /// E₊ |S_m - S_n|^{2k} and (2k)!/(2^{2k}k!) (m-n)^k.
    pub real_moment: f64,
    pub real_comparator: f64,
    pub real_ratio: f64,
}

/// Direct moments of S̃_m - S̃_n and S_m - S_n over the supplied characters.
/// The cutoffs are e^{e^n}, e^{e^m}; the length guardrail of the stronger
/// moment bound (2k ≤ log q / (3 log q_m)) is enforced.
pub fn partial_sum_moment_suite(
    ctx: &Arc<ModulusContext>,
    chars: &[DirichletCharacter],
    n: f64,
    m: f64,
    k: u32,
    primes: &PrimeTable,
) -> Result<PartialSumReport> {
    if chars.is_empty() {
        return Err(Error::domain("moment suite over an empty class"));
    }
    if n > m {
        return Err(Error::domain(format!("need n <= m, got ({n}, {m})")));
    }
    let q = ctx.q();
    if k > 0 {
        let guard = (q as f64).ln() / (3.0 * m.exp());
        if 2.0 * k as f64 > guard {
            return Err(Error::precondition(format!(
                "2k = {} exceeds log q / (3 log q_m) = {guard:.3}",
                2 * k
            )));
        }
    }
    let x_n = n.exp().exp();
    let x_m = m.exp().exp();
    let mut tilde_acc = KahanSum::new();
    let mut real_acc = KahanSum::new();
    for chi in chars {
        let dt = s_tilde_cutoff(chi, x_m, primes)? - s_tilde_cutoff(chi, x_n, primes)?;
        let dr = s_real_cutoff(chi, x_m, primes)? - s_real_cutoff(chi, x_n, primes)?;
        tilde_acc.add(dt.norm().powi(2 * k as i32));
        real_acc.add(dr.abs().powi(2 * k as i32));
    }
    let count = chars.len() as f64;
    let tilde_moment = tilde_acc.value() / count;
    let real_moment = real_acc.value() / count;
    let factorial = |j: u32| -> f64 { (1..=j).map(|i| i as f64).product() };
    let tilde_comparator = factorial(k) * (m - n + 1.0).powi(k as i32);
    let real_comparator =
        factorial(2 * k) / (4.0f64.powi(k as i32) * factorial(k)) * (m - n).powi(k as i32);
    Ok(PartialSumReport {
        q,
        n,
        m,
        k,
        tilde_moment,
        tilde_comparator,
        tilde_ratio: if tilde_comparator > 0.0 {
            tilde_moment / tilde_comparator
        } else {
            f64::NAN
        },
        real_moment,
        real_comparator,
        real_ratio: if real_comparator > 0.0 {
            real_moment / real_comparator
        } else {
            f64::NAN
        },
    })
}
