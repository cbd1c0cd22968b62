//! Central values L(1/2, χ) by two independent methods.
//!
//! The production route is a smoothed approximate functional equation with a
//! normalized incomplete-gamma cutoff; the oracle route goes through Hurwitz
//! zeta, L(s, χ) = q^{-s} Σ_a χ(a) ζ(s, a/q). Every experiment that consumes
//! central values is cross-validated against the dual-method agreement suite.

use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

use crate::characters::{gauss_sums_for, DirichletCharacter, ModulusContext};
use crate::error::{Error, Result};
use crate::kahan::{KahanComplex, KahanSum};
use crate::special::{gamma_q, hurwitz_zeta_regularized};

/// How a central value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Smoothed approximate functional equation.
    Afe,
    /// Hurwitz-zeta expansion of the Dirichlet series.
    Hurwitz,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Afe => "afe",
            Method::Hurwitz => "hurwitz",
        }
    }
}

/// A computed L-value with its numerical provenance.
#[derive(Debug, Clone, Copy)]
pub struct CentralValue {
    pub value: Complex64,
    /// ln |value|, or -∞ when |value| is numerically indistinguishable from 0.
    pub log_abs: f64,
    pub method: Method,
    /// Bound on truncation plus rounding error.
    pub est_error: f64,
}

impl CentralValue {
    pub fn new(value: Complex64, method: Method, est_error: f64) -> Self {
        Self {
            value,
            log_abs: log_abs_of(value, est_error),
            method,
            est_error,
        }
    }

    /// True when the value cannot be distinguished from zero; such records
    /// must be excluded from tail statistics.
    pub fn is_zero_sentinel(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }
}

fn log_abs_of(value: Complex64, est_error: f64) -> f64 {
    let r = value.norm();
    if r <= est_error {
        f64::NEG_INFINITY
    } else {
        r.ln()
    }
}

/// ln |cv| with the -∞ sentinel convention of [`CentralValue`].
pub fn log_abs_central(cv: &CentralValue) -> f64 {
    cv.log_abs
}

/// L(s, χ) through Hurwitz zeta: q^{-s} Σ_{a=1}^{q} χ(a) ζ(s, a/q).
///
/// The pole-subtracted ζ(s, a) - 1/(s-1) is summed instead; since
/// Σ_a χ(a) = 0 for non-principal χ this is exactly the same value, stays
/// finite through s = 1, and is better conditioned near it. The principal
/// character is rejected.
pub fn l_value_direct(chi: &DirichletCharacter, s: Complex64) -> Result<CentralValue> {
    if chi.is_principal() {
        return Err(Error::domain(
            "principal character: L has a pole structure outside this evaluator",
        ));
    }
    if s.re <= 0.0 {
        return Err(Error::domain(format!("need Re(s) > 0, got {s}")));
    }
    let q = chi.modulus();
    let mut acc = KahanComplex::new();
    for a in 1..=q {
        let c = chi.eval_u64(a);
        if c != Complex64::new(0.0, 0.0) {
            acc.add(c * hurwitz_zeta_regularized(s, a as f64 / q as f64)?);
        }
    }
    let value = (-s * (q as f64).ln()).exp() * acc.value();
    let est_error = 1e-12 * (q as f64).powf((1.0 - s.re).max(0.0)).max(1.0);
    Ok(CentralValue::new(value, Method::Hurwitz, est_error))
}

/// Hurwitz-route L(s, χ) for a batch of characters of one modulus, sharing
/// the ζ(s, a/q) table across the class.
pub fn l_values_direct_class(
    ctx: &Arc<ModulusContext>,
    chars: &[DirichletCharacter],
    s: Complex64,
) -> Result<Vec<CentralValue>> {
    if s.re <= 0.0 {
        return Err(Error::domain(format!("need Re(s) > 0, got {s}")));
    }
    let q = ctx.q();
    let mut table = vec![Complex64::new(0.0, 0.0); q as usize];
    for a in 1..=q {
        if ctx.is_unit(a) {
            table[(a - 1) as usize] = hurwitz_zeta_regularized(s, a as f64 / q as f64)?;
        }
    }
    let prefactor = (-s * (q as f64).ln()).exp();
    let est_error = 1e-12 * (q as f64).powf((1.0 - s.re).max(0.0)).max(1.0);
    chars
        .par_iter()
        .map(|chi| {
            if chi.is_principal() {
                return Err(Error::domain(
                    "principal character: L has a pole structure outside this evaluator",
                ));
            }
            let mut acc = KahanComplex::new();
            for a in 1..=q {
                let c = chi.eval_u64(a);
                if c != Complex64::new(0.0, 0.0) {
                    acc.add(c * table[(a - 1) as usize]);
                }
            }
            Ok(CentralValue::new(
                prefactor * acc.value(),
                Method::Hurwitz,
                est_error,
            ))
        })
        .collect()
}

/// AFE smoothing weight V(x) = Γ(1/4, x²)/Γ(1/4).
pub fn afe_weight(x: f64) -> f64 {
    gamma_q(0.25, x * x).expect("x² >= 0")
}

/// Shared per-modulus AFE data: weights w_n = n^{-1/2} V(n √(π/q)) up to the
/// point where V drops below 1e-15, plus an error budget for the truncation.
pub struct AfeWeights {
    q: u64,
    weights: Vec<f64>,
    est_error: f64,
}

impl AfeWeights {
    pub fn build(q: u64) -> Self {
        let a = (std::f64::consts::PI / q as f64).sqrt();
        let mut weights = Vec::new();
        let mut abs_sum = KahanSum::new();
        let mut n = 1u64;
        loop {
            let v = afe_weight(n as f64 * a);
            if v < 1e-15 && n as f64 * a > 2.0 {
                break;
            }
            let w = v / (n as f64).sqrt();
            weights.push(w);
            abs_sum.add(w);
            n += 1;
        }
        let n_last = weights.len() as f64;
        let t_last = *weights.last().expect("at least one weight");
        // geometric tail: V((n+1)a)/V(na) <= e^{-(2n+1)a²} in the cut regime
        let decay = (2.0 * n_last * a * a).exp() - 1.0;
        let tail = if decay > 0.0 { t_last / decay } else { t_last };
        // both AFE sums truncate, plus accumulated rounding
        let est_error = 2.0 * tail + 4e-16 * abs_sum.value();
        Self {
            q,
            weights,
            est_error,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Σ_n χ(n) w_n, ascending n, compensated.
    fn character_sum(&self, chi: &DirichletCharacter) -> Complex64 {
        let mut acc = KahanComplex::new();
        for (i, &w) in self.weights.iter().enumerate() {
            let n = i as u64 + 1;
            let c = chi.eval_u64(n);
            if c != Complex64::new(0.0, 0.0) {
                acc.add(c * w);
            }
        }
        acc.value()
    }

    fn assemble(&self, sum: Complex64, tau: Complex64) -> CentralValue {
        let eps = tau / (self.q as f64).sqrt();
        let value = sum + eps * sum.conj();
        CentralValue::new(value, Method::Afe, self.est_error)
    }
}

/// L(1/2, χ) by the smoothed approximate functional equation
///
///   L(1/2,χ) = Σ_n χ(n) n^{-1/2} V(n√(π/q)) + (τ(χ)/√q) Σ_n χ̄(n) n^{-1/2} V(n√(π/q)),
///
/// for χ even and primitive. Since V is real, the second sum is the conjugate
/// of the first.
pub fn l_central_afe(chi: &DirichletCharacter) -> Result<CentralValue> {
    ensure_even_primitive(chi)?;
    let weights = AfeWeights::build(chi.modulus());
    Ok(weights.assemble(weights.character_sum(chi), chi.gauss_sum()))
}

fn ensure_even_primitive(chi: &DirichletCharacter) -> Result<()> {
    if !chi.is_even() {
        return Err(Error::domain("AFE route requires an even character"));
    }
    if !chi.is_primitive() {
        return Err(Error::domain("AFE route requires a primitive character"));
    }
    Ok(())
}

/// AFE central values for a batch of even primitive characters of one
/// modulus, sharing the weight table and the Gauss-sum batch. Parallel over
/// characters; each per-character result is deterministic.
pub fn afe_for_class(
    ctx: &Arc<ModulusContext>,
    chars: &[DirichletCharacter],
) -> Result<Vec<CentralValue>> {
    for chi in chars {
        ensure_even_primitive(chi)?;
    }
    let weights = AfeWeights::build(ctx.q());
    let taus = gauss_sums_for(ctx, chars);
    Ok(chars
        .par_iter()
        .zip(taus.par_iter())
        .map(|(chi, &tau)| weights.assemble(weights.character_sum(chi), tau))
        .collect())
}
