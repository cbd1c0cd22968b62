//! Dirichlet polynomials and everything built from them: truncated log sums,
//! interval mollifiers, real-twist coefficient expansion, the central-value
//! quadratic form, and the Θ_β Euler-product machinery with its β → 0 closed
//! forms.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::arithmetic::{factorize, FactoredInteger, PrimeTable};
use crate::characters::DirichletCharacter;
use crate::error::{Error, Result};
use crate::kahan::{KahanComplex, KahanSum};
use crate::special::{digamma_quarter, EULER_GAMMA};

/// Cap on explicit coefficient expansions.
const MAX_TERMS: usize = 1 << 22;

/// Where the support of a polynomial is allowed to live: integers whose prime
/// factors all lie in `(lo, hi]`, with at most `omega_cap` of them counted
/// with multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportDescriptor {
    pub interval: (f64, f64),
    pub omega_cap: u32,
}

impl SupportDescriptor {
    pub fn admits(&self, n: u64) -> bool {
        if n == 0 {
            return false;
        }
        let f = factorize(n).expect("n >= 1");
        let (lo, hi) = self.interval;
        f.factors().iter().all(|&(p, _)| {
            let pf = p as f64;
            pf > lo && pf <= hi
        }) && crate::arithmetic::omega_in_interval(&f, lo, hi) <= self.omega_cap
    }
}

/// A finite map n ↦ aₙ, kept sorted so every evaluation walks ascending n.
#[derive(Debug, Clone, Default)]
pub struct DirichletPolynomial {
    coeffs: BTreeMap<u64, Complex64>,
    support: Option<SupportDescriptor>,
}

impl DirichletPolynomial {
    pub fn new(coeffs: BTreeMap<u64, Complex64>) -> Self {
        Self {
            coeffs,
            support: None,
        }
    }

    pub fn with_support(mut self, support: SupportDescriptor) -> Result<Self> {
        for &n in self.coeffs.keys() {
            if !support.admits(n) && n != 1 {
                return Err(Error::precondition(format!(
                    "coefficient at {n} violates the support descriptor"
                )));
            }
        }
        self.support = Some(support);
        Ok(self)
    }

    /// The constant polynomial {1 ↦ 1}.
    pub fn one() -> Self {
        let mut m = BTreeMap::new();
        m.insert(1, Complex64::new(1.0, 0.0));
        Self::new(m)
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, Complex64)>) -> Self {
        Self::new(pairs.into_iter().collect())
    }

    pub fn coeffs(&self) -> &BTreeMap<u64, Complex64> {
        &self.coeffs
    }

    pub fn support(&self) -> Option<&SupportDescriptor> {
        self.support.as_ref()
    }

    /// Largest supported index (1 for the empty polynomial).
    pub fn length(&self) -> u64 {
        self.coeffs.keys().next_back().copied().unwrap_or(1)
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    /// Σ aₙ χ(n) n^{-1/2}, ascending n, compensated.
    pub fn eval_at_half(&self, chi: &DirichletCharacter) -> Complex64 {
        let mut acc = KahanComplex::new();
        for (&n, &a) in &self.coeffs {
            let c = chi.eval_u64(n);
            if c != Complex64::new(0.0, 0.0) {
                acc.add(a * c / (n as f64).sqrt());
            }
        }
        acc.value()
    }

    /// Pointwise product of polynomials (Dirichlet convolution of supports).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.coeffs.len().saturating_mul(other.coeffs.len()) > MAX_TERMS {
            return Err(Error::resource("polynomial product too large"));
        }
        let mut out: BTreeMap<u64, Complex64> = BTreeMap::new();
        for (&n, &a) in &self.coeffs {
            for (&m, &b) in &other.coeffs {
                let nm = n
                    .checked_mul(m)
                    .ok_or_else(|| Error::resource("index overflow in polynomial product"))?;
                *out.entry(nm).or_insert(Complex64::new(0.0, 0.0)) += a * b;
            }
        }
        Ok(Self::new(out))
    }
}

/// Prime cutoff e^{e^k}, bounded by the sieve range.
fn cutoff_from_k(k: f64, primes: &PrimeTable) -> Result<f64> {
    let inner = k.exp();
    if inner > 700.0 {
        return Err(Error::resource(format!(
            "cutoff e^e^{k} overflows any sieve range"
        )));
    }
    let x = inner.exp();
    if x > primes.limit() as f64 {
        return Err(Error::resource(format!(
            "cutoff {x:.3e} beyond sieve limit {}",
            primes.limit()
        )));
    }
    Ok(x)
}

/// Truncated formal logarithm at 1/2 up to primes ≤ x:
/// Σ_{p ≤ x} χ(p) p^{-1/2} + χ(p)²/(2p).
pub fn s_tilde_cutoff(chi: &DirichletCharacter, x: f64, primes: &PrimeTable) -> Result<Complex64> {
    if x > primes.limit() as f64 {
        return Err(Error::resource(format!(
            "cutoff {x:.3e} beyond sieve limit {}",
            primes.limit()
        )));
    }
    let mut acc = KahanComplex::new();
    for &p in primes.range(1.0, x) {
        let c = chi.eval_u64(p);
        if c != Complex64::new(0.0, 0.0) {
            acc.add(c / (p as f64).sqrt() + c * c / (2.0 * p as f64));
        }
    }
    Ok(acc.value())
}

/// S̃_k: the truncated formal logarithm with cutoff e^{e^k}.
pub fn s_tilde(chi: &DirichletCharacter, k: f64, primes: &PrimeTable) -> Result<Complex64> {
    s_tilde_cutoff(chi, cutoff_from_k(k, primes)?, primes)
}

/// Real truncated sum with cutoff x: Σ_{p ≤ x} Re(χ(p)p^{-1/2} + χ(p²)/(2p)).
pub fn s_real_cutoff(chi: &DirichletCharacter, x: f64, primes: &PrimeTable) -> Result<f64> {
    if x > primes.limit() as f64 {
        return Err(Error::resource(format!(
            "cutoff {x:.3e} beyond sieve limit {}",
            primes.limit()
        )));
    }
    let q = chi.modulus();
    let mut acc = KahanSum::new();
    for &p in primes.range(1.0, x) {
        let c = chi.eval_u64(p);
        let p_sq = (p as u128 * p as u128 % q as u128) as u64;
        let c_sq = chi.eval_u64(p_sq);
        acc.add((c / (p as f64).sqrt() + c_sq / (2.0 * p as f64)).re);
    }
    Ok(acc.value())
}

/// S_k: the real truncated sum with cutoff e^{e^k}.
pub fn s_real(chi: &DirichletCharacter, k: f64, primes: &PrimeTable) -> Result<f64> {
    s_real_cutoff(chi, cutoff_from_k(k, primes)?, primes)
}

/// Explicit mollifier factor on an interval: coefficients μ(n) over n with
/// all prime factors in `(lo, hi]` and at most `cap` of them. An interval
/// holding no primes gives {1 ↦ 1}.
pub fn mollifier_factor(
    interval: (f64, f64),
    cap: u32,
    primes: &PrimeTable,
) -> Result<DirichletPolynomial> {
    let ps: Vec<u64> = primes.range(interval.0, interval.1).to_vec();
    let depth = (cap as usize).min(ps.len());
    if subset_count(ps.len(), depth) > MAX_TERMS as f64 {
        return Err(Error::resource(format!(
            "mollifier expansion over {} primes with cap {cap} is too large",
            ps.len()
        )));
    }
    let mut coeffs: BTreeMap<u64, Complex64> = BTreeMap::new();
    // DFS over squarefree products; μ alternates with the factor count
    let mut stack: Vec<(usize, usize, u64, f64)> = vec![(0, 0, 1, 1.0)];
    while let Some((start, used, n, mu)) = stack.pop() {
        coeffs.insert(n, Complex64::new(mu, 0.0));
        if used == depth {
            continue;
        }
        for (i, &p) in ps.iter().enumerate().skip(start) {
            if let Some(np) = n.checked_mul(p) {
                stack.push((i + 1, used + 1, np, -mu));
            } else {
                return Err(Error::resource("mollifier support exceeds u64"));
            }
        }
    }
    DirichletPolynomial::new(coeffs).with_support(SupportDescriptor {
        interval,
        omega_cap: cap,
    })
}

fn subset_count(n: usize, k: usize) -> f64 {
    let mut total = 0.0f64;
    let mut c = 1.0f64;
    for j in 0..=k.min(n) {
        if j > 0 {
            c *= (n - j + 1) as f64 / j as f64;
        }
        total += c;
        if total > 1e18 {
            return total;
        }
    }
    total
}

/// M_l(χ, 1/2) evaluated pointwise.
///
/// When the Ω cap does not bind, the capped sum is the full squarefree
/// expansion and equals the exact Euler product Π_{p∈(lo,hi]} (1 - χ(p)/√p),
/// which is evaluated directly with no coefficient table. A binding cap falls
/// back to the capped DFS expansion.
pub fn mollifier_value(
    chi: &DirichletCharacter,
    interval: (f64, f64),
    cap: u32,
    primes: &PrimeTable,
) -> Result<Complex64> {
    let ps = primes.range(interval.0, interval.1);
    if ps.len() <= cap as usize {
        let mut prod = Complex64::new(1.0, 0.0);
        for &p in ps {
            prod *= Complex64::new(1.0, 0.0) - chi.eval_u64(p) / (p as f64).sqrt();
        }
        return Ok(prod);
    }
    if subset_count(ps.len(), cap as usize) > MAX_TERMS as f64 {
        return Err(Error::resource(format!(
            "capped mollifier expansion over {} primes (cap {cap}) is too large",
            ps.len()
        )));
    }
    let mut acc = KahanComplex::new();
    let mut stack: Vec<(usize, u32, Complex64)> = vec![(0, 0, Complex64::new(1.0, 0.0))];
    while let Some((start, used, val)) = stack.pop() {
        acc.add(val);
        if used == cap {
            continue;
        }
        for (i, &p) in ps.iter().enumerate().skip(start) {
            stack.push((i + 1, used + 1, -val * chi.eval_u64(p) / (p as f64).sqrt()));
        }
    }
    Ok(acc.value())
}

/// Nominal log-length of a capped interval mollifier: the log of the largest
/// admissible support integer (product of the `cap` largest primes).
pub fn mollifier_log_length(interval: (f64, f64), cap: u32, primes: &PrimeTable) -> f64 {
    primes
        .range(interval.0, interval.1)
        .iter()
        .rev()
        .take(cap as usize)
        .map(|&p| (p as f64).ln())
        .sum()
}

/// log R(q) = ½ log(q/π) + ½ ψ(¼) + γ + η.
pub fn log_r_of_q(q: u64, eta: f64) -> f64 {
    0.5 * (q as f64 / std::f64::consts::PI).ln() + 0.5 * digamma_quarter() + EULER_GAMMA + eta
}

pub fn r_of_q(q: u64, eta: f64) -> f64 {
    log_r_of_q(q, eta).exp()
}

fn gcd_u128(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd_u128(b, a % b)
    }
}

/// The central-value quadratic form
///
///   𝒬(X) = Σ x_{j₁,k₁} x̄_{j₂,k₂} · (j₁k₂, j₂k₁)/(j₁j₂k₁k₂)
///           · log( R² (j₁k₂, j₂k₁)² / (j₁j₂k₁k₂) ),
///
/// over entries whose indices are all coprime to q (others skipped per the
/// summation condition). Hermitian X gives a real value; the imaginary part
/// is returned so callers can see it vanish.
pub fn q_form(x: &BTreeMap<(u64, u64), Complex64>, q: u64, big_r: f64) -> Complex64 {
    let entries: Vec<(u64, u64, Complex64)> = x
        .iter()
        .filter(|&(&(j, k), _)| {
            gcd_u128(j as u128, q as u128) == 1 && gcd_u128(k as u128, q as u128) == 1
        })
        .map(|(&(j, k), &v)| (j, k, v))
        .collect();
    let log_r2 = 2.0 * big_r.ln();
    let mut acc = KahanComplex::new();
    for &(j1, k1, x1) in &entries {
        for &(j2, k2, x2) in &entries {
            let g = gcd_u128(j1 as u128 * k2 as u128, j2 as u128 * k1 as u128) as f64;
            let denom = j1 as f64 * j2 as f64 * k1 as f64 * k2 as f64;
            let kernel = g / denom * (log_r2 + (g * g / denom).ln());
            acc.add(x1 * x2.conj() * kernel);
        }
    }
    acc.value()
}

/// One factor of an l-sufficient function: K(Re Σ_m b_m χ(m) m^{-1/2}) with K
/// a real polynomial and b supported on primes and prime squares in one
/// interval.
#[derive(Debug, Clone)]
pub struct RealTwistFactor {
    b_coeffs: BTreeMap<u64, Complex64>,
    /// K's coefficients, ascending degree.
    poly: Vec<f64>,
    omega_cap: u32,
    interval: (f64, f64),
}

impl RealTwistFactor {
    pub fn new(
        b_coeffs: BTreeMap<u64, Complex64>,
        poly: Vec<f64>,
        omega_cap: u32,
        interval: (f64, f64),
    ) -> Result<Self> {
        if poly.is_empty() {
            return Err(Error::domain("K must have at least a constant term"));
        }
        for &m in b_coeffs.keys() {
            let f = factorize(m)?;
            let ok_shape = matches!(f.factors(), [(_, 1)] | [(_, 2)]);
            if !ok_shape {
                return Err(Error::precondition(format!(
                    "b-support must be a prime or a prime square, got {m}"
                )));
            }
            let (p, e) = f.factors()[0];
            let pf = p as f64;
            if !(pf > interval.0 && pf <= interval.1) {
                return Err(Error::precondition(format!(
                    "b-support element {m} lies outside ({}, {}]",
                    interval.0, interval.1
                )));
            }
            if e > omega_cap {
                return Err(Error::precondition(format!(
                    "b-support element {m} exceeds the Ω cap {omega_cap}"
                )));
            }
        }
        Ok(Self {
            b_coeffs,
            poly,
            omega_cap,
            interval,
        })
    }

    pub fn degree(&self) -> usize {
        self.poly.len() - 1
    }

    pub fn omega_cap(&self) -> u32 {
        self.omega_cap
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// K(Re Σ b_m χ(m) m^{-1/2}): the pointwise value.
    pub fn eval(&self, chi: &DirichletCharacter) -> f64 {
        let mut acc = KahanComplex::new();
        for (&m, &b) in &self.b_coeffs {
            let c = chi.eval_u64(m);
            if c != Complex64::new(0.0, 0.0) {
                acc.add(b * c / (m as f64).sqrt());
            }
        }
        let x = acc.value().re;
        self.poly.iter().rev().fold(0.0, |h, &c| h * x + c)
    }
}

/// Coefficients C_{m,r} of the real-twist expansion
/// K(Re Σ b_m χ(m) m^{-1/2}) = Σ C_{m,r} (mr)^{-1/2} χ(m) χ̄(r).
#[derive(Debug, Clone, Default)]
pub struct TwistCoefficients {
    entries: BTreeMap<(u64, u64), Complex64>,
}

impl TwistCoefficients {
    pub fn entries(&self) -> &BTreeMap<(u64, u64), Complex64> {
        &self.entries
    }

    /// Σ C_{m,r} (mr)^{-1/2} χ(m) χ̄(r); reproduces the twisted factor
    /// pointwise for characters whose modulus is coprime to the support.
    pub fn eval(&self, chi: &DirichletCharacter) -> Complex64 {
        let mut acc = KahanComplex::new();
        for (&(m, r), &c) in &self.entries {
            let v = chi.eval_u64(m) * chi.eval_u64(r).conj();
            if v != Complex64::new(0.0, 0.0) {
                acc.add(c * v / (m as f64 * r as f64).sqrt());
            }
        }
        acc.value()
    }

    /// Σ |C_{m,r}|²/(mr): the coefficient side of the real-twist second
    /// moment identity.
    pub fn second_moment(&self) -> f64 {
        let mut acc = KahanSum::new();
        for (&(m, r), &c) in &self.entries {
            acc.add(c.norm_sqr() / (m as f64 * r as f64));
        }
        acc.value()
    }

    /// Largest index appearing in either slot.
    pub fn max_index(&self) -> u64 {
        self.entries
            .keys()
            .map(|&(m, r)| m.max(r))
            .max()
            .unwrap_or(1)
    }

    /// max |C_{m,r} - C̄_{r,m}| over the support.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (&(m, r), &c) in &self.entries {
            let mirror = self
                .entries
                .get(&(r, m))
                .copied()
                .unwrap_or(Complex64::new(0.0, 0.0));
            worst = worst.max((c - mirror.conj()).norm());
        }
        worst
    }
}

/// Expand K(Re Σ b_m χ(m) m^{-1/2}) into twist coefficients: polynomial
/// convolution in the symbols χ(j)χ̄(k), gcd cancellation, and the √(mr)
/// normalization.
///
/// Internally a symbol (j, k) stands for χ(j)χ̄(k)(jk)^{-1/2}, so the base
/// element is Σ (b_m/2)(m,1) + (b̄_m/2)(1,m) and multiplication is index
/// multiplication. Cancelling g = (j,k) sends (j,k) → (j/g, k/g) with weight
/// 1/g, since jk = mr·g² under the (jk)^{-1/2} scaling.
pub fn real_twist_coeffs(f: &RealTwistFactor) -> Result<TwistCoefficients> {
    type Sym = BTreeMap<(u64, u64), Complex64>;

    let mut base: Sym = BTreeMap::new();
    for (&m, &b) in &f.b_coeffs {
        *base.entry((m, 1)).or_insert(Complex64::new(0.0, 0.0)) += b * 0.5;
        *base.entry((1, m)).or_insert(Complex64::new(0.0, 0.0)) += b.conj() * 0.5;
    }

    let mul = |a: &Sym, b: &Sym| -> Result<Sym> {
        if a.len().saturating_mul(b.len()) > MAX_TERMS {
            return Err(Error::resource("twist expansion too large"));
        }
        let mut out: Sym = BTreeMap::new();
        for (&(j1, k1), &c1) in a {
            for (&(j2, k2), &c2) in b {
                let j = j1
                    .checked_mul(j2)
                    .ok_or_else(|| Error::resource("twist index overflow"))?;
                let k = k1
                    .checked_mul(k2)
                    .ok_or_else(|| Error::resource("twist index overflow"))?;
                *out.entry((j, k)).or_insert(Complex64::new(0.0, 0.0)) += c1 * c2;
            }
        }
        Ok(out)
    };

    let mut total: Sym = BTreeMap::new();
    let mut power: Sym = BTreeMap::new();
    power.insert((1, 1), Complex64::new(1.0, 0.0));
    for (d, &kappa) in f.poly.iter().enumerate() {
        if d > 0 {
            power = mul(&power, &base)?;
        }
        if kappa != 0.0 {
            for (&jk, &c) in &power {
                *total.entry(jk).or_insert(Complex64::new(0.0, 0.0)) += kappa * c;
            }
        }
    }

    let mut entries: BTreeMap<(u64, u64), Complex64> = BTreeMap::new();
    for (&(j, k), &c) in &total {
        let g = gcd_u128(j as u128, k as u128) as u64;
        *entries
            .entry((j / g, k / g))
            .or_insert(Complex64::new(0.0, 0.0)) += c / g as f64;
    }
    entries.retain(|_, c| c.norm() > 0.0);
    Ok(TwistCoefficients { entries })
}

/// An l-sufficient function: a product of interval-supported real-twist
/// factors on pairwise disjoint prime intervals.
#[derive(Debug, Clone)]
pub struct LSufficient {
    factors: Vec<RealTwistFactor>,
}

impl LSufficient {
    pub fn new(factors: Vec<RealTwistFactor>) -> Result<Self> {
        let mut ivs: Vec<(f64, f64)> = factors.iter().map(|f| f.interval()).collect();
        ivs.sort_by(|a, b| a.partial_cmp(b).expect("finite interval bounds"));
        for w in ivs.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::precondition(
                    "l-sufficient factors must live on disjoint prime intervals",
                ));
            }
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[RealTwistFactor] {
        &self.factors
    }

    /// F(χ) = Π_j K_j(Re Σ b^{(j)}_m χ(m) m^{-1/2}).
    pub fn eval(&self, chi: &DirichletCharacter) -> f64 {
        self.factors.iter().map(|f| f.eval(chi)).product()
    }

    /// E_⊕[F²] via the per-factor coefficient sums (the splitting identity):
    /// Π_j Σ |C^{(j)}_{m,r}|²/(mr).
    pub fn second_moment_split(&self) -> Result<f64> {
        let mut prod = 1.0;
        for f in &self.factors {
            prod *= real_twist_coeffs(f)?.second_moment();
        }
        Ok(prod)
    }

    /// Log of the product of per-factor support lengths; the guardrail
    /// quantity for moment computations.
    pub fn log_length(&self) -> Result<f64> {
        let mut total = 0.0;
        for f in &self.factors {
            let c = real_twist_coeffs(f)?;
            total += (c.max_index() as f64).ln();
        }
        Ok(total)
    }
}

// ---------------------------------------------------------------------------
// Θ_β machinery
// ---------------------------------------------------------------------------

/// Local Euler factor ξ_β(p, c₁, c₂): squarefree exponents d₁, d₂ ∈ {0,1}
/// against valuations v₁ = v_p(c₁), v₂ = v_p(c₂).
fn xi_beta(p: u64, v1: u32, v2: u32, beta: f64) -> Complex64 {
    let lp = (p as f64).ln();
    let mut acc = Complex64::new(0.0, 0.0);
    for d1 in 0..=1u32 {
        for d2 in 0..=1u32 {
            let e1 = d1 + v1;
            let e2 = d2 + v2;
            // exponent of p in U = f₁f₂(c₁,c₂)²/(c₁f₁,c₂f₂)²
            let u_exp = (d1 + d2) as i32 + 2 * v1.min(v2) as i32 - 2 * e1.min(e2) as i32;
            let sign = if (d1 + d2) % 2 == 0 { 1.0 } else { -1.0 };
            let mag = sign / (p as f64).powi(e1.max(e2) as i32);
            let phase = beta * u_exp as f64 * lp;
            acc += mag * Complex64::new(phase.cos(), phase.sin());
        }
    }
    acc
}

fn check_theta_args(c1: &FactoredInteger, c2: &FactoredInteger, primes: &[u64]) -> Result<()> {
    for c in [c1, c2] {
        for &(p, _) in c.factors() {
            if !primes.contains(&p) {
                return Err(Error::domain(format!(
                    "{} has prime factor {p} outside the prime list",
                    c.value()
                )));
            }
        }
    }
    Ok(())
}

/// Θ_β(c₁, c₂) = (Φ_β - Φ_{-β}) / (2iβ), with Φ_β = Π_p ξ_β(p, c₁, c₂).
pub fn theta_beta(
    c1: &FactoredInteger,
    c2: &FactoredInteger,
    primes: &[u64],
    beta: f64,
) -> Result<Complex64> {
    if !(beta > 0.0 && beta <= 0.1) {
        return Err(Error::domain(format!(
            "beta must lie in (0, 0.1], got {beta}"
        )));
    }
    check_theta_args(c1, c2, primes)?;
    let mut phi_pos = Complex64::new(1.0, 0.0);
    let mut phi_neg = Complex64::new(1.0, 0.0);
    for &p in primes {
        let v1 = c1.valuation(p);
        let v2 = c2.valuation(p);
        phi_pos *= xi_beta(p, v1, v2, beta);
        phi_neg *= xi_beta(p, v1, v2, -beta);
    }
    Ok((phi_pos - phi_neg) / Complex64::new(0.0, 2.0 * beta))
}

/// Closed-form β → 0 limit of Θ_β.
///
/// Diagonal case: -(1/c₁) Π_p (1 - 1/p) · Σ_p 2 log p/(p-1); the sign is
/// fixed by the direct double sum over squarefree f₁, f₂ (see the module
/// tests). One differing prime p*: (p*-1) log p* / p*^{max v + 1} ·
/// Π_{p≠p*} (p-1)/p^{max v + 1}. Two or more differing primes: 0.
pub fn theta_limit(c1: &FactoredInteger, c2: &FactoredInteger, primes: &[u64]) -> Result<f64> {
    check_theta_args(c1, c2, primes)?;
    let differing: Vec<u64> = primes
        .iter()
        .copied()
        .filter(|&p| c1.valuation(p) != c2.valuation(p))
        .collect();
    match differing.len() {
        0 => {
            let mut prod = 1.0 / c1.value() as f64;
            let mut sum = KahanSum::new();
            for &p in primes {
                prod *= 1.0 - 1.0 / p as f64;
                sum.add(2.0 * (p as f64).ln() / (p as f64 - 1.0));
            }
            Ok(-prod * sum.value())
        }
        1 => {
            let pstar = differing[0];
            let mut value = 1.0;
            for &p in primes {
                let vmax = c1.valuation(p).max(c2.valuation(p));
                let pf = p as f64;
                if p == pstar {
                    value *= (pf - 1.0) * pf.ln() / pf.powi(vmax as i32 + 1);
                } else {
                    value *= (pf - 1.0) / pf.powi(vmax as i32 + 1);
                }
            }
            Ok(value)
        }
        _ => Ok(0.0),
    }
}

/// β → 0 limit estimated from two finite-β evaluations by linear
/// extrapolation.
pub fn theta_extrapolated(
    c1: &FactoredInteger,
    c2: &FactoredInteger,
    primes: &[u64],
    betas: (f64, f64),
) -> Result<f64> {
    let (b1, b2) = betas;
    let t1 = theta_beta(c1, c2, primes, b1)?.re;
    let t2 = theta_beta(c1, c2, primes, b2)?.re;
    Ok((b1 * t2 - b2 * t1) / (b1 - b2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::{enumerate_class, CharClass, ModulusContext};

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_at_half_basics() {
        let ctx = ModulusContext::build(5).unwrap();
        let one = DirichletPolynomial::one();
        for chi in enumerate_class(&ctx, CharClass::All) {
            assert!((one.eval_at_half(&chi) - c64(1.0, 0.0)).norm() < 1e-15);
        }
        let quad = ctx.character(vec![2]);
        let p4 = DirichletPolynomial::from_pairs([(4u64, c64(1.0, 0.0))]);
        assert!((p4.eval_at_half(&quad) - c64(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eval_at_half_matches_naive_resummation() {
        let ctx = ModulusContext::build(11).unwrap();
        let chi = ctx.character_by_index(3);
        let poly = DirichletPolynomial::from_pairs(
            (1..40u64).map(|n| (n, c64((n as f64).sin(), (n as f64).cos()))),
        );
        let fast = poly.eval_at_half(&chi);
        let mut naive = c64(0.0, 0.0);
        for (&n, &a) in poly.coeffs() {
            naive += a * chi.eval_u64(n) / (n as f64).sqrt();
        }
        assert!((fast - naive).norm() < 1e-12);
    }

    #[test]
    fn s_tilde_hand_sum_mod5() {
        let primes = PrimeTable::new(100).unwrap();
        let ctx = ModulusContext::build(5).unwrap();
        let quad = ctx.character(vec![2]);
        let got = s_tilde_cutoff(&quad, 10.0, &primes).unwrap();
        // χ(2) = χ(3) = χ(7) = -1, χ(5) = 0
        let expect = (-1.0 / 2.0f64.sqrt() + 0.25)
            + (-1.0 / 3.0f64.sqrt() + 1.0 / 6.0)
            + (-1.0 / 7.0f64.sqrt() + 1.0 / 14.0);
        assert!((got - c64(expect, 0.0)).norm() < 1e-14, "{got}");
    }

    #[test]
    fn s_tilde_empty_below_two() {
        let primes = PrimeTable::new(100).unwrap();
        let ctx = ModulusContext::build(5).unwrap();
        let chi = ctx.character_by_index(1);
        let k = 2.0f64.ln().ln() - 0.1; // e^{e^k} < 2
        assert_eq!(s_tilde(&chi, k, &primes).unwrap(), c64(0.0, 0.0));
        assert_eq!(s_real(&chi, k, &primes).unwrap(), 0.0);
    }

    #[test]
    fn s_tilde_additive_over_abutting_cutoffs() {
        let primes = PrimeTable::new(200).unwrap();
        let ctx = ModulusContext::build(7).unwrap();
        let chi = ctx.character_by_index(2);
        let full = s_tilde_cutoff(&chi, 150.0, &primes).unwrap();
        let head = s_tilde_cutoff(&chi, 40.0, &primes).unwrap();
        let mut tail = KahanComplex::new();
        for &p in primes.range(40.0, 150.0) {
            let c = chi.eval_u64(p);
            tail.add(c / (p as f64).sqrt() + c * c / (2.0 * p as f64));
        }
        assert!((full - head - tail.value()).norm() <= 1e-12);
    }

    #[test]
    fn s_real_is_re_of_s_tilde() {
        let primes = PrimeTable::new(500).unwrap();
        for q in [5u64, 12, 29] {
            let ctx = ModulusContext::build(q).unwrap();
            for chi in enumerate_class(&ctx, CharClass::All) {
                for x in [3.0, 50.0, 400.0] {
                    let st = s_tilde_cutoff(&chi, x, &primes).unwrap();
                    let sr = s_real_cutoff(&chi, x, &primes).unwrap();
                    assert!((sr - st.re).abs() <= 1e-12, "q={q} x={x}");
                }
            }
        }
    }

    #[test]
    fn s_tilde_cutoff_beyond_sieve_errors() {
        let primes = PrimeTable::new(100).unwrap();
        let ctx = ModulusContext::build(5).unwrap();
        let chi = ctx.character_by_index(1);
        assert!(s_tilde_cutoff(&chi, 1e6, &primes).is_err());
        assert!(s_tilde(&chi, 3.0, &primes).is_err()); // e^{e^3} ≈ 5e8
    }

    #[test]
    fn mollifier_factor_examples() {
        let primes = PrimeTable::new(100).unwrap();
        // no primes in (23, 28]
        let empty = mollifier_factor((23.0, 28.0), 5, &primes).unwrap();
        assert_eq!(empty.num_terms(), 1);
        assert!((empty.coeffs()[&1] - c64(1.0, 0.0)).norm() < 1e-15);

        let m = mollifier_factor((2.0, 5.0), 2, &primes).unwrap();
        let support: Vec<u64> = m.coeffs().keys().copied().collect();
        assert_eq!(support, vec![1, 3, 5, 15]);
        assert!((m.coeffs()[&3] - c64(-1.0, 0.0)).norm() < 1e-15);
        assert!((m.coeffs()[&5] - c64(-1.0, 0.0)).norm() < 1e-15);
        assert!((m.coeffs()[&15] - c64(1.0, 0.0)).norm() < 1e-15);

        let capped = mollifier_factor((2.0, 5.0), 1, &primes).unwrap();
        let support: Vec<u64> = capped.coeffs().keys().copied().collect();
        assert_eq!(support, vec![1, 3, 5]);
    }

    #[test]
    fn mollifier_value_product_path_matches_expansion() {
        let primes = PrimeTable::new(100).unwrap();
        let ctx = ModulusContext::build(101).unwrap();
        for idx in [1u64, 7, 33] {
            let chi = ctx.character_by_index(idx);
            let poly = mollifier_factor((2.0, 30.0), 12, &primes).unwrap();
            let explicit = poly.eval_at_half(&chi);
            let product = mollifier_value(&chi, (2.0, 30.0), 12, &primes).unwrap();
            assert!((explicit - product).norm() < 1e-12);
        }
    }

    #[test]
    fn mollifier_value_capped_path_matches_expansion() {
        let primes = PrimeTable::new(100).unwrap();
        let ctx = ModulusContext::build(101).unwrap();
        let chi = ctx.character_by_index(5);
        let poly = mollifier_factor((2.0, 14.0), 2, &primes).unwrap();
        let explicit = poly.eval_at_half(&chi);
        let capped = mollifier_value(&chi, (2.0, 14.0), 2, &primes).unwrap();
        assert!((explicit - capped).norm() < 1e-12);
    }

    #[test]
    fn r_of_q_properties() {
        let mut prev = 0.0;
        for q in [5u64, 50, 500, 5000, 50000] {
            let r = r_of_q(q, 0.0);
            assert!(r > prev);
            prev = r;
        }
        let r4 = r_of_q(10_000, 0.0);
        let expect = (0.5 * (10_000.0 / std::f64::consts::PI).ln()
            + 0.5 * digamma_quarter()
            + EULER_GAMMA)
            .exp();
        assert!((r4 - expect).abs() < 1e-12);
        // eta shifts log R additively
        assert!((log_r_of_q(101, 0.3) - log_r_of_q(101, 0.0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn q_form_single_entry_is_2_log_r() {
        let mut x = BTreeMap::new();
        x.insert((1u64, 1u64), c64(1.0, 0.0));
        let big_r = r_of_q(101, 0.0);
        let v = q_form(&x, 101, big_r);
        assert!((v.re - 2.0 * big_r.ln()).abs() < 1e-12);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn q_form_hermitian_input_gives_real_output() {
        let mut x = BTreeMap::new();
        x.insert((1u64, 1u64), c64(0.7, 0.0));
        x.insert((2u64, 3u64), c64(0.4, 0.2));
        x.insert((3u64, 2u64), c64(0.4, -0.2));
        x.insert((2u64, 1u64), c64(-0.3, 0.9));
        x.insert((1u64, 2u64), c64(-0.3, -0.9));
        let v = q_form(&x, 101, r_of_q(101, 0.0));
        assert!(v.im.abs() < 1e-10, "{v}");
    }

    #[test]
    fn q_form_skips_indices_sharing_factors_with_q() {
        let mut x = BTreeMap::new();
        x.insert((1u64, 1u64), c64(1.0, 0.0));
        x.insert((101u64, 1u64), c64(5.0, 1.0)); // skipped for q = 101
        let big_r = r_of_q(101, 0.0);
        let v = q_form(&x, 101, big_r);
        assert!((v.re - 2.0 * big_r.ln()).abs() < 1e-12);
    }

    #[test]
    fn q_form_matches_quadruple_loop_brute_force() {
        // independent naive implementation over a dense 2x2 block
        let vals = [
            [c64(0.3, -0.1), c64(0.8, 0.25)],
            [c64(-0.5, 0.4), c64(0.1, 0.9)],
        ];
        let mut x = BTreeMap::new();
        for j in 1..=2u64 {
            for k in 1..=2u64 {
                x.insert((j, k), vals[(j - 1) as usize][(k - 1) as usize]);
            }
        }
        let q = 101u64;
        let big_r = r_of_q(q, 0.0);
        let fast = q_form(&x, q, big_r);

        let gcd = |a: u64, b: u64| -> u64 {
            let (mut a, mut b) = (a, b);
            while b != 0 {
                (a, b) = (b, a % b);
            }
            a
        };
        let mut brute = c64(0.0, 0.0);
        for j1 in 1..=2u64 {
            for k1 in 1..=2u64 {
                for j2 in 1..=2u64 {
                    for k2 in 1..=2u64 {
                        let g = gcd(j1 * k2, j2 * k1) as f64;
                        let denom = (j1 * j2 * k1 * k2) as f64;
                        let x1 = vals[(j1 - 1) as usize][(k1 - 1) as usize];
                        let x2 = vals[(j2 - 1) as usize][(k2 - 1) as usize];
                        brute +=
                            x1 * x2.conj() * (g / denom) * (big_r * big_r * g * g / denom).ln();
                    }
                }
            }
        }
        assert!((fast - brute).norm() < 1e-12);
    }

    #[test]
    fn real_twist_single_prime_identity_linear() {
        // K(x) = x, b on one prime: reproduces Re(χ(p)/√p) for even χ mod 7
        let ctx = ModulusContext::build(7).unwrap();
        let mut b = BTreeMap::new();
        b.insert(2u64, c64(1.0, 0.0));
        let f = RealTwistFactor::new(b, vec![0.0, 1.0], 2, (1.0, 4.0)).unwrap();
        let coeffs = real_twist_coeffs(&f).unwrap();
        assert!(
            (coeffs.entries()[&(2, 1)] - c64(0.5, 0.0)).norm() < 1e-14,
            "{:?}",
            coeffs.entries()
        );
        for chi in enumerate_class(&ctx, CharClass::Even) {
            let direct = (chi.eval(2) / 2.0f64.sqrt()).re;
            let via = coeffs.eval(&chi);
            assert!((via - c64(direct, 0.0)).norm() < 1e-13);
            assert!((f.eval(&chi) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn real_twist_constant_k() {
        let f = RealTwistFactor::new(BTreeMap::new(), vec![1.0], 1, (1.0, 4.0)).unwrap();
        let coeffs = real_twist_coeffs(&f).unwrap();
        assert_eq!(coeffs.entries().len(), 1);
        assert!((coeffs.entries()[&(1, 1)] - c64(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn real_twist_square_identity_mod11() {
        // K(x) = x², single prime: expansion reproduces (Re χ(p)/√p)²
        let ctx = ModulusContext::build(11).unwrap();
        let mut b = BTreeMap::new();
        b.insert(2u64, c64(1.0, 0.0));
        let f = RealTwistFactor::new(b, vec![0.0, 0.0, 1.0], 2, (1.0, 4.0)).unwrap();
        let coeffs = real_twist_coeffs(&f).unwrap();
        assert!(coeffs.hermitian_defect() < 1e-14);
        for chi in enumerate_class(&ctx, CharClass::All) {
            let x = (chi.eval(2) / 2.0f64.sqrt()).re;
            let via = coeffs.eval(&chi);
            assert!((via - c64(x * x, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn real_twist_moment_identity_small_config() {
        // E_⊕[K(Re Σ b χ)²] by direct enumeration vs Σ|C|²/(mr);
        // q = 67 keeps all index products collision-free for powers of 2.
        let q = 67u64;
        let ctx = ModulusContext::build(q).unwrap();
        let mut b = BTreeMap::new();
        b.insert(2u64, c64(0.8, 0.3));
        b.insert(4u64, c64(-0.2, 0.5));
        let f = RealTwistFactor::new(b, vec![0.1, 0.9, -0.4], 2, (1.0, 3.0)).unwrap();
        let coeffs = real_twist_coeffs(&f).unwrap();

        let even = enumerate_class(&ctx, CharClass::Even);
        let mut acc = KahanSum::new();
        for chi in &even {
            let v = f.eval(chi);
            acc.add(v * v);
        }
        let lhs = 2.0 * acc.value() / ctx.phi() as f64;
        let rhs = coeffs.second_moment();
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn real_twist_rejects_bad_support() {
        let mut b = BTreeMap::new();
        b.insert(6u64, c64(1.0, 0.0)); // not a prime or prime square
        assert!(RealTwistFactor::new(b, vec![0.0, 1.0], 2, (1.0, 10.0)).is_err());
        let mut b2 = BTreeMap::new();
        b2.insert(11u64, c64(1.0, 0.0)); // outside interval
        assert!(RealTwistFactor::new(b2, vec![0.0, 1.0], 2, (1.0, 10.0)).is_err());
        let mut b3 = BTreeMap::new();
        b3.insert(4u64, c64(1.0, 0.0)); // Ω = 2 > cap 1
        assert!(RealTwistFactor::new(b3, vec![0.0, 1.0], 1, (1.0, 10.0)).is_err());
    }

    #[test]
    fn splitting_identity_disjoint_supports() {
        // E_⊕|AB|² = E_⊕|A|² E_⊕|B|² for disjoint prime supports
        for q in [61u64, 101, 197] {
            let ctx = ModulusContext::build(q).unwrap();
            let a = DirichletPolynomial::from_pairs([
                (1u64, c64(0.4, 0.1)),
                (2u64, c64(-0.7, 0.3)),
                (3u64, c64(0.2, -0.6)),
            ]);
            let b = DirichletPolynomial::from_pairs([
                (1u64, c64(0.9, -0.2)),
                (5u64, c64(0.5, 0.5)),
            ]);
            let ab = a.mul(&b).unwrap();
            let even = enumerate_class(&ctx, CharClass::Even);
            let mean = |p: &DirichletPolynomial| -> f64 {
                let mut acc = KahanSum::new();
                for chi in &even {
                    acc.add(p.eval_at_half(chi).norm_sqr());
                }
                2.0 * acc.value() / ctx.phi() as f64
            };
            let lhs = mean(&ab);
            let rhs = mean(&a) * mean(&b);
            assert!((lhs - rhs).abs() < 1e-10, "q={q}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn realsplit_two_interval_toy() {
        // direct E_⊕[F²] equals the product of per-factor expectations
        let q = 197u64;
        let ctx = ModulusContext::build(q).unwrap();
        let mut b1 = BTreeMap::new();
        b1.insert(2u64, c64(0.6, -0.1));
        let f1 = RealTwistFactor::new(b1, vec![0.0, 1.0], 1, (1.0, 3.0)).unwrap();
        let mut b2 = BTreeMap::new();
        b2.insert(5u64, c64(-0.4, 0.8));
        let f2 = RealTwistFactor::new(b2, vec![0.2, 0.7], 1, (3.0, 6.0)).unwrap();
        let f = LSufficient::new(vec![f1, f2]).unwrap();

        let even = enumerate_class(&ctx, CharClass::Even);
        let mut acc = KahanSum::new();
        for chi in &even {
            let v = f.eval(chi);
            acc.add(v * v);
        }
        let direct = 2.0 * acc.value() / ctx.phi() as f64;
        let split = f.second_moment_split().unwrap();
        assert!((direct - split).abs() < 1e-10, "{direct} vs {split}");
    }

    #[test]
    fn lsufficient_rejects_overlapping_intervals() {
        let mut b1 = BTreeMap::new();
        b1.insert(2u64, c64(1.0, 0.0));
        let f1 = RealTwistFactor::new(b1, vec![0.0, 1.0], 1, (1.0, 5.0)).unwrap();
        let mut b2 = BTreeMap::new();
        b2.insert(3u64, c64(1.0, 0.0));
        let f2 = RealTwistFactor::new(b2, vec![0.0, 1.0], 1, (2.0, 7.0)).unwrap();
        assert!(LSufficient::new(vec![f1, f2]).is_err());
    }

    // -------------------------------------------------------------------
    // Θ machinery
    // -------------------------------------------------------------------

    /// Direct double sum over squarefree f₁, f₂ supported on `primes`:
    /// the raw definition of Θ_β, used as the independent oracle.
    fn theta_brute(c1: u64, c2: u64, primes: &[u64], beta: f64) -> Complex64 {
        let subsets = |ps: &[u64]| -> Vec<u64> {
            let mut out = vec![1u64];
            for &p in ps {
                let len = out.len();
                for i in 0..len {
                    out.push(out[i] * p);
                }
            }
            out
        };
        let count_factors = |mut n: u64| -> u32 {
            let mut k = 0;
            let mut p = 2;
            while p * p <= n {
                while n % p == 0 {
                    n /= p;
                    k += 1;
                }
                p += 1;
            }
            if n > 1 {
                k += 1;
            }
            k
        };
        let gcd = |a: u64, b: u64| -> u64 {
            let (mut a, mut b) = (a, b);
            while b != 0 {
                (a, b) = (b, a % b);
            }
            a
        };
        let lcm = |a: u64, b: u64| a / gcd(a, b) * b;
        let mut acc = c64(0.0, 0.0);
        for &f1 in &subsets(primes) {
            for &f2 in &subsets(primes) {
                // subsets are squarefree by construction: μ = (-1)^ω
                let mu = if (count_factors(f1) + count_factors(f2)) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                let l = lcm(c1 * f1, c2 * f2) as f64;
                let g0 = gcd(c1, c2) as f64;
                let gf = gcd(c1 * f1, c2 * f2) as f64;
                let u = (f1 as f64) * (f2 as f64) * g0 * g0 / (gf * gf);
                let lu = u.ln();
                let diff = c64((beta * lu).cos(), (beta * lu).sin())
                    - c64((beta * lu).cos(), -(beta * lu).sin());
                acc += mu / l * diff / c64(0.0, 2.0 * beta);
            }
        }
        acc
    }

    #[test]
    fn theta_beta_matches_brute_double_sum() {
        let primes = [2u64, 3];
        for (a, b) in [(1u64, 1u64), (2, 1), (6, 1), (2, 3), (4, 2), (12, 1)] {
            let fa = factorize(a).unwrap();
            let fb = factorize(b).unwrap();
            for beta in [1e-2, 1e-3, 1e-4] {
                let fast = theta_beta(&fa, &fb, &primes, beta).unwrap();
                let brute = theta_brute(a, b, &primes, beta);
                assert!(
                    (fast - brute).norm() < 1e-9,
                    "c=({a},{b}) beta={beta}: {fast} vs {brute}"
                );
            }
        }
    }

    #[test]
    fn theta_diagonal_example() {
        // |Θ| at the {2,3} diagonal is (1/3)(2 ln 2 + ln 3); the limit
        // carries a minus sign, fixed by the direct double sum oracle.
        let one = factorize(1).unwrap();
        let primes = [2u64, 3];
        let expect = -(1.0 / 3.0) * (2.0 * 2.0f64.ln() + 3.0f64.ln());
        let limit = theta_limit(&one, &one, &primes).unwrap();
        assert!((limit - expect).abs() < 1e-14);
        let at_beta = theta_beta(&one, &one, &primes, 1e-4).unwrap();
        assert!((at_beta.re - expect).abs() < 1e-6, "{at_beta}");
        assert!(at_beta.im.abs() < 1e-12);
    }

    #[test]
    fn theta_single_differing_prime() {
        let primes = [2u64, 3];
        let c1 = factorize(2).unwrap();
        let one = factorize(1).unwrap();
        // (p*-1) ln p* / p*² · (3-1)/3 = (ln 2 / 4)(2/3)
        let expect = 2.0f64.ln() / 4.0 * (2.0 / 3.0);
        let limit = theta_limit(&c1, &one, &primes).unwrap();
        assert!((limit - expect).abs() < 1e-14);
        let extrap = theta_extrapolated(&c1, &one, &primes, (1e-3, 1e-4)).unwrap();
        assert!((extrap - limit).abs() < 1e-3);
    }

    #[test]
    fn theta_two_differing_primes_vanishes() {
        let primes = [2u64, 3];
        let c1 = factorize(6).unwrap();
        let one = factorize(1).unwrap();
        assert_eq!(theta_limit(&c1, &one, &primes).unwrap(), 0.0);
        let at = theta_beta(&c1, &one, &primes, 1e-3).unwrap();
        assert!(at.norm() <= 1e-2, "{at}");
    }

    #[test]
    fn theta_hermitian_symmetry() {
        let primes = [2u64, 3, 5];
        let a = factorize(12).unwrap();
        let b = factorize(10).unwrap();
        let ab = theta_beta(&a, &b, &primes, 1e-3).unwrap();
        let ba = theta_beta(&b, &a, &primes, 1e-3).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-12);
    }

    #[test]
    fn theta_rejects_bad_args() {
        let one = factorize(1).unwrap();
        let c7 = factorize(7).unwrap();
        assert!(theta_beta(&one, &one, &[2, 3], 0.0).is_err());
        assert!(theta_beta(&one, &one, &[2, 3], 0.2).is_err());
        assert!(theta_beta(&c7, &one, &[2, 3], 1e-3).is_err());
        assert!(theta_limit(&c7, &one, &[2, 3]).is_err());
    }
}
