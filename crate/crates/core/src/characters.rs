//! Dirichlet characters mod q: group construction with discrete-log tables,
//! enumeration by class, evaluation, conductors, Gauss sums, and the exact
//! character-sum identities used everywhere else in the crate.
//!
//! The unit group (ℤ/qℤ)* is decomposed into cyclic components via CRT, with
//! the 2-adic part split as ⟨-1⟩ × ⟨5⟩ when 8 | q. A character is an exponent
//! vector against the component generators; χ(n) is recovered from precomputed
//! per-component discrete logs as a root of unity indexed by an exact integer
//! phase, so parity, conductor and orthogonality checks never touch floats.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::arithmetic::{factorize, FactoredInteger};
use crate::error::{Error, Result};
use crate::kahan::KahanComplex;

/// One cyclic factor of (ℤ/qℤ)*.
#[derive(Debug, Clone)]
pub struct CyclicComponent {
    /// The prime power p^a of q this component belongs to.
    pub prime_power: u64,
    /// Generator lifted via CRT to a unit mod q (≡ 1 on the other factors).
    pub generator: u64,
    /// Order of the generator; the component is ⟨generator⟩ of this size.
    pub order: u64,
}

/// Shared arithmetic backdrop for all characters mod q.
///
/// Immutable after construction; wrap in [`Arc`] and share freely.
#[derive(Debug)]
pub struct ModulusContext {
    q: u64,
    factorization: FactoredInteger,
    components: Vec<CyclicComponent>,
    /// Per component, dlog of every residue mod q (u32::MAX marks non-units).
    dlogs: Vec<Vec<u32>>,
    phi: u64,
    /// L = lcm of component orders; all phases live in ℤ/L.
    order_lcm: u64,
    /// L / order_i, the per-component weight in the phase sum.
    phase_weights: Vec<u64>,
    /// e^{2πik/L} for k in 0..L.
    roots: Vec<Complex64>,
    /// Per-component dlog of -1 mod q.
    minus_one_dlogs: Vec<u64>,
    /// q ≡ 2 (mod 4): the primitive classes are empty.
    no_primitive_chars: bool,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc: u64 = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = (acc as u128 * base as u128 % m as u128) as u64;
        }
        base = (base as u128 * base as u128 % m as u128) as u64;
        exp >>= 1;
    }
    acc
}

/// Smallest primitive root mod an odd prime p.
fn primitive_root_mod_p(p: u64) -> u64 {
    let phi = p - 1;
    let phi_factors = factorize(phi).expect("p - 1 >= 1");
    'outer: for g in 2..p {
        for &(r, _) in phi_factors.factors() {
            if pow_mod(g, phi / r, p) == 1 {
                continue 'outer;
            }
        }
        return g;
    }
    unreachable!("every odd prime has a primitive root");
}

/// Generator of the cyclic group (ℤ/p^aℤ)* for odd p.
fn primitive_root_mod_pa(p: u64, a: u32) -> u64 {
    let g = primitive_root_mod_p(p);
    if a == 1 {
        return g;
    }
    // g generates mod p^a for all a >= 2 iff g^(p-1) != 1 mod p^2.
    let p2 = p * p;
    let g = if pow_mod(g, p - 1, p2) == 1 { g + p } else { g };
    g % p.pow(a)
}

/// CRT lift: value ≡ r (mod m), ≡ 1 (mod q/m).
fn crt_lift(r: u64, m: u64, q: u64) -> u64 {
    let rest = q / m;
    if rest == 1 {
        return r % q;
    }
    // x = r + m*t with x ≡ 1 mod rest  =>  t ≡ (1 - r) * m^{-1} (mod rest)
    let m_inv = inverse_mod(m % rest, rest);
    let r_mod = r % rest;
    let diff = (1 + rest - r_mod) % rest;
    let t = (diff as u128 * m_inv as u128 % rest as u128) as u64;
    (r as u128 + m as u128 * t as u128) as u64 % q
}

fn inverse_mod(a: u64, m: u64) -> u64 {
    // extended Euclid; gcd(a, m) = 1 assumed
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    old_s.rem_euclid(m as i128) as u64
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

impl ModulusContext {
    /// Build the context for modulus `q >= 3`.
    ///
    /// `q ≡ 2 (mod 4)` is accepted (flagged via
    /// [`ModulusContext::no_primitive_chars`]); there are no primitive
    /// characters for such moduli and the primitive classes enumerate empty.
    pub fn build(q: u64) -> Result<Arc<Self>> {
        if q < 3 {
            return Err(Error::domain(format!("modulus must be >= 3, got {q}")));
        }
        let factorization = factorize(q)?;
        let mut components = Vec::new();
        for &(p, a) in factorization.factors() {
            if p == 2 {
                match a {
                    1 => {}
                    2 => components.push(CyclicComponent {
                        prime_power: 4,
                        generator: crt_lift(3, 4, q),
                        order: 2,
                    }),
                    _ => {
                        let pa = 2u64.pow(a);
                        components.push(CyclicComponent {
                            prime_power: pa,
                            generator: crt_lift(pa - 1, pa, q),
                            order: 2,
                        });
                        components.push(CyclicComponent {
                            prime_power: pa,
                            generator: crt_lift(5, pa, q),
                            order: 2u64.pow(a - 2),
                        });
                    }
                }
            } else {
                let pa = p.pow(a);
                let g = primitive_root_mod_pa(p, a);
                components.push(CyclicComponent {
                    prime_power: pa,
                    generator: crt_lift(g, pa, q),
                    order: (p - 1) * p.pow(a - 1),
                });
            }
        }
        let phi: u64 = components.iter().map(|c| c.order).product();
        debug_assert!(phi >= 2);

        // Walk the whole unit group once per odometer increment; each
        // generator's order is exact mod q, so overflow wraps the running
        // value back automatically.
        let r = components.len();
        let mut dlogs = vec![vec![u32::MAX; q as usize]; r];
        let mut exps = vec![0u64; r];
        let mut val: u64 = 1;
        'walk: loop {
            for i in 0..r {
                dlogs[i][val as usize] = exps[i] as u32;
            }
            let mut i = r;
            loop {
                if i == 0 {
                    break 'walk;
                }
                i -= 1;
                val = (val as u128 * components[i].generator as u128 % q as u128) as u64;
                exps[i] += 1;
                if exps[i] < components[i].order {
                    continue 'walk;
                }
                exps[i] = 0;
            }
        }

        let order_lcm = components.iter().fold(1u64, |l, c| lcm(l, c.order));
        let phase_weights: Vec<u64> = components.iter().map(|c| order_lcm / c.order).collect();
        let roots: Vec<Complex64> = (0..order_lcm)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / order_lcm as f64;
                let (s, c) = t.sin_cos();
                Complex64::new(c, s)
            })
            .collect();
        let minus_one = (q - 1) as usize;
        let minus_one_dlogs: Vec<u64> = (0..r).map(|i| dlogs[i][minus_one] as u64).collect();

        Ok(Arc::new(Self {
            q,
            factorization,
            components,
            dlogs,
            phi,
            order_lcm,
            phase_weights,
            roots,
            minus_one_dlogs,
            no_primitive_chars: q % 4 == 2,
        }))
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn phi(&self) -> u64 {
        self.phi
    }

    pub fn factorization(&self) -> &FactoredInteger {
        &self.factorization
    }

    pub fn components(&self) -> &[CyclicComponent] {
        &self.components
    }

    /// True when q ≡ 2 (mod 4), where no primitive characters exist.
    pub fn no_primitive_chars(&self) -> bool {
        self.no_primitive_chars
    }

    pub fn is_unit(&self, n: u64) -> bool {
        self.dlogs
            .first()
            .map(|t| t[(n % self.q) as usize] != u32::MAX)
            .unwrap_or(false)
    }

    fn reduce(&self, n: i64) -> u64 {
        n.rem_euclid(self.q as i64) as u64
    }

    /// Exact integer phase of χ(n) in ℤ/L, or None when gcd(n, q) > 1.
    ///
    /// χ(n) = e^{2πi · phase / L}.
    pub fn phase(&self, exponents: &[u64], n: u64) -> Option<u64> {
        let idx = (n % self.q) as usize;
        if self.dlogs[0][idx] == u32::MAX {
            return None;
        }
        let mut acc: u64 = 0;
        for i in 0..self.components.len() {
            let d = self.dlogs[i][idx] as u64;
            acc = (acc + exponents[i] * d % self.order_lcm * self.phase_weights[i])
                % self.order_lcm;
        }
        Some(acc)
    }

    pub fn root(&self, phase: u64) -> Complex64 {
        self.roots[phase as usize]
    }

    fn exponents_from_index(&self, mut index: u64) -> Vec<u64> {
        let mut exps = vec![0u64; self.components.len()];
        for i in (0..self.components.len()).rev() {
            exps[i] = index % self.components[i].order;
            index /= self.components[i].order;
        }
        exps
    }

    fn index_from_exponents(&self, exps: &[u64]) -> u64 {
        let mut idx = 0u64;
        for (i, c) in self.components.iter().enumerate() {
            idx = idx * c.order + exps[i];
        }
        idx
    }

    /// Construct the character with the given exponent vector.
    pub fn character(self: &Arc<Self>, exponents: Vec<u64>) -> DirichletCharacter {
        assert_eq!(exponents.len(), self.components.len());
        for (e, c) in exponents.iter().zip(&self.components) {
            assert!(*e < c.order, "exponent out of range");
        }
        let index = self.index_from_exponents(&exponents);
        self.character_by_index(index)
    }

    /// Construct the character at lexicographic index `index` in 0..φ(q).
    pub fn character_by_index(self: &Arc<Self>, index: u64) -> DirichletCharacter {
        assert!(index < self.phi);
        let exponents = self.exponents_from_index(index);
        // parity: phase of -1 is 0 (even) or L/2 (odd)
        let mut acc = 0u64;
        for i in 0..self.components.len() {
            acc = (acc + exponents[i] * self.minus_one_dlogs[i] % self.order_lcm
                * self.phase_weights[i])
                % self.order_lcm;
        }
        let parity: i8 = if acc == 0 { 1 } else { -1 };
        let conductor = self.conductor_of(&exponents);
        DirichletCharacter {
            ctx: Arc::clone(self),
            exponents,
            index,
            parity,
            conductor,
            primitive: conductor == self.q,
        }
    }

    /// Least f | q such that χ is induced by a character mod f: χ(n) = 1 for
    /// every n ≡ 1 (mod f) coprime to q. Brute force over divisors,
    /// ascending, with early exit on the first witness.
    fn conductor_of(&self, exponents: &[u64]) -> u64 {
        let q = self.q;
        let mut divisors: Vec<u64> = (1..=q).filter(|d| q % d == 0).collect();
        divisors.sort_unstable();
        for f in divisors {
            let mut induced = true;
            let mut n = 1 + f;
            while n <= q {
                if gcd(n, q) == 1 && self.phase(exponents, n) != Some(0) {
                    induced = false;
                    break;
                }
                n += f;
            }
            if induced {
                return f;
            }
        }
        q
    }
}

/// Character classes used for enumeration and averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharClass {
    All,
    Even,
    Primitive,
    EvenPrimitive,
}

impl CharClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            CharClass::All => "all",
            CharClass::Even => "even",
            CharClass::Primitive => "primitive",
            CharClass::EvenPrimitive => "even_primitive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "all" => Some(CharClass::All),
            "even" => Some(CharClass::Even),
            "primitive" => Some(CharClass::Primitive),
            "even_primitive" => Some(CharClass::EvenPrimitive),
            _ => None,
        }
    }
}

/// A Dirichlet character mod q as an exponent vector on the unit-group
/// generators, with parity / conductor / primitivity cached.
#[derive(Debug, Clone)]
pub struct DirichletCharacter {
    ctx: Arc<ModulusContext>,
    exponents: Vec<u64>,
    index: u64,
    parity: i8,
    conductor: u64,
    primitive: bool,
}

impl DirichletCharacter {
    pub fn context(&self) -> &Arc<ModulusContext> {
        &self.ctx
    }

    pub fn modulus(&self) -> u64 {
        self.ctx.q
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }

    /// Lexicographic index of the exponent vector; the enumeration order.
    pub fn index(&self) -> u64 {
        self.index
    }

    /// χ(-1): +1 for even characters, -1 for odd.
    pub fn parity(&self) -> i8 {
        self.parity
    }

    pub fn is_even(&self) -> bool {
        self.parity == 1
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn is_primitive(&self) -> bool {
        self.primitive
    }

    pub fn is_principal(&self) -> bool {
        self.index == 0
    }

    /// χ(n); zero when gcd(n, q) > 1, n may be negative.
    pub fn eval(&self, n: i64) -> Complex64 {
        self.eval_u64(self.ctx.reduce(n))
    }

    /// χ(n) for nonnegative n.
    pub fn eval_u64(&self, n: u64) -> Complex64 {
        match self.ctx.phase(&self.exponents, n) {
            Some(p) => self.ctx.root(p),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Exact phase of χ(n) in ℤ/L, None off the units.
    pub fn phase(&self, n: u64) -> Option<u64> {
        self.ctx.phase(&self.exponents, n)
    }

    /// χ(m)χ̄(r) as a single root of unity: the integer phases subtract
    /// exactly, so common unit factors of m and r cancel bit-for-bit.
    pub fn pair_value(&self, m: u64, r: u64) -> Complex64 {
        match (self.phase(m), self.phase(r)) {
            (Some(a), Some(b)) => {
                let l = self.ctx.order_lcm;
                self.ctx.root((a + l - b) % l)
            }
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// The conjugate character χ̄.
    pub fn conjugate(&self) -> DirichletCharacter {
        let exps: Vec<u64> = self
            .exponents
            .iter()
            .zip(self.ctx.components.iter())
            .map(|(&e, c)| if e == 0 { 0 } else { c.order - e })
            .collect();
        self.ctx.character(exps)
    }

    /// Gauss sum τ(χ) = Σ_{a=1}^{q} χ(a) e^{2πia/q} by direct summation.
    pub fn gauss_sum(&self) -> Complex64 {
        let q = self.ctx.q;
        let mut acc = KahanComplex::new();
        for a in 1..q {
            if !self.ctx.is_unit(a) {
                continue;
            }
            let t = 2.0 * std::f64::consts::PI * a as f64 / q as f64;
            let (s, c) = t.sin_cos();
            acc.add(self.eval_u64(a) * Complex64::new(c, s));
        }
        acc.value()
    }
}

/// Enumerate exactly the characters in `class`, in lexicographic exponent
/// order (deterministic; stable across runs and thread counts).
pub fn enumerate_class(ctx: &Arc<ModulusContext>, class: CharClass) -> Vec<DirichletCharacter> {
    (0..ctx.phi)
        .map(|i| ctx.character_by_index(i))
        .filter(|chi| match class {
            CharClass::All => true,
            CharClass::Even => chi.is_even(),
            CharClass::Primitive => chi.is_primitive(),
            CharClass::EvenPrimitive => chi.is_even() && chi.is_primitive(),
        })
        .collect()
}

/// Gauss sums for a batch of characters sharing one context.
///
/// When the unit group is a single cycle (prime q, odd prime powers, 4), all
/// τ(χ) come out of one inverse FFT of length φ(q); otherwise each sum is
/// evaluated directly against a shared root table.
pub fn gauss_sums_for(ctx: &Arc<ModulusContext>, chars: &[DirichletCharacter]) -> Vec<Complex64> {
    let q = ctx.q;
    if ctx.components.len() == 1 {
        let n = ctx.phi as usize;
        let g = ctx.components[0].generator;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut a: u64 = 1;
        for slot in buf.iter_mut() {
            let t = 2.0 * std::f64::consts::PI * a as f64 / q as f64;
            let (s, c) = t.sin_cos();
            *slot = Complex64::new(c, s);
            a = (a as u128 * g as u128 % q as u128) as u64;
        }
        // τ(χ_e) = Σ_k e(g^k/q) ω^{+ek}: an unnormalized inverse DFT
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        chars
            .iter()
            .map(|chi| buf[chi.exponents[0] as usize])
            .collect()
    } else {
        let table: Vec<Complex64> = (0..q)
            .map(|a| {
                let t = 2.0 * std::f64::consts::PI * a as f64 / q as f64;
                let (s, c) = t.sin_cos();
                Complex64::new(c, s)
            })
            .collect();
        chars
            .iter()
            .map(|chi| {
                let mut acc = KahanComplex::new();
                for a in 1..q {
                    if ctx.is_unit(a) {
                        acc.add(chi.eval_u64(a) * table[a as usize]);
                    }
                }
                acc.value()
            })
            .collect()
    }
}

/// Which primitive-character sum to take in [`char_class_sum`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumClass {
    /// Σ over all primitive characters mod q.
    Primitive,
    /// Σ over even primitive characters mod q.
    EvenPrimitive,
}

/// Both sides of the primitive character-sum identity.
#[derive(Debug, Clone, Copy)]
pub struct ClassSum {
    /// Möbius-formula side: Σ_{vw=q, m≡1 mod w} μ(v)φ(w) (halved and
    /// reflected for the even-primitive class).
    pub formula: f64,
    /// Direct side: Σ χ(m) over the enumerated class.
    pub direct: Complex64,
}

fn moebius_formula_side(q: u64, m: u64) -> i64 {
    // Σ over factorizations q = v·w with m ≡ 1 (mod w) of μ(v)·φ(w)
    let mut total: i64 = 0;
    for w in (1..=q).filter(|w| q % w == 0) {
        if m % w == 1 % w {
            let v = q / w;
            let fv = crate::arithmetic::mult_functions(&factorize(v).expect("v >= 1"));
            if fv.mobius != 0 {
                let fw = crate::arithmetic::mult_functions(&factorize(w).expect("w >= 1"));
                total += fv.mobius as i64 * fw.phi as i64;
            }
        }
    }
    total
}

/// Σ χ(m) over primitive (or even primitive) characters, computed both from
/// the Möbius/φ divisor formula and by direct enumeration. The two routes are
/// asserted to agree to 1e-6 before returning.
pub fn char_class_sum(ctx: &Arc<ModulusContext>, m: i64, class: SumClass) -> Result<ClassSum> {
    let primitive = enumerate_class(ctx, CharClass::Primitive);
    char_class_sum_with(ctx, &primitive, m, class)
}

/// [`char_class_sum`] against a pre-enumerated primitive class, for sweeps
/// over many m.
pub fn char_class_sum_with(
    ctx: &Arc<ModulusContext>,
    primitive: &[DirichletCharacter],
    m: i64,
    class: SumClass,
) -> Result<ClassSum> {
    let q = ctx.q;
    let m_red = m.rem_euclid(q as i64) as u64;
    if gcd(m_red, q) != 1 {
        return Err(Error::domain(format!("m = {m} not coprime to q = {q}")));
    }
    let (formula, direct) = match class {
        SumClass::Primitive => {
            let f = moebius_formula_side(q, m_red) as f64;
            let mut acc = KahanComplex::new();
            for chi in primitive {
                acc.add(chi.eval_u64(m_red));
            }
            (f, acc.value())
        }
        SumClass::EvenPrimitive => {
            let neg = (q - m_red % q) % q;
            let f = 0.5 * (moebius_formula_side(q, m_red) + moebius_formula_side(q, neg)) as f64;
            let mut acc = KahanComplex::new();
            for chi in primitive {
                if chi.is_even() {
                    acc.add(chi.eval_u64(m_red));
                }
            }
            (f, acc.value())
        }
    };
    assert!(
        (direct.re - formula).abs() <= 1e-6 && direct.im.abs() <= 1e-6,
        "character-sum identity violated at q={q}, m={m}: formula={formula}, direct={direct}"
    );
    Ok(ClassSum { formula, direct })
}

/// (2/φ(q)) Σ_{even χ} |Σ_n a_n χ(n)|² by direct enumeration over the even
/// characters. Exactly Σ_{(n,q)=1} |a_n|² when max n < q/2 (the coefficients
/// at n with gcd(n, q) > 1 are invisible to every character).
pub fn even_second_moment(ctx: &Arc<ModulusContext>, coeffs: &[(u64, Complex64)]) -> f64 {
    let even = enumerate_class(ctx, CharClass::Even);
    let mut acc = crate::kahan::KahanSum::new();
    for chi in &even {
        let mut s = KahanComplex::new();
        for &(n, a) in coeffs {
            s.add(a * chi.eval_u64(n));
        }
        acc.add(s.value().norm_sqr());
    }
    2.0 * acc.value() / ctx.phi as f64
}

/// Σ |a_n|² over coefficients with gcd(n, q) = 1; the diagonal side of the
/// exact orthogonality identity.
pub fn diagonal_second_moment(ctx: &Arc<ModulusContext>, coeffs: &[(u64, Complex64)]) -> f64 {
    let mut acc = crate::kahan::KahanSum::new();
    for &(n, a) in coeffs {
        if gcd(n % ctx.q, ctx.q) == 1 {
            acc.add(a.norm_sqr());
        }
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn context_q5() {
        let ctx = ModulusContext::build(5).unwrap();
        assert_eq!(ctx.components().len(), 1);
        assert_eq!(ctx.components()[0].generator, 2);
        assert_eq!(ctx.components()[0].order, 4);
        assert_eq!(ctx.phi(), 4);
    }

    #[test]
    fn context_q8() {
        let ctx = ModulusContext::build(8).unwrap();
        let comps = ctx.components();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].generator, 7); // -1 mod 8
        assert_eq!(comps[0].order, 2);
        assert_eq!(comps[1].generator, 5);
        assert_eq!(comps[1].order, 2);
    }

    #[test]
    fn context_q15_orders_multiply_to_phi() {
        let ctx = ModulusContext::build(15).unwrap();
        let prod: u64 = ctx.components().iter().map(|c| c.order).product();
        assert_eq!(prod, 8);
        assert_eq!(ctx.phi(), 8);
    }

    #[test]
    fn rejects_tiny_modulus() {
        assert!(ModulusContext::build(2).is_err());
    }

    #[test]
    fn dlog_of_one_is_zero_vector() {
        for q in [5u64, 8, 9, 12, 15, 16, 24, 36, 100] {
            let ctx = ModulusContext::build(q).unwrap();
            let zero = vec![0u64; ctx.components().len()];
            assert_eq!(ctx.phase(&zero, 1), Some(0), "q = {q}");
        }
    }

    #[test]
    fn enumerate_classes_q5() {
        let ctx = ModulusContext::build(5).unwrap();
        assert_eq!(enumerate_class(&ctx, CharClass::All).len(), 4);
        let ep = enumerate_class(&ctx, CharClass::EvenPrimitive);
        assert_eq!(ep.len(), 1);
        // the survivor is the quadratic character
        let chi = &ep[0];
        assert!((chi.eval(2) - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((chi.eval(3) - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((chi.eval(4) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn enumerate_even_q9() {
        let ctx = ModulusContext::build(9).unwrap();
        assert_eq!(enumerate_class(&ctx, CharClass::Even).len(), 3);
    }

    #[test]
    fn evaluate_examples_mod5() {
        let ctx = ModulusContext::build(5).unwrap();
        let principal = ctx.character_by_index(0);
        assert!((principal.eval(3) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // quadratic character at a non-residue
        let quad = ctx.character(vec![2]);
        assert!((quad.eval(2) - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        // off the units
        for chi in enumerate_class(&ctx, CharClass::All) {
            assert_eq!(chi.eval(10), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn conductor_examples() {
        let ctx12 = ModulusContext::build(12).unwrap();
        let principal = ctx12.character_by_index(0);
        assert_eq!(principal.conductor(), 1);
        assert!(!principal.is_primitive());

        let ctx5 = ModulusContext::build(5).unwrap();
        let quad = ctx5.character(vec![2]);
        assert_eq!(quad.conductor(), 5);
        assert!(quad.is_primitive());

        // mod 9 character induced from the quadratic mod 3: chi(2) = -1
        let ctx9 = ModulusContext::build(9).unwrap();
        let induced = ctx9.character(vec![3]);
        assert!((induced.eval(2) - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert_eq!(induced.conductor(), 3);
        assert!(!induced.is_primitive());
    }

    #[test]
    fn conductor_matches_definition_brute_force_q36() {
        // independent check of the conductor against the raw definition
        let q = 36u64;
        let ctx = ModulusContext::build(q).unwrap();
        for chi in enumerate_class(&ctx, CharClass::All) {
            let mut expect = q;
            for f in (1..=q).filter(|d| q % d == 0) {
                let ok = (1..=q)
                    .filter(|n| n % f == 1 % f && gcd(*n, q) == 1)
                    .all(|n| (chi.eval_u64(n) - Complex64::new(1.0, 0.0)).norm() < 1e-9);
                if ok {
                    expect = f;
                    break;
                }
            }
            assert_eq!(chi.conductor(), expect, "index {}", chi.index());
        }
    }

    #[test]
    fn gauss_sum_quadratic_mod5() {
        let ctx = ModulusContext::build(5).unwrap();
        let quad = ctx.character(vec![2]);
        let tau = quad.gauss_sum();
        assert!((tau - Complex64::new(5.0f64.sqrt(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gauss_sum_principal_mod4_vanishes() {
        // direct summation: e(1/4) + e(3/4) = i - i = 0
        let ctx = ModulusContext::build(4).unwrap();
        let principal = ctx.character_by_index(0);
        assert!(principal.gauss_sum().norm() < 1e-14);
    }

    #[test]
    fn gauss_sum_modulus_primitive_mod7() {
        let ctx = ModulusContext::build(7).unwrap();
        for chi in enumerate_class(&ctx, CharClass::Primitive) {
            assert!((chi.gauss_sum().norm() - 7.0f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_sum_fft_agrees_with_direct() {
        for q in [7u64, 13, 25, 27] {
            let ctx = ModulusContext::build(q).unwrap();
            let chars = enumerate_class(&ctx, CharClass::All);
            let bulk = gauss_sums_for(&ctx, &chars);
            for (chi, tau) in chars.iter().zip(&bulk) {
                assert!(
                    (chi.gauss_sum() - tau).norm() < 1e-9,
                    "q={q} index={}",
                    chi.index()
                );
            }
        }
        // multi-component path
        let ctx = ModulusContext::build(24).unwrap();
        let chars = enumerate_class(&ctx, CharClass::All);
        let bulk = gauss_sums_for(&ctx, &chars);
        for (chi, tau) in chars.iter().zip(&bulk) {
            assert!((chi.gauss_sum() - tau).norm() < 1e-9);
        }
    }

    #[test]
    fn class_sum_q5() {
        let ctx = ModulusContext::build(5).unwrap();
        let s = char_class_sum(&ctx, 1, SumClass::Primitive).unwrap();
        assert_eq!(s.formula, 3.0); // φ(5) - φ(1)
        let s2 = char_class_sum(&ctx, 2, SumClass::Primitive).unwrap();
        assert!((s2.direct.re - s2.formula).abs() < 1e-9);
        let se = char_class_sum(&ctx, 1, SumClass::EvenPrimitive).unwrap();
        assert_eq!(se.formula, 1.0);
        assert_eq!(
            enumerate_class(&ctx, CharClass::EvenPrimitive).len() as f64,
            se.formula
        );
    }

    #[test]
    fn class_sum_rejects_noncoprime() {
        let ctx = ModulusContext::build(15).unwrap();
        assert!(char_class_sum(&ctx, 5, SumClass::Primitive).is_err());
    }

    #[test]
    fn full_orthogonality_is_exact() {
        // Σ over ALL χ of χ(n)χ̄(m) = φ(q)·[n≡m], for gcd(nm, q) = 1
        for q in [5u64, 9, 12, 21] {
            let ctx = ModulusContext::build(q).unwrap();
            let chars = enumerate_class(&ctx, CharClass::All);
            for n in 1..q {
                for m in 1..q {
                    if gcd(n, q) != 1 || gcd(m, q) != 1 {
                        continue;
                    }
                    let mut acc = KahanComplex::new();
                    for chi in &chars {
                        acc.add(chi.eval_u64(n) * chi.eval_u64(m).conj());
                    }
                    let expect = if n == m { ctx.phi() as f64 } else { 0.0 };
                    assert!(
                        (acc.value() - Complex64::new(expect, 0.0)).norm() < 1e-9,
                        "q={q} n={n} m={m}"
                    );
                }
            }
        }
    }

    #[test]
    fn even_orthogonality_identity_small_q() {
        // beyond the acceptance sweep: a handful of spot checks with a
        // deterministic coefficient pattern
        for q in [11u64, 20, 33] {
            let ctx = ModulusContext::build(q).unwrap();
            let n_max = (q / 2).saturating_sub(1).max(1);
            let coeffs: Vec<(u64, Complex64)> = (1..=n_max)
                .map(|n| {
                    (
                        n,
                        Complex64::new((n as f64).sin(), (n as f64 * 0.7).cos()),
                    )
                })
                .collect();
            let lhs = even_second_moment(&ctx, &coeffs);
            let rhs = diagonal_second_moment(&ctx, &coeffs);
            assert!((lhs - rhs).abs() < 1e-10, "q={q}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn q_2_mod_4_has_no_primitive_characters() {
        let ctx = ModulusContext::build(6).unwrap();
        assert!(ctx.no_primitive_chars());
        assert!(enumerate_class(&ctx, CharClass::Primitive).is_empty());
        // ...but the library still works on the other classes
        assert_eq!(enumerate_class(&ctx, CharClass::All).len(), 2);
    }

    #[test]
    fn conjugate_inverts_phases() {
        let ctx = ModulusContext::build(13).unwrap();
        for chi in enumerate_class(&ctx, CharClass::All) {
            let conj = chi.conjugate();
            for n in 1..13 {
                assert!((chi.eval_u64(n).conj() - conj.eval_u64(n)).norm() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn evaluation_is_completely_multiplicative(
            q in 3u64..60, m in 0i64..1000, n in -1000i64..1000
        ) {
            let ctx = ModulusContext::build(q).unwrap();
            for chi in enumerate_class(&ctx, CharClass::All) {
                let lhs = chi.eval(m.wrapping_mul(n));
                let rhs = chi.eval(m) * chi.eval(n);
                prop_assert!((lhs - rhs).norm() < 1e-12);
            }
        }

        #[test]
        fn even_class_has_half_the_characters(q in 3u64..120) {
            let ctx = ModulusContext::build(q).unwrap();
            let even = enumerate_class(&ctx, CharClass::Even).len() as u64;
            prop_assert_eq!(even, ctx.phi() / 2);
        }
    }
}
