//! The recursive large-deviation scheme: scale ladder, slope and barriers,
//! good events A/B/C/D/G, the partition of the tail event H, parameter
//! validation, and the pointwise mollifier inequality.
//!
//! With the reference constants the ladder is degenerate at any feasible
//! modulus (the first scale collapses to 1), so schedules carry a toy mode
//! with overridable exponents; the event logic is what the experiments
//! exercise, not the asymptotic bookkeeping constants.

use num_complex::Complex64;

use crate::arithmetic::PrimeTable;
use crate::characters::DirichletCharacter;
use crate::dpoly::{mollifier_value, s_real_cutoff, s_tilde_cutoff};
use crate::error::{Error, Result};
use crate::lcentral::CentralValue;

/// Overridable schedule constants. Defaults are the reference values from
/// the large-deviation analysis; `toy()`
/// lowers the exponents so the ladder is non-degenerate at desk-scale q.
#[derive(Debug, Clone)]
pub struct ScheduleConfig {
    /// 𝐬; None means 10⁵/(1-κ).
    pub s_param: Option<f64>,
    /// 𝒜, the increment bound in A_l.
    pub a_const: f64,
    /// 𝒟, the decay rate in D_l.
    pub d_const: f64,
    /// Exponent E in the mollifier Ω cap 10(n_l - n_{l-1})^E.
    pub omega_exp: f64,
    /// Exponent in the twist-side Ω cap 10(n_l - n_{l-1})^E (well-factorable
    /// polynomials and l-sufficient factors carry a lower exponent than the
    /// mollifiers).
    pub twist_omega_exp: f64,
    /// Coefficient and exponent of the halting rule
    /// exp(coeff · (loglog q - n_l)^exp · e^{n_{l+1}}) ≤ q^{frac}.
    pub halt_coeff: f64,
    pub halt_exp: f64,
    /// None disables the halting inequality (toy mode), leaving the
    /// strictly-increasing ladder and `max_levels` as the caps.
    pub halt_frac: Option<f64>,
    pub max_levels: usize,
    pub toy_mode: bool,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            s_param: None,
            a_const: 1e3,
            d_const: 1e4,
            omega_exp: 1e5,
            twist_omega_exp: 1e4,
            halt_coeff: 1e6,
            halt_exp: 1e5,
            halt_frac: Some(0.01),
            max_levels: 32,
            toy_mode: false,
        }
    }
}

impl ScheduleConfig {
    /// Desk-scale overrides: s = 1, unit exponents, halting rule off.
    pub fn toy() -> Self {
        Self {
            s_param: Some(1.0),
            a_const: 1e3,
            d_const: 1e4,
            omega_exp: 1.0,
            twist_omega_exp: 1.0,
            halt_coeff: 1.0,
            halt_exp: 1.0,
            halt_frac: None,
            max_levels: 32,
            toy_mode: true,
        }
    }
}

/// Iterated logarithm log_j(q) with an output floor at 1.5 so deeper levels
/// stay defined on toy ladders. Returns the value and whether the floor
/// bound.
pub fn iterated_log_floored(q: f64, j: u32) -> (f64, bool) {
    let mut v = q;
    let mut floored = false;
    for _ in 0..j {
        v = v.ln();
        if v < 1.5 {
            v = 1.5;
            floored = true;
        }
    }
    (v, floored)
}

/// The scale ladder (q_l, n_l), barriers, and constants for one modulus and
/// slope.
#[derive(Debug, Clone)]
pub struct ScaleSchedule {
    q: u64,
    kappa: f64,
    s_param: f64,
    a_const: f64,
    d_const: f64,
    omega_exp: f64,
    twist_omega_exp: f64,
    /// (q_l, n_l) for l = 0..=𝓛; q_0 = 1.5.
    ladder: Vec<(f64, f64)>,
    /// L_l, U_l, c_l for l = 1..=𝓛 (index l-1).
    l_bounds: Vec<f64>,
    u_bounds: Vec<f64>,
    c_consts: Vec<f64>,
    /// The iterated-log floor bound somewhere in the construction.
    log_floor_applied: bool,
    toy_mode: bool,
}

/// Build the ladder for modulus q and slope κ ∈ (0, 1).
pub fn build_schedule(q: u64, kappa: f64, config: &ScheduleConfig) -> Result<ScaleSchedule> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::domain(format!("kappa must lie in (0,1), got {kappa}")));
    }
    if q < 3 {
        return Err(Error::domain(format!("modulus too small: {q}")));
    }
    let qf = q as f64;
    let loglog_q = qf.ln().ln();
    if !(loglog_q > 0.0) {
        return Err(Error::domain(format!("loglog q must be positive, q = {q}")));
    }
    let s = config.s_param.unwrap_or(1e5 / (1.0 - kappa));

    let q0 = 1.5f64;
    let mut ladder = vec![(q0, q0.ln().ln())];
    let mut floored = false;
    let scale_at = |l: u32, floored: &mut bool| -> f64 {
        let (d, f) = iterated_log_floored(qf, l + 1);
        *floored |= f;
        (qf.ln() / d.powf(s)).exp()
    };
    for l in 1..=config.max_levels as u32 {
        let ql = scale_at(l, &mut floored);
        let prev = ladder.last().expect("q0 present").0;
        if !(ql > prev * (1.0 + 1e-12)) || ql > qf {
            break;
        }
        if let Some(frac) = config.halt_frac {
            // halting rule needs the next scale
            let q_next = scale_at(l + 1, &mut floored);
            let halt_lhs = config.halt_coeff
                * (loglog_q - ql.ln().ln()).max(0.0).powf(config.halt_exp)
                * q_next.ln();
            if halt_lhs > frac * qf.ln() {
                break;
            }
        }
        ladder.push((ql, ql.ln().ln()));
    }

    let levels = ladder.len() - 1;
    let mut l_bounds = Vec::with_capacity(levels);
    let mut u_bounds = Vec::with_capacity(levels);
    let mut c_consts = Vec::with_capacity(levels);
    let mut c_run = 1.0f64;
    for l in 1..=levels {
        let n_l = ladder[l].1;
        let (gap_log, f) = iterated_log_floored(qf, l as u32 + 2);
        floored |= f;
        l_bounds.push(kappa * n_l - s * gap_log);
        u_bounds.push(kappa * n_l + s * gap_log);
        c_run *= 1.0 + (-ladder[l - 1].1).exp();
        c_consts.push(c_run);
    }

    Ok(ScaleSchedule {
        q,
        kappa,
        s_param: s,
        a_const: config.a_const,
        d_const: config.d_const,
        omega_exp: config.omega_exp,
        twist_omega_exp: config.twist_omega_exp,
        ladder,
        l_bounds,
        u_bounds,
        c_consts,
        log_floor_applied: floored,
        toy_mode: config.toy_mode,
    })
}

impl ScaleSchedule {
    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn s_param(&self) -> f64 {
        self.s_param
    }

    pub fn a_const(&self) -> f64 {
        self.a_const
    }

    pub fn d_const(&self) -> f64 {
        self.d_const
    }

    /// 𝓛, the number of usable levels.
    pub fn levels(&self) -> usize {
        self.ladder.len() - 1
    }

    /// The ladder is degenerate (no usable levels).
    pub fn is_degenerate(&self) -> bool {
        self.levels() == 0
    }

    pub fn log_floor_applied(&self) -> bool {
        self.log_floor_applied
    }

    pub fn toy_mode(&self) -> bool {
        self.toy_mode
    }

    /// q_l for l = 0..=𝓛.
    pub fn scale(&self, l: usize) -> f64 {
        self.ladder[l].0
    }

    /// n_l = loglog q_l.
    pub fn n(&self, l: usize) -> f64 {
        self.ladder[l].1
    }

    /// Lower barrier L_l, l ≥ 1.
    pub fn lower_barrier(&self, l: usize) -> f64 {
        self.l_bounds[l - 1]
    }

    /// Upper barrier U_l, l ≥ 1.
    pub fn upper_barrier(&self, l: usize) -> f64 {
        self.u_bounds[l - 1]
    }

    /// c_l = Π_{j≤l} (1 + e^{-n_{j-1}}), l ≥ 1.
    pub fn c_const(&self, l: usize) -> f64 {
        self.c_consts[l - 1]
    }

    /// Ω cap for the level-l mollifier: ⌊10 (n_l - n_{l-1})^E⌋.
    pub fn omega_cap(&self, l: usize) -> u32 {
        let d = self.ladder[l].1 - self.ladder[l - 1].1;
        let cap = 10.0 * d.max(0.0).powf(self.omega_exp);
        if cap >= u32::MAX as f64 {
            u32::MAX
        } else {
            cap as u32
        }
    }

    /// Ω cap for level-l twist factors: 10 (n_l - n_{l-1})^E with the
    /// twist exponent.
    pub fn twist_cap(&self, l: usize) -> f64 {
        let d = self.ladder[l].1 - self.ladder[l - 1].1;
        10.0 * d.max(0.0).powf(self.twist_omega_exp)
    }

    /// The prime interval (q_{l-1}, q_l] of level l.
    pub fn interval(&self, l: usize) -> (f64, f64) {
        (self.ladder[l - 1].0, self.ladder[l].0)
    }
}

/// Π_{j≤l} M_j(χ, 1/2) with the splitting-lemma length guardrail: the
/// combined nominal support length must stay below q^{1/2}.
///
/// Event logic evaluates the same products pointwise without this guardrail
/// (see [`compute_record`]); this entry point is for moment-style uses where
/// the orthogonality hypotheses matter.
pub fn mollifier_product_eval(
    chi: &DirichletCharacter,
    schedule: &ScaleSchedule,
    l: usize,
    primes: &PrimeTable,
) -> Result<Complex64> {
    let mut log_len = 0.0;
    for j in 1..=l {
        log_len += crate::dpoly::mollifier_log_length(
            schedule.interval(j),
            schedule.omega_cap(j),
            primes,
        );
    }
    let bound = 0.5 * (schedule.q() as f64).ln();
    if log_len > bound {
        return Err(Error::precondition(format!(
            "mollifier product log-length {log_len:.2} exceeds (1/2) log q = {bound:.2}"
        )));
    }
    let mut prod = Complex64::new(1.0, 0.0);
    for j in 1..=l {
        prod *= mollifier_value(chi, schedule.interval(j), schedule.omega_cap(j), primes)?;
    }
    Ok(prod)
}

/// Margins of the two parameter inequalities; both must be strictly
/// negative.
#[derive(Debug, Clone, Copy)]
pub struct ParameterReport {
    /// 1 + s(κ² - 𝒜² + 2κ)
    pub margin_a: f64,
    /// 1/2 + κ² + 2(κ-1)s
    pub margin_s: f64,
}

impl ParameterReport {
    pub fn ok(&self) -> bool {
        self.margin_a < 0.0 && self.margin_s < 0.0
    }
}

pub fn validate_parameters(kappa: f64, a_const: f64, s_param: f64) -> ParameterReport {
    ParameterReport {
        margin_a: 1.0 + s_param * (kappa * kappa - a_const * a_const + 2.0 * kappa),
        margin_s: 0.5 + kappa * kappa + 2.0 * (kappa - 1.0) * s_param,
    }
}

/// Per-level good-event flags; each family is a nested intersection, so the
/// vectors are monotone decreasing in l.
#[derive(Debug, Clone, Default)]
pub struct EventFlags {
    pub a: Vec<bool>,
    pub b: Vec<bool>,
    pub c: Vec<bool>,
    pub d: Vec<bool>,
    pub g: Vec<bool>,
    /// log |L| > V.
    pub h: bool,
    /// Zero-value sentinel: excluded from tail statistics.
    pub excluded: bool,
}

/// Everything the scheme computed for one character.
#[derive(Debug, Clone)]
pub struct CharacterRecord {
    pub index: u64,
    pub central: CentralValue,
    pub log_abs: f64,
    /// S̃ at n_l for l = 0..=𝓛.
    pub s_tilde: Vec<Complex64>,
    /// S at n_l for l = 0..=𝓛.
    pub s_real: Vec<f64>,
    /// Per-interval mollifier values M_l, l = 1..=𝓛 (index l-1).
    pub mollifier_factors: Vec<Complex64>,
    /// Cumulative products M_1…M_l, l = 1..=𝓛 (index l-1).
    pub mollifier_products: Vec<Complex64>,
    pub flags: EventFlags,
}

/// Fill partial sums, mollifier products, and all event flags for one
/// character at threshold V.
pub fn compute_record(
    chi: &DirichletCharacter,
    schedule: &ScaleSchedule,
    v: f64,
    central: CentralValue,
    primes: &PrimeTable,
) -> Result<CharacterRecord> {
    let levels = schedule.levels();
    let loglog_q = (schedule.q() as f64).ln().ln();

    let mut s_tilde = Vec::with_capacity(levels + 1);
    let mut s_real = Vec::with_capacity(levels + 1);
    for l in 0..=levels {
        let x = schedule.scale(l);
        s_tilde.push(s_tilde_cutoff(chi, x, primes)?);
        s_real.push(s_real_cutoff(chi, x, primes)?);
    }

    let mut mollifier_factors = Vec::with_capacity(levels);
    let mut mollifier_products = Vec::with_capacity(levels);
    let mut running = Complex64::new(1.0, 0.0);
    for l in 1..=levels {
        let m = mollifier_value(chi, schedule.interval(l), schedule.omega_cap(l), primes)?;
        running *= m;
        mollifier_factors.push(m);
        mollifier_products.push(running);
    }

    let l_abs2 = central.value.norm_sqr();
    let mut flags = EventFlags {
        excluded: central.is_zero_sentinel(),
        h: !central.is_zero_sentinel() && central.log_abs > v,
        ..Default::default()
    };
    let (mut pa, mut pb, mut pc, mut pd) = (true, true, true, true);
    for l in 1..=levels {
        let dn = schedule.n(l) - schedule.n(l - 1);
        pa &= (s_tilde[l] - s_tilde[l - 1]).norm() <= schedule.a_const() * dn;
        pb &= s_real[l] <= schedule.upper_barrier(l);
        pc &= s_real[l] >= schedule.lower_barrier(l);
        let lhs = l_abs2 * (-2.0 * s_real[l]).exp();
        let rhs = schedule.c_const(l) * l_abs2 * mollifier_products[l - 1].norm_sqr()
            + (-schedule.d_const() * (loglog_q - schedule.n(l - 1))).exp();
        pd &= lhs <= rhs;
        flags.a.push(pa);
        flags.b.push(pb);
        flags.c.push(pc);
        flags.d.push(pd);
        flags.g.push(pa && pb && pc && pd);
    }

    Ok(CharacterRecord {
        index: chi.index(),
        central,
        log_abs: central.log_abs,
        s_tilde,
        s_real,
        mollifier_factors,
        mollifier_products,
        flags,
    })
}

/// Cell counts of the partition
/// H = (H ∩ G₁ᶜ) ∪ (H ∩ G₁ ∩ G₂ᶜ) ∪ … ∪ (H ∩ G_𝓛).
///
/// `cells[0]` is H ∩ G₁ᶜ, `cells[l]` is H ∩ G_l ∩ G_{l+1}ᶜ, and the last
/// cell is H ∩ G_𝓛. A degenerate schedule (𝓛 = 0) has the single cell H.
#[derive(Debug, Clone)]
pub struct PartitionCounts {
    pub cells: Vec<usize>,
    pub h_total: usize,
    pub excluded: usize,
}

impl PartitionCounts {
    pub fn sums_to_h(&self) -> bool {
        self.cells.iter().sum::<usize>() == self.h_total
    }
}

/// Assign every record in H (log|L| > V, recomputed here so one batch of
/// records supports a V-grid) to its unique partition cell.
pub fn partition_counts(records: &[CharacterRecord], v: f64) -> PartitionCounts {
    let levels = records
        .first()
        .map(|r| r.flags.g.len())
        .unwrap_or(0);
    let mut cells = vec![0usize; levels + 1];
    let mut h_total = 0;
    let mut excluded = 0;
    for rec in records {
        if rec.flags.excluded {
            excluded += 1;
            continue;
        }
        if !(rec.log_abs > v) {
            continue;
        }
        h_total += 1;
        let first_bad = rec.flags.g.iter().position(|&g| !g);
        match first_bad {
            Some(l) => cells[l] += 1,
            None => cells[levels] += 1,
        }
    }
    PartitionCounts {
        cells,
        h_total,
        excluded,
    }
}

/// Outcome of the pointwise mollifier inequality at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MollifierCheck {
    /// Inequality holds; the slack RHS - LHS.
    Holds(f64),
    /// Inequality fails; the (negative) margin.
    Fails(f64),
    /// Hypothesis |S̃_{n_l} - S̃_{n_{l-1}}| ≤ 10³(n_l - n_{l-1}) violated.
    Skipped,
}

/// Check e^{-(S_{n_l} - S_{n_{l-1}})} ≤ (1 + e^{-n_{l-1}}) |M_l| +
/// e^{-E(n_l - n_{l-1})} for one record, with E overridable (reference
/// value 10⁵; toy runs use 1).
pub fn mollifier_inequality_check(
    record: &CharacterRecord,
    schedule: &ScaleSchedule,
    l: usize,
    exponent_override: f64,
) -> MollifierCheck {
    let dn = schedule.n(l) - schedule.n(l - 1);
    if (record.s_tilde[l] - record.s_tilde[l - 1]).norm() > 1e3 * dn {
        return MollifierCheck::Skipped;
    }
    let lhs = (-(record.s_real[l] - record.s_real[l - 1])).exp();
    let rhs = (1.0 + (-schedule.n(l - 1)).exp()) * record.mollifier_factors[l - 1].norm()
        + (-exponent_override * dn).exp();
    let margin = rhs - lhs;
    if margin >= 0.0 {
        MollifierCheck::Holds(margin)
    } else {
        MollifierCheck::Fails(margin)
    }
}
