//! Experiment front end: character tables, central values with a persistent
//! cache, moment/tail/twist experiments, the theta and random-model checks,
//! scheme runs, and the acceptance verifier.
//!
//! Every subcommand is deterministic given (flags, seed, cache state); CSV
//! and JSON output is byte-stable across runs and thread counts.

mod cache;
mod export;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use qaspect::arithmetic::{factorize, PrimeTable};
use qaspect::characters::{enumerate_class, CharClass, DirichletCharacter, ModulusContext};
use qaspect::dpoly::{theta_extrapolated, theta_limit, DirichletPolynomial};
use qaspect::lcentral::{afe_for_class, l_values_direct_class, CentralValue, Method};
use qaspect::moments::{class_moment, tail_count, twisted_second_moment, TwistArg};
use qaspect::random_model::mc_clt;
use qaspect::scheme::{
    build_schedule, compute_record, mollifier_inequality_check, partition_counts, MollifierCheck,
    ScheduleConfig,
};
use qaspect::verify;

use cache::LvalueCache;
use export::{Cell, Table};

#[derive(Parser, Debug)]
#[command(name = "qaspect", version, about = "Dirichlet central-value laboratory")]
struct Cli {
    /// Worker threads for the parallel character maps (output is identical
    /// for any value).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Load a serialized ExperimentConfig instead of passing flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

/// One experiment, as flags or as the `command` field of a config file.
#[derive(Subcommand, Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Enumerate a character class.
    Characters {
        #[arg(long)]
        q: u64,
        #[arg(long, default_value = "all")]
        #[serde(default = "default_class_all")]
        class: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        #[serde(default = "default_format")]
        format: String,
    },
    /// Central values L(1/2, χ) over the even primitive class.
    Lvalues {
        #[arg(long)]
        q: u64,
        /// afe, hurwitz, or both.
        #[arg(long, default_value = "afe")]
        #[serde(default = "default_method")]
        method: String,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        #[serde(default = "default_format")]
        format: String,
    },
    /// Fractional moments E₊[|L|^{2β}] with Gaussian comparators.
    Moments {
        #[arg(long = "q-list", value_delimiter = ',', required = true)]
        q_list: Vec<u64>,
        #[arg(long = "beta-grid", value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75])]
        #[serde(default = "default_beta_grid")]
        beta_grid: Vec<f64>,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        #[serde(default = "default_format")]
        format: String,
    },
    /// Tail counts of log|L| against the Gaussian comparator.
    Tail {
        #[arg(long)]
        q: u64,
        /// "auto" or a comma list of V values.
        #[arg(long = "v-grid", default_value = "auto")]
        #[serde(default = "default_auto")]
        v_grid: String,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        #[serde(default = "default_format")]
        format: String,
    },
    /// Twisted mollified second moment with an interval prime-sum twist.
    Twist {
        #[arg(long)]
        q: u64,
        #[arg(long, default_value_t = 0.5)]
        #[serde(default = "default_kappa")]
        kappa: f64,
        #[arg(long, default_value_t = 1)]
        #[serde(default = "default_level")]
        level: usize,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        #[serde(default = "default_format")]
        format: String,
    },
    /// Theta limit vs finite-β extrapolation, exhaustively over valuations.
    Theta {
        #[arg(long, value_delimiter = ',', default_values_t = [2u64, 3, 5])]
        #[serde(default = "default_primes")]
        primes: Vec<u64>,
        /// Max valuation per prime in the exhaustive sweep.
        #[arg(long, default_value_t = 2)]
        #[serde(default = "default_vmax")]
        vmax: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        #[serde(default = "default_format")]
        format: String,
    },
    /// Monte-Carlo CLT summary for the random multiplicative model.
    RandomModel {
        #[arg(long = "primes-limit", default_value_t = 10_000)]
        #[serde(default = "default_primes_limit")]
        primes_limit: u64,
        #[arg(long, default_value_t = 100_000)]
        #[serde(default = "default_trials")]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        #[serde(default = "default_seed")]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        #[serde(default = "default_format")]
        format: String,
    },
    /// Toy-mode scheme run: partition cells over a V grid plus the pointwise
    /// mollifier inequality summary.
    Scheme {
        #[arg(long)]
        q: u64,
        #[arg(long, default_value_t = 0.5)]
        #[serde(default = "default_kappa")]
        kappa: f64,
        /// "auto" or a comma list of V values.
        #[arg(long = "v-grid", default_value = "auto")]
        #[serde(default = "default_auto")]
        v_grid: String,
        /// Exponent override E in the mollifier inequality.
        #[arg(long = "mollifier-exponent", default_value_t = 1.0)]
        #[serde(default = "default_exponent")]
        mollifier_exponent: f64,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        #[serde(default = "default_format")]
        format: String,
    },
    /// Run acceptance suites; exit 1 on any failed criterion.
    Verify {
        #[arg(long, default_value = "all")]
        #[serde(default = "default_suite")]
        suite: String,
        /// Override the sweep bound of the swept suites (0 = default).
        #[arg(long, default_value_t = 0)]
        #[serde(default)]
        qmax: u64,
    },
}

fn default_class_all() -> String {
    "all".into()
}
fn default_format() -> String {
    "csv".into()
}
fn default_method() -> String {
    "afe".into()
}
fn default_beta_grid() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}
fn default_auto() -> String {
    "auto".into()
}
fn default_kappa() -> f64 {
    0.5
}
fn default_level() -> usize {
    1
}
fn default_primes() -> Vec<u64> {
    vec![2, 3, 5]
}
fn default_vmax() -> u32 {
    2
}
fn default_primes_limit() -> u64 {
    10_000
}
fn default_trials() -> usize {
    100_000
}
fn default_seed() -> u64 {
    1
}
fn default_exponent() -> f64 {
    1.0
}
fn default_suite() -> String {
    "all".into()
}

/// The serialized form accepted by `--config`; round-trips losslessly.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
struct ExperimentConfig {
    #[serde(default)]
    threads: Option<usize>,
    #[serde(flatten)]
    command: Command,
}

fn open_cache(flag: Option<&Path>) -> Result<LvalueCache> {
    if let Some(p) = flag {
        return LvalueCache::open(p);
    }
    if let Ok(dir) = std::env::var("QASPECT_CACHE_DIR") {
        return LvalueCache::open(&PathBuf::from(dir).join("lvalues.jsonl"));
    }
    Ok(LvalueCache::ephemeral())
}

/// Central values for the class, pulling hits from the cache and computing
/// only the missing characters.
fn centrals_cached(
    ctx: &Arc<ModulusContext>,
    chars: &[DirichletCharacter],
    method: Method,
    cache: &mut LvalueCache,
) -> Result<Vec<CentralValue>> {
    let q = ctx.q();
    let mut out: Vec<Option<CentralValue>> = chars
        .iter()
        .map(|chi| cache.get(q, chi.index(), method))
        .collect();
    let missing: Vec<DirichletCharacter> = chars
        .iter()
        .zip(&out)
        .filter(|(_, hit)| hit.is_none())
        .map(|(chi, _)| chi.clone())
        .collect();
    if !missing.is_empty() {
        let computed = match method {
            Method::Afe => afe_for_class(ctx, &missing)?,
            Method::Hurwitz => l_values_direct_class(ctx, &missing, Complex64::new(0.5, 0.0))?,
        };
        let items: Vec<(u64, CentralValue)> = missing
            .iter()
            .map(|chi| chi.index())
            .zip(computed.iter().copied())
            .collect();
        cache.append(q, &items)?;
        let mut it = computed.into_iter();
        for slot in out.iter_mut() {
            if slot.is_none() {
                *slot = Some(it.next().expect("one computed value per missing slot"));
            }
        }
    }
    Ok(out.into_iter().map(|c| c.expect("filled")).collect())
}

fn parse_v_grid(spec: &str, q: u64) -> Result<Vec<f64>> {
    if spec == "auto" {
        let llq = (q as f64).ln().ln();
        return Ok((0..=10).map(|i| i as f64 * 0.1 * llq).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse::<f64>().context("parsing V grid"))
        .collect()
}

fn even_primitive_class(q: u64) -> Result<(Arc<ModulusContext>, Vec<DirichletCharacter>)> {
    let ctx = ModulusContext::build(q)?;
    if ctx.no_primitive_chars() {
        eprintln!("warning: q = {q} = 2 mod 4 has no primitive characters");
    }
    let chars = enumerate_class(&ctx, CharClass::EvenPrimitive);
    if chars.is_empty() {
        bail!("no even primitive characters mod {q}");
    }
    Ok((ctx, chars))
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Characters {
            q,
            class,
            out,
            format,
        } => {
            let class =
                CharClass::parse(&class).with_context(|| format!("unknown class {class:?}"))?;
            let ctx = ModulusContext::build(q)?;
            if ctx.no_primitive_chars()
                && matches!(class, CharClass::Primitive | CharClass::EvenPrimitive)
            {
                eprintln!("warning: q = {q} = 2 mod 4 has no primitive characters");
            }
            let chars = enumerate_class(&ctx, class);
            let mut table = Table::new(vec![
                "q",
                "index",
                "exponents",
                "parity",
                "conductor",
                "primitive",
            ]);
            for chi in &chars {
                let exps: Vec<String> = chi.exponents().iter().map(u64::to_string).collect();
                table.push(vec![
                    Cell::UInt(q),
                    Cell::UInt(chi.index()),
                    Cell::Str(exps.join(";")),
                    Cell::Int(chi.parity() as i64),
                    Cell::UInt(chi.conductor()),
                    Cell::Bool(chi.is_primitive()),
                ]);
            }
            table.emit(out.as_deref(), format.parse()?)?;
        }

        Command::Lvalues {
            q,
            method,
            cache,
            out,
            format,
        } => {
            let (ctx, chars) = even_primitive_class(q)?;
            let mut store = open_cache(cache.as_deref())?;
            let methods: Vec<Method> = match method.as_str() {
                "afe" => vec![Method::Afe],
                "hurwitz" => vec![Method::Hurwitz],
                "both" => vec![Method::Afe, Method::Hurwitz],
                other => bail!("unknown method {other:?} (afe, hurwitz, both)"),
            };
            let mut table = Table::new(vec![
                "q",
                "index",
                "method",
                "re",
                "im",
                "abs",
                "log_abs",
                "est_error",
            ]);
            for m in methods {
                let centrals = centrals_cached(&ctx, &chars, m, &mut store)?;
                for (chi, cv) in chars.iter().zip(&centrals) {
                    table.push(vec![
                        Cell::UInt(q),
                        Cell::UInt(chi.index()),
                        Cell::Str(cv.method.as_str().to_string()),
                        Cell::Float(cv.value.re),
                        Cell::Float(cv.value.im),
                        Cell::Float(cv.value.norm()),
                        Cell::Float(cv.log_abs),
                        Cell::Float(cv.est_error),
                    ]);
                }
            }
            table.emit(out.as_deref(), format.parse()?)?;
        }

        Command::Moments {
            q_list,
            beta_grid,
            cache,
            out,
            format,
        } => {
            let mut store = open_cache(cache.as_deref())?;
            let mut table = Table::new(vec!["q", "class", "beta", "moment", "comparator", "ratio"]);
            for &q in &q_list {
                let (ctx, chars) = even_primitive_class(q)?;
                let centrals = centrals_cached(&ctx, &chars, Method::Afe, &mut store)?;
                let sq: Vec<f64> = centrals.iter().map(|c| c.value.norm_sqr()).collect();
                for &beta in &beta_grid {
                    let r = class_moment(q, CharClass::EvenPrimitive, &sq, beta)?;
                    table.push(vec![
                        Cell::UInt(q),
                        Cell::Str(r.class.as_str().to_string()),
                        Cell::Float(beta),
                        Cell::Float(r.value),
                        Cell::Float(r.comparator),
                        Cell::Float(r.ratio),
                    ]);
                }
            }
            table.emit(out.as_deref(), format.parse()?)?;
        }

        Command::Tail {
            q,
            v_grid,
            cache,
            out,
            format,
        } => {
            let (ctx, chars) = even_primitive_class(q)?;
            let mut store = open_cache(cache.as_deref())?;
            let centrals = centrals_cached(&ctx, &chars, Method::Afe, &mut store)?;
            let log_abs: Vec<f64> = centrals.iter().map(|c| c.log_abs).collect();
            let mut table = Table::new(vec!["q", "V", "count_norm", "gaussian_bound", "ratio"]);
            for v in parse_v_grid(&v_grid, q)? {
                let r = tail_count(&ctx, &log_abs, v);
                if r.sentinels > 0 {
                    eprintln!("warning: {} zero-value sentinels excluded at V = {v}", r.sentinels);
                }
                table.push(vec![
                    Cell::UInt(q),
                    Cell::Float(v),
                    Cell::Float(r.count_norm),
                    Cell::Float(r.gaussian_bound),
                    Cell::Float(r.ratio),
                ]);
            }
            table.emit(out.as_deref(), format.parse()?)?;
        }

        Command::Twist {
            q,
            kappa,
            level,
            cache,
            out,
            format,
        } => {
            let (ctx, chars) = even_primitive_class(q)?;
            let mut store = open_cache(cache.as_deref())?;
            let centrals = centrals_cached(&ctx, &chars, Method::Afe, &mut store)?;
            let sched = build_schedule(q, kappa, &ScheduleConfig::toy())?;
            if level > sched.levels() {
                bail!("level {level} beyond the ladder (L = {})", sched.levels());
            }
            let primes = PrimeTable::new(sched.scale(sched.levels()).ceil() as u64 + 10)?;
            let (lo, hi) = sched.interval(level);
            let twist = DirichletPolynomial::from_pairs(
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
                level,
                TwistArg::Poly(&twist),
                &primes,
            )?;
            let mut table = Table::new(vec![
                "q",
                "level",
                "direct",
                "twist_norm",
                "normalizer",
                "ratio",
            ]);
            table.push(vec![
                Cell::UInt(q),
                Cell::UInt(level as u64),
                Cell::Float(r.direct),
                Cell::Float(r.twist_norm),
                Cell::Float(r.normalizer),
                Cell::Float(r.ratio),
            ]);
            table.emit(out.as_deref(), format.parse()?)?;
        }

        Command::Theta {
            primes,
            vmax,
            out,
            format,
        } => {
            let mut cs = vec![1u64];
            for &p in &primes {
                let mut next = Vec::new();
                for &c in &cs {
                    let mut v = c;
                    for _ in 0..=vmax {
                        next.push(v);
                        v = v.saturating_mul(p);
                    }
                }
                cs = next;
            }
            cs.sort_unstable();
            cs.dedup();
            let mut table = Table::new(vec![
                "primes",
                "c1",
                "c2",
                "extrapolated",
                "limit",
                "abs_diff",
            ]);
            let plabel = primes
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(";");
            for &c1 in &cs {
                for &c2 in &cs {
                    let f1 = factorize(c1)?;
                    let f2 = factorize(c2)?;
                    let limit = theta_limit(&f1, &f2, &primes)?;
                    let extrap = theta_extrapolated(&f1, &f2, &primes, (1e-3, 1e-4))?;
                    table.push(vec![
                        Cell::Str(plabel.clone()),
                        Cell::UInt(c1),
                        Cell::UInt(c2),
                        Cell::Float(extrap),
                        Cell::Float(limit),
                        Cell::Float((extrap - limit).abs()),
                    ]);
                }
            }
            table.emit(out.as_deref(), format.parse()?)?;
        }

        Command::RandomModel {
            primes_limit,
            trials,
            seed,
            out,
            format,
        } => {
            let primes = qaspect::arithmetic::sieve_primes(primes_limit)?;
            let summary = mc_clt(&primes, trials, seed)?;
            let mut table = Table::new(vec![
                "primes_limit",
                "trials",
                "seed",
                "mean",
                "variance",
                "expected_variance",
                "ks_distance",
            ]);
            table.push(vec![
                Cell::UInt(primes_limit),
                Cell::UInt(trials as u64),
                Cell::UInt(seed),
                Cell::Float(summary.mean),
                Cell::Float(summary.variance),
                Cell::Float(summary.expected_variance),
                Cell::Float(summary.ks_distance),
            ]);
            table.emit(out.as_deref(), format.parse()?)?;
        }

        Command::Scheme {
            q,
            kappa,
            v_grid,
            mollifier_exponent,
            cache,
            out,
            format,
        } => {
            let (ctx, chars) = even_primitive_class(q)?;
            let mut store = open_cache(cache.as_deref())?;
            let centrals = centrals_cached(&ctx, &chars, Method::Afe, &mut store)?;
            let sched = build_schedule(q, kappa, &ScheduleConfig::toy())?;
            if sched.is_degenerate() {
                eprintln!("warning: degenerate ladder (L = 0) at q = {q}");
            }
            if sched.log_floor_applied() {
                eprintln!("note: iterated-log floor (1.5) bound during ladder construction");
            }
            let primes = PrimeTable::new(sched.scale(sched.levels()).ceil() as u64 + 10)?;
            use rayon::prelude::*;
            let records: Vec<_> = chars
                .par_iter()
                .zip(centrals.par_iter())
                .map(|(chi, cv)| {
                    compute_record(chi, &sched, kappa * (q as f64).ln().ln(), *cv, &primes)
                })
                .collect::<qaspect::Result<_>>()?;

            let (mut holds, mut fails, mut skips) = (0usize, 0usize, 0usize);
            for rec in &records {
                for l in 1..=sched.levels() {
                    match mollifier_inequality_check(rec, &sched, l, mollifier_exponent) {
                        MollifierCheck::Holds(_) => holds += 1,
                        MollifierCheck::Fails(_) => fails += 1,
                        MollifierCheck::Skipped => skips += 1,
                    }
                }
            }
            eprintln!(
                "scheme q={q} kappa={kappa}: L = {}, mollifier inequality (E = {mollifier_exponent}): \
                 {holds} hold / {fails} fail / {skips} skipped",
                sched.levels()
            );
            // mollification quality, logged not asserted: |M_1..M_L e^{S}|
            // should sit within a factor 10 of 1 for most characters
            if sched.levels() >= 1 {
                let within = records
                    .iter()
                    .filter(|r| {
                        let m = r.mollifier_products.last().expect("L >= 1").norm();
                        let v = m * r.s_real.last().expect("L >= 1").exp();
                        (0.1..=10.0).contains(&v)
                    })
                    .count();
                eprintln!(
                    "mollification quality: |M_1..M_L e^S| within a factor 10 of 1 for {within}/{} characters",
                    records.len()
                );
            }

            let mut table = Table::new(vec!["q", "kappa", "V", "cell", "count", "h_total"]);
            for v in parse_v_grid(&v_grid, q)? {
                let parts = partition_counts(&records, v);
                assert!(parts.sums_to_h(), "partition must be exact");
                for (i, &count) in parts.cells.iter().enumerate() {
                    let label = if i + 1 == parts.cells.len() {
                        format!("H&G_{}", sched.levels())
                    } else {
                        format!("H&G_{}c", i + 1)
                    };
                    table.push(vec![
                        Cell::UInt(q),
                        Cell::Float(kappa),
                        Cell::Float(v),
                        Cell::Str(label),
                        Cell::UInt(count as u64),
                        Cell::UInt(parts.h_total as u64),
                    ]);
                }
            }
            table.emit(out.as_deref(), format.parse()?)?;
            if fails > 0 {
                return Ok(ExitCode::from(1));
            }
        }

        Command::Verify { suite, qmax } => {
            let results = verify::run_suite(&suite, qmax)
                .with_context(|| format!("unknown suite {suite:?}"))?;
            let mut ok = true;
            for r in &results {
                print!("{r}");
                ok &= r.pass;
            }
            if !ok {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let command = match (cli.config, cli.command) {
        (Some(path), None) => {
            let body = match std::fs::read_to_string(&path) {
                Ok(b) => b,
                Err(e) => {
                    eprintln!("error: reading {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            };
            match serde_json::from_str::<ExperimentConfig>(&body) {
                Ok(cfg) => {
                    if let Some(n) = cfg.threads {
                        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                    }
                    cfg.command
                }
                Err(e) => {
                    eprintln!("error: parsing {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
        }
        (None, Some(cmd)) => cmd,
        (Some(_), Some(_)) => {
            eprintln!("error: pass either --config or a subcommand, not both");
            return ExitCode::from(2);
        }
        (None, None) => {
            eprintln!("error: a subcommand or --config is required (see --help)");
            return ExitCode::from(2);
        }
    };
    match run(command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_losslessly() {
        let cfg = ExperimentConfig {
            threads: Some(4),
            command: Command::Tail {
                q: 10_007,
                v_grid: "0.5,1.0,1.5".into(),
                cache: Some(PathBuf::from("/tmp/cache.jsonl")),
                out: None,
                format: "json".into(),
            },
        };
        let s = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn v_grid_parses() {
        assert_eq!(parse_v_grid("1,2.5,3", 101).unwrap(), vec![1.0, 2.5, 3.0]);
        assert_eq!(parse_v_grid("auto", 101).unwrap().len(), 11);
        assert!(parse_v_grid("x", 101).is_err());
    }
}
