//! qpl — desk-scale experiments on primes of the form n⁴ + k.
//!
//! Subcommands cover the sieve cache, local solution-count tables, the
//! singular series and its tail, the complete sum Σ(q) cross-check, the
//! Chebyshev count, the second-moment sweep, major-arc geometry, the
//! minor-arc scan, and the lemma exercisers.
//!
//! Conventions: data goes to stdout (or `--out FILE`, written only after
//! the whole computation succeeded), progress goes to stderr, every report
//! embeds its resolved configuration, CSV reals carry 17 significant
//! digits, and identical argv + seed produce byte-identical data output.
//! Exit codes: 0 success, 1 validation error, 2 resource error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use qpl_core::arith::{squarefull_part, LambdaTable, SieveTables, DEFAULT_SIEVE_BUDGET};
use qpl_core::expsums::{build_major_arcs, minor_arc_sup_s2, sigma_q, sigma_q_multiplicative};
use qpl_core::lemma_lab::{
    bessel_check, duality_check, gallagher_check, polya_vinogradov_check,
    quartic_large_sieve_ratio, weyl_check, LemmaReport,
};
use qpl_core::moments::{error_percentiles, exceptional_count, second_moment, MomentConfig};
use qpl_core::singular::{is_reducible_shift, singular_series, truncation_delta, NpTables};
use qpl_core::QplError;

#[derive(Parser)]
#[command(name = "qpl", version, about = "desk-scale quartic-prime experiments")]
struct Cli {
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory for binary caches
    #[arg(long, global = true, default_value = ".qpl-cache")]
    cache_dir: PathBuf,

    /// Write data here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// RNG seed for randomized suites
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ArcParams {
    /// Exponent c₁ in Q₁ = (log x)^c₁
    #[arg(long, default_value_t = 2.0)]
    c1: f64,
    /// ε in Q₂ = x^(1−ε)
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or load) the smallest-prime-factor sieve cache
    SieveBuild {
        #[arg(long)]
        limit: u64,
    },
    /// Per-prime fourth-power data: p, d = gcd(p−1,4), n_p(k)
    NpTable {
        #[arg(long)]
        p_limit: u64,
        #[arg(long)]
        k: i64,
    },
    /// Truncated singular series with convergence trace
    SingularSeries {
        /// inclusive range, e.g. 1..100
        #[arg(long, default_value = "1..100")]
        k_range: String,
        /// truncation P
        #[arg(long, default_value_t = 10_000)]
        cutoff: u64,
        /// also compute the 2P-vs-P truncation delta (needs tables to 2P)
        #[arg(long, action = ArgAction::SetTrue)]
        trace: bool,
    },
    /// Σ(q) by double sum vs the prime-data product, as CSV
    SigmaTable {
        #[arg(long, default_value_t = 50)]
        q_max: u64,
        #[arg(long, default_value = "1..20")]
        k_range: String,
    },
    /// Σ_{n≤x} Λ(n⁴+k), printed to 6 significant digits
    Count {
        #[arg(long)]
        x: u64,
        #[arg(long)]
        k: u64,
    },
    /// The second-moment experiment over k ≤ y. Holds one Λ table up to
    /// x⁴ + y in memory — the binding desk-scale cost (x = 32 ⇒ ~2M u32
    /// sieve entries plus the f64 Λ table).
    MomentSweep {
        #[arg(long)]
        x: u64,
        /// default x⁴
        #[arg(long)]
        y: Option<u64>,
        #[arg(long, default_value_t = 0.1)]
        eps_prime: f64,
        /// singular-series truncation P
        #[arg(long, default_value_t = 10_000)]
        cutoff: u64,
        /// exceptional threshold exponent: |E| > x/(log x)^B
        #[arg(long = "B", default_value_t = 1.0)]
        b: f64,
        /// drop k = 4m⁴ from the exceptional count
        #[arg(long, default_value_t = true, action = ArgAction::Set)]
        exclude_reducible: bool,
        /// csv or json
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Enumerate the major arcs for (x, c1, eps)
    Arcs {
        #[arg(long)]
        x: u64,
        #[command(flatten)]
        arc: ArcParams,
    },
    /// Grid measurement of sup |S₂| on the minor arcs
    MinorScan {
        #[arg(long)]
        x: u64,
        #[command(flatten)]
        arc: ArcParams,
        #[arg(long, default_value_t = 10_000)]
        grid: u64,
    },
    /// Run one lemma exerciser suite
    LemmaLab {
        /// weyl | pv | duality | bessel | gallagher | qls
        #[arg(long)]
        lemma: String,
        #[arg(long, default_value_t = 50)]
        trials: u64,
        /// modulus bound for the pv suite
        #[arg(long, default_value_t = 100)]
        q_max: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let benign = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if benign {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    if let Some(t) = cli.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .is_err()
        {
            eprintln!("warning: thread pool already initialised; --threads ignored");
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                QplError::Resource { .. } | QplError::Io(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

/// "A..B" → inclusive (A, B).
fn parse_range(s: &str) -> Result<(u64, u64), QplError> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| QplError::Argument(format!("range must look like 1..100, got {s}")))?;
    let lo: u64 = lo
        .trim()
        .parse()
        .map_err(|_| QplError::Argument(format!("bad range start in {s}")))?;
    let hi: u64 = hi
        .trim()
        .parse()
        .map_err(|_| QplError::Argument(format!("bad range end in {s}")))?;
    if lo == 0 || hi < lo {
        return Err(QplError::Argument(format!(
            "range must satisfy 1 ≤ start ≤ end, got {s}"
        )));
    }
    Ok((lo, hi))
}

/// 17 significant digits, '.' decimal, no separators.
fn f17(v: f64) -> String {
    format!("{:.16e}", v)
}

/// `digits` significant digits in plain decimal.
fn sig_digits(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), QplError> {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => {
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir)?;
                }
            }
            std::fs::write(path, content)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn load_sieve(cli: &Cli, limit: u64) -> Result<SieveTables, QplError> {
    let path = cli.cache_dir.join("sieve.qpl");
    let (sieve, hit) = SieveTables::load_or_build(limit, DEFAULT_SIEVE_BUDGET, Some(&path))?;
    if hit {
        eprintln!("cache hit: sieve limit {limit} from {}", path.display());
    } else {
        eprintln!(
            "cache miss: built sieve to {limit}, wrote {}",
            path.display()
        );
    }
    Ok(sieve)
}

fn load_quartic(cli: &Cli, limit: u64) -> Result<NpTables, QplError> {
    let path = cli.cache_dir.join("quartic.qpl");
    let (tables, hit) = NpTables::load_or_build(limit, Some(&path))?;
    if hit {
        eprintln!("cache hit: quartic tables to {limit} from {}", path.display());
    } else {
        eprintln!(
            "cache miss: built quartic tables to {limit}, wrote {}",
            path.display()
        );
    }
    Ok(tables)
}

fn config_json(cli: &Cli, subcommand: &str, params: serde_json::Value) -> serde_json::Value {
    serde_json::json!({
        "schema": "qpl-1",
        "subcommand": subcommand,
        "params": params,
        "seed": cli.seed,
        "threads": cli.threads,
        "cache_dir": cli.cache_dir.display().to_string(),
    })
}

fn run(cli: &Cli) -> Result<(), QplError> {
    match &cli.command {
        Command::SieveBuild { limit } => {
            let sieve = load_sieve(cli, *limit)?;
            eprintln!(
                "sieve ready: limit {}, {} entries",
                sieve.limit(),
                sieve.entries().len()
            );
            Ok(())
        }

        Command::NpTable { p_limit, k } => {
            let tables = load_quartic(cli, *p_limit)?;
            let cfg = config_json(
                cli,
                "np-table",
                serde_json::json!({"p_limit": p_limit, "k": k}),
            );
            let mut out = format!("# config: {cfg}\np,d,n_p\n");
            for &p in tables.primes() {
                let d = qpl_core::arith::gcd(p - 1, 4);
                let np = tables.np(p, *k).unwrap();
                writeln!(out, "{p},{d},{np}").unwrap();
            }
            emit(cli.out.as_deref(), &out)
        }

        Command::SingularSeries {
            k_range,
            cutoff,
            trace,
        } => {
            let (lo, hi) = parse_range(k_range)?;
            let table_limit = if *trace { 2 * cutoff } else { *cutoff };
            let tables = load_quartic(cli, table_limit)?;
            let cfg = config_json(
                cli,
                "singular-series",
                serde_json::json!({"k_range": k_range, "cutoff": cutoff, "trace": trace}),
            );
            let mut out = format!(
                "# config: {cfg}\nk,kappa,S_trunc,trace_P10,trace_P4,trace_P2,delta,reducible_flag\n"
            );
            for k in lo..=hi {
                let s = singular_series(k, *cutoff, &tables)?;
                let delta = if *trace {
                    f17(truncation_delta(k, *cutoff, &tables)?)
                } else {
                    String::new()
                };
                writeln!(
                    out,
                    "{k},{},{},{},{},{},{delta},{}",
                    squarefull_part(k),
                    f17(s.value),
                    f17(s.trace[0].1),
                    f17(s.trace[1].1),
                    f17(s.trace[2].1),
                    is_reducible_shift(k)
                )
                .unwrap();
            }
            emit(cli.out.as_deref(), &out)
        }

        Command::SigmaTable { q_max, k_range } => {
            let (lo, hi) = parse_range(k_range)?;
            let cfg = config_json(
                cli,
                "sigma-table",
                serde_json::json!({"q_max": q_max, "k_range": k_range}),
            );
            let mut out = format!("# config: {cfg}\nq,k,sigma,p_np_product,match\n");
            for q in 1..=*q_max {
                let squarefree = qpl_core::arith::mobius(q) != 0;
                for k in lo..=hi {
                    let sigma = sigma_q(q, k as i64)?;
                    if squarefree {
                        let product = sigma_q_multiplicative(q, k as i64)?;
                        writeln!(
                            out,
                            "{q},{k},{},{},{}",
                            f17(sigma),
                            f17(product),
                            sigma == product
                        )
                        .unwrap();
                    } else {
                        writeln!(out, "{q},{k},{},,", f17(sigma)).unwrap();
                    }
                }
            }
            emit(cli.out.as_deref(), &out)
        }

        Command::Count { x, k } => {
            let top = x
                .checked_pow(4)
                .and_then(|v| v.checked_add(*k))
                .ok_or_else(|| QplError::Argument("x⁴ + k overflows".into()))?;
            let sieve = load_sieve(cli, top.max(2))?;
            let lambda = LambdaTable::build(&sieve);
            let count = qpl_core::moments::chebyshev_quartic(*x, *k, &lambda)?;
            let mut out = sig_digits(count, 6);
            out.push('\n');
            emit(cli.out.as_deref(), &out)
        }

        Command::MomentSweep {
            x,
            y,
            eps_prime,
            cutoff,
            b,
            exclude_reducible,
            format,
        } => {
            if format != "json" && format != "csv" {
                return Err(QplError::Argument(format!(
                    "--format must be json or csv, got {format}"
                )));
            }
            let x4 = x
                .checked_pow(4)
                .ok_or_else(|| QplError::Config("x⁴ overflows".into()))?;
            let cfg = MomentConfig {
                x: *x,
                y: y.unwrap_or(x4),
                eps_prime: *eps_prime,
                cutoff: *cutoff,
                b: *b,
            };
            cfg.validate()?;
            let started = Instant::now();
            let sieve = load_sieve(cli, x4 + cfg.y)?;
            let lambda = LambdaTable::build(&sieve);
            let np = load_quartic(cli, cfg.cutoff)?;
            let (m2, rows) = second_moment(&cfg, &sieve, &lambda, &np)?;
            let exceptional = exceptional_count(&rows, cfg.x, cfg.b, !*exclude_reducible);
            let (p50, p90, p99, max) = error_percentiles(&rows);

            // the checksummed row stream doubles as the CSV body
            let mut stream = String::from("k,kappa,admissible,reducible,count,expected,error\n");
            for r in &rows {
                writeln!(
                    stream,
                    "{},{},{},{},{},{},{}",
                    r.k,
                    r.kappa,
                    r.admissible,
                    r.reducible,
                    f17(r.count),
                    f17(r.expected),
                    f17(r.error)
                )
                .unwrap();
            }
            let checksum = {
                let mut h = Sha256::new();
                h.update(stream.as_bytes());
                let digest = h.finalize();
                let mut s = String::with_capacity(64);
                for byte in digest {
                    write!(s, "{byte:02x}").unwrap();
                }
                s
            };
            let runtime = started.elapsed().as_secs_f64();
            let config = config_json(
                cli,
                "moment-sweep",
                serde_json::json!({
                    "x": cfg.x, "y": cfg.y, "eps_prime": cfg.eps_prime,
                    "cutoff": cfg.cutoff, "B": cfg.b,
                    "exclude_reducible": exclude_reducible, "format": format,
                }),
            );
            let report = serde_json::json!({
                "schema": "qpl-1",
                "config": config,
                "m2": m2,
                "exceptional_count": exceptional,
                "admissible_count": rows.iter().filter(|r| r.admissible).count(),
                "percentiles_abs_error": {"p50": p50, "p90": p90, "p99": p99, "max": max},
                "runtime_seconds": runtime,
                "checksum": checksum,
            });
            if format == "json" {
                emit(cli.out.as_deref(), &format!("{report:#}\n"))
            } else {
                let mut out = format!("# report: {report}\n");
                out.push_str(&stream);
                emit(cli.out.as_deref(), &out)
            }
        }

        Command::Arcs { x, arc } => {
            let arcs = build_major_arcs(*x, arc.c1, arc.eps)?;
            let cfg = config_json(
                cli,
                "arcs",
                serde_json::json!({"x": x, "c1": arc.c1, "eps": arc.eps,
                                   "Q1": arcs.q1, "Q2": arcs.q2}),
            );
            let mut out = format!("# config: {cfg}\nq,a,center,halfwidth\n");
            for a in &arcs.arcs {
                writeln!(
                    out,
                    "{},{},{},{}",
                    a.q,
                    a.a,
                    f17(a.a as f64 / a.q as f64),
                    f17(a.halfwidth)
                )
                .unwrap();
            }
            emit(cli.out.as_deref(), &out)
        }

        Command::MinorScan { x, arc, grid } => {
            let arcs = build_major_arcs(*x, arc.c1, arc.eps)?;
            let (alpha, magnitude) = minor_arc_sup_s2(*x, &arcs, *grid)?;
            let cfg = config_json(
                cli,
                "minor-scan",
                serde_json::json!({"x": x, "c1": arc.c1, "eps": arc.eps, "grid": grid,
                                   "Q1": arcs.q1, "Q2": arcs.q2}),
            );
            let mut out =
                format!("# config: {cfg}\nx,grid,alpha_star,magnitude,magnitude_over_x\n");
            writeln!(
                out,
                "{x},{grid},{},{},{}",
                f17(alpha),
                f17(magnitude),
                f17(magnitude / *x as f64)
            )
            .unwrap();
            emit(cli.out.as_deref(), &out)
        }

        Command::LemmaLab {
            lemma,
            trials,
            q_max,
        } => {
            let reports = run_lemma_suite(lemma, *trials, *q_max, cli.seed)?;
            let cfg = config_json(
                cli,
                "lemma-lab",
                serde_json::json!({"lemma": lemma, "trials": trials, "q_max": q_max}),
            );
            let mut out = format!("# config: {cfg}\nlemma_id,params,lhs,rhs,ratio,verdict\n");
            for r in &reports {
                let params = r
                    .params
                    .iter()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect::<Vec<_>>()
                    .join(";");
                writeln!(
                    out,
                    "{},{params},{},{},{},{}",
                    r.lemma_id,
                    f17(r.lhs),
                    f17(r.rhs),
                    f17(r.ratio),
                    r.verdict
                )
                .unwrap();
            }
            emit(cli.out.as_deref(), &out)
        }
    }
}

fn run_lemma_suite(
    lemma: &str,
    trials: u64,
    q_max: u64,
    seed: u64,
) -> Result<Vec<LemmaReport>, QplError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::new();
    match lemma {
        "weyl" => {
            for _ in 0..trials {
                let alpha = rng.gen::<f64>();
                let n = 10 + rng.gen::<u64>() % 191;
                let coeffs = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
                reports.push(weyl_check(alpha, n, &coeffs)?);
            }
        }
        "pv" => {
            for q in 3..=q_max.max(3) {
                reports.extend(polya_vinogradov_check(q)?);
            }
        }
        "duality" => {
            for dim in [10usize, 50] {
                for _ in 0..trials {
                    let m: Vec<Vec<Complex64>> = (0..dim)
                        .map(|_| {
                            (0..dim)
                                .map(|_| {
                                    Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                                })
                                .collect()
                        })
                        .collect();
                    reports.push(duality_check(&m)?);
                }
            }
        }
        "bessel" => {
            for _ in 0..trials {
                let dim = 30usize;
                let mut family: Vec<Vec<Complex64>> = Vec::new();
                while family.len() < 6 {
                    let mut v: Vec<Complex64> = (0..dim)
                        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                        .collect();
                    // two Gram-Schmidt passes push the Gram error below 1e-10
                    let mut ok = true;
                    for _pass in 0..2 {
                        for u in &family {
                            let ip: Complex64 =
                                u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                            for (x, y) in v.iter_mut().zip(u) {
                                *x -= ip * y;
                            }
                        }
                        let n: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                        if n < 1e-3 {
                            ok = false;
                            break;
                        }
                        v.iter_mut().for_each(|c| *c /= n);
                    }
                    if ok {
                        family.push(v);
                    }
                }
                let xi: Vec<Complex64> = (0..dim)
                    .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                    .collect();
                reports.push(bessel_check(&family, &xi)?);
            }
        }
        "gallagher" => {
            // the closed-form spike first, then random ±1 sequences
            let mut spike = vec![Complex64::new(0.0, 0.0); 49];
            spike[1] = Complex64::new(1.0, 0.0);
            reports.push(gallagher_check(&spike, 100, 150, 10.0)?);
            for _ in 0..trials {
                let a: Vec<Complex64> = (0..49)
                    .map(|_| Complex64::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0))
                    .collect();
                reports.push(gallagher_check(&a, 100, 150, 10.0)?);
            }
        }
        "qls" => {
            reports.push(quartic_large_sieve_ratio(64, 256, trials, seed)?);
        }
        other => {
            return Err(QplError::Argument(format!(
                "unknown lemma {other}; expected weyl|pv|duality|bessel|gallagher|qls"
            )));
        }
    }
    Ok(reports)
}
