//! The averaged experiment: per-shift errors E(k) = Σ_{n≤x} Λ(n⁴+k) − 𝔖_P(k)·x,
//! their normalized second moment over the κ-filtered range k ≤ y, the
//! exceptional-set count, and the decay trend across x.
//!
//! The normalized statistic is M2 = (1/(y·x²)) Σ_{admissible k} |E(k)|²,
//! where k is admissible when its square-full part κ(k) stays below
//! y^{1/2−ε′}. Boundedness and slow decay of M2 in x is the desk-scale
//! shadow of the second-moment bound; the asymptotic constants themselves
//! are out of numerical reach.
//!
//! One Λ table up to x⁴ + y serves every k (that table is the binding
//! memory cost of a sweep). The k range is sharded across threads; each
//! row is computed by a fixed serial recipe and the reduction replays rows
//! in ascending k, so results are bit-identical at any worker count.

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{factorize, LambdaTable, SieveTables};
use crate::error::QplError;
use crate::singular::{is_reducible_shift, singular_series, NpTables};
use crate::summation::CompensatedSum;
use crate::Result;

/// Sweep parameters. y defaults to x⁴ at the CLI; ε′ filters κ(k).
#[derive(Debug, Clone, Serialize)]
pub struct MomentConfig {
    pub x: u64,
    pub y: u64,
    pub eps_prime: f64,
    /// singular-series truncation P
    pub cutoff: u64,
    /// log-power for the exceptional threshold x/(log x)^B
    pub b: f64,
}

impl MomentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.x < 8 {
            return Err(QplError::Config(format!("x must be ≥ 8, got {}", self.x)));
        }
        let x4 = self
            .x
            .checked_pow(4)
            .ok_or_else(|| QplError::Config("x⁴ overflows".into()))?;
        if self.y == 0 || self.y > x4 {
            return Err(QplError::Config(format!(
                "y must lie in 1..=x⁴ = {x4}, got {}",
                self.y
            )));
        }
        if !(self.eps_prime > 0.0 && self.eps_prime < 0.5) {
            return Err(QplError::Config(format!(
                "eps_prime must lie in (0, 1/2), got {}",
                self.eps_prime
            )));
        }
        if self.cutoff < 3 {
            return Err(QplError::Config("cutoff P must be ≥ 3".into()));
        }
        Ok(())
    }

    /// κ threshold y^{1/2 − ε′}.
    pub fn kappa_threshold(&self) -> f64 {
        (self.y as f64).powf(0.5 - self.eps_prime)
    }
}

/// One shift's worth of the experiment.
#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub k: u64,
    pub kappa: u64,
    pub admissible: bool,
    pub reducible: bool,
    /// Σ_{n≤x} Λ(n⁴+k)
    pub count: f64,
    /// 𝔖_P(k)·x
    pub expected: f64,
    /// count − expected
    pub error: f64,
}

/// Σ_{n=1..x} Λ(n⁴+k), ascending n, compensated.
pub fn chebyshev_quartic(x: u64, k: u64, lambda: &LambdaTable) -> Result<f64> {
    let top = x
        .checked_pow(4)
        .and_then(|v| v.checked_add(k))
        .ok_or_else(|| QplError::Range("x⁴ + k overflows".into()))?;
    if top > lambda.limit() {
        return Err(QplError::Range(format!(
            "chebyshev_quartic needs Λ up to {top}, table stops at {}; \
             chebyshev_quartic_large avoids the table at O(x) primality tests",
            lambda.limit()
        )));
    }
    let mut acc = CompensatedSum::new();
    for n in 1..=x {
        acc.add(lambda.lambda(n * n * n * n + k)?);
    }
    Ok(acc.total())
}

/// Table-free fallback for isolated counts: Λ through perfect-power
/// stripping plus deterministic primality. Slower per value, no memory.
pub fn chebyshev_quartic_large(x: u64, k: u64) -> Result<f64> {
    x.checked_pow(4)
        .and_then(|v| v.checked_add(k))
        .ok_or_else(|| QplError::Range("x⁴ + k overflows".into()))?;
    let mut acc = CompensatedSum::new();
    for n in 1..=x {
        acc.add(crate::arith::von_mangoldt_large(n * n * n * n + k));
    }
    Ok(acc.total())
}

/// Full sweep over k ≤ y: rows for every k (admissibility flagged), and
/// M2 = (1/(y·x²)) Σ_{admissible} |E(k)|².
pub fn second_moment(
    cfg: &MomentConfig,
    sieve: &SieveTables,
    lambda: &LambdaTable,
    np: &NpTables,
) -> Result<(f64, Vec<MomentRow>)> {
    cfg.validate()?;
    let x4 = cfg.x.pow(4);
    let need = x4 + cfg.y;
    if lambda.limit() < need {
        return Err(QplError::Resource {
            what: "Λ table for the moment sweep (chebyshev_quartic_large is the slower table-free fallback)",
            needed: need,
            budget: lambda.limit(),
        });
    }
    if sieve.limit() < cfg.y {
        return Err(QplError::Resource {
            what: "factorization sieve for κ(k)",
            needed: cfg.y,
            budget: sieve.limit(),
        });
    }
    if np.limit() < cfg.cutoff {
        return Err(QplError::Resource {
            what: "quartic tables for 𝔖_P",
            needed: cfg.cutoff,
            budget: np.limit(),
        });
    }
    let threshold = cfg.kappa_threshold();
    let rows: Vec<MomentRow> = (1..=cfg.y)
        .into_par_iter()
        .map(|k| {
            let kappa = factorize(k, sieve)
                .expect("k ≤ y ≤ sieve limit")
                .squarefull_part();
            let admissible = (kappa as f64) <= threshold;
            let count = {
                let mut acc = CompensatedSum::new();
                for n in 1..=cfg.x {
                    acc.add(
                        lambda
                            .lambda(n * n * n * n + k)
                            .expect("x⁴+k ≤ table limit"),
                    );
                }
                acc.total()
            };
            let expected = singular_series(k, cfg.cutoff, np)
                .expect("cutoff ≤ np limit")
                .value
                * cfg.x as f64;
            MomentRow {
                k,
                kappa,
                admissible,
                reducible: is_reducible_shift(k),
                count,
                expected,
                error: count - expected,
            }
        })
        .collect();
    // fixed-order reduction in ascending k
    let mut acc = CompensatedSum::new();
    for row in &rows {
        if row.admissible {
            acc.add(row.error * row.error);
        }
    }
    let m2 = acc.total() / (cfg.y as f64 * (cfg.x as f64) * (cfg.x as f64));
    Ok((m2, rows))
}

/// #{admissible k : |E(k)| > x/(log x)^B}; reducible k = 4m⁴ excluded
/// unless asked for.
pub fn exceptional_count(rows: &[MomentRow], x: u64, b: f64, include_reducible: bool) -> usize {
    let threshold = x as f64 / (x as f64).ln().powf(b);
    rows.iter()
        .filter(|r| r.admissible && (include_reducible || !r.reducible))
        .filter(|r| r.error.abs() > threshold)
        .count()
}

/// Percentiles of |E(k)| over admissible rows: (p50, p90, p99, max).
/// Empty filter gives zeros.
pub fn error_percentiles(rows: &[MomentRow]) -> (f64, f64, f64, f64) {
    let mut errs: Vec<f64> = rows
        .iter()
        .filter(|r| r.admissible)
        .map(|r| r.error.abs())
        .collect();
    if errs.is_empty() {
        return (0.0, 0.0, 0.0, 0.0);
    }
    errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pick = |p: f64| errs[((errs.len() - 1) as f64 * p).round() as usize];
    (pick(0.50), pick(0.90), pick(0.99), errs[errs.len() - 1])
}

/// Run [`second_moment`] at each x with y = x⁴, sharing the quartic
/// tables; sieves are rebuilt per x (they are the dominant memory).
pub fn decay_trend(xs: &[u64], template: &MomentConfig, np: &NpTables) -> Result<Vec<(u64, f64)>> {
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        let cfg = MomentConfig {
            x,
            y: x
                .checked_pow(4)
                .ok_or_else(|| QplError::Config("x⁴ overflows".into()))?,
            ..template.clone()
        };
        let sieve = SieveTables::build(cfg.x.pow(4) + cfg.y)?;
        let lambda = LambdaTable::build(&sieve);
        let (m2, _) = second_moment(&cfg, &sieve, &lambda, np)?;
        out.push((x, m2));
    }
    Ok(out)
}
