//! The singular series 𝔖(k) = ∏_{p>2} (1 − (n_p−1)/(p−1)), its truncations
//! and convergence trace, the Dirichlet-series tail Ψ(k), and the
//! semi-analytic major-arc main-term check.
//!
//! The product converges only conditionally, so a point value at one cutoff
//! is not trustworthy on its own: every [`SingularValue`] carries partial
//! products at the P/10, P/4, P/2 and P checkpoints so consumers can see
//! stabilisation. All odd primes enter the product, both residue classes
//! mod 4; no factor can vanish because n_p ≤ 4 < p for p > 3 and n₃ ≤ 2.
//!
//! k = 4m⁴ is the one positive shift that makes n⁴ + k reducible over ℚ
//! (n⁴+4m⁴ = (n²−2mn+2m²)(n²+2mn+2m²)); those k are flagged because the
//! pointwise prime count collapses there while 𝔖(k) stays positive.

use std::path::Path;

use rayon::prelude::*;

use crate::arith::{factorize_u64, gcd, integer_nth_root, mobius};
use crate::error::QplError;
use crate::expsums::{e_frac, MajorArcs};
use crate::residues::QuarticTable;
use crate::summation::{ComplexSum, CompensatedSum};
use crate::Result;

/// Quartic count tables for every odd prime up to a bound, plus the prime
/// list itself. Built once, shared read-only across sweeps.
pub struct NpTables {
    limit: u64,
    primes: Vec<u64>,
    tables: Vec<QuarticTable>,
    /// p → index+1 into `primes`/`tables`; 0 marks non-primes
    index: Vec<u32>,
}

impl NpTables {
    /// Build tables for all odd primes ≤ limit (parallel per prime,
    /// deterministic order).
    pub fn build(limit: u64) -> Result<Self> {
        let primes: Vec<u64> = (3..=limit.max(2))
            .filter(|&n| n % 2 == 1 && crate::arith::is_prime_u64(n))
            .collect();
        let tables: Vec<QuarticTable> = primes
            .par_iter()
            .map(|&p| QuarticTable::build(p))
            .collect::<Result<_>>()?;
        let mut index = vec![0u32; (limit + 1) as usize];
        for (i, &p) in primes.iter().enumerate() {
            index[p as usize] = (i + 1) as u32;
        }
        Ok(NpTables {
            limit,
            primes,
            tables,
            index,
        })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Odd primes ≤ limit, ascending.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// n_p for an odd prime p ≤ limit.
    pub fn np(&self, p: u64, k: i64) -> Option<u32> {
        if p > self.limit {
            return None;
        }
        let idx = self.index[p as usize];
        if idx == 0 {
            return None;
        }
        Some(self.tables[(idx - 1) as usize].np(k))
    }

    /// Serialize into the shared binary container: magic "QPL1", section
    /// tag "QT4\0", the prime bound, then per prime its value and bitmap.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let mut buf = Vec::new();
        buf.extend_from_slice(crate::arith::CACHE_MAGIC);
        buf.extend_from_slice(QUARTIC_SECTION_TAG);
        buf.extend_from_slice(&self.limit.to_le_bytes());
        buf.extend_from_slice(&(self.primes.len() as u64).to_le_bytes());
        for (&p, table) in self.primes.iter().zip(&self.tables) {
            buf.extend_from_slice(&p.to_le_bytes());
            for &w in table.words() {
                buf.extend_from_slice(&w.to_le_bytes());
            }
        }
        std::fs::write(path, &buf)?;
        Ok(())
    }

    /// Load a cache written for exactly this prime bound; any mismatch
    /// returns None so the caller rebuilds.
    pub fn read_cache(path: &Path, limit: u64) -> Option<Self> {
        let bytes = std::fs::read(path).ok()?;
        let mut at = 0usize;
        let take = |at: &mut usize, n: usize| -> Option<&[u8]> {
            let s = bytes.get(*at..*at + n)?;
            *at += n;
            Some(s)
        };
        if take(&mut at, 4)? != crate::arith::CACHE_MAGIC {
            return None;
        }
        if take(&mut at, 4)? != QUARTIC_SECTION_TAG {
            return None;
        }
        let cached_limit = u64::from_le_bytes(take(&mut at, 8)?.try_into().ok()?);
        if cached_limit != limit {
            return None;
        }
        let count = u64::from_le_bytes(take(&mut at, 8)?.try_into().ok()?) as usize;
        let mut primes = Vec::with_capacity(count);
        let mut tables = Vec::with_capacity(count);
        for _ in 0..count {
            let p = u64::from_le_bytes(take(&mut at, 8)?.try_into().ok()?);
            if p < 3 || p % 2 == 0 || p > limit {
                return None;
            }
            let n_words = (p as usize).div_ceil(64);
            let mut words = Vec::with_capacity(n_words);
            for _ in 0..n_words {
                words.push(u64::from_le_bytes(take(&mut at, 8)?.try_into().ok()?));
            }
            primes.push(p);
            tables.push(QuarticTable::from_raw(p, words));
        }
        if at != bytes.len() {
            return None; // trailing garbage
        }
        let mut index = vec![0u32; (limit + 1) as usize];
        for (i, &p) in primes.iter().enumerate() {
            index[p as usize] = (i + 1) as u32;
        }
        Some(NpTables {
            limit,
            primes,
            tables,
            index,
        })
    }

    /// Load from cache or build and (re)write it; returns the tables and
    /// whether the cache was hit.
    pub fn load_or_build(limit: u64, cache: Option<&Path>) -> Result<(Self, bool)> {
        if let Some(path) = cache {
            if let Some(t) = Self::read_cache(path, limit) {
                return Ok((t, true));
            }
        }
        let t = Self::build(limit)?;
        if let Some(path) = cache {
            t.write_cache(path)?;
        }
        Ok((t, false))
    }
}

/// Section tag distinguishing quartic tables inside the "QPL1" container.
const QUARTIC_SECTION_TAG: &[u8; 4] = b"QT4\0";

/// One truncated singular-series evaluation with its convergence trace.
#[derive(Debug, Clone)]
pub struct SingularValue {
    pub k: u64,
    pub cutoff: u64,
    pub value: f64,
    /// partial products at the P/10, P/4, P/2, P checkpoints
    pub trace: Vec<(u64, f64)>,
}

/// Truncated tail Ψ(k) over square-free odd q in (Q1, Qmax].
#[derive(Debug, Clone)]
pub struct PsiValue {
    pub k: u64,
    pub q1: f64,
    pub qmax: f64,
    pub value: f64,
}

/// 𝔖 truncated at P: product of 1 − (n_p−1)/(p−1) over odd p ≤ P in
/// increasing order. Resource error when the tables stop short of P.
pub fn singular_series(k: u64, cutoff: u64, tables: &NpTables) -> Result<SingularValue> {
    if cutoff > tables.limit() {
        return Err(QplError::Resource {
            what: "quartic tables for the singular series",
            needed: cutoff,
            budget: tables.limit(),
        });
    }
    let checkpoints = [cutoff / 10, cutoff / 4, cutoff / 2, cutoff];
    let mut trace = Vec::with_capacity(4);
    let mut next_cp = 0usize;
    let mut value = 1.0f64;
    for (&p, table) in tables.primes.iter().zip(&tables.tables) {
        if p > cutoff {
            break;
        }
        while next_cp < 4 && p > checkpoints[next_cp] {
            trace.push((checkpoints[next_cp], value));
            next_cp += 1;
        }
        let np = table.np(k as i64) as f64;
        let factor = 1.0 - (np - 1.0) / (p as f64 - 1.0);
        debug_assert!(factor > 0.0 && factor <= 1.0 + 3.0 / (p as f64 - 1.0));
        value *= factor;
    }
    while next_cp < 4 {
        trace.push((checkpoints[next_cp], value));
        next_cp += 1;
    }
    debug_assert!(value > 0.0);
    Ok(SingularValue {
        k,
        cutoff,
        value,
        trace,
    })
}

/// Convergence diagnostic |𝔖_{2P}(k) − 𝔖_P(k)|; needs tables to 2P.
pub fn truncation_delta(k: u64, cutoff: u64, tables: &NpTables) -> Result<f64> {
    let a = singular_series(k, cutoff, tables)?.value;
    let b = singular_series(k, 2 * cutoff, tables)?.value;
    Ok((b - a).abs())
}

/// Ψ(k) truncated to square-free odd q ∈ (Q1, Qmax]:
/// Σ μ(q)/φ(q) ∏_{p|q} (n_p − 1). Terms touching a prime with n_p = 1
/// vanish and are skipped.
pub fn psi_tail(k: u64, q1: f64, qmax: f64, tables: &NpTables) -> Result<PsiValue> {
    if qmax < q1 {
        return Err(QplError::Argument(format!(
            "psi_tail needs Qmax ≥ Q1, got Q1={q1}, Qmax={qmax}"
        )));
    }
    if qmax > tables.limit() as f64 {
        return Err(QplError::Resource {
            what: "quartic tables for the Ψ tail",
            needed: qmax.ceil() as u64,
            budget: tables.limit(),
        });
    }
    let lo = q1.floor() as u64 + 1;
    let hi = qmax.floor() as u64;
    let mut acc = CompensatedSum::new();
    let mut q = lo | 1; // odd q only; even q vanish through n₂ = 1
    while q <= hi {
        let f = factorize_u64(q);
        if f.is_squarefree() {
            let mut num = 1.0f64;
            let mut valid = true;
            for &(p, _) in &f.factors {
                match tables.np(p, k as i64) {
                    Some(np) => num *= np as f64 - 1.0,
                    None => {
                        valid = false;
                        break;
                    }
                }
                if num == 0.0 {
                    break;
                }
            }
            if valid && num != 0.0 {
                acc.add(mobius(q) as f64 / f.euler_phi() as f64 * num);
            }
        }
        q += 2;
    }
    Ok(PsiValue {
        k,
        q1,
        qmax,
        value: acc.total(),
    })
}

/// sin(2πδt)/(πt), the exact β-integral of e(βt) over |β| < δ, with the
/// t = 0 limit 2δ.
fn beta_window_kernel(delta: f64, t: i64) -> f64 {
    if t == 0 {
        2.0 * delta
    } else {
        let tf = t as f64;
        (2.0 * std::f64::consts::PI * delta * tf).sin() / (std::f64::consts::PI * tf)
    }
}

/// ∫_𝔐 T₁(α)T₂(α)e(−kα) dα evaluated exactly arc by arc: the β integral of
/// each (m, n) pair collapses to the window kernel at t = m − n⁴ − k, and
/// the rational phases assemble from μ(q)/φ(q), e(−ak/q), and the
/// fourth-power unit sums mod q₁*. Cost is O(#arcs · x · z); intended for
/// small x.
pub fn main_term_integral(k: u64, x: u64, arcs: &MajorArcs) -> Result<f64> {
    let z = x
        .checked_pow(4)
        .and_then(|v| v.checked_add(k))
        .ok_or_else(|| QplError::Range("x⁴ + k overflows".into()))?;
    let mut total = ComplexSum::new();
    for arc in &arcs.arcs {
        let q = arc.q;
        let mu = mobius(q) as f64;
        if mu == 0.0 {
            continue;
        }
        let phi_q = crate::arith::euler_phi(q) as f64;
        let delta = arc.halfwidth;
        let coef_arc = e_frac(-((arc.a * (k % q)) as f64) / q as f64) * (mu / phi_q);

        let mut arc_sum = ComplexSum::new();
        for d in (1..=q).filter(|d| q % d == 0) {
            let q_star = q / d;
            let d3 = d * d * d;
            let g = gcd(d3, q_star);
            let d_star = d3 / g;
            let q1_star = q_star / g;
            let phi1 = crate::arith::euler_phi(q1_star) as f64;

            // Σ_{(ℓ,q₁*)=1} e(−a d* ℓ⁴/q₁*)
            let mut w = ComplexSum::new();
            for l in 0..q1_star {
                if gcd(l, q1_star) != 1 {
                    continue;
                }
                let l2 = crate::arith::mul_mod(l, l, q1_star);
                let l4 = crate::arith::mul_mod(l2, l2, q1_star);
                let e4 = crate::arith::mul_mod(
                    crate::arith::mul_mod(arc.a % q1_star, d_star % q1_star, q1_star),
                    l4,
                    q1_star,
                );
                w.add(e_frac(-(e4 as f64) / q1_star as f64));
            }

            // Σ_{n≤x, (n,q)=d} Σ_{m≤z} kernel(m − n⁴ − k)
            let mut kernel_sum = CompensatedSum::new();
            for n in 1..=x {
                if gcd(n, q) != d {
                    continue;
                }
                let target = (n * n * n * n + k) as i64;
                for m in 1..=z {
                    kernel_sum.add(beta_window_kernel(delta, m as i64 - target));
                }
            }
            arc_sum.add(w.total() * kernel_sum.total() / phi1);
        }
        total.add(coef_arc * arc_sum.total());
    }
    Ok(total.total().re)
}

/// Is k = 4m⁴ for some positive integer m (the one reducible shift)?
pub fn is_reducible_shift(k: u64) -> bool {
    if !k.is_multiple_of(4) {
        return false;
    }
    let m4 = k / 4;
    if m4 == 0 {
        return false;
    }
    let m = integer_nth_root(m4, 4);
    m * m * m * m == m4
}
