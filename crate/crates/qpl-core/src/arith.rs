//! Elementary number-theoretic kernels: the smallest-prime-factor sieve,
//! von Mangoldt Λ, the multiplicative functions μ, φ, ω, factorization,
//! and the square-full part κ.
//!
//! A smallest-prime-factor (spf) table is used instead of a plain primality
//! bitmap because Λ needs to recognise prime *powers*, which takes a full
//! factorization. One table is built once per run (and cached to disk) and
//! then shared read-only by every sweep.
//!
//! κ follows the ℓ² convention: n = ℓ²m with m square-free, κ(n) = ℓ².
//! For n = 8 this gives κ = 4, not the "powerful part" 8.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::QplError;
use crate::Result;

/// Default cap on sieve size: 2²⁸ entries ≈ 1 GiB of u32 spf values.
pub const DEFAULT_SIEVE_BUDGET: u64 = 1 << 28;

/// Magic prefix of the binary cache container.
pub const CACHE_MAGIC: &[u8; 4] = b"QPL1";

/// Prime-exponent factorization of a positive integer.
///
/// Invariants: primes strictly increasing, exponents ≥ 1, and the product
/// of prime^exponent equals `n`. `n = 1` has an empty factor list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub n: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// μ(n) from the factorization: 0 on square divisors, else (−1)^ω.
    pub fn mobius(&self) -> i32 {
        if self.factors.iter().any(|&(_, e)| e >= 2) {
            0
        } else if self.factors.len().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    /// Euler's totient φ(n).
    pub fn euler_phi(&self) -> u64 {
        let mut phi = 1u64;
        for &(p, e) in &self.factors {
            phi *= p.pow(e - 1) * (p - 1);
        }
        phi
    }

    /// Number of distinct prime factors ω(n).
    pub fn omega(&self) -> u32 {
        self.factors.len() as u32
    }

    /// Square-full part κ(n) = ∏ p^{2⌊e/2⌋}: the unique ℓ² with n = ℓ²m,
    /// m square-free.
    pub fn squarefull_part(&self) -> u64 {
        let mut k = 1u64;
        for &(p, e) in &self.factors {
            k *= p.pow(e - (e % 2));
        }
        k
    }

    /// True when n is square-free (κ(n) = 1).
    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }
}

/// Smallest-prime-factor table for 2..=limit.
///
/// `spf(n)` is the least prime dividing n; `spf(p) = p` exactly when p is
/// prime. Entries are u32, so `limit` must stay below 2³². Immutable after
/// construction and safe for unlimited concurrent readers.
#[derive(Debug)]
pub struct SieveTables {
    limit: u64,
    spf: Vec<u32>,
}

impl SieveTables {
    /// Build the table for 2..=limit under the default memory budget.
    pub fn build(limit: u64) -> Result<Self> {
        Self::build_with_budget(limit, DEFAULT_SIEVE_BUDGET)
    }

    /// Build the table with an explicit entry budget.
    pub fn build_with_budget(limit: u64, budget: u64) -> Result<Self> {
        if limit < 2 {
            return Err(QplError::Argument(format!(
                "sieve limit must be at least 2, got {limit}"
            )));
        }
        if limit > budget || limit >= u32::MAX as u64 {
            return Err(QplError::Resource {
                what: "smallest-prime-factor sieve",
                needed: limit,
                budget: budget.min(u32::MAX as u64 - 1),
            });
        }
        let n = (limit - 1) as usize; // entries for 2..=limit
        let mut spf = vec![0u32; n];
        let mut i = 2u64;
        while i <= limit {
            if spf[(i - 2) as usize] == 0 {
                // i is prime; mark it and every unmarked multiple
                let mut j = i;
                while j <= limit {
                    let slot = &mut spf[(j - 2) as usize];
                    if *slot == 0 {
                        *slot = i as u32;
                    }
                    j += i;
                }
            }
            i += 1;
        }
        Ok(SieveTables { limit, spf })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Smallest prime factor of n (2 ≤ n ≤ limit).
    pub fn spf(&self, n: u64) -> Result<u64> {
        if n < 2 || n > self.limit {
            return Err(QplError::Range(format!(
                "spf({n}) outside sieve range 2..={}",
                self.limit
            )));
        }
        Ok(self.spf[(n - 2) as usize] as u64)
    }

    /// Raw spf entries for 2..=limit, in order.
    pub fn entries(&self) -> &[u32] {
        &self.spf
    }

    /// True when n is prime (n ≤ limit).
    pub fn is_prime(&self, n: u64) -> Result<bool> {
        if n < 2 {
            return Ok(false);
        }
        Ok(self.spf(n)? == n)
    }

    /// All primes in 2..=limit, ascending.
    pub fn primes(&self) -> Vec<u64> {
        (2..=self.limit)
            .filter(|&n| self.spf[(n - 2) as usize] as u64 == n)
            .collect()
    }

    /// Serialize to the binary cache format: magic "QPL1", 8-byte LE limit,
    /// then one 4-byte LE spf entry per n in 2..=limit.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let mut buf = Vec::with_capacity(12 + 4 * self.spf.len());
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&self.limit.to_le_bytes());
        for &e in &self.spf {
            buf.extend_from_slice(&e.to_le_bytes());
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }

    /// Try to load a cache written for exactly `limit`. Any mismatch
    /// (missing file, bad magic, other limit, truncation) returns None so
    /// the caller rebuilds.
    pub fn read_cache(path: &Path, limit: u64) -> Option<Self> {
        let mut f = std::fs::File::open(path).ok()?;
        let mut header = [0u8; 12];
        f.read_exact(&mut header).ok()?;
        if &header[0..4] != CACHE_MAGIC {
            return None;
        }
        let cached_limit = u64::from_le_bytes(header[4..12].try_into().ok()?);
        if cached_limit != limit || limit < 2 {
            return None;
        }
        let n = (limit - 1) as usize;
        let mut raw = vec![0u8; 4 * n];
        f.read_exact(&mut raw).ok()?;
        // reject trailing garbage
        let mut probe = [0u8; 1];
        if f.read(&mut probe).ok()? != 0 {
            return None;
        }
        let spf = raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Some(SieveTables { limit, spf })
    }

    /// Load from cache or build and (re)write the cache. Returns the table
    /// and whether the cache was hit.
    pub fn load_or_build(limit: u64, budget: u64, cache: Option<&Path>) -> Result<(Self, bool)> {
        if let Some(path) = cache {
            if let Some(t) = Self::read_cache(path, limit) {
                return Ok((t, true));
            }
        }
        let t = Self::build_with_budget(limit, budget)?;
        if let Some(path) = cache {
            t.write_cache(path)?;
        }
        Ok((t, false))
    }
}

/// Λ(n) from the sieve: log p when n = pᵉ, else 0. Λ(1) = 0.
pub fn von_mangoldt(n: u64, t: &SieveTables) -> Result<f64> {
    if n == 0 || n > t.limit {
        return Err(QplError::Range(format!(
            "von_mangoldt({n}) outside sieve range 1..={}",
            t.limit
        )));
    }
    if n == 1 {
        return Ok(0.0);
    }
    let p = t.spf(n)?;
    let mut m = n;
    while m.is_multiple_of(p) {
        m /= p;
    }
    if m == 1 {
        Ok((p as f64).ln())
    } else {
        Ok(0.0)
    }
}

/// Λ(n) without a sieve: strip n to its power-free base, then test the base
/// for primality. Deterministic for all u64.
pub fn von_mangoldt_large(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let base = power_free_base(n);
    if is_prime_u64(base) {
        (base as f64).ln()
    } else {
        0.0
    }
}

/// The unique b that is not a perfect power with n = bᵉ for some e ≥ 1.
fn power_free_base(n: u64) -> u64 {
    debug_assert!(n >= 2);
    for e in (2..=63u32).rev() {
        if (n >> (e - 1)) == 0 {
            continue; // base would have to be < 2
        }
        let r = integer_nth_root(n, e);
        if checked_pow(r, e) == Some(n) {
            return r;
        }
    }
    n
}

fn checked_pow(b: u64, e: u32) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..e {
        acc = acc.checked_mul(b)?;
    }
    Some(acc)
}

/// ⌊n^{1/e}⌋ via a float seed plus exact integer correction.
pub fn integer_nth_root(n: u64, e: u32) -> u64 {
    if n == 0 || e == 0 {
        return if e == 0 { 1 } else { 0 };
    }
    if e == 1 {
        return n;
    }
    let mut r = (n as f64).powf(1.0 / e as f64).round() as u64;
    // correct the float seed: largest r with r^e <= n
    while r > 0 && checked_pow(r, e).is_none_or(|v| v > n) {
        r -= 1;
    }
    while checked_pow(r + 1, e).is_some_and(|v| v <= n) {
        r += 1;
    }
    r
}

/// Deterministic Miller–Rabin for u64 (fixed 12-witness set).
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// a·b mod m with u128 intermediates.
#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// a^e mod m by square-and-multiply.
pub fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    r
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = b;
        b = a % b;
        a = t;
    }
    a
}

/// Factorize via the sieve (1 ≤ n ≤ limit).
pub fn factorize(n: u64, t: &SieveTables) -> Result<Factorization> {
    if n == 0 || n > t.limit {
        return Err(QplError::Range(format!(
            "factorize({n}) outside sieve range 1..={}",
            t.limit
        )));
    }
    let original = n;
    let mut m = n;
    let mut factors = Vec::new();
    while m > 1 {
        let p = t.spf(m)?;
        let mut e = 0u32;
        while m.is_multiple_of(p) {
            m /= p;
            e += 1;
        }
        factors.push((p, e));
    }
    Ok(Factorization {
        n: original,
        factors,
    })
}

/// Factorize by trial division (desk-scale inputs; no sieve required).
pub fn factorize_u64(n: u64) -> Factorization {
    assert!(n >= 1, "factorize_u64 needs n >= 1");
    let original = n;
    let mut m = n;
    let mut factors = Vec::new();
    let mut d = 2u64;
    while d * d <= m {
        if m.is_multiple_of(d) {
            let mut e = 0u32;
            while m.is_multiple_of(d) {
                m /= d;
                e += 1;
            }
            factors.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if m > 1 {
        factors.push((m, 1));
    }
    Factorization {
        n: original,
        factors,
    }
}

/// μ(n) by trial division.
pub fn mobius(n: u64) -> i32 {
    factorize_u64(n).mobius()
}

/// φ(n) by trial division.
pub fn euler_phi(n: u64) -> u64 {
    factorize_u64(n).euler_phi()
}

/// ω(n) by trial division.
pub fn omega(n: u64) -> u32 {
    factorize_u64(n).omega()
}

/// κ(n) by trial division.
pub fn squarefull_part(n: u64) -> u64 {
    factorize_u64(n).squarefull_part()
}

/// Dense Λ table over 0..=limit plus its support (the prime powers),
/// extracted once so hot sums can skip the zeros.
pub struct LambdaTable {
    limit: u64,
    values: Vec<f64>,
    support: Vec<(u64, f64)>,
}

impl LambdaTable {
    pub fn build(t: &SieveTables) -> Self {
        let limit = t.limit();
        let mut values = vec![0.0f64; (limit + 1) as usize];
        let mut support = Vec::new();
        for &p in &t.primes() {
            let lp = (p as f64).ln();
            let mut q = p;
            loop {
                values[q as usize] = lp;
                support.push((q, lp));
                match q.checked_mul(p) {
                    Some(next) if next <= limit => q = next,
                    _ => break,
                }
            }
        }
        support.sort_unstable_by_key(|&(m, _)| m);
        LambdaTable {
            limit,
            values,
            support,
        }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Λ(n); range error beyond the table.
    pub fn lambda(&self, n: u64) -> Result<f64> {
        if n > self.limit {
            return Err(QplError::Range(format!(
                "lambda({n}) beyond table limit {}",
                self.limit
            )));
        }
        Ok(self.values[n as usize])
    }

    /// (m, Λ(m)) for every prime power m ≤ z, ascending.
    pub fn support_upto(&self, z: u64) -> &[(u64, f64)] {
        let end = self.support.partition_point(|&(m, _)| m <= z);
        &self.support[..end]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sieve_small_values_match_definition() {
        let t = SieveTables::build(10).unwrap();
        // spf for n = 2..10
        assert_eq!(t.entries(), &[2, 3, 2, 5, 2, 7, 2, 3, 2]);
    }

    #[test]
    fn sieve_smallest_case() {
        let t = SieveTables::build(2).unwrap();
        assert_eq!(t.entries(), &[2]);
    }

    #[test]
    fn sieve_large_prime_entry() {
        // trial-division oracle: 999983 is prime, so spf fixes it
        let n = 999_983u64;
        let mut d = 2;
        let mut is_prime = true;
        while d * d <= n {
            if n.is_multiple_of(d) {
                is_prime = false;
                break;
            }
            d += 1;
        }
        assert!(is_prime);
        let t = SieveTables::build(1_000_000).unwrap();
        assert_eq!(t.spf(n).unwrap(), n);
    }

    #[test]
    fn sieve_budget_error_names_budget() {
        let err = SieveTables::build_with_budget(1000, 100).unwrap_err();
        match err {
            QplError::Resource { budget, .. } => assert_eq!(budget, 100),
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn spf_agrees_with_trial_division() {
        let t = SieveTables::build(5000).unwrap();
        for n in 2..=5000u64 {
            let mut d = 2;
            while n % d != 0 {
                d += 1;
            }
            assert_eq!(t.spf(n).unwrap(), d, "spf({n})");
        }
    }

    #[test]
    fn von_mangoldt_prime_powers_and_composites() {
        let t = SieveTables::build(100).unwrap();
        assert!((von_mangoldt(8, &t).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(von_mangoldt(6, &t).unwrap(), 0.0);
        assert_eq!(von_mangoldt(1, &t).unwrap(), 0.0);
        assert!(von_mangoldt(101, &t).is_err());
    }

    #[test]
    fn von_mangoldt_divisor_sum_is_log() {
        // Σ_{d|n} Λ(d) = log n, within 1e-9, for all n ≤ 10^4
        let t = SieveTables::build(10_000).unwrap();
        for n in 1..=10_000u64 {
            let mut s = 0.0;
            for d in 1..=n {
                if n % d == 0 {
                    s += von_mangoldt(d, &t).unwrap();
                }
            }
            assert!(
                (s - (n as f64).ln()).abs() < 1e-9,
                "divisor sum of Λ at n={n}: {s}"
            );
        }
    }

    #[test]
    fn von_mangoldt_large_matches_sieve() {
        let t = SieveTables::build(100_000).unwrap();
        for n in 1..=100_000u64 {
            let a = von_mangoldt(n, &t).unwrap();
            let b = von_mangoldt_large(n);
            assert!((a - b).abs() < 1e-15, "Λ({n}): sieve {a} vs large {b}");
        }
    }

    #[test]
    fn von_mangoldt_large_examples() {
        assert!((von_mangoldt_large(1024) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(von_mangoldt_large(15), 0.0);
        // 10^6 + 3 by trial division
        let n = 1_000_003u64;
        let mut d = 2;
        let mut prime = true;
        while d * d <= n {
            if n.is_multiple_of(d) {
                prime = false;
                break;
            }
            d += 1;
        }
        let expected = if prime { (n as f64).ln() } else { 0.0 };
        assert!((von_mangoldt_large(n) - expected).abs() < 1e-12);
    }

    #[test]
    fn factorization_examples() {
        let t = SieveTables::build(1000).unwrap();
        assert_eq!(
            factorize(12, &t).unwrap().factors,
            vec![(2u64, 2u32), (3, 1)]
        );
        assert_eq!(factorize(1, &t).unwrap().factors, vec![]);
        assert_eq!(
            factorize(784, &t).unwrap().factors,
            vec![(2u64, 4u32), (7, 2)]
        );
    }

    #[test]
    fn factorization_invariants_exhaustive() {
        let t = SieveTables::build(2000).unwrap();
        for n in 1..=2000u64 {
            let f = factorize(n, &t).unwrap();
            let mut prod = 1u64;
            let mut last = 0u64;
            for &(p, e) in &f.factors {
                assert!(p > last, "primes not increasing in {n}");
                assert!(e >= 1);
                last = p;
                prod *= p.pow(e);
            }
            assert_eq!(prod, n);
            assert_eq!(f, factorize_u64(n));
        }
    }

    #[test]
    fn multiplicative_function_examples() {
        assert_eq!(mobius(10), 1);
        assert_eq!(mobius(12), 0);
        assert_eq!(mobius(30), -1);
        assert_eq!(euler_phi(1), 1);
        assert_eq!(euler_phi(9), 6);
        assert_eq!(omega(12), 2);
    }

    #[test]
    fn multiplicativity_on_coprime_pairs() {
        // exhaustive for all coprime m, n ≤ 300
        for m in 1..=300u64 {
            for n in 1..=300u64 {
                if gcd(m, n) != 1 {
                    continue;
                }
                assert_eq!(mobius(m * n), mobius(m) * mobius(n), "mu({m}*{n})");
                assert_eq!(
                    euler_phi(m * n),
                    euler_phi(m) * euler_phi(n),
                    "phi({m}*{n})"
                );
            }
        }
    }

    #[test]
    fn squarefull_part_examples() {
        assert_eq!(squarefull_part(1), 1);
        assert_eq!(squarefull_part(12), 4);
        assert_eq!(squarefull_part(18), 9);
        assert_eq!(squarefull_part(16), 16);
        // the ℓ² convention: κ(8) = 4, not 8
        assert_eq!(squarefull_part(8), 4);
    }

    #[test]
    fn squarefull_part_decomposition_properties() {
        for n in 1..=5000u64 {
            let k = squarefull_part(n);
            let r = integer_nth_root(k, 2);
            assert_eq!(r * r, k, "κ({n}) = {k} is not a perfect square");
            assert_eq!(n % k, 0);
            assert_eq!(mobius(n / k).abs(), 1, "n/κ(n) not square-free at {n}");
        }
    }

    #[test]
    fn primality_matches_sieve() {
        let t = SieveTables::build(20_000).unwrap();
        for n in 0..=20_000u64 {
            let sieve_says = n >= 2 && t.is_prime(n).unwrap();
            assert_eq!(is_prime_u64(n), sieve_says, "is_prime({n})");
        }
    }

    #[test]
    fn nth_root_exact_boundaries() {
        assert_eq!(integer_nth_root(u64::MAX, 2), 4294967295);
        assert_eq!(integer_nth_root(81, 4), 3);
        assert_eq!(integer_nth_root(80, 4), 2);
        for b in 2..=100u64 {
            for e in 2..=6u32 {
                if let Some(n) = checked_pow(b, e) {
                    assert_eq!(integer_nth_root(n, e), b);
                    assert_eq!(integer_nth_root(n - 1, e), b - 1);
                }
            }
        }
    }

    #[test]
    fn cache_roundtrip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sieve.qpl");
        let t = SieveTables::build(5000).unwrap();
        t.write_cache(&path).unwrap();

        let loaded = SieveTables::read_cache(&path, 5000).expect("cache should load");
        assert_eq!(loaded.entries(), t.entries());

        // wrong limit → miss
        assert!(SieveTables::read_cache(&path, 6000).is_none());

        // corrupt magic → miss
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(SieveTables::read_cache(&path, 5000).is_none());

        // truncated body → miss
        let t2 = SieveTables::build(5000).unwrap();
        t2.write_cache(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(SieveTables::read_cache(&path, 5000).is_none());

        // load_or_build rebuilds and reports the miss, then hits
        let (_, hit) = SieveTables::load_or_build(5000, DEFAULT_SIEVE_BUDGET, Some(&path)).unwrap();
        assert!(!hit);
        let (_, hit) = SieveTables::load_or_build(5000, DEFAULT_SIEVE_BUDGET, Some(&path)).unwrap();
        assert!(hit);
    }

    #[test]
    fn lambda_table_matches_direct_evaluation() {
        let t = SieveTables::build(3000).unwrap();
        let lam = LambdaTable::build(&t);
        for n in 0..=3000u64 {
            let direct = if n == 0 {
                0.0
            } else {
                von_mangoldt(n, &t).unwrap()
            };
            assert_eq!(lam.lambda(n).unwrap(), direct, "Λ({n})");
        }
        // support holds exactly the nonzero entries, ascending
        let sup = lam.support_upto(3000);
        assert!(sup.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(
            sup.len(),
            (1..=3000u64)
                .filter(|&n| von_mangoldt(n, &t).unwrap() != 0.0)
                .count()
        );
        assert!(lam.lambda(3001).is_err());
    }
}
