//! Quartic residue structure mod p and mod q.
//!
//! Two independent routes to the local solution count
//! n_p = #{n mod p : n⁴ + k ≡ 0 (mod p)}:
//!
//! * [`np_direct`] reads a per-prime table of attained fourth powers. For
//!   an odd prime the nonzero attained values are hit by exactly
//!   d = gcd(p−1, 4) residues each, so the table is a membership bitmap
//!   plus the constant d (~p bits per prime).
//! * [`np_via_characters`] evaluates Σ_{j<d} χʲ(−k) for a character χ of
//!   exact order d, built from a primitive root. Character values of order
//!   dividing 4 are table-exact elements of {1, i, −1, −i}; the imaginary
//!   part of the sum must vanish to 1e−6 or the call reports a
//!   construction bug instead of rounding it away.
//!
//! [`CharacterGroup`] realises the full character group mod q through the
//! CRT decomposition of (ℤ/q)*: one cyclic coordinate per odd prime power,
//! the two-generator convention ⟨−1⟩ × ⟨5⟩ at powers of 2 above 4, and
//! precomputed discrete-log tables per factor, so evaluation is O(number
//! of prime-power factors).

use std::sync::Arc;

use num_complex::Complex64;

use crate::arith::{factorize_u64, gcd, mul_mod, pow_mod};
use crate::error::QplError;
use crate::Result;

/// Tolerance above which a nonreal n_p character sum is treated as a bug.
pub const NP_IMAG_TOL: f64 = 1e-6;

/// Moduli up to this size are scanned directly in
/// [`is_fourth_power_residue`]; larger ones go through CRT factors.
const DIRECT_SCAN_MAX: u64 = 1 << 16;

/// Per-prime table of fourth-power residues.
///
/// `contains(r)` says whether r is attained by m⁴ mod p; every attained
/// nonzero value is attained by exactly `d = gcd(p−1,4)` residues, and 0
/// by exactly one.
pub struct QuarticTable {
    p: u64,
    d: u32,
    words: Vec<u64>,
}

impl QuarticTable {
    /// One pass m = 0..p−1 marking m⁴ mod p. Requires an odd prime.
    pub fn build(p: u64) -> Result<Self> {
        if p < 3 || p.is_multiple_of(2) || !crate::arith::is_prime_u64(p) {
            return Err(QplError::Argument(format!(
                "quartic table needs an odd prime, got {p}"
            )));
        }
        let d = gcd(p - 1, 4) as u32;
        let mut words = vec![0u64; (p as usize).div_ceil(64)];
        for m in 0..p {
            let r = mul_mod(mul_mod(m, m, p), mul_mod(m, m, p), p);
            words[(r / 64) as usize] |= 1 << (r % 64);
        }
        Ok(QuarticTable { p, d, words })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// The constant d = gcd(p−1, 4): solutions per attained nonzero value.
    pub fn count_nonzero(&self) -> u32 {
        self.d
    }

    /// Is r (already reduced mod p) a fourth power mod p?
    pub fn contains(&self, r: u64) -> bool {
        debug_assert!(r < self.p);
        self.words[(r / 64) as usize] >> (r % 64) & 1 == 1
    }

    /// #{m mod p : m⁴ ≡ r}: 1 at r = 0, d at attained nonzero r, else 0.
    pub fn count(&self, r: u64) -> u32 {
        if r == 0 {
            1
        } else if self.contains(r) {
            self.d
        } else {
            0
        }
    }

    /// n_p for this prime: solutions of n⁴ + k ≡ 0 (mod p).
    pub fn np(&self, k: i64) -> u32 {
        let r = (-k).rem_euclid(self.p as i64) as u64;
        self.count(r)
    }

    /// Raw bitmap words, for the binary cache.
    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    /// Rebuild from cached words; the caller guarantees p is an odd prime
    /// and the word count matches.
    pub(crate) fn from_raw(p: u64, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), (p as usize).div_ceil(64));
        QuarticTable {
            p,
            d: gcd(p - 1, 4) as u32,
            words,
        }
    }
}

/// Build the fourth-power table for an odd prime.
pub fn build_quartic_table(p: u64) -> Result<QuarticTable> {
    QuarticTable::build(p)
}

/// n_p by table lookup: equals 1 when p | k, else d or 0.
pub fn np_direct(p: u64, k: i64, table: &QuarticTable) -> u32 {
    debug_assert_eq!(table.p(), p, "table built for a different prime");
    table.np(k)
}

/// Least primitive root of an odd prime or odd prime power.
pub fn primitive_root(m: u64) -> Result<u64> {
    let f = factorize_u64(m.max(1));
    let ok = m >= 3 && f.factors.len() == 1 && f.factors[0].0 % 2 == 1;
    if !ok {
        return Err(QplError::Argument(format!(
            "{m} has no primitive root here (need an odd prime power ≥ 3)"
        )));
    }
    let phi = f.euler_phi();
    let phi_primes: Vec<u64> = factorize_u64(phi).factors.iter().map(|&(p, _)| p).collect();
    for g in 2..m {
        if gcd(g, m) != 1 {
            continue;
        }
        if phi_primes.iter().all(|&r| pow_mod(g, phi / r, m) != 1) {
            return Ok(g);
        }
    }
    unreachable!("odd prime power without a primitive root")
}

/// n_p through the character sum Σ_{j<d} χʲ(−k), χ of exact order
/// d = gcd(p−1, 4). Natural domain is p ∤ k; p | k is a domain error
/// pointing the caller at [`np_direct`].
pub fn np_via_characters(p: u64, k: i64) -> Result<u32> {
    if p < 3 || p.is_multiple_of(2) || !crate::arith::is_prime_u64(p) {
        return Err(QplError::Argument(format!(
            "np_via_characters needs an odd prime, got {p}"
        )));
    }
    let target = (-k).rem_euclid(p as i64) as u64;
    if target == 0 {
        return Err(QplError::Domain(format!(
            "p = {p} divides k; the character formula does not apply, use np_direct"
        )));
    }
    let d = gcd(p - 1, 4);
    let g = primitive_root(p)?;
    // discrete log of -k in base g
    let mut t0 = 0u64;
    let mut x = 1u64;
    while x != target {
        x = mul_mod(x, g, p);
        t0 += 1;
        debug_assert!(t0 < p);
    }
    // χ(g^t) = e(t/d); sum the d character powers at -k
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..d {
        sum += quarter_turn(j * t0, d);
    }
    if sum.im.abs() > NP_IMAG_TOL {
        return Err(QplError::Consistency(format!(
            "n_p character sum has imaginary part {} at p={p}, k={k}",
            sum.im
        )));
    }
    let rounded = sum.re.round();
    if (sum.re - rounded).abs() > NP_IMAG_TOL {
        return Err(QplError::Consistency(format!(
            "n_p character sum {} is not near an integer at p={p}, k={k}",
            sum.re
        )));
    }
    Ok(rounded as u32)
}

/// e(t/d) for d | 4: exact fourth roots of unity, no trigonometry.
fn quarter_turn(t: u64, d: u64) -> Complex64 {
    debug_assert!(d == 1 || d == 2 || d == 4);
    match (t % d, d) {
        (0, _) => Complex64::new(1.0, 0.0),
        (1, 2) => Complex64::new(-1.0, 0.0),
        (1, 4) => Complex64::new(0.0, 1.0),
        (2, 4) => Complex64::new(-1.0, 0.0),
        (3, 4) => Complex64::new(0.0, -1.0),
        _ => unreachable!(),
    }
}

/// e(num/den) for a reduced fraction, exact on denominators 1, 2, 4, 8.
pub(crate) fn root_of_unity(num: u64, den: u64) -> Complex64 {
    debug_assert!(num < den || den == 1);
    match den {
        1 => Complex64::new(1.0, 0.0),
        2 => Complex64::new(-1.0, 0.0),
        4 => quarter_turn(num, 4),
        8 => {
            const H: f64 = std::f64::consts::FRAC_1_SQRT_2;
            match num {
                1 => Complex64::new(H, H),
                3 => Complex64::new(-H, H),
                5 => Complex64::new(-H, -H),
                7 => Complex64::new(H, -H),
                _ => unreachable!("num must be odd for den 8"),
            }
        }
        _ => {
            let theta = 2.0 * std::f64::consts::PI * (num as f64) / (den as f64);
            Complex64::new(theta.cos(), theta.sin())
        }
    }
}

/// One cyclic coordinate of (ℤ/q)*.
#[derive(Debug, Clone, Copy)]
pub struct Coordinate {
    pub generator: u64,
    pub order: u64,
}

/// CRT component for one prime-power factor of q.
struct Component {
    modulus: u64,
    coords: Vec<Coordinate>,
    /// dlog[r] = exponents of r on this component's coordinates
    /// (u32::MAX, u32::MAX) marks non-units.
    dlog: Vec<[u32; 2]>,
}

const NO_DLOG: [u32; 2] = [u32::MAX, u32::MAX];

impl Component {
    fn for_odd_prime_power(p: u64, e: u32) -> Result<Self> {
        let m = p.pow(e);
        let g = primitive_root(m)?;
        let order = m / p * (p - 1);
        let mut dlog = vec![NO_DLOG; m as usize];
        let mut x = 1u64;
        for t in 0..order {
            dlog[x as usize] = [t as u32, 0];
            x = mul_mod(x, g, m);
        }
        Ok(Component {
            modulus: m,
            coords: vec![Coordinate {
                generator: g,
                order,
            }],
            dlog,
        })
    }

    fn for_power_of_two(e: u32) -> Self {
        let m = 1u64 << e;
        match e {
            1 => Component {
                modulus: 2,
                coords: vec![],
                dlog: vec![NO_DLOG, [0, 0]],
            },
            2 => {
                // (ℤ/4)* = ⟨3⟩
                let mut dlog = vec![NO_DLOG; 4];
                dlog[1] = [0, 0];
                dlog[3] = [1, 0];
                Component {
                    modulus: 4,
                    coords: vec![Coordinate {
                        generator: 3,
                        order: 2,
                    }],
                    dlog,
                }
            }
            _ => {
                // (ℤ/2^e)* = ⟨−1⟩ × ⟨5⟩
                let half = m >> 2;
                let mut dlog = vec![NO_DLOG; m as usize];
                let mut x = 1u64;
                for t in 0..half {
                    dlog[x as usize] = [0, t as u32];
                    dlog[(m - x) as usize] = [1, t as u32];
                    x = mul_mod(x, 5, m);
                }
                Component {
                    modulus: m,
                    coords: vec![
                        Coordinate {
                            generator: m - 1,
                            order: 2,
                        },
                        Coordinate {
                            generator: 5,
                            order: half,
                        },
                    ],
                    dlog,
                }
            }
        }
    }
}

/// Shared evaluation tables for the character group mod q.
pub struct CharacterGroup {
    q: u64,
    phi: u64,
    components: Vec<Component>,
    /// coordinate metadata flattened across components, in order
    coords: Vec<Coordinate>,
    /// e(j/φ(q)) for j < φ(q), exact at quarter and eighth turns
    roots: Vec<Complex64>,
}

impl CharacterGroup {
    pub fn new(q: u64) -> Result<Arc<Self>> {
        if q == 0 {
            return Err(QplError::Argument("modulus must be positive".into()));
        }
        let f = factorize_u64(q);
        let mut components = Vec::new();
        for &(p, e) in &f.factors {
            if p == 2 {
                components.push(Component::for_power_of_two(e));
            } else {
                components.push(Component::for_odd_prime_power(p, e)?);
            }
        }
        let phi = f.euler_phi();
        let coords: Vec<Coordinate> = components
            .iter()
            .flat_map(|c| c.coords.iter().copied())
            .collect();
        debug_assert_eq!(coords.iter().map(|c| c.order).product::<u64>(), phi);
        let mut roots = Vec::with_capacity(phi as usize);
        for j in 0..phi {
            let g = gcd(j, phi);
            roots.push(root_of_unity(j / g, phi / g));
        }
        Ok(Arc::new(CharacterGroup {
            q,
            phi,
            components,
            coords,
            roots,
        }))
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn phi(&self) -> u64 {
        self.phi
    }

    /// All φ(q) characters exactly once, principal first, in mixed-radix
    /// order of their exponent vectors.
    pub fn characters(self: &Arc<Self>) -> Vec<DirichletCharacter> {
        let n = self.coords.len();
        let mut out = Vec::with_capacity(self.phi as usize);
        let mut exps = vec![0u64; n];
        loop {
            out.push(DirichletCharacter::from_exponents(self, exps.clone()));
            // increment mixed-radix counter (last coordinate fastest)
            let mut i = n;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                exps[i] += 1;
                if exps[i] < self.coords[i].order {
                    break;
                }
                exps[i] = 0;
            }
        }
    }

    /// Exponents of n on the flattened coordinates; None when gcd(n, q) > 1.
    fn coordinates_of(&self, n: u64) -> Option<Vec<u64>> {
        let mut out = Vec::with_capacity(self.coords.len());
        for comp in &self.components {
            let r = (n % comp.modulus) as usize;
            let pair = comp.dlog[r];
            if pair == NO_DLOG {
                return None;
            }
            for (j, _) in comp.coords.iter().enumerate() {
                out.push(pair[j] as u64);
            }
        }
        Some(out)
    }
}

/// A Dirichlet character mod q, stored as exponents on the group's cyclic
/// coordinates. Completely multiplicative on units, 0 off units.
#[derive(Clone)]
pub struct DirichletCharacter {
    group: Arc<CharacterGroup>,
    exponents: Vec<u64>,
    order: u64,
}

impl DirichletCharacter {
    fn from_exponents(group: &Arc<CharacterGroup>, exponents: Vec<u64>) -> Self {
        let order = group
            .coords
            .iter()
            .zip(&exponents)
            .map(|(c, &a)| c.order / gcd(a, c.order))
            .fold(1u64, lcm);
        DirichletCharacter {
            group: Arc::clone(group),
            exponents,
            order,
        }
    }

    pub fn modulus(&self) -> u64 {
        self.group.q
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn is_principal(&self) -> bool {
        self.order == 1
    }

    /// Exponent on each cyclic coordinate, paired with its generator/order.
    pub fn components(&self) -> Vec<(Coordinate, u64)> {
        self.group
            .coords
            .iter()
            .copied()
            .zip(self.exponents.iter().copied())
            .collect()
    }

    /// χ(n) for n ≥ 0 (reduced mod q internally).
    pub fn eval(&self, n: u64) -> Complex64 {
        let r = n % self.group.q.max(1);
        match self.group.coordinates_of(if self.group.q == 1 { 0 } else { r }) {
            None => Complex64::new(0.0, 0.0),
            Some(ts) => {
                let phi = self.group.phi;
                let mut acc: u128 = 0;
                for ((c, &a), t) in self.group.coords.iter().zip(&self.exponents).zip(ts) {
                    acc += (a as u128) * (t as u128) * ((phi / c.order) as u128);
                }
                self.group.roots[(acc % phi as u128) as usize]
            }
        }
    }

    /// χ(n) for signed n.
    pub fn eval_int(&self, n: i64) -> Complex64 {
        self.eval(n.rem_euclid(self.group.q.max(1) as i64) as u64)
    }

    /// Dense value table over residues 0..q.
    pub fn value_table(&self) -> Vec<Complex64> {
        (0..self.group.q.max(1)).map(|r| self.eval(r)).collect()
    }

    /// Conductor: the least f | q inducing χ, computed coordinate-wise.
    pub fn conductor(&self) -> u64 {
        let mut cond = 1u64;
        let mut idx = 0usize;
        for comp in &self.group.components {
            let m = comp.modulus;
            if m % 2 == 1 {
                // odd prime power p^e, single cyclic coordinate
                let a = self.exponents[idx];
                idx += 1;
                if a == 0 {
                    continue;
                }
                let p = factorize_u64(m).factors[0].0;
                let e = m.ilog(p); // wait: ilog gives floor(log_p m) = e
                let mut v = 0u32;
                let mut aa = a;
                while aa.is_multiple_of(p) && v < e - 1 {
                    aa /= p;
                    v += 1;
                }
                cond *= p.pow(e - v);
            } else if comp.coords.is_empty() {
                // 2^1: trivial group
            } else if comp.coords.len() == 1 {
                // 2^2
                let a = self.exponents[idx];
                idx += 1;
                if a != 0 {
                    cond *= 4;
                }
            } else {
                // 2^e, e ≥ 3: (s on ⟨−1⟩, b on ⟨5⟩)
                let s = self.exponents[idx];
                let b = self.exponents[idx + 1];
                idx += 2;
                if b == 0 {
                    if s != 0 {
                        cond *= 4;
                    }
                } else {
                    let e = m.trailing_zeros();
                    let v = b.trailing_zeros();
                    cond *= 1u64 << (e - v);
                }
            }
        }
        cond
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor() == self.group.q
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// All φ(q) Dirichlet characters mod q, principal first.
pub fn characters_mod(q: u64) -> Result<Vec<DirichletCharacter>> {
    Ok(CharacterGroup::new(q)?.characters())
}

/// Is r a fourth power mod q? Direct scan for small q, CRT-composed scans
/// of the prime-power factors above [`DIRECT_SCAN_MAX`].
pub fn is_fourth_power_residue(r: i64, q: u64) -> bool {
    assert!(q >= 1);
    if q == 1 {
        return true;
    }
    if q <= DIRECT_SCAN_MAX {
        return scan_fourth_power(r.rem_euclid(q as i64) as u64, q);
    }
    factorize_u64(q)
        .factors
        .iter()
        .all(|&(p, e)| {
            let m = p.pow(e);
            scan_fourth_power(r.rem_euclid(m as i64) as u64, m)
        })
}

fn scan_fourth_power(r: u64, m: u64) -> bool {
    (0..m).any(|x| {
        let x2 = mul_mod(x, x, m);
        mul_mod(x2, x2, m) == r
    })
}
