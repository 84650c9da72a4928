//! Exponential sums and arc geometry for the circle method.
//!
//! The two sums under the integral are
//!
//!   S₁(α) = Σ_{m≤z} Λ(m) e(αm)     and     S₂(α) = Σ_{n≤x} e(−α n⁴),
//!
//! evaluated at α = a/q + β. The rational part of every phase is an exact
//! root of unity taken from a per-q table driven by integer modular
//! arithmetic; only the slowly varying e(β·) factor touches floating-point
//! phase reduction, so there is no catastrophic phase error at m ~ z.
//! Summation order is fixed (ascending index) and compensated.
//!
//! [`decompose_s1`] and [`decompose_s2`] realise the exact splits
//! S₁ = T₁ + E₁ + R and S₂ = T₂ + E₂, with the divisor bookkeeping
//! q* = q/d, d* = d³/(d³,q*), q₁* = q*/(d³,q*) carried in integers.
//! [`sigma_q`] is the complete double sum Σ(q), integer-valued and
//! multiplicative, with Σ(p) = p(n_p − 1) at odd primes.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::arith::{factorize_u64, gcd, mul_mod, LambdaTable};
use crate::error::QplError;
use crate::residues::{characters_mod, root_of_unity, DirichletCharacter};
use crate::summation::ComplexSum;
use crate::Result;

/// Largest modulus for which character groups are materialised in the
/// decompositions.
pub const CHAR_GROUP_BOUND: u64 = 100_000;

/// Largest x accepted by S₂-type sums (keeps n⁴ inside u64).
pub const S2_X_BOUND: u64 = 65_535;

/// A point α = a/q + β with the rational part kept exact.
///
/// 0 ≤ a < q, gcd(a, q) = 1; α itself is derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcPoint {
    a: u64,
    q: u64,
    beta: f64,
}

impl ArcPoint {
    pub fn new(a: u64, q: u64, beta: f64) -> Result<Self> {
        if q == 0 || a >= q || gcd(a, q) != 1 {
            return Err(QplError::Argument(format!(
                "arc point needs 0 ≤ a < q with gcd(a,q)=1, got a={a}, q={q}"
            )));
        }
        Ok(ArcPoint { a, q, beta })
    }

    /// A bare real α, carried as (0, 1, α).
    pub fn from_real(alpha: f64) -> Self {
        ArcPoint {
            a: 0,
            q: 1,
            beta: alpha,
        }
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The floating value a/q + β.
    pub fn alpha(&self) -> f64 {
        self.a as f64 / self.q as f64 + self.beta
    }
}

/// e(t) = exp(2πi t); |result| = 1 to machine precision, exact on eighth
/// turns.
pub fn e_frac(t: f64) -> Complex64 {
    let u = t - t.floor();
    let v = 8.0 * u;
    if v == v.trunc() {
        let j = v as u64 % 8;
        let g = gcd(j, 8);
        root_of_unity(j / g, 8 / g)
    } else {
        let theta = 2.0 * std::f64::consts::PI * u;
        Complex64::new(theta.cos(), theta.sin())
    }
}

/// frac(β·n) with the product error compensated (n split into exact
/// 32-bit halves, fma residuals folded back in).
pub(crate) fn phase_mul_frac(beta: f64, n: u64) -> f64 {
    let hi = ((n >> 32) as f64) * 4294967296.0; // exact: ≤ 32 significant bits scaled by 2^32
    let lo = (n & 0xffff_ffff) as f64;
    frac(frac_product(beta, hi) + frac_product(beta, lo))
}

#[inline]
fn frac(x: f64) -> f64 {
    x - x.floor()
}

#[inline]
fn frac_product(a: f64, b: f64) -> f64 {
    let p = a * b;
    let e = a.mul_add(b, -p); // exact low half of the product
    frac(frac(p) + e)
}

/// Table of e(j/q) for j < q, exact on denominators 1, 2, 4, 8.
pub(crate) struct RootTable {
    q: u64,
    roots: Vec<Complex64>,
}

impl RootTable {
    pub fn new(q: u64) -> Self {
        assert!(q >= 1);
        let roots = (0..q)
            .map(|j| {
                let g = gcd(j, q);
                root_of_unity(j / g, q / g)
            })
            .collect();
        RootTable { q, roots }
    }

    /// e(j/q) for any j (reduced mod q).
    #[inline]
    pub fn at(&self, j: u64) -> Complex64 {
        self.roots[(j % self.q) as usize]
    }

    /// e(−j/q).
    #[inline]
    pub fn at_neg(&self, j: u64) -> Complex64 {
        self.at(self.q - j % self.q)
    }
}

/// S₁(α) = Σ_{m≤z} Λ(m) e(αm), ascending m, compensated.
pub fn s1(alpha: &ArcPoint, z: u64, lambda: &LambdaTable) -> Result<Complex64> {
    if z < 2 {
        return Err(QplError::Argument(format!("s1 needs z ≥ 2, got {z}")));
    }
    if z > lambda.limit() {
        return Err(QplError::Range(format!(
            "s1 needs Λ up to {z}, table stops at {}",
            lambda.limit()
        )));
    }
    let roots = RootTable::new(alpha.q);
    let mut acc = ComplexSum::new();
    for &(m, lam) in lambda.support_upto(z) {
        let rot = roots.at(mul_mod(alpha.a, m % alpha.q, alpha.q));
        let slow = e_frac(phase_mul_frac(alpha.beta, m));
        acc.add(lam * rot * slow);
    }
    Ok(acc.total())
}

/// S₂(α) = Σ_{n≤x} e(−α n⁴); |S₂| ≤ x.
pub fn s2(alpha: &ArcPoint, x: u64) -> Result<Complex64> {
    if x > S2_X_BOUND {
        return Err(QplError::Range(format!(
            "s2 needs x ≤ {S2_X_BOUND} to keep n⁴ in u64, got {x}"
        )));
    }
    let roots = RootTable::new(alpha.q);
    let mut acc = ComplexSum::new();
    for n in 1..=x {
        let w = n * n * n * n;
        let rot = roots.at_neg(mul_mod(alpha.a, w % alpha.q, alpha.q));
        let slow = e_frac(phase_mul_frac(-alpha.beta, w));
        acc.add(rot * slow);
    }
    Ok(acc.total())
}

/// Gauss sum τ(χ) = Σ_{n=1}^{q} χ(n) e(an/q) with the ambient a explicit.
///
/// The e(am/q) expansion identity needs a = 1; callers that carry a
/// different ambient a get exactly the sum as written.
pub fn gauss_sum(chi: &DirichletCharacter, a: i64) -> Result<Complex64> {
    let q = chi.modulus();
    let ar = a.rem_euclid(q as i64) as u64;
    if gcd(ar, q) != 1 {
        return Err(QplError::Argument(format!(
            "gauss_sum needs gcd(a, q) = 1, got a={a}, q={q}"
        )));
    }
    let roots = RootTable::new(q);
    let values = chi.value_table();
    let mut acc = ComplexSum::new();
    for n in 1..=q {
        let v = values[(n % q) as usize];
        if v.norm_sqr() == 0.0 {
            continue;
        }
        acc.add(v * roots.at(mul_mod(ar, n % q, q)));
    }
    Ok(acc.total())
}

/// Ramanujan sum c_q(k) by the closed form μ(q/g)·φ(q)/φ(q/g), g = gcd(k, q).
pub fn ramanujan_sum(q: u64, k: i64) -> i64 {
    assert!(q >= 1);
    let g = gcd(k.rem_euclid(q as i64) as u64, q); // gcd(0, q) = q covers q | k
    let reduced = q / g;
    let mu = crate::arith::mobius(reduced) as i64;
    let phi_ratio = (crate::arith::euler_phi(q) / crate::arith::euler_phi(reduced)) as i64;
    mu * phi_ratio
}

/// Residual |e(am/q) − (1/φ(q)) Σ_χ χ(am) τ(χ̄)| with τ at a = 1.
/// Contract: ≤ 1e−9·φ(q) whenever gcd(am, q) = 1.
pub fn gauss_identity_check(a: i64, m: i64, q: u64) -> Result<f64> {
    assert!(q >= 1);
    let am = (a.rem_euclid(q as i64) as u64) as u128 * (m.rem_euclid(q as i64) as u64) as u128;
    let am = (am % q as u128) as u64;
    if gcd(am, q) != 1 {
        return Err(QplError::Argument(format!(
            "gauss identity needs gcd(am, q) = 1, got a={a}, m={m}, q={q}"
        )));
    }
    let roots = RootTable::new(q);
    let lhs = roots.at(am);
    let chars = characters_mod(q)?;
    let phi = chars.len() as f64;
    let mut acc = ComplexSum::new();
    for chi in &chars {
        let tau_bar = gauss_sum_conj(chi)?;
        acc.add(chi.eval(am) * tau_bar);
    }
    Ok((lhs - acc.total() / phi).norm())
}

/// τ(χ̄) at ambient a = 1.
fn gauss_sum_conj(chi: &DirichletCharacter) -> Result<Complex64> {
    let q = chi.modulus();
    let roots = RootTable::new(q);
    let values = chi.value_table();
    let mut acc = ComplexSum::new();
    for n in 1..=q {
        let v = values[(n % q) as usize].conj();
        if v.norm_sqr() == 0.0 {
            continue;
        }
        acc.add(v * roots.at(n % q));
    }
    Ok(acc.total())
}

/// Σ(q) = Σ*_{a mod q} e(−ak/q) Σ_{m=1}^{q} e(−am⁴/q), exactly
/// integer-valued; rounded after the imaginary part is checked against
/// 1e−6·q².
pub fn sigma_q(q: u64, k: i64) -> Result<f64> {
    assert!(q >= 1);
    let roots = RootTable::new(q);
    // m⁴ mod q for m = 1..q
    let m4: Vec<u64> = (1..=q)
        .map(|m| {
            let m2 = mul_mod(m, m, q);
            mul_mod(m2, m2, q)
        })
        .collect();
    let kq = k.rem_euclid(q as i64) as u64;
    let mut acc = ComplexSum::new();
    for a in 0..q {
        if gcd(a, q) != 1 {
            continue; // note gcd(0,1)=1 keeps the single class of q=1
        }
        let mut inner = ComplexSum::new();
        for &w in &m4 {
            inner.add(roots.at_neg(mul_mod(a, w, q)));
        }
        acc.add(roots.at_neg(mul_mod(a, kq, q)) * inner.total());
    }
    let total = acc.total();
    let tol = 1e-6 * (q as f64) * (q as f64);
    if total.im.abs() > tol {
        return Err(QplError::Consistency(format!(
            "Σ({q}) has imaginary part {} beyond {tol}",
            total.im
        )));
    }
    let rounded = total.re.round() + 0.0; // +0.0 folds away a negative zero
    if (total.re - rounded).abs() > tol {
        return Err(QplError::Consistency(format!(
            "Σ({q}) = {} is not near an integer",
            total.re
        )));
    }
    Ok(rounded)
}

/// Σ(q) rebuilt from prime data for square-free q: ∏_{p|q} p(n_p − 1),
/// with the p = 2 factor 0. Argument error off the square-free domain.
pub fn sigma_q_multiplicative(q: u64, k: i64) -> Result<f64> {
    assert!(q >= 1);
    let f = factorize_u64(q);
    if !f.is_squarefree() {
        return Err(QplError::Argument(format!(
            "multiplicative Σ route needs square-free q, got {q}"
        )));
    }
    let mut prod = 1.0f64;
    for &(p, _) in &f.factors {
        if p == 2 {
            prod *= 0.0;
            continue;
        }
        let table = crate::residues::build_quartic_table(p)?;
        let np = table.np(k) as f64;
        prod *= p as f64 * (np - 1.0);
    }
    Ok(prod + 0.0)
}

/// Exact split S₁ = T₁ + E₁ + R at α = a/q + β.
///
/// T₁ = (μ(q)/φ(q)) Σ_{m≤z} e(βm); E₁ runs the τ(χ̄)χ(a)-twisted sums with
/// the principal-character summand taken as (χ₀(m)Λ(m) − 1)e(βm), which is
/// what makes the reconstruction exact; R is the gcd(m,q) > 1 leftover
/// Σ Λ(m)e(αm).
pub fn decompose_s1(
    alpha: &ArcPoint,
    z: u64,
    lambda: &LambdaTable,
) -> Result<(Complex64, Complex64, Complex64)> {
    let q = alpha.q;
    if q > CHAR_GROUP_BOUND {
        return Err(QplError::Argument(format!(
            "decompose_s1 materialises characters mod q; q={q} exceeds {CHAR_GROUP_BOUND}"
        )));
    }
    if z < 2 || z > lambda.limit() {
        return Err(QplError::Range(format!(
            "decompose_s1 needs 2 ≤ z ≤ {}, got {z}",
            lambda.limit()
        )));
    }
    let phi = crate::arith::euler_phi(q) as f64;
    let mu = crate::arith::mobius(q) as f64;

    // Σ_{m≤z} e(βm), ascending
    let mut geo = ComplexSum::new();
    for m in 1..=z {
        geo.add(e_frac(phase_mul_frac(alpha.beta, m)));
    }
    let geo = geo.total();
    let t1 = geo * (mu / phi);

    let support = lambda.support_upto(z);
    // slow phases once per support point
    let phases: Vec<Complex64> = support
        .iter()
        .map(|&(m, _)| e_frac(phase_mul_frac(alpha.beta, m)))
        .collect();

    let chars = characters_mod(q)?;
    let roots = RootTable::new(q);
    let mut e1 = ComplexSum::new();
    for chi in &chars {
        let values = chi.value_table();
        let tau_bar = {
            let mut acc = ComplexSum::new();
            for n in 1..=q {
                let v = values[(n % q) as usize].conj();
                if v.norm_sqr() != 0.0 {
                    acc.add(v * roots.at(n % q));
                }
            }
            acc.total()
        };
        let mut inner = ComplexSum::new();
        for (idx, &(m, lam)) in support.iter().enumerate() {
            let v = values[(m % q.max(1)) as usize];
            if v.norm_sqr() != 0.0 {
                inner.add(v * lam * phases[idx]);
            }
        }
        let mut inner = inner.total();
        if chi.is_principal() {
            // the # convention: subtract 1 from the χ₀Λ weight at every m
            inner -= geo;
        }
        e1.add(tau_bar * chi.eval(alpha.a) * inner);
    }
    let e1 = e1.total() / phi;

    // R: prime powers sharing a factor with q
    let mut r = ComplexSum::new();
    for &(m, lam) in support {
        if gcd(m, q) > 1 {
            let rot = roots.at(mul_mod(alpha.a, m % q, q));
            r.add(lam * rot * e_frac(phase_mul_frac(alpha.beta, m)));
        }
    }
    Ok((t1, e1, r.total()))
}

/// Divisor bookkeeping for one d | q in the S₂ split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DivisorRecord {
    pub d: u64,
    pub q_star: u64,
    pub d_star: u64,
    pub q1_star: u64,
}

/// The exact split S₂ = T₂ + E₂ with per-divisor records.
#[derive(Debug, Clone)]
pub struct S2Decomposition {
    pub arc: ArcPoint,
    pub x: u64,
    pub records: Vec<DivisorRecord>,
    pub t2: Complex64,
    pub e2: Complex64,
}

/// Split S₂(α) along d = gcd(n, q): the χ⁴ = χ₀ part becomes T₂ through
/// the fourth-power unit sum mod q₁*, the rest is E₂. τ(χ̄) is taken at
/// a = 1 throughout.
pub fn decompose_s2(alpha: &ArcPoint, x: u64) -> Result<S2Decomposition> {
    if x > S2_X_BOUND {
        return Err(QplError::Range(format!(
            "decompose_s2 needs x ≤ {S2_X_BOUND}, got {x}"
        )));
    }
    let q = alpha.q;
    if q > CHAR_GROUP_BOUND {
        return Err(QplError::Argument(format!(
            "decompose_s2 materialises characters mod q₁*; q={q} exceeds {CHAR_GROUP_BOUND}"
        )));
    }
    let mut divisors: Vec<u64> = (1..=q).filter(|d| q.is_multiple_of(*d)).collect();
    divisors.sort_unstable();

    let mut records = Vec::with_capacity(divisors.len());
    let mut t2 = ComplexSum::new();
    let mut e2 = ComplexSum::new();

    for &d in &divisors {
        let q_star = q / d;
        let d3 = d * d * d;
        let g = gcd(d3, q_star);
        let d_star = d3 / g;
        let q1_star = q_star / g;
        records.push(DivisorRecord {
            d,
            q_star,
            d_star,
            q1_star,
        });

        // residue class n ≤ x with gcd(n, q) = d, with phases e(−βn⁴)
        let ns: Vec<u64> = (1..=x).filter(|&n| gcd(n, q) == d).collect();
        let slow: Vec<Complex64> = ns
            .iter()
            .map(|&n| {
                let w = n * n * n * n;
                e_frac(phase_mul_frac(-alpha.beta, w))
            })
            .collect();

        let roots1 = RootTable::new(q1_star);
        let a_dstar = mul_mod(alpha.a % q1_star, d_star % q1_star, q1_star);

        // T₂ coefficient: Σ_{(ℓ,q₁*)=1} e(−a d* ℓ⁴ / q₁*)
        let mut w_t2 = ComplexSum::new();
        for l in 0..q1_star {
            if gcd(l, q1_star) != 1 {
                continue; // gcd(0,1)=1 keeps the single class of q₁* = 1
            }
            let l2 = mul_mod(l, l, q1_star);
            let l4 = mul_mod(l2, l2, q1_star);
            w_t2.add(roots1.at_neg(mul_mod(a_dstar, l4, q1_star)));
        }
        let phi1 = crate::arith::euler_phi(q1_star) as f64;
        let mut class_sum = ComplexSum::new();
        for &s in &slow {
            class_sum.add(s);
        }
        t2.add(w_t2.total() * class_sum.total() / phi1);

        // E₂: characters mod q₁* with χ⁴ ≠ χ₀
        let chars = characters_mod(q1_star)?;
        for chi in &chars {
            if 4 % chi.order() == 0 {
                continue; // χ⁴ = χ₀ belongs to T₂
            }
            let values = chi.value_table();
            let tau_bar = {
                let mut acc = ComplexSum::new();
                for n in 1..=q1_star {
                    let v = values[(n % q1_star) as usize].conj();
                    if v.norm_sqr() != 0.0 {
                        acc.add(v * roots1.at(n % q1_star));
                    }
                }
                acc.total()
            };
            let chi_coeff = chi.eval_int(-(a_dstar as i64));
            let mut inner = ComplexSum::new();
            for (i, &n) in ns.iter().enumerate() {
                let nstar = (n / d) % q1_star;
                let v = values[nstar as usize];
                let v2 = v * v;
                inner.add(v2 * v2 * slow[i]);
            }
            e2.add(chi_coeff * tau_bar * inner.total() / phi1);
        }
    }

    Ok(S2Decomposition {
        arc: *alpha,
        x,
        records,
        t2: t2.total(),
        e2: e2.total(),
    })
}

/// One major arc I_{a,q} = [a/q − 1/(qQ₂), a/q + 1/(qQ₂)].
#[derive(Debug, Clone, Copy)]
pub struct MajorArc {
    pub a: u64,
    pub q: u64,
    pub halfwidth: f64,
}

/// The major arcs 𝔐 for parameters Q₁ = (log x)^{c₁}, Q₂ = x^{1−ε}.
#[derive(Debug, Clone)]
pub struct MajorArcs {
    pub x: u64,
    pub c1: f64,
    pub eps: f64,
    pub q1: f64,
    pub q2: f64,
    /// arcs in increasing q, then increasing a
    pub arcs: Vec<MajorArc>,
    /// (center, halfwidth) sorted by center, for membership tests
    sorted: Vec<(f64, f64)>,
}

impl MajorArcs {
    /// Is α (any real, taken mod 1) inside some I_{a,q}?
    pub fn contains(&self, alpha: f64) -> bool {
        let u = alpha - alpha.floor();
        let n = self.sorted.len();
        let idx = self.sorted.partition_point(|&(c, _)| c <= u);
        // the nearest center on the circle is the neighbour below or above
        for k in 0..2 {
            let (c, hw) = self.sorted[(idx + n - 1 + k) % n];
            let d = (u - c).abs();
            if d.min(1.0 - d) <= hw {
                return true;
            }
        }
        false
    }
}

/// Enumerate 𝔐: every (a, q) with q ≤ Q₁, gcd(a,q) = 1, halfwidth exactly
/// 1/(qQ₂). Configuration error unless Q₂ > 2Q₁ (which also guarantees
/// disjointness, re-checked here).
pub fn build_major_arcs(x: u64, c1: f64, eps: f64) -> Result<MajorArcs> {
    if x < 16 {
        return Err(QplError::Config(format!(
            "major arcs need x ≥ 16, got {x}"
        )));
    }
    if !(0.0..1.0).contains(&eps) || c1 <= 0.0 {
        return Err(QplError::Config(format!(
            "major arcs need c1 > 0 and 0 ≤ eps < 1, got c1={c1}, eps={eps}"
        )));
    }
    let q1 = (x as f64).ln().powf(c1);
    let q2 = (x as f64).powf(1.0 - eps);
    if q2 <= 2.0 * q1 {
        return Err(QplError::Config(format!(
            "Q2 = {q2:.3} must exceed 2·Q1 = {:.3}; shrink c1 or eps",
            2.0 * q1
        )));
    }
    let qmax = q1.floor() as u64;
    let mut arcs = Vec::new();
    for q in 1..=qmax.max(1) {
        let halfwidth = 1.0 / (q as f64 * q2);
        if q == 1 {
            arcs.push(MajorArc {
                a: 0,
                q: 1,
                halfwidth,
            });
            continue;
        }
        for a in 1..q {
            if gcd(a, q) == 1 {
                arcs.push(MajorArc { a, q, halfwidth });
            }
        }
    }
    let mut sorted: Vec<(f64, f64)> = arcs
        .iter()
        .map(|arc| (arc.a as f64 / arc.q as f64, arc.halfwidth))
        .collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // pairwise disjointness on the circle
    for w in sorted.windows(2) {
        if w[0].0 + w[0].1 >= w[1].0 - w[1].1 {
            return Err(QplError::Config(format!(
                "arcs at {} and {} overlap",
                w[0].0, w[1].0
            )));
        }
    }
    if sorted.len() > 1 {
        let first = sorted[0];
        let last = sorted[sorted.len() - 1];
        if last.0 + last.1 >= 1.0 + first.0 - first.1 {
            return Err(QplError::Config(
                "arcs overlap across the wraparound".into(),
            ));
        }
    }
    Ok(MajorArcs {
        x,
        c1,
        eps,
        q1,
        q2,
        arcs,
        sorted,
    })
}

/// Dirichlet approximation: coprime (a, q), 1 ≤ q ≤ Q, with
/// |α − a/q| ≤ 1/(q(Q+1)), from the continued-fraction convergents;
/// the first (smallest-q) qualifying convergent is returned.
pub fn dirichlet_approx(alpha: f64, big_q: u64) -> (i64, u64) {
    assert!(big_q >= 1);
    let bound = |q: u64| 1.0 / (q as f64 * (big_q as f64 + 1.0));
    let mut p_prev: i64 = 1;
    let mut q_prev: u64 = 0;
    let mut p_cur: i64 = alpha.floor() as i64;
    let mut q_cur: u64 = 1;
    let mut rem = alpha - alpha.floor();
    let mut best = (p_cur, q_cur);
    for _ in 0..64 {
        if (alpha - p_cur as f64 / q_cur as f64).abs() <= bound(q_cur) {
            return (p_cur, q_cur);
        }
        best = (p_cur, q_cur);
        if rem.abs() < 1e-15 {
            break;
        }
        let inv = 1.0 / rem;
        let digit = inv.floor();
        rem = inv - digit;
        let digit = digit as i64;
        let p_next = digit * p_cur + p_prev;
        let q_next = digit as u64 * q_cur + q_prev;
        if q_next > big_q || q_next == 0 {
            break;
        }
        p_prev = p_cur;
        q_prev = q_cur;
        p_cur = p_next;
        q_cur = q_next;
    }
    if (alpha - p_cur as f64 / q_cur as f64).abs() <= bound(q_cur) {
        (p_cur, q_cur)
    } else {
        best
    }
}

/// Grid measurement of sup_{α ∈ 𝔪} |S₂(α)| over 𝔪 = [1/Q₂, 1+1/Q₂]∖𝔐.
///
/// Samples α = 1/Q₂ + j/grid, j < grid (nested across powers of ten),
/// skips points inside 𝔐, and returns the maximising sample. This is a
/// measurement, not a proof of the supremum.
pub fn minor_arc_sup_s2(x: u64, arcs: &MajorArcs, grid: u64) -> Result<(f64, f64)> {
    if grid < 1_000 {
        return Err(QplError::Argument(format!(
            "minor-arc grid must have at least 10³ points, got {grid}"
        )));
    }
    if x > S2_X_BOUND {
        return Err(QplError::Range(format!(
            "minor-arc scan needs x ≤ {S2_X_BOUND}, got {x}"
        )));
    }
    let lo = 1.0 / arcs.q2;
    let best = (0..grid)
        .into_par_iter()
        .map(|j| {
            let alpha = lo + j as f64 / grid as f64;
            if arcs.contains(alpha) {
                return (f64::NEG_INFINITY, j, alpha);
            }
            let mag = s2(&ArcPoint::from_real(alpha), x)
                .expect("x already range-checked")
                .norm();
            (mag, j, alpha)
        })
        .reduce(
            || (f64::NEG_INFINITY, u64::MAX, 0.0),
            |a, b| {
                // larger magnitude wins; ties go to the smaller index so the
                // merge is associative and scheduling-independent
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    if best.0 == f64::NEG_INFINITY {
        return Err(QplError::Config(
            "every grid point fell inside the major arcs; refine the grid".into(),
        ));
    }
    Ok((best.2, best.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::SieveTables;

    fn lambda_to(limit: u64) -> LambdaTable {
        LambdaTable::build(&SieveTables::build(limit).unwrap())
    }

    #[test]
    fn e_frac_special_values() {
        assert!((e_frac(0.0) - Complex64::new(1.0, 0.0)).norm() == 0.0);
        assert!((e_frac(0.5) - Complex64::new(-1.0, 0.0)).norm() == 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e_frac(0.125) - Complex64::new(h, h)).norm() == 0.0);
        assert!((e_frac(0.25) - Complex64::new(0.0, 1.0)).norm() == 0.0);
        for &t in &[0.1, 0.3, 1.7, -2.4, 123.456] {
            assert!((e_frac(t).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_mul_frac_matches_exact_rationals() {
        // β = 1/8 and n = 3: frac(3/8) = 0.375 exactly
        assert_eq!(phase_mul_frac(0.125, 3), 0.375);
        // large n keeps the fractional part accurate
        let beta = 1.0 / 3.0;
        let n = 3_000_000_000_000u64; // 3e12, divisible by 3
        let f = phase_mul_frac(beta, n);
        // beta*n = 1e12 + tiny error from beta's representation
        assert!(!(1e-3..=1.0 - 1e-3).contains(&f), "frac drifted: {f}");
    }

    #[test]
    fn s1_at_zero_is_chebyshev_psi() {
        let lam = lambda_to(100);
        let alpha = ArcPoint::new(0, 1, 0.0).unwrap();
        let v = s1(&alpha, 10, &lam).unwrap();
        let psi10 = 3.0 * 2f64.ln() + 2.0 * 3f64.ln() + 5f64.ln() + 7f64.ln();
        assert!((v.re - psi10).abs() < 1e-12, "ψ(10) = {}", v.re);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn s1_period_one() {
        let lam = lambda_to(100);
        let a0 = ArcPoint::new(0, 1, 0.0).unwrap();
        let a1 = ArcPoint::new(0, 1, 1.0).unwrap();
        let v0 = s1(&a0, 50, &lam).unwrap();
        let v1 = s1(&a1, 50, &lam).unwrap();
        assert!((v0 - v1).norm() < 1e-9 * v0.norm().max(1.0));
    }

    #[test]
    fn s1_at_one_half() {
        // Σ Λ(m)(−1)^m over m ≤ 4: +Λ(2) −Λ(3) +Λ(4) = 2ln2 − ln3
        let lam = lambda_to(100);
        let alpha = ArcPoint::new(1, 2, 0.0).unwrap();
        let v = s1(&alpha, 4, &lam).unwrap();
        let expected = 2.0 * 2f64.ln() - 3f64.ln();
        assert!((v.re - expected).abs() < 1e-12, "got {}", v.re);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn s2_examples() {
        let zero = ArcPoint::new(0, 1, 0.0).unwrap();
        assert!((s2(&zero, 7).unwrap() - Complex64::new(7.0, 0.0)).norm() < 1e-12);

        let half = ArcPoint::new(1, 2, 0.0).unwrap();
        assert!(s2(&half, 2).unwrap().norm() < 1e-12);

        let quarter = ArcPoint::new(1, 4, 0.0).unwrap();
        let v = s2(&quarter, 4).unwrap();
        assert!((v - Complex64::new(2.0, -2.0)).norm() < 1e-12, "got {v}");
    }

    #[test]
    fn s2_bounded_by_x_and_periodic() {
        // dyadic α keeps α+1 exactly representable, so the check measures
        // the sum's periodicity rather than the rounding of α+1 itself
        let lamless = |a: f64, x: u64| s2(&ArcPoint::from_real(a), x).unwrap();
        for j in 0u64..100 {
            let alpha = ((j * 8191 + 77) % (1 << 20)) as f64 / (1u64 << 20) as f64;
            let x = 50 + j % 30;
            let v = lamless(alpha, x);
            assert!(v.norm() <= x as f64 + 1e-9);
            let w = lamless(alpha + 1.0, x);
            assert!(
                (v - w).norm() < 1e-9 * v.norm().max(1.0),
                "period at {alpha}"
            );
        }
    }

    #[test]
    fn gauss_sum_examples() {
        // principal χ mod 7, a=1: Σ_{n=1}^{6} e(n/7) = −1
        let chars = characters_mod(7).unwrap();
        let tau = gauss_sum(&chars[0], 1).unwrap();
        assert!((tau - Complex64::new(-1.0, 0.0)).norm() < 1e-12);

        // any order-4 χ mod 5 has |τ| = √5
        let chars5 = characters_mod(5).unwrap();
        for chi in chars5.iter().filter(|c| c.order() == 4) {
            let tau = gauss_sum(chi, 1).unwrap();
            assert!((tau.norm() - 5f64.sqrt()).abs() < 1e-9);
        }

        // q = 1: the single term n = 1
        let one = characters_mod(1).unwrap();
        assert!((gauss_sum(&one[0], 1).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-12);

        // gcd(a, q) ≠ 1 rejected
        assert!(gauss_sum(&chars[0], 7).is_err());
    }

    #[test]
    fn gauss_sum_primitive_magnitude() {
        for q in 2..=40u64 {
            for chi in characters_mod(q).unwrap() {
                if chi.is_primitive() {
                    let tau = gauss_sum(&chi, 1).unwrap();
                    assert!(
                        (tau.norm() - (q as f64).sqrt()).abs() < 1e-9,
                        "|τ| ≠ √q for primitive χ mod {q}"
                    );
                }
            }
        }
    }

    #[test]
    fn ramanujan_sum_closed_form_matches_direct() {
        for q in 1..=60u64 {
            let roots = RootTable::new(q);
            for k in -10i64..=30 {
                let mut direct = ComplexSum::new();
                for a in 0..q {
                    if gcd(a, q) == 1 {
                        direct.add(roots.at(mul_mod(a, k.rem_euclid(q as i64) as u64, q)));
                    }
                }
                let d = direct.total();
                assert!(d.im.abs() < 1e-9);
                assert_eq!(
                    ramanujan_sum(q, k),
                    d.re.round() as i64,
                    "c_{q}({k})"
                );
            }
        }
    }

    #[test]
    fn ramanujan_sum_examples() {
        assert_eq!(ramanujan_sum(7, 14), 6); // p | k → p−1
        assert_eq!(ramanujan_sum(7, 3), -1); // p ∤ k → −1
        assert_eq!(ramanujan_sum(6, 1), 1); // μ(6)
    }

    #[test]
    fn gauss_identity_examples() {
        assert!(gauss_identity_check(1, 1, 1).unwrap() < 1e-12);
        assert!(gauss_identity_check(2, 3, 5).unwrap() < 1e-9);
        assert!(gauss_identity_check(5, 7, 12).unwrap() < 1e-9);
        assert!(gauss_identity_check(2, 2, 4).is_err());
    }

    #[test]
    fn sigma_q_examples() {
        assert_eq!(sigma_q(1, 5).unwrap(), 1.0);
        assert_eq!(sigma_q(3, 1).unwrap(), -3.0);
        assert_eq!(sigma_q(5, 4).unwrap(), 15.0);
    }

    #[test]
    fn sigma_prime_identity_small() {
        for p in [3u64, 5, 7, 11, 13, 17, 19, 23] {
            let table = crate::residues::build_quartic_table(p).unwrap();
            for k in 1..=30i64 {
                let expected = p as f64 * (table.np(k) as f64 - 1.0);
                assert_eq!(sigma_q(p, k).unwrap(), expected, "Σ({p}) at k={k}");
            }
        }
    }

    #[test]
    fn sigma_multiplicative_route_matches_double_sum() {
        for q in [3u64, 5, 15, 21, 33, 35] {
            for k in 1..=10i64 {
                assert_eq!(
                    sigma_q(q, k).unwrap(),
                    sigma_q_multiplicative(q, k).unwrap(),
                    "routes at q={q}, k={k}"
                );
            }
        }
        assert!(sigma_q_multiplicative(9, 1).is_err());
    }

    #[test]
    fn decompose_s1_reconstructs() {
        let lam = lambda_to(1000);
        // q = 1: T1 geometric, E1 the corrected sum, R = 0, exact identity
        for (a, q, beta, z) in [
            (0u64, 1u64, 0.2, 400u64),
            (1, 3, 0.0, 50),
            (3, 4, 1e-4, 100),
            (2, 5, -3e-4, 600),
            (5, 12, 2e-5, 900),
        ] {
            let alpha = ArcPoint::new(a, q, beta).unwrap();
            let direct = s1(&alpha, z, &lam).unwrap();
            let (t1, e1, r) = decompose_s1(&alpha, z, &lam).unwrap();
            let err = (direct - (t1 + e1 + r)).norm();
            assert!(
                err <= 1e-7 * z as f64,
                "S1 ≠ T1+E1+R at a={a}, q={q}, β={beta}: err {err}"
            );
            if q == 1 {
                assert!(r.norm() == 0.0);
            }
        }
    }

    #[test]
    fn decompose_s2_reconstructs_and_bookkeeps() {
        for (a, q, beta, x) in [
            (0u64, 1u64, 0.1, 40u64),
            (1, 5, 0.0, 20),
            (5, 12, 1e-5, 30),
            (7, 16, -2e-4, 50),
            (11, 36, 3e-5, 64),
        ] {
            let alpha = ArcPoint::new(a, q, beta).unwrap();
            let dec = decompose_s2(&alpha, x).unwrap();
            let direct = s2(&alpha, x).unwrap();
            let err = (direct - (dec.t2 + dec.e2)).norm();
            assert!(
                err <= 1e-9 * (x as f64).max(1.0),
                "S2 ≠ T2+E2 at a={a}, q={q}, β={beta}: err {err}"
            );
            for rec in &dec.records {
                assert_eq!(rec.d * rec.q_star, q);
                let d3 = rec.d * rec.d * rec.d;
                let g = d3 / rec.d_star;
                assert_eq!(rec.d_star * g, d3);
                assert_eq!(rec.q1_star * g, rec.q_star);
            }
            if q == 1 {
                assert!(dec.e2.norm() < 1e-12);
                assert!((dec.t2 - direct).norm() < 1e-9);
            }
        }
        // q = 12, d = 2 exercises d* ≠ d³: d³ = 8, q* = 6, (8,6) = 2
        let alpha = ArcPoint::new(5, 12, 1e-5).unwrap();
        let dec = decompose_s2(&alpha, 30).unwrap();
        let rec = dec.records.iter().find(|r| r.d == 2).unwrap();
        assert_eq!(rec.d_star, 4);
        assert_eq!(rec.q1_star, 3);
    }

    #[test]
    fn major_arcs_count_and_geometry() {
        // Q1 ∈ [10, 11) → Σ_{q≤10} φ(q) = 32 arcs
        let c1 = (10.5f64).ln() / (100f64).ln().ln();
        let arcs = build_major_arcs(100, c1, 0.1).unwrap();
        assert!(arcs.q1 >= 10.0 && arcs.q1 < 11.0, "Q1 = {}", arcs.q1);
        assert_eq!(arcs.arcs.len(), 32);
        // enumerated in increasing q then a
        for w in arcs.arcs.windows(2) {
            assert!(w[0].q < w[1].q || (w[0].q == w[1].q && w[0].a < w[1].a));
        }
        for arc in &arcs.arcs {
            assert_eq!(arc.halfwidth, 1.0 / (arc.q as f64 * arcs.q2));
        }

        // Q1 < 2 → the single (0,1) arc
        let single = build_major_arcs(16, 0.1, 0.1).unwrap();
        assert!(single.q1 < 2.0);
        assert_eq!(single.arcs.len(), 1);
        assert_eq!((single.arcs[0].a, single.arcs[0].q), (0, 1));

        // Q2 ≤ 2Q1 → configuration error
        assert!(matches!(
            build_major_arcs(16, 3.0, 0.5),
            Err(QplError::Config(_))
        ));
    }

    #[test]
    fn major_arc_membership() {
        let c1 = (10.5f64).ln() / (100f64).ln().ln();
        let arcs = build_major_arcs(100, c1, 0.1).unwrap();
        // centers are inside, deep minor-arc points are not
        for arc in &arcs.arcs {
            let center = arc.a as f64 / arc.q as f64;
            assert!(arcs.contains(center));
            assert!(arcs.contains(center + arc.halfwidth * 0.99));
        }
        assert!(arcs.contains(1.0)); // wraps onto the (0,1) arc
        // the midpoint between 0 and the 1/10 arc family is far from all
        assert!(!arcs.contains(0.05));
    }

    #[test]
    fn dirichlet_approx_examples() {
        let (a, q) = dirichlet_approx(std::f64::consts::PI, 100);
        assert_eq!((a, q), (22, 7));
        assert!((std::f64::consts::PI - 22.0 / 7.0).abs() <= 1.0 / (7.0 * 101.0));

        assert_eq!(dirichlet_approx(1.0 / 3.0, 10), (1, 3));
        assert_eq!(dirichlet_approx(0.5, 1), (0, 1));
    }

    #[test]
    fn dirichlet_approx_always_meets_bound() {
        for j in 0..200 {
            let alpha = j as f64 * 0.0137 + 0.123456;
            for &big_q in &[5u64, 20, 100, 1000] {
                let (a, q) = dirichlet_approx(alpha, big_q);
                assert!(q >= 1 && q <= big_q);
                assert_eq!(gcd(a.unsigned_abs(), q), 1, "convergent not reduced");
                assert!(
                    (alpha - a as f64 / q as f64).abs() <= 1.0 / (q as f64 * (big_q as f64 + 1.0)) + 1e-15,
                    "bound missed at α={alpha}, Q={big_q}: ({a},{q})"
                );
            }
        }
    }

    #[test]
    fn minor_arc_scan_bounded_and_nested() {
        let arcs = build_major_arcs(16, 0.5, 0.05).unwrap();
        let (_, m1k) = minor_arc_sup_s2(8, &arcs, 1000).unwrap();
        assert!(m1k <= 8.0 + 1e-9);
        let (_, m10k) = minor_arc_sup_s2(8, &arcs, 10_000).unwrap();
        assert!(m10k + 1e-12 >= m1k, "nested grids must be monotone");
        assert!(minor_arc_sup_s2(8, &arcs, 999).is_err());
    }
}
