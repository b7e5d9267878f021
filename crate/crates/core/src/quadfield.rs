//! Real quadratic fields: integral bases, ideals, narrow class groups via
//! binary quadratic forms, and the per-class embedding data used by the
//! modular-symbol pipeline.
//!
//! The field `F = Q(√Δ)` is presented on the integral basis `(1, θ)` with
//! `θ = (D′ − √Δ)/2`, where `D′ = Δ` for odd `Δ` and `D′ = Δ/2` for even
//! `Δ`; then `O_F = Z + Zθ`, `Tr θ = D′`, and `δ := θ̄ − θ = √Δ` generates
//! the different. Ideals are 2×2 Hermite-normal-form modules over this
//! basis, so every ideal has a unique representation and norms are
//! determinants.
//!
//! The narrow class group of the order of conductor `C` is computed as the
//! form class group of discriminant `ΔC²`: reduced indefinite forms are
//! enumerated, classes are identified with reduction cycles, and the group
//! law is Gauss composition. This model also hands the modular-symbol side
//! exactly what it needs: each class carries a representative form, the
//! form's automorph matrix for the totally positive fundamental unit, and
//! the real quadratic surd fixed by that automorph.

use crate::padic::{PadicError, PadicNum};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

/// Errors from field and class-group construction.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FieldError {
    #[error("{0} is not a positive fundamental discriminant")]
    NotFundamental(i64),
    #[error("conductor {c} must be coprime to the discriminant {delta}")]
    BadConductor { c: i64, delta: i64 },
    #[error("prime {q} does not split in the field (required for level/conductor primes)")]
    MustSplit { q: i64 },
    #[error("prime {p} is not inert in the field")]
    MustBeInert { p: i64 },
    #[error("ideal-class evaluation is only implemented for conductor C = 1 (got C = {0})")]
    ConductorUnsupported(i64),
    #[error("character of order {order} has no values in Z_p for p = {p} (order must divide p−1)")]
    CharacterNotRealizable { order: usize, p: u64 },
    #[error("no solution of t² − {0}u² = 4 found below the search bound")]
    PellSearchExhausted(i64),
    #[error("p-adic error: {0}")]
    Padic(#[from] PadicError),
}

/// A real quadratic field `Q(√Δ)` on the integral basis `(1, θ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadField {
    delta: i64,
    dprime: i64,
    /// Coordinates `(a, b)` of the totally positive fundamental unit
    /// `ε₁ = a + bθ`.
    eps1: (BigInt, BigInt),
    h_plus: usize,
}

/// An element `a + bθ` of the field (integral or not, over `Z`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldElt {
    pub a: BigInt,
    pub b: BigInt,
}

impl FieldElt {
    pub fn new(a: impl Into<BigInt>, b: impl Into<BigInt>) -> Self {
        FieldElt { a: a.into(), b: b.into() }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

fn is_squarefree(mut n: i64) -> bool {
    let mut d = 2i64;
    while d * d <= n {
        if n % (d * d) == 0 {
            return false;
        }
        while n % d == 0 {
            n /= d;
        }
        d += 1;
    }
    true
}

/// `true` iff `delta` is a positive fundamental discriminant.
pub fn is_fundamental(delta: i64) -> bool {
    if delta <= 1 {
        return false;
    }
    let sq = (delta as f64).sqrt() as i64;
    if (sq - 1..=sq + 1).any(|r| r * r == delta) {
        return false;
    }
    match delta.rem_euclid(4) {
        1 => is_squarefree(delta),
        0 => {
            let d = delta / 4;
            (d.rem_euclid(4) == 2 || d.rem_euclid(4) == 3) && is_squarefree(d)
        }
        _ => false,
    }
}

/// Smallest `(t, u)` with `t, u > 0` and `t² − D·u² = 4`: the totally
/// positive fundamental unit `(t + u√D)/2` of the order of discriminant `D`.
fn pell_four(d: i64) -> Result<(BigInt, BigInt), FieldError> {
    let d_big = BigInt::from(d);
    let mut u = BigInt::one();
    let bound = BigInt::from(40_000_000u64);
    while u < bound {
        let t2: BigInt = &d_big * &u * &u + 4;
        let t = t2.sqrt();
        if &t * &t == t2 {
            return Ok((t, u));
        }
        u += 1;
    }
    Err(FieldError::PellSearchExhausted(d))
}

impl QuadField {
    /// Build the field from a positive fundamental discriminant.
    pub fn new(delta: i64) -> Result<Self, FieldError> {
        if !is_fundamental(delta) {
            return Err(FieldError::NotFundamental(delta));
        }
        let dprime = if delta % 2 == 0 { delta / 2 } else { delta };
        // ε₁ = (t + u√Δ)/2 = (t + u·D′)/2 − uθ from the Pell solution.
        let (t, u) = pell_four(delta)?;
        let a = (&t + &u * dprime) / 2;
        let eps1 = (a, -u);
        let field = QuadField { delta, dprime, eps1, h_plus: 0 };
        debug_assert!(field.norm(&field.eps1_elt()).is_one(), "ε₁ has norm 1");
        debug_assert!(field.is_totally_positive(&field.eps1_elt()), "ε₁ ≫ 0");
        let h_plus = ClassGroup::new(&field, 1)?.class_count();
        Ok(QuadField { h_plus, ..field })
    }

    pub fn delta(&self) -> i64 {
        self.delta
    }

    /// `D′ = Tr θ`.
    pub fn dprime(&self) -> i64 {
        self.dprime
    }

    pub fn theta_trace(&self) -> i64 {
        self.dprime
    }

    /// `N θ = (D′² − Δ)/4`.
    pub fn theta_norm(&self) -> i64 {
        (self.dprime * self.dprime - self.delta) / 4
    }

    pub fn h_plus(&self) -> usize {
        self.h_plus
    }

    /// The totally positive fundamental unit as `a + bθ`.
    pub fn eps1_elt(&self) -> FieldElt {
        FieldElt { a: self.eps1.0.clone(), b: self.eps1.1.clone() }
    }

    /// `√Δ = D′ − 2θ` as an element.
    pub fn sqrt_delta(&self) -> FieldElt {
        FieldElt::new(self.dprime, -2)
    }

    pub fn add(&self, x: &FieldElt, y: &FieldElt) -> FieldElt {
        FieldElt { a: &x.a + &y.a, b: &x.b + &y.b }
    }

    /// Product in the basis `(1, θ)`, using `θ² = D′θ − Nθ`.
    pub fn mul(&self, x: &FieldElt, y: &FieldElt) -> FieldElt {
        let bb = &x.b * &y.b;
        FieldElt {
            a: &x.a * &y.a - self.theta_norm() * &bb,
            b: &x.a * &y.b + &x.b * &y.a + self.dprime * &bb,
        }
    }

    /// Galois conjugate: `θ ↦ θ̄ = D′ − θ`.
    pub fn conj(&self, x: &FieldElt) -> FieldElt {
        FieldElt { a: &x.a + self.dprime * &x.b, b: -&x.b }
    }

    pub fn norm(&self, x: &FieldElt) -> BigInt {
        &x.a * &x.a + self.dprime * &x.a * &x.b + self.theta_norm() * &x.b * &x.b
    }

    pub fn trace(&self, x: &FieldElt) -> BigInt {
        2 * &x.a + self.dprime * &x.b
    }

    /// Exact sign of the real embedding `σ_i(a + bθ)`, where `σ₁√Δ > 0`
    /// (so `σ₁θ` is the smaller root) and `σ₂√Δ < 0`.
    pub fn embedding_sign(&self, x: &FieldElt, second: bool) -> i32 {
        // σ(x) = a + b(D′ ∓ √Δ)/2, so 2σ(x) = (2a + bD′) ∓ b√Δ.
        let lin: BigInt = 2 * &x.a + self.dprime * &x.b;
        let coef = if second { x.b.clone() } else { -&x.b };
        // sign of lin + coef·√Δ.
        match (lin.sign(), coef.sign()) {
            (num_bigint::Sign::NoSign, num_bigint::Sign::NoSign) => 0,
            (s, num_bigint::Sign::NoSign) => if s == num_bigint::Sign::Plus { 1 } else { -1 },
            (num_bigint::Sign::NoSign, s) => if s == num_bigint::Sign::Plus { 1 } else { -1 },
            (num_bigint::Sign::Plus, num_bigint::Sign::Plus) => 1,
            (num_bigint::Sign::Minus, num_bigint::Sign::Minus) => -1,
            _ => {
                // Opposite signs: compare lin² with coef²·Δ.
                let l2 = &lin * &lin;
                let c2 = &coef * &coef * self.delta;
                let cmp = l2.cmp(&c2);
                let dominant_lin = cmp == std::cmp::Ordering::Greater;
                let lin_pos = lin.is_positive();
                match (dominant_lin, lin_pos, cmp) {
                    (_, _, std::cmp::Ordering::Equal) => 0,
                    (true, true, _) => 1,
                    (true, false, _) => -1,
                    (false, true, _) => -1,
                    (false, false, _) => 1,
                }
            }
        }
    }

    pub fn is_totally_positive(&self, x: &FieldElt) -> bool {
        self.embedding_sign(x, false) > 0 && self.embedding_sign(x, true) > 0
    }

    /// Splitting type of a rational prime, by the Kronecker symbol `(Δ/q)`.
    pub fn splitting_type(&self, q: i64) -> SplitType {
        assert!(q >= 2);
        if self.delta % q == 0 {
            return SplitType::Ramified;
        }
        if q == 2 {
            // Δ odd here; (Δ/2) = 1 iff Δ ≡ ±1 mod 8.
            return if self.delta.rem_euclid(8) == 1 {
                SplitType::Split
            } else {
                SplitType::Inert
            };
        }
        // Legendre symbol by Euler's criterion (q is small in this crate).
        let mut pow = 1i64;
        let mut base = self.delta.rem_euclid(q);
        let mut e = (q - 1) / 2;
        while e > 0 {
            if e & 1 == 1 {
                pow = pow * base % q;
            }
            base = base * base % q;
            e >>= 1;
        }
        if pow == 1 {
            SplitType::Split
        } else {
            SplitType::Inert
        }
    }

    /// The prime ideals above `q`, each with its residue degree.
    pub fn primes_above(&self, q: i64) -> Vec<PrimeIdeal> {
        let tr = self.dprime;
        let nm = self.theta_norm();
        match self.splitting_type(q) {
            SplitType::Inert => vec![PrimeIdeal {
                q,
                ideal: FieldIdeal::from_generators(self, &[FieldElt::new(q, 0)]),
                norm: BigInt::from(q) * q,
                degree: 2,
            }],
            SplitType::Ramified => {
                let r = (0..q).find(|&r| (r * r - tr * r + nm).rem_euclid(q) == 0)
                    .expect("ramified primes have a double root");
                let gen = FieldElt::new(-r, 1); // θ − r
                vec![PrimeIdeal {
                    q,
                    ideal: FieldIdeal::from_generators(self, &[FieldElt::new(q, 0), gen]),
                    norm: BigInt::from(q),
                    degree: 1,
                }]
            }
            SplitType::Split => {
                let roots: Vec<i64> = (0..q)
                    .filter(|&r| (r * r - tr * r + nm).rem_euclid(q) == 0)
                    .collect();
                assert_eq!(roots.len(), 2, "split primes have two roots");
                roots
                    .into_iter()
                    .map(|r| PrimeIdeal {
                        q,
                        ideal: FieldIdeal::from_generators(
                            self,
                            &[FieldElt::new(q, 0), FieldElt::new(-r, 1)],
                        ),
                        norm: BigInt::from(q),
                        degree: 1,
                    })
                    .collect()
            }
        }
    }
}

/// How a rational prime decomposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitType {
    Split,
    Inert,
    Ramified,
}

/// A prime ideal together with its residue data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeIdeal {
    pub q: i64,
    pub ideal: FieldIdeal,
    pub norm: BigInt,
    pub degree: u32,
}

/// An integral ideal (or Z-module closed under θ) in Hermite normal form:
/// the module `Z·a ⊕ Z·(b + cθ)` with `0 < c`, `c | a`, `0 ≤ b < a`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldIdeal {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
}

impl FieldIdeal {
    /// The unit ideal `O_F`.
    pub fn unit_ideal() -> Self {
        FieldIdeal { a: BigInt::one(), b: BigInt::zero(), c: BigInt::one() }
    }

    /// HNF of the O_F-module generated by the given elements: closes the
    /// generating set under multiplication by θ, then column-reduces.
    pub fn from_generators(field: &QuadField, gens: &[FieldElt]) -> Self {
        let mut vecs: Vec<FieldElt> = Vec::with_capacity(2 * gens.len());
        let theta = FieldElt::new(0, 1);
        for g in gens {
            vecs.push(g.clone());
            vecs.push(field.mul(g, &theta));
        }
        Self::hnf(&vecs)
    }

    /// HNF of the Z-module spanned by the vectors (assumed full rank).
    fn hnf(vecs: &[FieldElt]) -> Self {
        // c = gcd of θ-coordinates, with a witness vector (b0 + cθ).
        let mut c = BigInt::zero();
        let mut b0 = BigInt::zero();
        for v in vecs {
            if v.b.is_zero() {
                continue;
            }
            if c.is_zero() {
                c = v.b.clone();
                b0 = v.a.clone();
            } else {
                let g = c.extended_gcd(&v.b);
                b0 = &g.x * &b0 + &g.y * &v.a;
                c = g.gcd;
            }
        }
        assert!(!c.is_zero(), "module has rank < 2");
        if c.is_negative() {
            c = -c;
            b0 = -b0;
        }
        // a = gcd of the rational parts of all θ-free combinations.
        let mut a = BigInt::zero();
        for v in vecs {
            let k = &v.b / &c; // exact
            let resid = &v.a - k * &b0;
            a = a.gcd(&resid);
        }
        assert!(!a.is_zero(), "module has rank < 2");
        let b = b0.mod_floor(&a);
        FieldIdeal { a, b, c }
    }

    /// The ideal norm `[O_F : I] = a·c`.
    pub fn norm(&self) -> BigInt {
        &self.a * &self.c
    }

    /// Membership test for `u + vθ`.
    pub fn contains(&self, x: &FieldElt) -> bool {
        if !(&x.b % &self.c).is_zero() {
            return false;
        }
        let k = &x.b / &self.c;
        ((&x.a - k * &self.b) % &self.a).is_zero()
    }

    /// `true` iff `other | self`, i.e. `self ⊆ other`.
    pub fn divisible_by(&self, other: &Self) -> bool {
        other.contains(&FieldElt::new(self.a.clone(), 0))
            && other.contains(&FieldElt::new(self.b.clone(), self.c.clone()))
    }

    /// Ideal product.
    pub fn mul(&self, field: &QuadField, other: &Self) -> Self {
        let xs = [
            FieldElt::new(self.a.clone(), 0),
            FieldElt::new(self.b.clone(), self.c.clone()),
        ];
        let ys = [
            FieldElt::new(other.a.clone(), 0),
            FieldElt::new(other.b.clone(), other.c.clone()),
        ];
        let mut prods = Vec::with_capacity(4);
        for x in &xs {
            for y in &ys {
                prods.push(field.mul(x, y));
            }
        }
        // The product of ideals is already an O_F-module; plain HNF suffices.
        Self::hnf(&prods)
    }

    /// Exact quotient `self / prime` for a prime divisor: multiply by the
    /// conjugate ideal and cancel the rational norm.
    pub fn divide_prime(&self, field: &QuadField, prime: &PrimeIdeal) -> Option<Self> {
        if !self.divisible_by(&prime.ideal) {
            return None;
        }
        let pi = &prime.ideal;
        let conj = Self::hnf(&[
            field.conj(&FieldElt::new(pi.a.clone(), 0)),
            field.conj(&FieldElt::new(pi.b.clone(), pi.c.clone())),
        ]);
        let prod = self.mul(field, &conj);
        let n = &prime.norm;
        Some(FieldIdeal { a: &prod.a / n, b: (&prod.b / n).mod_floor(&(&prod.a / n)), c: &prod.c / n })
    }

    /// The multiset of prime divisors with exponents.
    pub fn factor(&self, field: &QuadField) -> Vec<(PrimeIdeal, u32)> {
        let mut out = Vec::new();
        let mut n = self.norm();
        let mut current = self.clone();
        let mut q = BigInt::from(2);
        while &q * &q <= n {
            if (&n % &q).is_zero() {
                let qq = q.to_i64().expect("prime fits i64");
                for prime in field.primes_above(qq) {
                    let mut e = 0u32;
                    while let Some(next) = current.divide_prime(field, &prime) {
                        current = next;
                        e += 1;
                    }
                    if e > 0 {
                        out.push((prime, e));
                    }
                }
                while (&n % &q).is_zero() {
                    n /= &q;
                }
            }
            q += 1;
        }
        if n > BigInt::one() {
            let qq = n.to_i64().expect("prime fits i64");
            for prime in field.primes_above(qq) {
                let mut e = 0u32;
                while let Some(next) = current.divide_prime(field, &prime) {
                    current = next;
                    e += 1;
                }
                if e > 0 {
                    out.push((prime, e));
                }
            }
        }
        debug_assert!(current == FieldIdeal::unit_ideal(), "factorization exhausts the ideal");
        out
    }

    /// All integral divisors, by multiplying out prime-power combinations.
    pub fn divisors(&self, field: &QuadField) -> Vec<FieldIdeal> {
        let factors = self.factor(field);
        let mut out = vec![FieldIdeal::unit_ideal()];
        for (prime, e) in &factors {
            let mut next = Vec::with_capacity(out.len() * (*e as usize + 1));
            for d in &out {
                let mut acc = d.clone();
                next.push(acc.clone());
                for _ in 0..*e {
                    acc = acc.mul(field, &prime.ideal);
                    next.push(acc.clone());
                }
            }
            out = next;
        }
        out
    }
}

/// A totally positive element `β = (x − nθ)/√Δ` of the inverse different
/// with `Tr β = n`; the ideal `(β)·𝔡 = (x − nθ)` is integral.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceBeta {
    pub x: i64,
    pub n: u32,
}

impl TraceBeta {
    /// The integral generator `x − nθ` of `(β)𝔡`.
    pub fn integral_gen(&self) -> FieldElt {
        FieldElt::new(self.x, -(self.n as i64))
    }

    /// The ideal norm `N((β)𝔡) = |N(x − nθ)|`.
    pub fn ideal_norm(&self, field: &QuadField) -> BigInt {
        field.norm(&self.integral_gen()).abs()
    }
}

/// All totally positive `β ∈ 𝔡⁻¹` with `Tr β = n`: exactly the integers
/// `x` with `(2x − nD′)² < Δn²`.
pub fn trace_slice(field: &QuadField, n: u32) -> Vec<TraceBeta> {
    assert!(n >= 1);
    let nd = n as i64 * field.dprime();
    let bound2 = field.delta() as i128 * (n as i128) * (n as i128);
    let mut out = Vec::new();
    // 2x ranges over an interval of length 2n√Δ centered at nD′.
    let halfwidth = ((bound2 as f64).sqrt() as i64) / 2 + 2;
    for x in (nd / 2 - halfwidth)..=(nd / 2 + halfwidth) {
        let t = 2 * x - nd;
        if (t as i128) * (t as i128) < bound2 {
            out.push(TraceBeta { x, n });
        }
    }
    out
}

/// An indefinite binary quadratic form `Ax² + Bxy + Cy²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QForm {
    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    fn is_primitive(&self) -> bool {
        self.a.gcd(&self.b).gcd(&self.c) == 1
    }

    /// Reduced in the indefinite sense: `0 < B < √D` and
    /// `√D − B < 2|A| < √D + B`.
    fn is_reduced(&self) -> bool {
        let d = self.disc();
        let b = self.b;
        if b <= 0 || b * b >= d {
            return false;
        }
        let two_a = 2 * self.a.abs();
        // √D − B < 2|A| ⟺ (√D − B)² < (2|A|)² when both sides positive.
        let lhs_ok = if two_a + b > 0 {
            (two_a + b) * (two_a + b) > d
        } else {
            false
        };
        let rhs_ok = (two_a - b) * (two_a - b) < d || two_a < b;
        lhs_ok && rhs_ok && two_a != 0
    }

    /// One reduction step `ρ`: slide to the neighbor form on the right.
    fn rho(&self) -> QForm {
        let d = self.disc();
        let sqrt_d = int_sqrt(d);
        let c = self.c;
        let two_c = 2 * c.abs();
        // B′ ≡ −B (mod 2C), maximal with B′ ≤ √D, and B′ > √D − 2|C|.
        let target = -self.b;
        let lower = sqrt_d - two_c + 1;
        let mut bp = lower + (target - lower).rem_euclid(two_c);
        if bp > sqrt_d {
            bp -= two_c;
        }
        debug_assert!(bp > sqrt_d - two_c && bp <= sqrt_d);
        let cp = (bp * bp - d) / (4 * c);
        QForm { a: c, b: bp, c: cp }
    }

    /// The full reduction cycle through this (reduced) form.
    fn cycle(&self) -> Vec<QForm> {
        let mut cyc = vec![*self];
        let mut f = self.rho();
        while f != *self {
            cyc.push(f);
            f = f.rho();
        }
        cyc
    }

    /// Reduce an arbitrary form of positive nonsquare discriminant.
    fn reduce(&self) -> QForm {
        let mut f = *self;
        for _ in 0..10_000 {
            if f.is_reduced() {
                return f;
            }
            f = f.rho();
        }
        panic!("reduction did not terminate for {:?}", self);
    }

    /// Gauss/Dirichlet composition of primitive forms of equal discriminant.
    fn compose(&self, other: &QForm) -> QForm {
        let d = self.disc();
        assert_eq!(d, other.disc());
        let (a1, b1) = (self.a, self.b);
        let (a2, b2) = (other.a, other.b);
        let beta = (b1 + b2) / 2;
        // d1 = gcd(a1, a2, β) with Bézout witnesses x·a1 + y·a2 + z·β = d1.
        let g1 = BigInt::from(a1).extended_gcd(&BigInt::from(a2));
        let g2 = g1.gcd.extended_gcd(&BigInt::from(beta));
        let d1 = g2.gcd.clone();
        let x = &g2.x * &g1.x;
        let y = &g2.x * &g1.y;
        let z = g2.y.clone();
        let a3 = BigInt::from(a1) * a2 / (&d1 * &d1);
        let two_a3 = BigInt::from(2) * &a3;
        let b3_num: BigInt = x * BigInt::from(a1) * b2
            + y * BigInt::from(a2) * b1
            + z * ((BigInt::from(b1) * b2 + d) / 2);
        assert!((&b3_num % &d1).is_zero(), "composition congruences are solvable");
        let b3 = (b3_num / &d1).mod_floor(&two_a3);
        let c3_num = &b3 * &b3 - d;
        let c3_den = BigInt::from(4) * &a3;
        assert!((&c3_num % &c3_den).is_zero(), "B² ≡ D mod 4A after composition");
        let c3 = c3_num / c3_den;
        let f = QForm {
            a: a3.to_i64().expect("form entry fits"),
            b: b3.to_i64().expect("form entry fits"),
            c: c3.to_i64().expect("form entry fits"),
        };
        debug_assert_eq!(f.disc(), d, "composition preserves the discriminant");
        f
    }

    /// The automorph of the form attached to the fundamental solution of
    /// `t² − D·u² = 4`: an `SL₂(Z)` matrix fixing both roots of the form.
    pub fn automorph(&self, t: i64, u: i64) -> [[i64; 2]; 2] {
        let m = [
            [(t - self.b * u) / 2, -self.c * u],
            [self.a * u, (t + self.b * u) / 2],
        ];
        debug_assert_eq!(m[0][0] * m[1][1] - m[0][1] * m[1][0], 1, "automorph has det 1");
        m
    }
}

fn int_sqrt(n: i64) -> i64 {
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// The narrow class group of the order of conductor `C` in `F`, presented
/// as the form class group of discriminant `ΔC²`.
#[derive(Debug, Clone)]
pub struct ClassGroup {
    conductor: i64,
    disc: i64,
    /// Canonical representative (lexicographic minimum of the cycle) per class.
    reps: Vec<QForm>,
    /// Map from reduced form to its class index.
    class_of_reduced: BTreeMap<QForm, usize>,
    /// Composition table.
    table: Vec<Vec<usize>>,
    identity: usize,
}

impl ClassGroup {
    pub fn new(field: &QuadField, conductor: i64) -> Result<Self, FieldError> {
        if conductor < 1 || (conductor > 1 && field.delta().gcd(&conductor) != 1) {
            return Err(FieldError::BadConductor { c: conductor, delta: field.delta() });
        }
        let disc = field.delta() * conductor * conductor;
        // Enumerate reduced primitive forms of discriminant `disc`.
        let sqrt_d = int_sqrt(disc);
        let mut reduced = Vec::new();
        for b in 1..=sqrt_d {
            if (disc - b * b) % 4 != 0 {
                continue;
            }
            let ac = (b * b - disc) / 4; // negative
            for a_abs in 1..=((disc as f64).sqrt() as i64 + 1) {
                if ac % a_abs != 0 {
                    continue;
                }
                for a in [a_abs, -a_abs] {
                    let c = ac / a;
                    let f = QForm { a, b, c };
                    if f.is_primitive() && f.is_reduced() {
                        reduced.push(f);
                    }
                }
            }
        }
        reduced.sort();
        reduced.dedup();
        // Partition into ρ-cycles: each cycle is one narrow class.
        let mut class_of_reduced = BTreeMap::new();
        let mut reps = Vec::new();
        for f in &reduced {
            if class_of_reduced.contains_key(f) {
                continue;
            }
            let cyc = f.cycle();
            let rep = *cyc.iter().min().expect("cycle nonempty");
            let idx = reps.len();
            reps.push(rep);
            for g in cyc {
                class_of_reduced.insert(g, idx);
            }
        }
        let h = reps.len();
        let mut group = ClassGroup {
            conductor,
            disc,
            reps,
            class_of_reduced,
            table: Vec::new(),
            identity: 0,
        };
        let mut table = vec![vec![0usize; h]; h];
        #[allow(clippy::needless_range_loop)] // symmetric fill writes (i, j) and (j, i)
        for i in 0..h {
            for j in 0..=i {
                let prod = group.class_index(&group.reps[i].compose(&group.reps[j]));
                table[i][j] = prod;
                table[j][i] = prod;
            }
        }
        group.table = table;
        // Principal form: (1, b₀, (b₀² − D)/4) with b₀ the largest value
        // ≤ √D of the discriminant's parity; it is reduced.
        let b0 = if disc % 2 == 0 {
            2 * (sqrt_d / 2)
        } else {
            2 * ((sqrt_d - 1) / 2) + 1
        };
        group.identity = group.class_index(&QForm {
            a: 1,
            b: b0,
            c: (b0 * b0 - disc) / 4,
        });
        Ok(group)
    }

    pub fn class_count(&self) -> usize {
        self.reps.len()
    }

    pub fn disc(&self) -> i64 {
        self.disc
    }

    pub fn conductor(&self) -> i64 {
        self.conductor
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn rep(&self, class: usize) -> QForm {
        self.reps[class]
    }

    /// The class index of an arbitrary form of this discriminant.
    pub fn class_index(&self, f: &QForm) -> usize {
        *self
            .class_of_reduced
            .get(&f.reduce())
            .expect("every reduced form of the discriminant is catalogued")
    }

    pub fn compose_classes(&self, i: usize, j: usize) -> usize {
        self.table[i][j]
    }

    pub fn inverse_class(&self, i: usize) -> usize {
        let f = self.reps[i];
        self.class_index(&QForm { a: f.a, b: -f.b, c: f.c })
    }

    /// Order of a class.
    pub fn class_order(&self, i: usize) -> usize {
        let mut k = 1;
        let mut acc = i;
        while acc != self.identity {
            acc = self.compose_classes(acc, i);
            k += 1;
        }
        k
    }

    /// The narrow class of an integral ideal (conductor 1 only): the class
    /// of the norm form on an HNF basis of the ideal.
    pub fn class_of_ideal(&self, field: &QuadField, ideal: &FieldIdeal) -> Result<usize, FieldError> {
        if self.conductor != 1 {
            return Err(FieldError::ConductorUnsupported(self.conductor));
        }
        // f(x, y) = N(a·x + (b + cθ)·y)/N(I). The HNF basis has constant
        // orientation across all ideals, so this map is a group
        // homomorphism onto form classes (the constant twist at most
        // replaces every class by its inverse, which is invisible to the
        // invariants used here); the multiplicativity test pins it down.
        let alpha = FieldElt::new(ideal.a.clone(), 0);
        let beta = FieldElt::new(ideal.b.clone(), ideal.c.clone());
        let n = ideal.norm();
        let fa = (field.norm(&alpha) / &n).to_i64().expect("form entry fits");
        let fc = (field.norm(&beta) / &n).to_i64().expect("form entry fits");
        let cross = field.trace(&field.mul(&alpha, &field.conj(&beta)));
        let fb = (cross / &n).to_i64().expect("form entry fits");
        let f = QForm { a: fa, b: fb, c: fc };
        debug_assert_eq!(f.disc(), self.disc, "norm form has the field discriminant");
        Ok(self.class_index(&f))
    }

    /// The narrow class of a principal ideal `(γ)`. The module itself
    /// remembers the narrow data: the norm form of `(γ)` is the principal
    /// form exactly when some unit multiple of `γ` is totally positive.
    pub fn class_of_element(&self, field: &QuadField, gamma: &FieldElt) -> Result<usize, FieldError> {
        let ideal = FieldIdeal::from_generators(field, std::slice::from_ref(gamma));
        self.class_of_ideal(field, &ideal)
    }

    /// All characters of the group, as exponent vectors against a cyclic
    /// decomposition; values are roots of unity of order dividing the class
    /// order.
    pub fn characters(&self, field: &QuadField) -> Result<Vec<NarrowClassChar>, FieldError> {
        let h = self.class_count();
        // Cyclic decomposition by greedy maximal-order generators.
        let mut gens: Vec<(usize, usize)> = Vec::new(); // (class, order)
        let mut subgroup: Vec<usize> = vec![self.identity];
        while subgroup.len() < h {
            let (g, order) = (0..h)
                .filter(|c| !subgroup.contains(c))
                .map(|c| (c, self.class_order(c)))
                .max_by_key(|&(_, o)| o)
                .expect("group not exhausted");
            gens.push((g, order));
            let mut new_sub = Vec::new();
            let mut pow = self.identity;
            for _ in 0..order {
                for s in &subgroup {
                    new_sub.push(self.compose_classes(pow, *s));
                }
                pow = self.compose_classes(pow, g);
            }
            new_sub.sort_unstable();
            new_sub.dedup();
            subgroup = new_sub;
        }
        // Character table: all exponent combinations on the generators.
        let mut chars = vec![NarrowClassChar {
            group: self.clone(),
            gen_classes: gens.iter().map(|&(g, _)| g).collect(),
            gen_orders: gens.iter().map(|&(_, o)| o).collect(),
            exponents: vec![0; gens.len()],
            odd: false,
        }];
        for (idx, &(_, order)) in gens.iter().enumerate() {
            let mut next = Vec::new();
            for ch in &chars {
                for e in 0..order {
                    let mut c2 = ch.clone();
                    c2.exponents[idx] = e;
                    next.push(c2);
                }
            }
            chars = next;
        }
        // Parity: value on the narrow class of (√Δ).
        let delta_class = self.class_of_ideal(
            field,
            &FieldIdeal::from_generators(field, &[field.sqrt_delta()]),
        )?;
        for ch in &mut chars {
            let (num, den) = ch.exponent_on_class(delta_class);
            // (√Δ) has order ≤ 2, so the value is ±1; odd ⟺ value = −1,
            // i.e. the root-of-unity exponent num/den equals 1/2.
            ch.odd = 2 * num == den;
        }
        Ok(chars)
    }
}

/// A character of the narrow class group, with values in roots of unity
/// recorded exactly (as exponents) and realizable p-adically on demand.
#[derive(Debug, Clone)]
pub struct NarrowClassChar {
    group: ClassGroup,
    gen_classes: Vec<usize>,
    gen_orders: Vec<usize>,
    /// `φ(gen_i) = ζ_{order_i}^{exponents_i}`.
    exponents: Vec<usize>,
    odd: bool,
}

impl NarrowClassChar {
    pub fn group(&self) -> &ClassGroup {
        &self.group
    }

    pub fn is_odd(&self) -> bool {
        self.odd
    }

    /// `true` iff every value is ±1.
    pub fn is_quadratic(&self) -> bool {
        self.gen_orders
            .iter()
            .zip(&self.exponents)
            .all(|(&o, &e)| (2 * e) % o == 0)
    }

    pub fn is_trivial(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }

    /// The value on a class as a rational root-of-unity exponent
    /// `num/den` (i.e. the value is `e^{2πi·num/den}`), reduced.
    fn exponent_on_class(&self, class: usize) -> (i64, i64) {
        // Decompose the class over the generators by exhaustive search
        // (groups here are tiny).
        let dims: Vec<usize> = self.gen_orders.clone();
        let total: usize = dims.iter().product();
        for code in 0..total {
            let mut rem = code;
            let mut acc = self.group.identity();
            let mut expo = Vec::with_capacity(dims.len());
            for (g, &o) in self.gen_classes.iter().zip(&dims) {
                let e = rem % o;
                rem /= o;
                expo.push(e);
                for _ in 0..e {
                    acc = self.group.compose_classes(acc, *g);
                }
            }
            if acc == class {
                let mut num = 0i64;
                let mut den = 1i64;
                for ((&e, &o), &chi_e) in expo.iter().zip(&dims).zip(&self.exponents) {
                    // add e·chi_e/o
                    num = num * o as i64 + den * (e * chi_e) as i64;
                    den *= o as i64;
                }
                let g = num.gcd(&den);
                if g != 0 {
                    num /= g;
                    den /= g;
                }
                return (num.rem_euclid(den), den);
            }
        }
        unreachable!("class decomposes over the generators");
    }

    /// The value on a class as an exact sign, when the character is
    /// quadratic.
    pub fn sign_on_class(&self, class: usize) -> i8 {
        assert!(self.is_quadratic(), "non-quadratic character needs p-adic values");
        let (num, den) = self.exponent_on_class(class);
        // Quadratic values have exponent 0 or 1/2.
        if num == 0 {
            1
        } else {
            debug_assert_eq!(2 * num, den);
            -1
        }
    }

    /// The value on a class as a p-adic root of unity (requires the value
    /// order to divide p − 1).
    pub fn value_on_class(&self, class: usize, p: u64, m: u32) -> Result<PadicNum, FieldError> {
        let (num, den) = self.exponent_on_class(class);
        if den == 1 {
            return Ok(PadicNum::one(p, m));
        }
        if (p as i64 - 1) % den != 0 {
            return Err(FieldError::CharacterNotRealizable { order: den as usize, p });
        }
        if den == 2 {
            return Ok(PadicNum::from_i64(p, -1, m));
        }
        // ζ_den = ω(g)^((p−1)/den) for a generator g of (Z/p)^×.
        let g = (2..p).find(|&g| {
            let mut x = 1u64;
            let mut ord = 0u64;
            loop {
                x = x * g % p;
                ord += 1;
                if x == 1 {
                    break;
                }
            }
            ord == p - 1
        }).expect("(Z/p)^× is cyclic");
        let zeta = PadicNum::from_i64(p, g as i64, m)
            .teichmuller()?
            .pow_i64((p as i64 - 1) / den)?;
        Ok(zeta.pow_i64(num)?)
    }

    /// Value on an integral ideal coprime to the conductor.
    pub fn value_on_ideal(
        &self,
        field: &QuadField,
        ideal: &FieldIdeal,
        p: u64,
        m: u32,
    ) -> Result<PadicNum, FieldError> {
        let class = self.group.class_of_ideal(field, ideal)?;
        self.value_on_class(class, p, m)
    }
}

/// Per-narrow-class data for the modular-symbol pipeline: a representative
/// form, the automorph matrix of the totally positive fundamental unit of
/// the order, and the coset tag distinguishing the class's component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingData {
    pub class_index: usize,
    pub form: QForm,
    /// `SL₂(Z)` automorph fixing the form's roots.
    pub gamma: [[i64; 2]; 2],
    /// Identifies the component of the class in level structure; classes
    /// are indexed consistently with the group's class indices.
    pub coset_tag: usize,
}

/// Build the per-class embedding data. Requires every prime factor of
/// `N·C` to split in `F` (the level/conductor condition), and `p` inert.
pub fn embedding_data(
    field: &QuadField,
    group: &ClassGroup,
    level_n: i64,
    p: i64,
) -> Result<Vec<EmbeddingData>, FieldError> {
    let mut nc = level_n * group.conductor();
    let mut q = 2;
    while q * q <= nc {
        if nc % q == 0 {
            if field.splitting_type(q) != SplitType::Split {
                return Err(FieldError::MustSplit { q });
            }
            while nc % q == 0 {
                nc /= q;
            }
        }
        q += 1;
    }
    if nc > 1 && field.splitting_type(nc) != SplitType::Split {
        return Err(FieldError::MustSplit { q: nc });
    }
    if field.splitting_type(p) != SplitType::Inert {
        return Err(FieldError::MustBeInert { p });
    }
    let disc = group.disc();
    let (t, u) = pell_four(disc)?;
    let (t, u) = (
        t.to_i64().expect("Pell solution fits"),
        u.to_i64().expect("Pell solution fits"),
    );
    Ok((0..group.class_count())
        .map(|idx| {
            let form = group.rep(idx);
            EmbeddingData {
                class_index: idx,
                form,
                gamma: form.automorph(t, u),
                coset_tag: idx,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f12() -> QuadField {
        QuadField::new(12).unwrap()
    }

    #[test]
    fn field_constants() {
        let f = f12();
        // θ = 3 − √3: Tr θ = 6, N θ = 6.
        assert_eq!(f.theta_trace(), 6);
        assert_eq!(f.theta_norm(), 6);
        assert_eq!(f.h_plus(), 2);
        // ε₁ = 2 + √3 = 5 − θ.
        assert_eq!(f.eps1_elt(), FieldElt::new(5, -1));
        assert!(f.norm(&f.eps1_elt()).is_one());
        assert!(f.is_totally_positive(&f.eps1_elt()));

        let f8 = QuadField::new(8).unwrap();
        // θ = 2 − √2: ε₁ = 3 + 2√2 = 7 − 2θ; h⁺ = 1.
        assert_eq!(f8.eps1_elt(), FieldElt::new(7, -2));
        assert_eq!(f8.h_plus(), 1);

        let f5 = QuadField::new(5).unwrap();
        // ε₁ = (3+√5)/2 = 4 − θ (the square of the norm −1 unit).
        assert_eq!(f5.eps1_elt(), FieldElt::new(4, -1));
        assert_eq!(f5.h_plus(), 1);

        assert_eq!(QuadField::new(20).unwrap_err(), FieldError::NotFundamental(20));
        assert_eq!(QuadField::new(-3).unwrap_err(), FieldError::NotFundamental(-3));
        assert_eq!(QuadField::new(16).unwrap_err(), FieldError::NotFundamental(16));
    }

    #[test]
    fn sqrt_delta_squares_to_delta() {
        for delta in [5i64, 8, 12, 13, 40] {
            let f = QuadField::new(delta).unwrap();
            let d = f.sqrt_delta();
            let sq = f.mul(&d, &d);
            assert_eq!(sq, FieldElt::new(delta, 0));
            // δ has mixed signs: σ₁δ > 0 > σ₂δ.
            assert_eq!(f.embedding_sign(&d, false), 1);
            assert_eq!(f.embedding_sign(&d, true), -1);
        }
    }

    #[test]
    fn splitting_types_match_legendre_oracle() {
        let f5 = QuadField::new(5).unwrap();
        assert_eq!(f5.splitting_type(11), SplitType::Split); // 5 ≡ 4² mod 11
        assert_eq!(f5.splitting_type(7), SplitType::Inert);
        assert_eq!(f5.splitting_type(5), SplitType::Ramified);

        let f = f12();
        assert_eq!(f.splitting_type(2), SplitType::Ramified);
        assert_eq!(f.splitting_type(3), SplitType::Ramified);
        assert_eq!(f.splitting_type(13), SplitType::Split); // 12 ≡ 5² mod 13
        assert_eq!(f.splitting_type(17), SplitType::Inert);

        let f8 = QuadField::new(8).unwrap();
        assert_eq!(f8.splitting_type(11), SplitType::Inert); // 2 is not a QR mod 11
        assert_eq!(f8.splitting_type(7), SplitType::Split); // 8 ≡ 1 mod 7, 2 ≡ 3² mod 7
    }

    #[test]
    fn prime_ideal_norms() {
        let f = f12();
        for q in [2i64, 3, 5, 7, 11, 13, 17] {
            for prime in f.primes_above(q) {
                assert_eq!(prime.ideal.norm(), prime.norm, "q = {q}");
                // θ·ideal ⊆ ideal (it is an O_F-module).
                let gens = [
                    FieldElt::new(prime.ideal.a.clone(), 0),
                    FieldElt::new(prime.ideal.b.clone(), prime.ideal.c.clone()),
                ];
                for g in &gens {
                    let tg = f.mul(g, &FieldElt::new(0, 1));
                    assert!(prime.ideal.contains(&tg));
                }
            }
        }
    }

    #[test]
    fn ideal_divisor_lattice() {
        let f = f12();
        // (6) = 𝔭₂²·𝔭₃² (2 and 3 both ramify), so (6) has 9 divisors.
        let six = FieldIdeal::from_generators(&f, &[FieldElt::new(6, 0)]);
        let divs = six.divisors(&f);
        assert_eq!(divs.len(), 9);
        for d in &divs {
            assert!(six.divisible_by(d));
        }
        // Unit ideal: single divisor.
        assert_eq!(FieldIdeal::unit_ideal().divisors(&f).len(), 1);
        // A split prime: two divisors.
        let p13 = &f.primes_above(13)[0];
        assert_eq!(p13.ideal.divisors(&f).len(), 2);
    }

    #[test]
    fn trace_slice_matches_box_scan() {
        for delta in [5i64, 8, 12, 13] {
            let f = QuadField::new(delta).unwrap();
            for n in 1..=30u32 {
                let slice = trace_slice(&f, n);
                // Naive scan over a generous window.
                let nd = n as i64 * f.dprime();
                let scan = ((nd / 2 - 40 * n as i64)..=(nd / 2 + 40 * n as i64))
                    .filter(|&x| {
                        let beta_gen = FieldElt::new(x, -(n as i64));
                        // β ≫ 0 ⟺ σ₁(x − nθ) > 0 and σ₂(x − nθ) < 0
                        // (dividing by √Δ flips the second sign).
                        f.embedding_sign(&beta_gen, false) > 0
                            && f.embedding_sign(&beta_gen, true) < 0
                    })
                    .count();
                assert_eq!(slice.len(), scan, "Δ = {delta}, n = {n}");
                for beta in &slice {
                    // (β)𝔡 is integral: its generator is an algebraic integer.
                    assert!(beta.ideal_norm(&f) > BigInt::zero());
                }
            }
        }
    }

    #[test]
    fn delta12_reduced_forms_and_classes() {
        let f = f12();
        let group = ClassGroup::new(&f, 1).unwrap();
        assert_eq!(group.class_count(), 2);
        // The two cycles found by hand:
        let principal = group.class_index(&QForm { a: 1, b: 2, c: -2 });
        assert_eq!(principal, group.identity());
        assert_eq!(group.class_index(&QForm { a: -2, b: 2, c: 1 }), principal);
        let other = group.class_index(&QForm { a: 2, b: 2, c: -1 });
        assert_ne!(other, principal);
        assert_eq!(group.class_index(&QForm { a: -1, b: 2, c: 2 }), other);
        // Order 2: other² = identity.
        assert_eq!(group.compose_classes(other, other), principal);
    }

    #[test]
    fn automorph_of_principal_form_disc12() {
        let form = QForm { a: 1, b: 2, c: -2 };
        // Pell: t² − 12u² = 4 has fundamental solution (4, 1).
        let m = form.automorph(4, 1);
        assert_eq!(m, [[1, 2], [1, 3]]);
        // Trace equals Tr ε₁ = 4; det = 1 checked in debug_assert.
        assert_eq!(m[0][0] + m[1][1], 4);
        // The automorph fixes the form's roots: A·r² + B·r + C = 0 is
        // preserved, i.e. the form evaluated on (m·(x,y)) equals the form.
        let (a, b, c) = (form.a, form.b, form.c);
        let eval = |x: i64, y: i64| a * x * x + b * x * y + c * y * y;
        for (x, y) in [(1i64, 0i64), (0, 1), (1, 1), (2, -1)] {
            let (xx, yy) = (m[0][0] * x + m[0][1] * y, m[1][0] * x + m[1][1] * y);
            assert_eq!(eval(xx, yy), eval(x, y));
        }
    }

    #[test]
    fn characters_of_disc12() {
        let f = f12();
        let group = ClassGroup::new(&f, 1).unwrap();
        let chars = group.characters(&f).unwrap();
        assert_eq!(chars.len(), 2);
        let odd: Vec<_> = chars.iter().filter(|c| c.is_odd()).collect();
        let even: Vec<_> = chars.iter().filter(|c| !c.is_odd()).collect();
        assert_eq!(odd.len(), 1);
        assert_eq!(even.len(), 1);
        assert!(even[0].is_trivial());
        // Oddness pinned on the class of (√Δ): φ((√Δ)) = −1 exactly.
        let delta_ideal = FieldIdeal::from_generators(&f, &[f.sqrt_delta()]);
        let val = odd[0]
            .value_on_ideal(&f, &delta_ideal, 17, 4)
            .unwrap();
        assert!(val.agrees_with(&PadicNum::from_i64(17, -1, 4)));
        assert_eq!(odd[0].sign_on_class(group.class_of_ideal(&f, &delta_ideal).unwrap()), -1);
    }

    #[test]
    fn no_odd_characters_when_unit_norm_is_minus_one() {
        // Δ = 5 and Δ = 8: fundamental unit of norm −1, h⁺ = 1.
        for delta in [5i64, 8] {
            let f = QuadField::new(delta).unwrap();
            let group = ClassGroup::new(&f, 1).unwrap();
            let chars = group.characters(&f).unwrap();
            assert_eq!(chars.len(), 1, "Δ = {delta}");
            assert!(!chars[0].is_odd());
        }
    }

    #[test]
    fn principal_classes_detect_total_positivity() {
        let f = f12();
        let group = ClassGroup::new(&f, 1).unwrap();
        // ε₁ is totally positive: trivial class.
        assert_eq!(
            group.class_of_element(&f, &f.eps1_elt()).unwrap(),
            group.identity()
        );
        // √Δ has mixed signs: the sign class, here nontrivial.
        let c = group.class_of_element(&f, &f.sqrt_delta()).unwrap();
        assert_ne!(c, group.identity());
        // A totally negative element generates the same module as its
        // negation, and is narrowly trivial.
        let neg = FieldElt::new(-7, 0);
        assert_eq!(group.class_of_element(&f, &neg).unwrap(), group.identity());
    }

    #[test]
    fn ideal_class_map_is_multiplicative() {
        for delta in [12i64, 40] {
            let f = QuadField::new(delta).unwrap();
            let group = ClassGroup::new(&f, 1).unwrap();
            let mut ideals = Vec::new();
            for q in [5i64, 7, 11, 13, 17, 19, 23] {
                if f.splitting_type(q) != SplitType::Inert {
                    for pr in f.primes_above(q) {
                        ideals.push(pr.ideal);
                    }
                }
            }
            for i in &ideals {
                for j in &ideals {
                    let ci = group.class_of_ideal(&f, i).unwrap();
                    let cj = group.class_of_ideal(&f, j).unwrap();
                    let cij = group.class_of_ideal(&f, &i.mul(&f, j)).unwrap();
                    assert_eq!(
                        group.compose_classes(ci, cj),
                        cij,
                        "Δ = {delta}: class map must be a homomorphism"
                    );
                }
            }
        }
    }

    #[test]
    fn class_group_of_disc_40_has_order_two() {
        let f = QuadField::new(40).unwrap();
        let group = ClassGroup::new(&f, 1).unwrap();
        assert_eq!(group.class_count(), 2);
    }

    #[test]
    fn embedding_data_for_desk_config() {
        let f = f12();
        let group = ClassGroup::new(&f, 1).unwrap();
        let data = embedding_data(&f, &group, 1, 17).unwrap();
        assert_eq!(data.len(), 2);
        for d in &data {
            let m = d.gamma;
            assert_eq!(m[0][0] * m[1][1] - m[0][1] * m[1][0], 1);
            assert_eq!(m[0][0] + m[1][1], 4); // Tr ε₁
        }
    }

    proptest! {
        #[test]
        fn prop_ideal_norm_is_multiplicative(q1 in 2i64..60, q2 in 2i64..60) {
            let f = f12();
            let primes = |q: i64| -> Vec<FieldIdeal> {
                if (2..q).any(|d| q % d == 0) { return vec![]; }
                f.primes_above(q).into_iter().map(|p| p.ideal).collect()
            };
            for i in primes(q1) {
                for j in primes(q2) {
                    let prod = i.mul(&f, &j);
                    prop_assert_eq!(prod.norm(), i.norm() * j.norm());
                }
            }
        }

        #[test]
        fn prop_element_norm_is_multiplicative(
            a1 in -30i64..30, b1 in -30i64..30, a2 in -30i64..30, b2 in -30i64..30,
        ) {
            let f = f12();
            let (x, y) = (FieldElt::new(a1, b1), FieldElt::new(a2, b2));
            prop_assert_eq!(f.norm(&f.mul(&x, &y)), f.norm(&x) * f.norm(&y));
        }
    }
}
