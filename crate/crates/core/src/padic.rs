//! Capped-precision p-adic arithmetic over big integers.
//!
//! A [`PadicNum`] stores a prime `p`, a valuation, and a unit part carried to
//! `m` significant base-`p` digits, so every number is an explicit coset
//! `x + O(p^N)` with `N = valuation + m`. Zero is represented as "zero to
//! absolute precision `N`" and all comparisons are precision-relative.
//!
//! Transcendental operations (`teichmuller`, `angle`, `plog`, `pexp`,
//! `sqrt`) are computed with a widened working modulus so that their results
//! are exact to the precision of the input: series denominators are divided
//! out inside guard digits instead of eroding the result's precision field.
//!
//! [`QuadPadic`] implements the unramified quadratic extension in
//! coordinates over the basis `(1, T)` with `T^2 = tr·T − nm`, which is the
//! completion of a real quadratic field at an inert prime. Elements are kept
//! integral with a single shared absolute precision, which suffices for this
//! crate: every extension value that arises downstream is a unit or an
//! integer of the extension.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

/// Errors from p-adic arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PadicError {
    /// Two operands live over different primes.
    #[error("prime mismatch: {left} vs {right}")]
    PrimeMismatch { left: u64, right: u64 },
    /// Division by a number that is zero at its working precision.
    #[error("division by zero (at working precision)")]
    DivisionByZero,
    /// An operation defined only on p-adic units was given a non-unit.
    #[error("operand is not a p-adic unit (valuation {valuation})")]
    NotAUnit { valuation: i64 },
    /// `pexp` requires positive valuation for convergence (p odd).
    #[error("exponential diverges: argument has valuation {valuation} < 1")]
    ExpDomain { valuation: i64 },
    /// The operand is not a square (unit part is a quadratic non-residue,
    /// or the valuation is odd).
    #[error("operand is not a square")]
    NotASquare,
    /// A nonzero number cannot be created with zero significant digits.
    #[error("requested zero significant digits for a nonzero value")]
    ZeroPrecision,
    /// Raising a non-unit to a big-integer exponent would overflow the
    /// valuation field.
    #[error("big exponent on a non-unit")]
    BigExponent,
    /// The quadratic extension polynomial is reducible mod p, so the
    /// requested extension is not a field.
    #[error("x^2 - {tr}x + {nm} is reducible mod {p}: extension is not inert")]
    NotInert { p: u64, tr: i64, nm: i64 },
}

/// `p^k` as a big integer.
pub(crate) fn pow_of(p: u64, k: u32) -> BigUint {
    BigUint::from(p).pow(k)
}

/// Modular inverse of `a` modulo `modulus`, if `gcd(a, modulus) = 1`.
pub(crate) fn modinv(a: &BigUint, modulus: &BigUint) -> Option<BigUint> {
    let a = BigInt::from(a.clone());
    let m = BigInt::from(modulus.clone());
    let g = a.extended_gcd(&m);
    if !g.gcd.is_one() {
        return None;
    }
    Some(g.x.mod_floor(&m).to_biguint().expect("mod_floor is nonnegative"))
}

/// `v_p(n)` together with the unit cofactor `n / p^v`, for nonzero `n`.
fn strip_p(p: u64, n: &BigUint) -> (u32, BigUint) {
    debug_assert!(!n.is_zero());
    let p_big = BigUint::from(p);
    let mut v = 0u32;
    let mut u = n.clone();
    loop {
        let (q, r) = u.div_rem(&p_big);
        if r.is_zero() {
            v += 1;
            u = q;
        } else {
            return (v, u);
        }
    }
}

/// A p-adic number with capped precision: `p^val · unit + O(p^(val+m))`.
///
/// Invariants: for nonzero values `unit` is prime to `p`, lies in
/// `[1, p^m)`, and `m ≥ 1`; zero is stored as `unit = 0, m = 0` with `val`
/// holding the absolute precision of the zero coset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PadicNum {
    p: u64,
    val: i64,
    unit: BigUint,
    m: u32,
}

impl PadicNum {
    /// Zero known to absolute precision `abs_prec`: the coset `O(p^abs_prec)`.
    pub fn zero(p: u64, abs_prec: i64) -> Self {
        PadicNum { p, val: abs_prec, unit: BigUint::zero(), m: 0 }
    }

    /// One to `m` significant digits.
    pub fn one(p: u64, m: u32) -> Self {
        PadicNum { p, val: 0, unit: BigUint::one(), m }
    }

    /// Raw constructor from a valuation and unit part; reduces the unit
    /// modulo `p^m` and validates the invariants.
    pub fn from_unit(p: u64, val: i64, unit: &BigUint, m: u32) -> Result<Self, PadicError> {
        if m == 0 {
            return Err(PadicError::ZeroPrecision);
        }
        let reduced = unit % pow_of(p, m);
        if reduced.is_zero() {
            // The given "unit" vanished mod p^m: it was never a unit.
            return Err(PadicError::ZeroPrecision);
        }
        let (v, u) = strip_p(p, &reduced);
        if v > 0 {
            // Not a unit: fold the p-part into the valuation. The stripped
            // digits are genuine, so keep the absolute precision val + m.
            let m2 = m - v;
            if m2 == 0 {
                return Ok(PadicNum::zero(p, val + m as i64));
            }
            return Ok(PadicNum { p, val: val + v as i64, unit: u % pow_of(p, m2), m: m2 });
        }
        Ok(PadicNum { p, val, unit: reduced, m })
    }

    /// An integer carried to `m` significant digits (or zero to absolute
    /// precision `m`).
    pub fn from_bigint(p: u64, n: &BigInt, m: u32) -> Self {
        if n.is_zero() {
            return PadicNum::zero(p, m as i64);
        }
        let (v, u) = strip_p(p, n.magnitude());
        let modulus = pow_of(p, m.max(1));
        let mut unit = u % &modulus;
        if n.is_negative() {
            unit = (&modulus - &unit) % &modulus;
        }
        PadicNum { p, val: v as i64, unit, m: m.max(1) }
    }

    /// Convenience constructor from a machine integer.
    pub fn from_i64(p: u64, n: i64, m: u32) -> Self {
        Self::from_bigint(p, &BigInt::from(n), m)
    }

    /// A rational `num/den` carried to `m` significant digits.
    pub fn from_ratio(p: u64, num: &BigInt, den: &BigInt, m: u32) -> Result<Self, PadicError> {
        if den.is_zero() {
            return Err(PadicError::DivisionByZero);
        }
        let n = Self::from_bigint(p, num, m);
        let d = Self::from_bigint(p, den, m);
        n.div(&d)
    }

    /// An integer residue `r mod p^k` re-interpreted as a p-adic number of
    /// absolute precision `k` (valuation read off from `r`).
    pub fn from_residue(p: u64, r: &BigUint, k: u32) -> Self {
        let reduced = r % pow_of(p, k);
        if reduced.is_zero() {
            return PadicNum::zero(p, k as i64);
        }
        let (v, u) = strip_p(p, &reduced);
        PadicNum { p, val: v as i64, unit: u, m: k - v }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    /// `true` iff this is the zero coset at its working precision.
    pub fn is_zero(&self) -> bool {
        self.m == 0
    }

    /// Valuation, or `None` for a zero coset (whose valuation is only
    /// bounded below by its precision).
    pub fn valuation(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.val)
        }
    }

    /// Absolute precision: the number is known modulo `p^abs_prec`.
    pub fn abs_prec(&self) -> i64 {
        self.val + self.m as i64
    }

    /// Number of significant digits (0 for a zero coset).
    pub fn digits(&self) -> u32 {
        self.m
    }

    /// Digit budget for constants derived from this number's context: large
    /// enough that a freshly made constant never truncates a sum (absolute
    /// precision) or a product (digit count) against `self`.
    pub fn context_digits(&self) -> u32 {
        self.abs_prec().max(self.m as i64).max(1) as u32
    }

    /// Unit part in `[0, p^m)`.
    pub fn unit_part(&self) -> &BigUint {
        &self.unit
    }

    /// The base-p digits of the unit part, least significant first,
    /// exactly `m` entries.
    pub fn unit_digits(&self) -> Vec<u64> {
        let p_big = BigUint::from(self.p);
        let mut u = self.unit.clone();
        let mut out = Vec::with_capacity(self.m as usize);
        for _ in 0..self.m {
            let (q, r) = u.div_rem(&p_big);
            out.push(r.to_u64().expect("digit fits in u64"));
            u = q;
        }
        out
    }

    /// The integer residue mod `p^k`, defined when the valuation is ≥ 0 and
    /// `k` does not exceed the absolute precision.
    pub fn residue(&self, k: u32) -> Result<BigUint, PadicError> {
        if self.is_zero() {
            return if (k as i64) <= self.abs_prec() {
                Ok(BigUint::zero())
            } else {
                Err(PadicError::ZeroPrecision)
            };
        }
        if self.val < 0 || (k as i64) > self.abs_prec() {
            return Err(PadicError::ZeroPrecision);
        }
        if self.val >= k as i64 {
            return Ok(BigUint::zero());
        }
        let shifted = &self.unit * pow_of(self.p, self.val as u32);
        Ok(shifted % pow_of(self.p, k))
    }

    /// Cap the absolute precision to `n` (no-op if already coarser).
    pub fn cap_abs_prec(&self, n: i64) -> Self {
        if self.abs_prec() <= n {
            return self.clone();
        }
        if self.is_zero() || self.val >= n {
            return PadicNum::zero(self.p, n);
        }
        let m2 = (n - self.val) as u32;
        PadicNum { p: self.p, val: self.val, unit: &self.unit % pow_of(self.p, m2), m: m2 }
    }

    /// Cap the number of significant digits to `m`.
    pub fn cap_digits(&self, m: u32) -> Self {
        if self.is_zero() || self.m <= m {
            return self.clone();
        }
        self.cap_abs_prec(self.val + m as i64)
    }

    fn check_prime(&self, other: &Self) -> Result<(), PadicError> {
        if self.p != other.p {
            return Err(PadicError::PrimeMismatch { left: self.p, right: other.p });
        }
        Ok(())
    }

    /// Sum, at the minimum of the two absolute precisions.
    pub fn add(&self, other: &Self) -> Result<Self, PadicError> {
        self.check_prime(other)?;
        let n = self.abs_prec().min(other.abs_prec());
        if self.is_zero() {
            return Ok(other.cap_abs_prec(n));
        }
        if other.is_zero() {
            return Ok(self.cap_abs_prec(n));
        }
        let v0 = self.val.min(other.val);
        if v0 >= n {
            return Ok(PadicNum::zero(self.p, n));
        }
        let w = (n - v0) as u32;
        let modulus = pow_of(self.p, w);
        let lift = |x: &PadicNum| -> BigUint {
            (&x.unit * pow_of(x.p, (x.val - v0) as u32)) % &modulus
        };
        let s = (lift(self) + lift(other)) % &modulus;
        if s.is_zero() {
            return Ok(PadicNum::zero(self.p, n));
        }
        let (v, u) = strip_p(self.p, &s);
        if v0 + (v as i64) >= n {
            return Ok(PadicNum::zero(self.p, n));
        }
        Ok(PadicNum { p: self.p, val: v0 + v as i64, unit: u, m: (n - v0) as u32 - v })
    }

    /// Additive inverse (same precision).
    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let modulus = pow_of(self.p, self.m);
        PadicNum { p: self.p, val: self.val, unit: (&modulus - &self.unit) % modulus, m: self.m }
    }

    /// Difference, at the minimum of the two absolute precisions.
    pub fn sub(&self, other: &Self) -> Result<Self, PadicError> {
        self.add(&other.neg())
    }

    /// Product; unit parts multiply at the minimum significant-digit count.
    pub fn mul(&self, other: &Self) -> Result<Self, PadicError> {
        self.check_prime(other)?;
        if self.is_zero() || other.is_zero() {
            // O(p^a)·(p^v u + O(p^b)) = O(p^(a+v)); O(p^a)·O(p^b) = O(p^(a+b)):
            // either way each factor contributes exactly its `val`.
            return Ok(PadicNum::zero(self.p, self.val + other.val));
        }
        let m = self.m.min(other.m);
        let unit = (&self.unit * &other.unit) % pow_of(self.p, m);
        Ok(PadicNum { p: self.p, val: self.val + other.val, unit, m })
    }

    /// Multiplicative inverse of a nonzero coset.
    pub fn inv(&self) -> Result<Self, PadicError> {
        if self.is_zero() {
            return Err(PadicError::DivisionByZero);
        }
        let modulus = pow_of(self.p, self.m);
        let unit = modinv(&self.unit, &modulus).expect("unit part is invertible");
        Ok(PadicNum { p: self.p, val: -self.val, unit, m: self.m })
    }

    /// Quotient `self / other`.
    pub fn div(&self, other: &Self) -> Result<Self, PadicError> {
        self.check_prime(other)?;
        self.mul(&other.inv()?)
    }

    /// `self^e` for a machine-integer exponent (negative exponents invert).
    pub fn pow_i64(&self, e: i64) -> Result<Self, PadicError> {
        if e == 0 {
            return Ok(PadicNum::one(self.p, self.m.max(1)));
        }
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = PadicNum::one(self.p, base.m.max(1));
        let mut sq = base;
        let mut k = e.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&sq)?;
            }
            k >>= 1;
            if k > 0 {
                sq = sq.mul(&sq)?;
            }
        }
        Ok(acc)
    }

    /// `self^e` for a big-integer exponent; requires a unit (the valuation
    /// would otherwise overflow).
    pub fn pow_biguint(&self, e: &BigUint) -> Result<Self, PadicError> {
        if e.is_zero() {
            return Ok(PadicNum::one(self.p, self.m.max(1)));
        }
        if self.is_zero() {
            return Ok(self.clone());
        }
        if self.val != 0 {
            return Err(PadicError::BigExponent);
        }
        let modulus = pow_of(self.p, self.m);
        Ok(PadicNum { p: self.p, val: 0, unit: self.unit.modpow(e, &modulus), m: self.m })
    }

    /// `true` iff the two cosets agree at the smaller of their precisions.
    pub fn agrees_with(&self, other: &Self) -> bool {
        match self.sub(other) {
            Ok(d) => d.is_zero(),
            Err(_) => false,
        }
    }

    /// `true` iff the coset is `0 mod p^n` and is known to at least that
    /// precision.
    pub fn is_zero_to(&self, n: i64) -> bool {
        if self.abs_prec() < n {
            return false;
        }
        self.is_zero() || self.val >= n
    }

    /// `true` iff the cosets agree modulo `p^n`, both knowing ≥ n digits.
    pub fn agrees_to(&self, other: &Self, n: i64) -> bool {
        match self.sub(other) {
            Ok(d) => d.is_zero_to(n),
            Err(_) => false,
        }
    }

    /// Teichmüller lift: the unique `(p−1)`-st root of unity congruent to
    /// this unit mod p, to the unit's full precision.
    pub fn teichmuller(&self) -> Result<Self, PadicError> {
        let v = self.valuation().ok_or(PadicError::DivisionByZero)?;
        if v != 0 {
            return Err(PadicError::NotAUnit { valuation: v });
        }
        let modulus = pow_of(self.p, self.m);
        let p_big = BigUint::from(self.p);
        // x ↦ x^p gains one digit of agreement with ω(x) per step.
        let mut t = self.unit.clone();
        for _ in 0..=self.m {
            t = t.modpow(&p_big, &modulus);
        }
        Ok(PadicNum { p: self.p, val: 0, unit: t, m: self.m })
    }

    /// The principal-unit projection `⟨x⟩ = x / ω(x) ≡ 1 (mod p)`,
    /// defined on units.
    pub fn angle(&self) -> Result<Self, PadicError> {
        self.div(&self.teichmuller()?)
    }

    /// Iwasawa logarithm of a unit: `log⟨x⟩`, computed exactly to the
    /// input's absolute precision (guard digits are internal).
    pub fn plog(&self) -> Result<Self, PadicError> {
        let v = self.valuation().ok_or(PadicError::DivisionByZero)?;
        if v != 0 {
            return Err(PadicError::NotAUnit { valuation: v });
        }
        let one_plus_z = self.angle()?;
        let m = self.m;
        let z = one_plus_z.sub(&PadicNum::one(self.p, m))?;
        if z.is_zero() {
            return Ok(PadicNum::zero(self.p, m as i64));
        }
        let sum = log_series(self.p, &z.residue(m)?, m);
        Ok(PadicNum::from_residue(self.p, &sum, m))
    }

    /// p-adic exponential; requires valuation ≥ 1 (p odd). Exact to the
    /// input's absolute precision.
    pub fn pexp(&self) -> Result<Self, PadicError> {
        if self.is_zero() {
            // exp(O(p^N)) = 1 + O(p^N).
            let n = self.abs_prec();
            if n < 1 {
                return Err(PadicError::ExpDomain { valuation: n });
            }
            return Ok(PadicNum::one(self.p, n as u32));
        }
        if self.val < 1 {
            return Err(PadicError::ExpDomain { valuation: self.val });
        }
        let n = self.abs_prec() as u32;
        let sum = exp_series(self.p, &self.residue(n)?, n);
        Ok(PadicNum::from_residue(self.p, &sum, n))
    }

    /// Hensel square root. The valuation must be even and the unit part a
    /// quadratic residue; the root whose unit is congruent to the smaller
    /// of the two mod-p roots is returned.
    pub fn sqrt(&self) -> Result<Self, PadicError> {
        if self.is_zero() {
            // sqrt(O(p^2k)) = O(p^k).
            return Ok(PadicNum::zero(self.p, self.val.div_euclid(2)));
        }
        if self.val % 2 != 0 {
            return Err(PadicError::NotASquare);
        }
        let m = self.m;
        let a = &self.unit;
        // Euler criterion on the residue.
        let p_big = BigUint::from(self.p);
        let a0 = a % &p_big;
        let legendre = a0.modpow(&BigUint::from((self.p - 1) / 2), &p_big);
        if !legendre.is_one() {
            return Err(PadicError::NotASquare);
        }
        let mut r0 = BigUint::zero();
        for x in 1..self.p {
            if (BigUint::from(x) * x) % &p_big == a0 {
                r0 = BigUint::from(x);
                break;
            }
        }
        // Newton lift r ← (r + a/r)/2 doubles the agreement each step.
        let mut r = r0;
        let mut prec = 1u32;
        while prec < m {
            prec = (prec * 2).min(m);
            let modulus = pow_of(self.p, prec);
            let rinv = modinv(&(&r % &modulus), &modulus).expect("odd unit");
            let two_inv = modinv(&BigUint::from(2u32), &modulus).expect("p odd");
            r = ((&r + (a % &modulus) * rinv) * two_inv) % modulus;
        }
        Ok(PadicNum { p: self.p, val: self.val / 2, unit: r, m })
    }
}

/// `log(1 + z) mod p^m` for `z ≡ 0 mod p`, via the alternating series with
/// a widened working modulus so every term's denominator divides out inside
/// guard digits.
fn log_series(p: u64, z: &BigUint, m: u32) -> BigUint {
    let n_max = m + 8;
    let guard = (32 - n_max.leading_zeros()) + 2; // > log_p(n_max) for p ≥ 5
    let w = m + guard;
    let modulus = pow_of(p, w);
    let mut term_pow = BigUint::one();
    let mut acc = BigInt::zero();
    for n in 1..=n_max as u64 {
        term_pow = (&term_pow * z) % &modulus;
        let (e, n_unit) = strip_p(p, &BigUint::from(n));
        // z^n is divisible by p^n ≥ p^e, so this division is exact on the
        // true value; mod p^w it is correct to w − e digits.
        let t = (&term_pow / pow_of(p, e))
            * modinv(&n_unit, &modulus).expect("prime to p")
            % &modulus;
        if n % 2 == 1 {
            acc += BigInt::from(t);
        } else {
            acc -= BigInt::from(t);
        }
    }
    acc.mod_floor(&BigInt::from(pow_of(p, m)))
        .to_biguint()
        .expect("mod_floor is nonnegative")
}

/// `exp(z) mod p^m` for `z ≡ 0 mod p`, same widened-modulus strategy.
fn exp_series(p: u64, z: &BigUint, m: u32) -> BigUint {
    // v(z^n/n!) ≥ n − (n−1)/(p−1) ≥ 3n/4 + 1/4 for p ≥ 5.
    let n_max = (2 * m + 4) as u64;
    let guard = (n_max / 4 + 2) as u32;
    let w = m + guard;
    let modulus = pow_of(p, w);
    let mut acc = BigUint::one();
    let mut z_pow = BigUint::one();
    let mut fact_e = 0u32; // v_p(n!)
    let mut fact_unit = BigUint::one(); // n! / p^(v_p(n!)) mod p^w
    for n in 1..=n_max {
        z_pow = (&z_pow * z) % &modulus;
        let (e, n_unit) = strip_p(p, &BigUint::from(n));
        fact_e += e;
        fact_unit = (&fact_unit * n_unit) % &modulus;
        let t = (&z_pow / pow_of(p, fact_e))
            * modinv(&fact_unit, &modulus).expect("prime to p")
            % &modulus;
        acc = (acc + t) % &modulus;
    }
    acc % pow_of(p, m)
}

impl fmt::Display for PadicNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "O({}^{})", self.p, self.val);
        }
        let mut first = true;
        for (i, d) in self.unit_digits().into_iter().enumerate() {
            if d == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "{}*{}^{}", d, self.p, self.val + i as i64)?;
            first = false;
        }
        debug_assert!(!first, "nonzero numbers have a nonzero digit");
        write!(f, " + O({}^{})", self.p, self.abs_prec())
    }
}

/// The quadratic extension `Q_p(T)/(T^2 − tr·T + nm)`, required inert
/// (irreducible mod p).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadExt {
    pub p: u64,
    pub tr: i64,
    pub nm: i64,
}

impl QuadExt {
    /// Build the extension, verifying `x² − tr·x + nm` has no root mod p.
    pub fn new(p: u64, tr: i64, nm: i64) -> Result<Self, PadicError> {
        let pm = p as i64;
        for x in 0..pm {
            if ((x * x - tr * x + nm) % pm).rem_euclid(pm) == 0 {
                return Err(PadicError::NotInert { p, tr, nm });
            }
        }
        Ok(QuadExt { p, tr, nm })
    }
}

/// An integral element `a + b·T` of the inert quadratic extension, both
/// coordinates carried modulo `p^m` (shared absolute precision `m`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadPadic {
    ext: QuadExt,
    a: BigUint,
    b: BigUint,
    m: u32,
}

impl QuadPadic {
    /// Build from integer coordinates `a + b·T` at absolute precision `m`.
    pub fn new(ext: QuadExt, a: &BigInt, b: &BigInt, m: u32) -> Self {
        let modulus = BigInt::from(pow_of(ext.p, m));
        let red = |x: &BigInt| x.mod_floor(&modulus).to_biguint().expect("nonnegative");
        QuadPadic { ext, a: red(a), b: red(b), m }
    }

    pub fn zero(ext: QuadExt, m: u32) -> Self {
        QuadPadic { ext, a: BigUint::zero(), b: BigUint::zero(), m }
    }

    pub fn one(ext: QuadExt, m: u32) -> Self {
        QuadPadic { ext, a: BigUint::one(), b: BigUint::zero(), m }
    }

    /// Embed a rational integer.
    pub fn from_bigint(ext: QuadExt, n: &BigInt, m: u32) -> Self {
        Self::new(ext, n, &BigInt::zero(), m)
    }

    /// Embed a scalar of nonnegative valuation.
    pub fn from_scalar(ext: QuadExt, x: &PadicNum) -> Result<Self, PadicError> {
        if x.prime() != ext.p {
            return Err(PadicError::PrimeMismatch { left: x.prime(), right: ext.p });
        }
        if x.is_zero() {
            let n = x.abs_prec().max(1) as u32;
            return Ok(QuadPadic::zero(ext, n));
        }
        if x.valuation().unwrap_or(0) < 0 {
            return Err(PadicError::NotAUnit { valuation: x.valuation().unwrap() });
        }
        let n = x.abs_prec() as u32;
        Ok(QuadPadic { ext, a: x.residue(n)?, b: BigUint::zero(), m: n })
    }

    pub fn ext(&self) -> QuadExt {
        self.ext
    }

    /// Absolute precision of both coordinates.
    pub fn prec(&self) -> u32 {
        self.m
    }

    /// The `(1, T)` coordinates as p-adic scalars at this precision.
    pub fn coords(&self) -> (PadicNum, PadicNum) {
        (
            PadicNum::from_residue(self.ext.p, &self.a, self.m),
            PadicNum::from_residue(self.ext.p, &self.b, self.m),
        )
    }

    /// The scalar part, requiring the `T`-coordinate to vanish at precision.
    pub fn as_scalar(&self) -> Option<PadicNum> {
        if self.b.is_zero() {
            Some(PadicNum::from_residue(self.ext.p, &self.a, self.m))
        } else {
            None
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// `true` iff the element is a unit of the extension ring.
    pub fn is_unit(&self) -> bool {
        !self.norm_residue(1).is_zero()
    }

    fn modulus(&self) -> BigUint {
        pow_of(self.ext.p, self.m)
    }

    fn check_compat(&self, other: &Self) -> (QuadExt, u32) {
        assert_eq!(self.ext, other.ext, "mixed quadratic extensions");
        (self.ext, self.m.min(other.m))
    }

    /// Reduce to a (possibly smaller) absolute precision.
    pub fn cap_prec(&self, m: u32) -> Self {
        if m >= self.m {
            return self.clone();
        }
        let modulus = pow_of(self.ext.p, m);
        QuadPadic { ext: self.ext, a: &self.a % &modulus, b: &self.b % modulus, m }
    }

    pub fn add(&self, other: &Self) -> Self {
        let (ext, m) = self.check_compat(other);
        let modulus = pow_of(ext.p, m);
        QuadPadic {
            ext,
            a: (&self.a + &other.a) % &modulus,
            b: (&self.b + &other.b) % modulus,
            m,
        }
    }

    pub fn neg(&self) -> Self {
        let modulus = self.modulus();
        QuadPadic {
            ext: self.ext,
            a: (&modulus - &self.a % &modulus) % &modulus,
            b: (&modulus - &self.b % &modulus) % &modulus,
            m: self.m,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (ext, m) = self.check_compat(other);
        let modulus = BigInt::from(pow_of(ext.p, m));
        let (a1, b1) = (BigInt::from(self.a.clone()), BigInt::from(self.b.clone()));
        let (a2, b2) = (BigInt::from(other.a.clone()), BigInt::from(other.b.clone()));
        // (a1 + b1 T)(a2 + b2 T) with T² = tr·T − nm.
        let bb = &b1 * &b2;
        let a = &a1 * &a2 - BigInt::from(ext.nm) * &bb;
        let b = &a1 * &b2 + &b1 * &a2 + BigInt::from(ext.tr) * &bb;
        let red = |x: BigInt| x.mod_floor(&modulus).to_biguint().expect("nonnegative");
        QuadPadic { ext, a: red(a), b: red(b), m }
    }

    /// Galois conjugate `a + b·T ↦ (a + tr·b) − b·T` (the Frobenius of the
    /// unramified quadratic extension).
    pub fn conj(&self) -> Self {
        let modulus = BigInt::from(self.modulus());
        let a = BigInt::from(self.a.clone()) + BigInt::from(self.ext.tr) * BigInt::from(self.b.clone());
        let b = -BigInt::from(self.b.clone());
        let red = |x: BigInt| x.mod_floor(&modulus).to_biguint().expect("nonnegative");
        QuadPadic { ext: self.ext, a: red(a), b: red(b), m: self.m }
    }

    fn norm_residue(&self, k: u32) -> BigUint {
        let n = self.mul(&self.conj());
        debug_assert!(n.b.is_zero(), "norm lies in the base field");
        &n.a % pow_of(self.ext.p, k.min(self.m))
    }

    /// Field norm down to `Q_p`.
    pub fn norm(&self) -> PadicNum {
        let n = self.mul(&self.conj());
        PadicNum::from_residue(self.ext.p, &n.a, self.m)
    }

    /// Field trace down to `Q_p`.
    pub fn trace(&self) -> PadicNum {
        let t = self.add(&self.conj());
        debug_assert!(t.b.is_zero(), "trace lies in the base field");
        PadicNum::from_residue(self.ext.p, &t.a, self.m)
    }

    /// Multiplicative inverse of a unit: `x̄ / N(x)`.
    pub fn inv(&self) -> Result<Self, PadicError> {
        let modulus = self.modulus();
        let n = self.mul(&self.conj()).a;
        let ninv = modinv(&n, &modulus).ok_or(PadicError::DivisionByZero)?;
        let c = self.conj();
        Ok(QuadPadic {
            ext: self.ext,
            a: (&c.a * &ninv) % &modulus,
            b: (&c.b * &ninv) % &modulus,
            m: self.m,
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self, PadicError> {
        Ok(self.mul(&other.inv()?))
    }

    /// Scale by a base-field element of nonnegative valuation.
    pub fn scale(&self, x: &PadicNum) -> Result<Self, PadicError> {
        Ok(self.mul(&QuadPadic::from_scalar(self.ext, x)?))
    }

    /// `self^e` by binary powering.
    pub fn pow_u64(&self, e: u64) -> Self {
        let mut acc = QuadPadic::one(self.ext, self.m);
        let mut sq = self.clone();
        let mut k = e;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&sq);
            }
            k >>= 1;
            if k > 0 {
                sq = sq.mul(&sq);
            }
        }
        acc
    }

    pub fn pow_biguint(&self, e: &BigUint) -> Self {
        let mut acc = QuadPadic::one(self.ext, self.m);
        let mut sq = self.clone();
        let bits = e.bits();
        for i in 0..bits {
            if e.bit(i) {
                acc = acc.mul(&sq);
            }
            if i + 1 < bits {
                sq = sq.mul(&sq);
            }
        }
        acc
    }

    /// Teichmüller lift in the extension: the `(p²−1)`-st root of unity
    /// congruent to this unit mod p.
    pub fn teichmuller(&self) -> Result<Self, PadicError> {
        if !self.is_unit() {
            return Err(PadicError::NotAUnit { valuation: 1 });
        }
        let p2 = BigUint::from(self.ext.p) * self.ext.p;
        let mut t = self.clone();
        for _ in 0..=self.m {
            t = t.pow_biguint(&p2);
        }
        Ok(t)
    }

    /// Principal-unit projection `⟨x⟩ = x/ω(x) ≡ 1 mod p` for units.
    pub fn angle(&self) -> Result<Self, PadicError> {
        self.div(&self.teichmuller()?)
    }

    /// Iwasawa logarithm of a unit, exact to the shared precision.
    pub fn plog(&self) -> Result<Self, PadicError> {
        let one = QuadPadic::one(self.ext, self.m);
        let z = self.angle()?.sub(&one);
        // Same series as the scalar case, with guard digits in a widened
        // working precision.
        let n_max = (self.m + 8) as u64;
        let guard = (64 - n_max.leading_zeros()) + 2;
        let w = self.m + guard;
        let zw = z.lift_prec(w);
        let mut acc = QuadPadic::zero(self.ext, w);
        let mut z_pow = QuadPadic::one(self.ext, w);
        for n in 1..=n_max {
            z_pow = z_pow.mul(&zw);
            let (e, n_unit) = strip_p(self.ext.p, &BigUint::from(n));
            let t = z_pow.div_exact_p(e).scale_residue(
                &modinv(&n_unit, &pow_of(self.ext.p, w)).expect("prime to p"),
            );
            acc = if n % 2 == 1 { acc.add(&t) } else { acc.sub(&t) };
        }
        Ok(acc.cap_prec(self.m))
    }

    /// p-adic exponential for arguments of valuation ≥ 1, exact to the
    /// shared precision.
    pub fn pexp(&self) -> Result<Self, PadicError> {
        let p_big = BigUint::from(self.ext.p);
        if !(&self.a % &p_big).is_zero() || !(&self.b % &p_big).is_zero() {
            return Err(PadicError::ExpDomain { valuation: 0 });
        }
        let n_max = (2 * self.m + 4) as u64;
        let guard = (n_max / 4 + 2) as u32;
        let w = self.m + guard;
        let zw = self.lift_prec(w);
        let modulus = pow_of(self.ext.p, w);
        let mut acc = QuadPadic::one(self.ext, w);
        let mut z_pow = QuadPadic::one(self.ext, w);
        let mut fact_e = 0u32;
        let mut fact_unit = BigUint::one();
        for n in 1..=n_max {
            z_pow = z_pow.mul(&zw);
            let (e, n_unit) = strip_p(self.ext.p, &BigUint::from(n));
            fact_e += e;
            fact_unit = (&fact_unit * n_unit) % &modulus;
            let t = z_pow
                .div_exact_p(fact_e)
                .scale_residue(&modinv(&fact_unit, &modulus).expect("prime to p"));
            acc = acc.add(&t);
        }
        Ok(acc.cap_prec(self.m))
    }

    /// Re-interpret at a higher working precision (an arbitrary coset lift;
    /// only valid as an internal widening before exact series division).
    fn lift_prec(&self, w: u32) -> Self {
        QuadPadic { ext: self.ext, a: self.a.clone(), b: self.b.clone(), m: w.max(self.m) }
    }

    /// Divide both coordinates by `p^e`; the caller guarantees the true
    /// value is divisible (precision drops by `e` digits, absorbed by the
    /// caller's guard digits).
    fn div_exact_p(&self, e: u32) -> Self {
        let pe = pow_of(self.ext.p, e);
        QuadPadic { ext: self.ext, a: &self.a / &pe, b: &self.b / &pe, m: self.m - e }
    }

    /// Multiply both coordinates by an integer residue.
    fn scale_residue(&self, c: &BigUint) -> Self {
        let modulus = self.modulus();
        QuadPadic {
            ext: self.ext,
            a: (&self.a * c) % &modulus,
            b: (&self.b * c) % &modulus,
            m: self.m,
        }
    }

    /// `true` iff both coordinates agree mod `p^n`.
    pub fn agrees_to(&self, other: &Self, n: u32) -> bool {
        if self.m < n || other.m < n {
            return false;
        }
        let modulus = pow_of(self.ext.p, n);
        self.ext == other.ext
            && (&self.a % &modulus) == (&other.a % &modulus)
            && (&self.b % &modulus) == (&other.b % &modulus)
    }
}

impl fmt::Display for QuadPadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.coords();
        write!(f, "[{}] + [{}]*T", a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q5(n: i64, m: u32) -> PadicNum {
        PadicNum::from_i64(5, n, m)
    }

    #[test]
    fn construction_and_reduction() {
        let x = q5(50, 3);
        assert_eq!(x.valuation(), Some(2));
        assert_eq!(x.unit_part(), &BigUint::from(2u32));
        assert_eq!(x.abs_prec(), 5);
        assert_eq!(x.digits(), 3);

        let z = q5(0, 4);
        assert!(z.is_zero());
        assert_eq!(z.abs_prec(), 4);
    }

    #[test]
    fn rational_constants() {
        // 1/3 = 42 + O(5^3): 3·42 = 126 ≡ 1 (mod 125).
        let third = PadicNum::from_ratio(5, &BigInt::from(1), &BigInt::from(3), 3).unwrap();
        assert_eq!(third.residue(3).unwrap(), BigUint::from(42u32));
        // −7/4 ≡ 467 (mod 5^4).
        let x = PadicNum::from_ratio(5, &BigInt::from(-7), &BigInt::from(4), 4).unwrap();
        assert_eq!(x.residue(4).unwrap(), BigUint::from(467u32));
    }

    #[test]
    fn addition_tracks_minimum_precision() {
        let a = q5(5, 3); // 5 + O(5^4)
        let b = q5(-5, 4); // −5 + O(5^5)
        let s = a.add(&b).unwrap();
        assert!(s.is_zero());
        assert_eq!(s.abs_prec(), 4);

        // Leading-digit cancellation keeps the surviving digits honest:
        // (1 + 5²) − 1 = 5² known to the common absolute precision 4.
        let c = q5(26, 4).sub(&q5(1, 4)).unwrap();
        assert_eq!(c.valuation(), Some(2));
        assert_eq!(c.abs_prec(), 4);
        assert_eq!(c.digits(), 2);
    }

    #[test]
    fn multiplication_and_division() {
        let x = q5(15, 4);
        let y = q5(35, 4);
        let prod = x.mul(&y).unwrap();
        assert_eq!(prod.valuation(), Some(2)); // 15·35 = 525 = 3·7·5²
        let q = prod.div(&y).unwrap();
        assert!(q.agrees_with(&x));

        let third = PadicNum::from_ratio(5, &BigInt::from(1), &BigInt::from(3), 4).unwrap();
        assert!(third.mul(&q5(3, 4)).unwrap().agrees_with(&PadicNum::one(5, 4)));
    }

    #[test]
    fn negative_valuation_roundtrip() {
        let x = PadicNum::from_ratio(5, &BigInt::from(1), &BigInt::from(5), 4).unwrap();
        assert_eq!(x.valuation(), Some(-1));
        let back = x.mul(&q5(5, 4)).unwrap();
        assert!(back.agrees_with(&PadicNum::one(5, 4)));
    }

    #[test]
    fn teichmuller_of_two_mod_5() {
        // ω(2) ≡ 182 (mod 5^4): 182 ≡ 2 (mod 5) and 182^4 ≡ 1 (mod 5^4).
        let w = q5(2, 4).teichmuller().unwrap();
        assert_eq!(w.residue(4).unwrap(), BigUint::from(182u32));
        let w4 = w.pow_i64(4).unwrap();
        assert!(w4.agrees_with(&PadicNum::one(5, 4)));
    }

    #[test]
    fn angle_of_two_mod_5() {
        // ⟨2⟩ = 2/ω(2) ≡ 261 (mod 5^4).
        let a = q5(2, 4).angle().unwrap();
        assert_eq!(a.residue(4).unwrap(), BigUint::from(261u32));
    }

    #[test]
    fn plog_frozen_values() {
        // log(1+5) = 5 − 5²/2 + 5³/3 − ... ≡ 555 (mod 5^4), by exact
        // rational partial sums (tail has valuation ≥ 4).
        let x = q5(6, 4).plog().unwrap();
        assert_eq!(x.residue(4).unwrap(), BigUint::from(555u32));
        // log 2 = log⟨2⟩ ≡ 335 (mod 5^4), same method applied to ⟨2⟩ = 261.
        let y = q5(2, 4).plog().unwrap();
        assert_eq!(y.residue(4).unwrap(), BigUint::from(335u32));
        // log(1+17) ≡ 572237 (mod 17^5).
        let z = PadicNum::from_i64(17, 18, 5).plog().unwrap();
        assert_eq!(z.residue(5).unwrap(), BigUint::from(572237u32));
    }

    #[test]
    fn pexp_frozen_values() {
        // exp(5) = Σ 5^n/n! ≡ 456 (mod 5^4), by exact rational partial sums.
        let x = q5(5, 3).pexp().unwrap();
        assert_eq!(x.residue(4).unwrap(), BigUint::from(456u32));
        // exp(17) ≡ 891872 (mod 17^5).
        let y = PadicNum::from_i64(17, 17, 4).pexp().unwrap();
        assert_eq!(y.residue(5).unwrap(), BigUint::from(891872u32));
    }

    #[test]
    fn exp_log_roundtrip_is_angle() {
        for n in [2i64, 3, 7, 12, 2024] {
            let x = PadicNum::from_i64(17, n, 8);
            let round = x.plog().unwrap().pexp().unwrap();
            assert!(
                round.agrees_with(&x.angle().unwrap()),
                "exp(log {n}) should be ⟨{n}⟩"
            );
        }
    }

    #[test]
    fn log_is_a_homomorphism() {
        let a = PadicNum::from_i64(17, 3, 8);
        let b = PadicNum::from_i64(17, 5, 8);
        let lhs = a.mul(&b).unwrap().plog().unwrap();
        let rhs = a.plog().unwrap().add(&b.plog().unwrap()).unwrap();
        assert!(lhs.agrees_with(&rhs));
    }

    #[test]
    fn hensel_sqrt() {
        // √6 ≡ 516 (mod 5^4) for the branch ≡ 1 (mod 5).
        let r = q5(6, 4).sqrt().unwrap();
        assert_eq!(r.residue(4).unwrap(), BigUint::from(516u32));
        assert!(r.mul(&r).unwrap().agrees_with(&q5(6, 4)));
        // 2 is not a QR mod 5.
        assert_eq!(q5(2, 4).sqrt().unwrap_err(), PadicError::NotASquare);
        // Odd valuation is never square.
        assert_eq!(q5(5, 4).sqrt().unwrap_err(), PadicError::NotASquare);
        // Even p-power times square: √(25·6) = 5·√6.
        let r2 = q5(150, 4).sqrt().unwrap();
        assert_eq!(r2.valuation(), Some(1));
    }

    #[test]
    fn display_annotates_precision() {
        let x = q5(50, 3);
        assert_eq!(x.to_string(), "2*5^2 + O(5^5)");
        assert_eq!(q5(0, 4).to_string(), "O(5^4)");
        let y = PadicNum::from_ratio(5, &BigInt::from(1), &BigInt::from(5), 2).unwrap();
        assert_eq!(y.to_string(), "1*5^-1 + O(5^1)");
    }

    // ---- quadratic extension ----

    fn ext5() -> QuadExt {
        // T² = −2: x² + 2 is irreducible mod 5 (−2 ≡ 3 is a non-residue).
        QuadExt::new(5, 0, 2).unwrap()
    }

    #[test]
    fn quad_ext_rejects_split_polynomials() {
        // x² + 1 factors mod 5 (2² = 4 ≡ −1).
        assert!(QuadExt::new(5, 0, 1).is_err());
        // x² − x − 1 has discriminant 5: ramified, also rejected.
        assert!(QuadExt::new(5, 1, -1).is_err());
    }

    #[test]
    fn quad_arithmetic() {
        let ext = ext5();
        let one = QuadPadic::one(ext, 4);
        let theta = QuadPadic::new(ext, &BigInt::zero(), &BigInt::one(), 4);
        // θ² = −2.
        let sq = theta.mul(&theta);
        assert!(sq.agrees_to(&QuadPadic::from_bigint(ext, &BigInt::from(-2), 4), 4));
        // N(1+θ) = (1+θ)(1−θ) = 1 − θ² = 3.
        let x = one.add(&theta);
        assert!(x.norm().agrees_with(&q5(3, 4)));
        assert!(x.trace().agrees_with(&q5(2, 4)));
        // x·x⁻¹ = 1.
        let inv = x.inv().unwrap();
        assert!(x.mul(&inv).agrees_to(&one, 4));
    }

    #[test]
    fn quad_teichmuller_and_log() {
        let ext = ext5();
        let theta = QuadPadic::new(ext, &BigInt::zero(), &BigInt::one(), 4);
        let w = theta.teichmuller().unwrap();
        // ω(θ)^(5²−1) = 1 and ω(θ) ≡ θ (mod 5).
        assert!(w.pow_u64(24).agrees_to(&QuadPadic::one(ext, 4), 4));
        assert!(w.agrees_to(&theta, 1));
        // exp(log x) = ⟨x⟩ in the extension.
        let x = QuadPadic::new(ext, &BigInt::from(3), &BigInt::from(1), 4);
        let round = x.plog().unwrap().pexp().unwrap();
        assert!(round.agrees_to(&x.angle().unwrap(), 4));
        // Norm compatibility: N(⟨x⟩) = ⟨N(x)⟩.
        let na = x.angle().unwrap().norm();
        let an = x.norm().angle().unwrap();
        assert!(na.agrees_with(&an));
    }

    #[test]
    fn quad_log_is_galois_equivariant() {
        let ext = ext5();
        let x = QuadPadic::new(ext, &BigInt::from(2), &BigInt::from(3), 5);
        let lhs = x.conj().plog().unwrap();
        let rhs = x.plog().unwrap().conj();
        assert!(lhs.agrees_to(&rhs, 5));
    }

    proptest! {
        #[test]
        fn prop_add_is_associative(a in -1000i64..1000, b in -1000i64..1000, c in -1000i64..1000) {
            let (x, y, z) = (q5(a, 6), q5(b, 6), q5(c, 6));
            let l = x.add(&y).unwrap().add(&z).unwrap();
            let r = x.add(&y.add(&z).unwrap()).unwrap();
            prop_assert!(l.agrees_with(&r));
        }

        #[test]
        fn prop_mul_distributes(a in -1000i64..1000, b in -1000i64..1000, c in -1000i64..1000) {
            let (x, y, z) = (q5(a, 6), q5(b, 6), q5(c, 6));
            let l = x.mul(&y.add(&z).unwrap()).unwrap();
            let r = x.mul(&y).unwrap().add(&x.mul(&z).unwrap()).unwrap();
            prop_assert!(l.agrees_with(&r));
        }

        #[test]
        fn prop_div_inverts_mul(a in 1i64..100_000, b in 1i64..100_000) {
            let (x, y) = (q5(a, 6), q5(b, 6));
            let back = x.mul(&y).unwrap().div(&y).unwrap();
            prop_assert!(back.agrees_with(&x));
        }

        #[test]
        fn prop_teichmuller_is_multiplicative(a in 1i64..10_000, b in 1i64..10_000) {
            prop_assume!(a % 17 != 0 && b % 17 != 0);
            let (x, y) = (PadicNum::from_i64(17, a, 6), PadicNum::from_i64(17, b, 6));
            let l = x.mul(&y).unwrap().teichmuller().unwrap();
            let r = x.teichmuller().unwrap().mul(&y.teichmuller().unwrap()).unwrap();
            prop_assert!(l.agrees_with(&r));
        }

        #[test]
        fn prop_exp_log_roundtrip(a in 1i64..100_000) {
            prop_assume!(a % 17 != 0);
            let x = PadicNum::from_i64(17, a, 6);
            let round = x.plog().unwrap().pexp().unwrap();
            prop_assert!(round.agrees_with(&x.angle().unwrap()));
        }

        #[test]
        fn prop_sqrt_squares_back(a in 1i64..100_000) {
            let x = PadicNum::from_i64(17, a, 6);
            if let Ok(r) = x.sqrt() {
                prop_assert!(r.mul(&r).unwrap().agrees_with(&x));
            }
        }
    }
}
