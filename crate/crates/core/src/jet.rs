//! Truncated Taylor expansions in the two weight directions.
//!
//! A [`Jet`] is a polynomial `Σ c_ij κ^i σ^j` truncated at `i ≤ dk`,
//! `j ≤ ds`, where `κ` and `σ` are the coordinates of weight space centered
//! at the classical point (both variables vanish at the center). Families of
//! q-expansions, eigenvalues, and L-values are computed with jets as their
//! coefficient ring; first derivatives in the weight direction are read off
//! the `κ`-linear coefficients.
//!
//! Because the truncation degrees are kept below `p`, the series defining
//! `exp`, `log`, inverses, and binomial coefficients of jets only ever
//! divide by p-adic units, so jets lose no precision beyond what their
//! scalar coefficients already carry.
//!
//! [`WeightMode`] abstracts over two evaluation modes for the same family
//! formulas: [`JetMode`] produces jets around the center, and
//! [`ClassicalMode`] evaluates at a fixed integral weight with exact scalar
//! powers (no truncation). Running a family formula in both modes and
//! comparing is the crate's main interpolation cross-check.

use crate::padic::{PadicError, PadicNum, QuadPadic};
use std::fmt;

/// Ring operations shared by jet coefficients (p-adic scalars and
/// quadratic-extension integers) and by jets themselves, so that jets can
/// nest and generic weight-space code can run over either.
pub trait CoeffRing: Clone + fmt::Debug {
    /// Zero in the same context (prime, precision) as `self`.
    fn ring_zero(&self) -> Self;
    /// One in the same context as `self`.
    fn ring_one(&self) -> Self;
    /// An integer constant in the same context as `self`.
    fn ring_from_i64(&self, n: i64) -> Self;
    fn ring_add(&self, other: &Self) -> Self;
    fn ring_neg(&self) -> Self;
    fn ring_mul(&self, other: &Self) -> Self;
    fn ring_inv(&self) -> Result<Self, PadicError>;
    /// Multiply by `num/den` where `den` must be prime to p.
    fn ring_scale_ratio(&self, num: i64, den: i64) -> Result<Self, PadicError>;
    /// Zero as a coset at working precision.
    fn ring_is_zero(&self) -> bool;
    /// Invertible at working precision.
    fn ring_is_unit(&self) -> bool;
    /// Iwasawa logarithm (defined on units).
    fn ring_plog(&self) -> Result<Self, PadicError>;
    /// p-adic exponential (defined for valuation ≥ 1).
    fn ring_pexp(&self) -> Result<Self, PadicError>;
    fn ring_sub(&self, other: &Self) -> Self {
        self.ring_add(&other.ring_neg())
    }
}

impl CoeffRing for PadicNum {
    fn ring_zero(&self) -> Self {
        PadicNum::zero(self.prime(), self.abs_prec())
    }
    // Constants are sized by the working modulus of the context, not the
    // context's digit count alone: a zero coset has no digits but still
    // fixes an absolute precision, and a high-valuation context knows
    // constants like 1 exactly to its absolute precision.
    fn ring_one(&self) -> Self {
        PadicNum::one(self.prime(), self.context_digits())
    }
    fn ring_from_i64(&self, n: i64) -> Self {
        PadicNum::from_i64(self.prime(), n, self.context_digits())
    }
    fn ring_add(&self, other: &Self) -> Self {
        self.add(other).expect("same prime")
    }
    fn ring_neg(&self) -> Self {
        self.neg()
    }
    fn ring_mul(&self, other: &Self) -> Self {
        self.mul(other).expect("same prime")
    }
    fn ring_inv(&self) -> Result<Self, PadicError> {
        self.inv()
    }
    fn ring_scale_ratio(&self, num: i64, den: i64) -> Result<Self, PadicError> {
        let q = PadicNum::from_ratio(
            self.prime(),
            &num.into(),
            &den.into(),
            self.context_digits(),
        )?;
        self.mul(&q)
    }
    fn ring_is_zero(&self) -> bool {
        self.is_zero()
    }
    fn ring_is_unit(&self) -> bool {
        self.valuation() == Some(0)
    }
    fn ring_plog(&self) -> Result<Self, PadicError> {
        self.plog()
    }
    fn ring_pexp(&self) -> Result<Self, PadicError> {
        self.pexp()
    }
}

impl CoeffRing for QuadPadic {
    fn ring_zero(&self) -> Self {
        QuadPadic::zero(self.ext(), self.prec())
    }
    fn ring_one(&self) -> Self {
        QuadPadic::one(self.ext(), self.prec())
    }
    fn ring_from_i64(&self, n: i64) -> Self {
        QuadPadic::from_bigint(self.ext(), &n.into(), self.prec())
    }
    fn ring_add(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn ring_neg(&self) -> Self {
        self.neg()
    }
    fn ring_mul(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn ring_inv(&self) -> Result<Self, PadicError> {
        self.inv()
    }
    fn ring_scale_ratio(&self, num: i64, den: i64) -> Result<Self, PadicError> {
        let den_elt = self.ring_from_i64(den);
        Ok(self.ring_from_i64(num).mul(&den_elt.inv()?).mul(self))
    }
    fn ring_is_zero(&self) -> bool {
        self.is_zero()
    }
    fn ring_is_unit(&self) -> bool {
        self.is_unit()
    }
    fn ring_plog(&self) -> Result<Self, PadicError> {
        self.plog()
    }
    fn ring_pexp(&self) -> Result<Self, PadicError> {
        self.pexp()
    }
}

/// A truncated Taylor expansion `Σ_{i ≤ dk, j ≤ ds} c_ij κ^i σ^j` over a
/// coefficient ring `R`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Jet<R> {
    dk: usize,
    ds: usize,
    /// Row-major: `c[i·(ds+1) + j]` is the coefficient of `κ^i σ^j`.
    c: Vec<R>,
}

impl<R: CoeffRing> Jet<R> {
    /// The constant jet with value `c0`.
    pub fn constant(c0: R, dk: usize, ds: usize) -> Self {
        let zero = c0.ring_zero();
        let mut c = vec![zero; (dk + 1) * (ds + 1)];
        c[0] = c0;
        Jet { dk, ds, c }
    }

    /// The coordinate jet `κ` (requires `dk ≥ 1`); `seed` fixes the
    /// coefficient context.
    pub fn var_kappa(seed: &R, dk: usize, ds: usize) -> Self {
        assert!(dk >= 1, "κ requires a κ-degree of at least 1");
        let mut jet = Jet::constant(seed.ring_zero(), dk, ds);
        *jet.coeff_mut(1, 0) = seed.ring_one();
        jet
    }

    /// The coordinate jet `σ` (requires `ds ≥ 1`).
    pub fn var_sigma(seed: &R, dk: usize, ds: usize) -> Self {
        assert!(ds >= 1, "σ requires a σ-degree of at least 1");
        let mut jet = Jet::constant(seed.ring_zero(), dk, ds);
        *jet.coeff_mut(0, 1) = seed.ring_one();
        jet
    }

    pub fn deg_kappa(&self) -> usize {
        self.dk
    }

    pub fn deg_sigma(&self) -> usize {
        self.ds
    }

    pub fn coeff(&self, i: usize, j: usize) -> &R {
        &self.c[i * (self.ds + 1) + j]
    }

    pub fn coeff_mut(&mut self, i: usize, j: usize) -> &mut R {
        &mut self.c[i * (self.ds + 1) + j]
    }

    /// The value at the center `(κ, σ) = (0, 0)`.
    pub fn center(&self) -> &R {
        self.coeff(0, 0)
    }

    /// The `κ`-derivative at the center, as a jet in `σ` alone.
    pub fn d_kappa(&self) -> Jet<R> {
        assert!(self.dk >= 1, "no κ-direction to differentiate");
        let mut out = Jet::constant(self.center().ring_zero(), 0, self.ds);
        for j in 0..=self.ds {
            *out.coeff_mut(0, j) = self.coeff(1, j).clone();
        }
        out
    }

    /// Restrict to the `σ`-jet at `κ = 0`.
    pub fn at_kappa_zero(&self) -> Jet<R> {
        let mut out = Jet::constant(self.center().ring_zero(), 0, self.ds);
        for j in 0..=self.ds {
            *out.coeff_mut(0, j) = self.coeff(0, j).clone();
        }
        out
    }

    fn check_dims(&self, other: &Self) {
        assert_eq!(
            (self.dk, self.ds),
            (other.dk, other.ds),
            "jet truncation degrees must match"
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_dims(other);
        let c = self
            .c
            .iter()
            .zip(&other.c)
            .map(|(a, b)| a.ring_add(b))
            .collect();
        Jet { dk: self.dk, ds: self.ds, c }
    }

    pub fn neg(&self) -> Self {
        Jet { dk: self.dk, ds: self.ds, c: self.c.iter().map(R::ring_neg).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_dims(other);
        let zero = self.center().ring_zero();
        let mut out = Jet::constant(zero, self.dk, self.ds);
        for i1 in 0..=self.dk {
            for j1 in 0..=self.ds {
                if self.coeff(i1, j1).ring_is_zero() {
                    continue;
                }
                for i2 in 0..=(self.dk - i1) {
                    for j2 in 0..=(self.ds - j1) {
                        let t = self.coeff(i1, j1).ring_mul(other.coeff(i2, j2));
                        let tgt = out.coeff_mut(i1 + i2, j1 + j2);
                        *tgt = tgt.ring_add(&t);
                    }
                }
            }
        }
        out
    }

    /// Multiply every coefficient by a ring scalar.
    pub fn scale(&self, s: &R) -> Self {
        Jet { dk: self.dk, ds: self.ds, c: self.c.iter().map(|x| x.ring_mul(s)).collect() }
    }

    /// Multiply by the rational `num/den` (denominator prime to p).
    pub fn scale_ratio(&self, num: i64, den: i64) -> Result<Self, PadicError> {
        let c = self
            .c
            .iter()
            .map(|x| x.ring_scale_ratio(num, den))
            .collect::<Result<_, _>>()?;
        Ok(Jet { dk: self.dk, ds: self.ds, c })
    }

    /// `true` iff every coefficient is a zero coset.
    pub fn is_zero(&self) -> bool {
        self.c.iter().all(R::ring_is_zero)
    }

    /// The jet minus its constant term: the nilpotent part.
    fn nilpotent_part(&self) -> Self {
        let mut out = self.clone();
        *out.coeff_mut(0, 0) = self.center().ring_zero();
        out
    }

    /// Maximal nilpotency order: `(1 + nilpotent)^n` terminates at this `n`.
    fn nilpotency(&self) -> usize {
        self.dk + self.ds
    }

    pub fn pow_usize(&self, e: usize) -> Self {
        let mut acc = Jet::constant(self.center().ring_one(), self.dk, self.ds);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Multiplicative inverse; requires the constant term to be a unit.
    pub fn inv(&self) -> Result<Self, PadicError> {
        let c0 = self.center();
        if !c0.ring_is_unit() {
            return Err(PadicError::DivisionByZero);
        }
        let c0_inv = c0.ring_inv()?;
        // self = c0(1 + v) with v nilpotent: inverse is c0⁻¹ Σ (−v)^n.
        let v = self
            .nilpotent_part()
            .scale(&c0_inv);
        let mut acc = Jet::constant(c0.ring_one(), self.dk, self.ds);
        let mut v_pow = acc.clone();
        for _ in 1..=self.nilpotency() {
            v_pow = v_pow.mul(&v).neg();
            acc = acc.add(&v_pow);
        }
        Ok(acc.scale(&c0_inv))
    }

    pub fn div(&self, other: &Self) -> Result<Self, PadicError> {
        Ok(self.mul(&other.inv()?))
    }

    /// Jet exponential `exp(c00)·Σ N^n/n!` where `N` is the nilpotent part.
    /// The constant term must have valuation ≥ 1; the factorials stay below
    /// `p` (truncation degrees are < p by construction), so no precision is
    /// lost.
    pub fn exp(&self) -> Result<Self, PadicError> {
        let scalar = self.center().ring_pexp()?;
        let n = self.nilpotent_part();
        let mut acc = Jet::constant(self.center().ring_one(), self.dk, self.ds);
        let mut pow = acc.clone();
        let mut fact = 1i64;
        for k in 1..=self.nilpotency() {
            pow = pow.mul(&n);
            fact *= k as i64;
            acc = acc.add(&pow.scale_ratio(1, fact)?);
        }
        Ok(acc.scale(&scalar))
    }

    /// Jet logarithm `log(c00) + Σ (−1)^(n+1) v^n/n` for `self = c00(1+v)`.
    /// The constant term must be a unit.
    pub fn log(&self) -> Result<Self, PadicError> {
        let c0 = self.center();
        let scalar = c0.ring_plog()?;
        let v = self.nilpotent_part().scale(&c0.ring_inv()?);
        let mut acc = Jet::constant(scalar, self.dk, self.ds);
        let mut pow = Jet::constant(c0.ring_one(), self.dk, self.ds);
        for n in 1..=self.nilpotency() {
            pow = pow.mul(&v);
            let sign = if n % 2 == 1 { 1 } else { -1 };
            acc = acc.add(&pow.scale_ratio(sign, n as i64)?);
        }
        Ok(acc)
    }

    /// `self^expo = exp(expo · log self)` for a jet exponent. The base must
    /// have unit constant term; the product `expo·log(self)` must have
    /// constant term of valuation ≥ 1 (automatic when the base's constant
    /// term is a principal unit).
    pub fn pow_jet(&self, expo: &Self) -> Result<Self, PadicError> {
        expo.mul(&self.log()?).exp()
    }

    /// The generalized binomial coefficient `C(expo, j)` as a jet:
    /// `expo (expo−1) ⋯ (expo−j+1)/j!`. Requires `j!` prime to p, i.e.
    /// `j < p`.
    pub fn binom(expo: &Self, j: usize) -> Result<Self, PadicError> {
        let one = expo.center().ring_one();
        let mut acc = Jet::constant(one, expo.dk, expo.ds);
        let mut fact = 1i64;
        for i in 0..j {
            let shifted = expo.sub(&Jet::constant(expo.center().ring_from_i64(i as i64), expo.dk, expo.ds));
            acc = acc.mul(&shifted);
            fact *= (i + 1) as i64;
        }
        acc.scale_ratio(1, fact)
    }

    /// Map the coefficients into another ring.
    pub fn map<S: CoeffRing>(&self, f: impl Fn(&R) -> S) -> Jet<S> {
        Jet { dk: self.dk, ds: self.ds, c: self.c.iter().map(f).collect() }
    }

    /// Coefficient-wise agreement test with a caller-supplied predicate.
    pub fn agrees_by(&self, other: &Self, pred: impl Fn(&R, &R) -> bool) -> bool {
        (self.dk, self.ds) == (other.dk, other.ds)
            && self.c.iter().zip(&other.c).all(|(a, b)| pred(a, b))
    }
}

impl Jet<PadicNum> {
    /// Cap the absolute precision of every coefficient.
    pub fn cap_abs_prec(&self, n: i64) -> Self {
        self.map(|x| x.cap_abs_prec(n))
    }

    /// Coefficient-wise agreement at the shared working precision.
    pub fn agrees_with(&self, other: &Self) -> bool {
        self.agrees_by(other, |a, b| a.agrees_with(b))
    }

    /// Coefficient-wise agreement mod `p^n`.
    pub fn agrees_to(&self, other: &Self, n: i64) -> bool {
        self.agrees_by(other, |a, b| a.agrees_to(b, n))
    }
}

impl<R: CoeffRing> CoeffRing for Jet<R> {
    fn ring_zero(&self) -> Self {
        Jet::constant(self.center().ring_zero(), self.dk, self.ds)
    }
    fn ring_one(&self) -> Self {
        Jet::constant(self.center().ring_one(), self.dk, self.ds)
    }
    fn ring_from_i64(&self, n: i64) -> Self {
        Jet::constant(self.center().ring_from_i64(n), self.dk, self.ds)
    }
    fn ring_add(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn ring_neg(&self) -> Self {
        self.neg()
    }
    fn ring_mul(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn ring_inv(&self) -> Result<Self, PadicError> {
        self.inv()
    }
    fn ring_scale_ratio(&self, num: i64, den: i64) -> Result<Self, PadicError> {
        self.scale_ratio(num, den)
    }
    fn ring_is_zero(&self) -> bool {
        self.is_zero()
    }
    fn ring_is_unit(&self) -> bool {
        self.center().ring_is_unit()
    }
    fn ring_plog(&self) -> Result<Self, PadicError> {
        self.log()
    }
    fn ring_pexp(&self) -> Result<Self, PadicError> {
        self.exp()
    }
}

impl<R: CoeffRing + fmt::Display> fmt::Display for Jet<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for i in 0..=self.dk {
            for j in 0..=self.ds {
                let c = self.coeff(i, j);
                if c.ring_is_zero() {
                    continue;
                }
                if !first {
                    write!(f, " + ")?;
                }
                write!(f, "({})", c)?;
                if i > 0 {
                    write!(f, "*kappa^{}", i)?;
                }
                if j > 0 {
                    write!(f, "*sigma^{}", j)?;
                }
                first = false;
            }
        }
        if first {
            // Every coefficient was a zero coset; show the constant one.
            write!(f, "({})", self.center())?;
        }
        Ok(())
    }
}

/// A rational number with small numerator and denominator, used for
/// exponents affine in the weight coordinates (denominators are 1 or 2 in
/// practice: half-integral weights).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmallRat {
    pub num: i64,
    pub den: i64,
}

impl SmallRat {
    pub const ZERO: SmallRat = SmallRat { num: 0, den: 1 };
    pub const ONE: SmallRat = SmallRat { num: 1, den: 1 };
    pub const HALF: SmallRat = SmallRat { num: 1, den: 2 };

    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0);
        SmallRat { num, den }
    }

    /// Value at an integer argument if integral, else `None`.
    fn eval_i64(&self, scale: i64) -> Option<i64> {
        let n = self.num.checked_mul(scale)?;
        if n % self.den == 0 {
            Some(n / self.den)
        } else {
            None
        }
    }
}

/// An exponent affine in the weight coordinates: `c0 + ck·κ + cs·σ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AffineExp {
    pub c0: SmallRat,
    pub ck: SmallRat,
    pub cs: SmallRat,
}

impl AffineExp {
    pub fn constant(c0: SmallRat) -> Self {
        AffineExp { c0, ck: SmallRat::ZERO, cs: SmallRat::ZERO }
    }
}

/// A weight-space evaluation mode: the ring the family formulas compute in,
/// together with the interpretation of angle-powers `⟨z⟩^(c0 + ck·κ + cs·σ)`.
pub trait WeightMode {
    type Elt: CoeffRing;

    fn prime(&self) -> u64;
    /// Significant digits carried by scalar coefficients.
    fn precision(&self) -> u32;
    fn one(&self) -> Self::Elt;
    fn zero(&self) -> Self::Elt;
    /// Embed a p-adic scalar.
    fn scalar(&self, x: &PadicNum) -> Self::Elt;
    /// An integer constant at the mode's working precision.
    fn int(&self, n: i64) -> Self::Elt;
    /// `⟨z⟩^(c0 + ck·κ + cs·σ)` for a p-adic unit `z`.
    fn angle_pow(&self, z: &PadicNum, e: &AffineExp) -> Result<Self::Elt, PadicError>;
}

/// Family evaluation as jets around the center of weight space.
#[derive(Debug, Clone, Copy)]
pub struct JetMode {
    pub p: u64,
    /// Significant digits carried by scalar coefficients.
    pub m: u32,
    pub dk: usize,
    pub ds: usize,
}

impl WeightMode for JetMode {
    type Elt = Jet<PadicNum>;

    fn prime(&self) -> u64 {
        self.p
    }

    fn precision(&self) -> u32 {
        self.m
    }

    fn one(&self) -> Jet<PadicNum> {
        Jet::constant(PadicNum::one(self.p, self.m), self.dk, self.ds)
    }

    fn zero(&self) -> Jet<PadicNum> {
        Jet::constant(PadicNum::zero(self.p, self.m as i64), self.dk, self.ds)
    }

    fn scalar(&self, x: &PadicNum) -> Jet<PadicNum> {
        Jet::constant(x.clone(), self.dk, self.ds)
    }

    fn int(&self, n: i64) -> Jet<PadicNum> {
        Jet::constant(PadicNum::from_i64(self.p, n, self.m), self.dk, self.ds)
    }

    fn angle_pow(&self, z: &PadicNum, e: &AffineExp) -> Result<Jet<PadicNum>, PadicError> {
        let lg = z.plog()?; // log⟨z⟩, valuation ≥ 1
        let seed = PadicNum::one(self.p, self.m);
        // Directions the truncation does not track are restricted to 0.
        let mut expo = Jet::constant(seed.ring_from_i64(e.c0.num), self.dk, self.ds)
            .scale_ratio(1, e.c0.den)?;
        if self.dk >= 1 {
            expo = expo.add(&Jet::var_kappa(&seed, self.dk, self.ds).scale_ratio(e.ck.num, e.ck.den)?);
        }
        if self.ds >= 1 {
            expo = expo.add(&Jet::var_sigma(&seed, self.dk, self.ds).scale_ratio(e.cs.num, e.cs.den)?);
        }
        expo.scale(&lg).exp()
    }
}

/// Family evaluation at a fixed integral weight `(κ, σ) = (kappa, sigma)`,
/// with exact scalar powers: the classical specialization the jets
/// interpolate.
#[derive(Debug, Clone, Copy)]
pub struct ClassicalMode {
    pub p: u64,
    pub m: u32,
    pub kappa: i64,
    pub sigma: i64,
}

impl WeightMode for ClassicalMode {
    type Elt = PadicNum;

    fn prime(&self) -> u64 {
        self.p
    }

    fn precision(&self) -> u32 {
        self.m
    }

    fn one(&self) -> PadicNum {
        PadicNum::one(self.p, self.m)
    }

    fn zero(&self) -> PadicNum {
        PadicNum::zero(self.p, self.m as i64)
    }

    fn scalar(&self, x: &PadicNum) -> PadicNum {
        x.clone()
    }

    fn int(&self, n: i64) -> PadicNum {
        PadicNum::from_i64(self.p, n, self.m)
    }

    fn angle_pow(&self, z: &PadicNum, e: &AffineExp) -> Result<PadicNum, PadicError> {
        let base = z.angle()?;
        // Try to keep the exponent integral; fall back to a half-integer
        // split 2e' = integer, using the principal (Hensel) square root,
        // which agrees with exp(e·log) on principal units.
        let total_num = |r: SmallRat, s: i64| r.eval_i64(2 * s);
        let twice = total_num(e.c0, 1)
            .zip(total_num(e.ck, self.kappa))
            .zip(total_num(e.cs, self.sigma))
            .map(|((a, b), c)| a + b + c)
            .expect("exponent denominators divide 2");
        if twice % 2 == 0 {
            base.pow_i64(twice / 2)
        } else {
            base.sqrt()?.pow_i64(twice)
        }
    }
}
