//! Coefficients of p-adic families of Eisenstein series over a real
//! quadratic field, and their diagonal restriction to elliptic q-expansions.
//!
//! Weight bookkeeping: every formula is written in the centered coordinates
//! `(κ, σ)`; the corresponding weight pair is `(k, s) = (κ + 2, σ + 2)`, so
//! the center `κ = σ = 0` is the weight pair `(2, 2)`. All weight dependence
//! enters through angle-powers `⟨z⟩^e` with exponents `e` affine in `(κ, σ)`,
//! so each formula runs in either [`WeightMode`]: jets around the center
//! ([`JetMode`]) or exact values at one integral weight ([`ClassicalMode`]).
//!
//! Two coefficient normalizations of the same depleted family coexist and
//! are cross-checked against each other:
//!
//! * the divisor normalization `c(𝔪) = σ_φ(𝔪)`, a twisted divisor sum
//!   ([`EisensteinDatum::sigma_phi`]), on which the level-raising operator
//!   acts by coefficient shifts; and
//! * the product normalization ([`EisensteinDatum::family_coeff`]), a
//!   product of local polynomial factors in a substituted unit, indexed by
//!   totally positive elements `β` of the inverse different.
//!
//! Both vanish on indices that meet `p` (depletion), which is what makes
//! the family p-adically continuous in the weight. Summing coefficients
//! over the trace slices of the inverse different restricts the family to
//! an elliptic q-expansion with jet coefficients
//! ([`HilbertFamily::diag_restrict`]).

use crate::jet::{AffineExp, CoeffRing, SmallRat, WeightMode};
use crate::padic::{PadicError, PadicNum};
use crate::quadfield::{
    trace_slice, FieldError, FieldIdeal, NarrowClassChar, PrimeIdeal, QuadField, SplitType,
    TraceBeta,
};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;

/// Errors from family construction and coefficient evaluation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EisError {
    #[error("twist exponent a = {0} must be even")]
    TwistNotEven(i64),
    #[error("the character must be odd (value −1 on the narrow class of (√Δ))")]
    CharacterNotOdd,
    #[error("datum conductor {datum} does not match the character's group conductor {group}")]
    ConductorMismatch { datum: i64, group: i64 },
    #[error("tame level {0} must be coprime to p and to the discriminant")]
    LevelNotCoprime(i64),
    #[error("conductor {0} must be coprime to the level, the discriminant, and p")]
    ConductorNotCoprime(i64),
    #[error("tame level {0} must be squarefree (distinct split primes)")]
    LevelNotSquarefree(i64),
    #[error("ideal of norm {norm} meets p = {p}; only prime-to-p indices are evaluable")]
    NotCoprimeToP { norm: BigInt, p: u64 },
    #[error("local factor at a prime above p = {0} is never evaluated (depletion)")]
    DepletedPrime(u64),
    #[error(
        "local factor at a ramified conductor prime (residue size {0}) requires \
         ε-factor data; conductor-1 configurations never reach it"
    )]
    RamifiedConductorFactor(i64),
    #[error("coefficient at trace {n} requested, family truncated at {max}")]
    TraceOutOfRange { n: u32, max: u32 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("p-adic error: {0}")]
    Padic(#[from] PadicError),
}

/// `(k − s)/2 = (κ − σ)/2`: the exponent of `⟨N𝔞⟩` on the divisor, and of
/// `⟨N(β)⟩` in the product-form prefix.
fn half_diff_exp() -> AffineExp {
    AffineExp { c0: SmallRat::ZERO, ck: SmallRat::new(1, 2), cs: SmallRat::new(-1, 2) }
}

/// `(s − 2)/2 = σ/2`: the exponent of `⟨N(𝔪𝔞⁻¹)⟩` on the complementary
/// divisor.
fn sigma_half_exp() -> AffineExp {
    AffineExp { c0: SmallRat::ZERO, ck: SmallRat::ZERO, cs: SmallRat::new(1, 2) }
}

/// `s − k/2 = 1 − κ/2 + σ`: the exponent of `⟨N𝔮⟩` inside the substituted
/// local unit.
fn local_unit_exp() -> AffineExp {
    AffineExp { c0: SmallRat::new(1, 1), ck: SmallRat::new(-1, 2), cs: SmallRat::new(1, 1) }
}

/// `s − k/2 − 1 = σ − κ/2`: the exponent of `⟨N𝔮⟩` in the level-raising
/// operator `1 − φ(𝔮)⁻¹⟨N𝔮⟩^{σ−κ/2}·(shift by 𝔮)`.
fn raise_exp() -> AffineExp {
    AffineExp { c0: SmallRat::ZERO, ck: SmallRat::new(-1, 2), cs: SmallRat::new(1, 1) }
}

/// `x^e` by repeated multiplication (exponents here are tiny).
fn elt_pow<E: CoeffRing>(x: &E, e: u32) -> E {
    let mut acc = x.ring_one();
    for _ in 0..e {
        acc = acc.ring_mul(x);
    }
    acc
}

/// Exact order of `prime` in the ideal `m`.
fn ord_at(field: &QuadField, m: &FieldIdeal, prime: &PrimeIdeal) -> u32 {
    let mut v = 0;
    let mut cur = m.clone();
    while let Some(next) = cur.divide_prime(field, prime) {
        cur = next;
        v += 1;
    }
    v
}

/// `Σ_{j=0}^{v} q^{−j}x^j` where `q` is the residue size of the prime: the
/// local factor at a prime away from the level, evaluated at the unit `x`.
/// Horner form keeps every intermediate a unit multiple of a partial sum.
pub fn poly_split<M: WeightMode>(
    mode: &M,
    x: &M::Elt,
    v: u32,
    q_norm: &BigInt,
) -> Result<M::Elt, EisError> {
    let p = BigInt::from(mode.prime());
    if q_norm.gcd(&p).is_one() {
        let qinv = PadicNum::from_ratio(mode.prime(), &BigInt::one(), q_norm, mode.precision())?;
        let ratio = x.ring_mul(&mode.scalar(&qinv));
        let mut acc = mode.one();
        for _ in 0..v {
            acc = mode.one().ring_add(&ratio.ring_mul(&acc));
        }
        Ok(acc)
    } else {
        Err(EisError::DepletedPrime(mode.prime()))
    }
}

/// The local factor at a prime dividing the fixed level ideal:
/// `P_{v−1}(x/q) − x⁻¹·P_v(x/q)` with `P_m(y) = Σ_{j=0}^{m} y^j` and
/// `P_{−1} = 0`, so `v = 0` contributes `−x⁻¹`. The inverse `x⁻¹` is the
/// ring inverse of the substituted unit.
pub fn poly_level<M: WeightMode>(
    mode: &M,
    x: &M::Elt,
    v: u32,
    q_norm: &BigInt,
) -> Result<M::Elt, EisError> {
    let p = BigInt::from(mode.prime());
    if !q_norm.gcd(&p).is_one() {
        return Err(EisError::DepletedPrime(mode.prime()));
    }
    let qinv = PadicNum::from_ratio(mode.prime(), &BigInt::one(), q_norm, mode.precision())?;
    let ratio = x.ring_mul(&mode.scalar(&qinv));
    // Geometric partial sums P_{v−1} and P_v of the ratio x/q.
    let mut lower = mode.zero();
    let mut upper = mode.one();
    for _ in 0..v {
        lower = mode.one().ring_add(&ratio.ring_mul(&lower));
        upper = mode.one().ring_add(&ratio.ring_mul(&upper));
    }
    Ok(lower.ring_sub(&x.ring_inv()?.ring_mul(&upper)))
}

/// The data fixing one Eisenstein family: the real quadratic field, an odd
/// narrow class character `φ`, an even twist exponent `a`, a squarefree
/// tame level `N` whose primes split (with a fixed choice of one prime
/// ideal above each), a conductor `C` (only `C = 1` is evaluable), the
/// inert prime `p`, and truncation/jet-degree bookkeeping.
#[derive(Debug, Clone)]
pub struct EisensteinDatum {
    field: QuadField,
    phi: NarrowClassChar,
    a: i64,
    level_n: i64,
    conductor_c: i64,
    p: u64,
    n_max: u32,
    d_kappa: usize,
    d_sigma: usize,
    /// One chosen prime above each prime divisor of the tame level; the
    /// level ideal is their product, coprime to its own conjugate.
    frak_n: Vec<PrimeIdeal>,
}

impl EisensteinDatum {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        field: QuadField,
        phi: NarrowClassChar,
        a: i64,
        level_n: i64,
        conductor_c: i64,
        p: u64,
        n_max: u32,
        d_kappa: usize,
        d_sigma: usize,
    ) -> Result<Self, EisError> {
        if a.rem_euclid(2) != 0 {
            return Err(EisError::TwistNotEven(a));
        }
        if !phi.is_odd() {
            return Err(EisError::CharacterNotOdd);
        }
        if field.splitting_type(p as i64) != SplitType::Inert {
            return Err(EisError::Field(FieldError::MustBeInert { p: p as i64 }));
        }
        if level_n < 1 || level_n.gcd(&(p as i64)) != 1 || level_n.gcd(&field.delta()) != 1 {
            return Err(EisError::LevelNotCoprime(level_n));
        }
        if conductor_c < 1
            || conductor_c.gcd(&(level_n * field.delta())) != 1
            || conductor_c.gcd(&(p as i64)) != 1
        {
            return Err(EisError::ConductorNotCoprime(conductor_c));
        }
        if phi.group().conductor() != conductor_c {
            return Err(EisError::ConductorMismatch {
                datum: conductor_c,
                group: phi.group().conductor(),
            });
        }
        if conductor_c != 1 {
            return Err(EisError::Field(FieldError::ConductorUnsupported(conductor_c)));
        }
        // Factor the tame level into distinct split primes and fix one
        // prime ideal above each.
        let mut frak_n = Vec::new();
        let mut rest = level_n;
        let mut q = 2i64;
        while rest > 1 {
            if rest % q == 0 {
                rest /= q;
                if rest % q == 0 {
                    return Err(EisError::LevelNotSquarefree(level_n));
                }
                if field.splitting_type(q) != SplitType::Split {
                    return Err(EisError::Field(FieldError::MustSplit { q }));
                }
                frak_n.push(field.primes_above(q).into_iter().next().expect("split prime"));
            }
            q += 1;
        }
        Ok(EisensteinDatum {
            field,
            phi,
            a,
            level_n,
            conductor_c,
            p,
            n_max,
            d_kappa,
            d_sigma,
            frak_n,
        })
    }

    pub fn field(&self) -> &QuadField {
        &self.field
    }

    pub fn phi(&self) -> &NarrowClassChar {
        &self.phi
    }

    pub fn twist(&self) -> i64 {
        self.a
    }

    pub fn level(&self) -> i64 {
        self.level_n
    }

    pub fn conductor(&self) -> i64 {
        self.conductor_c
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn max_trace(&self) -> u32 {
        self.n_max
    }

    pub fn jet_degrees(&self) -> (usize, usize) {
        (self.d_kappa, self.d_sigma)
    }

    /// The chosen primes above the tame level.
    pub fn level_primes(&self) -> &[PrimeIdeal] {
        &self.frak_n
    }

    /// `φ(𝔮)` as a scalar at the given precision.
    fn phi_scalar(&self, ideal: &FieldIdeal, m: u32) -> Result<PadicNum, EisError> {
        Ok(self.phi.value_on_ideal(&self.field, ideal, self.p, m)?)
    }

    /// The residue size `N𝔮` as a p-adic scalar.
    fn norm_scalar(&self, n: &BigInt, m: u32) -> Result<PadicNum, EisError> {
        Ok(PadicNum::from_ratio(self.p, n, &BigInt::one(), m)?)
    }

    /// The twisted divisor sum
    /// `σ_φ(𝔪) = Σ_{𝔞|𝔪} φ(𝔞)⟨N𝔞⟩^{(k−s)/2}⟨N(𝔪𝔞⁻¹)⟩^{(s−2)/2}`,
    /// computed multiplicatively over the prime factorization (the sum is a
    /// convolution of two completely multiplicative functions). Rejects
    /// ideals meeting `p`.
    pub fn sigma_phi<M: WeightMode>(&self, mode: &M, m: &FieldIdeal) -> Result<M::Elt, EisError> {
        let norm = m.norm();
        if !norm.gcd(&BigInt::from(self.p)).is_one() {
            return Err(EisError::NotCoprimeToP { norm, p: self.p });
        }
        let mut acc = mode.one();
        for (prime, e) in m.factor(&self.field) {
            acc = acc.ring_mul(&self.sigma_phi_local(mode, &prime, e)?);
        }
        Ok(acc)
    }

    /// Local divisor sum at one prime: `Σ_{j=0}^{e} φ(𝔮)^j A^j B^{e−j}`
    /// with `A = ⟨N𝔮⟩^{(k−s)/2}`, `B = ⟨N𝔮⟩^{(s−2)/2}`.
    fn sigma_phi_local<M: WeightMode>(
        &self,
        mode: &M,
        prime: &PrimeIdeal,
        e: u32,
    ) -> Result<M::Elt, EisError> {
        let m = mode.precision();
        let nq = self.norm_scalar(&prime.norm, m)?;
        let a = mode.angle_pow(&nq, &half_diff_exp())?;
        let b = mode.angle_pow(&nq, &sigma_half_exp())?;
        let phi_q = mode.scalar(&self.phi_scalar(&prime.ideal, m)?);
        let mut total = mode.zero();
        for j in 0..=e {
            let term = elt_pow(&phi_q, j)
                .ring_mul(&elt_pow(&a, j))
                .ring_mul(&elt_pow(&b, e - j));
            total = total.ring_add(&term);
        }
        Ok(total)
    }

    /// The substituted local unit `x(𝔮) = φ(𝔮)·ω(N𝔮)^{a−1}·⟨N𝔮⟩^{s−k/2}`:
    /// the argument of the local polynomial factors. Its Teichmüller part
    /// is frozen (weight-independent); only the angle part moves in weight.
    pub fn local_unit<M: WeightMode>(
        &self,
        mode: &M,
        prime: &PrimeIdeal,
    ) -> Result<M::Elt, EisError> {
        let m = mode.precision();
        let nq = self.norm_scalar(&prime.norm, m)?;
        let omega = nq.teichmuller()?.pow_i64(self.a - 1)?;
        let scalar = self.phi_scalar(&prime.ideal, m)?.mul(&omega)?;
        let angle = mode.angle_pow(&nq, &local_unit_exp())?;
        Ok(angle.ring_mul(&mode.scalar(&scalar)))
    }

    /// The local polynomial factor at `prime` for the index `β`: the
    /// split-prime sum or, for the chosen level primes, the level branch.
    /// Primes above `p` are rejected — depleted indices are never factored.
    pub fn coeff_polys<M: WeightMode>(
        &self,
        mode: &M,
        beta: &TraceBeta,
        prime: &PrimeIdeal,
    ) -> Result<M::Elt, EisError> {
        if prime.q == self.p as i64 {
            return Err(EisError::DepletedPrime(self.p));
        }
        let m_ideal = FieldIdeal::from_generators(&self.field, &[beta.integral_gen()]);
        let v = ord_at(&self.field, &m_ideal, prime);
        let x = self.local_unit(mode, prime)?;
        if self.is_level_prime(prime) {
            poly_level(mode, &x, v, &prime.norm)
        } else {
            poly_split(mode, &x, v, &prime.norm)
        }
    }

    fn is_level_prime(&self, prime: &PrimeIdeal) -> bool {
        self.frak_n.iter().any(|lp| lp.ideal == prime.ideal)
    }

    /// Product-form coefficient for the ideal index `𝔪 = (β)𝔡` (norm
    /// coprime to `p`): the prefix `⟨N(β)⟩^{(k−s)/2}·ω(N(β))^{−(a−2)/2}`
    /// times the local factors at every prime dividing `𝔪` or the level
    /// ideal. `N(β) = N𝔪/Δ`.
    fn product_coeff<M: WeightMode>(
        &self,
        mode: &M,
        m_ideal: &FieldIdeal,
    ) -> Result<M::Elt, EisError> {
        let m = mode.precision();
        let nbeta = PadicNum::from_ratio(
            self.p,
            &m_ideal.norm(),
            &BigInt::from(self.field.delta()),
            m,
        )?;
        let mut acc = mode.angle_pow(&nbeta, &half_diff_exp())?;
        if self.a != 2 {
            let omega = nbeta.teichmuller()?.pow_i64(-(self.a - 2) / 2)?;
            acc = acc.ring_mul(&mode.scalar(&omega));
        }
        for (prime, v) in m_ideal.factor(&self.field) {
            if self.is_level_prime(&prime) {
                continue; // handled with the level branch below, even at v = 0
            }
            let x = self.local_unit(mode, &prime)?;
            acc = acc.ring_mul(&poly_split(mode, &x, v, &prime.norm)?);
        }
        for lp in &self.frak_n {
            let v = ord_at(&self.field, m_ideal, lp);
            let x = self.local_unit(mode, lp)?;
            acc = acc.ring_mul(&poly_level(mode, &x, v, &lp.norm)?);
        }
        Ok(acc)
    }

    /// The family coefficient at the index `β`: zero whenever `(β)` meets
    /// `p` (depletion), otherwise the product-form coefficient at `(β)𝔡`.
    pub fn family_coeff<M: WeightMode>(
        &self,
        mode: &M,
        beta: &TraceBeta,
    ) -> Result<M::Elt, EisError> {
        let m_ideal = FieldIdeal::from_generators(&self.field, &[beta.integral_gen()]);
        if !m_ideal.norm().gcd(&BigInt::from(self.p)).is_one() {
            return Ok(mode.zero());
        }
        self.product_coeff(mode, &m_ideal)
    }
}

/// Which base coefficient rule a [`HilbertFamily`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffSystem {
    /// `c(𝔪) = σ_φ(𝔪)` on prime-to-p ideals, zero otherwise.
    Divisor,
    /// The product of local polynomial factors with the `⟨N(β)⟩` prefix.
    Product,
}

/// A p-depleted family of coefficients indexed by integral ideals,
/// carried as a base rule plus a formal combination of coefficient shifts:
/// `c(𝔪) = Σᵢ gᵢ·c₀(𝔪·𝔱ᵢ)`. Shift terms implement the level-raising and
/// `U_𝔮` operators without recomputing stored tables; coefficients are
/// evaluated on demand, so shifting never loses available range.
#[derive(Debug, Clone)]
pub struct HilbertFamily<M: WeightMode> {
    datum: EisensteinDatum,
    mode: M,
    system: CoeffSystem,
    terms: Vec<(FieldIdeal, M::Elt)>,
}

impl<M: WeightMode + Clone> HilbertFamily<M> {
    /// The product-normalized depleted family (the two-variable object
    /// whose diagonal restriction feeds the triple-product pipeline).
    pub fn new(datum: &EisensteinDatum, mode: M) -> Self {
        Self::with_system(datum, mode, CoeffSystem::Product)
    }

    /// The divisor-normalized depleted family `c(𝔪) = σ_φ(𝔪)`, on which
    /// the classical level-raising identity is stated.
    pub fn divisor_normalized(datum: &EisensteinDatum, mode: M) -> Self {
        Self::with_system(datum, mode, CoeffSystem::Divisor)
    }

    fn with_system(datum: &EisensteinDatum, mode: M, system: CoeffSystem) -> Self {
        let one = mode.one();
        HilbertFamily {
            datum: datum.clone(),
            mode,
            system,
            terms: vec![(FieldIdeal::unit_ideal(), one)],
        }
    }

    pub fn datum(&self) -> &EisensteinDatum {
        &self.datum
    }

    pub fn mode(&self) -> &M {
        &self.mode
    }

    pub fn system(&self) -> CoeffSystem {
        self.system
    }

    /// Largest trace the family will evaluate.
    pub fn max_trace(&self) -> u32 {
        self.datum.n_max
    }

    fn base_coeff(&self, m_ideal: &FieldIdeal) -> Result<M::Elt, EisError> {
        if !m_ideal.norm().gcd(&BigInt::from(self.datum.p)).is_one() {
            return Ok(self.mode.zero()); // depletion
        }
        match self.system {
            CoeffSystem::Divisor => self.datum.sigma_phi(&self.mode, m_ideal),
            CoeffSystem::Product => self.datum.product_coeff(&self.mode, m_ideal),
        }
    }

    /// The coefficient at an integral ideal index, through the shifts.
    pub fn coeff_ideal(&self, m_ideal: &FieldIdeal) -> Result<M::Elt, EisError> {
        let mut acc = self.mode.zero();
        for (shift, scale) in &self.terms {
            let shifted = m_ideal.mul(&self.datum.field, shift);
            acc = acc.ring_add(&scale.ring_mul(&self.base_coeff(&shifted)?));
        }
        Ok(acc)
    }

    /// The coefficient at the index `β`, i.e. at the ideal `(β)𝔡`.
    pub fn a_beta(&self, beta: &TraceBeta) -> Result<M::Elt, EisError> {
        if beta.n > self.datum.n_max {
            return Err(EisError::TraceOutOfRange { n: beta.n, max: self.datum.n_max });
        }
        let m_ideal =
            FieldIdeal::from_generators(&self.datum.field, &[beta.integral_gen()]);
        self.coeff_ideal(&m_ideal)
    }

    /// The coefficient-shift operator: `c(𝔪, u_q f) = c(𝔪𝔮, f)`.
    pub fn u_q(&self, prime: &PrimeIdeal) -> Self {
        let mut out = self.clone();
        for (shift, _) in &mut out.terms {
            *shift = shift.mul(&self.datum.field, &prime.ideal);
        }
        out
    }

    /// Applies `Π_{𝔮 | level} (1 − φ(𝔮)⁻¹⟨N𝔮⟩^{σ−κ/2}·u_q)` — the
    /// level-raising product over the chosen level primes. With trivial
    /// tame level this is the identity.
    pub fn level_raise(&self) -> Result<Self, EisError> {
        let mut out = self.clone();
        let m = self.mode.precision();
        for lp in &self.datum.frak_n {
            let group = self.datum.phi.group();
            let cls = group.class_of_ideal(&self.datum.field, &lp.ideal)?;
            let phi_inv = self.datum.phi.value_on_class(
                group.inverse_class(cls),
                self.datum.p,
                m,
            )?;
            let nq = self.datum.norm_scalar(&lp.norm, m)?;
            let g = self
                .mode
                .angle_pow(&nq, &raise_exp())?
                .ring_mul(&self.mode.scalar(&phi_inv));
            let mut raised = Vec::with_capacity(2 * out.terms.len());
            for (shift, scale) in &out.terms {
                raised.push((shift.clone(), scale.clone()));
                raised.push((
                    shift.mul(&self.datum.field, &lp.ideal),
                    scale.ring_mul(&g).ring_neg(),
                ));
            }
            out.terms = raised;
        }
        Ok(out)
    }

    /// Diagonal restriction: the elliptic q-expansion with
    /// `c(n) = Σ_{β, Tr β = n} a_β` for `1 ≤ n ≤ max_trace`.
    pub fn diag_restrict(&self) -> Result<EllipticQExp<M::Elt>, EisError> {
        let mut coeffs = Vec::with_capacity(self.datum.n_max as usize);
        for n in 1..=self.datum.n_max {
            let mut c = self.mode.zero();
            for beta in trace_slice(&self.datum.field, n) {
                c = c.ring_add(&self.a_beta(&beta)?);
            }
            coeffs.push(c);
        }
        Ok(EllipticQExp {
            coeffs,
            level: self.datum.level_n
                * self.datum.field.delta()
                * (self.datum.p as i64)
                * (self.datum.p as i64),
            weight: 2,
        })
    }
}

/// An elliptic q-expansion `Σ_{n≥1} c(n) qⁿ` with coefficients in a jet or
/// scalar ring; the constant term is zero for depleted families. `level`
/// and `weight` are bookkeeping tags (for families, the weight tag is the
/// center weight).
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticQExp<E> {
    coeffs: Vec<E>,
    pub level: i64,
    pub weight: i64,
}

impl<E: CoeffRing> EllipticQExp<E> {
    pub fn from_coeffs(coeffs: Vec<E>, level: i64, weight: i64) -> Self {
        EllipticQExp { coeffs, level, weight }
    }

    /// Number of available coefficients (`c(n)` for `1 ≤ n ≤ len`).
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The coefficient `c(n)`, 1-indexed.
    pub fn coeff(&self, n: usize) -> &E {
        assert!((1..=self.coeffs.len()).contains(&n), "coefficient index out of range");
        &self.coeffs[n - 1]
    }

    pub fn coeffs(&self) -> &[E] {
        &self.coeffs
    }
}

/// Work estimate for restricting a family up to `n_max`: how many
/// coefficient evaluations are needed and the largest ideal norm any
/// factorization will touch. The command-line driver refuses
/// configurations whose bounds are infeasible instead of truncating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RestrictionCost {
    /// Total count of family coefficients across all trace slices.
    pub coefficients: u64,
    /// Upper bound `Δ·n_max²/4` on the ideal norms to be factored.
    pub max_ideal_norm: u64,
}

/// Cost of evaluating all trace slices up to `n_max`. Slice sizes are
/// counted arithmetically (lattice points in an interval), so this stays
/// cheap even for bounds far beyond feasibility.
pub fn restriction_cost(field: &QuadField, n_max: u32) -> RestrictionCost {
    let delta = field.delta() as u128;
    let mut count: u64 = 0;
    for n in 1..=n_max as u128 {
        // #{t : t² < Δn², t ≡ nD′ (mod 2)}
        let bound2 = delta * n * n;
        let mut t_max = (bound2 as f64).sqrt() as u128 + 2;
        while t_max * t_max >= bound2 {
            t_max -= 1;
        }
        let parity = (n * field.dprime() as u128) % 2;
        count += if parity == 0 {
            (t_max / 2) as u64 * 2 + 1
        } else if t_max >= 1 {
            ((t_max - 1) / 2) as u64 * 2 + 2
        } else {
            0
        };
    }
    RestrictionCost {
        coefficients: count,
        max_ideal_norm: ((field.delta() as u128 * (n_max as u128).pow(2)) / 4) as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{ClassicalMode, Jet, JetMode};
    use crate::quadfield::{ClassGroup, FieldElt};
    use num_rational::BigRational;
    use num_traits::{Pow, Zero};
    use proptest::prelude::*;

    const P: u64 = 17;
    const M: u32 = 8;

    fn f12() -> QuadField {
        QuadField::new(12).unwrap()
    }

    fn odd_char(field: &QuadField) -> NarrowClassChar {
        ClassGroup::new(field, 1)
            .unwrap()
            .characters(field)
            .unwrap()
            .into_iter()
            .find(|c| c.is_odd())
            .expect("odd character exists")
    }

    fn datum12(p: u64, n_max: u32) -> EisensteinDatum {
        let f = f12();
        let phi = odd_char(&f);
        EisensteinDatum::new(f, phi, 2, 1, 1, p, n_max, 1, 3).unwrap()
    }

    fn datum12_level13(p: u64, n_max: u32) -> EisensteinDatum {
        let f = f12();
        let phi = odd_char(&f);
        EisensteinDatum::new(f, phi, 2, 13, 1, p, n_max, 1, 3).unwrap()
    }

    fn jm(dk: usize, ds: usize) -> JetMode {
        JetMode { p: P, m: M, dk, ds }
    }

    fn cm(p: u64, kappa: i64, sigma: i64) -> ClassicalMode {
        ClassicalMode { p, m: M, kappa, sigma }
    }

    /// All integral ideals of norm ≤ bound, by enumerating Hermite normal
    /// forms and keeping the θ-stable modules.
    fn ideals_up_to(field: &QuadField, bound: i64) -> Vec<FieldIdeal> {
        let theta = FieldElt::new(0, 1);
        let mut out = Vec::new();
        for c in 1..=bound {
            let mut a = c;
            while a * c <= bound {
                for b in 0..a {
                    let cand = FieldIdeal {
                        a: BigInt::from(a),
                        b: BigInt::from(b),
                        c: BigInt::from(c),
                    };
                    let ga = FieldElt::new(a, 0);
                    let gb = FieldElt::new(b, c);
                    if cand.contains(&field.mul(&ga, &theta))
                        && cand.contains(&field.mul(&gb, &theta))
                    {
                        out.push(cand);
                    }
                }
                a += c;
            }
        }
        out
    }

    /// φ as an exact sign (desk characters are quadratic).
    fn phi_sign(datum: &EisensteinDatum, ideal: &FieldIdeal) -> i64 {
        let group = datum.phi().group();
        let cls = group.class_of_ideal(datum.field(), ideal).unwrap();
        datum.phi().sign_on_class(cls) as i64
    }

    /// Rational divisor-power oracle `Σ_{𝔞|𝔪} φ(𝔞)·N𝔞^e` (negative e
    /// allowed), straight from the divisor enumeration.
    fn divisor_power_oracle(datum: &EisensteinDatum, m_ideal: &FieldIdeal, e: i32) -> BigRational {
        let mut total = BigRational::zero();
        for d in m_ideal.divisors(datum.field()) {
            let sign = BigRational::from_integer(phi_sign(datum, &d).into());
            let norm = BigRational::from_integer(d.norm());
            total += sign * norm.pow(e);
        }
        total
    }

    fn padic_of_rational(p: u64, r: &BigRational, m: u32) -> PadicNum {
        PadicNum::from_ratio(p, r.numer(), r.denom(), m).unwrap()
    }

    /// Evaluate a jet at integral offsets from the center.
    fn eval_jet(j: &Jet<PadicNum>, kappa: i64, sigma: i64) -> PadicNum {
        let one = j.center().ring_one();
        let kap = one.ring_from_i64(kappa);
        let sig = one.ring_from_i64(sigma);
        let mut total = one.ring_zero();
        for i in 0..=j.deg_kappa() {
            for k in 0..=j.deg_sigma() {
                let mut term = j.coeff(i, k).clone();
                for _ in 0..i {
                    term = term.ring_mul(&kap);
                }
                for _ in 0..k {
                    term = term.ring_mul(&sig);
                }
                total = total.ring_add(&term);
            }
        }
        total
    }

    #[test]
    fn datum_validation_rejects_bad_configs() {
        let f = f12();
        let phi = odd_char(&f);
        let even = ClassGroup::new(&f, 1)
            .unwrap()
            .characters(&f)
            .unwrap()
            .into_iter()
            .find(|c| !c.is_odd())
            .unwrap();
        let mk = |phi: &NarrowClassChar, a, n, c, p| {
            EisensteinDatum::new(f.clone(), phi.clone(), a, n, c, p, 8, 1, 3)
        };
        assert_eq!(mk(&phi, 3, 1, 1, 17).unwrap_err(), EisError::TwistNotEven(3));
        assert_eq!(mk(&even, 2, 1, 1, 17).unwrap_err(), EisError::CharacterNotOdd);
        // 13 splits, 3 ramifies, so neither is inert.
        assert!(matches!(
            mk(&phi, 2, 1, 1, 13).unwrap_err(),
            EisError::Field(FieldError::MustBeInert { p: 13 })
        ));
        assert!(matches!(
            mk(&phi, 2, 1, 1, 3).unwrap_err(),
            EisError::Field(FieldError::MustBeInert { p: 3 })
        ));
        // Level meeting p or Δ.
        assert_eq!(mk(&phi, 2, 17, 1, 17).unwrap_err(), EisError::LevelNotCoprime(17));
        assert_eq!(mk(&phi, 2, 6, 1, 17).unwrap_err(), EisError::LevelNotCoprime(6));
        // Level with an inert prime (12 is a non-residue mod 5).
        assert!(matches!(
            mk(&phi, 2, 5, 1, 17).unwrap_err(),
            EisError::Field(FieldError::MustSplit { q: 5 })
        ));
        // Level with a repeated prime.
        assert_eq!(mk(&phi, 2, 169, 1, 17).unwrap_err(), EisError::LevelNotSquarefree(169));
        // Conductor meeting p, and conductor not matching the character.
        assert_eq!(mk(&phi, 2, 1, 34, 17).unwrap_err(), EisError::ConductorNotCoprime(34));
        assert_eq!(
            mk(&phi, 2, 1, 13, 17).unwrap_err(),
            EisError::ConductorMismatch { datum: 13, group: 1 }
        );
        // The flagship configuration is accepted.
        assert!(mk(&phi, 2, 1, 1, 17).is_ok());
        assert!(mk(&phi, 2, 13, 1, 17).is_ok());
    }

    #[test]
    fn sigma_phi_of_unit_ideal_is_one() {
        let datum = datum12(P, 8);
        let mode = jm(1, 3);
        let unit = FieldIdeal::unit_ideal();
        assert!(datum.sigma_phi(&mode, &unit).unwrap().agrees_with(&mode.one()));
        let classical = cm(P, 4, 2);
        assert!(datum
            .sigma_phi(&classical, &unit)
            .unwrap()
            .agrees_to(&classical.one(), M as i64));
    }

    #[test]
    fn sigma_phi_of_prime_is_the_two_term_sum() {
        let datum = datum12(P, 8);
        let mode = jm(1, 3);
        let primes = datum.field().primes_above(13);
        let q13 = &primes[0];
        // σ_φ(𝔮) = ⟨N𝔮⟩^{(s−2)/2} + φ(𝔮)·⟨N𝔮⟩^{(k−s)/2}.
        let nq = PadicNum::from_i64(P, 13, M);
        let b = mode.angle_pow(&nq, &sigma_half_exp()).unwrap();
        let a = mode.angle_pow(&nq, &half_diff_exp()).unwrap();
        let phi_q = mode.scalar(
            &datum.phi().value_on_ideal(datum.field(), &q13.ideal, P, M).unwrap(),
        );
        let expected = b.add(&phi_q.ring_mul(&a));
        let got = datum.sigma_phi(&mode, &q13.ideal).unwrap();
        assert!(got.agrees_with(&expected));
    }

    #[test]
    fn sigma_phi_matches_divisor_sum_oracle_up_to_norm_200() {
        let datum = datum12(P, 8);
        // Five classical points (κ, σ) with σ even and κ ≡ σ (mod 2), so
        // the oracle uses only integer powers of angle parts.
        let points = [(0i64, 0i64), (2, 0), (4, 2), (6, 2), (8, 4)];
        for m_ideal in ideals_up_to(datum.field(), 200) {
            if !m_ideal.norm().gcd(&BigInt::from(P)).is_one() {
                continue;
            }
            for &(kappa, sigma) in &points {
                let mode = cm(P, kappa, sigma);
                let got = datum.sigma_phi(&mode, &m_ideal).unwrap();
                // Oracle: brute-force divisor enumeration with exact
                // integer exponents on the angle parts.
                let e1 = (kappa - sigma) / 2;
                let e2 = sigma / 2;
                let mut expected = PadicNum::zero(P, M as i64);
                for d in m_ideal.divisors(datum.field()) {
                    let nd = PadicNum::from_ratio(P, &d.norm(), &BigInt::one(), M).unwrap();
                    let nc = PadicNum::from_ratio(
                        P,
                        &(m_ideal.norm() / d.norm()),
                        &BigInt::one(),
                        M,
                    )
                    .unwrap();
                    let term = nd
                        .angle()
                        .unwrap()
                        .pow_i64(e1)
                        .unwrap()
                        .mul(&nc.angle().unwrap().pow_i64(e2).unwrap())
                        .unwrap();
                    let signed = if phi_sign(&datum, &d) == 1 { term } else { term.neg() };
                    expected = expected.add(&signed).unwrap();
                }
                assert!(
                    got.agrees_to(&expected, M as i64),
                    "σ_φ mismatch at norm {} point ({kappa},{sigma})",
                    m_ideal.norm()
                );
            }
        }
    }

    #[test]
    fn sigma_phi_is_multiplicative_on_coprime_ideals() {
        let datum = datum12(P, 8);
        let mode = jm(1, 2);
        let ideals = ideals_up_to(datum.field(), 60);
        for m1 in &ideals {
            for m2 in &ideals {
                let (n1, n2) = (m1.norm(), m2.norm());
                if !n1.gcd(&n2).is_one()
                    || !n1.gcd(&BigInt::from(P)).is_one()
                    || !n2.gcd(&BigInt::from(P)).is_one()
                {
                    continue;
                }
                let lhs = datum
                    .sigma_phi(&mode, &m1.mul(datum.field(), m2))
                    .unwrap();
                let rhs = datum
                    .sigma_phi(&mode, m1)
                    .unwrap()
                    .mul(&datum.sigma_phi(&mode, m2).unwrap());
                assert!(lhs.agrees_with(&rhs), "not multiplicative at {n1}·{n2}");
            }
        }
    }

    #[test]
    fn sigma_phi_rejects_ideals_meeting_p() {
        let datum = datum12(P, 8);
        let mode = jm(1, 1);
        let p_ideal = FieldIdeal::from_generators(datum.field(), &[FieldElt::new(17, 0)]);
        assert!(matches!(
            datum.sigma_phi(&mode, &p_ideal),
            Err(EisError::NotCoprimeToP { .. })
        ));
    }

    #[test]
    fn local_polynomials_match_the_displayed_cases() {
        let mode = jm(1, 2);
        let datum = datum12(P, 8);
        let primes = datum.field().primes_above(13);
        let q13 = &primes[0];
        let x = datum.local_unit(&mode, q13).unwrap();
        let q = BigInt::from(13);
        let qinv = mode.scalar(&PadicNum::from_ratio(P, &BigInt::one(), &q, M).unwrap());

        // Order 0: empty sum of one term.
        assert!(poly_split(&mode, &x, 0, &q).unwrap().agrees_with(&mode.one()));
        // Order 2: 1 + q⁻¹x + q⁻²x².
        let expected = mode
            .one()
            .add(&qinv.ring_mul(&x))
            .add(&qinv.ring_mul(&qinv).ring_mul(&x.ring_mul(&x)));
        assert!(poly_split(&mode, &x, 2, &q).unwrap().agrees_with(&expected));
        // Level branch at order 0: −x⁻¹.
        let expected = x.ring_inv().unwrap().ring_neg();
        assert!(poly_level(&mode, &x, 0, &q).unwrap().agrees_with(&expected));
        // Level branch at order 1: 1 − x⁻¹ − q⁻¹.
        let expected = mode
            .one()
            .sub(&x.ring_inv().unwrap())
            .sub(&qinv);
        assert!(poly_level(&mode, &x, 1, &q).unwrap().agrees_with(&expected));
    }

    #[test]
    fn product_poly_matches_direct_power_sum() {
        // poly_split's Horner loop against the literal Σ q^{−j}x^j.
        let mode = jm(1, 2);
        let datum = datum12(P, 8);
        for (q, v) in [(13i64, 3u32), (11, 2), (23, 4)] {
            let primes = datum.field().primes_above(q);
            let prime = &primes[0];
            let x = datum.local_unit(&mode, prime).unwrap();
            let qinv = mode.scalar(
                &PadicNum::from_ratio(P, &BigInt::one(), &BigInt::from(q), M).unwrap(),
            );
            let mut expected = mode.zero();
            for j in 0..=v {
                expected = expected.add(&elt_pow(&qinv.ring_mul(&x), j));
            }
            assert!(poly_split(&mode, &x, v, &BigInt::from(q)).unwrap().agrees_with(&expected));
        }
    }

    #[test]
    fn family_coeff_depletes_indices_meeting_p() {
        // p = 5 is inert in Q(√3) and small enough that trace slices reach
        // depleted indices: (β)𝔡 = (x − nθ) meets 5 iff 5 | x and 5 | n.
        let datum = datum12(5, 10);
        let mode = JetMode { p: 5, m: 6, dk: 1, ds: 2 };
        let mut seen = 0;
        for n in 1..=10u32 {
            for beta in trace_slice(datum.field(), n) {
                if beta.x % 5 == 0 && beta.n % 5 == 0 {
                    seen += 1;
                    assert!(datum.family_coeff(&mode, &beta).unwrap().is_zero());
                }
            }
        }
        assert!(seen > 0, "test must hit at least one depleted index");
    }

    #[test]
    fn family_coeff_classical_values_match_the_divisor_oracle() {
        // At weights on the Teichmüller branch of the center (κ ≡ σ ≡ 0
        // mod 2(p−1)) the frozen ω-factors reproduce the plain-power
        // classical coefficient: N(β)^{(κ−σ)/2}·Σ_{𝔞|(β)𝔡} φ(𝔞)·N𝔞^{𝐤−1}
        // with 𝐤 = σ − κ/2 + 1. Both sides are exact at precision M.
        let datum = datum12(P, 15);
        for &(kappa, sigma) in &[(32i64, 32i64), (0, 32)] {
            let mode = cm(P, kappa, sigma);
            let bk = sigma - kappa / 2 + 1;
            for n in 1..=15u32 {
                for beta in trace_slice(datum.field(), n) {
                    let m_ideal =
                        FieldIdeal::from_generators(datum.field(), &[beta.integral_gen()]);
                    let nbeta = BigRational::new(m_ideal.norm(), BigInt::from(12));
                    let expected = nbeta.pow(((kappa - sigma) / 2) as i32)
                        * divisor_power_oracle(&datum, &m_ideal, (bk - 1) as i32);
                    let got = datum.family_coeff(&mode, &beta).unwrap();
                    assert!(
                        got.agrees_to(&padic_of_rational(P, &expected, M), M as i64),
                        "mismatch at β = ({}, {n}), point ({kappa},{sigma})",
                        beta.x
                    );
                }
            }
        }
    }

    #[test]
    fn family_coeff_negative_weight_values_match_the_continued_oracle() {
        // The same formula continues past the region where the inner
        // weight 𝐤 = σ − κ/2 + 1 is positive; the divisor oracle with
        // negative powers (exact rationals) still matches. p = 5, branch
        // point (κ, σ) = (8, 0), 𝐤 = −3.
        let p = 5u64;
        let m = 6u32;
        let datum = datum12(p, 6);
        let mode = ClassicalMode { p, m, kappa: 8, sigma: 0 };
        for n in 1..=6u32 {
            for beta in trace_slice(datum.field(), n) {
                let m_ideal = FieldIdeal::from_generators(datum.field(), &[beta.integral_gen()]);
                if !m_ideal.norm().gcd(&BigInt::from(p)).is_one() {
                    continue; // depleted indices are zero, not interpolated
                }
                let nbeta = BigRational::new(m_ideal.norm(), BigInt::from(12));
                let expected = nbeta.pow(4) * divisor_power_oracle(&datum, &m_ideal, -4);
                let got = datum.family_coeff(&mode, &beta).unwrap();
                assert!(
                    got.agrees_to(&padic_of_rational(p, &expected, m), m as i64),
                    "mismatch at β = ({}, {n})",
                    beta.x
                );
            }
        }
    }

    #[test]
    fn product_and_divisor_normalizations_differ_by_the_bracket_factor() {
        // With trivial tame level the two normalizations of the same
        // depleted family satisfy, index by index,
        //   product = ⟨Δ⟩^{(σ−κ)/2} · φ(𝔪) · divisor,
        // computed along entirely different code paths (local polynomial
        // products vs. multiplicative divisor sums).
        let datum = datum12(P, 6);
        let mode = jm(1, 3);
        let product = HilbertFamily::new(&datum, mode);
        let divisor = HilbertFamily::divisor_normalized(&datum, mode);
        let delta = PadicNum::from_i64(P, 12, M);
        let bracket = mode
            .angle_pow(
                &delta,
                &AffineExp {
                    c0: SmallRat::ZERO,
                    ck: SmallRat::new(-1, 2),
                    cs: SmallRat::new(1, 2),
                },
            )
            .unwrap();
        let mut checked = 0;
        for n in 1..=6u32 {
            for beta in trace_slice(datum.field(), n) {
                let m_ideal = FieldIdeal::from_generators(datum.field(), &[beta.integral_gen()]);
                if !m_ideal.norm().gcd(&BigInt::from(P)).is_one() {
                    continue;
                }
                let lhs = product.a_beta(&beta).unwrap();
                let phi_m = mode.scalar(
                    &datum.phi().value_on_ideal(datum.field(), &m_ideal, P, M).unwrap(),
                );
                let rhs = bracket.ring_mul(&phi_m).ring_mul(&divisor.a_beta(&beta).unwrap());
                // `agrees_to` insists both sides carry the full working
                // precision, so a precision collapse cannot pass silently.
                assert!(lhs.agrees_to(&rhs, M as i64), "bracket identity fails at ({}, {n})", beta.x);
                checked += 1;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn jet_route_matches_classical_route_at_a_nearby_weight() {
        // Dual-route check across the whole formula stack: evaluate the
        // jets at the branch-point offset (κ₀, σ₀) = (2(p−1)p³, 2(p−1)p)
        // and compare with the classical-mode evaluation there. The
        // truncation error is divisible by p^M, so agreement is exact at
        // the working precision.
        let datum = datum12(P, 5);
        let jet_mode = jm(1, 3);
        let (kappa0, sigma0) = (2 * 16 * 17i64.pow(3), 2 * 16 * 17);
        let classical = cm(P, kappa0, sigma0);
        for n in 1..=5u32 {
            for beta in trace_slice(datum.field(), n) {
                let jet = datum.family_coeff(&jet_mode, &beta).unwrap();
                let direct = datum.family_coeff(&classical, &beta).unwrap();
                assert!(
                    eval_jet(&jet, kappa0, sigma0).agrees_to(&direct, M as i64),
                    "route mismatch at β = ({}, {n})",
                    beta.x
                );
            }
        }
        // Same check for the divisor normalization.
        let m_ideal = FieldIdeal::from_generators(datum.field(), &[FieldElt::new(7, -1)]);
        let jet = datum.sigma_phi(&jet_mode, &m_ideal).unwrap();
        let direct = datum.sigma_phi(&classical, &m_ideal).unwrap();
        assert!(eval_jet(&jet, kappa0, sigma0).agrees_to(&direct, M as i64));
    }

    #[test]
    fn odd_character_factors_through_genus_theory() {
        // The odd character of Q(√3) is the genus character attached to
        // the factorization 12 = (−4)·(−3): its value on an ideal coprime
        // to 2 (resp. 3) is the quadratic residue symbol of the norm
        // modulo 4 (resp. 3).
        let datum = datum12(P, 4);
        let chi4 = |x: i64| if x.rem_euclid(4) == 1 { 1i64 } else { -1 };
        let chi3 = |x: i64| if x.rem_euclid(3) == 1 { 1i64 } else { -1 };
        for q in 2..=80i64 {
            if !(2..q).all(|d| q % d != 0) {
                continue;
            }
            for prime in datum.field().primes_above(q) {
                let sign = phi_sign(&datum, &prime.ideal);
                let norm = prime.norm.to_string().parse::<i64>().unwrap();
                if norm % 2 != 0 {
                    assert_eq!(sign, chi4(norm), "χ₋₄ mismatch at residue size {norm}");
                }
                if norm % 3 != 0 {
                    assert_eq!(sign, chi3(norm), "χ₋₃ mismatch at residue size {norm}");
                }
            }
        }
    }

    #[test]
    fn u_q_shifts_ideal_indices() {
        let datum = datum12(P, 8);
        let mode = jm(1, 2);
        let family = HilbertFamily::divisor_normalized(&datum, mode);
        let primes = datum.field().primes_above(13);
        let q13 = &primes[0];
        let shifted = family.u_q(q13);
        for m_ideal in ideals_up_to(datum.field(), 30) {
            let lhs = shifted.coeff_ideal(&m_ideal).unwrap();
            let rhs = family.coeff_ideal(&m_ideal.mul(datum.field(), &q13.ideal)).unwrap();
            assert!(lhs.agrees_with(&rhs));
        }
    }

    #[test]
    fn level_raise_is_identity_for_trivial_level() {
        let datum = datum12(P, 6);
        let mode = jm(1, 2);
        let family = HilbertFamily::divisor_normalized(&datum, mode);
        let raised = family.level_raise().unwrap();
        for m_ideal in ideals_up_to(datum.field(), 20) {
            assert!(raised
                .coeff_ideal(&m_ideal)
                .unwrap()
                .agrees_with(&family.coeff_ideal(&m_ideal).unwrap()));
        }
    }

    #[test]
    fn level_raise_expands_one_split_factor() {
        // With level 13 the raised family satisfies
        // c(𝔪) − φ(𝔮)⁻¹⟨N𝔮⟩^{σ−κ/2}·c(𝔪𝔮) against the unraised one.
        let datum = datum12_level13(P, 8);
        let mode = jm(1, 2);
        let family = HilbertFamily::divisor_normalized(&datum, mode);
        let raised = family.level_raise().unwrap();
        let q13 = &datum.level_primes()[0];
        let group = datum.phi().group();
        let cls = group.class_of_ideal(datum.field(), &q13.ideal).unwrap();
        let phi_inv = datum
            .phi()
            .value_on_class(group.inverse_class(cls), P, M)
            .unwrap();
        let g = mode
            .angle_pow(&PadicNum::from_i64(P, 13, M), &raise_exp())
            .unwrap()
            .ring_mul(&mode.scalar(&phi_inv));
        for m_ideal in ideals_up_to(datum.field(), 30) {
            let expected = family.coeff_ideal(&m_ideal).unwrap().sub(
                &g.ring_mul(
                    &family
                        .coeff_ideal(&m_ideal.mul(datum.field(), &q13.ideal))
                        .unwrap(),
                ),
            );
            assert!(raised.coeff_ideal(&m_ideal).unwrap().agrees_with(&expected));
        }
    }

    #[test]
    fn diag_restrict_sums_the_trace_slices() {
        let datum = datum12(P, 8);
        let mode = jm(1, 2);
        let family = HilbertFamily::new(&datum, mode);
        let restricted = family.diag_restrict().unwrap();
        assert_eq!(restricted.len(), 8);
        for n in 1..=8u32 {
            let mut expected = mode.zero();
            for beta in trace_slice(datum.field(), n) {
                expected = expected.add(&datum.family_coeff(&mode, &beta).unwrap());
            }
            assert!(restricted.coeff(n as usize).agrees_with(&expected));
        }
    }

    #[test]
    fn trace_requests_beyond_the_truncation_error_out() {
        let datum = datum12(P, 4);
        let mode = jm(1, 1);
        let family = HilbertFamily::new(&datum, mode);
        let beta = trace_slice(datum.field(), 5).into_iter().next().unwrap();
        assert_eq!(
            family.a_beta(&beta).unwrap_err(),
            EisError::TraceOutOfRange { n: 5, max: 4 }
        );
    }

    #[test]
    fn restriction_cost_counts_lattice_points_exactly() {
        let f = f12();
        let cost = restriction_cost(&f, 12);
        let direct: u64 = (1..=12u32).map(|n| trace_slice(&f, n).len() as u64).sum();
        assert_eq!(cost.coefficients, direct);
        let max_norm: u64 = (1..=12u32)
            .flat_map(|n| trace_slice(&f, n))
            .map(|b| {
                let m = FieldIdeal::from_generators(&f, &[b.integral_gen()]);
                m.norm().to_string().parse::<u64>().unwrap()
            })
            .max()
            .unwrap();
        assert!(cost.max_ideal_norm >= max_norm);

        let f8 = QuadField::new(8).unwrap();
        let cost8 = restriction_cost(&f8, 9);
        let direct8: u64 = (1..=9u32).map(|n| trace_slice(&f8, n).len() as u64).sum();
        assert_eq!(cost8.coefficients, direct8);
    }

    proptest! {
        #[test]
        fn prop_sigma_phi_jets_specialize_to_classical_values(
            norm_seed in 2i64..40,
            kappa in (-4i64..16).prop_map(|k| 2 * 16 * k),
            sigma in (-4i64..16).prop_map(|s| 2 * 16 * s),
        ) {
            // At any branch-point weight (κ ≡ σ ≡ 0 mod 2(p−1)) the
            // classical-mode divisor sum matches the plain-power oracle.
            let datum = datum12(P, 8);
            let mode = ClassicalMode { p: P, m: M, kappa, sigma };
            for m_ideal in ideals_up_to(datum.field(), norm_seed) {
                if !m_ideal.norm().gcd(&BigInt::from(P)).is_one() {
                    continue;
                }
                let got = datum.sigma_phi(&mode, &m_ideal).unwrap();
                let mut expected = BigRational::zero();
                for d in m_ideal.divisors(datum.field()) {
                    let sign = BigRational::from_integer(phi_sign(&datum, &d).into());
                    let nd = BigRational::from_integer(d.norm());
                    let nc = BigRational::from_integer(m_ideal.norm() / d.norm());
                    expected += sign
                        * nd.pow(((kappa - sigma) / 2) as i32)
                        * nc.pow((sigma / 2) as i32);
                }
                prop_assert!(got.agrees_to(&padic_of_rational(P, &expected, M), M as i64));
            }
        }
    }

}
