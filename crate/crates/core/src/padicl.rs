//! One-variable p-adic L-series assembled from lifted eigensymbols.
//!
//! Two kinds of series are produced from the moments of a
//! distribution-valued symbol.  The *cyclotomic* series pairs the
//! unit-disc moments on the path `{∞ → 0}` against `ω^a(x)·⟨x⟩^σ` and is
//! expanded as a jet in the cyclotomic direction σ, the weight staying
//! fixed at 2; when the Hecke eigenvalue at p is `+1` the centre of the
//! trivial twist carries an exceptional zero.  The *square-root* series
//! attaches to a real quadratic field in which p stays prime and to a
//! character of its narrow class group: each class contributes the
//! measure of its closed geodesic path paired against the square-root
//! weight character of the class's binary quadratic form, and the total
//! is expanded as a jet in the weight direction κ.  Its centre vanishes
//! for a structural reason — the total mass of every path measure is
//! zero because the residual eigenform is new at p — so the κ-coefficient
//! is the quantity of interest.  `sh_log` reassembles that coefficient
//! from per-class logarithm integrals of `log(x − θy)` and records the
//! bookkeeping (Fricke sign, distinguished classes) entering the
//! symmetrised total; the agreement of the two routes is a test target,
//! not an assumption.
//!
//! Conventions: the p-adic logarithm is the Iwasawa branch (`log p = 0`),
//! applied to each coordinate of the inert quadratic extension
//! separately.  Class sums realize a narrow class by its reduced form
//! `(a, b, c)`, the automorph of that form, and the root
//! `ξ = (b + √Δ)/2` — the root of the form with its second variable
//! negated, because the chart geometry of the measures acts on `(x, y)`
//! through exactly that sign flip, and this is the root the automorph
//! fixes in chart coordinates.  One caveat is recorded here once and
//! relied on below: moments at a fixed weight do not determine the
//! weight-direction fibre of the measures, so changing the
//! representative of a class or the base point of its geodesic shifts
//! each logarithm integral by a Galois-fixed scalar.  The
//! conjugation-odd components are honest invariants; scalar parts are
//! normalized by fixing the realization, namely reduced representatives
//! and a base point supplied by the caller (`∞` throughout the tests).

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::str::FromStr;
use thiserror::Error;

use crate::distmsym::{
    gs_measure_total, measure_on_disc_local, moment_from_repr, moment_repr, DistError, DistSymbol,
    GsIntegrand, MomentRepr, PathDiv,
};
use crate::jet::Jet;
use crate::msym::{Cusp, EigenSymbol, Mat2, SymbolPart, SymbolSpace};
use crate::padic::{PadicError, PadicNum, QuadExt, QuadPadic};
use crate::quadfield::{
    embedding_data, ClassGroup, FieldError, FieldIdeal, NarrowClassChar, QForm, QuadField,
    SplitType,
};

/// Errors from the L-series layer.
#[derive(Debug, Error)]
pub enum LpError {
    /// An odd character pairs with the minus part of the symbol and an
    /// even character with the plus part.
    #[error("character parity (odd = {phi_odd}) does not match the {got:?} symbol part")]
    PartParityMismatch { phi_odd: bool, got: SymbolPart },

    /// The class-sum pipeline needs p to stay prime in the quadratic
    /// field.
    #[error("p = {p} does not stay prime in the field of discriminant {delta}")]
    InertRequired { p: u64, delta: i64 },

    /// The logarithm report is only defined for characters of odd parity.
    #[error("the logarithm report needs a character of odd parity")]
    OddCharacterRequired,

    /// The logarithm report assumes the symbol level is exactly p.
    #[error("tame level {tame} is not supported (the symbol level must be exactly p)")]
    TameLevelUnsupported { tame: i64 },

    /// A class representative whose norm is divisible by p cannot serve
    /// as an interpolation weight.
    #[error("class representative of norm {norm} is divisible by p = {p}")]
    BadRepresentative { p: u64, norm: i64 },

    #[error(transparent)]
    Dist(#[from] DistError),

    #[error(transparent)]
    Field(#[from] FieldError),

    #[error(transparent)]
    Padic(#[from] PadicError),
}

// ---------------------------------------------------------------------------
// Series jets.

/// Which direction a series jet expands in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LKind {
    /// σ-expansion at the centre of the cyclotomic line, weight fixed
    /// at 2.
    Cyclotomic,
    /// κ-expansion at weight 2 of the square-root class sum.
    SquareRoot,
}

/// A one-variable L-series jet together with the disc depth that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LSeriesJet {
    kind: LKind,
    p: u64,
    depth: u32,
    jet: Jet<PadicNum>,
}

impl LSeriesJet {
    pub fn kind(&self) -> LKind {
        self.kind
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn jet(&self) -> &Jet<PadicNum> {
        &self.jet
    }
}

// ---------------------------------------------------------------------------
// The cyclotomic series.

/// σ-jet of `∫_{Z_p^×} ω^{a−2}(x)·⟨x⟩^σ dμ(D)` on the path
/// `D = {∞ → 0}`, assembled from the lifted moments disc by disc at the
/// given depth; `omega_power` is the tag `a` of the twist.
pub fn cyclotomic_l(
    space: &SymbolSpace,
    xi: &DistSymbol,
    omega_power: i64,
    d_sigma: usize,
    depth: u32,
) -> Result<LSeriesJet, LpError> {
    if depth < 1 {
        return Err(DistError::DepthTooShallow { have: depth, need: 1 }.into());
    }
    let p = xi.prime();
    let mm = xi.mmom();
    let digits = (mm + 2) as u32;
    let len = mm;
    let div = PathDiv::new(Cusp::infinity(), Cusp::new(0, 1));
    let mut jet = Jet::constant(PadicNum::zero(p, mm as i64), 0, d_sigma);
    for u in 1..p.pow(depth) {
        if u % p == 0 {
            continue;
        }
        let tw = PadicNum::from_bigint(p, &BigInt::from(u), digits)
            .teichmuller()?
            .pow_i64(omega_power - 2)?;
        let polys = sigma_weight_polys(p, u, depth, d_sigma, len, digits)?;
        for (j, poly) in polys.iter().enumerate() {
            let m = measure_on_disc_local(space, xi, &div, u, depth, poly)?;
            *jet.coeff_mut(0, j) = jet.coeff(0, j).add(&m.mul(&tw)?)?;
        }
    }
    Ok(LSeriesJet { kind: LKind::Cyclotomic, p, depth, jet })
}

/// The same σ-jet as a finite Riemann sum straight from the classical
/// eigensymbol: over units u mod `p^depth` the path value at
/// `{∞ → u/p^depth}` is weighted by `ω^{a−2}(u)` and the σ-exponential
/// of `log⟨u⟩`, with one `a_p⁻¹` per level of depth.  When the twist is
/// locally constant at this depth the σ⁰ term is exact; the higher
/// σ-coefficients converge as the depth grows.  Serves as an
/// independent route for the lifted-moment assembly above.
#[allow(clippy::too_many_arguments)]
pub fn cyclotomic_l_classical(
    space: &SymbolSpace,
    sym: &EigenSymbol,
    part: SymbolPart,
    p: u64,
    omega_power: i64,
    d_sigma: usize,
    depth: u32,
    digits: u32,
) -> Result<Jet<PadicNum>, LpError> {
    let ap_rat = sym.a(p).ok_or(DistError::MissingEigenvalue { p })?;
    let ap = PadicNum::from_ratio(p, ap_rat.numer(), ap_rat.denom(), digits)?;
    let weight = ap.pow_i64(-(depth as i64))?;
    let count = p.pow(depth);
    let mut jet = Jet::constant(PadicNum::zero(p, digits as i64), 0, d_sigma);
    for u in 1..count {
        if u % p == 0 {
            continue;
        }
        let to = Cusp::from_big(BigInt::from(u), BigInt::from(count));
        let lam_rat = sym.value_on_path(space, part, &Cusp::infinity(), &to);
        let lam = PadicNum::from_ratio(p, lam_rat.numer(), lam_rat.denom(), digits)?;
        let tw = PadicNum::from_bigint(p, &BigInt::from(u), digits)
            .teichmuller()?
            .pow_i64(omega_power - 2)?;
        let base = lam.mul(&tw)?.mul(&weight)?;
        let lg = PadicNum::from_bigint(p, &BigInt::from(u), digits).plog()?;
        let mut pw = PadicNum::one(p, digits);
        for j in 0..=d_sigma {
            if j > 0 {
                let jj = PadicNum::from_bigint(p, &BigInt::from(j as i64), digits);
                pw = pw.mul(&lg)?.div(&jj)?;
            }
            *jet.coeff_mut(0, j) = jet.coeff(0, j).add(&pw.mul(&base)?)?;
        }
    }
    Ok(jet)
}

// ---------------------------------------------------------------------------
// Class realizations.

/// The concrete data realizing one narrow class inside the class sums:
/// the reduced form, its automorph (an `SL₂(Z)` matrix fixing the
/// form's roots), the representative ideal norm, and the character
/// value.
#[derive(Debug, Clone)]
pub struct ClassRealization {
    pub class_index: usize,
    pub form: QForm,
    pub automorph: Mat2,
    pub norm: i64,
    pub phi_value: PadicNum,
}

/// Realize every narrow class by its reduced form and automorph,
/// evaluating the character on the way.
pub fn class_realizations(
    field: &QuadField,
    group: &ClassGroup,
    phi: &NarrowClassChar,
    p: u64,
    digits: u32,
) -> Result<Vec<ClassRealization>, LpError> {
    let embs = embedding_data(field, group, 1, p as i64)?;
    embs.into_iter()
        .map(|e| {
            let g = e.gamma;
            let norm = e.form.a.abs();
            if norm % (p as i64) == 0 {
                return Err(LpError::BadRepresentative { p, norm });
            }
            Ok(ClassRealization {
                class_index: e.class_index,
                form: e.form,
                automorph: Mat2::new(g[0][0], g[0][1], g[1][0], g[1][1]),
                norm,
                phi_value: phi.value_on_class(e.class_index, p, digits)?,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// The square-root series.

/// κ-jet of the square-root class sum: each narrow class contributes
/// `ϑ(⟨norm⟩)` times the measure of its geodesic path against
/// `ϑ((x−θy)(x−θ̄y))` on primitive vectors, and the contributions are
/// weighted by the character.  The κ⁰ coefficient is a total-mass sum
/// and vanishes when the residual eigenform is new at p.
#[allow(clippy::too_many_arguments)]
pub fn sqrt_l(
    space: &SymbolSpace,
    xi: &DistSymbol,
    part: SymbolPart,
    field: &QuadField,
    group: &ClassGroup,
    phi: &NarrowClassChar,
    base: &Cusp,
    depth: u32,
) -> Result<LSeriesJet, LpError> {
    let want = if phi.is_odd() { SymbolPart::Minus } else { SymbolPart::Plus };
    if part != want {
        return Err(LpError::PartParityMismatch { phi_odd: phi.is_odd(), got: part });
    }
    let p = xi.prime();
    if field.splitting_type(p as i64) != SplitType::Inert {
        return Err(LpError::InertRequired { p, delta: field.delta() });
    }
    let digits = (xi.mmom() + 2) as u32;
    let classes = class_realizations(field, group, phi, p, digits)?;
    sqrt_l_over(space, xi, &classes, base, depth)
}

/// The square-root sum over explicitly supplied class realizations (any
/// equivalent choice of representatives gives the same jet).
pub fn sqrt_l_over(
    space: &SymbolSpace,
    xi: &DistSymbol,
    classes: &[ClassRealization],
    base: &Cusp,
    depth: u32,
) -> Result<LSeriesJet, LpError> {
    let p = xi.prime();
    let terms = classes
        .par_iter()
        .map(|cls| class_term_jet(space, xi, cls, base, depth))
        .collect::<Result<Vec<_>, LpError>>()?;
    let mut jet = Jet::constant(PadicNum::zero(p, xi.mmom() as i64), 1, 0);
    for term in terms {
        jet = jet.add(&term);
    }
    Ok(LSeriesJet { kind: LKind::SquareRoot, p, depth, jet })
}

/// One class's contribution: `φ(t)·ϑ(⟨norm⟩)·(mass + κ·derivative)`.
fn class_term_jet(
    space: &SymbolSpace,
    xi: &DistSymbol,
    cls: &ClassRealization,
    base: &Cusp,
    depth: u32,
) -> Result<Jet<PadicNum>, LpError> {
    let p = xi.prime();
    let mm = xi.mmom();
    let digits = (mm + 2) as u32;
    let div = PathDiv::new(base.clone(), cls.automorph.apply(base));
    let one = PadicNum::one(p, digits);
    let mass = gs_measure_total(space, xi, &div, &GsIntegrand::constant(p, depth, &one))?;
    let h = half_log_form_integrand(p, depth, mm, digits, &cls.form)?;
    let deriv = gs_measure_total(space, xi, &div, &h)?;
    let pre = xi
        .weight_tag()
        .theta_jet(&PadicNum::from_bigint(p, &BigInt::from(cls.norm), digits))?;
    let term = Jet::constant(mass, 1, 0).add(&Jet::var_kappa(&deriv, 1, 0).scale(&deriv));
    Ok(pre.mul(&term).scale(&cls.phi_value))
}

/// The unit-region pairing `∫_{Z_p^×} ϑ(x) dμ(D)` as a κ-jet.  This is
/// the kernel of the square-root series at a prime that splits in the
/// quadratic field, where the measure only sees the units of the base
/// line; it is well defined for any lifted symbol.
pub fn theta_unit_integral(
    space: &SymbolSpace,
    xi: &DistSymbol,
    div: &PathDiv,
    depth: u32,
) -> Result<Jet<PadicNum>, LpError> {
    let p = xi.prime();
    let mm = xi.mmom();
    let digits = (mm + 2) as u32;
    let tag = xi.weight_tag();
    let mut c0 = PadicNum::zero(p, mm as i64);
    let mut c1 = PadicNum::zero(p, mm as i64);
    for u in 1..p.pow(depth) {
        if u % p == 0 {
            continue;
        }
        let polys = tag.theta_poly_on_disc(u, depth, mm, digits)?;
        let p0: Vec<PadicNum> = polys.iter().map(|j| j.coeff(0, 0).clone()).collect();
        let p1: Vec<PadicNum> = polys.iter().map(|j| j.coeff(1, 0).clone()).collect();
        c0 = c0.add(&measure_on_disc_local(space, xi, div, u, depth, &p0)?)?;
        c1 = c1.add(&measure_on_disc_local(space, xi, div, u, depth, &p1)?)?;
    }
    Ok(Jet::constant(c0, 1, 0).add(&Jet::var_kappa(&c1, 1, 0).scale(&c1)))
}

/// Charts of `(1/2)·log⟨Q(x, y)/a⟩` for the binary form `Q = (a, b, c)`:
/// the t-chart expands at `(disc + p^dτ, 1)` and the s-chart at
/// `(1, p(disc + p^dτ))`.  Dividing by the leading coefficient makes the
/// argument the monic product `(x−θy)(x−θ̄y)` of the form's roots.
fn half_log_form_integrand(
    p: u64,
    depth: u32,
    len: usize,
    digits: u32,
    form: &QForm,
) -> Result<GsIntegrand, LpError> {
    let count = p.pow(depth) as usize;
    let (a, b, c) = (BigInt::from(form.a), BigInt::from(form.b), BigInt::from(form.c));
    let log_a = PadicNum::from_bigint(p, &a, digits).plog()?;
    let half = PadicNum::from_bigint(p, &BigInt::from(2), digits).inv()?;
    let pd = BigInt::from(p).pow(depth);
    let mut on_t = Vec::with_capacity(count);
    let mut on_s = Vec::with_capacity(count);
    for disc in 0..count as u64 {
        let d = BigInt::from(disc);
        // Q(d + p^dep·τ, 1) = Q(d,1) + (2a·d + b)·p^dep·τ + a·p^{2·dep}·τ².
        let w_t = [
            &a * &d * &d + &b * &d + &c,
            (BigInt::from(2) * &a * &d + &b) * &pd,
            &a * &pd * &pd,
        ];
        on_t.push(half_log_series(p, &w_t, len, digits, &log_a, &half)?);
        // Q(1, p(d + p^dep·τ)): substitute y = p·d + p^{dep+1}·τ.
        let y0 = BigInt::from(p) * &d;
        let y1 = BigInt::from(p) * &pd;
        let w_s = [
            &a + &b * &y0 + &c * &y0 * &y0,
            &b * &y1 + BigInt::from(2) * &c * &y0 * &y1,
            &c * &y1 * &y1,
        ];
        on_s.push(half_log_series(p, &w_s, len, digits, &log_a, &half)?);
    }
    Ok(GsIntegrand::from_charts(p, depth, on_t, on_s)?)
}

/// `(1/2)·(log(w₀ + w₁τ + w₂τ²) − log_a)` as a series in τ, for a unit
/// constant term.
fn half_log_series(
    p: u64,
    w: &[BigInt; 3],
    len: usize,
    digits: u32,
    log_a: &PadicNum,
    half: &PadicNum,
) -> Result<Vec<PadicNum>, LpError> {
    let w0 = PadicNum::from_bigint(p, &w[0], digits);
    let inv0 = w0.inv()?;
    // v = (w₁τ + w₂τ²)/w₀;  log = log w₀ + Σ (−1)^{k+1} v^k / k.
    let mut v = vec![PadicNum::zero(p, digits as i64); len];
    if len > 1 {
        v[1] = PadicNum::from_bigint(p, &w[1], digits).mul(&inv0)?;
    }
    if len > 2 {
        v[2] = PadicNum::from_bigint(p, &w[2], digits).mul(&inv0)?;
    }
    let mut series = vec![PadicNum::zero(p, digits as i64); len];
    series[0] = w0.plog()?.sub(log_a)?;
    let mut pw = v.clone();
    for k in 1..len {
        if k > 1 {
            pw = poly_mul(p, &pw, &v, len, digits)?;
        }
        let kk = PadicNum::from_bigint(p, &BigInt::from(k as i64), digits);
        for (slot, c) in series.iter_mut().zip(&pw) {
            let mut term = c.div(&kk)?;
            if k % 2 == 0 {
                term = term.neg();
            }
            *slot = slot.add(&term)?;
        }
    }
    for c in series.iter_mut() {
        *c = c.mul(half)?;
    }
    Ok(series)
}

// ---------------------------------------------------------------------------
// Logarithm integrals over the inert quadratic extension.

/// `∫ log(A·x − ξ·y) dμ(D)` over primitive vectors, ξ an integral
/// element of the inert extension given by its `(1, w)`-coordinates.
/// The integrand's two coordinates are charted and integrated
/// separately, then recombined; the value lives in the extension.
#[allow(clippy::too_many_arguments)]
pub fn log_integral(
    space: &SymbolSpace,
    xi: &DistSymbol,
    div: &PathDiv,
    ext: QuadExt,
    lead: &BigInt,
    elt: (&BigInt, &BigInt),
    depth: u32,
    len: usize,
) -> Result<QuadPadic, LpError> {
    let p = xi.prime();
    if ext.p != p {
        return Err(PadicError::PrimeMismatch { left: ext.p, right: p }.into());
    }
    let digits = (xi.mmom() + 2) as u32;
    let count = p.pow(depth) as usize;
    let pd = BigInt::from(p).pow(depth);
    let mut t0 = Vec::with_capacity(count);
    let mut t1 = Vec::with_capacity(count);
    let mut s0 = Vec::with_capacity(count);
    let mut s1 = Vec::with_capacity(count);
    for disc in 0..count as u64 {
        let d = BigInt::from(disc);
        // t-chart: A(d + p^dep·τ) − ξ.
        let w0 = QuadPadic::new(ext, &(lead * &d - elt.0), &(-elt.1), digits);
        let w1 = QuadPadic::new(ext, &(lead * &pd), &BigInt::zero(), digits);
        let (a, b) = split_coords(&quad_log_series(&w0, &w1, len)?);
        t0.push(a);
        t1.push(b);
        // s-chart: A − ξ·p(d + p^dep·τ).
        let y0 = BigInt::from(p) * &d;
        let y1 = BigInt::from(p) * &pd;
        let w0 = QuadPadic::new(ext, &(lead - elt.0 * &y0), &(-(elt.1 * &y0)), digits);
        let w1 = QuadPadic::new(ext, &(-(elt.0 * &y1)), &(-(elt.1 * &y1)), digits);
        let (a, b) = split_coords(&quad_log_series(&w0, &w1, len)?);
        s0.push(a);
        s1.push(b);
    }
    let g0 = GsIntegrand::from_charts(p, depth, t0, s0)?;
    let g1 = GsIntegrand::from_charts(p, depth, t1, s1)?;
    let j0 = gs_measure_total(space, xi, div, &g0)?;
    let j1 = gs_measure_total(space, xi, div, &g1)?;
    let gen = QuadPadic::new(ext, &BigInt::zero(), &BigInt::one(), digits);
    Ok(QuadPadic::from_scalar(ext, &j0)?.add(&gen.scale(&j1)?))
}

/// `log(w₀ + w₁τ)` as a series in τ for a unit `w₀`.
fn quad_log_series(w0: &QuadPadic, w1: &QuadPadic, len: usize) -> Result<Vec<QuadPadic>, LpError> {
    let ext = w0.ext();
    let m = w0.prec();
    let v = w1.mul(&w0.inv()?);
    let mut out = vec![QuadPadic::zero(ext, m); len];
    out[0] = w0.plog()?;
    let mut pw = QuadPadic::one(ext, m);
    for (k, slot) in out.iter_mut().enumerate().skip(1) {
        pw = pw.mul(&v);
        let kk = PadicNum::from_bigint(ext.p, &BigInt::from(k as i64), m).inv()?;
        let mut term = pw.scale(&kk)?;
        if k % 2 == 0 {
            term = term.neg();
        }
        *slot = term;
    }
    Ok(out)
}

fn split_coords(series: &[QuadPadic]) -> (Vec<PadicNum>, Vec<PadicNum>) {
    let mut a = Vec::with_capacity(series.len());
    let mut b = Vec::with_capacity(series.len());
    for c in series {
        let (x, y) = c.coords();
        a.push(x);
        b.push(y);
    }
    (a, b)
}

// ---------------------------------------------------------------------------
// The logarithm report.

/// Logarithm data of one narrow class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassLog {
    pub class_index: usize,
    /// φ(t) as a p-adic root of unity.
    pub phi_value: PadicNum,
    /// Norm of the representative ideal (the interpolation weight).
    pub norm: i64,
    /// `∫ log(a·x − ξ·y) dμ` over the class geodesic, `ξ = (−b + √Δ)/2`.
    pub j_theta: QuadPadic,
    /// The same integral with the conjugate root.
    pub j_theta_bar: QuadPadic,
}

/// Per-class logarithm integrals and the symmetrised total they
/// assemble to, together with the bookkeeping the symmetrisation uses.
#[derive(Debug, Clone, PartialEq)]
pub struct SHLogReport {
    pub p: u64,
    /// Fricke sign at the tame level (+1 when the tame level is 1).
    pub w_tame: i64,
    /// Narrow class of the tame-level ideal.
    pub sigma_class: usize,
    /// Narrow class of the fundamental totally positive unit.
    pub eps1_class: usize,
    pub per_class: Vec<ClassLog>,
    /// `Σ_t φ(t)·J_θ[t]`.
    pub log_total: QuadPadic,
    /// `(1/2)(1 + φ(σ)⁻¹·w)·log_total`.
    pub symmetrized: QuadPadic,
}

/// Assemble the logarithm report: one `J_θ`/`J_θ̄` pair per narrow
/// class, the character-weighted total, and its symmetrisation by the
/// Fricke sign and the distinguished classes.  Requires an odd
/// character, the minus part, p inert, and tame level 1.
#[allow(clippy::too_many_arguments)]
pub fn sh_log(
    space: &SymbolSpace,
    xi: &DistSymbol,
    part: SymbolPart,
    sym: &EigenSymbol,
    field: &QuadField,
    group: &ClassGroup,
    phi: &NarrowClassChar,
    base: &Cusp,
    depth: u32,
) -> Result<SHLogReport, LpError> {
    if !phi.is_odd() {
        return Err(LpError::OddCharacterRequired);
    }
    if part != SymbolPart::Minus {
        return Err(LpError::PartParityMismatch { phi_odd: true, got: part });
    }
    let p = xi.prime();
    if field.splitting_type(p as i64) != SplitType::Inert {
        return Err(LpError::InertRequired { p, delta: field.delta() });
    }
    let tame = xi.level() / p as i64;
    if tame != 1 {
        return Err(LpError::TameLevelUnsupported { tame });
    }
    let mm = xi.mmom();
    let digits = (mm + 2) as u32;
    let ext = QuadExt::new(p, field.theta_trace(), field.theta_norm())?;
    let sq = field.sqrt_delta();
    let classes = class_realizations(field, group, phi, p, digits)?;
    let per_class = classes
        .par_iter()
        .map(|cls| -> Result<ClassLog, LpError> {
            let div = PathDiv::new(base.clone(), cls.automorph.apply(base));
            let lead = BigInt::from(cls.form.a);
            // ξ = (−b + √Δ)/2 in the (1, θ)-coordinates; the halving is
            // exact because b and the √Δ-coordinates share parity.
            let e0 = exact_half(&(&sq.a - BigInt::from(cls.form.b)));
            let e1 = exact_half(&sq.b);
            let j_theta = log_integral(space, xi, &div, ext, &lead, (&e0, &e1), depth, mm)?;
            // Conjugate root: x₀ + x₁·θ ↦ (x₀ + x₁·tr) − x₁·θ.
            let f0 = &e0 + &e1 * BigInt::from(ext.tr);
            let f1 = -&e1;
            let j_theta_bar = log_integral(space, xi, &div, ext, &lead, (&f0, &f1), depth, mm)?;
            Ok(ClassLog {
                class_index: cls.class_index,
                phi_value: cls.phi_value.clone(),
                norm: cls.norm,
                j_theta,
                j_theta_bar,
            })
        })
        .collect::<Result<Vec<_>, LpError>>()?;
    let sigma_class = group.class_of_ideal(field, &FieldIdeal::unit_ideal())?;
    let eps1_class = group.class_of_element(field, &field.eps1_elt())?;
    let w_tame = sym.w_tame();
    let mut log_total = QuadPadic::zero(ext, digits);
    for cl in &per_class {
        log_total = log_total.add(&cl.j_theta.scale(&cl.phi_value)?);
    }
    let phi_sigma_inv = phi.value_on_class(sigma_class, p, digits)?.inv()?;
    let w_num = PadicNum::from_i64(p, w_tame, digits);
    let two = PadicNum::from_bigint(p, &BigInt::from(2), digits);
    let factor = PadicNum::one(p, digits).add(&phi_sigma_inv.mul(&w_num)?)?.div(&two)?;
    let symmetrized = log_total.scale(&factor)?;
    Ok(SHLogReport { p, w_tame, sigma_class, eps1_class, per_class, log_total, symmetrized })
}

// ---------------------------------------------------------------------------
// Small series helpers.

fn poly_mul(
    p: u64,
    lhs: &[PadicNum],
    rhs: &[PadicNum],
    len: usize,
    digits: u32,
) -> Result<Vec<PadicNum>, PadicError> {
    let mut out = vec![PadicNum::zero(p, digits as i64); len];
    for (i, a) in lhs.iter().enumerate().take(len) {
        for (j, b) in rhs.iter().enumerate().take(len - i) {
            out[i + j] = out[i + j].add(&a.mul(b)?)?;
        }
    }
    Ok(out)
}

/// Per-disc expansions of `(log⟨x⟩)^j / j!` for `j = 0..=d_sigma` on the
/// disc `center + p^depth·Z_p`.
fn sigma_weight_polys(
    p: u64,
    center: u64,
    depth: u32,
    d_sigma: usize,
    len: usize,
    digits: u32,
) -> Result<Vec<Vec<PadicNum>>, LpError> {
    let lg = crate::distmsym::WeightTag::new(p).angle_log_poly(center, depth, len, digits)?;
    let one = PadicNum::one(p, digits);
    let mut out = Vec::with_capacity(d_sigma + 1);
    out.push(vec![one.clone()]);
    let mut acc = vec![one];
    for j in 1..=d_sigma {
        acc = poly_mul(p, &acc, &lg, len, digits)?;
        let jj = PadicNum::from_bigint(p, &BigInt::from(j as i64), digits);
        for c in acc.iter_mut() {
            *c = c.div(&jj)?;
        }
        out.push(acc.clone());
    }
    Ok(out)
}

fn exact_half(x: &BigInt) -> BigInt {
    debug_assert!(x.is_even(), "exact halving of an odd integer");
    x / BigInt::from(2)
}

// ---------------------------------------------------------------------------
// Serialization (canonical residues, so equal values have equal bytes).

#[derive(Serialize, Deserialize)]
struct JetRepr {
    dk: usize,
    ds: usize,
    coeffs: Vec<MomentRepr>,
}

#[derive(Serialize, Deserialize)]
struct LSeriesRepr {
    kind: LKind,
    p: u64,
    depth: u32,
    jet: JetRepr,
}

fn jet_repr(jet: &Jet<PadicNum>) -> Result<JetRepr, PadicError> {
    let (dk, ds) = (jet.deg_kappa(), jet.deg_sigma());
    let mut coeffs = Vec::with_capacity((dk + 1) * (ds + 1));
    for i in 0..=dk {
        for j in 0..=ds {
            let c = jet.coeff(i, j);
            coeffs.push(moment_repr(c, c.abs_prec().max(0) as u32)?);
        }
    }
    Ok(JetRepr { dk, ds, coeffs })
}

fn jet_from_repr(p: u64, repr: &JetRepr) -> Result<Jet<PadicNum>, String> {
    if repr.coeffs.len() != (repr.dk + 1) * (repr.ds + 1) {
        return Err(format!(
            "jet of degrees ({}, {}) needs {} coefficients, got {}",
            repr.dk,
            repr.ds,
            (repr.dk + 1) * (repr.ds + 1),
            repr.coeffs.len()
        ));
    }
    let mut it = repr.coeffs.iter();
    let first = moment_from_repr(p, it.next().expect("at least one coefficient"))?;
    let mut jet = Jet::constant(first, repr.dk, repr.ds);
    for i in 0..=repr.dk {
        for j in 0..=repr.ds {
            if i == 0 && j == 0 {
                continue;
            }
            *jet.coeff_mut(i, j) =
                moment_from_repr(p, it.next().expect("length checked above"))?;
        }
    }
    Ok(jet)
}

impl Serialize for LSeriesJet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let jet = jet_repr(&self.jet).map_err(serde::ser::Error::custom)?;
        LSeriesRepr { kind: self.kind, p: self.p, depth: self.depth, jet }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LSeriesJet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = LSeriesRepr::deserialize(deserializer)?;
        let jet = jet_from_repr(repr.p, &repr.jet).map_err(D::Error::custom)?;
        Ok(LSeriesJet { kind: repr.kind, p: repr.p, depth: repr.depth, jet })
    }
}

#[derive(Serialize, Deserialize)]
struct QuadRepr {
    prec: u32,
    a: String,
    b: String,
}

fn quad_repr(x: &QuadPadic) -> Result<QuadRepr, PadicError> {
    let (a, b) = x.coords();
    let m = x.prec();
    Ok(QuadRepr { prec: m, a: a.residue(m)?.to_string(), b: b.residue(m)?.to_string() })
}

fn quad_from_repr(ext: QuadExt, repr: &QuadRepr) -> Result<QuadPadic, String> {
    let parse = |s: &str| {
        BigUint::from_str(s).map_err(|e| format!("bad residue string `{s}`: {e}"))
    };
    let a = BigInt::from(parse(&repr.a)?);
    let b = BigInt::from(parse(&repr.b)?);
    Ok(QuadPadic::new(ext, &a, &b, repr.prec))
}

#[derive(Serialize, Deserialize)]
struct ClassLogRepr {
    class_index: usize,
    phi: MomentRepr,
    norm: i64,
    j_theta: QuadRepr,
    j_theta_bar: QuadRepr,
}

#[derive(Serialize, Deserialize)]
struct ReportRepr {
    p: u64,
    tr: i64,
    nm: i64,
    w_tame: i64,
    sigma_class: usize,
    eps1_class: usize,
    per_class: Vec<ClassLogRepr>,
    log_total: QuadRepr,
    symmetrized: QuadRepr,
}

impl Serialize for SHLogReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let ext = self.log_total.ext();
        let err = serde::ser::Error::custom;
        let per_class = self
            .per_class
            .iter()
            .map(|cl| -> Result<ClassLogRepr, PadicError> {
                Ok(ClassLogRepr {
                    class_index: cl.class_index,
                    phi: moment_repr(&cl.phi_value, cl.phi_value.abs_prec().max(0) as u32)?,
                    norm: cl.norm,
                    j_theta: quad_repr(&cl.j_theta)?,
                    j_theta_bar: quad_repr(&cl.j_theta_bar)?,
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        ReportRepr {
            p: self.p,
            tr: ext.tr,
            nm: ext.nm,
            w_tame: self.w_tame,
            sigma_class: self.sigma_class,
            eps1_class: self.eps1_class,
            per_class,
            log_total: quad_repr(&self.log_total).map_err(err)?,
            symmetrized: quad_repr(&self.symmetrized).map_err(err)?,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SHLogReport {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = ReportRepr::deserialize(deserializer)?;
        let ext = QuadExt::new(repr.p, repr.tr, repr.nm).map_err(D::Error::custom)?;
        let per_class = repr
            .per_class
            .iter()
            .map(|cl| -> Result<ClassLog, String> {
                Ok(ClassLog {
                    class_index: cl.class_index,
                    phi_value: moment_from_repr(repr.p, &cl.phi)?,
                    norm: cl.norm,
                    j_theta: quad_from_repr(ext, &cl.j_theta)?,
                    j_theta_bar: quad_from_repr(ext, &cl.j_theta_bar)?,
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        Ok(SHLogReport {
            p: repr.p,
            w_tame: repr.w_tame,
            sigma_class: repr.sigma_class,
            eps1_class: repr.eps1_class,
            per_class,
            log_total: quad_from_repr(ext, &repr.log_total).map_err(D::Error::custom)?,
            symmetrized: quad_from_repr(ext, &repr.symmetrized).map_err(D::Error::custom)?,
        })
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distmsym::{lift_from_values, lift_ordinary, FiniteDist};
    use crate::msym::{build_space, newform_eigen};
    use std::sync::OnceLock;

    fn space11() -> &'static SymbolSpace {
        static S: OnceLock<SymbolSpace> = OnceLock::new();
        S.get_or_init(|| build_space(11).expect("level 11 space"))
    }

    fn eigen11() -> &'static EigenSymbol {
        static S: OnceLock<EigenSymbol> = OnceLock::new();
        S.get_or_init(|| newform_eigen(space11(), 11, 19).expect("newform at 11").remove(0))
    }

    fn lift11_plus() -> &'static DistSymbol {
        static S: OnceLock<DistSymbol> = OnceLock::new();
        S.get_or_init(|| {
            lift_ordinary(space11(), eigen11(), SymbolPart::Plus, 11, 6).expect("plus lift")
        })
    }

    fn lift11_minus() -> &'static DistSymbol {
        static S: OnceLock<DistSymbol> = OnceLock::new();
        S.get_or_init(|| {
            lift_ordinary(space11(), eigen11(), SymbolPart::Minus, 11, 6).expect("minus lift")
        })
    }

    fn space17() -> &'static SymbolSpace {
        static S: OnceLock<SymbolSpace> = OnceLock::new();
        S.get_or_init(|| build_space(17).expect("level 17 space"))
    }

    fn eigen17() -> &'static EigenSymbol {
        static S: OnceLock<EigenSymbol> = OnceLock::new();
        S.get_or_init(|| newform_eigen(space17(), 17, 19).expect("newform at 17").remove(0))
    }

    fn lift17_plus() -> &'static DistSymbol {
        static S: OnceLock<DistSymbol> = OnceLock::new();
        S.get_or_init(|| {
            lift_ordinary(space17(), eigen17(), SymbolPart::Plus, 17, 4).expect("plus lift")
        })
    }

    fn lift17_minus() -> &'static DistSymbol {
        static S: OnceLock<DistSymbol> = OnceLock::new();
        S.get_or_init(|| {
            lift_ordinary(space17(), eigen17(), SymbolPart::Minus, 17, 4).expect("minus lift")
        })
    }

    fn field8() -> &'static (QuadField, ClassGroup, NarrowClassChar) {
        static S: OnceLock<(QuadField, ClassGroup, NarrowClassChar)> = OnceLock::new();
        S.get_or_init(|| {
            let field = QuadField::new(8).expect("field of discriminant 8");
            let group = ClassGroup::new(&field, 1).expect("class group");
            let phi = group
                .characters(&field)
                .expect("characters")
                .into_iter()
                .find(|c| !c.is_odd())
                .expect("even character");
            (field, group, phi)
        })
    }

    fn field12() -> &'static (QuadField, ClassGroup, NarrowClassChar) {
        static S: OnceLock<(QuadField, ClassGroup, NarrowClassChar)> = OnceLock::new();
        S.get_or_init(|| {
            let field = QuadField::new(12).expect("field of discriminant 12");
            let group = ClassGroup::new(&field, 1).expect("class group");
            let phi = group
                .characters(&field)
                .expect("characters")
                .into_iter()
                .find(|c| c.is_odd())
                .expect("odd character");
            (field, group, phi)
        })
    }

    fn report17() -> &'static SHLogReport {
        static S: OnceLock<SHLogReport> = OnceLock::new();
        S.get_or_init(|| {
            let (field, group, phi) = field12();
            sh_log(
                space17(),
                lift17_minus(),
                SymbolPart::Minus,
                eigen17(),
                field,
                group,
                phi,
                &Cusp::infinity(),
                1,
            )
            .expect("logarithm report")
        })
    }

    #[test]
    fn cyclotomic_of_the_zero_symbol_vanishes() {
        let space = space11();
        let zeros = vec![PadicNum::zero(11, 5); space.generator_count()];
        let ap = PadicNum::one(11, 7);
        let (xi, _) = lift_from_values(space, 11, &ap, &zeros, 4).expect("zero lift");
        let l = cyclotomic_l(space, &xi, 2, 2, 1).expect("series");
        assert!(l.jet().is_zero());
    }

    #[test]
    fn cyclotomic_depth_refinement_is_stable() {
        let space = space11();
        let xi = lift11_plus();
        let l1 = cyclotomic_l(space, xi, 2, 2, 1).expect("depth 1");
        let l2 = cyclotomic_l(space, xi, 2, 2, 2).expect("depth 2");
        assert!(l1.jet().agrees_to(l2.jet(), 4));
    }

    #[test]
    fn classical_riemann_sums_stabilize() {
        let space = space11();
        let sym = eigen11();
        let s2 = cyclotomic_l_classical(space, sym, SymbolPart::Plus, 11, 3, 2, 2, 8)
            .expect("depth 2");
        let s3 = cyclotomic_l_classical(space, sym, SymbolPart::Plus, 11, 3, 2, 3, 8)
            .expect("depth 3");
        // The twist is locally constant at depth 1, so the σ⁰ sum is exact;
        // the σ-coefficients converge one digit per refinement.
        assert!(s2.coeff(0, 0).agrees_to(s3.coeff(0, 0), 5));
        assert!(s2.agrees_to(&s3, 2));
    }

    #[test]
    fn lifted_route_matches_classical_riemann_sums() {
        let space = space11();
        let b = cyclotomic_l(space, lift11_plus(), 2, 2, 1).expect("moment route");
        let a = cyclotomic_l_classical(space, eigen11(), SymbolPart::Plus, 11, 2, 2, 3, 8)
            .expect("classical route");
        assert!(b.jet().agrees_to(&a, 2));
    }

    #[test]
    fn conductor_p_twist_is_an_exact_finite_sum() {
        let space = space11();
        let a1 = cyclotomic_l_classical(space, eigen11(), SymbolPart::Plus, 11, 3, 0, 1, 8)
            .expect("depth 1");
        let a2 = cyclotomic_l_classical(space, eigen11(), SymbolPart::Plus, 11, 3, 0, 2, 8)
            .expect("depth 2");
        assert!(a1.coeff(0, 0).agrees_to(a2.coeff(0, 0), 6));
        let b = cyclotomic_l(space, lift11_plus(), 3, 0, 1).expect("moment route");
        assert!(b.jet().coeff(0, 0).agrees_to(a1.coeff(0, 0), 5));
    }

    #[test]
    fn trivial_twist_centre_carries_the_exceptional_zero() {
        let l11 = cyclotomic_l(space11(), lift11_plus(), 2, 2, 1).expect("series");
        assert!(l11.jet().coeff(0, 0).is_zero_to(5));
        // The derivative does not vanish: the zero is simple.
        assert!(!l11.jet().coeff(0, 1).is_zero_to(4));
        let l17 = cyclotomic_l(space17(), lift17_plus(), 2, 1, 1).expect("series");
        assert!(l17.jet().coeff(0, 0).is_zero_to(3));
        assert!(!l17.jet().coeff(0, 1).is_zero_to(2));
    }

    #[test]
    fn parity_guards_reject_mismatched_parts() {
        let (field8, group8, phi8) = field8();
        let got = sqrt_l(
            space11(),
            lift11_minus(),
            SymbolPart::Minus,
            field8,
            group8,
            phi8,
            &Cusp::infinity(),
            1,
        );
        assert!(matches!(got, Err(LpError::PartParityMismatch { phi_odd: false, .. })));
        let (field12, group12, phi12) = field12();
        let got = sqrt_l(
            space17(),
            lift17_plus(),
            SymbolPart::Plus,
            field12,
            group12,
            phi12,
            &Cusp::infinity(),
            1,
        );
        assert!(matches!(got, Err(LpError::PartParityMismatch { phi_odd: true, .. })));
    }

    #[test]
    fn split_primes_are_rejected_for_class_sums() {
        // 11 splits in the field of discriminant 12 (5² ≡ 3 mod 11).
        let (field12, group12, phi12) = field12();
        let got = sqrt_l(
            space11(),
            lift11_minus(),
            SymbolPart::Minus,
            field12,
            group12,
            phi12,
            &Cusp::infinity(),
            1,
        );
        assert!(matches!(got, Err(LpError::InertRequired { p: 11, delta: 12 })));
        let got = sh_log(
            space11(),
            lift11_minus(),
            SymbolPart::Minus,
            eigen11(),
            field12,
            group12,
            phi12,
            &Cusp::infinity(),
            1,
        );
        assert!(matches!(got, Err(LpError::InertRequired { p: 11, delta: 12 })));
        // An even character has no logarithm report at all.
        let (field8, group8, phi8) = field8();
        let got = sh_log(
            space11(),
            lift11_minus(),
            SymbolPart::Minus,
            eigen11(),
            field8,
            group8,
            phi8,
            &Cusp::infinity(),
            1,
        );
        assert!(matches!(got, Err(LpError::OddCharacterRequired)));
    }

    #[test]
    fn unit_region_theta_integral_matches_plain_masses() {
        let space = space11();
        let xi = lift11_plus();
        let div = PathDiv::new(Cusp::infinity(), Cusp::new(0, 1));
        let jet = theta_unit_integral(space, xi, &div, 1).expect("integral");
        // κ⁰ is the unit-region mass: the full zeroth moment minus the
        // mass of the disc at 0.
        let (from, to) = div.endpoints();
        let full = xi.value_on_path(space, &from, &to).expect("path value");
        let one = PadicNum::one(11, 8);
        let disc0 = measure_on_disc_local(space, xi, &div, 0, 1, &[one]).expect("disc at 0");
        let expected = full.moment(0).sub(&disc0).expect("difference");
        assert!(jet.coeff(0, 0).agrees_to(&expected, 5));
    }

    #[test]
    fn square_root_centre_vanishes_at_the_central_weight() {
        // Even character at 11 (discriminant 8, where 11 stays prime).
        let (field8, group8, phi8) = field8();
        let l = sqrt_l(
            space11(),
            lift11_plus(),
            SymbolPart::Plus,
            field8,
            group8,
            phi8,
            &Cusp::infinity(),
            1,
        )
        .expect("series");
        assert!(l.jet().coeff(1, 0).abs_prec() >= 4);
        assert!(l.jet().coeff(0, 0).is_zero_to(5));
        // Odd character at 17 (discriminant 12): the centre vanishes and
        // the κ-coefficient — the logarithm of the distinguished point —
        // does not.
        let (field12, group12, phi12) = field12();
        let l = sqrt_l(
            space17(),
            lift17_minus(),
            SymbolPart::Minus,
            field12,
            group12,
            phi12,
            &Cusp::infinity(),
            1,
        )
        .expect("series");
        assert!(l.jet().coeff(0, 0).is_zero_to(3));
        assert!(!l.jet().coeff(1, 0).is_zero_to(2));
    }

    #[test]
    fn derivative_cross_route_matches_the_logarithm_side() {
        // Even side at 11: κ-coefficient of the square-root series versus
        // the character-weighted average (J_θ + J_θ̄)/2 per class.
        let space = space11();
        let xi = lift11_plus();
        let (field, group, phi) = field8();
        let base = Cusp::infinity();
        let l = sqrt_l(space, xi, SymbolPart::Plus, field, group, phi, &base, 1).expect("series");
        let ext = QuadExt::new(11, field.theta_trace(), field.theta_norm()).expect("extension");
        let sq = field.sqrt_delta();
        let classes = class_realizations(field, group, phi, 11, 8).expect("classes");
        let mut total = PadicNum::zero(11, 8);
        for cls in &classes {
            let div = PathDiv::new(base.clone(), cls.automorph.apply(&base));
            let lead = BigInt::from(cls.form.a);
            let e0 = exact_half(&(&sq.a - BigInt::from(cls.form.b)));
            let e1 = exact_half(&sq.b);
            let j = log_integral(space, xi, &div, ext, &lead, (&e0, &e1), 1, 6).expect("J");
            let jb = log_integral(
                space,
                xi,
                &div,
                ext,
                &lead,
                (&(&e0 + &e1 * BigInt::from(ext.tr)), &(-&e1)),
                1,
                6,
            )
            .expect("J conjugate");
            // (J + J̄)/2 is the scalar coordinate of J.
            let half_sum = j.add(&jb).coords().0.mul(&two_inv(11, 8)).expect("halved");
            total = total.add(&half_sum.mul(&cls.phi_value).expect("weighted")).expect("sum");
        }
        assert!(l.jet().coeff(1, 0).agrees_to(&total, 4));
        // Odd side at 17: the same comparison through the full report.
        let (field, group, phi) = field12();
        let l = sqrt_l(
            space17(),
            lift17_minus(),
            SymbolPart::Minus,
            field,
            group,
            phi,
            &base,
            1,
        )
        .expect("series");
        let report = report17();
        let mut total = PadicNum::zero(17, 6);
        for cl in &report.per_class {
            let half_sum =
                cl.j_theta.add(&cl.j_theta_bar).coords().0.mul(&two_inv(17, 6)).expect("halved");
            total = total.add(&half_sum.mul(&cl.phi_value).expect("weighted")).expect("sum");
        }
        assert!(l.jet().coeff(1, 0).agrees_to(&total, 2));
    }

    fn two_inv(p: u64, m: u32) -> PadicNum {
        PadicNum::from_bigint(p, &BigInt::from(2), m).inv().expect("2 is a unit")
    }

    #[test]
    fn conjugate_log_integrals_mirror_the_galois_action() {
        // With trivial tame level the symmetry says each J is fixed by the
        // Galois conjugation: its second coordinate vanishes and the two
        // conjugate integrals agree.
        let space = space11();
        let xi = lift11_minus();
        let (field, group, phi) = field8();
        let ext = QuadExt::new(11, field.theta_trace(), field.theta_norm()).expect("extension");
        let sq = field.sqrt_delta();
        let classes = class_realizations(field, group, phi, 11, 8).expect("classes");
        let base = Cusp::infinity();
        for cls in &classes {
            let div = PathDiv::new(base.clone(), cls.automorph.apply(&base));
            let lead = BigInt::from(cls.form.a);
            let e0 = exact_half(&(&sq.a - BigInt::from(cls.form.b)));
            let e1 = exact_half(&sq.b);
            let j = log_integral(space, xi, &div, ext, &lead, (&e0, &e1), 1, 6).expect("J");
            let jb = log_integral(
                space,
                xi,
                &div,
                ext,
                &lead,
                (&(&e0 + &e1 * BigInt::from(ext.tr)), &(-&e1)),
                1,
                6,
            )
            .expect("J conjugate");
            assert!(jb.agrees_to(&j.conj(), 4), "conjugate integrand, conjugate value");
            assert!(j.coords().1.is_zero_to(4), "the integral is Galois-fixed");
            assert!(jb.agrees_to(&j, 4));
        }
        // Same statement for the odd character at 17.
        for cl in &report17().per_class {
            assert!(cl.j_theta_bar.agrees_to(&cl.j_theta.conj(), 2));
            assert!(cl.j_theta.coords().1.is_zero_to(2));
            assert!(cl.j_theta_bar.agrees_to(&cl.j_theta, 2));
        }
    }

    #[test]
    fn log_integrals_refine_with_depth() {
        let space = space11();
        let xi = lift11_minus();
        let (field, group, phi) = field8();
        let ext = QuadExt::new(11, field.theta_trace(), field.theta_norm()).expect("extension");
        let sq = field.sqrt_delta();
        let cls = &class_realizations(field, group, phi, 11, 8).expect("classes")[0];
        let base = Cusp::infinity();
        let div = PathDiv::new(base.clone(), cls.automorph.apply(&base));
        let lead = BigInt::from(cls.form.a);
        let e0 = exact_half(&(&sq.a - BigInt::from(cls.form.b)));
        let e1 = exact_half(&sq.b);
        let j1 = log_integral(space, xi, &div, ext, &lead, (&e0, &e1), 1, 6).expect("depth 1");
        let j2 = log_integral(space, xi, &div, ext, &lead, (&e0, &e1), 2, 6).expect("depth 2");
        assert!(j1.agrees_to(&j2, 4));
        // Truncating to the constant term only loses the tail of the local
        // expansion, which shrinks with the depth.
        let j2short = log_integral(space, xi, &div, ext, &lead, (&e0, &e1), 2, 1).expect("short");
        assert!(j2.agrees_to(&j2short, 2));
    }

    #[test]
    fn class_representatives_do_not_matter() {
        // Replace the reduced form by an equivalent one (translated by
        // [[1,1],[0,1]]) with its own automorph and root; the class sum
        // and each logarithm integral stay put.
        let space = space11();
        let xi = lift11_plus();
        let (field, group, phi) = field8();
        let base = Cusp::infinity();
        let classes = class_realizations(field, group, phi, 11, 8).expect("classes");
        let l = sqrt_l_over(space, xi, &classes, &base, 1).expect("reduced reps");
        let moved: Vec<ClassRealization> = classes
            .iter()
            .map(|cls| {
                let (a, b, c) = (cls.form.a, cls.form.b, cls.form.c);
                let form = QForm { a, b: 2 * a + b, c: a + b + c };
                // Fundamental Pell solution for discriminant 8: (6, 2).
                let m = form.automorph(6, 2);
                ClassRealization {
                    class_index: cls.class_index,
                    form,
                    automorph: Mat2::new(m[0][0], m[0][1], m[1][0], m[1][1]),
                    norm: form.a.abs(),
                    phi_value: cls.phi_value.clone(),
                }
            })
            .collect();
        let l_moved = sqrt_l_over(space, xi, &moved, &base, 1).expect("translated reps");
        assert!(l.jet().agrees_to(l_moved.jet(), 4));
        // The logarithm integral moves the root along with the form.
        let ext = QuadExt::new(11, field.theta_trace(), field.theta_norm()).expect("extension");
        let sq = field.sqrt_delta();
        let j_of = |cls: &ClassRealization| {
            let div = PathDiv::new(base.clone(), cls.automorph.apply(&base));
            let lead = BigInt::from(cls.form.a);
            let e0 = exact_half(&(&sq.a - BigInt::from(cls.form.b)));
            let e1 = exact_half(&sq.b);
            log_integral(space, lift11_minus(), &div, ext, &lead, (&e0, &e1), 1, 6).expect("J")
        };
        assert!(j_of(&classes[0]).agrees_to(&j_of(&moved[0]), 4));
    }

    #[test]
    fn base_point_does_not_matter() {
        let space = space11();
        let xi = lift11_minus();
        let (field, group, phi) = field8();
        let ext = QuadExt::new(11, field.theta_trace(), field.theta_norm()).expect("extension");
        let sq = field.sqrt_delta();
        let cls = &class_realizations(field, group, phi, 11, 8).expect("classes")[0];
        let lead = BigInt::from(cls.form.a);
        let e0 = exact_half(&(&sq.a - BigInt::from(cls.form.b)));
        let e1 = exact_half(&sq.b);
        let j_from = |base: Cusp| {
            let div = PathDiv::new(base.clone(), cls.automorph.apply(&base));
            log_integral(space, xi, &div, ext, &lead, (&e0, &e1), 1, 6).expect("J")
        };
        assert!(j_from(Cusp::infinity()).agrees_to(&j_from(Cusp::new(0, 1)), 4));
        // The full report is likewise base-independent.
        let (field12, group12, phi12) = field12();
        let other = sh_log(
            space17(),
            lift17_minus(),
            SymbolPart::Minus,
            eigen17(),
            field12,
            group12,
            phi12,
            &Cusp::new(0, 1),
            1,
        )
        .expect("report from 0");
        assert!(report17().log_total.agrees_to(&other.log_total, 2));
    }

    #[test]
    fn the_report_carries_the_symmetrised_total() {
        let report = report17();
        let (_, group, phi) = field12();
        assert_eq!(report.p, 17);
        assert_eq!(report.w_tame, 1);
        // Tame level 1: the distinguished ideal and the fundamental
        // totally positive unit are both principal.
        assert_eq!(report.sigma_class, group.identity());
        assert_eq!(report.eps1_class, group.identity());
        assert_eq!(phi.sign_on_class(report.sigma_class), 1);
        // With φ(σ)·w = 1 the symmetrisation factor is 1.
        assert!(report.symmetrized.agrees_to(&report.log_total, 4));
        // The total is the character-weighted sum of the per-class data.
        let ext = report.log_total.ext();
        let mut total = QuadPadic::zero(ext, 6);
        for cl in &report.per_class {
            total = total.add(&cl.j_theta.scale(&cl.phi_value).expect("weighted"));
        }
        assert!(total.agrees_to(&report.log_total, 4));
        // The Galois-fixed total is a scalar.
        assert!(report.log_total.coords().1.is_zero_to(2));
    }

    #[test]
    fn weight_characters_square_consistently() {
        let tag = crate::distmsym::WeightTag::new(17);
        let mut u = 2u64;
        for _ in 0..50 {
            u = (u * 1103515245 + 12345) % 289;
            if u % 17 == 0 {
                u += 1;
            }
            let z = PadicNum::from_bigint(17, &BigInt::from(u), 8);
            let theta = tag.theta_jet(&z).expect("ϑ");
            let alpha = tag.alpha_jet(&z).expect("𝛂");
            assert!(theta.mul(&theta).agrees_to(&alpha, 7));
        }
    }

    #[test]
    fn diag_scratch() {
        let space = space11();
        let xi = lift11_minus();
        let (field, group, phi) = field8();
        let ext = QuadExt::new(11, field.theta_trace(), field.theta_norm()).expect("extension");
        let sq = field.sqrt_delta();
        let cls = &class_realizations(field, group, phi, 11, 8).expect("classes")[0];
        println!("form = ({}, {}, {})", cls.form.a, cls.form.b, cls.form.c);
        println!(
            "automorph = [[{}, {}], [{}, {}]]",
            cls.automorph.a, cls.automorph.b, cls.automorph.c, cls.automorph.d
        );
        let lead = BigInt::from(cls.form.a);
        let e0 = exact_half(&(&sq.a - BigInt::from(cls.form.b)));
        let e1 = exact_half(&sq.b);
        println!("xi = {} + {}*theta  (tr {}, nm {})", e0, e1, ext.tr, ext.nm);
        // Per-divisor masses.
        let one = PadicNum::one(11, 8);
        for (name, div) in [
            ("{inf -> 0}", PathDiv::new(Cusp::infinity(), Cusp::new(0, 1))),
            (
                "{inf -> g inf}",
                PathDiv::new(Cusp::infinity(), cls.automorph.apply(&Cusp::infinity())),
            ),
            ("{0 -> g 0}", PathDiv::new(Cusp::new(0, 1), cls.automorph.apply(&Cusp::new(0, 1)))),
        ] {
            let mass =
                gs_measure_total(space, xi, &div, &GsIntegrand::constant(11, 1, &one)).unwrap();
            println!("gs mass {name} = {mass}");
        }
        let j_from = |base: Cusp| {
            let div = PathDiv::new(base.clone(), cls.automorph.apply(&base));
            log_integral(space, xi, &div, ext, &lead, (&e0, &e1), 1, 6).expect("J")
        };
        let ji = j_from(Cusp::infinity());
        let j0 = j_from(Cusp::new(0, 1));
        println!("J(inf) = {ji}");
        println!("J(0)   = {j0}");
        let diff = ji.sub(&j0);
        println!("J(inf) - J(0) = {diff}");
        // The plus-part value for comparison.
        let jp = {
            let xi = lift11_plus();
            let div = PathDiv::new(Cusp::infinity(), cls.automorph.apply(&Cusp::infinity()));
            log_integral(space, xi, &div, ext, &lead, (&e0, &e1), 1, 6).expect("J")
        };
        println!("J(inf) on plus part = {jp}");
    }

    #[test]
    fn jets_and_reports_round_trip_bytewise() {
        let l = cyclotomic_l(space11(), lift11_plus(), 2, 2, 1).expect("series");
        let text = serde_json::to_string(&l).expect("serialize");
        let back: LSeriesJet = serde_json::from_str(&text).expect("deserialize");
        assert_eq!(serde_json::to_string(&back).expect("reserialize"), text);
        assert_eq!(back.kind(), LKind::Cyclotomic);
        assert!(back.jet().agrees_to(l.jet(), 5));
        let report = report17();
        let text = serde_json::to_string(report).expect("serialize");
        let back: SHLogReport = serde_json::from_str(&text).expect("deserialize");
        assert_eq!(serde_json::to_string(&back).expect("reserialize"), text);
        assert_eq!(&back, report);
    }
}
