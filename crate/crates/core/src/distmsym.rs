//! Modular symbols with values in finite-precision p-adic distributions.
//!
//! A classical weight-2 eigensymbol assigns a number to each path between
//! cusps; here each path instead carries a distribution on `Z_p`, stored
//! through finitely many moments `∫ x^j dμ` with the graded precision
//! `p^(M − j)` when `M` moments are kept.  The grading is exactly what one
//! determinant-p pushforward gains back, which makes `a_p⁻¹·U_p` a
//! contraction on lifts of a fixed classical symbol: iterating it from the
//! classical values (as 0-th moments, higher moments zero) converges to
//! the unique ordinary lift, one filtration step per pass.
//!
//! Unlike the rational quotient in [`crate::msym`], no relation is divided
//! out: every projective generator keeps its own distribution, the two-
//! and three-term relations are restored after truncation by a linear
//! correction in the higher moments, and all operators maintain them at
//! the graded precision.
//!
//! From a lifted symbol the module builds the measures consumed
//! downstream:
//!
//! * [`measure_on_disc`] integrates a polynomial over `a + p^n·Z_p`
//!   against the distribution attached to a path, through the translate
//!   `Ξ([[1,a],[0,pⁿ]]·D)` scaled by `a_p^{−n}`;
//! * [`gs_measure`] integrates a locally polynomial function of a
//!   primitive vector `(x, y) ∈ Z_p²`, split over the two regions
//!   `y ∈ Z_p^×` and `y ∈ p·Z_p`; the second region is carried by the
//!   involuted path `w·D` with `w = [[0,1],[−p,0]]`, at cost `a_p⁻¹`;
//! * [`WeightTag`] records the weight direction as first-order jets
//!   `⟨z⟩^{κ/2} = 1 + (κ/2)·log⟨z⟩`, expanded disc by disc, so weight
//!   derivatives are taken on explicit integrands while the stored
//!   moments stay plain numbers.

use crate::jet::Jet;
use crate::msym::{Cusp, EigenSymbol, Mat2, SymbolPart, SymbolSpace};
use crate::padic::{PadicError, PadicNum};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::de::Error as DeError;
use serde::ser::Error as SerError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistError {
    #[error("level {level} does not have the shape N·{p} with N prime to {p}")]
    BadLevel { p: u64, level: i64 },
    #[error("space has level {space_level} but the symbol has level {symbol_level}")]
    LevelMismatch { space_level: i64, symbol_level: i64 },
    #[error("no eigenvalue stored at {p}; rebuild the eigensymbol with a larger coefficient bound")]
    MissingEigenvalue { p: u64 },
    #[error("ordinary lifting at {p} needs a unit eigenvalue; a_p has valuation {}", .valuation.map_or_else(|| "infinite (a_p = 0)".to_string(), |v| v.to_string()))]
    NonOrdinary { p: u64, valuation: Option<i64> },
    #[error("classical value has a denominator divisible by {p}")]
    NotIntegral { p: u64 },
    #[error("matrix action is not defined over the {p}-adic integers here (need a unit upper-left entry, lower-left divisible by {p}, unit determinant where inverses are taken)")]
    BadActionMatrix { p: u64 },
    #[error("polynomial degree {deg} is not resolved by {mmom} stored moments")]
    DegreeTooLarge { deg: usize, mmom: usize },
    #[error("disc depth {depth} exceeds the moment support {mmom}")]
    DepthTooDeep { depth: u32, mmom: usize },
    #[error("chart data at depth {have} cannot be produced, need depth at least {need}")]
    DepthTooShallow { have: u32, need: u32 },
    #[error("moment {moment} carries absolute precision {have}, needs at least {need}")]
    InsufficientPrecision { moment: usize, have: i64, need: i64 },
    #[error("distributions store {left} and {right} moments; counts must agree")]
    MomentCountMismatch { left: usize, right: usize },
    #[error("chart table holds {got} discs, expected {expected}")]
    ChartMismatch { expected: usize, got: usize },
    #[error("eigenvalue iteration did not stabilize after {iterations} passes (last difference at filtration level {residual_level})")]
    NonConvergence { iterations: usize, residual_level: i64 },
    #[error("relation correction is not solvable at the working precision")]
    DefectUnsolvable,
    #[error(transparent)]
    Padic(#[from] PadicError),
}

// ---------------------------------------------------------------------------
// Finite-precision distributions on Z_p.

/// A distribution on `Z_p` known through finitely many moments: entry `j`
/// approximates `∫ x^j dμ` and is carried modulo `p^(mmom − j)`.  All
/// constructors and operations cap each moment to exactly that grading, so
/// equality of two distributions is equality of all carried residues.
#[derive(Debug, Clone)]
pub struct FiniteDist {
    p: u64,
    moments: Vec<PadicNum>,
}

impl FiniteDist {
    /// The zero distribution with `mmom` stored moments.
    pub fn zero(p: u64, mmom: usize) -> Self {
        assert!(mmom >= 1, "at least one moment must be stored");
        let moments = (0..mmom).map(|j| PadicNum::zero(p, (mmom - j) as i64)).collect();
        FiniteDist { p, moments }
    }

    /// Wraps explicit moments; each must carry at least its graded
    /// precision `p^(count − j)` and is capped down to it.
    pub fn from_moments(p: u64, moments: Vec<PadicNum>) -> Result<Self, DistError> {
        let mm = moments.len();
        if mm == 0 {
            return Err(DistError::MomentCountMismatch { left: 0, right: 1 });
        }
        let mut capped = Vec::with_capacity(mm);
        for (j, m) in moments.into_iter().enumerate() {
            if m.prime() != p {
                return Err(PadicError::PrimeMismatch { left: p, right: m.prime() }.into());
            }
            let need = (mm - j) as i64;
            if m.abs_prec() < need {
                return Err(DistError::InsufficientPrecision {
                    moment: j,
                    have: m.abs_prec(),
                    need,
                });
            }
            capped.push(m.cap_abs_prec(need));
        }
        Ok(FiniteDist { p, moments: capped })
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn mmom(&self) -> usize {
        self.moments.len()
    }

    pub fn moment(&self, j: usize) -> &PadicNum {
        &self.moments[j]
    }

    pub fn moments(&self) -> &[PadicNum] {
        &self.moments
    }

    fn check_shape(&self, other: &Self) -> Result<(), DistError> {
        if self.p != other.p {
            return Err(PadicError::PrimeMismatch { left: self.p, right: other.p }.into());
        }
        if self.mmom() != other.mmom() {
            return Err(DistError::MomentCountMismatch {
                left: self.mmom(),
                right: other.mmom(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, DistError> {
        self.check_shape(other)?;
        let moments = self
            .moments
            .iter()
            .zip(&other.moments)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>, _>>()?;
        FiniteDist::from_moments(self.p, moments)
    }

    pub fn neg(&self) -> Self {
        FiniteDist { p: self.p, moments: self.moments.iter().map(|m| m.neg()).collect() }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, DistError> {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &PadicNum) -> Result<Self, DistError> {
        let moments = self
            .moments
            .iter()
            .map(|m| m.mul(s))
            .collect::<Result<Vec<_>, _>>()?;
        FiniteDist::from_moments(self.p, moments)
    }

    /// Right action of an integral matrix `[[a,b],[c,d]]` with `p ∤ a` and
    /// `p | c`: the pushforward of the moment variable through
    /// `x ↦ (b + d·x)/(a + c·x)`.  Unimodular matrices transport values
    /// between generators; `[[1, r],[0, p]]` realizes the summands of
    /// `U_p` (where the series is polynomial: `x ↦ r + p·x`).
    pub fn act(&self, gamma: &Mat2) -> Result<Self, DistError> {
        let rows = substitution_rows(self.p, gamma, self.mmom())?;
        let mut out = Vec::with_capacity(self.mmom());
        for (j, row) in rows.iter().enumerate() {
            let mut acc = PadicNum::zero(self.p, (self.mmom() - j) as i64);
            for (i, coef) in row.iter().enumerate() {
                acc = acc.add(&coef.mul(&self.moments[i])?)?;
            }
            out.push(acc);
        }
        FiniteDist::from_moments(self.p, out)
    }

    /// `Σ_j c_j·∫x^j dμ` for a polynomial with coefficients `c_j`.
    pub fn pair(&self, poly: &[PadicNum]) -> Result<PadicNum, DistError> {
        if poly.len() > self.mmom() {
            return Err(DistError::DegreeTooLarge {
                deg: poly.len().saturating_sub(1),
                mmom: self.mmom(),
            });
        }
        let mut acc = PadicNum::zero(self.p, self.mmom() as i64);
        for (j, c) in poly.iter().enumerate() {
            acc = acc.add(&c.mul(&self.moments[j])?)?;
        }
        Ok(acc)
    }

    /// `true` iff every moment vanishes at its carried precision.
    pub fn is_trivial(&self) -> bool {
        let mm = self.mmom();
        self.moments.iter().enumerate().all(|(j, m)| m.is_zero_to((mm - j) as i64))
    }

    /// Filtration level: the largest `k ≤ mmom` with `p^(k−j) | m_j` for
    /// all `j` (so the zero distribution sits at level `mmom`).
    pub fn fil_level(&self) -> i64 {
        let mm = self.mmom() as i64;
        let mut level = mm;
        for (j, m) in self.moments.iter().enumerate() {
            let v = m.valuation().unwrap_or_else(|| m.abs_prec());
            level = level.min(v + j as i64);
        }
        level
    }

    /// Agreement of all moments at their shared graded precision.
    pub fn agrees_with(&self, other: &Self) -> bool {
        if self.check_shape(other).is_err() {
            return false;
        }
        let mm = self.mmom();
        self.moments
            .iter()
            .zip(&other.moments)
            .enumerate()
            .all(|(j, (a, b))| a.agrees_to(b, (mm - j) as i64))
    }

    /// Forget stored moments beyond `mm` and coarsen the rest to the
    /// shorter grading.
    pub fn truncated(&self, mm: usize) -> Result<Self, DistError> {
        if mm < 1 || mm > self.mmom() {
            return Err(DistError::MomentCountMismatch { left: self.mmom(), right: mm });
        }
        FiniteDist::from_moments(self.p, self.moments[..mm].to_vec())
    }
}

/// Coefficient rows of the substitution `x ↦ (b + d·x)/(a + c·x)` for
/// `gamma = [[a,b],[c,d]]`: row `j` expands the `j`-th power to length
/// `mmom`.  Row `j`, column `i` has valuation at least `max(0, i − j)`,
/// which is what keeps the graded moment precision intact.
fn substitution_rows(p: u64, gamma: &Mat2, mmom: usize) -> Result<Vec<Vec<PadicNum>>, DistError> {
    let pb = BigInt::from(p);
    if (&gamma.a % &pb).is_zero() || !(&gamma.c % &pb).is_zero() {
        return Err(DistError::BadActionMatrix { p });
    }
    let w = (mmom + 2) as u32;
    let a = PadicNum::from_bigint(p, &gamma.a, w);
    let b = PadicNum::from_bigint(p, &gamma.b, w);
    let c = PadicNum::from_bigint(p, &gamma.c, w);
    let d = PadicNum::from_bigint(p, &gamma.d, w);
    let ainv = a.inv()?;
    let ratio = c.mul(&ainv)?.neg(); // valuation ≥ 1
    let mut inv_series = Vec::with_capacity(mmom);
    inv_series.push(ainv);
    for k in 1..mmom {
        inv_series.push(inv_series[k - 1].mul(&ratio)?);
    }
    let mut subst = Vec::with_capacity(mmom);
    for k in 0..mmom {
        let mut coef = b.mul(&inv_series[k])?;
        if k >= 1 {
            coef = coef.add(&d.mul(&inv_series[k - 1])?)?;
        }
        subst.push(coef);
    }
    let mut rows = Vec::with_capacity(mmom);
    let mut row = vec![PadicNum::zero(p, w as i64); mmom];
    row[0] = PadicNum::one(p, w);
    rows.push(row);
    for _ in 1..mmom {
        let prev = rows.last().unwrap();
        rows.push(series_mul(p, prev, &subst, mmom, w as i64)?);
    }
    Ok(rows)
}

fn series_mul(
    p: u64,
    lhs: &[PadicNum],
    rhs: &[PadicNum],
    len: usize,
    seed_prec: i64,
) -> Result<Vec<PadicNum>, PadicError> {
    let mut out = vec![PadicNum::zero(p, seed_prec); len];
    for (i, a) in lhs.iter().enumerate() {
        if i >= len {
            break;
        }
        for (j, b) in rhs.iter().enumerate() {
            if i + j >= len {
                break;
            }
            out[i + j] = out[i + j].add(&a.mul(b)?)?;
        }
    }
    Ok(out)
}

/// `q(u(τ))` for a polynomial `q` and a series `u`, truncated to `len`
/// terms (Horner in the series ring).
fn series_compose(
    p: u64,
    q: &[PadicNum],
    u: &[PadicNum],
    len: usize,
    seed_prec: i64,
) -> Result<Vec<PadicNum>, PadicError> {
    let mut acc = vec![PadicNum::zero(p, seed_prec); len];
    for c in q.iter().rev() {
        acc = series_mul(p, &acc, u, len, seed_prec)?;
        acc[0] = acc[0].add(c)?;
    }
    Ok(acc)
}

/// `q(k0 + λ·x)` by Horner against the linear substitution.
fn compose_affine(
    p: u64,
    poly: &[PadicNum],
    k0: &PadicNum,
    lam: &PadicNum,
) -> Result<Vec<PadicNum>, PadicError> {
    let mut q: Vec<PadicNum> = Vec::new();
    for c in poly.iter().rev() {
        let mut nq = Vec::with_capacity(q.len() + 1);
        for i in 0..=q.len() {
            let mut term = if i < q.len() {
                q[i].mul(k0)?
            } else {
                PadicNum::zero(p, c.abs_prec().max(1))
            };
            if i >= 1 {
                term = term.add(&q[i - 1].mul(lam)?)?;
            }
            nq.push(term);
        }
        nq[0] = nq[0].add(c)?;
        q = nq;
    }
    Ok(q)
}

// ---------------------------------------------------------------------------
// Distribution-valued symbols.

/// A path between cusps, optionally translated by a unimodular matrix
/// (for instance the lift of a prime-to-p coset class).
#[derive(Debug, Clone)]
pub struct PathDiv {
    pub from: Cusp,
    pub to: Cusp,
    pub translate: Option<Mat2>,
}

impl PathDiv {
    pub fn new(from: Cusp, to: Cusp) -> Self {
        PathDiv { from, to, translate: None }
    }

    pub fn translated(from: Cusp, to: Cusp, g: Mat2) -> Self {
        PathDiv { from, to, translate: Some(g) }
    }

    /// Endpoints with the translate applied.
    pub fn endpoints(&self) -> (Cusp, Cusp) {
        match &self.translate {
            None => (self.from.clone(), self.to.clone()),
            Some(g) => (g.apply(&self.from), g.apply(&self.to)),
        }
    }
}

/// A distribution-valued modular symbol of level `N·p`: one finite-
/// precision distribution per projective generator, a `U_p` eigenvalue it
/// is iterated towards, and the weight-direction tag consumed by
/// integrand builders.
#[derive(Debug, Clone)]
pub struct DistSymbol {
    level: i64,
    p: u64,
    mmom: usize,
    ap: PadicNum,
    d_kappa: u32,
    values: Vec<FiniteDist>,
}

impl DistSymbol {
    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn mmom(&self) -> usize {
        self.mmom
    }

    /// The `U_p` eigenvalue as a p-adic unit.
    pub fn eigenvalue(&self) -> &PadicNum {
        &self.ap
    }

    pub fn value(&self, generator: usize) -> &FiniteDist {
        &self.values[generator]
    }

    pub fn values(&self) -> &[FiniteDist] {
        &self.values
    }

    pub fn weight_tag(&self) -> WeightTag {
        WeightTag { p: self.p, d_kappa: self.d_kappa }
    }

    /// The distribution attached to the path {from → to}: continued-
    /// fraction legs of the path, each pulled back to its generator by a
    /// level-group transport.
    pub fn value_on_path(
        &self,
        space: &SymbolSpace,
        from: &Cusp,
        to: &Cusp,
    ) -> Result<FiniteDist, DistError> {
        self.value_on_translated(space, from, to, None)
    }

    pub fn value_on_div(
        &self,
        space: &SymbolSpace,
        div: &PathDiv,
    ) -> Result<FiniteDist, DistError> {
        let (from, to) = div.endpoints();
        self.value_on_path(space, &from, &to)
    }

    fn value_on_translated(
        &self,
        space: &SymbolSpace,
        from: &Cusp,
        to: &Cusp,
        post: Option<&Mat2>,
    ) -> Result<FiniteDist, DistError> {
        let mut acc = FiniteDist::zero(self.p, self.mmom);
        for (idx, g) in space.path_legs(from, to) {
            // The leg {g·0 → g·∞} is the Γ₀-translate (g·s⁻¹)·(generator
            // path), so its value is ν_idx acted by s·g⁻¹.
            let mut t = space.generator_lift(idx).mul(&g.inv_unimodular());
            if let Some(h) = post {
                t = t.mul(h);
            }
            acc = acc.add(&self.values[idx].act(&t)?)?;
        }
        Ok(acc)
    }

    /// Sum of `Ξ(g·D)|g` over coset representatives `g`, evaluated on
    /// every generator path in parallel (the reduction order is the fixed
    /// generator order, so results are deterministic).
    fn coset_sum(&self, space: &SymbolSpace, mats: &[Mat2]) -> Result<Vec<FiniteDist>, DistError> {
        (0..space.generator_count())
            .into_par_iter()
            .map(|i| {
                let s = space.generator_lift(i);
                let from = Cusp::from_big(s.b.clone(), s.d.clone());
                let to = Cusp::from_big(s.a.clone(), s.c.clone());
                let mut acc = FiniteDist::zero(self.p, self.mmom);
                for g in mats {
                    acc = acc.add(&self.value_on_translated(
                        space,
                        &g.apply(&from),
                        &g.apply(&to),
                        Some(g),
                    )?)?;
                }
                Ok(acc)
            })
            .collect()
    }

    /// The `U_p` operator: `Σ_{r mod p} Ξ([[1,r],[0,p]]·D) | [[1,r],[0,p]]`.
    pub fn u_p(&self, space: &SymbolSpace) -> Result<DistSymbol, DistError> {
        let mats: Vec<Mat2> =
            (0..self.p as i64).map(|r| Mat2::new(1, r, 0, self.p as i64)).collect();
        let values = self.coset_sum(space, &mats)?;
        Ok(DistSymbol { values, ..self.clone() })
    }

    /// The Hecke operator at a prime `q` not dividing the level.
    pub fn hecke_t(&self, space: &SymbolSpace, q: u64) -> Result<DistSymbol, DistError> {
        let mut mats: Vec<Mat2> = (0..q as i64).map(|r| Mat2::new(1, r, 0, q as i64)).collect();
        mats.push(Mat2::new(q as i64, 0, 0, 1));
        let values = self.coset_sum(space, &mats)?;
        Ok(DistSymbol { values, ..self.clone() })
    }

    /// The classical shadow: 0-th moments per generator, each carried
    /// modulo `p^mmom`.
    pub fn specialize(&self) -> Vec<PadicNum> {
        self.values.iter().map(|v| v.moment(0).clone()).collect()
    }

    /// Left-hand sides of the defining relations; all must vanish at the
    /// graded precision for a well-formed symbol.
    pub fn relation_residuals(&self, space: &SymbolSpace) -> Result<Vec<FiniteDist>, DistError> {
        relation_residuals_of(space, self.p, self.mmom, &self.values)
    }

    /// Forget moments beyond `mm`, coarsening the grading accordingly.
    pub fn truncated(&self, mm: usize) -> Result<DistSymbol, DistError> {
        let values = self
            .values
            .iter()
            .map(|v| v.truncated(mm))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DistSymbol { mmom: mm, values, ..self.clone() })
    }
}

/// One defining relation `Σ ν_idx | mat = 0` between generator values.
struct Relation {
    terms: Vec<(usize, Mat2)>,
}

/// The two- and three-term relations, one per orbit of the generators
/// under the order-2 and order-3 rotations (fixed orbit representatives,
/// so the system and its solution are deterministic).
fn relations(space: &SymbolSpace) -> Vec<Relation> {
    let s_mat = Mat2::new(0, -1, 1, 0);
    let t_mat = Mat2::new(0, -1, 1, -1);
    let t_sq = t_mat.mul(&t_mat);
    let mut rels = Vec::new();
    for i in 0..space.generator_count() {
        let si = space.generator_lift(i);
        let j = space.act_index(i, &s_mat).expect("the rotation permutes projective classes");
        if i <= j {
            // The generator path traversed backwards is a level-group
            // translate of its partner's path.
            let gs = si.mul(&s_mat);
            let m = space.generator_lift(j).mul(&gs.inv_unimodular());
            rels.push(Relation { terms: vec![(i, Mat2::identity()), (j, m)] });
        }
        let j1 = space.act_index(i, &t_mat).expect("the rotation permutes projective classes");
        let j2 = space.act_index(i, &t_sq).expect("the rotation permutes projective classes");
        if i <= j1 && i <= j2 {
            let m1 = space.generator_lift(j1).mul(&si.mul(&t_mat).inv_unimodular());
            let m2 = space.generator_lift(j2).mul(&si.mul(&t_sq).inv_unimodular());
            rels.push(Relation {
                terms: vec![(i, Mat2::identity()), (j1, m1), (j2, m2)],
            });
        }
    }
    rels
}

fn relation_residuals_of(
    space: &SymbolSpace,
    p: u64,
    mmom: usize,
    values: &[FiniteDist],
) -> Result<Vec<FiniteDist>, DistError> {
    relations(space)
        .iter()
        .map(|rel| {
            let mut acc = FiniteDist::zero(p, mmom);
            for (idx, m) in &rel.terms {
                acc = acc.add(&values[*idx].act(m)?)?;
            }
            Ok(acc)
        })
        .collect()
}

/// Residues mod `p^mmom` of the moment transform of `mat` (row `j`,
/// column `i`).
fn transform_residues(p: u64, mat: &Mat2, mmom: usize) -> Result<Vec<Vec<BigInt>>, DistError> {
    let rows = substitution_rows(p, mat, mmom)?;
    rows.iter()
        .map(|row| {
            row.iter()
                .map(|c| Ok(BigInt::from(c.residue(mmom as u32)?)))
                .collect::<Result<Vec<_>, DistError>>()
        })
        .collect()
}

/// Restores the relations after truncation: solves for a correction in
/// the higher moments (0-th moments stay fixed) so that every relation
/// vanishes at the graded precision.  The graded system is rescaled row
/// by row to a single congruence modulus; the correction in moment `i`
/// is then read off modulo `p^(mmom − i)`.
fn correct_relations(
    space: &SymbolSpace,
    p: u64,
    mmom: usize,
    values: &mut [FiniteDist],
) -> Result<(), DistError> {
    if mmom < 2 {
        return Ok(());
    }
    let rels = relations(space);
    let n = space.generator_count();
    let cols = n * (mmom - 1);
    let col_of = |r: usize, i: usize| r * (mmom - 1) + (i - 1);
    let modulus = BigInt::from(p).pow(mmom as u32);
    let mut a = vec![vec![BigInt::zero(); cols]; rels.len() * mmom];
    let mut b = vec![BigInt::zero(); rels.len() * mmom];
    for (ri, rel) in rels.iter().enumerate() {
        let mut defect = FiniteDist::zero(p, mmom);
        for (idx, mat) in &rel.terms {
            defect = defect.add(&values[*idx].act(mat)?)?;
            let t = transform_residues(p, mat, mmom)?;
            for j in 0..mmom {
                let scale = BigInt::from(p).pow(j as u32);
                for i in 1..mmom {
                    let cell = &mut a[ri * mmom + j][col_of(*idx, i)];
                    *cell = (&*cell + &scale * &t[j][i]) % &modulus;
                }
            }
        }
        for j in 0..mmom {
            let r = BigInt::from(defect.moment(j).residue((mmom - j) as u32)?);
            let scaled = (BigInt::from(p).pow(j as u32) * r) % &modulus;
            b[ri * mmom + j] = (&modulus - scaled) % &modulus;
        }
    }
    let x = solve_mod_p_power(p, mmom as u32, a, b)?;
    for r in 0..n {
        let mut correction = vec![PadicNum::zero(p, mmom as i64)];
        for i in 1..mmom {
            let m = BigUint::from(p).pow((mmom - i) as u32);
            let residue = x[col_of(r, i)].magnitude() % m;
            correction.push(PadicNum::from_residue(p, &residue, (mmom - i) as u32));
        }
        values[r] = values[r].add(&FiniteDist::from_moments(p, correction)?)?;
    }
    for residual in relation_residuals_of(space, p, mmom, values)? {
        if !residual.is_trivial() {
            return Err(DistError::DefectUnsolvable);
        }
    }
    Ok(())
}

fn inv_mod(x: &BigInt, modulus: &BigInt) -> Option<BigInt> {
    let e = x.extended_gcd(modulus);
    if !e.gcd.is_one() {
        return None;
    }
    let r = e.x.mod_floor(modulus);
    Some(r)
}

/// Particular solution of `A·x ≡ b (mod p^exp)` by diagonalization with
/// unimodular row and column operations.  Pivots are chosen by minimal
/// valuation with ties broken by position, so the elimination (and the
/// returned solution) is deterministic.
fn solve_mod_p_power(
    p: u64,
    exp: u32,
    mut a: Vec<Vec<BigInt>>,
    mut b: Vec<BigInt>,
) -> Result<Vec<BigInt>, DistError> {
    let modulus = BigInt::from(p).pow(exp);
    let nrows = a.len();
    let ncols = if nrows == 0 { 0 } else { a[0].len() };
    let red = |x: BigInt| -> BigInt { x.mod_floor(&modulus) };
    for row in a.iter_mut() {
        for e in row.iter_mut() {
            *e = e.mod_floor(&modulus);
        }
    }
    for e in b.iter_mut() {
        *e = e.mod_floor(&modulus);
    }
    let pb = BigInt::from(p);
    let val = |x: &BigInt| -> u32 {
        if x.is_zero() {
            return exp;
        }
        let mut v = 0;
        let mut t = x.clone();
        while v < exp && (&t % &pb).is_zero() {
            t /= &pb;
            v += 1;
        }
        v
    };
    let mut v_mat: Vec<Vec<BigInt>> = (0..ncols)
        .map(|i| (0..ncols).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    let mut pivots: Vec<u32> = Vec::new();
    for k in 0..nrows.min(ncols) {
        let mut best: Option<(usize, usize)> = None;
        let mut best_val = exp;
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, cell) in row.iter().enumerate().skip(k) {
                let v = val(cell);
                if v < best_val {
                    best_val = v;
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        let pv = best_val;
        a.swap(k, pi);
        b.swap(k, pi);
        if pj != k {
            for row in a.iter_mut() {
                row.swap(k, pj);
            }
            for row in v_mat.iter_mut() {
                row.swap(k, pj);
            }
        }
        let pk = pb.pow(pv);
        let uinv = inv_mod(&(&a[k][k] / &pk), &modulus).expect("unit part is invertible");
        for e in a[k].iter_mut() {
            *e = red(std::mem::take(e) * &uinv);
        }
        b[k] = red(&b[k] * &uinv);
        // Clear the pivot column with row operations (exact: the pivot
        // has minimal valuation, so every quotient is integral).
        let pivot_row = a[k].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == k || row[k].is_zero() {
                continue;
            }
            let q = &row[k] / &pk;
            for (e, pe) in row.iter_mut().zip(&pivot_row) {
                *e = red(std::mem::take(e) - &q * pe);
            }
            b[i] = red(&b[i] - &q * &b[k]);
        }
        // Clear the pivot row with column operations, mirrored on the
        // right transform.
        let quotients: Vec<Option<BigInt>> = a[k]
            .iter()
            .enumerate()
            .map(|(j, e)| if j == k || e.is_zero() { None } else { Some(e / &pk) })
            .collect();
        for row in a.iter_mut().chain(v_mat.iter_mut()) {
            let ck = row[k].clone();
            for (e, q) in row.iter_mut().zip(&quotients) {
                if let Some(q) = q {
                    *e = red(std::mem::take(e) - q * &ck);
                }
            }
        }
        pivots.push(pv);
    }
    let mut y = vec![BigInt::zero(); ncols];
    for (k, pv) in pivots.iter().enumerate() {
        if b[k].is_zero() {
            continue;
        }
        if val(&b[k]) < *pv {
            return Err(DistError::DefectUnsolvable);
        }
        y[k] = &b[k] / &pb.pow(*pv);
    }
    for bi in b.iter().take(nrows).skip(pivots.len()) {
        if !bi.is_zero() {
            return Err(DistError::DefectUnsolvable);
        }
    }
    Ok((0..ncols)
        .map(|i| red((0..ncols).map(|j| &v_mat[i][j] * &y[j]).sum::<BigInt>()))
        .collect())
}

// ---------------------------------------------------------------------------
// Ordinary lifting.

/// Convergence certificate of the eigenvalue iteration: the filtration
/// level of each successive difference (entry `i` must be at least
/// `i + 1` — one step gained per pass).
#[derive(Debug, Clone)]
pub struct LiftReport {
    pub iterations: usize,
    pub contraction: Vec<i64>,
}

/// Lifts explicit classical values (0-th moments, one per generator,
/// required to satisfy the classical relations) to the distribution-
/// valued symbol with `U_p` eigenvalue `ap`: higher moments start at
/// zero, the relations are restored by a linear correction, and
/// `a_p⁻¹·U_p` is iterated until the values stabilize at the graded
/// precision.
pub fn lift_from_values(
    space: &SymbolSpace,
    p: u64,
    ap: &PadicNum,
    classical: &[PadicNum],
    mmom: usize,
) -> Result<(DistSymbol, LiftReport), DistError> {
    assert!(mmom >= 1, "at least one moment must be stored");
    if classical.len() != space.generator_count() {
        return Err(DistError::MomentCountMismatch {
            left: classical.len(),
            right: space.generator_count(),
        });
    }
    match ap.valuation() {
        Some(0) => {}
        v => return Err(DistError::NonOrdinary { p, valuation: v }),
    }
    let mut values = classical
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if v.prime() != p {
                return Err(PadicError::PrimeMismatch { left: p, right: v.prime() }.into());
            }
            if v.abs_prec() < mmom as i64 {
                return Err(DistError::InsufficientPrecision {
                    moment: i,
                    have: v.abs_prec(),
                    need: mmom as i64,
                });
            }
            let mut moments = vec![v.clone()];
            moments.extend((1..mmom).map(|j| PadicNum::zero(p, (mmom - j) as i64)));
            FiniteDist::from_moments(p, moments)
        })
        .collect::<Result<Vec<_>, DistError>>()?;
    correct_relations(space, p, mmom, &mut values)?;
    let mut xi = DistSymbol {
        level: space.level(),
        p,
        mmom,
        ap: ap.clone(),
        d_kappa: 1,
        values,
    };
    let apinv = ap.inv()?;
    let budget = 3 * mmom + 10;
    let mut contraction = Vec::new();
    for pass in 0..budget {
        let values = xi
            .coset_sum(space, &(0..p as i64).map(|r| Mat2::new(1, r, 0, p as i64)).collect::<Vec<_>>())?
            .iter()
            .map(|d| d.scale(&apinv))
            .collect::<Result<Vec<_>, _>>()?;
        let next = DistSymbol { values, ..xi.clone() };
        let mut level = xi.mmom as i64;
        let mut trivial = true;
        for (old, new) in xi.values.iter().zip(&next.values) {
            let diff = new.sub(old)?;
            level = level.min(diff.fil_level());
            trivial = trivial && diff.is_trivial();
        }
        contraction.push(level);
        xi = next;
        if trivial {
            // Post-conditions: the classical shadow is untouched and the
            // relations survived the iteration.
            for (m0, v) in xi.specialize().iter().zip(classical) {
                assert!(
                    m0.agrees_to(v, mmom as i64),
                    "eigenvalue iteration must preserve 0-th moments"
                );
            }
            for residual in xi.relation_residuals(space)? {
                assert!(
                    residual.is_trivial(),
                    "eigenvalue iteration must preserve the relations"
                );
            }
            return Ok((xi, LiftReport { iterations: pass + 1, contraction }));
        }
        assert!(
            level > pass as i64,
            "eigenvalue iteration must gain one filtration step per pass (pass {pass}, level {level})"
        );
    }
    Err(DistError::NonConvergence {
        iterations: budget,
        residual_level: contraction.last().copied().unwrap_or(0),
    })
}

/// Ordinary lift of a classical eigensymbol at `p`, with the convergence
/// certificate.  Checks ordinarity before the level shape: a non-unit
/// eigenvalue is the meaningful diagnosis even when the level is wrong
/// for lifting at `p`.
pub fn lift_ordinary_with_report(
    space: &SymbolSpace,
    sym: &EigenSymbol,
    part: SymbolPart,
    p: u64,
    mmom: usize,
) -> Result<(DistSymbol, LiftReport), DistError> {
    let ap_rat = sym.a(p).ok_or(DistError::MissingEigenvalue { p })?;
    match rational_val(p, ap_rat) {
        Some(0) => {}
        v => return Err(DistError::NonOrdinary { p, valuation: v }),
    }
    if space.level() != sym.level() {
        return Err(DistError::LevelMismatch {
            space_level: space.level(),
            symbol_level: sym.level(),
        });
    }
    let level = space.level();
    let pi = p as i64;
    if level % pi != 0 || (level / pi) % pi == 0 {
        return Err(DistError::BadLevel { p, level });
    }
    let digits = (mmom + 2) as u32;
    let classical = (0..space.generator_count())
        .map(|i| {
            let g = space.generator_lift(i);
            let from = Cusp::from_big(g.b.clone(), g.d.clone());
            let to = Cusp::from_big(g.a.clone(), g.c.clone());
            let v = sym.value_on_path(space, part, &from, &to);
            if rational_val(p, &v).is_some_and(|w| w < 0) {
                return Err(DistError::NotIntegral { p });
            }
            Ok(PadicNum::from_ratio(p, v.numer(), v.denom(), digits)?)
        })
        .collect::<Result<Vec<_>, DistError>>()?;
    let ap = PadicNum::from_ratio(p, ap_rat.numer(), ap_rat.denom(), (mmom + 4) as u32)?;
    lift_from_values(space, p, &ap, &classical, mmom)
}

/// [`lift_ordinary_with_report`] without the certificate.
pub fn lift_ordinary(
    space: &SymbolSpace,
    sym: &EigenSymbol,
    part: SymbolPart,
    p: u64,
    mmom: usize,
) -> Result<DistSymbol, DistError> {
    lift_ordinary_with_report(space, sym, part, p, mmom).map(|(xi, _)| xi)
}

fn rational_val(p: u64, r: &BigRational) -> Option<i64> {
    if r.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let count = |n: &BigInt| {
        let mut v = 0i64;
        let mut t = n.abs();
        while (&t % &pb).is_zero() {
            t /= &pb;
            v += 1;
        }
        v
    };
    Some(count(r.numer()) - count(r.denom()))
}

// ---------------------------------------------------------------------------
// Measures on discs of Z_p.

/// `∫_{a + pⁿZ_p} P dμ` for the distribution attached to a path, with `P`
/// a polynomial in the standard coordinate of `Z_p`: the disc translate
/// is `a_p^{−n}·Ξ([[1,a],[0,pⁿ]]·D)` paired against `P(a + pⁿ·x)`.
pub fn measure_on_disc(
    space: &SymbolSpace,
    xi: &DistSymbol,
    div: &PathDiv,
    center: u64,
    depth: u32,
    poly: &[PadicNum],
) -> Result<PadicNum, DistError> {
    let p = xi.prime();
    let digits = (xi.mmom() + 2) as u32;
    let k0 = PadicNum::from_bigint(p, &BigInt::from(center), digits);
    let lam = PadicNum::from_bigint(p, &BigInt::from(p).pow(depth), digits);
    let local = compose_affine(p, poly, &k0, &lam)?;
    measure_on_disc_local(space, xi, div, center, depth, &local)
}

/// Same integral with `P` already expanded in the local coordinate of the
/// disc (`x = a + pⁿ·τ`, coefficients in `τ`).
pub fn measure_on_disc_local(
    space: &SymbolSpace,
    xi: &DistSymbol,
    div: &PathDiv,
    center: u64,
    depth: u32,
    poly: &[PadicNum],
) -> Result<PadicNum, DistError> {
    let mm = xi.mmom();
    if depth as usize > mm {
        return Err(DistError::DepthTooDeep { depth, mmom: mm });
    }
    if poly.len() > mm {
        return Err(DistError::DegreeTooLarge { deg: poly.len().saturating_sub(1), mmom: mm });
    }
    let p = xi.prime();
    let pn = BigInt::from(p).pow(depth);
    let a = BigInt::from(center).mod_floor(&pn);
    let g = Mat2::from_big(BigInt::one(), a, BigInt::zero(), pn);
    let (from, to) = div.endpoints();
    let dist = xi.value_on_path(space, &g.apply(&from), &g.apply(&to))?;
    let weight = xi.eigenvalue().pow_i64(-(depth as i64))?;
    Ok(dist.pair(poly)?.mul(&weight)?)
}

// ---------------------------------------------------------------------------
// Two-region measures on primitive vectors.

/// The two regions of the primitive vectors of `Z_p²` (up to scaling),
/// split by whether the second coordinate is a unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsRegion {
    /// `(x, y)` with `y ∈ Z_p^×`, charted by `t = x/y ∈ Z_p`.
    UnitY,
    /// `(x, y)` with `y ∈ p·Z_p` (so `x ∈ Z_p^×`), charted by
    /// `s = y/x ∈ p·Z_p`.
    DivisibleY,
}

/// A locally polynomial function of a primitive vector, invariant under
/// scaling, recorded on the two charts: `on_t[a]` expands
/// `h(a + p^depth·τ, 1)` and `on_s[b]` expands `h(1, p·(b + p^depth·τ))`,
/// both in the local coordinate `τ`.
#[derive(Debug, Clone)]
pub struct GsIntegrand {
    p: u64,
    depth: u32,
    on_t: Vec<Vec<PadicNum>>,
    on_s: Vec<Vec<PadicNum>>,
}

impl GsIntegrand {
    pub fn constant(p: u64, depth: u32, value: &PadicNum) -> Self {
        let count = disc_count(p, depth);
        GsIntegrand {
            p,
            depth,
            on_t: vec![vec![value.clone()]; count],
            on_s: vec![vec![value.clone()]; count],
        }
    }

    pub fn from_charts(
        p: u64,
        depth: u32,
        on_t: Vec<Vec<PadicNum>>,
        on_s: Vec<Vec<PadicNum>>,
    ) -> Result<Self, DistError> {
        let count = disc_count(p, depth);
        if on_t.len() != count {
            return Err(DistError::ChartMismatch { expected: count, got: on_t.len() });
        }
        if on_s.len() != count {
            return Err(DistError::ChartMismatch { expected: count, got: on_s.len() });
        }
        Ok(GsIntegrand { p, depth, on_t, on_s })
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// The composition `v ↦ h(mat·v)` for `mat` invertible over the
    /// p-adic integers, re-expanded at depth `out_depth` (at least one
    /// deeper than the data: crossing between the charts divides one `p`
    /// out of the coordinates).  `budget` truncates the expansions.
    pub fn transported(
        &self,
        mat: &Mat2,
        out_depth: u32,
        budget: usize,
    ) -> Result<GsIntegrand, DistError> {
        let p = self.p;
        let pb = BigInt::from(p);
        if (mat.det() % &pb).is_zero() {
            return Err(DistError::BadActionMatrix { p });
        }
        if out_depth < self.depth + 1 {
            return Err(DistError::DepthTooShallow { have: out_depth, need: self.depth + 1 });
        }
        let count = disc_count(p, out_depth);
        let pd_out = BigInt::from(p).pow(out_depth);
        let mut on_t = Vec::with_capacity(count);
        for a in 0..count {
            // Image of the curve τ ↦ (a + p^D·τ, 1).
            let ab = BigInt::from(a);
            on_t.push(self.chart_pullback(
                &mat.a * &ab + &mat.b,
                &mat.a * &pd_out,
                &mat.c * &ab + &mat.d,
                &mat.c * &pd_out,
                budget,
            )?);
        }
        let mut on_s = Vec::with_capacity(count);
        for b in 0..count {
            // Image of the curve τ ↦ (1, p·(b + p^D·τ)).
            let pbb = BigInt::from(p) * b;
            on_s.push(self.chart_pullback(
                &mat.a + &mat.b * &pbb,
                &mat.b * &pd_out * &pb,
                &mat.c + &mat.d * &pbb,
                &mat.d * &pd_out * &pb,
                budget,
            )?);
        }
        Ok(GsIntegrand { p, depth: out_depth, on_t, on_s })
    }

    /// Expansion of the integrand along the primitive-vector curve
    /// `τ ↦ (x0 + x1·τ, y0 + y1·τ)`, read off the chart the curve lands
    /// in.
    fn chart_pullback(
        &self,
        x0: BigInt,
        x1: BigInt,
        y0: BigInt,
        y1: BigInt,
        budget: usize,
    ) -> Result<Vec<PadicNum>, DistError> {
        let p = self.p;
        let pb = BigInt::from(p);
        let len = budget.max(1);
        let w = (budget + self.depth as usize + 8) as u32;
        let pd_in = PadicNum::from_bigint(p, &pb.pow(self.depth), w);
        let (data, mut series) = if !(&y0 % &pb).is_zero() {
            // The second coordinate stays a unit: land in the t-chart
            // through t = X/Y.
            let inv = linear_inverse_series(
                &PadicNum::from_bigint(p, &y0, w),
                &PadicNum::from_bigint(p, &y1, w),
                len,
            )?;
            let x0p = PadicNum::from_bigint(p, &x0, w);
            let x1p = PadicNum::from_bigint(p, &x1, w);
            let mut t = Vec::with_capacity(len);
            for k in 0..len {
                let mut c = x0p.mul(&inv[k])?;
                if k >= 1 {
                    c = c.add(&x1p.mul(&inv[k - 1])?)?;
                }
                t.push(c);
            }
            (&self.on_t, t)
        } else {
            // The second coordinate falls into p·Z_p, so the first is a
            // unit: land in the s-chart through s/p = Y/(p·X).
            if (&x0 % &pb).is_zero() {
                return Err(DistError::BadActionMatrix { p });
            }
            let inv = linear_inverse_series(
                &PadicNum::from_bigint(p, &x0, w),
                &PadicNum::from_bigint(p, &x1, w),
                len,
            )?;
            let y0p = PadicNum::from_bigint(p, &y0, w);
            let y1p = PadicNum::from_bigint(p, &y1, w);
            let pnum = PadicNum::from_bigint(p, &pb, w);
            let mut s = Vec::with_capacity(len);
            for k in 0..len {
                let mut c = y0p.mul(&inv[k])?;
                if k >= 1 {
                    c = c.add(&y1p.mul(&inv[k - 1])?)?;
                }
                s.push(c.div(&pnum)?);
            }
            (&self.on_s, s)
        };
        // Recenter at the disc of the data and rescale to its local
        // coordinate.
        let center = series[0].residue(self.depth)?;
        let idx = center.to_usize().expect("disc index fits usize");
        series[0] = series[0].sub(&PadicNum::from_bigint(p, &BigInt::from(center), w))?;
        let local = series
            .iter()
            .map(|c| c.div(&pd_in))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(series_compose(p, &data[idx], &local, len, w as i64)?)
    }
}

fn disc_count(p: u64, depth: u32) -> usize {
    p.checked_pow(depth)
        .and_then(|n| n.to_usize())
        .expect("disc count fits usize")
}

/// Coefficients of `1/(d0 + d1·τ)` as a series (d0 a unit).
fn linear_inverse_series(
    d0: &PadicNum,
    d1: &PadicNum,
    len: usize,
) -> Result<Vec<PadicNum>, PadicError> {
    let d0inv = d0.inv()?;
    let ratio = d1.mul(&d0inv)?.neg();
    let mut out = Vec::with_capacity(len);
    out.push(d0inv);
    for k in 1..len {
        out.push(out[k - 1].mul(&ratio)?);
    }
    Ok(out)
}

/// One region of `∫ h dμ` for the measure on primitive vectors attached
/// to a path: the `y`-unit region pairs the first chart against the
/// moments on the path itself; the other region pairs the second chart,
/// along `y = −p·(moment variable)`, against the moments on the involuted
/// path `w·D` with `w = [[0,1],[−p,0]]`, scaled by `a_p⁻¹`.
pub fn gs_measure(
    space: &SymbolSpace,
    xi: &DistSymbol,
    div: &PathDiv,
    region: GsRegion,
    h: &GsIntegrand,
) -> Result<PadicNum, DistError> {
    let p = xi.prime();
    if h.p != p {
        return Err(PadicError::PrimeMismatch { left: p, right: h.p }.into());
    }
    let count = disc_count(p, h.depth);
    let mut acc = PadicNum::zero(p, xi.mmom() as i64);
    match region {
        GsRegion::UnitY => {
            for a in 0..count {
                acc = acc.add(&measure_on_disc_local(
                    space,
                    xi,
                    div,
                    a as u64,
                    h.depth,
                    &h.on_t[a],
                )?)?;
            }
            Ok(acc)
        }
        GsRegion::DivisibleY => {
            let (from, to) = div.endpoints();
            let w = Mat2::new(0, 1, -(p as i64), 0);
            let wdiv = PathDiv::new(w.apply(&from), w.apply(&to));
            let digits = (xi.mmom() + 2) as u32;
            let minus_one = PadicNum::from_bigint(p, &BigInt::from(-1), digits);
            for b in 0..count {
                // −(b + p^d·τ) lands in the s-chart disc c ≡ −b, with
                // local coordinate k0 − τ.
                let c = (count - b) % count;
                let k0 = PadicNum::from_bigint(
                    p,
                    &(BigInt::from(-(b as i64)) - BigInt::from(c as i64))
                        .checked_div(&BigInt::from(p).pow(h.depth))
                        .expect("disc centers are congruent"),
                    digits,
                );
                let local = compose_affine(p, &h.on_s[c], &k0, &minus_one)?;
                acc = acc.add(&measure_on_disc_local(
                    space,
                    xi,
                    &wdiv,
                    b as u64,
                    h.depth,
                    &local,
                )?)?;
            }
            Ok(acc.mul(&xi.eigenvalue().inv()?)?)
        }
    }
}

/// `∫ h dμ` over all primitive vectors (both regions).
pub fn gs_measure_total(
    space: &SymbolSpace,
    xi: &DistSymbol,
    div: &PathDiv,
    h: &GsIntegrand,
) -> Result<PadicNum, DistError> {
    let a = gs_measure(space, xi, div, GsRegion::UnitY, h)?;
    let b = gs_measure(space, xi, div, GsRegion::DivisibleY, h)?;
    Ok(a.add(&b)?)
}

// ---------------------------------------------------------------------------
// Weight-direction jets.

/// The weight direction attached to a lifted symbol, as first-order jets
/// in the variable κ: the square-root character `ϑ(z) = ⟨z⟩^{κ/2}` and
/// its square `𝛂(z) = ⟨z⟩^κ`, with per-disc expansions for pairing
/// against stored moments.  Consumers differentiate integrands built
/// from these jets; the moments themselves carry no weight dependence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightTag {
    p: u64,
    d_kappa: u32,
}

impl WeightTag {
    pub fn new(p: u64) -> Self {
        WeightTag { p, d_kappa: 1 }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn d_kappa(&self) -> u32 {
        self.d_kappa
    }

    /// `ϑ(z) = 1 + (κ/2)·log⟨z⟩` at a unit `z`.
    pub fn theta_jet(&self, z: &PadicNum) -> Result<Jet<PadicNum>, DistError> {
        self.character_jet(z, true)
    }

    /// `𝛂(z) = ϑ(z)² = 1 + κ·log⟨z⟩` at a unit `z`.
    pub fn alpha_jet(&self, z: &PadicNum) -> Result<Jet<PadicNum>, DistError> {
        self.character_jet(z, false)
    }

    fn character_jet(&self, z: &PadicNum, half: bool) -> Result<Jet<PadicNum>, DistError> {
        let lg = self.scaled_log(z, half)?;
        let one = PadicNum::one(self.p, z.context_digits());
        Ok(Jet::constant(one, 1, 0).add(&Jet::var_kappa(&lg, 1, 0).scale(&lg)))
    }

    fn scaled_log(&self, z: &PadicNum, half: bool) -> Result<PadicNum, DistError> {
        let lg = z.plog()?;
        if !half {
            return Ok(lg);
        }
        let two = PadicNum::from_bigint(self.p, &BigInt::from(2), z.context_digits().max(1));
        Ok(lg.div(&two)?)
    }

    /// Expansion of `ϑ` on the disc `a + pⁿ·Z_p` (coefficients in the
    /// local coordinate τ): `ϑ(a + pⁿτ) = 1 + (κ/2)(log⟨a⟩ + log(1 + pⁿτ/a))`.
    pub fn theta_poly_on_disc(
        &self,
        center: u64,
        depth: u32,
        len: usize,
        digits: u32,
    ) -> Result<Vec<Jet<PadicNum>>, DistError> {
        self.character_poly_on_disc(center, depth, len, digits, true)
    }

    /// Expansion of `𝛂 = ϑ²` on the disc `a + pⁿ·Z_p`.
    pub fn alpha_poly_on_disc(
        &self,
        center: u64,
        depth: u32,
        len: usize,
        digits: u32,
    ) -> Result<Vec<Jet<PadicNum>>, DistError> {
        self.character_poly_on_disc(center, depth, len, digits, false)
    }

    /// Series of `log⟨a + pⁿτ⟩` on the disc `a + pⁿ·Z_p` in the local
    /// coordinate τ: `log⟨a⟩ + Σ_{k≥1} (−1)^{k+1} (pⁿ/a)^k τ^k / k`.
    pub fn angle_log_poly(
        &self,
        center: u64,
        depth: u32,
        len: usize,
        digits: u32,
    ) -> Result<Vec<PadicNum>, DistError> {
        if depth < 1 {
            return Err(DistError::DepthTooShallow { have: depth, need: 1 });
        }
        let p = self.p;
        let a = PadicNum::from_bigint(p, &BigInt::from(center), digits);
        let mut logs = vec![a.plog()?];
        let ratio = PadicNum::from_bigint(p, &BigInt::from(p).pow(depth), digits).div(&a)?;
        let mut pw = PadicNum::one(p, digits);
        for k in 1..len {
            pw = pw.mul(&ratio)?;
            let mut term = pw.div(&PadicNum::from_bigint(p, &BigInt::from(k as i64), digits))?;
            if k % 2 == 0 {
                term = term.neg();
            }
            logs.push(term);
        }
        Ok(logs)
    }

    fn character_poly_on_disc(
        &self,
        center: u64,
        depth: u32,
        len: usize,
        digits: u32,
        half: bool,
    ) -> Result<Vec<Jet<PadicNum>>, DistError> {
        let p = self.p;
        let mut logs = self.angle_log_poly(center, depth, len, digits)?;
        if half {
            let two = PadicNum::from_bigint(p, &BigInt::from(2), digits);
            for c in logs.iter_mut() {
                *c = c.div(&two)?;
            }
        }
        let one = PadicNum::one(p, digits);
        Ok(logs
            .into_iter()
            .enumerate()
            .map(|(k, c)| {
                let jet = Jet::var_kappa(&c, 1, 0).scale(&c);
                if k == 0 {
                    Jet::constant(one.clone(), 1, 0).add(&jet)
                } else {
                    jet
                }
            })
            .collect())
    }
}

// ---------------------------------------------------------------------------
// Serialization (canonical residues, so equal symbols have equal bytes).

#[derive(Serialize, Deserialize)]
pub(crate) struct MomentRepr {
    prec: u32,
    residue: String,
}

#[derive(Serialize, Deserialize)]
struct DistRepr {
    p: u64,
    moments: Vec<MomentRepr>,
}

#[derive(Serialize, Deserialize)]
struct SymbolRepr {
    level: i64,
    p: u64,
    mmom: usize,
    d_kappa: u32,
    ap: MomentRepr,
    values: Vec<FiniteDist>,
}

pub(crate) fn moment_repr(m: &PadicNum, prec: u32) -> Result<MomentRepr, PadicError> {
    Ok(MomentRepr { prec, residue: m.residue(prec)?.to_string() })
}

pub(crate) fn moment_from_repr(p: u64, repr: &MomentRepr) -> Result<PadicNum, String> {
    let residue = BigUint::from_str(&repr.residue)
        .map_err(|e| format!("bad residue string `{}`: {e}", repr.residue))?;
    Ok(PadicNum::from_residue(p, &residue, repr.prec))
}

impl Serialize for FiniteDist {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mm = self.mmom();
        let moments = self
            .moments
            .iter()
            .enumerate()
            .map(|(j, m)| moment_repr(m, (mm - j) as u32))
            .collect::<Result<Vec<_>, _>>()
            .map_err(S::Error::custom)?;
        DistRepr { p: self.p, moments }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteDist {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = DistRepr::deserialize(d)?;
        let mm = repr.moments.len();
        let moments = repr
            .moments
            .iter()
            .enumerate()
            .map(|(j, m)| {
                if m.prec as usize != mm - j {
                    return Err(format!(
                        "moment {j} carries precision {}, expected the grading {}",
                        m.prec,
                        mm - j
                    ));
                }
                moment_from_repr(repr.p, m)
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        FiniteDist::from_moments(repr.p, moments).map_err(D::Error::custom)
    }
}

impl Serialize for DistSymbol {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let ap = moment_repr(&self.ap, self.ap.abs_prec().max(1) as u32)
            .map_err(S::Error::custom)?;
        SymbolRepr {
            level: self.level,
            p: self.p,
            mmom: self.mmom,
            d_kappa: self.d_kappa,
            ap,
            values: self.values.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DistSymbol {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = SymbolRepr::deserialize(d)?;
        let ap = moment_from_repr(repr.p, &repr.ap).map_err(D::Error::custom)?;
        if ap.valuation() != Some(0) {
            return Err(D::Error::custom("stored eigenvalue is not a unit"));
        }
        for v in &repr.values {
            if v.prime() != repr.p || v.mmom() != repr.mmom {
                return Err(D::Error::custom("stored value does not match the symbol header"));
            }
        }
        Ok(DistSymbol {
            level: repr.level,
            p: repr.p,
            mmom: repr.mmom,
            ap,
            d_kappa: repr.d_kappa,
            values: repr.values,
        })
    }
}
