//! Weight-2 modular symbols for Γ₀(M).
//!
//! The space is presented by Manin symbols: formal sums of points of
//! P¹(Z/M) modulo the two-term and three-term relations, which is the
//! homology of the modular curve relative to the cusps.  Paths between
//! cusps are folded into this presentation by continued fractions, and all
//! operators (Hecke, Atkin–Lehner/Fricke, complex conjugation) act through
//! their coset matrices on paths.  Everything is exact over `Q`, with the
//! integral lattice of symbols tracked separately so that eigen-symbols can
//! be normalized Z-primitively on their plus/minus sublattices.
//!
//! Eigen-symbol extraction is restricted to rational eigensystems whose
//! `U_p`-eigenvalue is a p-adic unit (here forced to ±1 by the weight-2
//! integrality bounds); irrational systems are skipped, not errors.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::linalg::{gcd_all, QMat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MsymError {
    #[error("level must be positive, got {0}")]
    BadLevel(i64),
    #[error("T_{0} needs an index prime to the level {1}")]
    IndexNotCoprime(u64, i64),
    #[error("U_{0} needs a prime divisor of the level {1}")]
    NotLevelDivisor(u64, i64),
    #[error("Atkin-Lehner needs an exact divisor of the level: {0} at level {1}")]
    NotExactDivisor(i64, i64),
    #[error("({0} : {1}) is not a point of P^1(Z/{2})")]
    MalformedCoset(i64, i64, i64),
    #[error("path matrices must be integral with determinant 1")]
    NotUnimodular,
    #[error("p = {p} must divide the level {level} exactly once")]
    SteinbergLevel { p: u64, level: i64 },
    #[error("no degeneracy map by {t} from level {from} to level {to}")]
    BadDegeneracy { t: i64, from: i64, to: i64 },
}

// ---------------------------------------------------------------------------
// Arithmetic of the modular curve X₀(M): index, elliptic points, cusps.

fn prime_factors(m: i64) -> Vec<(i64, u32)> {
    let mut m = m.abs();
    let mut out = Vec::new();
    let mut q = 2;
    while q * q <= m {
        if m % q == 0 {
            let mut e = 0;
            while m % q == 0 {
                m /= q;
                e += 1;
            }
            out.push((q, e));
        }
        q += 1;
    }
    if m > 1 {
        out.push((m, 1));
    }
    out
}

fn is_prime(n: u64) -> bool {
    n >= 2 && prime_factors(n as i64) == vec![(n as i64, 1)]
}

/// Index of Γ₀(M) in the modular group.
pub fn gamma0_index(m: i64) -> i64 {
    let mut mu = m;
    for (q, _) in prime_factors(m) {
        mu = mu / q * (q + 1);
    }
    mu
}

fn euler_phi(m: i64) -> i64 {
    let mut phi = m;
    for (q, _) in prime_factors(m) {
        phi = phi / q * (q - 1);
    }
    phi
}

/// Number of cusps of X₀(M).
pub fn cusp_number(m: i64) -> i64 {
    let mut total = 0;
    for d in 1..=m {
        if m % d == 0 {
            total += euler_phi(d.gcd(&(m / d)));
        }
    }
    total
}

/// Genus of X₀(M) by the standard ramification count.
pub fn genus_x0(m: i64) -> i64 {
    let mu = gamma0_index(m);
    let nu2 = if m % 4 == 0 {
        0
    } else {
        prime_factors(m)
            .iter()
            .map(|&(q, _)| match q % 4 {
                1 => 2,
                3 => 0,
                _ => 1, // q = 2
            })
            .product()
    };
    let nu3 = if m % 9 == 0 {
        0
    } else {
        prime_factors(m)
            .iter()
            .map(|&(q, _)| match q % 3 {
                1 => 2,
                2 => 0,
                _ => 1, // q = 3
            })
            .product::<i64>()
    };
    let nu_inf = cusp_number(m);
    let twelve_g = 12 + mu - 3 * nu2 - 4 * nu3 - 6 * nu_inf;
    assert_eq!(twelve_g % 12, 0, "genus formula must be integral");
    twelve_g / 12
}

// ---------------------------------------------------------------------------
// Cusps and 2×2 integer matrices.

/// A cusp `num/den` of the extended upper half plane, in lowest terms with
/// `den ≥ 0`; infinity is `1/0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cusp {
    num: BigInt,
    den: BigInt,
}

impl Cusp {
    pub fn infinity() -> Self {
        Cusp { num: BigInt::one(), den: BigInt::zero() }
    }

    pub fn new(num: i64, den: i64) -> Self {
        Cusp::from_big(BigInt::from(num), BigInt::from(den))
    }

    pub fn from_big(num: BigInt, den: BigInt) -> Self {
        assert!(!(num.is_zero() && den.is_zero()), "0/0 is not a cusp");
        let g = num.gcd(&den);
        let (mut num, mut den) = (num / &g, den / g);
        if den.is_negative() || (den.is_zero() && num.is_negative()) {
            num = -num;
            den = -den;
        }
        Cusp { num, den }
    }

    pub fn is_infinity(&self) -> bool {
        self.den.is_zero()
    }

    pub fn numer(&self) -> &BigInt {
        &self.num
    }

    pub fn denom(&self) -> &BigInt {
        &self.den
    }

    /// An inverse of the numerator modulo the denominator (any choice works
    /// for the equivalence criterion below); for infinity it is ±1.
    fn num_inverse(&self) -> BigInt {
        if self.den.is_zero() {
            return self.num.clone();
        }
        if self.den.is_one() {
            return BigInt::zero();
        }
        let e = self.num.extended_gcd(&self.den);
        assert!(e.gcd.is_one());
        e.x.mod_floor(&self.den)
    }

    /// Γ₀(level)-equivalence of cusps: `p₁/q₁ ~ p₂/q₂` exactly when
    /// `s₁q₂ ≡ s₂q₁ (mod gcd(q₁q₂, level))` with `sᵢ ≡ pᵢ⁻¹ (mod qᵢ)`.
    pub fn equivalent_mod(&self, other: &Cusp, level: i64) -> bool {
        let n = BigInt::from(level);
        let g = (&self.den * &other.den).gcd(&n);
        let lhs = self.num_inverse() * &other.den - other.num_inverse() * &self.den;
        lhs.mod_floor(&g).is_zero()
    }
}

impl fmt::Display for Cusp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinity() {
            write!(f, "oo")
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// A 2×2 integer matrix acting on cusps by fractional-linear maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mat2 {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

impl Mat2 {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2 { a: a.into(), b: b.into(), c: c.into(), d: d.into() }
    }

    pub fn identity() -> Self {
        Mat2::new(1, 0, 0, 1)
    }

    pub fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn apply(&self, x: &Cusp) -> Cusp {
        Cusp::from_big(
            &self.a * x.numer() + &self.b * x.denom(),
            &self.c * x.numer() + &self.d * x.denom(),
        )
    }

    pub fn from_big(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        Mat2 {
            a: &self.a * &rhs.a + &self.b * &rhs.c,
            b: &self.a * &rhs.b + &self.b * &rhs.d,
            c: &self.c * &rhs.a + &self.d * &rhs.c,
            d: &self.c * &rhs.b + &self.d * &rhs.d,
        }
    }

    /// Inverse of a determinant-1 matrix (the adjugate).
    pub fn inv_unimodular(&self) -> Mat2 {
        assert!(self.det().is_one(), "inverse is only taken of determinant-1 matrices");
        Mat2 { a: self.d.clone(), b: -&self.b, c: -&self.c, d: self.a.clone() }
    }
}

// ---------------------------------------------------------------------------
// P¹(Z/M) with canonical representatives.

fn modinv(a: i64, m: i64) -> Option<i64> {
    if m == 1 {
        return Some(0);
    }
    let e = a.rem_euclid(m).extended_gcd(&m);
    (e.gcd == 1).then(|| e.x.rem_euclid(m))
}

/// Canonical representative of `(u : v)` in P¹(Z/m), or `None` when
/// `gcd(u, v, m) > 1` so the pair is not a projective point.
fn p1_normalize(m: i64, u: i64, v: i64) -> Option<(i64, i64)> {
    if m == 1 {
        return Some((0, 0));
    }
    let u = u.rem_euclid(m);
    let v = v.rem_euclid(m);
    if u == 0 {
        return (v.gcd(&m) == 1).then_some((0, 1));
    }
    let g = u.gcd(&m);
    if g.gcd(&v) != 1 {
        return None;
    }
    // A unit s with s·u ≡ g (mod m).
    let step = m / g;
    let mut s = modinv(u / g, step).expect("u/g is a unit modulo m/g");
    if s == 0 {
        s = step; // keep s positive so the gcd loop below is meaningful
    }
    while s.gcd(&m) != 1 {
        s += step;
    }
    let v0 = (s as i128 * v as i128).rem_euclid(m as i128) as i64;
    // The stabilizer of u = g under unit scaling is {t ≡ 1 mod m/g}; pick
    // the minimal second coordinate over that orbit.
    let mut best = v0;
    for k in 1..g {
        let t = 1 + k * step;
        if t.gcd(&m) == 1 {
            let cand = (t as i128 * v0 as i128).rem_euclid(m as i128) as i64;
            best = best.min(cand);
        }
    }
    Some((g, best))
}

#[derive(Debug)]
struct P1Table {
    m: i64,
    reps: Vec<(i64, i64)>,
    index: HashMap<(i64, i64), usize>,
}

impl P1Table {
    fn build(m: i64) -> Self {
        let mut reps = Vec::new();
        let mut index = HashMap::new();
        for u in 0..m.max(1) {
            for v in 0..m.max(1) {
                if let Some(rep) = p1_normalize(m, u, v) {
                    index.entry(rep).or_insert_with(|| {
                        reps.push(rep);
                        reps.len() - 1
                    });
                }
            }
        }
        P1Table { m, reps, index }
    }

    fn lookup(&self, u: i64, v: i64) -> Option<usize> {
        p1_normalize(self.m, u, v).and_then(|rep| self.index.get(&rep).copied())
    }

    fn lookup_big(&self, u: &BigInt, v: &BigInt) -> Option<usize> {
        let m = BigInt::from(self.m);
        let ur = u.mod_floor(&m).to_i64().expect("residue fits i64");
        let vr = v.mod_floor(&m).to_i64().expect("residue fits i64");
        self.lookup(ur, vr)
    }
}

/// Extend the row `(c, d)` (a point of P¹(Z/m)) to a determinant-1 integer
/// matrix whose bottom row reduces to it.
fn sl2_lift(rep: (i64, i64), m: i64) -> Mat2 {
    if m == 1 {
        return Mat2::identity();
    }
    let (c, d0) = rep;
    let mut d = d0;
    let mut k = 0;
    while c.gcd(&d) != 1 {
        d += m;
        k += 1;
        assert!(k <= 4 * m, "no coprime lift found");
    }
    let e = d.extended_gcd(&c);
    assert_eq!(e.gcd, 1);
    // e.x·d + e.y·c = 1, so the matrix below has determinant 1.
    Mat2 { a: e.x.into(), b: (-e.y).into(), c: c.into(), d: d.into() }
}

// ---------------------------------------------------------------------------
// The symbol space.

/// Weight-2 modular symbols of level M over `Q`: the Manin presentation,
/// the boundary map to cusp classes, the cuspidal subspace, and the
/// integral lattices used for Z-primitive normalization.
#[derive(Debug)]
pub struct SymbolSpace {
    level: i64,
    p1: P1Table,
    lifts: Vec<Mat2>,
    /// Expresses each Manin generator in the quotient basis (dim × #gens).
    reduce: QMat,
    /// P¹ indices of the generators that survive as the free basis.
    basis_reps: Vec<usize>,
    boundary: QMat,
    cusps: Vec<Cusp>,
    cuspidal: QMat,
    conj: QMat,
    lattice_cuspidal: QMat,
    lattice_plus: QMat,
    lattice_minus: QMat,
    genus: i64,
}

/// Operator tags for [`hecke`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeckeOp {
    /// `T_n` for an index prime to the level (composite indices allowed).
    T(u64),
    /// `U_q` for a prime divisor of the level.
    U(u64),
    /// Partial Atkin–Lehner involution for an exact divisor of the level.
    AtkinLehner(i64),
    /// The full Fricke involution.
    Fricke,
    /// Complex conjugation.
    Conj,
}

/// Half of an eigen-symbol under complex conjugation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolPart {
    Plus,
    Minus,
}

pub fn build_space(level: i64) -> Result<SymbolSpace, MsymError> {
    if level < 1 {
        return Err(MsymError::BadLevel(level));
    }
    let p1 = P1Table::build(level);
    let n = p1.reps.len();
    let lifts: Vec<Mat2> = p1.reps.iter().map(|&r| sl2_lift(r, level)).collect();

    // Two-term and three-term relations: x + xS = 0, x + xT + xT² = 0,
    // acting on bottom rows by (c,d)·S = (d,−c) and (c,d)·T = (d,−c−d).
    let mut rows = Vec::with_capacity(2 * n);
    for (i, &(c, d)) in p1.reps.iter().enumerate() {
        let mut two = vec![BigRational::zero(); n];
        two[i] += BigRational::one();
        let s = p1.lookup(d, -c).expect("S preserves P¹");
        two[s] += BigRational::one();
        rows.push(two);

        let mut three = vec![BigRational::zero(); n];
        three[i] += BigRational::one();
        let t1 = p1.lookup(d, -c - d).expect("T preserves P¹");
        three[t1] += BigRational::one();
        let (tc, td) = p1.reps[t1];
        let t2 = p1.lookup(td, -tc - td).expect("T preserves P¹");
        three[t2] += BigRational::one();
        rows.push(three);
    }
    let relations = QMat::from_rows(rows);
    let (rr, pivots) = relations.rref();
    let free: Vec<usize> = (0..n).filter(|j| !pivots.contains(j)).collect();
    let dim = free.len();

    let mut reduce = QMat::zero(dim, n);
    for (f, &j) in free.iter().enumerate() {
        reduce.set(f, j, BigRational::one());
    }
    for (row, &pj) in pivots.iter().enumerate() {
        for (f, &j) in free.iter().enumerate() {
            reduce.set(f, pj, -rr.get(row, j).clone());
        }
    }

    // Boundary: the generator with lift [[a,b],[c,d]] is the path from b/d
    // to a/c, so its boundary is [a/c] − [b/d] on cusp classes.
    let mut cusps: Vec<Cusp> = Vec::new();
    let class_of = |cusp: Cusp, cusps: &mut Vec<Cusp>| -> usize {
        if let Some(k) = cusps.iter().position(|c| c.equivalent_mod(&cusp, level)) {
            k
        } else {
            cusps.push(cusp);
            cusps.len() - 1
        }
    };
    let mut bnd_cols: Vec<(usize, usize)> = Vec::with_capacity(n);
    for g in &lifts {
        let to = class_of(Cusp::from_big(g.a.clone(), g.c.clone()), &mut cusps);
        let from = class_of(Cusp::from_big(g.b.clone(), g.d.clone()), &mut cusps);
        bnd_cols.push((to, from));
    }
    let ncusps = cusps.len();
    assert_eq!(ncusps as i64, cusp_number(level), "cusp classes match the divisor count");

    // The boundary in reduced coordinates is read off on the free
    // generators; well-definedness on the quotient is asserted below.
    let mut boundary = QMat::zero(ncusps, dim);
    for (f, &j) in free.iter().enumerate() {
        let (to, from) = bnd_cols[j];
        let x = boundary.get(to, f) + BigRational::one();
        boundary.set(to, f, x);
        let x = boundary.get(from, f) - BigRational::one();
        boundary.set(from, f, x);
    }
    let mut bnd_gens = QMat::zero(ncusps, n);
    for (j, &(to, from)) in bnd_cols.iter().enumerate() {
        let x = bnd_gens.get(to, j) + BigRational::one();
        bnd_gens.set(to, j, x);
        let x = bnd_gens.get(from, j) - BigRational::one();
        bnd_gens.set(from, j, x);
    }
    assert_eq!(boundary.mul(&reduce), bnd_gens, "boundary factors through the relations");

    let cuspidal = boundary.right_kernel();
    let genus = genus_x0(level);
    assert_eq!(cuspidal.cols() as i64, 2 * genus, "cuspidal dimension is twice the genus");
    assert_eq!(boundary.rank() as i64, ncusps as i64 - 1, "boundary hits degree-zero divisors");
    assert_eq!(dim as i64, 2 * genus + ncusps as i64 - 1, "relative homology dimension");

    let mut space = SymbolSpace {
        level,
        p1,
        lifts,
        reduce,
        basis_reps: free,
        boundary,
        cusps,
        cuspidal,
        conj: QMat::zero(0, 0),
        lattice_cuspidal: QMat::zero(0, 0),
        lattice_plus: QMat::zero(0, 0),
        lattice_minus: QMat::zero(0, 0),
        genus,
    };
    space.conj = space.coset_action(&[Mat2::new(-1, 0, 0, 1)]);

    // Integral structure: the lattice spanned by all generator images, its
    // cuspidal part, and the ±-sublattices under conjugation.  Kernels are
    // taken saturated so the bases generate honest direct summands.
    let (gens_int, den) = space.reduce.to_integer();
    let h = gens_int
        .column_lattice_basis()
        .to_rational()
        .scale(&BigRational::new(BigInt::one(), den));
    assert_eq!(h.cols(), dim, "generators span the space");
    let (bh, _) = space.boundary.mul(&h).to_integer();
    let k0 = bh.integer_right_kernel().to_rational();
    space.lattice_cuspidal = h.mul(&k0);
    assert_eq!(space.lattice_cuspidal.cols() as i64, 2 * genus);
    let eye = QMat::identity(dim);
    for sign in [1i64, -1] {
        let shifted = space.conj.sub(&eye.scale(&BigRational::from_integer(sign.into())));
        let (m_int, _) = shifted.mul(&space.lattice_cuspidal).to_integer();
        let k = m_int.integer_right_kernel().to_rational();
        let lat = space.lattice_cuspidal.mul(&k);
        assert_eq!(lat.cols() as i64, genus, "plus and minus sublattices have rank g");
        if sign == 1 {
            space.lattice_plus = lat;
        } else {
            space.lattice_minus = lat;
        }
    }
    Ok(space)
}

impl SymbolSpace {
    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn genus(&self) -> i64 {
        self.genus
    }

    /// Dimension of the full relative-homology space.
    pub fn dim(&self) -> usize {
        self.reduce.rows()
    }

    pub fn cuspidal_dim(&self) -> usize {
        self.cuspidal.cols()
    }

    pub fn generator_count(&self) -> usize {
        self.p1.reps.len()
    }

    /// Determinant-1 lift of the i-th Manin generator.
    pub fn generator_lift(&self, i: usize) -> &Mat2 {
        &self.lifts[i]
    }

    pub fn cusp_representatives(&self) -> &[Cusp] {
        &self.cusps
    }

    pub fn boundary_matrix(&self) -> &QMat {
        &self.boundary
    }

    pub fn cuspidal_basis(&self) -> &QMat {
        &self.cuspidal
    }

    /// Index of the generator reached from generator `i` by right action
    /// of an integral matrix (through its bottom-row class).
    pub fn act_index(&self, i: usize, h: &Mat2) -> Option<usize> {
        let (c, d) = self.p1.reps[i];
        let (cb, db) = (BigInt::from(c), BigInt::from(d));
        let u = &cb * &h.a + &db * &h.c;
        let v = &cb * &h.b + &db * &h.d;
        self.p1.lookup_big(&u, &v)
    }

    /// Reduced coordinates of the path from one cusp to another.
    pub fn path_vector(&self, from: &Cusp, to: &Cusp) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); self.dim()];
        self.accumulate_leg(to, 1, &mut out);
        self.accumulate_leg(from, -1, &mut out);
        out
    }

    /// Adds `sign` times the path {∞ → cusp}, decomposed along continued
    /// fraction convergents into unimodular (Manin) paths.
    fn accumulate_leg(&self, cusp: &Cusp, sign: i64, out: &mut [BigRational]) {
        let coeff = BigRational::from_integer(sign.into());
        for (idx, _) in self.cusp_legs(cusp, false) {
            for (r, slot) in out.iter_mut().enumerate() {
                let add = self.reduce.get(r, idx) * &coeff;
                if !add.is_zero() {
                    *slot += add;
                }
            }
        }
    }

    /// Unimodular legs of the path {∞ → cusp} — reversed leg by leg when
    /// `fold` is set — as pairs of a generator index and a determinant-1
    /// matrix `g` whose path is {g·0 → g·∞} and whose bottom row lies in
    /// the generator's projective class.
    fn cusp_legs(&self, cusp: &Cusp, fold: bool) -> Vec<(usize, Mat2)> {
        let mut out = Vec::new();
        if cusp.is_infinity() {
            return out;
        }
        // Convergents p_k/q_k of num/den, seeded at p_{-2}/q_{-2} = 0/1 and
        // p_{-1}/q_{-1} = 1/0; the step {p_{k-1}/q_{k-1} → p_k/q_k} is the
        // Manin symbol with bottom row (q_k, ±q_{k-1}), the sign fixing the
        // determinant to +1.
        let (mut p2, mut q2) = (BigInt::zero(), BigInt::one());
        let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
        let (mut x, mut y) = (cusp.numer().clone(), cusp.denom().clone());
        let mut flip = true; // determinant of the k-th step is (−1)^{k+1}
        while !y.is_zero() {
            let a = x.div_floor(&y);
            let p = &a * &p1 + &p2;
            let q = &a * &q1 + &q2;
            let (top, second) = if flip { (-p1.clone(), -q1.clone()) } else { (p1.clone(), q1.clone()) };
            let g = if fold {
                // Right-multiplying by [[0,−1],[1,0]] traverses the leg
                // backwards while keeping determinant 1.
                Mat2 { a: top, b: -p.clone(), c: second, d: -q.clone() }
            } else {
                Mat2 { a: p.clone(), b: top, c: q.clone(), d: second }
            };
            let idx = self
                .p1
                .lookup_big(&g.c, &g.d)
                .expect("unimodular rows are projective points");
            out.push((idx, g));
            let rem = &x - &a * &y;
            x = std::mem::replace(&mut y, rem);
            p2 = std::mem::replace(&mut p1, p);
            q2 = std::mem::replace(&mut q1, q);
            flip = !flip;
        }
        out
    }

    /// The path {from → to} cut into unimodular legs {g·0 → g·∞}.  Each
    /// matrix has determinant 1 and bottom row in the class of the paired
    /// generator index, and the legs concatenate, as formal paths, to the
    /// input path.
    pub fn path_legs(&self, from: &Cusp, to: &Cusp) -> Vec<(usize, Mat2)> {
        let mut legs = self.cusp_legs(to, false);
        legs.extend(self.cusp_legs(from, true));
        legs
    }

    /// Matrix of `x ↦ Σ_h {h·(from), h·(to)}` over the coset list, where
    /// each basis generator is the path attached to its lift.
    fn coset_action(&self, mats: &[Mat2]) -> QMat {
        let d = self.dim();
        let mut out = QMat::zero(d, d);
        for (col, &rep) in self.basis_reps.iter().enumerate() {
            let g = &self.lifts[rep];
            let from = Cusp::from_big(g.b.clone(), g.d.clone());
            let to = Cusp::from_big(g.a.clone(), g.c.clone());
            for h in mats {
                let v = self.path_vector(&h.apply(&from), &h.apply(&to));
                for (r, entry) in v.iter().enumerate() {
                    if !entry.is_zero() {
                        let x = out.get(r, col) + entry;
                        out.set(r, col, x);
                    }
                }
            }
        }
        out
    }

    /// Restrict an operator on the full space to the cuspidal subspace.
    pub fn restrict_cuspidal(&self, t: &QMat) -> QMat {
        self.cuspidal
            .solve_right(&t.mul(&self.cuspidal))
            .expect("operator preserves the cuspidal subspace")
    }
}

/// Matrix of an operator in the reduced basis of the full symbol space.
pub fn hecke(space: &SymbolSpace, op: HeckeOp) -> Result<QMat, MsymError> {
    let m = space.level;
    let mats = match op {
        HeckeOp::T(n) => {
            if n == 0 || (n as i64).gcd(&m) != 1 {
                return Err(MsymError::IndexNotCoprime(n, m));
            }
            let mut mats = Vec::new();
            for a in 1..=n {
                if n % a == 0 {
                    let d = (n / a) as i64;
                    for b in 0..d {
                        mats.push(Mat2::new(a as i64, b, 0, d));
                    }
                }
            }
            mats
        }
        HeckeOp::U(q) => {
            if !is_prime(q) || m % (q as i64) != 0 {
                return Err(MsymError::NotLevelDivisor(q, m));
            }
            (0..q as i64).map(|r| Mat2::new(1, r, 0, q as i64)).collect()
        }
        HeckeOp::AtkinLehner(q) => {
            if q <= 0 || m % q != 0 || (m / q).gcd(&q) != 1 {
                return Err(MsymError::NotExactDivisor(q, m));
            }
            let e = q.extended_gcd(&(m / q));
            // q·x − (m/q)·(−y) = 1 gives the determinant-q normalizer.
            vec![Mat2::new(q * e.x, -e.y, m, q)]
        }
        HeckeOp::Fricke => vec![Mat2::new(0, -1, m, 0)],
        HeckeOp::Conj => vec![Mat2::new(-1, 0, 0, 1)],
    };
    // Sanity on the Atkin–Lehner determinant; all others are immediate.
    if let HeckeOp::AtkinLehner(q) = op {
        assert_eq!(mats[0].det(), BigInt::from(q));
    }
    Ok(space.coset_action(&mats))
}

// ---------------------------------------------------------------------------
// Eigen-symbols.

/// A rational Hecke eigen-symbol with unit `U_p`-eigenvalue, carried by its
/// plus/minus dual vectors.  The stored parts are the values on fixed
/// Z-bases of the plus/minus cuspidal lattices, scaled to be integral with
/// gcd 1 (first nonzero entry positive).
#[derive(Debug, Clone)]
pub struct EigenSymbol {
    level: i64,
    p: u64,
    eigen: BTreeMap<u64, BigRational>,
    plus_part: Vec<BigInt>,
    minus_part: Vec<BigInt>,
    w_tame: i64,
    w_level: i64,
    dual_plus: Vec<BigRational>,
    dual_minus: Vec<BigRational>,
}

impl EigenSymbol {
    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn a(&self, q: u64) -> Option<&BigRational> {
        self.eigen.get(&q)
    }

    pub fn a_p(&self) -> &BigRational {
        &self.eigen[&self.p]
    }

    pub fn eigenvalues(&self) -> &BTreeMap<u64, BigRational> {
        &self.eigen
    }

    pub fn plus_part(&self) -> &[BigInt] {
        &self.plus_part
    }

    pub fn minus_part(&self) -> &[BigInt] {
        &self.minus_part
    }

    /// Fricke eigenvalue at the tame level (the level divided by p);
    /// `+1` by convention when the tame level is 1.
    pub fn w_tame(&self) -> i64 {
        self.w_tame
    }

    /// Fricke eigenvalue at the full level.
    pub fn w_level(&self) -> i64 {
        self.w_level
    }

    fn dual(&self, part: SymbolPart) -> &[BigRational] {
        match part {
            SymbolPart::Plus => &self.dual_plus,
            SymbolPart::Minus => &self.dual_minus,
        }
    }

    /// Value of the chosen part on the path between two cusps.
    pub fn value_on_path(
        &self,
        space: &SymbolSpace,
        part: SymbolPart,
        from: &Cusp,
        to: &Cusp,
    ) -> BigRational {
        let v = space.path_vector(from, to);
        dot(self.dual(part), &v)
    }
}

fn dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn row_times(phi: &[BigRational], m: &QMat) -> Vec<BigRational> {
    (0..m.cols()).map(|j| dot(phi, &m.col(j))).collect()
}

/// If `t` acts on the column span of `basis` as a scalar, return it.
fn scalar_on(basis: &QMat, t: &QMat) -> Option<BigRational> {
    let x = basis.solve_right(&t.mul(basis))?;
    if x.rows() == 0 {
        return Some(BigRational::zero());
    }
    let lambda = x.get(0, 0).clone();
    let expect = QMat::identity(x.rows()).scale(&lambda);
    (x == expect).then_some(lambda)
}

/// Integer roots of a monic integral polynomial within `[-bound, bound]`.
fn integer_roots_in(poly: &[BigRational], bound: i64) -> Vec<i64> {
    assert!(poly.iter().all(|c| c.denom().is_one()), "integral polynomial expected");
    let eval = |x: i64| -> BigInt {
        let mut acc = BigInt::zero();
        for c in poly.iter().rev() {
            acc = acc * BigInt::from(x) + c.numer();
        }
        acc
    };
    (-bound..=bound).filter(|&x| eval(x).is_zero()).collect()
}

fn primes_from(start: u64) -> impl Iterator<Item = u64> {
    (start..).filter(|&n| is_prime(n))
}

/// Extract the rational newform eigen-symbols at level `M = p·N` with
/// p-th coefficient a p-adic unit, together with eigenvalues for all
/// primes up to `coeff_bound`.  Irrational eigensystems are skipped; an
/// empty result is not an error.
pub fn newform_eigen(
    space: &SymbolSpace,
    p: u64,
    coeff_bound: u64,
) -> Result<Vec<EigenSymbol>, MsymError> {
    let m = space.level;
    let pi = p as i64;
    if !is_prime(p) || m % pi != 0 || (m / pi) % pi == 0 {
        return Err(MsymError::SteinbergLevel { p, level: m });
    }
    if space.genus == 0 {
        return Ok(Vec::new());
    }

    // Agreement of eigensystems at all primes up to the Sturm bound forces
    // equality, so refining kernels by those primes isolates each system.
    let sturm = gamma0_index(m) / 6 + 1;
    let up = hecke(space, HeckeOp::U(p))?;
    let a_up = space.restrict_cuspidal(&up);
    let mut restricted: BTreeMap<u64, QMat> = BTreeMap::new();
    let mut sep_primes: Vec<u64> = Vec::new();
    for q in primes_from(2).filter(|&q| (q as i64).gcd(&m) == 1) {
        if q as i64 > sturm && sep_primes.len() >= 2 {
            break;
        }
        restricted.insert(q, space.restrict_cuspidal(&hecke(space, HeckeOp::T(q))?));
        sep_primes.push(q);
    }

    let eye = |k: usize| QMat::identity(k);
    let mut accepted: Vec<(BigRational, QMat)> = Vec::new();
    for eps in [1i64, -1] {
        let shifted = a_up.sub(&eye(a_up.rows()).scale(&BigRational::from_integer(eps.into())));
        let seed = shifted.right_kernel();
        if seed.cols() == 0 {
            continue;
        }
        let mut pieces = vec![seed];
        for &q in &sep_primes {
            let mut next = Vec::new();
            for piece in pieces {
                if piece.cols() <= 2 {
                    next.push(piece);
                    continue;
                }
                let aq = piece
                    .solve_right(&restricted[&q].mul(&piece))
                    .expect("Hecke stable piece");
                let bound = 2 * (q as f64).sqrt().ceil() as i64;
                let roots = integer_roots_in(&aq.charpoly(), bound);
                let mut covered = 0;
                for a in &roots {
                    let ker = aq
                        .sub(&eye(aq.rows()).scale(&BigRational::from_integer((*a).into())))
                        .right_kernel();
                    if ker.cols() > 0 {
                        covered += ker.cols();
                        next.push(piece.mul(&ker));
                    }
                }
                // Whatever is not covered by rational eigenvalues of T_q
                // stays as one (irrational) piece; it can still split at a
                // later prime, and is dropped at the end otherwise.
                if covered < piece.cols() {
                    let rest = complement_in(&piece, covered, &restricted[&q], &roots);
                    next.push(rest);
                }
            }
            pieces = next;
        }
        for piece in pieces {
            if piece.cols() != 2 {
                continue;
            }
            // Verify the piece carries a single rational system.
            let rational = sep_primes
                .iter()
                .all(|q| scalar_on(&piece, &restricted[q]).is_some());
            if rational {
                accepted.push((BigRational::from_integer(eps.into()), piece));
            }
        }
    }

    let conj_t = space.conj.transpose();
    let mut out = Vec::new();
    for (a_p, piece) in accepted {
        // Eigenvalue map over the requested primes.
        let mut eigen = BTreeMap::new();
        for q in primes_from(2).take_while(|&q| q <= coeff_bound) {
            let op = if (q as i64).gcd(&m) == 1 { HeckeOp::T(q) } else { HeckeOp::U(q) };
            let aq = space.restrict_cuspidal(&hecke(space, op)?);
            let val = scalar_on(&piece, &aq).expect("eigen piece");
            eigen.insert(q, val);
        }
        eigen.insert(p, a_p.clone());

        // Dual vectors: functionals on the full space with this system.
        let mut rows: Vec<Vec<BigRational>> = Vec::new();
        for &q in &sep_primes {
            let tq = hecke(space, HeckeOp::T(q))?.transpose();
            let a = scalar_on(&piece, &restricted[&q]).expect("eigen piece");
            let shifted = tq.sub(&QMat::identity(tq.rows()).scale(&a));
            rows.extend((0..shifted.rows()).map(|i| shifted.row(i)));
        }
        let upt = up.transpose();
        let shifted = upt.sub(&QMat::identity(upt.rows()).scale(&a_p));
        rows.extend((0..shifted.rows()).map(|i| shifted.row(i)));
        let dual2 = QMat::from_rows(rows).right_kernel();
        assert_eq!(dual2.cols(), 2, "dual eigenspace is two-dimensional");

        // Split the dual plane by conjugation and normalize each half on
        // the matching lattice.
        let mut halves: Vec<(SymbolPart, Vec<BigRational>, Vec<BigInt>)> = Vec::new();
        for (part, sign) in [(SymbolPart::Plus, 1i64), (SymbolPart::Minus, -1)] {
            let restr = dual2
                .solve_right(&conj_t.mul(&dual2))
                .expect("conjugation preserves the dual plane");
            let ker = restr
                .sub(&QMat::identity(2).scale(&BigRational::from_integer(sign.into())))
                .right_kernel();
            assert_eq!(ker.cols(), 1, "each conjugation sign appears once");
            let phi: Vec<BigRational> = dual2.mul(&ker).col(0);
            let lattice = match part {
                SymbolPart::Plus => &space.lattice_plus,
                SymbolPart::Minus => &space.lattice_minus,
            };
            let raw: Vec<BigRational> = row_times(&phi, lattice);
            let (phi, values) = primitive_scale(&phi, &raw);
            halves.push((part, phi, values));
        }

        let w_level = scalar_on(&piece, &space.restrict_cuspidal(&hecke(space, HeckeOp::Fricke)?))
            .expect("Fricke eigenvalue");
        assert!(w_level.denom().is_one());
        let tame = m / pi;
        let w_tame = if tame == 1 {
            1
        } else {
            let al = space.restrict_cuspidal(&hecke(space, HeckeOp::AtkinLehner(tame))?);
            let w = scalar_on(&piece, &al).expect("Atkin-Lehner eigenvalue");
            assert!(w.denom().is_one());
            w.numer().to_i64().expect("sign fits i64")
        };

        let (dual_plus, plus_part) = halves
            .iter()
            .find(|(p, _, _)| *p == SymbolPart::Plus)
            .map(|(_, phi, v)| (phi.clone(), v.clone()))
            .unwrap();
        let (dual_minus, minus_part) = halves
            .iter()
            .find(|(p, _, _)| *p == SymbolPart::Minus)
            .map(|(_, phi, v)| (phi.clone(), v.clone()))
            .unwrap();
        out.push(EigenSymbol {
            level: m,
            p,
            eigen,
            plus_part,
            minus_part,
            w_tame,
            w_level: w_level.numer().to_i64().expect("sign fits i64"),
            dual_plus,
            dual_minus,
        });
    }
    out.sort_by(|x, y| {
        let kx: Vec<_> = x.eigen.values().cloned().collect();
        let ky: Vec<_> = y.eigen.values().cloned().collect();
        kx.partial_cmp(&ky).unwrap()
    });
    Ok(out)
}

/// A Hecke-stable complement of the rational eigenspaces inside `piece`:
/// the image of `∏(T_q − a)` over the rational roots, which annihilates
/// those eigenspaces and is invertible on everything else (the operators
/// act semisimply here, so dimensions are complementary).
fn complement_in(piece: &QMat, covered: usize, tq: &QMat, roots: &[i64]) -> QMat {
    let mut img = piece.clone();
    for &a in roots {
        let shifted =
            tq.sub(&QMat::identity(tq.rows()).scale(&BigRational::from_integer(a.into())));
        img = shifted.mul(&img);
    }
    // A basis of the column space, read off the reduced rows of the
    // transpose.
    let (r, _) = img.transpose().rref();
    let cols: Vec<Vec<BigRational>> = (0..r.rows())
        .map(|i| r.row(i))
        .filter(|row| row.iter().any(|x| !x.is_zero()))
        .collect();
    let rest = if cols.is_empty() {
        QMat::zero(piece.rows(), 0)
    } else {
        QMat::from_cols(cols)
    };
    assert_eq!(rest.cols() + covered, piece.cols(), "image complements the rational part");
    rest
}

/// Scale a functional so its values on the given lattice basis are
/// integral with gcd 1 and positive leading entry.  Returns the scaled
/// functional and the integral values.
fn primitive_scale(
    phi: &[BigRational],
    values: &[BigRational],
) -> (Vec<BigRational>, Vec<BigInt>) {
    assert!(values.iter().any(|v| !v.is_zero()), "eigen-symbol vanishes on its lattice");
    let mut den = BigInt::one();
    for v in values {
        den = den.lcm(v.denom());
    }
    let ints: Vec<BigInt> = values
        .iter()
        .map(|v| (v * BigRational::from_integer(den.clone())).to_integer())
        .collect();
    let g = gcd_all(&ints);
    let mut scale = BigRational::new(den, g);
    let scaled: Vec<BigInt> = values
        .iter()
        .map(|v| (v * &scale).to_integer())
        .collect();
    if let Some(first) = scaled.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            scale = -scale;
        }
    }
    let final_vals: Vec<BigInt> = values.iter().map(|v| (v * &scale).to_integer()).collect();
    let phi = phi.iter().map(|x| x * &scale).collect();
    (phi, final_vals)
}

// ---------------------------------------------------------------------------
// Evaluation, congruence numbers, degeneracy maps.

/// Value of an eigen-symbol part on the path from `r` to `γ·r`, moved by a
/// level-structure coset `(c : d)`: the evaluation happens along
/// `{g·r → g·γ·r}` for the determinant-1 lift `g` of the coset.
pub fn eval_path(
    space: &SymbolSpace,
    sym: &EigenSymbol,
    part: SymbolPart,
    r: &Cusp,
    gamma: &Mat2,
    coset: (i64, i64),
) -> Result<BigRational, MsymError> {
    if gamma.det() != BigInt::one() {
        return Err(MsymError::NotUnimodular);
    }
    let rep = p1_normalize(space.level, coset.0, coset.1)
        .ok_or(MsymError::MalformedCoset(coset.0, coset.1, space.level))?;
    let g = sl2_lift(rep, space.level);
    let from = g.apply(r);
    let to = g.apply(&gamma.apply(r));
    Ok(sym.value_on_path(space, part, &from, &to))
}

/// The congruence number of the eigen-symbol: the exponent of the quotient
/// of the integral cuspidal lattice by the direct sum of its saturated
/// eigen-part and the saturated complement.
pub fn congruence_number(space: &SymbolSpace, sym: &EigenSymbol) -> BigInt {
    let d = space.dim();
    // Vector-side eigenspace: common kernel of (T_q − a_q) over enough
    // primes together with (U_p − a_p), inside the full space.
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    for (&q, a) in sym.eigen.iter().take(4) {
        let op = if (q as i64).gcd(&space.level) == 1 {
            HeckeOp::T(q)
        } else {
            HeckeOp::U(q)
        };
        let t = hecke(space, op).expect("valid operator");
        let shifted = t.sub(&QMat::identity(d).scale(a));
        rows.extend((0..d).map(|i| shifted.row(i)));
    }
    let b_f = QMat::from_rows(rows).right_kernel();
    assert_eq!(b_f.cols(), 2, "rational eigenspace is two-dimensional");

    // Complement: cuspidal vectors killed by both dual functionals.
    let mut rows = vec![sym.dual_plus.clone(), sym.dual_minus.clone()];
    rows.extend((0..space.boundary.rows()).map(|i| space.boundary.row(i)));
    let b_c = QMat::from_rows(rows).right_kernel();
    assert_eq!(b_c.cols(), space.cuspidal_dim() - 2);

    // Express in integral cuspidal coordinates, saturate, and stack.
    let in_lattice = |b: &QMat| -> QMat {
        space
            .lattice_cuspidal
            .solve_right(b)
            .expect("inside the cuspidal subspace")
    };
    let saturate = |x: &QMat| -> QMat {
        if x.cols() == 0 {
            return QMat::zero(x.rows(), 0);
        }
        let ann = x.transpose().right_kernel().transpose();
        let (ann_int, _) = ann.to_integer();
        ann_int.integer_right_kernel().to_rational()
    };
    let lf = saturate(&in_lattice(&b_f));
    let lc = saturate(&in_lattice(&b_c));
    let stacked = lf.hstack(&lc);
    assert_eq!(stacked.rows(), stacked.cols());
    let (stacked_int, den) = stacked.to_integer();
    assert!(den.is_one(), "saturated bases are integral");
    let divisors = stacked_int.elementary_divisors();
    let last = divisors.last().cloned().unwrap_or_else(BigInt::one);
    assert!(!last.is_zero(), "eigen-part and complement span the lattice");
    last
}

/// The degeneracy map on symbols from a higher level to a divisor level,
/// sending a path {α, β} to {tα, tβ}; defined when `t · to.level` divides
/// `from.level`.  For `t = 1` this is the forgetful map.
pub fn degeneracy_push(
    from: &SymbolSpace,
    to: &SymbolSpace,
    t: i64,
) -> Result<QMat, MsymError> {
    let ok = t >= 1 && from.level % to.level == 0 && (from.level / to.level) % t == 0;
    if !ok {
        return Err(MsymError::BadDegeneracy { t, from: from.level, to: to.level });
    }
    let scale = Mat2::new(t, 0, 0, 1);
    let mut out = QMat::zero(to.dim(), from.dim());
    for (col, &rep) in from.basis_reps.iter().enumerate() {
        let g = &from.lifts[rep];
        let a = scale.apply(&Cusp::from_big(g.b.clone(), g.d.clone()));
        let b = scale.apply(&Cusp::from_big(g.a.clone(), g.c.clone()));
        let v = to.path_vector(&a, &b);
        for (r, entry) in v.iter().enumerate() {
            out.set(r, col, entry.clone());
        }
    }
    Ok(out)
}
