//! Exact dense linear algebra over `Q` and `Z`.
//!
//! Everything the symbol modules need and nothing more: reduced row echelon
//! form, right kernels, solving, characteristic polynomials over the
//! rationals, and Hermite/Smith reductions for integer lattices (saturated
//! integer kernels, lattice bases, elementary divisors).  Matrices here are
//! tiny (dimensions in the tens), so the implementations favour clarity and
//! exactness over asymptotics.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Dense row-major matrix over `Q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMat {
    rows: usize,
    cols: usize,
    a: Vec<BigRational>,
}

impl QMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        QMat { rows, cols, a: vec![BigRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMat::zero(n, n);
        for i in 0..n {
            m.set(i, i, BigRational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        QMat { rows: r, cols: c, a: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.a[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: BigRational) {
        self.a[i * self.cols + j] = x;
    }

    pub fn col(&self, j: usize) -> Vec<BigRational> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn row(&self, i: usize) -> Vec<BigRational> {
        self.a[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn transpose(&self) -> QMat {
        let mut t = QMat::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &QMat) -> QMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = QMat::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let lik = self.get(i, k);
                if lik.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let add = lik * other.get(k, j);
                    if !add.is_zero() {
                        let cur = out.get(i, j) + add;
                        out.set(i, j, cur);
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * &v[j]).sum())
            .collect()
    }

    pub fn add(&self, other: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        QMat {
            rows: self.rows,
            cols: self.cols,
            a: self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn sub(&self, other: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        QMat {
            rows: self.rows,
            cols: self.cols,
            a: self.a.iter().zip(&other.a).map(|(x, y)| x - y).collect(),
        }
    }

    pub fn scale(&self, c: &BigRational) -> QMat {
        QMat { rows: self.rows, cols: self.cols, a: self.a.iter().map(|x| x * c).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(Zero::is_zero)
    }

    /// Glue columns of `other` to the right of `self`.
    pub fn hstack(&self, other: &QMat) -> QMat {
        assert_eq!(self.rows, other.rows);
        let mut out = QMat::zero(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).clone());
            }
            for j in 0..other.cols {
                out.set(i, self.cols + j, other.get(i, j).clone());
            }
        }
        out
    }

    pub fn from_cols(cols: Vec<Vec<BigRational>>) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        assert!(cols.iter().all(|col| col.len() == r), "ragged columns");
        let mut out = QMat::zero(r, c);
        for (j, col) in cols.into_iter().enumerate() {
            for (i, x) in col.into_iter().enumerate() {
                out.set(i, j, x);
            }
        }
        out
    }

    /// Reduced row echelon form together with the pivot columns.
    pub fn rref(&self) -> (QMat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for j in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(piv) = (r..m.rows).find(|&i| !m.get(i, j).is_zero()) else {
                continue;
            };
            if piv != r {
                for k in 0..m.cols {
                    m.a.swap(piv * m.cols + k, r * m.cols + k);
                }
            }
            let inv = m.get(r, j).recip();
            for k in 0..m.cols {
                let x = m.get(r, k) * &inv;
                m.set(r, k, x);
            }
            for i in 0..m.rows {
                if i != r && !m.get(i, j).is_zero() {
                    let f = m.get(i, j).clone();
                    for k in 0..m.cols {
                        let x = m.get(i, k) - &f * m.get(r, k);
                        m.set(i, k, x);
                    }
                }
            }
            pivots.push(j);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right kernel, as matrix columns.
    pub fn right_kernel(&self) -> QMat {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|j| !pivots.contains(j)).collect();
        if free.is_empty() {
            return QMat::zero(self.cols, 0);
        }
        let mut basis = Vec::with_capacity(free.len());
        for &f in &free {
            let mut v = vec![BigRational::zero(); self.cols];
            v[f] = BigRational::one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -r.get(row, f).clone();
            }
            basis.push(v);
        }
        QMat::from_cols(basis)
    }

    /// Solve `self · X = rhs` exactly; `None` when inconsistent.  When the
    /// solution is not unique an arbitrary representative is returned.
    pub fn solve_right(&self, rhs: &QMat) -> Option<QMat> {
        assert_eq!(self.rows, rhs.rows);
        let (r, pivots) = self.hstack(rhs).rref();
        // Inconsistent iff some pivot falls in the right-hand block.
        if pivots.iter().any(|&p| p >= self.cols) {
            return None;
        }
        let mut x = QMat::zero(self.cols, rhs.cols);
        for (row, &p) in pivots.iter().enumerate() {
            for j in 0..rhs.cols {
                x.set(p, j, r.get(row, self.cols + j).clone());
            }
        }
        Some(x)
    }

    /// Coefficients `c_0, …, c_{n−1}, 1` of the characteristic polynomial
    /// `det(xI − A)`, by the Faddeev–LeVerrier recurrence.
    pub fn charpoly(&self) -> Vec<BigRational> {
        assert_eq!(self.rows, self.cols, "square matrix required");
        let n = self.rows;
        let mut coeffs = vec![BigRational::zero(); n + 1];
        coeffs[n] = BigRational::one();
        let mut m = QMat::identity(n);
        for k in 1..=n {
            m = self.mul(&m);
            let tr: BigRational = (0..n).map(|i| m.get(i, i).clone()).sum();
            let c = -tr / BigRational::from_integer(BigInt::from(k));
            coeffs[n - k] = c.clone();
            for i in 0..n {
                let x = m.get(i, i) + &c;
                m.set(i, i, x);
            }
        }
        coeffs
    }

    /// Clear denominators: the integer matrix `d·self` together with the
    /// common denominator `d > 0`.
    pub fn to_integer(&self) -> (ZMat, BigInt) {
        let mut den = BigInt::one();
        for x in &self.a {
            den = den.lcm(x.denom());
        }
        let a = self
            .a
            .iter()
            .map(|x| (x * BigRational::from_integer(den.clone())).to_integer())
            .collect();
        (ZMat { rows: self.rows, cols: self.cols, a }, den)
    }
}

/// Dense row-major matrix over `Z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZMat {
    rows: usize,
    cols: usize,
    a: Vec<BigInt>,
}

impl ZMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        ZMat { rows, cols, a: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = ZMat::zero(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        ZMat { rows: r, cols: c, a: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.a[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: BigInt) {
        self.a[i * self.cols + j] = x;
    }

    pub fn col(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rational(&self) -> QMat {
        QMat {
            rows: self.rows,
            cols: self.cols,
            a: self.a.iter().map(|x| BigRational::from_integer(x.clone())).collect(),
        }
    }

    fn swap_cols(&mut self, j1: usize, j2: usize) {
        if j1 != j2 {
            for i in 0..self.rows {
                self.a.swap(i * self.cols + j1, i * self.cols + j2);
            }
        }
    }

    fn swap_rows(&mut self, i1: usize, i2: usize) {
        if i1 != i2 {
            for j in 0..self.cols {
                self.a.swap(i1 * self.cols + j, i2 * self.cols + j);
            }
        }
    }

    /// `col_j ← col_j − q·col_k`, mirrored on the transform `v` when given.
    fn col_axpy(&mut self, j: usize, k: usize, q: &BigInt, v: Option<&mut ZMat>) {
        for i in 0..self.rows {
            let x = self.get(i, j) - q * self.get(i, k);
            self.set(i, j, x);
        }
        if let Some(v) = v {
            for i in 0..v.rows {
                let x = v.get(i, j) - q * v.get(i, k);
                v.set(i, j, x);
            }
        }
    }

    fn row_axpy(&mut self, i: usize, k: usize, q: &BigInt) {
        for j in 0..self.cols {
            let x = self.get(i, j) - q * self.get(k, j);
            self.set(i, j, x);
        }
    }

    /// Z-basis of the column lattice (column-style Hermite reduction);
    /// zero columns are dropped, so the result has full column rank.
    pub fn column_lattice_basis(&self) -> ZMat {
        let mut m = self.clone();
        let mut pivot_col = 0;
        for row in 0..m.rows {
            if pivot_col == m.cols {
                break;
            }
            // Fold all nonzero entries of this row (at or right of
            // pivot_col) into a single column by Euclidean column steps.
            loop {
                let mut nz: Vec<usize> =
                    (pivot_col..m.cols).filter(|&j| !m.get(row, j).is_zero()).collect();
                if nz.is_empty() {
                    break;
                }
                nz.sort_by_key(|&j| m.get(row, j).abs());
                let jmin = nz[0];
                m.swap_cols(pivot_col, jmin);
                if nz.len() == 1 {
                    break;
                }
                let pivot = m.get(row, pivot_col).clone();
                for j in pivot_col + 1..m.cols {
                    if !m.get(row, j).is_zero() {
                        let q = m.get(row, j).div_floor(&pivot);
                        m.col_axpy(j, pivot_col, &q, None);
                    }
                }
            }
            if !m.get(row, pivot_col).is_zero() {
                if m.get(row, pivot_col).is_negative() {
                    for i in 0..m.rows {
                        let x = -m.get(i, pivot_col).clone();
                        m.set(i, pivot_col, x);
                    }
                }
                // Reduce earlier columns against the new pivot so the form
                // is canonical enough for reuse; not strictly required.
                let pivot = m.get(row, pivot_col).clone();
                for j in 0..pivot_col {
                    let q = m.get(row, j).div_floor(&pivot);
                    if !q.is_zero() {
                        m.col_axpy(j, pivot_col, &q, None);
                    }
                }
                pivot_col += 1;
            }
        }
        let keep: Vec<Vec<BigInt>> = (0..m.cols)
            .map(|j| m.col(j))
            .filter(|c| c.iter().any(|x| !x.is_zero()))
            .collect();
        let rank = keep.len();
        let mut out = ZMat::zero(self.rows, rank);
        for (j, col) in keep.into_iter().enumerate() {
            for (i, x) in col.into_iter().enumerate() {
                out.set(i, j, x);
            }
        }
        out
    }

    /// Diagonalize by unimodular row/column operations, tracking the column
    /// transform `V` (so `self·V` is the diagonalized matrix).  Returns the
    /// diagonal entries (not yet folded into a divisibility chain) and `V`.
    fn diagonalize_with_right(&self) -> (Vec<BigInt>, ZMat) {
        let mut m = self.clone();
        let mut v = ZMat::identity(self.cols);
        let steps = self.rows.min(self.cols);
        for t in 0..steps {
            loop {
                // Minimal nonzero entry of the trailing block as the pivot.
                let mut best: Option<(usize, usize)> = None;
                for i in t..m.rows {
                    for j in t..m.cols {
                        if !m.get(i, j).is_zero()
                            && best
                                .map(|(bi, bj)| m.get(i, j).abs() < m.get(bi, bj).abs())
                                .unwrap_or(true)
                        {
                            best = Some((i, j));
                        }
                    }
                }
                let Some((bi, bj)) = best else { break };
                m.swap_rows(t, bi);
                m.swap_cols(t, bj);
                v.swap_cols(t, bj);
                let pivot = m.get(t, t).clone();
                let mut dirty = false;
                for i in t + 1..m.rows {
                    if !m.get(i, t).is_zero() {
                        let q = m.get(i, t).div_floor(&pivot);
                        m.row_axpy(i, t, &q);
                        dirty |= !m.get(i, t).is_zero();
                    }
                }
                for j in t + 1..m.cols {
                    if !m.get(t, j).is_zero() {
                        let q = m.get(t, j).div_floor(&pivot);
                        m.col_axpy(j, t, &q, Some(&mut v));
                        dirty |= !m.get(t, j).is_zero();
                    }
                }
                if !dirty {
                    break;
                }
            }
        }
        let diag = (0..steps).map(|t| m.get(t, t).abs()).collect();
        (diag, v)
    }

    /// Saturated Z-basis of `{x : self·x = 0}`, as matrix columns.
    pub fn integer_right_kernel(&self) -> ZMat {
        let (diag, v) = self.diagonalize_with_right();
        let mut cols = Vec::new();
        for j in 0..self.cols {
            let in_diag = j < diag.len() && !diag[j].is_zero();
            if !in_diag {
                cols.push(v.col(j));
            }
        }
        let mut out = ZMat::zero(self.cols, cols.len());
        for (j, col) in cols.into_iter().enumerate() {
            for (i, x) in col.into_iter().enumerate() {
                out.set(i, j, x);
            }
        }
        out
    }

    /// Elementary divisors `d_1 | d_2 | …` (nonnegative, zeros last).
    pub fn elementary_divisors(&self) -> Vec<BigInt> {
        let (mut diag, _) = self.diagonalize_with_right();
        // A diagonal form determines the divisors after gcd/lcm folding.
        let n = diag.len();
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (diag[i].clone(), diag[j].clone());
                if a.is_zero() && b.is_zero() {
                    continue;
                }
                let g = a.gcd(&b);
                let l = if g.is_zero() { BigInt::zero() } else { &a * &b / &g };
                diag[i] = g;
                diag[j] = l;
            }
        }
        diag.sort_by(|x, y| {
            if x.is_zero() || y.is_zero() {
                // Zeros (infinite quotients) sort after everything finite.
                y.is_zero().cmp(&x.is_zero()).reverse()
            } else {
                x.cmp(y)
            }
        });
        diag
    }
}

/// gcd of a slice, zero for an empty or all-zero slice.
pub fn gcd_all(xs: &[BigInt]) -> BigInt {
    xs.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x))
}
