//! Exact linear algebra over Q and Z: determinants, inverses, characteristic
//! polynomials, and Hermite normal form.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::ball::Ball;
use crate::poly::QPoly;

/// Dense rational matrix stored by rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QMat {
    rows: Vec<Vec<BigRational>>,
    ncols: usize,
}

impl fmt::Debug for QMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            let s: Vec<String> = r.iter().map(|c| c.to_string()).collect();
            writeln!(f, "[{}]", s.join(", "))?;
        }
        Ok(())
    }
}

impl QMat {
    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Self {
        let ncols = rows.first().map_or(0, |r| r.len());
        debug_assert!(rows.iter().all(|r| r.len() == ncols));
        QMat { rows, ncols }
    }

    pub fn from_cols(cols: &[Vec<BigRational>]) -> Self {
        let nrows = cols.first().map_or(0, |c| c.len());
        let rows = (0..nrows).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
        QMat::from_rows(rows)
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        QMat { rows: vec![vec![BigRational::zero(); m]; n], ncols: m }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMat::zeros(n, n);
        for i in 0..n {
            m.rows[i][i] = BigRational::one();
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.rows[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.rows[i][j] = v;
    }

    pub fn rows(&self) -> &[Vec<BigRational>] {
        &self.rows
    }

    pub fn col(&self, j: usize) -> Vec<BigRational> {
        self.rows.iter().map(|r| r[j].clone()).collect()
    }

    pub fn transpose(&self) -> QMat {
        QMat::from_cols(&self.rows)
    }

    pub fn mul(&self, o: &QMat) -> QMat {
        assert_eq!(self.ncols, o.nrows());
        let mut out = QMat::zeros(self.nrows(), o.ncols);
        for i in 0..self.nrows() {
            for k in 0..self.ncols {
                let a = &self.rows[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.ncols {
                    out.rows[i][j] += a * &o.rows[k][j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(v).fold(BigRational::zero(), |acc, (a, b)| acc + a * b))
            .collect()
    }

    pub fn scale(&self, s: &BigRational) -> QMat {
        QMat::from_rows(self.rows.iter().map(|r| r.iter().map(|c| c * s).collect()).collect())
    }

    pub fn add(&self, o: &QMat) -> QMat {
        QMat::from_rows(
            self.rows
                .iter()
                .zip(&o.rows)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        )
    }

    pub fn sub(&self, o: &QMat) -> QMat {
        self.add(&o.scale(&-BigRational::one()))
    }

    pub fn trace(&self) -> BigRational {
        (0..self.nrows()).fold(BigRational::zero(), |acc, i| acc + &self.rows[i][i])
    }

    pub fn det(&self) -> BigRational {
        let n = self.nrows();
        assert_eq!(n, self.ncols);
        let mut a = self.rows.clone();
        let mut det = BigRational::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&r| !a[r][c].is_zero()) else {
                return BigRational::zero();
            };
            if p != c {
                a.swap(p, c);
                det = -det;
            }
            let piv = a[c][c].clone();
            det *= &piv;
            for r in c + 1..n {
                if a[r][c].is_zero() {
                    continue;
                }
                let f = &a[r][c] / &piv;
                for k in c..n {
                    let t = &f * &a[c][k];
                    a[r][k] -= t;
                }
            }
        }
        det
    }

    /// Reduced row echelon form and the pivot columns.
    pub fn rref(&self) -> (QMat, Vec<usize>) {
        let mut a = self.rows.clone();
        let (n, m) = (self.nrows(), self.ncols);
        let mut pivots = Vec::new();
        let mut row = 0;
        for c in 0..m {
            if row == n {
                break;
            }
            let Some(p) = (row..n).find(|&r| !a[r][c].is_zero()) else { continue };
            a.swap(p, row);
            let inv = BigRational::one() / &a[row][c];
            for k in 0..m {
                a[row][k] = &a[row][k] * &inv;
            }
            for r in 0..n {
                if r != row && !a[r][c].is_zero() {
                    let f = a[r][c].clone();
                    for k in 0..m {
                        let t = &f * &a[row][k];
                        a[r][k] -= t;
                    }
                }
            }
            pivots.push(c);
            row += 1;
        }
        (QMat::from_rows(a), pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of `{x : A x = 0}`, one vector per free column.
    pub fn kernel(&self) -> Vec<Vec<BigRational>> {
        let m = self.ncols;
        let (red, piv) = self.rref();
        let mut out = Vec::new();
        for free in (0..m).filter(|c| !piv.contains(c)) {
            let mut v = vec![BigRational::zero(); m];
            v[free] = BigRational::one();
            for (row, &c) in piv.iter().enumerate() {
                v[c] = -red.rows[row][free].clone();
            }
            out.push(v);
        }
        out
    }

    pub fn inverse(&self) -> Option<QMat> {
        let n = self.nrows();
        let mut aug = Vec::with_capacity(n);
        for i in 0..n {
            let mut r = self.rows[i].clone();
            r.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            aug.push(r);
        }
        let (red, piv) = QMat::from_rows(aug).rref();
        if piv.len() < n || piv[n - 1] != n - 1 {
            return None;
        }
        Some(QMat::from_rows(red.rows.iter().map(|r| r[n..].to_vec()).collect()))
    }

    /// Solve `A x = b` for square invertible `A`.
    pub fn solve(&self, b: &[BigRational]) -> Option<Vec<BigRational>> {
        let inv = self.inverse()?;
        Some(inv.mul_vec(b))
    }

    /// Solve `A x = b` for full-column-rank `A` (any consistent system).
    pub fn solve_consistent(&self, b: &[BigRational]) -> Option<Vec<BigRational>> {
        let m = self.ncols;
        let mut aug = self.rows.clone();
        for (r, bi) in aug.iter_mut().zip(b) {
            r.push(bi.clone());
        }
        let (red, piv) = QMat::from_rows(aug).rref();
        if piv.contains(&m) {
            return None;
        }
        let mut x = vec![BigRational::zero(); m];
        for (row, &c) in piv.iter().enumerate() {
            x[c] = red.rows[row][m].clone();
        }
        Some(x)
    }

    /// Characteristic polynomial det(xI − A) by Faddeev–LeVerrier.
    pub fn charpoly(&self) -> QPoly {
        let n = self.nrows();
        let mut coeffs = vec![BigRational::zero(); n + 1];
        coeffs[n] = BigRational::one();
        let ident = QMat::identity(n);
        let mut m = QMat::zeros(n, n);
        for k in 1..=n {
            m = self.mul(&m).add(&ident.scale(&coeffs[n - k + 1]));
            let am = self.mul(&m);
            coeffs[n - k] = -am.trace() / BigRational::from_integer(BigInt::from(k));
        }
        QPoly::new(coeffs)
    }

    pub fn is_integral(&self) -> bool {
        self.rows.iter().flatten().all(|c| c.is_integer())
    }

    pub fn to_zmat(&self) -> Option<ZMat> {
        if !self.is_integral() {
            return None;
        }
        Some(ZMat::from_rows(self.rows.iter().map(|r| r.iter().map(|c| c.to_integer()).collect()).collect()))
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.iter().map(rat_to_f64).collect()).collect()
    }

    pub fn denominator_lcm(&self) -> BigInt {
        self.rows.iter().flatten().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }
}

pub fn rat_to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or_else(|| {
        // fall back through a scaled division for huge parts
        let n = x.numer().bits() as i64;
        let d = x.denom().bits() as i64;
        let shift = (n - d) as i32;
        let scaled = if shift > 0 {
            BigRational::new(x.numer().clone(), x.denom() << shift as usize)
        } else {
            BigRational::new(x.numer() << (-shift) as usize, x.denom().clone())
        };
        scaled.to_f64().unwrap_or(0.0) * 2f64.powi(shift)
    })
}

/// Dense integer matrix stored by rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ZMat {
    rows: Vec<Vec<BigInt>>,
    ncols: usize,
}

impl fmt::Debug for ZMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            let s: Vec<String> = r.iter().map(|c| c.to_string()).collect();
            writeln!(f, "[{}]", s.join(", "))?;
        }
        Ok(())
    }
}

impl ZMat {
    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Self {
        let ncols = rows.first().map_or(0, |r| r.len());
        ZMat { rows, ncols }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        ZMat::from_rows(rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect())
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        ZMat { rows, ncols: n }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn mul(&self, o: &ZMat) -> ZMat {
        assert_eq!(self.ncols, o.nrows());
        let mut out = vec![vec![BigInt::zero(); o.ncols]; self.nrows()];
        for (i, row) in self.rows.iter().enumerate() {
            for (k, a) in row.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.ncols {
                    out[i][j] += a * &o.rows[k][j];
                }
            }
        }
        ZMat { rows: out, ncols: o.ncols }
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(v).fold(BigInt::zero(), |acc, (a, b)| acc + a * b))
            .collect()
    }

    pub fn sub(&self, o: &ZMat) -> ZMat {
        ZMat::from_rows(
            self.rows
                .iter()
                .zip(&o.rows)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        )
    }

    pub fn pow(&self, mut k: u64) -> ZMat {
        let mut result = ZMat::identity(self.nrows());
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn to_qmat(&self) -> QMat {
        QMat::from_rows(
            self.rows
                .iter()
                .map(|r| r.iter().map(|c| BigRational::from_integer(c.clone())).collect())
                .collect(),
        )
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        let n = self.nrows();
        assert_eq!(n, self.ncols);
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.rows.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                let Some(p) = (k + 1..n).find(|&r| !a[r][k].is_zero()) else {
                    return BigInt::zero();
                };
                a.swap(p, k);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                    a[i][j] = v;
                }
            }
            prev = a[k][k].clone();
        }
        sign * &a[n - 1][n - 1]
    }

    /// Inverse over Z, if the determinant is ±1.
    pub fn inverse(&self) -> Option<ZMat> {
        self.to_qmat().inverse()?.to_zmat()
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> BigInt {
        self.rows
            .iter()
            .map(|r| r.iter().fold(BigInt::zero(), |acc, c| acc + c.abs()))
            .max()
            .unwrap_or_default()
    }

    pub fn transpose(&self) -> ZMat {
        let rows = (0..self.ncols).map(|j| self.rows.iter().map(|r| r[j].clone()).collect()).collect();
        ZMat { rows, ncols: self.nrows() }
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        use num_traits::ToPrimitive;
        self.rows.iter().map(|r| r.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()).collect()
    }
}

/// Row-style Hermite normal form of the lattice generated by the given integer
/// row vectors: returns a basis in upper echelon form with positive pivots and
/// entries above each pivot reduced into `[0, pivot)`.
pub fn hnf_rows(gens: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let Some(m) = gens.first().map(|g| g.len()) else { return Vec::new() };
    let mut rows: Vec<Vec<BigInt>> = gens.iter().filter(|g| g.iter().any(|c| !c.is_zero())).cloned().collect();
    let mut basis: Vec<Vec<BigInt>> = Vec::new();
    let mut pivots = Vec::new();
    for col in 0..m {
        // gather rows with nonzero entry in this column, gcd-reduce them
        let mut active: Vec<Vec<BigInt>> = Vec::new();
        let mut rest = Vec::new();
        for r in rows.drain(..) {
            if r[col].is_zero() {
                rest.push(r);
            } else {
                active.push(r);
            }
        }
        while active.len() > 1 {
            // pick smallest |pivot|
            let (imin, _) = active
                .iter()
                .enumerate()
                .min_by(|a, b| a.1[col].abs().cmp(&b.1[col].abs()))
                .unwrap();
            active.swap(0, imin);
            let (head, tail) = active.split_at_mut(1);
            let p = head[0][col].clone();
            for r in tail.iter_mut() {
                let f = r[col].div_floor(&p);
                for k in col..m {
                    let t = &f * &head[0][k];
                    r[k] -= t;
                }
            }
            let mut next = vec![active[0].clone()];
            for r in active.drain(1..) {
                if r[col].is_zero() {
                    if r.iter().any(|c| !c.is_zero()) {
                        rest.push(r);
                    }
                } else {
                    next.push(r);
                }
            }
            active = next;
        }
        rows = rest;
        if let Some(mut piv) = active.pop() {
            if piv[col].is_negative() {
                piv.iter_mut().for_each(|c| *c = -c.clone());
            }
            basis.push(piv);
            pivots.push(col);
        }
    }
    // reduce entries above pivots
    for i in 0..basis.len() {
        let c = pivots[i];
        let p = basis[i][c].clone();
        for j in 0..i {
            let f = basis[j][c].div_floor(&p);
            if !f.is_zero() {
                for k in c..m {
                    let t = &f * &basis[i][k];
                    basis[j][k] -= t;
                }
            }
        }
    }
    basis
}

/// Product of two ball matrices.
pub fn ball_mat_mul(a: &[Vec<Ball>], b: &[Vec<Ball>]) -> Vec<Vec<Ball>> {
    let prec = a[0][0].prec();
    let m = b[0].len();
    a.iter()
        .map(|row| {
            (0..m)
                .map(|j| row.iter().zip(b).fold(Ball::zero(prec), |acc, (x, br)| acc.add(&x.mul(&br[j]))))
                .collect()
        })
        .collect()
}

/// Ball matrix times a ball vector.
pub fn ball_mat_vec(a: &[Vec<Ball>], v: &[Ball]) -> Vec<Ball> {
    let prec = a[0][0].prec();
    a.iter().map(|row| row.iter().zip(v).fold(Ball::zero(prec), |acc, (x, y)| acc.add(&x.mul(y)))).collect()
}

/// Inverse of a square ball matrix by Gauss–Jordan elimination with partial
/// pivoting; `None` if a pivot ball contains zero.
pub fn ball_mat_inverse(a: &[Vec<Ball>]) -> Option<Vec<Vec<Ball>>> {
    let n = a.len();
    let prec = a[0][0].prec();
    let mut m: Vec<Vec<Ball>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { Ball::one(prec) } else { Ball::zero(prec) }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs_upper().partial_cmp(&m[y][c].abs_upper()).unwrap())?;
        if m[p][c].contains_zero() {
            return None;
        }
        m.swap(p, c);
        let inv = m[c][c].recip();
        for k in 0..2 * n {
            m[c][k] = m[c][k].mul(&inv);
        }
        for r in 0..n {
            if r == c {
                continue;
            }
            let f = m[r][c].clone();
            if f.abs_upper() == 0.0 {
                continue;
            }
            for k in 0..2 * n {
                let t = f.mul(&m[c][k]);
                m[r][k] = m[r][k].sub(&t);
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::q;

    #[test]
    fn det_inverse_charpoly() {
        let a = ZMat::from_i64(&[&[-1, 2], &[1, -1]]);
        assert_eq!(a.det(), BigInt::from(-1));
        assert_eq!(a.inverse().unwrap(), ZMat::from_i64(&[&[1, 2], &[1, 1]]));
        assert_eq!(a.to_qmat().charpoly(), QPoly::from_i64(&[-1, 2, 1]));
        assert_eq!(a.pow(2), ZMat::from_i64(&[&[3, -4], &[-2, 3]]));
    }

    #[test]
    fn bareiss_matches_rational_det() {
        let a = ZMat::from_i64(&[&[2, 7, 1], &[3, -4, 5], &[0, 6, -2]]);
        assert_eq!(BigRational::from_integer(a.det()), a.to_qmat().det());
    }

    #[test]
    fn hnf_basic() {
        let g = vec![
            vec![BigInt::from(2), BigInt::from(0)],
            vec![BigInt::from(0), BigInt::from(2)],
            vec![BigInt::from(1), BigInt::from(1)],
        ];
        let h = hnf_rows(&g);
        assert_eq!(h, vec![vec![BigInt::from(1), BigInt::from(1)], vec![BigInt::from(0), BigInt::from(2)]]);
    }

    #[test]
    fn solve_consistent_overdetermined() {
        let a = QMat::from_rows(vec![vec![q(1), q(0)], vec![q(0), q(1)], vec![q(1), q(1)]]);
        assert_eq!(a.solve_consistent(&[q(2), q(3), q(5)]), Some(vec![q(2), q(3)]));
        assert_eq!(a.solve_consistent(&[q(2), q(3), q(6)]), None);
    }

    #[test]
    fn kernel_annihilates() {
        let a = QMat::from_rows(vec![vec![q(1), q(2), q(3)], vec![q(2), q(4), q(6)]]);
        let k = a.kernel();
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(a.mul_vec(v).iter().all(|x| x.is_zero()));
        }
        assert!(QMat::identity(3).kernel().is_empty());
    }
}
