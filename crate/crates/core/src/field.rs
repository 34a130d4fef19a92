//! The number field `K = Q[x]/(f)` with exact power-basis arithmetic and
//! certified embeddings `σ_i : K → R` or `C`.

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::ball::{Ball, CBall};
use crate::error::{Error, Result};
use crate::linalg::QMat;
use crate::poly::{factor_degrees_mod_p, small_primes, subset_sums, QPoly};
use crate::roots;

/// An element of `K` in power-basis coordinates `1, θ, …, θ^(d−1)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldElement {
    coeffs: Vec<BigRational>,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}]", s.join(", "))
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            terms.push(match k {
                0 => c.to_string(),
                1 => format!("{c}*t"),
                _ => format!("{c}*t^{k}"),
            });
        }
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl FieldElement {
    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        FieldElement { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        FieldElement { coeffs: coeffs.iter().map(|&c| BigRational::from_integer(c.into())).collect() }
    }

    pub fn zero(d: usize) -> Self {
        FieldElement { coeffs: vec![BigRational::zero(); d] }
    }

    pub fn one(d: usize) -> Self {
        Self::rational(d, BigRational::one())
    }

    pub fn rational(d: usize, c: BigRational) -> Self {
        let mut e = Self::zero(d);
        e.coeffs[0] = c;
        e
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn degree_bound(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    /// True when the element lies in `Q`.
    pub fn is_rational(&self) -> bool {
        self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    pub fn add(&self, o: &FieldElement) -> FieldElement {
        FieldElement { coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &FieldElement) -> FieldElement {
        FieldElement { coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect() }
    }

    pub fn neg(&self) -> FieldElement {
        FieldElement { coeffs: self.coeffs.iter().map(|a| -a).collect() }
    }

    pub fn scale(&self, s: &BigRational) -> FieldElement {
        FieldElement { coeffs: self.coeffs.iter().map(|a| a * s).collect() }
    }

    pub fn to_poly(&self) -> QPoly {
        QPoly::new(self.coeffs.clone())
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }
}

/// Values `σ_i(u)` for the places `i = 1..r1+r2`: real places first, then one
/// representative (positive imaginary part) per complex pair.
#[derive(Clone, Debug)]
pub struct EmbeddingVector {
    pub r1: usize,
    pub entries: Vec<CBall>,
}

impl EmbeddingVector {
    pub fn places(&self) -> usize {
        self.entries.len()
    }

    pub fn to_c64(&self) -> Vec<Complex64> {
        self.entries.iter().map(|e| e.to_c64()).collect()
    }

    pub fn max_rad(&self) -> f64 {
        self.entries.iter().map(|e| e.rad()).fold(0.0, f64::max)
    }

    /// All `d` values, the implicit conjugates appended.
    pub fn all_values(&self) -> Vec<CBall> {
        let mut v = self.entries.clone();
        v.extend(self.entries[self.r1..].iter().map(|e| e.conj()));
        v
    }

    /// Real coordinates: one per real place, (Re, Im) per complex place.
    pub fn split(&self) -> Vec<Ball> {
        let mut out = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            out.push(e.re.clone());
            if i >= self.r1 {
                out.push(e.im.clone());
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct NumberField {
    min_poly: Vec<BigInt>,
    poly: QPoly,
    d: usize,
    r1: usize,
    r2: usize,
    roots: Vec<CBall>,
    precision: u32,
    root_powers: Vec<Vec<CBall>>,
    root_powers_f64: Vec<Vec<Complex64>>,
    discriminant: BigInt,
}

impl NumberField {
    /// Builds the field from a monic integer polynomial given highest degree
    /// first, e.g. `[1, 0, -2]` for `x² − 2`.
    pub fn build(min_poly: &[BigInt], precision: u32) -> Result<NumberField> {
        let mut coeffs: Vec<BigInt> = min_poly.iter().rev().cloned().collect();
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        let d = coeffs.len().saturating_sub(1);
        if d < 2 {
            return Err(Error::DegreeTooSmall(d));
        }
        if !coeffs[d].is_one() {
            return Err(Error::NotMonicInteger(format!("leading coefficient {}", coeffs[d])));
        }
        if precision < 32 {
            return Err(Error::InvalidParameter(format!("precision {precision} below 32 bits")));
        }
        let poly = QPoly::from_ints(&coeffs);
        let disc = poly.discriminant();
        if disc.is_zero() {
            return Err(Error::RepeatedRoot);
        }
        let iso = roots::isolate(&coeffs, precision + 32)?;
        let wp = precision + 64;
        let r1 = iso.real.len();
        let r2 = iso.upper.len();
        let mut all: Vec<CBall> = iso.real.iter().map(|x| CBall::real(x.with_prec(wp))).collect();
        all.extend(iso.upper.iter().map(|z| z.with_prec(wp)));
        let conj: Vec<CBall> = all[r1..].iter().map(|z| z.conj()).collect();
        all.extend(conj);
        check_irreducible(&coeffs, &all)?;

        let mut root_powers = Vec::with_capacity(r1 + r2);
        for z in &all[..r1 + r2] {
            let mut pw = vec![CBall::one(wp)];
            for k in 1..d {
                let next = pw[k - 1].mul(z);
                pw.push(next);
            }
            root_powers.push(pw);
        }
        let root_powers_f64 = root_powers.iter().map(|row| row.iter().map(|z| z.to_c64()).collect()).collect();
        Ok(NumberField {
            min_poly: coeffs,
            poly,
            d,
            r1,
            r2,
            roots: all,
            precision,
            root_powers,
            root_powers_f64,
            discriminant: disc.to_integer(),
        })
    }

    pub fn build_i64(min_poly: &[i64], precision: u32) -> Result<NumberField> {
        let c: Vec<BigInt> = min_poly.iter().map(|&x| BigInt::from(x)).collect();
        Self::build(&c, precision)
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn r1(&self) -> usize {
        self.r1
    }

    pub fn r2(&self) -> usize {
        self.r2
    }

    /// Number of places `|I| = r1 + r2`.
    pub fn places(&self) -> usize {
        self.r1 + self.r2
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Precision in bits used for internal ball arithmetic.
    pub fn working_prec(&self) -> u32 {
        self.precision + 64
    }

    /// Minimal polynomial, highest degree first.
    pub fn min_poly(&self) -> Vec<BigInt> {
        self.min_poly.iter().rev().cloned().collect()
    }

    pub fn poly(&self) -> &QPoly {
        &self.poly
    }

    pub fn discriminant(&self) -> &BigInt {
        &self.discriminant
    }

    /// All `d` roots: real (descending), upper half-plane, then conjugates.
    pub fn roots(&self) -> &[CBall] {
        &self.roots
    }

    /// Place multiplicity in the norm: 1 for real places, 2 for complex ones.
    pub fn multiplicity(&self, place: usize) -> usize {
        if place < self.r1 {
            1
        } else {
            2
        }
    }

    pub fn element(&self, coeffs: Vec<BigRational>) -> Result<FieldElement> {
        if coeffs.len() > self.d {
            return Ok(self.reduce(&QPoly::new(coeffs)));
        }
        let mut c = coeffs;
        c.resize(self.d, BigRational::zero());
        Ok(FieldElement { coeffs: c })
    }

    pub fn element_i64(&self, coeffs: &[i64]) -> FieldElement {
        self.reduce(&QPoly::from_i64(coeffs))
    }

    pub fn theta(&self) -> FieldElement {
        self.reduce(&QPoly::x())
    }

    pub fn one(&self) -> FieldElement {
        FieldElement::one(self.d)
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement::zero(self.d)
    }

    /// Canonical representative of a polynomial in `θ`.
    pub fn reduce(&self, p: &QPoly) -> FieldElement {
        let r = p.rem(&self.poly);
        let mut c = r.coeffs().to_vec();
        c.resize(self.d, BigRational::zero());
        FieldElement { coeffs: c }
    }

    pub fn mul(&self, u: &FieldElement, v: &FieldElement) -> FieldElement {
        self.reduce(&u.to_poly().mul(&v.to_poly()))
    }

    pub fn inverse(&self, u: &FieldElement) -> Result<FieldElement> {
        if u.is_zero() {
            return Err(Error::InvalidParameter("inverse of zero".into()));
        }
        let mut e0 = vec![BigRational::zero(); self.d];
        e0[0] = BigRational::one();
        let x = self
            .mult_matrix(u)
            .solve(&e0)
            .ok_or_else(|| Error::InvalidParameter("singular multiplication matrix".into()))?;
        Ok(FieldElement { coeffs: x })
    }

    pub fn pow(&self, u: &FieldElement, k: i64) -> Result<FieldElement> {
        let base = if k < 0 { self.inverse(u)? } else { u.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = self.one();
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            e >>= 1;
            if e > 0 {
                b = self.mul(&b, &b);
            }
        }
        Ok(acc)
    }

    /// Matrix of `x ↦ u·x` in the power basis (column `j` is `u·θ^j`).
    pub fn mult_matrix(&self, u: &FieldElement) -> QMat {
        let mut cols = Vec::with_capacity(self.d);
        let mut cur = u.clone();
        let theta = self.theta();
        for j in 0..self.d {
            if j > 0 {
                cur = self.mul(&cur, &theta);
            }
            cols.push(cur.coeffs.clone());
        }
        QMat::from_cols(&cols)
    }

    pub fn charpoly(&self, u: &FieldElement) -> QPoly {
        self.mult_matrix(u).charpoly()
    }

    /// Exact minimal polynomial over `Q` (monic): the squarefree part of the
    /// characteristic polynomial, which is a power of the minimal polynomial.
    pub fn minimal_polynomial_of(&self, u: &FieldElement) -> QPoly {
        self.charpoly(u).squarefree_part()
    }

    /// `N(u) = Res(f, u(x))` for monic `f`.
    pub fn norm(&self, u: &FieldElement) -> BigRational {
        let g = u.to_poly();
        if g.is_zero() {
            return BigRational::zero();
        }
        self.poly.resultant(&g)
    }

    /// Exact norm and whether `u` is a unit of the ring of algebraic integers.
    pub fn norm_and_unit_test(&self, u: &FieldElement) -> Result<(BigRational, bool)> {
        if u.is_zero() {
            return Err(Error::InvalidParameter("norm of zero".into()));
        }
        let n = self.norm(u);
        let m = self.minimal_polynomial_of(u);
        let unit = m.is_integral() && m.coeff(0).abs().is_one() && n.abs().is_one();
        Ok((n, unit))
    }

    /// Certified values `σ_i(u)` at every place.
    pub fn embed(&self, u: &FieldElement) -> Result<EmbeddingVector> {
        let wp = self.working_prec();
        let cs: Vec<Ball> = u.coeffs.iter().map(|c| Ball::from_rational(c, wp)).collect();
        let mut entries = Vec::with_capacity(self.places());
        for (i, pw) in self.root_powers.iter().enumerate() {
            let mut acc = CBall::zero(wp);
            for (c, z) in cs.iter().zip(pw) {
                if c.abs_upper() == 0.0 && c.rad() == 0.0 {
                    continue;
                }
                acc = acc.add(&z.scale(c));
            }
            if i < self.r1 {
                acc.im = Ball::zero(wp);
            }
            entries.push(acc);
        }
        let ev = EmbeddingVector { r1: self.r1, entries };
        let limit = Ball::one(64).ldexp(-(self.precision as i64) / 2).to_f64();
        let rad = ev.max_rad();
        if !(rad <= limit) {
            return Err(Error::Precision(format!("embedding radius {rad:e} exceeds 2^-{}", self.precision / 2)));
        }
        Ok(ev)
    }

    /// Fast floating-point embedding.
    pub fn embed_f64(&self, u: &FieldElement) -> Vec<Complex64> {
        let cs: Vec<f64> = u.coeffs.iter().map(crate::linalg::rat_to_f64).collect();
        self.root_powers_f64
            .iter()
            .enumerate()
            .map(|(i, pw)| {
                let v: Complex64 = cs.iter().zip(pw).map(|(c, z)| z * *c).sum();
                if i < self.r1 {
                    Complex64::new(v.re, 0.0)
                } else {
                    v
                }
            })
            .collect()
    }
}

/// Hard error if `f` has a proper factor over `Q`. Factor degrees are first
/// screened modulo small primes; any surviving candidate degree is settled by
/// testing conjugation-closed subsets of the certified roots for an integer
/// factor and confirming it by exact division.
fn check_irreducible(f: &[BigInt], roots: &[CBall]) -> Result<()> {
    let d = f.len() - 1;
    let mut allowed = vec![true; d + 1];
    for p in small_primes(40) {
        if let Some(degs) = factor_degrees_mod_p(f, p) {
            let reach = subset_sums(&degs, d);
            for k in 0..=d {
                allowed[k] &= reach[k];
            }
        }
        if (1..d).all(|k| !allowed[k]) {
            return Ok(());
        }
    }
    let z: Vec<Complex64> = roots.iter().map(|r| r.to_c64()).collect();
    let fpoly = QPoly::from_ints(f);
    for k in 1..=d / 2 {
        if !allowed[k] {
            continue;
        }
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            if let Some(g) = integer_factor_candidate(&z, &idx) {
                let (_, r) = fpoly.divrem(&g);
                if r.is_zero() {
                    return Err(Error::Reducible(format!("factor {g:?}")));
                }
            }
            // next combination
            let mut i = k;
            while i > 0 && idx[i - 1] == d - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    Ok(())
}

fn integer_factor_candidate(z: &[Complex64], idx: &[usize]) -> Option<QPoly> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &i in idx {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (k, a) in c.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= a * z[i];
        }
        c = next;
    }
    let mut ints = Vec::with_capacity(c.len());
    for a in &c {
        let r = a.re.round();
        if (a.re - r).abs() > 1e-6 * (1.0 + r.abs()) || a.im.abs() > 1e-6 * (1.0 + r.abs()) {
            return None;
        }
        ints.push(BigInt::from(r.to_i64()?));
    }
    Some(QPoly::from_ints(&ints))
}

/// `x^8+8x^7+32x^6+80x^5+132x^4+144x^3+96x^2+32x+1`, highest degree first.
pub const OCTIC_MIN_POLY: [i64; 9] = [1, 8, 32, 80, 132, 144, 96, 32, 1];

/// `x^3 − 3x − 1`, highest degree first.
pub const CUBIC_MIN_POLY: [i64; 4] = [1, 0, -3, -1];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::q;

    fn sqrt2() -> NumberField {
        NumberField::build_i64(&[1, 0, -2], 128).unwrap()
    }

    #[test]
    fn quadratic_signatures() {
        let k = sqrt2();
        assert_eq!((k.degree(), k.r1(), k.r2()), (2, 2, 0));
        let r: Vec<f64> = k.roots().iter().map(|z| z.re.to_f64()).collect();
        assert!((r[0] - 2f64.sqrt()).abs() < 1e-15 && (r[1] + 2f64.sqrt()).abs() < 1e-15);
        let g = NumberField::build_i64(&[1, 0, 1], 128).unwrap();
        assert_eq!((g.r1(), g.r2()), (0, 1));
    }

    #[test]
    fn invalid_polynomials() {
        assert!(matches!(NumberField::build_i64(&[1, 0, 0], 128), Err(Error::RepeatedRoot)));
        assert!(matches!(NumberField::build_i64(&[2, 0, -1], 128), Err(Error::NotMonicInteger(_))));
        assert!(matches!(NumberField::build_i64(&[1, 5], 128), Err(Error::DegreeTooSmall(1))));
        // (x^2 - 2)(x^2 - 3) is squarefree but reducible
        assert!(matches!(NumberField::build_i64(&[1, 0, -5, 0, 6], 128), Err(Error::Reducible(_))));
        // x^4 + 1 is irreducible but splits modulo every prime
        assert!(NumberField::build_i64(&[1, 0, 0, 0, 1], 128).is_ok());
    }

    #[test]
    fn quadratic_arithmetic() {
        let k = sqrt2();
        let a = k.element_i64(&[-1, 1]);
        let b = k.element_i64(&[1, 1]);
        assert!(k.mul(&a, &b).is_one());
        assert_eq!(k.mul(&a, &a), k.element_i64(&[3, -2]));
        assert_eq!(k.norm_and_unit_test(&a).unwrap(), (q(-1), true));
        assert_eq!(k.inverse(&a).unwrap(), b);
        assert_eq!(k.pow(&a, -2).unwrap(), k.element_i64(&[3, 2]));
        let two = k.element_i64(&[2]);
        assert_eq!(k.norm_and_unit_test(&two).unwrap(), (q(4), false));
        let half = k.element(vec![q(1) / q(2), q(0)]).unwrap();
        assert!(!k.norm_and_unit_test(&half).unwrap().1);
    }

    #[test]
    fn minimal_polynomials() {
        let k = sqrt2();
        assert_eq!(k.minimal_polynomial_of(&k.one()), QPoly::from_i64(&[-1, 1]));
        assert_eq!(k.minimal_polynomial_of(&k.theta()), QPoly::from_i64(&[-2, 0, 1]));
    }

    #[test]
    fn embedding_of_one_and_theta() {
        let k = NumberField::build_i64(&OCTIC_MIN_POLY, 128).unwrap();
        assert_eq!((k.r1(), k.r2()), (2, 3));
        let one = k.embed(&k.one()).unwrap();
        for e in &one.entries {
            assert!((e.to_c64() - Complex64::new(1.0, 0.0)).norm() < 1e-30);
        }
        let t = k.embed(&k.theta()).unwrap().to_c64();
        assert!(t[0].re > t[1].re);
        let (n, unit) = k.norm_and_unit_test(&k.theta()).unwrap();
        assert!(unit);
        assert_eq!(n, q(1));
    }
}
