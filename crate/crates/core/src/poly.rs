//! Dense univariate polynomials over the rationals, plus the small amount of
//! arithmetic modulo a prime needed to screen factorization patterns.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::linalg::QMat;

/// Polynomial with rational coefficients, lowest degree first, no trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QPoly {
    coeffs: Vec<BigRational>,
}

pub fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl fmt::Debug for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})x")?,
                _ => write!(f, "({c})x^{i}")?,
            }
        }
        Ok(())
    }
}

impl QPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        QPoly { coeffs }
    }

    pub fn zero() -> Self {
        QPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        QPoly::constant(BigRational::one())
    }

    pub fn x() -> Self {
        QPoly::new(vec![BigRational::zero(), BigRational::one()])
    }

    pub fn constant(c: BigRational) -> Self {
        QPoly::new(vec![c])
    }

    /// From integer coefficients, lowest degree first.
    pub fn from_ints(c: &[BigInt]) -> Self {
        QPoly::new(c.iter().map(|v| BigRational::from_integer(v.clone())).collect())
    }

    pub fn from_i64(c: &[i64]) -> Self {
        QPoly::new(c.iter().map(|&v| q(v)).collect())
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> BigRational {
        self.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> BigRational {
        self.coeffs.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn monic(&self) -> QPoly {
        if self.is_zero() {
            return self.clone();
        }
        let lc = self.leading();
        QPoly::new(self.coeffs.iter().map(|c| c / &lc).collect())
    }

    pub fn scale(&self, s: &BigRational) -> QPoly {
        QPoly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, o: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        QPoly::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }

    pub fn sub(&self, o: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        QPoly::new((0..n).map(|i| self.coeff(i) - o.coeff(i)).collect())
    }

    pub fn mul(&self, o: &QPoly) -> QPoly {
        if self.is_zero() || o.is_zero() {
            return QPoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        QPoly::new(out)
    }

    pub fn pow(&self, k: u32) -> QPoly {
        (0..k).fold(QPoly::one(), |acc, _| acc.mul(self))
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn divrem(&self, d: &QPoly) -> (QPoly, QPoly) {
        let dd = d.degree().expect("division by zero polynomial");
        let lc = d.leading();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (QPoly::zero(), self.clone());
        }
        let mut quo = vec![BigRational::zero(); rem.len() - dd];
        for k in (0..quo.len()).rev() {
            let c = &rem[k + dd] / &lc;
            if c.is_zero() {
                continue;
            }
            for (j, dc) in d.coeffs.iter().enumerate() {
                rem[k + j] -= &c * dc;
            }
            quo[k] = c;
        }
        rem.truncate(dd);
        (QPoly::new(quo), QPoly::new(rem))
    }

    pub fn rem(&self, d: &QPoly) -> QPoly {
        self.divrem(d).1
    }

    /// Monic greatest common divisor (zero if both are zero).
    pub fn gcd(&self, o: &QPoly) -> QPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r.monic();
        }
        a.monic()
    }

    pub fn derivative(&self) -> QPoly {
        QPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * q(i as i64))
                .collect(),
        )
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    /// `p(c·x)`.
    pub fn scale_var(&self, c: &BigRational) -> QPoly {
        let mut pw = BigRational::one();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for a in &self.coeffs {
            out.push(a * &pw);
            pw *= c;
        }
        QPoly::new(out)
    }

    /// Squarefree part `p / gcd(p, p')`, monic.
    pub fn squarefree_part(&self) -> QPoly {
        let g = self.gcd(&self.derivative());
        self.divrem(&g).0.monic()
    }

    pub fn is_squarefree(&self) -> bool {
        self.gcd(&self.derivative()).degree() == Some(0)
    }

    /// True when every coefficient is an integer.
    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    pub fn to_ints(&self) -> Option<Vec<BigInt>> {
        self.coeffs.iter().map(|c| c.is_integer().then(|| c.to_integer())).collect()
    }

    /// Resultant `Res(self, other)` as the determinant of the Sylvester matrix.
    pub fn resultant(&self, other: &QPoly) -> BigRational {
        let (m, n) = match (self.degree(), other.degree()) {
            (Some(m), Some(n)) => (m, n),
            _ => return BigRational::zero(),
        };
        if m == 0 && n == 0 {
            return BigRational::one();
        }
        let size = m + n;
        let mut rows = vec![vec![BigRational::zero(); size]; size];
        for (i, row) in rows.iter_mut().enumerate().take(n) {
            for j in 0..=m {
                row[i + j] = self.coeff(m - j);
            }
        }
        for i in 0..m {
            for j in 0..=n {
                rows[n + i][i + j] = other.coeff(n - j);
            }
        }
        QMat::from_rows(rows).det()
    }

    /// Discriminant of a monic polynomial: (−1)^(n(n−1)/2) Res(f, f').
    pub fn discriminant(&self) -> BigRational {
        let n = self.degree().unwrap_or(0);
        let r = self.resultant(&self.derivative()) / self.leading();
        if (n * (n.saturating_sub(1)) / 2) % 2 == 1 {
            -r
        } else {
            r
        }
    }

    /// Least common multiple of the coefficient denominators.
    pub fn denominator_lcm(&self) -> BigInt {
        self.coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }

    /// True if `self` is the cyclotomic polynomial Φ_m for some m.
    pub fn is_cyclotomic(&self) -> bool {
        let Some(deg) = self.degree() else { return false };
        if !self.is_integral() || !self.leading().is_one() {
            return false;
        }
        for m in 1..=cyclotomic_index_bound(deg) {
            if euler_phi(m) as usize == deg && cyclotomic(m) == *self {
                return true;
            }
        }
        false
    }
}

/// Largest m with φ(m) ≤ `deg` is at most this bound (φ(m) ≥ √(m/2)).
pub fn cyclotomic_index_bound(deg: usize) -> u64 {
    (2 * deg * deg).max(6) as u64
}

pub fn euler_phi(mut m: u64) -> u64 {
    let mut result = m;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            while m % p == 0 {
                m /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if m > 1 {
        result -= result / m;
    }
    result
}

fn mobius(mut m: u64) -> i32 {
    let mut result = 1;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if m > 1 {
        result = -result;
    }
    result
}

/// The m-th cyclotomic polynomial via Π_(e|m) (x^e − 1)^μ(m/e).
pub fn cyclotomic(m: u64) -> QPoly {
    let xe = |e: u64| {
        let mut c = vec![BigRational::zero(); e as usize + 1];
        c[0] = q(-1);
        c[e as usize] = q(1);
        QPoly::new(c)
    };
    let mut num = QPoly::one();
    let mut den = QPoly::one();
    for e in 1..=m {
        if m % e == 0 {
            match mobius(m / e) {
                1 => num = num.mul(&xe(e)),
                -1 => den = den.mul(&xe(e)),
                _ => {}
            }
        }
    }
    num.divrem(&den).0
}

// ---------------------------------------------------------------------------
// arithmetic over F_p, used for factor-degree screening

type Fp = Vec<u64>;

fn fp_trim(mut a: Fp) -> Fp {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn fp_pow(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = (r as u128 * b as u128 % p as u128) as u64;
        }
        b = (b as u128 * b as u128 % p as u128) as u64;
        e >>= 1;
    }
    r
}

fn fp_inv(a: u64, p: u64) -> u64 {
    fp_pow(a, p - 2, p)
}

fn fp_rem(a: &Fp, d: &Fp, p: u64) -> Fp {
    let mut r = a.clone();
    let dd = d.len() - 1;
    let inv = fp_inv(d[dd], p);
    while r.len() > dd {
        let c = r[r.len() - 1] * inv % p;
        let shift = r.len() - 1 - dd;
        for (j, &dc) in d.iter().enumerate() {
            r[shift + j] = (r[shift + j] + p - c * dc % p) % p;
        }
        r = fp_trim(r);
        if r.is_empty() {
            break;
        }
    }
    r
}

fn fp_mulmod(a: &Fp, b: &Fp, m: &Fp, p: u64) -> Fp {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    fp_rem(&fp_trim(out), m, p)
}

fn fp_gcd(a: &Fp, b: &Fp, p: u64) -> Fp {
    let (mut a, mut b) = (fp_trim(a.clone()), fp_trim(b.clone()));
    while !b.is_empty() {
        let r = fp_rem(&a, &b, p);
        a = b;
        b = r;
    }
    if let Some(&lc) = a.last() {
        let inv = fp_inv(lc, p);
        a.iter_mut().for_each(|c| *c = *c * inv % p);
    }
    a
}

fn fp_div(a: &Fp, d: &Fp, p: u64) -> Fp {
    let dd = d.len() - 1;
    let inv = fp_inv(d[dd], p);
    let mut r = a.clone();
    let mut quo = vec![0u64; a.len().saturating_sub(dd)];
    while r.len() > dd && !r.is_empty() {
        let c = r[r.len() - 1] * inv % p;
        let shift = r.len() - 1 - dd;
        quo[shift] = c;
        for (j, &dc) in d.iter().enumerate() {
            r[shift + j] = (r[shift + j] + p - c * dc % p) % p;
        }
        r = fp_trim(r);
    }
    fp_trim(quo)
}

/// Degrees of the irreducible factors of a monic integer polynomial modulo `p`
/// (distinct-degree factorization), or `None` when `p` divides the
/// discriminant.
pub fn factor_degrees_mod_p(f: &[BigInt], p: u64) -> Option<Vec<usize>> {
    let pb = BigInt::from(p);
    let fp: Fp = fp_trim(
        f.iter()
            .map(|c| c.mod_floor(&pb).to_u64().unwrap())
            .collect(),
    );
    let n = fp.len().checked_sub(1)?;
    if n == 0 {
        return Some(Vec::new());
    }
    // squarefree mod p
    let deriv: Fp = fp_trim(
        fp.iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| (i as u64 % p) * c % p)
            .collect(),
    );
    if deriv.is_empty() || fp_gcd(&fp, &deriv, p).len() != 1 {
        return None;
    }
    let mut rest = fp.clone();
    let mut degs = Vec::new();
    let mut h: Fp = vec![0, 1];
    let mut k = 1;
    while rest.len() > 1 {
        if 2 * k > rest.len() - 1 {
            degs.push(rest.len() - 1);
            break;
        }
        // h = h^p mod rest
        let mut acc: Fp = vec![1];
        let mut base = fp_rem(&h, &rest, p);
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                acc = fp_mulmod(&acc, &base, &rest, p);
            }
            base = fp_mulmod(&base, &base, &rest, p);
            e >>= 1;
        }
        h = acc;
        let mut hx = h.clone();
        hx.resize(hx.len().max(2), 0);
        hx[1] = (hx[1] + p - 1) % p;
        let g = fp_gcd(&rest, &fp_trim(hx), p);
        let gd = g.len() - 1;
        for _ in 0..gd / k {
            degs.push(k);
        }
        if gd > 0 {
            rest = fp_div(&rest, &g, p);
            h = fp_rem(&h, &rest, p);
        }
        k += 1;
    }
    degs.sort_unstable();
    Some(degs)
}

/// Set of proper factor degrees compatible with a factor-degree pattern.
pub fn subset_sums(degs: &[usize], n: usize) -> Vec<bool> {
    let mut reach = vec![false; n + 1];
    reach[0] = true;
    for &d in degs {
        for s in (d..=n).rev() {
            if reach[s - d] {
                reach[s] = true;
            }
        }
    }
    reach
}

pub fn small_primes(count: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut c = 2u64;
    while out.len() < count {
        if (2..c).take_while(|d| d * d <= c).all(|d| c % d != 0) {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// Integer content-free check helper: true when `x` is an integer.
pub fn is_int(x: &BigRational) -> bool {
    x.is_integer()
}

/// Exact integer-rounding of a rational (nearest, ties away from zero).
pub fn round_rational(x: &BigRational) -> BigInt {
    let two = BigInt::from(2);
    let n = x.numer() * &two + if x.is_negative() { -x.denom() } else { x.denom().clone() };
    let d = x.denom() * two;
    if n.is_negative() {
        -((-n) / d)
    } else {
        n / d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn divrem_and_gcd() {
        let a = QPoly::from_i64(&[-1, 0, 1]); // x^2 - 1
        let b = QPoly::from_i64(&[1, 1]);
        let (qq, r) = a.divrem(&b);
        assert_eq!(qq, QPoly::from_i64(&[-1, 1]));
        assert!(r.is_zero());
        assert_eq!(a.gcd(&QPoly::from_i64(&[-1, 1]).mul(&QPoly::from_i64(&[2, 1]))), QPoly::from_i64(&[-1, 1]));
    }

    #[test]
    fn resultant_and_discriminant() {
        // Res(x^2 - 2, x - 1) = 1 - 2 = -1
        let f = QPoly::from_i64(&[-2, 0, 1]);
        assert_eq!(f.resultant(&QPoly::from_i64(&[-1, 1])), q(-1));
        assert_eq!(f.discriminant(), q(8));
        assert_eq!(QPoly::from_i64(&[-1, -3, 0, 1]).discriminant(), q(81));
    }

    #[test]
    fn cyclotomic_polys() {
        assert_eq!(cyclotomic(1), QPoly::from_i64(&[-1, 1]));
        assert_eq!(cyclotomic(4), QPoly::from_i64(&[1, 0, 1]));
        assert_eq!(cyclotomic(6), QPoly::from_i64(&[1, -1, 1]));
        assert!(QPoly::from_i64(&[1, 1, 1, 1, 1]).is_cyclotomic());
        assert!(!QPoly::from_i64(&[-1, -1, 1]).is_cyclotomic());
        assert_eq!(euler_phi(12), 4);
    }

    #[test]
    fn factor_patterns() {
        // x^2 + 1 splits mod 5, stays irreducible mod 3
        assert_eq!(factor_degrees_mod_p(&ints(&[1, 0, 1]), 5), Some(vec![1, 1]));
        assert_eq!(factor_degrees_mod_p(&ints(&[1, 0, 1]), 3), Some(vec![2]));
        // x^2 mod anything is not squarefree
        assert_eq!(factor_degrees_mod_p(&ints(&[0, 0, 1]), 3), None);
        // (x^2+1)(x^2+2) mod 7: x^2+1 irreducible (7≡3 mod 4), x^2+2: -2 is a QR mod 7? 3^2=9≡2, (-2)≡5 non-residue
        let p = factor_degrees_mod_p(&ints(&[2, 0, 3, 0, 1]), 7).unwrap();
        assert_eq!(p.iter().sum::<usize>(), 4);
    }

    #[test]
    fn rounding() {
        assert_eq!(round_rational(&"5/2".parse().unwrap()), BigInt::from(3));
        assert_eq!(round_rational(&"-5/2".parse().unwrap()), BigInt::from(-3));
        assert_eq!(round_rational(&"-7/3".parse().unwrap()), BigInt::from(-2));
    }
}
