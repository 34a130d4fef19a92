//! Midpoint-radius ("ball") arithmetic at a fixed binary precision.
//!
//! A [`Ball`] is a binary floating-point midpoint `man · 2^exp` together with
//! an `f64` radius that bounds the distance to the true value. Every
//! operation rounds the midpoint to the working precision and folds the
//! rounding error into the radius, so an enclosure stays an enclosure no
//! matter how long the computation runs. Radii are accumulated in `f64`
//! with an upward bias of a few ulps per operation.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Slack multiplier applied to every radius computed in `f64`.
const UP: f64 = 1.0 + 8.0 * f64::EPSILON;

/// `2^k` as an upper bound; very small powers are clamped to `2^-1000`.
fn pow2_up(k: i64) -> f64 {
    if k > 1023 {
        f64::INFINITY
    } else if k < -1000 {
        2f64.powi(-1000)
    } else {
        2f64.powi(k as i32)
    }
}

/// `2^k` as a lower bound; underflow gives zero.
fn pow2_down(k: i64) -> f64 {
    if k > 1023 {
        f64::MAX
    } else if k < -1070 {
        0.0
    } else {
        2f64.powi(k as i32)
    }
}

fn add_up(a: f64, b: f64) -> f64 {
    (a + b) * UP
}

fn bits(m: &BigInt) -> i64 {
    m.bits() as i64
}

/// Rounds `man` to at most `prec` significant bits (nearest, ties away).
/// Returns the new mantissa/exponent and an upper bound on the error.
fn round_to(man: BigInt, exp: i64, prec: u32) -> (BigInt, i64, f64) {
    let b = bits(&man);
    if b <= prec as i64 {
        return (man, exp, 0.0);
    }
    let shift = (b - prec as i64) as usize;
    let neg = man.is_negative();
    let mag = man.abs();
    let half = BigInt::one() << (shift - 1);
    let q: BigInt = (mag + half) >> shift;
    let q = if neg { -q } else { q };
    let new_exp = exp + shift as i64;
    (q, new_exp, pow2_up(new_exp - 1))
}

#[derive(Clone)]
pub struct Ball {
    man: BigInt,
    exp: i64,
    rad: f64,
    prec: u32,
}

impl fmt::Debug for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e} ± {:e}", self.to_f64(), self.rad)
    }
}

impl Ball {
    pub fn zero(prec: u32) -> Self {
        Ball { man: BigInt::zero(), exp: 0, rad: 0.0, prec }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_int(&BigInt::one(), prec)
    }

    pub fn from_int(n: &BigInt, prec: u32) -> Self {
        let (man, exp, err) = round_to(n.clone(), 0, prec);
        Ball { man, exp, rad: err, prec }
    }

    pub fn from_i64(n: i64, prec: u32) -> Self {
        Self::from_int(&BigInt::from(n), prec)
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(x: f64, prec: u32) -> Self {
        assert!(x.is_finite(), "non-finite f64 in Ball::from_f64");
        if x == 0.0 {
            return Self::zero(prec);
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 {
            (frac as i64, -1074)
        } else {
            ((frac | (1u64 << 52)) as i64, raw_exp - 1075)
        };
        let (man, exp, err) = round_to(BigInt::from(sign * m), e, prec);
        Ball { man, exp, rad: err, prec }
    }

    pub fn from_rational(q: &BigRational, prec: u32) -> Self {
        if q.denom().is_one() {
            return Self::from_int(q.numer(), prec);
        }
        let num = Self::from_int(q.numer(), prec + 8);
        let den = Self::from_int(q.denom(), prec + 8);
        num.div(&den).with_prec(prec)
    }

    /// Same value, rounded to a different working precision.
    pub fn with_prec(&self, prec: u32) -> Self {
        let (man, exp, err) = round_to(self.man.clone(), self.exp, prec);
        Ball { man, exp, rad: add_up(self.rad, err), prec }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn rad(&self) -> f64 {
        self.rad
    }

    /// The midpoint as an exact rational.
    pub fn mid_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.man << self.exp as usize)
        } else {
            BigRational::new(self.man.clone(), BigInt::one() << (-self.exp) as usize)
        }
    }

    /// Midpoint only, radius dropped.
    pub fn mid(&self) -> Ball {
        Ball { man: self.man.clone(), exp: self.exp, rad: 0.0, prec: self.prec }
    }

    pub fn add_rad(mut self, r: f64) -> Self {
        self.rad = add_up(self.rad, r);
        self
    }

    pub fn to_f64(&self) -> f64 {
        if self.man.is_zero() {
            return 0.0;
        }
        let b = bits(&self.man);
        if b <= 60 {
            self.man.to_f64().unwrap() * pow2_exact(self.exp)
        } else {
            let top = (&self.man >> (b - 60) as usize).to_f64().unwrap();
            top * pow2_exact(self.exp + b - 60)
        }
    }

    /// Upper bound on `|mid|`.
    fn mid_abs_up(&self) -> f64 {
        if self.man.is_zero() {
            return 0.0;
        }
        let b = bits(&self.man);
        let shift = (b - 60).max(0);
        let top = (self.man.abs() >> shift as usize).to_f64().unwrap() + 1.0;
        top * pow2_up(self.exp + shift) * UP
    }

    /// Lower bound on `|mid|`.
    fn mid_abs_down(&self) -> f64 {
        if self.man.is_zero() {
            return 0.0;
        }
        let b = bits(&self.man);
        let shift = (b - 60).max(0);
        let top = (self.man.abs() >> shift as usize).to_f64().unwrap();
        top * pow2_down(self.exp + shift) / UP
    }

    /// Upper bound on `|x|` over the ball.
    pub fn abs_upper(&self) -> f64 {
        add_up(self.mid_abs_up(), self.rad)
    }

    /// Lower bound on `|x|` over the ball (zero if the ball contains zero).
    pub fn abs_lower(&self) -> f64 {
        ((self.mid_abs_down() - self.rad) / UP).max(0.0)
    }

    pub fn contains_zero(&self) -> bool {
        self.abs_lower() == 0.0
    }

    pub fn is_positive(&self) -> bool {
        self.man.is_positive() && !self.contains_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.man.is_negative() && !self.contains_zero()
    }

    pub fn mid_sign(&self) -> Sign {
        self.man.sign()
    }

    fn top_exp(&self) -> i64 {
        self.exp + bits(&self.man)
    }

    pub fn neg(&self) -> Ball {
        Ball { man: -&self.man, exp: self.exp, rad: self.rad, prec: self.prec }
    }

    pub fn abs(&self) -> Ball {
        Ball { man: self.man.abs(), exp: self.exp, rad: self.rad, prec: self.prec }
    }

    pub fn add(&self, other: &Ball) -> Ball {
        let prec = self.prec.max(other.prec);
        if self.man.is_zero() {
            return other.with_prec(prec).add_rad(self.rad);
        }
        if other.man.is_zero() {
            return self.with_prec(prec).add_rad(other.rad);
        }
        // Operand far below the other's last bit: absorb it into the radius.
        if self.top_exp() < other.top_exp() - prec as i64 - 4 {
            return other.with_prec(prec).add_rad(add_up(self.abs_upper(), 0.0));
        }
        if other.top_exp() < self.top_exp() - prec as i64 - 4 {
            return self.with_prec(prec).add_rad(add_up(other.abs_upper(), 0.0));
        }
        let e = self.exp.min(other.exp);
        let a = &self.man << (self.exp - e) as usize;
        let b = &other.man << (other.exp - e) as usize;
        let (man, exp, err) = round_to(a + b, e, prec);
        Ball { man, exp, rad: add_up(add_up(self.rad, other.rad), err), prec }
    }

    pub fn sub(&self, other: &Ball) -> Ball {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Ball) -> Ball {
        let prec = self.prec.max(other.prec);
        let (man, exp, err) = round_to(&self.man * &other.man, self.exp + other.exp, prec);
        let ra = self.mid_abs_up();
        let rb = other.mid_abs_up();
        let prop = add_up(add_up(ra * other.rad * UP, rb * self.rad * UP), self.rad * other.rad * UP);
        Ball { man, exp, rad: add_up(prop, err), prec }
    }

    pub fn mul_int(&self, n: i64) -> Ball {
        self.mul(&Ball::from_i64(n, self.prec))
    }

    pub fn sqr(&self) -> Ball {
        self.mul(self)
    }

    /// Division; panics if the divisor ball contains zero.
    pub fn div(&self, other: &Ball) -> Ball {
        let prec = self.prec.max(other.prec);
        let den_low = other.abs_lower();
        assert!(den_low > 0.0, "division by a ball containing zero");
        if self.man.is_zero() {
            return Ball { man: BigInt::zero(), exp: 0, rad: self.rad / den_low * UP, prec };
        }
        let s = (prec as i64 + 4 + bits(&other.man) - bits(&self.man)).max(0);
        let q = (&self.man << s as usize) / &other.man;
        let qexp = self.exp - s - other.exp;
        let trunc = pow2_up(qexp);
        let (man, exp, err) = round_to(q, qexp, prec);
        let quot = Ball { man, exp, rad: 0.0, prec };
        let prop = (self.rad + quot.mid_abs_up() * other.rad) * UP / den_low * UP;
        Ball { rad: add_up(add_up(prop, trunc), err), ..quot }
    }

    pub fn recip(&self) -> Ball {
        Ball::one(self.prec).div(self)
    }

    pub fn sqrt(&self) -> Ball {
        let prec = self.prec;
        assert!(!self.is_negative(), "sqrt of a negative ball");
        if self.man.is_zero() {
            return Ball { man: BigInt::zero(), exp: 0, rad: self.rad.sqrt() * UP, prec };
        }
        let mut s = (2 * prec as i64 + 4 - bits(&self.man)).max(0);
        if (self.exp - s).rem_euclid(2) != 0 {
            s += 1;
        }
        let m = &self.man << s as usize;
        let r = m.sqrt();
        let rexp = (self.exp - s) / 2;
        let trunc = pow2_up(rexp);
        let (man, exp, err) = round_to(r, rexp, prec);
        let lo = self.mid_abs_down() - self.rad;
        let prop = if self.rad == 0.0 {
            0.0
        } else if lo > 0.0 {
            self.rad / (lo.sqrt() / UP) * UP
        } else {
            self.rad.sqrt() * UP
        };
        Ball { man, exp, rad: add_up(add_up(prop, trunc), err), prec }
    }

    pub fn powi(&self, n: u64) -> Ball {
        let mut result = Ball::one(self.prec);
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.sqr();
            }
        }
        result
    }

    /// Multiplication by `2^k`, exact.
    pub fn ldexp(&self, k: i64) -> Ball {
        Ball { man: self.man.clone(), exp: self.exp + k, rad: self.rad * pow2_up(k), prec: self.prec }
    }

    /// Natural logarithm; panics unless the ball is strictly positive.
    pub fn ln(&self) -> Ball {
        assert!(self.is_positive(), "ln of a non-positive ball");
        let prec = self.prec;
        let wp = prec + 32;
        let b = bits(&self.man);
        // mid = y · 2^k with y in [1, 2)
        let mut k = self.exp + b - 1;
        let mut y = Ball { man: self.man.clone(), exp: -(b - 1), rad: 0.0, prec: wp };
        if y.to_f64() > std::f64::consts::SQRT_2 {
            y = y.ldexp(-1);
            k += 1;
        }
        let one = Ball::one(wp);
        let z = y.sub(&one).div(&y.add(&one));
        let series = atanh_series(&z);
        let mut out = series.ldexp(1);
        if k != 0 {
            out = out.add(&ln2(wp).mul_int(k));
        }
        let lo = self.mid_abs_down() - self.rad;
        let prop = if self.rad == 0.0 { 0.0 } else { self.rad / (lo / UP) * UP };
        out.with_prec(prec).add_rad(prop)
    }

    /// Arctangent of a ball.
    pub fn atan(&self) -> Ball {
        let prec = self.prec;
        let wp = prec + 32;
        let x = self.mid().with_prec(wp);
        let out = if x.abs_upper() <= 1.0 {
            atan_reduced(&x)
        } else {
            // atan(x) = sign(x)·π/2 − atan(1/x)
            let half_pi = pi(wp).ldexp(-1);
            let inv = atan_reduced(&x.recip());
            if x.mid_sign() == Sign::Minus {
                half_pi.neg().sub(&inv)
            } else {
                half_pi.sub(&inv)
            }
        };
        // |atan'| ≤ 1
        out.with_prec(prec).add_rad(self.rad)
    }
}

fn pow2_exact(k: i64) -> f64 {
    if k > 1023 {
        f64::INFINITY
    } else if k < -1074 {
        0.0
    } else if k < -1022 {
        2f64.powi(-1022) * 2f64.powi((k + 1022) as i32)
    } else {
        2f64.powi(k as i32)
    }
}

/// Σ z^(2j+1)/(2j+1) with a tail bound, for |z| ≤ 1/2.
fn atanh_series(z: &Ball) -> Ball {
    let wp = z.prec;
    let zf = z.abs_upper();
    assert!(zf <= 0.5);
    let z2 = z.sqr();
    let mut term = z.clone();
    let mut sum = z.clone();
    let mut j = 1i64;
    loop {
        term = term.mul(&z2);
        let t = term.div(&Ball::from_i64(2 * j + 1, wp));
        sum = sum.add(&t);
        j += 1;
        let mag = term.abs_upper();
        if mag < pow2_down(-(wp as i64) - 8) || mag == 0.0 {
            break;
        }
    }
    // tail ≤ |z|^(2j+1) / ((2j+1)(1 - z²))
    let tail = term.abs_upper() * zf * zf / (1.0 - zf * zf) * UP;
    sum.add_rad(tail)
}

/// atan for |x| ≤ 1 via three argument halvings and the Taylor series.
fn atan_reduced(x: &Ball) -> Ball {
    let wp = x.prec;
    let one = Ball::one(wp);
    let mut t = x.clone();
    for _ in 0..3 {
        let s = one.add(&t.sqr()).sqrt();
        t = t.div(&one.add(&s));
    }
    let tf = t.abs_upper();
    let t2 = t.sqr();
    let mut term = t.clone();
    let mut sum = t.clone();
    let mut j = 1i64;
    loop {
        term = term.mul(&t2).neg();
        sum = sum.add(&term.div(&Ball::from_i64(2 * j + 1, wp)));
        j += 1;
        let mag = term.abs_upper();
        if mag < pow2_down(-(wp as i64) - 8) || mag == 0.0 {
            break;
        }
    }
    let tail = term.abs_upper() * tf * tf * UP;
    sum.add_rad(tail).ldexp(3)
}

fn const_cache() -> &'static Mutex<HashMap<(u8, u32), Ball>> {
    static CACHE: OnceLock<Mutex<HashMap<(u8, u32), Ball>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(tag: u8, prec: u32, f: impl FnOnce(u32) -> Ball) -> Ball {
    if let Some(v) = const_cache().lock().unwrap().get(&(tag, prec)) {
        return v.clone();
    }
    let v = f(prec);
    const_cache().lock().unwrap().insert((tag, prec), v.clone());
    v
}

/// ln 2 = 2·atanh(1/3).
pub fn ln2(prec: u32) -> Ball {
    cached(0, prec, |p| {
        let wp = p + 16;
        let third = Ball::one(wp).div(&Ball::from_i64(3, wp));
        atanh_series(&third).ldexp(1).with_prec(p)
    })
}

/// π by Machin's formula.
pub fn pi(prec: u32) -> Ball {
    cached(1, prec, |p| {
        let wp = p + 16;
        let a = atan_small(&Ball::one(wp).div(&Ball::from_i64(5, wp)));
        let b = atan_small(&Ball::one(wp).div(&Ball::from_i64(239, wp)));
        a.mul_int(16).sub(&b.mul_int(4)).with_prec(p)
    })
}

fn atan_small(t: &Ball) -> Ball {
    let wp = t.prec;
    let tf = t.abs_upper();
    let t2 = t.sqr();
    let mut term = t.clone();
    let mut sum = t.clone();
    let mut j = 1i64;
    loop {
        term = term.mul(&t2).neg();
        sum = sum.add(&term.div(&Ball::from_i64(2 * j + 1, wp)));
        j += 1;
        let mag = term.abs_upper();
        if mag < pow2_down(-(wp as i64) - 8) || mag == 0.0 {
            break;
        }
    }
    sum.add_rad(term.abs_upper() * tf * tf * UP)
}

/// Complex ball as a pair of real balls.
#[derive(Clone, Debug)]
pub struct CBall {
    pub re: Ball,
    pub im: Ball,
}

impl CBall {
    pub fn new(re: Ball, im: Ball) -> Self {
        CBall { re, im }
    }

    pub fn real(re: Ball) -> Self {
        let p = re.prec;
        CBall { re, im: Ball::zero(p) }
    }

    pub fn zero(prec: u32) -> Self {
        CBall::real(Ball::zero(prec))
    }

    pub fn one(prec: u32) -> Self {
        CBall::real(Ball::one(prec))
    }

    pub fn prec(&self) -> u32 {
        self.re.prec.max(self.im.prec)
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        CBall { re: self.re.with_prec(prec), im: self.im.with_prec(prec) }
    }

    pub fn mid(&self) -> Self {
        CBall { re: self.re.mid(), im: self.im.mid() }
    }

    pub fn add(&self, o: &CBall) -> CBall {
        CBall { re: self.re.add(&o.re), im: self.im.add(&o.im) }
    }

    pub fn sub(&self, o: &CBall) -> CBall {
        CBall { re: self.re.sub(&o.re), im: self.im.sub(&o.im) }
    }

    pub fn neg(&self) -> CBall {
        CBall { re: self.re.neg(), im: self.im.neg() }
    }

    pub fn conj(&self) -> CBall {
        CBall { re: self.re.clone(), im: self.im.neg() }
    }

    pub fn mul(&self, o: &CBall) -> CBall {
        if self.im.man.is_zero() && self.im.rad == 0.0 {
            return o.scale(&self.re);
        }
        if o.im.man.is_zero() && o.im.rad == 0.0 {
            return self.scale(&o.re);
        }
        CBall {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }

    pub fn scale(&self, s: &Ball) -> CBall {
        CBall { re: self.re.mul(s), im: self.im.mul(s) }
    }

    pub fn norm_sqr(&self) -> Ball {
        self.re.sqr().add(&self.im.sqr())
    }

    pub fn abs(&self) -> Ball {
        let n = self.norm_sqr();
        if n.is_positive() {
            n.sqrt()
        } else {
            Ball::zero(n.prec).add_rad(n.abs_upper().sqrt() * UP)
        }
    }

    pub fn div(&self, o: &CBall) -> CBall {
        let den = o.norm_sqr();
        let num = self.mul(&o.conj());
        CBall { re: num.re.div(&den), im: num.im.div(&den) }
    }

    pub fn powi(&self, n: i64) -> CBall {
        let base = if n < 0 { CBall::one(self.prec()).div(self) } else { self.clone() };
        let mut k = n.unsigned_abs();
        let mut result = CBall::one(self.prec());
        let mut b = base;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&b);
            }
            k >>= 1;
            if k > 0 {
                b = b.mul(&b);
            }
        }
        result
    }

    /// Upper bound on the radius of the enclosing disc.
    pub fn rad(&self) -> f64 {
        add_up(self.re.rad, self.im.rad)
    }

    pub fn contains_zero(&self) -> bool {
        self.re.contains_zero() && self.im.contains_zero()
    }

    /// Principal argument in (−π, π].
    pub fn arg(&self) -> Ball {
        let prec = self.prec();
        let wp = prec + 16;
        let lower = self.abs().abs_lower();
        assert!(lower > 0.0, "argument of a ball containing zero");
        let x = self.re.mid().with_prec(wp);
        let y = self.im.mid().with_prec(wp);
        let out = if y.man.is_zero() {
            if x.man.is_negative() {
                pi(wp)
            } else {
                Ball::zero(wp)
            }
        } else if x.abs_upper() >= y.abs_upper() {
            let a = y.div(&x).atan();
            if x.man.is_negative() {
                if y.man.is_negative() {
                    a.sub(&pi(wp))
                } else {
                    a.add(&pi(wp))
                }
            } else {
                a
            }
        } else {
            let a = x.div(&y).atan();
            let half_pi = pi(wp).ldexp(-1);
            if y.man.is_negative() {
                half_pi.neg().sub(&a)
            } else {
                half_pi.sub(&a)
            }
        };
        // |Δarg| ≤ |Δz| / (|z| − |Δz|) for a disc not containing zero.
        let r = self.rad();
        let prop = if r == 0.0 { 0.0 } else { r / lower * UP };
        out.with_prec(prec).add_rad(prop)
    }

    /// log|z|.
    pub fn ln_abs(&self) -> Ball {
        self.norm_sqr().ln().ldexp(-1)
    }

    pub fn to_c64(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_and_ln2_digits() {
        let p = pi(256);
        let s = p.mid_rational();
        // 3.14159265358979323846264338327950288419716939937510
        let reference: BigRational =
            "314159265358979323846264338327950288419716939937510/100000000000000000000000000000000000000000000000000"
                .parse()
                .unwrap();
        let diff = (s - reference).abs();
        assert!(diff < BigRational::new(1.into(), BigInt::from(10).pow(48)));
        assert!(p.rad() < 1e-70);
        let l = ln2(200).to_f64();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-16);
    }

    #[test]
    fn sqrt_squares_back() {
        let two = Ball::from_i64(2, 200);
        let r = two.sqrt();
        let back = r.sqr().sub(&two);
        assert!(back.abs_upper() < 1e-55);
        assert!((r.to_f64() - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn ln_matches_f64_and_encloses() {
        for &x in &[0.034665, 1.0, 2.5, 1e-20, 7.0e12] {
            let b = Ball::from_f64(x, 160);
            let l = b.ln();
            assert!((l.to_f64() - x.ln()).abs() < 1e-13 * (1.0 + x.ln().abs()), "{x}");
            assert!(l.rad() < 1e-40);
        }
        let one = Ball::one(128).ln();
        assert!(one.abs_upper() < 1e-35);
    }

    #[test]
    fn arg_quadrants() {
        let p = 128;
        let c = |a: f64, b: f64| CBall::new(Ball::from_f64(a, p), Ball::from_f64(b, p));
        for &(a, b) in &[(1.0, 0.0), (1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (0.3, -2.0), (-2.0, 0.0), (0.0, 3.0)] {
            let g = c(a, b).arg().to_f64();
            assert!((g - b.atan2(a)).abs() < 1e-14, "{a} {b}");
        }
    }

    #[test]
    fn division_and_rational_conversion() {
        let q: BigRational = "22/7".parse().unwrap();
        let b = Ball::from_rational(&q, 200);
        let back = b.mul(&Ball::from_i64(7, 200)).sub(&Ball::from_i64(22, 200));
        assert!(back.abs_upper() < 1e-55);
    }
}
