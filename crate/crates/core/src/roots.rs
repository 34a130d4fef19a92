//! Certified isolation of all complex roots of a squarefree integer polynomial.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

use crate::ball::{Ball, CBall};
use crate::error::{Error, Result};

/// Roots in canonical order: real roots descending, then upper-half-plane
/// roots by (re, im). Each root is a ball whose radius encloses the true root.
#[derive(Clone, Debug)]
pub struct IsolatedRoots {
    pub real: Vec<Ball>,
    pub upper: Vec<CBall>,
}

fn aberth_f64(coeffs: &[f64]) -> Vec<Complex64> {
    let d = coeffs.len() - 1;
    let lead = coeffs[d];
    let eval = |z: Complex64| {
        let mut p = Complex64::new(coeffs[d], 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for k in (0..d).rev() {
            dp = dp * z + p;
            p = p * z + coeffs[k];
        }
        (p, dp)
    };
    let bound = 1.0 + coeffs[..d].iter().map(|c| (c / lead).abs()).fold(0.0, f64::max);
    let r0 = bound.min(1e6) * 0.5 + 0.1;
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| Complex64::from_polar(r0, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / d as f64 + 0.4))
        .collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..d {
            let (p, dp) = eval(z[i]);
            if p == Complex64::zero() {
                continue;
            }
            let ratio = p / dp;
            let s: Complex64 = (0..d).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if w.is_finite() {
                z[i] -= w;
                moved = moved.max(w.norm() / (1.0 + z[i].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

fn horner(coeffs: &[BigInt], z: &CBall, prec: u32) -> (CBall, CBall) {
    let d = coeffs.len() - 1;
    let mut p = CBall::real(Ball::from_int(&coeffs[d], prec));
    let mut dp = CBall::zero(prec);
    for k in (0..d).rev() {
        dp = dp.mul(z).add(&p);
        p = p.mul(z).add(&CBall::real(Ball::from_int(&coeffs[k], prec)));
    }
    (p, dp)
}

fn horner_real(coeffs: &[BigInt], x: &Ball, prec: u32) -> (Ball, Ball) {
    let d = coeffs.len() - 1;
    let mut p = Ball::from_int(&coeffs[d], prec);
    let mut dp = Ball::zero(prec);
    for k in (0..d).rev() {
        dp = dp.mul(x).add(&p);
        p = p.mul(x).add(&Ball::from_int(&coeffs[k], prec));
    }
    (p, dp)
}

/// Simultaneous (Aberth) refinement on midpoints at the given precision.
fn polish(coeffs: &[BigInt], z: &mut [CBall], prec: u32, rounds: usize) {
    let d = z.len();
    for _ in 0..rounds {
        for i in 0..d {
            let (p, dp) = horner(coeffs, &z[i], prec);
            let (p, dp) = (p.mid(), dp.mid());
            if p.re.abs_upper() == 0.0 && p.im.abs_upper() == 0.0 {
                continue;
            }
            if dp.contains_zero() {
                continue;
            }
            let ratio = p.div(&dp).mid();
            let mut s = CBall::zero(prec);
            for j in 0..d {
                if j != i {
                    let diff = z[i].sub(&z[j]).mid();
                    if diff.contains_zero() {
                        continue;
                    }
                    s = s.add(&CBall::one(prec).div(&diff)).mid();
                }
            }
            let denom = CBall::one(prec).sub(&ratio.mul(&s)).mid();
            if denom.contains_zero() {
                continue;
            }
            let w = ratio.div(&denom).mid();
            z[i] = z[i].sub(&w).mid();
        }
    }
}

/// Radius of a disc around `z` guaranteed to contain a root: `d·|f(z)/f'(z)|`.
fn inclusion_radius(coeffs: &[BigInt], z: &CBall, prec: u32) -> Option<f64> {
    let d = (coeffs.len() - 1) as f64;
    let (p, dp) = horner(coeffs, z, prec);
    let lo = dp.abs().abs_lower();
    if lo == 0.0 {
        return None;
    }
    Some(d * p.abs().abs_upper() / lo * (1.0 + 1e-12) + z.rad())
}

fn inclusion_radius_real(coeffs: &[BigInt], x: &Ball, prec: u32) -> Option<f64> {
    let d = (coeffs.len() - 1) as f64;
    let (p, dp) = horner_real(coeffs, x, prec);
    let lo = dp.abs_lower();
    if lo == 0.0 {
        return None;
    }
    Some(d * p.abs_upper() / lo * (1.0 + 1e-12) + x.rad())
}

/// Isolates the roots of the monic squarefree polynomial with integer
/// coefficients `coeffs` (lowest degree first). Enclosure radii are below
/// `2^-target_bits`.
pub fn isolate(coeffs: &[BigInt], target_bits: u32) -> Result<IsolatedRoots> {
    let d = coeffs.len() - 1;
    let prec = 2 * target_bits + 64;
    let fl: Vec<f64> = coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::MAX)).collect();
    let approx = aberth_f64(&fl);
    let mut z: Vec<CBall> = approx
        .iter()
        .map(|c| CBall::new(Ball::from_f64(c.re, prec), Ball::from_f64(c.im, prec)))
        .collect();
    // Newton-type convergence doubles correct bits per round.
    let rounds = 6 + (prec as f64 / 40.0).log2().ceil().max(0.0) as usize;
    polish(coeffs, &mut z, prec, rounds);

    let snap = Ball::one(prec).ldexp(-(target_bits as i64) - 8).to_f64();
    let mut reals = Vec::new();
    let mut uppers = Vec::new();
    let mut lowers = 0usize;
    for zi in &z {
        let im = zi.im.to_f64();
        if im.abs() <= snap {
            let mut x = zi.re.mid();
            for _ in 0..3 {
                let (p, dp) = horner_real(coeffs, &x, prec);
                if dp.contains_zero() {
                    break;
                }
                x = x.sub(&p.mid().div(&dp.mid())).mid();
            }
            reals.push(x);
        } else if im > 0.0 {
            uppers.push(zi.clone());
        } else {
            lowers += 1;
        }
    }
    if uppers.len() != lowers || reals.len() + 2 * uppers.len() != d {
        return Err(Error::Precision("root approximations are not closed under conjugation".into()));
    }

    // Certification: inclusion discs, pairwise disjoint, uppers off the real axis.
    let limit = Ball::one(64).ldexp(-(target_bits as i64)).to_f64();
    let mut discs: Vec<(f64, f64, f64)> = Vec::with_capacity(d);
    let mut real_balls = Vec::with_capacity(reals.len());
    for x in &reals {
        let r = inclusion_radius_real(coeffs, x, prec)
            .ok_or_else(|| Error::Precision("derivative vanishes at a real root".into()))?;
        if !(r < limit) {
            return Err(Error::Precision(format!("real root enclosure radius {r:e} too large")));
        }
        discs.push((x.to_f64(), 0.0, r));
        real_balls.push(x.clone().add_rad(r));
    }
    let mut upper_balls = Vec::with_capacity(uppers.len());
    for zi in &uppers {
        let r = inclusion_radius(coeffs, zi, prec)
            .ok_or_else(|| Error::Precision("derivative vanishes at a complex root".into()))?;
        if !(r < limit) {
            return Err(Error::Precision(format!("complex root enclosure radius {r:e} too large")));
        }
        let (re, im) = (zi.re.to_f64(), zi.im.to_f64());
        if im <= r {
            return Err(Error::Precision("complex root enclosure touches the real axis".into()));
        }
        discs.push((re, im, r));
        discs.push((re, -im, r));
        upper_balls.push(CBall::new(zi.re.clone().add_rad(r), zi.im.clone().add_rad(r)));
    }
    for i in 0..discs.len() {
        for j in i + 1..discs.len() {
            let (a, b) = (discs[i], discs[j]);
            let dist = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
            if dist <= (a.2 + b.2) * (1.0 + 1e-9) {
                return Err(Error::Precision("root enclosures overlap".into()));
            }
        }
    }

    real_balls.sort_by(|a, b| b.to_f64().partial_cmp(&a.to_f64()).unwrap());
    upper_balls.sort_by(|a, b| {
        (a.re.to_f64(), a.im.to_f64()).partial_cmp(&(b.re.to_f64(), b.im.to_f64())).unwrap()
    });
    Ok(IsolatedRoots { real: real_balls, upper: upper_balls })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(c: &[i64]) -> Vec<BigInt> {
        c.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn sqrt2_roots_descending() {
        let r = isolate(&ints(&[-2, 0, 1]), 128).unwrap();
        assert_eq!(r.real.len(), 2);
        assert!(r.upper.is_empty());
        assert!((r.real[0].to_f64() - 2f64.sqrt()).abs() < 1e-15);
        assert!((r.real[1].to_f64() + 2f64.sqrt()).abs() < 1e-15);
        assert!(r.real[0].rad() < 2f64.powi(-128));
    }

    #[test]
    fn gaussian_integer_root() {
        let r = isolate(&ints(&[1, 0, 1]), 128).unwrap();
        assert!(r.real.is_empty());
        assert_eq!(r.upper.len(), 1);
        assert!((r.upper[0].im.to_f64() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn octic_signature() {
        let r = isolate(&ints(&[1, 32, 96, 144, 132, 80, 32, 8, 1]), 128).unwrap();
        assert_eq!(r.real.len(), 2);
        assert_eq!(r.upper.len(), 3);
    }

    #[test]
    fn wilkinson_like_cluster() {
        // (x-1)(x-2)...(x-10) + 1 has ten well-separated real roots
        let mut p = vec![BigInt::from(1)];
        for k in 1..=10 {
            let mut q = vec![BigInt::zero(); p.len() + 1];
            for (i, c) in p.iter().enumerate() {
                q[i + 1] += c;
                q[i] -= c * BigInt::from(k);
            }
            p = q;
        }
        p[0] += 1;
        let r = isolate(&p, 128).unwrap();
        assert_eq!(r.real.len() + 2 * r.upper.len(), 10);
    }
}
