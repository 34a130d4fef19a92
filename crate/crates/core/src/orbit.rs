//! Points of the torus `T^d = R^d / Z^d` (lattice-basis coordinates) and
//! their partial orbits.

use std::collections::HashSet;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::action::Action;
use crate::ball::Ball;
use crate::error::{Error, Result};
use crate::linalg::{ball_mat_vec, rat_to_f64};
use crate::output::{decimal, float};
use crate::slice::SliceElement;

/// Guarded points whose error radius reaches this bound are degraded.
pub const DEGRADATION_RADIUS: f64 = 1.0 / 4_294_967_296.0;

/// Default mantissa width of guarded points.
pub const DEFAULT_BITS: u32 = 128;

#[derive(Clone, Debug, PartialEq)]
pub enum TorusPoint {
    /// `num_i / den`, with `0 ≤ num_i < den` and `gcd(num, den) = 1`.
    Exact { num: Vec<BigInt>, den: BigInt },
    /// `mant_i / 2^bits` known up to `radius` in every coordinate.
    Guarded { mant: Vec<BigInt>, bits: u32, radius: f64, degraded: bool },
}

impl TorusPoint {
    pub fn zero(d: usize) -> TorusPoint {
        TorusPoint::Exact { num: vec![BigInt::zero(); d], den: BigInt::one() }
    }

    /// Exact rational point, reduced mod 1.
    pub fn exact(coords: &[BigRational]) -> TorusPoint {
        let den = coords.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let num = coords.iter().map(|c| (c.numer() * (&den / c.denom())).mod_floor(&den)).collect();
        TorusPoint::Exact { num, den }.normalized()
    }

    pub fn exact_i64(num: &[i64], den: i64) -> TorusPoint {
        let c: Vec<BigRational> = num.iter().map(|&x| BigRational::new(x.into(), den.into())).collect();
        Self::exact(&c)
    }

    /// Guarded point from balls; the midpoints are rounded to `bits` bits.
    pub fn guarded(coords: &[Ball], bits: u32) -> TorusPoint {
        let scale = BigInt::one() << bits as usize;
        let mut radius = 0.0f64;
        let mant = coords
            .iter()
            .map(|b| {
                let m = b.mid_rational() * BigRational::from_integer(scale.clone());
                radius = radius.max(b.rad());
                m.round().to_integer().mod_floor(&scale)
            })
            .collect();
        radius += 2f64.powi(-(bits as i32) - 1);
        TorusPoint::Guarded { mant, bits, radius, degraded: radius >= DEGRADATION_RADIUS }
    }

    /// Dyadic point with independent uniform coordinates; the radius is zero
    /// since the value is the point itself.
    pub fn random_dyadic(d: usize, bits: u32, seed: u64) -> TorusPoint {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words = bits.div_ceil(32) as usize;
        let mant = (0..d)
            .map(|_| {
                let digits: Vec<u32> = (0..words).map(|_| rng.gen()).collect();
                let v = BigInt::from_slice(Sign::Plus, &digits);
                v >> (words * 32 - bits as usize)
            })
            .collect();
        TorusPoint::Guarded { mant, bits, radius: 0.0, degraded: false }
    }

    fn normalized(self) -> TorusPoint {
        match self {
            TorusPoint::Exact { num, den } => {
                let g = num.iter().fold(den.clone(), |acc, x| acc.gcd(x));
                if g.is_one() {
                    TorusPoint::Exact { num, den }
                } else {
                    TorusPoint::Exact { num: num.iter().map(|x| x / &g).collect(), den: &den / &g }
                }
            }
            g => g,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TorusPoint::Exact { num, .. } => num.len(),
            TorusPoint::Guarded { mant, .. } => mant.len(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, TorusPoint::Exact { .. })
    }

    pub fn is_degraded(&self) -> bool {
        matches!(self, TorusPoint::Guarded { degraded: true, .. })
    }

    /// Common denominator for exact points, 0 for guarded ones.
    pub fn denominator(&self) -> BigInt {
        match self {
            TorusPoint::Exact { den, .. } => den.clone(),
            TorusPoint::Guarded { .. } => BigInt::zero(),
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            TorusPoint::Exact { .. } => 0.0,
            TorusPoint::Guarded { radius, .. } => *radius,
        }
    }

    /// Coordinates in `[0, 1)` as rationals (midpoints for guarded points).
    pub fn coords_rational(&self) -> Vec<BigRational> {
        match self {
            TorusPoint::Exact { num, den } => num.iter().map(|x| BigRational::new(x.clone(), den.clone())).collect(),
            TorusPoint::Guarded { mant, bits, .. } => {
                let scale = BigInt::one() << *bits as usize;
                mant.iter().map(|x| BigRational::new(x.clone(), scale.clone())).collect()
            }
        }
    }

    pub fn coords_f64(&self) -> Vec<f64> {
        match self {
            TorusPoint::Exact { num, den } => {
                num.iter().map(|x| rat_to_f64(&BigRational::new(x.clone(), den.clone()))).collect()
            }
            TorusPoint::Guarded { mant, bits, .. } => {
                mant.iter().map(|x| big_to_f64(x) * 2f64.powi(-(*bits as i32))).collect()
            }
        }
    }

    /// Coordinates as balls carrying the error radius.
    pub fn coords_ball(&self, prec: u32) -> Vec<Ball> {
        match self {
            TorusPoint::Exact { .. } => self.coords_rational().iter().map(|c| Ball::from_rational(c, prec)).collect(),
            TorusPoint::Guarded { mant, bits, radius, .. } => mant
                .iter()
                .map(|x| Ball::from_int(x, prec.max(*bits + 8)).ldexp(-(*bits as i64)).with_prec(prec).add_rad(*radius))
                .collect(),
        }
    }

    /// Key identifying the point exactly, for counting distinct points.
    pub fn key(&self) -> Vec<BigInt> {
        match self {
            TorusPoint::Exact { num, den } => num.iter().cloned().chain(std::iter::once(den.clone())).collect(),
            TorusPoint::Guarded { mant, .. } => mant.clone(),
        }
    }

    pub fn translate(&self, other: &TorusPoint) -> Result<TorusPoint> {
        match (self, other) {
            (TorusPoint::Exact { .. }, TorusPoint::Exact { .. }) => {
                let a = self.coords_rational();
                let b = other.coords_rational();
                Ok(TorusPoint::exact(&a.iter().zip(&b).map(|(x, y)| x + y).collect::<Vec<_>>()))
            }
            _ => {
                let bits = match (self, other) {
                    (TorusPoint::Guarded { bits, .. }, TorusPoint::Guarded { bits: b2, .. }) => (*bits).max(*b2),
                    (TorusPoint::Guarded { bits, .. }, _) | (_, TorusPoint::Guarded { bits, .. }) => *bits,
                    _ => unreachable!(),
                };
                let prec = bits + 64;
                let a = self.coords_ball(prec);
                let b = other.coords_ball(prec);
                let sum: Vec<Ball> = a.iter().zip(&b).map(|(x, y)| x.add(y)).collect();
                Ok(TorusPoint::guarded(&sum, bits))
            }
        }
    }
}

pub(crate) fn big_to_f64(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// `ζ^n.x`, computed as `M^n x mod 1` with a single application of the exact
/// matrix.
pub fn act(action: &Action, n: &[i64], x: &TorusPoint) -> Result<TorusPoint> {
    if x.dim() != action.degree() {
        return Err(Error::Dimension(format!("point has {} coordinates, expected {}", x.dim(), action.degree())));
    }
    let m = action.matrix(n)?;
    match x {
        TorusPoint::Exact { num, den } => {
            let y = m.mul_vec(num).into_iter().map(|v| v.mod_floor(den)).collect();
            Ok(TorusPoint::Exact { num: y, den: den.clone() })
        }
        TorusPoint::Guarded { mant, bits, radius, degraded } => {
            let scale = BigInt::one() << *bits as usize;
            let y = m.mul_vec(mant).into_iter().map(|v| v.mod_floor(&scale)).collect();
            let r = radius * big_to_f64(&m.inf_norm());
            if r >= DEGRADATION_RADIUS && !degraded {
                return Err(Error::Degraded { n: n.to_vec(), radius: r });
            }
            Ok(TorusPoint::Guarded { mant: y, bits: *bits, radius: r, degraded: *degraded })
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OrbitMeta {
    pub eps: f64,
    pub s: Vec<usize>,
    pub n_box: i64,
    pub angle_constrained: bool,
}

#[derive(Clone, Debug)]
pub struct OrbitSample {
    pub elements: Vec<Vec<i64>>,
    pub points: Vec<TorusPoint>,
    /// `‖M^n‖_∞` per point.
    pub norms: Vec<BigInt>,
    pub radii: Vec<f64>,
    pub meta: OrbitMeta,
}

impl OrbitSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distinct_count(&self) -> usize {
        self.points.iter().map(|p| p.key()).collect::<HashSet<_>>().len()
    }

    pub fn coords_f64(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.coords_f64()).collect()
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with columns `n_1..n_r, x_1..x_d, err_radius, denominator`.
    pub fn to_csv(&self) -> String {
        let r = self.elements.first().map_or(0, |n| n.len());
        let d = self.points.first().map_or(0, |p| p.dim());
        let mut header: Vec<String> = (1..=r).map(|k| format!("n_{k}")).collect();
        header.extend((1..=d).map(|k| format!("x_{k}")));
        header.push("err_radius".into());
        header.push("denominator".into());
        let mut out = header.join(",");
        out.push('\n');
        for ((n, p), rad) in self.elements.iter().zip(&self.points).zip(&self.radii) {
            let mut row: Vec<String> = n.iter().map(|k| k.to_string()).collect();
            row.extend(p.coords_rational().iter().map(|c| decimal(c, 30)));
            row.push(float(*rad));
            row.push(p.denominator().to_string());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Applies every element in order; the first degraded element aborts.
pub fn partial_orbit_of(action: &Action, x: &TorusPoint, elements: &[Vec<i64>], meta: OrbitMeta) -> Result<OrbitSample> {
    let results: Vec<Result<(TorusPoint, BigInt)>> = elements
        .par_iter()
        .map(|n| {
            let y = act(action, n, x)?;
            Ok((y, action.matrix(n)?.inf_norm()))
        })
        .collect();
    let mut points = Vec::with_capacity(elements.len());
    let mut norms = Vec::with_capacity(elements.len());
    let mut radii = Vec::with_capacity(elements.len());
    for r in results {
        let (p, m) = r?;
        radii.push(p.radius());
        points.push(p);
        norms.push(m);
    }
    Ok(OrbitSample { elements: elements.to_vec(), points, norms, radii, meta })
}

/// Partial orbit over the elements of an enumerated slice.
pub fn partial_orbit(action: &Action, x: &TorusPoint, slice: &[SliceElement], meta: OrbitMeta) -> Result<OrbitSample> {
    let elements: Vec<Vec<i64>> = slice.iter().map(|e| e.n.clone()).collect();
    partial_orbit_of(action, x, &elements, meta)
}

/// `ψ̃(x̃)` for the lift `x̃ ∈ [0, 1)^d`: split coordinates over the places.
pub fn to_embedding_frame(action: &Action, x: &TorusPoint) -> Result<Vec<Ball>> {
    if x.dim() != action.degree() {
        return Err(Error::Dimension(format!("point has {} coordinates, expected {}", x.dim(), action.degree())));
    }
    let wp = action.field().working_prec();
    let y = ball_mat_vec(&action.conjugacy_map().psi, &x.coords_ball(wp));
    let worst = y.iter().map(|b| b.rad()).fold(0.0, f64::max);
    if worst >= DEGRADATION_RADIUS {
        return Err(Error::Precision(format!("embedding-frame radius {worst:e}")));
    }
    Ok(y)
}

/// Point of `T^d` from split embedding-frame coordinates: `π(ψ̃^{-1}(y))`.
pub fn from_embedding_frame(action: &Action, y: &[Ball], bits: u32) -> Result<TorusPoint> {
    if y.len() != action.degree() {
        return Err(Error::Dimension(format!("{} split coordinates, expected {}", y.len(), action.degree())));
    }
    let x = ball_mat_vec(&action.conjugacy_map().psi_inv, y);
    let p = TorusPoint::guarded(&x, bits);
    if p.is_degraded() {
        return Err(Error::Precision(format!("radius {:e} after ψ̃^{{-1}}", p.radius())));
    }
    Ok(p)
}

/// Signed difference `a − b` on the nearest lift, coordinates in `[−1/2, 1/2)`.
pub fn torus_diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| wrap(x - y)).collect()
}

pub fn wrap(t: f64) -> f64 {
    t - (t + 0.5).floor()
}

pub fn torus_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| wrap(x - y).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::NumberField;
    use crate::poly::q;

    fn sqrt2() -> Action {
        let f = NumberField::build_i64(&[1, 0, -2], 128).unwrap();
        let u = f.element_i64(&[-1, 1]);
        Action::build(f, vec![u]).unwrap()
    }

    #[test]
    fn exact_reduction() {
        let p = TorusPoint::exact(&[q(-1) / q(5), q(7) / q(10)]);
        assert_eq!(p, TorusPoint::Exact { num: vec![8.into(), 7.into()], den: 10.into() });
        assert_eq!(TorusPoint::exact(&[q(2) / q(4), q(0)]).denominator(), BigInt::from(2));
    }

    #[test]
    fn sqrt2_example() {
        let a = sqrt2();
        let x = TorusPoint::exact_i64(&[1, 2], 5);
        assert_eq!(act(&a, &[1], &x).unwrap(), TorusPoint::exact_i64(&[3, 4], 5));
        assert_eq!(act(&a, &[7], &TorusPoint::zero(2)).unwrap(), TorusPoint::zero(2));
    }

    #[test]
    fn guarded_degrades() {
        let a = sqrt2();
        let x = TorusPoint::guarded(&[Ball::from_f64(0.3, 200), Ball::from_f64(0.6, 200)], 64);
        assert!(act(&a, &[10], &x).is_ok());
        match act(&a, &[40], &x) {
            Err(Error::Degraded { n, .. }) => assert_eq!(n, vec![40]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn embedding_frame_half() {
        let a = sqrt2();
        let y = to_embedding_frame(&a, &TorusPoint::exact_i64(&[1, 0], 2)).unwrap();
        for c in &y {
            assert!((c.to_f64() - 0.5).abs() < 1e-30);
        }
        let back = from_embedding_frame(&a, &y, 96).unwrap();
        let c = back.coords_f64();
        assert!((c[0] - 0.5).abs() < 1e-15 && c[1].abs() < 1e-15);
    }

    #[test]
    fn orbit_csv_and_counts() {
        let a = sqrt2();
        let x = TorusPoint::exact_i64(&[1, 2], 5);
        let els: Vec<Vec<i64>> = (-6..=6).map(|k| vec![k]).collect();
        let o = partial_orbit_of(&a, &x, &els, OrbitMeta::default()).unwrap();
        assert!(o.distinct_count() <= 25);
        let csv = o.to_csv();
        assert!(csv.starts_with("n_1,x_1,x_2,err_radius,denominator\n"));
        assert_eq!(csv.lines().count(), 14);
        assert!(csv.lines().nth(1).unwrap().ends_with(",0,5"));
    }

    #[test]
    fn random_dyadic_is_deterministic() {
        let a = TorusPoint::random_dyadic(3, 64, 9);
        assert_eq!(a, TorusPoint::random_dyadic(3, 64, 9));
        assert!(a.coords_f64().iter().all(|&c| (0.0..1.0).contains(&c)));
    }

    #[test]
    fn wrap_range() {
        assert!((wrap(0.75) + 0.25).abs() < 1e-15);
        assert!((torus_dist(&[0.95, 0.0], &[0.05, 0.0]) - 0.1).abs() < 1e-12);
    }
}
