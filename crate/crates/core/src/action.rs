//! The Z^r-action by toral automorphisms attached to r independent units,
//! realised as integer matrices on an invariant lattice Γ ⊂ K.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use parking_lot::Mutex;

use crate::ball::{pi, Ball, CBall};
use crate::error::{Error, Result};
use crate::field::{EmbeddingVector, FieldElement, NumberField};
use crate::linalg::{ball_mat_inverse, ball_mat_mul, hnf_rows, QMat, ZMat};
use crate::numeric;
use crate::poly::{cyclotomic, euler_phi, QPoly};

/// Arguments are recomputed from unit-modulus phases past this `|n|_1`.
pub const ARG_ACCUMULATION_THRESHOLD: i64 = 1000;

/// Relative singular-value cutoff for rank decisions.
pub const RANK_CUTOFF: f64 = 1e-9;

/// Real linear map `ψ̃` from lattice coordinates to `R^{r1} ⊕ C^{r2}` split
/// into real coordinates (complex places contribute `(Re, Im)`).
#[derive(Clone, Debug)]
pub struct ConjugacyMap {
    pub psi: Vec<Vec<Ball>>,
    pub psi_inv: Vec<Vec<Ball>>,
    pub psi_f64: Vec<Vec<f64>>,
    pub psi_inv_f64: Vec<Vec<f64>>,
    /// Largest entry bound of `ψ̃ M_k ψ̃^{-1} − blockdiag(σ_i(ζ^{e_k}))`.
    pub residual: f64,
    /// Largest radius among the entries of `ψ̃` and its inverse.
    pub entry_error: f64,
    /// For each split coordinate, the place it belongs to.
    pub coord_place: Vec<usize>,
}

impl ConjugacyMap {
    /// Split coordinates belonging to the given set of places.
    pub fn coords_of(&self, places: &[usize]) -> Vec<usize> {
        (0..self.coord_place.len()).filter(|&c| places.contains(&self.coord_place[c])).collect()
    }

    pub fn apply_f64(&self, x: &[f64]) -> Vec<f64> {
        numeric::mat_vec(&self.psi_f64, x)
    }

    pub fn apply_inv_f64(&self, y: &[f64]) -> Vec<f64> {
        numeric::mat_vec(&self.psi_inv_f64, y)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IrreducibilityReport {
    pub degree: usize,
    pub irreducible: bool,
    pub totally_irreducible_certificate: bool,
}

pub struct Action {
    field: NumberField,
    generators: Vec<FieldElement>,
    gen_inverses: Vec<FieldElement>,
    lattice_basis: QMat,
    lattice_inv: QMat,
    gen_matrices: Vec<ZMat>,
    gen_matrix_inverses: Vec<ZMat>,
    gen_embeddings: Vec<EmbeddingVector>,
    lyapunov: Vec<Vec<Ball>>,
    lyapunov_f64: Vec<Vec<f64>>,
    args: Vec<Vec<Ball>>,
    args_f64: Vec<Vec<f64>>,
    phases: Vec<Vec<CBall>>,
    conj: ConjugacyMap,
    power_cache: Mutex<HashMap<(usize, i64), ZMat>>,
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Action")
            .field("degree", &self.field.degree())
            .field("rank", &self.generators.len())
            .field("generators", &self.generators)
            .field("gen_matrices", &self.gen_matrices)
            .finish()
    }
}

impl Action {
    pub fn build(field: NumberField, generators: Vec<FieldElement>) -> Result<Action> {
        let d = field.degree();
        let r = generators.len();
        if r == 0 {
            return Err(Error::InvalidGenerator("at least one generator is required".into()));
        }
        for (k, g) in generators.iter().enumerate() {
            if g.degree_bound() != d {
                return Err(Error::Dimension(format!("generator {} has {} coefficients, expected {d}", k + 1, g.degree_bound())));
            }
            if g.is_zero() {
                return Err(Error::NotAUnit(format!("generator {} is zero", k + 1)));
            }
            let (n, unit) = field.norm_and_unit_test(g)?;
            if !unit {
                return Err(Error::NotAUnit(format!("generator {} has norm {n} or is not integral", k + 1)));
            }
        }
        let gen_inverses: Vec<FieldElement> = generators.iter().map(|g| field.inverse(g)).collect::<Result<_>>()?;
        let wp = field.working_prec();
        let gen_embeddings: Vec<EmbeddingVector> = generators.iter().map(|g| field.embed(g)).collect::<Result<_>>()?;
        let places = field.places();
        let mut lyapunov = vec![Vec::with_capacity(r); places];
        let mut args = vec![Vec::with_capacity(r); places];
        let mut phases = vec![Vec::with_capacity(r); places];
        for emb in &gen_embeddings {
            for (i, z) in emb.entries.iter().enumerate() {
                let abs = z.abs();
                lyapunov[i].push(abs.ln());
                args[i].push(z.arg());
                phases[i].push(CBall::new(z.re.div(&abs), z.im.div(&abs)));
            }
        }
        let lyapunov_f64: Vec<Vec<f64>> = lyapunov.iter().map(|row| row.iter().map(|b| b.to_f64()).collect()).collect();
        let args_f64: Vec<Vec<f64>> = args.iter().map(|row| row.iter().map(|b| b.to_f64()).collect()).collect();

        check_independence(&field, &generators, &lyapunov_f64, &args_f64)?;

        let mults: Vec<QMat> = generators.iter().map(|g| field.mult_matrix(g)).collect();
        let inv_mults: Vec<QMat> = gen_inverses.iter().map(|g| field.mult_matrix(g)).collect();
        let lattice_basis = saturate_lattice(&field, &mults, &inv_mults)?;
        let lattice_inv = lattice_basis.inverse().ok_or_else(|| Error::Lattice("singular lattice basis".into()))?;
        let mut gen_matrices = Vec::with_capacity(r);
        let mut gen_matrix_inverses = Vec::with_capacity(r);
        for (k, (a, ai)) in mults.iter().zip(&inv_mults).enumerate() {
            let m = lattice_inv
                .mul(a)
                .mul(&lattice_basis)
                .to_zmat()
                .ok_or_else(|| Error::Lattice(format!("generator {} is not integral on the lattice", k + 1)))?;
            let mi = lattice_inv
                .mul(ai)
                .mul(&lattice_basis)
                .to_zmat()
                .ok_or_else(|| Error::Lattice(format!("inverse of generator {} is not integral on the lattice", k + 1)))?;
            if !m.det().abs().is_one() {
                return Err(Error::Lattice(format!("generator {} matrix has determinant {}", k + 1, m.det())));
            }
            gen_matrices.push(m);
            gen_matrix_inverses.push(mi);
        }
        let conj = build_conjugacy(&field, &lattice_basis, &gen_matrices, &gen_embeddings, wp)?;
        Ok(Action {
            field,
            generators,
            gen_inverses,
            lattice_basis,
            lattice_inv,
            gen_matrices,
            gen_matrix_inverses,
            gen_embeddings,
            lyapunov,
            lyapunov_f64,
            args,
            args_f64,
            phases,
            conj,
            power_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn field(&self) -> &NumberField {
        &self.field
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn degree(&self) -> usize {
        self.field.degree()
    }

    pub fn places(&self) -> usize {
        self.field.places()
    }

    pub fn generators(&self) -> &[FieldElement] {
        &self.generators
    }

    /// Columns span Γ in power-basis coordinates.
    pub fn lattice_basis(&self) -> &QMat {
        &self.lattice_basis
    }

    pub fn lattice_inverse(&self) -> &QMat {
        &self.lattice_inv
    }

    pub fn gen_matrices(&self) -> &[ZMat] {
        &self.gen_matrices
    }

    pub fn generator_embeddings(&self) -> &[EmbeddingVector] {
        &self.gen_embeddings
    }

    /// `Λ_{i,k} = λ_i(e_k)` as balls.
    pub fn lyapunov_matrix(&self) -> &[Vec<Ball>] {
        &self.lyapunov
    }

    pub fn lyapunov_matrix_f64(&self) -> &[Vec<f64>] {
        &self.lyapunov_f64
    }

    /// `β_j(e_k)` in `(−π, π]`.
    pub fn arg_matrix(&self) -> &[Vec<Ball>] {
        &self.args
    }

    pub fn arg_matrix_f64(&self) -> &[Vec<f64>] {
        &self.args_f64
    }

    pub fn conjugacy_map(&self) -> &ConjugacyMap {
        &self.conj
    }

    fn check_n(&self, n: &[i64]) -> Result<()> {
        if n.len() != self.rank() {
            return Err(Error::Dimension(format!("group element has {} entries, expected {}", n.len(), self.rank())));
        }
        Ok(())
    }

    fn generator_power(&self, k: usize, e: i64) -> ZMat {
        if e == 0 {
            return ZMat::identity(self.degree());
        }
        let cacheable = e.unsigned_abs() <= 4096;
        if cacheable {
            if let Some(m) = self.power_cache.lock().get(&(k, e)) {
                return m.clone();
            }
        }
        let base = if e > 0 { &self.gen_matrices[k] } else { &self.gen_matrix_inverses[k] };
        let m = base.pow(e.unsigned_abs());
        if cacheable {
            self.power_cache.lock().insert((k, e), m.clone());
        }
        m
    }

    /// Exact integer matrix `M^n = Π M_k^{n_k}` in the lattice basis.
    pub fn matrix(&self, n: &[i64]) -> Result<ZMat> {
        self.check_n(n)?;
        let mut m = ZMat::identity(self.degree());
        for (k, &e) in n.iter().enumerate() {
            if e != 0 {
                m = m.mul(&self.generator_power(k, e));
            }
        }
        Ok(m)
    }

    /// Exact `ζ^n ∈ K`.
    pub fn zeta(&self, n: &[i64]) -> Result<FieldElement> {
        self.check_n(n)?;
        let mut acc = self.field.one();
        for (k, &e) in n.iter().enumerate() {
            if e != 0 {
                let base = if e > 0 { &self.generators[k] } else { &self.gen_inverses[k] };
                acc = self.field.mul(&acc, &self.field.pow(base, e.abs())?);
            }
        }
        Ok(acc)
    }

    /// `(ζ^n, M^n)`.
    pub fn group_element(&self, n: &[i64]) -> Result<(FieldElement, ZMat)> {
        Ok((self.zeta(n)?, self.matrix(n)?))
    }

    /// Certified `σ_i(ζ^n)` for every place, as products of generator values.
    pub fn place_values(&self, n: &[i64]) -> Result<Vec<CBall>> {
        self.check_n(n)?;
        let wp = self.field.working_prec();
        let mut out = vec![CBall::one(wp); self.places()];
        for (k, &e) in n.iter().enumerate() {
            if e == 0 {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o = o.mul(&self.gen_embeddings[k].entries[i].powi(e));
            }
        }
        Ok(out)
    }

    /// `λ_i(n)` and `β_j(n)` in floating point.
    pub fn lyapunov_of(&self, n: &[i64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (l, b) = self.lyapunov_of_ball(n)?;
        Ok((l.iter().map(|x| x.to_f64()).collect(), b.iter().map(|x| x.to_f64()).collect()))
    }

    /// Fast `λ_i(n)` without ball arithmetic.
    pub fn lyapunov_f64(&self, n: &[i64]) -> Vec<f64> {
        self.lyapunov_f64.iter().map(|row| row.iter().zip(n).map(|(l, &k)| l * k as f64).sum()).collect()
    }

    /// Fast `β_j(n)` reduced to `(−π, π]`.
    pub fn args_f64(&self, n: &[i64]) -> Vec<f64> {
        self.args_f64.iter().map(|row| reduce_angle(row.iter().zip(n).map(|(b, &k)| b * k as f64).sum())).collect()
    }

    /// `λ_i(n)` and `β_j(n)` as balls.
    pub fn lyapunov_of_ball(&self, n: &[i64]) -> Result<(Vec<Ball>, Vec<Ball>)> {
        self.check_n(n)?;
        let wp = self.field.working_prec();
        let lam: Vec<Ball> = self
            .lyapunov
            .iter()
            .map(|row| {
                row.iter()
                    .zip(n)
                    .fold(Ball::zero(wp), |acc, (l, &k)| if k == 0 { acc } else { acc.add(&l.mul_int(k)) })
            })
            .collect();
        let l1: i64 = n.iter().map(|x| x.abs()).sum();
        let args = if l1 > ARG_ACCUMULATION_THRESHOLD {
            (0..self.places())
                .map(|j| {
                    let mut z = CBall::one(wp);
                    for (k, &e) in n.iter().enumerate() {
                        if e != 0 {
                            z = z.mul(&self.phases[j][k].powi(e));
                        }
                    }
                    z.arg()
                })
                .collect()
        } else {
            let two_pi = pi(wp).ldexp(1);
            self.args
                .iter()
                .map(|row| {
                    let s = row
                        .iter()
                        .zip(n)
                        .fold(Ball::zero(wp), |acc, (b, &k)| if k == 0 { acc } else { acc.add(&b.mul_int(k)) });
                    let turns = (s.to_f64() / two_pi.to_f64()).round() as i64;
                    let mut red = s.sub(&two_pi.mul_int(turns));
                    let p = pi(wp).to_f64();
                    if red.to_f64() <= -p {
                        red = red.add(&two_pi);
                    } else if red.to_f64() > p {
                        red = red.sub(&two_pi);
                    }
                    red
                })
                .collect()
        };
        Ok((lam, args))
    }

    /// Degree of `ζ^n` over `Q` and a sufficient certificate that every
    /// nonzero power of `ζ^n` still generates `K` (no ratio of two conjugates
    /// is a root of unity).
    pub fn irreducibility_report(&self, n: &[i64]) -> Result<IrreducibilityReport> {
        self.check_n(n)?;
        if n.iter().all(|&x| x == 0) {
            return Err(Error::InvalidParameter("irreducibility report of n = 0".into()));
        }
        let z = self.zeta(n)?;
        let m = self.field.minimal_polynomial_of(&z);
        let degree = m.degree().unwrap_or(0);
        let d = self.degree();
        let irreducible = degree == d;
        let certificate = irreducible && no_root_of_unity_ratio(&m, &self.place_values(n)?, self.field.r1());
        Ok(IrreducibilityReport { degree, irreducible, totally_irreducible_certificate: certificate })
    }

    /// Element of `K` whose power-basis coordinates are `B·c` for lattice
    /// coordinates `c`.
    pub fn lattice_element(&self, c: &[BigRational]) -> FieldElement {
        FieldElement::from_coeffs(self.lattice_basis.mul_vec(c))
    }

    /// Lattice coordinates of an element of `K`.
    pub fn lattice_coords(&self, u: &FieldElement) -> Vec<BigRational> {
        self.lattice_inv.mul_vec(u.coeffs())
    }
}

pub fn build_action(field: NumberField, generators: Vec<FieldElement>) -> Result<Action> {
    Action::build(field, generators)
}

pub fn reduce_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x - two_pi * (x / two_pi).round();
    if y <= -std::f64::consts::PI {
        y += two_pi;
    } else if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

fn check_independence(field: &NumberField, gens: &[FieldElement], lam: &[Vec<f64>], args: &[Vec<f64>]) -> Result<()> {
    let r = gens.len();
    let mut rows: Vec<Vec<f64>> = lam.to_vec();
    rows.extend(args.iter().map(|row| row.iter().map(|b| b / std::f64::consts::PI).collect()));
    let stacked = numeric::rank(&rows, r, RANK_CUTOFF);
    if stacked < r {
        return Err(Error::DependentGenerators(format!("log/argument matrix has rank {stacked} < {r}")));
    }
    if numeric::rank(lam, r, RANK_CUTOFF) == r {
        return Ok(());
    }
    // Lyapunov rank deficient: look for a small combination that is a root of unity.
    let bound: i64 = match r {
        1..=4 => 20,
        5 => 10,
        _ => 4,
    };
    let mut n = vec![-bound; r];
    loop {
        if n.iter().any(|&x| x != 0) {
            let small = lam.iter().all(|row| row.iter().zip(&n).map(|(l, &k)| l * k as f64).sum::<f64>().abs() < 1e-6);
            if small {
                let mut z = field.one();
                for (k, &e) in n.iter().enumerate() {
                    if e != 0 {
                        z = field.mul(&z, &field.pow(&gens[k], e)?);
                    }
                }
                if field.minimal_polynomial_of(&z).is_cyclotomic() {
                    return Err(Error::DependentGenerators(format!("ζ^{n:?} is a root of unity")));
                }
            }
        }
        let mut i = 0;
        while i < r {
            n[i] += 1;
            if n[i] <= bound {
                break;
            }
            n[i] = -bound;
            i += 1;
        }
        if i == r {
            break;
        }
    }
    Ok(())
}

/// Smallest lattice containing `Z[θ]` and stable under every generator and
/// its inverse. Denominators stay bounded by the discriminant for units.
fn saturate_lattice(field: &NumberField, mults: &[QMat], inv_mults: &[QMat]) -> Result<QMat> {
    let d = field.degree();
    let disc = field.discriminant().abs();
    let mut basis = QMat::identity(d);
    for _ in 0..256 {
        let mut vecs: Vec<Vec<BigRational>> = (0..d).map(|j| basis.col(j)).collect();
        for a in mults.iter().chain(inv_mults) {
            let img = a.mul(&basis);
            vecs.extend((0..d).map(|j| img.col(j)));
        }
        let den = vecs.iter().flatten().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        if !(&disc % &den).is_zero() {
            return Err(Error::Lattice(format!("denominator {den} does not divide the discriminant {disc}")));
        }
        let ints: Vec<Vec<BigInt>> = vecs
            .iter()
            .map(|v| v.iter().map(|c| (c * BigRational::from_integer(den.clone())).to_integer()).collect())
            .collect();
        let h = hnf_rows(&ints);
        if h.len() != d {
            return Err(Error::Lattice("lattice lost full rank".into()));
        }
        let cols: Vec<Vec<BigRational>> =
            h.iter().map(|row| row.iter().map(|c| BigRational::new(c.clone(), den.clone())).collect()).collect();
        let next = QMat::from_cols(&cols);
        if same_lattice(&next, &basis) {
            return Ok(next);
        }
        basis = next;
    }
    Err(Error::Lattice("saturation did not stabilize".into()))
}

fn same_lattice(a: &QMat, b: &QMat) -> bool {
    match a.inverse() {
        Some(ai) => {
            let t = ai.mul(b);
            t.is_integral() && t.det().abs().is_one()
        }
        None => false,
    }
}

fn build_conjugacy(
    field: &NumberField,
    basis: &QMat,
    gen_matrices: &[ZMat],
    gen_embeddings: &[EmbeddingVector],
    wp: u32,
) -> Result<ConjugacyMap> {
    let d = field.degree();
    let r1 = field.r1();
    let mut cols = Vec::with_capacity(d);
    for j in 0..d {
        let b = FieldElement::from_coeffs(basis.col(j));
        cols.push(field.embed(&b)?.split());
    }
    let psi: Vec<Vec<Ball>> = (0..d).map(|i| (0..d).map(|j| cols[j][i].clone()).collect()).collect();
    let psi_inv = ball_mat_inverse(&psi).ok_or_else(|| Error::Precision("ψ̃ is numerically singular".into()))?;
    let mut coord_place = Vec::with_capacity(d);
    for i in 0..field.places() {
        coord_place.push(i);
        if i >= r1 {
            coord_place.push(i);
        }
    }
    let mut residual = 0.0f64;
    for (m, emb) in gen_matrices.iter().zip(gen_embeddings) {
        let mb: Vec<Vec<Ball>> =
            m.rows().iter().map(|row| row.iter().map(|c| Ball::from_int(c, wp)).collect()).collect();
        let conj = ball_mat_mul(&ball_mat_mul(&psi, &mb), &psi_inv);
        let block = block_diag(emb, d, wp);
        for i in 0..d {
            for j in 0..d {
                residual = residual.max(conj[i][j].sub(&block[i][j]).abs_upper());
            }
        }
    }
    let entry_error = psi.iter().chain(&psi_inv).flatten().map(|b| b.rad()).fold(0.0, f64::max);
    Ok(ConjugacyMap {
        psi_f64: psi.iter().map(|r| r.iter().map(|b| b.to_f64()).collect()).collect(),
        psi_inv_f64: psi_inv.iter().map(|r| r.iter().map(|b| b.to_f64()).collect()).collect(),
        psi,
        psi_inv,
        residual,
        entry_error,
        coord_place,
    })
}

/// Real matrix of multiplication by `σ(u)` on split coordinates.
pub fn block_diag(emb: &EmbeddingVector, d: usize, wp: u32) -> Vec<Vec<Ball>> {
    let mut out = vec![vec![Ball::zero(wp); d]; d];
    let mut c = 0;
    for (i, z) in emb.entries.iter().enumerate() {
        if i < emb.r1 {
            out[c][c] = z.re.clone();
            c += 1;
        } else {
            out[c][c] = z.re.clone();
            out[c][c + 1] = z.im.neg();
            out[c + 1][c] = z.im.clone();
            out[c + 1][c + 1] = z.re.clone();
            c += 2;
        }
    }
    out
}

/// True when no ratio `α_i/α_j` (`i ≠ j`) of roots of the monic irreducible `m`
/// is a root of unity. Candidate orders are screened with certified values;
/// survivors are decided exactly by `gcd(Q, Φ_m)` where
/// `Q(x) = Res_y(m(y), m(xy)) / (x − 1)^d`.
pub fn no_root_of_unity_ratio(m: &QPoly, values: &[CBall], r1: usize) -> bool {
    let d = m.degree().unwrap_or(0);
    if d < 2 {
        return false;
    }
    let mut all = values.to_vec();
    all.extend(values[r1..].iter().map(|z| z.conj()));
    let max_phi = (d * (d - 1)) as u64;
    let orders: Vec<u64> = (2..=2 * max_phi * max_phi).filter(|&k| euler_phi(k) <= max_phi).collect();
    let mut candidates: Vec<u64> = Vec::new();
    for i in 0..all.len() {
        for j in 0..all.len() {
            if i == j {
                continue;
            }
            let rho = all[i].div(&all[j]);
            let a = rho.abs();
            if a.sub(&Ball::one(a.prec())).contains_zero() {
                for &k in &orders {
                    if candidates.contains(&k) {
                        continue;
                    }
                    if rho.powi(k as i64).sub(&CBall::one(a.prec())).contains_zero() {
                        candidates.push(k);
                    }
                }
            }
        }
    }
    if candidates.is_empty() {
        return true;
    }
    let q = ratio_polynomial(m);
    candidates.iter().all(|&k| q.gcd(&cyclotomic(k)).degree() == Some(0))
}

/// `Res_y(m(y), m(xy)) / (x − 1)^d`, whose roots are the ratios `α_i/α_j`
/// with `i ≠ j`, by evaluation at `0..=d²` and interpolation.
pub fn ratio_polynomial(m: &QPoly) -> QPoly {
    let d = m.degree().unwrap_or(0);
    let npts = d * d + 1;
    let xs: Vec<BigRational> = (0..npts).map(|k| BigRational::from_integer(BigInt::from(k as i64))).collect();
    let ys: Vec<BigRational> = xs.iter().map(|x| m.resultant(&m.scale_var(x))).collect();
    // Newton divided differences
    let mut coef = ys.clone();
    for level in 1..npts {
        for i in (level..npts).rev() {
            coef[i] = (&coef[i] - &coef[i - 1]) / (&xs[i] - &xs[i - level]);
        }
    }
    let mut p = QPoly::constant(coef[npts - 1].clone());
    for i in (0..npts - 1).rev() {
        p = p.mul(&QPoly::new(vec![-xs[i].clone(), BigRational::one()])).add(&QPoly::constant(coef[i].clone()));
    }
    let x1 = QPoly::from_i64(&[-1, 1]).pow(d as u32);
    let (quo, rem) = p.divrem(&x1);
    debug_assert!(rem.is_zero());
    quo
}

/// Floating value of a rational matrix entry list, used by callers printing data.
pub fn to_f64_vec(v: &[BigRational]) -> Vec<f64> {
    v.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
}
