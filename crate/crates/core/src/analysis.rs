//! Point classification, confinement checks and density measurements on
//! partial orbits.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::action::Action;
use crate::ball::Ball;
use crate::error::{Error, Result};
use crate::field::FieldElement;
use crate::linalg::{hnf_rows, rat_to_f64, QMat};
use crate::numeric;
use crate::orbit::{act, torus_diff, torus_dist, wrap, OrbitSample, TorusPoint};
use crate::poly::q;
use crate::slice::SliceContext;

pub const DEFAULT_QMAX: u64 = 512;
/// Tolerance for comparisons on the exact side.
pub const EXACT_TOL: f64 = 1e-9;
/// Tolerance for classifying guarded-real points.
pub const GUARDED_TOL: f64 = 1e-6;
/// Largest translation `|v|` searched by the classifier.
pub const DEFAULT_V_MAX: f64 = 0.1;
/// Grid mode needs at most this many cells.
pub const GRID_CELL_CAP: u64 = 1 << 26;
/// Required residual of the span coefficients `c_ij`.
pub const SPAN_RESIDUAL: f64 = 1e-20;

/// `W = ψ̃^{-1}(V_{⟨S⟩})` in the `T^d` frame, with the split coordinates it
/// occupies in the embedding frame.
#[derive(Clone, Debug)]
pub struct TransverseFrame {
    pub w_coords: Vec<usize>,
    pub other_coords: Vec<usize>,
    /// Columns of `ψ̃^{-1}` for the `W` coordinates.
    pub w_basis: Vec<Vec<f64>>,
    psi: Vec<Vec<f64>>,
    psi_inv: Vec<Vec<f64>>,
}

impl TransverseFrame {
    pub fn new(action: &Action, ctx: &SliceContext) -> TransverseFrame {
        let conj = action.conjugacy_map();
        let d = action.degree();
        let w_coords = conj.coords_of(&ctx.closure);
        let other_coords = (0..d).filter(|c| !w_coords.contains(c)).collect();
        let w_basis = w_coords.iter().map(|&c| (0..d).map(|i| conj.psi_inv_f64[i][c]).collect()).collect();
        TransverseFrame {
            w_coords,
            other_coords,
            w_basis,
            psi: conj.psi_f64.clone(),
            psi_inv: conj.psi_inv_f64.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.w_coords.len()
    }

    pub fn embed(&self, v: &[f64]) -> Vec<f64> {
        numeric::mat_vec(&self.psi, v)
    }

    pub fn unembed(&self, y: &[f64]) -> Vec<f64> {
        numeric::mat_vec(&self.psi_inv, y)
    }

    /// Embedding-frame `W` coordinates of a `T^d`-frame vector.
    pub fn w_part(&self, v: &[f64]) -> Vec<f64> {
        let e = self.embed(v);
        self.w_coords.iter().map(|&c| e[c]).collect()
    }

    /// Embedding-frame norms of the `W` part and of the orthogonal part.
    pub fn split_norms(&self, v: &[f64]) -> (f64, f64) {
        let e = self.embed(v);
        let w = self.w_coords.iter().map(|&c| e[c] * e[c]).sum::<f64>().sqrt();
        let o = self.other_coords.iter().map(|&c| e[c] * e[c]).sum::<f64>().sqrt();
        (w, o)
    }

    /// `T^d`-frame vector of the `W` element with embedding coordinates `c`.
    pub fn w_vector(&self, c: &[f64]) -> Vec<f64> {
        let d = self.psi.len();
        let mut out = vec![0.0; d];
        for (b, &k) in self.w_basis.iter().zip(c) {
            for i in 0..d {
                out[i] += k * b[i];
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Classification {
    Torsion { q: BigInt, exact: bool, distance: f64 },
    TranslatedTorsion { center: TorusPoint, v: Vec<f64>, v_norm: f64, distance: f64 },
    Generic { qmax: u64, tol: f64, v_max: f64 },
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::Torsion { .. } => "torsion",
            Classification::TranslatedTorsion { .. } => "translated_torsion",
            Classification::Generic { .. } => "generic",
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Classification::Torsion { q, exact, .. } => {
                format!("torsion (order {q}, {})", if *exact { "exact" } else { "numeric" })
            }
            Classification::TranslatedTorsion { center, v_norm, .. } => {
                format!("translated_torsion (center denominator {}, |v| = {v_norm:.3e})", center.denominator())
            }
            Classification::Generic { qmax, tol, v_max } => {
                format!("generic-up-to (Qmax = {qmax}, tol = {tol:e}, |v| <= {v_max})")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifyOptions {
    pub qmax: u64,
    pub tol: f64,
    pub v_max: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { qmax: DEFAULT_QMAX, tol: GUARDED_TOL, v_max: DEFAULT_V_MAX }
    }
}

struct Hit {
    q: u64,
    g: Vec<i64>,
    distance: f64,
}

/// Torsion, `V_{⟨S⟩}`-translated torsion, or generic up to the search bounds.
pub fn classify_point(action: &Action, ctx: &SliceContext, x: &TorusPoint, opts: ClassifyOptions) -> Classification {
    if let TorusPoint::Exact { den, .. } = x {
        return Classification::Torsion { q: den.clone(), exact: true, distance: 0.0 };
    }
    let frame = TransverseFrame::new(action, ctx);
    let xf = x.coords_f64();
    let d = xf.len();
    let torsion = (1..=opts.qmax).into_par_iter().find_map_first(|qq| {
        let qf = qq as f64;
        let g: Vec<i64> = xf.iter().map(|&c| (c * qf).round() as i64).collect();
        let resid: Vec<f64> = xf.iter().zip(&g).map(|(c, &k)| c - k as f64 / qf).collect();
        let dist = numeric::norm(&frame.embed(&resid));
        (dist < opts.tol).then_some((qq, g, dist))
    });
    if let Some((qq, g, dist)) = torsion {
        let p = TorusPoint::exact_i64(&g, qq as i64);
        return Classification::Torsion { q: p.denominator(), exact: false, distance: dist };
    }
    let k = frame.dim();
    if k == 0 {
        return Classification::Generic { qmax: opts.qmax, tol: opts.tol, v_max: opts.v_max };
    }
    if k == d {
        let lift: Vec<f64> = xf.iter().map(|&c| wrap(c)).collect();
        let v = frame.w_part(&lift);
        let v_norm = numeric::norm(&v);
        return Classification::TranslatedTorsion { center: TorusPoint::zero(d), v, v_norm, distance: 0.0 };
    }
    let rows = pivot_rows(&frame.w_basis, d);
    let a: Vec<Vec<f64>> = rows.iter().map(|&i| frame.w_basis.iter().map(|b| b[i]).collect()).collect();
    let Some(a_inv) = numeric::inverse(&a) else {
        return Classification::Generic { qmax: opts.qmax, tol: opts.tol, v_max: opts.v_max };
    };
    let reach: Vec<f64> = a.iter().map(|r| opts.v_max * numeric::norm(r)).collect();
    let hit = (1..=opts.qmax).into_par_iter().find_map_first(|qq| search_denominator(&frame, &xf, &rows, &a_inv, &reach, qq, opts));
    match hit {
        Some(h) => {
            let qf = h.q as f64;
            let diff: Vec<f64> = xf.iter().zip(&h.g).map(|(c, &k)| c - k as f64 / qf).collect();
            let v = frame.w_part(&diff);
            let v_norm = numeric::norm(&v);
            Classification::TranslatedTorsion {
                center: TorusPoint::exact_i64(&h.g, h.q as i64),
                v,
                v_norm,
                distance: h.distance,
            }
        }
        None => Classification::Generic { qmax: opts.qmax, tol: opts.tol, v_max: opts.v_max },
    }
}

/// Rows of the `d × k` matrix with columns `basis` giving a well-conditioned
/// `k × k` minor (complete pivoting).
fn pivot_rows(basis: &[Vec<f64>], d: usize) -> Vec<usize> {
    let k = basis.len();
    let mut m: Vec<Vec<f64>> = (0..d).map(|i| basis.iter().map(|b| b[i]).collect()).collect();
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    for _ in 0..k {
        let mut best = (0, 0, -1.0);
        for (i, row) in m.iter().enumerate() {
            if rows.contains(&i) {
                continue;
            }
            for (j, &v) in row.iter().enumerate() {
                if !cols.contains(&j) && v.abs() > best.2 {
                    best = (i, j, v.abs());
                }
            }
        }
        let (pi, pj, _) = best;
        rows.push(pi);
        cols.push(pj);
        let pivot = m[pi].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if !rows.contains(&i) {
                let f = row[pj] / pivot[pj];
                for (x, p) in row.iter_mut().zip(&pivot) {
                    *x -= f * p;
                }
            }
        }
    }
    rows
}

/// Searches centers `g/q` whose pivot coordinates put `x − g/q` within reach
/// of `W`.
fn search_denominator(
    frame: &TransverseFrame,
    x: &[f64],
    rows: &[usize],
    a_inv: &[Vec<f64>],
    reach: &[f64],
    qq: u64,
    opts: ClassifyOptions,
) -> Option<Hit> {
    const MAX_CANDIDATES: u64 = 1 << 22;
    let qf = qq as f64;
    let lo: Vec<i64> = rows.iter().zip(reach).map(|(&i, h)| (qf * (x[i] - h)).ceil() as i64).collect();
    let hi: Vec<i64> = rows.iter().zip(reach).map(|(&i, h)| (qf * (x[i] + h)).floor() as i64).collect();
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return None;
    }
    let count: u64 = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as u64).product();
    if count > MAX_CANDIDATES {
        return None;
    }
    let mut cur = lo.clone();
    let mut best: Option<Hit> = None;
    loop {
        let rhs: Vec<f64> = rows.iter().zip(&cur).map(|(&i, &g)| x[i] - g as f64 / qf).collect();
        let c = numeric::mat_vec(a_inv, &rhs);
        if numeric::norm(&c) <= opts.v_max {
            let w = frame.w_vector(&c);
            let g: Vec<i64> = (0..x.len())
                .map(|i| match rows.iter().position(|&r| r == i) {
                    Some(p) => cur[p],
                    None => (qf * (x[i] - w[i])).round() as i64,
                })
                .collect();
            let diff: Vec<f64> = x.iter().zip(&g).map(|(c, &k)| c - k as f64 / qf).collect();
            let (_, orth) = frame.split_norms(&diff);
            if orth < opts.tol && best.as_ref().is_none_or(|b| orth < b.distance) {
                best = Some(Hit { q: qq, g, distance: orth });
            }
        }
        let mut k = 0;
        loop {
            if k == cur.len() {
                return best;
            }
            if cur[k] < hi[k] {
                cur[k] += 1;
                break;
            }
            cur[k] = lo[k];
            k += 1;
        }
    }
}

/// Coefficients of `λ_j = Σ_{i∈S} c_ij λ_i` for `j ∈ ⟨S⟩` and the constant
/// `c = max_j Σ_i |c_ij|`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpanConstant {
    pub c: f64,
    /// `(j, [(i, c_ij)])`.
    pub coefficients: Vec<(usize, Vec<(usize, f64)>)>,
    pub residual: f64,
}

pub fn span_constant(action: &Action, ctx: &SliceContext) -> Result<SpanConstant> {
    let lam_f = action.lyapunov_matrix_f64();
    let lam = action.lyapunov_matrix();
    let r = action.rank();
    let mut basis: Vec<usize> = Vec::new();
    for &i in &ctx.s {
        let mut rows: Vec<Vec<f64>> = basis.iter().map(|&b| lam_f[b].clone()).collect();
        rows.push(lam_f[i].clone());
        if numeric::rank(&rows, r, crate::slice::SPAN_TOL) == rows.len() {
            basis.push(i);
        }
    }
    let rat = |i: usize| -> Vec<BigRational> { lam[i].iter().map(|b| b.mid_rational()).collect() };
    let l: Vec<Vec<BigRational>> = basis.iter().map(|&i| rat(i)).collect();
    let dot = |a: &[BigRational], b: &[BigRational]| a.iter().zip(b).fold(BigRational::zero(), |acc, (x, y)| acc + x * y);
    let gram = QMat::from_rows(l.iter().map(|a| l.iter().map(|b| dot(a, b)).collect()).collect());
    let gram_inv = if basis.is_empty() {
        None
    } else {
        Some(gram.inverse().ok_or_else(|| Error::Precision("singular Gram matrix of Lyapunov rows".into()))?)
    };
    let wp = action.field().working_prec();
    let mut c = 0.0f64;
    let mut residual = 0.0f64;
    let mut coefficients = Vec::new();
    for &j in &ctx.closure {
        let target = rat(j);
        let coef: Vec<BigRational> = match &gram_inv {
            Some(gi) => gi.mul_vec(&l.iter().map(|a| dot(a, &target)).collect::<Vec<_>>()),
            None => Vec::new(),
        };
        for t in 0..r {
            let mut acc = lam[j][t].clone();
            for (k, &i) in basis.iter().enumerate() {
                acc = acc.sub(&Ball::from_rational(&coef[k], wp).mul(&lam[i][t]));
            }
            residual = residual.max(acc.abs_upper());
        }
        let row: Vec<(usize, f64)> = basis.iter().zip(&coef).map(|(&i, x)| (i, rat_to_f64(x))).collect();
        c = c.max(row.iter().map(|(_, x)| x.abs()).sum());
        coefficients.push((j, row));
    }
    if residual > SPAN_RESIDUAL {
        return Err(Error::Precision(format!("span coefficients leave residual {residual:e}")));
    }
    Ok(SpanConstant { c, coefficients, residual })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AngleCheck {
    /// `2(c+1)ε|v|`.
    pub bound: f64,
    pub max_displacement: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfinementVerdict {
    pub c: f64,
    pub eps: f64,
    pub v_norm: f64,
    /// `e^{cε}|v|`.
    pub predicted_radius: f64,
    pub max_excess: f64,
    pub within: bool,
    pub points: usize,
    pub angle: Option<AngleCheck>,
}

/// Checks that every orbit point of `x = x_* + v` lies within
/// `e^{cε}|v| + tol` of `ζ^n.x_* + W`; `v` is given by its embedding-frame
/// `W` coordinates.
pub fn disc_confinement_check(
    action: &Action,
    ctx: &SliceContext,
    orbit: &OrbitSample,
    center: &TorusPoint,
    v: &[f64],
    eps: f64,
    tol: f64,
) -> Result<ConfinementVerdict> {
    if !center.is_exact() {
        return Err(Error::InvalidPoint("confinement needs an exact torsion center".into()));
    }
    let frame = TransverseFrame::new(action, ctx);
    if v.len() != frame.dim() {
        return Err(Error::Dimension(format!("translation has {} coordinates, W has {}", v.len(), frame.dim())));
    }
    let sc = span_constant(action, ctx)?;
    let v_norm = numeric::norm(v);
    let predicted = (sc.c * eps).exp() * v_norm;
    let rows: Vec<Result<(f64, f64)>> = orbit
        .elements
        .par_iter()
        .zip(&orbit.points)
        .map(|(n, y)| {
            let z = act(action, n, center)?;
            let delta = torus_diff(&y.coords_f64(), &z.coords_f64());
            let e = frame.embed(&delta);
            let w: Vec<f64> = frame.w_coords.iter().map(|&c| e[c]).collect();
            let orth = frame.other_coords.iter().map(|&c| e[c] * e[c]).sum::<f64>().sqrt();
            let excess = orth + (numeric::norm(&w) - predicted).max(0.0);
            let disp = numeric::norm(&w.iter().zip(v).map(|(a, b)| a - b).collect::<Vec<_>>());
            Ok((excess, disp))
        })
        .collect();
    let mut max_excess = 0.0f64;
    let mut max_disp = 0.0f64;
    for r in rows {
        let (e, dsp) = r?;
        max_excess = max_excess.max(e);
        max_disp = max_disp.max(dsp);
    }
    let angle = (orbit.meta.angle_constrained && eps * (sc.c + 1.0) < 1.0).then(|| {
        let bound = 2.0 * (sc.c + 1.0) * eps * v_norm;
        AngleCheck { bound, max_displacement: max_disp, holds: max_disp <= bound + tol }
    });
    Ok(ConfinementVerdict {
        c: sc.c,
        eps,
        v_norm,
        predicted_radius: predicted,
        max_excess,
        within: max_excess <= tol,
        points: orbit.len(),
        angle,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFraction {
    /// `1/δ`.
    pub cells_per_axis: u32,
    /// `None` when the grid exceeds the cell cap.
    pub fraction: Option<f64>,
    pub hit: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityRecord {
    pub grid: Vec<GridFraction>,
    pub mc_covering_radius: f64,
    pub mc_samples: usize,
}

/// Fraction of the `m^d` grid cells of side `1/m` containing a point.
pub fn grid_fraction(points: &[Vec<f64>], d: usize, m: u32) -> Result<(u64, f64)> {
    let total = (m as f64).powi(d as i32);
    if m == 0 || total > GRID_CELL_CAP as f64 {
        return Err(Error::InvalidParameter(format!("resolution too fine: {m}^{d} cells exceed 2^26")));
    }
    let mut cells: Vec<u64> = points
        .iter()
        .map(|p| {
            p.iter().fold(0u64, |acc, &x| {
                let c = ((x * m as f64).floor() as i64).clamp(0, m as i64 - 1) as u64;
                acc * m as u64 + c
            })
        })
        .collect();
    cells.sort_unstable();
    cells.dedup();
    let hit = cells.len() as u64;
    Ok((hit, hit as f64 / total))
}

/// Uniform samples of `T^d` from a seeded generator.
pub fn uniform_samples(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect()
}

/// Largest distance from a sample to its nearest point (torus metric).
pub fn covering_radius(points: &[Vec<f64>], samples: &[Vec<f64>]) -> f64 {
    if points.is_empty() {
        return f64::INFINITY;
    }
    let d = points[0].len();
    let flat: Vec<f64> = points.iter().flatten().copied().collect();
    samples
        .par_iter()
        .map(|s| {
            let mut best = f64::INFINITY;
            for p in flat.chunks_exact(d) {
                let mut acc = 0.0;
                for (a, b) in s.iter().zip(p) {
                    let t = a - b;
                    let w = t - t.round();
                    acc += w * w;
                    if acc >= best {
                        break;
                    }
                }
                if acc < best {
                    best = acc;
                }
            }
            best.sqrt()
        })
        .reduce(|| 0.0, f64::max)
}

pub fn mc_covering_radius(points: &[Vec<f64>], d: usize, samples: usize, seed: u64) -> f64 {
    covering_radius(points, &uniform_samples(d, samples, seed))
}

pub fn density_metrics(orbit: &OrbitSample, cells: &[u32], mc_samples: usize, seed: u64) -> Result<DensityRecord> {
    if orbit.is_empty() {
        return Err(Error::InvalidParameter("density of an empty orbit".into()));
    }
    let pts = orbit.coords_f64();
    let d = pts[0].len();
    let grid = cells
        .iter()
        .map(|&m| match grid_fraction(&pts, d, m) {
            Ok((hit, f)) => GridFraction { cells_per_axis: m, fraction: Some(f), hit },
            Err(_) => GridFraction { cells_per_axis: m, fraction: None, hit: 0 },
        })
        .collect();
    Ok(DensityRecord { grid, mc_covering_radius: mc_covering_radius(&pts, d, mc_samples, seed), mc_samples })
}

/// Closed subtorus `Y = Y_R / (Y_R ∩ Z^d)` for a rational subspace `Y_R` of
/// `R^d` (lattice-basis coordinates).
#[derive(Clone, Debug)]
pub struct Subtorus {
    pub basis: Vec<Vec<BigRational>>,
    /// Integer rows `P` with `Y_R = ker P`.
    pub annihilator: Vec<Vec<BigInt>>,
    /// HNF basis of `P Z^d`.
    image: Vec<Vec<BigInt>>,
    /// `P^T (P P^T)^{-1}`.
    pinv: QMat,
}

impl Subtorus {
    pub fn new(basis: Vec<Vec<BigRational>>) -> Result<Subtorus> {
        let d = basis.first().map_or(0, |b| b.len());
        let m = QMat::from_rows(basis.clone());
        if m.rank() < basis.len() {
            return Err(Error::InvalidParameter("subtorus basis is not linearly independent over Q".into()));
        }
        let annihilator: Vec<Vec<BigInt>> = m.kernel().into_iter().map(|v| integer_row(&v)).collect();
        let cols: Vec<Vec<BigInt>> = (0..d).map(|j| annihilator.iter().map(|row| row[j].clone()).collect()).collect();
        let image = hnf_rows(&cols);
        let p = QMat::from_rows(annihilator.iter().map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect()).collect());
        let pinv = if annihilator.is_empty() {
            QMat::zeros(d, 0)
        } else {
            p.transpose().mul(&p.mul(&p.transpose()).inverse().expect("annihilator rows are independent"))
        };
        Ok(Subtorus { basis, annihilator, image, pinv })
    }

    /// Subtorus spanned by the lattice coordinates of field elements.
    pub fn from_field_elements(action: &Action, elems: &[FieldElement]) -> Result<Subtorus> {
        Self::new(elems.iter().map(|e| action.lattice_coords(e)).collect())
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Vector `e` with `x − e ∈ Y_R + Z^d`; zero exactly when `x` lies on the
    /// subtorus.
    pub fn residual(&self, x: &[BigRational]) -> Vec<BigRational> {
        let mut u: Vec<BigRational> = self
            .annihilator
            .iter()
            .map(|row| row.iter().zip(x).fold(BigRational::zero(), |acc, (a, b)| acc + BigRational::from_integer(a.clone()) * b))
            .collect();
        for row in &self.image {
            let p = row.iter().position(|v| !v.is_zero()).expect("nonzero HNF row");
            let t = (&u[p] / BigRational::from_integer(row[p].clone())).round();
            if !t.is_zero() {
                for (a, b) in u.iter_mut().zip(row) {
                    *a -= &t * BigRational::from_integer(b.clone());
                }
            }
        }
        self.pinv.mul_vec(&u)
    }

    pub fn contains(&self, x: &[BigRational]) -> bool {
        self.residual(x).iter().all(|v| v.is_zero())
    }
}

fn integer_row(v: &[BigRational]) -> Vec<BigInt> {
    let den = v.iter().fold(BigInt::from(1), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&den / x.denom())).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        ints
    } else {
        ints.iter().map(|x| x / &g).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubtorusVerdict {
    pub confined: bool,
    pub shifts: Vec<Vec<i64>>,
    /// Points on each translate `ζ^g.Y`.
    pub hits: Vec<usize>,
    /// First translate containing each point.
    pub assigned: Vec<Option<usize>>,
    /// `on[k][s]`: point `k` lies on translate `s`.
    pub on: Vec<Vec<bool>>,
    /// Largest embedding-frame distance from a point to its nearest translate.
    pub max_distance: f64,
}

/// Checks that every orbit point lies on one of the subtori `ζ^g.Y`, `Y`
/// spanned by the subfield basis, `g` ranging over `shifts`.
pub fn subtorus_confinement_check(
    action: &Action,
    orbit: &OrbitSample,
    subfield_basis: &[FieldElement],
    shifts: &[Vec<i64>],
    tol: f64,
) -> Result<SubtorusVerdict> {
    let y = Subtorus::from_field_elements(action, subfield_basis)?;
    let conj = action.conjugacy_map();
    let mats = shifts.iter().map(|g| action.matrix(g).map(|m| m.to_f64())).collect::<Result<Vec<_>>>()?;
    let dists: Vec<Result<Vec<f64>>> = orbit
        .points
        .par_iter()
        .map(|p| {
            shifts
                .iter()
                .zip(&mats)
                .map(|(g, mg)| {
                    let back: Vec<i64> = g.iter().map(|k| -k).collect();
                    let pre = act(action, &back, p)?;
                    let e = y.residual(&pre.coords_rational());
                    if e.iter().all(|v| v.is_zero()) {
                        return Ok(0.0);
                    }
                    let ef: Vec<f64> = e.iter().map(rat_to_f64).collect();
                    Ok(numeric::norm(&conj.apply_f64(&numeric::mat_vec(mg, &ef))))
                })
                .collect()
        })
        .collect();
    let mut hits = vec![0; shifts.len()];
    let mut assigned = Vec::with_capacity(orbit.len());
    let mut on = Vec::with_capacity(orbit.len());
    let mut max_distance = 0.0f64;
    for row in dists {
        let row = row?;
        let flags: Vec<bool> = row.iter().map(|&dd| dd <= tol).collect();
        for (s, &f) in flags.iter().enumerate() {
            hits[s] += f as usize;
        }
        assigned.push(flags.iter().position(|&f| f));
        on.push(flags);
        max_distance = max_distance.max(row.iter().copied().fold(f64::INFINITY, f64::min));
    }
    Ok(SubtorusVerdict {
        confined: assigned.iter().all(|a| a.is_some()),
        shifts: shifts.to_vec(),
        hits,
        assigned,
        on,
        max_distance,
    })
}

/// Sample points on `ζ^g.Y` for each shift, uniform in the subtorus
/// parameters.
pub fn subtorus_samples(action: &Action, y: &Subtorus, shifts: &[Vec<i64>], per_shift: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis: Vec<Vec<f64>> = y.basis.iter().map(|b| b.iter().map(rat_to_f64).collect()).collect();
    let d = action.degree();
    let mut out = Vec::with_capacity(per_shift * shifts.len());
    for g in shifts {
        let m = action.matrix(g)?.to_f64();
        for _ in 0..per_shift {
            let mut p = vec![0.0; d];
            for b in &basis {
                let t = rng.gen::<f64>() * subtorus_period(b);
                for (pi, bi) in p.iter_mut().zip(b) {
                    *pi += t * bi;
                }
            }
            let img = numeric::mat_vec(&m, &p);
            out.push(img.iter().map(|x| x - x.floor()).collect());
        }
    }
    Ok(out)
}

/// Smallest `k` with `k·b` integral, so `t ∈ [0, k)` runs once around the
/// closed circle `t·b`.
fn subtorus_period(b: &[f64]) -> f64 {
    for k in 1..=10_000u32 {
        if b.iter().all(|x| ((x * k as f64) - (x * k as f64).round()).abs() < 1e-9) {
            return k as f64;
        }
    }
    1.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternWitness {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
    pub transverse: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternRow {
    pub radius: f64,
    pub witness: Option<PatternWitness>,
}

/// Closest pair of orbit points within each radius whose difference leaves
/// `W` by more than `10·tol`. Evidence only.
pub fn pattern_probe(action: &Action, ctx: &SliceContext, orbit: &OrbitSample, radii: &[f64], tol: f64) -> Vec<PatternRow> {
    let frame = TransverseFrame::new(action, ctx);
    let pts = orbit.coords_f64();
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    let mut cands: Vec<PatternWitness> = (0..pts.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let pts = &pts;
            let frame = &frame;
            (i + 1..pts.len()).filter_map(move |j| {
                let dist = torus_dist(&pts[i], &pts[j]);
                if dist >= rmax {
                    return None;
                }
                let (_, transverse) = frame.split_norms(&torus_diff(&pts[i], &pts[j]));
                (transverse > 10.0 * tol).then_some(PatternWitness { i, j, distance: dist, transverse })
            })
        })
        .collect();
    cands.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.i.cmp(&b.i)).then(a.j.cmp(&b.j)));
    radii
        .iter()
        .map(|&radius| PatternRow { radius, witness: cands.iter().find(|c| c.distance < radius).cloned() })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineRow {
    pub n: Vec<i64>,
    pub covering_radius: f64,
    pub dense: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineDensity {
    pub rows: Vec<LineRow>,
    pub first_dense: Option<Vec<i64>>,
    /// Every place component of the direction is nonzero.
    pub hypothesis_ok: bool,
}

/// Samples the line `R·(ζ^n·direction)` through the origin with spacing
/// `δ/2` in `T^d` and measures how well it covers `T^d`.
pub fn line_density_experiment(
    action: &Action,
    direction: &[f64],
    ns: &[Vec<i64>],
    delta: f64,
    samples_per_line: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<LineDensity> {
    let d = action.degree();
    if direction.len() != d {
        return Err(Error::Dimension(format!("direction has {} coordinates, expected {d}", direction.len())));
    }
    if numeric::norm(direction) == 0.0 {
        return Err(Error::InvalidParameter("line direction must be nonzero".into()));
    }
    if delta <= 0.0 || samples_per_line == 0 {
        return Err(Error::InvalidParameter("δ and the sample count must be positive".into()));
    }
    let conj = action.conjugacy_map();
    let r1 = action.field().r1();
    let mut hypothesis_ok = true;
    let mut c = 0;
    for p in 0..action.places() {
        let w = if p < r1 { 1 } else { 2 };
        if direction[c..c + w].iter().all(|x| *x == 0.0) {
            hypothesis_ok = false;
        }
        c += w;
    }
    let test = uniform_samples(d, mc_samples, seed);
    let mut rows = Vec::with_capacity(ns.len());
    for n in ns {
        let vals: Vec<_> = action.place_values(n)?.iter().map(|z| z.to_c64()).collect();
        let mut moved = vec![0.0; d];
        let mut c = 0;
        for (p, z) in vals.iter().enumerate() {
            if p < r1 {
                moved[c] = z.re * direction[c];
                c += 1;
            } else {
                let (a, b) = (direction[c], direction[c + 1]);
                moved[c] = z.re * a - z.im * b;
                moved[c + 1] = z.im * a + z.re * b;
                c += 2;
            }
        }
        let u = conj.apply_inv_f64(&moved);
        let step = delta / (2.0 * numeric::norm(&u));
        let pts: Vec<Vec<f64>> = (0..samples_per_line)
            .map(|k| u.iter().map(|x| (x * step * k as f64).rem_euclid(1.0)).collect())
            .collect();
        let cr = covering_radius(&pts, &test);
        rows.push(LineRow { n: n.clone(), covering_radius: cr, dense: cr <= delta });
    }
    let first_dense = rows.iter().find(|r| r.dense).map(|r| r.n.clone());
    Ok(LineDensity { rows, first_dense, hypothesis_ok })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorsionCertificate {
    pub m: Vec<i64>,
    pub n: Vec<i64>,
    /// Order of the point.
    pub q: BigInt,
    /// `det(M^m − M^n)`, a multiple of `q`.
    pub det: BigInt,
    pub numeric: bool,
}

/// A pair with `ζ^m.x = ζ^n.x` certifies that `x` is torsion.
pub fn recurrence_torsion_witness(
    action: &Action,
    x: &TorusPoint,
    pairs: &[(Vec<i64>, Vec<i64>)],
    tol: f64,
) -> Result<Option<TorsionCertificate>> {
    for (m, n) in pairs {
        if m == n {
            return Err(Error::InvalidParameter("recurrence pairs need m ≠ n".into()));
        }
        let a = act(action, m, x)?;
        let b = act(action, n, x)?;
        let diff = action.matrix(m)?.sub(&action.matrix(n)?);
        let det = diff.det();
        if x.is_exact() {
            if a == b {
                return Ok(Some(TorsionCertificate { m: m.clone(), n: n.clone(), q: x.denominator(), det, numeric: false }));
            }
            continue;
        }
        if torus_dist(&a.coords_f64(), &b.coords_f64()) < tol {
            let lifted = diff.to_qmat().mul_vec(&x.coords_rational());
            let k: Vec<BigRational> = lifted.iter().map(|v| v.round()).collect();
            let sol = diff.to_qmat().solve(&k).ok_or_else(|| Error::Precision("singular M^m − M^n".into()))?;
            let p = TorusPoint::exact(&sol);
            return Ok(Some(TorsionCertificate { m: m.clone(), n: n.clone(), q: p.denominator(), det, numeric: true }));
        }
    }
    Ok(None)
}

/// The torus point `π(σ(u))`: lattice coordinates of `u` mod 1.
pub fn point_of_element(action: &Action, u: &FieldElement) -> TorusPoint {
    TorusPoint::exact(&action.lattice_coords(u))
}

/// Rational `p/q` as a field element constant.
pub fn rational_element(action: &Action, num: i64, den: i64) -> FieldElement {
    FieldElement::rational(action.degree(), q(num) / q(den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::{partial_orbit_of, OrbitMeta};
    use crate::slice::build_context;
    use crate::spec_file::ActionFile;

    fn cubic() -> Action {
        ActionFile::preset("cubic-cartan").unwrap().build().unwrap()
    }

    #[test]
    fn exact_points_are_torsion() {
        let a = cubic();
        let ctx = build_context(&a, &[]).unwrap();
        let c = classify_point(&a, &ctx, &TorusPoint::zero(3), ClassifyOptions::default());
        assert_eq!(c, Classification::Torsion { q: BigInt::from(1), exact: true, distance: 0.0 });
    }

    #[test]
    fn translated_round_trip() {
        let a = cubic();
        let ctx = build_context(&a, &[0]).unwrap();
        let frame = TransverseFrame::new(&a, &ctx);
        assert_eq!(frame.dim(), 1);
        let w = frame.w_vector(&[1e-3]);
        let base = [1.0 / 3.0; 3];
        let balls: Vec<Ball> = base.iter().zip(&w).map(|(b, x)| Ball::from_f64(b + x, 128)).collect();
        let x = TorusPoint::guarded(&balls, 96);
        match classify_point(&a, &ctx, &x, ClassifyOptions { tol: 1e-9, ..Default::default() }) {
            Classification::TranslatedTorsion { center, v, .. } => {
                assert_eq!(center, TorusPoint::exact_i64(&[1, 1, 1], 3));
                assert!((v[0].abs() - 1e-3).abs() < 1e-8);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn span_constant_includes_self() {
        let a = cubic();
        let ctx = build_context(&a, &[0]).unwrap();
        let sc = span_constant(&a, &ctx).unwrap();
        assert!(sc.c >= 1.0 - 1e-12);
        assert!(sc.residual < SPAN_RESIDUAL);
        let empty = span_constant(&a, &build_context(&a, &[]).unwrap()).unwrap();
        assert_eq!(empty.c, 0.0);
    }

    #[test]
    fn grid_single_cell() {
        let (hit, f) = grid_fraction(&[vec![0.0, 0.0]], 2, 4).unwrap();
        assert_eq!(hit, 1);
        assert!((f - 1.0 / 16.0).abs() < 1e-15);
        assert!(grid_fraction(&[vec![0.0; 8]], 8, 16).is_err());
    }

    #[test]
    fn covering_of_full_grid() {
        let pts: Vec<Vec<f64>> = (0..10).flat_map(|i| (0..10).map(move |j| vec![i as f64 / 10.0, j as f64 / 10.0])).collect();
        let r = mc_covering_radius(&pts, 2, 500, 1);
        assert!(r <= (0.05f64 * 0.05 * 2.0).sqrt() + 1e-12);
    }

    #[test]
    fn subtorus_membership() {
        let y = Subtorus::new(vec![vec![q(1), q(1), q(0)]]).unwrap();
        assert!(y.contains(&[q(1) / q(3), q(1) / q(3), q(0)]));
        assert!(y.contains(&[q(1) / q(3), q(4) / q(3), q(2)]));
        assert!(!y.contains(&[q(1) / q(3), q(0), q(0)]));
        assert!(Subtorus::new(vec![vec![q(1), q(0)], vec![q(2), q(0)]]).is_err());
    }

    #[test]
    fn recurrence_on_sqrt2() {
        let f = crate::field::NumberField::build_i64(&[1, 0, -2], 128).unwrap();
        let u = f.element_i64(&[-1, 1]);
        let a = Action::build(f, vec![u]).unwrap();
        let x = TorusPoint::exact_i64(&[1, 2], 5);
        let pairs: Vec<(Vec<i64>, Vec<i64>)> = (1..40).map(|k| (vec![k], vec![0])).collect();
        let cert = recurrence_torsion_witness(&a, &x, &pairs, 1e-9).unwrap().unwrap();
        assert_eq!(cert.q, BigInt::from(5));
        assert!((&cert.det % &cert.q).is_zero());
        let zero = recurrence_torsion_witness(&a, &TorusPoint::zero(2), &[(vec![1], vec![0])], 1e-9).unwrap();
        assert_eq!(zero.unwrap().q, BigInt::from(1));
    }

    #[test]
    fn pattern_single_point() {
        let a = cubic();
        let ctx = build_context(&a, &[]).unwrap();
        let o = partial_orbit_of(&a, &TorusPoint::zero(3), &[vec![0, 0]], OrbitMeta::default()).unwrap();
        assert!(pattern_probe(&a, &ctx, &o, &[0.5], 1e-9)[0].witness.is_none());
    }
}
