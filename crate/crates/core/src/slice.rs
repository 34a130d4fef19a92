//! Non-hyperbolic slices of the acting group: the subspace `L_S`, its closure
//! `⟨S⟩`, the plane `P_S`, coarse Lyapunov classes, and enumeration of the
//! ε-slices `H^σ_{ε,S}` inside boxes.
//!
//! Places are indexed from 0 in this API: real places `0..r1`, then one index
//! per complex pair.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::action::{reduce_angle, Action};
use crate::ball::CBall;
use crate::error::{Error, Result};
use crate::field::FieldElement;
use crate::linalg::{hnf_rows, QMat};
use crate::numeric;
use crate::output;
use crate::poly::q;
use crate::roots;

/// Relative tolerance for span membership of Lyapunov functionals.
pub const SPAN_TOL: f64 = 1e-9;

/// Two normalized projections are positively proportional above this dot product.
pub const PROPORTIONAL_DOT: f64 = 1.0 - 1e-8;

#[derive(Clone, Debug)]
pub struct CoarseClass {
    pub places: Vec<usize>,
    /// Unit vector of the P_S-projection of the class functionals (empty for the zero class).
    pub direction: Vec<f64>,
    /// Largest P_S-projection norm among the class members.
    pub projection_norm: f64,
    pub zero: bool,
}

#[derive(Clone, Debug)]
pub struct SliceContext {
    pub s: Vec<usize>,
    pub r: usize,
    pub dim_ls: usize,
    pub closure: Vec<usize>,
    pub ls_basis: Vec<Vec<f64>>,
    pub ps_basis: Vec<Vec<f64>>,
    /// Partition of the places; `classes[0]` is the zero class `⟨S⟩`.
    pub classes: Vec<CoarseClass>,
    pub rank_condition_ok: bool,
    pub tolerance: f64,
}

impl SliceContext {
    pub fn zero_class(&self) -> &CoarseClass {
        &self.classes[0]
    }

    pub fn nonzero_classes(&self) -> &[CoarseClass] {
        &self.classes[1..]
    }

    pub fn class_of(&self, place: usize) -> Option<usize> {
        self.classes.iter().position(|c| c.places.contains(&place))
    }

    /// Orthogonal projection of `v ∈ R^r` onto `P_S`.
    pub fn project_ps(&self, v: &[f64]) -> Vec<f64> {
        numeric::project(v, &self.ps_basis)
    }
}

pub fn build_context(action: &Action, s: &[usize]) -> Result<SliceContext> {
    let places = action.places();
    let r = action.rank();
    let mut s: Vec<usize> = s.to_vec();
    s.sort_unstable();
    s.dedup();
    if let Some(&bad) = s.iter().find(|&&i| i >= places) {
        return Err(Error::InvalidSlice(format!("place {bad} out of range 0..{places}")));
    }
    let lam = action.lyapunov_matrix_f64();
    let rows: Vec<Vec<f64>> = s.iter().map(|&i| lam[i].clone()).collect();
    let ls_basis = numeric::row_space(&rows, r, SPAN_TOL);
    let ps_basis = numeric::null_space(&rows, r, SPAN_TOL);
    let dim_ls = ls_basis.len();
    let mut closure = Vec::new();
    let mut proj = vec![Vec::new(); places];
    for i in 0..places {
        let n = numeric::norm(&lam[i]);
        let rest = numeric::reject(&lam[i], &ls_basis);
        if n < 1e-12 || numeric::norm(&rest) < SPAN_TOL * n || s.contains(&i) {
            closure.push(i);
        } else {
            proj[i] = rest;
        }
    }
    let mut classes = vec![CoarseClass { places: closure.clone(), direction: Vec::new(), projection_norm: 0.0, zero: true }];
    for i in 0..places {
        if closure.contains(&i) {
            continue;
        }
        let n = numeric::norm(&proj[i]);
        let u: Vec<f64> = proj[i].iter().map(|x| x / n).collect();
        match classes[1..].iter_mut().find(|c| numeric::dot(&c.direction, &u) > PROPORTIONAL_DOT) {
            Some(c) => {
                c.places.push(i);
                c.projection_norm = c.projection_norm.max(n);
            }
            None => classes.push(CoarseClass { places: vec![i], direction: u, projection_norm: n, zero: false }),
        }
    }
    Ok(SliceContext {
        rank_condition_ok: dim_ls + 2 <= r,
        s,
        r,
        dim_ls,
        closure,
        ls_basis,
        ps_basis,
        classes,
        tolerance: SPAN_TOL,
    })
}

/// The coset `σ + H` with `H` spanned by integer columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coset {
    pub offset: Vec<i64>,
    pub basis: Vec<Vec<i64>>,
}

impl Coset {
    pub fn full(r: usize) -> Coset {
        let basis = (0..r).map(|k| (0..r).map(|j| i64::from(j == k)).collect()).collect();
        Coset { offset: vec![0; r], basis }
    }

    pub fn new(offset: Vec<i64>, basis: Vec<Vec<i64>>) -> Result<Coset> {
        let r = offset.len();
        if basis.iter().any(|c| c.len() != r) {
            return Err(Error::Dimension("coset basis columns must have length r".into()));
        }
        if !basis.is_empty() {
            let rows: Vec<Vec<_>> = basis.iter().map(|c| c.iter().map(|&x| q(x)).collect()).collect();
            if QMat::from_rows(rows).rank() < basis.len() {
                return Err(Error::InvalidSlice("coset basis columns are linearly dependent".into()));
            }
        }
        Ok(Coset { offset, basis })
    }

    /// Subgroup spanned by the given unit vectors `e_k`.
    pub fn coordinate_subgroup(r: usize, offset: Vec<i64>, coords: &[usize]) -> Result<Coset> {
        let basis = coords.iter().map(|&k| (0..r).map(|j| i64::from(j == k)).collect()).collect();
        Coset::new(offset, basis)
    }

    /// Sum of cosets `(σ + H) + (τ + H)`.
    pub fn add_offset(&self, tau: &[i64]) -> Coset {
        Coset { offset: self.offset.iter().zip(tau).map(|(a, b)| a + b).collect(), basis: self.basis.clone() }
    }
}

#[derive(Clone, Debug)]
pub struct SliceQuery {
    pub s: Vec<usize>,
    pub eps: f64,
    pub n_box: i64,
    pub coset: Coset,
    pub angle_constrained: bool,
}

impl SliceQuery {
    pub fn new(s: &[usize], eps: f64, n_box: i64, r: usize, angle_constrained: bool) -> SliceQuery {
        SliceQuery { s: s.to_vec(), eps, n_box, coset: Coset::full(r), angle_constrained }
    }

    pub fn with_coset(mut self, coset: Coset) -> SliceQuery {
        self.coset = coset;
        self
    }

    fn validate(&self, action: &Action) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        if self.n_box < 0 {
            return Err(Error::InvalidParameter(format!("box radius must be nonnegative, got {}", self.n_box)));
        }
        if self.coset.offset.len() != action.rank() {
            return Err(Error::Dimension("coset offset length differs from the rank".into()));
        }
        if let Some(&bad) = self.s.iter().find(|&&i| i >= action.places()) {
            return Err(Error::InvalidSlice(format!("place {bad} out of range")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SliceElement {
    pub n: Vec<i64>,
    /// `λ_i(n)` for `i ∈ S`, in the order of `S`.
    pub lambdas: Vec<f64>,
    /// `max_j ‖β_j(n)‖`.
    pub max_arg: f64,
    pub in_angle_slice: bool,
}

fn sup_norm(n: &[i64]) -> i64 {
    n.iter().map(|x| x.abs()).max().unwrap_or(0)
}

pub fn sort_elements(v: &mut [Vec<i64>]) {
    v.sort_by(|a, b| sup_norm(a).cmp(&sup_norm(b)).then_with(|| a.cmp(b)));
}

/// Lower-echelon integer basis of the column span (column `k` vanishes above
/// its pivot row) and the pivot rows.
fn echelon(cols: &[Vec<i64>]) -> (Vec<Vec<i64>>, Vec<usize>) {
    if cols.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let big: Vec<Vec<BigInt>> = cols.iter().map(|c| c.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let h = hnf_rows(&big);
    let out: Vec<Vec<i64>> = h.iter().map(|r| r.iter().map(|x| x.to_i64().expect("small basis")).collect()).collect();
    let pivots = out.iter().map(|r| r.iter().position(|&x| x != 0).unwrap()).collect();
    (out, pivots)
}

struct SlabEnum<'a> {
    cols: &'a [Vec<i64>],
    pivots: &'a [usize],
    n_box: i64,
    funcs: &'a [Vec<f64>],
    eps: f64,
    r: usize,
}

impl SlabEnum<'_> {
    fn rows_ok(&self, v: &[i64], from: usize, to: usize) -> bool {
        v[from..to].iter().all(|x| x.abs() <= self.n_box)
    }

    fn pivot_range(&self, k: usize, v: &[i64]) -> (i64, i64) {
        let p = self.pivots[k];
        let h = self.cols[k][p];
        let lo = (-self.n_box - v[p]).div_euclid(h) + i64::from((-self.n_box - v[p]).rem_euclid(h) != 0);
        let hi = (self.n_box - v[p]).div_euclid(h);
        (lo, hi)
    }

    /// False when no completion of `v` from row `from` on can meet every slab.
    fn slab_feasible(&self, v: &[i64], from: usize) -> bool {
        let n = self.n_box as f64;
        self.funcs.iter().all(|a| {
            let mut val = 0.0;
            let mut lo = 0.0;
            let mut hi = 0.0;
            for j in 0..self.r {
                val += a[j] * v[j] as f64;
                if j >= from {
                    let x = a[j] * (-n - v[j] as f64);
                    let y = a[j] * (n - v[j] as f64);
                    lo += x.min(y);
                    hi += x.max(y);
                }
            }
            val + hi > -self.eps && val + lo < self.eps
        })
    }

    fn run(&self, k: usize, v: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        let m = self.cols.len();
        if k == m {
            if self.rows_ok(v, 0, self.r) && self.slab_feasible(v, self.r) {
                out.push(v.clone());
            }
            return;
        }
        let p = self.pivots[k];
        if !self.slab_feasible(v, p) {
            return;
        }
        let (mut lo, mut hi) = self.pivot_range(k, v);
        let col = &self.cols[k];
        if k + 1 == m {
            for a in self.funcs {
                let val: f64 = a.iter().zip(v.iter()).map(|(x, &y)| x * y as f64).sum();
                let c: f64 = a.iter().zip(col).map(|(x, &y)| x * y as f64).sum();
                if c.abs() < 1e-300 {
                    if val.abs() >= self.eps {
                        return;
                    }
                    continue;
                }
                let (t1, t2) = ((-self.eps - val) / c, (self.eps - val) / c);
                let (a1, a2) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
                lo = lo.max(a1.floor() as i64);
                hi = hi.min(a2.ceil() as i64);
            }
            for t in lo..=hi {
                let n: Vec<i64> = v.iter().zip(col).map(|(&x, &y)| x + t * y).collect();
                if self.rows_ok(&n, p, self.r) && self.slab_feasible(&n, self.r) {
                    out.push(n);
                }
            }
            return;
        }
        let next = self.pivots[k + 1];
        for t in lo..=hi {
            for j in 0..self.r {
                v[j] += t * col[j];
            }
            if self.rows_ok(v, p, next) {
                self.run(k + 1, v, out);
            }
            for j in 0..self.r {
                v[j] -= t * col[j];
            }
        }
    }
}

/// All `n ∈ σ + H` with `|n|_∞ ≤ N` and `|a·n| < eps` for every functional
/// `a` (up to a floating margin; callers verify). Sorted canonically.
pub fn enumerate_slab(coset: &Coset, n_box: i64, funcs: &[Vec<f64>], eps: f64) -> Vec<Vec<i64>> {
    let r = coset.offset.len();
    let (cols, pivots) = echelon(&coset.basis);
    let e = SlabEnum { cols: &cols, pivots: &pivots, n_box, funcs, eps, r };
    let start = coset.offset.clone();
    let first = pivots.first().copied().unwrap_or(r);
    if !e.rows_ok(&start, 0, first) {
        return Vec::new();
    }
    let mut out: Vec<Vec<i64>> = if cols.len() <= 1 {
        let mut o = Vec::new();
        e.run(0, &mut start.clone(), &mut o);
        o
    } else {
        let (lo, hi) = e.pivot_range(0, &start);
        let next = pivots[1];
        (lo..=hi)
            .into_par_iter()
            .flat_map_iter(|t| {
                let mut v: Vec<i64> = start.iter().zip(&cols[0]).map(|(&x, &y)| x + t * y).collect();
                let mut o = Vec::new();
                if e.rows_ok(&v, pivots[0], next) {
                    e.run(1, &mut v, &mut o);
                }
                o
            })
            .collect()
    };
    sort_elements(&mut out);
    out
}

/// Decides `|λ_i(n)| < eps` for every `i ∈ s`, falling back to ball
/// arithmetic near the boundary.
fn lyapunov_inside(action: &Action, n: &[i64], s: &[usize], eps: f64, lam: &[f64]) -> bool {
    let scale = 1e-9 * (1.0 + n.iter().map(|x| x.abs() as f64).sum::<f64>());
    let mut need_ball = false;
    for &i in s {
        let d = lam[i].abs() - eps;
        if d >= scale {
            return false;
        }
        if d > -scale {
            need_ball = true;
        }
    }
    if !need_ball {
        return true;
    }
    let (lb, _) = action.lyapunov_of_ball(n).expect("rank checked");
    s.iter().all(|&i| ball_below(&lb[i], eps))
}

/// `|x| < eps`, decided by the enclosure when possible and by the midpoint
/// when the ball straddles the boundary.
fn ball_below(x: &crate::ball::Ball, eps: f64) -> bool {
    let a = x.abs();
    if a.abs_upper() < eps {
        true
    } else if a.abs_lower() >= eps {
        false
    } else {
        a.to_f64() < eps
    }
}

fn max_arg_of(action: &Action, n: &[i64]) -> f64 {
    action.args_f64(n).iter().map(|b| b.abs()).fold(0.0, f64::max)
}

fn angle_inside(action: &Action, n: &[i64], eps: f64) -> bool {
    let m = max_arg_of(action, n);
    if (m - eps).abs() > 1e-9 {
        return m < eps;
    }
    let (_, args) = action.lyapunov_of_ball(n).expect("rank checked");
    args.iter().all(|b| ball_below(b, eps))
}

pub fn enumerate_slice(action: &Action, query: &SliceQuery) -> Result<Vec<SliceElement>> {
    query.validate(action)?;
    let lam = action.lyapunov_matrix_f64();
    let funcs: Vec<Vec<f64>> = query.s.iter().map(|&i| lam[i].clone()).collect();
    let margin = 1e-9 * (1.0 + query.n_box as f64 * action.rank() as f64);
    let cands = enumerate_slab(&query.coset, query.n_box, &funcs, query.eps + margin);
    let out: Vec<SliceElement> = cands
        .into_par_iter()
        .filter_map(|n| {
            let l = action.lyapunov_f64(&n);
            if !lyapunov_inside(action, &n, &query.s, query.eps, &l) {
                return None;
            }
            let in_angle = angle_inside(action, &n, query.eps);
            if query.angle_constrained && !in_angle {
                return None;
            }
            Some(SliceElement {
                lambdas: query.s.iter().map(|&i| l[i]).collect(),
                max_arg: max_arg_of(action, &n),
                in_angle_slice: in_angle,
                n,
            })
        })
        .collect();
    Ok(out)
}

/// CSV with columns `n_1..n_r, lambda_i (i ∈ S, 1-based), max_arg_norm, in_angle_slice`.
pub fn slice_csv(action: &Action, s: &[usize], elements: &[SliceElement]) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = (1..=action.rank()).map(|k| format!("n_{k}")).collect();
    header.extend(s.iter().map(|i| format!("lambda_{}", i + 1)));
    header.push("max_arg_norm".into());
    header.push("in_angle_slice".into());
    let _ = writeln!(out, "{}", header.join(","));
    for e in elements {
        let (lb, ab) = action.lyapunov_of_ball(&e.n).expect("rank checked");
        let mut row: Vec<String> = e.n.iter().map(|x| x.to_string()).collect();
        row.extend(s.iter().map(|&i| output::decimal_ball(&lb[i], 30)));
        let max = ab.iter().max_by(|a, b| a.abs().to_f64().partial_cmp(&b.abs().to_f64()).unwrap()).unwrap();
        row.push(output::decimal_ball(&max.abs(), 30));
        row.push(if e.in_angle_slice { "1".into() } else { "0".into() });
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompatibilityRow {
    pub eps: f64,
    /// Smallest box radius from the schedule at which a slice element appeared.
    pub first_n: Option<i64>,
    pub witness: Option<Vec<i64>>,
    pub n_max: i64,
}

/// Nonemptiness evidence per ε; never a proof of incompatibility.
pub fn compatibility_evidence(
    action: &Action,
    context: &SliceContext,
    coset: &Coset,
    eps_schedule: &[f64],
    n_schedule: &[i64],
    angle_constrained: bool,
) -> Result<Vec<CompatibilityRow>> {
    if eps_schedule.is_empty() || n_schedule.is_empty() {
        return Err(Error::InvalidParameter("schedules must be nonempty".into()));
    }
    let n_max = *n_schedule.iter().max().unwrap();
    let mut rows = Vec::new();
    for &eps in eps_schedule {
        let mut row = CompatibilityRow { eps, first_n: None, witness: None, n_max };
        for &nb in n_schedule {
            let q = SliceQuery { s: context.s.clone(), eps, n_box: nb, coset: coset.clone(), angle_constrained };
            let el = enumerate_slice(action, &q)?;
            if let Some(w) = el.first() {
                row.first_n = Some(nb);
                row.witness = Some(w.n.clone());
                break;
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Clone, Debug)]
pub struct CoveringEstimate {
    /// `(N, C_N)` for the boxes tried.
    pub per_box: Vec<(i64, f64)>,
    pub c: f64,
    pub saturated: bool,
    pub unbounded: bool,
}

/// Empirical covering constant of `P_S` by the slice: the largest distance
/// from a sampled `η ∈ P_S ∩ [−N/2, N/2]^r` to the nearest slice element in
/// the box of radius `N`. Boxes `N/2` and `N` are compared for saturation
/// (`C_N ≤ 1.25·C_{N/2} + 1`).
pub fn covering_constant(
    action: &Action,
    context: &SliceContext,
    eps: f64,
    sample_count: usize,
    n_box: i64,
    seed: u64,
    angle_constrained: bool,
) -> Result<CoveringEstimate> {
    if n_box < 2 {
        return Err(Error::InvalidParameter("covering constant needs a box radius of at least 2".into()));
    }
    let r = action.rank();
    let mut per_box = Vec::new();
    let mut unbounded = false;
    for nb in [n_box / 2, n_box] {
        let q = SliceQuery::new(&context.s, eps, nb, r, angle_constrained);
        let el = enumerate_slice(action, &q)?;
        if el.is_empty() {
            unbounded = true;
            per_box.push((nb, f64::INFINITY));
            continue;
        }
        let pts: Vec<Vec<f64>> = el.iter().map(|e| e.n.iter().map(|&x| x as f64).collect()).collect();
        let samples = sample_plane(&context.ps_basis, r, nb as f64 / 2.0, sample_count, seed ^ nb as u64);
        let c = samples
            .par_iter()
            .map(|eta| {
                pts.iter()
                    .map(|p| p.iter().zip(eta).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            })
            .reduce(|| 0.0, f64::max);
        per_box.push((nb, c));
    }
    let c = per_box.last().unwrap().1;
    let saturated = !unbounded && per_box[1].1 <= 1.25 * per_box[0].1 + 1.0;
    Ok(CoveringEstimate { per_box, c, saturated, unbounded })
}

/// Uniform samples of the plane spanned by the orthonormal `basis` inside
/// the cube `[−half, half]^r`; the origin is always included.
fn sample_plane(basis: &[Vec<f64>], r: usize, half: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![vec![0.0; r]];
    if basis.is_empty() {
        return out;
    }
    let radius = half * (r as f64).sqrt();
    let mut attempts = 0;
    while out.len() < count.max(1) && attempts < 1000 * count.max(1) {
        attempts += 1;
        let mut eta = vec![0.0; r];
        for b in basis {
            let c: f64 = rng.gen_range(-radius..=radius);
            for (e, x) in eta.iter_mut().zip(b) {
                *e += c * x;
            }
        }
        if eta.iter().all(|x| x.abs() <= half) {
            out.push(eta);
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct LogmapRow {
    pub n_box: i64,
    pub min_norm: f64,
    pub argmin: Vec<i64>,
    pub probed: usize,
    pub injective: bool,
}

#[derive(Clone, Debug)]
pub struct LogmapProbe {
    /// `i_1..i_{r_S}` spanning `L_S`.
    pub span_indices: Vec<usize>,
    pub i0: usize,
    pub class_index: usize,
    pub rows: Vec<LogmapRow>,
    /// False when the rank condition fails, so non-isolation of 0 is not guaranteed.
    pub non_isolation_guaranteed: bool,
}

impl LogmapProbe {
    pub fn non_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].min_norm <= w[0].min_norm)
    }

    /// Largest ratio of consecutive minima.
    pub fn best_decrease(&self) -> f64 {
        self.rows.windows(2).map(|w| w[0].min_norm / w[1].min_norm).fold(1.0, f64::max)
    }
}

/// Value of the map `𝓛(n)`: the Lyapunov part on `i_1..i_{r_S}, i_0` and the
/// argument part on every place.
pub fn logmap_value(action: &Action, span: &[usize], i0: usize, n: &[i64]) -> (Vec<f64>, Vec<f64>) {
    let l = action.lyapunov_f64(n);
    let mut lam: Vec<f64> = span.iter().map(|&i| l[i]).collect();
    lam.push(l[i0]);
    (lam, action.args_f64(n))
}

fn logmap_norm(action: &Action, span: &[usize], i0: usize, n: &[i64]) -> f64 {
    let (l, b) = logmap_value(action, span, i0, n);
    (l.iter().map(|x| x * x).sum::<f64>() + b.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

pub fn logmap_probe(
    action: &Action,
    context: &SliceContext,
    class_choice: Option<usize>,
    n_schedule: &[i64],
) -> Result<LogmapProbe> {
    if context.classes.len() < 2 {
        return Err(Error::InvalidSlice(
            "no nonzero coarse class: the closure of S is every place, so the hypotheses fail".into(),
        ));
    }
    let class_index = match class_choice {
        Some(c) if c >= 1 && c < context.classes.len() => c,
        Some(c) => return Err(Error::InvalidParameter(format!("class {c} is not a nonzero class"))),
        None => {
            1 + context.classes[1..]
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.projection_norm.partial_cmp(&b.1.projection_norm).unwrap())
                .unwrap()
                .0
        }
    };
    let i0 = *context.classes[class_index].places.iter().min().unwrap();
    let lam = action.lyapunov_matrix_f64();
    let r = action.rank();
    let mut span = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for &i in &context.s {
        let mut trial = rows.clone();
        trial.push(lam[i].clone());
        if numeric::rank(&trial, r, SPAN_TOL) > rows.len() {
            rows = trial;
            span.push(i);
        }
    }
    let mut funcs: Vec<Vec<f64>> = span.iter().map(|&i| lam[i].clone()).collect();
    funcs.push(lam[i0].clone());

    let mut sched = n_schedule.to_vec();
    sched.sort_unstable();
    let mut out_rows = Vec::new();
    let mut best = f64::INFINITY;
    let mut best_n = Vec::new();
    let full = Coset::full(r);
    for &nb in &sched {
        if !best.is_finite() {
            // seed the bound from a small box
            let seed_box = nb.min(2);
            for n in enumerate_slab(&full, seed_box, &[], 1.0) {
                if n.iter().all(|&x| x == 0) {
                    continue;
                }
                let v = logmap_norm(action, &span, i0, &n);
                if v < best {
                    best = v;
                    best_n = n;
                }
            }
        }
        let cands = enumerate_slab(&full, nb, &funcs, best * (1.0 + 1e-9) + 1e-12);
        let probed = cands.len();
        let vals: Vec<(f64, Vec<i64>)> = cands
            .into_par_iter()
            .filter(|n| n.iter().any(|&x| x != 0))
            .map(|n| (logmap_norm(action, &span, i0, &n), n))
            .collect();
        let mut injective = true;
        for (v, n) in &vals {
            if *v < 1e-12 && action.zeta(n)?.is_one() {
                injective = false;
            }
            if *v < best || (*v == best && sort_key_less(n, &best_n)) {
                best = *v;
                best_n = n.clone();
            }
        }
        out_rows.push(LogmapRow { n_box: nb, min_norm: best, argmin: best_n.clone(), probed, injective });
    }
    Ok(LogmapProbe {
        span_indices: span,
        i0,
        class_index,
        rows: out_rows,
        non_isolation_guaranteed: context.rank_condition_ok,
    })
}

fn sort_key_less(a: &[i64], b: &[i64]) -> bool {
    (sup_norm(a), a) < (sup_norm(b), b)
}

/// Maps an embedding index in `0..d` (field root order) to its place and
/// whether it is the conjugate of the place representative.
pub fn embedding_place(action: &Action, e: usize) -> (usize, bool) {
    let places = action.places();
    if e < places {
        (e, false)
    } else {
        (action.field().r1() + (e - places), true)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatioProfile {
    pub distinct: usize,
    pub exact_checks: usize,
}

/// Number of distinct values of `Ψ(n) = (σ_{i_h}(ζ^n)/σ_{i_0}(ζ^n))_h` over the
/// given elements. Equality `Ψ(m) = Ψ(n)` means `σ_{i_h}(u) = σ_{i_0}(u)` for
/// `u = ζ^{m−n}`; near-coincidences found numerically are settled exactly by
/// locating both values among the certified roots of the minimal polynomial
/// of `u`.
pub fn ratio_profile(action: &Action, elements: &[Vec<i64>], indices: &[usize]) -> Result<RatioProfile> {
    let d = action.degree();
    if indices.len() < 2 {
        return Err(Error::InvalidParameter("ratio profile needs at least two indices".into()));
    }
    let mut seen = indices.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != indices.len() || indices.iter().any(|&i| i >= d) {
        return Err(Error::InvalidParameter("indices must be distinct embeddings in 0..d".into()));
    }
    let maps: Vec<(usize, bool)> = indices.iter().map(|&e| embedding_place(action, e)).collect();
    let coords = |n: &[i64]| -> Vec<f64> {
        let l = action.lyapunov_f64(n);
        let b = action.args_f64(n);
        let (p0, c0) = maps[0];
        let b0 = if c0 { -b[p0] } else { b[p0] };
        let mut out = Vec::new();
        for &(p, c) in &maps[1..] {
            out.push(l[p] - l[p0]);
            let bp = if c { -b[p] } else { b[p] };
            out.push(reduce_angle(bp - b0));
        }
        out
    };
    let mut reps: Vec<(Vec<i64>, Vec<f64>)> = Vec::new();
    let mut kernel: Vec<Vec<BigInt>> = Vec::new();
    let mut exact_checks = 0;
    for n in elements {
        let c = coords(n);
        let mut merged = false;
        for (rn, rc) in &reps {
            let close = c.iter().zip(rc).enumerate().all(|(k, (a, b))| {
                let diff = if k % 2 == 1 { reduce_angle(a - b) } else { a - b };
                diff.abs() < 1e-7
            });
            if !close {
                continue;
            }
            let diff: Vec<i64> = n.iter().zip(rn).map(|(a, b)| a - b).collect();
            if in_lattice(&kernel, &diff) {
                merged = true;
                break;
            }
            exact_checks += 1;
            if ratios_coincide(action, &diff, &maps)? {
                kernel.push(diff.iter().map(|&x| BigInt::from(x)).collect());
                kernel = hnf_rows(&kernel);
                merged = true;
                break;
            }
        }
        if !merged {
            reps.push((n.clone(), c));
        }
    }
    Ok(RatioProfile { distinct: reps.len(), exact_checks })
}

fn in_lattice(hnf: &[Vec<BigInt>], v: &[i64]) -> bool {
    let mut w: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
    for row in hnf {
        let p = row.iter().position(|x| !x.is_zero()).unwrap();
        if (&w[p] % &row[p]).is_zero() {
            let f = &w[p] / &row[p];
            for (a, b) in w.iter_mut().zip(row) {
                *a -= &f * b;
            }
        } else {
            return false;
        }
    }
    w.iter().all(|x| x.is_zero())
}

/// Whether `σ_{e_h}(ζ^n) = σ_{e_0}(ζ^n)` for every listed embedding.
fn ratios_coincide(action: &Action, n: &[i64], maps: &[(usize, bool)]) -> Result<bool> {
    let vals = action.place_values(n)?;
    let value = |(p, c): (usize, bool)| if c { vals[p].conj() } else { vals[p].clone() };
    let v0 = value(maps[0]);
    let mut undecided = Vec::new();
    for &m in &maps[1..] {
        let v = value(m);
        if !v.sub(&v0).contains_zero() {
            return Ok(false);
        }
        undecided.push(v);
    }
    let u: FieldElement = action.zeta(n)?;
    let mp = action.field().minimal_polynomial_of(&u);
    if mp.degree() == Some(1) {
        return Ok(true);
    }
    let den = mp.denominator_lcm();
    let ints: Vec<BigInt> = mp.coeffs().iter().map(|c| (c * num_rational::BigRational::from_integer(den.clone())).to_integer()).collect();
    let iso = roots::isolate(&ints, action.field().precision())?;
    let mut discs: Vec<CBall> = iso.real.iter().map(|x| CBall::real(x.clone())).collect();
    discs.extend(iso.upper.iter().cloned());
    discs.extend(iso.upper.iter().map(|z| z.conj()));
    let locate = |v: &CBall| -> Result<usize> {
        let hits: Vec<usize> = (0..discs.len()).filter(|&k| v.sub(&discs[k]).contains_zero()).collect();
        match hits.as_slice() {
            [k] => Ok(*k),
            _ => Err(Error::Precision("cannot locate an embedding value among the root enclosures".into())),
        }
    };
    let k0 = locate(&v0)?;
    for v in &undecided {
        if locate(v)? != k0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Places whose Lyapunov functional is not within tolerance of `L_S`.
pub fn outside_span(context: &SliceContext) -> Vec<usize> {
    let places = context.classes.iter().flat_map(|c| c.places.iter().copied()).max().map_or(0, |m| m + 1);
    (0..places).filter(|i| !context.closure.contains(i)).collect()
}
