//! Preset experiments: the octic counterexample pipeline and the dichotomy
//! table.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::action::Action;
use crate::analysis::{
    classify_point, covering_radius, grid_fraction, subtorus_confinement_check, subtorus_samples, uniform_samples,
    Classification, ClassifyOptions, Subtorus, GUARDED_TOL,
};
use crate::ball::Ball;
use crate::error::{Error, Result};
use crate::field::{FieldElement, NumberField};
use crate::orbit::{partial_orbit, OrbitMeta, OrbitSample, TorusPoint};
use crate::slice::{build_context, enumerate_slice, SliceQuery};
use crate::spec_file::ActionFile;

/// `√2` and `√3` in the power basis of the octic generator.
pub const OCTIC_SQRT2: [i64; 8] = [2, 18, 33, 32, 18, 6, 1, 0];
pub const OCTIC_SQRT3: [i64; 8] = [2, 8, 8, 4, 1, 0, 0, 0];

/// The two real places of the octic field.
pub const OCTIC_S: [usize; 2] = [0, 1];
pub const DEFAULT_EPS0: f64 = 3.4;
pub const DEFAULT_BOX: i64 = 6;

pub fn octic() -> Result<Action> {
    ActionFile::preset("octic")?.build()
}

pub fn cubic_cartan() -> Result<Action> {
    ActionFile::preset("cubic-cartan")?.build()
}

/// `1, √2, √3, √6`: a basis of the real quartic subfield `F`.
pub fn octic_subfield_basis(field: &NumberField) -> Vec<FieldElement> {
    let s2 = field.element_i64(&OCTIC_SQRT2);
    let s3 = field.element_i64(&OCTIC_SQRT3);
    let s6 = field.mul(&s2, &s3);
    vec![field.one(), s2, s3, s6]
}

/// `a → ζ^{a e_1}` for `a ∈ {−1, 0, 1}`.
pub fn octic_shifts() -> Vec<Vec<i64>> {
    vec![vec![-1, 0, 0, 0], vec![0, 0, 0, 0], vec![1, 0, 0, 0]]
}

/// A point `π(σ(f))` with `f = Σ t_k b_k`, `t_k` uniform 64-bit dyadics.
pub fn y_point(action: &Action, seed: u64) -> TorusPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = octic_subfield_basis(action.field());
    let d = action.degree();
    let mut acc = vec![BigRational::from_integer(0.into()); d];
    let scale: BigInt = BigInt::one() << 64;
    for b in &basis {
        let t = BigRational::new(BigInt::from(rng.gen::<u64>()), scale.clone());
        for (a, c) in acc.iter_mut().zip(action.lattice_coords(b)) {
            *a += &t * c;
        }
    }
    let balls: Vec<Ball> = acc.iter().map(|c| Ball::from_rational(&(c - c.floor()), 256)).collect();
    TorusPoint::guarded(&balls, 128)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleReport {
    pub eps0: f64,
    pub n_box: i64,
    pub tol: f64,
    pub stages: Vec<Stage>,
    pub warnings: Vec<String>,
}

impl CounterexampleReport {
    pub fn passed(&self) -> bool {
        self.stages.iter().all(|s| s.pass)
    }

    pub fn first_failure(&self) -> Option<&Stage> {
        self.stages.iter().find(|s| !s.pass)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "counterexample eps0={} N={} tol={:e}", self.eps0, self.n_box, self.tol);
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        for s in &self.stages {
            let _ = writeln!(out, "{} {}: {}", if s.pass { "PASS" } else { "FAIL" }, s.name, s.detail);
        }
        out
    }
}

/// Runs the octic pipeline: field, units, certificate for `e_1`, context,
/// bounded `a`, subtorus confinement of a `Y`-point, non-density, and
/// non-membership in the translated torsion points.
pub fn counterexample(eps0: f64, n_box: i64, tol: f64, seed: u64) -> Result<CounterexampleReport> {
    if eps0 <= 0.0 || n_box < 0 || tol <= 0.0 {
        return Err(Error::InvalidParameter("ε_0 and tol must be positive and N nonnegative".into()));
    }
    let mut stages = Vec::new();
    let mut warnings = Vec::new();
    if n_box == 0 {
        warnings.push("N = 0: the slice is {0}, every stage is trivial".into());
    }
    let action = octic()?;
    let f = action.field();
    stages.push(Stage {
        name: "field",
        pass: (f.degree(), f.r1(), f.r2()) == (8, 2, 3),
        detail: format!("d={} r1={} r2={}", f.degree(), f.r1(), f.r2()),
    });
    let mut norms = Vec::new();
    let mut units = true;
    for g in action.generators() {
        let (nm, is_unit) = f.norm_and_unit_test(g)?;
        units &= is_unit;
        norms.push(nm.to_string());
    }
    let mut commute = true;
    let mats = action.gen_matrices();
    for i in 0..mats.len() {
        for j in i + 1..mats.len() {
            commute &= mats[i].mul(&mats[j]) == mats[j].mul(&mats[i]);
        }
    }
    let dets: Vec<String> = mats.iter().map(|m| m.det().to_string()).collect();
    stages.push(Stage {
        name: "units",
        pass: units && commute && mats.iter().all(|m| m.det().abs().is_one()),
        detail: format!("norms [{}], dets [{}], commuting {commute}", norms.join(", "), dets.join(", ")),
    });
    let rep = action.irreducibility_report(&[1, 0, 0, 0])?;
    stages.push(Stage {
        name: "irreducibility",
        pass: rep.irreducible && rep.totally_irreducible_certificate,
        detail: format!(
            "e_1: minimal polynomial degree {}, totally irreducible certificate {}",
            rep.degree, rep.totally_irreducible_certificate
        ),
    });
    let ctx = build_context(&action, &OCTIC_S)?;
    stages.push(Stage {
        name: "context",
        pass: ctx.dim_ls == 2 && ctx.closure == OCTIC_S && ctx.rank_condition_ok,
        detail: format!(
            "S={{1,2}} dim L_S={} <S>={{{}}} rank condition {}",
            ctx.dim_ls,
            ctx.closure.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(","),
            ctx.rank_condition_ok
        ),
    });
    let query = SliceQuery::new(&OCTIC_S, eps0, n_box, 4, false);
    let slice = enumerate_slice(&action, &query)?;
    let a_max = slice.iter().map(|e| e.n[0].abs()).max().unwrap_or(0);
    let violations = slice.iter().filter(|e| e.n[0].abs() > 1).count();
    let mut hist = [0usize; 3];
    for e in &slice {
        if e.n[0].abs() <= 1 {
            hist[(e.n[0] + 1) as usize] += 1;
        }
    }
    if a_max == 0 {
        warnings.push("every slice element has a = 0".into());
    }
    stages.push(Stage {
        name: "bounded-a",
        pass: violations == 0,
        detail: format!(
            "{} elements, max |a| = {a_max}, violations {violations}, a-histogram (-1,0,1) = {:?}",
            slice.len(),
            hist
        ),
    });
    let x = y_point(&action, seed);
    let meta = OrbitMeta { eps: eps0, s: OCTIC_S.to_vec(), n_box, angle_constrained: false };
    let orbit = partial_orbit(&action, &x, &slice, meta)?;
    let basis = octic_subfield_basis(f);
    let shifts = octic_shifts();
    let conf = subtorus_confinement_check(&action, &orbit, &basis, &shifts, tol)?;
    let own_translate = orbit
        .elements
        .iter()
        .zip(&conf.on)
        .all(|(n, on)| shifts.iter().zip(on).any(|(g, &hit)| hit && g[0] == n[0]));
    stages.push(Stage {
        name: "subtorus-confinement",
        pass: conf.confined && own_translate,
        detail: format!(
            "{} orbit points, max distance {:.3e}, hits per translate (a=-1,0,1) {:?}",
            orbit.len(),
            conf.max_distance,
            conf.hits
        ),
    });
    let nd = non_density(&action, &orbit, 10_000, seed)?;
    stages.push(Stage {
        name: "non-density",
        pass: nd.orbit_radius >= 0.9 * nd.envelope_radius,
        detail: format!(
            "mc covering radius {:.4} vs envelope {:.4} (floor {:.4})",
            nd.orbit_radius,
            nd.envelope_radius,
            0.9 * nd.envelope_radius
        ),
    });
    let class = classify_point(&action, &ctx, &x, ClassifyOptions::default());
    stages.push(Stage {
        name: "not-translated-torsion",
        pass: matches!(class, Classification::Generic { .. }),
        detail: class.describe(),
    });
    Ok(CounterexampleReport { eps0, n_box, tol, stages, warnings })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NonDensity {
    pub orbit_radius: f64,
    /// Covering radius of the union of the `|a| ≤ 1` translates of `Y`,
    /// estimated from points sampled on them.
    pub envelope_radius: f64,
    pub samples: usize,
}

pub fn non_density(action: &Action, orbit: &OrbitSample, samples: usize, seed: u64) -> Result<NonDensity> {
    let y = Subtorus::from_field_elements(action, &octic_subfield_basis(action.field()))?;
    let test = uniform_samples(action.degree(), samples, seed ^ 0x5eed);
    let env = subtorus_samples(action, &y, &octic_shifts(), 4000, seed)?;
    let mut pts = orbit.coords_f64();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    Ok(NonDensity { orbit_radius: covering_radius(&pts, &test), envelope_radius: covering_radius(&env, &test), samples })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DichotomyRow {
    pub label: String,
    pub classification: String,
    pub orbit_sizes: Vec<usize>,
    pub grid: Vec<f64>,
    pub verdict: String,
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DichotomyTable {
    pub preset: String,
    pub s: Vec<usize>,
    pub eps: f64,
    pub n_schedule: Vec<i64>,
    pub cells_per_axis: u32,
    pub rows: Vec<DichotomyRow>,
}

impl DichotomyTable {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let s: Vec<String> = self.s.iter().map(|i| (i + 1).to_string()).collect();
        let _ = writeln!(
            out,
            "dichotomy preset={} S={{{}}} eps={} N={:?} delta=1/{}",
            self.preset,
            s.join(","),
            self.eps,
            self.n_schedule,
            self.cells_per_axis
        );
        let _ = writeln!(out, "point,classification,orbit_sizes,grid_fraction,consistent,verdict");
        for r in &self.rows {
            let sizes: Vec<String> = r.orbit_sizes.iter().map(|x| x.to_string()).collect();
            let grid: Vec<String> = r.grid.iter().map(|x| format!("{x:.4}")).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.label,
                r.classification,
                sizes.join(" "),
                grid.join(" "),
                if r.consistent { "yes" } else { "no" },
                r.verdict
            );
        }
        out
    }
}

/// Density against classification for a battery of points on a preset.
pub fn dichotomy(preset: &str, seed: u64) -> Result<DichotomyTable> {
    match preset {
        "cubic-cartan" => cubic_dichotomy(seed),
        "octic" => octic_dichotomy(seed),
        other => Err(Error::InvalidParameter(format!("unknown preset '{other}'"))),
    }
}

fn orbit_sequence(action: &Action, x: &TorusPoint, s: &[usize], eps: f64, ns: &[i64]) -> Result<Vec<OrbitSample>> {
    ns.iter()
        .map(|&n| {
            let q = SliceQuery::new(s, eps, n, action.rank(), false);
            let slice = enumerate_slice(action, &q)?;
            partial_orbit(action, x, &slice, OrbitMeta { eps, s: s.to_vec(), n_box: n, angle_constrained: false })
        })
        .collect()
}

fn grid_sequence(orbits: &[OrbitSample], m: u32) -> Result<Vec<f64>> {
    orbits.iter().map(|o| grid_fraction(&o.coords_f64(), o.points[0].dim(), m).map(|(_, f)| f)).collect()
}

fn cubic_dichotomy(seed: u64) -> Result<DichotomyTable> {
    let action = cubic_cartan()?;
    let ctx = build_context(&action, &[])?;
    let ns = vec![4, 8, 12];
    let m = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut battery: Vec<(String, TorusPoint)> = Vec::new();
    for q in [2i64, 3, 5, 7] {
        let num: Vec<i64> = (0..3).map(|_| rng.gen_range(0..q)).collect();
        let label = format!("torsion({}/{q})", num.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(":"));
        battery.push((label, TorusPoint::exact_i64(&num, q)));
    }
    for k in 0..3 {
        let s = seed.wrapping_add(1000 + k);
        battery.push((format!("random({s})"), TorusPoint::random_dyadic(3, 64, s)));
    }
    let mut rows = Vec::new();
    for (label, x) in battery {
        let orbits = orbit_sequence(&action, &x, &[], 1.0, &ns)?;
        let grid = grid_sequence(&orbits, m)?;
        let sizes: Vec<usize> = orbits.iter().map(|o| o.distinct_count()).collect();
        let class = classify_point(&action, &ctx, &x, ClassifyOptions::default());
        let non_decreasing = grid.windows(2).all(|w| w[1] >= w[0]);
        let (verdict, consistent) = match &class {
            Classification::Torsion { q, .. } => {
                let bound = q.to_string().parse::<f64>().unwrap_or(f64::INFINITY).powi(3);
                let finite = sizes.iter().all(|&s| (s as f64) <= bound);
                ("finite orbit, not dense".to_string(), finite && grid.iter().all(|&g| g < 1.0))
            }
            _ => {
                let rising = grid.last() > grid.first();
                ("density expected; grid fraction rising".to_string(), non_decreasing && rising)
            }
        };
        rows.push(DichotomyRow { label, classification: class.label().into(), orbit_sizes: sizes, grid, verdict, consistent });
    }
    Ok(DichotomyTable { preset: "cubic-cartan".into(), s: vec![], eps: 1.0, n_schedule: ns, cells_per_axis: m, rows })
}

fn octic_dichotomy(seed: u64) -> Result<DichotomyTable> {
    let action = octic()?;
    let ctx = build_context(&action, &OCTIC_S)?;
    let ns = vec![2, 4, 6];
    let m = 8;
    let mut rows = Vec::new();
    for k in 0..2 {
        let s = seed.wrapping_add(k);
        let x = y_point(&action, s);
        let orbits = orbit_sequence(&action, &x, &OCTIC_S, DEFAULT_EPS0, &ns)?;
        let grid = grid_sequence(&orbits, m)?;
        let sizes: Vec<usize> = orbits.iter().map(|o| o.distinct_count()).collect();
        let class = classify_point(&action, &ctx, &x, ClassifyOptions { tol: GUARDED_TOL, ..Default::default() });
        let nd = non_density(&action, orbits.last().expect("schedule is nonempty"), 2000, s)?;
        let confined = nd.orbit_radius >= 0.9 * nd.envelope_radius;
        let not_translated = !matches!(class, Classification::TranslatedTorsion { .. } | Classification::Torsion { .. });
        rows.push(DichotomyRow {
            label: format!("y-point({s})"),
            classification: class.label().into(),
            orbit_sizes: sizes,
            grid,
            verdict: "non-dense yet not translated-torsion: assumption (2) violated at this eps, expected".into(),
            consistent: confined && not_translated,
        });
    }
    Ok(DichotomyTable {
        preset: "octic".into(),
        s: OCTIC_S.to_vec(),
        eps: DEFAULT_EPS0,
        n_schedule: ns,
        cells_per_axis: m,
        rows,
    })
}
