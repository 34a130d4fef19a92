use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use toral_rigidity::analysis::{
    classify_point, density_metrics, disc_confinement_check, pattern_probe, Classification, ClassifyOptions,
    TransverseFrame, EXACT_TOL, GUARDED_TOL,
};
use toral_rigidity::experiments::{self, DEFAULT_BOX, DEFAULT_EPS0};
use toral_rigidity::field::OCTIC_MIN_POLY;
use toral_rigidity::ball::Ball;
use toral_rigidity::orbit::{act, partial_orbit, DEFAULT_BITS, OrbitMeta, OrbitSample, TorusPoint};
use toral_rigidity::output::decimal_ball;
use toral_rigidity::report::{orbit_svg, AnalysisReport, SvgOverlay};
use toral_rigidity::slice::{build_context, enumerate_slice, slice_csv, Coset, SliceElement, SliceQuery};
use toral_rigidity::spec_file::{parse_rational_list, ActionFile, PRESET_NAMES};
use toral_rigidity::{Action, Error, NumberField};

#[derive(Parser)]
#[command(name = "toral-lab", version, about = "Slices, orbits and rigidity checks for toral automorphism actions")]
struct Cli {
    /// Action spec file (TOML) or preset name (cubic-cartan, octic).
    #[arg(long, global = true, default_value = "cubic-cartan")]
    action: String,
    /// Directory for CSV/SVG/report artifacts; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Working precision in bits (overrides the action file).
    #[arg(long, global = true)]
    precision: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Field report: degree, signature, roots, discriminant.
    Field(FieldArgs),
    /// Enumerate a slice and write it as CSV.
    Slice(SliceSpec),
    /// Partial orbit of a point over a slice.
    Orbit(OrbitArgs),
    /// Orbit plus classification, density, confinement and pattern checks.
    Analyze(AnalyzeArgs),
    /// Reproduce the octic counterexample stage by stage.
    Counterexample(CounterexampleArgs),
    /// Density against classification for a preset and a battery of points.
    Dichotomy(DichotomyArgs),
}

#[derive(Args)]
struct FieldArgs {
    /// Minimal polynomial, highest degree first, e.g. 1,0,-2.
    #[arg(long, allow_hyphen_values = true)]
    minpoly: Option<String>,
}

#[derive(Args, Clone)]
struct SliceSpec {
    /// Places in S, 1-based and comma separated; empty for S = ∅.
    #[arg(long = "S", default_value = "", allow_hyphen_values = true)]
    s: String,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    eps: f64,
    /// Box radius |n|_∞ ≤ N.
    #[arg(long = "N", default_value_t = 4, allow_negative_numbers = true)]
    n: i64,
    /// Also bound every |β_j(n)| by ε.
    #[arg(long)]
    angles: bool,
    /// Coset offset σ, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    offset: Option<String>,
    /// Generators of H: integer columns separated by ';'.
    #[arg(long, allow_hyphen_values = true)]
    subgroup: Option<String>,
}

#[derive(Args)]
struct OrbitArgs {
    #[command(flatten)]
    slice: SliceSpec,
    /// Rational vector "1/3,1/3,1/3", "approx:0.3,0.6,0.1" (known to --precision bits),
    /// "elem:c_0,...,c_{d-1}", "random(SEED)" or "ypoint(SEED)".
    #[arg(long, allow_hyphen_values = true)]
    point: String,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    slice: SliceSpec,
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    /// Grid resolutions as cells per axis (δ = 1/m), comma separated.
    #[arg(long, default_value = "8")]
    delta: String,
    #[arg(long, default_value_t = 2000)]
    mc_samples: usize,
    #[arg(long, default_value_t = 512)]
    qmax: u64,
    #[arg(long)]
    tol: Option<f64>,
    /// Radii for the pattern search, comma separated.
    #[arg(long)]
    pattern: Option<String>,
    /// Also write orbit.svg (needs --out).
    #[arg(long)]
    svg: bool,
    /// Coordinate pair for the SVG projection, 1-based.
    #[arg(long, default_value = "1,2")]
    axes: String,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(long, default_value_t = DEFAULT_EPS0, allow_negative_numbers = true)]
    eps0: f64,
    #[arg(long = "N", default_value_t = DEFAULT_BOX, allow_negative_numbers = true)]
    n: i64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct DichotomyArgs {
    /// Preset name.
    #[arg(default_value = "cubic-cartan")]
    preset: String,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
    Stage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Stage(_) => 4,
            Failure::Lib(e) => match e {
                Error::Degraded { .. } | Error::Precision(_) => 3,
                Error::Lattice(_) | Error::RootIsolation(_) => 4,
                _ => 2,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Stage(m) => m.clone(),
            Failure::Lib(e) => e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Field(a) => cmd_field(cli, a),
        Command::Slice(a) => cmd_slice(cli, a),
        Command::Orbit(a) => cmd_orbit(cli, a),
        Command::Analyze(a) => cmd_analyze(cli, a),
        Command::Counterexample(a) => cmd_counterexample(cli, a),
        Command::Dichotomy(a) => cmd_dichotomy(cli, a),
    }
}

fn load_action_file(cli: &Cli) -> CliResult<ActionFile> {
    let mut f = if PRESET_NAMES.contains(&cli.action.as_str()) {
        ActionFile::preset(&cli.action)?
    } else {
        let path = Path::new(&cli.action);
        if !path.exists() {
            return Err(Failure::Usage(format!(
                "'{}' is neither a file nor a preset ({})",
                cli.action,
                PRESET_NAMES.join(", ")
            )));
        }
        ActionFile::load(path)?
    };
    if let Some(p) = cli.precision {
        if p < 64 {
            return Err(Failure::Usage("--precision must be at least 64 bits".into()));
        }
        f.precision = Some(p);
    }
    Ok(f)
}

fn load_action(cli: &Cli) -> CliResult<Action> {
    Ok(load_action_file(cli)?.build()?)
}

/// Prints `content`, or writes it to `name` under `--out`.
fn emit(cli: &Cli, name: &str, content: &str) -> CliResult<()> {
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(Error::from)?;
            let path = dir.join(name);
            std::fs::write(&path, content).map_err(Error::from)?;
            println!("wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn parse_int_list(s: &str, what: &str) -> CliResult<Vec<i64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|_| Failure::Usage(format!("invalid integer '{t}' in {what}"))))
        .collect()
}

fn parse_places(s: &str, places: usize) -> CliResult<Vec<usize>> {
    let mut out = Vec::new();
    for k in parse_int_list(s, "--S")? {
        if k < 1 || k as usize > places {
            return Err(Failure::Usage(format!("place {k} out of range 1..={places}")));
        }
        out.push(k as usize - 1);
    }
    Ok(out)
}

fn parse_f64_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("invalid number '{t}' in {what}"))))
        .collect()
}

fn build_query(action: &Action, spec: &SliceSpec) -> CliResult<SliceQuery> {
    if !(spec.eps > 0.0 && spec.eps.is_finite()) {
        return Err(Failure::Usage(format!("--eps must be positive, got {}", spec.eps)));
    }
    if spec.n < 0 {
        return Err(Failure::Usage(format!("--N must be nonnegative, got {}", spec.n)));
    }
    let r = action.rank();
    let s = parse_places(&spec.s, action.places())?;
    let mut q = SliceQuery::new(&s, spec.eps, spec.n, r, spec.angles);
    if spec.offset.is_some() || spec.subgroup.is_some() {
        let offset = match &spec.offset {
            Some(o) => parse_int_list(o, "--offset")?,
            None => vec![0; r],
        };
        if offset.len() != r {
            return Err(Failure::Usage(format!("--offset needs {r} entries")));
        }
        let basis = match &spec.subgroup {
            Some(g) if g.trim().is_empty() => Vec::new(),
            Some(g) => g.split(';').map(|c| parse_int_list(c, "--subgroup")).collect::<CliResult<Vec<_>>>()?,
            None => Coset::full(r).basis,
        };
        q = q.with_coset(Coset::new(offset, basis)?);
    }
    Ok(q)
}

fn run_slice(action: &Action, spec: &SliceSpec) -> CliResult<(SliceQuery, Vec<SliceElement>)> {
    let q = build_query(action, spec)?;
    let els = enumerate_slice(action, &q)?;
    Ok((q, els))
}

fn parse_point(action: &Action, spec: &str, bits: u32) -> CliResult<TorusPoint> {
    let d = action.degree();
    let t = spec.trim();
    let seed_of = |inner: &str| inner.trim().parse::<u64>().map_err(|_| Failure::Usage(format!("invalid seed in '{t}'")));
    if let Some(inner) = t.strip_prefix("random(").and_then(|r| r.strip_suffix(')')) {
        return Ok(TorusPoint::random_dyadic(d, 64, seed_of(inner)?));
    }
    if let Some(inner) = t.strip_prefix("ypoint(").and_then(|r| r.strip_suffix(')')) {
        let is_octic = action.field().min_poly().iter().map(|c| c.to_string()).eq(OCTIC_MIN_POLY.iter().map(|c| c.to_string()));
        if !is_octic {
            return Err(Failure::Usage("ypoint(..) needs the octic action".into()));
        }
        return Ok(experiments::y_point(action, seed_of(inner)?));
    }
    if let Some(coords) = t.strip_prefix("approx:") {
        let c = parse_rational_list(coords)?;
        if c.len() != d {
            return Err(Failure::Usage(format!("point needs {d} coordinates, got {}", c.len())));
        }
        let balls: Vec<Ball> = c.iter().map(|x| Ball::from_rational(&(x - x.floor()), bits + 64)).collect();
        return Ok(TorusPoint::guarded(&balls, bits));
    }
    if let Some(coeffs) = t.strip_prefix("elem:") {
        let c = parse_rational_list(coeffs)?;
        if c.len() != d {
            return Err(Failure::Usage(format!("field element needs {d} coefficients")));
        }
        let u = action.field().element(c)?;
        return Ok(TorusPoint::exact(&action.lattice_coords(&u)));
    }
    let c = parse_rational_list(t)?;
    if c.len() != d {
        return Err(Failure::Usage(format!("point needs {d} coordinates, got {}", c.len())));
    }
    Ok(TorusPoint::exact(&c))
}

fn meta_of(q: &SliceQuery) -> OrbitMeta {
    OrbitMeta { eps: q.eps, s: q.s.clone(), n_box: q.n_box, angle_constrained: q.angle_constrained }
}

fn cmd_field(cli: &Cli, a: &FieldArgs) -> CliResult<()> {
    let field = match &a.minpoly {
        Some(p) => {
            let c = parse_int_list(p, "--minpoly")?;
            NumberField::build_i64(&c, cli.precision.unwrap_or(128))?
        }
        None => load_action_file(cli)?.build_field()?,
    };
    let mut out = String::new();
    let mp: Vec<String> = field.min_poly().iter().map(|c| c.to_string()).collect();
    out.push_str(&format!("min_poly: {}\n", mp.join(",")));
    out.push_str(&format!("d: {}\nr1: {}\nr2: {}\n", field.degree(), field.r1(), field.r2()));
    out.push_str(&format!("discriminant: {}\n", field.discriminant()));
    out.push_str(&format!("precision: {}\n", field.precision()));
    for (i, z) in field.roots().iter().take(field.places()).enumerate() {
        if i < field.r1() {
            out.push_str(&format!("sigma_{}: {}\n", i + 1, decimal_ball(&z.re, 30)));
        } else {
            out.push_str(&format!("sigma_{}: {} + {} i\n", i + 1, decimal_ball(&z.re, 30), decimal_ball(&z.im, 30)));
        }
    }
    emit(cli, "field.txt", &out)
}

fn cmd_slice(cli: &Cli, spec: &SliceSpec) -> CliResult<()> {
    let action = load_action(cli)?;
    let (q, els) = run_slice(&action, spec)?;
    emit(cli, "slice.csv", &slice_csv(&action, &q.s, &els))?;
    eprintln!("rows: {}", els.len());
    Ok(())
}

fn orbit_of(cli: &Cli, action: &Action, spec: &SliceSpec, point: &str) -> CliResult<(SliceQuery, TorusPoint, OrbitSample)> {
    let x = parse_point(action, point, cli.precision.unwrap_or(DEFAULT_BITS))?;
    let (q, els) = run_slice(action, spec)?;
    let orbit = partial_orbit(action, &x, &els, meta_of(&q))?;
    Ok((q, x, orbit))
}

fn cmd_orbit(cli: &Cli, a: &OrbitArgs) -> CliResult<()> {
    let action = load_action(cli)?;
    let (_, _, orbit) = orbit_of(cli, &action, &a.slice, &a.point)?;
    emit(cli, "orbit.csv", &orbit.to_csv())?;
    eprintln!("points: {} (distinct {})", orbit.len(), orbit.distinct_count());
    Ok(())
}

fn cmd_analyze(cli: &Cli, a: &AnalyzeArgs) -> CliResult<()> {
    let action = load_action(cli)?;
    let (q, x, orbit) = orbit_of(cli, &action, &a.slice, &a.point)?;
    let ctx = build_context(&action, &q.s)?;
    let tol = a.tol.unwrap_or(if x.is_exact() { EXACT_TOL } else { GUARDED_TOL });
    if tol <= 0.0 {
        return Err(Failure::Usage("--tol must be positive".into()));
    }
    let class = classify_point(&action, &ctx, &x, ClassifyOptions { qmax: a.qmax, tol, ..Default::default() });
    let cells: Vec<u32> = parse_int_list(&a.delta, "--delta")?
        .into_iter()
        .map(|m| u32::try_from(m).ok().filter(|&m| m > 0).ok_or_else(|| Failure::Usage("--delta entries must be positive".into())))
        .collect::<CliResult<_>>()?;
    let density = if orbit.is_empty() { None } else { Some(density_metrics(&orbit, &cells, a.mc_samples, cli.seed)?) };
    let frame = TransverseFrame::new(&action, &ctx);
    let confinement = match &class {
        Classification::TranslatedTorsion { center, v, .. } => {
            Some(disc_confinement_check(&action, &ctx, &orbit, center, v, q.eps, tol)?)
        }
        Classification::Torsion { exact: true, .. } => {
            Some(disc_confinement_check(&action, &ctx, &orbit, &x, &vec![0.0; frame.dim()], q.eps, tol)?)
        }
        _ => None,
    };
    let pattern = match &a.pattern {
        Some(p) => Some(pattern_probe(&action, &ctx, &orbit, &parse_f64_list(p, "--pattern")?, tol)),
        None => None,
    };
    let report = AnalysisReport {
        point: a.point.clone(),
        exact: x.is_exact(),
        dimension: action.degree(),
        orbit_size: orbit.len(),
        distinct: orbit.distinct_count(),
        max_radius: orbit.max_radius(),
        classification: class.clone(),
        density,
        confinement,
        pattern,
    };
    emit(cli, "report.txt", &report.to_text())?;
    if cli.out.is_some() {
        emit(cli, "report.csv", &report.to_csv())?;
        emit(cli, "orbit.csv", &orbit.to_csv())?;
    }
    if a.svg {
        if cli.out.is_none() {
            return Err(Failure::Usage("--svg needs --out".into()));
        }
        let axes = parse_int_list(&a.axes, "--axes")?;
        let d = action.degree() as i64;
        if axes.len() != 2 || axes.iter().any(|&k| k < 1 || k > d) {
            return Err(Failure::Usage(format!("--axes needs two coordinates in 1..={d}")));
        }
        let axes = (axes[0] as usize - 1, axes[1] as usize - 1);
        let mut overlay = SvgOverlay::default();
        if let (Classification::TranslatedTorsion { center, .. }, Some(c)) = (&class, &report.confinement) {
            for n in &orbit.elements {
                let z = act(&action, n, center)?.coords_f64();
                overlay.discs.push(([z[axes.0], z[axes.1]], c.predicted_radius));
            }
        }
        emit(cli, "orbit.svg", &orbit_svg(&orbit.coords_f64(), axes, &overlay))?;
    }
    Ok(())
}

fn cmd_counterexample(cli: &Cli, a: &CounterexampleArgs) -> CliResult<()> {
    if !(a.eps0 > 0.0) || a.n < 0 || !(a.tol > 0.0) {
        return Err(Failure::Usage("--eps0 and --tol must be positive, --N nonnegative".into()));
    }
    let report = experiments::counterexample(a.eps0, a.n, a.tol, cli.seed)?;
    emit(cli, "counterexample.txt", &report.to_text())?;
    match report.first_failure() {
        Some(s) => Err(Failure::Stage(format!("stage '{}' failed: {}", s.name, s.detail))),
        None => Ok(()),
    }
}

fn cmd_dichotomy(cli: &Cli, a: &DichotomyArgs) -> CliResult<()> {
    if !PRESET_NAMES.contains(&a.preset.as_str()) {
        return Err(Failure::Usage(format!("unknown preset '{}' (known: {})", a.preset, PRESET_NAMES.join(", "))));
    }
    let table = experiments::dichotomy(&a.preset, cli.seed)?;
    emit(cli, "dichotomy.csv", &table.to_text())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::Usage("x".into()).exit_code(), 2);
        assert_eq!(Failure::Stage("bounded-a".into()).exit_code(), 4);
        assert_eq!(Failure::Lib(Error::Degraded { n: vec![1], radius: 1.0 }).exit_code(), 3);
        assert_eq!(Failure::Lib(Error::RepeatedRoot).exit_code(), 2);
    }

    #[test]
    fn places_are_one_based() {
        assert_eq!(parse_places("1,3", 3).unwrap(), vec![0, 2]);
        assert!(parse_places("0", 3).is_err());
        assert!(parse_places("", 3).unwrap().is_empty());
    }
}
