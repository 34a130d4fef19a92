use std::path::PathBuf;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toral-lab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("toral-lab-test-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn field_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
}

#[test]
fn field_quadratic() {
    let o = lab(&["field", "--minpoly", "1,0,-2"]);
    assert!(o.status.success());
    let t = stdout(&o);
    assert_eq!(field_value(&t, "d"), Some("2"));
    assert_eq!(field_value(&t, "r1"), Some("2"));
    assert_eq!(field_value(&t, "r2"), Some("0"));
    assert_eq!(field_value(&t, "discriminant"), Some("8"));
}

#[test]
fn field_octic_preset() {
    let o = lab(&["--action", "octic", "field"]);
    assert!(o.status.success());
    let t = stdout(&o);
    assert_eq!(field_value(&t, "d"), Some("8"));
    assert_eq!(field_value(&t, "r1"), Some("2"));
    assert_eq!(field_value(&t, "r2"), Some("3"));
}

#[test]
fn field_repeated_root_is_usage_error() {
    let o = lab(&["field", "--minpoly", "1,0,0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("repeated root"));
}

#[test]
fn slice_negative_eps() {
    assert_eq!(lab(&["slice", "--eps", "-1"]).status.code(), Some(2));
    assert_eq!(lab(&["slice", "--S", "4"]).status.code(), Some(2));
}

#[test]
fn slice_empty_s_with_angles_contains_zero() {
    let o = lab(&["slice", "--S", "", "--eps", "0.1", "--N", "2", "--angles"]);
    assert!(o.status.success());
    let t = stdout(&o);
    assert!(t.lines().skip(1).any(|l| l.starts_with("0,0,")));
}

#[test]
fn slice_octic_bounded_a() {
    let o = lab(&["--action", "octic", "slice", "--S", "1,2", "--eps", "3.4", "--N", "4"]);
    assert!(o.status.success());
    let t = stdout(&o);
    let rows: Vec<&str> = t.lines().skip(1).collect();
    assert!(!rows.is_empty());
    for r in rows {
        let a: i64 = r.split(',').next().unwrap().parse().unwrap();
        assert!(a.abs() <= 1, "{r}");
    }
}

#[test]
fn slice_empty_result_exits_zero() {
    let o = lab(&["slice", "--S", "1", "--eps", "0.01", "--N", "3", "--offset", "1,1", "--subgroup", ""]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn analyze_torsion_point() {
    let o = lab(&["analyze", "--point", "1/3,1/3,1/3", "--N", "4"]);
    assert!(o.status.success());
    let t = stdout(&o);
    assert_eq!(field_value(&t, "summary"), Some("torsion, orbit size <= 27, exact"));
    let distinct: usize = field_value(&t, "distinct_points").unwrap().parse().unwrap();
    assert!(distinct <= 27);
}

#[test]
fn analyze_generic_reports_grid_fraction() {
    let o = lab(&["analyze", "--point", "random(5)", "--S", "", "--N", "12", "--delta", "8"]);
    assert!(o.status.success());
    let t = stdout(&o);
    assert_eq!(field_value(&t, "classification"), Some("generic"));
    let g: f64 = field_value(&t, "grid_fraction_1/8").unwrap().parse().unwrap();
    assert!(g > 0.0 && g <= 1.0);
}

#[test]
fn degraded_precision_exits_3_with_n() {
    let o = lab(&["--precision", "64", "analyze", "--point", "approx:0.3,0.6,0.1", "--N", "20"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n = ["));
}

#[test]
fn bad_point_is_usage_error() {
    assert_eq!(lab(&["orbit", "--point", "1/3,1/3"]).status.code(), Some(2));
    assert_eq!(lab(&["orbit", "--point", "ypoint(1)"]).status.code(), Some(2));
}

#[test]
fn artifacts_are_deterministic() {
    let run = |tag: &str| {
        let dir = scratch(tag);
        let o = lab(&[
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            "11",
            "analyze",
            "--point",
            "random(2)",
            "--N",
            "6",
            "--svg",
            "--pattern",
            "0.1",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let read = |f: &str| std::fs::read(dir.join(f)).unwrap();
        let files = (read("report.txt"), read("report.csv"), read("orbit.csv"), read("orbit.svg"));
        let _ = std::fs::remove_dir_all(&dir);
        files
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    assert!(String::from_utf8_lossy(&a.3).starts_with("<svg"));
    assert!(String::from_utf8_lossy(&a.2).starts_with("n_1,n_2,x_1,x_2,x_3,err_radius,denominator\n"));
}

#[test]
fn orbit_csv_has_denominators() {
    let o = lab(&["orbit", "--point", "elem:1/5,0,0", "--N", "2"]);
    assert!(o.status.success());
    let t = stdout(&o);
    assert!(t.lines().skip(1).all(|l| l.ends_with(",5")));
}

#[test]
fn action_file_round_trip() {
    let dir = scratch("file");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("sqrt2.toml");
    std::fs::write(&path, "min_poly = [1, 0, -2]\ngenerators = [[\"-1\", \"1\"]]\n").unwrap();
    let o = lab(&["--action", path.to_str().unwrap(), "orbit", "--point", "1/5,2/5", "--S", "", "--N", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("\n1,0.6"));
    assert_eq!(lab(&["--action", "missing.toml", "field"]).status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn dichotomy_presets() {
    assert_eq!(lab(&["dichotomy", "nope"]).status.code(), Some(2));
    let o = lab(&["dichotomy", "cubic-cartan"]);
    assert!(o.status.success());
    let t = stdout(&o);
    let rows: Vec<&str> = t.lines().skip(2).collect();
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r.contains(",yes,")));
}

#[test]
fn counterexample_defaults_pass() {
    let o = lab(&["counterexample"]);
    assert!(o.status.success());
    let t = stdout(&o);
    assert_eq!(t.lines().filter(|l| l.starts_with("PASS ")).count(), 8);
}

#[test]
fn counterexample_rejects_bad_parameters() {
    assert_eq!(lab(&["counterexample", "--eps0", "-1"]).status.code(), Some(2));
}
