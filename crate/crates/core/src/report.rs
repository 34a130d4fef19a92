//! Analysis reports (key-value text and CSV) and the SVG orbit plot.

use std::fmt::Write as _;

use crate::analysis::{Classification, ConfinementVerdict, DensityRecord, PatternRow};
use crate::output::float;

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisReport {
    pub point: String,
    pub exact: bool,
    pub dimension: usize,
    pub orbit_size: usize,
    pub distinct: usize,
    pub max_radius: f64,
    pub classification: Classification,
    pub density: Option<DensityRecord>,
    pub confinement: Option<ConfinementVerdict>,
    pub pattern: Option<Vec<PatternRow>>,
}

impl AnalysisReport {
    fn entries(&self) -> Vec<(String, String)> {
        let mut e: Vec<(String, String)> = vec![
            ("point".into(), self.point.clone()),
            ("kind".into(), if self.exact { "exact".into() } else { "guarded".into() }),
            ("orbit_size".into(), self.orbit_size.to_string()),
            ("distinct_points".into(), self.distinct.to_string()),
            ("max_error_radius".into(), float(self.max_radius)),
            ("classification".into(), self.classification.label().into()),
            ("classification_detail".into(), self.classification.describe()),
        ];
        match &self.classification {
            Classification::Torsion { q, .. } => {
                e.push(("torsion_order".into(), q.to_string()));
                if let Ok(qq) = q.to_string().parse::<f64>() {
                    let bound = qq.powi(self.dimension as i32);
                    e.push(("orbit_bound".into(), format!("{bound}")));
                    let kind = if self.exact { "exact" } else { "numerical" };
                    e.insert(0, ("summary".into(), format!("torsion, orbit size <= {bound}, {kind}")));
                }
            }
            Classification::TranslatedTorsion { center, v_norm, distance, .. } => {
                e.push(("center_denominator".into(), center.denominator().to_string()));
                e.push(("translation_norm".into(), float(*v_norm)));
                e.push(("residual".into(), float(*distance)));
            }
            Classification::Generic { .. } => {}
        }
        if let Some(d) = &self.density {
            for g in &d.grid {
                let v = g.fraction.map_or_else(|| "mc-only".to_string(), |f| format!("{f:.6}"));
                e.push((format!("grid_fraction_1/{}", g.cells_per_axis), v));
            }
            e.push(("mc_covering_radius".into(), format!("{:.6}", d.mc_covering_radius)));
            e.push(("mc_samples".into(), d.mc_samples.to_string()));
        }
        match &self.confinement {
            Some(c) => {
                e.push(("confinement_checked".into(), "true".into()));
                e.push(("confinement_c".into(), format!("{:.6}", c.c)));
                e.push(("confinement_radius".into(), float(c.predicted_radius)));
                e.push(("confinement_max_excess".into(), float(c.max_excess)));
                e.push(("confinement_within".into(), c.within.to_string()));
                if let Some(a) = &c.angle {
                    e.push(("angle_bound".into(), float(a.bound)));
                    e.push(("angle_max_displacement".into(), float(a.max_displacement)));
                    e.push(("angle_holds".into(), a.holds.to_string()));
                }
            }
            None => e.push(("confinement_checked".into(), "false".into())),
        }
        match &self.pattern {
            Some(rows) => {
                for r in rows {
                    let v = match &r.witness {
                        Some(w) => format!("found {}~{} at {:.6} transverse {:.3e}", w.i, w.j, w.distance, w.transverse),
                        None => "not-found".into(),
                    };
                    e.push((format!("pattern_r{}", r.radius), v));
                }
            }
            None => e.push(("pattern".into(), "not-searched".into())),
        }
        e
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k}: {v}");
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        for (k, v) in self.entries() {
            let v = if v.contains(',') { format!("\"{}\"", v.replace('"', "\"\"")) } else { v };
            let _ = writeln!(out, "{k},{v}");
        }
        out
    }
}

/// Overlays drawn under the orbit: circles (center, radius) and trace points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SvgOverlay {
    pub discs: Vec<([f64; 2], f64)>,
    pub traces: Vec<[f64; 2]>,
}

/// Projection of points of `T^d` to the coordinate pair `axes`, drawn in the
/// unit square.
pub fn orbit_svg(points: &[Vec<f64>], axes: (usize, usize), overlay: &SvgOverlay) -> String {
    const SIZE: f64 = 400.0;
    let px = |x: f64| x * SIZE;
    let py = |y: f64| (1.0 - y) * SIZE;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r##"<rect width="{SIZE}" height="{SIZE}" fill="#ffffff" stroke="#000000"/>"##);
    let _ = writeln!(out, r##"<text x="4" y="14" font-size="11">x_{} vs x_{}</text>"##, axes.0 + 1, axes.1 + 1);
    for t in &overlay.traces {
        let _ = writeln!(out, r##"<circle cx="{:.3}" cy="{:.3}" r="0.6" fill="#bbbbbb"/>"##, px(t[0]), py(t[1]));
    }
    for (c, r) in &overlay.discs {
        let _ = writeln!(
            out,
            r##"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="none" stroke="#cc3333"/>"##,
            px(c[0]),
            py(c[1]),
            (r * SIZE).max(1.0)
        );
    }
    for p in points {
        let _ = writeln!(out, r##"<circle cx="{:.3}" cy="{:.3}" r="1.5" fill="#1f4e9c"/>"##, px(p[axes.0]), py(p[axes.1]));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn text_and_csv() {
        let r = AnalysisReport {
            point: "1/3,1/3,1/3".into(),
            exact: true,
            dimension: 3,
            orbit_size: 9,
            distinct: 3,
            max_radius: 0.0,
            classification: Classification::Torsion { q: BigInt::from(3), exact: true, distance: 0.0 },
            density: None,
            confinement: None,
            pattern: None,
        };
        let t = r.to_text();
        assert!(t.contains("classification: torsion\n"));
        assert!(t.contains("orbit_bound: 27\n"));
        assert!(t.starts_with("summary: torsion, orbit size <= 27, exact\n"));
        assert!(r.to_csv().contains("point,\"1/3,1/3,1/3\"\n"));
    }

    #[test]
    fn svg_is_deterministic() {
        let pts = vec![vec![0.25, 0.5, 0.0]];
        let o = SvgOverlay { discs: vec![([0.25, 0.5], 0.01)], traces: vec![[0.1, 0.1]] };
        let a = orbit_svg(&pts, (0, 1), &o);
        assert_eq!(a, orbit_svg(&pts, (0, 1), &o));
        assert!(a.contains(r#"cx="100.000" cy="200.000""#));
    }
}
