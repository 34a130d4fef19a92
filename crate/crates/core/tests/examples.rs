use toral_rigidity::analysis::{
    classify_point, density_metrics, disc_confinement_check, line_density_experiment, pattern_probe,
    recurrence_torsion_witness, subtorus_confinement_check, Classification, ClassifyOptions, TransverseFrame,
};
use toral_rigidity::ball::Ball;
use toral_rigidity::experiments::{
    cubic_cartan, octic, octic_shifts, octic_subfield_basis, y_point, DEFAULT_EPS0, OCTIC_S,
};
use toral_rigidity::orbit::{partial_orbit, partial_orbit_of, OrbitMeta, TorusPoint};
use toral_rigidity::slice::{
    build_context, compatibility_evidence, covering_constant, enumerate_slice, logmap_probe, logmap_value,
    ratio_profile, Coset, SliceQuery,
};
use toral_rigidity::{Action, NumberField};

fn sqrt2_action() -> Action {
    let f = NumberField::build_i64(&[1, 0, -2], 128).unwrap();
    let u = f.element_i64(&[-1, 1]);
    Action::build(f, vec![u]).unwrap()
}

fn ids(a: &Action, q: &SliceQuery) -> Vec<Vec<i64>> {
    enumerate_slice(a, q).unwrap().into_iter().map(|e| e.n).collect()
}

#[test]
fn octic_context_places_outside_span() {
    let a = octic().unwrap();
    let c = build_context(&a, &OCTIC_S).unwrap();
    assert_eq!(c.classes[0].places, vec![0, 1]);
    for i in 2..5 {
        assert!(!c.closure.contains(&i));
    }
    assert_eq!(c.ps_basis.len(), 2);
    let closed = build_context(&a, &c.closure).unwrap();
    assert_eq!(closed.closure, c.closure);
}

#[test]
fn empty_s_context_is_whole_space() {
    let a = octic().unwrap();
    let c = build_context(&a, &[]).unwrap();
    assert_eq!(c.dim_ls, 0);
    assert_eq!(c.ps_basis.len(), 4);
}

#[test]
fn coarse_classes_are_positively_proportional() {
    let a = octic().unwrap();
    let c = build_context(&a, &[0]).unwrap();
    let lam = a.lyapunov_matrix_f64();
    let proj = |i: usize| {
        let p = c.project_ps(&lam[i]);
        let n = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        p.into_iter().map(|x| x / n).collect::<Vec<f64>>()
    };
    for (k, cl) in c.nonzero_classes().iter().enumerate() {
        for &i in &cl.places {
            for &j in &cl.places {
                let dot: f64 = proj(i).iter().zip(proj(j)).map(|(x, y)| x * y).sum();
                assert!(dot > 1.0 - 1e-8);
            }
            for other in &c.nonzero_classes()[k + 1..] {
                for &j in &other.places {
                    let dot: f64 = proj(i).iter().zip(proj(j)).map(|(x, y)| x * y).sum();
                    assert!(dot < 1.0 - 1e-8);
                }
            }
        }
    }
}

#[test]
fn rank_one_slice_is_trivial() {
    let a = sqrt2_action();
    assert_eq!(ids(&a, &SliceQuery::new(&[0], 0.5, 10, 1, false)), vec![vec![0]]);
}

#[test]
fn slices_are_monotone_and_additive() {
    let a = cubic_cartan().unwrap();
    let small = ids(&a, &SliceQuery::new(&[0], 0.3, 6, 2, false));
    let wide = ids(&a, &SliceQuery::new(&[0], 0.6, 6, 2, false));
    let big = ids(&a, &SliceQuery::new(&[0], 0.3, 9, 2, false));
    assert!(small.iter().all(|n| wide.contains(n) && big.contains(n)));
    for m in &small {
        for n in &small {
            let s: Vec<i64> = m.iter().zip(n).map(|(x, y)| x + y).collect();
            assert!(a.lyapunov_f64(&s)[0].abs() < 0.6 + 1e-12);
        }
    }
}

#[test]
fn compatibility_of_cosets() {
    let a = octic().unwrap();
    let ctx = build_context(&a, &OCTIC_S).unwrap();
    let rows = compatibility_evidence(&a, &ctx, &Coset::full(4), &[1.0, 0.1], &[1, 2], false).unwrap();
    assert!(rows.iter().all(|r| r.witness == Some(vec![0, 0, 0, 0])));
    let off = Coset::coordinate_subgroup(4, vec![1, 0, 0, 0], &[1, 2, 3]).unwrap();
    let rows = compatibility_evidence(&a, &ctx, &off, &[1.5], &[2, 4], false).unwrap();
    assert_eq!(rows[0].first_n, None);
    assert_eq!(rows[0].n_max, 4);
}

#[test]
fn covering_constants_are_finite() {
    let a = cubic_cartan().unwrap();
    let ctx = build_context(&a, &[]).unwrap();
    let c = covering_constant(&a, &ctx, 0.1, 200, 8, 1, false).unwrap();
    assert!(c.c.is_finite() && !c.unbounded && c.saturated);
    let a = octic().unwrap();
    let ctx = build_context(&a, &OCTIC_S).unwrap();
    let c = covering_constant(&a, &ctx, 0.5, 100, 6, 1, false).unwrap();
    assert!(c.c.is_finite());
}

#[test]
fn logmap_zero_and_rank_flag() {
    let a = cubic_cartan().unwrap();
    let (l, b) = logmap_value(&a, &[], 0, &[0, 0]);
    assert!(l.iter().chain(&b).all(|x| *x == 0.0));
    let ctx = build_context(&a, &[0]).unwrap();
    let p = logmap_probe(&a, &ctx, None, &[4, 8]).unwrap();
    assert!(!p.non_isolation_guaranteed);
    let o = octic().unwrap();
    let ctx = build_context(&o, &OCTIC_S).unwrap();
    let p = logmap_probe(&o, &ctx, None, &[4, 8]).unwrap();
    assert!(p.non_isolation_guaranteed && p.non_increasing());
    assert!(p.rows.iter().all(|r| r.injective && r.min_norm > 0.0));
}

#[test]
fn ratio_profile_of_identity() {
    let a = octic().unwrap();
    assert_eq!(ratio_profile(&a, &[vec![0, 0, 0, 0]], &[0, 2, 4]).unwrap().distinct, 1);
}

#[test]
fn random_dyadics_are_generic() {
    let a = cubic_cartan().unwrap();
    let ctx = build_context(&a, &[0]).unwrap();
    for seed in 0..3 {
        let x = TorusPoint::random_dyadic(3, 64, seed);
        let c = classify_point(&a, &ctx, &x, ClassifyOptions { qmax: 1000, tol: 1e-9, ..Default::default() });
        assert!(matches!(c, Classification::Generic { .. }), "{c:?}");
    }
}

#[test]
fn translated_zero_stays_in_disc() {
    let a = cubic_cartan().unwrap();
    let ctx = build_context(&a, &[0]).unwrap();
    let w = TransverseFrame::new(&a, &ctx).w_vector(&[2e-3]);
    let x = TorusPoint::guarded(&w.iter().map(|s| Ball::from_f64(s.rem_euclid(1.0), 128)).collect::<Vec<_>>(), 128);
    let el = enumerate_slice(&a, &SliceQuery::new(&[0], 0.25, 10, 2, false)).unwrap();
    let meta = OrbitMeta { eps: 0.25, s: vec![0], n_box: 10, angle_constrained: false };
    let o = partial_orbit(&a, &x, &el, meta).unwrap();
    let v = disc_confinement_check(&a, &ctx, &o, &TorusPoint::zero(3), &[2e-3], 0.25, 1e-12).unwrap();
    assert!(v.within, "{v:?}");
    assert!(v.angle.is_none());
}

#[test]
fn pure_torsion_has_no_excess() {
    let a = cubic_cartan().unwrap();
    let ctx = build_context(&a, &[1]).unwrap();
    let x = TorusPoint::exact_i64(&[1, 2, 3], 7);
    let el = enumerate_slice(&a, &SliceQuery::new(&[1], 0.5, 8, 2, false)).unwrap();
    let o = partial_orbit(&a, &x, &el, OrbitMeta::default()).unwrap();
    let v = disc_confinement_check(&a, &ctx, &o, &x, &[0.0], 0.5, 1e-12).unwrap();
    assert_eq!(v.max_excess, 0.0);
    assert!(pattern_probe(&a, &ctx, &o, &[0.05], 1e-9)[0].witness.is_none());
}

#[test]
fn density_of_single_point() {
    let a = cubic_cartan().unwrap();
    let o = partial_orbit_of(&a, &TorusPoint::zero(3), &[vec![0, 0]], OrbitMeta::default()).unwrap();
    let d = density_metrics(&o, &[4, 512], 100, 1).unwrap();
    assert_eq!(d.grid[0].fraction, Some(1.0 / 64.0));
    assert_eq!(d.grid[1].fraction, None);
}

#[test]
fn generic_cubic_orbit_has_pattern() {
    let a = cubic_cartan().unwrap();
    let ctx = build_context(&a, &[]).unwrap();
    let el = enumerate_slice(&a, &SliceQuery::new(&[], 1.0, 12, 2, false)).unwrap();
    let o = partial_orbit(&a, &TorusPoint::random_dyadic(3, 64, 5), &el, OrbitMeta::default()).unwrap();
    assert!(pattern_probe(&a, &ctx, &o, &[0.05], 1e-9)[0].witness.is_some());
}

#[test]
fn subtorus_confinement_of_zero_and_histogram() {
    let a = octic().unwrap();
    let basis = octic_subfield_basis(a.field());
    let el = enumerate_slice(&a, &SliceQuery::new(&OCTIC_S, DEFAULT_EPS0, 3, 4, false)).unwrap();
    let o = partial_orbit(&a, &TorusPoint::zero(8), &el, OrbitMeta::default()).unwrap();
    assert!(subtorus_confinement_check(&a, &o, &basis, &octic_shifts(), 1e-9).unwrap().confined);

    let o = partial_orbit(&a, &y_point(&a, 4), &el, OrbitMeta::default()).unwrap();
    let v = subtorus_confinement_check(&a, &o, &basis, &octic_shifts(), 1e-9).unwrap();
    assert!(v.confined);
    let mut hist = [0usize; 3];
    for e in &el {
        hist[(e.n[0] + 1) as usize] += 1;
    }
    for (k, e) in el.iter().enumerate() {
        assert!(v.on[k][(e.n[0] + 1) as usize]);
    }
    assert_eq!(hist[0] + hist[1] + hist[2], el.len());
    assert!(subtorus_confinement_check(&a, &o, &[basis[0].clone(), basis[0].clone()], &octic_shifts(), 1e-9).is_err());
}

#[test]
fn recurrence_witnesses() {
    let a = sqrt2_action();
    let zero = recurrence_torsion_witness(&a, &TorusPoint::zero(2), &[(vec![3], vec![1])], 1e-9).unwrap().unwrap();
    assert_eq!(zero.q.to_string(), "1");
    let x = TorusPoint::exact_i64(&[1, 2], 5);
    let pairs: Vec<(Vec<i64>, Vec<i64>)> = (1..=30).map(|k| (vec![k], vec![0])).collect();
    let c = recurrence_torsion_witness(&a, &x, &pairs, 1e-9).unwrap().unwrap();
    assert_eq!(5 % c.q.to_string().parse::<i64>().unwrap(), 0);
    let g = TorusPoint::random_dyadic(2, 64, 3);
    assert!(recurrence_torsion_witness(&a, &g, &pairs, 1e-9).unwrap().is_none());
}

#[test]
fn line_density_cases() {
    let a = sqrt2_action();
    let r = line_density_experiment(&a, &[1.0, 0.7], &[vec![0]], 0.05, 20000, 500, 1).unwrap();
    assert!(r.hypothesis_ok);
    assert_eq!(r.first_dense, Some(vec![0]));
    let axis = line_density_experiment(&a, &[1.0, 0.0], &[vec![0]], 0.05, 100, 100, 1).unwrap();
    assert!(!axis.hypothesis_ok);
    assert!(line_density_experiment(&a, &[0.0, 0.0], &[vec![0]], 0.05, 10, 10, 1).is_err());
}
