use std::f64::consts::PI;

use fibra::bundles::{gauge_bundle, gauge_transform, Transition};
use fibra::cylinder::*;
use fibra::generators::{random_flat_loop, random_gauge, random_smooth_field};
use fibra::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn smooth_su2(seed: u64) -> ConnectionForm {
    ConnectionForm::Smooth { field: random_smooth_field(&mut ChaCha8Rng::seed_from_u64(seed), GroupKind::SU2, 0.8) }
}

fn wilson(path: Path) -> CylinderSpec {
    CylinderSpec { paths: vec![path], expr: Expr::re_trace(Expr::slot(1)) }
}

#[test]
fn wilson_loop_survives_a_hundred_gauges() {
    let bundle = PrincipalBundleModel::flat(GroupKind::SU2);
    let lp = random_flat_loop(&mut ChaCha8Rng::seed_from_u64(6), 400);
    let dev = gauge_invariance_test(&wilson(lp), &smooth_su2(1), &bundle, 100, 17, 10_000).unwrap();
    assert!(dev <= 1e-8, "{dev:e}");
}

#[test]
fn loops_sharing_a_basepoint_compose_invariantly() {
    let bundle = PrincipalBundleModel::flat(GroupKind::SU2);
    let circle = |r: f64, sense: f64| {
        Path::from_fn(Chart::Flat, 300, move |t| {
            let a = sense * 2.0 * PI * t;
            [0.2 + r * (1.0 - a.cos()), r * a.sin()]
        })
        .unwrap()
    };
    let spec = CylinderSpec {
        paths: vec![circle(0.5, 1.0), circle(0.3, -1.0)],
        expr: Expr::Sum {
            terms: vec![
                Expr::re_trace(Expr::Product { factors: vec![Expr::slot(1), Expr::inverse(Expr::slot(2))] }),
                Expr::ScalarProduct { factors: vec![Expr::Const { value: 0.5 }, Expr::re_trace(Expr::slot(2))] },
            ],
        },
    };
    assert_eq!(evaluate_cylinder(&spec, &smooth_su2(2), &bundle, 10_000).unwrap().frame, Frame::Intrinsic);
    let dev = gauge_invariance_test(&spec, &smooth_su2(2), &bundle, 20, 5, 10_000).unwrap();
    assert!(dev <= 1e-8, "{dev:e}");
}

#[test]
fn open_path_value_depends_on_the_gauge() {
    let bundle = PrincipalBundleModel::flat(GroupKind::SU2);
    let open = Path::from_fn(Chart::Flat, 200, |t| [t, 0.4 * (PI * t).sin()]).unwrap();
    let spec = wilson(open);
    let value = evaluate_cylinder(&spec, &smooth_su2(3), &bundle, 10_000).unwrap();
    assert_eq!(value.frame, Frame::Trivialized);
    let witness = random_gauge(&mut ChaCha8Rng::seed_from_u64(0), GroupKind::SU2);
    let dev = gauge_deviation(&spec, &smooth_su2(3), &bundle, &witness, 10_000).unwrap();
    assert!(dev > 1e-3, "{dev:e}");
    assert!(matches!(
        gauge_invariance_test(&spec, &smooth_su2(3), &bundle, 1, 0, 100),
        Err(CylinderError::OpenPathInInvarianceTest(1))
    ));
}

#[test]
fn sphere_wilson_loop_is_gauge_invariant() {
    let bundle = PrincipalBundleModel::sphere(GroupKind::SU2, Transition::Monopole { charge: 1 }).unwrap();
    let form = ConnectionForm::Sum { terms: vec![ConnectionForm::Monopole { charge: 1 }, smooth_su2(8)] };
    let lp = Path::latitude_loop(1.2, 4096, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let spec = wilson(lp);
    for _ in 0..5 {
        let g = random_gauge(&mut rng, GroupKind::SU2);
        let before = evaluate_cylinder(&spec, &form, &bundle, 10_000).unwrap().value;
        let after = evaluate_cylinder(&spec, &gauge_transform(&form, &bundle, &g), &gauge_bundle(&bundle, &g), 10_000)
            .unwrap()
            .value;
        assert!((before - after).abs() < 1e-8, "{:e}", (before - after).abs());
    }
}

#[test]
fn equator_real_part_is_minus_one() {
    let bundle = PrincipalBundleModel::monopole(GroupKind::U1, 1);
    let spec = wilson(Path::latitude_loop(PI / 2.0, 16384, 0.0).unwrap());
    let v = evaluate_cylinder(&spec, &ConnectionForm::Monopole { charge: 1 }, &bundle, 10_000).unwrap();
    assert!((v.value + 1.0).abs() < 1e-10);
}

#[test]
fn cylinder_value_ignores_reparametrization() {
    let bundle = PrincipalBundleModel::flat(GroupKind::SU2);
    let lp = random_flat_loop(&mut ChaCha8Rng::seed_from_u64(31), 300);
    let base = evaluate_cylinder(&wilson(lp.clone()), &smooth_su2(4), &bundle, 10_000).unwrap().value;
    let cubic = lp.reparametrize(|t| t.powi(3), 300).unwrap();
    let moved = evaluate_cylinder(&wilson(cubic), &smooth_su2(4), &bundle, 10_000).unwrap().value;
    assert!((base - moved).abs() <= 1e-7);
}
