use fibra::algebra::spin4_quotient;
use fibra::reduction::*;
use fibra::*;
use proptest::prelude::*;

const INTERVALS: usize = 512;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn retraction_is_idempotent_and_multiplicative(s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = LoopGenerator::random_smooth(s1).sample(INTERVALS).unwrap();
        let b = LoopGenerator::random_smooth(s2).sample(INTERVALS).unwrap();
        let ra = polar_retract(&a).unwrap();
        let again = polar_retract(&spin4_as_icl(&ra)).unwrap();
        for (x, y) in ra.samples().iter().zip(again.samples()) {
            prop_assert!(x.max_abs_diff(*y) <= 1e-12);
        }

        let ab = IclLoop::new(a.samples().iter().zip(b.samples()).map(|(x, y)| *x * *y).collect()).unwrap();
        let rb = polar_retract(&b).unwrap();
        let rab = polar_retract(&ab).unwrap();
        for ((x, y), z) in ra.samples().iter().zip(rb.samples()).zip(rab.samples()) {
            prop_assert!((*x * *y).max_abs_diff(*z) <= 1e-12);
        }
    }

    #[test]
    fn quotient_ignores_the_diagonal_factor(s in any::<u64>(), w in prop::array::uniform3(-3.0..3.0f64)) {
        let lp = polar_retract(&LoopGenerator::random_smooth(s).sample(INTERVALS).unwrap()).unwrap();
        let d = Versor::exp(w);
        for x in lp.samples() {
            let moved = Spin4Element::new(x.u * d, x.v * d);
            prop_assert!(spin4_quotient(moved).sphere_angle(spin4_quotient(*x)) < 1e-7);
        }
    }
}

#[test]
fn circle_windings_are_exact_at_every_resolution() {
    for n in -5..=5 {
        for intervals in [256, 1000, 4096] {
            let verdict = section_glue_test(&FiberLoop::S1(s1_power_loop(n, intervals).unwrap())).unwrap();
            match (n, verdict) {
                (0, ReductionVerdict::Reduced { residual, .. }) => assert!(residual <= 1e-9),
                (_, ReductionVerdict::Obstructed { winding }) => assert_eq!(winding, n),
                (_, other) => panic!("n = {n}: {other:?}"),
            }
        }
    }
}

#[test]
fn seeded_smooth_loops_reduce() {
    for seed in 0..10 {
        let verdict = reduce_with_refinement(&LoopGenerator::random_smooth(seed), INTERVALS).unwrap();
        assert!(verdict.is_reduced(), "seed {seed}");
        assert!(verdict.residual().unwrap() <= 1e-6, "seed {seed}: {:?}", verdict.residual());
    }
}

#[test]
fn named_generators_reduce() {
    for generator in [LoopGenerator::PowerWinding { n: 3 }, LoopGenerator::ScaledDiagonal] {
        let verdict = reduce_pipeline(&generator.sample(INTERVALS).unwrap()).unwrap();
        assert!(verdict.is_reduced() && verdict.residual().unwrap() <= 1e-6, "{generator:?}");
    }
}

#[test]
fn reduced_transition_glues_the_section() {
    let lp = LoopGenerator::random_smooth(42).sample(INTERVALS).unwrap();
    let ReductionVerdict::Reduced { section: FiberSection::S3 { north, south, homotopy }, reduced_transition: Some(v), .. } =
        reduce_pipeline(&lp).unwrap()
    else {
        panic!("expected a reduced S³ section");
    };
    let spin4 = polar_retract(&lp).unwrap();
    for (j, x) in spin4.samples().iter().enumerate() {
        assert!((x.u * north[j] * x.v.inverse()).sphere_angle(south[j]) < 1e-12);
        // after the section moves to the identity the transition is diagonal
        assert!((south[j].inverse() * x.u * north[j]).sphere_angle(v[j]) < 1e-12);
    }
    let last = homotopy.last().unwrap();
    assert!(last.iter().all(|q| q.sphere_angle(last[0]) < 1e-6));
    for level in &homotopy {
        assert!(level.windows(2).all(|w| w[0].sphere_angle(w[1]) <= std::f64::consts::FRAC_PI_2 + 1e-12));
    }
}
