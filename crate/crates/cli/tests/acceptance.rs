use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fibra::algebra::*;
use fibra::bundles::*;
use fibra::cylinder::*;
use fibra::generators::{random_flat_loop, random_gauge, random_smooth_field};
use fibra::paths::{consistency_check, Law, TabulatedConnection};
use fibra::reduction::*;
use fibra::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn blade_product(a: u8, b: u8) -> (f64, u8) {
    let mut swaps = 0;
    for bit in 0..3 {
        if b & (1 << bit) != 0 {
            swaps += (a >> (bit + 1)).count_ones();
        }
    }
    let flips = swaps + (a & b).count_ones();
    (if flips % 2 == 0 { 1.0 } else { -1.0 }, a ^ b)
}

const BLADES: [(f64, u8); 8] = [
    (1.0, 0b000),
    (1.0, 0b001),
    (1.0, 0b010),
    (1.0, 0b100),
    (1.0, 0b011),
    (1.0, 0b110),
    (-1.0, 0b101),
    (1.0, 0b111),
];

fn clifford_table_criterion() -> Outcome {
    let table = clifford_table();
    for r in 0..8 {
        for c in 0..8 {
            let (s, m) = blade_product(BLADES[r].1, BLADES[c].1);
            let slot = BLADES.iter().position(|&(_, mask)| mask == m).unwrap();
            let mut expected = [0.0; 8];
            expected[slot] = BLADES[r].0 * BLADES[c].0 * s * BLADES[slot].0;
            ensure(table[r][c] == expected, || format!("entry ({r}, {c}) differs from blade arithmetic"))?;
        }
    }
    for n in 1..=3 {
        let e = cl_generator(n).unwrap();
        ensure(e * e == -Cl03Element::ONE, || format!("e{n}² ≠ −1"))?;
        for m in (1..=3).filter(|&m| m != n) {
            let f = cl_generator(m).unwrap();
            ensure(e * f == -(f * e), || format!("e{n}, e{m} do not anticommute"))?;
        }
    }
    Ok("64 products exact".into())
}

fn decomposition_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut q = || Quaternion::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
    let mut done = 0;
    while done < 1000 {
        let x = Cl03Element::new(q(), q());
        if x.a.norm() < 1e-2 || x.b.norm() < 1e-2 {
            continue;
        }
        let d = icl_decompose(x).map_err(|e| e.to_string())?;
        worst = worst.max(d.recompose().max_abs_diff(x) / x.norm());
        done += 1;
    }
    ensure(worst <= 1e-12, || format!("relative error {worst:e}"))?;
    Ok(format!("worst relative error {worst:.1e}"))
}

/// Phase of the charge-`n` monopole around a closed chart polygon, with each
/// chord integrated in closed form.
fn polygon_phase(path: &Path, charge: i64) -> f64 {
    let sign = if path.samples()[0].chart == Chart::South { -1.0 } else { 1.0 };
    path.samples()
        .windows(2)
        .map(|w| {
            let (p, q) = (w[0].coords, w[1].coords);
            let d = [q[0] - p[0], q[1] - p[1]];
            let alpha = d[0] * d[0] + d[1] * d[1];
            let beta = 2.0 * (p[0] * d[0] + p[1] * d[1]);
            let gamma = 1.0 + p[0] * p[0] + p[1] * p[1];
            let root = (4.0 * alpha * gamma - beta * beta).sqrt();
            -sign * charge as f64 * (p[0] * q[1] - p[1] * q[0]) * 2.0 / root * root.atan2(2.0 * gamma + beta)
        })
        .sum()
}

fn loglog_slope(steps: &[usize], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = steps.iter().map(|&s| (s as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    -sxy / sxx
}

fn holonomy_criterion() -> Outcome {
    let mut worst: f64 = 0.0;
    for charge in [1, 2] {
        let bundle = PrincipalBundleModel::monopole(GroupKind::U1, charge);
        for theta in [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0] {
            let lp = Path::latitude_loop(theta, 16384, 0.0).map_err(|e| e.to_string())?;
            let g = loop_holonomy(&ConnectionForm::Monopole { charge }, &bundle, &lp, 10_000).map_err(|e| e.to_string())?;
            let target = GroupElement::u1(-(charge as f64) * PI * (1.0 - theta.cos()));
            worst = worst.max(g.distance(&target));
        }
    }
    ensure(worst <= 1e-6, || format!("phase error {worst:e}"))?;

    let steps = [100, 1000, 10_000];
    let bundle = PrincipalBundleModel::monopole(GroupKind::U1, 40);
    let lp = Path::latitude_loop(PI / 2.0, 50, 0.0).unwrap();
    let exact = GroupElement::u1(polygon_phase(&lp, 40));
    let form = ConnectionForm::Monopole { charge: 40 };
    let errors: Vec<f64> = steps
        .iter()
        .map(|&s| loop_holonomy(&form, &bundle, &lp, s).map(|g| g.distance(&exact)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let monopole_slope = loglog_slope(&steps, &errors);

    let u1 = PrincipalBundleModel::flat(GroupKind::U1);
    let form = ConnectionForm::Constant { au: [60.0, 0.0, 0.0], av: [0.0; 3] };
    let seg = Path::segment(Chart::Flat, [0.0, 0.0], [1.0, 0.0], 2).unwrap();
    let exact = GroupElement::u1(-60.0);
    let errors: Vec<f64> = steps.iter().map(|&s| transport(&form, &u1, &seg, s).unwrap().distance(&exact)).collect();
    let constant_slope = loglog_slope(&steps, &errors);

    let slope = monopole_slope.min(constant_slope);
    ensure(slope >= 3.7, || format!("convergence slope {slope:.2}"))?;
    Ok(format!("phase error {worst:.1e}, slopes {monopole_slope:.2} (monopole) {constant_slope:.2} (constant)"))
}

/// `pieces` consecutive sections of one random smooth curve.
fn random_chain(seed: u64, pieces: usize) -> Vec<Path> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let curve = move |t: f64| {
        [2.0 * t + c[0] * (3.0 * t + c[1]).sin() * 0.4, c[2] + 0.5 * (c[3] * 4.0 * t).sin() + c[4] * t * t + 0.1 * c[5] * t]
    };
    (0..pieces)
        .map(|k| {
            let (a, b) = (k as f64 / pieces as f64, (k + 1) as f64 / pieces as f64);
            Path::from_fn(Chart::Flat, 100, |t| curve(a + (b - a) * t)).unwrap()
        })
        .collect()
}

fn connection_laws_criterion() -> Outcome {
    let bundle = PrincipalBundleModel::flat(GroupKind::SU2);
    let field = random_smooth_field(&mut ChaCha8Rng::seed_from_u64(11), GroupKind::SU2, 0.8);
    let conn = HolonomyBacked::new(ConnectionForm::Smooth { field }, bundle, 10_000);
    let paths: Vec<Path> = (0..4).flat_map(|s| random_chain(100 + s, 5)).collect();
    let report = consistency_check(&conn, &paths, 1e-6);
    for l in &report.laws {
        ensure(l.pass, || format!("{:?} failed at {:e}", l.law, l.max_deviation))?;
    }
    ensure(report.law(Law::Composition).checked >= 16, || "too few composable pairs".into())?;

    let parts = random_chain(7, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut g = || GroupElement::su2(Versor::exp([rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]));
    let clean = parts.iter().fold(TabulatedConnection::builder(), |b, p| b.generator(p.clone(), g()));
    let wrong = GroupElement::su2(Versor::exp([1.0, 0.0, 0.0]));

    let composite = parts[0].compose(&parts[1]).unwrap();
    let faults = [
        (Law::Composition, clean.clone().override_entry(composite, wrong)),
        (Law::Inverse, clean.clone().override_entry(parts[1].reverse(), wrong)),
    ];
    for (corrupted, builder) in faults {
        let report = consistency_check(&builder.build().map_err(|e| e.to_string())?, &parts, 1e-9);
        for l in &report.laws {
            ensure(l.pass == (l.law != corrupted), || format!("{corrupted:?} fault: {:?} pass = {}", l.law, l.pass))?;
        }
    }
    Ok(format!("20 paths, composition checked on {} pairs; faults isolated", report.law(Law::Composition).checked))
}

fn triviality_criterion() -> Outcome {
    for n in -5..=5 {
        let bundle = PrincipalBundleModel::monopole(GroupKind::U1, n);
        let w = equator_winding(&bundle).map_err(|e| e.to_string())?;
        ensure(w == n, || format!("winding {w} for n = {n}"))?;
        match triviality_test(&bundle).map_err(|e| e.to_string())? {
            Triviality::Nontrivial { winding } => ensure(n != 0 && winding == n, || format!("n = {n} nontrivial"))?,
            Triviality::Trivial { section } => {
                ensure(n == 0 && section.residual <= 1e-9, || format!("n = {n} trivial, residual {:e}", section.residual))?
            }
        }
    }
    let mut su2 = Vec::new();
    for n in -3..=3 {
        su2.push(PrincipalBundleModel::monopole(GroupKind::SU2, n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..3 {
        let gauge = random_gauge(&mut rng, GroupKind::SU2);
        let t = Transition::Gauged { base: Box::new(Transition::Monopole { charge: 2 }), gauge };
        su2.push(PrincipalBundleModel::sphere(GroupKind::SU2, t).map_err(|e| e.to_string())?);
    }
    let mut worst: f64 = 0.0;
    for bundle in &su2 {
        match triviality_test(bundle).map_err(|e| e.to_string())? {
            Triviality::Trivial { section } => {
                let last = section.homotopy.last().ok_or("empty homotopy")?;
                ensure(last.iter().all(|g| g.distance(&last[0]) < 1e-6), || "homotopy does not contract".into())?;
                worst = worst.max(section.residual);
            }
            Triviality::Nontrivial { winding } => return Err(format!("SU(2) bundle nontrivial ({winding})")),
        }
    }
    ensure(worst <= 1e-6, || format!("SU(2) section residual {worst:e}"))?;
    Ok(format!("windings exact, {} SU(2) sections, worst residual {worst:.1e}", su2.len()))
}

fn comparison_criterion() -> Outcome {
    let bundle = PrincipalBundleModel::flat(GroupKind::SU2);
    let form = ConnectionForm::Smooth { field: random_smooth_field(&mut ChaCha8Rng::seed_from_u64(9), GroupKind::SU2, 0.8) };
    let flat = canonical_flat(&bundle).map_err(|e| e.to_string())?;
    let path = random_chain(21, 1).remove(0);
    let t = transport(&form, &bundle, &path, 10_000).unwrap();
    let rel = compare_connections(&form, &flat, &bundle, &path, 10_000).unwrap();
    let vs_transport = rel.distance(&t);
    let same = compare_connections(&form, &form, &bundle, &path, 10_000).unwrap().distance(&GroupElement::identity(GroupKind::SU2));
    let fine = compare_connections(&form, &flat, &bundle, &path, 100_000).unwrap();
    let refinement = fine.distance(&rel);
    ensure(vs_transport <= 1e-9, || format!("flat reference vs transport {vs_transport:e}"))?;
    ensure(same <= 1e-12, || format!("a1 = a2 gives {same:e}"))?;
    ensure(refinement <= 1e-8, || format!("10× refinement moved {refinement:e}"))?;
    Ok(format!("{vs_transport:.1e} / {same:.1e} / {refinement:.1e}"))
}

fn reduction_criterion() -> Outcome {
    let intervals = 512;
    for seed in 0..3 {
        let lp = polar_retract(&LoopGenerator::random_smooth(seed).sample(intervals).unwrap()).map_err(|e| e.to_string())?;
        let again = polar_retract(&spin4_as_icl(&lp)).map_err(|e| e.to_string())?;
        let d = lp.samples().iter().zip(again.samples()).map(|(x, y)| x.max_abs_diff(*y)).fold(0.0, f64::max);
        ensure(d <= 1e-12, || format!("retraction moved a retracted loop by {d:e}"))?;
    }
    for n in -5..=5 {
        let verdict = section_glue_test(&FiberLoop::S1(s1_power_loop(n, 1000).unwrap())).map_err(|e| e.to_string())?;
        let ok = match verdict {
            ReductionVerdict::Obstructed { winding } => winding == n,
            ReductionVerdict::Reduced { .. } => n == 0,
        };
        ensure(ok, || format!("S¹ loop of degree {n}"))?;
    }
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let verdict = reduce_with_refinement(&LoopGenerator::random_smooth(seed), intervals).map_err(|e| e.to_string())?;
        let r = verdict.residual().filter(|_| verdict.is_reduced()).ok_or(format!("seed {seed} not reduced"))?;
        worst = worst.max(r);
    }
    ensure(worst <= 1e-6, || format!("reduction residual {worst:e}"))?;
    Ok(format!("10 loops reduced, worst residual {worst:.1e}"))
}

fn cylinder_criterion() -> Outcome {
    let bundle = PrincipalBundleModel::flat(GroupKind::SU2);
    let form = ConnectionForm::Smooth { field: random_smooth_field(&mut ChaCha8Rng::seed_from_u64(1), GroupKind::SU2, 0.8) };
    let wilson = |p: Path| CylinderSpec { paths: vec![p], expr: Expr::re_trace(Expr::slot(1)) };
    let lp = random_flat_loop(&mut ChaCha8Rng::seed_from_u64(6), 400);
    let dev = gauge_invariance_test(&wilson(lp), &form, &bundle, 100, 17, 10_000).map_err(|e| e.to_string())?;
    ensure(dev <= 1e-8, || format!("Wilson loop moved {dev:e}"))?;

    let open = Path::from_fn(Chart::Flat, 200, |t| [t, 0.4 * (PI * t).sin()]).unwrap();
    let gauge = random_gauge(&mut ChaCha8Rng::seed_from_u64(0), GroupKind::SU2);
    let witness = gauge_deviation(&wilson(open), &form, &bundle, &gauge, 10_000).map_err(|e| e.to_string())?;
    ensure(witness > 1e-3, || format!("open path moved only {witness:e}"))?;
    Ok(format!("closed {dev:.1e}, open {witness:.3}"))
}

fn scene(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes").join(name)
}

fn determinism_criterion() -> Outcome {
    let runs: &[(&str, &[&str])] = &[
        ("flat_su2.json", &["transport --path ab --conn smooth", "check-consistency --conn faulty --paths a,b", "gauge-test --cylinder wilson --conn smooth", "gauge-test --cylinder open --conn smooth --witness"]),
        ("monopole1.json", &["holonomy --path equator --conn monopole", "transport --path meridian --conn monopole", "trivial", "cylinder --cylinder equator_phase --conn monopole"]),
        ("monopole0.json", &["winding", "trivial --full"]),
        ("icl_reduction.json", &["reduce --loop smooth --full", "reduce --loop phase3", "trivial"]),
    ];
    let mut count = 0;
    for (file, commands) in runs {
        for cmd in *commands {
            let run = || {
                Command::new(env!("CARGO_BIN_EXE_fibra"))
                    .arg("--scene")
                    .arg(scene(file))
                    .args(cmd.split_whitespace())
                    .output()
                    .map_err(|e| e.to_string())
            };
            let (a, b) = (run()?, run()?);
            ensure(a.stdout == b.stdout && a.status == b.status, || format!("{file}: `{cmd}` differs between runs"))?;
            ensure(a.status.code() != Some(2), || format!("{file}: `{cmd}` failed: {}", String::from_utf8_lossy(&a.stdout)))?;
            count += 1;
        }
    }
    Ok(format!("{count} commands over 4 scenes"))
}

fn main() -> ExitCode {
    let criteria: [(&str, Option<Duration>, fn() -> Outcome); 9] = [
        ("clifford table", Some(Duration::from_millis(100)), clifford_table_criterion),
        ("decomposition round-trip", Some(Duration::from_secs(1)), decomposition_criterion),
        ("monopole holonomy oracle", Some(Duration::from_secs(5)), holonomy_criterion),
        ("generalized-connection laws", Some(Duration::from_secs(10)), connection_laws_criterion),
        ("triviality and global sections", Some(Duration::from_secs(5)), triviality_criterion),
        ("two-connection comparison", Some(Duration::from_secs(2)), comparison_criterion),
        ("reduction pipeline", Some(Duration::from_secs(10)), reduction_criterion),
        ("cylinder gauge invariance", Some(Duration::from_secs(10)), cylinder_criterion),
        ("CLI determinism", None, determinism_criterion),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if elapsed > l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("[PASS] {name} ({elapsed:.2?}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name} ({elapsed:.2?}): {why}");
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
