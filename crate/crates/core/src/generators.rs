//! Seeded random inputs: smooth forms, gauges and paths. Everything is drawn
//! from a caller-supplied RNG, so equal seeds give equal objects.

use std::f64::consts::PI;

use rand::Rng;

use crate::bundles::{Gauge, GaugeField, SmoothField, SmoothScalar, Wave};
use crate::group::GroupKind;
use crate::paths::{Chart, ChartPoint, Path};

/// A sum of `waves` plane waves with amplitudes below `amplitude` and
/// frequency components below `max_frequency`. `planar` keeps the third
/// frequency component zero.
pub fn random_scalar<R: Rng>(rng: &mut R, waves: usize, amplitude: f64, max_frequency: f64, planar: bool) -> SmoothScalar {
    let waves = (0..waves)
        .map(|_| Wave {
            amplitude: rng.gen_range(-amplitude..amplitude),
            frequency: [
                rng.gen_range(-max_frequency..max_frequency),
                rng.gen_range(-max_frequency..max_frequency),
                if planar { 0.0 } else { rng.gen_range(-max_frequency..max_frequency) },
            ],
            phase: rng.gen_range(0.0..2.0 * PI),
        })
        .collect();
    SmoothScalar { waves }
}

/// A random smooth form; U(1) forms only use the `i` component.
pub fn random_smooth_field<R: Rng>(rng: &mut R, kind: GroupKind, amplitude: f64) -> SmoothField {
    let mut field = SmoothField::default();
    let components = match kind {
        GroupKind::U1 => 1,
        GroupKind::SU2 => 3,
    };
    for row in field.coefficients.iter_mut() {
        for c in row.iter_mut().take(components) {
            *c = random_scalar(rng, 2, amplitude, 1.5, false);
        }
    }
    field
}

pub fn random_gauge_field<R: Rng>(rng: &mut R, kind: GroupKind) -> GaugeField {
    match kind {
        GroupKind::U1 => GaugeField::Phase { chi: random_scalar(rng, 3, 1.5, 1.5, true) },
        GroupKind::SU2 => GaugeField::Euler {
            angles: [
                random_scalar(rng, 2, 1.2, 1.5, true),
                random_scalar(rng, 2, 1.2, 1.5, true),
                random_scalar(rng, 2, 1.2, 1.5, true),
            ],
        },
    }
}

/// Independent random fields on every chart.
pub fn random_gauge<R: Rng>(rng: &mut R, kind: GroupKind) -> Gauge {
    Gauge {
        flat: random_gauge_field(rng, kind),
        north: random_gauge_field(rng, kind),
        south: random_gauge_field(rng, kind),
    }
}

fn fourier<R: Rng>(rng: &mut R, harmonics: usize, amplitude: f64) -> Vec<(f64, f64)> {
    (0..harmonics)
        .map(|_| (rng.gen_range(-amplitude..amplitude), rng.gen_range(0.0..2.0 * PI)))
        .collect()
}

fn eval_fourier(terms: &[(f64, f64)], t: f64) -> f64 {
    terms
        .iter()
        .enumerate()
        .map(|(m, &(a, p))| a * ((m + 1) as f64 * PI * t + p).sin() / (m + 1) as f64)
        .sum()
}

/// A smooth open path in the flat chart inside `[−3, 3]²`.
pub fn random_flat_path<R: Rng>(rng: &mut R, samples: usize) -> Path {
    let start = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let drift = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let fu = fourier(rng, 3, 0.6);
    let fv = fourier(rng, 3, 0.6);
    let (fu0, fv0) = (eval_fourier(&fu, 0.0), eval_fourier(&fv, 0.0));
    Path::from_fn(Chart::Flat, samples, |t| {
        [
            start[0] + drift[0] * t + eval_fourier(&fu, t) - fu0,
            start[1] + drift[1] * t + eval_fourier(&fv, t) - fv0,
        ]
    })
    .expect("finite samples")
}

/// An arc-length parametrized flat path whose curvature stays below 4, so
/// its polyline has no hairpins at the scale of its normalization chords.
pub fn random_regular_path<R: Rng>(rng: &mut R, samples: usize) -> Path {
    let length = rng.gen_range(1.0..3.0);
    let (k0, k1) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let freq = rng.gen_range(1.0..6.0);
    let mut heading = rng.gen_range(0.0..2.0 * PI);
    let mut at = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let ds = length / (samples - 1) as f64;
    let mut pts = vec![ChartPoint::flat(at[0], at[1])];
    for i in 1..samples {
        heading += (k0 + k1 * (freq * i as f64 * ds).sin()) * ds;
        at = [at[0] + heading.cos() * ds, at[1] + heading.sin() * ds];
        pts.push(ChartPoint::flat(at[0], at[1]));
    }
    Path::new(pts).expect("finite samples")
}

/// A smooth closed loop in the flat chart: a perturbed ellipse.
pub fn random_flat_loop<R: Rng>(rng: &mut R, samples: usize) -> Path {
    let center = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let radii = [rng.gen_range(0.3..1.0), rng.gen_range(0.3..1.0)];
    let wobble = rng.gen_range(0.0..0.2);
    let k = rng.gen_range(2..5) as f64;
    let mut pts: Vec<ChartPoint> = (0..samples - 1)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / (samples - 1) as f64;
            let r = 1.0 + wobble * (k * a).sin();
            ChartPoint::flat(center[0] + radii[0] * r * a.cos(), center[1] + radii[1] * r * a.sin())
        })
        .collect();
    pts.push(pts[0]);
    Path::new(pts).expect("finite samples")
}

/// A smooth open path on the sphere with colatitude in `[0.3, π − 0.3]`,
/// tagged north on the northern hemisphere and south otherwise.
pub fn random_sphere_path<R: Rng>(rng: &mut R, samples: usize) -> Path {
    let theta0 = rng.gen_range(0.6..PI - 0.6);
    let phi0 = rng.gen_range(0.0..2.0 * PI);
    let dtheta = rng.gen_range(-0.8..0.8);
    let dphi = rng.gen_range(-2.0..2.0);
    let ft = fourier(rng, 2, 0.3);
    let fp = fourier(rng, 2, 0.8);
    let (ft0, fp0) = (eval_fourier(&ft, 0.0), eval_fourier(&fp, 0.0));
    let pts = (0..samples)
        .map(|i| {
            let t = i as f64 / (samples - 1) as f64;
            let theta = (theta0 + dtheta * t + eval_fourier(&ft, t) - ft0).clamp(0.3, PI - 0.3);
            let phi = phi0 + dphi * t + eval_fourier(&fp, t) - fp0;
            ChartPoint::on_sphere(theta, phi)
        })
        .collect();
    Path::new(pts).expect("valid sphere path")
}
