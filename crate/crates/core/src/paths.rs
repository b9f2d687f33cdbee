//! Sampled paths on the base manifold and generalized connections on them.
//!
//! A [`Path`] is a polyline through chart-tagged samples. Between samples it
//! is a straight segment in the chart the path is currently walking in; the
//! walk starts in the chart of the first sample and switches to the other
//! sphere chart as soon as a sample leaves the comfort disc `|coords| ≤ R`
//! (see [`Path::walk`]). Intermediate tags only say how a sample's
//! coordinates are to be read.
//!
//! Transporter composition is left-acting: assigning `p1` then `p2` gives
//! `A(p2) · A(p1)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundles::BundleError;
use crate::group::GroupElement;

/// Default radius of the comfort disc of a stereographic chart.
pub const COMFORT_RADIUS: f64 = 1.2;
/// Endpoint matching tolerance for composition, in chart units.
pub const JUNCTION_TOL: f64 = 1e-9;
/// Paths shorter than this cannot be normalized.
pub const DEGENERATE_LENGTH: f64 = 1e-12;
/// Samples used for canonical keys.
pub const KEY_SAMPLES: usize = 64;
/// Rounding resolution of canonical keys.
pub const KEY_RESOLUTION: f64 = 1e-6;

const VERTEX_SLACK: f64 = 1e-9;

const MAX_CHART_RADIUS: f64 = 1e8;
const OVERLAP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("a path needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample {0} has non-finite coordinates")]
    NonFinite(usize),
    #[error("parameter values must be strictly increasing (index {0})")]
    NonMonotoneParams(usize),
    #[error("{params} parameter values for {samples} samples")]
    ParamLengthMismatch { samples: usize, params: usize },
    #[error("chart changes between samples {0} and {next} outside the chart overlap", next = .0 + 1)]
    BadChartChange(usize),
    #[error("sample {0} cannot be expressed in the chart being walked")]
    OutsideAtlas(usize),
    #[error("degenerate path: total length {0:e}")]
    DegeneratePath(f64),
    #[error("paths do not meet: endpoint distance {0:e}")]
    EndpointMismatch(f64),
    #[error("invalid sample count {0}")]
    InvalidSampleCount(usize),
}

/// Coordinate charts of the supported base manifolds.
///
/// `North` is stereographic projection from the south pole, `z = tan(θ/2) e^{iφ}`;
/// `South` is its inversion `z / |z|²`, so both charts share the azimuth φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    Flat,
    North,
    South,
}

impl Chart {
    pub fn is_sphere(self) -> bool {
        !matches!(self, Chart::Flat)
    }

    pub fn other(self) -> Option<Chart> {
        match self {
            Chart::Flat => None,
            Chart::North => Some(Chart::South),
            Chart::South => Some(Chart::North),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Chart::Flat => "flat",
            Chart::North => "north",
            Chart::South => "south",
        }
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn norm2(c: [f64; 2]) -> f64 {
    c[0].hypot(c[1])
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn lerp2(a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Inversion `z ↦ z / |z|²` between the two sphere charts.
pub(crate) fn invert(c: [f64; 2]) -> Option<[f64; 2]> {
    let r2 = c[0] * c[0] + c[1] * c[1];
    if !(r2 > 0.0) {
        return None;
    }
    let out = [c[0] / r2, c[1] / r2];
    (out[0].is_finite() && out[1].is_finite() && norm2(out) <= MAX_CHART_RADIUS).then_some(out)
}

/// A point of the base manifold in a named chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: Chart,
    pub coords: [f64; 2],
}

impl ChartPoint {
    pub fn new(chart: Chart, coords: [f64; 2]) -> Self {
        ChartPoint { chart, coords }
    }

    pub fn flat(u: f64, v: f64) -> Self {
        ChartPoint::new(Chart::Flat, [u, v])
    }

    /// The point with colatitude `theta` and azimuth `phi`, in the north chart
    /// on the northern closed hemisphere and the south chart otherwise.
    pub fn on_sphere(theta: f64, phi: f64) -> Self {
        let chart = if theta <= PI / 2.0 { Chart::North } else { Chart::South };
        ChartPoint::on_sphere_in(chart, theta, phi)
    }

    pub fn on_sphere_in(chart: Chart, theta: f64, phi: f64) -> Self {
        let r = match chart {
            Chart::South => ((PI - theta) / 2.0).tan(),
            _ => (theta / 2.0).tan(),
        };
        ChartPoint::new(chart, [r * phi.cos(), r * phi.sin()])
    }

    pub fn radius(&self) -> f64 {
        norm2(self.coords)
    }

    pub fn is_finite(&self) -> bool {
        self.coords[0].is_finite() && self.coords[1].is_finite()
    }

    /// Re-expresses the point in `target`, if it lies in that chart.
    pub fn to_chart(&self, target: Chart) -> Option<ChartPoint> {
        if target == self.chart {
            return Some(*self);
        }
        if !(self.chart.is_sphere() && target.is_sphere()) {
            return None;
        }
        invert(self.coords).map(|c| ChartPoint::new(target, c))
    }

    /// Chart distance to `other`, measured in this point's chart.
    pub fn distance(&self, other: &ChartPoint) -> Option<f64> {
        other.to_chart(self.chart).map(|o| dist2(self.coords, o.coords))
    }

    /// Colatitude and azimuth of a sphere point.
    pub fn spherical(&self) -> Option<(f64, f64)> {
        let r = self.radius();
        let phi = self.coords[1].atan2(self.coords[0]);
        match self.chart {
            Chart::Flat => None,
            Chart::North => Some((2.0 * r.atan(), phi)),
            Chart::South => Some((PI - 2.0 * r.atan(), phi)),
        }
    }

    /// Position on the unit sphere in R³.
    pub fn ambient(&self) -> Option<[f64; 3]> {
        if !self.chart.is_sphere() {
            return None;
        }
        let [u, v] = self.coords;
        let d = 1.0 + u * u + v * v;
        let z = (1.0 - u * u - v * v) / d;
        let z = if self.chart == Chart::South { -z } else { z };
        Some([2.0 * u / d, 2.0 * v / d, z])
    }

    fn in_overlap(&self) -> bool {
        let r = self.radius();
        r >= 1.0 / COMFORT_RADIUS - OVERLAP_SLACK && r <= COMFORT_RADIUS + OVERLAP_SLACK
    }
}

/// A straight piece of a walked path, in a single chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub chart: Chart,
    pub from: [f64; 2],
    pub to: [f64; 2],
}

impl Segment {
    pub fn length(&self) -> f64 {
        dist2(self.from, self.to)
    }

    pub fn point(&self, t: f64) -> [f64; 2] {
        lerp2(self.from, self.to, t)
    }
}

/// A change of chart during a walk, located at `at` (coordinates in `from`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartSwitch {
    pub from: Chart,
    pub to: Chart,
    pub at: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WalkStep {
    Switch(ChartSwitch),
    Segment(Segment),
}

/// An oriented sampled path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    samples: Vec<ChartPoint>,
    params: Vec<f64>,
}

impl Path {
    /// Path with uniform parameter values on `[0, 1]`.
    pub fn new(samples: Vec<ChartPoint>) -> Result<Self, PathError> {
        let n = samples.len();
        let params = (0..n).map(|i| i as f64 / (n.max(2) - 1) as f64).collect();
        Path::with_params(samples, params)
    }

    pub fn with_params(samples: Vec<ChartPoint>, params: Vec<f64>) -> Result<Self, PathError> {
        if samples.len() < 2 {
            return Err(PathError::TooFewSamples(samples.len()));
        }
        if params.len() != samples.len() {
            return Err(PathError::ParamLengthMismatch { samples: samples.len(), params: params.len() });
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.is_finite() {
                return Err(PathError::NonFinite(i));
            }
        }
        for i in 1..params.len() {
            if !(params[i] > params[i - 1]) {
                return Err(PathError::NonMonotoneParams(i));
            }
        }
        for i in 0..samples.len() - 1 {
            let (a, b) = (samples[i], samples[i + 1]);
            if a.chart != b.chart && !(a.chart.is_sphere() && b.chart.is_sphere() && a.in_overlap() && b.in_overlap()) {
                return Err(PathError::BadChartChange(i));
            }
        }
        Ok(Path { samples, params })
    }

    /// Straight segment with `samples` evenly spaced points.
    pub fn segment(chart: Chart, from: [f64; 2], to: [f64; 2], samples: usize) -> Result<Self, PathError> {
        if samples < 2 {
            return Err(PathError::InvalidSampleCount(samples));
        }
        let pts = (0..samples)
            .map(|i| ChartPoint::new(chart, lerp2(from, to, i as f64 / (samples - 1) as f64)))
            .collect();
        Path::new(pts)
    }

    /// Samples `f` on `[0, 1]` at `samples` evenly spaced parameters.
    pub fn from_fn(chart: Chart, samples: usize, f: impl Fn(f64) -> [f64; 2]) -> Result<Self, PathError> {
        if samples < 2 {
            return Err(PathError::InvalidSampleCount(samples));
        }
        let pts = (0..samples)
            .map(|i| ChartPoint::new(chart, f(i as f64 / (samples - 1) as f64)))
            .collect();
        Path::new(pts)
    }

    /// Closed loop at constant colatitude, traversed with increasing azimuth
    /// from `phi0`, with `segments` chords. The last sample repeats the first.
    pub fn latitude_loop(theta: f64, segments: usize, phi0: f64) -> Result<Self, PathError> {
        if segments < 3 {
            return Err(PathError::InvalidSampleCount(segments));
        }
        let mut pts: Vec<ChartPoint> = (0..segments)
            .map(|j| ChartPoint::on_sphere(theta, phi0 + 2.0 * PI * j as f64 / segments as f64))
            .collect();
        pts.push(pts[0]);
        Path::new(pts)
    }

    pub fn samples(&self) -> &[ChartPoint] {
        &self.samples
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start(&self) -> ChartPoint {
        self.samples[0]
    }

    pub fn end(&self) -> ChartPoint {
        self.samples[self.samples.len() - 1]
    }

    /// Whether the endpoints coincide within `tol` in the start chart.
    pub fn is_closed(&self, tol: f64) -> bool {
        self.start().distance(&self.end()).is_some_and(|d| d <= tol)
    }

    /// Whether `self` ends where `next` starts.
    pub fn meets(&self, next: &Path, tol: f64) -> bool {
        self.end().distance(&next.start()).is_some_and(|d| d <= tol)
    }

    /// Splits the path into straight chart segments and chart switches.
    ///
    /// The walk starts in the chart of the first sample. Before each segment,
    /// if its starting sample lies outside the comfort disc of the current
    /// sphere chart, the walk switches to the other chart at that sample. A
    /// final switch returns to the chart of the last sample.
    pub fn walk(&self, comfort_radius: f64) -> Result<Vec<WalkStep>, PathError> {
        let mut steps = Vec::with_capacity(self.samples.len() + 2);
        let mut current = self.samples[0].chart;
        let express = |i: usize, chart: Chart| -> Result<[f64; 2], PathError> {
            self.samples[i]
                .to_chart(chart)
                .map(|p| p.coords)
                .ok_or(PathError::OutsideAtlas(i))
        };
        for i in 0..self.samples.len() - 1 {
            let mut from = express(i, current)?;
            if current.is_sphere() && norm2(from) > comfort_radius {
                let to = current.other().expect("sphere chart");
                steps.push(WalkStep::Switch(ChartSwitch { from: current, to, at: from }));
                current = to;
                from = express(i, current)?;
            }
            let to = express(i + 1, current)?;
            steps.push(WalkStep::Segment(Segment { chart: current, from, to }));
        }
        let last = self.end();
        if last.chart != current {
            let at = express(self.samples.len() - 1, current)?;
            steps.push(WalkStep::Switch(ChartSwitch { from: current, to: last.chart, at }));
        }
        Ok(steps)
    }

    /// Segments of the default walk.
    pub fn segments(&self) -> Result<Vec<Segment>, PathError> {
        Ok(self
            .walk(COMFORT_RADIUS)?
            .into_iter()
            .filter_map(|s| match s {
                WalkStep::Segment(seg) => Some(seg),
                WalkStep::Switch(_) => None,
            })
            .collect())
    }

    /// Total chart length along the default walk.
    pub fn length(&self) -> Result<f64, PathError> {
        Ok(self.segments()?.iter().map(Segment::length).sum())
    }

    /// The same curve traversed backwards.
    pub fn reverse(&self) -> Path {
        let (lo, hi) = (self.params[0], self.params[self.params.len() - 1]);
        Path {
            samples: self.samples.iter().rev().copied().collect(),
            params: self.params.iter().rev().map(|t| lo + hi - t).collect(),
        }
    }

    /// `self` followed by `next`. The junction sample of `next` is dropped;
    /// the junction keeps the chart tag of `self`.
    pub fn compose(&self, next: &Path) -> Result<Path, PathError> {
        let (a, b) = (self.end(), next.start());
        let gap = a.distance(&b).unwrap_or(f64::INFINITY);
        if !(gap <= JUNCTION_TOL) {
            return Err(PathError::EndpointMismatch(gap));
        }
        let shift = self.params[self.params.len() - 1] - next.params[0];
        let mut samples = self.samples.clone();
        let mut params = self.params.clone();
        samples.extend_from_slice(&next.samples[1..]);
        params.extend(next.params[1..].iter().map(|t| t + shift));
        Path::with_params(samples, params)
    }

    /// Resamples the path into `n` points whose consecutive chords are equal,
    /// keeping both endpoints and their chart tags.
    ///
    /// Chord endpoints are found by walking the polyline and taking its first
    /// exit from the circle around the previous point; the chord length is
    /// bisected until the last exit lands on the end. When the polyline has
    /// no hairpins at the chord scale the result has equal chords and
    /// normalizing it again reproduces it. Orientation-preserving
    /// reparametrizations of the same polyline normalize to the same samples.
    pub fn normalize(&self, n: usize) -> Result<Path, PathError> {
        if n < 2 {
            return Err(PathError::InvalidSampleCount(n));
        }
        let line = Polyline::new(self.segments()?);
        if !(line.total > DEGENERATE_LENGTH) {
            return Err(PathError::DegeneratePath(line.total));
        }
        let chord = line.equal_chord(n - 1);
        let (positions, _) = line.chord_walk(chord, n - 1);
        let mut samples = Vec::with_capacity(n);
        samples.push(self.start());
        for &pos in positions.iter().take(n - 2) {
            samples.push(line.point(pos));
        }
        samples.push(self.end());
        Path::new(samples)
    }

    /// Canonical key shared by all orientation-preserving reparametrizations
    /// of the same polyline.
    pub fn key(&self) -> Result<PathKey, PathError> {
        let normalized = self.normalize(KEY_SAMPLES)?;
        let mut key = String::with_capacity(KEY_SAMPLES * 24);
        for s in normalized.samples() {
            let u = (s.coords[0] / KEY_RESOLUTION).round() as i64;
            let v = (s.coords[1] / KEY_RESOLUTION).round() as i64;
            // normalize negative zero
            let (u, v) = (u + 0, v + 0);
            key.push_str(&format!("{}:{},{};", s.chart.name(), u, v));
        }
        Ok(PathKey(key))
    }

    /// The same polyline traversed with the parametrization `t ↦ f(t)`.
    ///
    /// `f` must be increasing on `[0, 1]` with `f(0) = 0` and `f(1) = 1`; it
    /// maps the new parameter to the fraction of arc length. The original
    /// vertices are kept, so the curve itself is unchanged; `extra` points
    /// are inserted at `f(j / extra)`.
    pub fn reparametrize(&self, f: impl Fn(f64) -> f64, extra: usize) -> Result<Path, PathError> {
        let line = Polyline::new(self.segments()?);
        if !(line.total > DEGENERATE_LENGTH) {
            return Err(PathError::DegeneratePath(line.total));
        }
        // (arc fraction, sample)
        let mut pts: Vec<(f64, ChartPoint, Option<f64>)> = Vec::new();
        pts.push((0.0, self.start(), Some(0.0)));
        for i in 1..self.samples.len() - 1 {
            pts.push((line.cumulative[i] / line.total, self.samples[i], None));
        }
        pts.push((1.0, self.end(), Some(1.0)));
        for j in 1..extra {
            let t = j as f64 / extra as f64;
            let s = f(t).clamp(0.0, 1.0);
            let mut p = line.point(line.locate(s * line.total));
            // tag inserted points like the preceding original sample when possible
            let prev = self.samples[line.locate(s * line.total).0.min(self.samples.len() - 2)];
            if let Some(q) = p.to_chart(prev.chart) {
                p = q;
            }
            pts.push((s, p, Some(t)));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|b, a| (b.0 - a.0).abs() < 1e-15 && b.2.is_some());
        let invert_f = |s: f64| {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) < s {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let mut params: Vec<f64> = pts.iter().map(|(s, _, t)| t.unwrap_or_else(|| invert_f(*s))).collect();
        // keep parameters strictly increasing even where f is nearly flat
        for i in 1..params.len() {
            if params[i] <= params[i - 1] {
                params[i] = params[i - 1] + 1e-15;
            }
        }
        Path::with_params(pts.into_iter().map(|p| p.1).collect(), params)
    }
}

/// Arc-length bookkeeping over walked segments.
struct Polyline {
    segs: Vec<Segment>,
    cumulative: Vec<f64>,
    total: f64,
}

impl Polyline {
    fn new(segs: Vec<Segment>) -> Self {
        let mut cumulative = Vec::with_capacity(segs.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for s in &segs {
            acc += s.length();
            cumulative.push(acc);
        }
        Polyline { segs, cumulative, total: acc }
    }

    /// Segment index and local parameter at arc length `s`.
    fn locate(&self, s: f64) -> (usize, f64) {
        let s = s.clamp(0.0, self.total);
        let idx = match self.cumulative.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(self.segs.len() - 1),
            Err(i) => i.saturating_sub(1).min(self.segs.len() - 1),
        };
        let len = self.segs[idx].length();
        let t = if len > 0.0 { ((s - self.cumulative[idx]) / len).clamp(0.0, 1.0) } else { 0.0 };
        (idx, t)
    }

    fn arc(&self, pos: (usize, f64)) -> f64 {
        self.cumulative[pos.0] + pos.1 * self.segs[pos.0].length()
    }

    fn point(&self, pos: (usize, f64)) -> ChartPoint {
        let seg = &self.segs[pos.0];
        ChartPoint::new(seg.chart, seg.point(pos.1))
    }

    /// Greedy walk taking `steps` chords of length `chord`: each next point is
    /// the first point further along the polyline at chart distance `chord`.
    /// Returns the positions reached and the arc length at the last one; a walk
    /// that runs off the end reports an arc beyond the total.
    fn chord_walk(&self, chord: f64, steps: usize) -> (Vec<(usize, f64)>, f64) {
        let mut out = Vec::with_capacity(steps);
        let mut pos = (0usize, 0.0);
        for done in 0..steps {
            let anchor = self.point(pos);
            let mut found = None;
            for k in pos.0..self.segs.len() {
                let seg = &self.segs[k];
                let Some(p) = anchor.to_chart(seg.chart) else { continue };
                let d = [seg.to[0] - seg.from[0], seg.to[1] - seg.from[1]];
                let a = d[0] * d[0] + d[1] * d[1];
                if a == 0.0 {
                    continue;
                }
                let w = [seg.from[0] - p.coords[0], seg.from[1] - p.coords[1]];
                let b = 2.0 * (d[0] * w[0] + d[1] * w[1]);
                let c = w[0] * w[0] + w[1] * w[1] - chord * chord;
                let disc = (b * b - 4.0 * a * c).max(0.0);
                let t = (-b + disc.sqrt()) / (2.0 * a);
                let t_lo = if k == pos.0 { pos.1 } else { 0.0 };
                // an exit at a vertex may round to just past the segment end
                if t >= t_lo && t <= 1.0 + VERTEX_SLACK {
                    found = Some((k, t.min(1.0)));
                    break;
                }
            }
            match found {
                Some(next) => {
                    out.push(next);
                    pos = next;
                }
                None => {
                    let remaining = (steps - done) as f64;
                    let last = self.segs.len() - 1;
                    out.resize(steps, (last, 1.0));
                    return (out, self.total + remaining * chord);
                }
            }
        }
        let reached = self.arc(pos);
        (out, reached)
    }

    /// Chord length for which `steps` chords end exactly at the end point.
    fn equal_chord(&self, steps: usize) -> f64 {
        let mut lo = 0.0;
        let mut hi = self.total / steps as f64;
        for _ in 0..8 {
            if self.chord_walk(hi, steps).1 >= self.total {
                break;
            }
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.chord_walk(mid, steps).1 < self.total {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Canonical, reparametrization-invariant key of a path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathKey(String);

impl PathKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Error)]
pub enum AssignError {
    #[error("no transporter recorded for this path")]
    UnknownPath,
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
}

/// An assignment of transporters to paths.
pub trait GeneralizedConnection: Sync {
    fn assign(&self, path: &Path) -> Result<GroupElement, AssignError>;
}

/// A finite table of transporters indexed by canonical path keys.
#[derive(Debug, Clone)]
pub struct TabulatedConnection {
    table: HashMap<PathKey, GroupElement>,
}

impl TabulatedConnection {
    pub fn builder() -> TabulatedBuilder {
        TabulatedBuilder::default()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl GeneralizedConnection for TabulatedConnection {
    fn assign(&self, path: &Path) -> Result<GroupElement, AssignError> {
        self.table.get(&path.key()?).copied().ok_or(AssignError::UnknownPath)
    }
}

/// Builds a [`TabulatedConnection`] closed under inverses and pairwise
/// composition of its generators.
#[derive(Debug, Clone, Default)]
pub struct TabulatedBuilder {
    generators: Vec<(Path, GroupElement)>,
    overrides: Vec<(Path, GroupElement)>,
}

impl TabulatedBuilder {
    pub fn generator(mut self, path: Path, value: GroupElement) -> Self {
        self.generators.push((path, value));
        self
    }

    /// Replaces the entry for `path` after closure. Used to build faulty
    /// tables for testing the checker.
    pub fn override_entry(mut self, path: Path, value: GroupElement) -> Self {
        self.overrides.push((path, value));
        self
    }

    pub fn build(self) -> Result<TabulatedConnection, PathError> {
        let mut table = HashMap::new();
        let mut base: Vec<(Path, GroupElement)> = Vec::with_capacity(self.generators.len() * 2);
        for (p, g) in &self.generators {
            base.push((p.clone(), *g));
            base.push((p.reverse(), g.inverse()));
        }
        for (p, g) in &base {
            table.entry(p.key()?).or_insert(*g);
        }
        for (p1, g1) in &base {
            for (p2, g2) in &base {
                if p1.meets(p2, JUNCTION_TOL) {
                    let composite = p1.compose(p2)?;
                    match composite.key() {
                        Ok(k) => {
                            table.entry(k).or_insert(*g2 * *g1);
                        }
                        Err(PathError::DegeneratePath(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        for (p, g) in self.overrides {
            table.insert(p.key()?, g);
        }
        Ok(TabulatedConnection { table })
    }
}

/// The three consistency laws of a generalized connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    Reparametrization,
    Inverse,
    Composition,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawReport {
    pub law: Law,
    pub max_deviation: f64,
    pub checked: usize,
    pub errors: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub tolerance: f64,
    pub laws: Vec<LawReport>,
}

impl ConsistencyReport {
    pub fn all_pass(&self) -> bool {
        self.laws.iter().all(|l| l.pass)
    }

    pub fn law(&self, law: Law) -> &LawReport {
        self.laws.iter().find(|l| l.law == law).expect("all laws reported")
    }
}

/// Orientation-preserving reparametrizations applied by the checker.
fn checker_reparametrizations() -> [fn(f64) -> f64; 3] {
    [
        |t| t * t,
        |t| t * t * t,
        |t| t + 0.3 * (2.0 * PI * t).sin() / (2.0 * PI),
    ]
}

struct LawAccumulator {
    law: Law,
    max_deviation: f64,
    checked: usize,
    errors: Vec<String>,
}

impl LawAccumulator {
    fn new(law: Law) -> Self {
        LawAccumulator { law, max_deviation: 0.0, checked: 0, errors: Vec::new() }
    }

    fn record(&mut self, lhs: Result<GroupElement, String>, rhs: Result<GroupElement, String>, what: String) {
        self.checked += 1;
        match (lhs, rhs) {
            (Ok(a), Ok(b)) => {
                let d = a.distance(&b);
                if d.is_nan() || d > self.max_deviation {
                    self.max_deviation = if d.is_nan() { f64::INFINITY } else { d };
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                self.max_deviation = f64::INFINITY;
                self.errors.push(format!("{what}: {e}"));
            }
        }
    }

    fn finish(self, tol: f64) -> LawReport {
        LawReport {
            law: self.law,
            pass: self.max_deviation <= tol,
            max_deviation: self.max_deviation,
            checked: self.checked,
            errors: self.errors,
        }
    }
}

/// Checks reparametrization invariance, `A(p⁻¹) = A(p)⁻¹`, and
/// `A(p1 then p2) = A(p2)·A(p1)` on the given paths. Composable pairs are the
/// ordered pairs whose junction points coincide.
pub fn consistency_check<C: GeneralizedConnection + ?Sized>(conn: &C, paths: &[Path], tol: f64) -> ConsistencyReport {
    let mut reparam = LawAccumulator::new(Law::Reparametrization);
    let mut inverse = LawAccumulator::new(Law::Inverse);
    let mut composition = LawAccumulator::new(Law::Composition);

    let assign = |p: &Path| conn.assign(p).map_err(|e| e.to_string());
    let assigned: Vec<Result<GroupElement, String>> = paths.iter().map(assign).collect();

    for (i, p) in paths.iter().enumerate() {
        for (k, f) in checker_reparametrizations().iter().enumerate() {
            let rhs = p.reparametrize(f, p.len().max(16)).map_err(|e| e.to_string()).and_then(|q| assign(&q));
            reparam.record(assigned[i].clone(), rhs, format!("path {i}, reparametrization {k}"));
        }
        let inv = assigned[i].clone().map(|g| g.inverse());
        inverse.record(assign(&p.reverse()), inv, format!("path {i}"));
    }

    for (i, p1) in paths.iter().enumerate() {
        for (j, p2) in paths.iter().enumerate() {
            if !p1.meets(p2, JUNCTION_TOL) {
                continue;
            }
            let lhs = p1.compose(p2).map_err(|e| e.to_string()).and_then(|q| assign(&q));
            let rhs = match (&assigned[i], &assigned[j]) {
                (Ok(g1), Ok(g2)) => g2.try_mul(g1).ok_or_else(|| "group mismatch".to_string()),
                (Err(e), _) | (_, Err(e)) => Err(e.clone()),
            };
            composition.record(lhs, rhs, format!("paths {i} then {j}"));
        }
    }

    ConsistencyReport {
        tolerance: tol,
        laws: vec![reparam.finish(tol), inverse.finish(tol), composition.finish(tol)],
    }
}
