//! Principal bundles over a flat chart or the two-chart sphere, smooth
//! connections given by local Lie-algebra-valued forms, and parallel
//! transport.
//!
//! Lie-algebra values are pure quaternions; U(1) uses the `i` axis. A
//! transporter solves `dT/ds = −A(γ̇)·T` with `T(0) = 1` and maps fiber
//! representatives in the chart of the initial point to representatives in
//! the chart of the final point. On the sphere, representatives in the two
//! charts are related by `g_S = t·g_N` with `t` the transition function.

use std::f64::consts::PI;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Quaternion, Versor};
use crate::group::{GroupElement, GroupKind};
use crate::paths::{invert, AssignError, Chart, ChartPoint, GeneralizedConnection, Path, PathError, Segment, WalkStep, COMFORT_RADIUS};
use crate::topology::{self, TopologyError};

/// Closure tolerance for loops, in chart units.
pub const LOOP_CLOSURE_TOL: f64 = 1e-9;

const MAX_CHART_RADIUS: f64 = 1e8;
const MIN_EQUATOR_SAMPLES: usize = 256;
const MAX_EQUATOR_SAMPLES: usize = 8192;
const SECTION_TARGET: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BundleError {
    #[error("path leaves the atlas: {0}")]
    PathOutsideAtlas(String),
    #[error("transport did not converge: step doubling changed the result by {deviation:e} (tolerance {tol:e})")]
    NonConvergent { deviation: f64, tol: f64 },
    #[error("step count must be positive")]
    InvalidSteps,
    #[error("loop is not closed: endpoint gap {0:e}")]
    NotClosed(f64),
    #[error("bundle has no canonical flat connection without a global section")]
    NotTrivializable,
    #[error("operation not applicable: {0}")]
    NotApplicable(String),
    #[error("unknown associated-bundle action '{0}'")]
    UnknownAction(String),
    #[error("fiber value does not match the action")]
    ActionMismatch,
    #[error("group mismatch")]
    GroupMismatch,
    #[error("connection form '{form}' is not defined on the {chart} chart")]
    FormChartMismatch { form: &'static str, chart: Chart },
    #[error("invalid transition: {0}")]
    InvalidTransition(String),
    #[error("invalid form: {0}")]
    InvalidForm(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

impl From<PathError> for BundleError {
    fn from(e: PathError) -> Self {
        BundleError::PathOutsideAtlas(e.to_string())
    }
}

/// One term `a·sin(k·x + φ)` of a [`SmoothScalar`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub amplitude: f64,
    pub frequency: [f64; 3],
    pub phase: f64,
}

/// A finite sum of plane waves on R³.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SmoothScalar {
    pub waves: Vec<Wave>,
}

impl SmoothScalar {
    pub fn value(&self, x: [f64; 3]) -> f64 {
        self.waves
            .iter()
            .map(|w| w.amplitude * (dot3(w.frequency, x) + w.phase).sin())
            .sum()
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let mut g = [0.0; 3];
        for w in &self.waves {
            let c = w.amplitude * (dot3(w.frequency, x) + w.phase).cos();
            for (gk, fk) in g.iter_mut().zip(w.frequency) {
                *gk += c * fk;
            }
        }
        g
    }

    /// Derivative along `dx`.
    pub fn derivative(&self, x: [f64; 3], dx: [f64; 3]) -> f64 {
        dot3(self.gradient(x), dx)
    }
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// A Lie-algebra-valued 1-form on R³, `Σ_k c_k(x) dx_k`.
///
/// On the sphere it is pulled back along the embedding and read in the north
/// trivialization; south-chart values are conjugated by the transition.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SmoothField {
    /// `coefficients[k][a]` is the `a`-th Lie component of `c_k`.
    pub coefficients: [[SmoothScalar; 3]; 3],
}

impl SmoothField {
    pub fn eval(&self, x: [f64; 3], dx: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (k, row) in self.coefficients.iter().enumerate() {
            if dx[k] == 0.0 {
                continue;
            }
            for (a, c) in row.iter().enumerate() {
                out[a] += c.value(x) * dx[k];
            }
        }
        out
    }
}

/// Lie-algebra coefficients on a rectangular grid of the flat chart, with
/// bilinear interpolation. Values are stored row-major, `index = i + nu·j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridForm {
    pub u_range: [f64; 2],
    pub v_range: [f64; 2],
    pub nu: usize,
    pub nv: usize,
    pub au: Vec<[f64; 3]>,
    pub av: Vec<[f64; 3]>,
}

impl GridForm {
    pub fn validate(&self) -> Result<(), BundleError> {
        let cells = self.nu * self.nv;
        if self.nu < 2 || self.nv < 2 {
            return Err(BundleError::InvalidForm("grid needs at least 2×2 nodes".into()));
        }
        if self.au.len() != cells || self.av.len() != cells {
            return Err(BundleError::InvalidForm(format!(
                "grid of {}×{} nodes needs {cells} values per direction",
                self.nu, self.nv
            )));
        }
        if !(self.u_range[1] > self.u_range[0] && self.v_range[1] > self.v_range[0]) {
            return Err(BundleError::InvalidForm("empty grid range".into()));
        }
        Ok(())
    }

    fn interpolate(&self, c: [f64; 2]) -> Result<([f64; 3], [f64; 3]), BundleError> {
        let fu = (c[0] - self.u_range[0]) / (self.u_range[1] - self.u_range[0]) * (self.nu - 1) as f64;
        let fv = (c[1] - self.v_range[0]) / (self.v_range[1] - self.v_range[0]) * (self.nv - 1) as f64;
        let eps = 1e-9;
        if !(fu >= -eps && fu <= (self.nu - 1) as f64 + eps && fv >= -eps && fv <= (self.nv - 1) as f64 + eps) {
            return Err(BundleError::PathOutsideAtlas(format!("({}, {}) is outside the connection grid", c[0], c[1])));
        }
        let i = (fu.floor().max(0.0) as usize).min(self.nu - 2);
        let j = (fv.floor().max(0.0) as usize).min(self.nv - 2);
        let (s, t) = (fu - i as f64, fv - j as f64);
        let idx = |i: usize, j: usize| i + self.nu * j;
        let mix = |vals: &[[f64; 3]]| {
            let mut out = [0.0; 3];
            for a in 0..3 {
                out[a] = (1.0 - s) * (1.0 - t) * vals[idx(i, j)][a]
                    + s * (1.0 - t) * vals[idx(i + 1, j)][a]
                    + (1.0 - s) * t * vals[idx(i, j + 1)][a]
                    + s * t * vals[idx(i + 1, j + 1)][a];
            }
            out
        };
        Ok((mix(&self.au), mix(&self.av)))
    }
}

/// A gauge function on one chart, a map from chart coordinates to the group.
/// Chart coordinates `(u, v)` are fed to the scalar fields as `(u, v, 0)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GaugeField {
    #[default]
    Identity,
    Constant { value: GroupElement },
    /// `e^{iχ}`.
    Phase { chi: SmoothScalar },
    /// `e^{i f1} e^{j f2} e^{k f3}`.
    Euler { angles: [SmoothScalar; 3] },
}

impl GaugeField {
    pub fn value(&self, c: [f64; 2]) -> Quaternion {
        let x = [c[0], c[1], 0.0];
        match self {
            GaugeField::Identity => Quaternion::ONE,
            GaugeField::Constant { value } => value.to_quaternion(),
            GaugeField::Phase { chi } => axis_exp(Quaternion::I, chi.value(x)),
            GaugeField::Euler { angles } => {
                axis_exp(Quaternion::I, angles[0].value(x))
                    * axis_exp(Quaternion::J, angles[1].value(x))
                    * axis_exp(Quaternion::K, angles[2].value(x))
            }
        }
    }

    /// `h⁻¹ dh` along the chart direction `d`.
    pub fn maurer_cartan(&self, c: [f64; 2], d: [f64; 2]) -> Quaternion {
        let x = [c[0], c[1], 0.0];
        let dx = [d[0], d[1], 0.0];
        match self {
            GaugeField::Identity | GaugeField::Constant { .. } => Quaternion::ZERO,
            GaugeField::Phase { chi } => Quaternion::I.scale(chi.derivative(x, dx)),
            GaugeField::Euler { angles } => {
                let h2 = axis_exp(Quaternion::J, angles[1].value(x));
                let h3 = axis_exp(Quaternion::K, angles[2].value(x));
                let h23 = h2 * h3;
                let t1 = h23.conj() * Quaternion::I.scale(angles[0].derivative(x, dx)) * h23;
                let t2 = h3.conj() * Quaternion::J.scale(angles[1].derivative(x, dx)) * h3;
                let t3 = Quaternion::K.scale(angles[2].derivative(x, dx));
                t1 + t2 + t3
            }
        }
    }
}

fn axis_exp(axis: Quaternion, angle: f64) -> Quaternion {
    Quaternion::scalar(angle.cos()) + axis.scale(angle.sin())
}

/// A gauge transformation, one field per chart. Representatives change as
/// `g ↦ h⁻¹·g`, forms as `A ↦ h⁻¹Ah + h⁻¹dh`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Gauge {
    #[serde(default)]
    pub flat: GaugeField,
    #[serde(default)]
    pub north: GaugeField,
    #[serde(default)]
    pub south: GaugeField,
}

impl Gauge {
    pub fn uniform(field: GaugeField) -> Self {
        Gauge { flat: field.clone(), north: field.clone(), south: field }
    }

    pub fn field(&self, chart: Chart) -> &GaugeField {
        match chart {
            Chart::Flat => &self.flat,
            Chart::North => &self.north,
            Chart::South => &self.south,
        }
    }

    pub fn value_at(&self, p: ChartPoint) -> Quaternion {
        self.field(p.chart).value(p.coords)
    }

    pub fn element_at(&self, kind: GroupKind, p: ChartPoint) -> GroupElement {
        GroupElement::from_quaternion(kind, self.value_at(p))
    }
}

/// Base manifolds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldModel {
    /// One chart covering a closed rectangle of R².
    FlatChart { u_range: [f64; 2], v_range: [f64; 2] },
    /// S² with north and south stereographic charts.
    TwoChartSphere,
}

impl ManifoldModel {
    pub fn flat_default() -> Self {
        ManifoldModel::FlatChart { u_range: [-10.0, 10.0], v_range: [-10.0, 10.0] }
    }
}

/// Transition function `t = g_SN` on the sphere overlap: `g_S = t·g_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Transition {
    /// `e^{inφ}` along `i` (U(1)) or `k` (SU(2)).
    Monopole { charge: i64 },
    /// Values at `φ_j = 2πj/N`, interpolated along shortest arcs.
    Table { samples: Vec<GroupElement> },
    /// `h_S⁻¹·t·h_N`.
    Gauged { base: Box<Transition>, gauge: Gauge },
}

impl Transition {
    pub fn validate(&self, kind: GroupKind) -> Result<(), BundleError> {
        match self {
            Transition::Monopole { .. } => Ok(()),
            Transition::Table { samples } => {
                if samples.len() < 3 {
                    return Err(BundleError::InvalidTransition("a transition table needs at least 3 samples".into()));
                }
                if samples.iter().any(|s| s.kind() != kind) {
                    return Err(BundleError::InvalidTransition(format!("table values must be {kind} elements")));
                }
                Ok(())
            }
            Transition::Gauged { base, .. } => base.validate(kind),
        }
    }

    /// Value at a sphere point in the chart overlap.
    pub fn value(&self, kind: GroupKind, p: ChartPoint) -> Result<Quaternion, BundleError> {
        if !p.chart.is_sphere() {
            return Err(BundleError::NotApplicable("transition functions live on the sphere overlap".into()));
        }
        let phi = p.coords[1].atan2(p.coords[0]);
        Ok(match self {
            Transition::Monopole { charge } => {
                let axis = lie_axis(kind);
                axis_exp(axis, *charge as f64 * phi)
            }
            Transition::Table { samples } => {
                let n = samples.len();
                let x = phi.rem_euclid(2.0 * PI) / (2.0 * PI) * n as f64;
                let j = (x.floor() as usize).min(n - 1);
                let f = x - j as f64;
                let (a, b) = (samples[j], samples[(j + 1) % n]);
                match (a, b) {
                    (GroupElement::U1 { theta: ta }, GroupElement::U1 { theta: tb }) => {
                        let t = ta + f * crate::group::wrap_angle(tb - ta);
                        Quaternion::new(t.cos(), t.sin(), 0.0, 0.0)
                    }
                    (GroupElement::SU2(va), GroupElement::SU2(vb)) => va.slerp(vb, f).quaternion(),
                    _ => return Err(BundleError::GroupMismatch),
                }
            }
            Transition::Gauged { base, gauge } => {
                let pn = p.to_chart(Chart::North).ok_or_else(|| outside(p))?;
                let ps = p.to_chart(Chart::South).ok_or_else(|| outside(p))?;
                let t = base.value(kind, p)?;
                gauge.south.value(ps.coords).conj() * t * gauge.north.value(pn.coords)
            }
        })
    }
}

fn outside(p: ChartPoint) -> BundleError {
    BundleError::PathOutsideAtlas(format!("{} point {:?} is not in the chart overlap", p.chart, p.coords))
}

fn lie_axis(kind: GroupKind) -> Quaternion {
    match kind {
        GroupKind::U1 => Quaternion::I,
        GroupKind::SU2 => Quaternion::K,
    }
}

/// A principal bundle: base, structure group and gluing data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalBundleModel {
    pub base: ManifoldModel,
    pub group: GroupKind,
    pub transition: Option<Transition>,
}

impl PrincipalBundleModel {
    /// Trivial bundle over the default flat rectangle `[−10, 10]²`.
    pub fn flat(group: GroupKind) -> Self {
        PrincipalBundleModel { base: ManifoldModel::flat_default(), group, transition: None }
    }

    pub fn sphere(group: GroupKind, transition: Transition) -> Result<Self, BundleError> {
        transition.validate(group)?;
        Ok(PrincipalBundleModel { base: ManifoldModel::TwoChartSphere, group, transition: Some(transition) })
    }

    pub fn monopole(group: GroupKind, charge: i64) -> Self {
        PrincipalBundleModel {
            base: ManifoldModel::TwoChartSphere,
            group,
            transition: Some(Transition::Monopole { charge }),
        }
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self.base, ManifoldModel::TwoChartSphere)
    }

    /// `g_SN` at an overlap point.
    pub fn transition_value(&self, p: ChartPoint) -> Result<Quaternion, BundleError> {
        match &self.transition {
            Some(t) => t.value(self.group, p),
            None => Err(BundleError::NotApplicable("single-chart bundle has no transition".into())),
        }
    }

    /// Largest deviation of `g_NS·g_SN` from the identity over `samples`
    /// points of the equator, with `g_NS` evaluated from the south chart.
    pub fn cocycle_residual(&self, samples: usize) -> Result<f64, BundleError> {
        let mut worst: f64 = 0.0;
        for j in 0..samples {
            let phi = 2.0 * PI * j as f64 / samples as f64;
            let pn = ChartPoint::on_sphere_in(Chart::North, PI / 2.0, phi);
            let ps = pn.to_chart(Chart::South).ok_or_else(|| outside(pn))?;
            let g_sn = self.transition_value(pn)?;
            let g_ns = self.transition_value(ps)?.conj();
            worst = worst.max((g_ns * g_sn - Quaternion::ONE).norm());
        }
        Ok(worst)
    }

    /// Checks that every sample is a point of this bundle's base.
    pub fn check_path(&self, path: &Path) -> Result<(), BundleError> {
        for (i, s) in path.samples().iter().enumerate() {
            match (&self.base, s.chart) {
                (ManifoldModel::FlatChart { u_range, v_range }, Chart::Flat) => {
                    let [u, v] = s.coords;
                    if !(u >= u_range[0] && u <= u_range[1] && v >= v_range[0] && v <= v_range[1]) {
                        return Err(BundleError::PathOutsideAtlas(format!("sample {i} ({u}, {v}) is outside the flat chart")));
                    }
                }
                (ManifoldModel::TwoChartSphere, Chart::North | Chart::South) => {
                    if !(s.radius() <= MAX_CHART_RADIUS) {
                        return Err(BundleError::PathOutsideAtlas(format!("sample {i} is too close to the {} chart's pole", s.chart)));
                    }
                }
                (_, chart) => {
                    return Err(BundleError::PathOutsideAtlas(format!("sample {i} uses the {chart} chart, which this base does not have")));
                }
            }
        }
        Ok(())
    }
}

/// Position and velocity in R³ of a chart point moving with chart velocity `d`.
pub fn ambient_with_velocity(chart: Chart, c: [f64; 2], d: [f64; 2]) -> ([f64; 3], [f64; 3]) {
    match chart {
        Chart::Flat => ([c[0], c[1], 0.0], [d[0], d[1], 0.0]),
        Chart::North | Chart::South => {
            let r2 = c[0] * c[0] + c[1] * c[1];
            let den = 1.0 + r2;
            let zd = c[0] * d[0] + c[1] * d[1];
            let x = [2.0 * c[0] / den, 2.0 * c[1] / den, (1.0 - r2) / den];
            let dx = [
                2.0 * d[0] / den - 4.0 * c[0] * zd / (den * den),
                2.0 * d[1] / den - 4.0 * c[1] * zd / (den * den),
                -4.0 * zd / (den * den),
            ];
            if chart == Chart::South {
                ([x[0], x[1], -x[2]], [dx[0], dx[1], -dx[2]])
            } else {
                (x, dx)
            }
        }
    }
}

/// Evaluation context of a connection form.
#[derive(Debug, Clone, Copy)]
pub struct FormContext<'a> {
    pub group: GroupKind,
    pub transition: Option<&'a Transition>,
}

impl<'a> FormContext<'a> {
    pub fn of(bundle: &'a PrincipalBundleModel) -> Self {
        FormContext { group: bundle.group, transition: bundle.transition.as_ref() }
    }
}

/// A smooth connection, given by its local forms on each chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConnectionForm {
    Zero,
    /// `A = a_u du + a_v dv` with constant Lie-algebra coefficients; flat chart only.
    Constant { au: [f64; 3], av: [f64; 3] },
    /// The charge-`n` monopole: `A_N = (n/2)(1 − cos θ) dφ`,
    /// `A_S = −(n/2)(1 + cos θ) dφ`, along `i` (U(1)) or `k` (SU(2)).
    Monopole { charge: i64 },
    /// A globally defined adjoint-valued form, see [`SmoothField`].
    Smooth { field: SmoothField },
    /// Bilinearly interpolated coefficients; flat chart only.
    Grid { grid: GridForm },
    Sum { terms: Vec<ConnectionForm> },
    /// `h⁻¹Ah + h⁻¹dh`; `transition` is the gluing data the base form was
    /// written for.
    Gauged { base: Box<ConnectionForm>, gauge: Gauge, transition: Option<Transition> },
}

impl ConnectionForm {
    fn name(&self) -> &'static str {
        match self {
            ConnectionForm::Zero => "zero",
            ConnectionForm::Constant { .. } => "constant",
            ConnectionForm::Monopole { .. } => "monopole",
            ConnectionForm::Smooth { .. } => "smooth",
            ConnectionForm::Grid { .. } => "grid",
            ConnectionForm::Sum { .. } => "sum",
            ConnectionForm::Gauged { .. } => "gauged",
        }
    }

    /// `A(d)` at chart coordinates `c`, as a pure quaternion.
    pub fn eval(&self, ctx: FormContext<'_>, chart: Chart, c: [f64; 2], d: [f64; 2]) -> Result<Quaternion, BundleError> {
        let mismatch = || BundleError::FormChartMismatch { form: self.name(), chart };
        Ok(match self {
            ConnectionForm::Zero => Quaternion::ZERO,
            ConnectionForm::Constant { au, av } => {
                if chart != Chart::Flat {
                    return Err(mismatch());
                }
                Quaternion::pure([
                    au[0] * d[0] + av[0] * d[1],
                    au[1] * d[0] + av[1] * d[1],
                    au[2] * d[0] + av[2] * d[1],
                ])
            }
            ConnectionForm::Monopole { charge } => {
                let n = *charge as f64;
                let area = c[0] * d[1] - c[1] * d[0];
                let r2 = c[0] * c[0] + c[1] * c[1];
                let a = match chart {
                    Chart::North => n * area / (1.0 + r2),
                    Chart::South => -n * area / (1.0 + r2),
                    Chart::Flat => return Err(mismatch()),
                };
                lie_axis(ctx.group).scale(a)
            }
            ConnectionForm::Smooth { field } => {
                let (x, dx) = ambient_with_velocity(chart, c, d);
                let w = Quaternion::pure(field.eval(x, dx));
                if chart == Chart::South && ctx.group == GroupKind::SU2 {
                    let t = ctx
                        .transition
                        .ok_or_else(|| BundleError::NotApplicable("south chart without transition".into()))?
                        .value(ctx.group, ChartPoint::new(chart, c))?;
                    t * w * t.conj()
                } else {
                    w
                }
            }
            ConnectionForm::Grid { grid } => {
                if chart != Chart::Flat {
                    return Err(mismatch());
                }
                let (au, av) = grid.interpolate(c)?;
                Quaternion::pure([
                    au[0] * d[0] + av[0] * d[1],
                    au[1] * d[0] + av[1] * d[1],
                    au[2] * d[0] + av[2] * d[1],
                ])
            }
            ConnectionForm::Sum { terms } => {
                let mut acc = Quaternion::ZERO;
                for t in terms {
                    acc = acc + t.eval(ctx, chart, c, d)?;
                }
                acc
            }
            ConnectionForm::Gauged { base, gauge, transition } => {
                let inner = FormContext { group: ctx.group, transition: transition.as_ref() };
                let a = base.eval(inner, chart, c, d)?;
                let field = gauge.field(chart);
                let h = field.value(c);
                h.conj() * a * h + field.maurer_cartan(c, d)
            }
        })
    }
}

/// Transport settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOptions {
    /// Comfort radius of the sphere charts, see [`Path::walk`].
    pub comfort_radius: f64,
    /// When set, transport is repeated with twice the steps and fails with
    /// [`BundleError::NonConvergent`] if the results differ by more.
    pub refinement_tol: Option<f64>,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions { comfort_radius: COMFORT_RADIUS, refinement_tol: None }
    }
}

fn rk4_segment(conn: &ConnectionForm, ctx: FormContext<'_>, seg: &Segment, k: usize, t: &mut Quaternion) -> Result<(), BundleError> {
    let d = [seg.to[0] - seg.from[0], seg.to[1] - seg.from[1]];
    let h = 1.0 / k as f64;
    let eval = |s: f64| conn.eval(ctx, seg.chart, seg.point(s), d);
    let mut a0 = eval(0.0)?;
    for i in 0..k {
        let s0 = i as f64 * h;
        let am = eval(s0 + 0.5 * h)?;
        let a1 = eval(if i + 1 == k { 1.0 } else { s0 + h })?;
        let y = *t;
        let k1 = -(a0 * y);
        let k2 = -(am * (y + k1.scale(0.5 * h)));
        let k3 = -(am * (y + k2.scale(0.5 * h)));
        let k4 = -(a1 * (y + k3.scale(h)));
        let next = y + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0);
        *t = next.scale(1.0 / next.norm());
        a0 = a1;
    }
    Ok(())
}

fn integrate(conn: &ConnectionForm, bundle: &PrincipalBundleModel, path: &Path, steps: usize, comfort: f64) -> Result<Quaternion, BundleError> {
    bundle.check_path(path)?;
    let walk = path.walk(comfort)?;
    let total: f64 = walk
        .iter()
        .map(|s| match s {
            WalkStep::Segment(seg) => seg.length(),
            WalkStep::Switch(_) => 0.0,
        })
        .sum();
    let ctx = FormContext::of(bundle);
    let mut t = Quaternion::ONE;
    for step in &walk {
        match step {
            WalkStep::Switch(sw) => {
                let g = bundle.transition_value(ChartPoint::new(sw.from, sw.at))?;
                t = if sw.to == Chart::South { g * t } else { g.conj() * t };
            }
            WalkStep::Segment(seg) => {
                let len = seg.length();
                if len == 0.0 {
                    continue;
                }
                let k = ((steps as f64 * len / total).round() as usize).max(1);
                rk4_segment(conn, ctx, seg, k, &mut t)?;
            }
        }
    }
    Ok(t)
}

fn to_element(kind: GroupKind, q: Quaternion) -> Result<GroupElement, BundleError> {
    if kind == GroupKind::U1 && q.y.hypot(q.z) > 1e-9 {
        return Err(BundleError::GroupMismatch);
    }
    Ok(GroupElement::from_quaternion(kind, q))
}

/// Parallel transporter along `path` with the default options.
///
/// The step budget is spread over the walked segments in proportion to their
/// chart length, with at least one classical Runge–Kutta step per segment.
pub fn transport(conn: &ConnectionForm, bundle: &PrincipalBundleModel, path: &Path, steps: usize) -> Result<GroupElement, BundleError> {
    transport_with(conn, bundle, path, steps, &TransportOptions::default())
}

pub fn transport_with(
    conn: &ConnectionForm,
    bundle: &PrincipalBundleModel,
    path: &Path,
    steps: usize,
    opts: &TransportOptions,
) -> Result<GroupElement, BundleError> {
    if steps == 0 {
        return Err(BundleError::InvalidSteps);
    }
    let g = to_element(bundle.group, integrate(conn, bundle, path, steps, opts.comfort_radius)?)?;
    if let Some(tol) = opts.refinement_tol {
        let fine = to_element(bundle.group, integrate(conn, bundle, path, 2 * steps, opts.comfort_radius)?)?;
        let deviation = g.distance(&fine);
        if !(deviation <= tol) {
            return Err(BundleError::NonConvergent { deviation, tol });
        }
    }
    Ok(g)
}

/// Transports every path on the rayon pool; results are in input order and
/// identical to sequential calls.
pub fn transport_many(
    conn: &ConnectionForm,
    bundle: &PrincipalBundleModel,
    paths: &[Path],
    steps: usize,
) -> Vec<Result<GroupElement, BundleError>> {
    paths.par_iter().map(|p| transport(conn, bundle, p, steps)).collect()
}

/// Holonomy of a closed loop, in the trivialization of its basepoint.
pub fn loop_holonomy(conn: &ConnectionForm, bundle: &PrincipalBundleModel, path: &Path, steps: usize) -> Result<GroupElement, BundleError> {
    let gap = path.start().distance(&path.end()).unwrap_or(f64::INFINITY);
    if !(gap <= LOOP_CLOSURE_TOL) {
        return Err(BundleError::NotClosed(gap));
    }
    transport(conn, bundle, path, steps)
}

/// The flat connection induced by the global trivialization of a
/// single-chart bundle.
pub fn canonical_flat(bundle: &PrincipalBundleModel) -> Result<ConnectionForm, BundleError> {
    match bundle.base {
        ManifoldModel::FlatChart { .. } => Ok(ConnectionForm::Zero),
        ManifoldModel::TwoChartSphere => Err(BundleError::NotTrivializable),
    }
}

/// The element `g = T₂⁻¹·T₁` relating the endpoints of the horizontal lifts
/// under `a1` and `a2` that start at the same point: `lift₁ = lift₂·g` when
/// both start at the identity representative.
pub fn compare_connections(
    a1: &ConnectionForm,
    a2: &ConnectionForm,
    bundle: &PrincipalBundleModel,
    path: &Path,
    steps: usize,
) -> Result<GroupElement, BundleError> {
    let t1 = transport(a1, bundle, path, steps)?;
    let t2 = transport(a2, bundle, path, steps)?;
    Ok(t2.inverse() * t1)
}

/// A point of the total space in a local trivialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberPoint {
    pub base: ChartPoint,
    pub rep: GroupElement,
}

impl FiberPoint {
    pub fn right_act(&self, g: GroupElement) -> Result<FiberPoint, BundleError> {
        let rep = self.rep.try_mul(&g).ok_or(BundleError::GroupMismatch)?;
        Ok(FiberPoint { base: self.base, rep })
    }

    /// Horizontal lift of `path` starting at this point.
    pub fn transport(&self, conn: &ConnectionForm, bundle: &PrincipalBundleModel, path: &Path, steps: usize) -> Result<FiberPoint, BundleError> {
        let gap = path.start().distance(&self.base).unwrap_or(f64::INFINITY);
        if !(gap <= LOOP_CLOSURE_TOL && path.start().chart == self.base.chart) {
            return Err(BundleError::PathOutsideAtlas(format!("path does not start at the fiber point (gap {gap:e})")));
        }
        let t = transport(conn, bundle, path, steps)?;
        let rep = t.try_mul(&self.rep).ok_or(BundleError::GroupMismatch)?;
        Ok(FiberPoint { base: path.end(), rep })
    }
}

/// Actions of the structure group on associated-bundle fibers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    /// Left multiplication on `F = G`.
    Fundamental,
    /// SU(2) rotating 3-vectors.
    Adjoint,
}

impl FromStr for Action {
    type Err = BundleError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fundamental" => Ok(Action::Fundamental),
            "adjoint" => Ok(Action::Adjoint),
            other => Err(BundleError::UnknownAction(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FiberValue {
    Group(GroupElement),
    Vector([f64; 3]),
}

/// Transports a fiber value of the associated bundle along `path`.
pub fn associated_transport(
    conn: &ConnectionForm,
    bundle: &PrincipalBundleModel,
    path: &Path,
    f0: &FiberValue,
    action: Action,
    steps: usize,
) -> Result<FiberValue, BundleError> {
    let t = transport(conn, bundle, path, steps)?;
    apply_action(action, t, f0)
}

pub fn apply_action(action: Action, g: GroupElement, f: &FiberValue) -> Result<FiberValue, BundleError> {
    match (action, f, g) {
        (Action::Fundamental, FiberValue::Group(h), _) => g.try_mul(h).map(FiberValue::Group).ok_or(BundleError::ActionMismatch),
        (Action::Adjoint, FiberValue::Vector(v), GroupElement::SU2(q)) => Ok(FiberValue::Vector(q.rotate(*v))),
        _ => Err(BundleError::ActionMismatch),
    }
}

/// The gauge-transformed connection form.
pub fn gauge_transform(conn: &ConnectionForm, bundle: &PrincipalBundleModel, gauge: &Gauge) -> ConnectionForm {
    ConnectionForm::Gauged { base: Box::new(conn.clone()), gauge: gauge.clone(), transition: bundle.transition.clone() }
}

/// The bundle with transition refitted to the new trivializations.
pub fn gauge_bundle(bundle: &PrincipalBundleModel, gauge: &Gauge) -> PrincipalBundleModel {
    PrincipalBundleModel {
        base: bundle.base.clone(),
        group: bundle.group,
        transition: bundle
            .transition
            .as_ref()
            .map(|t| Transition::Gauged { base: Box::new(t.clone()), gauge: gauge.clone() }),
    }
}

/// What a transporter becomes after the gauge change: `h(q)⁻¹·T·h(p)`.
pub fn gauge_covariant(t: GroupElement, gauge: &Gauge, path: &Path) -> GroupElement {
    let kind = t.kind();
    let hp = gauge.element_at(kind, path.start());
    let hq = gauge.element_at(kind, path.end());
    hq.inverse() * t * hp
}

/// Largest violation of `A_S = t A_N t⁻¹ − dt t⁻¹` over sampled overlap
/// points, with `dt` from central differences.
pub fn compatibility_residual(conn: &ConnectionForm, bundle: &PrincipalBundleModel, samples: usize) -> Result<f64, BundleError> {
    if !bundle.is_sphere() {
        return Err(BundleError::NotApplicable("compatibility is checked on the sphere overlap".into()));
    }
    let ctx = FormContext::of(bundle);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for &r in &[0.9, 1.0, 1.1] {
        for j in 0..samples {
            let phi = 2.0 * PI * (j as f64 + 0.37) / samples as f64;
            let zn = [r * phi.cos(), r * phi.sin()];
            let zs = invert(zn).expect("overlap point");
            let t = bundle.transition_value(ChartPoint::new(Chart::North, zn))?;
            for d in [[1.0, 0.0], [0.0, 1.0]] {
                let plus = bundle.transition_value(ChartPoint::new(Chart::North, [zn[0] + eps * d[0], zn[1] + eps * d[1]]))?;
                let minus = bundle.transition_value(ChartPoint::new(Chart::North, [zn[0] - eps * d[0], zn[1] - eps * d[1]]))?;
                let dt = (plus - minus).scale(0.5 / eps);
                let r2 = zn[0] * zn[0] + zn[1] * zn[1];
                let zd = zn[0] * d[0] + zn[1] * d[1];
                let ds = [(d[0] * r2 - 2.0 * zn[0] * zd) / (r2 * r2), (d[1] * r2 - 2.0 * zn[1] * zd) / (r2 * r2)];
                let an = conn.eval(ctx, Chart::North, zn, d)?;
                let as_ = conn.eval(ctx, Chart::South, zs, ds)?;
                let expected = t * an * t.conj() - dt * t.conj();
                worst = worst.max((as_ - expected).norm());
            }
        }
    }
    Ok(worst)
}

fn equator_point(phi: f64) -> ChartPoint {
    ChartPoint::new(Chart::North, [phi.cos(), phi.sin()])
}

fn equator_phases(bundle: &PrincipalBundleModel, n: usize) -> Result<Vec<f64>, BundleError> {
    (0..=n)
        .map(|j| {
            let q = bundle.transition_value(equator_point(2.0 * PI * j as f64 / n as f64))?;
            Ok(q.x.atan2(q.w))
        })
        .collect()
}

/// Winding number of the U(1) transition around the equator.
///
/// Sampling starts at 256 points and doubles, up to 8192, until neighbouring
/// phases are within π/4 of each other.
pub fn equator_winding(bundle: &PrincipalBundleModel) -> Result<i64, BundleError> {
    Ok(equator_winding_sampled(bundle)?.0)
}

fn equator_winding_sampled(bundle: &PrincipalBundleModel) -> Result<(i64, usize, Vec<f64>), BundleError> {
    if !bundle.is_sphere() || bundle.group != GroupKind::U1 {
        return Err(BundleError::NotApplicable("equator winding needs a U(1) bundle over the two-chart sphere".into()));
    }
    let mut n = MIN_EQUATOR_SAMPLES;
    loop {
        let phases = equator_phases(bundle, n)?;
        let fine = phases.windows(2).all(|w| crate::group::wrap_angle(w[1] - w[0]).abs() <= PI / 4.0);
        if fine || n >= MAX_EQUATOR_SAMPLES {
            let w = topology::winding_number(&phases)?;
            return Ok((w, n, phases));
        }
        n *= 2;
    }
}

/// A sampled global section: `s_N` and `s_S` over equator samples, plus a
/// null-homotopy of the south loop that extends `s_S` over the south cap.
/// All vectors are empty for single-chart bases, where the identity section
/// is global.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionWitness {
    pub phi: Vec<f64>,
    pub north: Vec<GroupElement>,
    pub south: Vec<GroupElement>,
    /// Homotopy levels from the south loop to a constant loop.
    pub homotopy: Vec<Vec<GroupElement>>,
    /// Largest violation of `s_S = t·s_N` at the samples and between them.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Triviality {
    Trivial { section: SectionWitness },
    Nontrivial { winding: i64 },
}

/// Decides whether the bundle admits a global section and builds one when
/// it does.
pub fn triviality_test(bundle: &PrincipalBundleModel) -> Result<Triviality, BundleError> {
    if !bundle.is_sphere() {
        return Ok(Triviality::Trivial {
            section: SectionWitness { phi: vec![], north: vec![], south: vec![], homotopy: vec![], residual: 0.0 },
        });
    }
    match bundle.group {
        GroupKind::U1 => u1_section(bundle),
        GroupKind::SU2 => su2_section(bundle),
    }
}

fn u1_section(bundle: &PrincipalBundleModel) -> Result<Triviality, BundleError> {
    let (winding, n, phases) = equator_winding_sampled(bundle)?;
    if winding != 0 {
        return Ok(Triviality::Nontrivial { winding });
    }
    let lifted = topology::unwrap_phases(&phases)?;
    let phi: Vec<f64> = (0..=n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    let north = vec![GroupElement::u1(0.0); n + 1];
    let south: Vec<GroupElement> = lifted.iter().map(|&c| GroupElement::u1(c)).collect();
    let levels = 8;
    let homotopy = (0..=levels)
        .map(|l| {
            let lambda = 1.0 - l as f64 / levels as f64;
            lifted.iter().map(|&c| GroupElement::u1(lambda * c)).collect()
        })
        .collect();
    let mut residual: f64 = 0.0;
    for j in 0..=n {
        let t = GroupElement::from_quaternion(GroupKind::U1, bundle.transition_value(equator_point(phi[j]))?);
        residual = residual.max(south[j].distance(&(t * north[j])));
        if j < n {
            let mid = 0.5 * (phi[j] + phi[j + 1]);
            let t_mid = GroupElement::from_quaternion(GroupKind::U1, bundle.transition_value(equator_point(mid))?);
            let s_mid = GroupElement::u1(0.5 * (lifted[j] + lifted[j + 1]));
            residual = residual.max(s_mid.distance(&t_mid));
        }
    }
    Ok(Triviality::Trivial { section: SectionWitness { phi, north, south, homotopy, residual } })
}

fn su2_section(bundle: &PrincipalBundleModel) -> Result<Triviality, BundleError> {
    let mut n = MIN_EQUATOR_SAMPLES;
    loop {
        let phi: Vec<f64> = (0..=n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        let loop_: Vec<Versor> = phi
            .iter()
            .map(|&p| bundle.transition_value(equator_point(p)).map(Versor::normalize))
            .collect::<Result<_, _>>()?;
        let mut residual: f64 = 0.0;
        for j in 0..n {
            let mid = 0.5 * (phi[j] + phi[j + 1]);
            let t_mid = Versor::normalize(bundle.transition_value(equator_point(mid))?);
            residual = residual.max(topology::loop_midpoint(&loop_, j).rotation_distance(t_mid));
        }
        if residual > SECTION_TARGET && n < MAX_EQUATOR_SAMPLES {
            n *= 2;
            continue;
        }
        let contraction = topology::contract_loop(&loop_)?;
        let north = vec![GroupElement::identity(GroupKind::SU2); n + 1];
        // s_S = t·s_N with s_N = 1, so the samples glue exactly
        let south: Vec<GroupElement> = loop_.iter().map(|&v| GroupElement::su2(v)).collect();
        let homotopy = contraction
            .levels
            .iter()
            .map(|level| level.iter().map(|&v| GroupElement::su2(v)).collect())
            .collect();
        return Ok(Triviality::Trivial { section: SectionWitness { phi, north, south, homotopy, residual } });
    }
}

/// A smooth connection viewed as a generalized connection.
#[derive(Debug, Clone)]
pub struct HolonomyBacked {
    pub form: ConnectionForm,
    pub bundle: PrincipalBundleModel,
    pub steps: usize,
    pub options: TransportOptions,
}

impl HolonomyBacked {
    pub fn new(form: ConnectionForm, bundle: PrincipalBundleModel, steps: usize) -> Self {
        HolonomyBacked { form, bundle, steps, options: TransportOptions::default() }
    }
}

impl GeneralizedConnection for HolonomyBacked {
    fn assign(&self, path: &Path) -> Result<GroupElement, AssignError> {
        Ok(transport_with(&self.form, &self.bundle, path, self.steps, &self.options)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(amplitude: f64, frequency: [f64; 3], phase: f64) -> Wave {
        Wave { amplitude, frequency, phase }
    }

    fn scalar(waves: Vec<Wave>) -> SmoothScalar {
        SmoothScalar { waves }
    }

    fn su2_field() -> SmoothField {
        let mut f = SmoothField::default();
        f.coefficients[0][0] = scalar(vec![wave(0.7, [1.0, 0.5, 0.0], 0.2)]);
        f.coefficients[0][2] = scalar(vec![wave(-0.4, [0.0, 1.3, -0.7], 1.1)]);
        f.coefficients[1][1] = scalar(vec![wave(0.9, [0.8, -0.6, 0.4], -0.3)]);
        f.coefficients[1][2] = scalar(vec![wave(0.3, [1.7, 0.0, 0.2], 0.0)]);
        f.coefficients[2][0] = scalar(vec![wave(0.5, [0.3, 0.3, 1.0], 0.9)]);
        f
    }

    fn euler_gauge() -> Gauge {
        let field = GaugeField::Euler {
            angles: [
                scalar(vec![wave(0.8, [0.9, -0.4, 0.0], 0.1)]),
                scalar(vec![wave(-0.6, [0.3, 1.1, 0.0], 0.7)]),
                scalar(vec![wave(1.2, [-0.5, 0.6, 0.0], -0.2)]),
            ],
        };
        Gauge::uniform(field)
    }

    fn flat_curve() -> Path {
        Path::from_fn(Chart::Flat, 200, |t| [2.0 * t - 1.0, (3.0 * t).sin() * 0.8]).unwrap()
    }

    #[test]
    fn zero_connection_gives_identity() {
        let b = PrincipalBundleModel::flat(GroupKind::SU2);
        let g = transport(&ConnectionForm::Zero, &b, &flat_curve(), 100).unwrap();
        assert_eq!(g, GroupElement::identity(GroupKind::SU2));
    }

    #[test]
    fn constant_u1_form_on_segment() {
        let b = PrincipalBundleModel::flat(GroupKind::U1);
        let c = 0.7;
        let conn = ConnectionForm::Constant { au: [c, 0.0, 0.0], av: [0.0; 3] };
        let path = Path::segment(Chart::Flat, [0.0, 0.0], [2.5, 0.0], 2).unwrap();
        let g = transport(&conn, &b, &path, 1000).unwrap();
        assert!(g.distance(&GroupElement::u1(-c * 2.5)) < 1e-12);
    }

    #[test]
    fn equatorial_monopole_holonomy() {
        let b = PrincipalBundleModel::monopole(GroupKind::U1, 1);
        let conn = ConnectionForm::Monopole { charge: 1 };
        let g = loop_holonomy(&conn, &b, &Path::latitude_loop(PI / 2.0, 16384, 0.0).unwrap(), 10_000).unwrap();
        assert!(g.distance(&GroupElement::u1(PI)) < 1e-6);
    }

    #[test]
    fn open_path_is_not_a_loop() {
        let b = PrincipalBundleModel::flat(GroupKind::U1);
        assert!(matches!(loop_holonomy(&ConnectionForm::Zero, &b, &flat_curve(), 10), Err(BundleError::NotClosed(_))));
    }

    #[test]
    fn monopole_forms_glue() {
        for kind in [GroupKind::U1, GroupKind::SU2] {
            for n in [-2, 0, 1, 3] {
                let b = PrincipalBundleModel::monopole(kind, n);
                let r = compatibility_residual(&ConnectionForm::Monopole { charge: n }, &b, 64).unwrap();
                assert!(r < 1e-8, "{kind} n={n}: {r}");
            }
        }
    }

    #[test]
    fn smooth_plus_monopole_glues_for_su2() {
        let b = PrincipalBundleModel::monopole(GroupKind::SU2, 2);
        let conn = ConnectionForm::Sum { terms: vec![ConnectionForm::Monopole { charge: 2 }, ConnectionForm::Smooth { field: su2_field() }] };
        assert!(compatibility_residual(&conn, &b, 64).unwrap() < 1e-8);
        let gauge = euler_gauge();
        let gauged = gauge_transform(&conn, &b, &gauge);
        let gb = gauge_bundle(&b, &gauge);
        assert!(compatibility_residual(&gauged, &gb, 64).unwrap() < 1e-7);
        assert!(gb.cocycle_residual(64).unwrap() < 1e-12);
    }

    #[test]
    fn chart_switch_is_invisible() {
        let b = PrincipalBundleModel::monopole(GroupKind::SU2, 1);
        let conn = ConnectionForm::Sum { terms: vec![ConnectionForm::Monopole { charge: 1 }, ConnectionForm::Smooth { field: su2_field() }] };
        // meridian arc from colatitude 0.6 to 2.0, entirely inside the north chart
        let m = 2000;
        let path = Path::new(
            (0..=m)
                .map(|i| {
                    let s = i as f64 / m as f64;
                    ChartPoint::on_sphere_in(Chart::North, 0.6 + 1.4 * s, 0.8 + 0.3 * s)
                })
                .collect(),
        )
        .unwrap();
        let switched = transport(&conn, &b, &path, 10_000).unwrap();
        let opts = TransportOptions { comfort_radius: 1e9, refinement_tol: None };
        let north_only = transport_with(&conn, &b, &path, 10_000, &opts).unwrap();
        assert!(path.walk(COMFORT_RADIUS).unwrap().iter().any(|s| matches!(s, WalkStep::Switch(_))));
        assert!(switched.distance(&north_only) < 1e-7, "{}", switched.distance(&north_only));
    }

    #[test]
    fn gauge_covariance_on_flat_bundle() {
        let b = PrincipalBundleModel::flat(GroupKind::SU2);
        let conn = ConnectionForm::Smooth { field: su2_field() };
        let gauge = euler_gauge();
        let path = flat_curve();
        let t = transport(&conn, &b, &path, 10_000).unwrap();
        let t2 = transport(&gauge_transform(&conn, &b, &gauge), &b, &path, 10_000).unwrap();
        assert!(t2.distance(&gauge_covariant(t, &gauge, &path)) < 1e-7);
    }

    #[test]
    fn identity_and_constant_gauges() {
        let b = PrincipalBundleModel::flat(GroupKind::U1);
        let mut f = SmoothField::default();
        f.coefficients[0][0] = scalar(vec![wave(0.5, [1.0, 2.0, 0.0], 0.0)]);
        let conn = ConnectionForm::Smooth { field: f };
        let ctx = FormContext::of(&b);
        for gauge in [Gauge::default(), Gauge::uniform(GaugeField::Constant { value: GroupElement::u1(0.8) })] {
            let g = gauge_transform(&conn, &b, &gauge);
            for c in [[0.1, 0.2], [-1.0, 3.0]] {
                let a = conn.eval(ctx, Chart::Flat, c, [0.3, -0.7]).unwrap();
                let a2 = g.eval(ctx, Chart::Flat, c, [0.3, -0.7]).unwrap();
                assert!(a.max_abs_diff(a2) < 1e-15);
            }
        }
    }

    #[test]
    fn canonical_flat_only_on_flat_base() {
        assert_eq!(canonical_flat(&PrincipalBundleModel::flat(GroupKind::U1)), Ok(ConnectionForm::Zero));
        assert_eq!(canonical_flat(&PrincipalBundleModel::monopole(GroupKind::U1, 1)), Err(BundleError::NotTrivializable));
    }

    #[test]
    fn winding_and_triviality() {
        for n in -5..=5 {
            assert_eq!(equator_winding(&PrincipalBundleModel::monopole(GroupKind::U1, n)).unwrap(), n);
        }
        assert!(matches!(equator_winding(&PrincipalBundleModel::monopole(GroupKind::SU2, 1)), Err(BundleError::NotApplicable(_))));
        assert_eq!(
            triviality_test(&PrincipalBundleModel::monopole(GroupKind::U1, 1)).unwrap(),
            Triviality::Nontrivial { winding: 1 }
        );
        match triviality_test(&PrincipalBundleModel::monopole(GroupKind::U1, 0)).unwrap() {
            Triviality::Trivial { section } => assert!(section.residual <= 1e-9),
            other => panic!("{other:?}"),
        }
        match triviality_test(&PrincipalBundleModel::monopole(GroupKind::SU2, 1)).unwrap() {
            Triviality::Trivial { section } => {
                assert!(section.residual <= 1e-6);
                let last = section.homotopy.last().unwrap();
                assert!(last.windows(2).all(|w| w[0] == w[1]));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn table_transition_winding() {
        let samples = (0..64).map(|j| GroupElement::u1(-3.0 * 2.0 * PI * j as f64 / 64.0)).collect();
        let b = PrincipalBundleModel::sphere(GroupKind::U1, Transition::Table { samples }).unwrap();
        assert_eq!(equator_winding(&b).unwrap(), -3);
        let constant = PrincipalBundleModel::sphere(GroupKind::U1, Transition::Table { samples: vec![GroupElement::u1(0.4); 8] }).unwrap();
        assert_eq!(equator_winding(&constant).unwrap(), 0);
    }

    #[test]
    fn associated_actions() {
        let b = PrincipalBundleModel::flat(GroupKind::SU2);
        let conn = ConnectionForm::Smooth { field: su2_field() };
        let path = flat_curve();
        let t = transport(&conn, &b, &path, 2000).unwrap();
        let id = FiberValue::Group(GroupElement::identity(GroupKind::SU2));
        assert_eq!(associated_transport(&conn, &b, &path, &id, Action::Fundamental, 2000).unwrap(), FiberValue::Group(t));
        let v = [0.3, -1.2, 2.0];
        match associated_transport(&conn, &b, &path, &FiberValue::Vector(v), Action::Adjoint, 2000).unwrap() {
            FiberValue::Vector(w) => assert!((dot3(w, w).sqrt() - dot3(v, v).sqrt()).abs() < 1e-10),
            other => panic!("{other:?}"),
        }
        assert!(matches!("spinor".parse::<Action>(), Err(BundleError::UnknownAction(_))));
    }

    #[test]
    fn fiber_point_lift() {
        let b = PrincipalBundleModel::flat(GroupKind::SU2);
        let conn = ConnectionForm::Smooth { field: su2_field() };
        let path = flat_curve();
        let g = GroupElement::su2(Versor::exp([0.1, 0.2, 0.3]));
        let p = FiberPoint { base: path.start(), rep: GroupElement::identity(GroupKind::SU2) };
        // the lift commutes with the right action
        let a = p.right_act(g).unwrap().transport(&conn, &b, &path, 1000).unwrap();
        let c = p.transport(&conn, &b, &path, 1000).unwrap().right_act(g).unwrap();
        assert!(a.rep.distance(&c.rep) < 1e-12);
    }

    #[test]
    fn refinement_check_flags_coarse_steps() {
        let b = PrincipalBundleModel::flat(GroupKind::U1);
        let conn = ConnectionForm::Constant { au: [40.0, 0.0, 0.0], av: [0.0; 3] };
        let path = Path::segment(Chart::Flat, [0.0, 0.0], [1.0, 0.0], 2).unwrap();
        let opts = TransportOptions { refinement_tol: Some(1e-8), ..Default::default() };
        assert!(matches!(transport_with(&conn, &b, &path, 20, &opts), Err(BundleError::NonConvergent { .. })));
        assert!(transport_with(&conn, &b, &path, 20_000, &opts).is_ok());
    }

    #[test]
    fn parallel_matches_sequential() {
        let b = PrincipalBundleModel::flat(GroupKind::SU2);
        let conn = ConnectionForm::Smooth { field: su2_field() };
        let paths: Vec<Path> = (0..8)
            .map(|k| Path::from_fn(Chart::Flat, 50, move |t| [t * (1.0 + k as f64 * 0.1), (t * k as f64).cos()]).unwrap())
            .collect();
        let par = transport_many(&conn, &b, &paths, 500);
        for (p, r) in paths.iter().zip(par) {
            assert_eq!(r.unwrap(), transport(&conn, &b, p, 500).unwrap());
        }
    }

    #[test]
    fn u1_with_nonabelian_form_is_rejected() {
        let b = PrincipalBundleModel::flat(GroupKind::U1);
        let conn = ConnectionForm::Constant { au: [0.0, 1.0, 0.0], av: [0.0; 3] };
        let path = Path::segment(Chart::Flat, [0.0, 0.0], [1.0, 0.0], 2).unwrap();
        assert_eq!(transport(&conn, &b, &path, 10), Err(BundleError::GroupMismatch));
    }

    #[test]
    fn flat_path_on_sphere_is_rejected() {
        let b = PrincipalBundleModel::monopole(GroupKind::U1, 1);
        assert!(matches!(transport(&ConnectionForm::Zero, &b, &flat_curve(), 10), Err(BundleError::PathOutsideAtlas(_))));
    }
}
