//! Scene documents: the JSON input shared by every subcommand.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use fibra::algebra::Cl03Element;
use fibra::bundles::{GridForm, ManifoldModel, SmoothField, Transition};
use fibra::cylinder::{CylinderSpec, Expr};
use fibra::generators::{random_flat_loop, random_flat_path, random_regular_path, random_smooth_field, random_sphere_path};
use fibra::paths::TabulatedConnection;
use fibra::reduction::{FiberS1Loop, IclLoop, LoopGenerator, TransitionLoop};
use fibra::{ChartPoint, Chart, ConnectionForm, GroupElement, GroupKind, Path, PrincipalBundleModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    pub schema_version: u32,
    #[serde(default)]
    pub manifold: Option<ManifoldSpec>,
    pub bundle: Option<BundleSpec>,
    #[serde(default)]
    pub connections: BTreeMap<String, ConnectionSpec>,
    #[serde(default)]
    pub tables: BTreeMap<String, TableSpec>,
    #[serde(default)]
    pub paths: BTreeMap<String, PathSpec>,
    #[serde(default)]
    pub cylinders: BTreeMap<String, CylinderDoc>,
    #[serde(default)]
    pub loops: BTreeMap<String, LoopSpec>,
    pub tolerance: Option<f64>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManifoldSpec {
    Flat {
        #[serde(default = "default_range")]
        u_range: [f64; 2],
        #[serde(default = "default_range")]
        v_range: [f64; 2],
    },
    Sphere,
}

fn default_range() -> [f64; 2] {
    [-10.0, 10.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleSpec {
    pub group: GroupKind,
    pub charge: Option<i64>,
    /// Transition values at equally spaced azimuths.
    pub transition: Option<Vec<GroupElement>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConnectionSpec {
    Zero,
    Constant { au: [f64; 3], av: [f64; 3] },
    Monopole { charge: i64 },
    Grid { grid: GridForm },
    Smooth { field: SmoothField },
    /// A seeded random smooth form.
    RandomSmooth { seed: u64, amplitude: f64 },
    Sum { terms: Vec<ConnectionSpec> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub path: String,
    pub value: GroupElement,
}

/// A finite tabulated connection: generators are closed under inverses and
/// pairwise composites; overrides replace entries afterwards.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub generators: Vec<TableEntry>,
    #[serde(default)]
    pub overrides: Vec<TableEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    Samples {
        samples: Vec<ChartPoint>,
        params: Option<Vec<f64>>,
    },
    Segment {
        #[serde(default = "flat")]
        chart: Chart,
        from: [f64; 2],
        to: [f64; 2],
        #[serde(default = "two")]
        samples: usize,
    },
    /// Flat-chart circle starting at `center + (radius, 0)`.
    Circle {
        center: [f64; 2],
        radius: f64,
        samples: usize,
        #[serde(default)]
        clockwise: bool,
    },
    Latitude {
        theta: f64,
        segments: usize,
        #[serde(default)]
        phi0: f64,
    },
    Random {
        family: RandomPath,
        seed: u64,
        samples: usize,
    },
    Reverse {
        of: String,
    },
    Compose {
        parts: Vec<String>,
    },
}

fn flat() -> Chart {
    Chart::Flat
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomPath {
    Flat,
    FlatLoop,
    Regular,
    Sphere,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderDoc {
    pub paths: Vec<String>,
    pub expr: Expr,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoopSpec {
    /// `(2 + cos φ)·e^{nφi} ⊕ 1`.
    PowerWinding { n: i64, intervals: Option<usize> },
    ScaledDiagonal { intervals: Option<usize> },
    RandomSmooth { seed: u64, intervals: Option<usize> },
    /// Explicit iCl samples as H ⊕ H components `[a; b]`, first = last.
    Table { samples: Vec<[f64; 8]> },
    /// The circle loop `e^{inφ}`.
    Phase { n: i64, intervals: Option<usize> },
}

pub const DEFAULT_INTERVALS: usize = 512;

/// A loop ready for the reduction commands.
pub enum LoadedLoop {
    Icl { generator: Option<LoopGenerator>, samples: IclLoop },
    Circle(FiberS1Loop),
}

/// A scene with every name resolved and every value validated.
pub struct Scene {
    pub bundle: PrincipalBundleModel,
    pub connections: BTreeMap<String, ConnectionForm>,
    pub tables: BTreeMap<String, TabulatedConnection>,
    pub paths: BTreeMap<String, Path>,
    pub cylinders: BTreeMap<String, CylinderSpec>,
    pub loops: BTreeMap<String, LoopSpec>,
    pub tolerance: Option<f64>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

/// Rejects non-finite numbers anywhere in the document.
fn check_finite(v: &Value, at: &str) -> Result<(), CliError> {
    match v {
        Value::Number(n) if n.as_f64().is_some_and(|x| !x.is_finite()) => Err(schema(format!("non-finite number at {at}"))),
        Value::Array(items) => items.iter().enumerate().try_for_each(|(i, x)| check_finite(x, &format!("{at}[{i}]"))),
        Value::Object(map) => map.iter().try_for_each(|(k, x)| check_finite(x, &format!("{at}.{k}"))),
        _ => Ok(()),
    }
}

pub fn parse(text: &str) -> Result<SceneDocument, CliError> {
    let raw: Value = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    match raw.get("schema_version") {
        None => return Err(schema("missing schema_version")),
        Some(v) if v.as_u64() != Some(SCHEMA_VERSION as u64) => {
            return Err(schema(format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}")))
        }
        Some(_) => {}
    }
    check_finite(&raw, "$")?;
    serde_json::from_value(raw).map_err(|e| schema(e.to_string()))
}

impl SceneDocument {
    pub fn resolve(self) -> Result<Scene, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(format!("unsupported schema_version {}", self.schema_version)));
        }
        let bundle = self.bundle_model()?;
        let mut connections = BTreeMap::new();
        for (name, spec) in &self.connections {
            let form = connection_form(spec, bundle.group).map_err(|e| schema(format!("connection '{name}': {e}")))?;
            connections.insert(name.clone(), form);
        }

        let mut paths = BTreeMap::new();
        let mut pending: Vec<(&String, &PathSpec)> = self.paths.iter().collect();
        // references may point forwards; resolve until no progress
        while !pending.is_empty() {
            let before = pending.len();
            let mut rest = Vec::new();
            for (name, spec) in pending {
                match build_path(spec, &paths) {
                    Ok(Some(p)) => {
                        paths.insert(name.clone(), p);
                    }
                    Ok(None) => rest.push((name, spec)),
                    Err(e) => return Err(CliError::Path { name: name.clone(), message: e }),
                }
            }
            if rest.len() == before {
                let names: Vec<&str> = rest.iter().map(|(n, _)| n.as_str()).collect();
                return Err(CliError::Reference(format!("unresolved or cyclic path references in {names:?}")));
            }
            pending = rest;
        }

        let mut tables = BTreeMap::new();
        for (name, spec) in &self.tables {
            let lookup = |e: &TableEntry| {
                paths.get(&e.path).cloned().ok_or_else(|| CliError::Reference(format!("table '{name}' uses unknown path '{}'", e.path)))
            };
            let mut builder = TabulatedConnection::builder();
            for e in &spec.generators {
                check_group(&e.value, bundle.group, name)?;
                builder = builder.generator(lookup(e)?, e.value);
            }
            for e in &spec.overrides {
                check_group(&e.value, bundle.group, name)?;
                builder = builder.override_entry(lookup(e)?, e.value);
            }
            let table = builder.build().map_err(|e| CliError::Path { name: name.clone(), message: e.to_string() })?;
            tables.insert(name.clone(), table);
        }

        let mut cylinders = BTreeMap::new();
        for (name, doc) in self.cylinders {
            let slots = doc
                .paths
                .iter()
                .map(|p| paths.get(p).cloned().ok_or_else(|| CliError::Reference(format!("cylinder '{name}' uses unknown path '{p}'"))))
                .collect::<Result<Vec<_>, _>>()?;
            let spec = CylinderSpec { paths: slots, expr: doc.expr };
            spec.expr.type_check(spec.paths.len()).map_err(|e| schema(format!("cylinder '{name}': {e}")))?;
            cylinders.insert(name, spec);
        }

        if let Some(t) = self.tolerance {
            if !(t > 0.0) {
                return Err(schema("tolerance must be positive"));
            }
        }
        if self.steps == Some(0) {
            return Err(schema("steps must be positive"));
        }

        Ok(Scene {
            bundle,
            connections,
            tables,
            paths,
            cylinders,
            loops: self.loops,
            tolerance: self.tolerance,
            steps: self.steps,
            seed: self.seed,
        })
    }

    fn bundle_model(&self) -> Result<PrincipalBundleModel, CliError> {
        let spec = self.bundle.as_ref().ok_or_else(|| schema("missing bundle"))?;
        let manifold = self.manifold.as_ref().unwrap_or(&ManifoldSpec::Sphere);
        match manifold {
            ManifoldSpec::Flat { u_range, v_range } => {
                if spec.charge.is_some() || spec.transition.is_some() {
                    return Err(schema("a flat-chart bundle takes no charge or transition"));
                }
                if !(u_range[0] < u_range[1] && v_range[0] < v_range[1]) {
                    return Err(schema("empty chart range"));
                }
                Ok(PrincipalBundleModel {
                    base: ManifoldModel::FlatChart { u_range: *u_range, v_range: *v_range },
                    group: spec.group,
                    transition: None,
                })
            }
            ManifoldSpec::Sphere => {
                let transition = match (spec.charge, &spec.transition) {
                    (Some(n), None) => Transition::Monopole { charge: n },
                    (None, Some(samples)) => Transition::Table { samples: samples.clone() },
                    (None, None) => Transition::Monopole { charge: 0 },
                    (Some(_), Some(_)) => return Err(schema("give either a charge or a transition table, not both")),
                };
                PrincipalBundleModel::sphere(spec.group, transition).map_err(|e| schema(e.to_string()))
            }
        }
    }
}

fn check_group(g: &GroupElement, kind: GroupKind, table: &str) -> Result<(), CliError> {
    if g.kind() != kind {
        return Err(schema(format!("table '{table}' has a {} value in a {kind} bundle", g.kind())));
    }
    Ok(())
}

fn connection_form(spec: &ConnectionSpec, group: GroupKind) -> Result<ConnectionForm, String> {
    Ok(match spec {
        ConnectionSpec::Zero => ConnectionForm::Zero,
        ConnectionSpec::Constant { au, av } => ConnectionForm::Constant { au: *au, av: *av },
        ConnectionSpec::Monopole { charge } => ConnectionForm::Monopole { charge: *charge },
        ConnectionSpec::Grid { grid } => {
            grid.validate().map_err(|e| e.to_string())?;
            ConnectionForm::Grid { grid: grid.clone() }
        }
        ConnectionSpec::Smooth { field } => ConnectionForm::Smooth { field: field.clone() },
        ConnectionSpec::RandomSmooth { seed, amplitude } => {
            if !(*amplitude > 0.0) {
                return Err("amplitude must be positive".into());
            }
            let field = random_smooth_field(&mut ChaCha8Rng::seed_from_u64(*seed), group, *amplitude);
            ConnectionForm::Smooth { field }
        }
        ConnectionSpec::Sum { terms } => {
            ConnectionForm::Sum { terms: terms.iter().map(|t| connection_form(t, group)).collect::<Result<_, _>>()? }
        }
    })
}

/// `Ok(None)` when the path refers to another not built yet.
fn build_path(spec: &PathSpec, built: &BTreeMap<String, Path>) -> Result<Option<Path>, String> {
    let path = match spec {
        PathSpec::Samples { samples, params } => match params {
            Some(t) => Path::with_params(samples.clone(), t.clone()),
            None => Path::new(samples.clone()),
        },
        PathSpec::Segment { chart, from, to, samples } => Path::segment(*chart, *from, *to, *samples),
        PathSpec::Circle { center, radius, samples, clockwise } => {
            if !(*radius > 0.0) || *samples < 4 {
                return Err("a circle needs a positive radius and at least 4 samples".into());
            }
            let sense = if *clockwise { -1.0 } else { 1.0 };
            let n = *samples - 1;
            let mut pts: Vec<ChartPoint> = (0..n)
                .map(|j| {
                    let a = sense * 2.0 * PI * j as f64 / n as f64;
                    ChartPoint::flat(center[0] + radius * a.cos(), center[1] + radius * a.sin())
                })
                .collect();
            pts.push(pts[0]);
            Path::new(pts)
        }
        PathSpec::Latitude { theta, segments, phi0 } => {
            if !(*theta > 0.0 && *theta < PI) {
                return Err("colatitude must lie strictly between the poles".into());
            }
            Path::latitude_loop(*theta, *segments, *phi0)
        }
        PathSpec::Random { family, seed, samples } => {
            if *samples < 4 {
                return Err("random paths need at least 4 samples".into());
            }
            let rng = &mut ChaCha8Rng::seed_from_u64(*seed);
            Ok(match family {
                RandomPath::Flat => random_flat_path(rng, *samples),
                RandomPath::FlatLoop => random_flat_loop(rng, *samples),
                RandomPath::Regular => random_regular_path(rng, *samples),
                RandomPath::Sphere => random_sphere_path(rng, *samples),
            })
        }
        PathSpec::Reverse { of } => match built.get(of) {
            Some(p) => Ok(p.reverse()),
            None => return Ok(None),
        },
        PathSpec::Compose { parts } => {
            if parts.is_empty() {
                return Err("compose needs at least one part".into());
            }
            let mut acc: Option<Path> = None;
            for name in parts {
                let Some(p) = built.get(name) else { return Ok(None) };
                acc = Some(match acc {
                    None => p.clone(),
                    Some(a) => a.compose(p).map_err(|e| e.to_string())?,
                });
            }
            Ok(acc.expect("nonempty"))
        }
    };
    path.map(Some).map_err(|e| e.to_string())
}

impl LoopSpec {
    pub fn load(&self) -> Result<LoadedLoop, CliError> {
        let intervals = |n: &Option<usize>| n.unwrap_or(DEFAULT_INTERVALS);
        let icl = |generator: LoopGenerator, n: usize| -> Result<LoadedLoop, CliError> {
            let samples = generator.sample(n).map_err(|e| schema(e.to_string()))?;
            Ok(LoadedLoop::Icl { generator: Some(generator), samples })
        };
        match self {
            LoopSpec::PowerWinding { n, intervals: k } => icl(LoopGenerator::PowerWinding { n: *n }, intervals(k)),
            LoopSpec::ScaledDiagonal { intervals: k } => icl(LoopGenerator::ScaledDiagonal, intervals(k)),
            LoopSpec::RandomSmooth { seed, intervals: k } => icl(LoopGenerator::random_smooth(*seed), intervals(k)),
            LoopSpec::Table { samples } => {
                let samples = samples.iter().map(|c| Cl03Element::from_array(*c)).collect();
                let samples = TransitionLoop::new(samples).map_err(|e| schema(e.to_string()))?;
                Ok(LoadedLoop::Icl { generator: None, samples })
            }
            LoopSpec::Phase { n, intervals: k } => {
                let lp = fibra::reduction::s1_power_loop(*n, intervals(k)).map_err(|e| schema(e.to_string()))?;
                Ok(LoadedLoop::Circle(lp))
            }
        }
    }
}
