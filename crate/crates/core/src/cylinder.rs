//! Cylinder functions `Ψ(A) = ψ(T(p₁), …, T(pₙ))` for a small expression
//! language `ψ` over path transporters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundles::{gauge_bundle, gauge_transform, transport, BundleError, ConnectionForm, Gauge, PrincipalBundleModel, LOOP_CLOSURE_TOL};
use crate::generators::random_gauge;
use crate::group::GroupElement;
use crate::paths::Path;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CylinderError {
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("slot {index} does not exist (the cylinder has {slots} paths)")]
    SlotOutOfRange { index: usize, slots: usize },
    #[error("{0} node needs at least one operand")]
    EmptyNode(&'static str),
    #[error("slot {0} is an open path; its value depends on the endpoint trivializations")]
    OpenPathInInvarianceTest(usize),
    #[error("a trace mixes loops based at different points")]
    MixedBasepoints,
    #[error(transparent)]
    Bundle(#[from] BundleError),
}

/// Expression nodes. Slots are numbered from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Expr {
    Slot { index: usize },
    /// Group product, left to right.
    Product { factors: Vec<Expr> },
    Inverse { arg: Box<Expr> },
    /// `Re tr / 2` in the fundamental representation (the real part for U(1)).
    ReTrace { arg: Box<Expr> },
    Const { value: f64 },
    Sum { terms: Vec<Expr> },
    ScalarProduct { factors: Vec<Expr> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExprType {
    Group,
    Scalar,
}

impl Expr {
    pub fn slot(index: usize) -> Expr {
        Expr::Slot { index }
    }

    pub fn re_trace(arg: Expr) -> Expr {
        Expr::ReTrace { arg: Box::new(arg) }
    }

    pub fn inverse(arg: Expr) -> Expr {
        Expr::Inverse { arg: Box::new(arg) }
    }

    pub fn type_check(&self, slots: usize) -> Result<ExprType, CylinderError> {
        let expect = |e: &Expr, want: ExprType, what: &str| -> Result<(), CylinderError> {
            let got = e.type_check(slots)?;
            if got == want {
                Ok(())
            } else {
                Err(CylinderError::TypeMismatch(format!("{what} expects {want:?} operands, got {got:?}")))
            }
        };
        match self {
            Expr::Slot { index } => {
                if *index == 0 || *index > slots {
                    return Err(CylinderError::SlotOutOfRange { index: *index, slots });
                }
                Ok(ExprType::Group)
            }
            Expr::Product { factors } => {
                if factors.is_empty() {
                    return Err(CylinderError::EmptyNode("product"));
                }
                factors.iter().try_for_each(|f| expect(f, ExprType::Group, "product"))?;
                Ok(ExprType::Group)
            }
            Expr::Inverse { arg } => {
                expect(arg, ExprType::Group, "inverse")?;
                Ok(ExprType::Group)
            }
            Expr::ReTrace { arg } => {
                expect(arg, ExprType::Group, "re_trace")?;
                Ok(ExprType::Scalar)
            }
            Expr::Const { .. } => Ok(ExprType::Scalar),
            Expr::Sum { terms } => {
                if terms.is_empty() {
                    return Err(CylinderError::EmptyNode("sum"));
                }
                terms.iter().try_for_each(|t| expect(t, ExprType::Scalar, "sum"))?;
                Ok(ExprType::Scalar)
            }
            Expr::ScalarProduct { factors } => {
                if factors.is_empty() {
                    return Err(CylinderError::EmptyNode("scalar_product"));
                }
                factors.iter().try_for_each(|f| expect(f, ExprType::Scalar, "scalar_product"))?;
                Ok(ExprType::Scalar)
            }
        }
    }

    fn slots_into(&self, out: &mut Vec<usize>) {
        match self {
            Expr::Slot { index } => out.push(*index),
            Expr::Product { factors } | Expr::ScalarProduct { factors } => factors.iter().for_each(|f| f.slots_into(out)),
            Expr::Sum { terms } => terms.iter().for_each(|t| t.slots_into(out)),
            Expr::Inverse { arg } | Expr::ReTrace { arg } => arg.slots_into(out),
            Expr::Const { .. } => {}
        }
    }

    /// Slot sets under each trace node.
    fn trace_groups(&self, out: &mut Vec<Vec<usize>>) {
        match self {
            Expr::ReTrace { arg } => {
                let mut slots = Vec::new();
                arg.slots_into(&mut slots);
                out.push(slots);
            }
            Expr::Product { factors } | Expr::ScalarProduct { factors } => factors.iter().for_each(|f| f.trace_groups(out)),
            Expr::Sum { terms } => terms.iter().for_each(|t| t.trace_groups(out)),
            Expr::Inverse { arg } => arg.trace_groups(out),
            Expr::Slot { .. } | Expr::Const { .. } => {}
        }
    }

    fn eval_group(&self, values: &[GroupElement]) -> Result<GroupElement, CylinderError> {
        match self {
            Expr::Slot { index } => Ok(values[index - 1]),
            Expr::Product { factors } => {
                let mut acc = factors[0].eval_group(values)?;
                for f in &factors[1..] {
                    let g = f.eval_group(values)?;
                    acc = acc
                        .try_mul(&g)
                        .ok_or_else(|| CylinderError::TypeMismatch("product of different groups".into()))?;
                }
                Ok(acc)
            }
            Expr::Inverse { arg } => Ok(arg.eval_group(values)?.inverse()),
            _ => Err(CylinderError::TypeMismatch("scalar node in group position".into())),
        }
    }

    fn eval_scalar(&self, values: &[GroupElement]) -> Result<f64, CylinderError> {
        match self {
            Expr::ReTrace { arg } => Ok(arg.eval_group(values)?.normalized_trace()),
            Expr::Const { value } => Ok(*value),
            Expr::Sum { terms } => terms.iter().try_fold(0.0, |acc, t| Ok(acc + t.eval_scalar(values)?)),
            Expr::ScalarProduct { factors } => factors.iter().try_fold(1.0, |acc, f| Ok(acc * f.eval_scalar(values)?)),
            _ => Err(CylinderError::TypeMismatch("group node in scalar position".into())),
        }
    }

    /// Evaluates a scalar-rooted expression on given slot values.
    pub fn evaluate(&self, values: &[GroupElement]) -> Result<f64, CylinderError> {
        match self.type_check(values.len())? {
            ExprType::Scalar => self.eval_scalar(values),
            ExprType::Group => Err(CylinderError::TypeMismatch("the root must be a scalar".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderSpec {
    pub paths: Vec<Path>,
    pub expr: Expr,
}

/// How a cylinder value depends on the local trivializations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Every trace is taken over loops sharing one basepoint; the value does
    /// not depend on the trivialization.
    Intrinsic,
    /// Some slot is an open path or a trace mixes basepoints; the value is
    /// relative to the chart trivializations at the path endpoints.
    Trivialized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CylinderValue {
    pub value: f64,
    pub frame: Frame,
}

fn same_point(a: &Path, b: &Path) -> bool {
    a.start().chart == b.start().chart && a.start().distance(&b.start()).is_some_and(|d| d <= LOOP_CLOSURE_TOL)
}

fn is_loop(p: &Path) -> bool {
    p.is_closed(LOOP_CLOSURE_TOL)
}

/// Checks that the value is trivialization-independent.
fn check_intrinsic(spec: &CylinderSpec) -> Result<(), CylinderError> {
    let mut groups = Vec::new();
    spec.expr.trace_groups(&mut groups);
    for slots in &groups {
        for &s in slots {
            if !is_loop(&spec.paths[s - 1]) {
                return Err(CylinderError::OpenPathInInvarianceTest(s));
            }
        }
        if let Some(&first) = slots.first() {
            if slots.iter().any(|&s| !same_point(&spec.paths[first - 1], &spec.paths[s - 1])) {
                return Err(CylinderError::MixedBasepoints);
            }
        }
    }
    Ok(())
}

/// Transports every slot path (in parallel) and folds the expression.
pub fn evaluate_cylinder(
    spec: &CylinderSpec,
    conn: &ConnectionForm,
    bundle: &PrincipalBundleModel,
    steps: usize,
) -> Result<CylinderValue, CylinderError> {
    if spec.expr.type_check(spec.paths.len())? != ExprType::Scalar {
        return Err(CylinderError::TypeMismatch("the root must be a scalar".into()));
    }
    let values = spec
        .paths
        .par_iter()
        .map(|p| transport(conn, bundle, p, steps))
        .collect::<Result<Vec<_>, _>>()?;
    let value = spec.expr.eval_scalar(&values)?;
    let frame = if check_intrinsic(spec).is_ok() { Frame::Intrinsic } else { Frame::Trivialized };
    Ok(CylinderValue { value, frame })
}

/// `|Ψ(A^h) − Ψ(A)|` for one gauge transformation `h`, with no check that the
/// value is gauge-invariant.
pub fn gauge_deviation(
    spec: &CylinderSpec,
    conn: &ConnectionForm,
    bundle: &PrincipalBundleModel,
    gauge: &Gauge,
    steps: usize,
) -> Result<f64, CylinderError> {
    let before = evaluate_cylinder(spec, conn, bundle, steps)?.value;
    let after = evaluate_cylinder(spec, &gauge_transform(conn, bundle, gauge), &gauge_bundle(bundle, gauge), steps)?.value;
    Ok((after - before).abs())
}

/// Largest change of `Ψ` over `trials` seeded random gauge transformations.
/// Requires every trace to run over loops at a common basepoint.
pub fn gauge_invariance_test(
    spec: &CylinderSpec,
    conn: &ConnectionForm,
    bundle: &PrincipalBundleModel,
    trials: usize,
    seed: u64,
    steps: usize,
) -> Result<f64, CylinderError> {
    spec.expr.type_check(spec.paths.len())?;
    check_intrinsic(spec)?;
    let before = evaluate_cylinder(spec, conn, bundle, steps)?.value;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauges: Vec<Gauge> = (0..trials).map(|_| random_gauge(&mut rng, bundle.group)).collect();
    let deviations = gauges
        .par_iter()
        .map(|g| {
            let after = evaluate_cylinder(spec, &gauge_transform(conn, bundle, g), &gauge_bundle(bundle, g), steps)?.value;
            Ok((after - before).abs())
        })
        .collect::<Result<Vec<f64>, CylinderError>>()?;
    Ok(deviations.into_iter().fold(0.0, f64::max))
}
