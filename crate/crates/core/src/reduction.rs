//! Structure-group reduction over the two-chart sphere.
//!
//! A bundle is described by its clutching loop on the equator. The invertible
//! Clifford group retracts onto Spin(4) = SU(2)×SU(2) by dropping the radial
//! factors; Spin(4) reduces to the diagonal Spin(3) exactly when the clutching
//! loop of the associated S³ = Spin(4)/Spin(3) bundle bounds a section over
//! the south cap.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{icl_decompose, spin4_quotient, AlgebraError, Cl03Element, Quaternion, Spin4Element, Versor};
use crate::group::wrap_angle;
use crate::topology::{self, TopologyError};

/// Smallest number of samples in a transition loop.
pub const MIN_LOOP_SAMPLES: usize = 256;
/// Closure tolerance of transition loops.
pub const CLOSURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error("sample {index} is not invertible: {source}")]
    NotInvertible { index: usize, source: AlgebraError },
    #[error("loop is not closed: endpoint gap {0:e}")]
    NotClosed(f64),
    #[error("a transition loop needs at least {MIN_LOOP_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample {0} is not finite")]
    NonFinite(usize),
    #[error("contraction failed: {0}")]
    ContractionFailed(String),
    #[error(transparent)]
    Topology(TopologyError),
}

impl From<TopologyError> for ReductionError {
    fn from(e: TopologyError) -> Self {
        match e {
            TopologyError::ContractionFailed(m) => ReductionError::ContractionFailed(m),
            TopologyError::NotClosed(g) => ReductionError::NotClosed(g),
            other => ReductionError::Topology(other),
        }
    }
}

/// Values that can be sampled along a transition loop.
pub trait LoopValue: Copy + Send + Sync {
    /// Distance used for the closure check.
    fn gap(&self, other: &Self) -> f64;
    fn is_finite(&self) -> bool;
}

impl LoopValue for Cl03Element {
    fn gap(&self, other: &Self) -> f64 {
        self.max_abs_diff(*other) / self.norm().max(1.0)
    }
    fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite()
    }
}

impl LoopValue for Spin4Element {
    fn gap(&self, other: &Self) -> f64 {
        self.max_abs_diff(*other)
    }
    fn is_finite(&self) -> bool {
        self.u.quaternion().is_finite() && self.v.quaternion().is_finite()
    }
}

impl LoopValue for Versor {
    fn gap(&self, other: &Self) -> f64 {
        self.sphere_angle(*other)
    }
    fn is_finite(&self) -> bool {
        self.quaternion().is_finite()
    }
}

/// Phases on S¹.
impl LoopValue for f64 {
    fn gap(&self, other: &Self) -> f64 {
        wrap_angle(self - other).abs()
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// Samples of a clutching loop at `φ_j = 2πj/N`, `j = 0..=N`; the last sample
/// closes the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionLoop<T> {
    samples: Vec<T>,
}

pub type IclLoop = TransitionLoop<Cl03Element>;
pub type Spin4Loop = TransitionLoop<Spin4Element>;
pub type FiberS3Loop = TransitionLoop<Versor>;
pub type FiberS1Loop = TransitionLoop<f64>;

impl<T: LoopValue> TransitionLoop<T> {
    pub fn new(samples: Vec<T>) -> Result<Self, ReductionError> {
        if samples.len() < MIN_LOOP_SAMPLES {
            return Err(ReductionError::TooFewSamples(samples.len()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(ReductionError::NonFinite(i));
        }
        let gap = samples[0].gap(&samples[samples.len() - 1]);
        if !(gap <= CLOSURE_TOL) {
            return Err(ReductionError::NotClosed(gap));
        }
        Ok(TransitionLoop { samples })
    }

    /// Samples `f` at `intervals + 1` equally spaced angles.
    pub fn sample(intervals: usize, f: impl Fn(f64) -> T) -> Result<Self, ReductionError> {
        Self::new((0..=intervals).map(|j| f(2.0 * PI * j as f64 / intervals as f64)).collect())
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    /// Number of intervals between samples.
    pub fn intervals(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn angles(&self) -> Vec<f64> {
        let n = self.intervals();
        (0..=n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
    }
}

/// Drops the radial factors of each sample: `r₁v₁ ⊕ r₂v₂ ↦ (v₁, v₂)`.
pub fn polar_retract(lp: &IclLoop) -> Result<Spin4Loop, ReductionError> {
    let samples = lp
        .samples
        .par_iter()
        .enumerate()
        .map(|(index, x)| {
            icl_decompose(*x)
                .map(|d| d.spin4())
                .map_err(|source| ReductionError::NotInvertible { index, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TransitionLoop { samples })
}

/// Spin(4) loop as an iCl loop, for feeding retractions back in.
pub fn spin4_as_icl(lp: &Spin4Loop) -> IclLoop {
    TransitionLoop { samples: lp.samples.iter().map(|s| s.to_cl03()).collect() }
}

/// Clutching loop of the associated S³ bundle, `(u, v) ↦ u·v⁻¹`.
pub fn quotient_fiber_loop(lp: &Spin4Loop) -> FiberS3Loop {
    TransitionLoop { samples: lp.samples.par_iter().map(|s| spin4_quotient(*s)).collect() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FiberLoop {
    S1(FiberS1Loop),
    S3(FiberS3Loop),
}

/// Section data of an associated bundle: values at the equator samples in
/// both charts and a null-homotopy extending the south values over the cap.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "fiber", rename_all = "snake_case")]
pub enum FiberSection {
    S1 {
        north: Vec<f64>,
        south: Vec<f64>,
        /// Continuous lift of the south phases; scaling it to zero contracts
        /// the loop.
        lift: Vec<f64>,
    },
    S3 {
        north: Vec<Versor>,
        south: Vec<Versor>,
        homotopy: Vec<Vec<Versor>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ReductionVerdict {
    Reduced {
        section: FiberSection,
        residual: f64,
        /// The Spin(3) transition left after moving the section to the
        /// identity, when the verdict comes from [`reduce_pipeline`].
        reduced_transition: Option<Vec<Versor>>,
    },
    Obstructed { winding: i64 },
}

impl ReductionVerdict {
    pub fn is_reduced(&self) -> bool {
        matches!(self, ReductionVerdict::Reduced { .. })
    }

    pub fn residual(&self) -> Option<f64> {
        match self {
            ReductionVerdict::Reduced { residual, .. } => Some(*residual),
            ReductionVerdict::Obstructed { .. } => None,
        }
    }
}

/// Decides whether the associated bundle with clutching loop `f` has a global
/// section, taking `s_N ≡ 1` and `s_S = f·s_N`.
pub fn section_glue_test(fiber: &FiberLoop) -> Result<ReductionVerdict, ReductionError> {
    match fiber {
        FiberLoop::S1(lp) => {
            let winding = topology::winding_number(lp.samples())?;
            if winding != 0 {
                return Ok(ReductionVerdict::Obstructed { winding });
            }
            let lift = topology::unwrap_phases(lp.samples())?;
            let north = vec![0.0; lp.samples.len()];
            let south = lp.samples.clone();
            let residual = south
                .iter()
                .zip(&north)
                .zip(lp.samples())
                .map(|((s, n), f)| wrap_angle(s - (f + n)).abs())
                .fold(0.0, f64::max);
            Ok(ReductionVerdict::Reduced { section: FiberSection::S1 { north, south, lift }, residual, reduced_transition: None })
        }
        FiberLoop::S3(lp) => {
            let contraction = topology::contract_loop(lp.samples())?;
            let north = vec![Versor::IDENTITY; lp.samples.len()];
            let south = lp.samples.clone();
            let mut residual = south
                .iter()
                .zip(&north)
                .zip(lp.samples())
                .map(|((s, n), f)| s.sphere_angle(*f * *n))
                .fold(0.0, f64::max);
            // the homotopy must start on the loop and end at a point
            let first = &contraction.levels[0];
            let stride = (first.len() - 1) / (south.len() - 1);
            for (j, s) in south.iter().enumerate() {
                residual = residual.max(first[j * stride].sphere_angle(*s));
            }
            let last = contraction.levels.last().expect("nonempty");
            residual = residual.max(last.iter().map(|x| x.sphere_angle(contraction.center)).fold(0.0, f64::max));
            Ok(ReductionVerdict::Reduced {
                section: FiberSection::S3 { north, south, homotopy: contraction.levels },
                residual,
                reduced_transition: None,
            })
        }
    }
}

/// Retraction, quotient and glue test in sequence. When a section exists,
/// the Spin(4) transition is moved by `(s_S, 1)` on the south chart, which
/// makes it diagonal; its diagonal entry is reported as the reduced
/// transition and the off-diagonal mismatch enters the residual.
pub fn reduce_pipeline(lp: &IclLoop) -> Result<ReductionVerdict, ReductionError> {
    let spin4 = polar_retract(lp)?;
    let fiber = quotient_fiber_loop(&spin4);
    match section_glue_test(&FiberLoop::S3(fiber))? {
        ReductionVerdict::Reduced { section: FiberSection::S3 { north, south, homotopy }, residual, .. } => {
            let mut residual = residual;
            let mut reduced = Vec::with_capacity(south.len());
            for ((s4, s_s), s_n) in spin4.samples().iter().zip(&south).zip(&north) {
                // section glues under the Spin(4) action x ↦ u x v⁻¹
                let acted = s4.u * *s_n * s4.v.inverse();
                residual = residual.max(acted.sphere_angle(*s_s));
                let u_new = s_s.inverse() * s4.u * *s_n;
                let v_new = s4.v;
                residual = residual.max(u_new.sphere_angle(v_new));
                reduced.push(v_new);
            }
            Ok(ReductionVerdict::Reduced {
                section: FiberSection::S3 { north, south, homotopy },
                residual,
                reduced_transition: Some(reduced),
            })
        }
        other => Ok(other),
    }
}

/// Named families of iCl clutching loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LoopGenerator {
    Constant { value: Cl03Element },
    /// `(2 + cos φ)·e^{nφi} ⊕ 1`.
    PowerWinding { n: i64 },
    /// `r(φ)·(q(φ) ⊕ q(φ))` with `q(φ) = e^{φk}` and scalar `r(φ) = 2 + sin φ`.
    ScaledDiagonal,
    RandomSmooth { seed: u64, params: Box<SmoothLoopParams> },
}

/// Fourier data of a random smooth loop in one quaternion summand:
/// `exp(ρ(φ))·exp(ω(φ))` with `ρ` scalar and `ω` pure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothLoopParams {
    /// `(amplitude, harmonic, phase)` terms per summand: index 0 is `ρ`, 1..=3
    /// the components of `ω`.
    pub terms: [[Vec<(f64, u32, f64)>; 4]; 2],
}

impl SmoothLoopParams {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut channel = |amp: f64| -> Vec<(f64, u32, f64)> {
            (1..=3u32)
                .map(|m| (rng.gen_range(-amp..amp) / m as f64, m, rng.gen_range(0.0..2.0 * PI)))
                .collect()
        };
        let mut summand = || [channel(0.4), channel(1.2), channel(1.2), channel(1.2)];
        SmoothLoopParams { terms: [summand(), summand()] }
    }

    fn eval_channel(terms: &[(f64, u32, f64)], phi: f64) -> f64 {
        terms.iter().map(|&(a, m, p)| a * (m as f64 * phi + p).sin()).sum()
    }

    pub fn eval(&self, phi: f64) -> Cl03Element {
        let part = |t: &[Vec<(f64, u32, f64)>; 4]| {
            let r = Self::eval_channel(&t[0], phi).exp();
            let w = [
                Self::eval_channel(&t[1], phi),
                Self::eval_channel(&t[2], phi),
                Self::eval_channel(&t[3], phi),
            ];
            Versor::exp(w).quaternion().scale(r)
        };
        Cl03Element::new(part(&self.terms[0]), part(&self.terms[1]))
    }
}

impl LoopGenerator {
    pub fn random_smooth(seed: u64) -> Self {
        LoopGenerator::RandomSmooth { seed, params: Box::new(SmoothLoopParams::random(seed)) }
    }

    pub fn eval(&self, phi: f64) -> Cl03Element {
        match self {
            LoopGenerator::Constant { value } => *value,
            LoopGenerator::PowerWinding { n } => {
                let a = *n as f64 * phi;
                Cl03Element::new(Quaternion::new(a.cos(), a.sin(), 0.0, 0.0).scale(2.0 + phi.cos()), Quaternion::ONE)
            }
            LoopGenerator::ScaledDiagonal => {
                let q = Quaternion::new(phi.cos(), 0.0, 0.0, phi.sin());
                Cl03Element::new(q, q).scale(2.0 + phi.sin())
            }
            LoopGenerator::RandomSmooth { params, .. } => params.eval(phi),
        }
    }

    pub fn sample(&self, intervals: usize) -> Result<IclLoop, ReductionError> {
        TransitionLoop::sample(intervals, |phi| self.eval(phi))
    }
}

/// Phase loop `e^{inφ}` on S¹.
pub fn s1_power_loop(n: i64, intervals: usize) -> Result<FiberS1Loop, ReductionError> {
    TransitionLoop::sample(intervals, |phi| wrap_angle(n as f64 * phi))
}

/// Runs [`reduce_pipeline`] on `intervals` and on `2·intervals` samples of
/// the generator. The residual also covers the midpoints: the south section
/// at the coarse resolution, interpolated to the midpoints, is compared with the
/// fine-resolution section.
pub fn reduce_with_refinement(generator: &LoopGenerator, intervals: usize) -> Result<ReductionVerdict, ReductionError> {
    let coarse = reduce_pipeline(&generator.sample(intervals)?)?;
    let fine = reduce_pipeline(&generator.sample(2 * intervals)?)?;
    match (coarse, &fine) {
        (
            ReductionVerdict::Reduced { section: FiberSection::S3 { north, south, homotopy }, residual, reduced_transition },
            ReductionVerdict::Reduced { section: FiberSection::S3 { south: fine_south, .. }, residual: fine_residual, .. },
        ) => {
            let mut residual = residual.max(*fine_residual);
            for j in 0..south.len() - 1 {
                let mid = topology::loop_midpoint(&south, j);
                residual = residual.max(mid.rotation_distance(fine_south[2 * j + 1]));
                residual = residual.max(south[j].sphere_angle(fine_south[2 * j]));
            }
            Ok(ReductionVerdict::Reduced { section: FiberSection::S3 { north, south, homotopy }, residual, reduced_transition })
        }
        (coarse, _) => Ok(coarse),
    }
}
