//! Loop topology on S¹ and S³: winding numbers by phase unwrapping and
//! explicit null-homotopies of versor loops.

use std::f64::consts::PI;

use thiserror::Error;

use crate::algebra::{Quaternion, Versor};

/// Largest phase increment accepted between consecutive samples.
pub const MAX_PHASE_STEP: f64 = 0.75 * PI;
/// Largest sample count reached by subdivision.
pub const MAX_SUBDIVISION: usize = 8192;
/// Largest number of midpoint rounds in a contraction.
pub const MAX_CONTRACTION_ROUNDS: usize = 64;

const MAX_LOOP_STEP: f64 = PI / 2.0;
const CONVERGED_ANGLE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("phase jumps by {step:.3} rad between samples {index} and {next}", next = .index + 1)]
    PhaseStepTooLarge { index: usize, step: f64 },
    #[error("loop is not closed: endpoint gap {0:e}")]
    NotClosed(f64),
    #[error("loop contraction failed: {0}")]
    ContractionFailed(String),
    #[error("a loop needs at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
}

/// Continuous lift of sampled phases. Each increment is taken in `(−π, π]`
/// and must not exceed [`MAX_PHASE_STEP`] in size.
pub fn unwrap_phases(phases: &[f64]) -> Result<Vec<f64>, TopologyError> {
    let mut out = Vec::with_capacity(phases.len());
    let Some(&first) = phases.first() else { return Ok(out) };
    out.push(first);
    let mut acc = first;
    for (i, w) in phases.windows(2).enumerate() {
        let step = crate::group::wrap_angle(w[1] - w[0]);
        if step.abs() > MAX_PHASE_STEP {
            return Err(TopologyError::PhaseStepTooLarge { index: i, step });
        }
        acc += step;
        out.push(acc);
    }
    Ok(out)
}

/// Winding number of a closed sampled phase loop (last sample repeats the
/// first, up to a multiple of 2π).
pub fn winding_number(phases: &[f64]) -> Result<i64, TopologyError> {
    if phases.len() < 2 {
        return Err(TopologyError::TooFewSamples { min: 2, got: phases.len() });
    }
    let lifted = unwrap_phases(phases)?;
    let total = lifted[lifted.len() - 1] - lifted[0];
    let turns = total / (2.0 * PI);
    let n = turns.round();
    let gap = (turns - n).abs() * 2.0 * PI;
    if gap > 1e-9 {
        return Err(TopologyError::NotClosed(gap));
    }
    Ok(n as i64)
}

/// A null-homotopy of a closed versor loop through geodesic midpoints.
#[derive(Debug, Clone)]
pub struct Contraction {
    /// Point the loop is contracted to.
    pub center: Versor,
    /// Levels of the homotopy, from the (subdivided) loop to the constant
    /// loop at `center`. Each level is closed and has the same sample count.
    pub levels: Vec<Vec<Versor>>,
    /// Largest angle between neighbouring samples over all levels.
    pub max_step: f64,
    /// Smallest angle between the loop and the antipode of the center.
    pub clearance: f64,
}

impl Contraction {
    pub fn loop_samples(&self) -> &[Versor] {
        &self.levels[0]
    }
}

/// Subdivides a closed loop by geodesic interpolation until neighbouring
/// samples are at most `max_angle` apart on S³.
pub fn subdivide_loop(samples: &[Versor], max_angle: f64) -> Result<Vec<Versor>, TopologyError> {
    let mut current = samples.to_vec();
    loop {
        let worst = current.windows(2).map(|w| w[0].sphere_angle(w[1])).fold(0.0, f64::max);
        if worst <= max_angle {
            return Ok(current);
        }
        if current.len() - 1 >= MAX_SUBDIVISION {
            return Err(TopologyError::ContractionFailed(format!(
                "neighbouring samples still {worst:.3} rad apart at {} samples",
                current.len() - 1
            )));
        }
        let mut next = Vec::with_capacity(2 * current.len() - 1);
        for w in current.windows(2) {
            next.push(w[0]);
            next.push(w[0].slerp(w[1], 0.5));
        }
        next.push(current[current.len() - 1]);
        current = next;
    }
}

/// Midpoint between samples `j` and `j + 1` of a closed loop by four-point
/// interpolation in R⁴ followed by normalization.
pub fn loop_midpoint(samples: &[Versor], j: usize) -> Versor {
    let n = samples.len() - 1;
    let at = |k: isize| samples[k.rem_euclid(n as isize) as usize].quaternion();
    let j = j as isize;
    let q = (at(j) + at(j + 1)).scale(9.0 / 16.0) - (at(j - 1) + at(j + 2)).scale(1.0 / 16.0);
    Versor::normalize(q)
}

fn clearance(samples: &[Versor], center: Versor) -> f64 {
    let anti = center.neg();
    samples.iter().map(|s| s.sphere_angle(anti)).fold(f64::INFINITY, f64::min)
}

fn choose_center(samples: &[Versor]) -> (Versor, f64) {
    let mut mean = Quaternion::ZERO;
    for s in &samples[..samples.len() - 1] {
        mean = mean + s.quaternion();
    }
    let mut candidates = Vec::with_capacity(9);
    if mean.norm() > 1e-9 {
        candidates.push(Versor::normalize(mean));
    }
    for q in [Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K] {
        candidates.push(Versor::normalize(q));
        candidates.push(Versor::normalize(-q));
    }
    candidates
        .into_iter()
        .map(|c| (c, clearance(samples, c)))
        .fold((Versor::IDENTITY, f64::NEG_INFINITY), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// Contracts a closed versor loop on S³ to a point.
///
/// The loop is subdivided until neighbouring samples are within π/2, a center
/// is picked whose antipode the loop avoids, and every sample is moved along
/// the geodesic to the center by repeated midpoints.
pub fn contract_loop(samples: &[Versor]) -> Result<Contraction, TopologyError> {
    if samples.len() < 3 {
        return Err(TopologyError::TooFewSamples { min: 3, got: samples.len() });
    }
    let gap = samples[0].sphere_angle(samples[samples.len() - 1]);
    if gap > 1e-9 {
        return Err(TopologyError::NotClosed(gap));
    }
    let fine = subdivide_loop(samples, MAX_LOOP_STEP)?;
    let (center, clear) = choose_center(&fine);
    if !(clear > 1e-3) {
        return Err(TopologyError::ContractionFailed(format!(
            "loop passes within {clear:.1e} rad of every candidate antipode"
        )));
    }
    let mut levels = vec![fine];
    let mut max_step: f64 = 0.0;
    for _ in 0..MAX_CONTRACTION_ROUNDS {
        let last = levels.last().expect("nonempty");
        let step = last.windows(2).map(|w| w[0].sphere_angle(w[1])).fold(0.0, f64::max);
        max_step = max_step.max(step);
        if step > MAX_LOOP_STEP {
            return Err(TopologyError::ContractionFailed(format!("homotopy level tears ({step:.3} rad)")));
        }
        let spread = last.iter().map(|s| s.sphere_angle(center)).fold(0.0, f64::max);
        if spread <= CONVERGED_ANGLE {
            break;
        }
        let next: Vec<Versor> = last.iter().map(|s| s.slerp(center, 0.5)).collect();
        levels.push(next);
    }
    let spread = levels.last().expect("nonempty").iter().map(|s| s.sphere_angle(center)).fold(0.0, f64::max);
    if spread > 1e-9 {
        return Err(TopologyError::ContractionFailed(format!(
            "{MAX_CONTRACTION_ROUNDS} rounds left a spread of {spread:.1e} rad"
        )));
    }
    let n = levels[0].len();
    levels.push(vec![center; n]);
    Ok(Contraction { center, levels, max_step, clearance: clear })
}
