//! Structure-group elements: U(1) phases and SU(2) versors.
//!
//! Both groups are handled through their embedding in the unit quaternions:
//! the phase `e^{iθ}` is `cos θ + i sin θ`. Transport code works on
//! quaternions throughout and converts back at the boundary.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::algebra::{Quaternion, Versor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupKind {
    U1,
    SU2,
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::U1 => f.write_str("U1"),
            GroupKind::SU2 => f.write_str("SU2"),
        }
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// A transporter value: a U(1) phase or an SU(2) versor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum GroupElement {
    U1 { theta: f64 },
    SU2(Versor),
}

impl GroupElement {
    pub fn u1(theta: f64) -> Self {
        GroupElement::U1 { theta: wrap_angle(theta) }
    }

    pub fn su2(v: Versor) -> Self {
        GroupElement::SU2(v)
    }

    pub fn identity(kind: GroupKind) -> Self {
        match kind {
            GroupKind::U1 => GroupElement::U1 { theta: 0.0 },
            GroupKind::SU2 => GroupElement::SU2(Versor::IDENTITY),
        }
    }

    pub fn kind(&self) -> GroupKind {
        match self {
            GroupElement::U1 { .. } => GroupKind::U1,
            GroupElement::SU2(_) => GroupKind::SU2,
        }
    }

    /// Unit quaternion image of the element.
    pub fn to_quaternion(&self) -> Quaternion {
        match *self {
            GroupElement::U1 { theta } => Quaternion::new(theta.cos(), theta.sin(), 0.0, 0.0),
            GroupElement::SU2(v) => v.quaternion(),
        }
    }

    /// Reads a unit quaternion back as an element of `kind`. For U(1) only the
    /// `1, i` components are used.
    pub fn from_quaternion(kind: GroupKind, q: Quaternion) -> Self {
        match kind {
            GroupKind::U1 => GroupElement::u1(q.x.atan2(q.w)),
            GroupKind::SU2 => GroupElement::SU2(Versor::normalize(q)),
        }
    }

    pub fn inverse(&self) -> Self {
        match *self {
            GroupElement::U1 { theta } => GroupElement::u1(-theta),
            GroupElement::SU2(v) => GroupElement::SU2(v.inverse()),
        }
    }

    pub fn try_mul(&self, rhs: &GroupElement) -> Option<GroupElement> {
        match (*self, *rhs) {
            (GroupElement::U1 { theta: a }, GroupElement::U1 { theta: b }) => Some(GroupElement::u1(a + b)),
            (GroupElement::SU2(a), GroupElement::SU2(b)) => Some(GroupElement::SU2(a * b)),
            _ => None,
        }
    }

    /// Group distance: `|wrap(θ_g − θ_h)|` for U(1), the rotation angle
    /// `2·arccos|⟨g, h⟩|` for SU(2). Elements of different kinds are
    /// infinitely far apart.
    pub fn distance(&self, other: &GroupElement) -> f64 {
        match (*self, *other) {
            (GroupElement::U1 { theta: a }, GroupElement::U1 { theta: b }) => wrap_angle(a - b).abs(),
            (GroupElement::SU2(a), GroupElement::SU2(b)) => a.rotation_distance(b),
            _ => f64::INFINITY,
        }
    }

    /// Real part of the normalized trace in the fundamental representation:
    /// `cos θ` for U(1), `Re tr / 2` for SU(2).
    pub fn normalized_trace(&self) -> f64 {
        match *self {
            GroupElement::U1 { theta } => theta.cos(),
            GroupElement::SU2(v) => v.normalized_trace(),
        }
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;

    /// Panics when the operands belong to different groups.
    fn mul(self, rhs: GroupElement) -> GroupElement {
        self.try_mul(&rhs)
            .unwrap_or_else(|| panic!("group mismatch: {} * {}", self.kind(), rhs.kind()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(0.5 + 4.0 * PI) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn u1_distance_wraps() {
        let a = GroupElement::u1(PI - 0.1);
        let b = GroupElement::u1(-PI + 0.1);
        assert!((a.distance(&b) - 0.2).abs() < 1e-14);
        assert_eq!(a.distance(&a), 0.0);
        assert_eq!(a.distance(&b), b.distance(&a));
    }

    #[test]
    fn quaternion_embedding_round_trip() {
        let g = GroupElement::u1(1.3);
        let back = GroupElement::from_quaternion(GroupKind::U1, g.to_quaternion());
        assert!(g.distance(&back) < 1e-15);
        let v = Versor::exp([0.2, -0.4, 0.9]);
        let h = GroupElement::su2(v);
        assert!(GroupElement::from_quaternion(GroupKind::SU2, h.to_quaternion()).distance(&h) < 1e-15);
    }

    #[test]
    fn products_and_inverses() {
        let g = GroupElement::u1(2.0);
        assert!((g * g.inverse()).distance(&GroupElement::identity(GroupKind::U1)) < 1e-15);
        let v = GroupElement::su2(Versor::exp([0.2, -0.4, 0.9]));
        assert!((v * v.inverse()).distance(&GroupElement::identity(GroupKind::SU2)) < 1e-15);
        assert!(g.try_mul(&v).is_none());
        assert_eq!(g.distance(&v), f64::INFINITY);
    }
}
