//! Quaternions, the Clifford algebra Cl(0,3) realized as H ⊕ H, and the spin
//! groups that live inside it.
//!
//! Elements of Cl(0,3) are stored as a pair of quaternions `a ⊕ b`, i.e. the
//! block-diagonal matrix `diag(a, b)`, so the algebra product is componentwise.
//! The generators are `e1 = (−i) ⊕ i`, `e2 = (−j) ⊕ j`, `e3 = (−k) ⊕ k`.
//!
//! The even subalgebra is spanned by `1 ⊕ 1` and the bivectors
//! `e2e3 = i ⊕ i`, `e3e1 = j ⊕ j`, `e1e2 = k ⊕ k`. Unit combinations of these
//! form Spin(3) ≅ SU(2), embedded diagonally. Note that with the Hamilton
//! product (`ij = k`) the negated bivectors `−e2e3, −e3e1, −e1e2` evaluate to
//! `−i ⊕ −i` and so on; they multiply like conjugate units, so the embedding
//! below is built on the unnegated bivectors.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Norm below which a quaternion is treated as the zero quaternion.
pub const ZERO_EPS: f64 = 1e-300;

/// Relative norm ratio below which an element of Cl(0,3) is treated as
/// numerically non-invertible.
pub const INVERTIBILITY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("quaternion norm {norm:e} is below the zero threshold")]
    ZeroQuaternion { norm: f64 },
    #[error("element is not invertible: summand norms {first:e} and {second:e}")]
    NotInvertible { first: f64, second: f64 },
    #[error("index {index} out of range {lo}..={hi}")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },
}

/// A real quaternion `w + x i + y j + z k`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub const fn scalar(w: f64) -> Self {
        Quaternion::new(w, 0.0, 0.0, 0.0)
    }

    /// Pure imaginary quaternion from a 3-vector.
    pub const fn pure(v: [f64; 3]) -> Self {
        Quaternion::new(0.0, v[0], v[1], v[2])
    }

    pub fn from_array(c: [f64; 4]) -> Self {
        Quaternion::new(c[0], c[1], c[2], c[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn vector(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn dot(self, other: Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_sqr(self) -> f64 {
        self.dot(self)
    }

    /// Euclidean norm, computed without intermediate overflow or underflow.
    pub fn norm(self) -> f64 {
        self.w.hypot(self.x).hypot(self.y.hypot(self.z))
    }

    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    pub fn inverse(self) -> Option<Self> {
        let n = self.norm();
        if n <= ZERO_EPS {
            return None;
        }
        // conj / |q|^2, scaled in two steps to stay finite for tiny norms
        Some(self.scale(1.0 / n).conj().scale(1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Largest absolute component difference.
    pub fn max_abs_diff(self, other: Self) -> f64 {
        (self - other)
            .to_array()
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, b: Quaternion) -> Quaternion {
        let a = self;
        Quaternion::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, b: Quaternion) -> Quaternion {
        Quaternion::new(self.w + b.w, self.x + b.x, self.y + b.y, self.z + b.z)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, b: Quaternion) -> Quaternion {
        Quaternion::new(self.w - b.w, self.x - b.x, self.y - b.y, self.z - b.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i + {}j + {}k", self.w, self.x, self.y, self.z)
    }
}

/// Hamilton product.
pub fn quat_mul(a: Quaternion, b: Quaternion) -> Quaternion {
    a * b
}

/// Splits a nonzero quaternion into its norm and unit part.
pub fn quat_polar(q: Quaternion) -> Result<(f64, Versor), AlgebraError> {
    quat_polar_with_eps(q, ZERO_EPS)
}

pub fn quat_polar_with_eps(q: Quaternion, eps: f64) -> Result<(f64, Versor), AlgebraError> {
    let norm = q.norm();
    if !(norm > eps) || !norm.is_finite() {
        return Err(AlgebraError::ZeroQuaternion { norm });
    }
    Ok((norm, Versor(q.scale(1.0 / norm))))
}

/// A unit quaternion: an element of SU(2) ≅ Spin(3).
///
/// Every constructor and every product renormalizes, so long chains of
/// products stay on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "Quaternion", try_from = "Quaternion")]
pub struct Versor(Quaternion);

impl Versor {
    pub const IDENTITY: Versor = Versor(Quaternion::ONE);

    pub fn new(q: Quaternion) -> Result<Self, AlgebraError> {
        quat_polar(q).map(|(_, v)| v)
    }

    /// Renormalizes `q`, which must be nonzero and finite.
    ///
    /// Panics on a zero or non-finite input; use [`Versor::new`] for
    /// untrusted data.
    pub fn normalize(q: Quaternion) -> Self {
        Versor::new(q).expect("normalizing a zero or non-finite quaternion")
    }

    pub fn quaternion(self) -> Quaternion {
        self.0
    }

    /// `exp` of the pure quaternion `v`: `cos|v| + sin|v| v/|v|`.
    pub fn exp(v: [f64; 3]) -> Self {
        let theta = v[0].hypot(v[1]).hypot(v[2]);
        if theta < 1e-300 {
            return Versor::IDENTITY;
        }
        let s = theta.sin() / theta;
        Versor::normalize(Quaternion::new(theta.cos(), v[0] * s, v[1] * s, v[2] * s))
    }

    /// Principal logarithm, the inverse of [`Versor::exp`] with `|log| ≤ π`.
    pub fn log(self) -> [f64; 3] {
        let q = self.0;
        let vn = q.x.hypot(q.y).hypot(q.z);
        if vn < 1e-300 {
            return [0.0; 3];
        }
        let theta = vn.atan2(q.w);
        let s = theta / vn;
        [q.x * s, q.y * s, q.z * s]
    }

    pub fn inverse(self) -> Self {
        Versor(self.0.conj())
    }

    pub fn neg(self) -> Self {
        Versor(-self.0)
    }

    /// Geodesic angle on S³ between `self` and `other`, in `[0, π]`.
    pub fn sphere_angle(self, other: Versor) -> f64 {
        let d = (self.0 - other.0).norm();
        let s = (self.0 + other.0).norm();
        2.0 * d.atan2(s)
    }

    /// Rotation angle of `self⁻¹ · other`, `2·arccos|⟨self, other⟩|`, in `[0, π]`.
    ///
    /// Sign-insensitive: `q` and `−q` are at distance zero.
    pub fn rotation_distance(self, other: Versor) -> f64 {
        let d = (self.0 - other.0).norm();
        let s = (self.0 + other.0).norm();
        4.0 * d.min(s).atan2(d.max(s))
    }

    /// Adjoint action `q v q⁻¹` on a 3-vector.
    pub fn rotate(self, v: [f64; 3]) -> [f64; 3] {
        (self.0 * Quaternion::pure(v) * self.0.conj()).vector()
    }

    /// Spherical linear interpolation along the shorter great arc from
    /// `self` (t = 0) to `other` (t = 1). The sign of `other` is kept, so
    /// antipodal inputs have no unique arc.
    pub fn slerp(self, other: Versor, t: f64) -> Versor {
        let omega = self.sphere_angle(other);
        if omega < 1e-12 {
            return Versor::normalize(self.0.scale(1.0 - t) + other.0.scale(t));
        }
        let so = omega.sin();
        let a = ((1.0 - t) * omega).sin() / so;
        let b = (t * omega).sin() / so;
        Versor::normalize(self.0.scale(a) + other.0.scale(b))
    }

    /// The fundamental 2×2 unitary representation,
    /// `w + xi + yj + zk ↦ [[w − iz, −y − ix], [y − ix, w + iz]]`.
    pub fn to_su2_matrix(self) -> [[num_complex::Complex64; 2]; 2] {
        use num_complex::Complex64 as C;
        let q = self.0;
        [
            [C::new(q.w, -q.z), C::new(-q.y, -q.x)],
            [C::new(q.y, -q.x), C::new(q.w, q.z)],
        ]
    }

    /// `Re tr / 2` of the fundamental representation.
    pub fn normalized_trace(self) -> f64 {
        let m = self.to_su2_matrix();
        0.5 * (m[0][0] + m[1][1]).re
    }
}

impl Mul for Versor {
    type Output = Versor;
    fn mul(self, rhs: Versor) -> Versor {
        Versor::normalize(self.0 * rhs.0)
    }
}

impl From<Versor> for Quaternion {
    fn from(v: Versor) -> Quaternion {
        v.0
    }
}

impl TryFrom<Quaternion> for Versor {
    type Error = AlgebraError;
    fn try_from(q: Quaternion) -> Result<Self, Self::Error> {
        Versor::new(q)
    }
}

/// An element `a ⊕ b` of Cl(0,3) ≅ H ⊕ H.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Cl03Element {
    pub a: Quaternion,
    pub b: Quaternion,
}

impl Cl03Element {
    pub const ONE: Cl03Element = Cl03Element {
        a: Quaternion::ONE,
        b: Quaternion::ONE,
    };

    pub const fn new(a: Quaternion, b: Quaternion) -> Self {
        Cl03Element { a, b }
    }

    pub fn scale(self, s: f64) -> Self {
        Cl03Element::new(self.a.scale(s), self.b.scale(s))
    }

    /// Euclidean norm over all eight real coefficients.
    pub fn norm(self) -> f64 {
        self.a.norm().hypot(self.b.norm())
    }

    pub fn to_array(self) -> [f64; 8] {
        let (a, b) = (self.a.to_array(), self.b.to_array());
        [a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3]]
    }

    pub fn from_array(c: [f64; 8]) -> Self {
        Cl03Element::new(
            Quaternion::new(c[0], c[1], c[2], c[3]),
            Quaternion::new(c[4], c[5], c[6], c[7]),
        )
    }

    pub fn max_abs_diff(self, other: Self) -> f64 {
        self.a.max_abs_diff(other.a).max(self.b.max_abs_diff(other.b))
    }
}

impl Mul for Cl03Element {
    type Output = Cl03Element;
    fn mul(self, rhs: Cl03Element) -> Cl03Element {
        Cl03Element::new(self.a * rhs.a, self.b * rhs.b)
    }
}

impl Add for Cl03Element {
    type Output = Cl03Element;
    fn add(self, rhs: Cl03Element) -> Cl03Element {
        Cl03Element::new(self.a + rhs.a, self.b + rhs.b)
    }
}

impl Neg for Cl03Element {
    type Output = Cl03Element;
    fn neg(self) -> Cl03Element {
        Cl03Element::new(-self.a, -self.b)
    }
}

const GENERATORS: [Cl03Element; 3] = [
    Cl03Element::new(Quaternion::new(0.0, -1.0, 0.0, 0.0), Quaternion::I),
    Cl03Element::new(Quaternion::new(0.0, 0.0, -1.0, 0.0), Quaternion::J),
    Cl03Element::new(Quaternion::new(0.0, 0.0, 0.0, -1.0), Quaternion::K),
];

/// Generator `e_n`, `n ∈ {1, 2, 3}`.
pub fn cl_generator(n: usize) -> Result<Cl03Element, AlgebraError> {
    if !(1..=3).contains(&n) {
        return Err(AlgebraError::IndexOutOfRange { index: n, lo: 1, hi: 3 });
    }
    Ok(GENERATORS[n - 1])
}

pub fn cl_mul(x: Cl03Element, y: Cl03Element) -> Cl03Element {
    x * y
}

/// Even basis element `e_α`: `e_0 = −e_n²`, then `e_1 = e2e3`, `e_2 = e3e1`,
/// `e_3 = e1e2`, evaluated through the algebra product.
pub fn cl_even_basis(alpha: usize) -> Result<Cl03Element, AlgebraError> {
    let g = |n: usize| GENERATORS[n - 1];
    match alpha {
        0 => Ok(-cl_mul(g(1), g(1))),
        1 => Ok(cl_mul(g(2), g(3))),
        2 => Ok(cl_mul(g(3), g(1))),
        3 => Ok(cl_mul(g(1), g(2))),
        _ => Err(AlgebraError::IndexOutOfRange { index: alpha, lo: 0, hi: 3 }),
    }
}

/// Labels of the Clifford basis in the order used by [`clifford_basis`].
pub const CLIFFORD_BASIS_LABELS: [&str; 8] = ["1", "e1", "e2", "e3", "e12", "e23", "e31", "e123"];

/// The eight basis blades `1, e1, e2, e3, e1e2, e2e3, e3e1, e1e2e3` as H ⊕ H pairs.
pub fn clifford_basis() -> [Cl03Element; 8] {
    let [e1, e2, e3] = GENERATORS;
    [Cl03Element::ONE, e1, e2, e3, e1 * e2, e2 * e3, e3 * e1, e1 * e2 * e3]
}

/// Coordinates of `x` in the Clifford basis.
///
/// The eight basis vectors are mutually orthogonal in R⁸ with squared norm 2,
/// so each coefficient is a dot product divided by two.
pub fn clifford_coefficients(x: Cl03Element) -> [f64; 8] {
    let xs = x.to_array();
    let mut out = [0.0; 8];
    for (slot, blade) in out.iter_mut().zip(clifford_basis()) {
        let bs = blade.to_array();
        *slot = xs.iter().zip(bs.iter()).map(|(p, q)| p * q).sum::<f64>() / 2.0;
    }
    out
}

pub fn from_clifford_coefficients(c: [f64; 8]) -> Cl03Element {
    clifford_basis()
        .iter()
        .zip(c.iter())
        .fold(Cl03Element::new(Quaternion::ZERO, Quaternion::ZERO), |acc, (b, s)| acc + b.scale(*s))
}

/// Product table of the Clifford basis: `table[r][c]` holds the coefficients
/// of `basis[r] · basis[c]`.
pub fn clifford_table() -> [[[f64; 8]; 8]; 8] {
    let basis = clifford_basis();
    let mut table = [[[0.0; 8]; 8]; 8];
    for (r, row) in table.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = clifford_coefficients(cl_mul(basis[r], basis[c]));
        }
    }
    table
}

/// Polar form of an invertible element: `r1·v1 ⊕ r2·v2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IclDecomposition {
    pub r1: f64,
    pub v1: Versor,
    pub r2: f64,
    pub v2: Versor,
}

impl IclDecomposition {
    pub fn recompose(&self) -> Cl03Element {
        Cl03Element::new(self.v1.quaternion().scale(self.r1), self.v2.quaternion().scale(self.r2))
    }

    pub fn spin4(&self) -> Spin4Element {
        Spin4Element::new(self.v1, self.v2)
    }
}

/// Decomposes an element of the invertible group into R₊ × SU(2) × R₊ × SU(2).
pub fn icl_decompose(x: Cl03Element) -> Result<IclDecomposition, AlgebraError> {
    let (na, nb) = (x.a.norm(), x.b.norm());
    let not_invertible = || AlgebraError::NotInvertible { first: na, second: nb };
    if !(na.is_finite() && nb.is_finite()) || na.min(nb) <= ZERO_EPS {
        return Err(not_invertible());
    }
    if na.min(nb) < INVERTIBILITY_EPS * na.max(nb) {
        return Err(not_invertible());
    }
    let (r1, v1) = quat_polar(x.a).map_err(|_| not_invertible())?;
    let (r2, v2) = quat_polar(x.b).map_err(|_| not_invertible())?;
    Ok(IclDecomposition { r1, v1, r2, v2 })
}

/// Diagonal embedding `Σ c_α e_α` of a unit quaternion into the even subalgebra.
pub fn spin3_embed(v: Versor) -> Cl03Element {
    let q = v.quaternion();
    let coeffs = [q.w, q.x, q.y, q.z];
    (0..4).fold(Cl03Element::new(Quaternion::ZERO, Quaternion::ZERO), |acc, alpha| {
        let basis = cl_even_basis(alpha).expect("alpha in range");
        acc + basis.scale(coeffs[alpha])
    })
}

/// An element `(u, v)` of Spin(4) ≅ SU(2) × SU(2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spin4Element {
    pub u: Versor,
    pub v: Versor,
}

impl Spin4Element {
    pub const IDENTITY: Spin4Element = Spin4Element {
        u: Versor::IDENTITY,
        v: Versor::IDENTITY,
    };

    pub fn new(u: Versor, v: Versor) -> Self {
        Spin4Element { u, v }
    }

    pub fn diagonal(v: Versor) -> Self {
        Spin4Element { u: v, v }
    }

    pub fn inverse(self) -> Self {
        Spin4Element::new(self.u.inverse(), self.v.inverse())
    }

    pub fn to_cl03(self) -> Cl03Element {
        Cl03Element::new(self.u.quaternion(), self.v.quaternion())
    }

    /// Largest component difference over both factors.
    pub fn max_abs_diff(self, other: Spin4Element) -> f64 {
        self.u
            .quaternion()
            .max_abs_diff(other.u.quaternion())
            .max(self.v.quaternion().max_abs_diff(other.v.quaternion()))
    }
}

impl Mul for Spin4Element {
    type Output = Spin4Element;
    fn mul(self, rhs: Spin4Element) -> Spin4Element {
        Spin4Element::new(self.u * rhs.u, self.v * rhs.v)
    }
}

/// Quotient map Spin(4) → Spin(4)/Spin(3) ≅ S³, `(u, v) ↦ u·v⁻¹`. Its kernel
/// is the diagonal copy of Spin(3).
pub fn spin4_quotient(s: Spin4Element) -> Versor {
    s.u * s.v.inverse()
}
