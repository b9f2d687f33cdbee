//! Numerical gauge geometry: the Clifford algebra Cl(0,3) and its spin
//! groups, path groupoids with generalized connections, parallel transport on
//! principal bundles over a flat chart or the two-chart sphere, triviality and
//! structure-group reduction tests, and cylinder functions.

pub mod algebra;
pub mod bundles;
pub mod cylinder;
pub mod generators;
pub mod group;
pub mod paths;
pub mod reduction;
pub mod topology;

pub use algebra::{Cl03Element, Quaternion, Spin4Element, Versor};
pub use bundles::{ConnectionForm, PrincipalBundleModel};
pub use group::{GroupElement, GroupKind};
pub use paths::{Chart, ChartPoint, GeneralizedConnection, Path};
