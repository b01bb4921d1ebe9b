//! Numerical geometry of rotationally symmetric warped cylinders
//! `M = [a, ∞) × Sⁿ` with metric `dr² + φ²(r) g_{Sⁿ}`.
//!
//! The crate builds warp functions for Euclidean, hyperbolic and
//! (anti-)deSitter-Schwarzschild spaces, represents star-shaped
//! axisymmetric hypersurfaces as radial graphs over the polar angle,
//! time-steps the inverse mean curvature flow and a mean-curvature-type
//! flow, tabulates weighted isoperimetric profiles, and packages the
//! resulting Minkowski-type inequality and monotonicity statements as
//! automated checks with residuals.

pub mod error;
pub mod flow;
pub mod fmt;
pub mod numerics;
pub mod profiles;
pub mod space;
pub mod surface;
pub mod verify;

pub use error::Error;
pub use flow::{FlowMode, FlowState, FlowTrace, TraceSample};
pub use profiles::{ProfileColumn, ProfileTable};
pub use space::{AssumptionReport, RicciPair, WarpPoint, WarpedSpace};
pub use surface::{GraphSurface, NormalBump, PointGeometry, VolumeWeight};
pub use verify::{Verdict, VerdictStatus};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
