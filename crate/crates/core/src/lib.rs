//! Hyperbolic surfaces with totally geodesic boundary, built from right-angled
//! hexagons glued along alternate sides, and curvature flows that deform their
//! metrics to prescribed boundary lengths.
//!
//! * [`hexagon`]: cosine law for right-angled hexagons and its derivatives.
//! * [`complex`]: gluing combinatorics, boundary cycles and edge endpoints.
//! * [`conformal`]: vertex scaling, admissibility, curvature and Laplacian.
//! * [`flows`]: fractional Laplacians and the flows `dw/dt = Δˢ(K̄ − K)`.
//! * [`energy`]: Calabi energy, convex potential and a Newton solver.
//! * [`io`]: file formats for surfaces, metrics, factors, targets and traces.
//! * [`cli`]: the `hexflow` command-line front end.

pub mod cli;
pub mod complex;
pub mod conformal;
pub mod energy;
pub mod error;
pub mod flows;
pub mod hexagon;
pub mod io;

pub use complex::{Side, SurfaceComplex};
pub use conformal::{BackgroundMetric, ConformalFactor, CurvatureVector, LaplacianMatrix};
pub use energy::{SolveReport, SolveStatus};
pub use error::{Error, Result};
pub use flows::{FlowSpec, FlowStatus, FlowTrajectory};
