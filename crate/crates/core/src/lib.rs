//! Persistent homology of planar point clouds and differentiable losses over
//! barcode signatures.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! * [`geometry`]: point clouds, frames, pairwise distances, rasterization.
//! * [`filtration`]: the Vietoris–Rips filtration up to triangles.
//! * [`persistence`]: F₂ persistence pairs with simplex attribution, plus the
//!   naive-reduction and union-find reference implementations.
//! * [`signature`]: length/mean signatures, the parametrized, nonparametric
//!   and weighted losses, and their gradients with respect to coordinates.
//! * [`topologize`]: gradient descent on point clouds under those losses.
//! * [`dataset`]: IDX loading, binarization and seeded subsets.
//! * [`batch`]: per-image work fanned out over a thread pool (feature
//!   `parallel`) or run sequentially.

pub mod batch;
pub mod dataset;
pub mod filtration;
pub mod fixtures;
pub mod geometry;
pub mod persistence;
pub mod signature;
pub mod topologize;

pub use dataset::{Dataset, Image};
pub use filtration::{build_rips, Filtration, Simplex};
pub use geometry::{DistanceMatrix, Frame, Point2, PointCloud};
pub use persistence::{compute_persistence, Bar, Barcode};
pub use signature::{LossKind, LossReport, LossSpec, Sign, Signature};
pub use topologize::{topologize, topologize_image, TopologizeConfig, TopologizeTrace};
