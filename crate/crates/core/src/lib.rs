//! Symmetric convex hulls of random points on the unit sphere.
//!
//! The pipeline samples m uniform points on S^{n-1}, builds the simplicial
//! boundary of K = conv{±P_1, .., ±P_m}, integrates volume and second moments
//! exactly over the cone decomposition of K, and derives the isotropy
//! constant L_K. The [`harness`] module runs seeded campaigns over (n, m)
//! grids and checks the resulting statistics against calibrated bounds.

// `!(x > 0.0)` is used on purpose so that NaN fails the guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod harness;
pub mod hull;
pub mod isotropy;
pub mod linalg;
pub mod moments;
pub mod oracle;
pub mod rng;
pub mod special;
pub mod sphere;

pub use error::{Error, Result};
pub use hull::{inradius, symmetric_hull, validate_complex, Facet, FacetComplex};
pub use isotropy::{isotropy_constant, IsotropyReport};
pub use moments::{moment_summary, MomentSummary};
pub use rng::{derive_seed, RngStream};
pub use sphere::{sample_symmetric_cloud, sample_unit_vector, PointCloud, UnitVector};
