//! Geometry of finite families of affine k-planes: projection metrics and
//! nets on the (affine) Grassmannian, slab incidence fields and their
//! `L^p` norms, ball-count spacing audits and partitions, Brascamp-Lieb
//! functionals over subspace lattices, the broad/narrow direction
//! dichotomy, and generators for families whose unions have prescribed
//! box-counting dimension.

pub mod error;
pub mod params;
pub mod subspace;
pub mod spheremax;
pub mod metric;
pub mod net;
pub mod family;
pub mod cantor;
pub mod spacing;
pub mod chart;
pub mod partition;
pub mod grid;
pub mod slab;
pub mod sweep;
pub mod bl;
pub mod broadnarrow;

pub use error::{Error, Result};
pub use family::{PlaneFamily, SpacingCertificate};
pub use params::{compute_p, dyadic_level, is_dyadic, Params};
pub use subspace::{projection_matrix, AffinePlane, MetricBall, Subspace};
