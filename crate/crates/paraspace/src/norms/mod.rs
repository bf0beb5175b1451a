//! Norms with witnesses: weighted block sups, pointwise increment norms,
//! and Taylor machinery shared between them.

pub mod besov;
pub mod holder;
pub mod model_norms;
pub mod report;
pub mod taylor;

pub use besov::besov_norm;
pub use holder::holder_norm;
pub use model_norms::{bgamma_norm, dgamma_norm};
pub use report::{NormEntry, NormPart, NormReport, Witness};
pub use taylor::{gauss_legendre_unit, taylor_poly, taylor_remainder, RemainderMethod, TaylorJet};
