//! Anisotropic Littlewood-Paley analysis on the periodic grid, graded model
//! spaces with contraction maps, paraproducts against such models, and a
//! verification harness that measures norm equivalences numerically.
//!
//! Everything is dimension-agnostic and driven by a scaling vector
//! s = (s_1, ..., s_d) of positive integers: distances, dyadic frequency
//! boxes, derivative counting, and Taylor index sets all use the scaled
//! weight |k|_s = sum k_i s_i in place of the usual order.

pub mod error;
pub mod grading;
pub mod harness;
pub mod lpanalysis;
pub mod models;
pub mod norms;
pub mod paraproducts;
pub mod sampling;

pub use error::{Error, Result};
