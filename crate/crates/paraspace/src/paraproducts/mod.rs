//! Paraproducts, sharp remainders, and structure-condition residuals.

pub mod bony;
pub mod residual;
pub mod structure;

pub use bony::{bony_para, bony_para_logged, ParaproductLog, ParaproductTerm};
pub use residual::{
    decay_threshold, deviation_field, residual_curve, structure_residual, ResidualCurve,
};
pub use structure::{sharp_remainder, structure_para, structure_para_logged};
