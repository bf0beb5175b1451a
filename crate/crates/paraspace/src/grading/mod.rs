//! Anisotropic grading: scaling vectors, scaled distances, multi-indices,
//! homogeneity sets, and graded model spaces with contraction maps.

pub mod scaling;
pub mod structure;

pub use scaling::{
    index_set_below, index_set_boundary, wrap, wrap_displacement, MultiIndex, ScalingVector,
};
pub use structure::{
    hom, hom_to_f64, in_shifted_lattice, Hom, HomogeneitySet, ModelSpace, Sector,
    StructureElement, SymbolInfo,
};
