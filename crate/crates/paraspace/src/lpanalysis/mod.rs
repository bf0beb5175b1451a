//! FFT-based anisotropic Littlewood-Paley analysis on the periodic grid:
//! grids and sampled fields, the dyadic partition of unity, block and
//! low-pass transforms, spectral derivatives and support checks, field IO.

pub mod fft;
pub mod grid;
pub mod io;
pub mod partition;

pub use grid::{GridField, GridSpec, OffGridEvaluator};
pub use io::{read_field, write_field};
pub use partition::{
    check_spectral_annulus, in_dyadic_box, kernel_moment, lp_block, lp_low, resolved_radius,
    spectral_derivative, DyadicPartition, KernelKind, MomentCheck, PARTITION_EPS, SPECTRAL_MARGIN,
};
