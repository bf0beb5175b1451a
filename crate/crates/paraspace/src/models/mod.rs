//! Concrete models: symbol spaces with transport realized on grids, the
//! polynomial and heat-paracontrolled families, seeded synthetic fields,
//! health checks, and disk serialization.

pub mod check;
pub mod instance;
pub mod io;
pub mod kernel;
pub mod modelled;
pub mod pam;
pub mod poly;
pub mod synthetic;

pub use check::{check_model, ModelCheckReport};
pub use instance::{GammaEvaluator, ModelInstance, SymbolTag};
pub use io::{load_model, save_model};
pub use kernel::{KernelEntry, KernelFactor, KernelTerm, SeparableKernel};
pub use modelled::ModelledField;
pub use pam::{pam_model, pam_modelled};
pub use poly::{poly_lift, poly_model};
pub use synthetic::{make_synthetic_field, make_synthetic_jet, synthetic_poly_lift};
