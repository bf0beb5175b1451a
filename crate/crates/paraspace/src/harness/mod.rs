//! The verification harness: run configuration, deterministic field
//! suites, the numbered checks, and the report they produce.

pub mod config;
pub mod fields;
pub mod report;
pub mod suite;

pub use config::{OutputPaths, RunConfig, SamplerBudget, StructureChoice, Tolerances};
pub use fields::{generate_field_suite, FieldSuite, SCALAR_ROUGHNESS};
pub use report::{Assertions, CheckResult, CheckStatus, EnvFingerprint, VerificationReport};
pub use suite::{
    build_context, check_ids, run_all, run_check, run_verification, SuiteContext, WORKERS_ENV,
};
