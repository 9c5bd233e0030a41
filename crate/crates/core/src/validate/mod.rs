//! Numerical certification: sampled checks that witnesses built from lenses
//! (or closed forms) reproduce the computed output exactly while moving each
//! input by no more than its claimed bound.

mod cases;
mod certify;
mod oracle;

pub use cases::{case_study_pipelines, CaseStudy};
pub use certify::{
    certify, certify_lens, certify_with, halved, lens_witness, CertifyCounterexample, CertifyError, StabilityReport,
    WitnessFailure, WitnessFn,
};
pub use oracle::{dotprod_program, oracle_dotprod, DotWitness};
