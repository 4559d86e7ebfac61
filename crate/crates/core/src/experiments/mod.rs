//! Study drivers shared by the command-line runner and the test suites.

mod bn;
mod learn;
mod rastrigin;

pub use bn::{
    compare_with_oracle, run_bn, BnRun, BnStudySpec, OracleComparison, StudyNetwork,
};

pub use learn::{
    compare_variants, cross_validate, learning_config, predictive_scores, signaling_dataset,
    variant_config, FoldRecord, VariantRun,
};
pub use rastrigin::{
    rastrigin_oracle, run_rastrigin, DomainComparison, LayerError, RastriginRun, RastriginSpec,
};
