//! Benchmark problems with closed-form optima.

mod cca;
mod gevp;

pub use cca::{cca_oracle, cca_problem, default_weights, generate_cca_instance, CcaInstance, CcaProblem, CCA_SAMPLES};
pub use gevp::{
    generate_gevp_instance, gevp_oracle, gevp_problem, GevpInstance, GevpKind, GevpProblem, METRIC_SAMPLES,
};
