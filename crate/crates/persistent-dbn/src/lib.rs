//! Exact smoothing and approximate filtering for dynamic Bayesian networks
//! with persistent variables.
//!
//! A *persistent* binary variable never switches off once it turns on. Over
//! an `M`-slice unrolling, such a variable is fully described by the slice at
//! which it turns on — its changepoint — so exact posterior inference can run
//! over `M + 1`-valued changepoint variables instead of `M` coupled binary
//! ones. On chain-, tree- and polytree-shaped prototypes this crate's
//! [`inference::smooth`] computes exact smoothed posteriors with message
//! recurrences that cost O(M) per edge, instead of the exponential cost of
//! unrolled joint inference.
//!
//! The crate also ships the machinery needed to check and benchmark that
//! claim: brute-force enumeration oracles and a variable-elimination baseline
//! over the unrolled network ([`oracle`]), approximate online filters — a
//! fully factored projection filter and a sliding-window smoother
//! ([`filtering`]) — a random-model generator and forward sampler
//! ([`synth`]), and a benchmark harness with CSV output ([`bench`]).

pub mod bench;
pub mod changepoint;
mod cost;
pub mod error;
pub mod evidence;
pub mod filtering;
pub mod inference;
pub mod message;
pub mod model;
pub mod oracle;
pub mod synth;

pub use bench::{emit_plot_data, run_benchmark, Algorithm, ExperimentSpec, PlotBundle, CSV_HEADER};
pub use changepoint::ChangepointModel;
pub use cost::Cost;
pub use error::{
    BenchError, EvidenceError, FilterError, InferenceError, ModelError, OracleError, SynthError,
};
pub use evidence::{evidence_to_lambda, EvidenceSet, Observation};
pub use filtering::{
    bk_filter, exact_filter_marginals, fixed_window_filter, rms_error, FilterRun, PIN_EPSILON,
};
pub use inference::{smooth, NodePosterior, PosteriorTable, SmoothOptions, SmoothResult};
pub use message::{MessageKind, MessageVector};
pub use oracle::{
    enumerate_binary_dbn_posteriors, enumerate_changepoint_posteriors, ve_exact_unrolled,
    VeOptions, VeResult, VeTargets,
};
pub use model::{
    load_evidence, load_model, save_evidence, save_model, PrototypeNetwork, StructureClass,
    ValidationReport,
};
pub use synth::{forward_sample, gen_random_prototype, EvidenceMode, GeneratorKind, SampleResult};
