//! Error types shared across the crate.
//!
//! Each subsystem has its own enum so callers can match on the failures that
//! are actually possible: model construction and file I/O ([`ModelError`]),
//! evidence handling ([`EvidenceError`]), message passing ([`InferenceError`]),
//! the exact baselines ([`OracleError`]), filtering ([`FilterError`]) and the
//! model generator / benchmark harness ([`SynthError`], [`BenchError`]).

use thiserror::Error;

/// Failure while building, validating, loading or saving a prototype network.
#[derive(Debug, Error)]
pub enum ModelError {
    /// The file is not syntactically valid JSON.
    #[error("parse error at line {line}: {reason}")]
    ParseError { line: usize, reason: String },

    /// The file is valid JSON but does not match the expected schema
    /// (missing or mistyped field, bad CPD key, dangling node reference, ...).
    #[error("schema violation: {0}")]
    SchemaViolation(String),

    /// The directed hidden-node graph contains a cycle through this node.
    #[error("cycle through node `{0}`")]
    CyclicGraph(String),

    /// A CPD or emission row is out of range or does not sum to one.
    #[error("unnormalized CPD for node `{node}`, row `{row}`")]
    UnnormalizedCpd { node: String, row: String },

    /// A non-persistent hidden node touches another non-persistent hidden
    /// node, or feeds a child that has additional hidden parents. Either way
    /// the node cannot be summed out independently of its neighbours.
    #[error("non-persistent node `{0}` is not isolated")]
    NonIsolatedNonPersistent(String),

    /// The network falls outside the supported structural classes.
    #[error("unsupported structure: {0}")]
    UnsupportedStructure(String),

    /// A model was unrolled over zero slices.
    #[error("horizon must be at least one slice")]
    HorizonZero,

    /// Underlying file-system failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// An evidence file failed semantic validation against the model.
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
}

/// Failure while validating observations against a model.
#[derive(Debug, Error)]
pub enum EvidenceError {
    /// The observation names a node that does not exist in the model.
    #[error("evidence references unknown node `{0}`")]
    UnknownNode(String),

    /// The observed value is outside the node's alphabet.
    #[error("value {value} for node `{node}` exceeds alphabet size {alphabet}")]
    UnknownObservationValue {
        node: String,
        value: u32,
        alphabet: usize,
    },

    /// Two observations target the same node and slice.
    #[error("duplicate observation for node `{node}` at slice {t}")]
    DuplicateObservation { node: String, t: usize },

    /// A persistent node is observed off after it was observed on, leaving no
    /// consistent trajectory.
    #[error("contradictory evidence for node `{node}` around slice {t}")]
    ContradictoryEvidence { node: String, t: usize },

    /// The observation slice lies outside `1..=horizon`.
    #[error("slice {t} for node `{node}` is outside the horizon {horizon}")]
    TimeOutOfRange {
        node: String,
        t: usize,
        horizon: usize,
    },
}

/// Failure of the message-passing engine.
#[derive(Debug, Error)]
pub enum InferenceError {
    /// The evidence has probability zero under the model.
    #[error("evidence has probability zero under the model")]
    ZeroEvidenceProbability,

    /// A node's in-degree exceeds the configured enumeration cap.
    #[error("node `{node}` has in-degree {degree}, above the cap {cap}")]
    InDegreeTooLarge {
        node: String,
        degree: usize,
        cap: usize,
    },

    /// The model is outside the class the exact engine supports.
    #[error("unsupported structure: {0}")]
    UnsupportedStructure(String),

    /// The requested schedule root is not a hidden node of the model.
    #[error("requested root `{node}` is not a hidden node")]
    UnknownRoot { node: String },

    /// Evidence failed to bind to the model.
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
}

/// Failure of an exact baseline (enumeration or variable elimination).
#[derive(Debug, Error)]
pub enum OracleError {
    /// The requested enumeration would visit more configurations than allowed.
    #[error("enumeration needs {required:.3e} configurations, budget is {budget:.3e}")]
    BudgetExceeded { required: f64, budget: f64 },

    /// Variable elimination would materialize a factor above the entry budget.
    #[error("elimination needs a factor of {required} entries, budget is {budget}")]
    MemoryBudgetExceeded { required: u64, budget: u64 },

    /// A caller-supplied elimination order is not usable.
    #[error("invalid elimination order: {reason}")]
    InvalidEliminationOrder { reason: String },

    /// The evidence has probability zero under the model.
    #[error("evidence has probability zero under the model")]
    ZeroEvidenceProbability,

    /// Evidence failed to bind to the model.
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
}

/// Failure of a filtering routine.
#[derive(Debug, Error)]
pub enum FilterError {
    /// Two marginal vectors being compared have different lengths.
    #[error("shape mismatch: left has {left} entries, right has {right}")]
    ShapeMismatch { left: usize, right: usize },

    /// Filtering supports prototypes whose hidden nodes are all persistent.
    #[error("unsupported model for filtering: {0}")]
    UnsupportedModel(String),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Inference(#[from] InferenceError),

    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Failure while generating random models or samples.
#[derive(Debug, Error)]
pub enum SynthError {
    /// The generator request is internally inconsistent.
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
}

/// Failure of the benchmark harness.
#[derive(Debug, Error)]
pub enum BenchError {
    /// The experiment description is internally inconsistent.
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),

    /// A results CSV could not be parsed back for aggregation.
    #[error("cannot parse results CSV: {0}")]
    Parse(String),

    #[error(transparent)]
    Synth(#[from] SynthError),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Filter(#[from] FilterError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
