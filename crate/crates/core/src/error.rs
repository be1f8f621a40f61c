use thiserror::Error;

use crate::symbol::Symbol;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShiftError {
    #[error("invalid presentation: {0}")]
    InvalidPresentation(String),
    #[error("presentation is not transitive: no path from {from} to {to}")]
    NotTransitive { from: Symbol, to: Symbol },
    #[error("unknown built-in rule graph {0:?}")]
    UnknownRule(String),
    #[error("enumeration cap must be at least 1")]
    CapZero,
    #[error("no admissible word from {from} to {to} of length at most {max_len}")]
    NotFoundWithinBound {
        from: Symbol,
        to: Symbol,
        max_len: usize,
    },
    #[error("words have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("bar-admissibility only semi-decidable at search cap {0}")]
    Undecidable(usize),
    #[error("empty word")]
    EmptyWord,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropertyError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("tail rule has no computable growth rate: {0}")]
    TailRuleUnsupported(String),
    #[error(transparent)]
    Shift(#[from] ShiftError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("word {0} is not cyclically admissible")]
    NotCyclicallyAdmissible(String),
    #[error("convex weights sum to {0} > 1")]
    WeightSum(String),
    #[error("convex weights must be positive")]
    NonPositiveWeight,
    #[error("weights and parts differ in length ({0} vs {1})")]
    ArityMismatch(usize, usize),
    #[error("invalid Markov data: {0}")]
    InvalidMarkov(String),
    #[error("series cannot be decided: {0}")]
    SeriesUndecidable(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("integral diverges to +infinity")]
    UnboundedAbove,
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("need at least {needed} measures, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("sequence did not pass the Cauchy test: {0}")]
    NotConverged(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThermoError {
    #[error("pressure diverged (+infinity): {0}")]
    Diverged(String),
    #[error("loop weight series diverges: {0}")]
    TailSeriesDiverges(String),
    #[error("method not applicable: {0}")]
    MethodUnsupported(String),
    #[error("transition matrix is not irreducible")]
    NotIrreducible,
    #[error("potential depth {0} unsupported here")]
    PotentialTooDeep(usize),
    #[error("sequence does not escape to the zero measure")]
    NotEscaping,
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("partition entropy is infinite")]
    InfinitePartitionEntropy,
    #[error("null weights are not summable")]
    NullWeightsDiverge,
    #[error("certificate invalid: {0}")]
    CertificateInvalid(String),
    #[error("duality inequality violated by {0}")]
    InequalityViolated(f64),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Shift(#[from] ShiftError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApproxError {
    #[error("no connector between {from} and {to} within the search bound")]
    ConnectorNotFound { from: Symbol, to: Symbol },
    #[error("targets are not supported on a common finite symbol set")]
    TargetsNotFinitelySupported,
    #[error("block is not admissible in the compactification: {0}")]
    BlockNotAdmissible(String),
    #[error("the shift has the F-property; the construction requires its failure")]
    FPropertyHolds,
    #[error("F-property status undecided at cap {0}")]
    FPropertyUndecided(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Property(#[from] PropertyError),
}
