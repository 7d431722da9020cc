use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("intervals [{0}, {1}] and [{2}, {3}] overlap")]
    Overlap(f64, f64, f64, f64),
    #[error("parameter out of range: {0}")]
    ParameterDomain(String),
    #[error("invalid set: {0}")]
    InvalidSet(String),
    #[error("sample {0} does not lie in the set")]
    SampleNotInSet(f64),
    #[error("pole {pole} lies strictly inside interval [{lo}, {hi}]")]
    PoleInsideInterval { pole: f64, lo: f64, hi: f64 },
    #[error("singular period system (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },
    #[error("no sign change of the gap polynomial in gap {gap} = ({lo}, {hi})")]
    RootNotBracketed { gap: usize, lo: f64, hi: f64 },
    #[error("gap polynomial changes sign {count} times in gap {gap}")]
    MultipleRoots { gap: usize, count: usize },
    #[error("point {re} + {im}i lies on the set")]
    OnSet { re: f64, im: f64 },
    #[error("divisor has {got} entries, gap system has {expected} gaps")]
    DivisorMismatch { expected: usize, got: usize },
    #[error("divisor point {x} is outside gap {gap} = [{lo}, {hi}]")]
    DivisorOutsideGap { gap: usize, x: f64, lo: f64, hi: f64 },
    #[error("set has no usable accumulation point: {0}")]
    MissingAccumulation(String),
    #[error("lambda = {lambda} outside [0, {lambda_star}]")]
    LambdaOutOfRange { lambda: f64, lambda_star: f64 },
    #[error("Blaschke factor has modulus {modulus} >= 1 at the evaluation point")]
    BlaschkeContract { modulus: f64 },
    #[error("no convergence: {0}")]
    NonConvergent(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unresolved band near {near} (width {width:e})")]
    UnresolvedBand { near: f64, width: f64 },
    #[error("set was not produced by the benedicks or benedicks_mod generator (found {0:?})")]
    NotBenedicksShape(String),
}
