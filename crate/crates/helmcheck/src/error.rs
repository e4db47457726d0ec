//! Error types, one enum per subsystem.

use thiserror::Error;

/// Errors from the expression language.
#[derive(Debug, Error)]
pub enum SymError {
    #[error("syntax error at byte {offset}: {message}")]
    SyntaxError { offset: usize, message: String },
    #[error("variable {var} out of range for dimension n={dim}")]
    IndexOutOfRange { var: String, dim: usize },
    #[error("singular sub-expression `{expr}` at {point}")]
    DomainError { expr: String, point: String },
    #[error("|y| = {norm} below y_min = {y_min}: point lies too close to the zero section")]
    ZeroSection { norm: f64, y_min: f64 },
    #[error("need at least {needed} admissible sample points, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
}

/// Errors from the form calculus.
#[derive(Debug, Error)]
pub enum CalcError {
    #[error("form degree {degree} exceeds the supported maximum {max}")]
    DegreeOverflow { degree: usize, max: usize },
    #[error("unsupported object kind for this operation: {0}")]
    UnsupportedKind(String),
    #[error(transparent)]
    Sym(#[from] SymError),
}

/// Errors from geometry constructions and integration.
#[derive(Debug, Error)]
pub enum GeomError {
    #[error("trajectory left the domain at step {step}: {reason}")]
    LeftDomain { step: usize, reason: String },
    #[error(transparent)]
    Sym(#[from] SymError),
}

/// Errors from the Helmholtz-condition checks.
#[derive(Debug, Error)]
pub enum CheckError {
    #[error("1-form is not semi-basic (residual {residual:.3e})")]
    NotSemiBasic { residual: f64 },
    #[error("object is not homogeneous of a detectable rational degree")]
    NotHomogeneous,
    #[error("homogeneity degree k=0 is excluded from potential recovery")]
    ZeroDegree,
    #[error("precondition failed: {name} (residual {residual:.3e})")]
    PreconditionFailed { name: String, residual: f64 },
    #[error("spray is not flat: curvature residual {residual:.3e}")]
    NotFlat { residual: f64 },
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Calc(#[from] CalcError),
}

/// Errors from the example catalog and the problem-file loader.
#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown builtin example `{0}`")]
    UnknownExample(String),
    #[error("schema error at {path}: {message}")]
    SchemaError { path: String, message: String },
    #[error("metric is singular at {point}")]
    SingularMetric { point: String },
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
