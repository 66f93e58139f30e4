use thiserror::Error;

/// Errors raised by string-group, homomorphism and field operations.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum WplError {
    #[error("coefficient length {got} does not match weight count {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("elements belong to different string groups")]
    ParentMismatch,

    #[error("generator index {index} out of range 1..={count}")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("subgroup generated by an element of infinite order (delta != 0)")]
    InfiniteSubgroup,

    #[error("homomorphism has infinite kernel (image of c is torsion)")]
    InfiniteKernel,

    #[error("homomorphism is not well defined: p_i * pi(x_i) differs between rows")]
    IllDefinedHom,

    #[error("domain of the outer map does not match codomain of the inner map")]
    DomainMismatch,

    #[error("subgroup does not split as a nontrivial direct product")]
    NoSplit,

    #[error("operation requires a subgroup of Trivial, Cyclic or Klein kind")]
    UnsupportedKind,

    #[error("construction not covered by an explicit formula: {0}")]
    UnsupportedCase(String),

    #[error("quadratic tower depth cap {0} exceeded")]
    TowerDepthExceeded(u32),

    #[error("division by zero")]
    DivisionByZero,

    #[error("square root of this element is not expressible with n-th roots for n a power of two")]
    NonQuadraticRoot,

    #[error("degenerate parameter: lambda must avoid 0 and 1")]
    DegenerateParameter,

    #[error("torsion enumeration cap exceeded: product of weights {0} > {1}")]
    TorsionCapExceeded(u128, u128),

    #[error("polynomial is not homogeneous")]
    NonHomogeneous,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid parameter sequence: {0}")]
    InvalidParams(String),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, WplError>;
