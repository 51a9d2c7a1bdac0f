use thiserror::Error;

/// Errors produced by the register algebra and stage dynamics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QdnError {
    #[error("register rank {0} out of range (expected 1..=64)")]
    InvalidRank(u32),
    #[error("qubit index {index} out of range for rank-{rank} register")]
    IndexOutOfRange { index: u32, rank: u32 },
    #[error("basis index {value} out of range for rank-{rank} register")]
    BasisOutOfRange { value: u64, rank: u32 },
    #[error("monomial indices must be strictly ascending")]
    IndicesNotAscending,
    #[error("register mismatch: expected rank {expected}, found rank {found}")]
    RegisterMismatch { expected: u32, found: u32 },
    #[error("labstate is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("subset rank {p} out of range for register rank {rank}")]
    SubsetOutOfRange { p: u32, rank: u32 },
    #[error("rewrite rule has no targets")]
    EmptyRule,
    #[error("rewrite rule targets are not pairwise distinct")]
    DuplicateTarget,
    #[error("rewrite rule source must be a single generator")]
    SourceNotSingleGenerator,
    #[error("duplicate rewrite rule for generator {0}")]
    DuplicateRule(u32),
    #[error("no rewrite rule for generator {0} (strict passthrough)")]
    MissingRule(u32),
    #[error("identity passthrough of generator {generator} exceeds output rank {output_rank}")]
    PassthroughOutOfRange { generator: u32, output_rank: u32 },
    #[error("stage {stage} expects input rank {expected} but previous register has rank {found}")]
    RankChainMismatch {
        stage: usize,
        expected: u32,
        found: u32,
    },
    #[error("validation domain is empty")]
    EmptyDomain,
    #[error("stage {stage} is not a rank-1 stage: {reason}")]
    NotRankOne { stage: usize, reason: String },
    #[error("path count {count} exceeds cap {cap}")]
    PathCountExceeded { count: u128, cap: u128 },
    #[error("cannot build {rows} orthonormal rows in dimension {cols}")]
    InfeasibleSemiUnitary { rows: u32, cols: u32 },
    #[error("validation failed at stage {stage}: max Gram deviation {deviation:.3e}")]
    ValidationFailed { stage: usize, deviation: f64 },
    #[error("slit kernel fails cyclic orthonormality (deviation {deviation:.3e})")]
    KernelNotOrthonormal { deviation: f64 },
    #[error("register rank {0} too large for dense evaluation")]
    TooLargeForDense(u32),
    #[error("{0}")]
    InvalidArgument(String),
}

impl QdnError {
    pub(crate) fn invalid<T: Into<String>>(msg: T) -> Self {
        QdnError::InvalidArgument(msg.into())
    }
}
