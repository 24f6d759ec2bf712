use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "cannot contract axis {axis_a} of left tensor (length {len_a}) with \
         axis {axis_b} of right tensor (length {len_b})"
    )]
    ContractionShapeMismatch {
        axis_a: usize,
        len_a: usize,
        axis_b: usize,
        len_b: usize,
    },

    #[error("axis {axis} appears more than once in contraction pairs")]
    DuplicateContractionAxis { axis: usize },

    #[error("axis {axis} out of range for tensor of rank {rank}")]
    AxisOutOfRange { axis: usize, rank: usize },

    #[error("{0:?} is not a permutation of the tensor axes")]
    InvalidPermutation(Vec<usize>),

    #[error("cannot reshape {elements} elements into shape {requested:?}")]
    ReshapeSizeMismatch {
        elements: usize,
        requested: Vec<usize>,
    },

    #[error("tensor data length {data_len} does not match shape {shape:?}")]
    ShapeDataMismatch { shape: Vec<usize>, data_len: usize },

    #[error("expected a matrix (rank 2), got rank {rank}")]
    NotAMatrix { rank: usize },

    #[error("chi must be at least 1")]
    InvalidChi,

    #[error("dimension mismatch in {tensor}: {detail}")]
    DimensionMismatch { tensor: String, detail: String },

    #[error("timestep {t} out of range 1..={horizon}")]
    TimestepOutOfRange { t: usize, horizon: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model validation failed: {count} violation(s); first: {first}")]
    Validation { count: usize, first: String },
}
