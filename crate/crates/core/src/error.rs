use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(
        "dimension mismatch: expected {expected_height}x{expected_width}, got {height}x{width}"
    )]
    DimensionMismatch {
        expected_height: usize,
        expected_width: usize,
        height: usize,
        width: usize,
    },
    #[error("class id {class_id} is not below num_classes {num_classes}")]
    InvalidClassId { class_id: u8, num_classes: usize },
    #[error("expected epoch {expected}, got {got}")]
    EpochGap { expected: u32, got: u32 },
    #[error("trace contains no snapshots")]
    EmptyTrace,
    #[error("model has no usable decision boundary")]
    UntrainedModel,
    #[error("degenerate groups: {0}")]
    DegenerateGroups(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss at epoch {epoch}")]
    NumericalDivergence { epoch: u32 },
    #[error("pixel ({row}, {col}) outside {height}x{width} image")]
    OutOfBounds {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },
    #[error("ranking is empty")]
    EmptyRanking,
    #[error("class {class_id} absent from {image_id}")]
    ClassAbsent { class_id: u8, image_id: String },
    #[error("class {class_id} region of {image_id} has zero variance")]
    DegenerateRegion { class_id: u8, image_id: String },
    #[error("cannot rotate {height}x{width} image by {degrees} degrees")]
    NonSquareRotation {
        height: usize,
        width: usize,
        degrees: u32,
    },
}
