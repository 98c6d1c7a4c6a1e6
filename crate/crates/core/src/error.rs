use core::fmt;

/// Errors surfaced by the core operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoreError {
    /// No point fell inside the voxel grid extents.
    EmptyGrid,
    /// A sample request asked for more (or zero) selections than candidates allow.
    InvalidCount { requested: usize, available: usize },
    /// A lookup landed outside the raster's metric extent.
    OutOfBounds,
    /// Interpolation was invoked with an empty neighbor list.
    NoNeighbors,
    /// Matrix/feature dimensions disagree.
    ShapeMismatch {
        expected: usize,
        got: usize,
        what: &'static str,
    },
    /// A loss was evaluated over an empty batch.
    EmptyBatch,
    /// A value that must be finite was NaN or infinite.
    NonFinite { what: &'static str },
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::EmptyGrid => write!(f, "no point falls inside the voxel grid extents"),
            CoreError::InvalidCount {
                requested,
                available,
            } => write!(
                f,
                "invalid selection count: requested {requested} of {available} candidates"
            ),
            CoreError::OutOfBounds => write!(f, "query outside the raster's metric extent"),
            CoreError::NoNeighbors => write!(f, "interpolation requires at least one neighbor"),
            CoreError::ShapeMismatch {
                expected,
                got,
                what,
            } => write!(f, "shape mismatch for {what}: expected {expected}, got {got}"),
            CoreError::EmptyBatch => write!(f, "loss evaluated over an empty batch"),
            CoreError::NonFinite { what } => write!(f, "non-finite value in {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CoreError {}
