//! Sign matrices, scale vectors, factorized layers and their file formats.

mod dense;
pub mod format;
mod layer;
mod sign;

pub use dense::DenseMatrix;
pub use layer::DbfLayer;
pub use sign::{ScaleVector, SignMatrix};
