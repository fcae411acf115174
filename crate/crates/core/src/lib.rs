//! Double binary factorization of dense weight matrices.
//!
//! A weight matrix `W` (`n × m`) is approximated as
//! `(a ⊙ A ⊙ midᵀ)(B ⊙ bᵀ)` where `A` (`n × k`) and `B` (`k × m`) are sign
//! matrices and `a`, `mid`, `b` are scale vectors. The middle dimension `k`
//! sets the budget: `k (n + m)` sign bits, so roughly `k (n + m) / (n m)`
//! bits per weight.
//!
//! - [`bitcore`]: packed sign matrices, layers, `DBF1`/`TNS1` files.
//! - [`svid`]: sign/rank-1 magnitude projection.
//! - [`factorize`]: the alternating ADMM solver, importance weighting and
//!   scale refinement.
//! - [`kernel`]: add-only forward pass.
//! - [`budget`]: middle-dimension sizing, storage accounting and
//!   nonuniform allocation across layers.
//! - [`baseline`], [`eval`]: comparison compressors and sweeps.

pub mod baseline;
pub mod bitcore;
pub mod budget;
pub mod error;
pub mod eval;
pub mod factorize;
pub mod kernel;
pub mod svid;

pub use bitcore::format::{load_dbf, read_tensor, save_dbf, write_tensor, Tensor};
pub use bitcore::{DbfLayer, DenseMatrix, ScaleVector, SignMatrix};
pub use error::{DbfError, Result};
pub use factorize::{factorize, factorize_weighted, FactorizeConfig, FactorizeReport, ImportanceProfile};
