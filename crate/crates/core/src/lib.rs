//! Streaming, distributed and randomized singular value decomposition.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense column-major kernels (Householder QR, Jacobi SVD,
//!   randomized range finder).
//! - [`streaming`]: batch-wise updates of the leading left singular vectors
//!   with a forget factor.
//! - [`comm`]: rank-addressed gather/broadcast/send/recv over an in-process
//!   simulator or TCP.
//! - [`dsvd`]: the approximate partitioned method of snapshots, the
//!   tall-skinny parallel QR and the streaming-parallel driver.
//! - [`datagen`]: viscous Burgers snapshots and synthetic spectra.
//! - [`io`]: binary matrix files, column batches, CSV/SVG emitters.

pub mod comm;
pub mod datagen;
pub mod dsvd;
mod error;
pub mod io;
pub mod linalg;
pub mod streaming;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, QrResult, RandomSketchConfig, SvdResult};
