//! Sparse symmetric matrices, envelope LDLᵀ and shift-invert Lanczos.

mod csr;
mod lanczos;
mod ldl;

pub use csr::CsrMatrix;
pub use lanczos::{lowest_generalized, Eigenpairs, LanczosOptions};
pub use ldl::{reverse_cuthill_mckee, EnvelopeLdl};
