//! Transform-based tensor SVD (DCT and DFT tube transforms), the matching
//! tensor nuclear norm and its prox, and ADMM low-rank tensor completion.

pub mod bench;
pub mod completion;
pub mod error;
pub mod io;
mod linalg;
pub mod metrics;
pub mod report;
pub mod structured;
pub mod svt;
pub mod tensor;
pub mod transform;
pub mod tsvd;

pub use completion::{
    admm_complete, make_mask, AdmmState, ObservationMask, SamplingPattern, SolverConfig,
};
pub use error::{Error, Result};
pub use tensor::{BlockVector, Tensor3};
pub use transform::{ComplexTensor3, Spectrum, TransformKind, TubeTransform};
