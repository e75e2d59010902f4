//! Low-rank Tucker completion of third-order tensors.
//!
//! Entries of a `d1 × d2 × d3` tensor with multilinear ranks `(r1, r2, r3)`
//! are sampled uniformly with replacement. The factor subspaces are estimated
//! spectrally from the samples ([`spectral`]), trimmed to bounded coherence,
//! and refined by gradient descent on a product of Grassmannians
//! ([`completion`]). [`experiments`] drives synthetic recovery sweeps and
//! [`cli`] exposes everything as the `tcomp` binary.

pub mod cli;
mod clock;
pub mod completion;
pub mod error;
pub mod experiments;
pub mod grassmann;
pub mod linalg;
pub mod observations;
pub mod rng;
pub mod spectral;
pub mod tensor;

pub use completion::{gog_run, GogConfig, Rho, SolveReport};
pub use error::{Error, Result};
pub use grassmann::{Frame, TripleFrame};
pub use observations::{Observation, ObservationSet};
pub use tensor::{CoreTensor, Mode, Tensor3};
