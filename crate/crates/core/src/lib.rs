//! Variational Schmidt decomposition of bipartite pure states.
//!
//! A pair of local circuits `U_A ⊗ V_B` is trained so that measuring both
//! halves of the register always yields the same bitstring. The trained
//! circuit then exposes the Schmidt coefficients as coincidence frequencies,
//! the Schmidt vectors through its adjoint, and supports two derived
//! protocols: exchanging the halves without any gate across the cut, and
//! compressing the state onto one half with a CNOT ladder.

pub mod ansatz;
pub mod applications;
pub mod cli;
pub mod decomposer;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod oracle;

pub mod seed;
pub mod state_gen;
pub mod statevec;

pub use ansatz::{AnsatzConfig, ParamVector, QsvdAnsatz};
pub use error::{QsvdError, Result};
pub use oracle::{exact_entropy, exact_schmidt, ExactSchmidt};
pub use decomposer::{
    cost_exact, cost_sampled, extract_schmidt, gradient, reconstruct_eigenvectors, train, ExtractOptions,
    SchmidtResult, TrainOptions, TrainingReport,
};
pub use statevec::{Gate, PureState};
