//! Repeated-measurement statistics of fermionic modes in a quenched
//! transverse-field Ising chain.
//!
//! A block of `N` sites is cut out of an infinite chain that was quenched
//! from the all-down state. The crate computes the block's open-chain normal
//! modes, its Majorana correlation matrix after the quench, Gaussian-state
//! functionals of that matrix (purity, coherence between mode sectors), and
//! the resulting lower bounds on how often a repeated mode measurement
//! confirms its first outcome. [`oracle`] is an independent dense
//! reference for small chains.

pub mod bounds;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod modes;
pub mod oracle;
pub mod practical;
pub mod quadrature;
pub mod quench;

pub use bounds::{
    commutator_norm, commutator_norm_exact, dec_bounds, dec_rms, exact_alpha, proj_local_rms, proj_rms, t_bound,
    BlochDecomposition, ConfirmedOutcome, ProtocolConfig, RmsKind, RmsSeries, TimeGrid,
};
pub use error::{Error, Result};
pub use gaussian::{
    cso, dressed_purity, overlap_trace, purity, ComposeRoute, CsoMethod, CsoValue, Dressing,
    GaussianOperator,
};
pub use modes::{mode_energy, ModeEnergy, OpenChainSpectrum};
pub use practical::{
    optimize_basis, partition_subspaces, repeated_confirm_bounds, tomography_estimate, LocalBasis,
    OutcomeString, RepeatedBounds, SubspacePartition, TomographyEstimate,
};
pub use quench::{
    correlation_matrix, finite_l_correlation_matrix, stationary_correlation_matrix,
    CorrelationMatrix, QuenchConfig,
};
