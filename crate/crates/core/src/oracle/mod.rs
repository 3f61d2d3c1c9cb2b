//! Dense exact-diagonalization reference for small chains.
//!
//! Everything here works with explicit 2^L state vectors, so it is only
//! practical up to [`ops::MAX_SITES`] sites. It shares no code path with the
//! free-fermion pipeline beyond the mode coefficients.

pub mod observables;
pub mod ops;
pub mod protocol;
pub mod state;

pub use observables::{
    dense_alpha, dense_cso, dense_cso_purity_form, dense_cso_with_projector, dense_expectation,
    dense_gamma, gaussian_rdm, normal_operator_norm, sample_z_outcomes,
};
pub use ops::{
    annihilator, build_hamiltonian, local_projector, majorana_matrix, mode_operator,
    mode_projector, pauli, site_operator, Boundary, MAX_SITES,
};
pub use protocol::{
    confirmation_stats, continuous_channel, simulate_protocol, ConfirmationStats, Postulate,
    ProtocolSimulator, ProtocolSpec, TrajectoryRecord,
};
pub use state::{evolve, partial_trace, quench_state, DenseRdm, DenseState, Evolver};
