use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::linalg::{c, eigh, CMatrix, RMatrix};

use super::ops::{build_hamiltonian, Boundary, MAX_SITES};

#[derive(Debug, Clone)]
pub struct DenseState {
    pub l: usize,
    pub amplitudes: DVector<Complex64>,
    pub t: f64,
}

impl DenseState {
    /// All spins down: the ξ₀ → ∞ ground state and the fermion vacuum.
    pub fn all_down(l: usize) -> Result<Self> {
        if l > MAX_SITES {
            return Err(crate::error::Error::TooLarge { l, max: MAX_SITES });
        }
        let mut amplitudes = DVector::zeros(1 << l);
        amplitudes[0] = c(1.0);
        Ok(Self { l, amplitudes, t: 0.0 })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }
}

/// Exact propagator from a full eigendecomposition.
#[derive(Debug, Clone)]
pub struct Evolver {
    pub energies: Vec<f64>,
    vectors: CMatrix,
    vectors_adj: CMatrix,
}

impl Evolver {
    pub fn new(h: &RMatrix) -> Self {
        let eig = SymmetricEigen::new(h.clone());
        let vectors = crate::linalg::to_complex(&eig.eigenvectors);
        let vectors_adj = vectors.adjoint();
        Self {
            energies: eig.eigenvalues.iter().copied().collect(),
            vectors,
            vectors_adj,
        }
    }

    pub fn for_chain(l: usize, xi: f64, boundary: Boundary) -> Result<Self> {
        Ok(Self::new(&build_hamiltonian(l, xi, boundary)?))
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn apply(&self, psi: &DVector<Complex64>, dt: f64) -> DVector<Complex64> {
        let mut coeffs = &self.vectors_adj * psi;
        for (ci, e) in coeffs.iter_mut().zip(&self.energies) {
            *ci *= Complex64::from_polar(1.0, -e * dt);
        }
        &self.vectors * coeffs
    }

    /// `U(dt) = exp(−iH dt)` as a dense matrix.
    pub fn propagator(&self, dt: f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, e) in self.energies.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -e * dt);
            for r in 0..scaled.nrows() {
                scaled[(r, j)] *= phase;
            }
        }
        scaled * &self.vectors_adj
    }

    pub fn evolve(&self, state: &DenseState, dt: f64) -> DenseState {
        DenseState {
            l: state.l,
            amplitudes: self.apply(&state.amplitudes, dt),
            t: state.t + dt,
        }
    }
}

/// One-shot evolution; prefer [`Evolver`] when stepping repeatedly.
pub fn evolve(state: &DenseState, h: &RMatrix, dt: f64) -> DenseState {
    Evolver::new(h).evolve(state, dt)
}

/// Quench state `e^{−iHt}|↓…↓⟩` for the ring of length `l`.
pub fn quench_state(evolver: &Evolver, l: usize, t: f64) -> Result<DenseState> {
    Ok(evolver.evolve(&DenseState::all_down(l)?, t))
}

#[derive(Debug, Clone)]
pub struct DenseRdm {
    pub n: usize,
    pub matrix: CMatrix,
}

impl DenseRdm {
    pub fn new(n: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != 1 << n || matrix.ncols() != 1 << n {
            return Err(invalid("density matrix dimension must be 2^N"));
        }
        Ok(Self { n, matrix })
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1 << n;
        Self {
            n,
            matrix: CMatrix::identity(dim, dim) * c(1.0 / dim as f64),
        }
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.matrix).0
    }

    /// Largest violation of Hermiticity, unit trace and positivity.
    pub fn invariant_violation(&self) -> f64 {
        let herm = crate::linalg::max_abs(&(&self.matrix - self.matrix.adjoint()));
        let trace = (self.matrix.trace() - c(1.0)).norm();
        let neg = self.eigenvalues().first().map_or(0.0, |e| (-e).max(0.0));
        herm.max(trace).max(neg)
    }
}

/// Reduced state of the first `n` sites.
pub fn partial_trace(state: &DenseState, n: usize) -> Result<DenseRdm> {
    if n == 0 || n > state.l {
        return Err(invalid(format!("subsystem size {n} must lie in 1..={}", state.l)));
    }
    let rows = 1usize << n;
    let cols = 1usize << (state.l - n);
    // row index = high bits (sites 0..n), column index = the rest
    let m = CMatrix::from_fn(rows, cols, |r, col| state.amplitudes[r * cols + col]);
    DenseRdm::new(n, &m * m.adjoint())
}
