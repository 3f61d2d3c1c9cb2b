//! Confirmation probabilities for repeated measurements of a mode occupation.
//!
//! Projective measurements keep `P ≥ P_min` per step when the waiting time is
//! at most `t_bound = (1 − P_min)/‖[H, η†η]‖`. Under the decoherence channel
//! only the maximally mixed part of the state is projected, which caps the
//! confirmation probability from above.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gaussian::{mode_occupation, purity};
use crate::linalg::{eigh, RMatrix};
use crate::modes::{mode_number_quadratic_form, OpenChainSpectrum};
use crate::quench::{correlation_matrix, CorrelationMatrix, QuenchConfig, DEFAULT_QUAD_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeGrid {
    /// `t_j = j · t_bound`.
    BoundMultiples,
    /// `t_j = j · dt`.
    Uniform(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n: usize,
    pub k: usize,
    pub xi: f64,
    pub p_min: f64,
    pub n_max: usize,
    pub t_grid: TimeGrid,
    pub quad_tol: f64,
}

impl ProtocolConfig {
    pub fn new(n: usize, k: usize, xi: f64, p_min: f64, n_max: usize) -> Self {
        Self {
            n,
            k,
            xi,
            p_min,
            n_max,
            t_grid: TimeGrid::BoundMultiples,
            quad_tol: DEFAULT_QUAD_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_min > 0.0 && self.p_min <= 1.0) {
            return Err(invalid(format!("P_min = {} must lie in (0, 1]", self.p_min)));
        }
        if self.n_max == 0 {
            return Err(invalid("n_max must be at least 1"));
        }
        if self.k >= self.n {
            return Err(invalid(format!("mode index k = {} out of range for N = {}", self.k, self.n)));
        }
        if let TimeGrid::Uniform(dt) = self.t_grid {
            if !(dt >= 0.0 && dt.is_finite()) {
                return Err(invalid(format!("time step {dt} must be non-negative")));
            }
        }
        Ok(())
    }

    pub fn spectrum(&self) -> Result<OpenChainSpectrum> {
        OpenChainSpectrum::new(self.n, self.xi)
    }

    /// Measurement times `t_1 … t_{n_max}`.
    pub fn times(&self) -> Result<Vec<f64>> {
        let dt = match self.t_grid {
            TimeGrid::BoundMultiples => t_bound(self)?,
            TimeGrid::Uniform(dt) => dt,
        };
        Ok((1..=self.n_max).map(|j| j as f64 * dt).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RmsKind {
    ProjMin,
    ProjMinLocal,
    DecMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmsSeries {
    pub kind: RmsKind,
    /// Number of confirming measurements, 1-based.
    pub n: Vec<usize>,
    pub values: Vec<f64>,
}

impl RmsSeries {
    fn from_values(kind: RmsKind, values: Vec<f64>) -> Self {
        Self {
            kind,
            n: (1..=values.len()).collect(),
            values,
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Commutator norm in the form quoted for the bound, `√2 𝒩_k |sin Nφ_k|`.
pub fn commutator_norm(spectrum: &OpenChainSpectrum, k: usize) -> f64 {
    std::f64::consts::SQRT_2 * spectrum.norm[k] * (spectrum.n as f64 * spectrum.phi[k]).sin().abs()
}

/// `‖[H, η_k†η_k]‖` for the block embedded in a longer chain: each of the two
/// boundary bonds contributes `𝒩_k |sin Nφ_k|`.
pub fn commutator_norm_exact(spectrum: &OpenChainSpectrum, k: usize) -> f64 {
    2.0 * spectrum.norm[k] * (spectrum.n as f64 * spectrum.phi[k]).sin().abs()
}

pub fn t_bound(config: &ProtocolConfig) -> Result<f64> {
    config.validate()?;
    let spectrum = config.spectrum()?;
    Ok((1.0 - config.p_min) / commutator_norm(&spectrum, config.k))
}

/// `P_min^n`.
pub fn proj_rms(config: &ProtocolConfig) -> Result<RmsSeries> {
    config.validate()?;
    let values = (1..=config.n_max).map(|n| config.p_min.powi(n as i32)).collect();
    Ok(RmsSeries::from_values(RmsKind::ProjMin, values))
}

/// `per_step^n` for a local-measurement bound that holds at every step.
pub fn proj_local_rms(per_step: f64, n_max: usize) -> RmsSeries {
    let p = per_step.clamp(0.0, 1.0);
    RmsSeries::from_values(
        RmsKind::ProjMinLocal,
        (1..=n_max).map(|n| p.powi(n as i32)).collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochDecomposition {
    /// Upper estimate of the boundary-state weight, `√(Tr ρ² − 2^{−N})`.
    pub alpha: f64,
    /// `‖b‖ = √(2 Tr ρ² − 2^{1−N})`.
    pub b_norm: f64,
    /// Worst-case `|m| = 2^{1/2−N}`.
    pub m_lower: f64,
}

pub fn bloch_decomposition(gamma: &CorrelationMatrix) -> Result<BlochDecomposition> {
    let p = purity(gamma)?;
    let n = gamma.n as i32;
    Ok(BlochDecomposition {
        alpha: (p - 2f64.powi(-n)).max(0.0).sqrt().min(1.0),
        b_norm: (2.0 * p - 2f64.powi(1 - n)).max(0.0).sqrt(),
        m_lower: 2f64.powf(0.5 - n as f64),
    })
}

/// Largest weight removable as a uniform component, `α = 1 − 2^N λ_min(ρ)`.
/// For a Gaussian state `λ_min = ∏_j (1 − ν_j)/2` over the symplectic
/// eigenvalues `ν_j`, so `α = 1 − ∏_j (1 − ν_j)`.
pub fn exact_alpha(gamma: &CorrelationMatrix) -> f64 {
    let eig = eigh(&gamma.data).0;
    let product: f64 = eig[gamma.n..].iter().map(|nu| 1.0 - nu.clamp(0.0, 1.0)).product();
    (1.0 - product).clamp(0.0, 1.0)
}

/// Lower bounds on the probabilities of outcome 1 and outcome 0 under the
/// decoherence channel, `½√(Tr ρ² − 2^{−N}) ± (p − ½)` clamped to [0, 1].
pub fn dec_bounds_with_form(gamma: &CorrelationMatrix, q: &RMatrix) -> Result<(f64, f64)> {
    let p = mode_occupation(gamma, q);
    let radius = 0.5 * (purity(gamma)? - 2f64.powi(-(gamma.n as i32))).max(0.0).sqrt();
    let lower_1 = (radius + p - 0.5).clamp(0.0, 1.0);
    let lower_0 = (radius - p + 0.5).clamp(0.0, 1.0);
    Ok((lower_1, lower_0))
}

pub fn dec_bounds(
    gamma: &CorrelationMatrix,
    spectrum: &OpenChainSpectrum,
    k: usize,
) -> Result<(f64, f64)> {
    dec_bounds_with_form(gamma, &mode_number_quadratic_form(spectrum, k)?)
}

/// The outcome of `Π_k` being confirmed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfirmedOutcome {
    /// The mode found empty, `Π_k = 0`; this is the initial majority outcome
    /// after the quench for the modes of interest.
    #[default]
    Empty,
    Occupied,
}

/// `∏_{j ≤ n} (1 − lower_opposite(t_j))`; valid because the lower bounds do not
/// depend on the measurement history.
pub fn dec_rms(config: &ProtocolConfig, outcome: ConfirmedOutcome) -> Result<RmsSeries> {
    config.validate()?;
    let spectrum = config.spectrum()?;
    let q = mode_number_quadratic_form(&spectrum, config.k)?;
    let times = config.times()?;
    let factors = times
        .par_iter()
        .map(|&t| {
            let gamma = correlation_matrix(&QuenchConfig {
                quad_tol: config.quad_tol,
                ..QuenchConfig::new(config.n, config.xi, t)
            })?;
            let (lower_1, lower_0) = dec_bounds_with_form(&gamma, &q)?;
            Ok(match outcome {
                ConfirmedOutcome::Empty => 1.0 - lower_1,
                ConfirmedOutcome::Occupied => 1.0 - lower_0,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut acc = 1.0;
    let values = factors
        .into_iter()
        .map(|f| {
            acc *= f;
            acc
        })
        .collect();
    Ok(RmsSeries::from_values(RmsKind::DecMax, values))
}

/// Physical waiting time in seconds for a coupling given in Hz (ħ = 1).
pub fn to_seconds(t: f64, coupling_hz: f64) -> f64 {
    t / coupling_hz
}
