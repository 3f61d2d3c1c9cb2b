//! Fermionic Gaussian operators described by their Majorana correlation matrix.
//!
//! Conventions: `ρ ∝ exp(¼ aᵀ W a)` with `Γ = tanh(W/2)`. Traces of products
//! follow from `Tr(ρρ′) = √det((1 + ΓΓ′)/2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, det, expm, hermitian_map, inverse, logm, max_abs, CMatrix, RMatrix, I};
use crate::modes::{mode_number_quadratic_form, OpenChainSpectrum};
use crate::quench::CorrelationMatrix;

pub const DEFAULT_CLIP: f64 = 1e-12;

/// A Gaussian operator `Z·ρ[Γ]` with `Tr = trace_factor`.
#[derive(Debug, Clone)]
pub struct GaussianOperator {
    pub gamma: CorrelationMatrix,
    pub log_kernel: Option<CMatrix>,
    pub trace_factor: f64,
}

impl GaussianOperator {
    pub fn state(gamma: CorrelationMatrix) -> Self {
        Self {
            gamma,
            log_kernel: None,
            trace_factor: 1.0,
        }
    }

    /// Attach `W = 2 artanh Γ`, clipping pure directions.
    pub fn with_kernel(mut self, clip: f64) -> Self {
        self.log_kernel = Some(kernel_from_gamma(&self.gamma, clip).w);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsoMethod {
    Gaussian,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsoValue {
    pub value: f64,
    pub k: usize,
    pub t: f64,
    pub method: CsoMethod,
}

/// `e^{X/2}` dressing with `X = η†η` (occupation) or `X = ηη†` (hole).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dressing {
    Occupation,
    Hole,
}

/// How `e^{X/2} ρ e^{X/2}` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComposeRoute {
    /// Linear-fractional update of Γ; exact for pure states.
    #[default]
    Cayley,
    /// Kernel logarithm of the product of exponentials, then `tanh`.
    KernelLog,
}

fn sqrt_det_half(m: &CMatrix) -> Result<f64> {
    let d = det(&(m * c(0.5)));
    if d.re < -1e-12 {
        return Err(Error::NumericallyIndefinite { value: d.re });
    }
    Ok(d.re.max(0.0).sqrt())
}

/// `Tr ρ² = √det((1 + Γ²)/2)`.
pub fn purity(gamma: &CorrelationMatrix) -> Result<f64> {
    let id = CMatrix::identity(gamma.dim(), gamma.dim());
    sqrt_det_half(&(&id + &gamma.data * &gamma.data))
}

/// `Tr(ρ[Γ] ρ[Γ′]) = √det((1 + ΓΓ′)/2)`.
pub fn overlap_trace(gamma: &CorrelationMatrix, gamma2: &CorrelationMatrix) -> Result<f64> {
    if gamma.dim() != gamma2.dim() {
        return Err(crate::error::invalid("overlap of correlation matrices of different size"));
    }
    let id = CMatrix::identity(gamma.dim(), gamma.dim());
    sqrt_det_half(&(&id + &gamma.data * &gamma2.data))
}

/// `⟨η_k†η_k⟩ = ½ + (i/4) Tr(Q_k Γ)`.
pub fn mode_occupation(gamma: &CorrelationMatrix, q: &RMatrix) -> f64 {
    let mut tr = Complex64::new(0.0, 0.0);
    for m in 0..q.nrows() {
        for n in 0..q.ncols() {
            tr += q[(m, n)] * gamma.data[(n, m)];
        }
    }
    (0.5 + 0.25 * I * tr).re
}

#[derive(Debug, Clone)]
pub struct Kernel {
    pub w: CMatrix,
    /// Number of spectral values of Γ moved by the clip.
    pub clipped: usize,
}

/// `W = 2 artanh Γ` through the spectrum of the Hermitian Γ, with eigenvalues
/// clipped to `[−1 + clip, 1 − clip]`.
pub fn kernel_from_gamma(gamma: &CorrelationMatrix, clip: f64) -> Kernel {
    let bound = 1.0 - clip;
    let (values, _) = linalg::eigh(&gamma.data);
    let clipped = values.iter().filter(|v| v.abs() > bound).count();
    let w = hermitian_map(&gamma.data, |v| 2.0 * v.clamp(-bound, bound).atanh());
    Kernel { w, clipped }
}

/// `Γ = tanh(W/2)`.
pub fn gamma_from_kernel(w: &CMatrix) -> CMatrix {
    hermitian_map(w, |v| (0.5 * v).tanh())
}

/// Principal `ln(exp(W) exp(W′))`.
pub fn compose(w: &CMatrix, w2: &CMatrix) -> Result<CMatrix> {
    let product = expm(w) * expm(w2);
    let out = logm(&product)?;
    let residual = max_abs(&(expm(&out) - &product)) / max_abs(&product).max(1.0);
    if residual > 1e-9 {
        return Err(Error::LogBranchFailure {
            reason: format!("composition residual {residual:e}"),
        });
    }
    Ok(out)
}

/// Kernel (in `exp(¼ aᵀ K a)` form) of `exp(X/2)`.
fn half_dressing_kernel(q: &RMatrix, which: Dressing) -> CMatrix {
    let sign = match which {
        Dressing::Occupation => 1.0,
        Dressing::Hole => -1.0,
    };
    linalg::to_complex(q) * (I * (0.5 * sign))
}

/// Γ of the normalized `D ρ D`, where the Gaussian `D` has group element `A`:
/// `Γ′ = [A(1+Γ) − A⁻¹(1−Γ)] [A(1+Γ) + A⁻¹(1−Γ)]⁻¹`.
fn cayley_compose(a: &CMatrix, gamma: &CMatrix) -> Result<CMatrix> {
    let n = gamma.nrows();
    let id = CMatrix::identity(n, n);
    let a_inv = inverse(a)?;
    let plus = a * (&id + gamma);
    let minus = &a_inv * (&id - gamma);
    let denom = inverse(&(&plus + &minus))?;
    Ok((&plus - &minus) * denom)
}

/// Trace of `e^{X/2} ρ e^{X/2}`, i.e. `Tr(ρ e^X)`, by the overlap identity
/// against the (normalized) Gaussian `e^X / Tr e^X`.
fn dressed_trace(gamma: &CorrelationMatrix, q: &RMatrix, which: Dressing) -> Result<f64> {
    let dim = gamma.dim();
    let n = gamma.n;
    let kernel = half_dressing_kernel(q, which) * c(2.0);
    let g_x = CorrelationMatrix::new(n, gamma.t, gamma_from_kernel(&kernel))?;
    // Tr e^X = 2^{N−1}(1 + e)
    let tr_x = 2f64.powi(n as i32 - 1) * (1.0 + std::f64::consts::E);
    debug_assert_eq!(g_x.dim(), dim);
    Ok(tr_x * overlap_trace(gamma, &g_x)?)
}

/// `Tr[(e^{X/2} ρ e^{X/2})²]` for the normalized state `ρ[Γ]` scaled by
/// `state.trace_factor`.
pub fn dressed_purity(
    state: &GaussianOperator,
    spectrum: &OpenChainSpectrum,
    k: usize,
    which: Dressing,
    route: ComposeRoute,
) -> Result<f64> {
    let q = mode_number_quadratic_form(spectrum, k)?;
    dressed_purity_with_form(state, &q, which, route)
}

pub fn dressed_purity_with_form(
    state: &GaussianOperator,
    q: &RMatrix,
    which: Dressing,
    route: ComposeRoute,
) -> Result<f64> {
    let gamma = &state.gamma;
    let trace = dressed_trace(gamma, q, which)?;
    let half = half_dressing_kernel(q, which);
    let dressed = match route {
        ComposeRoute::Cayley => cayley_compose(&expm(&half), &gamma.data)?,
        ComposeRoute::KernelLog => {
            let w = match &state.log_kernel {
                Some(w) => w.clone(),
                None => kernel_from_gamma(gamma, DEFAULT_CLIP).w,
            };
            let inner = compose(&w, &half)?;
            gamma_from_kernel(&compose(&half, &inner)?)
        }
    };
    let dressed = CorrelationMatrix::new(gamma.n, gamma.t, dressed)?;
    let z = state.trace_factor * trace;
    Ok(z * z * purity(&dressed)?)
}

/// Coherence-subspace overlap `2‖(1 − Π_k) ρ Π_k‖_F` from trace identities.
///
/// With `P = Tr ρ²` and the two dressed purities `T₁`, `T₀`,
/// `C² = 2[P − (T₁ + T₀ − 2eP)/(e − 1)²]`: the bracket is the purity lost by
/// discarding the off-diagonal blocks.
pub fn cso(state: &GaussianOperator, spectrum: &OpenChainSpectrum, k: usize) -> Result<CsoValue> {
    cso_with_route(state, spectrum, k, ComposeRoute::default())
}

pub fn cso_with_route(
    state: &GaussianOperator,
    spectrum: &OpenChainSpectrum,
    k: usize,
    route: ComposeRoute,
) -> Result<CsoValue> {
    let q = mode_number_quadratic_form(spectrum, k)?;
    let value = cso_value(state, &q, route)?;
    Ok(CsoValue {
        value,
        k,
        t: state.gamma.t,
        method: CsoMethod::Gaussian,
    })
}

pub fn cso_value(state: &GaussianOperator, q: &RMatrix, route: ComposeRoute) -> Result<f64> {
    let e = std::f64::consts::E;
    let z = state.trace_factor;
    let p = z * z * purity(&state.gamma)?;
    let t_occ = dressed_purity_with_form(state, q, Dressing::Occupation, route)?;
    let t_hole = dressed_purity_with_form(state, q, Dressing::Hole, route)?;
    let bracket = p - (t_occ + t_hole - 2.0 * e * p) / ((e - 1.0) * (e - 1.0));
    if bracket < -1e-10 {
        return Err(Error::NegativeRadicand { value: bracket });
    }
    Ok((2.0 * bracket.max(0.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quench::{correlation_matrix, QuenchConfig};

    fn random_mixed_gamma(n: usize, seed: u64) -> CorrelationMatrix {
        // Γ = O diag(ν_j [[0,−i],[i,0]]) Oᵀ with O orthogonal from a QR of a
        // pseudo-random matrix
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = RMatrix::from_fn(2 * n, 2 * n, |_, _| next());
        let o = m.qr().q();
        let mut d = CMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            let nu = 0.9 * (next() + 0.5);
            d[(2 * j, 2 * j + 1)] = -I * nu;
            d[(2 * j + 1, 2 * j)] = I * nu;
        }
        let oc = linalg::to_complex(&o);
        CorrelationMatrix::new(n, 0.0, &oc * d * oc.transpose()).unwrap()
    }

    #[test]
    fn purity_examples() {
        assert!((purity(&CorrelationMatrix::vacuum(5)).unwrap() - 1.0).abs() < 1e-12);
        let mm = CorrelationMatrix::maximally_mixed(3);
        assert!((purity(&mm).unwrap() - 0.125).abs() < 1e-15);
        let g = random_mixed_gamma(3, 7);
        assert!((overlap_trace(&g, &g).unwrap() - purity(&g).unwrap()).abs() < 1e-12);
        assert!((overlap_trace(&g, &mm).unwrap() - 0.125).abs() < 1e-12);
    }

    #[test]
    fn overlap_is_symmetric() {
        let a = random_mixed_gamma(3, 1);
        let b = random_mixed_gamma(3, 2);
        let ab = overlap_trace(&a, &b).unwrap();
        let ba = overlap_trace(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-10);
    }

    #[test]
    fn kernel_round_trip() {
        let zero = kernel_from_gamma(&CorrelationMatrix::maximally_mixed(2), DEFAULT_CLIP);
        assert!(max_abs(&zero.w) < 1e-15);

        let mut g = CMatrix::zeros(2, 2);
        g[(0, 1)] = -I * 0.5;
        g[(1, 0)] = I * 0.5;
        let k = kernel_from_gamma(&CorrelationMatrix::new(1, 0.0, g).unwrap(), DEFAULT_CLIP);
        let (vals, _) = linalg::eigh(&k.w);
        assert!((vals[1] - 2.0 * 0.5f64.atanh()).abs() < 1e-12);

        for n in 1..=8 {
            let clip = 1e-10;
            let vac = CorrelationMatrix::vacuum(n);
            let k = kernel_from_gamma(&vac, clip);
            assert_eq!(k.clipped, 2 * n);
            let back = gamma_from_kernel(&k.w);
            assert!(max_abs(&(back - &vac.data)) <= 2.0 * clip);
        }
    }

    #[test]
    fn compose_identities() {
        let w = kernel_from_gamma(&random_mixed_gamma(2, 3), DEFAULT_CLIP).w;
        let zero = CMatrix::zeros(4, 4);
        assert!(max_abs(&(compose(&w, &zero).unwrap() - &w)) < 1e-9);
        assert!(max_abs(&compose(&w, &(-&w)).unwrap()) < 1e-9);
        let w2 = &w * c(0.3);
        assert!(max_abs(&(compose(&w, &w2).unwrap() - &w * c(1.3))) < 1e-10);
    }

    #[test]
    fn single_site_dressing_of_mixed_state() {
        let spectrum = OpenChainSpectrum::new(1, 2.0).unwrap();
        let state = GaussianOperator::state(CorrelationMatrix::maximally_mixed(1));
        let e = std::f64::consts::E;
        for route in [ComposeRoute::Cayley, ComposeRoute::KernelLog] {
            let t = dressed_purity(&state, &spectrum, 0, Dressing::Occupation, route).unwrap();
            assert!((t - (e * e + 1.0) / 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn cso_extremes() {
        let spectrum = OpenChainSpectrum::new(3, 1.4).unwrap();
        let mm = GaussianOperator::state(CorrelationMatrix::maximally_mixed(3));
        assert!(cso(&mm, &spectrum, 1).unwrap().value < 1e-9);
    }

    #[test]
    fn routes_agree_on_mixed_states() {
        let spectrum = OpenChainSpectrum::new(3, 1.2).unwrap();
        let state = GaussianOperator::state(random_mixed_gamma(3, 11));
        let q = mode_number_quadratic_form(&spectrum, 2).unwrap();
        let a = cso_value(&state, &q, ComposeRoute::Cayley).unwrap();
        let b = cso_value(&state, &q, ComposeRoute::KernelLog).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} {b}");
    }

    #[test]
    fn pure_state_cso_is_binary_entropy_form() {
        let spectrum = OpenChainSpectrum::new(4, 1.0).unwrap();
        let q = mode_number_quadratic_form(&spectrum, 1).unwrap();
        for t in [0.0, 0.3] {
            // the quench state of the infinite chain is mixed for t > 0, so
            // only t = 0 is pure
            let g = correlation_matrix(&QuenchConfig::new(4, 1.0, t)).unwrap();
            let state = GaussianOperator::state(g.clone());
            let v = cso_value(&state, &q, ComposeRoute::Cayley).unwrap();
            if t == 0.0 {
                let p = mode_occupation(&g, &q);
                assert!((v - 2.0 * (p * (1.0 - p)).sqrt()).abs() < 1e-8);
            }
            assert!((0.0..=1.0 + 1e-9).contains(&v));
        }
    }

    #[test]
    fn clip_insensitivity() {
        let spectrum = OpenChainSpectrum::new(2, 1.0).unwrap();
        let g = correlation_matrix(&QuenchConfig::new(2, 1.0, 0.7)).unwrap();
        let q = mode_number_quadratic_form(&spectrum, 0).unwrap();
        let v = |clip| {
            let s = GaussianOperator::state(g.clone()).with_kernel(clip);
            cso_value(&s, &q, ComposeRoute::KernelLog).unwrap()
        };
        assert!((v(1e-10) - v(1e-12)).abs() < 1e-7);
    }
}
