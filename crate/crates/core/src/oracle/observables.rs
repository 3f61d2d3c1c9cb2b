use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::gaussian::{kernel_from_gamma, CsoMethod, CsoValue};
use crate::linalg::{c, eigh, expm, CMatrix};
use crate::modes::OpenChainSpectrum;
use crate::practical::OutcomeString;
use crate::quench::CorrelationMatrix;

use super::ops::{majorana_action, majorana_matrix, mode_projector};
use super::state::DenseRdm;

pub const MAX_DENSE_CSO_SITES: usize = 10;

/// `Γ_jl = Tr(ρ a_l a_j) − δ_jl` straight from the density matrix.
pub fn dense_gamma(rdm: &DenseRdm, t: f64) -> CorrelationMatrix {
    let n = rdm.n;
    let dim = 1usize << n;
    let mut g = CMatrix::zeros(2 * n, 2 * n);
    for j in 0..2 * n {
        for l in 0..2 * n {
            let mut acc = c(0.0);
            for x in 0..dim {
                let (y1, c1) = majorana_action(j, x, n);
                let (y2, c2) = majorana_action(l, y1, n);
                // ⟨x|ρ a_l a_j|x⟩ = c1 c2 ρ[x, y2]
                acc += c1 * c2 * rdm.matrix[(x, y2)];
            }
            g[(j, l)] = acc - if j == l { c(1.0) } else { c(0.0) };
        }
    }
    CorrelationMatrix { n, t, data: g }
}

pub fn dense_expectation(rdm: &DenseRdm, op: &CMatrix) -> f64 {
    (&rdm.matrix * op).trace().re
}

fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `2‖(1 − Π_k) ρ Π_k‖_F`.
pub fn dense_cso(rdm: &DenseRdm, spectrum: &OpenChainSpectrum, k: usize, t: f64) -> Result<CsoValue> {
    if rdm.n > MAX_DENSE_CSO_SITES {
        return Err(invalid(format!(
            "dense coherence measure limited to N <= {MAX_DENSE_CSO_SITES}"
        )));
    }
    spectrum.check_mode(k)?;
    let p = mode_projector(spectrum, k);
    Ok(CsoValue {
        value: dense_cso_with_projector(rdm, &p),
        k,
        t,
        method: CsoMethod::Dense,
    })
}

pub fn dense_cso_with_projector(rdm: &DenseRdm, p: &CMatrix) -> f64 {
    let dim = p.nrows();
    let q = CMatrix::identity(dim, dim) - p;
    2.0 * frobenius(&(q * &rdm.matrix * p))
}

/// `√2 (Tr ρ² − Tr ρ_bd²)^{1/2}` with `ρ_bd = ΠρΠ + (1−Π)ρ(1−Π)`.
pub fn dense_cso_purity_form(rdm: &DenseRdm, p: &CMatrix) -> f64 {
    let dim = p.nrows();
    let q = CMatrix::identity(dim, dim) - p;
    let bd = p * &rdm.matrix * p + &q * &rdm.matrix * &q;
    let diff = rdm.purity() - (&bd * &bd).trace().re;
    (2.0 * diff.max(0.0)).sqrt()
}

/// Boundary weight of the maximal uniform-component split,
/// `α = 1 − 2^N λ_min(ρ)`.
pub fn dense_alpha(rdm: &DenseRdm) -> f64 {
    let lmin = rdm.eigenvalues()[0];
    (1.0 - (1usize << rdm.n) as f64 * lmin).clamp(0.0, 1.0)
}

/// Dense Gaussian state `ρ ∝ exp(¼ aᵀ W a)` with `W = 2 artanh Γ`.
pub fn gaussian_rdm(gamma: &CorrelationMatrix, clip: f64) -> DenseRdm {
    let n = gamma.n;
    let w = kernel_from_gamma(gamma, clip).w;
    let majoranas: Vec<CMatrix> = (0..2 * n).map(|m| majorana_matrix(m, n)).collect();
    let dim = 1usize << n;
    let mut bilinear = CMatrix::zeros(dim, dim);
    for a in 0..2 * n {
        for b in 0..2 * n {
            if w[(a, b)].norm() > 0.0 {
                bilinear += &majoranas[a] * &majoranas[b] * w[(a, b)];
            }
        }
    }
    let rho = expm(&(bilinear * c(0.25)));
    let tr = rho.trace();
    DenseRdm {
        n,
        matrix: rho / tr,
    }
}

/// `z`-basis shots drawn by the Born rule from the diagonal of ρ.
pub fn sample_z_outcomes(rdm: &DenseRdm, shots: u64, seed: u64) -> Vec<(OutcomeString, u64)> {
    let dim = 1usize << rdm.n;
    let probs: Vec<f64> = (0..dim).map(|x| rdm.matrix[(x, x)].re.max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    let mut counts = vec![0u64; dim];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..shots {
        let mut u = rng.random::<f64>() * total;
        let mut pick = dim - 1;
        for (x, p) in probs.iter().enumerate() {
            if u < *p {
                pick = x;
                break;
            }
            u -= p;
        }
        counts[pick] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .map(|(x, c)| (OutcomeString::from_index(rdm.n, x), c))
        .collect()
}

/// Spectral norm of a Hermitian or anti-Hermitian matrix.
pub fn normal_operator_norm(m: &CMatrix) -> f64 {
    // i·(anti-Hermitian) is Hermitian; use whichever part dominates
    let herm = (m + m.adjoint()) * c(0.5);
    let anti = (m - m.adjoint()) * crate::linalg::I * c(-0.5);
    let h = if crate::linalg::max_abs(&herm) >= crate::linalg::max_abs(&anti) {
        herm
    } else {
        anti
    };
    eigh(&h).0.iter().fold(0.0, |a, e| a.max(e.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn vacuum_gamma() {
        let mut rho = CMatrix::zeros(8, 8);
        rho[(0, 0)] = c(1.0);
        let g = dense_gamma(&DenseRdm::new(3, rho).unwrap(), 0.0);
        assert!(max_abs(&(g.data - CorrelationMatrix::vacuum(3).data)) < 1e-15);
    }

    #[test]
    fn gaussian_reconstruction_round_trips() {
        let mut g = CorrelationMatrix::vacuum(2);
        g.data *= c(0.6);
        g.data[(0, 3)] = c(0.0) + crate::linalg::I * 0.2;
        g.data[(3, 0)] = -g.data[(0, 3)];
        let rho = gaussian_rdm(&g, 1e-12);
        let back = dense_gamma(&rho, 0.0);
        assert!(max_abs(&(back.data - g.data)) < 1e-12);
    }

    #[test]
    fn cso_forms_agree_and_vanish_without_coherence() {
        let s = OpenChainSpectrum::new(2, 1.0).unwrap();
        let p = mode_projector(&s, 0);
        let mm = DenseRdm::maximally_mixed(2);
        assert!(dense_cso_with_projector(&mm, &p) < 1e-14);
        let rho = gaussian_rdm(&{
            let mut g = CorrelationMatrix::vacuum(2);
            g.data *= c(0.8);
            g
        }, 1e-12);
        let a = dense_cso_with_projector(&rho, &p);
        let b = dense_cso_purity_form(&rho, &p);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn alpha_edges() {
        assert!(dense_alpha(&DenseRdm::maximally_mixed(3)) < 1e-14);
        let mut rho = CMatrix::zeros(4, 4);
        rho[(1, 1)] = c(1.0);
        assert!((dense_alpha(&DenseRdm::new(2, rho).unwrap()) - 1.0).abs() < 1e-14);
    }
}
