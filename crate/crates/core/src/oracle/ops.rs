//! Dense spin and fermion operators in the computational basis.
//!
//! Site 0 is the most significant bit. Bit 1 is spin up, which is the
//! occupied Jordan-Wigner fermion (`σᶻ = 2c†c − 1`).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, RMatrix, I};
use crate::modes::OpenChainSpectrum;

pub const MAX_SITES: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

#[inline]
pub(crate) fn bit(index: usize, site: usize, sites: usize) -> usize {
    (index >> (sites - 1 - site)) & 1
}

#[inline]
pub(crate) fn mask(site: usize, sites: usize) -> usize {
    1 << (sites - 1 - site)
}

/// `H = −J Σ σˣ_j σˣ_{j+1} + ξ J Σ σᶻ_j` with J = 1. Real symmetric.
pub fn build_hamiltonian(l: usize, xi: f64, boundary: Boundary) -> Result<RMatrix> {
    if l > MAX_SITES {
        return Err(Error::TooLarge { l, max: MAX_SITES });
    }
    if l == 0 {
        return Err(crate::error::invalid("chain needs at least one site"));
    }
    let dim = 1usize << l;
    let mut h = RMatrix::zeros(dim, dim);
    let bonds: Vec<(usize, usize)> = match boundary {
        Boundary::Open => (0..l.saturating_sub(1)).map(|j| (j, j + 1)).collect(),
        Boundary::Periodic => (0..l).map(|j| (j, (j + 1) % l)).filter(|(a, b)| a != b).collect(),
    };
    for x in 0..dim {
        let diag: f64 = (0..l).map(|j| 2.0 * bit(x, j, l) as f64 - 1.0).sum();
        h[(x, x)] += xi * diag;
        for &(a, b) in &bonds {
            let y = x ^ mask(a, l) ^ mask(b, l);
            h[(y, x)] -= 1.0;
        }
    }
    Ok(h)
}

/// Apply a Majorana operator to a basis state: `a_m |x⟩ = coeff |y⟩`.
///
/// `a_{2l} = S_l σʸ_l`, `a_{2l+1} = S_l σˣ_l`, `S_l = ∏_{j<l}(−σᶻ_j)`.
pub fn majorana_action(m: usize, x: usize, sites: usize) -> (usize, Complex64) {
    let l = m / 2;
    let mut coeff = c(1.0);
    for j in 0..l {
        // −σᶻ = +1 on empty, −1 on occupied
        if bit(x, j, sites) == 1 {
            coeff = -coeff;
        }
    }
    let y = x ^ mask(l, sites);
    if m.is_multiple_of(2) {
        // σʸ|0⟩ = −i|1⟩, σʸ|1⟩ = i|0⟩
        coeff *= if bit(x, l, sites) == 0 { -I } else { I };
    }
    (y, coeff)
}

pub fn majorana_matrix(m: usize, sites: usize) -> CMatrix {
    let dim = 1usize << sites;
    let mut out = CMatrix::zeros(dim, dim);
    for x in 0..dim {
        let (y, v) = majorana_action(m, x, sites);
        out[(y, x)] = v;
    }
    out
}

/// Annihilator `c_j = (a_{2j+1} − i a_{2j})/2`, which lowers bit j.
pub fn annihilator(j: usize, sites: usize) -> CMatrix {
    (majorana_matrix(2 * j + 1, sites) - majorana_matrix(2 * j, sites) * I) * c(0.5)
}

/// Single-site operator embedded in an n-site register.
pub fn site_operator(op: &CMatrix, site: usize, sites: usize) -> CMatrix {
    let dim = 1usize << sites;
    let mut out = CMatrix::zeros(dim, dim);
    for x in 0..dim {
        let b = bit(x, site, sites);
        for nb in 0..2 {
            let v = op[(nb, b)];
            if v != c(0.0) {
                let y = (x & !mask(site, sites)) | (nb << (sites - 1 - site));
                out[(y, x)] += v;
            }
        }
    }
    out
}

/// Pauli matrices in the (down, up) local basis.
pub fn pauli() -> [CMatrix; 3] {
    let z = c(0.0);
    [
        CMatrix::from_row_slice(2, 2, &[z, c(1.0), c(1.0), z]),
        CMatrix::from_row_slice(2, 2, &[z, I, -I, z]),
        CMatrix::from_row_slice(2, 2, &[c(-1.0), z, z, c(1.0)]),
    ]
}

/// `η_k = Σ_j (g_kj c_j + h_kj c_j†)` on the N-site register.
pub fn mode_operator(spectrum: &OpenChainSpectrum, k: usize) -> CMatrix {
    let n = spectrum.n;
    let dim = 1usize << n;
    let mut eta = CMatrix::zeros(dim, dim);
    for j in 0..n {
        let cj = annihilator(j, n);
        eta += &cj * c(spectrum.g[(k, j)]) + cj.adjoint() * c(spectrum.h[(k, j)]);
    }
    eta
}

/// `Π_k = η_k†η_k`.
pub fn mode_projector(spectrum: &OpenChainSpectrum, k: usize) -> CMatrix {
    let eta = mode_operator(spectrum, k);
    eta.adjoint() * eta
}

/// Product projector `⊗_i (1 + s_i d_i·σ)/2` with `s_i = +1` for bit 1.
pub fn local_projector(theta: &[f64], phi_az: &[f64], bits: &[u8]) -> CMatrix {
    let [sx, sy, sz] = pauli();
    let mut out = CMatrix::identity(1, 1);
    for i in 0..theta.len() {
        let s = if bits[i] == 1 { 1.0 } else { -1.0 };
        let d = [
            theta[i].sin() * phi_az[i].cos(),
            theta[i].sin() * phi_az[i].sin(),
            theta[i].cos(),
        ];
        let p = (CMatrix::identity(2, 2) + (&sx * c(d[0]) + &sy * c(d[1]) + &sz * c(d[2])) * c(s)) * c(0.5);
        out = out.kronecker(&p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigvalsh_real, max_abs};

    #[test]
    fn small_spectra() {
        let e = eigvalsh_real(&build_hamiltonian(1, 0.7, Boundary::Open).unwrap());
        assert!((e[0] + 0.7).abs() < 1e-14 && (e[1] - 0.7).abs() < 1e-14);
        let e = eigvalsh_real(&build_hamiltonian(2, 0.0, Boundary::Open).unwrap());
        for (a, b) in e.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(matches!(
            build_hamiltonian(15, 1.0, Boundary::Open),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn jordan_wigner_algebra() {
        let n = 3;
        let dim = 8;
        let id = CMatrix::identity(dim, dim);
        let [_, _, sz] = pauli();
        for j in 0..n {
            let cj = annihilator(j, n);
            let sz_j = site_operator(&sz, j, n);
            assert!(max_abs(&(sz_j - (cj.adjoint() * &cj * c(2.0) - &id))) < 1e-14);
            for l in 0..n {
                let cl = annihilator(l, n);
                let anti = &cj * cl.adjoint() + cl.adjoint() * &cj;
                let target = if j == l { id.clone() } else { CMatrix::zeros(dim, dim) };
                assert!(max_abs(&(anti - target)) < 1e-14);
            }
        }
        for m in 0..2 * n {
            let a = majorana_matrix(m, n);
            assert!(max_abs(&(&a - a.adjoint())) < 1e-14);
            assert!(max_abs(&(&a * &a - &id)) < 1e-14);
        }
    }

    #[test]
    fn modes_commute_with_isolated_chain() {
        for (n, xi) in [(2, 2.0), (3, 1.0), (4, 1.5)] {
            let s = OpenChainSpectrum::new(n, xi).unwrap();
            let h = crate::linalg::to_complex(&build_hamiltonian(n, xi, Boundary::Open).unwrap());
            for k in 0..n {
                let p = mode_projector(&s, k);
                assert!(max_abs(&(&h * &p - &p * &h)) < 1e-10);
                let eta_dag = mode_operator(&s, k).adjoint();
                let comm = &h * &eta_dag - &eta_dag * &h;
                assert!(max_abs(&(comm - &eta_dag * c(s.lambda[k]))) < 1e-10);
            }
        }
    }
}
