//! Majorana correlation matrix of an N-site block after the quench from the
//! fully polarized state (ξ₀ → ∞) to finite ξ.
//!
//! The matrix is block-Toeplitz, `Γ[2j..2j+2, 2l..2l+2] = Γ_{j−l}`, with
//! `Γ_l = (i/π) ∫₀^π dk [[−f, g₋], [g₊, f]]`. A chain of finite even length L
//! replaces the integral by `(2/L) Σ` over the half-integer momenta
//! `k = 2π(n + ½)/L`, n < L/2, which is exact for the periodic chain.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{max_abs, CMatrix, I};
use crate::quadrature;

pub type Block = Matrix2<Complex64>;

pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchConfig {
    pub xi: f64,
    pub n: usize,
    pub t: f64,
    /// Finite periodic chain length; `None` is the infinite chain.
    pub l: Option<usize>,
    pub quad_tol: f64,
}

impl QuenchConfig {
    pub fn new(n: usize, xi: f64, t: f64) -> Self {
        Self {
            xi,
            n,
            t,
            l: None,
            quad_tol: DEFAULT_QUAD_TOL,
        }
    }

    pub fn with_length(mut self, l: usize) -> Self {
        self.l = Some(l);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(invalid(format!("xi = {} must be positive and finite", self.xi)));
        }
        if self.n == 0 {
            return Err(invalid("N must be at least 1"));
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(invalid(format!("t = {} must be non-negative", self.t)));
        }
        if self.quad_tol.is_nan() || self.quad_tol <= 0.0 {
            return Err(invalid("quad_tol must be positive"));
        }
        if let Some(l) = self.l {
            if l % 2 != 0 || l <= self.n {
                return Err(invalid(format!(
                    "chain length L = {l} must be even and exceed N = {}",
                    self.n
                )));
            }
        }
        Ok(())
    }
}

/// 2N×2N matrix `Γ_jl = ⟨a_l a_j⟩ − δ_jl`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub n: usize,
    pub t: f64,
    pub data: CMatrix,
}

impl CorrelationMatrix {
    pub fn new(n: usize, t: f64, data: CMatrix) -> Result<Self> {
        if data.nrows() != 2 * n || data.ncols() != 2 * n {
            return Err(invalid(format!(
                "correlation matrix must be {0}x{0}, got {1}x{2}",
                2 * n,
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { n, t, data })
    }

    /// Fully polarized product state: `[[0, −i], [i, 0]]` on the diagonal.
    pub fn vacuum(n: usize) -> Self {
        let mut data = CMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            data[(2 * j, 2 * j + 1)] = -I;
            data[(2 * j + 1, 2 * j)] = I;
        }
        Self { n, t: 0.0, data }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self {
            n,
            t: 0.0,
            data: CMatrix::zeros(2 * n, 2 * n),
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Largest violation among antisymmetry, vanishing real parts and the
    /// spectral bound `|spec(iΓ)| ≤ 1`.
    pub fn invariant_violation(&self) -> f64 {
        let anti = max_abs(&(&self.data + self.data.transpose()));
        let real = self.data.iter().fold(0.0f64, |a, z| a.max(z.re.abs()));
        let (eigs, _) = crate::linalg::eigh(&self.data);
        let over = eigs.iter().fold(0.0f64, |a, e| a.max(e.abs() - 1.0));
        anti.max(real).max(over)
    }

    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let v = self.invariant_violation();
        if v > tol {
            return Err(invalid(format!(
                "correlation matrix violates its invariants by {v:e}"
            )));
        }
        Ok(())
    }
}

/// `θ_k` with `e^{iθ} = (ξ − e^{ik}) / |ξ − e^{ik}|`.
pub fn bogoliubov_angle(k: f64, xi: f64) -> Result<f64> {
    if radius(k, xi) < 1e-14 {
        return Err(Error::GaplessPoint { k, xi });
    }
    Ok((-k.sin()).atan2(xi_minus_cos(k, xi)))
}

pub fn dispersion(k: f64, xi: f64) -> f64 {
    2.0 * radius(k, xi)
}

// Half-angle forms keep ξ − cos k accurate near k = 0 at the critical point.
fn xi_minus_cos(k: f64, xi: f64) -> f64 {
    let s = (0.5 * k).sin();
    (xi - 1.0) + 2.0 * s * s
}

/// `√(1 + ξ² − 2ξ cos k)`.
fn radius(k: f64, xi: f64) -> f64 {
    let s = (0.5 * k).sin();
    ((xi - 1.0) * (xi - 1.0) + 4.0 * xi * s * s).max(0.0).sqrt()
}

fn angle_cos_sin(k: f64, xi: f64) -> (f64, f64) {
    let r = radius(k, xi);
    if r == 0.0 {
        return (1.0, 0.0);
    }
    (xi_minus_cos(k, xi) / r, -k.sin() / r)
}

/// Real integrand entries `[−f, g₋, g₊, f]`; `None` for `t` drops the
/// oscillating terms (the dephased, infinite-time limit).
fn integrand(k: f64, l: i64, t: Option<f64>, xi: f64) -> [f64; 4] {
    let (ct, st) = angle_cos_sin(k, xi);
    let kl = k * l as f64;
    let (ckl, skl) = (kl.cos(), kl.sin());
    // cos(θ ∓ kl), sin(θ ∓ kl)
    let c_minus = ct * ckl + st * skl;
    let c_plus = ct * ckl - st * skl;
    let s_minus = st * ckl - ct * skl;
    let s_plus = st * ckl + ct * skl;
    let (c2, s2) = match t {
        Some(t) => {
            let w = 2.0 * dispersion(k, xi) * t;
            (w.cos(), w.sin())
        }
        None => (0.0, 0.0),
    };
    let f = skl * st * s2;
    let gp = ct * c_minus + c2 * st * s_minus;
    let gm = -(ct * c_plus + c2 * st * s_plus);
    [-f, gm, gp, f]
}

/// Time derivative of [`integrand`].
fn integrand_dt(k: f64, l: i64, t: f64, xi: f64) -> [f64; 4] {
    let (ct, st) = angle_cos_sin(k, xi);
    let kl = k * l as f64;
    let (ckl, skl) = (kl.cos(), kl.sin());
    let s_minus = st * ckl - ct * skl;
    let s_plus = st * ckl + ct * skl;
    let e2 = 2.0 * dispersion(k, xi);
    let (c2, s2) = ((e2 * t).cos(), (e2 * t).sin());
    let df = skl * st * e2 * c2;
    let dgp = -e2 * s2 * st * s_minus;
    let dgm = e2 * s2 * st * s_plus;
    [-df, dgm, dgp, df]
}

fn to_block(v: [f64; 4], scale: f64) -> Block {
    let s = I * scale;
    Block::new(s * v[0], s * v[1], s * v[2], s * v[3])
}

fn initial_panels(t: f64, xi: f64) -> usize {
    let eps_pi = dispersion(PI, xi);
    16usize.max((8.0 * t * eps_pi).ceil() as usize)
}

type CacheKey = (i64, u64, u64, u64);

fn cache() -> &'static Mutex<HashMap<CacheKey, Block>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Block>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

const CACHE_LIMIT: usize = 1 << 18;

/// Stationary blocks use the time key `u64::MAX` (not a valid f64 bit
/// pattern for a non-negative time).
fn cached(key: CacheKey, compute: impl FnOnce() -> Result<Block>) -> Result<Block> {
    if let Some(b) = cache().lock().expect("block cache poisoned").get(&key) {
        return Ok(*b);
    }
    let block = compute()?;
    let mut map = cache().lock().expect("block cache poisoned");
    if map.len() >= CACHE_LIMIT {
        map.clear();
    }
    map.insert(key, block);
    Ok(block)
}

/// Block `Γ_l(t)` of the infinite chain, integrated to absolute error `quad_tol`.
pub fn gamma_block(l: i64, t: f64, xi: f64, quad_tol: f64) -> Result<Block> {
    let key = (l, t.to_bits(), xi.to_bits(), quad_tol.to_bits());
    cached(key, || {
        // the integral carries 1/π, so the raw integral needs π·tol
        let v = quadrature::integrate(
            |k| integrand(k, l, Some(t), xi),
            0.0,
            PI,
            initial_panels(t, xi),
            quad_tol * PI,
        )?;
        Ok(to_block(v, 1.0 / PI))
    })
}

/// `dΓ_l/dt` from the analytic time derivative of the integrand.
pub fn gamma_block_dt(l: i64, t: f64, xi: f64, quad_tol: f64) -> Result<Block> {
    let v = quadrature::integrate(
        |k| integrand_dt(k, l, t, xi),
        0.0,
        PI,
        initial_panels(t, xi),
        quad_tol * PI,
    )?;
    Ok(to_block(v, 1.0 / PI))
}

/// Infinite-time block: the oscillating terms dephase away.
pub fn stationary_block(l: i64, xi: f64, quad_tol: f64) -> Result<Block> {
    let key = (l, u64::MAX, xi.to_bits(), quad_tol.to_bits());
    cached(key, || {
        let v = quadrature::integrate(|k| integrand(k, l, None, xi), 0.0, PI, 16, quad_tol * PI)?;
        Ok(to_block(v, 1.0 / PI))
    })
}

/// Block `Γ_l(t)` of the periodic chain of length `len`.
pub fn finite_l_block(l: i64, t: f64, xi: f64, len: usize) -> Block {
    let mut acc = [0.0; 4];
    for m in 0..len / 2 {
        let k = 2.0 * PI * (m as f64 + 0.5) / len as f64;
        let v = integrand(k, l, Some(t), xi);
        for d in 0..4 {
            acc[d] += v[d];
        }
    }
    to_block(acc, 2.0 / len as f64)
}

pub fn assemble(n: usize, t: f64, block: impl Fn(i64) -> Block) -> CorrelationMatrix {
    let mut data = CMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for l in 0..n {
            let b = block(j as i64 - l as i64);
            for r in 0..2 {
                for c in 0..2 {
                    data[(2 * j + r, 2 * l + c)] = b[(r, c)];
                }
            }
        }
    }
    CorrelationMatrix { n, t, data }
}

fn assemble_from(n: usize, t: f64, offsets: Vec<(i64, Block)>) -> CorrelationMatrix {
    let map: HashMap<i64, Block> = offsets.into_iter().collect();
    assemble(n, t, |l| map[&l])
}

fn offsets(n: usize) -> Vec<i64> {
    let m = n as i64 - 1;
    (-m..=m).collect()
}

/// Γ(t) for the configured chain; dispatches to the momentum sum when a
/// finite length is set.
pub fn correlation_matrix(config: &QuenchConfig) -> Result<CorrelationMatrix> {
    config.validate()?;
    if config.l.is_some() {
        return finite_l_correlation_matrix(config);
    }
    let blocks = offsets(config.n)
        .into_par_iter()
        .map(|l| gamma_block(l, config.t, config.xi, config.quad_tol).map(|b| (l, b)))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_from(config.n, config.t, blocks))
}

/// Infinite-time limit of Γ(t) for the infinite chain.
pub fn stationary_correlation_matrix(n: usize, xi: f64, quad_tol: f64) -> Result<CorrelationMatrix> {
    QuenchConfig {
        quad_tol,
        ..QuenchConfig::new(n, xi, 0.0)
    }
    .validate()?;
    let blocks = offsets(n)
        .into_par_iter()
        .map(|l| stationary_block(l, xi, quad_tol).map(|b| (l, b)))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_from(n, f64::INFINITY, blocks))
}

pub fn finite_l_correlation_matrix(config: &QuenchConfig) -> Result<CorrelationMatrix> {
    config.validate()?;
    let len = config
        .l
        .ok_or_else(|| invalid("finite-length correlation matrix needs L"))?;
    Ok(assemble(config.n, config.t, |l| {
        finite_l_block(l, config.t, config.xi, len)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vacuum_block() -> Block {
        Block::new(Complex64::new(0.0, 0.0), -I, I, Complex64::new(0.0, 0.0))
    }

    fn block_dist(a: &Block, b: &Block) -> f64 {
        (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    #[test]
    fn angle_examples() {
        assert!(bogoliubov_angle(1.3, 1e6).unwrap().abs() < 1e-5);
        assert!(bogoliubov_angle(PI, 1.0).unwrap().abs() < 1e-15);
        let th = bogoliubov_angle(PI / 2.0, 2.0).unwrap();
        assert!((th - (-1f64).atan2(2.0)).abs() < 1e-15);
        assert!(matches!(
            bogoliubov_angle(0.0, 1.0),
            Err(Error::GaplessPoint { .. })
        ));
    }

    #[test]
    fn dispersion_examples() {
        assert!((dispersion(PI, 1.0) - 4.0).abs() < 1e-15);
        assert_eq!(dispersion(0.0, 1.0), 0.0);
        assert!((dispersion(PI, 1.2) - 4.4).abs() < 1e-14);
        assert!((dispersion(0.0, 1.7) - 1.4).abs() < 1e-14);
    }

    #[test]
    fn initial_blocks() {
        for xi in [0.5, 1.0, 1.7] {
            let b0 = gamma_block(0, 0.0, xi, 1e-10).unwrap();
            assert!(block_dist(&b0, &vacuum_block()) < 1e-10);
            for l in [1, -1, 3] {
                let b = gamma_block(l, 0.0, xi, 1e-10).unwrap();
                assert!(block_dist(&b, &Block::zeros()) < 1e-10);
            }
        }
    }

    #[test]
    fn infinite_chain_matches_long_ring() {
        let b = gamma_block(1, 0.5, 1.0, 1e-11).unwrap();
        let r = finite_l_block(1, 0.5, 1.0, 4096);
        assert!(block_dist(&b, &r) < 1e-6);
    }

    #[test]
    fn finite_ring_at_zero_time_is_vacuum() {
        let g = finite_l_correlation_matrix(&QuenchConfig::new(2, 1.0, 0.0).with_length(8)).unwrap();
        assert!(max_abs(&(g.data - CorrelationMatrix::vacuum(2).data)) < 1e-12);
    }

    #[test]
    fn ring_convergence_is_monotone() {
        let cfg = QuenchConfig::new(4, 1.0, 1.0);
        let reference = finite_l_correlation_matrix(&cfg.with_length(4096)).unwrap();
        let d = |len| {
            let g = finite_l_correlation_matrix(&cfg.with_length(len)).unwrap();
            max_abs(&(g.data - &reference.data))
        };
        assert!(d(128) < d(64));
    }

    #[test]
    fn analytic_derivative_matches_finite_difference() {
        for (l, t) in [(0i64, 1e-3), (1, 1e-3), (2, 0.4)] {
            let h = 1e-4;
            let fwd = gamma_block(l, t + h, 1.0, 1e-11).unwrap();
            let bwd = gamma_block(l, t - h, 1.0, 1e-11).unwrap();
            let fd = (fwd - bwd) / Complex64::new(2.0 * h, 0.0);
            let an = gamma_block_dt(l, t, 1.0, 1e-11).unwrap();
            assert!(block_dist(&fd, &an) < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(QuenchConfig::new(4, 1.0, 1.0).with_length(7).validate().is_err());
        assert!(QuenchConfig::new(4, 1.0, 1.0).with_length(4).validate().is_err());
        assert!(QuenchConfig::new(4, -1.0, 1.0).validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn constructed_matrices_satisfy_invariants(
            n in 1usize..6, xi in 0.3f64..2.5, t in 0.0f64..4.0, len_half in 4usize..20
        ) {
            let g = correlation_matrix(&QuenchConfig::new(n, xi, t)).unwrap();
            prop_assert!(g.invariant_violation() < 1e-9);
            let len = 2 * len_half.max(n + 1);
            let gl = finite_l_correlation_matrix(&QuenchConfig::new(n, xi, t).with_length(len)).unwrap();
            prop_assert!(gl.invariant_violation() < 1e-10);
        }
    }
}
