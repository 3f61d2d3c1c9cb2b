//! Realizing the mode measurement with local single-spin measurements.
//!
//! A local outcome string `n` selects the product projector
//! `Π_n = ⊗_i (1 + s_i d_i·σ_i)/2` with `s_i = +1` for bit 1. Its overlap
//! `Tr(Π_k Π_n)` with the mode projector decides how well the string
//! witnesses `Π_k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::RMatrix;
use crate::modes::{mode_number_quadratic_form, OpenChainSpectrum};

pub const MAX_OPTIMIZE_SITES: usize = 10;

/// Site 0 is the most significant bit of [`OutcomeString::index`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OutcomeString {
    pub bits: Vec<u8>,
}

impl OutcomeString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(invalid("outcome bits must be 0 or 1"));
        }
        Ok(Self { bits })
    }

    pub fn from_index(n: usize, index: usize) -> Self {
        Self {
            bits: (0..n).map(|i| ((index >> (n - 1 - i)) & 1) as u8).collect(),
        }
    }

    pub fn index(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn all(n: usize) -> impl Iterator<Item = OutcomeString> {
        (0..1usize << n).map(move |i| OutcomeString::from_index(n, i))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// `±1` form: bit 1 maps to +1.
    pub fn signs(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| if b == 1 { 1.0 } else { -1.0 }).collect()
    }
}

impl std::fmt::Display for OutcomeString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalBasis {
    /// Polar angles in [0, π].
    pub theta: Vec<f64>,
    /// Azimuths in [0, 2π).
    pub phi_az: Vec<f64>,
}

impl LocalBasis {
    pub fn z(n: usize) -> Self {
        Self {
            theta: vec![0.0; n],
            phi_az: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Fold angles into their canonical ranges.
    pub fn normalized(mut self) -> Self {
        use std::f64::consts::{PI, TAU};
        for i in 0..self.theta.len() {
            let mut th = self.theta[i].rem_euclid(TAU);
            let mut ph = self.phi_az[i];
            if th > PI {
                th = TAU - th;
                ph += PI;
            }
            self.theta[i] = th;
            self.phi_az[i] = ph.rem_euclid(TAU);
        }
        self
    }

    fn axis(&self, i: usize) -> [f64; 3] {
        let (st, ct) = self.theta[i].sin_cos();
        let (sp, cp) = self.phi_az[i].sin_cos();
        [st * cp, st * sp, ct]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspacePartition {
    pub eps: f64,
    /// Overlap with `Π_k` at least `1 − ε`.
    pub plus_set: Vec<OutcomeString>,
    /// Overlap with `Π_k` at most `ε`.
    pub minus_set: Vec<OutcomeString>,
    pub exhaustive: bool,
}

/// `Tr(Π_k Π_n) = ½(1 + Σ_i (−1)^{n_i}(h_ki² − g_ki²))` for occupation strings.
pub fn z_basis_overlap(spectrum: &OpenChainSpectrum, k: usize, outcome: &OutcomeString) -> Result<f64> {
    spectrum.check_mode(k)?;
    check_len(spectrum.n, outcome.len())?;
    let s: f64 = outcome
        .bits
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let d = spectrum.h[(k, i)].powi(2) - spectrum.g[(k, i)].powi(2);
            if b == 0 {
                d
            } else {
                -d
            }
        })
        .sum();
    Ok((0.5 * (1.0 + s)).clamp(0.0, 1.0))
}

fn check_len(n: usize, got: usize) -> Result<()> {
    if n != got {
        return Err(invalid(format!("expected {n} sites, got {got}")));
    }
    Ok(())
}

/// `max(0, o·P_min − √(o(1 − o)))`.
pub fn proj_confirm_bound(overlap: f64, p_min: f64) -> f64 {
    let o = overlap.clamp(0.0, 1.0);
    (o * p_min - (o * (1.0 - o)).sqrt()).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomographyEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// `Tr(ρ Π_k) ≈ Σ_n f_n Tr(Π_n Π_k)` from z-basis shot counts, with the
/// multinomial standard error of that linear combination.
pub fn tomography_estimate(
    counts: &[(OutcomeString, u64)],
    spectrum: &OpenChainSpectrum,
    k: usize,
) -> Result<TomographyEstimate> {
    let total: u64 = counts.iter().map(|(_, c)| c).sum();
    if total == 0 {
        return Err(Error::EmptySample);
    }
    let r = total as f64;
    let (mut mean, mut second) = (0.0, 0.0);
    for (outcome, count) in counts {
        let o = z_basis_overlap(spectrum, k, outcome)?;
        let f = *count as f64 / r;
        mean += f * o;
        second += f * o * o;
    }
    Ok(TomographyEstimate {
        estimate: mean.clamp(0.0, 1.0),
        stderr: ((second - mean * mean).max(0.0) / r).sqrt(),
    })
}

/// Per-site expectations `⟨σ^a⟩` for the product state of one outcome.
fn site_expectations(basis: &LocalBasis, signs: &[f64]) -> Vec<[f64; 3]> {
    (0..basis.len())
        .map(|i| basis.axis(i).map(|d| signs[i] * d))
        .collect()
}

/// `⟨a_m a_n⟩` in a product spin state with Bloch vectors `s`.
///
/// `a_{2l} = S_l σʸ_l`, `a_{2l+1} = S_l σˣ_l`, `S_l = ∏_{j<l} (−σᶻ_j)`. For
/// sites `l < l′` the strings leave `σ^α_l (−σᶻ_l) ∏_{l<j<l′} (−σᶻ_j) σ^β_{l′}`,
/// and `σʸσᶻ = iσˣ`, `σˣσᶻ = −iσʸ`.
fn majorana_two_point(s: &[[f64; 3]]) -> Vec<Vec<num_complex::Complex64>> {
    use num_complex::Complex64 as C;
    let n = s.len();
    let dim = 2 * n;
    let mut out = vec![vec![C::new(0.0, 0.0); dim]; dim];
    let (x, y, z) = (0, 1, 2);
    for l in 0..n {
        out[2 * l][2 * l] = C::new(1.0, 0.0);
        out[2 * l + 1][2 * l + 1] = C::new(1.0, 0.0);
        out[2 * l][2 * l + 1] = C::new(0.0, -s[l][z]);
        out[2 * l + 1][2 * l] = C::new(0.0, s[l][z]);
        // σʸ(−σᶻ) = −iσˣ, σˣ(−σᶻ) = iσʸ
        let left = [C::new(0.0, -s[l][x]), C::new(0.0, s[l][y])];
        let mut string = 1.0;
        for lp in l + 1..n {
            let right = [s[lp][y], s[lp][x]];
            for (a, la) in left.iter().enumerate() {
                for (b, rb) in right.iter().enumerate() {
                    let v = la * string * rb;
                    out[2 * l + a][2 * lp + b] = v;
                    out[2 * lp + b][2 * l + a] = -v;
                }
            }
            string *= -s[lp][z];
        }
    }
    out
}

fn overlap_from_form(q: &RMatrix, basis: &LocalBasis, outcome: &OutcomeString) -> f64 {
    let s = site_expectations(basis, &outcome.signs());
    let two = majorana_two_point(&s);
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    for m in 0..q.nrows() {
        for n in 0..q.ncols() {
            if q[(m, n)] != 0.0 {
                acc += q[(m, n)] * two[m][n];
            }
        }
    }
    (0.5 + (num_complex::Complex64::new(0.0, 0.25) * acc).re).clamp(0.0, 1.0)
}

/// `Tr(Π_k Π_n(θ, φ))` for the product projector along the local axes.
pub fn general_axis_overlap(
    spectrum: &OpenChainSpectrum,
    k: usize,
    basis: &LocalBasis,
    outcome: &OutcomeString,
) -> Result<f64> {
    check_len(spectrum.n, basis.len())?;
    check_len(spectrum.n, outcome.len())?;
    let q = mode_number_quadratic_form(spectrum, k)?;
    Ok(overlap_from_form(&q, basis, outcome))
}

/// Overlaps for every outcome string, indexed by [`OutcomeString::index`].
pub fn all_overlaps(spectrum: &OpenChainSpectrum, k: usize, basis: &LocalBasis) -> Result<Vec<f64>> {
    check_len(spectrum.n, basis.len())?;
    let q = mode_number_quadratic_form(spectrum, k)?;
    Ok(OutcomeString::all(spectrum.n)
        .map(|o| overlap_from_form(&q, basis, &o))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisObjective {
    /// `Σ_n o_n(1 − o_n)`, in `[0, 2^{N−2}]`.
    VarianceL,
    /// `max_n min(o_n, 1 − o_n)`: the smallest ε with an exhaustive partition.
    PartitionEps,
}

pub fn objective_value(overlaps: &[f64], objective: BasisObjective) -> f64 {
    match objective {
        BasisObjective::VarianceL => overlaps.iter().map(|o| o * (1.0 - o)).sum(),
        BasisObjective::PartitionEps => overlaps.iter().map(|o| o.min(1.0 - o)).fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub objective: BasisObjective,
    /// Total objective evaluations across all starts.
    pub budget: usize,
    pub starts: usize,
    pub seed: u64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            objective: BasisObjective::VarianceL,
            budget: 20_000,
            starts: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedBasis {
    pub basis: LocalBasis,
    pub objective: f64,
    pub baseline: f64,
    pub evaluations: usize,
}

struct Search<'a> {
    q: &'a RMatrix,
    n: usize,
    objective: BasisObjective,
    budget: usize,
    used: usize,
}

impl Search<'_> {
    fn eval(&mut self, basis: &LocalBasis) -> Option<f64> {
        if self.used >= self.budget {
            return None;
        }
        self.used += 1;
        let overlaps: Vec<f64> = OutcomeString::all(self.n)
            .map(|o| overlap_from_form(self.q, basis, &o))
            .collect();
        Some(objective_value(&overlaps, self.objective))
    }

    /// Coordinate descent; each coordinate gets a coarse scan over its full
    /// period and a golden-section refinement around the best sample.
    /// Returns `None` when the budget runs out, leaving the best point in
    /// `basis`.
    fn descend(&mut self, basis: &mut LocalBasis, value: &mut f64) -> Option<()> {
        const SCAN: usize = 12;
        let invphi = (5f64.sqrt() - 1.0) / 2.0;
        for _sweep in 0..60 {
            let before = *value;
            for coord in 0..2 * self.n {
                let (site, is_theta) = (coord / 2, coord % 2 == 0);
                let period = std::f64::consts::TAU;
                let set = |b: &mut LocalBasis, v: f64| {
                    if is_theta {
                        b.theta[site] = v;
                    } else {
                        b.phi_az[site] = v;
                    }
                };
                let current = if is_theta { basis.theta[site] } else { basis.phi_az[site] };
                let mut trial = basis.clone();
                let mut best = (current, *value);
                for s in 1..SCAN {
                    let v = current + period * s as f64 / SCAN as f64;
                    set(&mut trial, v);
                    let f = self.eval(&trial)?;
                    if f < best.1 {
                        best = (v, f);
                    }
                }
                let h = period / SCAN as f64;
                let (mut a, mut b) = (best.0 - h, best.0 + h);
                let mut x1 = b - invphi * (b - a);
                let mut x2 = a + invphi * (b - a);
                set(&mut trial, x1);
                let mut f1 = self.eval(&trial)?;
                set(&mut trial, x2);
                let mut f2 = self.eval(&trial)?;
                while b - a > 1e-7 {
                    if f1 < f2 {
                        b = x2;
                        x2 = x1;
                        f2 = f1;
                        x1 = b - invphi * (b - a);
                        set(&mut trial, x1);
                        f1 = self.eval(&trial)?;
                    } else {
                        a = x1;
                        x1 = x2;
                        f1 = f2;
                        x2 = a + invphi * (b - a);
                        set(&mut trial, x2);
                        f2 = self.eval(&trial)?;
                    }
                }
                for (x, f) in [(x1, f1), (x2, f2)] {
                    if f < best.1 {
                        best = (x, f);
                    }
                }
                if best.1 < *value {
                    set(basis, best.0);
                    *value = best.1;
                }
            }
            if before - *value <= 1e-13 * before.max(1e-300) {
                break;
            }
        }
        Some(())
    }
}

/// Multi-start coordinate descent over the 2N local angles. Start 0 is the
/// z basis, so the result never does worse than it; further starts are
/// drawn from a ChaCha8 stream keyed by `seed` and the start index.
pub fn optimize_basis(
    spectrum: &OpenChainSpectrum,
    k: usize,
    options: &OptimizeOptions,
) -> Result<OptimizedBasis> {
    let n = spectrum.n;
    if n > MAX_OPTIMIZE_SITES {
        return Err(invalid(format!(
            "basis optimization sums over 2^N strings; N = {n} exceeds {MAX_OPTIMIZE_SITES}"
        )));
    }
    let starts = options.starts.max(1);
    let q = mode_number_quadratic_form(spectrum, k)?;
    let per_start = options.budget / starts;
    if per_start < 2 {
        return Err(invalid("optimizer budget too small for the number of starts"));
    }
    let baseline = objective_value(&all_overlaps(spectrum, k, &LocalBasis::z(n))?, options.objective);

    let runs: Vec<(LocalBasis, f64, usize, bool)> = (0..starts)
        .into_par_iter()
        .map(|s| {
            let mut basis = if s == 0 {
                LocalBasis::z(n)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
                rng.set_stream(s as u64);
                LocalBasis {
                    theta: (0..n).map(|_| rng.random_range(0.0..std::f64::consts::PI)).collect(),
                    phi_az: (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect(),
                }
            };
            let mut search = Search {
                q: &q,
                n,
                objective: options.objective,
                budget: per_start,
                used: 0,
            };
            let mut value = search.eval(&basis).unwrap_or(f64::INFINITY);
            let finished = search.descend(&mut basis, &mut value).is_some();
            (basis.normalized(), value, search.used, finished)
        })
        .collect();

    let evaluations = runs.iter().map(|r| r.2).sum();
    let all_finished = runs.iter().all(|r| r.3);
    let (basis, objective, _, _) = runs
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one start");
    if !all_finished {
        return Err(Error::BudgetExhausted {
            budget: options.budget,
            objective,
            best: Box::new(basis),
        });
    }
    Ok(OptimizedBasis {
        basis,
        objective,
        baseline,
        evaluations,
    })
}

/// Classify outcome strings by their overlap with `Π_k`.
pub fn partition_subspaces(
    spectrum: &OpenChainSpectrum,
    k: usize,
    basis: &LocalBasis,
    eps: f64,
) -> Result<SubspacePartition> {
    if !(0.0..0.5).contains(&eps) {
        return Err(invalid(format!("eps = {eps} must lie in [0, 1/2)")));
    }
    let overlaps = all_overlaps(spectrum, k, basis)?;
    let slack = 1e-12;
    let mut plus_set = Vec::new();
    let mut minus_set = Vec::new();
    for (i, o) in overlaps.iter().enumerate() {
        if *o >= 1.0 - eps - slack {
            plus_set.push(OutcomeString::from_index(spectrum.n, i));
        } else if *o <= eps + slack {
            minus_set.push(OutcomeString::from_index(spectrum.n, i));
        }
    }
    let exhaustive = plus_set.len() + minus_set.len() == overlaps.len();
    Ok(SubspacePartition {
        eps,
        plus_set,
        minus_set,
        exhaustive,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedBounds {
    /// Min-overlap sequence `m_1 … m_{N−1}`.
    pub min_overlap: Vec<f64>,
    /// First-step bound `(1 − ε)P_min − √(ε(1 − ε))`.
    pub base: f64,
    /// Per-step retention of the `S⁺` subspace.
    pub retention: f64,
    /// Bound on confirming at step j, for j = 1..=n_steps.
    pub per_step: Vec<f64>,
    /// Bound on confirming at every step up to j.
    pub cumulative: Vec<f64>,
}

/// `m_1 = 1 − ε`, `m_j = m_{j−1} + m_{j−1}² − 1`, clamped at 0.
pub fn min_overlap_sequence(eps: f64, len: usize) -> Vec<f64> {
    let mut m = 1.0 - eps;
    let mut out = Vec::with_capacity(len);
    for j in 0..len {
        if j > 0 {
            m = (m + m * m - 1.0).max(0.0);
        }
        out.push(m);
    }
    out
}

/// Subspace-retention bounds for repeated local confirmation. The retention
/// uses the min-overlap after N − 2 recursion steps (see the project notes
/// for the depth choice).
pub fn repeated_confirm_bounds(eps: f64, p_min: f64, n: usize, n_steps: usize) -> Result<RepeatedBounds> {
    if !(0.0..0.5).contains(&eps) {
        return Err(invalid(format!("eps = {eps} must lie in [0, 1/2)")));
    }
    if !(p_min > 0.0 && p_min <= 1.0) {
        return Err(invalid(format!("P_min = {p_min} must lie in (0, 1]")));
    }
    if n == 0 {
        return Err(invalid("N must be at least 1"));
    }
    let min_overlap = min_overlap_sequence(eps, n.saturating_sub(1).max(1));
    let m = *min_overlap.last().expect("non-empty");
    let base = ((1.0 - eps) * p_min - (eps * (1.0 - eps)).sqrt()).max(0.0);
    let retention = (base * m - 2.0 * (1.0 - base).sqrt()).max(0.0);
    let per_step: Vec<f64> = (0..n_steps)
        .map(|j| base * retention.powi(j as i32))
        .collect();
    let mut acc = 1.0;
    let cumulative = per_step
        .iter()
        .map(|p| {
            acc *= p;
            acc
        })
        .collect();
    Ok(RepeatedBounds {
        min_overlap,
        base,
        retention,
        per_step,
        cumulative,
    })
}
