//! Monte Carlo of the repeated-measurement protocol on a small ring.
//!
//! The exact probability of every outcome history is computed once as a
//! binary tree; trajectories are then drawn from it with a ChaCha8 stream per
//! trajectory, so results do not depend on scheduling.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{c, CMatrix};
use crate::modes::OpenChainSpectrum;

use super::observables::{dense_alpha, dense_expectation};
use super::ops::{mode_projector, Boundary};
use super::state::{partial_trace, DenseRdm, DenseState, Evolver};

pub const MAX_PROTOCOL_SITES: usize = 12;
const MAX_PROTOCOL_STEPS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Postulate {
    /// Instantaneous projection of the global state.
    Projective,
    /// Decoherence channel on the block: only the maximally mixed part is
    /// projected, and outcome statistics follow the unmeasured state.
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub l: usize,
    pub n: usize,
    pub k: usize,
    pub xi: f64,
    pub dt: f64,
    /// Confirming measurements after the initial one at t = 0.
    pub n_steps: usize,
    pub boundary: Boundary,
    pub postulate: Postulate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub index: u64,
    pub mode: Postulate,
    /// `Π_k` outcomes, initial measurement first.
    pub outcomes: Vec<u8>,
    pub times: Vec<f64>,
}

impl TrajectoryRecord {
    /// Number of confirmations of the initial outcome before the first change.
    pub fn confirmations(&self) -> usize {
        let first = self.outcomes[0];
        self.outcomes[1..].iter().take_while(|&&o| o == first).count()
    }
}

pub struct ProtocolSimulator {
    spec: ProtocolSpec,
    /// Heap-ordered history probabilities; node `i` has children `2i+1`
    /// (outcome 0) and `2i+2` (outcome 1). The root is the empty history.
    tree: Vec<f64>,
}

impl ProtocolSimulator {
    pub fn new(spec: ProtocolSpec) -> Result<Self> {
        if spec.l > MAX_PROTOCOL_SITES {
            return Err(Error::TooLarge {
                l: spec.l,
                max: MAX_PROTOCOL_SITES,
            });
        }
        if spec.n == 0 || spec.n > spec.l {
            return Err(invalid(format!("block size N = {} must lie in 1..=L", spec.n)));
        }
        if spec.n_steps > MAX_PROTOCOL_STEPS {
            return Err(invalid(format!("at most {MAX_PROTOCOL_STEPS} confirming steps")));
        }
        if !(spec.dt >= 0.0 && spec.dt.is_finite()) {
            return Err(invalid("time step must be non-negative"));
        }
        let spectrum = OpenChainSpectrum::new(spec.n, spec.xi)?;
        spectrum.check_mode(spec.k)?;
        let evolver = Evolver::for_chain(spec.l, spec.xi, spec.boundary)?;
        let p1 = mode_projector(&spectrum, spec.k);
        let dim = p1.nrows();
        let p0 = CMatrix::identity(dim, dim) - &p1;
        let projectors = [p0, p1];
        let psi0 = DenseState::all_down(spec.l)?.amplitudes;

        let leaves = match spec.postulate {
            Postulate::Projective => projective_leaves(&spec, &evolver, &projectors, psi0),
            Postulate::Continuous => continuous_leaves(&spec, &evolver, &projectors[1], psi0)?,
        };
        Ok(Self {
            spec,
            tree: build_tree(leaves),
        })
    }

    pub fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    fn depth(&self) -> usize {
        self.spec.n_steps + 1
    }

    /// Exact probability of an outcome prefix, initial measurement first.
    pub fn history_probability(&self, prefix: &[u8]) -> f64 {
        if prefix.len() > self.depth() {
            return 0.0;
        }
        let node = prefix
            .iter()
            .fold(0usize, |node, &o| 2 * node + 1 + usize::from(o != 0));
        self.tree[node]
    }

    /// Exact probability that the first `j + 1` outcomes all agree, j = 0..=n_steps.
    pub fn exact_cumulative_confirmation(&self) -> Vec<f64> {
        (0..=self.spec.n_steps)
            .map(|j| {
                [0usize, 1]
                    .iter()
                    .map(|&o| {
                        let mut node = 0;
                        for _ in 0..=j {
                            node = 2 * node + 1 + o;
                        }
                        self.tree[node]
                    })
                    .sum()
            })
            .collect()
    }

    pub fn trajectory(&self, seed: u64, index: u64) -> Result<TrajectoryRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let mut node = 0usize;
        let mut outcomes = Vec::with_capacity(self.depth());
        for _ in 0..self.depth() {
            let total = self.tree[node];
            let (zero, one) = (2 * node + 1, 2 * node + 2);
            let u = rng.random::<f64>() * total;
            let o = if u < self.tree[zero] { 0 } else { 1 };
            let child = if o == 0 { zero } else { one };
            let conditional = self.tree[child] / total;
            if conditional.is_nan() || conditional < 1e-14 {
                return Err(Error::ZeroProbabilityBranch {
                    probability: conditional,
                });
            }
            outcomes.push(o as u8);
            node = child;
        }
        Ok(TrajectoryRecord {
            seed,
            index,
            mode: self.spec.postulate,
            outcomes,
            times: (0..self.depth()).map(|j| j as f64 * self.spec.dt).collect(),
        })
    }

    pub fn trajectories(&self, seed: u64, count: u64) -> Result<Vec<TrajectoryRecord>> {
        (0..count)
            .into_par_iter()
            .map(|i| self.trajectory(seed, i))
            .collect()
    }
}

fn build_tree(leaves: Vec<f64>) -> Vec<f64> {
    let depth = leaves.len().trailing_zeros() as usize;
    let size = (1usize << (depth + 1)) - 1;
    let mut tree = vec![0.0; size];
    let first_leaf = (1usize << depth) - 1;
    tree[first_leaf..].copy_from_slice(&leaves);
    for i in (0..first_leaf).rev() {
        tree[i] = tree[2 * i + 1] + tree[2 * i + 2];
    }
    tree
}

fn project(psi: &DVector<Complex64>, p: &CMatrix, l: usize, n: usize) -> DVector<Complex64> {
    let rows = 1usize << n;
    let cols = 1usize << (l - n);
    let m = CMatrix::from_fn(rows, cols, |r, col| psi[r * cols + col]);
    let out = p * m;
    DVector::from_fn(rows * cols, |i, _| out[(i / cols, i % cols)])
}

fn projective_leaves(
    spec: &ProtocolSpec,
    evolver: &Evolver,
    projectors: &[CMatrix; 2],
    psi0: DVector<Complex64>,
) -> Vec<f64> {
    let depth = spec.n_steps + 1;
    let mut leaves = vec![0.0; 1 << depth];
    // unnormalized branch vectors: their squared norm is the joint probability
    let mut frontier: Vec<(usize, DVector<Complex64>)> = vec![(0, psi0)];
    for level in 0..depth {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for (prefix, psi) in frontier {
            for (o, p) in projectors.iter().enumerate() {
                let branch = project(&psi, p, spec.l, spec.n);
                let weight = branch.norm_squared();
                let id = (prefix << 1) | o;
                if level + 1 == depth {
                    leaves[id] = weight;
                } else if weight > 1e-300 {
                    next.push((id, evolver.apply(&branch, spec.dt)));
                }
            }
        }
        frontier = next;
    }
    leaves
}

fn continuous_leaves(
    spec: &ProtocolSpec,
    evolver: &Evolver,
    p1: &CMatrix,
    psi0: DVector<Complex64>,
) -> Result<Vec<f64>> {
    let depth = spec.n_steps + 1;
    let mut p_one = Vec::with_capacity(depth);
    let mut psi = psi0;
    for j in 0..depth {
        if j > 0 {
            psi = evolver.apply(&psi, spec.dt);
        }
        let state = DenseState {
            l: spec.l,
            amplitudes: psi.clone(),
            t: j as f64 * spec.dt,
        };
        let rdm = partial_trace(&state, spec.n)?;
        p_one.push(dense_expectation(&rdm, p1).clamp(0.0, 1.0));
    }
    Ok((0..1usize << depth)
        .map(|id| {
            (0..depth)
                .map(|j| {
                    let o = (id >> (depth - 1 - j)) & 1;
                    if o == 1 {
                        p_one[j]
                    } else {
                        1.0 - p_one[j]
                    }
                })
                .product()
        })
        .collect())
}

/// Block state after the decoherence channel with outcome `o`:
/// `α ρ_c + (1 − α) Π_o / Tr Π_o`, where `ρ = α ρ_c + (1 − α) 𝟙/2^N` is the
/// split with the largest maximally mixed part.
pub fn continuous_channel(rdm: &DenseRdm, projector: &CMatrix) -> DenseRdm {
    let dim = projector.nrows();
    let alpha = dense_alpha(rdm);
    let uniform = CMatrix::identity(dim, dim) * c((1.0 - alpha) / dim as f64);
    let rank = projector.trace().re;
    let matrix = &rdm.matrix - uniform + projector * c((1.0 - alpha) / rank);
    DenseRdm { n: rdm.n, matrix }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfirmationStats {
    pub trajectories: usize,
    /// Fraction confirming step j among those that confirmed every earlier step.
    pub per_step_rate: Vec<f64>,
    /// Binomial standard error of each rate.
    pub per_step_sigma: Vec<f64>,
    /// Fraction confirming all of steps 1..=j.
    pub cumulative: Vec<f64>,
}

pub fn confirmation_stats(records: &[TrajectoryRecord]) -> ConfirmationStats {
    let steps = records.first().map_or(0, |r| r.outcomes.len() - 1);
    let mut per_step_rate = Vec::with_capacity(steps);
    let mut per_step_sigma = Vec::with_capacity(steps);
    let mut cumulative = Vec::with_capacity(steps);
    let total = records.len() as f64;
    for j in 1..=steps {
        let alive = records.iter().filter(|r| r.confirmations() >= j - 1).count() as f64;
        let ok = records.iter().filter(|r| r.confirmations() >= j).count() as f64;
        let rate = if alive > 0.0 { ok / alive } else { 0.0 };
        per_step_rate.push(rate);
        per_step_sigma.push(if alive > 0.0 {
            (rate * (1.0 - rate) / alive).sqrt()
        } else {
            0.0
        });
        cumulative.push(ok / total);
    }
    ConfirmationStats {
        trajectories: records.len(),
        per_step_rate,
        per_step_sigma,
        cumulative,
    }
}

/// One trajectory with stream index 0.
pub fn simulate_protocol(spec: ProtocolSpec, seed: u64) -> Result<TrajectoryRecord> {
    ProtocolSimulator::new(spec)?.trajectory(seed, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn spec(postulate: Postulate, dt: f64) -> ProtocolSpec {
        ProtocolSpec {
            l: 6,
            n: 2,
            k: 0,
            xi: 1.0,
            dt,
            n_steps: 4,
            boundary: Boundary::Periodic,
            postulate,
        }
    }

    #[test]
    fn zero_wait_repeats_first_outcome() {
        let sim = ProtocolSimulator::new(spec(Postulate::Projective, 0.0)).unwrap();
        for r in sim.trajectories(3, 200).unwrap() {
            assert!(r.outcomes.iter().all(|&o| o == r.outcomes[0]));
        }
    }

    #[test]
    fn conserved_quantity_stays_fixed() {
        let s = ProtocolSpec {
            l: 4,
            n: 4,
            k: 1,
            boundary: Boundary::Open,
            dt: 0.9,
            ..spec(Postulate::Projective, 0.9)
        };
        let sim = ProtocolSimulator::new(s).unwrap();
        for r in sim.trajectories(5, 100).unwrap() {
            assert_eq!(r.confirmations(), s.n_steps);
        }
    }

    #[test]
    fn history_probabilities_are_normalized() {
        for p in [Postulate::Projective, Postulate::Continuous] {
            let sim = ProtocolSimulator::new(spec(p, 0.3)).unwrap();
            assert!((sim.tree[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reproducible_streams() {
        let sim = ProtocolSimulator::new(spec(Postulate::Continuous, 0.3)).unwrap();
        assert_eq!(sim.trajectories(9, 50).unwrap(), sim.trajectories(9, 50).unwrap());
    }

    #[test]
    fn channel_on_mixed_state_projects() {
        let s = OpenChainSpectrum::new(2, 1.0).unwrap();
        let p = mode_projector(&s, 1);
        let out = continuous_channel(&DenseRdm::maximally_mixed(2), &p);
        let target = &p * c(1.0 / p.trace().re);
        assert!(max_abs(&(out.matrix - target)) < 1e-14);
    }
}
