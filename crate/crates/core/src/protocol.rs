//! The measurement sequence: one measurement of the target observable, then
//! up to `N` rounds of (intermediate, target), stopping at the first target
//! outcome.
//!
//! Three evaluators are provided and cross-checked in the tests:
//!
//! - [`run_trajectory`] / [`monte_carlo_success`] sample outcomes with the
//!   Born rule;
//! - [`exact_success`] treats the failure outcomes as the transient states
//!   of an absorbing Markov chain with one-round kernel `p[k][j]`;
//! - [`brute_force_success`] walks the full outcome tree.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::bases::{overlap_matrix, OrthonormalBasis};
use crate::rng::substream;
use crate::state::{same_dim, PureState, QuantumState};
use crate::{fourier_basis, Error, Result, PROB_SUM_TOL};

/// Upper bound on the number of leaves [`brute_force_success`] will visit.
pub const BRUTE_FORCE_LEAF_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    target_basis: OrthonormalBasis,
    intermediate_basis: OrthonormalBasis,
    targets: Vec<usize>,
    is_target: Vec<bool>,
    rounds: usize,
}

impl Protocol {
    /// `targets` are indices into `target_basis`; duplicates are merged.
    pub fn new(
        target_basis: OrthonormalBasis,
        intermediate_basis: OrthonormalBasis,
        targets: impl IntoIterator<Item = usize>,
        rounds: usize,
    ) -> Result<Self> {
        let d = target_basis.dim();
        same_dim(d, intermediate_basis.dim())?;
        let mut targets: Vec<usize> = targets.into_iter().collect();
        targets.sort_unstable();
        targets.dedup();
        if targets.is_empty() {
            return Err(Error::param(
                "targets",
                "at least one target index is required",
            ));
        }
        if let Some(&bad) = targets.iter().find(|&&t| t >= d) {
            return Err(Error::param(
                "targets",
                format!("index {bad} is out of range for d = {d}"),
            ));
        }
        let mut is_target = vec![false; d];
        for &t in &targets {
            is_target[t] = true;
        }
        Ok(Self {
            target_basis,
            intermediate_basis,
            targets,
            is_target,
            rounds,
        })
    }

    /// Protocol whose intermediate basis is the Fourier transform of the
    /// target basis.
    pub fn mub(
        target_basis: OrthonormalBasis,
        targets: impl IntoIterator<Item = usize>,
        rounds: usize,
    ) -> Result<Self> {
        let intermediate = fourier_basis(&target_basis);
        Self::new(target_basis, intermediate, targets, rounds)
    }

    pub fn with_rounds(&self, rounds: usize) -> Self {
        Self {
            rounds,
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.target_basis.dim()
    }

    pub fn target_basis(&self) -> &OrthonormalBasis {
        &self.target_basis
    }

    pub fn intermediate_basis(&self) -> &OrthonormalBasis {
        &self.intermediate_basis
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn is_target(&self, index: usize) -> bool {
        self.is_target.get(index).copied().unwrap_or(false)
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn failure_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| !self.is_target[i]).collect()
    }

    /// `Σ_t ⟨φ_t|ρ|φ_t⟩`.
    pub fn target_mass<S: QuantumState + ?Sized>(&self, state: &S) -> Result<f64> {
        same_dim(self.dim(), state.dim())?;
        Ok(self
            .targets
            .iter()
            .map(|&t| state.population_of(&self.target_basis.matrix().column(t).into_owned()))
            .sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisTag {
    Target,
    Intermediate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Outcome {
    pub basis: BasisTag,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryResult {
    pub success: bool,
    /// 0 for a hit on the first measurement, `k` for a hit in round `k`.
    pub round: Option<usize>,
    /// Empty when produced by the record-free [`TrajectorySampler`].
    pub outcomes: Vec<Outcome>,
}

/// Index drawn by inverse CDF from `probs`, which must sum to 1 within
/// [`PROB_SUM_TOL`]. Small negative entries from round-off count as zero and
/// the last bucket absorbs any residue.
fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Result<usize> {
    let cdf = cumulative(probs)?;
    Ok(pick(&cdf, rng.random::<f64>()))
}

fn cumulative(probs: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    if !((total - 1.0).abs() <= PROB_SUM_TOL) {
        return Err(Error::ProbabilitySum(total));
    }
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = probs
        .iter()
        .map(|p| {
            acc += p.max(0.0) / total;
            acc
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    Ok(cdf)
}

fn pick(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

/// Projective measurement of `state` in `b`: returns outcome `i` with
/// probability `⟨b_i|ρ|b_i⟩` together with the collapsed state `|b_i⟩`.
pub fn measure_in_basis<S, R>(
    state: &S,
    b: &OrthonormalBasis,
    rng: &mut R,
) -> Result<(usize, PureState)>
where
    S: QuantumState + ?Sized,
    R: Rng + ?Sized,
{
    same_dim(b.dim(), state.dim())?;
    let probs: Vec<f64> = b
        .matrix()
        .column_iter()
        .map(|col| state.population_of(&col.into_owned()))
        .collect();
    let index = sample_index(&probs, rng)?;
    Ok((index, b.state(index)))
}

/// One run of the protocol with every outcome recorded.
pub fn run_trajectory<S, R>(rho: &S, p: &Protocol, rng: &mut R) -> Result<TrajectoryResult>
where
    S: QuantumState + ?Sized,
    R: Rng + ?Sized,
{
    let mut outcomes = Vec::with_capacity(2 * p.rounds + 1);
    let (first, mut state) = measure_in_basis(rho, &p.target_basis, rng)?;
    outcomes.push(Outcome {
        basis: BasisTag::Target,
        index: first,
    });
    if p.is_target(first) {
        return Ok(TrajectoryResult {
            success: true,
            round: Some(0),
            outcomes,
        });
    }
    for round in 1..=p.rounds {
        let (i, mid) = measure_in_basis(&state, &p.intermediate_basis, rng)?;
        outcomes.push(Outcome {
            basis: BasisTag::Intermediate,
            index: i,
        });
        let (k, next) = measure_in_basis(&mid, &p.target_basis, rng)?;
        outcomes.push(Outcome {
            basis: BasisTag::Target,
            index: k,
        });
        if p.is_target(k) {
            return Ok(TrajectoryResult {
                success: true,
                round: Some(round),
                outcomes,
            });
        }
        state = next;
    }
    Ok(TrajectoryResult {
        success: false,
        round: None,
        outcomes,
    })
}

/// Record-free trajectory sampler with precomputed outcome tables.
///
/// After the first measurement the system is always in a basis vector, so
/// each later step only needs the transition probabilities between the two
/// bases.
#[derive(Debug, Clone)]
pub struct TrajectorySampler {
    initial: Vec<f64>,
    // cdf over intermediate outcomes given target outcome j
    to_intermediate: Vec<Vec<f64>>,
    // cdf over target outcomes given intermediate outcome i
    to_target: Vec<Vec<f64>>,
    is_target: Vec<bool>,
    rounds: usize,
}

impl TrajectorySampler {
    pub fn new<S: QuantumState + ?Sized>(rho: &S, p: &Protocol) -> Result<Self> {
        same_dim(p.dim(), rho.dim())?;
        let initial: Vec<f64> = p
            .target_basis
            .matrix()
            .column_iter()
            .map(|col| rho.population_of(&col.into_owned()))
            .collect();
        let initial = cumulative(&initial)?;
        // t[(i, k)] = |⟨θ_i|φ_k⟩|²
        let t = p
            .intermediate_basis
            .transition_probabilities(&p.target_basis)?;
        let to_intermediate = t
            .column_iter()
            .map(|col| cumulative(col.as_slice()))
            .collect::<Result<Vec<_>>>()?;
        let to_target = t
            .row_iter()
            .map(|row| cumulative(&row.iter().copied().collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            initial,
            to_intermediate,
            to_target,
            is_target: p.is_target.clone(),
            rounds: p.rounds,
        })
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> TrajectoryResult {
        let mut k = pick(&self.initial, rng.random());
        if self.is_target[k] {
            return TrajectoryResult {
                success: true,
                round: Some(0),
                outcomes: Vec::new(),
            };
        }
        for round in 1..=self.rounds {
            let i = pick(&self.to_intermediate[k], rng.random());
            k = pick(&self.to_target[i], rng.random());
            if self.is_target[k] {
                return TrajectoryResult {
                    success: true,
                    round: Some(round),
                    outcomes: Vec::new(),
                };
            }
        }
        TrajectoryResult {
            success: false,
            round: None,
            outcomes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    /// Binomial standard error `√(p̂(1-p̂)/n)`.
    pub stderr: f64,
    pub trajectories: usize,
}

/// Fraction of successful runs over `n_traj` independent trajectories.
///
/// One master seed is drawn from `rng`; trajectory `i` uses substream `i` of
/// it, so the result does not depend on the number of worker threads.
pub fn monte_carlo_success<S, R>(
    rho: &S,
    p: &Protocol,
    n_traj: usize,
    rng: &mut R,
) -> Result<McEstimate>
where
    S: QuantumState + ?Sized,
    R: Rng + ?Sized,
{
    if n_traj == 0 {
        return Err(Error::param(
            "n_traj",
            "at least one trajectory is required",
        ));
    }
    let sampler = TrajectorySampler::new(rho, p)?;
    let master: u64 = rng.random();
    let hits = (0..n_traj as u64)
        .into_par_iter()
        .filter(|&i| sampler.run(&mut substream(master, i)).success)
        .count();
    let n = n_traj as f64;
    let estimate = hits as f64 / n;
    Ok(McEstimate {
        estimate,
        stderr: (estimate * (1.0 - estimate) / n).sqrt(),
        trajectories: n_traj,
    })
}

/// Absorbing-chain view of the protocol, restricted to the failure outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    pub failure_indices: Vec<usize>,
    /// One-round probability of reaching any target from each failure index.
    pub success_mass: DVector<f64>,
    /// One-round failure-to-failure transition probabilities.
    pub failure_kernel: DMatrix<f64>,
}

impl MarkovModel {
    /// Largest deviation of `success_mass[j] + Σ_j' kernel[j][j']` from 1.
    pub fn row_defect(&self) -> f64 {
        self.failure_kernel
            .row_iter()
            .zip(self.success_mass.iter())
            .map(|(row, s)| (row.sum() + s - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn build_markov(p: &Protocol) -> MarkovModel {
    let overlap = overlap_matrix(&p.target_basis, &p.intermediate_basis)
        .expect("protocol bases share a dimension");
    let failures = p.failure_indices();
    let f = failures.len();
    let success_mass = DVector::from_fn(f, |a, _| {
        p.targets.iter().map(|&t| overlap.get(failures[a], t)).sum()
    });
    let failure_kernel = DMatrix::from_fn(f, f, |a, b| overlap.get(failures[a], failures[b]));
    MarkovModel {
        failure_indices: failures,
        success_mass,
        failure_kernel,
    }
}

/// Success probabilities for every round count `0..=p.rounds()`.
pub fn exact_success_curve<S: QuantumState + ?Sized>(rho: &S, p: &Protocol) -> Result<Vec<f64>> {
    same_dim(p.dim(), rho.dim())?;
    let model = build_markov(p);
    let basis = p.target_basis.matrix();
    let mut acc = p.target_mass(rho)?;
    let mut weights = DVector::from_iterator(
        model.failure_indices.len(),
        model
            .failure_indices
            .iter()
            .map(|&j| rho.population_of(&basis.column(j).into_owned())),
    );
    let kernel_t = model.failure_kernel.transpose();
    let mut curve = Vec::with_capacity(p.rounds + 1);
    curve.push(clamp_probability(acc)?);
    for _ in 1..=p.rounds {
        acc += weights.dot(&model.success_mass);
        weights = &kernel_t * weights;
        curve.push(clamp_probability(acc)?);
    }
    Ok(curve)
}

/// `q₀ + Σ_{k=1}^{N} fᵀ T^{k-1} s`, with `q₀` the initial target mass, `f` the
/// initial failure populations, `T` the failure kernel and `s` the success
/// mass.
pub fn exact_success<S: QuantumState + ?Sized>(rho: &S, p: &Protocol) -> Result<f64> {
    Ok(*exact_success_curve(rho, p)?
        .last()
        .expect("curve has at least one entry"))
}

fn clamp_probability(x: f64) -> Result<f64> {
    if !(-PROB_SUM_TOL..=1.0 + PROB_SUM_TOL).contains(&x) {
        return Err(Error::ProbabilityOutOfRange(x));
    }
    Ok(x.clamp(0.0, 1.0))
}

/// Number of leaves in the full outcome tree, `d^(2N+1)`.
pub fn outcome_tree_leaves(d: usize, rounds: usize) -> f64 {
    (d as f64).powf(2.0 * rounds as f64 + 1.0)
}

/// Sums Born-rule probabilities over every outcome path, crediting each path
/// at its first target hit.
pub fn brute_force_success<S: QuantumState + ?Sized>(rho: &S, p: &Protocol) -> Result<f64> {
    same_dim(p.dim(), rho.dim())?;
    let leaves = outcome_tree_leaves(p.dim(), p.rounds);
    if !(leaves <= BRUTE_FORCE_LEAF_LIMIT as f64) {
        return Err(Error::TreeTooLarge {
            leaves,
            limit: BRUTE_FORCE_LEAF_LIMIT,
        });
    }
    let phis: Vec<DVector<_>> = p
        .target_basis
        .matrix()
        .column_iter()
        .map(|c| c.into_owned())
        .collect();
    let thetas: Vec<DVector<_>> = p
        .intermediate_basis
        .matrix()
        .column_iter()
        .map(|c| c.into_owned())
        .collect();

    struct Tree<'a> {
        phis: &'a [DVector<num_complex::Complex64>],
        thetas: &'a [DVector<num_complex::Complex64>],
        protocol: &'a Protocol,
    }

    impl Tree<'_> {
        fn walk(&self, from: usize, weight: f64, rounds_left: usize) -> f64 {
            if rounds_left == 0 {
                return 0.0;
            }
            let mut total = 0.0;
            for theta in self.thetas {
                let w_theta = weight * theta.dotc(&self.phis[from]).norm_sqr();
                for (k, phi) in self.phis.iter().enumerate() {
                    let w = w_theta * phi.dotc(theta).norm_sqr();
                    if self.protocol.is_target(k) {
                        total += w;
                    } else {
                        total += self.walk(k, w, rounds_left - 1);
                    }
                }
            }
            total
        }
    }

    let tree = Tree {
        phis: &phis,
        thetas: &thetas,
        protocol: p,
    };
    let mut total = 0.0;
    for (j, phi) in phis.iter().enumerate() {
        let w = rho.population_of(phi);
        if p.is_target(j) {
            total += w;
        } else {
            total += tree.walk(j, w, p.rounds);
        }
    }
    clamp_probability(total)
}
