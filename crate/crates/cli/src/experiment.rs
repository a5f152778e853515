//! Turning a configuration into result rows.
//!
//! Every experiment expands into a list of prepared setups (state, protocol,
//! closed form) and, for each setup, one row per round count. Rows are
//! evaluated in parallel and returned in expansion order. Monte Carlo rows
//! draw from `substream(seed, row_index)`, so the output depends only on
//! the configuration and the seed.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

use qsteer::formulas::{self, BipartiteTargetSpec};
use qsteer::rng::{substream, StreamRng};
use qsteer::state::QubitLikeSpec;
use qsteer::{
    basis_2d, brute_force_success, exact_success_curve, fourier_basis, haar_random_pure,
    maximally_mixed, monte_carlo_success, qubit_like_density, Complex64, DensityMatrix,
    OrthonormalBasis, Protocol, PureState, Tensor,
};
use rayon::prelude::*;

use crate::config::{
    BasisChoice, ConfigError, CopiesSection, ExactMethod, ExperimentConfig, ExperimentKind,
    InitialState, MAX_DIM,
};
use crate::matrix::{load_density, LoadError};

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub d: usize,
    pub rounds: usize,
    pub theta: Option<f64>,
    pub gamma_sq: Option<f64>,
    pub exact: f64,
    pub closed_form: Option<f64>,
    pub mc_estimate: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("infeasible computation: {0}")]
    Infeasible(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("numerical error: {0}")]
    Numeric(qsteer::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Infeasible(_) => 3,
            RunError::Io(_) => 4,
            RunError::Numeric(_) => 1,
        }
    }
}

impl From<qsteer::Error> for RunError {
    fn from(e: qsteer::Error) -> Self {
        match e {
            qsteer::Error::TreeTooLarge { .. } => RunError::Infeasible(e.to_string()),
            other => RunError::Numeric(other),
        }
    }
}

fn config_err(path: &str) -> impl Fn(qsteer::Error) -> RunError + '_ {
    move |e| RunError::Config(ConfigError::new(path, e))
}

#[derive(Debug, Clone)]
enum ClosedForm {
    Constant(f64),
    TwoD {
        theta: f64,
        q_perp: f64,
    },
    TwoDMax {
        q_perp: f64,
    },
    MultiTarget {
        d: usize,
        m: usize,
        mass: f64,
    },
    HaarAverage {
        d: usize,
        m: usize,
    },
    Copies {
        d: usize,
        copies: usize,
        overlaps: Vec<f64>,
    },
    Bipartite {
        spec: BipartiteTargetSpec,
        p: f64,
        gamma: Complex64,
    },
}

impl ClosedForm {
    fn eval(&self, n: usize) -> qsteer::Result<Option<f64>> {
        Ok(Some(match self {
            ClosedForm::Constant(v) => *v,
            ClosedForm::TwoD { theta, q_perp } => formulas::ps_2d(*theta, *q_perp, n)?,
            ClosedForm::TwoDMax { q_perp } => formulas::ps_2d_max(*q_perp, n)?,
            ClosedForm::MultiTarget { d, m, mass } => formulas::ps_multi_target(*d, *m, *mass, n)?,
            ClosedForm::HaarAverage { d, m } => formulas::avg_ps_general(*d, n, *m, 1)?,
            ClosedForm::Copies {
                d,
                copies,
                overlaps,
            } => formulas::ps_copies(*d, *copies, overlaps, n)?,
            ClosedForm::Bipartite { spec, p, gamma } => {
                formulas::ps_bipartite(spec, *p, *gamma, n)?
            }
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Fixed initial state; Monte Carlo runs trajectories.
    Trajectories,
    /// Average over Haar-random pure initial states; the exact column is the
    /// value at `I/d`, which equals the average by linearity.
    HaarAverage,
}

#[derive(Debug, Clone)]
struct Setup {
    id: String,
    d: usize,
    theta: Option<f64>,
    gamma_sq: Option<f64>,
    rho: DensityMatrix,
    protocol: Protocol,
    closed: ClosedForm,
    mode: Mode,
}

struct Job<'a> {
    setup: &'a Setup,
    rounds: usize,
    row: u64,
}

/// Runs any experiment kind, including sweeps.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>, RunError> {
    config.validate()?;
    let setups = match config.kind {
        ExperimentKind::Figure1a => figure1a_setups()?,
        ExperimentKind::Figure1b => figure1b_setups()?,
        _ => expand(config)?,
    };
    evaluate(config, &setups)
}

/// Cartesian expansion of the sweep axes in the order d, theta, gamma_sq,
/// round count. Axes missing from the `[sweep]` section take the single
/// value from the top-level config.
pub fn sweep(config: &ExperimentConfig) -> Result<Vec<ResultRow>, RunError> {
    if config.kind != ExperimentKind::Sweep {
        return Err(ConfigError::new(
            "kind",
            format!("expected \"sweep\", got \"{}\"", config.kind.as_str()),
        )
        .into());
    }
    run_experiment(config)
}

fn evaluate(config: &ExperimentConfig, setups: &[Setup]) -> Result<Vec<ResultRow>, RunError> {
    let rounds = config.round_list();
    let mut jobs = Vec::with_capacity(setups.len() * rounds.len());
    for setup in setups {
        for &n in &rounds {
            jobs.push(Job {
                setup,
                rounds: n,
                row: jobs.len() as u64,
            });
        }
    }
    if config.method == ExactMethod::BruteForce {
        let d = setups
            .iter()
            .map(|s| s.d.max(s.protocol.dim()))
            .max()
            .unwrap_or(2);
        let n = rounds.iter().copied().max().unwrap_or(0);
        let leaves = qsteer::protocol::outcome_tree_leaves(d, n);
        if !(leaves <= qsteer::protocol::BRUTE_FORCE_LEAF_LIMIT as f64) {
            return Err(qsteer::Error::TreeTooLarge {
                leaves,
                limit: qsteer::protocol::BRUTE_FORCE_LEAF_LIMIT,
            }
            .into());
        }
    }
    jobs.par_iter()
        .map(|job| evaluate_job(config, job))
        .collect()
}

fn evaluate_job(config: &ExperimentConfig, job: &Job<'_>) -> Result<ResultRow, RunError> {
    let s = job.setup;
    let protocol = s.protocol.with_rounds(job.rounds);
    let exact = match config.method {
        ExactMethod::Markov => *exact_success_curve(&s.rho, &protocol)?
            .last()
            .expect("non-empty curve"),
        ExactMethod::BruteForce => brute_force_success(&s.rho, &protocol)?,
    };
    let closed_form = s.closed.eval(job.rounds)?;
    let seed = config.seed_or_default();
    let (mc_estimate, mc_stderr, seed) = match (config.monte_carlo_requested(), config.trajectories)
    {
        (true, Some(count)) => {
            let mut rng = substream(seed, job.row);
            let (estimate, stderr) = match s.mode {
                Mode::Trajectories => {
                    let mc = monte_carlo_success(&s.rho, &protocol, count, &mut rng)?;
                    (mc.estimate, mc.stderr)
                }
                Mode::HaarAverage => haar_average(&protocol, count, &mut rng)?,
            };
            (Some(estimate), Some(stderr), Some(seed))
        }
        _ => (None, None, None),
    };
    Ok(ResultRow {
        experiment: s.id.clone(),
        d: s.d,
        rounds: job.rounds,
        theta: s.theta,
        gamma_sq: s.gamma_sq,
        exact,
        closed_form,
        mc_estimate,
        mc_stderr,
        seed,
    })
}

/// Sample mean and standard error of the exact success probability over
/// `samples` Haar-random pure initial states.
fn haar_average(
    protocol: &Protocol,
    samples: usize,
    rng: &mut StreamRng,
) -> Result<(f64, f64), RunError> {
    let d = protocol.dim();
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let psi = haar_random_pure(d, rng)?;
        values.push(
            *exact_success_curve(&psi, protocol)?
                .last()
                .expect("non-empty curve"),
        );
    }
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    if samples < 2 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

fn figure1a_setups() -> Result<Vec<Setup>, RunError> {
    let comp = OrthonormalBasis::computational(2)?;
    let theta = FRAC_PI_4;
    let protocol = Protocol::new(comp.clone(), basis_2d(theta, 0.0, &comp)?, [0], 0)?;
    [("2/3", 2.0 / 3.0), ("1/3", 1.0 / 3.0), ("0", 0.0)]
        .into_iter()
        .map(|(label, overlap)| {
            Ok(Setup {
                id: format!("figure1a:overlap={label}"),
                d: 2,
                theta: Some(theta),
                gamma_sq: None,
                rho: DensityMatrix::from_diagonal(&[overlap, 1.0 - overlap])?,
                protocol: protocol.clone(),
                closed: ClosedForm::TwoDMax {
                    q_perp: 1.0 - overlap,
                },
                mode: Mode::Trajectories,
            })
        })
        .collect()
}

fn figure1b_setups() -> Result<Vec<Setup>, RunError> {
    let comp = OrthonormalBasis::computational(2)?;
    let perp = comp.state(1).projector();
    [
        ("pi/4", FRAC_PI_4),
        ("pi/8", FRAC_PI_8),
        ("pi/12", PI / 12.0),
    ]
    .into_iter()
    .map(|(label, theta)| {
        Ok(Setup {
            id: format!("figure1b:theta={label}"),
            d: 2,
            theta: Some(theta),
            gamma_sq: None,
            rho: perp.clone(),
            protocol: Protocol::new(comp.clone(), basis_2d(theta, 0.0, &comp)?, [0], 0)?,
            closed: ClosedForm::TwoD { theta, q_perp: 1.0 },
            mode: Mode::Trajectories,
        })
    })
    .collect()
}

fn expand(config: &ExperimentConfig) -> Result<Vec<Setup>, RunError> {
    let sweep = config.sweep.as_ref();
    let dims = sweep
        .and_then(|s| s.d.clone())
        .unwrap_or_else(|| vec![config.d]);
    let thetas: Vec<Option<f64>> = match sweep.and_then(|s| s.theta.as_ref()) {
        Some(grid) => grid.expand().into_iter().map(Some).collect(),
        None => vec![config.theta.map(|a| a.0)],
    };
    let gammas: Vec<Option<f64>> = match sweep.and_then(|s| s.gamma_sq.as_ref()) {
        Some(list) => list.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let id = config.experiment_id();
    let mut setups = Vec::new();
    for &d in &dims {
        for &theta in &thetas {
            for &gamma_sq in &gammas {
                let setup = match config.base_kind() {
                    ExperimentKind::Bipartite => bipartite_setup(config, &id, d, gamma_sq)?,
                    ExperimentKind::Copies => copies_setup(config, &id, d)?,
                    _ => single_setup(config, &id, d, theta, gamma_sq)?,
                };
                setups.push(setup);
            }
        }
    }
    Ok(setups)
}

/// Rescales `gamma` to modulus `√gamma_sq`, keeping its phase (or using a
/// real value when `gamma` is zero).
fn with_modulus(gamma: Complex64, gamma_sq: Option<f64>) -> Complex64 {
    match gamma_sq {
        None => gamma,
        Some(g) => {
            let phase = if gamma.norm() > 0.0 { gamma.arg() } else { 0.0 };
            Complex64::from_polar(g.sqrt(), phase)
        }
    }
}

fn initial_state(
    config: &ExperimentConfig,
    d: usize,
    gamma_sq: Option<f64>,
) -> Result<(DensityMatrix, Option<f64>), RunError> {
    Ok(match config.initial.resolve()? {
        InitialState::MaximallyMixed => (maximally_mixed(d)?, None),
        InitialState::BasisVector(i) => (
            PureState::basis_vector(d, i)
                .map_err(config_err("initial.index"))?
                .projector(),
            None,
        ),
        InitialState::Amplitudes(amps) => (
            PureState::normalized(amps)
                .map_err(config_err("initial.amplitudes"))?
                .projector(),
            None,
        ),
        InitialState::QubitLike {
            p,
            gamma,
            psi,
            psi_perp,
        } => {
            let gamma = with_modulus(gamma, gamma_sq);
            let spec = QubitLikeSpec::new(
                p,
                gamma,
                PureState::basis_vector(d, psi)?,
                PureState::basis_vector(d, psi_perp)?,
            )
            .map_err(config_err("initial"))?;
            (
                qubit_like_density(&spec),
                Some(gamma_sq.unwrap_or(gamma.norm_sqr())),
            )
        }
        InitialState::File(path) => {
            let rho = load_density(&path).map_err(|e| match e {
                LoadError::Io { .. } => RunError::Io(e.to_string()),
                other => RunError::Config(ConfigError::new("initial.path", other)),
            })?;
            if rho.dim() != d {
                return Err(ConfigError::new(
                    "initial.path",
                    format!("matrix is {}x{}, expected d = {d}", rho.dim(), rho.dim()),
                )
                .into());
            }
            (rho, None)
        }
    })
}

fn single_setup(
    config: &ExperimentConfig,
    id: &str,
    d: usize,
    theta: Option<f64>,
    gamma_sq: Option<f64>,
) -> Result<Setup, RunError> {
    let (rho, gamma_sq) = initial_state(config, d, gamma_sq)?;
    let comp = OrthonormalBasis::computational(d)?;
    let m = {
        let mut t = config.targets.clone();
        t.sort_unstable();
        t.dedup();
        t.len()
    };
    let (intermediate, theta) = match config.basis {
        BasisChoice::Fourier => (fourier_basis(&comp), None),
        BasisChoice::Param2d => {
            let theta = theta
                .ok_or_else(|| ConfigError::new("theta", "is required for basis = \"param2d\""))?;
            let phi = config.phi.map_or(0.0, |a| a.0);
            (
                basis_2d(theta, phi, &comp).map_err(config_err("basis"))?,
                Some(theta),
            )
        }
    };
    let protocol = Protocol::new(comp, intermediate, config.targets.iter().copied(), 0)
        .map_err(config_err("targets"))?;
    let haar = config.kind == ExperimentKind::HaarAverage;
    let closed = match (config.basis, haar) {
        (BasisChoice::Fourier, false) => ClosedForm::MultiTarget {
            d,
            m,
            mass: protocol.target_mass(&rho)?,
        },
        (BasisChoice::Fourier, true) => ClosedForm::HaarAverage { d, m },
        (BasisChoice::Param2d, _) if m == 2 => ClosedForm::Constant(1.0),
        (BasisChoice::Param2d, _) => {
            let q_perp = if haar {
                0.5
            } else {
                1.0 - protocol.target_mass(&rho)?
            };
            ClosedForm::TwoD {
                theta: theta.expect("param2d has an angle"),
                q_perp,
            }
        }
    };
    let (rho, mode) = if haar {
        (maximally_mixed(d)?, Mode::HaarAverage)
    } else {
        (rho, Mode::Trajectories)
    };
    Ok(Setup {
        id: id.to_string(),
        d,
        theta,
        gamma_sq: if haar { None } else { gamma_sq },
        rho,
        protocol,
        closed,
        mode,
    })
}

fn bipartite_setup(
    config: &ExperimentConfig,
    id: &str,
    d: usize,
    gamma_sq: Option<f64>,
) -> Result<Setup, RunError> {
    let section = config
        .bipartite
        .as_ref()
        .ok_or_else(|| ConfigError::new("bipartite", "section is required"))?;
    if d * d > MAX_DIM {
        return Err(RunError::Infeasible(format!(
            "joint dimension {} exceeds {MAX_DIM}",
            d * d
        )));
    }
    let spec = BipartiteTargetSpec::standard(section.alpha.0, section.beta.0, d)
        .map_err(config_err("bipartite"))?;
    let gamma = with_modulus(section.gamma.0, gamma_sq);
    let party = QubitLikeSpec::new(
        section.p,
        gamma,
        spec.psi().clone(),
        spec.psi_perp().clone(),
    )
    .map_err(config_err("bipartite"))?;
    let rho = qubit_like_density(&party);
    let target_basis = OrthonormalBasis::containing(&spec.target_state());
    let protocol = Protocol::mub(target_basis, [0], 0)?;
    Ok(Setup {
        id: id.to_string(),
        d,
        theta: None,
        gamma_sq: Some(gamma_sq.unwrap_or(gamma.norm_sqr())),
        rho: rho.tensor(&rho),
        protocol,
        closed: ClosedForm::Bipartite {
            spec,
            p: section.p,
            gamma,
        },
        mode: Mode::Trajectories,
    })
}

/// Diagonal single-copy state with `overlaps` on the first `m` basis vectors
/// and the remaining population spread evenly over the others.
fn copies_single_state(section: &CopiesSection, d: usize) -> Result<DensityMatrix, RunError> {
    let m = section.overlaps.len();
    if m > d {
        return Err(ConfigError::new(
            "copies.overlaps",
            format!("{m} targets do not fit in d = {d}"),
        )
        .into());
    }
    let used: f64 = section.overlaps.iter().sum();
    let rest = 1.0 - used;
    if rest < -qsteer::TOL || (m == d && rest.abs() > qsteer::TOL) {
        return Err(ConfigError::new(
            "copies.overlaps",
            format!("populations sum to {used}, which cannot complete a state"),
        )
        .into());
    }
    let mut pops = section.overlaps.clone();
    pops.extend(std::iter::repeat_n(
        rest.max(0.0) / (d - m).max(1) as f64,
        d - m,
    ));
    DensityMatrix::from_diagonal(&pops).map_err(config_err("copies.overlaps"))
}

fn copies_setup(config: &ExperimentConfig, id: &str, d: usize) -> Result<Setup, RunError> {
    let section = config
        .copies
        .as_ref()
        .ok_or_else(|| ConfigError::new("copies", "section is required"))?;
    let big = u32::try_from(section.copies)
        .ok()
        .and_then(|l| d.checked_pow(l))
        .filter(|&big| big <= MAX_DIM)
        .ok_or_else(|| {
            RunError::Infeasible(format!(
                "composite dimension {d}^{} exceeds {MAX_DIM}",
                section.copies
            ))
        })?;
    let single = copies_single_state(section, d)?;
    let rho = single.tensor_power(section.copies);
    // |k⟩^{⊗l} sits at index k·(1 + d + … + d^{l-1})
    let stride = (big - 1) / (d - 1);
    let targets = (0..section.overlaps.len()).map(|k| k * stride);
    let protocol = Protocol::mub(OrthonormalBasis::computational(big)?, targets, 0)?;
    Ok(Setup {
        id: id.to_string(),
        d,
        theta: None,
        gamma_sq: None,
        rho,
        protocol,
        closed: ClosedForm::Copies {
            d,
            copies: section.copies,
            overlaps: section.overlaps.clone(),
        },
        mode: Mode::Trajectories,
    })
}
