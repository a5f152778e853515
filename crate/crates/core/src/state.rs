//! Pure states, density matrices and the operations on them that the
//! steering protocol consumes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result, PSD_FLOOR, TOL};

/// A unit-norm vector in a `d`-dimensional complex Hilbert space, `d >= 2`.
///
/// The global phase is kept as given; every quantity the protocol consumes
/// is phase invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: DVector<Complex64>,
}

impl PureState {
    /// Wraps `amplitudes`, rejecting vectors whose norm is not 1 within
    /// [`TOL`].
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let amps = DVector::from_vec(amplitudes);
        check_dim(amps.len())?;
        let defect = (amps.norm() - 1.0).abs();
        if !(defect <= TOL) {
            return Err(Error::NotNormalized(defect));
        }
        Ok(Self { amps })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let amps = DVector::from_vec(amplitudes);
        check_dim(amps.len())?;
        let norm = amps.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::param(
                "amplitudes",
                "vector has zero or non-finite norm",
            ));
        }
        Ok(Self {
            amps: amps / Complex64::from(norm),
        })
    }

    /// The `index`-th computational basis vector of dimension `d`.
    pub fn basis_vector(d: usize, index: usize) -> Result<Self> {
        check_dim(d)?;
        if index >= d {
            return Err(Error::param(
                "index",
                format!("{index} is out of range for d = {d}"),
            ));
        }
        let mut amps = DVector::zeros(d);
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub(crate) fn from_vector_unchecked(amps: DVector<Complex64>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap_sq(&self, other: &PureState) -> Result<f64> {
        self.inner(other).map(|z| z.norm_sqr())
    }

    /// The rank-one projector `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::from_matrix_unchecked(&self.amps * self.amps.adjoint())
    }

    pub fn norm_defect(&self) -> f64 {
        (self.amps.norm() - 1.0).abs()
    }
}

/// A `d × d` Hermitian, positive-semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates `m` as a density matrix: Hermitian and unit trace within
    /// [`TOL`], smallest eigenvalue at least [`PSD_FLOOR`].
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        let rho = Self { m };
        rho.check()?;
        Ok(rho)
    }

    /// Diagonal density matrix with the given populations.
    pub fn from_diagonal(populations: &[f64]) -> Result<Self> {
        let diag = DVector::from_iterator(
            populations.len(),
            populations.iter().map(|&p| Complex64::from(p)),
        );
        Self::new(DMatrix::from_diagonal(&diag))
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<Complex64>) -> Self {
        Self { m }
    }

    /// Re-checks every invariant. Constructors that skip validation produce
    /// matrices that pass this check up to round-off.
    pub fn check(&self) -> Result<()> {
        let (rows, cols) = self.m.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        check_dim(rows)?;
        if self
            .m
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::param("matrix", "entries must be finite"));
        }
        let herm = self.hermiticity_defect();
        if herm > TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = self.m.trace();
        let trace_defect = (tr - Complex64::new(1.0, 0.0)).norm();
        if trace_defect > TOL {
            return Err(Error::BadTrace(trace_defect));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < PSD_FLOOR {
            return Err(Error::NotPositive(min_eig));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn trace(&self) -> Complex64 {
        self.m.trace()
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        // tr(ρ²) = Σ_ij ρ_ij ρ_ji = Σ_ij |ρ_ij|² for Hermitian ρ
        self.m.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Max elementwise `|ρ - ρ†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.m.nrows();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.m + self.m.adjoint()) * Complex64::from(0.5);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Diagonal entries `⟨k|ρ|k⟩` in the computational basis.
    pub fn populations(&self) -> Vec<f64> {
        self.m.diagonal().iter().map(|z| z.re).collect()
    }
}

/// Anything that assigns Born-rule populations to basis vectors.
pub trait QuantumState {
    fn dim(&self) -> usize;

    /// `⟨v|state|v⟩` for a vector of matching length.
    fn population_of(&self, v: &DVector<Complex64>) -> f64;

    fn to_density(&self) -> DensityMatrix;

    /// `⟨v|state|v⟩`, checking dimensions.
    fn population(&self, v: &PureState) -> Result<f64> {
        same_dim(self.dim(), v.dim())?;
        Ok(self.population_of(v.amplitudes()))
    }
}

impl QuantumState for PureState {
    fn dim(&self) -> usize {
        self.amps.len()
    }

    fn population_of(&self, v: &DVector<Complex64>) -> f64 {
        v.dotc(&self.amps).norm_sqr()
    }

    fn to_density(&self) -> DensityMatrix {
        self.projector()
    }
}

impl QuantumState for DensityMatrix {
    fn dim(&self) -> usize {
        self.m.nrows()
    }

    fn population_of(&self, v: &DVector<Complex64>) -> f64 {
        v.dotc(&(&self.m * v)).re
    }

    fn to_density(&self) -> DensityMatrix {
        self.clone()
    }
}

/// Kronecker product. Index `(a, b)` of the factors maps to `a·d_b + b`.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Self;

    /// `self ⊗ self ⊗ … ⊗ self` with `copies` factors.
    fn tensor_power(&self, copies: usize) -> Self
    where
        Self: Clone,
    {
        assert!(copies >= 1, "tensor power needs at least one factor");
        let mut out = self.clone();
        for _ in 1..copies {
            out = out.tensor(self);
        }
        out
    }
}

impl Tensor for PureState {
    fn tensor(&self, other: &Self) -> Self {
        Self::from_vector_unchecked(self.amps.kronecker(&other.amps))
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, other: &Self) -> Self {
        Self::from_matrix_unchecked(self.m.kronecker(&other.m))
    }
}

/// `⟨φ|ρ|φ⟩`, the probability that a measurement of the target observable
/// on `rho` yields `phi`.
pub fn target_overlap(rho: &DensityMatrix, phi: &PureState) -> Result<f64> {
    same_dim(rho.dim(), phi.dim())?;
    let z = phi.amps.dotc(&(&rho.m * &phi.amps));
    debug_assert!(z.im.abs() <= TOL, "⟨φ|ρ|φ⟩ has imaginary part {}", z.im);
    Ok(z.re)
}

/// `I/d`.
pub fn maximally_mixed(d: usize) -> Result<DensityMatrix> {
    check_dim(d)?;
    Ok(DensityMatrix::from_matrix_unchecked(
        DMatrix::identity(d, d) * Complex64::from(1.0 / d as f64),
    ))
}

/// Squared Hilbert-Schmidt distance `tr[(ρ-σ)†(ρ-σ)]`.
pub fn hs_distance_sq(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho.dim(), sigma.dim())?;
    Ok(rho
        .m
        .iter()
        .zip(sigma.m.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum())
}

/// A Haar-random pure state: `d` independent standard complex Gaussians
/// normalized to unit length.
pub fn haar_random_pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<PureState> {
    check_dim(d)?;
    let amps = DVector::from_fn(d, |_, _| gaussian(rng));
    let norm = amps.norm();
    Ok(PureState::from_vector_unchecked(
        amps / Complex64::from(norm),
    ))
}

/// A random mixed state `G G† / tr(G G†)` from a `d × rank` complex Ginibre
/// matrix. `rank = d` gives the Hilbert-Schmidt ensemble.
pub fn random_density<R: Rng + ?Sized>(
    d: usize,
    rank: usize,
    rng: &mut R,
) -> Result<DensityMatrix> {
    check_dim(d)?;
    if rank == 0 || rank > d {
        return Err(Error::param(
            "rank",
            format!("must lie in 1..={d}, got {rank}"),
        ));
    }
    let g = DMatrix::from_fn(d, rank, |_, _| gaussian(rng));
    let mut m = &g * g.adjoint();
    let tr = m.trace().re;
    m /= Complex64::from(tr);
    // symmetrize away the round-off
    let m = (&m + m.adjoint()) * Complex64::from(0.5);
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

pub(crate) fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// A state supported on `span{ψ, ψ⊥}` with populations `p`, `1 - p` and
/// coherence `⟨ψ|ρ|ψ⊥⟩ = γ √(p(1-p))`.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitLikeSpec {
    p: f64,
    gamma: Complex64,
    psi: PureState,
    psi_perp: PureState,
}

impl QubitLikeSpec {
    pub fn new(p: f64, gamma: Complex64, psi: PureState, psi_perp: PureState) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("p", format!("{p} is outside [0, 1]")));
        }
        if !(gamma.norm() <= 1.0 + TOL) {
            return Err(Error::param(
                "gamma",
                format!("|γ| = {} exceeds 1", gamma.norm()),
            ));
        }
        let cross = psi.inner(&psi_perp)?.norm();
        if cross > TOL {
            return Err(Error::param(
                "psi_perp",
                format!("not orthogonal to psi (|⟨ψ|ψ⊥⟩| = {cross:e})"),
            ));
        }
        Ok(Self {
            p,
            gamma,
            psi,
            psi_perp,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn gamma(&self) -> Complex64 {
        self.gamma
    }

    pub fn psi(&self) -> &PureState {
        &self.psi
    }

    pub fn psi_perp(&self) -> &PureState {
        &self.psi_perp
    }
}

pub fn qubit_like_density(spec: &QubitLikeSpec) -> DensityMatrix {
    let a = spec.psi.amplitudes();
    let b = spec.psi_perp.amplitudes();
    let p = spec.p;
    let c = spec.gamma * (p * (1.0 - p)).sqrt();
    let m = a * a.adjoint() * Complex64::from(p)
        + b * b.adjoint() * Complex64::from(1.0 - p)
        + a * b.adjoint() * c
        + b * a.adjoint() * c.conj();
    DensityMatrix::from_matrix_unchecked(m)
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    Ok(())
}

pub(crate) fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
