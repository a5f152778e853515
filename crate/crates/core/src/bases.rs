//! Measurement bases and the quantities derived from a pair of them.
//!
//! An observable is represented only by its eigenbasis: measurement outcomes
//! are basis indices, never eigenvalues.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::state::{check_dim, gaussian, same_dim, DensityMatrix, PureState, QuantumState};
use crate::{hs_distance_sq, Error, Result, TOL};

/// An ordered orthonormal basis, stored as the unitary whose columns are the
/// basis vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    u: DMatrix<Complex64>,
}

impl OrthonormalBasis {
    /// Rejects matrices that are not unitary within [`TOL`].
    pub fn new(u: DMatrix<Complex64>) -> Result<Self> {
        let (rows, cols) = u.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        check_dim(rows)?;
        let basis = Self { u };
        let defect = basis.unitarity_defect();
        if !(defect <= TOL) {
            return Err(Error::NotOrthonormal(defect));
        }
        Ok(basis)
    }

    pub fn from_states(states: &[PureState]) -> Result<Self> {
        let d = states.len();
        check_dim(d)?;
        for s in states {
            same_dim(d, s.dim())?;
        }
        let columns: Vec<_> = states.iter().map(|s| s.amplitudes().clone()).collect();
        Self::new(DMatrix::from_columns(&columns))
    }

    pub fn computational(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self {
            u: DMatrix::identity(d, d),
        })
    }

    /// A Haar-random basis: QR of a complex Ginibre matrix with the phases of
    /// `R`'s diagonal folded back into `Q`.
    pub fn haar_random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Self> {
        check_dim(d)?;
        let g = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
        let qr = g.qr();
        let (mut q, r) = qr.unpack();
        for j in 0..d {
            let rjj = r[(j, j)];
            let phase = if rjj.norm() > 0.0 {
                rjj / rjj.norm()
            } else {
                Complex64::from(1.0)
            };
            for i in 0..d {
                q[(i, j)] *= phase;
            }
        }
        Self::new(q)
    }

    /// An orthonormal basis whose first vector is `first`, completed by
    /// Gram-Schmidt over the computational basis.
    pub fn containing(first: &PureState) -> Self {
        let d = first.dim();
        let mut cols: Vec<DVector<Complex64>> = vec![first.amplitudes().clone()];
        for k in 0..d {
            if cols.len() == d {
                break;
            }
            let mut v = DVector::zeros(d);
            v[k] = Complex64::from(1.0);
            // two passes keep the result orthonormal to machine precision
            for _ in 0..2 {
                for c in &cols {
                    let proj = c.dotc(&v);
                    v -= c * proj;
                }
            }
            let norm = v.norm();
            if norm > 1e-6 {
                cols.push(v / Complex64::from(norm));
            }
        }
        Self {
            u: DMatrix::from_columns(&cols),
        }
    }

    pub(crate) fn from_unitary_unchecked(u: DMatrix<Complex64>) -> Self {
        Self { u }
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.u
    }

    pub fn state(&self, index: usize) -> PureState {
        PureState::from_vector_unchecked(self.u.column(index).into_owned())
    }

    pub fn states(&self) -> impl Iterator<Item = PureState> + '_ {
        (0..self.dim()).map(|i| self.state(i))
    }

    /// Max elementwise `|U†U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let gram = self.u.adjoint() * &self.u;
        let d = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                let ideal = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - Complex64::from(ideal)).norm());
            }
        }
        if worst.is_nan() {
            f64::INFINITY
        } else {
            worst
        }
    }

    /// `|⟨self_i|other_k⟩|²` as a matrix indexed `(i, k)`.
    pub fn transition_probabilities(&self, other: &OrthonormalBasis) -> Result<DMatrix<f64>> {
        same_dim(self.dim(), other.dim())?;
        Ok((self.u.adjoint() * &other.u).map(|z| z.norm_sqr()))
    }
}

/// One-round transition probabilities `p[k][j]` between outcomes of the
/// target observable through one intermediate measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    p: DMatrix<f64>,
}

impl OverlapMatrix {
    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.p[(k, j)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// Largest deviation of any row or column sum from 1.
    pub fn stochastic_defect(&self) -> f64 {
        let rows = self.p.row_iter().map(|r| (r.sum() - 1.0).abs());
        let cols = self.p.column_iter().map(|c| (c.sum() - 1.0).abs());
        rows.chain(cols).fold(0.0, f64::max)
    }
}

/// The basis `{cosθ|φ⟩ + e^{iϕ}sinθ|φ⊥⟩, -e^{-iϕ}sinθ|φ⟩ + cosθ|φ⊥⟩}` built on a
/// two-dimensional `reference = {|φ⟩, |φ⊥⟩}`.
pub fn basis_2d(theta: f64, phi: f64, reference: &OrthonormalBasis) -> Result<OrthonormalBasis> {
    if reference.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: reference.dim(),
        });
    }
    if !theta.is_finite() || !phi.is_finite() {
        return Err(Error::param("theta", "angles must be finite"));
    }
    let (s, c) = theta.sin_cos();
    let e = Complex64::from_polar(1.0, phi);
    let rot = DMatrix::from_row_slice(
        2,
        2,
        &[Complex64::from(c), -e.conj() * s, e * s, Complex64::from(c)],
    );
    OrthonormalBasis::new(reference.matrix() * rot)
}

/// Column `j` is `(1/√d) Σ_k ω^{jk} |ref_k⟩` with `ω = exp(2πi/d)`.
pub fn fourier_basis(reference: &OrthonormalBasis) -> OrthonormalBasis {
    let d = reference.dim();
    let scale = 1.0 / (d as f64).sqrt();
    let dft = DMatrix::from_fn(d, d, |k, j| {
        let turns = ((j * k) % d) as f64 / d as f64;
        Complex64::from_polar(scale, 2.0 * PI * turns)
    });
    OrthonormalBasis::from_unitary_unchecked(reference.matrix() * dft)
}

/// `max_{i,k} | |⟨b1_i|b2_k⟩|² - 1/d |`; zero exactly for mutually unbiased
/// bases.
pub fn unbiasedness_defect(b1: &OrthonormalBasis, b2: &OrthonormalBasis) -> Result<f64> {
    let inv_d = 1.0 / b1.dim() as f64;
    Ok(b1
        .transition_probabilities(b2)?
        .iter()
        .map(|q| (q - inv_d).abs())
        .fold(0.0, f64::max))
}

/// Rows are the vectors `A^k = (|⟨i|φ_k⟩|²)_i` with `|i⟩` ranging over
/// `b_theta` and `|φ_k⟩` over `b_phi`.
pub fn a_vectors(b_phi: &OrthonormalBasis, b_theta: &OrthonormalBasis) -> Result<DMatrix<f64>> {
    Ok(b_theta.transition_probabilities(b_phi)?.transpose())
}

/// `p[k][j] = Σ_i |⟨i|φ_k⟩|² |⟨φ_j|i⟩|²`, i.e. `A^k · A^j`.
pub fn overlap_matrix(
    b_phi: &OrthonormalBasis,
    b_theta: &OrthonormalBasis,
) -> Result<OverlapMatrix> {
    let a = a_vectors(b_phi, b_theta)?;
    Ok(OverlapMatrix {
        p: &a * a.transpose(),
    })
}

/// Non-selective measurement in `b`: `Σ_i ⟨i|ρ|i⟩ |i⟩⟨i|`.
pub fn dephase_in_basis<S: QuantumState + ?Sized>(
    state: &S,
    b: &OrthonormalBasis,
) -> Result<DensityMatrix> {
    same_dim(b.dim(), state.dim())?;
    let u = b.matrix();
    let pops = DVector::from_iterator(
        b.dim(),
        u.column_iter()
            .map(|col| Complex64::from(state.population_of(&col.into_owned()))),
    );
    let m = u * DMatrix::from_diagonal(&pops) * u.adjoint();
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    /// Index of the candidate with the smallest distance; lowest index wins
    /// ties within [`TOL`].
    pub best: usize,
    pub distances: Vec<f64>,
}

/// Squared Hilbert-Schmidt distance between `|target⟩⟨target|` and the state
/// left by dephasing `failure` in each candidate basis.
pub fn hs_optimality_scan(
    target: &PureState,
    failure: &PureState,
    candidates: &[OrthonormalBasis],
) -> Result<ScanResult> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    same_dim(target.dim(), failure.dim())?;
    let target_proj = target.projector();
    let distances = candidates
        .iter()
        .map(|b| hs_distance_sq(&dephase_in_basis(failure, b)?, &target_proj))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, &dist) in distances.iter().enumerate().skip(1) {
        if dist < distances[best] - TOL {
            best = i;
        }
    }
    Ok(ScanResult { best, distances })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

    fn c(re: f64) -> Complex64 {
        Complex64::from(re)
    }

    fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn basis_2d_at_zero_is_reference() {
        let mut rng = rng::stream(11);
        let reference = OrthonormalBasis::haar_random(2, &mut rng).unwrap();
        let b = basis_2d(0.0, 0.7, &reference).unwrap();
        assert!(max_diff(b.matrix(), reference.matrix()) < TOL);
    }

    #[test]
    fn basis_2d_at_quarter_pi() {
        let comp = OrthonormalBasis::computational(2).unwrap();
        let b = basis_2d(FRAC_PI_4, 0.0, &comp).unwrap();
        let expected = DMatrix::from_row_slice(
            2,
            2,
            &[
                c(FRAC_1_SQRT_2),
                c(-FRAC_1_SQRT_2),
                c(FRAC_1_SQRT_2),
                c(FRAC_1_SQRT_2),
            ],
        );
        assert!(max_diff(b.matrix(), &expected) < TOL);
    }

    #[test]
    fn basis_2d_is_unitary_for_random_angles() {
        let mut rng = rng::stream(12);
        let comp = OrthonormalBasis::computational(2).unwrap();
        for _ in 0..100 {
            let theta = rng.random_range(-10.0..10.0);
            let phi = rng.random_range(-10.0..10.0);
            assert!(basis_2d(theta, phi, &comp).unwrap().unitarity_defect() < TOL);
        }
        let comp3 = OrthonormalBasis::computational(3).unwrap();
        assert!(basis_2d(0.1, 0.0, &comp3).is_err());
    }

    #[test]
    fn two_point_fourier() {
        let f = fourier_basis(&OrthonormalBasis::computational(2).unwrap());
        let expected = DMatrix::from_row_slice(
            2,
            2,
            &[
                c(FRAC_1_SQRT_2),
                c(FRAC_1_SQRT_2),
                c(FRAC_1_SQRT_2),
                c(-FRAC_1_SQRT_2),
            ],
        );
        assert!(max_diff(f.matrix(), &expected) < TOL);
    }

    #[test]
    fn fourier_is_unbiased() {
        let mut rng = rng::stream(13);
        for d in 2..=8 {
            let comp = OrthonormalBasis::computational(d).unwrap();
            assert!(unbiasedness_defect(&fourier_basis(&comp), &comp).unwrap() < TOL);
            let random = OrthonormalBasis::haar_random(d, &mut rng).unwrap();
            assert!(unbiasedness_defect(&fourier_basis(&random), &random).unwrap() < TOL);
        }
    }

    #[test]
    fn fourier_d4_entries_have_magnitude_half() {
        let f = fourier_basis(&OrthonormalBasis::computational(4).unwrap());
        for z in f.matrix().iter() {
            assert_abs_diff_eq!(z.norm(), 0.5, epsilon = TOL);
        }
    }

    #[test]
    fn unbiasedness_defect_examples() {
        for d in 2..6 {
            let comp = OrthonormalBasis::computational(d).unwrap();
            assert_abs_diff_eq!(
                unbiasedness_defect(&comp, &comp).unwrap(),
                1.0 - 1.0 / d as f64,
                epsilon = TOL
            );
        }
        let comp = OrthonormalBasis::computational(2).unwrap();
        let b = basis_2d(FRAC_PI_8, 0.0, &comp).unwrap();
        // cos²(π/8) - 1/2 = √2/4
        assert_abs_diff_eq!(
            unbiasedness_defect(&b, &comp).unwrap(),
            0.353_553_390_593_273_7,
            epsilon = TOL
        );
        assert!(unbiasedness_defect(&comp, &OrthonormalBasis::computational(3).unwrap()).is_err());
    }

    #[test]
    fn overlap_matrix_examples() {
        let comp = OrthonormalBasis::computational(4).unwrap();
        let same = overlap_matrix(&comp, &comp).unwrap();
        assert_eq!(same.entries(), &DMatrix::identity(4, 4));

        for d in 2..8 {
            let comp = OrthonormalBasis::computational(d).unwrap();
            let mub = overlap_matrix(&comp, &fourier_basis(&comp)).unwrap();
            for p in mub.entries().iter() {
                assert_abs_diff_eq!(*p, 1.0 / d as f64, epsilon = TOL);
            }
        }

        let comp = OrthonormalBasis::computational(2).unwrap();
        let b = basis_2d(FRAC_PI_8, 0.0, &comp).unwrap();
        let p = overlap_matrix(&comp, &b).unwrap();
        assert_abs_diff_eq!(p.get(1, 0), 0.25, epsilon = TOL);
        assert_abs_diff_eq!(p.get(0, 1), 0.25, epsilon = TOL);
    }

    #[test]
    fn overlap_matrix_is_symmetric_and_doubly_stochastic() {
        let mut rng = rng::stream(14);
        for d in 2..7 {
            let a = OrthonormalBasis::haar_random(d, &mut rng).unwrap();
            let b = OrthonormalBasis::haar_random(d, &mut rng).unwrap();
            let p = overlap_matrix(&a, &b).unwrap();
            assert!(p.stochastic_defect() < 1e-10);
            let asym = (p.entries() - p.entries().transpose()).amax();
            assert!(asym < TOL);
        }
    }

    #[test]
    fn dephasing_examples() {
        let comp = OrthonormalBasis::computational(3).unwrap();
        let diag = DensityMatrix::from_diagonal(&[0.2, 0.3, 0.5]).unwrap();
        let out = dephase_in_basis(&diag, &comp).unwrap();
        assert!(max_diff(out.matrix(), diag.matrix()) < TOL);

        let mut rng = rng::stream(15);
        let b = OrthonormalBasis::haar_random(3, &mut rng).unwrap();
        let perp = PureState::basis_vector(3, 1).unwrap();
        let out = dephase_in_basis(&perp, &b).unwrap();
        let mut expected = DMatrix::zeros(3, 3);
        for i in 0..3 {
            let bi = b.state(i);
            let w = bi.overlap_sq(&perp).unwrap();
            expected += bi.projector().matrix() * c(w);
        }
        assert!(max_diff(out.matrix(), &expected) < TOL);
        assert_abs_diff_eq!(out.trace().re, 1.0, epsilon = TOL);
        assert!(dephase_in_basis(&perp, &OrthonormalBasis::computational(2).unwrap()).is_err());
    }

    #[test]
    fn scan_prefers_fourier_for_orthogonal_failure() {
        let comp = OrthonormalBasis::computational(3).unwrap();
        let target = comp.state(0);
        let failure = comp.state(2);
        let scan =
            hs_optimality_scan(&target, &failure, &[comp.clone(), fourier_basis(&comp)]).unwrap();
        assert_eq!(scan.best, 1);
        assert_abs_diff_eq!(scan.distances[0], 2.0, epsilon = TOL);
        // the failure dephases to I/3 in the Fourier basis: ||I/3 - |0⟩⟨0|||² = 1 - 1/3
        assert_abs_diff_eq!(scan.distances[1], 1.0 - 1.0 / 3.0, epsilon = TOL);

        let single = hs_optimality_scan(&target, &failure, std::slice::from_ref(&comp)).unwrap();
        assert_eq!(single.best, 0);
        assert_eq!(
            hs_optimality_scan(&target, &failure, &[]),
            Err(Error::EmptyCandidates)
        );
    }

    #[test]
    fn scan_over_2d_grid_peaks_at_quarter_pi() {
        let comp = OrthonormalBasis::computational(2).unwrap();
        let candidates: Vec<_> = (0..181)
            .map(|i| basis_2d(FRAC_PI_2 * i as f64 / 180.0, 0.0, &comp).unwrap())
            .collect();
        let scan = hs_optimality_scan(&comp.state(0), &comp.state(1), &candidates).unwrap();
        assert_eq!(scan.best, 90);
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let comp = OrthonormalBasis::computational(2).unwrap();
        let f = fourier_basis(&comp);
        let scan = hs_optimality_scan(
            &comp.state(0),
            &comp.state(1),
            &[comp.clone(), f.clone(), f],
        )
        .unwrap();
        assert_eq!(scan.best, 1);
    }

    #[test]
    fn containing_completes_to_orthonormal_basis() {
        let mut rng = rng::stream(16);
        for d in 2..10 {
            let psi = crate::haar_random_pure(d, &mut rng).unwrap();
            let b = OrthonormalBasis::containing(&psi);
            assert!(b.unitarity_defect() < TOL);
            assert_eq!(b.state(0), psi);
        }
        let e = PureState::basis_vector(4, 2).unwrap();
        assert!(OrthonormalBasis::containing(&e).unitarity_defect() < TOL);
    }

    #[test]
    fn constructor_rejects_non_unitary() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
        assert!(matches!(
            OrthonormalBasis::new(m),
            Err(Error::NotOrthonormal(_))
        ));
    }
}
