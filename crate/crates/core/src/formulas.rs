//! Closed-form success probabilities.
//!
//! Everything here is plain real arithmetic and never looks at a basis. The
//! tests in `tests/` check each expression against the protocol engine on a
//! matching configuration.

use num_complex::Complex64;

use crate::state::{check_dim, PureState, Tensor};
use crate::{Error, Result, TOL};

/// Accepts `x` in `[0, 1]` up to [`TOL`] of round-off and clamps it.
fn unit_interval(name: &'static str, x: f64) -> Result<f64> {
    if !(-TOL..=1.0 + TOL).contains(&x) {
        return Err(Error::param(name, format!("{x} is outside [0, 1]")));
    }
    Ok(x.clamp(0.0, 1.0))
}

fn pow_rounds(base: f64, n: usize) -> f64 {
    base.powi(i32::try_from(n).unwrap_or(i32::MAX))
}

/// Qubit with the intermediate basis rotated by `theta`:
/// `1 - q⊥ (1 - ½ sin²2θ)^N`, where `q⊥ = ⟨φ⊥|ρ|φ⊥⟩`.
pub fn ps_2d(theta: f64, q_perp: f64, n: usize) -> Result<f64> {
    let q_perp = unit_interval("q_perp", q_perp)?;
    let s = (2.0 * theta).sin();
    Ok(1.0 - q_perp * pow_rounds(1.0 - 0.5 * s * s, n))
}

/// [`ps_2d`] at `θ = π/4`: `1 - q⊥ / 2^N`.
pub fn ps_2d_max(q_perp: f64, n: usize) -> Result<f64> {
    let q_perp = unit_interval("q_perp", q_perp)?;
    Ok(1.0 - q_perp * pow_rounds(0.5, n))
}

/// Mutually unbiased pair in dimension `d`, one target with initial
/// population `overlap`: `1 - (1 - overlap)(1 - 1/d)^N`.
pub fn ps_mub(d: usize, overlap: f64, n: usize) -> Result<f64> {
    ps_multi_target(d, 1, overlap, n)
}

/// Large-`d` form of [`ps_mub`]: `1 - (1 - overlap) e^{-N/d}`.
pub fn ps_mub_asymptotic(d: usize, overlap: f64, n: usize) -> Result<f64> {
    check_dim(d)?;
    let overlap = unit_interval("overlap", overlap)?;
    Ok(1.0 - (1.0 - overlap) * (-(n as f64) / d as f64).exp())
}

/// `m` targets out of `d`, initial target population `target_mass`:
/// `1 - (1 - mass)(1 - m/d)^N`.
pub fn ps_multi_target(d: usize, m: usize, target_mass: f64, n: usize) -> Result<f64> {
    check_dim(d)?;
    if m == 0 || m > d {
        return Err(Error::param("m", format!("must lie in 1..={d}, got {m}")));
    }
    let target_mass = unit_interval("target_mass", target_mass)?;
    Ok(1.0 - (1.0 - target_mass) * pow_rounds(1.0 - m as f64 / d as f64, n))
}

/// Average of [`ps_mub`] over Haar-random pure initial states:
/// `1 - (1 - 1/d)^{N+1}`.
pub fn avg_ps(d: usize, n: usize) -> Result<f64> {
    avg_ps_general(d, n, 1, 1)
}

/// Haar average for `m` targets in a `d^dim_scale`-dimensional space:
/// `1 - (1 - m/d^dim_scale)^{N+1}`.
pub fn avg_ps_general(d: usize, n: usize, m: usize, dim_scale: usize) -> Result<f64> {
    let big_d = composite_dim(d, dim_scale)?;
    if m == 0 || m as f64 > big_d {
        return Err(Error::param(
            "m",
            format!("must lie in 1..={big_d}, got {m}"),
        ));
    }
    Ok(1.0 - pow_rounds(1.0 - m as f64 / big_d, n.saturating_add(1)))
}

/// Large-`N` form of [`avg_ps`]: `1 - e^{-(N+1)/d}`.
pub fn avg_ps_large_n(d: usize, n: usize) -> Result<f64> {
    avg_ps_copies_limit(d, n, 1, 1)
}

/// Limit `d^l ≫ m` of [`avg_ps_general`]: `1 - e^{-m(N+1)/d^l}`.
pub fn avg_ps_copies_limit(d: usize, n: usize, m: usize, copies: usize) -> Result<f64> {
    let big_d = composite_dim(d, copies)?;
    if m == 0 || m as f64 > big_d {
        return Err(Error::param(
            "m",
            format!("must lie in 1..={big_d}, got {m}"),
        ));
    }
    Ok(1.0 - (-(m as f64) * (n as f64 + 1.0) / big_d).exp())
}

fn composite_dim(d: usize, copies: usize) -> Result<f64> {
    check_dim(d)?;
    if copies == 0 {
        return Err(Error::param("copies", "must be at least 1"));
    }
    Ok((d as f64).powi(i32::try_from(copies).unwrap_or(i32::MAX)))
}

/// `l` copies of each of `m = overlaps.len()` orthogonal states, with
/// `overlaps[k] = ⟨ψ_k|ρ|ψ_k⟩` and a product initial state `ρ^{⊗l}`:
/// `1 - (1 - Σ_k overlaps[k]^l)(1 - m/d^l)^N`.
pub fn ps_copies(d: usize, copies: usize, overlaps: &[f64], n: usize) -> Result<f64> {
    let big_d = composite_dim(d, copies)?;
    let m = overlaps.len();
    if m == 0 || m as f64 > big_d {
        return Err(Error::param(
            "overlaps",
            format!("need between 1 and {big_d} entries, got {m}"),
        ));
    }
    let l = i32::try_from(copies).unwrap_or(i32::MAX);
    let mut mass = 0.0;
    for &q in overlaps {
        mass += unit_interval("overlaps", q)?.powi(l);
    }
    if mass > 1.0 + TOL {
        return Err(Error::param(
            "overlaps",
            format!("Σ overlap^l = {mass} exceeds 1"),
        ));
    }
    let mass = mass.min(1.0);
    Ok(1.0 - (1.0 - mass) * pow_rounds(1.0 - m as f64 / big_d, n))
}

/// Two-party target `α|ψ⟩|ψ⊥⟩ + β|ψ⊥⟩|ψ⟩`, each party of dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteTargetSpec {
    alpha: Complex64,
    beta: Complex64,
    psi: PureState,
    psi_perp: PureState,
}

impl BipartiteTargetSpec {
    pub fn new(
        alpha: Complex64,
        beta: Complex64,
        psi: PureState,
        psi_perp: PureState,
    ) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if !((norm - 1.0).abs() <= TOL) {
            return Err(Error::param(
                "alpha",
                format!("|α|² + |β|² = {norm}, expected 1"),
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
            alpha,
            beta,
            psi,
            psi_perp,
        })
    }

    /// Uses the first two computational basis vectors of dimension `d` as
    /// `|ψ⟩` and `|ψ⊥⟩`.
    pub fn standard(alpha: Complex64, beta: Complex64, d: usize) -> Result<Self> {
        Self::new(
            alpha,
            beta,
            PureState::basis_vector(d, 0)?,
            PureState::basis_vector(d, 1)?,
        )
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    pub fn d(&self) -> usize {
        self.psi.dim()
    }

    pub fn psi(&self) -> &PureState {
        &self.psi
    }

    pub fn psi_perp(&self) -> &PureState {
        &self.psi_perp
    }

    /// `Re(αβ*)`.
    pub fn correlation(&self) -> f64 {
        (self.alpha * self.beta.conj()).re
    }

    /// The target as a vector of the `d²`-dimensional composite space.
    pub fn target_state(&self) -> PureState {
        let ab = self.psi.tensor(&self.psi_perp);
        let ba = self.psi_perp.tensor(&self.psi);
        let v = ab.amplitudes() * self.alpha + ba.amplitudes() * self.beta;
        PureState::from_vector_unchecked(v)
    }
}

fn check_gamma(gamma: Complex64) -> Result<f64> {
    let g2 = gamma.norm_sqr();
    if !(g2 <= 1.0 + TOL) {
        return Err(Error::param(
            "gamma",
            format!("|γ| = {} exceeds 1", g2.sqrt()),
        ));
    }
    Ok(g2.min(1.0))
}

/// Initial population of the bipartite target in `ρ⊗ρ`:
/// `p(1-p)(1 + 2Re(αβ*)|γ|²)`.
pub fn bipartite_first_overlap(
    spec: &BipartiteTargetSpec,
    p: f64,
    gamma: Complex64,
) -> Result<f64> {
    let p = unit_interval("p", p)?;
    let g2 = check_gamma(gamma)?;
    Ok(p * (1.0 - p) * (1.0 + 2.0 * spec.correlation() * g2))
}

/// `1 - [1 - p(1-p)(1 + 2Re(αβ*)|γ|²)] (1 - 1/d²)^N`.
pub fn ps_bipartite(spec: &BipartiteTargetSpec, p: f64, gamma: Complex64, n: usize) -> Result<f64> {
    let q = bipartite_first_overlap(spec, p, gamma)?;
    let d2 = (spec.d() * spec.d()) as f64;
    Ok(1.0 - (1.0 - q) * pow_rounds(1.0 - 1.0 / d2, n))
}

/// Maximum of [`ps_bipartite`] over `p`, attained at `p = 1/2`:
/// `1 - [1 - ¼(1 + 2Re(αβ*)|γ|²)] (1 - 1/d²)^N`.
pub fn ps_bipartite_bound(spec: &BipartiteTargetSpec, gamma: Complex64, n: usize) -> Result<f64> {
    let g2 = check_gamma(gamma)?;
    let q = 0.25 * (1.0 + 2.0 * spec.correlation() * g2);
    let d2 = (spec.d() * spec.d()) as f64;
    Ok(1.0 - (1.0 - q) * pow_rounds(1.0 - 1.0 / d2, n))
}
