//! Spectral decomposition of the Hermitian part of a dissipative system.
//!
//! Everything downstream (resolvent, poles, statistics) only needs the distinct
//! energy levels `E_l` that the decay state touches and the total overlap `p_l`
//! of the decay state with each eigenspace. [`build_spectral_model`] produces
//! exactly that reduced description from a full [`QuantumSystem`].
//!
//! Units: ħ = 1, so energies and rates share one unit.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const HERMITIAN_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-12;
const OVERLAP_SUM_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 50;

/// Default relative tolerance under which two eigenvalues count as one level.
pub const DEFAULT_DEGENERACY_REL_TOL: f64 = 1e-9;
/// Default overlap under which a level is treated as absent from the decay state.
pub const DEFAULT_OVERLAP_TOL: f64 = 1e-12;

/// Hermitian Hamiltonian, normalised decay state and decay rate.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSystem {
    hamiltonian: DMatrix<C64>,
    decay_state: DVector<C64>,
    gamma: f64,
}

impl QuantumSystem {
    pub fn new(hamiltonian: DMatrix<C64>, decay_state: DVector<C64>, gamma: f64) -> Result<Self> {
        check_hermitian(&hamiltonian)?;
        if decay_state.len() != hamiltonian.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "decay state has length {} but hamiltonian is {}x{}",
                decay_state.len(),
                hamiltonian.nrows(),
                hamiltonian.ncols()
            )));
        }
        let norm = decay_state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self { hamiltonian, decay_state, gamma })
    }

    pub fn hamiltonian(&self) -> &DMatrix<C64> {
        &self.hamiltonian
    }

    pub fn decay_state(&self) -> &DVector<C64> {
        &self.decay_state
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    /// Same Hamiltonian and decay state with another decay rate.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.hamiltonian.clone(), self.decay_state.clone(), gamma)
    }

    /// `<ψ_d|H|ψ_d>`, the frequency of the fast mode at strong dissipation.
    pub fn decay_state_energy(&self) -> f64 {
        self.decay_state.dotc(&(&self.hamiltonian * &self.decay_state)).re
    }
}

pub(crate) fn check_hermitian(h: &DMatrix<C64>) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "hamiltonian must be square, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if h.nrows() == 0 {
        return Err(Error::invalid("hamiltonian is empty"));
    }
    let mut deviation: f64 = 0.0;
    for i in 0..h.nrows() {
        for j in i..h.ncols() {
            deviation = deviation.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    if deviation > HERMITIAN_TOL || !deviation.is_finite() {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// One distinct energy level and the decay state's weight on its eigenspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub energy: f64,
    pub overlap: f64,
}

impl Level {
    pub fn new(energy: f64, overlap: f64) -> Self {
        Self { energy, overlap }
    }
}

/// The reduced description `{(E_l, p_l)}` consumed by all analytics.
///
/// Levels are sorted by energy, adjacent gaps exceed `degeneracy_tol`, every
/// overlap exceeds `overlap_tol` and the overlaps sum to one. The winding number
/// `w` is simply the number of levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralModel {
    levels: Vec<Level>,
    degeneracy_tol: f64,
    overlap_tol: f64,
    discarded_overlap: f64,
}

impl SpectralModel {
    /// Validate a level list. Levels may come in any order; they are sorted here.
    pub fn new(mut levels: Vec<Level>, degeneracy_tol: f64, overlap_tol: f64) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::invalid("spectral model needs at least one level"));
        }
        if !(degeneracy_tol >= 0.0) || !(overlap_tol >= 0.0) {
            return Err(Error::invalid("tolerances must be non-negative"));
        }
        if levels.iter().any(|l| !l.energy.is_finite() || !l.overlap.is_finite()) {
            return Err(Error::invalid("level energies and overlaps must be finite"));
        }
        levels.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        for pair in levels.windows(2) {
            let gap = pair[1].energy - pair[0].energy;
            if gap <= degeneracy_tol {
                return Err(Error::invalid(format!(
                    "levels {} and {} are closer than the degeneracy tolerance {degeneracy_tol:e}",
                    pair[0].energy, pair[1].energy
                )));
            }
        }
        for l in &levels {
            if l.overlap <= overlap_tol || l.overlap > 1.0 + OVERLAP_SUM_TOL {
                return Err(Error::invalid(format!(
                    "overlap {} of level {} outside ({overlap_tol:e}, 1]",
                    l.overlap, l.energy
                )));
            }
        }
        let total: f64 = levels.iter().map(|l| l.overlap).sum();
        if (total - 1.0).abs() > OVERLAP_SUM_TOL {
            return Err(Error::invalid(format!("overlaps sum to {total}, expected 1")));
        }
        Ok(Self { levels, degeneracy_tol, overlap_tol, discarded_overlap: 0.0 })
    }

    /// Build from energies and (not necessarily normalised) positive weights.
    pub fn from_weights(energies: &[f64], weights: &[f64]) -> Result<Self> {
        if energies.len() != weights.len() {
            return Err(Error::ShapeMismatch("energies and weights differ in length".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("weights must have a positive sum"));
        }
        let levels = energies
            .iter()
            .zip(weights)
            .map(|(&e, &w)| Level::new(e, w / total))
            .collect();
        let span = energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        Self::new(levels, DEFAULT_DEGENERACY_REL_TOL * span, DEFAULT_OVERLAP_TOL)
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn overlaps(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.overlap).collect()
    }

    /// Number of distinct levels with overlap, i.e. the winding number `w`.
    pub fn winding(&self) -> usize {
        self.levels.len()
    }

    pub fn degeneracy_tol(&self) -> f64 {
        self.degeneracy_tol
    }

    pub fn overlap_tol(&self) -> f64 {
        self.overlap_tol
    }

    /// Overlap mass of levels dropped because it fell below `overlap_tol`.
    pub fn discarded_overlap(&self) -> f64 {
        self.discarded_overlap
    }

    /// Smallest gap between adjacent levels; infinite for a single level.
    pub fn min_gap(&self) -> f64 {
        self.levels
            .windows(2)
            .map(|p| p[1].energy - p[0].energy)
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_l |E_l|`.
    pub fn max_abs_energy(&self) -> f64 {
        self.levels.iter().fold(0.0, |m, l| m.max(l.energy.abs()))
    }

    pub fn span(&self) -> f64 {
        self.levels.last().unwrap().energy - self.levels[0].energy
    }

    pub fn max_overlap(&self) -> f64 {
        self.levels.iter().fold(0.0, |m, l| m.max(l.overlap))
    }

    /// `Σ p_l E_l = <ψ_d|H|ψ_d>`.
    pub fn mean_energy(&self) -> f64 {
        self.levels.iter().map(|l| l.overlap * l.energy).sum()
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<C64>,
}

impl EigenDecomposition {
    pub fn eigenvector(&self, k: usize) -> DVector<C64> {
        self.eigenvectors.column(k).into_owned()
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let v = &self.eigenvectors;
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&x| C64::new(x, 0.0)),
        ));
        v * d * v.adjoint()
    }
}

pub fn eigendecompose(system: &QuantumSystem) -> Result<EigenDecomposition> {
    jacobi_eigh(system.hamiltonian())
}

/// Cyclic Jacobi diagonalisation of a complex Hermitian matrix.
///
/// Each rotation first removes the phase of `a_pq` with a diagonal unitary and
/// then applies the real symmetric Jacobi rotation, so the combined 2x2 unitary is
/// `[[c, s], [-s e^{-iφ}, c e^{-iφ}]]`.
pub fn jacobi_eigh(matrix: &DMatrix<C64>) -> Result<EigenDecomposition> {
    check_hermitian(matrix)?;
    let n = matrix.nrows();
    let mut a = matrix.clone();
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
    }
    let mut v = DMatrix::<C64>::identity(n, n);
    let norm = a.norm();
    let threshold = f64::EPSILON * norm;

    let off_norm = |a: &DMatrix<C64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&a) <= threshold;
    let mut sweep = 0;
    while !converged && sweep < MAX_SWEEPS {
        sweep += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let b = apq.norm();
                if b == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Off-diagonal entries negligible next to both diagonals are zeroed directly.
                if sweep > 4 && b < 1e-3 * f64::EPSILON * app.abs().min(aqq.abs()) {
                    a[(p, q)] = C64::new(0.0, 0.0);
                    a[(q, p)] = C64::new(0.0, 0.0);
                    continue;
                }
                let phase = apq / b;
                let theta = (aqq - app) / (2.0 * b);
                let t = if theta.is_infinite() {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let u00 = C64::new(c, 0.0);
                let u01 = C64::new(s, 0.0);
                let u10 = -phase.conj() * s;
                let u11 = phase.conj() * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * u00 + akq * u10;
                    a[(k, q)] = akp * u01 + akq * u11;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = u00.conj() * apk + u10.conj() * aqk;
                    a[(q, k)] = u01.conj() * apk + u11.conj() * aqk;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * u00 + vkq * u10;
                    v[(k, q)] = vkp * u01 + vkq * u11;
                }
            }
        }
        converged = off_norm(&a) <= threshold;
    }
    if !converged {
        return Err(Error::EigenNoConvergence { sweeps: sweep, off_diagonal: off_norm(&a) });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

/// Distinct levels of a Hermitian matrix with their eigenvectors, clustered by
/// single linkage on the sorted spectrum (a chain of gaps `<= degeneracy_tol`
/// forms one level).
#[derive(Debug, Clone)]
pub struct LevelCluster {
    pub energy: f64,
    pub eigenvectors: Vec<DVector<C64>>,
}

pub fn cluster_levels(eigen: &EigenDecomposition, degeneracy_tol: f64) -> Vec<LevelCluster> {
    let mut clusters: Vec<(Vec<f64>, Vec<DVector<C64>>)> = Vec::new();
    let mut last: Option<f64> = None;
    for (k, &lambda) in eigen.eigenvalues.iter().enumerate() {
        let vec = eigen.eigenvector(k);
        match (last, clusters.last_mut()) {
            (Some(prev), Some(cluster)) if lambda - prev <= degeneracy_tol => {
                cluster.0.push(lambda);
                cluster.1.push(vec);
            }
            _ => clusters.push((vec![lambda], vec![vec])),
        }
        last = Some(lambda);
    }
    clusters
        .into_iter()
        .map(|(values, eigenvectors)| LevelCluster {
            energy: values.iter().sum::<f64>() / values.len() as f64,
            eigenvectors,
        })
        .collect()
}

/// Default degeneracy tolerance `1e-9 ‖H‖` (spectral norm from the eigenvalues).
pub fn default_degeneracy_tol(eigen: &EigenDecomposition) -> f64 {
    let norm = eigen.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    DEFAULT_DEGENERACY_REL_TOL * norm
}

/// Reduce a system to its distinct overlapping levels.
///
/// Levels whose summed overlap is `<= overlap_tol` are dropped, the remaining
/// overlaps renormalised and the dropped mass kept in
/// [`SpectralModel::discarded_overlap`].
pub fn build_spectral_model(
    system: &QuantumSystem,
    degeneracy_tol: f64,
    overlap_tol: f64,
) -> Result<SpectralModel> {
    if !(degeneracy_tol > 0.0) || !(overlap_tol > 0.0) {
        return Err(Error::invalid("tolerances must be positive"));
    }
    let eigen = eigendecompose(system)?;
    model_from_eigen(&eigen, system.decay_state(), degeneracy_tol, overlap_tol)
}

/// [`build_spectral_model`] with the default tolerances.
pub fn spectral_model(system: &QuantumSystem) -> Result<SpectralModel> {
    let eigen = eigendecompose(system)?;
    let tol = default_degeneracy_tol(&eigen);
    model_from_eigen(&eigen, system.decay_state(), tol, DEFAULT_OVERLAP_TOL)
}

fn model_from_eigen(
    eigen: &EigenDecomposition,
    decay_state: &DVector<C64>,
    degeneracy_tol: f64,
    overlap_tol: f64,
) -> Result<SpectralModel> {
    let clusters = cluster_levels(eigen, degeneracy_tol);
    let all: Vec<Level> = clusters
        .iter()
        .map(|c| {
            let p = c.eigenvectors.iter().map(|v| v.dotc(decay_state).norm_sqr()).sum();
            Level::new(c.energy, p)
        })
        .collect();
    let total: f64 = all.iter().map(|l| l.overlap).sum();
    if (total - 1.0).abs() > OVERLAP_SUM_TOL {
        return Err(Error::NotNormalized { norm: total.sqrt() });
    }
    let (kept, dropped): (Vec<Level>, Vec<Level>) =
        all.into_iter().partition(|l| l.overlap > overlap_tol);
    if kept.is_empty() {
        let max_overlap = dropped.iter().fold(0.0f64, |m, l| m.max(l.overlap));
        return Err(Error::OrthogonalDecayState { max_overlap });
    }
    let discarded: f64 = dropped.iter().map(|l| l.overlap).sum();
    let kept_total: f64 = kept.iter().map(|l| l.overlap).sum();
    let levels = kept
        .into_iter()
        .map(|l| Level::new(l.energy, (l.overlap / kept_total).min(1.0)))
        .collect();
    let mut model = SpectralModel::new(levels, degeneracy_tol, overlap_tol)?;
    model.discarded_overlap = discarded;
    Ok(model)
}

/// Numerical rank of the cross-Gram matrix `M_{jm} = <ψ_d^j|E_{l,m}>`.
///
/// Counted as the eigenvalues of `M† M` above `rank_tol`.
pub fn subspace_rank(
    channel_states: &[DVector<C64>],
    level_eigenvectors: &[DVector<C64>],
    rank_tol: f64,
) -> Result<usize> {
    if channel_states.is_empty() || level_eigenvectors.is_empty() {
        return Ok(0);
    }
    let n = channel_states[0].len();
    if channel_states.iter().chain(level_eigenvectors).any(|v| v.len() != n) {
        return Err(Error::ShapeMismatch("all vectors must share one dimension".into()));
    }
    let cross = DMatrix::from_fn(channel_states.len(), level_eigenvectors.len(), |j, m| {
        channel_states[j].dotc(&level_eigenvectors[m])
    });
    let mut gram = cross.adjoint() * cross;
    // Symmetrise away rounding so the Hermitian check passes.
    let gram_t = gram.adjoint();
    gram = (gram + gram_t) * C64::new(0.5, 0.0);
    let eigen = jacobi_eigh(&gram)?;
    Ok(eigen.eigenvalues.iter().filter(|&&x| x > rank_tol).count())
}
