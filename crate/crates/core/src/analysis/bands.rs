use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::truestate::{ConditionedState, WaveState};

/// Lowest eigenstates of the discretized `H_eff` at a fixed depth.
///
/// With `periods` lattice periods on the grid each band contributes
/// `periods` eigenstates; band `n` is the `n`-th cluster.
#[derive(Debug, Clone)]
pub struct BandBasis {
    grid: Arc<SpatialGrid>,
    vmax: f64,
    /// Eigenvalues measured from `-vmax`, ascending.
    energies: Vec<f64>,
    states: Vec<Vec<f64>>,
}

/// Real symmetric matrix of `pi P^2 - V cos^2(kX)` on the grid, with the
/// kinetic term represented spectrally.
pub fn hamiltonian_matrix(grid: &SpatialGrid, v: f64) -> DMatrix<f64> {
    let n = grid.len();
    let x = grid.positions();
    let p = grid.momenta();
    let c = grid.cos_sq();
    // kinetic kernel depends only on i - j
    let kernel: Vec<f64> = (0..n)
        .map(|d| {
            let dx = x[d] - x[0];
            p.iter().map(|pk| PI * pk * pk * (pk * dx).cos()).sum::<f64>() / n as f64
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        let t = kernel[(i + n - j) % n];
        if i == j {
            t - v * c[i]
        } else {
            t
        }
    })
}

impl BandBasis {
    /// Diagonalize at depth `vmax`, keeping the lowest `keep_bands` bands
    /// (at least 8 states).
    pub fn compute(grid: Arc<SpatialGrid>, vmax: f64, keep_bands: usize) -> Result<Self> {
        let h = hamiltonian_matrix(&grid, vmax);
        let eig = SymmetricEigen::try_new(h, 1e-13, 0)
            .ok_or_else(|| Error::Numerical("band eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..grid.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let keep = (keep_bands * grid.periods()).max(8).min(grid.len());
        let mut energies = Vec::with_capacity(keep);
        let mut states = Vec::with_capacity(keep);
        for &k in order.iter().take(keep) {
            energies.push(eig.eigenvalues[k] + vmax);
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            // fix the sign so the largest component is positive
            let big = v.iter().copied().fold(0.0_f64, |m, a| if a.abs() > m.abs() { a } else { m });
            if big < 0.0 {
                v.iter_mut().for_each(|a| *a = -*a);
            }
            states.push(v);
        }
        Ok(Self { grid, vmax, energies, states })
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }
    pub fn vmax(&self) -> f64 {
        self.vmax
    }
    /// Eigenvalues relative to the potential minimum.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }
    pub fn state(&self, n: usize) -> &[f64] {
        &self.states[n]
    }
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    /// Mean energy of band `n` (relative to `-vmax`).
    pub fn band_energy(&self, n: usize) -> f64 {
        let p = self.grid.periods();
        self.energies[n * p..(n + 1) * p].iter().sum::<f64>() / p as f64
    }

    pub fn n_bands(&self) -> usize {
        self.states.len() / self.grid.periods()
    }

    /// Eigenstate `n` as a wavefunction at the basis depth.
    pub fn eigenstate(&self, n: usize) -> Result<WaveState> {
        let psi = self.states[n].iter().map(|&a| Complex64::new(a, 0.0)).collect();
        WaveState::from_amplitudes(self.grid.clone(), psi, self.vmax)
    }

    /// Populations of the lowest four bands plus whatever is left over.
    pub fn populations(&self, s: &dyn ConditionedState) -> BandPopulations {
        let p = self.grid.periods();
        let mut bands = [0.0; 4];
        for (n, b) in bands.iter_mut().enumerate().take(self.n_bands().min(4)) {
            *b = (n * p..(n + 1) * p).map(|k| s.projector_expectation(&self.states[k])).sum();
        }
        let remainder = 1.0 - bands.iter().sum::<f64>();
        BandPopulations { bands, remainder }
    }

    /// Orthogonal projection of `psi` onto the lowest `n_bands` bands.
    pub fn project(&self, psi: &[Complex64], n_bands: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); psi.len()];
        for phi in self.states.iter().take(n_bands * self.grid.periods()) {
            let amp: Complex64 = phi.iter().zip(psi).map(|(a, z)| z * a).sum();
            for (o, a) in out.iter_mut().zip(phi) {
                *o += amp * a;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPopulations {
    pub bands: [f64; 4],
    pub remainder: f64,
}

/// Convenience wrapper: band basis at the nominal depth on a given grid.
pub fn compute_band_basis(vmax: f64, grid: Arc<SpatialGrid>) -> Result<BandBasis> {
    BandBasis::compute(grid, vmax, 8)
}
