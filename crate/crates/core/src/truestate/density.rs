use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{ConditionedState, MeasurementUpdate, Observable, WaveState};
use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

/// Largest grid the density-matrix integrator accepts.
pub const MAX_DENSITY_POINTS: usize = 128;

/// Full conditioned density matrix in the position basis.
#[derive(Clone)]
pub struct DensityState {
    grid: Arc<SpatialGrid>,
    rho: DMatrix<Complex64>,
    potential_amplitude: f64,
    time: f64,
    // (amplitude, dt, one-step propagator)
    unitaries: Vec<(f64, f64, DMatrix<Complex64>)>,
}

impl std::fmt::Debug for DensityState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DensityState")
            .field("n", &self.rho.nrows())
            .field("potential_amplitude", &self.potential_amplitude)
            .field("time", &self.time)
            .finish()
    }
}

impl DensityState {
    pub fn from_matrix(grid: Arc<SpatialGrid>, rho: DMatrix<Complex64>, potential_amplitude: f64) -> Result<Self> {
        let n = grid.len();
        if n > MAX_DENSITY_POINTS {
            return Err(Error::Unsupported(format!(
                "density-matrix integration is limited to {MAX_DENSITY_POINTS} grid points, got {n}"
            )));
        }
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::Config(format!("density matrix must be {n}x{n}")));
        }
        let mut s = Self { grid, rho, potential_amplitude, time: 0.0, unitaries: Vec::new() };
        s.hermitize_and_normalize();
        Ok(s)
    }

    /// `|psi><psi|` for a grid wavefunction.
    pub fn from_wave(w: &WaveState) -> Result<Self> {
        let psi = w.psi();
        let n = psi.len();
        let rho = DMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj());
        let mut s = Self::from_matrix(w.grid().clone(), rho, w.potential_amplitude())?;
        s.time = w.time();
        Ok(s)
    }

    pub fn rho(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.trace().powi(2)
    }

    fn hermitize_and_normalize(&mut self) {
        let h = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        self.rho = h;
        let tr = self.trace();
        self.rho /= Complex64::new(tr, 0.0);
    }

    fn unitary(&mut self, dt: f64) -> usize {
        let v = self.potential_amplitude;
        if let Some(i) = self.unitaries.iter().position(|(a, d, _)| *a == v && *d == dt) {
            return i;
        }
        let n = self.grid.len();
        let mut u = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![Complex64::default(); n];
            e[j] = Complex64::new(1.0, 0.0);
            let mut w = WaveState::from_amplitudes(self.grid.clone(), e, v).expect("unit vector");
            w.step_hamiltonian(dt);
            for (i, z) in w.psi().iter().enumerate() {
                u[(i, j)] = *z;
            }
        }
        if self.unitaries.len() >= 8 {
            self.unitaries.remove(0);
        }
        self.unitaries.push((v, dt, u));
        self.unitaries.len() - 1
    }

    /// `rho -> U rho U^dagger` with the same split-step propagator the
    /// wavefunction integrator uses.
    pub fn step_hamiltonian(&mut self, dt: f64) {
        let k = self.unitary(dt);
        let u = &self.unitaries[k].2;
        self.rho = u * &self.rho * u.adjoint();
        self.time += dt;
    }

    /// Measurement terms `-Gamma [c,[c,rho]] dt - sqrt(2 eta Gamma) ({c,rho} - 2<c> rho) dW`
    /// in Kraus form, which keeps `rho` positive: with `L = -sqrt(2 Gamma) c` and
    /// `dy = dW - sqrt(8 eta Gamma) <c> dt`,
    /// `rho -> M rho M + (1 - eta) L rho L dt`, `M = 1 - L^2 dt/2 + sqrt(eta) L dy + eta L^2 (dy^2 - dt)/2`,
    /// then renormalized.
    pub fn step_measurement(&mut self, dw: f64, gamma: f64, eta: f64, dt: f64) -> Result<MeasurementUpdate> {
        let grid = self.grid.clone();
        let c = grid.cos_sq();
        let n = c.len();
        let tr0 = self.trace();
        let m = (0..n).map(|i| self.rho[(i, i)].re * c[i]).sum::<f64>() / tr0;
        let dy = dw - (8.0 * eta * gamma).sqrt() * m * dt;
        let l: Vec<f64> = c.iter().map(|ci| -(2.0 * gamma).sqrt() * ci).collect();
        let kraus: Vec<f64> = l
            .iter()
            .map(|li| 1.0 - 0.5 * li * li * dt + eta.sqrt() * li * dy + 0.5 * eta * li * li * (dy * dy - dt))
            .collect();
        for j in 0..n {
            for i in 0..n {
                self.rho[(i, j)] *= kraus[i] * kraus[j] + (1.0 - eta) * l[i] * l[j] * dt;
            }
        }
        let tr1 = self.trace();
        if !(tr1.is_finite() && tr1 > 0.0) {
            return Err(Error::StepSize((tr1 - tr0).abs()));
        }
        self.hermitize_and_normalize();
        let after = (0..n).map(|i| self.rho[(i, i)].re * c[i]).sum::<f64>();
        Ok(MeasurementUpdate { mean_cos_sq: m, mean_cos_sq_after: after, norm_sqr_before_renormalization: tr1 / tr0 })
    }

    /// One full step: Hamiltonian then measurement.
    pub fn step(&mut self, dw: f64, gamma: f64, eta: f64, dt: f64) -> Result<MeasurementUpdate> {
        self.step_hamiltonian(dt);
        self.step_measurement(dw, gamma, eta, dt)
    }

    /// Momentum distribution `<p_k|rho|p_k>`, FFT-ordered and normalized.
    fn momentum_distribution(&self) -> Vec<f64> {
        let n = self.grid.len();
        let x = self.grid.positions();
        let p = self.grid.momenta();
        let f = DMatrix::from_fn(n, n, |k, i| {
            // phase relative to the first grid point matches the FFT convention
            Complex64::from_polar(1.0, -p[k] * (x[i] - x[0]))
        });
        let a = &f * &self.rho;
        let mut out: Vec<f64> =
            (0..n).map(|k| (0..n).map(|j| (a[(k, j)] * f[(k, j)].conj()).re).sum::<f64>()).collect();
        let total: f64 = out.iter().sum();
        out.iter_mut().for_each(|w| *w /= total);
        out
    }

    fn position_average(&self, f: impl Fn(usize) -> f64) -> f64 {
        (0..self.grid.len()).map(|i| self.rho[(i, i)].re * f(i)).sum::<f64>() / self.trace()
    }
}

impl ConditionedState for DensityState {
    fn time(&self) -> f64 {
        self.time
    }
    fn potential_amplitude(&self) -> f64 {
        self.potential_amplitude
    }
    fn set_potential_amplitude(&mut self, v: f64) {
        self.potential_amplitude = v;
    }
    fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }
    fn step_hamiltonian(&mut self, dt: f64) {
        DensityState::step_hamiltonian(self, dt)
    }
    fn step_measurement(&mut self, dw: f64, gamma: f64, eta: f64, dt: f64) -> Result<MeasurementUpdate> {
        DensityState::step_measurement(self, dw, gamma, eta, dt)
    }

    fn projector_expectation(&self, phi: &[f64]) -> f64 {
        let n = phi.len();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                acc += phi[i] * phi[j] * self.rho[(i, j)].re;
            }
        }
        acc / self.trace()
    }

    fn expectation(&self, which: Observable<'_>) -> f64 {
        let x = self.grid.positions();
        let c = self.grid.cos_sq();
        let p = self.grid.momenta();
        match which {
            Observable::Position => self.position_average(|i| x[i]),
            Observable::PositionSq => self.position_average(|i| x[i] * x[i]),
            Observable::CosSq => self.position_average(|i| c[i]),
            Observable::Cos2kX => self.position_average(|i| 2.0 * c[i] - 1.0),
            Observable::CosSqSinSq => self.position_average(|i| c[i] * (1.0 - c[i])),
            Observable::Grid(f) => self.position_average(|i| f[i]),
            Observable::Momentum => self.momentum_distribution().iter().zip(p).map(|(w, p)| w * p).sum(),
            Observable::MomentumSq => self.momentum_distribution().iter().zip(p).map(|(w, p)| w * p * p).sum(),
            Observable::Heff => {
                let p2: f64 = self.momentum_distribution().iter().zip(p).map(|(w, p)| w * p * p).sum();
                PI * p2 - self.potential_amplitude * self.position_average(|i| c[i])
            }
            Observable::Parity => {
                let n = self.grid.len();
                (0..n).map(|i| self.rho[(self.grid.mirror(i), i)].re).sum::<f64>() / self.trace()
            }
        }
    }
}
