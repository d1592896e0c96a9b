use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::{ConditionedState, MeasurementUpdate, Observable};
use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

#[derive(Clone, Default)]
struct Workspace {
    scratch: Vec<Complex64>,
    // (dt, exp(-i pi p^2 dt) / N)
    kinetic: Option<(f64, Vec<Complex64>)>,
    // (amplitude, dt, exp(+i V cos^2 dt / 2))
    potential: Vec<(f64, f64, Vec<Complex64>)>,
}

/// Pure-state unraveling of the conditioned atomic state on a periodic grid.
///
/// Amplitudes are normalized as `sum |psi_i|^2 = 1`.
#[derive(Clone)]
pub struct WaveState {
    grid: Arc<SpatialGrid>,
    psi: Vec<Complex64>,
    potential_amplitude: f64,
    time: f64,
    work: Workspace,
}

impl std::fmt::Debug for WaveState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WaveState")
            .field("n", &self.psi.len())
            .field("potential_amplitude", &self.potential_amplitude)
            .field("time", &self.time)
            .finish()
    }
}

impl WaveState {
    /// Build from raw amplitudes; normalizes them.
    pub fn from_amplitudes(grid: Arc<SpatialGrid>, mut psi: Vec<Complex64>, potential_amplitude: f64) -> Result<Self> {
        if psi.len() != grid.len() {
            return Err(Error::Config(format!("expected {} amplitudes, got {}", grid.len(), psi.len())));
        }
        let n2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(n2.is_finite() && n2 > 0.0) {
            return Err(Error::Numerical(format!("cannot normalize state with norm^2 = {n2}")));
        }
        let s = n2.sqrt().recip();
        psi.iter_mut().for_each(|z| *z *= s);
        Ok(Self { grid, psi, potential_amplitude, time: 0.0, work: Workspace::default() })
    }

    /// Gaussian wavepacket centered at `(x0, p0)` with position variance `vx`
    /// and no x-p correlation. A minimum-uncertainty packet has `vx = 1/2`.
    pub fn gaussian(grid: Arc<SpatialGrid>, x0: f64, p0: f64, vx: f64, potential_amplitude: f64) -> Result<Self> {
        if vx.is_nan() || vx <= 0.0 {
            return Err(Error::Config(format!("position variance must be positive, got {vx}")));
        }
        let psi = grid
            .positions()
            .iter()
            .map(|&x| {
                let d = grid.wrap(x - x0);
                Complex64::from_polar((-d * d / (4.0 * vx)).exp(), p0 * d)
            })
            .collect();
        Self::from_amplitudes(grid, psi, potential_amplitude)
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }
    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }
    pub fn norm_sqr(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    fn kinetic_phase(&mut self, dt: f64) {
        let stale = !matches!(&self.work.kinetic, Some((d, _)) if *d == dt);
        if stale {
            let inv_n = 1.0 / self.grid.len() as f64;
            let phase = self.grid.momenta().iter().map(|p| Complex64::from_polar(inv_n, -PI * p * p * dt)).collect();
            self.work.kinetic = Some((dt, phase));
        }
    }

    fn potential_phase(&mut self, amplitude: f64, dt: f64) -> usize {
        if let Some(i) = self.work.potential.iter().position(|(a, d, _)| *a == amplitude && *d == dt) {
            return i;
        }
        let phase = self.grid.cos_sq().iter().map(|c| Complex64::from_polar(1.0, 0.5 * amplitude * c * dt)).collect();
        // switching only ever visits a handful of amplitudes
        if self.work.potential.len() >= 8 {
            self.work.potential.remove(0);
        }
        self.work.potential.push((amplitude, dt, phase));
        self.work.potential.len() - 1
    }

    /// One Strang step of `exp(-i H_eff dt)`: half potential kick, exact
    /// kinetic propagation in momentum space, half potential kick.
    pub fn step_hamiltonian(&mut self, dt: f64) {
        if self.work.scratch.len() < self.grid.scratch_len() {
            self.work.scratch = vec![Complex64::default(); self.grid.scratch_len()];
        }
        self.kinetic_phase(dt);
        let pi = self.potential_phase(self.potential_amplitude, dt);
        let half = &self.work.potential[pi].2;
        let kin = &self.work.kinetic.as_ref().expect("kinetic phase cached").1;
        for (z, h) in self.psi.iter_mut().zip(half) {
            *z *= h;
        }
        self.grid.forward(&mut self.psi, &mut self.work.scratch);
        for (z, k) in self.psi.iter_mut().zip(kin) {
            *z *= k;
        }
        self.grid.inverse(&mut self.psi, &mut self.work.scratch);
        for (z, h) in self.psi.iter_mut().zip(half) {
            *z *= h;
        }
        self.time += dt;
    }

    /// Measurement back-action and noise for unit detection efficiency:
    /// `dpsi = [-Gamma (c - <c>)^2 dt - sqrt(2 Gamma) (c - <c>) dW] psi`,
    /// `c = cos^2(k X)`, followed by renormalization.
    pub fn step_measurement(&mut self, dw: f64, gamma: f64, eta: f64, dt: f64) -> Result<MeasurementUpdate> {
        if eta < 1.0 {
            return Err(Error::Unsupported(format!(
                "the wavefunction unraveling requires eta = 1 (got {eta}); use DensityState for imperfect detection"
            )));
        }
        let c = self.grid.cos_sq();
        let mut n0 = 0.0;
        let mut m = 0.0;
        for (z, ci) in self.psi.iter().zip(c) {
            let w = z.norm_sqr();
            n0 += w;
            m += w * ci;
        }
        m /= n0;
        let s = (2.0 * gamma).sqrt();
        let mut n2 = 0.0;
        let mut c_after = 0.0;
        for (z, ci) in self.psi.iter_mut().zip(c) {
            let d = ci - m;
            *z *= 1.0 - gamma * d * d * dt - s * d * dw;
            let w = z.norm_sqr();
            n2 += w;
            c_after += w * ci;
        }
        if !(n2.is_finite() && n2 > 0.0) {
            return Err(Error::Numerical(format!("state norm collapsed to {n2} at t = {}", self.time)));
        }
        let scale = n2.sqrt().recip();
        self.psi.iter_mut().for_each(|z| *z *= scale);
        Ok(MeasurementUpdate {
            mean_cos_sq: m,
            mean_cos_sq_after: c_after / n2,
            norm_sqr_before_renormalization: n2 / n0,
        })
    }

    /// Momentum-space amplitudes (unnormalized FFT order).
    fn momentum_amplitudes(&self) -> Vec<Complex64> {
        let mut buf = self.psi.clone();
        let mut scratch = vec![Complex64::default(); self.grid.scratch_len()];
        self.grid.forward(&mut buf, &mut scratch);
        buf
    }

    fn position_average(&self, f: impl Fn(usize) -> f64) -> f64 {
        let n2 = self.norm_sqr();
        self.psi.iter().enumerate().map(|(i, z)| z.norm_sqr() * f(i)).sum::<f64>() / n2
    }

    fn momentum_average(&self, f: impl Fn(f64) -> f64) -> f64 {
        let phi = self.momentum_amplitudes();
        let total: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
        phi.iter().zip(self.grid.momenta()).map(|(z, p)| z.norm_sqr() * f(*p)).sum::<f64>() / total
    }
}

impl ConditionedState for WaveState {
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
        WaveState::step_hamiltonian(self, dt)
    }
    fn step_measurement(&mut self, dw: f64, gamma: f64, eta: f64, dt: f64) -> Result<MeasurementUpdate> {
        WaveState::step_measurement(self, dw, gamma, eta, dt)
    }

    fn projector_expectation(&self, phi: &[f64]) -> f64 {
        let amp: Complex64 = phi.iter().zip(&self.psi).map(|(a, z)| z * a).sum();
        amp.norm_sqr() / self.norm_sqr()
    }

    fn expectation(&self, which: Observable<'_>) -> f64 {
        let g = &self.grid;
        let x = g.positions();
        let c = g.cos_sq();
        match which {
            Observable::Position => self.position_average(|i| x[i]),
            Observable::PositionSq => self.position_average(|i| x[i] * x[i]),
            Observable::CosSq => self.position_average(|i| c[i]),
            Observable::Cos2kX => self.position_average(|i| 2.0 * c[i] - 1.0),
            Observable::CosSqSinSq => self.position_average(|i| c[i] * (1.0 - c[i])),
            Observable::Grid(f) => self.position_average(|i| f[i]),
            Observable::Momentum => self.momentum_average(|p| p),
            Observable::MomentumSq => self.momentum_average(|p| p * p),
            Observable::Heff => {
                PI * self.momentum_average(|p| p * p) - self.potential_amplitude * self.position_average(|i| c[i])
            }
            Observable::Parity => {
                let n2 = self.norm_sqr();
                let s: f64 = (0..g.len()).map(|i| (self.psi[i].conj() * self.psi[g.mirror(i)]).re).sum();
                s / n2
            }
        }
    }
}
