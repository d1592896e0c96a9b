//! The conditioned "true" atomic state: Hamiltonian evolution under the
//! switched optical potential, homodyne measurement back-action, and the
//! photocurrent it produces.
//!
//! Two integrators share one interface:
//!
//! * [`WaveState`]: pure-state unraveling on the full grid, valid at unit
//!   detection efficiency. This is the production path.
//! * [`DensityState`]: the full stochastic master equation on a small grid,
//!   for cross-validation and imperfect detection.

mod density;
mod wave;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use density::DensityState;
pub use wave::WaveState;

use crate::error::Result;
use crate::grid::SpatialGrid;

/// Observables evaluated on a grid state.
#[derive(Debug, Clone, Copy)]
pub enum Observable<'a> {
    Position,
    PositionSq,
    Momentum,
    MomentumSq,
    /// `cos^2(k X)`, the measured operator.
    CosSq,
    Cos2kX,
    /// `cos^2(k X) sin^2(k X)`.
    CosSqSinSq,
    /// `pi P^2 - V(t) cos^2(k X)` at the current potential amplitude.
    Heff,
    Parity,
    /// Any position-diagonal operator given by its values on the grid.
    Grid(&'a [f64]),
}

/// Bookkeeping returned by a measurement substep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementUpdate {
    /// `<cos^2(kX)>` at the start of the substep; this is the value that
    /// enters the photocurrent.
    pub mean_cos_sq: f64,
    /// `<cos^2(kX)>` after the substep.
    pub mean_cos_sq_after: f64,
    /// Norm (or trace) after the linear update, before renormalization.
    pub norm_sqr_before_renormalization: f64,
}

pub trait ConditionedState: Send {
    fn time(&self) -> f64;
    fn potential_amplitude(&self) -> f64;
    fn set_potential_amplitude(&mut self, v: f64);
    fn grid(&self) -> &Arc<SpatialGrid>;

    /// Unitary evolution under `H_eff` at the current amplitude. Advances time.
    fn step_hamiltonian(&mut self, dt: f64);

    /// Measurement substep with Wiener increment `dw`. Does not advance time.
    fn step_measurement(&mut self, dw: f64, gamma: f64, eta: f64, dt: f64) -> Result<MeasurementUpdate>;

    fn expectation(&self, which: Observable<'_>) -> f64;

    /// `<phi|state|phi>` for a real, normalized grid vector `phi`.
    fn projector_expectation(&self, phi: &[f64]) -> f64;

    fn mean_cos_sq(&self) -> f64 {
        self.expectation(Observable::CosSq)
    }

    fn position_variance(&self) -> f64 {
        let m = self.expectation(Observable::Position);
        self.expectation(Observable::PositionSq) - m * m
    }

    fn momentum_variance(&self) -> f64 {
        let m = self.expectation(Observable::Momentum);
        self.expectation(Observable::MomentumSq) - m * m
    }

    /// `<H_eff>` at amplitude `vmax`, measured from the potential minimum `-vmax`.
    fn relative_energy(&self, vmax: f64) -> f64 {
        std::f64::consts::PI * self.expectation(Observable::MomentumSq) + vmax * (1.0 - self.mean_cos_sq())
    }
}

/// Seeded source of Wiener increments, one independent substream per
/// trajectory.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(base_seed: u64, trajectory: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
        rng.set_stream(trajectory);
        Self { rng }
    }

    /// `dW ~ Normal(0, dt)`.
    pub fn increment(&mut self, dt: f64) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        z * dt.sqrt()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    pub fn coin(&mut self) -> bool {
        self.rng.random()
    }
}

/// Scaled photocurrent increment produced by a true state with mean
/// `cos^2` of `mean_cos_sq`: `dr = sqrt(eta) (dW - sqrt(8 eta Gamma) <c> dt)`.
pub fn synthesize_photocurrent(mean_cos_sq: f64, dw: f64, gamma: f64, eta: f64, dt: f64) -> f64 {
    eta.sqrt() * (dw - (8.0 * eta * gamma).sqrt() * mean_cos_sq * dt)
}

/// Noise increment inferred from a photocurrent increment given a predicted
/// `<cos^2>`: `dW = dr / sqrt(eta) + sqrt(8 eta Gamma) <c> dt`.
pub fn innovation(dr: f64, mean_cos_sq: f64, gamma: f64, eta: f64, dt: f64) -> f64 {
    dr / eta.sqrt() + (8.0 * eta * gamma).sqrt() * mean_cos_sq * dt
}
