//! Real-time Gaussian state estimator.
//!
//! The observer tracks two means and three second moments of a Gaussian
//! Wigner function. Moment equations follow from the conditioned master
//! equation applied to `X, P, X^2, P^2, XP + PX`, with every expectation of
//! the form `<g(X, P) e^{iuX}>` closed by the Gaussian identity
//!
//! ```text
//! <e^{iuX}>          = phi = exp(iu<X> - u^2 Vx / 2)
//! <z e^{iuX}> / phi  = <z> + iu Cov(z, X)
//! ```
//!
//! With `u = 2k`, `sigma = C/2`, `s = sqrt(2 eta Gamma)` and `dW` the
//! innovation, the central moments obey
//!
//! ```text
//! d<X> = 2 pi <P> dt                                   + s u Vx Im(phi) dW
//! d<P> = -V k Im(phi) dt                               + s u sigma Im(phi) dW
//! dVx  = [2 pi C - bX^2] dt                            + s u^2 Vx^2 Re(phi) dW
//! dVp  = [-2 V k^2 C Re(phi) + Gamma k^2 (1 - Re(phi2)) - bP^2] dt
//!                                                      + s (u^2 sigma^2 - k^2) Re(phi) dW
//! dC   = [4 pi Vp - 4 V k^2 Vx Re(phi) - 2 bX bP] dt   + 2 s u^2 Vx sigma Re(phi) dW
//! ```
//!
//! where `bX`, `bP` are the noise coefficients of the means and
//! `phi2 = <e^{2iuX}>`. The `-b^2` terms are the Ito corrections from
//! converting raw to central moments.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::truestate::innovation;

/// Allowed shortfall below the uncertainty bound before a step is clamped.
pub const UNCERTAINTY_TOLERANCE: f64 = 1e-6;
const VARIANCE_FLOOR: f64 = 1e-9;

/// Means and covariances of the estimator's Gaussian.
///
/// `cxp` is `<XP + PX> - 2<X><P>`, twice the symmetric covariance, so the
/// uncertainty relation reads `vx vp - (cxp/2)^2 >= 1/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub x_mean: f64,
    pub p_mean: f64,
    pub vx: f64,
    pub vp: f64,
    pub cxp: f64,
}

impl GaussianState {
    /// The mismatched start used for the tracking runs:
    /// `<X> = 6, <P> = 0, Vx = Vp = 1/sqrt(2), C = 0`.
    pub fn tracking_initial() -> Self {
        Self {
            x_mean: 6.0,
            p_mean: 0.0,
            vx: std::f64::consts::FRAC_1_SQRT_2,
            vp: std::f64::consts::FRAC_1_SQRT_2,
            cxp: 0.0,
        }
    }

    /// Minimum-uncertainty (coherent) Gaussian.
    pub fn coherent(x_mean: f64, p_mean: f64) -> Self {
        Self { x_mean, p_mean, vx: 0.5, vp: 0.5, cxp: 0.0 }
    }

    /// `vx vp - (cxp/2)^2`; equals 1/4 for pure Gaussians.
    pub fn uncertainty_product(&self) -> f64 {
        self.vx * self.vp - 0.25 * self.cxp * self.cxp
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.x_mean, self.p_mean, self.vx, self.vp, self.cxp]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self { x_mean: a[0], p_mean: a[1], vx: a[2], vp: a[3], cxp: a[4] }
    }

    /// `<e^{iuX}>` under the Gaussian ansatz.
    pub fn characteristic(&self, u: f64) -> Complex64 {
        Complex64::from_polar((-0.5 * u * u * self.vx).exp(), u * self.x_mean)
    }

    /// `<cos(2kX)>`.
    pub fn mean_cos_2kx(&self, ktilde: f64) -> f64 {
        self.characteristic(2.0 * ktilde).re
    }

    /// `<cos^2(kX)>`.
    pub fn mean_cos_sq(&self, ktilde: f64) -> f64 {
        0.5 * (1.0 + self.mean_cos_2kx(ktilde))
    }

    /// `<cos^2(kX) sin^2(kX)> = (1 - <cos 4kX>) / 8`.
    pub fn mean_cos_sq_sin_sq(&self, ktilde: f64) -> f64 {
        (1.0 - self.characteristic(4.0 * ktilde).re) / 8.0
    }

    /// `<H_eff>` at amplitude `v`, measured from `-v`.
    pub fn relative_energy(&self, v: f64, ktilde: f64) -> f64 {
        PI * (self.vp + self.p_mean * self.p_mean) + v * (1.0 - self.mean_cos_sq(ktilde))
    }
}

/// Closed-form `<e^{iuX}>` for a Gaussian state.
pub fn gaussian_closure(g: &GaussianState, u: f64) -> Complex64 {
    g.characteristic(u)
}

/// Drift and diffusion of the five central moments, ordered as
/// `[<X>, <P>, Vx, Vp, C]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRates {
    pub drift: [f64; 5],
    pub diffusion: [f64; 5],
}

/// Evaluate the closed moment equations at potential amplitude `v`.
pub fn moment_rates(g: &GaussianState, v: f64, gamma: f64, ktilde: f64, eta: f64) -> MomentRates {
    let k = ktilde;
    let u = 2.0 * k;
    let sigma = 0.5 * g.cxp;
    let s = (2.0 * eta * gamma).sqrt();
    let phi = g.characteristic(u);
    let phi2 = g.characteristic(2.0 * u);

    let bx = s * u * g.vx * phi.im;
    let bp = s * u * sigma * phi.im;
    let bvx = s * u * u * g.vx * g.vx * phi.re;
    let bvp = s * (u * u * sigma * sigma - k * k) * phi.re;
    let bc = 2.0 * s * u * u * g.vx * sigma * phi.re;

    let drift = [
        2.0 * PI * g.p_mean,
        -v * k * phi.im,
        2.0 * PI * g.cxp - bx * bx,
        -2.0 * v * k * k * g.cxp * phi.re + gamma * k * k * (1.0 - phi2.re) - bp * bp,
        4.0 * PI * g.vp - 4.0 * v * k * k * g.vx * phi.re - 2.0 * bx * bp,
    ];
    MomentRates { drift, diffusion: [bx, bp, bvx, bvp, bc] }
}

/// What the estimator inferred from one photocurrent increment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnovationRecord {
    pub dw_est: f64,
    pub predicted_cos_sq: f64,
}

/// Result of one estimator update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorUpdate {
    pub state: GaussianState,
    pub innovation: InnovationRecord,
    pub clamped: bool,
}

/// Drift and diffusion in the coordinates `[<X>, <P>, Vx, C, D]` with
/// `D = Vx Vp - C^2/4`. Ito's rule gives
/// `dD = [Vp aVx + Vx aVp - sigma aC + bVx bVp - bC^2/4] dt + bD dW`, and
/// `bD = 4 s k^2 Vx Re(phi) (D - 1/4)` vanishes on the uncertainty bound.
fn reduced_rates(y: &[f64; 5], v: f64, gamma: f64, ktilde: f64, eta: f64) -> ([f64; 5], [f64; 5]) {
    let g = from_reduced(y);
    let r = moment_rates(&g, v, gamma, ktilde, eta);
    let sigma = 0.5 * g.cxp;
    let [bx, bp, bvx, bvp, bc] = r.diffusion;
    let a_d = g.vp * r.drift[2] + g.vx * r.drift[3] - sigma * r.drift[4] + bvx * bvp - 0.25 * bc * bc;
    let s = (2.0 * eta * gamma).sqrt();
    let b_d = 4.0 * s * ktilde * ktilde * g.vx * g.characteristic(2.0 * ktilde).re * (y[4] - 0.25);
    ([r.drift[0], r.drift[1], r.drift[2], r.drift[4], a_d], [bx, bp, bvx, bc, b_d])
}

fn to_reduced(g: &GaussianState) -> [f64; 5] {
    [g.x_mean, g.p_mean, g.vx, g.cxp, g.uncertainty_product()]
}

fn from_reduced(y: &[f64; 5]) -> GaussianState {
    let vp = (y[4] + 0.25 * y[3] * y[3]) / y[2];
    GaussianState { x_mean: y[0], p_mean: y[1], vx: y[2], vp, cxp: y[3] }
}

/// Advance the moments by one derivative-free Milstein (Platen) step
/// driven by the photocurrent increment `dr`. The covariance is integrated
/// through `(Vx, C, D)` so the uncertainty bound is kept by the scheme
/// itself rather than by clamping. Only the measurement record, the
/// applied potential amplitude and the model parameters enter.
pub fn estimator_step(
    g: &GaussianState,
    dr: f64,
    v: f64,
    gamma: f64,
    ktilde: f64,
    eta: f64,
    dt: f64,
) -> EstimatorUpdate {
    let predicted = g.mean_cos_sq(ktilde);
    let dw = innovation(dr, predicted, gamma, eta, dt);
    let y0 = to_reduced(g);
    let (a, b) = reduced_rates(&y0, v, gamma, ktilde, eta);
    let sq = dt.sqrt();
    let mut support = y0;
    for i in 0..5 {
        support[i] += a[i] * dt + b[i] * sq;
    }
    let (_, b1) = reduced_rates(&support, v, gamma, ktilde, eta);
    let ito = (dw * dw - dt) / (2.0 * sq);
    let mut y = y0;
    for i in 0..5 {
        y[i] += a[i] * dt + b[i] * dw + (b1[i] - b[i]) * ito;
    }
    let (state, clamped) = enforce_uncertainty(from_reduced(&y));
    EstimatorUpdate { state, innovation: InnovationRecord { dw_est: dw, predicted_cos_sq: predicted }, clamped }
}

/// Project a covariance that fell below the uncertainty bound back onto it.
/// Returns whether anything was changed.
pub fn enforce_uncertainty(mut g: GaussianState) -> (GaussianState, bool) {
    if !g.is_finite() {
        return (g, false);
    }
    let mut clamped = false;
    if g.vx <= 0.0 {
        g.vx = VARIANCE_FLOOR;
        clamped = true;
    }
    if g.vp <= 0.0 {
        g.vp = VARIANCE_FLOOR;
        clamped = true;
    }
    let mut det = g.uncertainty_product();
    if det <= 0.0 {
        g.cxp = 0.0;
        det = g.vx * g.vp;
        clamped = true;
    }
    if det < 0.25 - UNCERTAINTY_TOLERANCE {
        let lambda = (0.25 / det).sqrt();
        g.vx *= lambda;
        g.vp *= lambda;
        g.cxp *= lambda;
        clamped = true;
    }
    (g, clamped)
}

/// Estimator with its diagnostics counters.
#[derive(Debug, Clone)]
pub struct GaussianEstimator {
    state: GaussianState,
    ktilde: f64,
    eta: f64,
    steps: u64,
    clamped_steps: u64,
}

impl GaussianEstimator {
    pub fn new(initial: GaussianState, ktilde: f64, eta: f64) -> Self {
        Self { state: initial, ktilde, eta, steps: 0, clamped_steps: 0 }
    }

    pub fn state(&self) -> &GaussianState {
        &self.state
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn clamped_steps(&self) -> u64 {
        self.clamped_steps
    }

    /// Fraction of steps that needed the uncertainty clamp.
    pub fn clamp_fraction(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.clamped_steps as f64 / self.steps as f64
        }
    }

    /// A run is flagged when more than 0.1% of its steps were clamped.
    pub fn flagged(&self) -> bool {
        self.clamp_fraction() > 1e-3
    }

    /// `-<cos^2(kX)>` under the current estimate.
    pub fn trigger_signal(&self) -> f64 {
        -self.state.mean_cos_sq(self.ktilde)
    }

    pub fn step(&mut self, dr: f64, v: f64, gamma: f64, dt: f64, t: f64) -> Result<InnovationRecord> {
        let up = estimator_step(&self.state, dr, v, gamma, self.ktilde, self.eta, dt);
        if !up.state.is_finite() {
            return Err(Error::EstimatorDivergence(t));
        }
        self.steps += 1;
        if up.clamped {
            self.clamped_steps += 1;
        }
        self.state = up.state;
        Ok(up.innovation)
    }
}
