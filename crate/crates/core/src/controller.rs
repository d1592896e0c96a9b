//! Bang-bang feedback on the trigger signal `-<cos^2(kX)>`.
//!
//! Feedback only changes the energy through `d<H>/dt = -(dV/dt) <cos^2>`, so
//! with the amplitude confined to `[(1-eps)^2 V, (1+eps)^2 V]` the potential
//! goes to its low extreme when the signal peaks and to its high extreme
//! when it bottoms out. Extrema are located by a least-squares quadratic
//! over a sliding window; the sign of its slope at the newest sample picks
//! the amplitude.

use std::collections::VecDeque;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::params::{ControlConfig, ControllerSource};

/// `s(t) ~ a t^2 + b t + c` over the current window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFit {
    /// Time of the newest sample.
    pub t_now: f64,
    /// Coefficients in `tau = t - t_now`: `s ~ a tau^2 + slope tau + value`.
    pub a: f64,
    pub slope_at_now: f64,
    pub value_at_now: f64,
    pub n_points: usize,
}

impl QuadraticFit {
    /// Coefficients `(a, b, c)` in absolute time.
    pub fn coefficients(&self) -> (f64, f64, f64) {
        let (a, b, c, t) = (self.a, self.slope_at_now, self.value_at_now, self.t_now);
        (a, b - 2.0 * a * t, a * t * t - b * t + c)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let tau = t - self.t_now;
        self.a * tau * tau + self.slope_at_now * tau + self.value_at_now
    }
}

/// Least-squares weights for `n` equally spaced samples, oldest first.
/// Row `j` maps sample `j` onto `(c0, c1, c2)` of `c0 + c1 z + c2 z^2` with
/// `z = (n - 1 - j) / (n - 1)`, i.e. `z = 0` at the newest sample.
fn fit_weights(n: usize) -> Vec<[f64; 3]> {
    let scale = (n - 1) as f64;
    let z: Vec<f64> = (0..n).map(|j| (n - 1 - j) as f64 / scale).collect();
    let mut m = Matrix3::zeros();
    for &zi in &z {
        let v = Vector3::new(1.0, zi, zi * zi);
        m += v * v.transpose();
    }
    let inv = m.try_inverse().expect("at least three distinct abscissae");
    z.iter()
        .map(|&zi| {
            let w = inv * Vector3::new(1.0, zi, zi * zi);
            [w[0], w[1], w[2]]
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ControllerState {
    history: VecDeque<(f64, f64)>,
    capacity: usize,
    dt: f64,
    full_weights: Vec<[f64; 3]>,
    nominal: f64,
    low: f64,
    high: f64,
    current_amplitude: f64,
    active: bool,
    start_time: f64,
}

impl ControllerState {
    pub fn new(cc: &ControlConfig, vmax: f64) -> Result<Self> {
        cc.validate()?;
        Ok(Self {
            history: VecDeque::with_capacity(cc.fit_window),
            capacity: cc.fit_window,
            dt: cc.dt,
            full_weights: fit_weights(cc.fit_window),
            nominal: vmax,
            low: (1.0 - cc.epsilon).powi(2) * vmax,
            high: (1.0 + cc.epsilon).powi(2) * vmax,
            current_amplitude: vmax,
            active: false,
            start_time: cc.feedback_start_time,
        })
    }

    pub fn current_amplitude(&self) -> f64 {
        self.current_amplitude
    }
    pub fn is_active(&self) -> bool {
        self.active
    }
    pub fn low_amplitude(&self) -> f64 {
        self.low
    }
    pub fn high_amplitude(&self) -> f64 {
        self.high
    }
    pub fn nominal_amplitude(&self) -> f64 {
        self.nominal
    }
    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    /// Append a sample and refit. Samples must arrive exactly `dt` apart.
    pub fn push_and_fit(&mut self, t: f64, signal: f64) -> Result<QuadraticFit> {
        if !signal.is_finite() {
            return Err(Error::Contract(format!("non-finite trigger signal at t = {t}")));
        }
        if let Some(&(prev, _)) = self.history.back() {
            let tol = 1e-6 * self.dt + 1e-12 * t.abs();
            if (t - prev - self.dt).abs() > tol {
                return Err(Error::Contract(format!(
                    "sample at t = {t} does not follow t = {prev} by dt = {}",
                    self.dt
                )));
            }
        }
        if self.history.len() == self.capacity {
            self.history.pop_front();
        }
        self.history.push_back((t, signal));
        Ok(self.fit())
    }

    /// Fit over whatever the window currently holds. With fewer than three
    /// samples the fit degenerates to a constant with zero slope.
    pub fn fit(&self) -> QuadraticFit {
        let n = self.history.len();
        let t_now = self.history.back().map_or(0.0, |s| s.0);
        if n < 3 {
            let value = self.history.back().map_or(0.0, |s| s.1);
            return QuadraticFit { t_now, a: 0.0, slope_at_now: 0.0, value_at_now: value, n_points: n };
        }
        let partial;
        let w = if n == self.capacity {
            &self.full_weights
        } else {
            partial = fit_weights(n);
            &partial
        };
        let mut c = [0.0; 3];
        for (wj, (_, s)) in w.iter().zip(&self.history) {
            c[0] += wj[0] * s;
            c[1] += wj[1] * s;
            c[2] += wj[2] * s;
        }
        // z = -tau / span
        let span = (n - 1) as f64 * self.dt;
        QuadraticFit { t_now, a: c[2] / (span * span), slope_at_now: -c[1] / span, value_at_now: c[0], n_points: n }
    }

    /// Pick the amplitude for the next step. Before `feedback_start_time`
    /// (or while the window holds fewer than three samples) the nominal depth
    /// is used; afterwards a rising signal selects the high extreme, a
    /// falling one the low extreme, and an exactly flat fit holds.
    pub fn decide(&mut self, fit: &QuadraticFit) -> f64 {
        if !self.active && fit.t_now >= self.start_time {
            self.active = true;
        }
        if !self.active || fit.n_points < 3 {
            return self.current_amplitude;
        }
        if fit.slope_at_now > 0.0 {
            self.current_amplitude = self.high;
        } else if fit.slope_at_now < 0.0 {
            self.current_amplitude = self.low;
        }
        self.current_amplitude
    }
}

/// Candidate trigger inputs available in one control-loop step.
#[derive(Debug, Clone, Copy, Default)]
pub struct SignalInputs {
    /// `<cos^2>` under the Gaussian estimate.
    pub estimator_cos_sq: Option<f64>,
    /// `<cos^2>` of the true grid state.
    pub true_cos_sq: Option<f64>,
    /// Raw photocurrent increment `dr`.
    pub photocurrent: Option<f64>,
    pub gamma: f64,
    pub eta: f64,
    pub dt: f64,
}

/// The trigger sample `-<cos^2>` from the configured source, or `None` when
/// feedback is disabled. The photocurrent is rescaled by
/// `1 / (eta sqrt(8 Gamma) dt)` so its mean is `-<cos^2>`.
pub fn select_signal_source(source: ControllerSource, inputs: &SignalInputs) -> Result<Option<f64>> {
    let missing = |what: &str| Error::Contract(format!("{what} signal requested but not supplied"));
    match source {
        ControllerSource::None => Ok(None),
        ControllerSource::Estimator => inputs.estimator_cos_sq.map(|c| Some(-c)).ok_or_else(|| missing("estimator")),
        ControllerSource::TrueState => inputs.true_cos_sq.map(|c| Some(-c)).ok_or_else(|| missing("true-state")),
        ControllerSource::Photocurrent => {
            let dr = inputs.photocurrent.ok_or_else(|| missing("photocurrent"))?;
            let scale = inputs.eta * (8.0 * inputs.gamma).sqrt() * inputs.dt;
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::Config("photocurrent trigger needs gamma > 0 and dt > 0".into()));
            }
            Ok(Some(dr / scale))
        }
    }
}
