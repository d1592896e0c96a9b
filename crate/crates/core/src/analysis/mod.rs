//! Band structure, parity statistics, heating/cooling rates and the
//! steady-state energy theory.

mod bands;
mod theory;

use std::f64::consts::PI;

pub use bands::{compute_band_basis, hamiltonian_matrix, BandBasis, BandPopulations};
pub use theory::{theory_ss_energy, TheoryInputs, TheoryVariant};

use crate::error::{Error, Result};
use crate::estimator::GaussianState;
use crate::truestate::{ConditionedState, Observable};

/// Measurement heating and coarse-grained feedback cooling, `d<H>/dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    /// `8 pi Gamma k^2 <cos^2 sin^2>` evaluated on the state.
    pub heating: f64,
    /// Harmonic rewrite `4 Gamma k^4 <H>`.
    pub heating_harmonic: f64,
    /// `-8 eps (<H> - E0)`.
    pub cooling: f64,
}

/// Heating rate from the double-commutator term: only `pi P^2` responds,
/// with `d<P^2>/dt = 2 Gamma <(d cos^2/dx)^2> = 8 Gamma k^2 <cos^2 sin^2>`.
pub fn heating_rate(cos_sq_sin_sq: f64, gamma: f64, ktilde: f64) -> f64 {
    8.0 * PI * gamma * ktilde * ktilde * cos_sq_sin_sq
}

/// Heating in the harmonic regime, `4 Gamma k^4 <H>`.
pub fn heating_rate_harmonic(energy: f64, gamma: f64, ktilde: f64) -> f64 {
    4.0 * gamma * ktilde.powi(4) * energy
}

/// Coarse-grained bang-bang cooling, `-8 eps (<H> - E0)`.
pub fn cooling_rate(energy: f64, e0: f64, epsilon: f64) -> f64 {
    -8.0 * epsilon * (energy - e0)
}

/// Both rates for a grid state; `vmax` sets the energy reference.
pub fn rate_formulas(s: &dyn ConditionedState, vmax: f64, gamma: f64, ktilde: f64, epsilon: f64, e0: f64) -> Rates {
    let energy = s.relative_energy(vmax);
    Rates {
        heating: heating_rate(s.expectation(Observable::CosSqSinSq), gamma, ktilde),
        heating_harmonic: heating_rate_harmonic(energy, gamma, ktilde),
        cooling: cooling_rate(energy, e0, epsilon),
    }
}

/// Both rates for a Gaussian estimate.
pub fn rate_formulas_gaussian(g: &GaussianState, vmax: f64, gamma: f64, ktilde: f64, epsilon: f64, e0: f64) -> Rates {
    let energy = g.relative_energy(vmax, ktilde);
    Rates {
        heating: heating_rate(g.mean_cos_sq_sin_sq(ktilde), gamma, ktilde),
        heating_harmonic: heating_rate_harmonic(energy, gamma, ktilde),
        cooling: cooling_rate(energy, e0, epsilon),
    }
}

/// Summary of an ensemble of `<parity>` time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParityStatistics {
    pub n: usize,
    pub mean_initial: f64,
    pub mean_final: f64,
    /// Ensemble mean of `<P>(t_end) - <P>(0)`.
    pub drift: f64,
    pub drift_se: f64,
    /// Fraction of trajectories reaching `|<P>| > threshold` at any sample.
    pub purified_fraction: f64,
    /// Fraction with `|<P>| > threshold` at the last sample.
    pub purified_at_end: f64,
    /// Fraction ending with positive parity.
    pub even_fraction: f64,
    /// 95% binomial interval for a fair even/odd split with `n` trials.
    pub fair_split_interval: (f64, f64),
}

impl ParityStatistics {
    /// Drift consistent with zero at two standard errors.
    pub fn martingale_ok(&self) -> bool {
        self.drift.abs() <= 2.0 * self.drift_se
    }

    pub fn split_ok(&self) -> bool {
        let (lo, hi) = self.fair_split_interval;
        (lo..=hi).contains(&self.even_fraction)
    }
}

/// Ensemble parity statistics; each series runs from the initial to the
/// final time. Needs at least 16 trajectories.
pub fn parity_statistics(series: &[Vec<f64>], purity_threshold: f64) -> Result<ParityStatistics> {
    let n = series.len();
    if n < 16 {
        return Err(Error::Config(format!("parity statistics need >= 16 trajectories, got {n}")));
    }
    if series.iter().any(|s| s.is_empty()) {
        return Err(Error::Config("empty parity series".into()));
    }
    let nf = n as f64;
    let first: Vec<f64> = series.iter().map(|s| s[0]).collect();
    let last: Vec<f64> = series.iter().map(|s| *s.last().unwrap()).collect();
    let deltas: Vec<f64> = first.iter().zip(&last).map(|(a, b)| b - a).collect();
    let (drift, drift_se) = mean_se(&deltas);
    let purified = series.iter().filter(|s| s.iter().any(|p| p.abs() > purity_threshold)).count();
    let purified_end = last.iter().filter(|p| p.abs() > purity_threshold).count();
    let even = last.iter().filter(|p| **p > 0.0).count();
    let half = 1.96 * (0.25 / nf).sqrt();
    Ok(ParityStatistics {
        n,
        mean_initial: first.iter().sum::<f64>() / nf,
        mean_final: last.iter().sum::<f64>() / nf,
        drift,
        drift_se,
        purified_fraction: purified as f64 / nf,
        purified_at_end: purified_end as f64 / nf,
        even_fraction: even as f64 / nf,
        fair_split_interval: (0.5 - half, 0.5 + half),
    })
}

/// Sample mean and standard error of the mean (zero for a single value).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests;
