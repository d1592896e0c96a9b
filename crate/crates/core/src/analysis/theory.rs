use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Inputs of the steady-state energy balance between measurement heating
/// `4 Gamma k^4 <H>` and coarse-grained feedback cooling `-8 eps (<H> - E0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryInputs {
    pub epsilon: f64,
    pub gamma: f64,
    pub ktilde: f64,
    /// Ground band energy relative to `-V_max`.
    pub e0: f64,
    /// First excited band energy relative to `-V_max`.
    pub e1: f64,
}

impl TheoryInputs {
    /// Harmonic band energies `pi` and `3 pi`.
    pub fn harmonic(epsilon: f64, gamma: f64, ktilde: f64) -> Self {
        Self { epsilon, gamma, ktilde, e0: PI, e1: 3.0 * PI }
    }

    /// Heating-to-cooling ratio `Gamma k^4 / (2 eps)`.
    pub fn beta(&self) -> f64 {
        self.gamma * self.ktilde.powi(4) / (2.0 * self.epsilon)
    }

    pub fn controllable(&self) -> bool {
        self.beta() < 1.0
    }

    /// Smallest switching amplitude for which cooling beats heating.
    pub fn epsilon_threshold(gamma: f64, ktilde: f64) -> f64 {
        0.5 * gamma * ktilde.powi(4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoryVariant {
    /// Excess energy carried by the wave-packet centroid.
    Centroid,
    /// Excess energy carried by squeezing of the wave packet.
    Squeezing,
}

/// Predicted steady-state `<H_eff>` relative to `-V_max`. Parity
/// purification leaves the atom in the lowest even or odd band with equal
/// odds, so the floor is `(E0 + E1)/2`.
pub fn theory_ss_energy(t: &TheoryInputs, variant: TheoryVariant) -> Result<f64> {
    let beta = t.beta();
    if beta.is_nan() || beta >= 1.0 {
        return Err(Error::Uncontrollable(beta));
    }
    let floor = 0.5 * (t.e0 + t.e1);
    Ok(match variant {
        TheoryVariant::Centroid => floor / (1.0 - beta),
        TheoryVariant::Squeezing => floor / (1.0 - beta * beta).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_operating_point() {
        let t = TheoryInputs::harmonic(0.1, 23.6, 0.155);
        assert!((t.beta() - 0.0681).abs() < 5e-5, "beta = {}", t.beta());
        let e = theory_ss_energy(&t, TheoryVariant::Centroid).unwrap();
        assert!((e - 6.74).abs() < 0.005, "E = {e}");
    }

    #[test]
    fn zero_beta_limit() {
        let t = TheoryInputs::harmonic(0.1, 0.0, 0.155);
        let e = theory_ss_energy(&t, TheoryVariant::Centroid).unwrap();
        assert!((e - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn uncontrollable_regime_is_flagged() {
        let t = TheoryInputs::harmonic(0.005, 23.6, 0.155);
        assert!(!t.controllable());
        assert!(matches!(theory_ss_energy(&t, TheoryVariant::Centroid), Err(Error::Uncontrollable(_))));
        let t = TheoryInputs::harmonic(0.0, 23.6, 0.155);
        assert!(theory_ss_energy(&t, TheoryVariant::Squeezing).is_err());
    }

    #[test]
    fn threshold_matches_beta_one() {
        let eps = TheoryInputs::epsilon_threshold(23.6, 0.155);
        let t = TheoryInputs::harmonic(eps, 23.6, 0.155);
        assert!((t.beta() - 1.0).abs() < 1e-12);
        assert!((eps - 0.0068).abs() < 1e-4);
    }
}
