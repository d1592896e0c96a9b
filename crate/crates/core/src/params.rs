//! Physical and dimensionless model parameters, run configuration, and the
//! plain-text `key = value` config format.
//!
//! Scaled units: position in `sqrt(hbar / (m w_HO))`, momentum in
//! `sqrt(hbar m w_HO)`, time in `2 pi / w_HO`. In these units the effective
//! Hamiltonian is `pi P^2 - V_max cos^2(k X)` and one harmonic period is one
//! time unit.
//!
//! Two conventions are fixed here:
//!
//! * `optical_wavenumber` is the spectroscopic `1/lambda` (in 1/m); the
//!   spatial frequency used everywhere is `k = 2 pi / lambda`.
//! * The scaled measurement strength carries the `2 pi` of the time unit:
//!   `Gamma = 2 pi * 2 alpha^2 g^4 / (Delta^2 kappa w_HO)`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// kg
    pub atom_mass: f64,
    /// `1/lambda` in 1/m.
    pub optical_wavenumber: f64,
    /// CQED coupling `g` (rad/s).
    pub coupling_g: f64,
    /// Cavity energy decay rate `kappa` (rad/s).
    pub cavity_decay_kappa: f64,
    /// Atom-field detuning `Delta` (rad/s); red detuning is negative.
    pub detuning_delta: f64,
    pub mean_photon_alpha: f64,
    pub detection_eta: f64,
}

impl Default for PhysicalParams {
    /// Cesium D2 line in a high-finesse microcavity.
    fn default() -> Self {
        Self {
            atom_mass: 2.21e-25,
            optical_wavenumber: 11732.0e2,
            coupling_g: TAU * 120e6,
            cavity_decay_kappa: TAU * 40e6,
            detuning_delta: -TAU * 4e9,
            mean_photon_alpha: 1.0,
            detection_eta: 1.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("physical.atom_mass", self.atom_mass),
            ("physical.optical_wavenumber", self.optical_wavenumber),
            ("physical.coupling_g", self.coupling_g),
            ("physical.cavity_decay_kappa", self.cavity_decay_kappa),
            ("physical.mean_photon_alpha", self.mean_photon_alpha),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.detuning_delta.is_finite() && self.detuning_delta != 0.0) {
            return Err(Error::Config(format!(
                "physical.detuning_delta must be nonzero and finite, got {}",
                self.detuning_delta
            )));
        }
        check_eta("physical.detection_eta", self.detection_eta)
    }

    /// Soft warnings that do not invalidate the parameters.
    pub fn advisories(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.detuning_delta.abs() < 10.0 * self.cavity_decay_kappa {
            out.push(format!(
                "|Delta| = {:.3e} rad/s is not much larger than kappa = {:.3e} rad/s; \
                 adiabatic elimination may be inaccurate",
                self.detuning_delta.abs(),
                self.cavity_decay_kappa
            ));
        }
        out
    }

    /// Spatial frequency `k = 2 pi / lambda` (rad/m).
    pub fn spatial_frequency(&self) -> f64 {
        TAU * self.optical_wavenumber
    }

    /// Harmonic frequency of one lattice well, `alpha g k sqrt(2 hbar / (m |Delta|))`.
    pub fn omega_ho(&self) -> f64 {
        self.mean_photon_alpha
            * self.coupling_g
            * self.spatial_frequency()
            * (2.0 * HBAR / (self.atom_mass * self.detuning_delta.abs())).sqrt()
    }

    /// Measurement rate `2 alpha^2 g^4 / (Delta^2 kappa)` in rad/s.
    pub fn measurement_rate(&self) -> f64 {
        2.0 * self.mean_photon_alpha.powi(2) * self.coupling_g.powi(4)
            / (self.detuning_delta.powi(2) * self.cavity_decay_kappa)
    }
}

fn check_eta(name: &str, eta: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in (0, 1], got {eta}")))
    }
}

/// The dimensionless model. `vmax` is always `pi / ktilde^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledParams {
    gamma: f64,
    ktilde: f64,
    eta: f64,
    omega_ho: f64,
}

impl ScaledParams {
    pub fn new(gamma: f64, ktilde: f64, eta: f64, omega_ho: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::Config(format!("gamma must be finite and non-negative, got {gamma}")));
        }
        if !(ktilde.is_finite() && ktilde > 0.0) {
            return Err(Error::Config(format!("ktilde must be positive, got {ktilde}")));
        }
        if !(omega_ho.is_finite() && omega_ho > 0.0) {
            return Err(Error::Config(format!("omega_ho must be positive, got {omega_ho}")));
        }
        check_eta("eta", eta)?;
        Ok(Self { gamma, ktilde, eta, omega_ho })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn ktilde(&self) -> f64 {
        self.ktilde
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn omega_ho(&self) -> f64 {
        self.omega_ho
    }
    pub fn vmax(&self) -> f64 {
        PI / (self.ktilde * self.ktilde)
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new(gamma, self.ktilde, self.eta, self.omega_ho)
    }
    pub fn with_ktilde(self, ktilde: f64) -> Result<Self> {
        Self::new(self.gamma, ktilde, self.eta, self.omega_ho)
    }
    pub fn with_eta(self, eta: f64) -> Result<Self> {
        Self::new(self.gamma, self.ktilde, eta, self.omega_ho)
    }

    /// Seconds per scaled time unit.
    pub fn time_unit(&self) -> f64 {
        TAU / self.omega_ho
    }

    /// Convert back to physical rates for an atom of the given mass.
    pub fn descale(&self, atom_mass: f64) -> PhysicalRates {
        let length_unit = (HBAR / (atom_mass * self.omega_ho)).sqrt();
        let k = self.ktilde / length_unit;
        PhysicalRates {
            omega_ho: self.omega_ho,
            spatial_frequency: k,
            optical_wavenumber: k / TAU,
            measurement_rate: self.gamma * self.omega_ho / TAU,
        }
    }
}

/// Physical quantities recovered from the scaled model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalRates {
    pub omega_ho: f64,
    pub spatial_frequency: f64,
    pub optical_wavenumber: f64,
    /// `2 alpha^2 g^4 / (Delta^2 kappa)` in rad/s.
    pub measurement_rate: f64,
}

/// Map physical cavity-QED parameters onto the dimensionless model.
pub fn derive_scaled(p: &PhysicalParams) -> Result<ScaledParams> {
    p.validate()?;
    let omega_ho = p.omega_ho();
    let ktilde = p.spatial_frequency() * (HBAR / (p.atom_mass * omega_ho)).sqrt();
    let gamma = TAU * p.measurement_rate() / omega_ho;
    ScaledParams::new(gamma, ktilde, p.detection_eta, omega_ho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerSource {
    Estimator,
    Photocurrent,
    TrueState,
    None,
}

impl ControllerSource {
    pub const ALL: [ControllerSource; 4] = [
        ControllerSource::Estimator,
        ControllerSource::Photocurrent,
        ControllerSource::TrueState,
        ControllerSource::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ControllerSource::Estimator => "estimator",
            ControllerSource::Photocurrent => "photocurrent",
            ControllerSource::TrueState => "truestate",
            ControllerSource::None => "none",
        }
    }
}

impl fmt::Display for ControllerSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ControllerSource {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "estimator" => Ok(Self::Estimator),
            "photocurrent" => Ok(Self::Photocurrent),
            "truestate" | "true_state" => Ok(Self::TrueState),
            "none" => Ok(Self::None),
            other => Err(format!("expected one of estimator, photocurrent, truestate, none; got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlConfig {
    pub epsilon: f64,
    pub fit_window: usize,
    pub dt: f64,
    pub feedback_start_time: f64,
    pub controller_source: ControllerSource,
    /// Scale Gamma with the drive, `Gamma(t) = Gamma V(t) / V_max`.
    pub scale_gamma_with_drive: bool,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            fit_window: 300,
            dt: 0.0005,
            feedback_start_time: 2.0,
            controller_source: ControllerSource::Estimator,
            scale_gamma_with_drive: false,
        }
    }
}

impl ControlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && (0.0..1.0).contains(&self.epsilon)) {
            return Err(Error::Config(format!("control.epsilon must lie in [0, 1), got {}", self.epsilon)));
        }
        if self.fit_window < 3 {
            return Err(Error::Config(format!("control.fit_window must be >= 3, got {}", self.fit_window)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("control.dt must be positive, got {}", self.dt)));
        }
        if !self.feedback_start_time.is_finite() {
            return Err(Error::Config("control.feedback_start_time must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub grid_points: usize,
    pub domain_periods: usize,
    pub t_max: f64,
    pub n_trajectories: usize,
    pub base_seed: u64,
    pub output_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            grid_points: 512,
            domain_periods: 1,
            t_max: 100.0,
            n_trajectories: 128,
            base_seed: 1,
            output_stride: 100,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.grid_points.is_power_of_two() || self.grid_points < 8 {
            return Err(Error::Config(format!(
                "sim.grid_points must be a power of two >= 8, got {}",
                self.grid_points
            )));
        }
        if self.domain_periods < 1 {
            return Err(Error::Config("sim.domain_periods must be >= 1".into()));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::Config(format!("sim.t_max must be positive, got {}", self.t_max)));
        }
        if self.n_trajectories < 1 {
            return Err(Error::Config("sim.n_trajectories must be >= 1".into()));
        }
        if self.output_stride < 1 {
            return Err(Error::Config("sim.output_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Direct overrides of the derived dimensionless model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScaledOverrides {
    pub gamma: Option<f64>,
    pub ktilde: Option<f64>,
    pub eta: Option<f64>,
    pub omega_ho: Option<f64>,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub physical: PhysicalParams,
    pub scaled: ScaledOverrides,
    pub control: ControlConfig,
    pub sim: SimConfig,
    pub sweep_epsilons: Vec<f64>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            physical: PhysicalParams::default(),
            scaled: ScaledOverrides::default(),
            control: ControlConfig::default(),
            sim: SimConfig::default(),
            sweep_epsilons: vec![0.005, 0.02, 0.05, 0.1, 0.2, 0.3],
        }
    }
}

pub const KEYS: &[&str] = &[
    "physical.atom_mass",
    "physical.optical_wavenumber",
    "physical.coupling_g",
    "physical.cavity_decay_kappa",
    "physical.detuning_delta",
    "physical.mean_photon_alpha",
    "physical.detection_eta",
    "scaled.gamma",
    "scaled.ktilde",
    "scaled.vmax",
    "scaled.eta",
    "scaled.omega_ho",
    "control.epsilon",
    "control.fit_window",
    "control.dt",
    "control.feedback_start_time",
    "control.controller_source",
    "control.scale_gamma_with_drive",
    "sim.grid_points",
    "sim.domain_periods",
    "sim.t_max",
    "sim.n_trajectories",
    "sim.base_seed",
    "sim.output_stride",
    "sweep.epsilons",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| Error::BadValue { key: key.to_string(), reason: e.to_string() })
}

impl Config {
    /// Resolve the dimensionless model: derived from the physical block, then
    /// any `scaled.*` overrides applied on top.
    pub fn scaled(&self) -> Result<ScaledParams> {
        let mut s = derive_scaled(&self.physical)?;
        if let Some(w) = self.scaled.omega_ho {
            s = ScaledParams::new(s.gamma(), s.ktilde(), s.eta(), w)?;
        }
        if let Some(g) = self.scaled.gamma {
            s = s.with_gamma(g)?;
        }
        if let Some(k) = self.scaled.ktilde {
            s = s.with_ktilde(k)?;
        }
        if let Some(e) = self.scaled.eta {
            s = s.with_eta(e)?;
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.physical.validate()?;
        self.scaled()?;
        self.control.validate()?;
        self.sim.validate()?;
        if let Some(e) = self.sweep_epsilons.iter().find(|e| !(e.is_finite() && **e >= 0.0 && **e < 1.0)) {
            return Err(Error::Config(format!("sweep.epsilons entries must lie in [0, 1), got {e}")));
        }
        Ok(())
    }

    /// Set one dotted key. Unknown keys are reported by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let opt = |v: &str| -> Result<Option<f64>> {
            let v = v.trim();
            if v.is_empty() || v == "auto" {
                Ok(None)
            } else {
                parse::<f64>(key, v).map(Some)
            }
        };
        match key {
            "physical.atom_mass" => self.physical.atom_mass = parse(key, value)?,
            "physical.optical_wavenumber" => self.physical.optical_wavenumber = parse(key, value)?,
            "physical.coupling_g" => self.physical.coupling_g = parse(key, value)?,
            "physical.cavity_decay_kappa" => self.physical.cavity_decay_kappa = parse(key, value)?,
            "physical.detuning_delta" => self.physical.detuning_delta = parse(key, value)?,
            "physical.mean_photon_alpha" => self.physical.mean_photon_alpha = parse(key, value)?,
            "physical.detection_eta" => self.physical.detection_eta = parse(key, value)?,
            "scaled.gamma" => self.scaled.gamma = opt(value)?,
            "scaled.ktilde" => self.scaled.ktilde = opt(value)?,
            // vmax is never stored; setting it fixes ktilde = sqrt(pi / vmax).
            "scaled.vmax" => {
                self.scaled.ktilde = match opt(value)? {
                    Some(v) if v > 0.0 => Some((PI / v).sqrt()),
                    Some(v) => {
                        return Err(Error::BadValue { key: key.into(), reason: format!("must be positive, got {v}") })
                    }
                    None => None,
                }
            }
            "scaled.eta" => self.scaled.eta = opt(value)?,
            "scaled.omega_ho" => self.scaled.omega_ho = opt(value)?,
            "control.epsilon" => self.control.epsilon = parse(key, value)?,
            "control.fit_window" => self.control.fit_window = parse(key, value)?,
            "control.dt" => self.control.dt = parse(key, value)?,
            "control.feedback_start_time" => self.control.feedback_start_time = parse(key, value)?,
            "control.controller_source" => self.control.controller_source = parse(key, value)?,
            "control.scale_gamma_with_drive" => self.control.scale_gamma_with_drive = parse(key, value)?,
            "sim.grid_points" => self.sim.grid_points = parse(key, value)?,
            "sim.domain_periods" => self.sim.domain_periods = parse(key, value)?,
            "sim.t_max" => self.sim.t_max = parse(key, value)?,
            "sim.n_trajectories" => self.sim.n_trajectories = parse(key, value)?,
            "sim.base_seed" => self.sim.base_seed = parse(key, value)?,
            "sim.output_stride" => self.sim.output_stride = parse(key, value)?,
            "sweep.epsilons" => {
                self.sweep_epsilons = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse::<f64>(key, s))
                    .collect::<Result<_>>()?
            }
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Apply a `key = value` document. `#` starts a comment; blank lines are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got `{}`", lineno + 1, raw.trim()))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Apply `key=value` override strings, as given on a command line.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .as_ref()
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{}` is not key=value", o.as_ref())))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Every key with its resolved value. Floats use shortest round-trip
    /// formatting so the map reproduces the config exactly.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), |x| x.to_string());
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("physical.atom_mass", self.physical.atom_mass.to_string());
        put("physical.optical_wavenumber", self.physical.optical_wavenumber.to_string());
        put("physical.coupling_g", self.physical.coupling_g.to_string());
        put("physical.cavity_decay_kappa", self.physical.cavity_decay_kappa.to_string());
        put("physical.detuning_delta", self.physical.detuning_delta.to_string());
        put("physical.mean_photon_alpha", self.physical.mean_photon_alpha.to_string());
        put("physical.detection_eta", self.physical.detection_eta.to_string());
        put("scaled.gamma", opt(self.scaled.gamma));
        put("scaled.ktilde", opt(self.scaled.ktilde));
        put("scaled.eta", opt(self.scaled.eta));
        put("scaled.omega_ho", opt(self.scaled.omega_ho));
        put("control.epsilon", self.control.epsilon.to_string());
        put("control.fit_window", self.control.fit_window.to_string());
        put("control.dt", self.control.dt.to_string());
        put("control.feedback_start_time", self.control.feedback_start_time.to_string());
        put("control.controller_source", self.control.controller_source.to_string());
        put("control.scale_gamma_with_drive", self.control.scale_gamma_with_drive.to_string());
        put("sim.grid_points", self.sim.grid_points.to_string());
        put("sim.domain_periods", self.sim.domain_periods.to_string());
        put("sim.t_max", self.sim.t_max.to_string());
        put("sim.n_trajectories", self.sim.n_trajectories.to_string());
        put("sim.base_seed", self.sim.base_seed.to_string());
        put("sim.output_stride", self.sim.output_stride.to_string());
        put("sweep.epsilons", self.sweep_epsilons.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","));
        m
    }

    pub fn to_text(&self) -> String {
        self.to_map().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Short content hash of the resolved config.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
