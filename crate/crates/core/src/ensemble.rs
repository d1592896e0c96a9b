//! Closed-loop trajectories (true state, photocurrent, estimator,
//! controller) and ensemble aggregation.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{compute_band_basis, mean_se, theory_ss_energy, BandBasis, TheoryInputs, TheoryVariant};
use crate::controller::{select_signal_source, ControllerState, SignalInputs};
use crate::error::{Error, Result};
use crate::estimator::{GaussianEstimator, GaussianState};
use crate::grid::SpatialGrid;
use crate::params::{Config, ControllerSource, ScaledParams};
use crate::truestate::{synthesize_photocurrent, ConditionedState, DensityState, NoiseStream, Observable, WaveState};

/// Fraction of the half-well width at which the initial centroid energy is fixed.
pub const INITIAL_DISPLACEMENT_FRACTION: f64 = 0.58;

/// Maximum tolerated fraction of failed trajectories.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

/// One recorded point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub time: f64,
    /// `<H_eff>` relative to `-V_max` at the nominal depth.
    pub energy: f64,
    pub populations: [f64; 4],
    pub parity: f64,
    pub x_true: f64,
    pub p_true: f64,
    pub vx_true: f64,
    pub x_est: f64,
    pub p_est: f64,
    pub vx_est: f64,
    pub amplitude: f64,
    /// Fitted trigger slope at this time (zero without feedback).
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub index: u64,
    pub base_seed: u64,
    pub config_hash: String,
    pub initial_x: f64,
    pub initial_p: f64,
    pub samples: Vec<TrajectorySample>,
    pub steps: u64,
    pub clamped_steps: u64,
    /// More than 0.1% of estimator steps needed the uncertainty clamp.
    pub flagged: bool,
    pub failure: Option<String>,
}

impl TrajectoryRecord {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn series(&self, f: impl Fn(&TrajectorySample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }
}

/// Shared, read-only ingredients of every trajectory in a run.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: Config,
    scaled: ScaledParams,
    grid: Arc<SpatialGrid>,
    bands: Arc<BandBasis>,
}

/// Initial centroid of a trajectory: uniform position inside the fixed
/// displacement, momentum making up the fixed centroid energy.
pub fn initial_centroid(scaled: &ScaledParams, noise: &mut NoiseStream) -> (f64, f64) {
    let k = scaled.ktilde();
    let vmax = scaled.vmax();
    let x_max = INITIAL_DISPLACEMENT_FRACTION * PI / (2.0 * k);
    let e_c = vmax * (k * x_max).sin().powi(2);
    let x0 = noise.uniform() * x_max;
    let kinetic = (e_c - vmax * (k * x0).sin().powi(2)).max(0.0);
    let p_abs = (kinetic / PI).sqrt();
    let p0 = if noise.coin() { p_abs } else { -p_abs };
    (x0, p0)
}

impl Simulation {
    pub fn new(config: Config) -> Result<Self> {
        config.validate()?;
        let scaled = config.scaled()?;
        let grid = SpatialGrid::new(config.sim.grid_points, config.sim.domain_periods, scaled.ktilde())?;
        let bands = Arc::new(compute_band_basis(scaled.vmax(), grid.clone())?);
        Ok(Self { config, scaled, grid, bands })
    }

    /// Reuse the grid and band basis of `self` for a config that differs only
    /// in control or run settings.
    pub fn with_config(&self, config: Config) -> Result<Self> {
        config.validate()?;
        let scaled = config.scaled()?;
        if scaled.ktilde() != self.scaled.ktilde()
            || config.sim.grid_points != self.config.sim.grid_points
            || config.sim.domain_periods != self.config.sim.domain_periods
        {
            return Self::new(config);
        }
        Ok(Self { config, scaled, grid: self.grid.clone(), bands: self.bands.clone() })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }
    pub fn scaled(&self) -> &ScaledParams {
        &self.scaled
    }
    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }
    pub fn bands(&self) -> &BandBasis {
        &self.bands
    }

    fn n_steps(&self) -> u64 {
        (self.config.sim.t_max / self.config.control.dt).round() as u64
    }

    /// Run trajectory `index`. Estimator divergence marks the record failed
    /// instead of returning an error.
    pub fn run_trajectory(&self, index: u64) -> Result<TrajectoryRecord> {
        let mut noise = NoiseStream::new(self.config.sim.base_seed, index);
        let initial = initial_centroid(&self.scaled, &mut noise);
        self.drive_from(noise, index, initial)
    }

    /// Closed-loop trajectory from a coherent state at `(x0, p0)`, on noise
    /// stream `index`.
    pub fn run_trajectory_from(&self, index: u64, initial: (f64, f64)) -> Result<TrajectoryRecord> {
        self.drive_from(NoiseStream::new(self.config.sim.base_seed, index), index, initial)
    }

    fn drive_from(&self, noise: NoiseStream, index: u64, (x0, p0): (f64, f64)) -> Result<TrajectoryRecord> {
        let vmax = self.scaled.vmax();
        if self.scaled.eta() < 1.0 {
            let w = WaveState::gaussian(self.grid.clone(), x0, p0, 0.5, vmax)?;
            let d = DensityState::from_wave(&w)?;
            self.drive(d, noise, index, (x0, p0))
        } else {
            let w = WaveState::gaussian(self.grid.clone(), x0, p0, 0.5, vmax)?;
            self.drive(w, noise, index, (x0, p0))
        }
    }

    fn sample<S: ConditionedState>(&self, t: f64, s: &S, est: &GaussianEstimator, slope: f64) -> TrajectorySample {
        let vmax = self.scaled.vmax();
        let g = est.state();
        let x = s.expectation(Observable::Position);
        TrajectorySample {
            time: t,
            energy: s.relative_energy(vmax),
            populations: self.bands.populations(s).bands,
            parity: s.expectation(Observable::Parity),
            x_true: x,
            p_true: s.expectation(Observable::Momentum),
            vx_true: s.expectation(Observable::PositionSq) - x * x,
            x_est: g.x_mean,
            p_est: g.p_mean,
            vx_est: g.vx,
            amplitude: s.potential_amplitude(),
            slope,
        }
    }

    fn drive<S: ConditionedState>(
        &self,
        mut state: S,
        mut noise: NoiseStream,
        index: u64,
        initial: (f64, f64),
    ) -> Result<TrajectoryRecord> {
        let cfg = &self.config;
        let dt = cfg.control.dt;
        let source = cfg.control.controller_source;
        let (gamma, eta, k, vmax) = (self.scaled.gamma(), self.scaled.eta(), self.scaled.ktilde(), self.scaled.vmax());
        let mut est = GaussianEstimator::new(GaussianState::tracking_initial(), k, eta);
        let mut ctl = ControllerState::new(&cfg.control, vmax)?;
        let stride = cfg.sim.output_stride as u64;
        let n_steps = self.n_steps();
        let mut samples = Vec::with_capacity((n_steps / stride + 1) as usize);
        let mut slope = 0.0;
        let mut failure = None;
        samples.push(self.sample(0.0, &state, &est, slope));

        for step in 1..=n_steps {
            let v = ctl.current_amplitude();
            let gamma_t = if cfg.control.scale_gamma_with_drive { gamma * v / vmax } else { gamma };
            state.set_potential_amplitude(v);
            state.step_hamiltonian(dt);
            let dw = noise.increment(dt);
            let up = state.step_measurement(dw, gamma_t, eta, dt)?;
            let dr = synthesize_photocurrent(up.mean_cos_sq, dw, gamma_t, eta, dt);
            let t = step as f64 * dt;
            if let Err(e) = est.step(dr, v, gamma_t, dt, t) {
                failure = Some(e.to_string());
                break;
            }
            let inputs = SignalInputs {
                estimator_cos_sq: Some(est.state().mean_cos_sq(k)),
                true_cos_sq: Some(up.mean_cos_sq_after),
                photocurrent: Some(dr),
                gamma: gamma_t,
                eta,
                dt,
            };
            if let Some(signal) = select_signal_source(source, &inputs)? {
                let fit = ctl.push_and_fit(t, signal)?;
                slope = fit.slope_at_now;
                ctl.decide(&fit);
            }
            if step % stride == 0 {
                // report the amplitude that will act over the next interval
                state.set_potential_amplitude(ctl.current_amplitude());
                samples.push(self.sample(t, &state, &est, slope));
            }
        }

        Ok(TrajectoryRecord {
            index,
            base_seed: cfg.sim.base_seed,
            config_hash: cfg.hash(),
            initial_x: initial.0,
            initial_p: initial.1,
            samples,
            steps: est.steps(),
            clamped_steps: est.clamped_steps(),
            flagged: est.flagged(),
            failure,
        })
    }

    /// All trajectories of the configured ensemble, in index order.
    pub fn run_records(&self) -> Result<Vec<TrajectoryRecord>> {
        (0..self.config.sim.n_trajectories as u64).into_par_iter().map(|i| self.run_trajectory(i)).collect()
    }

    pub fn run_ensemble(&self) -> Result<EnsembleRun> {
        let start = Instant::now();
        let records = self.run_records()?;
        let stats = aggregate(&records, self.final_window_start(), self.amplitude_threshold());
        Ok(EnsembleRun { records, stats, wall_time_s: start.elapsed().as_secs_f64() })
    }

    /// Final-window start: the last tenth of the run (t in [90, 100] by default).
    pub fn final_window_start(&self) -> f64 {
        0.9 * self.config.sim.t_max
    }

    fn amplitude_threshold(&self) -> f64 {
        self.scaled.vmax() * (1.0 + 1e-9)
    }

    /// Centroid and squeezing predictions at `epsilon` with harmonic band
    /// energies `pi`, `3 pi`. `None` outside the controllable regime.
    pub fn theory(&self, epsilon: f64) -> (Option<f64>, Option<f64>) {
        let t = TheoryInputs::harmonic(epsilon, self.scaled.gamma(), self.scaled.ktilde());
        (theory_ss_energy(&t, TheoryVariant::Centroid).ok(), theory_ss_energy(&t, TheoryVariant::Squeezing).ok())
    }

    /// Ensembles for each `epsilon` and each of `sources`, with theory columns.
    pub fn epsilon_sweep(&self, epsilons: &[f64], sources: &[ControllerSource]) -> Result<Vec<SweepRow>> {
        let mut rows = Vec::new();
        for &eps in epsilons {
            if eps.is_nan() || eps < 0.0 {
                return Err(Error::Config(format!("sweep epsilon must be non-negative, got {eps}")));
            }
            let (tc, ts) = self.theory(eps);
            for &source in sources {
                let mut cfg = self.config.clone();
                cfg.control.epsilon = eps;
                cfg.control.controller_source = source;
                let sim = self.with_config(cfg)?;
                let run = sim.run_ensemble()?;
                run.stats.ensure_valid()?;
                rows.push(SweepRow {
                    epsilon: eps,
                    source,
                    energy_final_mean: run.stats.final_window.energy.0,
                    energy_final_se: run.stats.final_window.energy.1,
                    p01_final_mean: run.stats.final_window.p01.0,
                    theory_centroid: tc,
                    theory_squeezing: ts,
                    n_trajectories: run.stats.n_ok,
                });
            }
        }
        Ok(rows)
    }
}

/// Distance between estimated and true `<X>` modulo the lattice period and
/// the `x -> -x` symmetry of `cos^2`, neither of which the photocurrent
/// can resolve.
pub fn tracking_separation(x_est: f64, x_true: f64, grid: &SpatialGrid) -> f64 {
    grid.wrap(x_est - x_true).abs().min(grid.wrap(x_est + x_true).abs())
}

/// First sample time from which the tracking separation stays below
/// `tolerance` for `hold` time units. `None` if that never happens within
/// the record.
pub fn lock_time(r: &TrajectoryRecord, grid: &SpatialGrid, tolerance: f64, hold: f64) -> Option<f64> {
    let t_end = r.samples.last()?.time;
    let inside: Vec<bool> =
        r.samples.iter().map(|s| tracking_separation(s.x_est, s.x_true, grid) < tolerance).collect();
    (0..inside.len()).find_map(|i| {
        let t0 = r.samples[i].time;
        if t0 + hold > t_end + 1e-9 {
            return None;
        }
        let held =
            r.samples[i..].iter().zip(&inside[i..]).take_while(|(s, _)| s.time <= t0 + hold + 1e-9).all(|(_, ok)| *ok);
        held.then_some(t0)
    })
}

/// Measured and predicted heating over an early no-feedback window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatingMeasurement {
    pub window: f64,
    pub n_trajectories: usize,
    /// Raw ensemble `dE/dt` with its standard error.
    pub raw: (f64, f64),
    /// `dE/dt` with the measurement martingale `sum b_H dW` subtracted per
    /// trajectory. Same expectation as `raw`, much smaller variance.
    pub measured: (f64, f64),
    /// Window average of `8 pi Gamma k^2 <cos^2 sin^2>` along the same trajectories.
    pub predicted: (f64, f64),
}

impl HeatingMeasurement {
    pub fn relative_error(&self) -> f64 {
        (self.measured.0 - self.predicted.0).abs() / self.predicted.0
    }
}

/// `d<H>/dW` of the measurement substep, by a symmetric difference at `dt = 0`.
fn energy_noise_coefficient<S: ConditionedState + Clone>(s: &S, gamma: f64, eta: f64, vmax: f64) -> Result<f64> {
    const H: f64 = 1e-6;
    let mut up = s.clone();
    let mut down = s.clone();
    up.step_measurement(H, gamma, eta, 0.0)?;
    down.step_measurement(-H, gamma, eta, 0.0)?;
    Ok((up.relative_energy(vmax) - down.relative_energy(vmax)) / (2.0 * H))
}

impl Simulation {
    /// Free (no-feedback) evolution of `n` trajectories over `[0, window]`,
    /// comparing the mean energy growth with the heating formula.
    pub fn measure_heating(&self, n: usize, window: f64) -> Result<HeatingMeasurement> {
        let dt = self.config.control.dt;
        let (gamma, k, vmax) = (self.scaled.gamma(), self.scaled.ktilde(), self.scaled.vmax());
        let steps = (window / dt).round() as usize;
        let per: Vec<(f64, f64, f64)> = (0..n as u64)
            .into_par_iter()
            .map(|i| -> Result<(f64, f64, f64)> {
                let mut noise = NoiseStream::new(self.config.sim.base_seed, i);
                let (x0, p0) = initial_centroid(&self.scaled, &mut noise);
                let mut s = WaveState::gaussian(self.grid.clone(), x0, p0, 0.5, vmax)?;
                let e0 = s.relative_energy(vmax);
                let (mut martingale, mut predicted) = (0.0, 0.0);
                let rate =
                    |s: &WaveState| crate::analysis::heating_rate(s.expectation(Observable::CosSqSinSq), gamma, k);
                let mut r_prev = rate(&s);
                for _ in 0..steps {
                    s.step_hamiltonian(dt);
                    let b = energy_noise_coefficient(&s, gamma, 1.0, vmax)?;
                    let dw = noise.increment(dt);
                    s.step_measurement(dw, gamma, 1.0, dt)?;
                    martingale += b * dw;
                    let r = rate(&s);
                    predicted += 0.5 * (r_prev + r) * dt;
                    r_prev = r;
                }
                let de = s.relative_energy(vmax) - e0;
                Ok((de / window, (de - martingale) / window, predicted / window))
            })
            .collect::<Result<_>>()?;
        let col = |f: fn(&(f64, f64, f64)) -> f64| mean_se(&per.iter().map(f).collect::<Vec<_>>());
        Ok(HeatingMeasurement {
            window,
            n_trajectories: n,
            raw: col(|p| p.0),
            measured: col(|p| p.1),
            predicted: col(|p| p.2),
        })
    }
}

/// Mean and standard error of one scalar at every sample time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub mean: Vec<f64>,
    /// `None` when fewer than two trajectories contributed.
    pub se: Vec<Option<f64>>,
}

/// Final-window averages: per-trajectory time average, then mean and
/// standard error across trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FinalWindow {
    pub start: f64,
    pub energy: (f64, f64),
    pub populations: [(f64, f64); 4],
    pub p01: (f64, f64),
    pub parity_abs: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub energy: Series,
    pub populations: [Series; 4],
    pub parity: Series,
    pub parity_abs_mean: Vec<f64>,
    pub amplitude_high_fraction: Vec<f64>,
    pub final_window: FinalWindow,
    pub n_ok: usize,
    pub n_failed: usize,
    pub n_flagged: usize,
}

impl EnsembleStats {
    pub fn valid(&self) -> bool {
        let total = self.n_ok + self.n_failed;
        self.n_ok > 0 && (self.n_failed as f64) <= MAX_FAILURE_FRACTION * total as f64
    }

    pub fn ensure_valid(&self) -> Result<()> {
        if self.valid() {
            Ok(())
        } else {
            Err(Error::RunInvalid { failed: self.n_failed, total: self.n_ok + self.n_failed })
        }
    }
}

fn series(ok: &[&TrajectoryRecord], f: impl Fn(&TrajectorySample) -> f64) -> Series {
    let n_t = ok[0].samples.len();
    let mut mean = Vec::with_capacity(n_t);
    let mut se = Vec::with_capacity(n_t);
    let mut column = Vec::with_capacity(ok.len());
    for i in 0..n_t {
        column.clear();
        column.extend(ok.iter().map(|r| f(&r.samples[i])));
        let (m, s) = mean_se(&column);
        mean.push(m);
        se.push((column.len() > 1).then_some(s));
    }
    Series { mean, se }
}

fn window_average(ok: &[&TrajectoryRecord], start: f64, f: impl Fn(&TrajectorySample) -> f64) -> (f64, f64) {
    let per: Vec<f64> = ok
        .iter()
        .map(|r| {
            let w: Vec<f64> = r.samples.iter().filter(|s| s.time >= start - 1e-9).map(&f).collect();
            w.iter().sum::<f64>() / w.len().max(1) as f64
        })
        .collect();
    mean_se(&per)
}

/// Aggregate records. Records are sorted by index first, so the result does
/// not depend on completion order. Failed and truncated trajectories are
/// excluded.
pub fn aggregate(records: &[TrajectoryRecord], final_window_start: f64, high_threshold: f64) -> EnsembleStats {
    let mut sorted: Vec<&TrajectoryRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.index);
    let ok: Vec<&TrajectoryRecord> = sorted.iter().copied().filter(|r| !r.failed()).collect();
    let n_failed = sorted.len() - ok.len();
    let n_flagged = ok.iter().filter(|r| r.flagged).count();
    if ok.is_empty() {
        let empty = Series { mean: vec![], se: vec![] };
        return EnsembleStats {
            times: vec![],
            energy: empty.clone(),
            populations: [empty.clone(), empty.clone(), empty.clone(), empty.clone()],
            parity: empty,
            parity_abs_mean: vec![],
            amplitude_high_fraction: vec![],
            final_window: FinalWindow {
                start: final_window_start,
                energy: (f64::NAN, f64::NAN),
                populations: [(f64::NAN, f64::NAN); 4],
                p01: (f64::NAN, f64::NAN),
                parity_abs: (f64::NAN, f64::NAN),
            },
            n_ok: 0,
            n_failed,
            n_flagged: 0,
        };
    }
    let times = ok[0].times();
    let pops = [0, 1, 2, 3].map(|b| series(&ok, |s| s.populations[b]));
    let n = ok.len() as f64;
    let parity_abs_mean =
        (0..times.len()).map(|i| ok.iter().map(|r| r.samples[i].parity.abs()).sum::<f64>() / n).collect();
    let amplitude_high_fraction = (0..times.len())
        .map(|i| ok.iter().filter(|r| r.samples[i].amplitude > high_threshold).count() as f64 / n)
        .collect();
    let final_window = FinalWindow {
        start: final_window_start,
        energy: window_average(&ok, final_window_start, |s| s.energy),
        populations: [0, 1, 2, 3].map(|b| window_average(&ok, final_window_start, |s| s.populations[b])),
        p01: window_average(&ok, final_window_start, |s| s.populations[0] + s.populations[1]),
        parity_abs: window_average(&ok, final_window_start, |s| s.parity.abs()),
    };
    EnsembleStats {
        energy: series(&ok, |s| s.energy),
        populations: pops,
        parity: series(&ok, |s| s.parity),
        parity_abs_mean,
        amplitude_high_fraction,
        final_window,
        times,
        n_ok: ok.len(),
        n_failed,
        n_flagged,
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub records: Vec<TrajectoryRecord>,
    pub stats: EnsembleStats,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    #[serde(serialize_with = "ser_source")]
    pub source: ControllerSource,
    pub energy_final_mean: f64,
    pub energy_final_se: f64,
    pub p01_final_mean: f64,
    pub theory_centroid: Option<f64>,
    pub theory_squeezing: Option<f64>,
    pub n_trajectories: usize,
}

fn ser_source<S: serde::Serializer>(s: &ControllerSource, ser: S) -> std::result::Result<S::Ok, S::Error> {
    ser.serialize_str(s.as_str())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Ensemble CSV: `time, energy_mean, energy_se, p0_mean, p0_se, ...,
/// p3_mean, p3_se, parity_mean, parity_abs_mean, amplitude_high_fraction`.
pub fn ensemble_csv(stats: &EnsembleStats) -> String {
    let mut out = String::from("time,energy_mean,energy_se");
    for b in 0..4 {
        out.push_str(&format!(",p{b}_mean,p{b}_se"));
    }
    out.push_str(",parity_mean,parity_abs_mean,amplitude_high_fraction\n");
    for i in 0..stats.times.len() {
        out.push_str(&format!("{},{},{}", stats.times[i], stats.energy.mean[i], fmt_opt(stats.energy.se[i])));
        for p in &stats.populations {
            out.push_str(&format!(",{},{}", p.mean[i], fmt_opt(p.se[i])));
        }
        out.push_str(&format!(
            ",{},{},{}\n",
            stats.parity.mean[i], stats.parity_abs_mean[i], stats.amplitude_high_fraction[i]
        ));
    }
    out
}

/// Sweep CSV: `epsilon, source, energy_final_mean, energy_final_se,
/// theory_centroid, theory_squeezing`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("epsilon,source,energy_final_mean,energy_final_se,theory_centroid,theory_squeezing\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.epsilon,
            r.source,
            r.energy_final_mean,
            r.energy_final_se,
            fmt_opt(r.theory_centroid),
            fmt_opt(r.theory_squeezing)
        ));
    }
    out
}

/// Theory curves on an epsilon grid: `epsilon, beta, theory_centroid,
/// theory_squeezing`. Empty cells where `beta >= 1`.
pub fn theory_csv(epsilons: &[f64], gamma: f64, ktilde: f64) -> String {
    let mut out = String::from("epsilon,beta,theory_centroid,theory_squeezing\n");
    for &eps in epsilons {
        let t = TheoryInputs::harmonic(eps, gamma, ktilde);
        out.push_str(&format!(
            "{},{},{},{}\n",
            eps,
            t.beta(),
            fmt_opt(theory_ss_energy(&t, TheoryVariant::Centroid).ok()),
            fmt_opt(theory_ss_energy(&t, TheoryVariant::Squeezing).ok())
        ));
    }
    out
}

/// Per-trajectory CSV used by the tracking demo.
pub fn trajectory_csv(r: &TrajectoryRecord) -> String {
    let mut out =
        String::from("time,x_true,x_est,vx_true,vx_est,p_true,p_est,energy,parity,p0,p1,p2,p3,amplitude,slope\n");
    for s in &r.samples {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            s.time,
            s.x_true,
            s.x_est,
            s.vx_true,
            s.vx_est,
            s.p_true,
            s.p_est,
            s.energy,
            s.parity,
            s.populations[0],
            s.populations[1],
            s.populations[2],
            s.populations[3],
            s.amplitude,
            s.slope
        ));
    }
    out
}

/// Everything needed to re-run a preset exactly.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub preset: String,
    pub version: String,
    pub config: std::collections::BTreeMap<String, String>,
    pub config_hash: String,
    pub overrides: Vec<String>,
    pub base_seed: u64,
    pub n_trajectories: usize,
    /// Trajectory `i` draws from stream `i` of the generator seeded with `base_seed`.
    pub seeds: Vec<(u64, u64)>,
    pub failed: usize,
    pub flagged: usize,
    pub wall_time_s: f64,
    pub valid: bool,
}

impl Manifest {
    pub fn new(preset: &str, config: &Config, overrides: &[String]) -> Self {
        Self {
            preset: preset.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.to_map(),
            config_hash: config.hash(),
            overrides: overrides.to_vec(),
            base_seed: config.sim.base_seed,
            n_trajectories: config.sim.n_trajectories,
            seeds: (0..config.sim.n_trajectories as u64).map(|i| (config.sim.base_seed, i)).collect(),
            failed: 0,
            flagged: 0,
            wall_time_s: 0.0,
            valid: true,
        }
    }

    pub fn record(&mut self, stats: &EnsembleStats, wall_time_s: f64) {
        self.failed += stats.n_failed;
        self.flagged += stats.n_flagged;
        self.wall_time_s += wall_time_s;
        self.valid &= stats.valid();
    }

    /// The manifest's config as `key = value` text, loadable with `--config`.
    pub fn config_text(&self) -> String {
        self.config.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Config stored in a manifest written by [`Manifest::write`].
    pub fn load_config(json: &str) -> Result<Config> {
        let v: serde_json::Value = serde_json::from_str(json)?;
        let map = v
            .get("config")
            .and_then(|c| c.as_object())
            .ok_or_else(|| Error::Config("manifest has no `config` object".into()))?;
        let mut cfg = Config::default();
        for (k, v) in map {
            let v = v.as_str().ok_or_else(|| Error::BadValue { key: k.clone(), reason: "expected a string".into() })?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(name), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
