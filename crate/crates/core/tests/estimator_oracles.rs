//! The Gaussian estimator against the full conditioned evolution.

use std::f64::consts::PI;

use cavity_cooling::estimator::{GaussianEstimator, GaussianState};
use cavity_cooling::grid::SpatialGrid;
use cavity_cooling::truestate::{
    synthesize_photocurrent, ConditionedState, DensityState, NoiseStream, Observable, WaveState,
};
use cavity_cooling::{Config, Simulation};

const T: f64 = 0.05;

/// Largest disagreement over `<X>, <P>, Vx, Vp, C` at `t = T`, with the
/// estimator fed the photocurrent of the density-matrix evolution.
fn disagreement(x0: f64, p0: f64, gamma: f64, dt: f64, increments: &[f64]) -> f64 {
    let s = Config::default().scaled().unwrap();
    let (k, vmax) = (s.ktilde(), s.vmax());
    let grid = SpatialGrid::new(64, 1, k).unwrap();
    let w = WaveState::gaussian(grid.clone(), x0, p0, 0.5, vmax).unwrap();
    let mut d = DensityState::from_wave(&w).unwrap();
    let mut est = GaussianEstimator::new(GaussianState::coherent(x0, p0), k, 1.0);
    for (i, &dw) in increments.iter().enumerate() {
        let up = d.step(dw, gamma, 1.0, dt).unwrap();
        let dr = synthesize_photocurrent(up.mean_cos_sq, dw, gamma, 1.0, dt);
        est.step(dr, vmax, gamma, dt, i as f64 * dt).unwrap();
    }
    let g = est.state();
    let x: Vec<f64> = grid.positions().to_vec();
    let (mx, mp) = (d.expectation(Observable::Position), d.expectation(Observable::Momentum));
    // <XP + PX> - 2<X><P> from the symmetrized product, via d/dt <X^2> = 2 pi <XP + PX>
    let cxp = {
        let h = 1e-6;
        let mut ahead = d.clone();
        ahead.step(0.0, 0.0, 1.0, h).unwrap();
        let x2: Vec<f64> = x.iter().map(|v| v * v).collect();
        let rate = (ahead.expectation(Observable::Grid(&x2)) - d.expectation(Observable::Grid(&x2))) / h;
        rate / (2.0 * PI) - 2.0 * mx * mp
    };
    [g.x_mean - mx, g.p_mean - mp, g.vx - d.position_variance(), g.vp - d.momentum_variance(), g.cxp - cxp]
        .iter()
        .fold(0.0, |m, e| m.max(e.abs()))
}

fn path(seed: u64, dt: f64) -> Vec<f64> {
    let mut n = NoiseStream::new(seed, 0);
    (0..(T / dt).round() as usize).map(|_| n.increment(dt)).collect()
}

#[test]
fn unmeasured_moments_agree_to_first_order_in_dt() {
    let s = Config::default().scaled().unwrap();
    let dt = Config::default().control.dt;
    // one explicit step errs by (2 pi |P|)(|F| dt)/2 per unit time, |F| <= V k
    let bound = PI * s.vmax() * s.ktilde() * dt * T;
    for x0 in [0.0, 0.5, 2.0] {
        let coarse = disagreement(x0, 0.5, 0.0, dt, &vec![0.0; (T / dt).round() as usize]);
        let fine = disagreement(x0, 0.5, 0.0, dt / 2.0, &vec![0.0; (T / (dt / 2.0)).round() as usize]);
        assert!(coarse < bound, "x0={x0}: {coarse:e} vs bound {bound:e}");
        let ratio = coarse / fine;
        assert!((1.6..2.4).contains(&ratio), "x0={x0}: halving dt changed the error by {ratio}");
    }
}

/// With measurement the conditioned state drifts away from Gaussian, so a
/// single path can sit above the first-order bound; the seed average cannot.
#[test]
fn measured_moments_agree_near_the_well_bottom() {
    let cfg = Config::default();
    let (gamma, dt) = (cfg.scaled().unwrap().gamma(), cfg.control.dt);
    for x0 in [0.0, 0.5] {
        let errors: Vec<f64> = (1..=8).map(|seed| disagreement(x0, 0.5, gamma, dt, &path(seed, dt))).collect();
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        assert!(mean < 5.0 * dt, "x0={x0}: mean {mean:e} over {errors:?}");
    }
}

#[test]
fn estimator_locks_onto_a_displaced_atom() {
    let mut cfg = Config::default();
    cfg.sim.t_max = 10.0;
    cfg.sim.output_stride = 10;
    let sim = Simulation::new(cfg).unwrap();
    let mut fractions = Vec::new();
    for seed in 0..16 {
        let r = sim.run_trajectory_from(seed, (5.88, 0.0)).unwrap();
        let within = |s: &&cavity_cooling::TrajectorySample| (s.x_est - s.x_true).abs() < 1.0;
        let first = r.samples.iter().position(|s| within(&s)).expect("never within 1.0");
        assert!(r.samples[first].time <= 2.0);
        let tail = &r.samples[first..];
        fractions.push(tail.iter().filter(within).count() as f64 / tail.len() as f64);
    }
    fractions.sort_by(f64::total_cmp);
    let median = 0.5 * (fractions[7] + fractions[8]);
    assert!(median >= 0.9, "median fraction within 1.0: {median} ({fractions:?})");
}
