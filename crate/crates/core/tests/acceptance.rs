//! Acceptance criteria 1-10, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`). Every criterion is evaluated
//! at its stated tolerance and reported; with `ACCEPTANCE_STRICT=1` any FAIL
//! makes the process exit non-zero. `ACCEPTANCE_ONLY=4,10` restricts the run.
//! The full set takes tens of minutes on one core.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::time::Instant;

use cavity_cooling::analysis::{parity_statistics, TheoryInputs};
use cavity_cooling::ensemble::{initial_centroid, lock_time, EnsembleRun};
use cavity_cooling::grid::SpatialGrid;
use cavity_cooling::params::derive_scaled;
use cavity_cooling::truestate::{ConditionedState, DensityState, NoiseStream, Observable, WaveState};
use cavity_cooling::{Config, ControllerSource, PhysicalParams, Simulation};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn sig3(x: f64) -> f64 {
    let scale = 10f64.powi(x.abs().log10().floor() as i32 - 2);
    (x / scale).round() * scale
}

fn config_with(source: ControllerSource) -> Config {
    let mut c = Config::default();
    c.control.controller_source = source;
    c
}

fn c1_scaled_parameters() -> Outcome {
    let s = derive_scaled(&PhysicalParams::default()).expect("default parameters are valid");
    let got = [sig3(s.ktilde()), sig3(s.gamma()), sig3(s.vmax())];
    let want = [0.155, 23.6, 131.0];
    let ok = got.iter().zip(want).all(|(g, w)| ((g - w) / w).abs() < 1e-9);
    outcome(ok, format!("ktilde = {:.6}, Gamma = {:.4}, V_max = {:.3}", s.ktilde(), s.gamma(), s.vmax()))
}

fn c2_band_energies() -> Outcome {
    let sim = Simulation::new(Config::default()).unwrap();
    let b = sim.bands();
    let r0 = b.band_energy(0) / PI - 1.0;
    let r1 = b.band_energy(1) / (3.0 * PI) - 1.0;
    outcome(
        r0.abs() < 0.01 && r1.abs() < 0.01,
        format!(
            "E0 = {:.5} ({:+.3}% of pi), E1 = {:.5} ({:+.3}% of 3 pi)",
            b.band_energy(0),
            100.0 * r0,
            b.band_energy(1),
            100.0 * r1
        ),
    )
}

fn c3_conservation() -> Outcome {
    let cfg = Config::default();
    let sim = Simulation::new(cfg.clone()).unwrap();
    let (gamma, vmax, dt) = (sim.scaled().gamma(), sim.scaled().vmax(), cfg.control.dt);
    let mut noise = NoiseStream::new(cfg.sim.base_seed, 0);
    let (x0, p0) = initial_centroid(sim.scaled(), &mut noise);
    let start = WaveState::gaussian(sim.grid().clone(), x0, p0, 0.5, vmax).unwrap();

    // Gamma = 0 over t = 10; energies measured from the potential minimum
    let mut w = start.clone();
    let e0 = w.relative_energy(vmax);
    let mut unitary = 0.0_f64;
    for _ in 0..(10.0 / dt).round() as usize {
        let n0 = w.norm_sqr();
        w.step_hamiltonian(dt);
        unitary = unitary.max((w.norm_sqr() - n0).abs());
    }
    let energy = ((w.relative_energy(vmax) - e0) / e0).abs();

    // measured evolution: the linear update is renormalized every step
    let mut w = start;
    let mut measured = 0.0_f64;
    for _ in 0..(10.0 / dt).round() as usize {
        w.step_hamiltonian(dt);
        w.step_measurement(noise.increment(dt), gamma, 1.0, dt).unwrap();
        measured = measured.max((w.norm_sqr() - 1.0).abs());
    }
    outcome(
        unitary < 1e-6 && measured < 1e-6 && energy < 1e-6,
        format!("norm drift per step {unitary:.1e} (unitary), {measured:.1e} (measured); energy drift {energy:.1e}"),
    )
}

fn c4_heating() -> Outcome {
    let mut cfg = config_with(ControllerSource::None);
    cfg.sim.n_trajectories = 32;
    let sim = Simulation::new(cfg).unwrap();
    let h = sim.measure_heating(32, 1.0).unwrap();
    let rel = h.relative_error();
    outcome(
        rel < 0.15,
        format!(
            "dE/dt = {:.3} +- {:.3} (raw {:.2} +- {:.2}), 8 pi Gamma k^2 <cos^2 sin^2> = {:.3}, off by {:.1}%",
            h.measured.0,
            h.measured.1,
            h.raw.0,
            h.raw.1,
            h.predicted.0,
            100.0 * rel
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Lock time is the first sample with `|<X>_est - <X>_true| < 0.5`. The time
/// at which the separation, up to the parity mirror, stays below 0.5 for a
/// full unit is reported alongside.
fn c5_lock() -> Outcome {
    let mut cfg = config_with(ControllerSource::Estimator);
    cfg.sim.n_trajectories = 32;
    cfg.sim.t_max = 10.0;
    cfg.sim.output_stride = 10;
    let sim = Simulation::new(cfg).unwrap();
    let run = sim.run_ensemble().unwrap();
    let first: Vec<f64> = run
        .records
        .iter()
        .map(|r| r.samples.iter().find(|s| (s.x_est - s.x_true).abs() < 0.5).map_or(f64::INFINITY, |s| s.time))
        .collect();
    let held: Vec<f64> =
        run.records.iter().map(|r| lock_time(r, sim.grid(), 0.5, 1.0).unwrap_or(f64::INFINITY)).collect();
    let never = first.iter().filter(|t| t.is_infinite()).count();
    let m = median(first);
    outcome(
        m <= 2.0,
        format!("median lock time {m:.3} (never within t = 10: {never}/32); median held for 1.0: {:.3}", median(held)),
    )
}

struct CoolingRuns {
    estimator: EnsembleRun,
    truestate: EnsembleRun,
    none: EnsembleRun,
}

fn cooling_runs() -> CoolingRuns {
    let run = |s| {
        let t = Instant::now();
        let r = Simulation::new(config_with(s)).unwrap().run_ensemble().unwrap();
        println!("  ({s}: {} trajectories, {:.0} s)", r.records.len(), t.elapsed().as_secs_f64());
        r
    };
    CoolingRuns {
        estimator: run(ControllerSource::Estimator),
        truestate: run(ControllerSource::TrueState),
        none: run(ControllerSource::None),
    }
}

/// Trajectories whose estimate ends wider than `1/k^2`: past that the
/// closure factor `exp(-2 k^2 Vx)` leaves the filter blind to the signal.
fn lost_lock(run: &EnsembleRun, ktilde: f64) -> usize {
    run.records.iter().filter(|r| r.samples.last().is_some_and(|s| s.vx_est > 1.0 / (ktilde * ktilde))).count()
}

/// Median over trajectories of the mean energy for `t >= 90`.
fn median_final_energy(run: &EnsembleRun) -> f64 {
    median(
        run.records
            .iter()
            .filter(|r| !r.failed())
            .map(|r| {
                let tail: Vec<f64> = r.samples.iter().filter(|s| s.time >= 90.0).map(|s| s.energy).collect();
                tail.iter().sum::<f64>() / tail.len() as f64
            })
            .collect(),
    )
}

fn c6_cooling(r: &CoolingRuns) -> Outcome {
    let sim = Simulation::new(Config::default()).unwrap();
    let theory = sim.theory(0.1).0.unwrap();
    let (e, es) = r.estimator.stats.final_window.energy;
    let (t, ts) = r.truestate.stats.final_window.energy;
    let (n, ns) = r.none.stats.final_window.energy;
    let finite = e.is_finite() && t.is_finite();
    let far_below = e + 2.0 * es < n - 2.0 * ns && e < 0.5 * n;
    let bracket = e + 2.0 * es > theory && e - 2.0 * es < 2.5 * theory;
    let closer = (t - theory).abs() < (e - theory).abs();
    let all_ok = [&r.estimator, &r.truestate, &r.none].iter().all(|x| x.stats.valid());
    outcome(
        finite && far_below && bracket && closer && all_ok,
        format!(
            "estimator {e:.2} +- {es:.2}, truestate {t:.2} +- {ts:.2}, no feedback {n:.1} +- {ns:.1}, theory {theory:.2}; \
             medians {:.2} / {:.2}; estimator lost lock in {}/{}",
            median_final_energy(&r.estimator),
            median_final_energy(&r.truestate),
            lost_lock(&r.estimator, sim.scaled().ktilde()),
            r.estimator.records.len()
        ),
    )
}

fn c7_populations(r: &CoolingRuns) -> Outcome {
    let fw_e = &r.estimator.stats.final_window;
    let fw_t = &r.truestate.stats.final_window;
    let split = |fw: &cavity_cooling::ensemble::FinalWindow| (fw.populations[0].0 - fw.populations[1].0).abs();
    let ok = fw_e.p01.0 >= 0.88 && fw_t.p01.0 >= 0.94 && split(fw_e) < 0.15 && split(fw_t) < 0.15;
    let k = Config::default().scaled().unwrap().ktilde();
    outcome(
        ok,
        format!(
            "p0+p1: estimator {:.3} +- {:.3} (|p0-p1| {:.3}), truestate {:.3} +- {:.3} (|p0-p1| {:.3}); estimator lost lock in {}/{}",
            fw_e.p01.0,
            fw_e.p01.1,
            split(fw_e),
            fw_t.p01.0,
            fw_t.p01.1,
            split(fw_t),
            lost_lock(&r.estimator, k),
            r.estimator.records.len()
        ),
    )
}

/// Purified means `|<P>| > 0.99` reached at some sample up to t = 100.
fn c8_parity(r: &CoolingRuns) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, run) in [("estimator", &r.estimator), ("truestate", &r.truestate)] {
        let series: Vec<Vec<f64>> =
            run.records.iter().filter(|x| !x.failed()).map(|x| x.series(|s| s.parity)).collect();
        let p = parity_statistics(&series, 0.99).unwrap();
        ok &= p.martingale_ok() && p.purified_fraction >= 0.9 && p.split_ok();
        parts.push(format!(
            "{label}: drift {:+.3} +- {:.3}, purified {:.1}% ({:.1}% at t = 100), even {:.3} in [{:.3}, {:.3}]",
            p.drift,
            p.drift_se,
            100.0 * p.purified_fraction,
            100.0 * p.purified_at_end,
            p.even_fraction,
            p.fair_split_interval.0,
            p.fair_split_interval.1
        ));
    }
    outcome(ok, parts.join("; "))
}

/// Decrease: each step up to 0.1 is non-increasing at 2 sigma and the drop
/// from 0.02 to 0.1 is significant. Plateau: the spread over epsilon >= 0.1
/// is under half of that drop.
fn decrease_then_plateau(curve: &[(f64, f64, f64)], threshold: f64) -> bool {
    let at = |x: f64| curve.iter().find(|p| (p.0 - x).abs() < 1e-12).copied();
    let (Some(a), Some(b)) = (at(0.02), at(0.1)) else {
        return false;
    };
    let below: Vec<_> = curve.iter().filter(|p| p.0 > threshold && p.0 <= 0.1).collect();
    let monotone = below.windows(2).all(|w| w[1].1 <= w[0].1 + 2.0 * w[0].2.hypot(w[1].2));
    let plateau: Vec<f64> = curve.iter().filter(|p| p.0 >= 0.1).map(|p| p.1).collect();
    let lo = plateau.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = plateau.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    monotone && a.1 - b.1 > 2.0 * a.2.hypot(b.2) && hi - lo < 0.5 * (a.1 - lo)
}

/// Final energy against epsilon at 32 trajectories per point, both sources.
/// At epsilon <= Gamma k^4 / 2 the final energy must not be below the
/// initial energy.
fn c9_sweep() -> Outcome {
    let base = Config::default();
    let sim = Simulation::new(base.clone()).unwrap();
    let threshold = TheoryInputs::epsilon_threshold(sim.scaled().gamma(), sim.scaled().ktilde());
    let eps = base.sweep_epsilons.clone();
    let mut ok = true;
    let mut shapes = Vec::new();
    for source in [ControllerSource::Estimator, ControllerSource::TrueState] {
        let mut curve = Vec::new();
        for &e in &eps {
            let mut c = base.clone();
            c.sim.n_trajectories = 32;
            c.control.epsilon = e;
            c.control.controller_source = source;
            let run = sim.with_config(c).unwrap().run_ensemble().unwrap();
            let (m, se) = run.stats.final_window.energy;
            let theory = sim.theory(e).0;
            let initial: f64 = run.records.iter().map(|r| r.samples[0].energy).sum::<f64>() / run.records.len() as f64;
            if let Some(th) = theory {
                ok &= m + 2.0 * se >= th;
            }
            if e <= threshold {
                ok &= m >= initial;
            }
            ok &= run.stats.valid();
            println!(
                "    {source:<10} eps {e:<6} E {m:8.2} +- {se:5.2}  median {:8.2}  theory {}  failed {}",
                median_final_energy(&run),
                theory.map_or("  -  ".into(), |t| format!("{t:5.2}")),
                run.stats.n_failed
            );
            curve.push((e, m, se));
        }
        let shape = decrease_then_plateau(&curve, threshold);
        ok &= shape;
        shapes.push(format!("{source} {shape}"));
    }
    outcome(ok, format!("decrease then plateau: {}; threshold eps = {threshold:.4}", shapes.join(", ")))
}

/// Same Brownian path at `dt` and `dt/2`: the integrators agree to within
/// `5 dt` at `dt` and the disagreement shrinks when `dt` is halved.
fn c10_cross_integrator() -> Outcome {
    let cfg = Config::default();
    let s = cfg.scaled().unwrap();
    let (gamma, vmax) = (s.gamma(), s.vmax());
    let dt = cfg.control.dt;
    let grid = SpatialGrid::new(64, 1, s.ktilde()).unwrap();
    let n_fine = (0.05 / (dt / 2.0)).round() as usize;
    let mut noise = NoiseStream::new(cfg.sim.base_seed, 0);
    let fine: Vec<f64> = (0..n_fine).map(|_| noise.increment(dt / 2.0)).collect();
    let coarse: Vec<f64> = fine.chunks(2).map(|c| c[0] + c[1]).collect();

    let moments = |st: &dyn ConditionedState| {
        [
            st.expectation(Observable::Position),
            st.expectation(Observable::Momentum),
            st.expectation(Observable::PositionSq),
            st.expectation(Observable::MomentumSq),
            st.mean_cos_sq(),
        ]
    };
    let disagreement = |incs: &[f64], h: f64| -> f64 {
        let mut w = WaveState::gaussian(grid.clone(), 3.0, -1.0, 0.5, vmax).unwrap();
        let mut d = DensityState::from_wave(&w).unwrap();
        for &dw in incs {
            w.step_hamiltonian(h);
            w.step_measurement(dw, gamma, 1.0, h).unwrap();
            d.step(dw, gamma, 1.0, h).unwrap();
        }
        let (a, b) = (moments(&w), moments(&d));
        a.iter().zip(&b).map(|(x, y)| (x - y).abs() / x.abs().max(1.0)).fold(0.0, f64::max)
    };
    let e1 = disagreement(&coarse, dt);
    let e2 = disagreement(&fine, dt / 2.0);
    outcome(
        e1 < 5.0 * dt && e2 < e1,
        format!("max moment disagreement {e1:.2e} at dt, {e2:.2e} at dt/2 (bound {:.1e})", 5.0 * dt),
    )
}

fn main() {
    let only: Option<BTreeSet<u32>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let want = |n: u32| only.as_ref().is_none_or(|s| s.contains(&n));
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, f: &dyn Fn() -> Outcome| {
        if !want(n) {
            return;
        }
        let t = Instant::now();
        let o = f();
        println!(
            "[{}] criterion {n} {name}: {} ({:.0} s)",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
        results.push((n, name, o));
    };

    report(1, "scaled parameters", &c1_scaled_parameters);
    report(2, "band energies", &c2_band_energies);
    report(3, "conservation", &c3_conservation);
    report(4, "heating law", &c4_heating);
    report(5, "estimator lock", &c5_lock);
    if want(6) || want(7) || want(8) {
        let runs = cooling_runs();
        report(6, "cooling", &|| c6_cooling(&runs));
        report(7, "band populations", &|| c7_populations(&runs));
        report(8, "parity", &|| c8_parity(&runs));
    }
    report(9, "epsilon sweep", &c9_sweep);
    report(10, "cross-integrator", &c10_cross_integrator);

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.passed).map(|r| r.0).collect();
    println!("acceptance: {} passed, {} failed {:?}", results.len() - failed.len(), failed.len(), failed);
    if strict && !failed.is_empty() {
        std::process::exit(1);
    }
}
