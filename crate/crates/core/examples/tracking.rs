//! Estimator lock-on from a mismatched start.
//!
//! The estimator begins at `<X> = 6, Vx = Vp = 1/sqrt(2)` while each atom
//! starts from a random point on the initial energy shell. Writes the first
//! trajectory as CSV and prints lock times for the ensemble.
//!
//! ```text
//! cargo run --release --example tracking -- [n_trajectories] [t_max] [out.csv]
//! ```

use cavity_cooling::analysis::mean_se;
use cavity_cooling::ensemble::{lock_time, tracking_separation, trajectory_csv};
use cavity_cooling::{Config, Simulation};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn main() -> cavity_cooling::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = Config::default();
    cfg.sim.n_trajectories = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(32);
    cfg.sim.t_max = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10.0);
    cfg.sim.output_stride = 10;
    let sim = Simulation::new(cfg)?;
    let run = sim.run_ensemble()?;
    let grid = sim.grid();

    if let Some(path) = args.get(3) {
        std::fs::write(path, trajectory_csv(&run.records[0]))?;
        println!("wrote {path}");
    }

    for hold in [0.0, 0.5, 1.0] {
        let times: Vec<f64> =
            run.records.iter().map(|r| lock_time(r, grid, 0.5, hold).unwrap_or(f64::INFINITY)).collect();
        let never = times.iter().filter(|t| t.is_infinite()).count();
        println!("held for {hold}: median lock time {:.3}, never locked {never}/{}", median(times), run.records.len());
    }
    let tail: Vec<f64> = run
        .records
        .iter()
        .map(|r| {
            let s = r.samples.last().unwrap();
            tracking_separation(s.x_est, s.x_true, grid)
        })
        .collect();
    let (m, se) = mean_se(&tail);
    println!("final separation: {m:.3} +- {se:.3}");
    Ok(())
}
