//! Final energy against the switching amplitude epsilon, with the centroid
//! and squeezing predictions alongside.
//!
//! ```text
//! cargo run --release --example epsilon_sweep -- [n_trajectories] [t_max] [eps,eps,...]
//! ```

use cavity_cooling::ensemble::sweep_csv;
use cavity_cooling::{Config, ControllerSource, Simulation};

fn main() -> cavity_cooling::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = Config::default();
    cfg.sim.n_trajectories = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    cfg.sim.t_max = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20.0);
    if let Some(list) = args.get(3) {
        cfg.set("sweep.epsilons", list)?;
    }
    let sim = Simulation::new(cfg.clone())?;
    let rows = sim.epsilon_sweep(&cfg.sweep_epsilons, &[ControllerSource::Estimator])?;
    print!("{}", sweep_csv(&rows));
    Ok(())
}
