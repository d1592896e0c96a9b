//! Populations of the four lowest bands under estimator and true-state
//! feedback.
//!
//! ```text
//! cargo run --release --example band_populations -- [n_trajectories] [t_max]
//! ```

use cavity_cooling::{Config, ControllerSource, Simulation};

fn main() -> cavity_cooling::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = Config::default();
    cfg.sim.n_trajectories = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    cfg.sim.t_max = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(30.0);
    let base = Simulation::new(cfg.clone())?;
    for source in [ControllerSource::Estimator, ControllerSource::TrueState] {
        let mut c = cfg.clone();
        c.control.controller_source = source;
        let run = base.with_config(c)?.run_ensemble()?;
        let fw = &run.stats.final_window;
        let p: Vec<String> = fw.populations.iter().map(|(m, se)| format!("{m:.3}+-{se:.3}")).collect();
        println!("{source:<10} t >= {:.0}: p0..p3 = [{}], p0+p1 = {:.3}", fw.start, p.join(", "), fw.p01.0);
    }
    Ok(())
}
