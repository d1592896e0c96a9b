//! Mean energy against time for estimator-, photocurrent- and no-feedback
//! control, written as one ensemble CSV per source.
//!
//! ```text
//! cargo run --release --example cooling_curves -- [n_trajectories] [t_max] [out_dir]
//! ```

use std::path::PathBuf;

use cavity_cooling::ensemble::ensemble_csv;
use cavity_cooling::{Config, ControllerSource, Simulation};

fn main() -> cavity_cooling::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = Config::default();
    cfg.sim.n_trajectories = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    cfg.sim.t_max = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20.0);
    let out = PathBuf::from(args.get(3).map_or("out", String::as_str));
    std::fs::create_dir_all(&out)?;
    let base = Simulation::new(cfg.clone())?;
    for source in [ControllerSource::Estimator, ControllerSource::Photocurrent, ControllerSource::None] {
        let mut c = cfg.clone();
        c.control.controller_source = source;
        let run = base.with_config(c)?.run_ensemble()?;
        let st = &run.stats;
        let marks: Vec<String> = st
            .times
            .iter()
            .zip(&st.energy.mean)
            .step_by((st.times.len() / 5).max(1))
            .map(|(t, e)| format!("E({t:.0}) = {e:.1}"))
            .collect();
        println!(
            "{source:<12} {}  final window {:.2} +- {:.2}",
            marks.join("  "),
            st.final_window.energy.0,
            st.final_window.energy.1
        );
        std::fs::write(out.join(format!("cooling_{source}.csv")), ensemble_csv(st))?;
    }
    Ok(())
}
