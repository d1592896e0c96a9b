//! Parity purification: each cooled atom ends in an even or odd state, with
//! even and odd equally likely and the ensemble mean unchanged.
//!
//! ```text
//! cargo run --release --example parity -- [n_trajectories] [t_max]
//! ```

use cavity_cooling::analysis::parity_statistics;
use cavity_cooling::{Config, ControllerSource, Simulation};

fn main() -> cavity_cooling::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = Config::default();
    cfg.sim.n_trajectories = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(16);
    cfg.sim.t_max = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(30.0);
    cfg.control.controller_source = ControllerSource::TrueState;
    let run = Simulation::new(cfg)?.run_ensemble()?;
    let series: Vec<Vec<f64>> = run.records.iter().filter(|r| !r.failed()).map(|r| r.series(|s| s.parity)).collect();
    for r in run.records.iter().take(8) {
        let p = r.series(|s| s.parity);
        let marks: Vec<String> = p.iter().step_by((p.len() / 6).max(1)).map(|x| format!("{x:+.2}")).collect();
        println!("trajectory {:>2}: {}", r.index, marks.join(" "));
    }
    let s = parity_statistics(&series, 0.99)?;
    println!("mean parity {:+.3} -> {:+.3}, drift {:+.3} +- {:.3}", s.mean_initial, s.mean_final, s.drift, s.drift_se);
    println!(
        "purified {:.0}% ({:.0}% at the end), even fraction {:.3} (fair split in [{:.3}, {:.3}])",
        100.0 * s.purified_fraction,
        100.0 * s.purified_at_end,
        s.even_fraction,
        s.fair_split_interval.0,
        s.fair_split_interval.1
    );
    Ok(())
}
