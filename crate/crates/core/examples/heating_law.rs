//! Free evolution under continuous measurement: ensemble energy growth
//! against `8 pi Gamma k^2 <cos^2 sin^2>` and its harmonic form
//! `4 Gamma k^4 <H>`.
//!
//! ```text
//! cargo run --release --example heating_law -- [n_trajectories] [window]
//! ```

use cavity_cooling::analysis::heating_rate_harmonic;
use cavity_cooling::{Config, Simulation};

fn main() -> cavity_cooling::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let n = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(32);
    let window = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let mut cfg = Config::default();
    cfg.set("control.controller_source", "none")?;
    let sim = Simulation::new(cfg)?;
    let h = sim.measure_heating(n, window)?;
    let s = sim.scaled();
    println!("window [0, {window}], {n} trajectories");
    println!("raw dE/dt            {:8.3} +- {:.3}", h.raw.0, h.raw.1);
    println!("martingale removed   {:8.3} +- {:.3}", h.measured.0, h.measured.1);
    println!("predicted            {:8.3} +- {:.3}", h.predicted.0, h.predicted.1);
    println!("relative error       {:8.3}", h.relative_error());
    println!("harmonic form at E = 84: {:.3}", heating_rate_harmonic(84.0, s.gamma(), s.ktilde()));
    Ok(())
}
