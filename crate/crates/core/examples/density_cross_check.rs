//! Pure-state unraveling against the density-matrix SME on one noise path,
//! and decoherence of the density matrix at reduced detection efficiency.
//!
//! ```text
//! cargo run --release --example density_cross_check -- [t] [eta]
//! ```

use cavity_cooling::grid::SpatialGrid;
use cavity_cooling::truestate::{ConditionedState, DensityState, NoiseStream, Observable, WaveState};
use cavity_cooling::Config;

fn main() -> cavity_cooling::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let t_end: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.05);
    let eta: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let cfg = Config::default();
    let s = cfg.scaled()?;
    let dt = cfg.control.dt;
    let grid = SpatialGrid::new(64, 1, s.ktilde())?;
    let mut w = WaveState::gaussian(grid, 3.0, -1.0, 0.5, s.vmax())?;
    let mut d = DensityState::from_wave(&w)?;
    let mut lossy = d.clone();
    let mut noise = NoiseStream::new(cfg.sim.base_seed, 0);
    let steps = (t_end / dt).round() as usize;
    for i in 1..=steps {
        let dw = noise.increment(dt);
        w.step_hamiltonian(dt);
        w.step_measurement(dw, s.gamma(), 1.0, dt)?;
        d.step(dw, s.gamma(), 1.0, dt)?;
        lossy.step(dw, s.gamma(), eta, dt)?;
        if i % (steps / 5).max(1) == 0 {
            println!(
                "t = {:.4}  <X> {:+.5} / {:+.5}  <P> {:+.5} / {:+.5}  purity {:.6} (eta = {eta}: {:.4})",
                i as f64 * dt,
                w.expectation(Observable::Position),
                d.expectation(Observable::Position),
                w.expectation(Observable::Momentum),
                d.expectation(Observable::Momentum),
                d.purity(),
                lossy.purity()
            );
        }
    }
    Ok(())
}
