//! Band energies of the lattice well against the harmonic ladder, and the
//! parity of the lowest Bloch states.
//!
//! ```text
//! cargo run --release --example band_structure -- [grid_points] [periods]
//! ```

use std::f64::consts::PI;

use cavity_cooling::analysis::compute_band_basis;
use cavity_cooling::grid::SpatialGrid;
use cavity_cooling::truestate::{ConditionedState, Observable};
use cavity_cooling::Config;

fn main() -> cavity_cooling::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let n = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(512);
    let periods = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let s = Config::default().scaled()?;
    let grid = SpatialGrid::new(n, periods, s.ktilde())?;
    let b = compute_band_basis(s.vmax(), grid)?;
    println!("band  E_n        harmonic   ratio    parity");
    for k in 0..b.n_bands().min(6) {
        let harmonic = PI * (2 * k + 1) as f64;
        let parity = b.eigenstate(k * periods)?.expectation(Observable::Parity);
        println!("{k:>4}  {:9.5}  {harmonic:9.5}  {:.5}  {parity:+.3}", b.band_energy(k), b.band_energy(k) / harmonic);
    }
    Ok(())
}
