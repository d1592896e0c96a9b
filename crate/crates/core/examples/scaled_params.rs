//! Physical cavity-QED inputs and the dimensionless model they map to.
//!
//! ```text
//! cargo run --example scaled_params -- [key=value ...]
//! ```

use cavity_cooling::Config;

fn main() -> cavity_cooling::Result<()> {
    let overrides: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = Config::default();
    cfg.apply_overrides(&overrides)?;
    let p = &cfg.physical;
    for note in p.advisories() {
        println!("note: {note}");
    }
    println!("spatial frequency  {:.4e} 1/m", p.spatial_frequency());
    println!("omega_HO           {:.4e} 1/s", p.omega_ho());
    println!("measurement rate   {:.4e} 1/s", p.measurement_rate());
    let s = cfg.scaled()?;
    println!("ktilde = {:.6}  Gamma = {:.4}  V_max = {:.3}  eta = {}", s.ktilde(), s.gamma(), s.vmax(), s.eta());
    println!("time unit = {:.3e} s", s.time_unit());
    println!("config hash {}", cfg.hash());
    Ok(())
}
