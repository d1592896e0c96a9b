//! Steady-state energy predictions against the switching amplitude.
//!
//! ```text
//! cargo run --example theory_table
//! ```

use cavity_cooling::analysis::{theory_ss_energy, TheoryInputs, TheoryVariant};
use cavity_cooling::ensemble::theory_csv;
use cavity_cooling::Config;

fn main() -> cavity_cooling::Result<()> {
    let s = Config::default().scaled()?;
    let (gamma, k) = (s.gamma(), s.ktilde());
    println!("controllable above eps = {:.5}", TheoryInputs::epsilon_threshold(gamma, k));
    println!("   eps     beta   centroid  squeezing");
    for eps in [0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3] {
        let t = TheoryInputs::harmonic(eps, gamma, k);
        match (theory_ss_energy(&t, TheoryVariant::Centroid), theory_ss_energy(&t, TheoryVariant::Squeezing)) {
            (Ok(c), Ok(q)) => println!("{eps:6}  {:7.4}  {c:8.3}  {q:9.3}", t.beta()),
            _ => println!("{eps:6}  {:7.4}  uncontrollable", t.beta()),
        }
    }
    if let Some(path) = std::env::args().nth(1) {
        let grid: Vec<f64> = (1..=300).map(|i| i as f64 * 0.001).collect();
        std::fs::write(&path, theory_csv(&grid, gamma, k))?;
        println!("wrote {path}");
    }
    Ok(())
}
