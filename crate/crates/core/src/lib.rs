//! Feedback cooling of an atom's motion in a single-mode optical cavity.
//!
//! The atom sits in the standing-wave potential `-V cos^2(kX)`. Homodyne
//! detection of the cavity output continuously measures `cos^2(kX)`; a
//! Gaussian moment estimator turns the photocurrent into a state estimate,
//! and a bang-bang controller switches the well depth between
//! `(1 ± eps)^2 V_max` depending on the fitted slope of the estimated signal.
//!
//! All quantities are in scaled units: energy in `hbar omega_HO / 2 pi`,
//! time in `2 pi / omega_HO`, position in `sqrt(hbar / m omega_HO)`.
//!
//! ```no_run
//! use cavity_cooling::{Config, Simulation};
//!
//! let mut cfg = Config::default();
//! cfg.sim.n_trajectories = 8;
//! let run = Simulation::new(cfg)?.run_ensemble()?;
//! println!("final <H> = {:.2}", run.stats.final_window.energy.0);
//! # Ok::<(), cavity_cooling::Error>(())
//! ```

pub mod analysis;
pub mod controller;
pub mod ensemble;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod params;
pub mod truestate;
pub mod validation;

pub use ensemble::{EnsembleRun, EnsembleStats, Manifest, Simulation, TrajectoryRecord, TrajectorySample};
pub use error::{Error, Result};
pub use params::{Config, ControllerSource, PhysicalParams, ScaledParams};
