use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use cavity_cooling::analysis::{theory_ss_energy, TheoryInputs, TheoryVariant};
use cavity_cooling::ensemble::{ensemble_csv, sweep_csv, theory_csv, trajectory_csv};
use cavity_cooling::validation::invariant_suite;
use cavity_cooling::{Config, ControllerSource, Error, Manifest, Result, Simulation};
use clap::{Args, Parser, Subcommand};

/// Feedback cooling of an atom in a cavity lattice.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-trajectory tracking: true vs estimated <X> and Vx.
    Fig1(Common),
    /// Energy curves for the estimator, photocurrent and no-feedback sources.
    Fig2(Common),
    /// Band populations for the estimator and true-state sources.
    Fig3(Common),
    /// Final energy against epsilon, with theory columns.
    Fig4(Common),
    /// One ensemble with the configured source.
    Run(Common),
    /// Print steady-state predictions.
    Theory(Common),
    /// Run the invariant suite.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` file or a manifest JSON written by an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set control.epsilon=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    ntraj: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

const PRESET_TRAJECTORIES: usize = 32;

impl Common {
    /// Defaults, then preset settings, then the config file, then `--set`,
    /// then `--ntraj` / `--seed`.
    fn resolve(&self, preset: &[(&str, String)]) -> Result<(Config, Vec<String>)> {
        let mut cfg = Config::default();
        for (k, v) in preset {
            cfg.set(k, v)?;
        }
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)?;
            if text.trim_start().starts_with('{') {
                let base = Manifest::load_config(&text)?;
                cfg = base;
            } else {
                cfg.apply_text(&text)?;
            }
        }
        let mut overrides = self.set.clone();
        if let Some(n) = self.ntraj {
            overrides.push(format!("sim.n_trajectories={n}"));
        }
        if let Some(s) = self.seed {
            overrides.push(format!("sim.base_seed={s}"));
        }
        cfg.apply_overrides(&overrides)?;
        cfg.validate()?;
        Ok((cfg, overrides))
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    println!("wrote {}", dir.join(name).display());
    Ok(())
}

fn preset_count() -> (&'static str, String) {
    ("sim.n_trajectories", PRESET_TRAJECTORIES.to_string())
}

fn ensembles(
    name: &str,
    args: &Common,
    preset: &[(&str, String)],
    sources: Option<&[ControllerSource]>,
) -> Result<bool> {
    let (cfg, overrides) = args.resolve(preset)?;
    let configured = [cfg.control.controller_source];
    let sources = sources.unwrap_or(&configured);
    let base = Simulation::new(cfg.clone())?;
    let mut manifest = Manifest::new(name, &cfg, &overrides);
    for &source in sources {
        let mut c = cfg.clone();
        c.control.controller_source = source;
        let run = base.with_config(c)?.run_ensemble()?;
        manifest.record(&run.stats, run.wall_time_s);
        let fw = &run.stats.final_window;
        println!(
            "{name} {source}: final E = {:.3} +- {:.3}, p0+p1 = {:.3}, |parity| = {:.3}, failed {}, {:.1} s",
            fw.energy.0, fw.energy.1, fw.p01.0, fw.parity_abs.0, run.stats.n_failed, run.wall_time_s
        );
        if run.stats.n_ok > 0 {
            write(&args.out, &format!("{name}_{source}.csv"), &ensemble_csv(&run.stats))?;
        }
    }
    manifest.write(&args.out, &format!("{name}_manifest.json"))?;
    Ok(manifest.valid)
}

fn fig1(args: &Common) -> Result<bool> {
    let preset = [
        ("sim.n_trajectories", "1".to_string()),
        ("sim.t_max", "10".to_string()),
        ("sim.output_stride", "10".to_string()),
    ];
    let (cfg, overrides) = args.resolve(&preset)?;
    let sim = Simulation::new(cfg.clone())?;
    let run = sim.run_ensemble()?;
    for r in &run.records {
        write(&args.out, &format!("fig1_traj{}.csv", r.index), &trajectory_csv(r))?;
    }
    let mut manifest = Manifest::new("fig1", &cfg, &overrides);
    manifest.record(&run.stats, run.wall_time_s);
    manifest.write(&args.out, "fig1_manifest.json")?;
    Ok(manifest.valid)
}

fn fig4(args: &Common) -> Result<bool> {
    let (cfg, overrides) = args.resolve(&[preset_count()])?;
    let sim = Simulation::new(cfg.clone())?;
    let start = Instant::now();
    let rows = sim.epsilon_sweep(&cfg.sweep_epsilons, &[ControllerSource::Estimator, ControllerSource::TrueState])?;
    for r in &rows {
        println!(
            "eps = {:<6} {:<10} E = {:.3} +- {:.3}  theory {}",
            r.epsilon,
            r.source.as_str(),
            r.energy_final_mean,
            r.energy_final_se,
            r.theory_centroid.map_or("uncontrollable".into(), |t| format!("{t:.3}"))
        );
    }
    write(&args.out, "fig4_sweep.csv", &sweep_csv(&rows))?;
    let mut manifest = Manifest::new("fig4", &cfg, &overrides);
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.write(&args.out, "fig4_manifest.json")?;
    Ok(true)
}

fn theory(args: &Common) -> Result<bool> {
    let (cfg, _) = args.resolve(&[])?;
    let sp = cfg.scaled()?;
    let (gamma, k, eps) = (sp.gamma(), sp.ktilde(), cfg.control.epsilon);
    let harmonic = TheoryInputs::harmonic(eps, gamma, k);
    println!("ktilde = {k:.6}  Gamma = {gamma:.4}  V_max = {:.3}", sp.vmax());
    println!("epsilon = {eps}");
    println!("beta = {:.4}", harmonic.beta());
    println!("epsilon threshold = {:.5}", TheoryInputs::epsilon_threshold(gamma, k));
    let show = |label: &str, t: &TheoryInputs| match (
        theory_ss_energy(t, TheoryVariant::Centroid),
        theory_ss_energy(t, TheoryVariant::Squeezing),
    ) {
        (Ok(c), Ok(s)) => println!("{label}: centroid = {c:.3}  squeezing = {s:.3}"),
        (Err(e), _) | (_, Err(e)) => println!("{label}: {e}"),
    };
    show("harmonic levels (E0 = pi, E1 = 3 pi)", &harmonic);
    let sim = Simulation::new(cfg.clone())?;
    let bands = TheoryInputs { e0: sim.bands().band_energy(0), e1: sim.bands().band_energy(1), ..harmonic };
    show(&format!("band levels (E0 = {:.4}, E1 = {:.4})", bands.e0, bands.e1), &bands);
    let grid: Vec<f64> = (1..=300).map(|i| i as f64 * 0.001).collect();
    write(&args.out, "theory.csv", &theory_csv(&grid, gamma, k))?;
    Ok(true)
}

fn validate(args: &Common) -> Result<bool> {
    let (cfg, _) = args.resolve(&[])?;
    let checks = invariant_suite(&cfg)?;
    for c in &checks {
        println!("{}", c.line());
    }
    Ok(checks.iter().all(|c| c.passed != Some(false)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = match &cli.command {
        Command::Fig1(a)
        | Command::Fig2(a)
        | Command::Fig3(a)
        | Command::Fig4(a)
        | Command::Run(a)
        | Command::Theory(a)
        | Command::Validate(a) => a,
    };
    if let Some(t) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match &cli.command {
        Command::Fig1(a) => fig1(a),
        Command::Fig2(a) => {
            let sources = [ControllerSource::Estimator, ControllerSource::Photocurrent, ControllerSource::None];
            ensembles("fig2", a, &[preset_count()], Some(&sources))
        }
        Command::Fig3(a) => {
            ensembles("fig3", a, &[preset_count()], Some(&[ControllerSource::Estimator, ControllerSource::TrueState]))
        }
        Command::Fig4(a) => fig4(a),
        Command::Run(a) => ensembles("run", a, &[], None),
        Command::Theory(a) => theory(a),
        Command::Validate(a) => validate(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: run invalid");
            ExitCode::from(1)
        }
        Err(e @ (Error::UnknownKey(_) | Error::BadValue { .. } | Error::Config(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
