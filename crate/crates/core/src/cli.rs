//! Command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{bundled_tce, load_config};
use crate::error::Error;
use crate::metrics::{
    bypass_report, information_content, shannon_single_spin_limit, shannon_single_spin_limit_exact,
    sorensen_bound, spin_temperature, state_entropy, total_entropy_exact,
};
use crate::model::{BiasState, JointState, Molecule, State, MAX_JOINT_SPINS};
use crate::optimizer::{optimize_delays_with, surface_to_csv, Axis, GridSpec};
use crate::schedule::{run_schedule, Bindings, Mode, Schedule, Trace};

pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "spincool",
    version,
    about = "Heat-bath algorithmic cooling simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured schedule and summarize the final state.
    Simulate(SimulateArgs),
    /// Grid-search the delays t1 and t2 for maximal information content.
    Optimize(OptimizeArgs),
    /// Report entropy, information content and reversible-cooling bounds.
    Bounds(CommonArgs),
    /// Table of initial, ideal and simulated biases with spin temperatures.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment config (TOML). Defaults to the bundled TCE fixture.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Round frequency ratios to integers (e.g. 1:1:4).
    #[arg(long)]
    pub integer_ratios: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_name = "SECONDS")]
    pub t1: Option<f64>,
    #[arg(long, value_name = "SECONDS")]
    pub t2: Option<f64>,
    /// Transfer efficiencies, one per transfer step in order.
    #[arg(long, value_name = "A,B,C", value_delimiter = ',')]
    pub efficiencies: Option<Vec<f64>>,
    /// Infinite T1 ratio: waits reset the reset spin and freeze the rest.
    #[arg(long)]
    pub ideal: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Write the per-step trace as CSV.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// t1 axis as MIN:MAX:STEP in seconds.
    #[arg(
        long = "grid",
        alias = "grid-t1",
        value_name = "MIN:MAX:STEP",
        default_value = "0:30:0.05"
    )]
    pub grid_t1: Axis,
    /// t2 axis as MIN:MAX:STEP in seconds.
    #[arg(
        long = "grid-t2",
        value_name = "MIN:MAX:STEP",
        default_value = "0:30:0.05"
    )]
    pub grid_t2: Axis,
    #[arg(long, value_name = "A,B,C", value_delimiter = ',')]
    pub efficiencies: Option<Vec<f64>>,
    #[arg(long)]
    pub ideal: bool,
    /// Write the surface as CSV.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Measured final biases to list alongside the simulation, one per spin.
    #[arg(long, value_name = "A,B,C", value_delimiter = ',')]
    pub observed: Option<Vec<f64>>,
}

/// Error classified by the stage that produced it.
#[derive(Debug)]
pub enum Failure {
    Config(Error),
    Runtime(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn error(&self) -> &Error {
        match self {
            Failure::Config(e) | Failure::Runtime(e) => e,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e @ Error::Config(_)) => write!(f, "{e}"),
            Failure::Config(e) => write!(f, "config error: {e}"),
            Failure::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

fn runtime<T>(r: crate::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Runtime)
}

struct Setup {
    molecule: Molecule,
    schedule: Schedule,
}

fn load(common: &CommonArgs, efficiencies: Option<&[f64]>) -> Result<Setup, Failure> {
    let (mut molecule, mut schedule) = match &common.config {
        Some(path) => load_config(path).map_err(Failure::Config)?,
        None => bundled_tce(),
    };
    if common.integer_ratios {
        molecule = molecule.with_integer_ratios().map_err(Failure::Config)?;
    }
    if let Some(e) = efficiencies {
        schedule.set_efficiencies(e).map_err(Failure::Config)?;
        schedule.validate(&molecule).map_err(Failure::Config)?;
    }
    Ok(Setup { molecule, schedule })
}

fn bindings(run: &RunArgs) -> Bindings {
    let mut b = Bindings::new();
    if let Some(t) = run.t1 {
        b.insert("t1".into(), t);
    }
    if let Some(t) = run.t2 {
        b.insert("t2".into(), t);
    }
    b
}

fn mode(ideal: bool) -> Mode {
    if ideal {
        Mode::Ideal
    } else {
        Mode::Physical
    }
}

fn simulate_run(setup: &Setup, run: &RunArgs) -> Result<Trace, Failure> {
    runtime(run_schedule(
        &setup.molecule,
        &setup.schedule,
        &bindings(run),
        State::Bias(setup.molecule.equilibrium_state()),
        mode(run.ideal),
    ))
}

fn temperature_cell(molecule: &Molecule, spin: usize, bias: f64) -> String {
    match spin_temperature(
        bias,
        molecule.relative_equilibrium(spin),
        molecule.temperature_k(),
    ) {
        Ok(t) => format!("{t:.6}"),
        Err(_) => "n/a".into(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Runtime(Error::Io(e)))
}

pub fn simulate(args: &SimulateArgs) -> Result<String, Failure> {
    let setup = load(&args.run.common, args.run.efficiencies.as_deref())?;
    let trace = simulate_run(&setup, &args.run)?;
    if let Some(path) = &args.out {
        write_file(path, &trace.to_csv())?;
    }
    let m = &setup.molecule;
    let initial = &trace.initial().biases;
    let last = trace.last();
    let report = runtime(bypass_report(initial, &last.biases))?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "mode: {}",
        if args.run.ideal { "ideal" } else { "physical" }
    );
    let _ = writeln!(
        out,
        "{:<8} {:>12} {:>12} {:>14}",
        "spin", "initial", "final", "spin_temp_K"
    );
    for (i, name) in m.names().enumerate() {
        let b = last.biases.as_slice()[i];
        let _ = writeln!(
            out,
            "{:<8} {:>12.6} {:>12.6} {:>14}",
            name,
            initial.as_slice()[i],
            b,
            temperature_cell(m, i, b)
        );
    }
    let _ = writeln!(out, "ic_initial: {:.6}", report.ic_initial);
    let _ = writeln!(out, "ic_final: {:.6}", report.ic_final);
    let _ = writeln!(
        out,
        "ic_increase_percent: {:.6}",
        100.0 * report.relative_increase
    );
    let _ = writeln!(
        out,
        "entropy_initial_bits: {:.12}",
        trace.initial().entropy_bits
    );
    let _ = writeln!(out, "entropy_final_bits: {:.12}", last.entropy_bits);
    let _ = writeln!(out, "elapsed_s: {:.6}", last.elapsed_s);
    let _ = writeln!(out, "bypass: {}", report.bypass);
    Ok(out)
}

pub fn optimize(args: &OptimizeArgs) -> Result<String, Failure> {
    let setup = load(&args.common, args.efficiencies.as_deref())?;
    let grid = GridSpec::new(args.grid_t1, args.grid_t2);
    let surface = runtime(optimize_delays_with(
        &setup.molecule,
        &setup.schedule,
        &grid,
        &State::Bias(setup.molecule.equilibrium_state()),
        mode(args.ideal),
    ))?;
    if let Some(path) = &args.out {
        write_file(path, &surface_to_csv(&surface))?;
    }
    let (t1, t2, ic) = surface.best();
    Ok(format!(
        "cells: {}\nargmax: t1={t1:.6} s t2={t2:.6} s\nmax_ic: {ic:.6}\n",
        surface.len()
    ))
}

pub fn bounds(args: &CommonArgs) -> Result<String, Failure> {
    let setup = load(args, None)?;
    let m = &setup.molecule;
    let eq = m.equilibrium_state();
    let unit = m.bias_unit();
    let mut out = String::new();
    let _ = writeln!(out, "spins: {}", m.len());
    let _ = writeln!(out, "bias_unit: {unit:.6e}");
    let _ = writeln!(out, "ic_equilibrium: {:.6}", information_content(&eq));
    let entropy = runtime(state_entropy(&State::Bias(eq.clone()), m))?;
    let _ = writeln!(out, "entropy_bits: {entropy:.12}");
    let _ = writeln!(
        out,
        "entropy_deficit_bits: {:.6e}",
        m.len() as f64 - entropy
    );
    let _ = writeln!(
        out,
        "shannon_single_spin_limit: {:.6}",
        shannon_single_spin_limit(&eq)
    );
    let exact = shannon_single_spin_limit_exact(entropy, m.len()) / unit;
    let _ = writeln!(out, "shannon_single_spin_limit_exact: {exact:.6}");
    if m.len() <= MAX_JOINT_SPINS {
        let joint = runtime(JointState::lift(&eq, m))?;
        let _ = writeln!(
            out,
            "joint_entropy_bits: {:.12}",
            total_entropy_exact(&joint)
        );
        for (i, name) in m.names().enumerate() {
            let _ = writeln!(
                out,
                "sorensen_bound[{name}]: {:.6} (equilibrium {:.6})",
                sorensen_bound(&joint, i) / unit,
                eq.as_slice()[i]
            );
        }
    }
    Ok(out)
}

pub fn report(args: &ReportArgs) -> Result<String, Failure> {
    let setup = load(&args.run.common, args.run.efficiencies.as_deref())?;
    let m = &setup.molecule;
    let physical = simulate_run(
        &setup,
        &RunArgs {
            ideal: false,
            ..clone_run(&args.run)
        },
    )?;
    let ideal = simulate_run(
        &setup,
        &RunArgs {
            ideal: true,
            ..clone_run(&args.run)
        },
    )?;
    let observed = match &args.observed {
        Some(v) if v.len() != m.len() => {
            return Err(Failure::Config(Error::LengthMismatch {
                expected: m.len(),
                actual: v.len(),
            }))
        }
        Some(v) => Some(BiasState::new(v.clone())),
        None => None,
    };

    let initial = &physical.initial().biases;
    let mut out = String::new();
    let mut header = format!(
        "{:<8} {:>12} {:>12} {:>12} {:>14}",
        "spin", "initial", "ideal", "simulated", "sim_temp_K"
    );
    if observed.is_some() {
        let _ = write!(header, " {:>12} {:>14}", "observed", "obs_temp_K");
    }
    let _ = writeln!(out, "{header}");
    for (i, name) in m.names().enumerate() {
        let sim = physical.last().biases.as_slice()[i];
        let _ = write!(
            out,
            "{:<8} {:>12.6} {:>12.6} {:>12.6} {:>14}",
            name,
            initial.as_slice()[i],
            ideal.last().biases.as_slice()[i],
            sim,
            temperature_cell(m, i, sim)
        );
        if let Some(obs) = &observed {
            let b = obs.as_slice()[i];
            let _ = write!(out, " {:>12.6} {:>14}", b, temperature_cell(m, i, b));
        }
        out.push('\n');
    }
    let _ = writeln!(out, "ic_initial: {:.6}", information_content(initial));
    let _ = writeln!(out, "ic_ideal: {:.6}", ideal.last().ic);
    let _ = writeln!(out, "ic_simulated: {:.6}", physical.last().ic);
    if let Some(obs) = &observed {
        let r = runtime(bypass_report(initial, obs))?;
        let _ = writeln!(out, "ic_observed: {:.6}", r.ic_final);
        let _ = writeln!(
            out,
            "ic_observed_increase_percent: {:.6}",
            100.0 * r.relative_increase
        );
    }
    Ok(out)
}

fn clone_run(run: &RunArgs) -> RunArgs {
    RunArgs {
        common: CommonArgs {
            config: run.common.config.clone(),
            integer_ratios: run.common.integer_ratios,
        },
        t1: run.t1,
        t2: run.t2,
        efficiencies: run.efficiencies.clone(),
        ideal: run.ideal,
    }
}

pub fn run(cli: &Cli) -> Result<String, Failure> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Optimize(a) => optimize(a),
        Command::Bounds(a) => bounds(a),
        Command::Report(a) => report(a),
    }
}
