//! Command-line workflows: convergence tables, field snapshots and mass
//! comparisons.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::diagnostics::{total_mass, MassLedger};
use crate::error::{Error, Result};
use crate::fem::{integrate, ProblemSpec};
use crate::mesh::Mesh;
use crate::mms::{convergence_study, ConvergenceTable};
use crate::output::{fmt_number, FieldDump};
use crate::stepper::{run_transient, Observer, Operators, Scheme, SimState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "chromfem", version, about = "Membrane chromatography transport solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Temporal convergence study against the manufactured solution.
    Converge(CommonArgs),
    /// Transient run writing field snapshots and a mass ledger.
    Simulate(CommonArgs),
    /// Total mass under Backward Euler and midpoint on identical data.
    Compare(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Configuration file (`key = value` lines); defaults apply without one.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Snapshot and ledger stride, overriding `output.stride`.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Suppress progress output; errors still go to stderr.
    #[arg(long)]
    pub quiet: bool,
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(stride) = self.stride {
            cfg.stride = stride;
        }
        cfg.validate()?;
        fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
        Ok(cfg)
    }
}

/// Exit code for a failed workflow.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Csv(_) => EXIT_CONFIG,
        e if e.is_config() => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

/// Parse-free entry point used by the binary.
pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Converge(a) => a.resolve().and_then(|c| converge(&c, a.quiet)).map(drop),
        Command::Simulate(a) => a.resolve().and_then(|c| simulate(&c, a.quiet)).map(drop),
        Command::Compare(a) => a.resolve().and_then(|c| compare(&c, a.quiet)).map(drop),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            // Errors are reported even with --quiet.
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn setup(cfg: &RunConfig) -> Result<(Mesh, ProblemSpec)> {
    let spec = cfg.problem();
    let mesh = cfg.mesh(&spec)?;
    Ok((mesh, spec))
}

/// Run the dt ladder and write `convergence.csv`.
pub fn converge(cfg: &RunConfig, quiet: bool) -> Result<ConvergenceTable> {
    let ms = cfg
        .manufactured()
        .ok_or_else(|| Error::Config("converge needs boundary.g = mms".into()))?;
    let (mesh, spec) = setup(cfg)?;
    let table = convergence_study(&mesh, &spec, &ms, &cfg.scheme, cfg.t_final, &cfg.dt_ladder)?;
    table.write_csv(&cfg.output_dir.join("convergence.csv"))?;
    if !quiet {
        println!("{} temporal convergence\n{table}", cfg.scheme.scheme);
    }
    Ok(table)
}

/// Summary of a `simulate` run.
#[derive(Clone, Debug)]
pub struct SimulateSummary {
    pub steps: usize,
    pub final_state: SimState,
    pub ledger: MassLedger,
    pub snapshots: Vec<usize>,
}

/// Transient run writing snapshots and `mass_ledger.csv`.
///
/// The ledger is written even when a step fails.
pub fn simulate(cfg: &RunConfig, quiet: bool) -> Result<SimulateSummary> {
    let (mesh, spec) = setup(cfg)?;
    let mut ledger = MassLedger::new(cfg.stride);
    let mut dump = FieldDump::new(&cfg.output_dir, cfg.stride);
    let run = run_transient(&mesh, &spec, &cfg.scheme, cfg.t_final, None, &mut [&mut ledger, &mut dump]);
    ledger.write_csv(&cfg.output_dir.join("mass_ledger.csv"))?;
    let out = run?;
    if !quiet {
        let last = ledger.rows.last().expect("step 0 is always recorded");
        println!(
            "{}: {} steps to t = {}, total mass {:.6e}, min nodal {:.3e}",
            cfg.scheme.scheme, out.final_state.step, out.final_state.t, last.total_mass, last.min_nodal
        );
    }
    Ok(SimulateSummary {
        steps: out.final_state.step,
        final_state: out.final_state,
        ledger,
        snapshots: dump.steps().to_vec(),
    })
}

/// Total mass at every step.
#[derive(Clone, Debug, Default)]
pub struct MassTrace {
    pub times: Vec<f64>,
    pub masses: Vec<f64>,
}

impl Observer for MassTrace {
    fn observe(&mut self, mesh: &Mesh, spec: &ProblemSpec, _ops: &Operators, state: &SimState) -> Result<()> {
        self.times.push(state.t);
        self.masses.push(total_mass(mesh, spec, &state.c)?);
        Ok(())
    }
}

/// Columns of `mass_compare.csv`.
#[derive(Clone, Debug)]
pub struct MassComparison {
    pub times: Vec<f64>,
    pub exact: Option<Vec<f64>>,
    pub be: Vec<f64>,
    pub midpoint: Vec<f64>,
}

impl MassComparison {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["time"];
        if self.exact.is_some() {
            header.push("mass_exact");
        }
        header.extend(["mass_be", "mass_midpoint"]);
        w.write_record(&header)?;
        for i in 0..self.times.len() {
            let mut rec = vec![fmt_number(self.times[i])];
            if let Some(ex) = &self.exact {
                rec.push(fmt_number(ex[i]));
            }
            rec.push(fmt_number(self.be[i]));
            rec.push(fmt_number(self.midpoint[i]));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Run both schemes with the configured `dt` and write `mass_compare.csv`.
pub fn compare(cfg: &RunConfig, quiet: bool) -> Result<MassComparison> {
    let (mesh, spec) = setup(cfg)?;
    let midpoint_scheme = match cfg.scheme.scheme {
        Scheme::BeLagged => Scheme::MidpointExtrapolated,
        s => s,
    };
    let trace = |scheme: Scheme| -> Result<MassTrace> {
        let mut sc = cfg.scheme;
        sc.scheme = scheme;
        let mut t = MassTrace::default();
        run_transient(&mesh, &spec, &sc, cfg.t_final, None, &mut [&mut t])?;
        Ok(t)
    };
    let be = trace(Scheme::BeLagged)?;
    let mid = trace(midpoint_scheme)?;
    let exact = cfg
        .manufactured()
        .map(|ms| {
            be.times
                .iter()
                .map(|&t| integrate(&mesh, |_, _, p| spec.mass_density(ms.value(p, t))))
                .collect::<Result<Vec<f64>>>()
        })
        .transpose()?;
    let cmp = MassComparison {
        times: be.times,
        exact,
        be: be.masses,
        midpoint: mid.masses,
    };
    cmp.write_csv(&cfg.output_dir.join("mass_compare.csv"))?;
    if !quiet {
        let last = cmp.times.len() - 1;
        match &cmp.exact {
            Some(ex) => println!(
                "t = {}: mass_be - exact = {:+.6e}, mass_midpoint - exact = {:+.6e}",
                cmp.times[last],
                cmp.be[last] - ex[last],
                cmp.midpoint[last] - ex[last]
            ),
            None => println!(
                "t = {}: mass_be = {:.6e}, mass_midpoint = {:.6e}",
                cmp.times[last], cmp.be[last], cmp.midpoint[last]
            ),
        }
    }
    Ok(cmp)
}
