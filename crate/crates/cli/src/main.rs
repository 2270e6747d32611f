use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use roughslip::bench::{
    export_experiment, field_error, run_experiment, solve_case_hmm, solve_dns, CaseId,
    ExperimentCase, ProfileTable,
};
use roughslip::cell::{decay_check, solve_cell_problem};
use roughslip::coupling::solve_no_slip;
use roughslip::geometry::UnitCell;
use roughslip::micro::run_micro;
use roughslip::{Error, Result};

#[derive(Parser)]
#[command(
    name = "roughslip",
    version,
    about = "Multiscale wall laws for laminar flow over rough walls"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for the micro solves.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the DNS, macro and micro meshes of a case.
    Meshgen(CaseArgs),
    /// Solve a unit-cell problem and print the slip constant.
    Cell {
        #[arg(long, default_value = "cosine")]
        shape: String,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// Truncation height of the cell.
        #[arg(long, default_value_t = 8.0)]
        top: f64,
        /// Cells per unit length.
        #[arg(long, default_value_t = 32)]
        n: usize,
    },
    /// Resolved solve on the rough domain.
    Dns(CaseArgs),
    /// Micro solves at the case's sites, driven by the no-slip macro flow.
    Micro(CaseArgs),
    /// HMM iteration.
    Hmm(CaseArgs),
    /// Relative L2 errors of a candidate profile table against a reference.
    Compare {
        reference: PathBuf,
        candidate: PathBuf,
    },
    /// Full experiment: DNS, no-slip and HMM with comparison.
    Run(CaseArgs),
}

#[derive(Args)]
struct CaseArgs {
    #[arg(long, value_enum, default_value = "periodic-channel")]
    case: Case,
    /// Case file; its `geometry.case` takes precedence over `--case`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    /// Comma-separated micro sites.
    #[arg(long, value_delimiter = ',')]
    sites: Option<Vec<f64>>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Case {
    PeriodicChannel,
    SawtoothWavy,
    ModulatedChannel,
    QuasiPeriodicChannel,
    BackwardFacingStep,
}

impl From<Case> for CaseId {
    fn from(c: Case) -> Self {
        match c {
            Case::PeriodicChannel => CaseId::PeriodicChannel,
            Case::SawtoothWavy => CaseId::SawtoothWavy,
            Case::ModulatedChannel => CaseId::ModulatedChannel,
            Case::QuasiPeriodicChannel => CaseId::QuasiPeriodicChannel,
            Case::BackwardFacingStep => CaseId::BackwardFacingStep,
        }
    }
}

impl CaseArgs {
    fn resolve(&self) -> Result<ExperimentCase> {
        let mut case = match &self.config {
            Some(path) => ExperimentCase::load(path)?,
            None => ExperimentCase::defaults(self.case.into()),
        };
        if let Some(e) = self.eps {
            case.epsilon = e;
        }
        if let Some(nu) = self.nu {
            case.viscosity = nu;
        }
        if let Some(s) = &self.sites {
            case.sites = s.clone();
        }
        if let Some(t) = self.tol {
            case.tolerance = Some(t);
        }
        case.validate()?;
        Ok(case)
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

fn run(cli: &Cli) -> Result<serde_json::Value> {
    let out = &cli.out;
    match &cli.command {
        Command::Meshgen(args) => {
            let case = args.resolve()?;
            let profile = case.profile()?;
            let config = case.hmm_config();
            let mut files = vec![
                write(out, "dns_mesh.json", &case.dns_mesh()?.to_json())?,
                write(out, "macro_mesh.json", &case.macro_mesh()?.to_json())?,
            ];
            for (j, &s) in case.sites.iter().enumerate() {
                let mesh = config.micro.spec(&profile, s).mesh(&profile)?;
                files.push(write(
                    out,
                    &format!("micro_mesh_{j}.json"),
                    &mesh.to_json(),
                )?);
            }
            Ok(json!({ "files": files }))
        }
        Command::Cell {
            shape,
            amplitude,
            top,
            n,
        } => {
            let cell = match UnitCell::parse(shape)? {
                UnitCell::Cosine { .. } => UnitCell::Cosine {
                    amplitude: *amplitude,
                },
                UnitCell::Sawtooth { .. } => UnitCell::Sawtooth {
                    amplitude: *amplitude,
                },
                UnitCell::Constant { .. } => UnitCell::Constant { value: *amplitude },
                UnitCell::Flat => UnitCell::Flat,
            };
            let s = solve_cell_problem(&cell, *top, *n)?;
            let decay = decay_check(&s)?;
            Ok(json!({
                "cell": cell,
                "chibar": s.chibar,
                "crest": s.crest(),
                "slip_length": s.slip_length(),
                "decay": decay,
            }))
        }
        Command::Dns(args) => {
            let case = args.resolve()?;
            let u = solve_dns(&case)?;
            let table =
                ProfileTable::sample(&u, &case.heights(), case.sample_range(), case.samples)?;
            let path = write(out, "dns.csv", &table.to_csv())?;
            Ok(
                json!({ "cells": u.cell_count(), "newton_iterations": u.newton_iterations, "file": path }),
            )
        }
        Command::Micro(args) => {
            let case = args.resolve()?;
            let profile = case.profile()?;
            let setup = case.macro_setup(case.macro_mesh()?);
            let macro_flow = solve_no_slip(&setup)?;
            let config = case.hmm_config();
            let mut sites = Vec::new();
            for &s in &case.sites {
                let r = run_micro(
                    &macro_flow,
                    &config.micro.spec(&profile, s),
                    &profile,
                    &setup.fluid,
                )?;
                sites.push(json!({ "site": s, "slip": r.slip, "cells": r.cells }));
            }
            Ok(json!({ "sites": sites }))
        }
        Command::Hmm(args) => {
            let case = args.resolve()?;
            let r = solve_case_hmm(&case)?;
            let table = ProfileTable::sample(
                &r.solution,
                &case.heights(),
                case.sample_range(),
                case.samples,
            )?;
            let report = serde_json::to_string_pretty(&r.report).expect("report serializes");
            let files = [
                write(out, "hmm.csv", &table.to_csv())?,
                write(out, "hmm_report.json", &report)?,
            ];
            Ok(json!({
                "iterations": r.report.iterations,
                "sites": r.law.sites,
                "alphas": r.law.raw,
                "files": files,
            }))
        }
        Command::Compare {
            reference,
            candidate,
        } => {
            let a = ProfileTable::from_csv(&fs::read_to_string(reference)?)?;
            let b = ProfileTable::from_csv(&fs::read_to_string(candidate)?)?;
            Ok(json!({ "errors": field_error(&a, &b)? }))
        }
        Command::Run(args) => {
            let case = args.resolve()?;
            let e = run_experiment(&case)?;
            let dir = out.join(case.id.name());
            let mut files = export_experiment(&e, &dir)?;
            files.push(write(&dir, "case.toml", &case.to_toml())?);
            Ok(json!({ "report": e.report, "files": files }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon_pool(n) {
            return fail(&e);
        }
    }
    match run(&cli) {
        Ok(v) => {
            // A closed stdout (e.g. `| head`) is not an error of the run.
            let _ = writeln!(
                io::stdout(),
                "{}",
                serde_json::to_string_pretty(&v).expect("output serializes")
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn rayon_pool(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn fail(e: &Error) -> ExitCode {
    let record = json!({ "error": e.code(), "message": e.to_string() });
    eprintln!("{record}");
    ExitCode::FAILURE
}
