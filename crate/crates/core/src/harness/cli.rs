use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::fidelity::{avg_gate_fidelity, pauli_products, state_fidelity, ChannelSample};
use crate::msgate::{computational_state, ideal_gate_map, MsTrajectory};
use crate::qops::{max_abs_diff, partial_trace_photon, HilbertLayout, Ket, Matrix};

use super::config::{describe_params, evolve, scan, Config, ScanTarget};
use super::output::{emit_csv, emit_svg_lineplot, parse_csv, ScanResult};
use super::scenarios::{RunOptions, Scenario};

#[derive(Debug, Parser)]
#[command(name = "cavity-ms", version, about = "Mølmer–Sørensen gates in cavity QED")]
struct Cli {
    /// Output directory for CSV and SVG files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (falls back to CAVITY_MS_JOBS, then to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Relative ODE tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Points per sweep axis for `reproduce`.
    #[arg(long, global = true)]
    points: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the effective parameters and condition checks of a config.
    DeriveParams { config: PathBuf },
    /// Fidelities versus time.
    Evolve { config: PathBuf },
    /// Run the config's [scan] section.
    Scan { config: PathBuf },
    /// Regenerate one figure or table.
    Reproduce {
        #[arg(value_parser = parse_scenario)]
        target: Scenario,
    },
    /// Quick consistency checks.
    Selftest,
}

fn parse_scenario(s: &str) -> std::result::Result<Scenario, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Runs the CLI and returns the process exit code: 0 success, 1 usage or configuration
/// error, 2 numerical failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let jobs = cli.jobs.or_else(|| std::env::var("CAVITY_MS_JOBS").ok().and_then(|v| v.parse().ok()));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                1
            } else {
                2
            }
        }
    }
}

fn load(path: &Path, cli: &Cli) -> Result<Config> {
    let mut cfg = Config::load(path)?;
    if let Some(t) = cli.tol {
        cfg.run.rel_tol = t;
        cfg.run.validate()?;
    }
    Ok(cfg)
}

fn write_outputs(table: &ScanResult, stem: &str, plot: Option<(&str, Vec<&str>, bool)>, out: &Path) -> Result<()> {
    let csv = out.join(format!("{stem}.csv"));
    emit_csv(table, &csv)?;
    println!("wrote {}", csv.display());
    if let Some((x, ys, log_x)) = plot {
        let svg = out.join(format!("{stem}.svg"));
        emit_svg_lineplot(table, x, &ys, log_x, &svg)?;
        println!("wrote {}", svg.display());
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::DeriveParams { config } => {
            print!("{}", describe_params(&load(config, cli)?)?);
            Ok(())
        }
        Command::Evolve { config } => {
            let table = evolve(&load(config, cli)?)?;
            write_outputs(&table, "evolve", Some(("t", vec!["state_fidelity", "gate_fidelity"], false)), &cli.out)
        }
        Command::Scan { config } => {
            let cfg = load(config, cli)?;
            let table = scan(&cfg)?;
            let spec = cfg.scan.as_ref().expect("scan section checked by scan()");
            match spec.target {
                ScanTarget::Named(s) => write_outputs(&table, s.name(), s.plot(), &cli.out),
                ScanTarget::Custom { .. } => {
                    let x = table.columns[0].clone();
                    write_outputs(&table, "scan", Some((&x, vec!["max_fidelity"], false)), &cli.out)
                }
            }
        }
        Command::Reproduce { target } => {
            let mut opts = RunOptions::default();
            if let Some(p) = cli.points {
                opts.points = p;
            }
            if let Some(t) = cli.tol {
                opts.rel_tol = t;
            }
            let table = target.run(&opts)?;
            for line in table.provenance.iter().skip(3) {
                println!("{line}");
            }
            if *target == Scenario::Table1 {
                print!("{}", table.to_csv().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n"));
                println!();
            }
            write_outputs(&table, target.name(), target.plot(), &cli.out)
        }
        Command::Selftest => selftest(),
    }
}

type Check = (&'static str, fn() -> Result<bool>);

const CHECKS: [Check; 6] = [
    ("truth table at the gate time", check_truth_table),
    ("identity channel has unit fidelity", check_identity_channel),
    ("depolarizing channel has fidelity 1/4", check_depolarizing),
    ("photon partial trace of a product state", check_partial_trace),
    ("CSV round trip", check_csv),
    ("balanced config gives chi = 0", check_balanced_config),
];

fn selftest() -> Result<()> {
    let mut failed = 0;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (name, f) in CHECKS {
        let ok = f().unwrap_or(false);
        failed += usize::from(!ok);
        let _ = writeln!(out, "{} {name}", if ok { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        return Err(Error::SelfTest(failed));
    }
    Ok(())
}

fn check_truth_table() -> Result<bool> {
    let layout = HilbertLayout::qubits(2, 20)?;
    let traj = MsTrajectory::new(1.0, 2.0)?;
    let u = traj.u_ms(traj.gate_time()?, &layout)?;
    for i in 1..=4 {
        let out = u.apply(&Ket::product(&layout, &computational_state(i)?, 0)?);
        let rho = partial_trace_photon(&(out.vector() * out.vector().adjoint()), &layout);
        if state_fidelity(&rho, i, 1.0)? < 1.0 - 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_identity_channel() -> Result<bool> {
    let s = ChannelSample { t: 0.0, outputs: pauli_products() };
    Ok((avg_gate_fidelity(&s, &Matrix::identity(4, 4))? - 1.0).abs() < 1e-14)
}

fn check_depolarizing() -> Result<bool> {
    let id = Matrix::identity(4, 4);
    let s = ChannelSample { t: 0.0, outputs: pauli_products().iter().map(|p| &id * (p.trace() / 4.0)).collect() };
    Ok((avg_gate_fidelity(&s, &ideal_gate_map(1.0))? - 0.25).abs() < 1e-14)
}

fn check_partial_trace() -> Result<bool> {
    let layout = HilbertLayout::qubits(2, 3)?;
    let phi = computational_state(2)?;
    let psi = Ket::product(&layout, &phi, 2)?;
    let rho = partial_trace_photon(&(psi.vector() * psi.vector().adjoint()), &layout);
    Ok(max_abs_diff(&rho, &(&phi * phi.adjoint())) < 1e-12)
}

fn check_csv() -> Result<bool> {
    let mut t = ScanResult::new(&["a", "b"]);
    t.push(vec![1.0 / 7.0, -2.5e-12])?;
    let text = t.to_csv();
    Ok(parse_csv(&text)?.to_csv() == text)
}

fn check_balanced_config() -> Result<bool> {
    let cfg = Config::parse(
        "[system]\nmodel = raman\ng = 1\nomega1 = 0.5\nomega2 = 0.5\ndetuning1 = 50\ndetuning2 = 50\n\
         raman_detuning1 = 0.02\nraman_detuning2 = 0.02\n",
    )?;
    Ok(cfg.effective()?.chi == 0.0)
}
