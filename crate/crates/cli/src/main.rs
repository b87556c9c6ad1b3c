use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use pff_core::evolution::{energy_inequality_report, prepare_initial_state, run_evolution};
use pff_core::io::config::Side;
use pff_core::io::{self, audit_dir, RunConfig};
use pff_core::mesh::{build_structured_mesh, EdgeMarker};
use pff_core::oracle;
use pff_core::viscosity::delta_sweep;
use pff_core::Error;

const EXIT_VIOLATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "pff", version, about = "Quasi-static phase-field fracture driver")]
struct Cli {
    /// Output directory (falls back to PFF_OUTPUT_DIR, then the config's [output] dir).
    #[arg(short, long, global = true, env = "PFF_OUTPUT_DIR")]
    output: Option<PathBuf>,
    /// Seed for randomized oracle probes. Runs are deterministic regardless.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one trajectory and write trace, state dumps and VTK snapshots.
    Run { config: PathBuf },
    /// Run the configured viscosity sweep.
    Sweep { config: PathBuf },
    /// Re-audit a run directory written by `run`.
    Check { dir: PathBuf },
    /// Write a structured rectangle mesh.
    MeshGen(MeshArgs),
    /// Run the oracle suite and print verdicts as CSV.
    Oracle,
}

#[derive(Args, Debug)]
struct MeshArgs {
    #[arg(long, default_value_t = 16)]
    nx: usize,
    #[arg(long, default_value_t = 16)]
    ny: usize,
    #[arg(long, default_value_t = 1.0)]
    width: f64,
    #[arg(long, default_value_t = 1.0)]
    height: f64,
    /// Dirichlet sides (bottom, top, left, right).
    #[arg(long, value_delimiter = ',', default_value = "bottom,top")]
    dirichlet: Vec<String>,
    /// Output file; defaults to mesh.txt in the output directory.
    path: Option<PathBuf>,
}

enum Failure {
    Violation(Vec<String>),
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::NonConvergence { .. } | Error::StaggeredNonConvergence { .. } | Error::Linear(_) => {
            EXIT_NONCONVERGENCE
        }
        _ => EXIT_CONFIG,
    }
}

fn output_dir(cli: &Cli, cfg: Option<&RunConfig>) -> PathBuf {
    cli.output
        .clone()
        .or_else(|| cfg.map(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("pff-out"))
}

fn report(cli: &Cli, msg: impl AsRef<str>) {
    if !cli.quiet {
        println!("{}", msg.as_ref());
    }
}

fn cmd_run(cli: &Cli, path: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::load(path)?;
    let setup = cfg.setup()?;
    let out = output_dir(cli, Some(&cfg));
    info!("running {} steps into {}", cfg.time.steps, out.display());
    let initial = prepare_initial_state(&setup.model, &setup.evolution, &setup.z_seed)?;
    let traj = run_evolution(&setup.model, &setup.evolution, initial)?;
    io::write_run(&out, &cfg, &setup.model.mesh, &traj, cfg.output.vtk_every)?;
    let ineq = energy_inequality_report(&traj);
    let last = traj.records.last().expect("initial record");
    report(
        cli,
        format!(
            "steps {}  F(T) {:.6e}  arc length {:.6e}  C_R {:.3e}  output {}",
            traj.records.len() - 1,
            last.energy.total,
            traj.total_arc_length(),
            ineq.c_r,
            out.display()
        ),
    );
    audit(cli, &out)
}

fn audit(cli: &Cli, dir: &Path) -> Result<(), Failure> {
    let rep = audit_dir(dir)?;
    report(
        cli,
        format!(
            "audit: {} steps, max equilibrium residual {:.3e}, max identity error {:.3e}, C_R {:.3e}, min z {:.6}",
            rep.steps, rep.max_equilibrium_residual, rep.max_identity_err, rep.c_r, rep.min_phase
        ),
    );
    if rep.ok() {
        Ok(())
    } else {
        Err(Failure::Violation(rep.violations.iter().map(|v| v.to_string()).collect()))
    }
}

fn cmd_sweep(cli: &Cli, path: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::load(path)?;
    let setup = cfg.setup()?;
    let opts = cfg.sweep_options();
    opts.validate(&setup.evolution)?;
    let out = output_dir(cli, Some(&cfg));
    let initial = prepare_initial_state(&setup.model, &setup.evolution, &setup.z_seed)?;
    let rep = delta_sweep(&setup.model, &setup.evolution, &opts, initial)?;
    io::write_sweep_outputs(&out, &rep)?;
    for r in &rep.rows {
        report(
            cli,
            format!(
                "delta {:.4e}  steps {}  S {:.6e}  max advancing slope {:.3e}  distance to next {}",
                r.delta,
                r.steps,
                r.arc_length,
                r.max_advancing_slope,
                r.pairwise_distance_to_next.map_or("-".into(), |d| format!("{d:.3e}"))
            ),
        );
    }
    report(cli, format!("arc-length growth factor {:.4}", rep.c_growth));
    let bad: Vec<String> = rep
        .curves
        .iter()
        .filter(|c| !c.knots_strictly_increasing() || !c.constant_extension_exact())
        .map(|c| format!("delta {}: reparametrization invariants violated", c.delta))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(bad))
    }
}

fn cmd_mesh_gen(cli: &Cli, args: &MeshArgs) -> Result<(), Failure> {
    let sides = args
        .dirichlet
        .iter()
        .map(|s| match s.trim() {
            "bottom" => Ok(Side::Bottom),
            "top" => Ok(Side::Top),
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(Error::Config(format!("unknown side `{other}`"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (w, h) = (args.width, args.height);
    let eps = 1e-9 * w.max(h);
    let mesh = build_structured_mesh(args.nx, args.ny, w, h, |x, y| {
        let on = sides.iter().any(|s| match s {
            Side::Bottom => y.abs() <= eps,
            Side::Top => (y - h).abs() <= eps,
            Side::Left => x.abs() <= eps,
            Side::Right => (x - w).abs() <= eps,
        });
        if on {
            EdgeMarker::Dirichlet
        } else {
            EdgeMarker::Free
        }
    })
    .map_err(|e| Error::Config(e.to_string()))?;
    let path = match &args.path {
        Some(p) => p.clone(),
        None => {
            let dir = output_dir(cli, None);
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            dir.join(io::MESH_FILE)
        }
    };
    mesh.write(&path)?;
    report(
        cli,
        format!("{} nodes, {} triangles -> {}", mesh.num_nodes(), mesh.num_triangles(), path.display()),
    );
    Ok(())
}

fn cmd_oracle(cli: &Cli) -> Result<(), Failure> {
    let verdicts = oracle::run_suite(cli.seed)?;
    let csv = oracle::verdicts_to_csv(&verdicts);
    if let Some(dir) = &cli.output {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let p = dir.join("oracle.csv");
        std::fs::write(&p, &csv).map_err(|e| Error::io(&p, e))?;
    }
    print!("{csv}");
    let failed: Vec<String> = verdicts
        .iter()
        .filter(|v| !v.pass)
        .map(|v| format!("oracle {} failed: err {:.3e} > {:.1e}", v.name, v.err, v.tol))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(failed))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet { "error" } else { "warn" }))
        .init();
    let result = match &cli.command {
        Command::Run { config } => cmd_run(&cli, config),
        Command::Sweep { config } => cmd_sweep(&cli, config),
        Command::Check { dir } => audit(&cli, dir),
        Command::MeshGen(args) => cmd_mesh_gen(&cli, args),
        Command::Oracle => cmd_oracle(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(list)) => {
            for v in &list {
                eprintln!("violation: {v}");
            }
            ExitCode::from(EXIT_VIOLATION)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
