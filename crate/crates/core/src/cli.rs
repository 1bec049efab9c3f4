//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage, input or file errors, 2 for
//! numerical failures (solver breakdown, non-convergence, incompatible data,
//! failed acceptance checks).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::mesh::{load_mesh, save_mesh, DiskInterfaceMesh, EdgeMarker, Mesh, DEFAULT_MESH_SEED};
use crate::scheme::{Scheme, TimeGrid};
use crate::spaces::FieldCoefficients;
use crate::verification::{
    convergence_study_with_threads, l2_error_flux, l2_error_scalar, projection_study, ConvergenceReport, StudyConfig,
};
use crate::vtk::{exact_fields, save_vtk, state_fields};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "interflow", version, about = "Mixed finite element solver for miscible displacement with interfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate, validate or convert meshes.
    Mesh(MeshArgs),
    /// Run one simulation from a configuration file.
    Run(RunArgs),
    /// Convergence sweeps over (tau, M) grids.
    Converge(ConvergeArgs),
    /// Convergence order of the projection operators.
    ProjectTest(ProjectArgs),
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    /// Generate a disk mesh with this many boundary nodes.
    #[arg(long, value_name = "M", conflicts_with = "validate")]
    pub generate: Option<usize>,
    /// Load and validate a mesh file.
    #[arg(long, value_name = "PATH")]
    pub validate: Option<PathBuf>,
    /// Output mesh file (with --generate).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Seed of the generator's interior point placement.
    #[arg(long, default_value_t = DEFAULT_MESH_SEED)]
    pub seed: u64,
    /// Also write the mesh as VTK.
    #[arg(long, value_name = "PATH")]
    pub vtk: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory; overrides output.dir.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Overrides mesh.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the level-0 pressure system in coordinate format.
    #[arg(long)]
    pub dump_matrix: bool,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    /// Built-in grid: table1 or table2.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub preset: Option<String>,
    /// Configuration file with study.mode and study.rows.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Rows run concurrently on this many threads.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Mesh generator seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![16usize, 32, 64])]
    pub meshes: Vec<usize>,
    /// Time at which the exact fields are projected.
    #[arg(long, default_value_t = 0.5)]
    pub time: f64,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = DEFAULT_MESH_SEED)]
    pub seed: u64,
}

/// Installs the logger; the level comes from `INTERFLOW_LOG`
/// (error, warn, info, debug), defaulting to warn.
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("INTERFLOW_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `args` (including the program name) and runs the command.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}

pub fn execute(command: &Command) -> Result<i32> {
    match command {
        Command::Mesh(a) => mesh_command(a),
        Command::Run(a) => run_command(a),
        Command::Converge(a) => converge_command(a),
        Command::ProjectTest(a) => project_command(a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn describe(mesh: &Mesh) -> String {
    let boundary = mesh.edges_with_marker(|m| m == EdgeMarker::Boundary).count();
    let interface = mesh.edges_with_marker(|m| matches!(m, EdgeMarker::Interface(_))).count();
    format!(
        "{} vertices, {} triangles, {} edges ({boundary} boundary, {interface} interface), h = {:.4}, min angle {:.2} deg",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.edges().len(),
        mesh.h(),
        mesh.min_angle_deg()
    )
}

fn mesh_command(a: &MeshArgs) -> Result<i32> {
    let mesh = match (a.generate, &a.validate) {
        (Some(m), None) => {
            let mesh = DiskInterfaceMesh::new(m).with_seed(a.seed).generate()?;
            if let Some(out) = &a.out {
                save_mesh(&mesh, out)?;
            }
            mesh
        }
        (None, Some(path)) => load_mesh(path)?,
        _ => return Err(Error::InvalidInput("give one of --generate <M> or --validate <PATH>".into())),
    };
    if let Some(path) = &a.vtk {
        save_vtk(path, &mesh, "interflow mesh", &[])?;
    }
    println!("{}", describe(&mesh));
    Ok(EXIT_OK)
}

fn write_coefficients(dir: &Path, name: &str, field: &FieldCoefficients) -> Result<()> {
    field.save_csv(dir.join(format!("{name}.csv")))
}

fn run_command(a: &RunArgs) -> Result<i32> {
    let mut cfg = RunConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let base = a.config.parent().map(Path::to_path_buf);
    let out = a.out.clone().unwrap_or_else(|| match &base {
        Some(b) if cfg.output_dir.is_relative() => b.join(&cfg.output_dir),
        _ => cfg.output_dir.clone(),
    });
    create_dir(&out)?;
    let mesh = Arc::new(cfg.mesh(base.as_deref())?);
    log::info!("mesh: {}", describe(&mesh));
    let (problem, exact) = cfg.problem(mesh.clone())?;
    let grid = TimeGrid::new(cfg.final_time, cfg.steps)?;
    let scheme = Scheme::new(problem, grid)?.with_tolerance(cfg.solver_tolerance);
    let spaces = &scheme.problem().spaces;

    if a.dump_matrix {
        let c0 = FieldCoefficients {
            values: vec![cfg.initial_concentration; spaces.scalar.ndofs()],
        };
        let p = scheme.problem();
        let system =
            crate::assembly::assemble_pressure_system(&p.spaces, &p.model, &c0, &p.sources, 0.0, &p.assembly)?;
        let path = out.join("pressure_system.coo");
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        system
            .global_matrix()
            .write_coordinate(&mut std::io::BufWriter::new(file))
            .map_err(|e| Error::io(&path, e))?;
    }

    let mut diagnostics = String::from("n,time,divergence_residual,pressure_mean,pressure_norm,pressure_solve_residual\n");
    let mut errors = String::from("n,time,err_U,err_C,err_W\n");
    let mut failure: Option<Error> = None;
    let every = cfg.output_every;
    let uniform = cfg.initial_concentration;
    let c0 = |l: usize, x: &crate::geometry::Point| match &exact {
        Some(e) => e.concentration(l, x, 0.0),
        None => {
            let _ = (l, x);
            uniform
        }
    };
    let result = scheme.run(&c0, None, |state, diag| {
        diagnostics.push_str(&format!(
            "{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}\n",
            state.n,
            state.time,
            diag.divergence_residual,
            diag.pressure_mean,
            diag.pressure_norm,
            diag.pressure_solve.residual
        ));
        if let Some(e) = &exact {
            let t = state.time;
            let eu = l2_error_flux(&spaces.flux, &state.velocity, &|l, x| e.velocity(l, x, t));
            let ec = l2_error_scalar(&spaces.scalar, &state.concentration, &|l, x| e.concentration(l, x, t));
            let ew = if state.n > 0 {
                l2_error_flux(&spaces.flux, &state.flux, &|l, x| e.flux(l, x, t))
            } else {
                Ok(f64::NAN)
            };
            match (eu, ec, ew) {
                (Ok(eu), Ok(ec), Ok(ew)) => {
                    errors.push_str(&format!("{},{:.6e},{:.6e},{:.6e},{:.6e}\n", state.n, t, eu, ec, ew))
                }
                (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => failure = Some(e),
            }
        }
        if every > 0 && state.n % every == 0 {
            let path = out.join(format!("state_{:05}.vtk", state.n));
            if let Err(e) = save_vtk(&path, &mesh, &format!("level {} t = {}", state.n, state.time), &state_fields(spaces, state)) {
                failure.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let state = &result.final_state;
    save_vtk(out.join("final.vtk"), &mesh, "final state", &state_fields(spaces, state))?;
    write_coefficients(&out, "pressure", &state.pressure)?;
    write_coefficients(&out, "velocity", &state.velocity)?;
    write_coefficients(&out, "concentration", &state.concentration)?;
    write_coefficients(&out, "flux", &state.flux)?;
    write_file(&out.join("diagnostics.csv"), &diagnostics)?;
    if let Some(e) = &exact {
        write_file(&out.join("errors.csv"), &errors)?;
        save_vtk(out.join("exact.vtk"), &mesh, "exact solution", &exact_fields(&mesh, e, state.time))?;
        if let Some(last) = errors.lines().last() {
            println!("final errors (n,time,err_U,err_C,err_W): {last}");
        }
    }
    println!("wrote {}", out.display());
    Ok(EXIT_OK)
}

fn write_report(out: &Path, report: &ConvergenceReport) -> Result<()> {
    create_dir(out)?;
    write_file(&out.join(format!("{}.csv", report.name)), &report.to_csv())?;
    write_file(&out.join(format!("{}.txt", report.name)), &report.render_table())
}

fn converge_command(a: &ConvergeArgs) -> Result<i32> {
    let mut study = match (&a.preset, &a.config) {
        (Some(p), _) => StudyConfig::preset(p)?,
        (None, Some(path)) => {
            let cfg = RunConfig::load(path)?;
            let mut s = cfg
                .study()
                .ok_or_else(|| Error::InvalidInput(format!("{} has no study.rows", path.display())))?;
            s.name = path.file_stem().map_or("study".into(), |s| s.to_string_lossy().into_owned());
            s
        }
        (None, None) => return Err(Error::InvalidInput("give --preset or --config".into())),
    };
    if let Some(seed) = a.seed {
        study.seed = seed;
    }
    let report = convergence_study_with_threads(&study, a.threads)?;
    write_report(&a.out, &report)?;
    print!("{}", report.render_table());
    for r in report.rates() {
        println!(
            "rate rows {}->{}: U {:.2}, C {:.2}",
            r.coarse + 1,
            r.fine + 1,
            r.u,
            r.c
        );
    }
    Ok(EXIT_OK)
}

fn project_command(a: &ProjectArgs) -> Result<i32> {
    if a.meshes.len() < 2 {
        return Err(Error::InvalidInput("need at least two meshes for a slope".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.threads.max(1))
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let report = pool.install(|| projection_study(&a.meshes, 1, a.time, a.seed))?;
    print!("{}", report.to_csv());
    if let Some(out) = &a.out {
        create_dir(out)?;
        write_file(&out.join("projection.csv"), &report.to_csv())?;
    }
    let names = ["L2 projection C", "Fortin W", "Ritz C", "Ritz W"];
    let mut ok = true;
    for (name, slope) in names.iter().zip(report.slopes()) {
        let pass = (slope - 2.0).abs() <= 0.3;
        ok &= pass;
        println!("{} slope {name}: {slope:.3}", if pass { "PASS" } else { "FAIL" });
    }
    Ok(if ok { EXIT_OK } else { EXIT_NUMERICAL })
}
