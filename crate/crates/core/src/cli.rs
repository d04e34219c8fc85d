//! Command-line front end.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::adapt::{adaptive_loop_with, uniform_loop_with, AdaptConfig, StopReason};
use crate::error::{Error, Result};
use crate::mesh::{read_mesh_file, write_mesh, PolyMesh};
use crate::meshgen::{lshape_polygonal, lshape_trapezoidal, lshape_triangular, regular_polygon};
use crate::output::{csv_header, csv_row, render_svg, write_iteration_csv};
use crate::problem::{LShape, LinearPatch, Problem};
use crate::refine::{RefineConfig, Strategy};

/// Lloyd steps for generated Voronoi meshes.
pub const LLOYD_ITERS: usize = 20;

#[derive(Parser, Debug)]
#[command(name = "polyrefine", version, about = "Adaptive refinement of polygonal meshes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a generated mesh.
    Generate {
        #[command(flatten)]
        mesh: MeshArgs,
        /// Output file; standard output when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run the adaptive loop and report one CSV row per iteration.
    Adapt {
        #[command(flatten)]
        mesh: MeshArgs,
        #[command(flatten)]
        refine: RefineArgs,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        /// Stop once the number of dofs reaches this value.
        #[arg(long)]
        max_dofs: Option<usize>,
        /// Triangle longest-edge bisection with conformity recovery.
        #[arg(long)]
        fvem: bool,
        #[arg(long, value_enum, default_value_t = ProblemKind::Lshape)]
        problem: ProblemKind,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Refine every cell in each iteration.
    Uniform {
        #[command(flatten)]
        mesh: MeshArgs,
        #[command(flatten)]
        refine: RefineArgs,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Print the quality statistics of a mesh as one CSV row.
    Quality {
        #[command(flatten)]
        mesh: MeshArgs,
    },
}

#[derive(Args, Debug)]
pub struct MeshArgs {
    /// Mesh file, or gen:tri:N, gen:trap:N, gen:poly:NSEEDS, gen:ngon:N.
    #[arg(long)]
    pub mesh: String,
    /// Random seed for generated Voronoi meshes.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct RefineArgs {
    #[arg(long, value_enum, default_value_t = StrategyArg::Mm)]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 1.5)]
    pub c_rho: f64,
}

#[derive(Args, Debug)]
pub struct OutArgs {
    /// Directory for history.csv and SVG snapshots; CSV goes to standard
    /// output when omitted.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Write an SVG every this many iterations (0 = never).
    #[arg(long, default_value_t = 0)]
    pub svg_every: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StrategyArg {
    Mm,
    Ld,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ProblemKind {
    Lshape,
    /// u = 2x - 3y + 1.
    Patch,
}

impl RefineArgs {
    fn config(&self) -> Result<RefineConfig> {
        let strategy = match self.strategy {
            StrategyArg::Mm => Strategy::MaximumMoment,
            StrategyArg::Ld => Strategy::LongestDiagonal,
        };
        RefineConfig::new(strategy, self.c_rho)
    }
}

/// Builds the mesh named by a gen-spec or reads it from a file.
pub fn load_mesh(spec: &str, seed: u64) -> Result<PolyMesh> {
    let Some(rest) = spec.strip_prefix("gen:") else {
        return read_mesh_file(Path::new(spec));
    };
    let (kind, n) = rest
        .split_once(':')
        .ok_or_else(|| Error::InvalidConfig(format!("malformed mesh spec {spec:?}")))?;
    let n: usize = n
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("malformed size in mesh spec {spec:?}")))?;
    match kind {
        "tri" => lshape_triangular(n),
        "trap" => lshape_trapezoidal(n),
        "poly" => lshape_polygonal(n, seed, LLOYD_ITERS),
        "ngon" => regular_polygon(n, 1.0),
        _ => Err(Error::InvalidConfig(format!("unknown mesh kind {kind:?}"))),
    }
}

fn svg_due(every: usize, iter: usize) -> bool {
    every > 0 && iter % every == 0
}

fn write_svg(dir: &Path, iter: usize, mesh: &PolyMesh, scalar: Option<&[f64]>) -> Result<()> {
    fs::write(dir.join(format!("mesh_{iter:04}.svg")), render_svg(mesh, scalar))?;
    Ok(())
}

fn prepare(out: &OutArgs) -> Result<()> {
    if let Some(dir) = &out.out_dir {
        fs::create_dir_all(dir)?;
    } else if out.svg_every > 0 {
        return Err(Error::InvalidConfig("--svg-every needs --out-dir".into()));
    }
    Ok(())
}

fn emit_csv(out: &OutArgs, records: &[crate::adapt::IterationRecord]) -> Result<()> {
    match &out.out_dir {
        Some(dir) => write_iteration_csv(io::BufWriter::new(fs::File::create(dir.join("history.csv"))?), records),
        None => write_iteration_csv(io::stdout().lock(), records),
    }
}

fn stop_message(stop: StopReason) -> &'static str {
    match stop {
        StopReason::Converged => "stopping ratio reached tol",
        StopReason::MaxIter => "stopped at max-iter",
        StopReason::MaxDofs => "stopped at max-dofs",
    }
}

fn run_command(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate { mesh, output } => {
            let m = load_mesh(&mesh.mesh, mesh.seed)?;
            match output {
                Some(path) => write_mesh(&m, io::BufWriter::new(fs::File::create(path)?)),
                None => write_mesh(&m, io::stdout().lock()),
            }
        }
        Command::Adapt {
            mesh,
            refine,
            theta,
            tol,
            max_iter,
            max_dofs,
            fvem,
            problem,
            out,
        } => {
            prepare(&out)?;
            let mut m = load_mesh(&mesh.mesh, mesh.seed)?;
            let config = AdaptConfig {
                theta,
                tol,
                max_iter,
                refine: refine.config()?,
                fvem,
                max_dofs,
            };
            let patch = LinearPatch { a: 2.0, b: -3.0, c: 1.0 };
            let problem: &dyn Problem = match problem {
                ProblemKind::Lshape => &LShape,
                ProblemKind::Patch => &patch,
            };
            let run = adaptive_loop_with(&mut m, problem, &config, |mesh, record, report| {
                if let Some(dir) = out.out_dir.as_deref().filter(|_| svg_due(out.svg_every, record.iter)) {
                    let mut eta = vec![0.0; mesh.n_cell_records()];
                    for e in &report.elements {
                        eta[e.cell.index()] = e.eta_sq;
                    }
                    write_svg(dir, record.iter, mesh, Some(&eta))?;
                }
                Ok(())
            })?;
            emit_csv(&out, &run.records)?;
            eprintln!("{} after {} iterations", stop_message(run.stop), run.records.len());
            Ok(())
        }
        Command::Uniform {
            mesh,
            refine,
            max_iter,
            out,
        } => {
            prepare(&out)?;
            let mut m = load_mesh(&mesh.mesh, mesh.seed)?;
            let (records, _) = uniform_loop_with(&mut m, refine.config()?, max_iter, |mesh, record| {
                if let Some(dir) = out.out_dir.as_deref().filter(|_| svg_due(out.svg_every, record.iter)) {
                    write_svg(dir, record.iter, mesh, None)?;
                }
                Ok(())
            })?;
            emit_csv(&out, &records)
        }
        Command::Quality { mesh } => {
            let m = load_mesh(&mesh.mesh, mesh.seed)?;
            let record = crate::adapt::IterationRecord::of_mesh(0, &m)?;
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{}", csv_header())?;
            writeln!(stdout, "{}", csv_row(&record))?;
            Ok(())
        }
    }
}

/// Parses `args` and runs the command. Returns the process exit code: 2 for
/// argument errors, 1 for runtime errors, 0 otherwise.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_command(cli.command) {
        Ok(()) => 0,
        Err(e @ Error::InvalidConfig(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
