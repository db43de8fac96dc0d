use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nctvem::mesh::{self, PolygonMesh, Subdomain};
use nctvem::study::{self, StudyConfig, StudyResult};

#[derive(Parser)]
#[command(name = "nctvem", version, about = "Nonconforming Trefftz VEM convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single solve on the first mesh; writes the table row and optional raster.
    Solve(StudyArgs),
    /// h-version: one run per mesh of the refinement list.
    StudyH(StudyArgs),
    /// p-version: one run per degree triple on the first mesh.
    StudyP(StudyArgs),
    /// hp-version on graded meshes.
    StudyHp(StudyArgs),
    /// Generate or validate mesh files.
    #[command(subcommand)]
    Mesh(MeshCommand),
}

#[derive(Args)]
struct StudyArgs {
    /// TOML study config.
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Cartesian,
    GradedIso,
    GradedAniso,
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Write a generated mesh in the text mesh format.
    Gen {
        #[arg(value_enum)]
        family: Family,
        /// Elements per side (cartesian) or refinement level (graded).
        n: usize,
        #[arg(long, default_value_t = 1.0 / 3.0)]
        sigma: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Validate a mesh file and print its statistics.
    Check { file: PathBuf },
}

fn load(args: &StudyArgs) -> Result<StudyConfig, String> {
    let mut cfg = StudyConfig::load(&args.config).map_err(|e| e.to_string())?;
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.clone();
    }
    Ok(cfg)
}

fn finish(cfg: &StudyConfig, result: &StudyResult) -> Result<(), String> {
    let path = study::write_outputs(cfg, result).map_err(|e| e.to_string())?;
    for r in &result.rows {
        println!(
            "{:>3} {:<16} dofs {:>7} h1 {:.3e} l2 {:.3e}",
            r.run_id, r.mesh, r.dofs_filtered, r.err_h1_rel, r.err_l2_rel
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn describe(m: &PolygonMesh) {
    let max_layer = m.layers().iter().max().copied().unwrap_or(0);
    let mut counts = vec![0usize; max_layer + 1];
    for &l in m.layers() {
        counts[l] += 1;
    }
    println!("elements {}", m.num_elements());
    println!("edges {}", m.num_edges());
    println!("vertices {}", m.vertices().len());
    println!(
        "subdomains omega1 {} omega2 {} cut {}",
        m.count_subdomain(Subdomain::Omega1),
        m.count_subdomain(Subdomain::Omega2),
        m.count_subdomain(Subdomain::Cut)
    );
    println!("interface conforming {}", m.is_interface_conforming());
    println!("h {:e}", m.h());
    println!("layers {counts:?}");
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Solve(a) => {
            let cfg = load(&a)?;
            let (out, result) = study::run_single(&cfg).map_err(|e| e.to_string())?;
            finish(&cfg, &result)?;
            if let Some(p) = study::write_raster(&cfg, &out).map_err(|e| e.to_string())? {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::StudyH(a) => {
            let cfg = load(&a)?;
            finish(&cfg, &study::run_h_study(&cfg).map_err(|e| e.to_string())?)
        }
        Command::StudyP(a) => {
            let cfg = load(&a)?;
            finish(&cfg, &study::run_p_study(&cfg).map_err(|e| e.to_string())?)
        }
        Command::StudyHp(a) => {
            let cfg = load(&a)?;
            finish(&cfg, &study::run_hp_study(&cfg).map_err(|e| e.to_string())?)
        }
        Command::Mesh(MeshCommand::Gen { family, n, sigma, output }) => {
            let m = match family {
                Family::Cartesian => mesh::generate_cartesian(n),
                Family::GradedIso => mesh::generate_graded_iso(n, sigma),
                Family::GradedAniso => mesh::generate_graded_aniso(n, sigma),
            }
            .map_err(|e| e.to_string())?;
            mesh::save_mesh(&m, &output).map_err(|e| format!("{}: {e}", output.display()))?;
            describe(&m);
            Ok(())
        }
        Command::Mesh(MeshCommand::Check { file }) => {
            let m = mesh::load_mesh(&file).map_err(|e| format!("{}: {e}", file.display()))?;
            describe(&m);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
