use abmesh::forward::data::write_vector_csv;
use abmesh::mesh::{write_mesh, write_vtk, VtkField};
use abmesh::pipeline::{
    compare_anisotropy, prepare_problem, read_report, run_outer_loop, write_comparison_csv,
    write_field_csv, write_reports, write_tables, ExperimentConfig, RunFailure,
};
use abmesh::Error;
use clap::{Args, Parser, Subcommand};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Adaptive anisotropic meshing for Bayesian inversion.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the truth field on the fine mesh.
    Phantom(Common),
    /// Synthesize noiseless and noisy data.
    Forward(Common),
    /// Run the outer adaptive loop.
    Run(Common),
    /// Run with the configured anisotropy and with alpha = 1.
    Compare(Common),
    /// Re-emit the tables from a stored report.json.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a preset configuration as TOML.
    Preset { name: String },
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in experiment: tomography, tomography-fine or darcy.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut c = match (&self.config, &self.preset) {
            (Some(path), _) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                ExperimentConfig::from_toml(&text)?
            }
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) => return Err(Error::Config("give --config or --preset".into())),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(a) = self.alpha {
            c.mesh.alpha = a;
        }
        c.validate()?;
        fs::create_dir_all(&self.out)?;
        fs::write(self.out.join("config.toml"), c.to_toml()?)?;
        Ok(c)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_config() {
        ExitCode::from(2)
    } else if e.is_numerical() {
        ExitCode::from(3)
    } else {
        ExitCode::FAILURE
    }
}

fn failure(f: RunFailure) -> Error {
    log::error!("{} iterations completed before the failure", f.partial.len());
    f.error
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Phantom(args) => {
            let c = args.load()?;
            let p = prepare_problem(&c)?;
            write_mesh(&p.truth_mesh, create(&args.out, "truth_mesh.txt")?)?;
            write_field_csv(&mut create(&args.out, "truth.csv")?, &p.truth_mesh, &p.truth)?;
            write_vtk(
                &p.truth_mesh,
                &[VtkField::PointScalar("truth", &p.truth)],
                create(&args.out, "truth.vtk")?,
            )?;
            println!("{} vertices, {} triangles", p.truth_mesh.n_vertices(), p.truth_mesh.n_triangles());
        }
        Command::Forward(args) => {
            let c = args.load()?;
            let p = prepare_problem(&c)?;
            write_vector_csv(&mut create(&args.out, "data_clean.csv")?, "b_clean", &p.data.clean)?;
            write_vector_csv(&mut create(&args.out, "data.csv")?, "b", &p.data.noisy)?;
            println!("{} data, sigma = {:.6e}", p.data.noisy.len(), p.data.sigma);
        }
        Command::Run(args) => {
            let c = args.load()?;
            let out = run_outer_loop(&c).map_err(failure)?;
            write_reports(&out, &args.out)?;
            for r in &out.report.iterations {
                println!(
                    "iteration {}: {} triangles, {} IAS updates, relative error {:.4}",
                    r.iteration,
                    r.n_triangles,
                    r.cgls.len(),
                    r.relative_error
                );
            }
            if let Some(why) = &out.report.stopped_early {
                println!("stopped early: {why}");
            }
        }
        Command::Compare(args) => {
            let c = args.load()?;
            let cmp = compare_anisotropy(&c).map_err(failure)?;
            write_reports(&cmp.anisotropic, &args.out.join("anisotropic"))?;
            write_reports(&cmp.isotropic, &args.out.join("isotropic"))?;
            let rows = cmp.rows();
            write_comparison_csv(&mut create(&args.out, "comparison.csv")?, &rows)?;
            write_comparison_csv(&mut std::io::stdout().lock(), &rows)?;
        }
        Command::Report { out } => {
            let report = read_report(&out)?;
            for f in write_tables(&report, &out)? {
                println!("{}", f.display());
            }
        }
        Command::Preset { name } => {
            print!("{}", ExperimentConfig::preset(&name)?.to_toml()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
