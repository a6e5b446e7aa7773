use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use projfe::norms::tables_to_csv;
use projfe::study::{run_study, ManifoldKind, StudyConfig, StudyKind};
use projfe::Error;

/// Convergence studies for projection-based and geodesic finite elements
/// with values in the sphere or SO(3).
#[derive(Parser, Debug)]
#[command(name = "projfe", version)]
struct Cli {
    /// Read settings from a `key = value` file; command line flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Interpolation errors of the nodal interpolant of a test map.
    Interp(StudyArgs),
    /// Discretisation errors of discrete harmonic maps.
    Harmonic(StudyArgs),
}

#[derive(Args, Debug, Default)]
struct StudyArgs {
    /// sphere | so3
    #[arg(long)]
    manifold: Option<String>,
    /// projection | geodesic
    #[arg(long)]
    scheme: Option<String>,
    /// Comma separated polynomial orders, e.g. 1,2,3.
    #[arg(long)]
    orders: Option<String>,
    /// Finest refinement level (at most 6).
    #[arg(long)]
    levels: Option<usize>,
    /// Quadrature degree for energies and errors (errors use at least 2r+2).
    #[arg(long)]
    quad_degree: Option<usize>,
    /// CSV output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    verbose: bool,
}

fn build_config(cli: Cli) -> Result<StudyConfig, Error> {
    let (kind, args) = match cli.command {
        Some(Command::Interp(a)) => (Some(StudyKind::Interpolation), a),
        Some(Command::Harmonic(a)) => (Some(StudyKind::Harmonic), a),
        None => (None, StudyArgs::default()),
    };
    let mut cfg = match (&cli.config, kind) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
            StudyConfig::from_kv_text(&text)?
        }
        (None, Some(kind)) => StudyConfig::new(kind, ManifoldKind::Sphere),
        (None, None) => return Err(Error::InvalidConfig("expected a subcommand or --config".into())),
    };
    if let Some(kind) = kind {
        cfg.study = kind;
    }
    if let Some(m) = &args.manifold {
        cfg.set("manifold", m)?;
    }
    if let Some(s) = &args.scheme {
        cfg.set("scheme", s)?;
    }
    if let Some(o) = &args.orders {
        cfg.set("orders", o)?;
    }
    if let Some(l) = args.levels {
        cfg.max_level = Some(l);
    }
    if let Some(q) = args.quad_degree {
        cfg.quad_degree = q;
    }
    if args.out.is_some() {
        cfg.out = args.out;
    }
    cfg.verbose |= args.verbose;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let cfg = match build_config(cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("run `projfe --help` for usage");
            return ExitCode::from(1);
        }
    };
    let outcome = match run_study(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("study failed: {e}");
            return ExitCode::from(2);
        }
    };
    for f in &outcome.failures {
        eprintln!("warning: order {} level {}: {}", f.order, f.level, f.reason);
    }
    for s in outcome.solves.iter().filter(|s| !s.converged) {
        eprintln!(
            "warning: solve for order {} level {} did not converge ({} iterations)",
            s.order, s.level, s.iterations
        );
    }
    let csv = tables_to_csv(&outcome.tables);
    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, csv) {
                eprintln!("study failed: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{csv}"),
    }
    if outcome.has_results() {
        ExitCode::SUCCESS
    } else {
        eprintln!("study failed: no level produced results");
        ExitCode::from(2)
    }
}
