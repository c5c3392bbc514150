use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use monosplit::cli::{
    emit_csv, is_validation_error, parse_spec_with, run, write_csv, Overrides, ALGORITHMS, EXIT_FAILURE,
    EXIT_INVALID_SPEC,
};

#[derive(Parser)]
#[command(name = "monosplit", version, about = "Splitting solvers for monotone inclusions over subspaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more problem specs and write residual histories as CSV.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Problem spec files (TOML, schema_version = 1).
    #[arg(required = true)]
    specs: Vec<PathBuf>,

    /// Override the spec's algorithm.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(ALGORITHMS))]
    algorithm: Option<String>,

    /// Override the stopping tolerance [spec default: 1e-8].
    #[arg(long)]
    tol: Option<f64>,

    /// Override the iteration cap [spec default: 10000].
    #[arg(long)]
    max_iters: Option<usize>,

    /// CSV output. A file for a single spec (default: stdout); a directory
    /// for several (default: next to each spec, as <stem>.csv).
    #[arg(short, long)]
    output: Option<PathBuf>,

    /// Override the seed for random starting points [spec default: 0].
    #[arg(long)]
    seed: Option<u64>,

    /// Record every k-th iteration; the first and last are always kept
    /// [spec default: 1].
    #[arg(long)]
    log_every: Option<usize>,

    /// Number of specs run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

enum Target {
    Stdout,
    File(PathBuf),
}

fn target_for(spec: &Path, output: &Option<PathBuf>, many: bool) -> Target {
    let stem = spec.file_stem().map(|s| s.to_os_string()).unwrap_or_else(|| "run".into());
    let mut name = PathBuf::from(stem);
    name.set_extension("csv");
    match (output, many) {
        (None, false) => Target::Stdout,
        (Some(p), false) => Target::File(p.clone()),
        (Some(dir), true) => Target::File(dir.join(name)),
        (None, true) => Target::File(spec.with_file_name(name)),
    }
}

fn run_one(path: &Path, args: &RunArgs, overrides: &Overrides, many: bool) -> i32 {
    let label = path.display();
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{label}: {e}");
            return EXIT_FAILURE;
        }
    };
    let spec = match parse_spec_with(&text, overrides) {
        Ok(s) => s,
        Err(errors) => {
            for e in &errors.0 {
                eprintln!("{label}: {e}");
            }
            return EXIT_INVALID_SPEC;
        }
    };
    let record = match run(&spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{label}: {e}");
            return if is_validation_error(&e) { EXIT_INVALID_SPEC } else { EXIT_FAILURE };
        }
    };
    let written = match target_for(path, &args.output, many) {
        Target::Stdout => write_csv(&record, std::io::stdout().lock()).map_err(|e| format!("stdout: {e}")),
        Target::File(p) => emit_csv(&record, &p).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("{label}: {e}");
        return EXIT_FAILURE;
    }
    let s = &record.summary;
    let residual = s.final_residual.map_or("n/a".to_string(), |r| format!("{r:e}"));
    eprintln!(
        "{label}: {} {} after {} iterations, residual {residual}, {:.3?}",
        s.algorithm, s.status, s.iterations, s.wall_time
    );
    if let Some((name, value)) = s.certificate {
        eprintln!("{label}: {name} certificate {value:e}");
    }
    let x: Vec<String> = s.solution.iter().map(|v| format!("{v:e}")).collect();
    eprintln!("{label}: x = [{}]", x.join(", "));
    record.exit_code()
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let Command::Run(args) = cli.command;
    let overrides = Overrides {
        algorithm: args.algorithm.clone(),
        tol: args.tol,
        max_iters: args.max_iters,
        seed: args.seed,
        log_every: args.log_every,
    };
    let many = args.specs.len() > 1;
    if many {
        if let Some(dir) = &args.output {
            if let Err(e) = std::fs::create_dir_all(dir) {
                eprintln!("{}: {e}", dir.display());
                return ExitCode::from(EXIT_FAILURE as u8);
            }
        }
    }
    let codes: Vec<i32> = if args.jobs > 1 && many {
        let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build() {
            Ok(p) => p,
            Err(e) => {
                eprintln!("thread pool: {e}");
                return ExitCode::from(EXIT_FAILURE as u8);
            }
        };
        pool.install(|| {
            args.specs
                .par_iter()
                .map(|p| run_one(p, &args, &overrides, many))
                .collect()
        })
    } else {
        args.specs.iter().map(|p| run_one(p, &args, &overrides, many)).collect()
    };
    let worst = codes.into_iter().max().unwrap_or(0);
    ExitCode::from(worst as u8)
}
