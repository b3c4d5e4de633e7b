use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dvbkit_cli::{build, roundtrip, verify, BuildOptions, InputError, RunOptions, RunReport};

#[derive(Parser)]
#[command(name = "dvbkit", version, about = "Exact checks for double vector bundles, 2-representations and [2]-manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed for sampled witnesses and random data.
    #[arg(long, env = "DVBKIT_SEED", default_value_t = 42)]
    seed: u64,
    /// Sample points used to locate witnesses of failed checks.
    #[arg(long, default_value_t = 25)]
    samples: usize,
    /// Largest total degree accepted by graded brackets.
    #[arg(long = "degree-cap", default_value_t = 4)]
    degree_cap: u32,
    /// Also write the structured JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one verification suite on an instance file.
    Verify {
        file: PathBuf,
        #[arg(long)]
        suite: Option<String>,
        /// Break one axiom before checking.
        #[arg(long)]
        mutate: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Emit an instance produced by a constructor.
    Build {
        constructor: String,
        /// Input instance for constructors that transform one.
        file: Option<PathBuf>,
        /// Instance kind for `random`.
        #[arg(long)]
        kind: Option<String>,
        /// Algebroid family for `random` and `adjoint-rep`.
        #[arg(long, default_value = "affine")]
        algebroid: String,
        #[arg(long, env = "DVBKIT_SEED", default_value_t = 42)]
        seed: u64,
        /// Write the instance here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check serializer and functor round trips on an instance file.
    Roundtrip {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn read(path: &PathBuf) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))
}

fn finish(report: RunReport, path: Option<&PathBuf>) -> Result<ExitCode, InputError> {
    print!("{}", report.to_text());
    if let Some(p) = path {
        std::fs::write(p, report.to_json()).map_err(|e| InputError(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn options(common: &Common, suite: Option<String>, mutate: Option<String>) -> RunOptions {
    RunOptions { suite, seed: common.seed, samples: common.samples, degree_cap: common.degree_cap, mutate }
}

fn run(cli: Cli) -> Result<ExitCode, InputError> {
    match cli.command {
        Command::Verify { file, suite, mutate, common } => {
            let report = verify(&read(&file)?, &options(&common, suite, mutate))?;
            finish(report, common.report.as_ref())
        }
        Command::Roundtrip { file, common } => {
            let report = roundtrip(&read(&file)?, &options(&common, None, None))?;
            finish(report, common.report.as_ref())
        }
        Command::Build { constructor, file, kind, algebroid, seed, out } => {
            let input = file.as_ref().map(read).transpose()?;
            let text = build(&BuildOptions { constructor, input, kind, algebroid, seed })?;
            match out {
                Some(p) => std::fs::write(&p, text).map_err(|e| InputError(format!("cannot write {}: {e}", p.display())))?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
