use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gtt_cli::{run, write_outputs, CliError, ExperimentConfig, ExperimentKind, RunOptions};

#[derive(Parser)]
#[command(name = "gtt", version, about = "Run target-tracking Q-learning experiments from TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write `<name>.csv` and `<name>.manifest`.
    Run(RunArgs),
    /// Run a stability certificate; exits with status 1 unless every
    /// (learner, beta) pair is certified.
    Certify(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Replace the configured seed list with this single seed.
    #[arg(long)]
    seed_override: Option<u64>,
}

fn execute(args: &RunArgs, certify: bool) -> Result<bool, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed_override {
        cfg.seeds = vec![seed];
    }
    if certify && cfg.experiment != ExperimentKind::StabilityCertificate {
        return Err(CliError::Config(format!(
            "certify needs a stability_certificate config, got {}",
            cfg.experiment
        )));
    }
    let name = cfg.name.clone().unwrap_or_else(|| {
        args.config
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "experiment".into())
    });
    let opts = RunOptions {
        workers: args.workers,
        out_dir: args.out.clone(),
        base_dir: args.config.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let output = run(&cfg, &name, &opts)?;
    let (csv, _) = write_outputs(&cfg, &name, &args.config, &opts, &output)?;

    if let Some(certified) = output.certified {
        for rec in &output.records {
            let seed_verdicts = rec.metric("certified").map(|r| (r.seed, r.value == 1.0));
            for (seed, ok) in seed_verdicts {
                println!(
                    "{} beta={} seed={seed}: {}",
                    rec.algorithm,
                    rec.beta.unwrap_or(f64::NAN),
                    if ok { "certified" } else { "not certified" }
                );
            }
        }
        println!("wrote {}", csv.display());
        return Ok(certified || !certify);
    }
    println!("wrote {} ({:.1}s)", csv.display(), output.elapsed_secs);
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, certify) = match &cli.command {
        Command::Run(a) => (a, false),
        Command::Certify(a) => (a, true),
    };
    match execute(args, certify) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
