use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kglab_cli::{config, execute, CliError, Experiment, DEFAULT_OUT_DIR, OUT_DIR_ENV};

/// Damped quintic Klein-Gordon experiments on flat tori.
///
/// Exit status: 0 success, 1 I/O, 2 configuration, 3 divergence,
/// 4 non-convergence, 5 failed post-run check.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-step the equation and record energies.
    Simulate(RunArgs),
    /// Damp to small energy, then control exactly to rest.
    Stabilize(RunArgs),
    /// Exact control of the linear equation by HUM.
    ControlLinear(RunArgs),
    /// Exact control of the nonlinear equation by Picard iteration.
    ControlNonlinear(RunArgs),
    /// Sampled geometric control check of the damping region.
    Gcc(RunArgs),
    /// Constant-data ODE showing the damping bound degenerates without mass.
    Counterexample(RunArgs),
    /// Track energy concentration of the initial data.
    Concentrate(RunArgs),
    /// Damping-to-energy ratios for the constant family and the initial data.
    Observability(RunArgs),
    /// Validate a config and print it with defaults filled in.
    Check {
        #[arg(long, short)]
        config: PathBuf,
    },
    /// Print the JSON schema of the config format.
    Schema,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory [default: kglab-out]
    #[arg(long, short, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (what, args) = match cli.command {
        Command::Simulate(a) => (Experiment::Simulate, a),
        Command::Stabilize(a) => (Experiment::Stabilize, a),
        Command::ControlLinear(a) => (Experiment::ControlLinear, a),
        Command::ControlNonlinear(a) => (Experiment::ControlNonlinear, a),
        Command::Gcc(a) => (Experiment::Gcc, a),
        Command::Counterexample(a) => (Experiment::Counterexample, a),
        Command::Concentrate(a) => (Experiment::Concentrate, a),
        Command::Observability(a) => (Experiment::Observability, a),
        Command::Check { config } => {
            let checked = std::fs::read_to_string(&config)
                .map_err(CliError::io(&config))
                .and_then(|text| config::parse_config(&text));
            return match checked {
                Ok(cfg) => {
                    println!("{}", cfg.to_json());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            };
        }
        Command::Schema => {
            println!("{}", config::schema());
            return ExitCode::SUCCESS;
        }
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("warning: thread cap not applied: {e}");
        }
    }
    let out = args.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    match execute(what, &args.config, &out) {
        Ok(m) => {
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", m.summary);
            match m.failure {
                Some(why) => fail(&CliError::Assertion(why)),
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}
