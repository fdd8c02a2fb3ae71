use clap::{Parser, Subcommand};
use hybridyn::dynamics::Candidate;
use hybridyn::hybrid::fmt_real;
use hybridyn::scenario::{self, ScenarioConfig};
use hybridyn::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hybridyn", version, about = "Hybrid quantum-classical measurement dynamics")]
struct Cli {
    /// Scenario file (TOML). Defaults to the reference measurement.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the initial product state and write diagnostics.csv.
    Run,
    /// Branch and midpoint trajectories with block amplitudes (branches.csv).
    Characteristics,
    /// Check whether a candidate solves the dynamics (verdict.csv).
    Validate {
        /// 7 (pure), 9 (decohered) or 10 (midpoint).
        #[arg(long)]
        candidate: u32,
        /// Evaluation time; defaults to the end of the run.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Check the commutator factorization identity on random operators.
    IdentityCheck {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the diagnostics of a snapshot file.
    Diagnose { snapshot: PathBuf },
}

enum Failure {
    Error(Error),
    Check(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let config = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    let out = cli.out.clone().unwrap_or_else(|| config.output.dir.clone());
    let scenario = || -> Result<scenario::Scenario, Failure> {
        let s = config.validate()?;
        for w in &s.warnings {
            eprintln!("warning: {w}");
        }
        Ok(s)
    };
    match cli.command {
        Command::Run => {
            let s = scenario()?;
            let rows = scenario::cmd_run(&s, &out)?;
            println!("wrote {} rows to {}", rows.len(), out.join("diagnostics.csv").display());
        }
        Command::Characteristics => {
            let s = scenario()?;
            let rows = scenario::cmd_characteristics(&s, &out)?;
            println!("wrote {} rows to {}", rows.len(), out.join("branches.csv").display());
        }
        Command::Validate { candidate, t } => {
            let which = Candidate::from_number(candidate)?;
            let s = scenario()?;
            let t = t.unwrap_or(s.model.t0() + s.config.time.span);
            let v = scenario::cmd_validate(&s, which, t, &out)?;
            println!(
                "candidate {} at t={}: residual {} min_eig {} purity {} idempotency {} S_L {}",
                which.number(),
                t,
                fmt_real(v.residual.total),
                fmt_real(v.min_eig),
                fmt_real(v.purity),
                fmt_real(v.idempotency),
                fmt_real(v.linear_entropy)
            );
            if !v.holds() {
                return Err(Failure::Check("verdict"));
            }
            println!("verdict holds");
        }
        Command::IdentityCheck { dim, trials, seed } => {
            let r = scenario::cmd_identity_check(dim, trials, seed)?;
            println!("dim {dim} trials {} max relative residual {}", r.trials, fmt_real(r.max_relative));
            if !r.passed() {
                return Err(Failure::Check("identity"));
            }
        }
        Command::Diagnose { snapshot } => {
            let row = scenario::cmd_diagnose(&snapshot)?;
            let n = row.populations.len();
            print!("{}", scenario::diagnostics_csv(n, &[row])?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            eprintln!("ERROR 3 usage");
            return ExitCode::from(3);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            let code = e.exit_code();
            eprintln!("error: {e}");
            eprintln!("ERROR {code} {}", e.guard_name());
            ExitCode::from(code as u8)
        }
        Err(Failure::Check(what)) => {
            eprintln!("ERROR 2 {what}");
            ExitCode::from(2)
        }
    }
}
