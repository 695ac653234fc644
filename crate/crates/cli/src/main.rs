use clap::{Parser, Subcommand};
use cslab_cli::config::RawConfig;
use cslab_cli::error::CliError;
use cslab_cli::report::Check;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cslab", version, about = "Renormalized Chern-Simons and W-volume runs on hyperbolic collars")]
struct Cli {
    /// Run a named property suite instead of a scenario (`invariants`).
    #[arg(long)]
    suite: Option<String>,
    /// Seed for the property suite.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a key = value config file.
    Run {
        config: PathBuf,
        /// Override a config entry, `key=value`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Directory the report paths are resolved against.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!("{:<28} {:>12.3e}  tol {:>9.1e}  {}", c.name, c.value, c.tolerance, if c.passed { "ok" } else { "FAIL" });
    }
}

fn real_main(cli: Cli) -> Result<(), CliError> {
    cslab_cli::init_threads()?;
    match (cli.suite.as_deref(), cli.command) {
        (Some("invariants"), None) => {
            let checks = cslab_cli::suite::run_suite(cli.seed, 2000, 64)?;
            print_checks(&checks);
            match checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect::<Vec<_>>() {
                failed if failed.is_empty() => Ok(()),
                failed => Err(CliError::Invariant(failed.join(", "))),
            }
        }
        (Some(other), None) => Err(CliError::Config(format!("unknown suite `{other}`; available: invariants"))),
        (None, Some(Command::Run { config, set, out_dir })) => {
            let text = std::fs::read_to_string(&config).map_err(|e| CliError::Config(format!("cannot read {}: {e}", config.display())))?;
            let mut raw = RawConfig::parse(&text)?;
            for pair in &set {
                raw.set(pair)?;
            }
            let report = cslab_cli::run::run_and_write(&raw, &out_dir)?;
            print_checks(&report.checks);
            match report.failures().iter().map(|c| c.name.as_str()).collect::<Vec<_>>() {
                failed if failed.is_empty() => Ok(()),
                failed => Err(CliError::Invariant(failed.join(", "))),
            }
        }
        (Some(_), Some(_)) => Err(CliError::Config("--suite and run are mutually exclusive".into())),
        (None, None) => Err(CliError::Config("nothing to do; use `run <config>` or `--suite invariants`".into())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cslab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
