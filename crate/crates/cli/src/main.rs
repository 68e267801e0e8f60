use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tcm_cli::commands::{cmd_fit, cmd_run, cmd_sweep, execute_validate};
use tcm_cli::{CliError, CliResult};
use tcm_core::diagnostics::FieldId;
use tcm_core::inequality_lab::LabConfig;

#[derive(Parser, Debug)]
#[command(name = "tcm", version, about = "Tropical climate model experiments")]
struct Cli {
    /// Run or sweep configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config and TCM_OUT_DIR.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps and the inequality lab.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one configuration and write its trajectory.
    Run,
    /// Run the Cartesian product of a sweep file.
    Sweep,
    /// Probe the functional inequalities on random fields.
    Validate {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, value_delimiter = ',', default_value = "64,128")]
        resolutions: Vec<usize>,
        #[arg(long, hide = true, default_value_t = 0.0)]
        perturb_exponent: f64,
    },
    /// Fit a decay exponent to one column of a trajectory CSV.
    Fit {
        trajectory: PathBuf,
        #[arg(long)]
        field: String,
        #[arg(long)]
        gamma: f64,
        /// Fit window `t0,t1`; defaults to the middle half of the record.
        #[arg(long, value_delimiter = ',')]
        window: Option<Vec<f64>>,
        /// Compare against the damped rate table.
        #[arg(long)]
        damped: bool,
    },
}

fn need_config(cli: &Cli) -> CliResult<&PathBuf> {
    cli.config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))
}

fn dispatch(cli: &Cli) -> CliResult<i32> {
    if let Some(n) = cli.threads {
        // first build wins; a second call only fails if the pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Run => {
            let art = cmd_run(need_config(cli)?, cli.out.as_deref(), cli.seed, cli.quiet)?;
            if !cli.quiet {
                println!("{}", art.out_dir.display());
            }
            Ok(0)
        }
        Command::Sweep => {
            let out = cmd_sweep(need_config(cli)?, cli.out.as_deref(), cli.seed, cli.threads, cli.quiet)?;
            if !cli.quiet {
                println!("{}", out.aggregate.display());
            }
            Ok(out.exit_code())
        }
        Command::Validate {
            trials,
            resolutions,
            perturb_exponent,
        } => {
            let cfg = LabConfig {
                trials: *trials,
                resolutions: resolutions.clone(),
                seed: cli.seed.unwrap_or(0),
                perturb_exponent: *perturb_exponent,
                ..LabConfig::default()
            };
            execute_validate(cfg, cli.out.as_deref(), cli.quiet)?;
            Ok(0)
        }
        Command::Fit {
            trajectory,
            field,
            gamma,
            window,
            damped,
        } => {
            let field: FieldId = field.parse()?;
            let window = match window.as_deref() {
                None => None,
                Some(&[t0, t1]) => Some((t0, t1)),
                Some(w) => {
                    return Err(CliError::Config(format!(
                        "--window takes two times t0,t1, got {} values",
                        w.len()
                    )))
                }
            };
            let fit = cmd_fit(trajectory, field, *gamma, window, *damped)?;
            if !cli.quiet {
                println!(
                    "{} gamma={} exponent={:.6} theory={:.6} difference={:+.6} r2={:.6}",
                    fit.field,
                    fit.gamma,
                    fit.exponent,
                    fit.theory_exponent,
                    fit.difference(),
                    fit.r_squared
                );
            }
            println!("{}", serde_json::to_string(&fit).map_err(CliError::from)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("tcm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
