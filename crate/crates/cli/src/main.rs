use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hessdamp::analysis::{check_named, DEFAULT_SAMPLES, PROPERTY_NAMES};
use hessdamp::functions::from_name;
use hessdamp::record::ReportRecord;
use hessdamp_cli::{certify, parse_config, run_all, write_atomically, ExperimentConfig};

const EXIT_RUN_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "hessdamp",
    version,
    about = "Run Hessian-corrected momentum experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment of a config file and write CSV traces plus a summary.
    Run {
        config: PathBuf,
        /// Refuse to run experiments whose parameters are not certified.
        #[arg(long)]
        strict: bool,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Seed for the property checks listed in the config.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the certificate verdict of each experiment without running it.
    Validate { config: PathBuf },
    /// Run sampling checks of structural properties on a named problem.
    Check {
        problem: String,
        /// Comma-separated list of property names.
        #[arg(long, value_delimiter = ',', required = true)]
        properties: Vec<String>,
        /// Comma-separated constructor arguments for the problem.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        args: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load(path: &PathBuf) -> Result<Vec<ExperimentConfig>, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_CONFIG)
    })?;
    parse_config(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_CONFIG)
    })
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            strict,
            out_dir,
            seed,
        } => {
            let configs = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let summaries = run_all(&configs, &out_dir, strict, seed);
            let mut text = String::new();
            for s in &summaries {
                text.push_str(&s.to_line());
                text.push('\n');
                for line in s.report_lines() {
                    text.push_str(&line);
                    text.push('\n');
                }
            }
            print!("{text}");
            if let Err(e) = write_atomically(&out_dir.join("summary.txt"), &text) {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_RUN_FAILED);
            }
            if summaries.iter().all(|s| s.succeeded()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_RUN_FAILED)
            }
        }
        Command::Validate { config } => {
            let configs = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            for c in &configs {
                let cert = certify(c);
                let line = ReportRecord::new("certificate")
                    .text("name", &c.name)
                    .text("method", c.method.as_str())
                    .flag("valid", cert.valid)
                    .text(
                        "violations",
                        if cert.violations.is_empty() {
                            "none".to_string()
                        } else {
                            cert.violations.join(",")
                        },
                    )
                    .float("rate", cert.rate);
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Command::Check {
            problem,
            properties,
            args,
            samples,
            seed,
        } => {
            let p = match from_name(&problem, &args) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            if let Some(bad) = properties
                .iter()
                .find(|n| !PROPERTY_NAMES.contains(&n.as_str()))
            {
                eprintln!(
                    "error: unknown property '{bad}' (known: {})",
                    PROPERTY_NAMES.join(", ")
                );
                return ExitCode::from(EXIT_CONFIG);
            }
            let mut ok = true;
            for name in &properties {
                match check_named(&p, name, samples, seed) {
                    Ok(record) => {
                        if matches!(
                            record.get("passed"),
                            Some(hessdamp::record::Field::Bool(false))
                        ) {
                            ok = false;
                        }
                        println!("{record}");
                    }
                    Err(e) => {
                        ok = false;
                        eprintln!("error: {name}: {e}");
                    }
                }
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_RUN_FAILED)
            }
        }
    }
}
