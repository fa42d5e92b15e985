use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use atomic_mimo::harness::{self, ExperimentKind, OutputFormat};
use atomic_mimo::Error;

#[derive(Parser)]
#[command(
    name = "atomic-mimo",
    version,
    about = "Atomic-receiver MIMO capacity and IQ-aware precoding experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its results.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Results file; defaults to the config's output.path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<OutputFormat>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        jobs: Option<usize>,
        /// `key=value` assignment to a config field, e.g. `dims.nt=4`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List the available experiments.
    ListExperiments,
}

const RESERVED: [&str; 8] = [
    "--config",
    "--out",
    "--format",
    "--seed",
    "--jobs",
    "--override",
    "--help",
    "--version",
];

/// Rewrites `--a.b value` and `--a.b=value` into `--override a.b=value`.
fn rewrite_field_flags(args: Vec<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(body) = arg.strip_prefix("--") else {
            out.push(arg);
            continue;
        };
        let (key, inline) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (body.to_string(), None),
        };
        if !key.contains('.') || RESERVED.contains(&format!("--{key}").as_str()) {
            out.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => match it.next() {
                Some(v) => v,
                None => {
                    out.push(arg);
                    continue;
                }
            },
        };
        out.push("--override".into());
        out.push(format!("{key}={value}"));
    }
    out
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config { .. } => 2,
        Error::Io { .. } => 4,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::ListExperiments => {
            for kind in ExperimentKind::ALL {
                println!(
                    "{:<12} sweep {:<15} {}",
                    kind.name(),
                    kind.axis().name(),
                    kind.description()
                );
            }
            Ok(())
        }
        Command::Validate { config, overrides } => {
            let cfg = harness::load_config(&config, &overrides)?;
            println!(
                "{}: ok ({}, {} trials, {} sweep points)",
                config.display(),
                cfg.experiment,
                cfg.trials,
                cfg.sweep.grid.len()
            );
            Ok(())
        }
        Command::Run {
            config,
            out,
            format,
            seed,
            jobs,
            mut overrides,
        } => {
            if let Some(s) = seed {
                overrides.push(format!("seed={s}"));
            }
            let cfg = harness::load_config(&config, &overrides)?;
            let path = out
                .or_else(|| cfg.output.path.clone())
                .ok_or_else(|| Error::Config {
                    path: "output.path".into(),
                    message: "no output path; set output.path or pass --out".into(),
                })?;
            let format = format.unwrap_or(cfg.output.format);
            let result = harness::run_experiment(&cfg, jobs)?;
            let written = harness::write_outputs(&result, cfg.experiment, format, &path)?;
            eprintln!(
                "{}: {} records -> {} (summary {})",
                cfg.experiment,
                result.records.len(),
                written.results.display(),
                written.summary.display()
            );
            if let Some(t) = written.traces {
                eprintln!("traces -> {}", t.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let args = rewrite_field_flags(std::env::args().collect());
    let cli = Cli::parse_from(args);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn field_flags_become_overrides() {
        let got = rewrite_field_flags(strings(&[
            "bin",
            "run",
            "--config",
            "c.json",
            "--dims.nt",
            "4",
            "--hybrid.tol=1e-8",
            "--jobs",
            "2",
        ]));
        assert_eq!(
            got,
            strings(&[
                "bin",
                "run",
                "--config",
                "c.json",
                "--override",
                "dims.nt=4",
                "--override",
                "hybrid.tol=1e-8",
                "--jobs",
                "2"
            ])
        );
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code(&Error::Config {
                path: "x".into(),
                message: "y".into()
            }),
            2
        );
        assert_eq!(exit_code(&Error::DegenerateChannel), 3);
        let nested = Error::Trial {
            context: "t".into(),
            source: Box::new(Error::SvdFailed),
        };
        assert_eq!(exit_code(&nested), 3);
    }
}
