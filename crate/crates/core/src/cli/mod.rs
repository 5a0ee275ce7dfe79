//! The `condclt` command line: one experiment per invocation.
//!
//! Exit codes: 0 when every gate passes, 1 on a gate failure, 2 on a
//! configuration error (the offending key is named), 3 on a numeric or IO
//! error.

mod config;
mod output;
mod run;

pub use config::{
    canonical_key, parse_config, parse_config_text, ConfigError, ExperimentConfig, ExperimentKind, OutputFormat, KEYS,
    THREADS_ENV,
};
pub use output::{emit_report, parse_report, write_table, TABLE_HEADER};
pub use run::{execute, run, RunError};

use std::ffi::OsString;

use clap::{Arg, ArgAction, Command};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_GATE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub fn command() -> Command {
    let mut cmd = Command::new("condclt")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Checks conditional Gaussian limits of occupancy, degree and spacing counts")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for kind in ExperimentKind::ALL {
        let mut sub = Command::new(kind.name()).about(kind.about()).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("File of key=value lines; flags override it"),
        );
        for spec in KEYS {
            if let Some(default) = (spec.applies)(kind) {
                let help = match default {
                    Some(d) => format!("{} [default: {d}]", spec.help),
                    None => spec.help.to_string(),
                };
                let mut arg = Arg::new(spec.key).long(spec.key).value_name("VALUE").action(ArgAction::Set).help(help);
                if let Some(alias) = spec.alias {
                    arg = arg.visible_alias(alias);
                }
                sub = sub.arg(arg);
            }
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

/// Parses arguments, runs the experiment and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_CONFIG,
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let kind = ExperimentKind::ALL.into_iter().find(|k| k.name() == name).expect("registered subcommand");
    let file_values = match sub.get_one::<String>("config") {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match parse_config_text(&text) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return EXIT_CONFIG;
                }
            },
            Err(e) => {
                eprintln!("config error: `config`: cannot read {path}: {e}");
                return EXIT_CONFIG;
            }
        },
        None => Vec::new(),
    };
    let flag_values: Vec<(String, String)> = KEYS
        .iter()
        .filter(|s| (s.applies)(kind).is_some())
        .filter_map(|s| sub.get_one::<String>(s.key).map(|v| (s.key.to_string(), v.clone())))
        .collect();
    let cfg = match parse_config(kind, &file_values, &flag_values, std::env::var(THREADS_ENV).ok()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run(&cfg) {
        Ok(report) => {
            let verdict = if report.pass { "PASS" } else { "FAIL" };
            eprintln!(
                "{} {verdict}: {} entries, max |z| = {:.3}, {:.2}s",
                report.experiment,
                report.entries.len(),
                report.max_abs_z(),
                report.wall_time_s
            );
            if report.pass {
                EXIT_PASS
            } else {
                EXIT_GATE
            }
        }
        Err(RunError::Config(e)) => {
            eprintln!("config error: {e}");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_NUMERIC
        }
    }
}
