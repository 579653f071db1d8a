//! `sedlab`: batch front end for the corrector experiments.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, Command};
use serde_json::json;

use sedlab::config::{is_known_key, parse_config, Settings, EXTRA_KEYS, RUN_KEYS};
use sedlab::Error;

pub const THREADS_ENV: &str = "SEDLAB_THREADS";

const SUBCOMMANDS: &[(&str, &str)] = &[
    ("sample", "Sample a point set and write it as CSV"),
    ("solve", "Single corrector solve with identity report"),
    ("green", "Obstacle Green's function and its shell decay"),
    ("linearized", "Spectral runs of the linearized models"),
    ("ensemble", "Monte Carlo ensemble at one T"),
    ("sweep", "Ensembles over a list of T with a scaling fit"),
    ("oracle", "Radial or dense reference solves"),
];

fn keys_help() -> String {
    let mut s = String::from("Configuration keys (file entries `key = value`, or `--key value`):\n");
    for (k, h) in RUN_KEYS.iter().chain(EXTRA_KEYS) {
        s.push_str(&format!("  {k:<18} {h}\n"));
    }
    s.push_str(&format!("\nWorker threads default to ${THREADS_ENV} when set."));
    s
}

fn cli() -> Command {
    let mut cmd = Command::new("sedlab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Screened corrector experiments on random hardcore inclusions")
        .subcommand_required(true)
        .after_long_help(keys_help());
    for (name, about) in SUBCOMMANDS {
        cmd = cmd.subcommand(
            Command::new(*name).about(*about).after_long_help(keys_help()).arg(
                Arg::new("args")
                    .help("--config FILE, --out DIR and --key value overrides")
                    .num_args(0..)
                    .trailing_var_arg(true)
                    .allow_hyphen_values(true)
                    .action(ArgAction::Append),
            ),
        );
    }
    cmd
}

/// Parsed invocation.
pub struct Invocation {
    pub command: String,
    pub settings: Settings,
    pub out: PathBuf,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_invocation(command: &str, args: &[String]) -> Result<Invocation, Error> {
    let mut config_file = None;
    let mut out = PathBuf::from("out");
    let mut overrides = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(usage(format!("unexpected argument '{arg}'")));
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| usage(format!("--{flag} needs a value")))?;
                (flag.to_string(), v.clone())
            }
        };
        match key.as_str() {
            "config" => config_file = Some(PathBuf::from(value)),
            "out" => out = PathBuf::from(value),
            k if is_known_key(k) => overrides.push((key, value)),
            k => return Err(usage(format!("unknown key '{k}'"))),
        }
    }
    let mut settings = Settings::default();
    if let Some(path) = config_file {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let pairs = parse_config(&text)?;
        settings.apply_all(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    }
    settings.apply_all(overrides.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    if settings.run.threads.is_none() {
        if let Ok(v) = std::env::var(THREADS_ENV) {
            let t: usize = v.trim().parse().map_err(|_| usage(format!("{THREADS_ENV} must be a positive integer")))?;
            settings.run.threads = Some(t);
        }
    }
    Ok(Invocation { command: command.to_string(), settings, out })
}

fn error_record(stage: &str, err: &Error) {
    let mut chain = Vec::new();
    let mut source = std::error::Error::source(err);
    while let Some(s) = source {
        chain.push(s.to_string());
        source = s.source();
    }
    let seed = match err {
        Error::Realization { seed, .. } => Some(*seed),
        _ => None,
    };
    let record = json!({
        "error": {
            "stage": stage,
            "kind": err.kind(),
            "message": err.to_string(),
            "causes": chain,
            "seed": seed,
        }
    });
    eprintln!("{record}");
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            error_record("usage", &usage(e.to_string().trim().to_string()));
            return ExitCode::from(2);
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let args: Vec<String> = sub.get_many::<String>("args").map(|v| v.cloned().collect()).unwrap_or_default();
    let plan = parse_invocation(name, &args).and_then(commands::prepare);
    let plan = match plan {
        Ok(p) => p,
        Err(e) => {
            error_record("usage", &e);
            return ExitCode::from(2);
        }
    };
    match commands::execute(plan) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            error_record("runtime", &e);
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn both_flag_forms_and_output_dir() {
        let inv = parse_invocation("solve", &args(&["--T=16", "--n", "24", "--out", "runs/a"])).unwrap();
        assert_eq!(inv.settings.run.t, 16.0);
        assert_eq!(inv.settings.run.n, Some(24));
        assert_eq!(inv.out, PathBuf::from("runs/a"));
    }

    #[test]
    fn rejects_unknown_and_positional_arguments() {
        assert!(parse_invocation("solve", &args(&["--nope", "1"])).is_err());
        assert!(parse_invocation("solve", &args(&["stray"])).is_err());
        assert!(parse_invocation("solve", &args(&["--T"])).is_err());
    }

    #[test]
    fn extra_keys_are_kept() {
        let inv = parse_invocation("sweep", &args(&["--t_list", "16,64", "--fit", "power"])).unwrap();
        assert_eq!(inv.settings.extra.get("t_list").map(String::as_str), Some("16,64"));
    }
}
