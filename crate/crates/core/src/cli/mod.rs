//! Command-line front end.
//!
//! `tworv <subcommand> [--params FILE] [--out FILE] [--format json|csv] [--seed N] [key=value …]`
//!
//! Every subcommand reads one flat record: the top-level keys of the `--params`
//! JSON file, overwritten by subcommand flags and `key=value` tokens in the
//! order given.

mod execute;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use execute::execute;
pub use output::{load_params, render, write_output};

/// Seed used when `--seed` is omitted.
pub const DEFAULT_SEED: u64 = 42;

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SubcommandKind {
    Pdf,
    Moments,
    Fit,
    Sample,
    Map,
    Compound,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandRequest {
    pub subcommand: SubcommandKind,
    pub params_path: Option<PathBuf>,
    /// Later entries win.
    pub overrides: Vec<(String, String)>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub seed: Option<u64>,
}

impl CommandRequest {
    pub fn new(subcommand: SubcommandKind) -> Self {
        CommandRequest {
            subcommand,
            params_path: None,
            overrides: Vec::new(),
            output_path: None,
            format: Format::Json,
            seed: None,
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.overrides.push((key.to_string(), value.to_string()));
        self
    }
}

/// Outcome of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub exit_code: i32,
    pub payload: serde_json::Value,
    /// Tabular view used by `--format csv`.
    pub table: Option<Table>,
    pub diagnostics: Vec<String>,
}

impl RunReport {
    pub fn failure(exit_code: i32, message: impl Into<String>) -> Self {
        RunReport {
            exit_code,
            payload: serde_json::Value::Null,
            table: None,
            diagnostics: vec![message.into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// A failure that ends a command with a specific exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub exit_code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            exit_code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<crate::error::Error> for CliError {
    fn from(e: crate::error::Error) -> Self {
        use crate::error::Error;
        let exit_code = match e {
            Error::Parameter { .. } | Error::Argument(_) => EXIT_USAGE,
            Error::Infeasible(_) => EXIT_INFEASIBLE,
            _ => EXIT_NUMERICAL,
        };
        CliError {
            exit_code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tworv", version, about = "Two-component random variation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON file whose top-level keys supply parameters.
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,
    /// Write the result here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    seed: Option<u64>,
    /// `key=value` overrides.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Density of an RMM member (`z`) or of the product model (`w`).
    Pdf {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        w: Option<String>,
    },
    /// Normalizer, mode density and moments.
    Moments {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        preset: Option<String>,
    },
    /// Moment-matching fit of the product model, or the mode/mean fit.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        mean: Option<f64>,
        #[arg(long)]
        var: Option<f64>,
    },
    /// Draw from the product model; CSV columns `index,w`.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Map a classical distribution into the approximation family.
    Map {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        family: Option<String>,
    },
    /// Simulate a geometric random sum of exponentials.
    Compound {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Verify every mapping against its reference density.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

fn split_override(token: &str) -> Result<(String, String), CliError> {
    match token.split_once('=') {
        Some((k, v)) if !k.is_empty() => Ok((k.to_string(), v.to_string())),
        _ => Err(CliError::usage(format!(
            "expected key=value, got `{token}`"
        ))),
    }
}

/// Parses an argument vector (program name first).
pub fn parse_request<I, T>(args: I) -> Result<CommandRequest, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| {
        let exit_code = if e.use_stderr() { EXIT_USAGE } else { EXIT_SUCCESS };
        CliError {
            exit_code,
            message: e.to_string(),
        }
    })?;

    let mut flags: Vec<(&str, Option<String>)> = Vec::new();
    let mut positional_family = false;
    let (kind, common) = match cli.command {
        Command::Pdf { common, preset, z, w } => {
            flags.extend([("preset", preset), ("z", z), ("w", w)]);
            (SubcommandKind::Pdf, common)
        }
        Command::Moments { common, preset } => {
            flags.push(("preset", preset));
            (SubcommandKind::Moments, common)
        }
        Command::Fit { common, mean, var } => {
            flags.extend([
                ("mean", mean.map(|v| v.to_string())),
                ("var", var.map(|v| v.to_string())),
            ]);
            (SubcommandKind::Fit, common)
        }
        Command::Sample { common, n } => {
            flags.push(("n", n.map(|v| v.to_string())));
            (SubcommandKind::Sample, common)
        }
        Command::Map { common, family } => {
            positional_family = true;
            flags.push(("family", family));
            (SubcommandKind::Map, common)
        }
        Command::Compound { common, p, rate, n } => {
            flags.extend([
                ("p", p.map(|v| v.to_string())),
                ("rate", rate.map(|v| v.to_string())),
                ("n", n.map(|v| v.to_string())),
            ]);
            (SubcommandKind::Compound, common)
        }
        Command::Verify { common } => (SubcommandKind::Verify, common),
    };

    let mut overrides: Vec<(String, String)> = flags
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect();
    for (i, token) in common.overrides.iter().enumerate() {
        if positional_family && i == 0 && !token.contains('=') {
            overrides.push(("family".into(), token.clone()));
        } else {
            overrides.push(split_override(token)?);
        }
    }

    Ok(CommandRequest {
        subcommand: kind,
        params_path: common.params,
        overrides,
        output_path: common.out,
        format: common.format,
        seed: common.seed,
    })
}

/// Parses, executes and writes; returns the process exit code. Diagnostics go
/// to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let request = match parse_request(args) {
        Ok(r) => r,
        Err(e) => {
            if e.exit_code == EXIT_SUCCESS {
                print!("{}", e.message);
            } else {
                eprint!("{}", e.message);
                if !e.message.ends_with('\n') {
                    eprintln!();
                }
            }
            return e.exit_code;
        }
    };
    let report = execute(&request);
    for line in &report.diagnostics {
        eprintln!("{line}");
    }
    if !report.payload.is_null() {
        if let Err(e) = write_output(&report, request.output_path.as_deref(), request.format) {
            eprintln!("{e}");
            return e.exit_code;
        }
    }
    report.exit_code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdf_request() {
        let r = parse_request(["tworv", "pdf", "--preset", "exponential", "--z", "1"]).unwrap();
        assert_eq!(r.subcommand, SubcommandKind::Pdf);
        assert_eq!(
            r.overrides,
            vec![("preset".into(), "exponential".into()), ("z".into(), "1".into())]
        );
    }

    #[test]
    fn fit_request() {
        let r = parse_request(["tworv", "fit", "--mean", "1", "--var", "1"]).unwrap();
        assert_eq!(r.subcommand, SubcommandKind::Fit);
        assert_eq!(r.overrides.len(), 2);
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        let e = parse_request(["tworv", "frobnicate"]).unwrap_err();
        assert_eq!(e.exit_code, EXIT_USAGE);
        assert!(e.message.contains("frobnicate"));
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let e = parse_request(["tworv", "pdf", "--bogus"]).unwrap_err();
        assert_eq!(e.exit_code, EXIT_USAGE);
        assert!(e.message.contains("--bogus"));
    }

    #[test]
    fn overrides_and_common_flags() {
        let r = parse_request([
            "tworv", "sample", "--seed", "7", "--format", "csv", "lambda=1.5", "M1=-0", "--out", "x.csv",
        ])
        .unwrap();
        assert_eq!(r.seed, Some(7));
        assert_eq!(r.format, Format::Csv);
        assert_eq!(r.output_path, Some(PathBuf::from("x.csv")));
        assert_eq!(r.overrides[0], ("lambda".into(), "1.5".into()));
        let e = parse_request(["tworv", "sample", "lambda"]).unwrap_err();
        assert_eq!(e.exit_code, EXIT_USAGE);
        assert!(e.message.contains("lambda"));
    }

    #[test]
    fn map_takes_family_positionally() {
        let r = parse_request(["tworv", "map", "weibull", "b=1", "c=2"]).unwrap();
        assert_eq!(r.overrides[0], ("family".into(), "weibull".into()));
        assert_eq!(r.overrides.len(), 3);
    }
}
