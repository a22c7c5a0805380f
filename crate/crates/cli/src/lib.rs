//! File formats and commands behind the `sgspace` binary.

pub mod commands;
pub mod formats;
pub mod manifest;

use std::fmt::Display;

use formats::FormatError;

/// Short category of an error for the machine-readable error line.
pub fn error_kind(err: &anyhow::Error) -> &'static str {
    use subgraph_space::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<FormatError>() {
            return match e {
                FormatError::Parse { .. } => "parse",
                FormatError::Io { .. } => "io",
                FormatError::Invalid(_) => "invalid-input",
            };
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::UnsupportedSize { .. } | E::SizeLimit(_) => "size-limit",
                E::Numerical(_) => "numerical",
                E::Infeasible(_) => "infeasible",
                _ => "invalid-input",
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return "parse";
        }
        if let Some(e) = cause.downcast_ref::<csv::Error>() {
            return if e.is_io_error() { "io" } else { "parse" };
        }
    }
    "error"
}

/// `error: <kind>: <message>` on one line.
pub fn error_line(err: &anyhow::Error) -> String {
    let message = err
        .chain()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(": ");
    format!("error: {}: {}", error_kind(err), one_line(message))
}

fn one_line(s: impl Display) -> String {
    s.to_string().replace(['\n', '\r'], " ")
}
