//! Output plumbing: CSV/JSON emission and the consistency-failure error.
//!
//! Exit-code contract: 0 success, 2 consistency failure (routes that
//! must agree did not, or the verification suite deviated from its
//! expected pattern), 3 configuration error. `main` maps an
//! [`Inconsistent`] anywhere in the error chain to exit code 2 and
//! everything else to 3.

use anyhow::Result;
use serde::Serialize;
use std::fmt;
use std::io::Write;
use std::path::Path;

/// Version stamp carried in every emitted row and record.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A cross-route disagreement or failed verification: exit code 2.
#[derive(Debug)]
pub struct Inconsistent(pub String);

impl fmt::Display for Inconsistent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "consistency failure: {}", self.0)
    }
}

impl std::error::Error for Inconsistent {}

/// CSV writer to `--out` or stdout.
pub fn csv_writer(out: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

/// Single-line JSON record to stdout.
pub fn emit_json<T: Serialize>(record: &T) -> Result<()> {
    let mut line = serde_json::to_string(record)?;
    line.push('\n');
    std::io::stdout().write_all(line.as_bytes())?;
    Ok(())
}
